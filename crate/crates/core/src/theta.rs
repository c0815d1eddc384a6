//! Representation numbers r_Λ(T) and coefficient tables of degree-d theta series.
//!
//! `r_Λ(T)` counts ordered tuples `(x₁,…,x_d) ∈ Λ^d` whose Gram matrix is `T`.
//! The engine fixes each tuple slot to the norm group `T_ii`, drops zero
//! slots (they force the zero vector), and runs a backtracking search with
//! candidate sets stored as bitsets. Slots are processed in descending norm.
//! Table searches run every slot but the last over one representative of each
//! `±x` pair and recover the mirror images by negating that slot's row of `T`.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Limits;
use crate::enumeration;
use crate::error::{Error, Result};
use crate::gram::GramMatrix;
use crate::lattice::LatticeBasis;

/// Pair indexes are built only when `|A|·|B|` stays below this.
const PAIR_INDEX_LIMIT: usize = 1 << 23;
const DENSE_ACCUMULATOR_LIMIT: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq)]
struct Bits {
    words: Vec<u64>,
}

impl Bits {
    fn empty(len: usize) -> Self {
        Bits {
            words: vec![0; len.div_ceil(64)],
        }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    fn and_into(&self, other: &Bits, out: &mut Bits) -> bool {
        let mut any = 0;
        for ((o, a), b) in out.words.iter_mut().zip(&self.words).zip(&other.words) {
            *o = a & b;
            any |= *o;
        }
        any != 0
    }

    fn and_count(&self, other: &Bits) -> u64 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + t)
            })
        })
    }
}

#[inline(always)]
fn dot(a: &[i16], b: &[i16]) -> i32 {
    match (<&[i16; 16]>::try_from(a), <&[i16; 16]>::try_from(b)) {
        (Ok(a), Ok(b)) => dot_fixed(a, b),
        _ => match (<&[i16; 8]>::try_from(a), <&[i16; 8]>::try_from(b)) {
            (Ok(a), Ok(b)) => dot_fixed(a, b),
            _ => a.iter().zip(b).fold(0i32, |s, (&x, &y)| s.wrapping_add((x as i32).wrapping_mul(y as i32))),
        },
    }
}

#[inline(always)]
fn dot_fixed<const N: usize>(a: &[i16; N], b: &[i16; N]) -> i32 {
    // entries are small half-integers, so the sum cannot overflow
    a.iter().zip(b.iter()).map(|(&x, &y)| x as i32 * y as i32).fold(0, i32::wrapping_add)
}

/// Vectors of one norm, flattened, in canonical order.
struct Group {
    dim: usize,
    len: usize,
    data: Vec<i16>,
    /// Indices of the representatives with first nonzero coordinate positive.
    reps: Vec<usize>,
}

impl Group {
    fn new(dim: usize, data: Vec<i16>) -> Self {
        let len = if dim == 0 { 0 } else { data.len() / dim };
        let reps = (0..len)
            .filter(|&i| {
                data[i * dim..(i + 1) * dim]
                    .iter()
                    .find(|&&h| h != 0)
                    .is_some_and(|&h| h > 0)
            })
            .collect();
        Group { dim, len, data, reps }
    }

    fn len(&self) -> usize {
        self.len
    }

    fn vector(&self, i: usize) -> &[i16] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Largest possible `|⟨x, v⟩|` over this group.
    fn ip_radius(&self, x: &[i16]) -> usize {
        let own = if self.len == 0 { 0 } else { dot(self.vector(0), self.vector(0)) };
        isqrt((dot(x, x) as u64 / 4) * (own as u64 / 4)) as usize
    }

    /// Partition of this group by inner product with `x`.
    fn partition(&self, x: &[i16]) -> Vec<(i64, Bits)> {
        let r = self.ip_radius(x);
        let mut buckets: Vec<Option<Bits>> = vec![None; 2 * r + 1];
        for i in 0..self.len() {
            let ip = dot(x, self.vector(i)) / 4;
            buckets[(ip + r as i32) as usize]
                .get_or_insert_with(|| Bits::empty(self.len))
                .set(i);
        }
        buckets
            .into_iter()
            .enumerate()
            .filter_map(|(o, b)| b.map(|b| (o as i64 - r as i64, b)))
            .collect()
    }

    /// Number of vectors of this group at each inner product with `x`.
    fn histogram(&self, x: &[i16]) -> Vec<(i64, u64)> {
        let r = self.ip_radius(x);
        let mut counts = vec![0u64; 2 * r + 1];
        for i in 0..self.len() {
            counts[(dot(x, self.vector(i)) / 4 + r as i32) as usize] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(o, c)| (o as i64 - r as i64, c))
            .collect()
    }

    fn matching(&self, x: &[i16], ip: i64) -> Bits {
        let mut b = Bits::empty(self.len());
        let target = (ip * 4) as i32;
        for i in 0..self.len() {
            if dot(x, self.vector(i)) == target {
                b.set(i);
            }
        }
        b
    }

    fn filter(&self, cands: &Bits, x: &[i16], ip: i64) -> Bits {
        let mut b = Bits::empty(self.len());
        let target = (ip * 4) as i32;
        for i in cands.ones() {
            if dot(x, self.vector(i)) == target {
                b.set(i);
            }
        }
        b
    }

    fn filter_count(&self, cands: &Bits, x: &[i16], ip: i64) -> u64 {
        let target = (ip * 4) as i32;
        cands.ones().filter(|&i| dot(x, self.vector(i)) == target).count() as u64
    }
}

/// For every vector of group A, the partition of group B by inner product.
struct PairIndex {
    parts: Vec<Vec<(i64, Bits)>>,
}

impl PairIndex {
    fn build(a: &Group, b: &Group) -> Self {
        PairIndex {
            parts: (0..a.len()).into_par_iter().map(|i| b.partition(a.vector(i))).collect(),
        }
    }

    fn get(&self, i: usize, ip: i64) -> Option<&Bits> {
        self.parts[i].iter().find(|(v, _)| *v == ip).map(|(_, b)| b)
    }
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Precomputed norm groups of one lattice plus caches for repeated queries.
pub struct ThetaEngine {
    label: String,
    even: bool,
    count_bound: u64,
    counts: BTreeMap<u64, u64>,
    groups: BTreeMap<u64, Group>,
    limits: Limits,
    index: Mutex<HashMap<(u64, u64), Option<Arc<PairIndex>>>>,
    memo: Mutex<HashMap<GramMatrix, u64>>,
    pair_counts: Mutex<HashMap<(u64, u64), Arc<HashMap<i64, u64>>>>,
}

/// Restriction of `t` to its nonzero slots, reordered by descending norm.
fn reduce(t: &GramMatrix) -> GramMatrix {
    let mut positions: Vec<usize> = (0..t.dim()).filter(|&i| t.get(i, i) != 0).collect();
    positions.sort_by_key(|&i| std::cmp::Reverse(t.get(i, i)));
    let p = positions.len();
    let mut entries = Vec::with_capacity(p * p);
    for &i in &positions {
        for &j in &positions {
            entries.push(t.get(i, j));
        }
    }
    GramMatrix::new(p, entries).expect("principal submatrix of a symmetric matrix")
}

impl ThetaEngine {
    /// Enumerates `lattice` up to `count_bound`, keeping the vectors of every
    /// norm in `materialize` for tuple searches.
    pub fn new(lattice: &LatticeBasis, materialize: &BTreeSet<u64>, count_bound: u64, limits: Limits) -> Result<Self> {
        let keep: BTreeSet<u64> = materialize.iter().copied().filter(|&n| n > 0).collect();
        let bound = count_bound.max(keep.last().copied().unwrap_or(0));
        let (counts, flat) = enumeration::collect_norms(lattice, bound, &keep, &limits)?;
        let dim = lattice.ambient_dim();
        let groups = flat.into_iter().map(|(n, data)| (n, Group::new(dim, data))).collect();
        Ok(ThetaEngine {
            label: lattice.label().to_string(),
            even: lattice.is_even(),
            count_bound: bound,
            counts,
            groups,
            limits,
            index: Mutex::new(HashMap::new()),
            memo: Mutex::new(HashMap::new()),
            pair_counts: Mutex::new(HashMap::new()),
        })
    }

    /// Engine ready for full coefficient tables up to `diag_bound`.
    pub fn for_table(lattice: &LatticeBasis, degree: usize, diag_bound: u64, limits: Limits) -> Result<Self> {
        let materialize: BTreeSet<u64> = if degree >= 2 { (1..=diag_bound).collect() } else { BTreeSet::new() };
        Self::new(lattice, &materialize, diag_bound, limits)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of lattice vectors of norm `norm` (must not exceed the count bound).
    pub fn count(&self, norm: u64) -> Result<u64> {
        if norm > self.count_bound {
            return Err(Error::Unsupported(format!(
                "norm {norm} exceeds the enumerated bound {}",
                self.count_bound
            )));
        }
        Ok(self.counts.get(&norm).copied().unwrap_or(0))
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    fn group(&self, norm: u64) -> Result<&Group> {
        self.groups
            .get(&norm)
            .ok_or_else(|| Error::Unsupported(format!("norm {norm} vectors were not materialized")))
    }

    fn pair_index(&self, a: u64, b: u64) -> Option<Arc<PairIndex>> {
        let mut cache = self.index.lock().unwrap();
        cache
            .entry((a, b))
            .or_insert_with(|| {
                let (ga, gb) = (self.groups.get(&a)?, self.groups.get(&b)?);
                (ga.len() * gb.len() <= PAIR_INDEX_LIMIT).then(|| Arc::new(PairIndex::build(ga, gb)))
            })
            .clone()
    }

    /// Ordered pairs `(u, v)` with `|u|² = a`, `|v|² = b`, counted by `⟨u, v⟩`.
    fn pair_counts(&self, a: u64, b: u64) -> Result<Arc<HashMap<i64, u64>>> {
        if let Some(hit) = self.pair_counts.lock().unwrap().get(&(a, b)) {
            return Ok(hit.clone());
        }
        let (ga, gb) = (self.group(a)?, self.group(b)?);
        let partial = ga
            .reps
            .par_iter()
            .fold(HashMap::new, |mut acc: HashMap<i64, u64>, &x| {
                for (ip, c) in gb.histogram(ga.vector(x)) {
                    *acc.entry(ip).or_default() += c;
                    *acc.entry(-ip).or_default() += c;
                }
                acc
            })
            .reduce(HashMap::new, |mut acc, other| {
                for (ip, c) in other {
                    *acc.entry(ip).or_default() += c;
                }
                acc
            });
        let counts = Arc::new(partial);
        self.pair_counts.lock().unwrap().insert((a, b), counts.clone());
        Ok(counts)
    }

    fn indexable(&self, a: u64, b: u64) -> bool {
        match (self.groups.get(&a), self.groups.get(&b)) {
            (Some(ga), Some(gb)) => ga.len() * gb.len() <= PAIR_INDEX_LIMIT,
            _ => false,
        }
    }

    fn refine_cost(&self, a: u64, b: u64) -> f64 {
        let len = self.groups.get(&b).map_or(0, Group::len) as f64;
        if self.indexable(a, b) {
            len / 64.0 + 1.0
        } else {
            len
        }
    }

    fn group_len(&self, norm: u64) -> f64 {
        self.groups.get(&norm).map_or(0, Group::len) as f64
    }

    fn check_work(&self, estimate: f64) -> Result<()> {
        if estimate > self.limits.work_cap as f64 {
            return Err(Error::CapExceeded {
                estimate: estimate.min(u64::MAX as f64) as u64,
                cap: self.limits.work_cap,
                unit: "search operations",
            });
        }
        Ok(())
    }

    /// Upper bound on the work of a constrained search over the given slot norms.
    fn search_estimate(&self, norms: &[u64]) -> f64 {
        let p = norms.len();
        let mut nodes = self.group_len(norms[0]);
        let mut cost = nodes * (1..p).map(|j| self.refine_cost(norms[0], norms[j])).sum::<f64>();
        for k in 1..p.saturating_sub(1) {
            nodes *= self.group_len(norms[k]);
            cost += nodes * (k + 1..p).map(|j| self.refine_cost(norms[k], norms[j])).sum::<f64>();
        }
        cost
    }

    /// Exact `r_Λ(T)`.
    pub fn representation_number(&self, t: &GramMatrix) -> Result<u64> {
        if !t.is_psd() {
            return Ok(0);
        }
        let reduced = reduce(t);
        let t = &reduced;
        let p = t.dim();
        if p == 0 {
            return Ok(1);
        }
        let norms: Vec<u64> = t.diag().into_iter().map(|n| n as u64).collect();
        for &n in &norms {
            if self.count(n)? == 0 {
                return Ok(0);
            }
        }
        if p == 1 {
            return self.count(norms[0]);
        }
        if let Some(&hit) = self.memo.lock().unwrap().get(t) {
            return Ok(hit);
        }
        if p == 2 && !self.indexable(norms[0], norms[1]) {
            self.check_work(self.group_len(norms[0]) * self.group_len(norms[1]) / 2.0)?;
            return Ok(self.pair_counts(norms[0], norms[1])?.get(&t.get(0, 1)).copied().unwrap_or(0));
        }
        self.check_work(self.search_estimate(&norms))?;
        let groups = norms.iter().map(|&n| self.group(n)).collect::<Result<Vec<_>>>()?;
        let indexes: Vec<Vec<Option<Arc<PairIndex>>>> = (0..p)
            .map(|k| (0..p).map(|j| if j > k { self.pair_index(norms[k], norms[j]) } else { None }).collect())
            .collect();
        let search = Search {
            t,
            groups: &groups,
            indexes: &indexes,
        };
        let flipped = t.negate_slot(0);
        let symmetric = flipped == *t;
        let total: u64 = groups[0]
            .reps
            .par_iter()
            .map(|&x0| {
                if symmetric {
                    2 * search.from_first(x0, t)
                } else {
                    search.from_first(x0, t) + search.from_first(x0, &flipped)
                }
            })
            .sum();
        self.memo.lock().unwrap().insert(t.clone(), total);
        Ok(total)
    }

    /// All realized Gram matrices of `degree`-tuples whose slot norms are ≤ `diag_bound`.
    pub fn coefficient_table(&self, degree: usize, diag_bound: u64) -> Result<CoefficientTable> {
        if degree == 0 {
            return Err(Error::InvalidDimension("degree must be ≥ 1".into()));
        }
        if diag_bound > self.count_bound {
            return Err(Error::Unsupported(format!(
                "diagonal bound {diag_bound} exceeds the enumerated bound {}",
                self.count_bound
            )));
        }
        let norms: Vec<u64> = self
            .counts
            .iter()
            .filter(|(&n, &c)| n <= diag_bound && c > 0)
            .map(|(&n, _)| n)
            .collect();
        // distinct multisets of nonzero slot norms, descending
        let mut multisets: BTreeSet<Vec<u64>> = BTreeSet::new();
        let patterns = diag_patterns(&norms, degree);
        for pattern in &patterns {
            let mut nz: Vec<u64> = pattern.iter().copied().filter(|&n| n > 0).collect();
            nz.sort_unstable_by(|a, b| b.cmp(a));
            if nz.len() >= 2 {
                multisets.insert(nz);
            }
        }
        let estimate: f64 = multisets.iter().map(|m| self.table_estimate(m)).sum();
        self.check_work(estimate)?;
        let mut slot_tables: HashMap<Vec<u64>, Vec<(GramMatrix, u64)>> = HashMap::new();
        for m in &multisets {
            slot_tables.insert(m.clone(), self.slot_table(m)?);
        }

        let mut entries: BTreeMap<GramMatrix, u64> = BTreeMap::new();
        for pattern in &patterns {
            let mut positions: Vec<usize> = (0..degree).filter(|&i| pattern[i] > 0).collect();
            positions.sort_by_key(|&i| std::cmp::Reverse(pattern[i]));
            match positions.len() {
                0 => {
                    entries.insert(GramMatrix::zero(degree), 1);
                }
                1 => {
                    let i = positions[0];
                    let mut diag = vec![0; degree];
                    diag[i] = pattern[i] as i64;
                    entries.insert(GramMatrix::diagonal(&diag), self.counts[&pattern[i]]);
                }
                _ => {
                    let key: Vec<u64> = positions.iter().map(|&i| pattern[i]).collect();
                    for (slot_t, c) in &slot_tables[&key] {
                        entries.insert(expand(slot_t, &positions, degree), *c);
                    }
                }
            }
        }
        Ok(CoefficientTable {
            lattice: self.label.clone(),
            degree,
            diag_bound,
            entries,
        })
    }

    fn table_estimate(&self, norms: &[u64]) -> f64 {
        let p = norms.len();
        let last = norms[p - 1];
        let mut nodes = self.group_len(norms[0]) / 2.0;
        let mut cost = nodes * self.refine_cost(norms[0], last);
        for k in 1..p - 1 {
            nodes *= self.group_len(norms[k]) / 2.0;
            cost += nodes * (k as f64 + self.refine_cost(norms[k], last));
        }
        cost
    }

    /// Table over slots with the given (descending, nonzero) norms.
    fn slot_table(&self, norms: &[u64]) -> Result<Vec<(GramMatrix, u64)>> {
        let p = norms.len();
        let groups = norms.iter().map(|&n| self.group(n)).collect::<Result<Vec<_>>>()?;
        let last = norms[p - 1];
        let indexes: Vec<Option<Arc<PairIndex>>> =
            (0..p - 1).map(|k| self.pair_index(norms[k], last)).collect();
        let layout = KeyLayout::new(norms);
        let table = TableSearch {
            groups: &groups,
            indexes: &indexes,
            layout: &layout,
        };
        let acc = groups[0]
            .reps
            .par_iter()
            .fold(|| layout.accumulator(), |mut acc, &x0| {
                table.from_first(x0, &mut acc);
                acc
            })
            .reduce(|| layout.accumulator(), Accumulator::merge);

        let mut out: BTreeMap<GramMatrix, u64> = BTreeMap::new();
        // every slot but the last ran over ± representatives only
        for (ips, c) in acc.entries(&layout) {
            let mut images = vec![layout.matrix(norms, &ips)];
            for slot in 0..p - 1 {
                let flipped: Vec<GramMatrix> = images.iter().map(|t| t.negate_slot(slot)).collect();
                images.extend(flipped);
            }
            for t in images {
                *out.entry(t).or_insert(0) += c;
            }
        }
        Ok(out.into_iter().collect())
    }

    pub fn is_even(&self) -> bool {
        self.even
    }
}

fn diag_patterns(norms: &[u64], degree: usize) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..degree {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<u64>| {
                norms.iter().map(move |&n| {
                    let mut p = prefix.clone();
                    p.push(n);
                    p
                })
            })
            .collect();
    }
    out
}

/// Places a slot-ordered matrix back at its original positions, zero elsewhere.
fn expand(slot_t: &GramMatrix, positions: &[usize], degree: usize) -> GramMatrix {
    let mut entries = vec![0; degree * degree];
    for (a, &i) in positions.iter().enumerate() {
        for (b, &j) in positions.iter().enumerate() {
            entries[i * degree + j] = slot_t.get(a, b);
        }
    }
    GramMatrix::new(degree, entries).expect("symmetric by construction")
}

struct Search<'a> {
    t: &'a GramMatrix,
    groups: &'a [&'a Group],
    indexes: &'a [Vec<Option<Arc<PairIndex>>>],
}

impl Search<'_> {
    fn refine(&self, k: usize, y: usize, j: usize, cands: &Bits, ip: i64) -> Bits {
        match &self.indexes[k][j] {
            Some(index) => match index.get(y, ip) {
                Some(part) => cands.and(part),
                None => Bits::empty(self.groups[j].len()),
            },
            None => self.groups[j].filter(cands, self.groups[k].vector(y), ip),
        }
    }

    fn from_first(&self, x0: usize, t: &GramMatrix) -> u64 {
        let p = self.t.dim();
        let mut cands = Vec::with_capacity(p);
        cands.push(Bits::empty(0));
        for j in 1..p {
            let c = match &self.indexes[0][j] {
                Some(index) => match index.get(x0, t.get(0, j)) {
                    Some(part) => part.clone(),
                    None => return 0,
                },
                None => self.groups[j].matching(self.groups[0].vector(x0), t.get(0, j)),
            };
            if c.is_empty() {
                return 0;
            }
            cands.push(c);
        }
        self.descend(1, &cands, t)
    }

    fn descend(&self, k: usize, cands: &[Bits], t: &GramMatrix) -> u64 {
        let p = t.dim();
        if k == p - 1 {
            return cands[k].count();
        }
        let mut total = 0;
        if k == p - 2 {
            let last = &cands[p - 1];
            let ip = t.get(k, p - 1);
            for y in cands[k].ones() {
                total += match &self.indexes[k][p - 1] {
                    Some(index) => index.get(y, ip).map_or(0, |part| last.and_count(part)),
                    None => self.groups[p - 1].filter_count(last, self.groups[k].vector(y), ip),
                };
            }
            return total;
        }
        let mut next: Vec<Bits> = cands.to_vec();
        'outer: for y in cands[k].ones() {
            for j in k + 1..p {
                let refined = self.refine(k, y, j, &cands[j], t.get(k, j));
                if refined.is_empty() {
                    continue 'outer;
                }
                next[j] = refined;
            }
            total += self.descend(k + 1, &next, t);
        }
        total
    }
}

/// Dense or sparse storage for off-diagonal inner-product vectors of one slot pattern.
struct KeyLayout {
    /// (i, j, radius) for every slot pair i < j, in row-major order.
    pairs: Vec<(usize, usize, i64)>,
    strides: Vec<usize>,
    dense_len: Option<usize>,
    /// `slot_of[i * p + j]`: position of pair (i, j) in `pairs`.
    slot_of: Vec<usize>,
    p: usize,
}

impl KeyLayout {
    fn new(norms: &[u64]) -> Self {
        let p = norms.len();
        let mut pairs = Vec::new();
        for i in 0..p {
            for j in i + 1..p {
                pairs.push((i, j, isqrt(norms[i] * norms[j]) as i64));
            }
        }
        let mut slot_of = vec![usize::MAX; p * p];
        for (k, &(i, j, _)) in pairs.iter().enumerate() {
            slot_of[i * p + j] = k;
        }
        let mut strides = Vec::with_capacity(pairs.len());
        let mut size: usize = 1;
        let mut fits = true;
        for &(_, _, r) in &pairs {
            strides.push(size);
            match size.checked_mul(2 * r as usize + 1) {
                Some(s) if s <= DENSE_ACCUMULATOR_LIMIT => size = s,
                _ => fits = false,
            }
        }
        KeyLayout {
            pairs,
            strides,
            dense_len: fits.then_some(size),
            slot_of,
            p,
        }
    }

    fn accumulator(&self) -> Accumulator {
        match self.dense_len {
            Some(len) => Accumulator::Dense(vec![0; len]),
            None => Accumulator::Sparse(HashMap::new()),
        }
    }

    fn offset(&self, ips: &[i64]) -> usize {
        ips.iter()
            .zip(&self.pairs)
            .zip(&self.strides)
            .map(|((&v, &(_, _, r)), &s)| (v + r) as usize * s)
            .sum()
    }

    fn decode(&self, mut offset: usize) -> Vec<i64> {
        let mut ips = vec![0; self.pairs.len()];
        for k in (0..self.pairs.len()).rev() {
            let r = self.pairs[k].2;
            ips[k] = (offset / self.strides[k]) as i64 - r;
            offset %= self.strides[k];
        }
        ips
    }

    fn pair_slot(&self, i: usize, j: usize) -> usize {
        self.slot_of[i * self.p + j]
    }

    fn matrix(&self, norms: &[u64], ips: &[i64]) -> GramMatrix {
        let p = norms.len();
        let mut entries = vec![0; p * p];
        for i in 0..p {
            entries[i * p + i] = norms[i] as i64;
        }
        for (&(i, j, _), &v) in self.pairs.iter().zip(ips) {
            entries[i * p + j] = v;
            entries[j * p + i] = v;
        }
        GramMatrix::new(p, entries).expect("symmetric by construction")
    }
}

enum Accumulator {
    Dense(Vec<u64>),
    Sparse(HashMap<Vec<i64>, u64>),
}

impl Accumulator {
    fn add(&mut self, layout: &KeyLayout, ips: &[i64], c: u64) {
        match self {
            Accumulator::Dense(v) => v[layout.offset(ips)] += c,
            Accumulator::Sparse(m) => *m.entry(ips.to_vec()).or_insert(0) += c,
        }
    }

    fn merge(self, other: Accumulator) -> Accumulator {
        match (self, other) {
            (Accumulator::Dense(mut a), Accumulator::Dense(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Accumulator::Dense(a)
            }
            (Accumulator::Sparse(mut a), Accumulator::Sparse(b)) => {
                for (k, v) in b {
                    *a.entry(k).or_insert(0) += v;
                }
                Accumulator::Sparse(a)
            }
            _ => unreachable!("accumulators of one layout share a representation"),
        }
    }

    fn entries(self, layout: &KeyLayout) -> Vec<(Vec<i64>, u64)> {
        match self {
            Accumulator::Dense(v) => v
                .into_iter()
                .enumerate()
                .filter(|(_, c)| *c > 0)
                .map(|(o, c)| (layout.decode(o), c))
                .collect(),
            Accumulator::Sparse(m) => m.into_iter().collect(),
        }
    }
}

struct TableSearch<'a> {
    groups: &'a [&'a Group],
    /// `indexes[k]`: slot k → last slot.
    indexes: &'a [Option<Arc<PairIndex>>],
    layout: &'a KeyLayout,
}

impl TableSearch<'_> {
    fn last_partition(&self, k: usize, y: usize) -> Cow<'_, [(i64, Bits)]> {
        let last = self.groups.len() - 1;
        match &self.indexes[k] {
            Some(index) => Cow::Borrowed(&index.parts[y]),
            None => Cow::Owned(self.groups[last].partition(self.groups[k].vector(y))),
        }
    }

    fn from_first(&self, x0: usize, acc: &mut Accumulator) {
        let p = self.groups.len();
        let mut chosen = vec![x0];
        let mut ips = vec![0i64; self.layout.pairs.len()];
        if p == 2 && self.indexes[0].is_none() {
            for (ip, c) in self.groups[1].histogram(self.groups[0].vector(x0)) {
                ips[0] = ip;
                acc.add(self.layout, &ips, c);
            }
            return;
        }
        let list: Vec<(Vec<i64>, Bits)> = self
            .last_partition(0, x0)
            .iter()
            .map(|(ip, b)| (vec![*ip], b.clone()))
            .collect();
        if p == 2 {
            for (prefix, b) in list.iter() {
                ips[0] = prefix[0];
                acc.add(self.layout, &ips, b.count());
            }
            return;
        }
        self.descend(1, &mut chosen, &list, &mut ips, acc);
    }

    fn descend(
        &self,
        k: usize,
        chosen: &mut Vec<usize>,
        list: &[(Vec<i64>, Bits)],
        ips: &mut [i64],
        acc: &mut Accumulator,
    ) {
        let p = self.groups.len();
        let last = p - 1;
        let group = self.groups[k];
        for &y in &group.reps {
            let v = group.vector(y);
            for (i, &xi) in chosen.iter().enumerate() {
                let slot = self.layout.pair_slot(i, k);
                ips[slot] = (dot(self.groups[i].vector(xi), v) / 4) as i64;
            }
            let parts = self.last_partition(k, y);
            if k == last - 1 {
                for (prefix, s) in list {
                    for (ip, part) in parts.iter() {
                        let c = s.and_count(part);
                        if c == 0 {
                            continue;
                        }
                        for (i, &pi) in prefix.iter().enumerate() {
                            ips[self.layout.pair_slot(i, last)] = pi;
                        }
                        ips[self.layout.pair_slot(k, last)] = *ip;
                        acc.add(self.layout, ips, c);
                    }
                }
            } else {
                let mut refined = Vec::new();
                let mut scratch = Bits::empty(self.groups[last].len());
                for (prefix, s) in list {
                    for (ip, part) in parts.iter() {
                        if s.and_into(part, &mut scratch) {
                            let mut pre = prefix.clone();
                            pre.push(*ip);
                            refined.push((pre, scratch.clone()));
                        }
                    }
                }
                chosen.push(y);
                self.descend(k + 1, chosen, &refined, ips, acc);
                chosen.pop();
            }
        }
    }
}

/// Coefficients `r_Λ(T)` of all `T` realized by tuples with every slot norm ≤ `diag_bound`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoefficientTable {
    pub lattice: String,
    pub degree: usize,
    pub diag_bound: u64,
    pub entries: BTreeMap<GramMatrix, u64>,
}

impl CoefficientTable {
    pub fn get(&self, t: &GramMatrix) -> u64 {
        self.entries.get(t).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u128 {
        self.entries.values().map(|&c| c as u128).sum()
    }
}

/// A Gram matrix whose coefficients differ between two lattices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThetaDifference {
    #[serde(rename = "T")]
    pub t: GramMatrix,
    pub count1: u64,
    pub count2: u64,
}

/// Exact `r_Λ(T)` for a single `T`.
pub fn representation_number(lattice: &LatticeBasis, t: &GramMatrix, limits: &Limits) -> Result<u64> {
    if !lattice.is_integral() {
        lattice.gram()?;
    }
    if !t.is_psd() {
        return Ok(0);
    }
    let diag: BTreeSet<u64> = t.diag().into_iter().map(|n| n as u64).collect();
    let materialize = if reduce(t).dim() >= 2 { diag.clone() } else { BTreeSet::new() };
    let bound = diag.last().copied().unwrap_or(0);
    ThetaEngine::new(lattice, &materialize, bound, *limits)?.representation_number(t)
}

pub fn coefficient_table(
    lattice: &LatticeBasis,
    degree: usize,
    diag_bound: u64,
    limits: &Limits,
) -> Result<CoefficientTable> {
    ThetaEngine::for_table(lattice, degree, diag_bound, *limits)?.coefficient_table(degree, diag_bound)
}

/// Every `T` (union of both key sets) whose coefficients differ, sorted by (trace, entries).
pub fn compare_tables(a: &CoefficientTable, b: &CoefficientTable) -> Vec<ThetaDifference> {
    let keys: BTreeSet<&GramMatrix> = a.entries.keys().chain(b.entries.keys()).collect();
    keys.into_iter()
        .filter_map(|t| {
            let (c1, c2) = (a.get(t), b.get(t));
            (c1 != c2).then(|| ThetaDifference {
                t: t.clone(),
                count1: c1,
                count2: c2,
            })
        })
        .collect()
}

pub fn compare_theta(
    l1: &LatticeBasis,
    l2: &LatticeBasis,
    degree: usize,
    diag_bound: u64,
    limits: &Limits,
) -> Result<Vec<ThetaDifference>> {
    let a = coefficient_table(l1, degree, diag_bound, limits)?;
    let b = coefficient_table(l2, degree, diag_bound, limits)?;
    Ok(compare_tables(&a, &b))
}
