//! Short-vector enumeration (Fincke–Pohst) on integral lattices.
//!
//! The search runs on the exact integer Gram matrix. A floating-point
//! Cholesky factor only supplies the interval bounds, and those bounds are
//! inflated so rounding can admit extra candidates but never lose one; every
//! candidate norm is recomputed exactly from its half-integer coordinates
//! before it is reported.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::config::Limits;
use crate::error::{Error, Result};
use crate::lattice::LatticeBasis;

const BOUND_SLACK: f64 = 1e-6;

/// Upper-triangular `R` with positive diagonal and `RᵗR = M`.
#[derive(Clone, Debug, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    upper: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries of `R`.
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.upper.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// `RᵗR`, row-major.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = (0..=i.min(j)).map(|k| self.get(k, i) * self.get(k, j)).sum();
            }
        }
        m
    }

    /// Largest `|(RᵗR − M)ᵢⱼ| / (1 + |Mᵢⱼ|)`.
    pub fn reconstruction_error(&self, m: &[f64]) -> f64 {
        self.reconstruct()
            .iter()
            .zip(m)
            .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
            .fold(0.0, f64::max)
    }

    pub fn determinant(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).product()
    }
}

/// Cholesky factorization of a symmetric positive definite matrix given row-major.
pub fn cholesky_upper(m: &[f64], dim: usize) -> Result<CholeskyFactor> {
    if m.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            actual: m.len(),
        });
    }
    for i in 0..dim {
        for j in i + 1..dim {
            let (a, b) = (m[i * dim + j], m[j * dim + i]);
            if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::NotSymmetric { i, j });
            }
        }
    }
    let trace: f64 = (0..dim).map(|i| m[i * dim + i]).sum();
    let tol = 1e-12 * trace.abs();
    let mut r = vec![0.0; dim * dim];
    for i in 0..dim {
        let pivot = m[i * dim + i] - (0..i).map(|k| r[k * dim + i] * r[k * dim + i]).sum::<f64>();
        if !(pivot > tol) {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
        let d = pivot.sqrt();
        r[i * dim + i] = d;
        for j in i + 1..dim {
            let s = m[i * dim + j] - (0..i).map(|k| r[k * dim + i] * r[k * dim + j]).sum::<f64>();
            r[i * dim + j] = s / d;
        }
    }
    Ok(CholeskyFactor { dim, upper: r })
}

/// Convenience wrapper taking rows.
pub fn cholesky_upper_rows(rows: &[Vec<f64>]) -> Result<CholeskyFactor> {
    cholesky_upper(&rows.concat(), rows.len())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortVector {
    /// Integer coordinates with respect to the lattice basis.
    pub coords: Vec<i32>,
    /// Ambient coordinates in units of ½.
    pub halves: Vec<i32>,
    pub norm: u64,
}

impl ShortVector {
    /// Exact norm recomputed from the ambient coordinates.
    pub fn exact_norm(&self) -> u64 {
        let q: i64 = self.halves.iter().map(|&h| (h as i64) * (h as i64)).sum();
        (q / 4) as u64
    }
}

/// Every lattice vector of norm at most `bound`, grouped by norm.
#[derive(Clone, Debug)]
pub struct ShortVectorTable {
    lattice: LatticeBasis,
    bound: u64,
    groups: BTreeMap<u64, Vec<ShortVector>>,
}

impl ShortVectorTable {
    pub fn lattice(&self) -> &LatticeBasis {
        &self.lattice
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn groups(&self) -> &BTreeMap<u64, Vec<ShortVector>> {
        &self.groups
    }

    pub fn group(&self, norm: u64) -> &[ShortVector] {
        self.groups.get(&norm).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All vectors in canonical order: by norm, then ambient coordinates.
    pub fn iter(&self) -> impl Iterator<Item = &ShortVector> {
        self.groups.values().flatten()
    }

    pub fn counts(&self) -> BTreeMap<u64, u64> {
        self.groups.iter().map(|(&n, v)| (n, v.len() as u64)).collect()
    }

    /// One line per vector, `norm: h₁ h₂ … hₙ` with coordinates in units of ½.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in self.iter() {
            let _ = write!(out, "{}:", v.norm);
            for h in &v.halves {
                let _ = write!(out, " {h}");
            }
            out.push('\n');
        }
        out
    }
}

/// Gaussian-heuristic estimate of the number of vectors of norm ≤ `bound`.
pub fn estimate_count(lattice: &LatticeBasis, bound: u64) -> Result<f64> {
    let disc = lattice.discriminant()? as f64;
    let n = lattice.rank();
    Ok(ball_volume(n, (bound as f64).sqrt()) / disc.sqrt() + 1.0)
}

fn ball_volume(n: usize, radius: f64) -> f64 {
    // V_n(r) = π^{n/2} rⁿ / Γ(n/2 + 1), via V_n = V_{n-2} · 2π r² / n
    let (mut v, start) = if n.is_multiple_of(2) { (1.0, 2) } else { (2.0 * radius, 3) };
    let mut k = start;
    while k <= n {
        v *= 2.0 * std::f64::consts::PI * radius * radius / k as f64;
        k += 2;
    }
    v
}

struct Enumerator {
    n: usize,
    q_diag: Vec<f64>,
    mu: Vec<f64>,
    basis_halves: Vec<Vec<i64>>,
    bound: u64,
    bound_f: f64,
}

struct Scratch {
    x: Vec<i64>,
    partial: Vec<Vec<i64>>,
}

impl Enumerator {
    fn new(lattice: &LatticeBasis, bound: u64) -> Result<Self> {
        let gram = lattice.gram()?;
        let n = gram.dim();
        let g: Vec<f64> = gram.entries().iter().map(|&x| x as f64).collect();
        let r = cholesky_upper(&g, n)?;
        let q_diag = (0..n).map(|i| r.get(i, i) * r.get(i, i)).collect();
        let mut mu = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                mu[i * n + j] = r.get(i, j) / r.get(i, i);
            }
        }
        Ok(Enumerator {
            n,
            q_diag,
            mu,
            basis_halves: lattice.basis().iter().map(|b| b.halves().to_vec()).collect(),
            bound,
            bound_f: bound as f64 * (1.0 + BOUND_SLACK) + BOUND_SLACK,
        })
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            x: vec![0; self.n],
            partial: vec![vec![0; self.n]; self.n + 1],
        }
    }

    fn interval(&self, level: usize, x: &[i64], used: f64) -> Option<(i64, i64, f64)> {
        let n = self.n;
        let center: f64 = -(level + 1..n).map(|j| self.mu[level * n + j] * x[j] as f64).sum::<f64>();
        let rem = self.bound_f - used;
        if rem < 0.0 {
            return None;
        }
        let radius = (rem / self.q_diag[level]).sqrt();
        Some(((center - radius).ceil() as i64, (center + radius).floor() as i64, center))
    }

    fn top_range(&self) -> Vec<i64> {
        if self.n == 0 {
            return vec![0];
        }
        let x = vec![0; self.n];
        match self.interval(self.n - 1, &x, 0.0) {
            Some((lo, hi, _)) => (lo..=hi).collect(),
            None => Vec::new(),
        }
    }

    /// Visits every vector whose top coordinate equals `top`.
    fn run<F: FnMut(&[i64], &[i64], u64)>(&self, top: i64, visit: &mut F) {
        let mut s = self.scratch();
        if self.n == 0 {
            visit(&[], &[], 0);
            return;
        }
        let level = self.n - 1;
        let center = 0.0;
        self.place(level, top, center, 0.0, &mut s, visit);
    }

    fn place<F: FnMut(&[i64], &[i64], u64)>(
        &self,
        level: usize,
        value: i64,
        center: f64,
        used: f64,
        s: &mut Scratch,
        visit: &mut F,
    ) {
        let t = value as f64 - center;
        let used = used + self.q_diag[level] * t * t;
        if used > self.bound_f {
            return;
        }
        s.x[level] = value;
        let (lower, upper) = s.partial.split_at_mut(level + 1);
        let above = &upper[0];
        let here = &mut lower[level];
        for ((h, a), b) in here.iter_mut().zip(above).zip(&self.basis_halves[level]) {
            *h = a + value * b;
        }
        if level == 0 {
            let quarters: i64 = s.partial[0].iter().map(|h| h * h).sum();
            let norm = (quarters / 4) as u64;
            if norm <= self.bound {
                visit(&s.x, &s.partial[0], norm);
            }
            return;
        }
        if let Some((lo, hi, c)) = self.interval(level - 1, &s.x, used) {
            for v in lo..=hi {
                self.place(level - 1, v, c, used, s, visit);
            }
        }
    }

    /// Folds over all short vectors, parallel over the top coordinate.
    /// Returns the per-branch accumulators in ascending branch order.
    fn par_fold<A, I, F>(&self, init: I, visit: F) -> Vec<A>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, &[i64], &[i64], u64) + Sync,
    {
        self.top_range()
            .into_par_iter()
            .map(|top| {
                let mut acc = init();
                self.run(top, &mut |x, h, norm| visit(&mut acc, x, h, norm));
                acc
            })
            .collect()
    }
}

fn check_estimate(lattice: &LatticeBasis, bound: u64, limits: &Limits) -> Result<()> {
    let est = estimate_count(lattice, bound)?;
    if est > limits.vector_cap as f64 {
        return Err(Error::CapExceeded {
            estimate: est.min(u64::MAX as f64) as u64,
            cap: limits.vector_cap,
            unit: "vectors",
        });
    }
    Ok(())
}

fn to_i32(v: &[i64], what: &'static str) -> Result<Vec<i32>> {
    v.iter()
        .map(|&x| i32::try_from(x).map_err(|_| Error::Overflow(what)))
        .collect()
}

/// All vectors of norm at most `bound`, sorted by (norm, ambient coordinates).
pub fn short_vectors(lattice: &LatticeBasis, bound: u64, limits: &Limits) -> Result<ShortVectorTable> {
    check_estimate(lattice, bound, limits)?;
    let e = Enumerator::new(lattice, bound)?;
    let seen = AtomicU64::new(0);
    let cap = limits.vector_cap;
    let parts = e.par_fold(
        || Ok(Vec::new()),
        |acc: &mut Result<Vec<ShortVector>>, x, h, norm| {
            let Ok(list) = acc else { return };
            if seen.fetch_add(1, Ordering::Relaxed) >= cap {
                *acc = Err(Error::CapExceeded {
                    estimate: cap + 1,
                    cap,
                    unit: "vectors",
                });
                return;
            }
            match (to_i32(x, "basis coordinates"), to_i32(h, "ambient coordinates")) {
                (Ok(coords), Ok(halves)) => list.push(ShortVector { coords, halves, norm }),
                (Err(err), _) | (_, Err(err)) => *acc = Err(err),
            }
        },
    );
    let mut groups: BTreeMap<u64, Vec<ShortVector>> = BTreeMap::new();
    for part in parts {
        for v in part? {
            groups.entry(v.norm).or_default().push(v);
        }
    }
    for list in groups.values_mut() {
        list.sort_by(|a, b| a.halves.cmp(&b.halves));
    }
    Ok(ShortVectorTable {
        lattice: lattice.clone(),
        bound,
        groups,
    })
}

/// Number of vectors of each norm up to `bound`, without materializing them.
pub fn count_by_norm(lattice: &LatticeBasis, bound: u64, limits: &Limits) -> Result<BTreeMap<u64, u64>> {
    check_estimate(lattice, bound, limits)?;
    let e = Enumerator::new(lattice, bound)?;
    let parts = e.par_fold(BTreeMap::new, |acc: &mut BTreeMap<u64, u64>, _, _, norm| {
        *acc.entry(norm).or_insert(0) += 1;
    });
    let mut total = BTreeMap::new();
    for part in parts {
        for (norm, c) in part {
            *total.entry(norm).or_insert(0) += c;
        }
    }
    Ok(total)
}

/// Vectors of the selected norms as flat ambient half-coordinates, plus the
/// counts of every norm up to `bound`. Used by the theta engine.
pub(crate) fn collect_norms(
    lattice: &LatticeBasis,
    bound: u64,
    keep: &std::collections::BTreeSet<u64>,
    limits: &Limits,
) -> Result<(BTreeMap<u64, u64>, BTreeMap<u64, Vec<i16>>)> {
    check_estimate(lattice, bound, limits)?;
    let e = Enumerator::new(lattice, bound)?;
    let kept = AtomicU64::new(0);
    let cap = limits.vector_cap;
    type Acc = Result<(BTreeMap<u64, u64>, BTreeMap<u64, Vec<Vec<i16>>>)>;
    let parts = e.par_fold(
        || -> Acc { Ok((BTreeMap::new(), BTreeMap::new())) },
        |acc: &mut Acc, _, h, norm| {
            let Ok((counts, groups)) = acc else { return };
            *counts.entry(norm).or_insert(0) += 1;
            if !keep.contains(&norm) {
                return;
            }
            if kept.fetch_add(1, Ordering::Relaxed) >= cap {
                *acc = Err(Error::CapExceeded {
                    estimate: cap + 1,
                    cap,
                    unit: "vectors",
                });
                return;
            }
            match h.iter().map(|&x| i16::try_from(x)).collect::<std::result::Result<Vec<_>, _>>() {
                Ok(v) => groups.entry(norm).or_default().push(v),
                Err(_) => *acc = Err(Error::Overflow("ambient coordinates")),
            }
        },
    );
    let mut counts = BTreeMap::new();
    let mut groups: BTreeMap<u64, Vec<Vec<i16>>> = BTreeMap::new();
    for part in parts {
        let (c, g) = part?;
        for (norm, k) in c {
            *counts.entry(norm).or_insert(0) += k;
        }
        for (norm, vs) in g {
            groups.entry(norm).or_default().extend(vs);
        }
    }
    let flat = groups
        .into_iter()
        .map(|(norm, mut vs)| {
            vs.sort();
            (norm, vs.concat())
        })
        .collect();
    Ok((counts, flat))
}
