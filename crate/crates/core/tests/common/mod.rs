//! Oracles that do not share code with the library's enumeration or search.
#![allow(dead_code)]

use std::collections::BTreeMap;

use flat_tori::{direct_sum, dn, dn_plus, integer_lattice, LatticeBasis};

/// A lattice together with a direct membership test on ambient half-units.
#[derive(Clone, Debug)]
pub enum Oracle {
    Z(usize),
    D(usize),
    DPlus(usize),
    Sum(Box<Oracle>, Box<Oracle>),
}

impl Oracle {
    pub fn dim(&self) -> usize {
        match self {
            Oracle::Z(n) | Oracle::D(n) | Oracle::DPlus(n) => *n,
            Oracle::Sum(a, b) => a.dim() + b.dim(),
        }
    }

    pub fn lattice(&self) -> LatticeBasis {
        match self {
            Oracle::Z(n) => integer_lattice(*n).unwrap(),
            Oracle::D(n) => dn(*n).unwrap(),
            Oracle::DPlus(n) => dn_plus(*n).unwrap(),
            Oracle::Sum(a, b) => direct_sum(&a.lattice(), &b.lattice()),
        }
    }

    /// Coset description: integer vectors (even coordinate sum for D), plus
    /// for D⁺ the shift by (½,…,½).
    pub fn contains(&self, halves: &[i64]) -> bool {
        let all_even = halves.iter().all(|h| h % 2 == 0);
        let all_odd = halves.iter().all(|h| h.rem_euclid(2) == 1);
        let coord_sum_even = |v: &[i64]| (v.iter().map(|h| h / 2).sum::<i64>()).rem_euclid(2) == 0;
        match self {
            Oracle::Z(_) => all_even,
            Oracle::D(_) => all_even && coord_sum_even(halves),
            Oracle::DPlus(_) => {
                if all_even {
                    coord_sum_even(halves)
                } else if all_odd {
                    let shifted: Vec<i64> = halves.iter().map(|h| h - 1).collect();
                    coord_sum_even(&shifted)
                } else {
                    false
                }
            }
            Oracle::Sum(a, b) => {
                let (x, y) = halves.split_at(a.dim());
                a.contains(x) && b.contains(y)
            }
        }
    }
}

/// All lattice vectors of norm ≤ `bound`, by scanning every ambient
/// half-unit vector with coordinates in `[-√bound, √bound]`.
pub fn box_vectors(oracle: &Oracle, bound: u64) -> BTreeMap<u64, Vec<Vec<i64>>> {
    let n = oracle.dim();
    let hr = (2.0 * (bound as f64).sqrt()).floor() as i64;
    let values: Vec<i64> = (-hr..=hr).collect();
    let mut out: BTreeMap<u64, Vec<Vec<i64>>> = BTreeMap::new();
    odometer(n, &values, &mut |v: &[i64]| {
        let q: i64 = v.iter().map(|h| h * h).sum();
        if q % 4 == 0 && (q / 4) as u64 <= bound && oracle.contains(v) {
            out.entry((q / 4) as u64).or_default().push(v.to_vec());
        }
    });
    for list in out.values_mut() {
        list.sort();
    }
    out
}

fn odometer(n: usize, values: &[i64], f: &mut impl FnMut(&[i64])) {
    if values.is_empty() {
        return;
    }
    let mut idx = vec![0usize; n];
    let mut v: Vec<i64> = vec![values[0]; n];
    loop {
        f(&v);
        let mut p = 0;
        while p < n {
            idx[p] += 1;
            if idx[p] < values.len() {
                v[p] = values[idx[p]];
                break;
            }
            idx[p] = 0;
            v[p] = values[0];
            p += 1;
        }
        if p == n {
            return;
        }
    }
}

/// Roots of D₁₆⁺ in half-units: ±e_i ± e_j.
pub fn gamma16_roots() -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for i in 0..16 {
        for j in i + 1..16 {
            for (si, sj) in [(2, 2), (2, -2), (-2, 2), (-2, -2)] {
                let mut v = vec![0i64; 16];
                v[i] = si;
                v[j] = sj;
                out.push(v);
            }
        }
    }
    out.sort();
    out
}

/// Roots of E₈ in half-units: ±e_i ± e_j and (±½)⁸ with an even number of minus signs.
pub fn e8_roots() -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for i in 0..8 {
        for j in i + 1..8 {
            for (si, sj) in [(2, 2), (2, -2), (-2, 2), (-2, -2)] {
                let mut v = vec![0i64; 8];
                v[i] = si;
                v[j] = sj;
                out.push(v);
            }
        }
    }
    for mask in 0u32..256 {
        if mask.count_ones() % 2 == 0 {
            out.push((0..8).map(|k| if mask >> k & 1 == 1 { -1 } else { 1 }).collect());
        }
    }
    out.sort();
    out
}

/// Roots of E₈ ⊕ E₈ in half-units.
pub fn e8e8_roots() -> Vec<Vec<i64>> {
    let e8 = e8_roots();
    let mut out = Vec::new();
    for r in &e8 {
        let mut a = r.clone();
        a.extend([0; 8]);
        out.push(a);
        let mut b = vec![0; 8];
        b.extend(r.iter().copied());
        out.push(b);
    }
    out.sort();
    out
}

/// Ordered 4-tuples of pairwise orthogonal roots: explicit loops over the
/// first three roots, then a popcount of the common orthogonal set.
pub fn orthogonal_root_quadruples(roots: &[Vec<i64>]) -> u64 {
    let n = roots.len();
    let words = n.div_ceil(64);
    let mut orth = vec![0u64; n * words];
    for i in 0..n {
        for j in 0..n {
            let q: i64 = roots[i].iter().zip(&roots[j]).map(|(a, b)| a * b).sum();
            if q == 0 {
                orth[i * words + j / 64] |= 1 << (j % 64);
            }
        }
    }
    let row = |i: usize| &orth[i * words..(i + 1) * words];
    let members = |bits: &[u64]| -> Vec<usize> { (0..n).filter(|&j| bits[j / 64] >> (j % 64) & 1 == 1).collect() };
    let mut total = 0u64;
    for a in 0..n {
        for b in members(row(a)) {
            let ab: Vec<u64> = row(a).iter().zip(row(b)).map(|(x, y)| x & y).collect();
            for c in members(&ab) {
                total += ab.iter().zip(row(c)).map(|(x, y)| (x & y).count_ones() as u64).sum::<u64>();
            }
        }
    }
    total
}

/// All ordered `d`-tuples from `vectors` with every pairwise inner product
/// prescribed by `t` (row-major, ¼-units not applied: plain inner products).
pub fn naive_tuple_count(groups: &[&[Vec<i64>]], t: &[i64]) -> u64 {
    let d = groups.len();
    fn rec(groups: &[&[Vec<i64>]], t: &[i64], d: usize, chosen: &mut Vec<Vec<i64>>) -> u64 {
        let k = chosen.len();
        if k == d {
            return 1;
        }
        let mut total = 0;
        for v in groups[k] {
            let ok = chosen.iter().enumerate().all(|(i, u)| {
                let q: i64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                q == 4 * t[i * d + k]
            });
            if ok {
                chosen.push(v.clone());
                total += rec(groups, t, d, chosen);
                chosen.pop();
            }
        }
        total
    }
    rec(groups, t, d, &mut Vec::new())
}

/// Integral lattices used by the property suites, all of ambient dimension ≤ 8.
pub fn small_oracles() -> Vec<Oracle> {
    vec![
        Oracle::Z(1),
        Oracle::Z(2),
        Oracle::Z(3),
        Oracle::Z(4),
        Oracle::D(2),
        Oracle::D(3),
        Oracle::D(4),
        Oracle::D(5),
        Oracle::D(8),
        Oracle::DPlus(4),
        Oracle::DPlus(8),
        Oracle::Sum(Box::new(Oracle::Z(1)), Box::new(Oracle::D(3))),
        Oracle::Sum(Box::new(Oracle::DPlus(4)), Box::new(Oracle::D(4))),
    ]
}
