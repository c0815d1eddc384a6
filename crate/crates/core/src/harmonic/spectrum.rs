//! Energy spectra of harmonic maps `T^d → R^n/Λ`.
//!
//! A homotopy class of maps between flat tori is a tuple `γ = (γ₁,…,γ_d)` of
//! lattice vectors; its harmonic representative is affine with energy
//! `½·Tr(Q(γ)·W)·vol`. The multiplicity of an energy is therefore the sum of
//! `r_Λ(S)` over the Gram matrices `S` with that energy.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use super::scalar::TranscendentalScalar;
use super::source::{Provenance, SourceTorus};
use crate::config::Limits;
use crate::error::{Error, Result};
use crate::exact;
use crate::gram::GramMatrix;
use crate::lattice::LatticeBasis;
use crate::theta::{coefficient_table, ThetaEngine};

/// Relative tolerance used to merge energies of approximate sources.
pub const APPROX_MERGE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyClass {
    pub trace_part: TranscendentalScalar,
    pub trace_part_text: String,
    pub energy_float: f64,
    pub multiplicity: u64,
    #[serde(serialize_with = "serialize_members")]
    pub members: BTreeMap<GramMatrix, u64>,
}

#[derive(Serialize)]
struct Member<'a> {
    #[serde(rename = "S")]
    s: &'a GramMatrix,
    count: u64,
}

fn serialize_members<S: serde::Serializer>(
    members: &BTreeMap<GramMatrix, u64>,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    serializer.collect_seq(members.iter().map(|(s, &count)| Member { s, count }))
}

impl EnergyClass {
    fn new(trace_part: TranscendentalScalar, volume: f64) -> Self {
        EnergyClass {
            trace_part_text: trace_part.to_string(),
            energy_float: 0.5 * trace_part.float_value() * volume,
            trace_part,
            multiplicity: 0,
            members: BTreeMap::new(),
        }
    }

    fn add(&mut self, s: GramMatrix, count: u64) {
        self.multiplicity += count;
        *self.members.entry(s).or_insert(0) += count;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SourceDescriptor {
    pub d: usize,
    #[serde(rename = "W")]
    pub dual_gram: BTreeMap<String, TranscendentalScalar>,
    pub volume: f64,
    pub provenance: Provenance,
    pub exact: bool,
}

impl SourceDescriptor {
    pub fn of(src: &SourceTorus) -> Self {
        let d = src.d();
        let mut dual_gram = BTreeMap::new();
        for i in 0..d {
            for j in 0..d {
                dual_gram.insert(format!("{},{}", i + 1, j + 1), src.w(i, j).clone());
            }
        }
        SourceDescriptor {
            d,
            dual_gram,
            volume: src.volume(),
            provenance: src.provenance(),
            exact: src.is_exact(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub source: SourceDescriptor,
    pub target: String,
    pub bound: u64,
    pub coverage: String,
    pub energies_approximate: bool,
    pub classes: Vec<EnergyClass>,
}

impl SpectrumReport {
    pub fn class(&self, trace_part: &TranscendentalScalar) -> Option<&EnergyClass> {
        self.classes.iter().find(|c| &c.trace_part == trace_part)
    }

    pub fn total_multiplicity(&self) -> u128 {
        self.classes.iter().map(|c| c.multiplicity as u128).sum()
    }
}

fn coverage(bound: u64) -> String {
    format!("complete for all homotopy classes with every |γ_i|² ≤ {bound}")
}

/// `Tr(S·W)` exactly and the energy `½·Tr(S·W)·vol`.
pub fn energy_of_class(s: &GramMatrix, src: &SourceTorus) -> Result<(TranscendentalScalar, f64)> {
    let d = src.d();
    if s.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: s.dim(),
        });
    }
    let mut trace = TranscendentalScalar::zero();
    for i in 0..d {
        for j in 0..d {
            let sij = s.get(i, j);
            if sij != 0 {
                trace += &src.w(j, i).scale_int(sij);
            }
        }
    }
    let energy = 0.5 * trace.float_value() * src.volume();
    Ok((trace, energy))
}

fn sort_classes(classes: &mut [EnergyClass]) {
    classes.sort_by(|a, b| {
        a.energy_float
            .total_cmp(&b.energy_float)
            .then_with(|| a.trace_part.cmp(&b.trace_part))
    });
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= APPROX_MERGE_TOLERANCE * a.abs().max(b.abs())
}

fn group_classes(src: &SourceTorus, realized: impl IntoIterator<Item = (GramMatrix, u64)>) -> Result<Vec<EnergyClass>> {
    if src.is_exact() {
        let mut by_trace: BTreeMap<TranscendentalScalar, EnergyClass> = BTreeMap::new();
        for (s, count) in realized {
            let (trace, _) = energy_of_class(&s, src)?;
            by_trace
                .entry(trace.clone())
                .or_insert_with(|| EnergyClass::new(trace, src.volume()))
                .add(s, count);
        }
        let mut classes: Vec<EnergyClass> = by_trace.into_values().collect();
        sort_classes(&mut classes);
        Ok(classes)
    } else {
        let mut items: Vec<(f64, TranscendentalScalar, GramMatrix, u64)> = Vec::new();
        for (s, count) in realized {
            let (trace, energy) = energy_of_class(&s, src)?;
            items.push((energy, trace, s, count));
        }
        items.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.2.cmp(&b.2)));
        let mut classes: Vec<EnergyClass> = Vec::new();
        for (energy, trace, s, count) in items {
            match classes.last_mut() {
                Some(last) if close(last.energy_float, energy) => last.add(s, count),
                _ => {
                    let mut class = EnergyClass::new(trace, src.volume());
                    class.add(s, count);
                    classes.push(class);
                }
            }
        }
        Ok(classes)
    }
}

/// Every energy class realized by tuples with all `|γᵢ|² ≤ bound`.
pub fn energy_spectrum(src: &SourceTorus, target: &LatticeBasis, bound: u64, limits: &Limits) -> Result<SpectrumReport> {
    let table = coefficient_table(target, src.d(), bound, limits)?;
    Ok(SpectrumReport {
        source: SourceDescriptor::of(src),
        target: target.label().to_string(),
        bound,
        coverage: coverage(bound),
        energies_approximate: !src.is_exact(),
        classes: group_classes(src, table.entries)?,
    })
}

/// All symmetric psd integer `S` with `Tr(S·W) = trace_part` exactly and
/// every diagonal entry ≤ `bound` (even entries only when `even`).
pub fn class_candidates(
    src: &SourceTorus,
    trace_part: &TranscendentalScalar,
    bound: u64,
    even: bool,
    limits: &Limits,
) -> Result<Vec<GramMatrix>> {
    if !src.is_exact() {
        return Err(Error::Unsupported(
            "exact class lookup needs an exact source (rational Gram or π-power entries)".into(),
        ));
    }
    let d = src.d();
    let step = if even { 2 } else { 1 };
    let diag_values: Vec<i64> = (0..=bound as i64).step_by(step).collect();
    let exponents: BTreeSet<u32> = src
        .dual_gram()
        .iter()
        .flat_map(|w| w.terms().map(|(k, _)| k).collect::<Vec<_>>())
        .chain(trace_part.terms().map(|(k, _)| k))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    let mut visited: u64 = 0;
    let mut diag = vec![0i64; d];
    let stack_diag = |diag: &[i64], out: &mut Vec<GramMatrix>, visited: &mut u64| -> Result<()> {
        let mut residual = trace_part.clone();
        for (i, &v) in diag.iter().enumerate() {
            residual = &residual - &src.w(i, i).scale_int(v);
        }
        let radii: Vec<i64> = pairs
            .iter()
            .map(|&(i, j)| isqrt((diag[i] * diag[j]) as u64) as i64)
            .collect();
        // remaining[p][k]: Σ over pairs ≥ p of 2·radius·|coeff_k(W_ij)|
        let mut remaining = vec![BTreeMap::<u32, BigRational>::new(); pairs.len() + 1];
        for p in (0..pairs.len()).rev() {
            let (i, j) = pairs[p];
            let mut here = remaining[p + 1].clone();
            for &k in &exponents {
                let c = src.w(i, j).coeff(k).abs() * BigRational::from_integer(BigInt::from(2 * radii[p]));
                *here.entry(k).or_insert_with(BigRational::zero) += c;
            }
            remaining[p] = here;
        }
        let mut entries = vec![0i64; pairs.len()];
        search_offdiag(
            src, &pairs, &radii, &remaining, &exponents, 0, &residual, &mut entries, diag, out, visited, limits,
        )
    };
    loop {
        stack_diag(&diag, &mut out, &mut visited)?;
        // odometer over diagonal values
        let mut pos = 0;
        loop {
            if pos == d {
                out.sort();
                return Ok(out);
            }
            let idx = diag_values.iter().position(|&v| v == diag[pos]).unwrap();
            if idx + 1 < diag_values.len() {
                diag[pos] = diag_values[idx + 1];
                break;
            }
            diag[pos] = diag_values[0];
            pos += 1;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn search_offdiag(
    src: &SourceTorus,
    pairs: &[(usize, usize)],
    radii: &[i64],
    remaining: &[BTreeMap<u32, BigRational>],
    exponents: &BTreeSet<u32>,
    p: usize,
    residual: &TranscendentalScalar,
    entries: &mut [i64],
    diag: &[i64],
    out: &mut Vec<GramMatrix>,
    visited: &mut u64,
    limits: &Limits,
) -> Result<()> {
    *visited += 1;
    if *visited > limits.work_cap {
        return Err(Error::CapExceeded {
            estimate: *visited,
            cap: limits.work_cap,
            unit: "candidate Gram matrices",
        });
    }
    for &k in exponents {
        let need = residual.coeff(k).abs();
        if need > remaining[p].get(&k).cloned().unwrap_or_else(BigRational::zero) {
            return Ok(());
        }
    }
    if p == pairs.len() {
        if !residual.is_zero() {
            return Ok(());
        }
        let d = diag.len();
        let mut m = GramMatrix::diagonal(diag).entries().to_vec();
        for (&(i, j), &v) in pairs.iter().zip(entries.iter()) {
            m[i * d + j] = v;
            m[j * d + i] = v;
        }
        let s = GramMatrix::new(d, m)?;
        if s.is_psd() {
            out.push(s);
        }
        return Ok(());
    }
    let (i, j) = pairs[p];
    for v in -radii[p]..=radii[p] {
        entries[p] = v;
        let next = if v == 0 {
            residual.clone()
        } else {
            residual - &src.w(i, j).scale_int(2 * v)
        };
        search_offdiag(
            src, pairs, radii, remaining, exponents, p + 1, &next, entries, diag, out, visited, limits,
        )?;
    }
    entries[p] = 0;
    Ok(())
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

/// One exact energy class: `Σ r_Λ(S)` over all `S` with `Tr(S·W) = trace_part`
/// and every diagonal entry ≤ `bound`.
pub fn energy_class(
    src: &SourceTorus,
    target: &LatticeBasis,
    trace_part: &TranscendentalScalar,
    bound: u64,
    limits: &Limits,
) -> Result<EnergyClass> {
    let engine = class_engine(src, target, std::slice::from_ref(trace_part), bound, limits)?;
    energy_class_with(src, &engine, target.is_even(), trace_part, bound, limits)
}

pub(crate) fn class_engine(
    src: &SourceTorus,
    target: &LatticeBasis,
    trace_parts: &[TranscendentalScalar],
    bound: u64,
    limits: &Limits,
) -> Result<ThetaEngine> {
    let even = target.is_even();
    let mut materialize = BTreeSet::new();
    let mut count_bound = 0;
    for tp in trace_parts {
        for s in class_candidates(src, tp, bound, even, limits)? {
            let nz: Vec<u64> = s.diag().into_iter().filter(|&v| v > 0).map(|v| v as u64).collect();
            count_bound = count_bound.max(nz.iter().copied().max().unwrap_or(0));
            if nz.len() >= 2 {
                materialize.extend(nz);
            }
        }
    }
    ThetaEngine::new(target, &materialize, count_bound, *limits)
}

pub(crate) fn energy_class_with(
    src: &SourceTorus,
    engine: &ThetaEngine,
    even: bool,
    trace_part: &TranscendentalScalar,
    bound: u64,
    limits: &Limits,
) -> Result<EnergyClass> {
    let mut class = EnergyClass::new(trace_part.clone(), src.volume());
    for s in class_candidates(src, trace_part, bound, even, limits)? {
        let r = engine.representation_number(&s)?;
        if r > 0 {
            class.add(s, r);
        }
    }
    Ok(class)
}

/// A class whose multiplicities differ between two targets (absent = 0).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassDifference {
    pub trace_part: TranscendentalScalar,
    pub trace_part_text: String,
    pub energy_float: f64,
    pub multiplicity1: u64,
    pub multiplicity2: u64,
    pub class1: Option<EnergyClass>,
    pub class2: Option<EnergyClass>,
}

fn align(src: &SourceTorus, a: Vec<EnergyClass>, b: Vec<EnergyClass>) -> Vec<ClassDifference> {
    let mut pairs: Vec<(Option<EnergyClass>, Option<EnergyClass>)> = Vec::new();
    if src.is_exact() {
        let mut map: BTreeMap<TranscendentalScalar, (Option<EnergyClass>, Option<EnergyClass>)> = BTreeMap::new();
        for c in a {
            let key = c.trace_part.clone();
            map.entry(key).or_default().0 = Some(c);
        }
        for c in b {
            let key = c.trace_part.clone();
            map.entry(key).or_default().1 = Some(c);
        }
        pairs.extend(map.into_values());
    } else {
        let mut b: Vec<Option<EnergyClass>> = b.into_iter().map(Some).collect();
        for c in a {
            let hit = b
                .iter_mut()
                .find(|x| x.as_ref().is_some_and(|x| close(x.energy_float, c.energy_float)))
                .and_then(Option::take);
            pairs.push((Some(c), hit));
        }
        pairs.extend(b.into_iter().flatten().map(|c| (None, Some(c))));
    }
    let mut out: Vec<ClassDifference> = pairs
        .into_iter()
        .filter_map(|(x, y)| {
            let m1 = x.as_ref().map_or(0, |c| c.multiplicity);
            let m2 = y.as_ref().map_or(0, |c| c.multiplicity);
            if m1 == m2 {
                return None;
            }
            let rep = x.as_ref().or(y.as_ref()).unwrap();
            Some(ClassDifference {
                trace_part: rep.trace_part.clone(),
                trace_part_text: rep.trace_part_text.clone(),
                energy_float: rep.energy_float,
                multiplicity1: m1,
                multiplicity2: m2,
                class1: x,
                class2: y,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.energy_float
            .total_cmp(&b.energy_float)
            .then_with(|| a.trace_part.cmp(&b.trace_part))
    });
    out
}

/// Classes whose multiplicities differ between the spectra into `t1` and `t2`.
pub fn compare_spectra(
    src: &SourceTorus,
    t1: &LatticeBasis,
    t2: &LatticeBasis,
    bound: u64,
    limits: &Limits,
) -> Result<Vec<ClassDifference>> {
    let a = energy_spectrum(src, t1, bound, limits)?;
    let b = energy_spectrum(src, t2, bound, limits)?;
    Ok(align(src, a.classes, b.classes))
}

/// Like [`compare_spectra`] but restricted to the given exact energy classes,
/// each computed directly from its set of Gram matrices.
pub fn compare_classes(
    src: &SourceTorus,
    t1: &LatticeBasis,
    t2: &LatticeBasis,
    trace_parts: &[TranscendentalScalar],
    bound: u64,
    limits: &Limits,
) -> Result<Vec<ClassDifference>> {
    let e1 = class_engine(src, t1, trace_parts, bound, limits)?;
    let e2 = class_engine(src, t2, trace_parts, bound, limits)?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for tp in trace_parts {
        let c1 = energy_class_with(src, &e1, t1.is_even(), tp, bound, limits)?;
        let c2 = energy_class_with(src, &e2, t2.is_even(), tp, bound, limits)?;
        if c1.multiplicity > 0 {
            a.push(c1);
        }
        if c2.multiplicity > 0 {
            b.push(c2);
        }
    }
    Ok(align(src, a, b))
}

/// Spectrum report assembled from explicitly requested exact classes.
pub fn spectrum_of_classes(
    src: &SourceTorus,
    target: &LatticeBasis,
    trace_parts: &[TranscendentalScalar],
    bound: u64,
    limits: &Limits,
) -> Result<SpectrumReport> {
    let engine = class_engine(src, target, trace_parts, bound, limits)?;
    let mut classes = Vec::new();
    for tp in trace_parts {
        let class = energy_class_with(src, &engine, target.is_even(), tp, bound, limits)?;
        if class.multiplicity > 0 {
            classes.push(class);
        }
    }
    sort_classes(&mut classes);
    Ok(SpectrumReport {
        source: SourceDescriptor::of(src),
        target: target.label().to_string(),
        bound,
        coverage: format!(
            "requested classes only; each complete for all homotopy classes with every |γ_i|² ≤ {bound}"
        ),
        energies_approximate: false,
        classes,
    })
}

/// Rational lower bound on the smallest eigenvalue of a rational positive
/// definite `W`: the largest `r` found by bisection with `W − r·I` still
/// positive definite (decided exactly by leading principal minors).
pub fn min_eigenvalue_lower_bound(src: &SourceTorus) -> Result<BigRational> {
    if !src.is_exact() || !src.is_rational() {
        return Err(Error::Unsupported("eigenvalue bound needs an exact rational W".into()));
    }
    let d = src.d();
    let w: Vec<BigRational> = src.dual_gram().iter().map(|x| x.coeff(0)).collect();
    let shifted = |r: &BigRational| -> bool {
        let mut m = w.clone();
        for i in 0..d {
            m[i * d + i] -= r;
        }
        exact::is_positive_definite(d, &m)
    };
    let mut lo = BigRational::zero();
    let mut hi = (0..d).map(|i| w[i * d + i].clone()).min().unwrap_or_else(BigRational::zero);
    let two = BigRational::from_integer(BigInt::from(2));
    for _ in 0..48 {
        let mid = (&lo + &hi) / &two;
        if shifted(&mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// A per-slot bound `B` such that every class of energy ≤ `e_max` has all
/// `|γᵢ|² ≤ B`, using `Tr(S·W) ≥ λ_min(W)·Tr(S)`.
pub fn sufficient_bound(src: &SourceTorus, e_max: f64) -> Result<u64> {
    use num_traits::ToPrimitive;
    let lambda = min_eigenvalue_lower_bound(src)?;
    let lambda = lambda.to_f64().unwrap_or(0.0) * (1.0 - 1e-12);
    if lambda <= 0.0 {
        return Err(Error::NotPositiveDefinite { pivot: 0 });
    }
    let b = 2.0 * e_max / (lambda * src.volume() * (1.0 - 1e-12));
    Ok(b.max(0.0).floor() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::source::{milnor_source, source_from_basis};

    #[test]
    fn zero_class_has_zero_energy() {
        let src = milnor_source();
        let (t, e) = energy_of_class(&GramMatrix::zero(4), &src).unwrap();
        assert!(t.is_zero());
        assert_eq!(e, 0.0);
    }

    #[test]
    fn milnor_diagonal_trace() {
        let src = milnor_source();
        let (t, e) = energy_of_class(&GramMatrix::diagonal(&[2, 2, 2, 2]), &src).unwrap();
        assert_eq!(t, TranscendentalScalar::integer(8));
        assert!((e - 4.0 * src.volume()).abs() < 1e-12);
        let s = GramMatrix::from_rows(&[
            vec![2, 1, 0, 0],
            vec![1, 2, 0, 0],
            vec![0, 0, 2, 0],
            vec![0, 0, 0, 2],
        ])
        .unwrap();
        let (t2, _) = energy_of_class(&s, &src).unwrap();
        let mut expect = TranscendentalScalar::integer(8);
        expect += &TranscendentalScalar::term(BigRational::from_integer(2.into()), 1);
        assert_eq!(t2, expect);
        assert_ne!(t2, t);
    }

    #[test]
    fn dimension_mismatch() {
        let src = source_from_basis(&[vec![1.0]], None).unwrap();
        assert!(energy_of_class(&GramMatrix::zero(2), &src).is_err());
    }

    #[test]
    fn milnor_candidates_are_diagonal() {
        let src = milnor_source();
        let c = class_candidates(&src, &TranscendentalScalar::integer(8), 8, true, &Limits::default()).unwrap();
        assert_eq!(c.len(), 35);
        assert!(c.iter().all(GramMatrix::is_diagonal));
        assert!(c.iter().all(|s| s.trace() == 8));
    }
}
