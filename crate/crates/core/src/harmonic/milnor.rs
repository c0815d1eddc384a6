//! The 4-torus that separates `R¹⁶/(Γ₈⊕Γ₈)` from `R¹⁶/Γ₁₆`.
//!
//! With `W = M` the class `Tr(S·M) = 8` contains exactly the diagonal even
//! `S` of trace 8. For patterns with at most three nonzero entries the counts
//! agree (equal theta series in degree ≤ 3); only `diag(2,2,2,2)` differs.

use std::collections::BTreeMap;

use serde::Serialize;

use super::scalar::TranscendentalScalar;
use super::source::{milnor_source, SourceTorus};
use super::spectrum::{class_engine, energy_class_with, energy_of_class, EnergyClass, SourceDescriptor};
use crate::config::Limits;
use crate::error::Result;
use crate::gram::GramMatrix;
use crate::lattice::LatticeBasis;
use crate::notation::parse_lattice;

pub const MILNOR_TRACE: i64 = 8;

#[derive(Clone, Debug, Serialize)]
pub struct DiagonalCheck {
    /// Even psd `S` of trace 8 examined, diagonal or not.
    pub candidates: u64,
    pub non_diagonal_candidates: u64,
    pub non_diagonal_in_class: u64,
    pub members_all_diagonal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PatternCount {
    pub pattern: Vec<i64>,
    pub arrangements: usize,
    pub count_per_arrangement1: u64,
    pub count_per_arrangement2: u64,
    pub total1: u64,
    pub total2: u64,
    pub equal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DifferenceBlock {
    pub multiplicity1: u64,
    pub multiplicity2: u64,
    pub difference: i128,
    pub r_diag2222_1: u64,
    pub r_diag2222_2: u64,
    pub r_difference: i128,
    pub consistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MilnorReport {
    pub source: SourceDescriptor,
    pub target1: String,
    pub target2: String,
    pub bound: u64,
    pub trace_part: String,
    pub energy_float: f64,
    pub det_b: f64,
    pub class1: EnergyClass,
    pub class2: EnergyClass,
    pub diagonal_check: DiagonalCheck,
    pub patterns: Vec<PatternCount>,
    pub difference: DifferenceBlock,
    pub success: bool,
}

impl MilnorReport {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "energy class Tr(S·M) = {}  E = {:.12}  (det b = {:.12})\n",
            self.trace_part, self.energy_float, self.det_b
        ));
        out.push_str(&format!("{:<14}{:>6}{:>16}{:>16}{:>7}\n", "pattern", "perms", self.target1, self.target2, "equal"));
        for p in &self.patterns {
            let label = format!("({})", p.pattern.iter().map(i64::to_string).collect::<Vec<_>>().join(","));
            out.push_str(&format!(
                "{:<14}{:>6}{:>16}{:>16}{:>7}\n",
                label, p.arrangements, p.total1, p.total2, p.equal
            ));
        }
        out.push_str(&format!(
            "multiplicity {} = {}\nmultiplicity {} = {}\ndifference = {}\n",
            self.target1,
            self.difference.multiplicity1,
            self.target2,
            self.difference.multiplicity2,
            self.difference.difference
        ));
        out.push_str(&format!(
            "non-diagonal S in class: {} of {} checked\nsuccess: {}\n",
            self.diagonal_check.non_diagonal_in_class, self.diagonal_check.non_diagonal_candidates, self.success
        ));
        out
    }
}

/// Every symmetric even psd 4×4 `S` with trace 8, found without reference to `W`.
fn trace_eight_candidates() -> Vec<GramMatrix> {
    let mut out = Vec::new();
    let d = 4;
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    for a in (0..=MILNOR_TRACE).step_by(2) {
        for b in (0..=MILNOR_TRACE - a).step_by(2) {
            for c in (0..=MILNOR_TRACE - a - b).step_by(2) {
                let diag = [a, b, c, MILNOR_TRACE - a - b - c];
                let radii: Vec<i64> = pairs
                    .iter()
                    .map(|&(i, j)| ((diag[i] * diag[j]) as f64).sqrt().floor() as i64)
                    .collect();
                let mut offs: Vec<i64> = radii.iter().map(|&r| -r).collect();
                loop {
                    let mut m = GramMatrix::diagonal(&diag).entries().to_vec();
                    for (&(i, j), &v) in pairs.iter().zip(&offs) {
                        m[i * d + j] = v;
                        m[j * d + i] = v;
                    }
                    let s = GramMatrix::new(d, m).expect("symmetric by construction");
                    if s.is_psd() {
                        out.push(s);
                    }
                    let mut p = 0;
                    while p < offs.len() {
                        if offs[p] < radii[p] {
                            offs[p] += 1;
                            break;
                        }
                        offs[p] = -radii[p];
                        p += 1;
                    }
                    if p == offs.len() {
                        break;
                    }
                }
            }
        }
    }
    out
}

fn diagonal_check(src: &SourceTorus, classes: [&EnergyClass; 2]) -> Result<DiagonalCheck> {
    let target = TranscendentalScalar::integer(MILNOR_TRACE);
    let mut check = DiagonalCheck {
        candidates: 0,
        non_diagonal_candidates: 0,
        non_diagonal_in_class: 0,
        members_all_diagonal: classes.iter().all(|c| c.members.keys().all(GramMatrix::is_diagonal)),
    };
    for s in trace_eight_candidates() {
        check.candidates += 1;
        if s.is_diagonal() {
            continue;
        }
        check.non_diagonal_candidates += 1;
        if energy_of_class(&s, src)?.0 == target {
            check.non_diagonal_in_class += 1;
        }
    }
    Ok(check)
}

fn pattern_of(s: &GramMatrix) -> Vec<i64> {
    let mut p = s.diag();
    p.sort_unstable_by(|a, b| b.cmp(a));
    p
}

fn pattern_counts(c1: &EnergyClass, c2: &EnergyClass) -> Vec<PatternCount> {
    let mut by_pattern: BTreeMap<Vec<i64>, PatternCount> = BTreeMap::new();
    for (which, class) in [c1, c2].into_iter().enumerate() {
        for (s, &count) in &class.members {
            let row = by_pattern.entry(pattern_of(s)).or_insert_with(|| PatternCount {
                pattern: pattern_of(s),
                arrangements: 0,
                count_per_arrangement1: 0,
                count_per_arrangement2: 0,
                total1: 0,
                total2: 0,
                equal: false,
            });
            if which == 0 {
                row.arrangements += 1;
                row.count_per_arrangement1 = count;
                row.total1 += count;
            } else {
                row.count_per_arrangement2 = count;
                row.total2 += count;
            }
        }
    }
    let mut rows: Vec<PatternCount> = by_pattern
        .into_values()
        .map(|mut r| {
            r.equal = r.total1 == r.total2;
            r
        })
        .collect();
    rows.sort_by(|a, b| b.pattern.cmp(&a.pattern));
    rows
}

/// Runs the separating construction for two arbitrary 16-dimensional targets.
pub fn milnor_compare(t1: &LatticeBasis, t2: &LatticeBasis, limits: &Limits) -> Result<MilnorReport> {
    let src = milnor_source();
    let trace = TranscendentalScalar::integer(MILNOR_TRACE);
    let bound = MILNOR_TRACE as u64;
    let parts = std::slice::from_ref(&trace);

    let e1 = class_engine(&src, t1, parts, bound, limits)?;
    let class1 = energy_class_with(&src, &e1, t1.is_even(), &trace, bound, limits)?;
    let r1 = e1.representation_number(&GramMatrix::diagonal(&[2, 2, 2, 2]))?;
    drop(e1);
    let e2 = class_engine(&src, t2, parts, bound, limits)?;
    let class2 = energy_class_with(&src, &e2, t2.is_even(), &trace, bound, limits)?;
    let r2 = e2.representation_number(&GramMatrix::diagonal(&[2, 2, 2, 2]))?;
    drop(e2);

    let diagonal_check = diagonal_check(&src, [&class1, &class2])?;
    let patterns = pattern_counts(&class1, &class2);
    let difference = DifferenceBlock {
        multiplicity1: class1.multiplicity,
        multiplicity2: class2.multiplicity,
        difference: class1.multiplicity as i128 - class2.multiplicity as i128,
        r_diag2222_1: r1,
        r_diag2222_2: r2,
        r_difference: r1 as i128 - r2 as i128,
        consistent: false,
    };
    let difference = DifferenceBlock {
        consistent: difference.difference == difference.r_difference,
        ..difference
    };
    let lower_patterns_agree = patterns
        .iter()
        .filter(|p| p.pattern.iter().filter(|&&v| v != 0).count() <= 3)
        .all(|p| p.equal);
    let success = difference.difference != 0
        && difference.consistent
        && lower_patterns_agree
        && diagonal_check.members_all_diagonal
        && diagonal_check.non_diagonal_in_class == 0;
    Ok(MilnorReport {
        source: SourceDescriptor::of(&src),
        target1: t1.label().to_string(),
        target2: t2.label().to_string(),
        bound,
        trace_part: trace.to_string(),
        energy_float: class1.energy_float,
        det_b: src.volume(),
        class1,
        class2,
        diagonal_check,
        patterns,
        difference,
        success,
    })
}

/// `milnor_compare` on `Γ₈⊕Γ₈` and `Γ₁₆`.
pub fn milnor_demo(limits: &Limits) -> Result<MilnorReport> {
    let t1 = parse_lattice("E8+E8")?;
    let t2 = parse_lattice("GAMMA16")?;
    milnor_compare(&t1, &t2, limits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_list_is_complete_and_psd() {
        let all = trace_eight_candidates();
        assert!(all.iter().all(|s| s.trace() == MILNOR_TRACE && s.is_even() && s.is_psd()));
        assert_eq!(all.iter().filter(|s| s.is_diagonal()).count(), 35);
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), all.len());
    }

    #[test]
    fn only_diagonal_candidates_hit_trace_eight() {
        let src = milnor_source();
        let eight = TranscendentalScalar::integer(MILNOR_TRACE);
        for s in trace_eight_candidates() {
            let hit = energy_of_class(&s, &src).unwrap().0 == eight;
            assert_eq!(hit, s.is_diagonal(), "{s}");
        }
    }
}
