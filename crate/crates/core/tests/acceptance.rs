//! End-to-end acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::{box_vectors, e8e8_roots, gamma16_roots, orthogonal_root_quadruples, Oracle};
use flat_tori::harmonic::milnor_source;
use flat_tori::{
    cholesky_upper, coefficient_table, compare_theta, count_by_norm, parse_lattice, representation_number,
    short_vectors, GramMatrix, Limits, ThetaEngine,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// r(diag(2,2,2,2)) for E8+E8 and GAMMA16, confirmed by the root-quadruple oracle.
const R_DIAG2222_E8E8: u64 = 9_064_742_400;
const R_DIAG2222_GAMMA16: u64 = 8_858_304_000;

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn targets() -> (flat_tori::LatticeBasis, flat_tori::LatticeBasis) {
    (parse_lattice("E8+E8").unwrap(), parse_lattice("GAMMA16").unwrap())
}

fn criterion_1() -> Outcome {
    for spec in ["E8", "GAMMA16", "E8+E8"] {
        let l = parse_lattice(spec).map_err(|e| e.to_string())?;
        let disc = l.discriminant().map_err(|e| e.to_string())?;
        check(l.is_integral(), format!("{spec} not integral"))?;
        check(l.is_even(), format!("{spec} not even"))?;
        check(disc == 1, format!("{spec} discriminant {disc}"))?;
    }
    Ok("E8, GAMMA16, E8+E8 integral, even, discriminant 1".into())
}

fn criterion_2() -> Outcome {
    let limits = Limits::default();
    let (a, b) = targets();
    let ca = count_by_norm(&a, 6, &limits).map_err(|e| e.to_string())?;
    let cb = count_by_norm(&b, 6, &limits).map_err(|e| e.to_string())?;
    check(ca == cb, format!("{ca:?} != {cb:?}"))?;
    check(ca.get(&2) == Some(&480), format!("norm-2 count {:?}", ca.get(&2)))?;
    Ok(format!("count_by_norm up to 6 equal: {ca:?}"))
}

fn all_two_diagonal(d: usize) -> Vec<GramMatrix> {
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    let mut off = vec![-2i64; pairs.len()];
    loop {
        let mut entries = vec![0; d * d];
        for i in 0..d {
            entries[i * d + i] = 2;
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            entries[i * d + j] = off[k];
            entries[j * d + i] = off[k];
        }
        let t = GramMatrix::new(d, entries).unwrap();
        if t.is_psd() {
            out.push(t);
        }
        let mut k = 0;
        while k < off.len() && off[k] == 2 {
            off[k] = -2;
            k += 1;
        }
        if k == off.len() {
            return out;
        }
        off[k] += 1;
    }
}

fn criterion_3() -> Outcome {
    let limits = Limits::default();
    let (a, b) = targets();
    let mut ts: Vec<GramMatrix> = all_two_diagonal(2);
    ts.extend(all_two_diagonal(3));
    for d1 in [2i64, 4] {
        for d2 in [2i64, 4] {
            let r = ((d1 * d2) as f64).sqrt() as i64;
            for x in -r..=r {
                let t = GramMatrix::new(2, vec![d1, x, x, d2]).unwrap();
                if t.is_psd() {
                    ts.push(t);
                }
            }
        }
    }
    let materialize = [2u64, 4].into_iter().collect();
    let ea = ThetaEngine::new(&a, &materialize, 4, limits).map_err(|e| e.to_string())?;
    let eb = ThetaEngine::new(&b, &materialize, 4, limits).map_err(|e| e.to_string())?;
    for t in &ts {
        let (x, y) = (ea.representation_number(t).unwrap(), eb.representation_number(t).unwrap());
        check(x == y, format!("r({t}): {x} vs {y}"))?;
        check(x > 0, format!("r({t}) = 0 is not realized"))?;
    }
    for (d, bound) in [(2, 4), (3, 2)] {
        let diffs = compare_theta(&a, &b, d, bound, &limits).map_err(|e| e.to_string())?;
        check(diffs.is_empty(), format!("d={d} B={bound}: {} differences", diffs.len()))?;
    }
    Ok(format!(
        "{} single coefficients equal; full tables d=2 B=4 and d=3 B=2 equal",
        ts.len()
    ))
}

fn halves_of_norm(l: &flat_tori::LatticeBasis, norm: u64) -> Vec<Vec<i64>> {
    let table = short_vectors(l, norm, &Limits::default()).unwrap();
    let mut out: Vec<Vec<i64>> =
        table.group(norm).iter().map(|v| v.halves.iter().map(|&h| h as i64).collect()).collect();
    out.sort();
    out
}

fn criterion_4() -> Outcome {
    let limits = Limits::default();
    let (a, b) = targets();
    let s = GramMatrix::diagonal(&[2, 2, 2, 2]);
    let ra = representation_number(&a, &s, &limits).map_err(|e| e.to_string())?;
    let rb = representation_number(&b, &s, &limits).map_err(|e| e.to_string())?;
    let roots_a = halves_of_norm(&a, 2);
    let roots_b = halves_of_norm(&b, 2);
    check(roots_a == e8e8_roots(), "E8+E8 roots differ from the explicit construction")?;
    check(roots_b == gamma16_roots(), "GAMMA16 roots differ from the explicit construction")?;
    let oa = orthogonal_root_quadruples(&roots_a);
    let ob = orthogonal_root_quadruples(&roots_b);
    check(ra == oa, format!("E8+E8 engine {ra} vs oracle {oa}"))?;
    check(rb == ob, format!("GAMMA16 engine {rb} vs oracle {ob}"))?;
    check(ra == R_DIAG2222_E8E8, format!("E8+E8 {ra} vs frozen {R_DIAG2222_E8E8}"))?;
    check(rb == R_DIAG2222_GAMMA16, format!("GAMMA16 {rb} vs frozen {R_DIAG2222_GAMMA16}"))?;
    check(ra != rb, "values coincide")?;
    Ok(format!("r(diag(2,2,2,2)) = {ra} vs {rb}, difference {}", ra as i128 - rb as i128))
}

fn criterion_5() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_flat-tori"))
        .args(["--no-timestamp", "--format", "json", "milnor-demo"])
        .env_remove("FLAT_TORI_OUT")
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.code() == Some(0), format!("exit status {:?}", out.status.code()))?;
    let v: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let check_block = &v["diagonal_check"];
    check(check_block["members_all_diagonal"] == true, "non-diagonal member")?;
    check(check_block["non_diagonal_in_class"] == 0, "non-diagonal S in the class")?;
    for class in [&v["class1"], &v["class2"]] {
        for m in class["members"].as_array().ok_or("members missing")? {
            let s: Vec<i64> = m["S"].as_str().unwrap().split([',', ';']).map(|x| x.parse().unwrap()).collect();
            check(
                (0..4).all(|i| (0..4).all(|j| i == j || s[i * 4 + j] == 0)),
                format!("member {} is not diagonal", m["S"]),
            )?;
        }
    }
    let mut patterns = 0;
    for p in v["patterns"].as_array().ok_or("patterns missing")? {
        let is_2222 = p["pattern"] == serde_json::json!([2, 2, 2, 2]);
        check(p["equal"] == !is_2222, format!("pattern {} equal = {}", p["pattern"], p["equal"]))?;
        patterns += 1;
    }
    check(patterns == 5, format!("{patterns} patterns"))?;
    let diff = v["difference"]["difference"].as_i64().ok_or("difference missing")?;
    let expected = R_DIAG2222_E8E8 as i64 - R_DIAG2222_GAMMA16 as i64;
    check(diff == expected, format!("difference {diff} vs criterion-4 difference {expected}"))?;
    Ok(format!(
        "exit 0; class multiplicities {} vs {}; difference {diff}",
        v["difference"]["multiplicity1"], v["difference"]["multiplicity2"]
    ))
}

fn random_unimodular(rng: &mut ChaCha8Rng, d: usize) -> Vec<i64> {
    loop {
        let u: Vec<i64> = (0..d * d).map(|_| rng.gen_range(-2..=2)).collect();
        let det = match d {
            2 => u[0] * u[3] - u[1] * u[2],
            _ => {
                u[0] * (u[4] * u[8] - u[5] * u[7]) - u[1] * (u[3] * u[8] - u[5] * u[6])
                    + u[2] * (u[3] * u[7] - u[4] * u[6])
            }
        };
        if det.abs() == 1 {
            return u;
        }
    }
}

fn criterion_6() -> Outcome {
    let limits = Limits::default();
    let oracles = [
        Oracle::Z(3),
        Oracle::D(4),
        Oracle::D(8),
        Oracle::DPlus(8),
        Oracle::Sum(Box::new(Oracle::DPlus(4)), Box::new(Oracle::D(4))),
    ];
    let mut vectors = 0usize;
    for oracle in &oracles {
        let l = oracle.lattice();
        let table = short_vectors(&l, 4, &limits).map_err(|e| e.to_string())?;
        let mut got: BTreeMap<u64, Vec<Vec<i64>>> = BTreeMap::new();
        for (&n, vs) in table.groups() {
            let mut list: Vec<Vec<i64>> = vs.iter().map(|v| v.halves.iter().map(|&h| h as i64).collect()).collect();
            list.sort();
            for v in &list {
                let neg: Vec<i64> = v.iter().map(|h| -h).collect();
                check(list.binary_search(&neg).is_ok(), format!("{}: negation of {v:?} missing", l.label()))?;
            }
            got.insert(n, list);
        }
        check(got == box_vectors(oracle, 4), format!("{}: box oracle mismatch", l.label()))?;
        vectors += table.len();
    }

    for (spec, d, bound) in [("D:4", 2, 4), ("E8", 2, 2), ("E8", 3, 2), ("Z:3", 3, 2)] {
        let l = parse_lattice(spec).unwrap();
        let n: u128 = count_by_norm(&l, bound, &limits).unwrap().values().map(|&c| c as u128).sum();
        let total = coefficient_table(&l, d, bound, &limits).map_err(|e| e.to_string())?.total();
        check(total == n.pow(d as u32), format!("{spec} d={d}: Σ = {total}, N^d = {}", n.pow(d as u32)))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let d4 = parse_lattice("D:4").unwrap();
    let mut realized: Vec<(GramMatrix, u64)> = Vec::new();
    for d in 2..=3 {
        realized.extend(coefficient_table(&d4, d, 4, &limits).unwrap().entries);
    }
    let mut gl = 0;
    while gl < 50 {
        let (t, c) = &realized[rng.gen_range(0..realized.len())];
        let image = t.congruent(&random_unimodular(&mut rng, t.dim())).unwrap();
        if image.diag().iter().any(|&x| x > 12) {
            continue;
        }
        let r = representation_number(&d4, &image, &limits).map_err(|e| e.to_string())?;
        check(r == *c, format!("r(UᵗTU) = {r} but r(T) = {c} for T = {t}"))?;
        gl += 1;
    }

    let e8 = parse_lattice("E8").unwrap();
    let table = coefficient_table(&e8, 2, 4, &limits).unwrap();
    let keys: Vec<(&GramMatrix, &u64)> = table.entries.iter().collect();
    for _ in 0..20 {
        let (t, &c) = keys[rng.gen_range(0..keys.len())];
        let r = representation_number(&e8, &t.direct_sum(&GramMatrix::zero(1)), &limits).unwrap();
        check(r == c, format!("r(T ⊕ 0) = {r} but r(T) = {c} for T = {t}"))?;
    }
    Ok(format!(
        "negation closure and box oracle on {} lattices ({vectors} vectors); Σ = N^d; 50 GL pairs; 20 degree reductions",
        oracles.len()
    ))
}

fn criterion_7() -> Outcome {
    let src = milnor_source();
    let m = src.dual_gram_f64();
    let b = src.basis().ok_or("no basis")?.to_vec();
    let mut btb = vec![0.0; 16];
    for i in 0..4 {
        for j in 0..4 {
            btb[i * 4 + j] = (0..4).map(|k| b[k * 4 + i] * b[k * 4 + j]).sum();
        }
    }
    let r = cholesky_upper(&btb, 4).map_err(|e| e.to_string())?;
    let recon = r.reconstruction_error(&btb);
    check(recon <= 1e-9, format!("reconstruction error {recon:e}"))?;
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let p: f64 = (0..4).map(|k| btb[i * 4 + k] * m[k * 4 + j]).sum();
            worst = worst.max((p - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    check(worst <= 1e-9, format!("|bᵗb·M − I| = {worst:e}"))?;
    for i in 0..4 {
        for j in 0..i {
            check(b[i * 4 + j] == 0.0, "b is not upper triangular")?;
        }
    }
    Ok(format!("reconstruction {recon:.1e}, |bᵗb·M − I| {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 7] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {n} PASS ({secs:.1}s) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n} FAIL ({secs:.1}s) {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
