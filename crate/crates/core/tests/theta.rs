mod common;

use std::collections::BTreeMap;

use common::{box_vectors, e8_roots, naive_tuple_count, small_oracles, Oracle};
use flat_tori::{
    coefficient_table, compare_theta, count_by_norm, parse_lattice, representation_number, GramMatrix, Limits,
    ThetaEngine,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn m(rows: &[&[i64]]) -> GramMatrix {
    GramMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn small_examples() {
    let limits = Limits::default();
    for spec in ["E8", "GAMMA16", "E8+E8"] {
        let l = parse_lattice(spec).unwrap();
        assert_eq!(representation_number(&l, &m(&[&[0]]), &limits).unwrap(), 1);
    }
    let z2 = parse_lattice("Z:2").unwrap();
    assert_eq!(representation_number(&z2, &GramMatrix::diagonal(&[1, 1]), &limits).unwrap(), 8);
    let e8 = parse_lattice("E8").unwrap();
    assert_eq!(representation_number(&e8, &m(&[&[2]]), &limits).unwrap(), 240);

    let table = coefficient_table(&parse_lattice("Z:1").unwrap(), 1, 4, &limits).unwrap();
    let expected: BTreeMap<GramMatrix, u64> = [(m(&[&[0]]), 1), (m(&[&[1]]), 2), (m(&[&[4]]), 2)].into_iter().collect();
    assert_eq!(table.entries, expected);
}

#[test]
fn e8_degree_two_table_against_root_pairs() {
    let table = coefficient_table(&parse_lattice("E8").unwrap(), 2, 2, &Limits::default()).unwrap();
    let roots = e8_roots();
    let mut pairs: BTreeMap<i64, u64> = BTreeMap::new();
    for u in &roots {
        for v in &roots {
            let q: i64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
            *pairs.entry(q / 4).or_default() += 1;
        }
    }
    for t in table.entries.keys() {
        assert!(t.diag().iter().all(|&x| x == 0 || x == 2), "{t}");
        assert!(t.is_even() && t.is_psd());
    }
    for (ip, count) in pairs {
        assert_eq!(table.get(&m(&[&[2, ip], &[ip, 2]])), count, "<u,v> = {ip}");
    }
    assert_eq!(table.get(&GramMatrix::diagonal(&[2, 2])), 240 * 126);
}

#[test]
fn agrees_with_naive_tuple_enumeration() {
    let limits = Limits::default();
    for oracle in small_oracles().into_iter().filter(|o| o.dim() <= 4) {
        let lattice = oracle.lattice();
        let boxed = box_vectors(&oracle, 4);
        let all: Vec<Vec<i64>> = boxed.values().flatten().cloned().collect();
        for d in 1..=2usize {
            let table = coefficient_table(&lattice, d, 4, &limits).unwrap();
            let mut naive: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
            if d == 1 {
                for v in &all {
                    let q: i64 = v.iter().map(|h| h * h).sum::<i64>() / 4;
                    *naive.entry(vec![q]).or_default() += 1;
                }
            } else {
                for u in &all {
                    for v in &all {
                        let ip = |a: &[i64], b: &[i64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<i64>() / 4;
                        let (a, b, c) = (ip(u, u), ip(u, v), ip(v, v));
                        *naive.entry(vec![a, b, b, c]).or_default() += 1;
                    }
                }
            }
            let got: BTreeMap<Vec<i64>, u64> = table.entries.iter().map(|(t, &c)| (t.entries().to_vec(), c)).collect();
            assert_eq!(got, naive, "{} d={d}", lattice.label());
            for (t, &c) in table.entries.iter().take(40) {
                assert_eq!(representation_number(&lattice, t, &limits).unwrap(), c, "{} {t}", lattice.label());
            }
        }
    }
}

#[test]
fn single_coefficients_against_naive_triples() {
    let oracle = Oracle::D(4);
    let lattice = oracle.lattice();
    let boxed = box_vectors(&oracle, 4);
    let engine = ThetaEngine::new(&lattice, &[2, 4].into_iter().collect(), 4, Limits::default()).unwrap();
    for t in [
        m(&[&[2, 1, 0], &[1, 2, 1], &[0, 1, 2]]),
        m(&[&[4, 2, 0], &[2, 2, -1], &[0, -1, 2]]),
        m(&[&[4, 0, 2], &[0, 4, 2], &[2, 2, 4]]),
        GramMatrix::diagonal(&[2, 2, 2]),
        GramMatrix::diagonal(&[4, 2, 0]),
    ] {
        let groups: Vec<&[Vec<i64>]> = t.diag().iter().map(|n| boxed[&(*n as u64)].as_slice()).collect();
        let naive = naive_tuple_count(&groups, t.entries());
        assert_eq!(engine.representation_number(&t).unwrap(), naive, "{t}");
    }
}

#[test]
fn table_totals_partition_all_tuples() {
    let limits = Limits::default();
    for (spec, d, bound) in [("Z:2", 3, 2), ("D:4", 2, 4), ("D+:4", 3, 2), ("E8", 2, 2), ("E8", 3, 2)] {
        let l = parse_lattice(spec).unwrap();
        let n: u128 = count_by_norm(&l, bound, &limits).unwrap().values().map(|&c| c as u128).sum();
        let table = coefficient_table(&l, d, bound, &limits).unwrap();
        assert_eq!(table.total(), n.pow(d as u32), "{spec} d={d} B={bound}");
    }
}

#[test]
fn permutation_symmetry() {
    let limits = Limits::default();
    let l = parse_lattice("D:4").unwrap();
    let table = coefficient_table(&l, 3, 2, &limits).unwrap();
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for (t, &c) in &table.entries {
        for p in &perms {
            assert_eq!(representation_number(&l, &t.permuted(p), &limits).unwrap(), c, "{t} {p:?}");
        }
    }
    let e8 = parse_lattice("E8").unwrap();
    let engine = ThetaEngine::new(&e8, &[2, 4].into_iter().collect(), 4, limits).unwrap();
    let t = m(&[&[4, 1, 0, 2], &[1, 2, 1, 0], &[0, 1, 2, -1], &[2, 0, -1, 4]]);
    let base = engine.representation_number(&t).unwrap();
    assert!(base > 0);
    for p in permutations(4) {
        assert_eq!(engine.representation_number(&t.permuted(&p)).unwrap(), base, "{p:?}");
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn det(u: &[i64], d: usize) -> i64 {
    match d {
        1 => u[0],
        2 => u[0] * u[3] - u[1] * u[2],
        3 => {
            u[0] * (u[4] * u[8] - u[5] * u[7]) - u[1] * (u[3] * u[8] - u[5] * u[6]) + u[2] * (u[3] * u[7] - u[4] * u[6])
        }
        _ => unreachable!(),
    }
}

fn random_unimodular(rng: &mut ChaCha8Rng, d: usize) -> Vec<i64> {
    loop {
        let u: Vec<i64> = (0..d * d).map(|_| rng.gen_range(-2..=2)).collect();
        if det(&u, d).abs() == 1 {
            return u;
        }
    }
}

#[test]
fn invariance_under_unimodular_change_of_basis() {
    let limits = Limits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let lattices = [parse_lattice("D:4").unwrap(), parse_lattice("Z:3").unwrap()];
    let tables: Vec<Vec<(GramMatrix, u64)>> = lattices
        .iter()
        .map(|l| {
            let mut realized = Vec::new();
            for d in 2..=3 {
                let t = coefficient_table(l, d, 4, &limits).unwrap();
                realized.extend(t.entries.into_iter().filter(|(t, _)| t.det().unwrap() != 0 || d == 2));
            }
            realized
        })
        .collect();
    let mut checked = 0;
    while checked < 50 {
        let which = rng.gen_range(0..lattices.len());
        let (t, c) = &tables[which][rng.gen_range(0..tables[which].len())];
        let u = random_unimodular(&mut rng, t.dim());
        let image = t.congruent(&u).unwrap();
        if image.diag().iter().any(|&x| x > 12) {
            continue;
        }
        assert_eq!(
            representation_number(&lattices[which], &image, &limits).unwrap(),
            *c,
            "{} T={t} U={u:?}",
            lattices[which].label()
        );
        checked += 1;
    }
}

#[test]
fn degree_reduction() {
    let limits = Limits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let l = parse_lattice("D+:8").unwrap();
    let table = coefficient_table(&l, 2, 4, &limits).unwrap();
    let keys: Vec<(&GramMatrix, &u64)> = table.entries.iter().collect();
    for _ in 0..20 {
        let (t, &c) = keys[rng.gen_range(0..keys.len())];
        let padded = t.direct_sum(&GramMatrix::zero(1));
        assert_eq!(representation_number(&l, &padded, &limits).unwrap(), c, "{t}");
        let front = GramMatrix::zero(1).direct_sum(t);
        assert_eq!(representation_number(&l, &front, &limits).unwrap(), c, "{t}");
    }
}

#[test]
fn indefinite_matrices_have_no_representations() {
    let limits = Limits::default();
    let l = parse_lattice("E8").unwrap();
    for t in [m(&[&[2, 3], &[3, 2]]), m(&[&[2, 0], &[0, -2]]), m(&[&[-2]]), m(&[&[2, 2, 0], &[2, 2, 1], &[0, 1, 2]])] {
        assert_eq!(representation_number(&l, &t, &limits).unwrap(), 0, "{t}");
    }
    assert!(GramMatrix::new(2, vec![2, 1, 0, 2]).is_err());
}

#[test]
fn degree_one_slice_is_equal() {
    let limits = Limits::default();
    let a = parse_lattice("E8+E8").unwrap();
    let b = parse_lattice("GAMMA16").unwrap();
    assert!(compare_theta(&a, &b, 1, 6, &limits).unwrap().is_empty());
}

#[test]
fn identical_inputs_compare_equal() {
    let limits = Limits::default();
    for (spec, d, bound) in [("D:4", 2, 4), ("E8", 3, 2), ("Z:2", 1, 9)] {
        let l = parse_lattice(spec).unwrap();
        assert!(compare_theta(&l, &l, d, bound, &limits).unwrap().is_empty(), "{spec}");
    }
}

#[test]
fn different_lattices_list_every_mismatch_in_order() {
    let limits = Limits::default();
    let diffs = compare_theta(&parse_lattice("Z:2").unwrap(), &parse_lattice("D:2").unwrap(), 2, 2, &limits).unwrap();
    assert!(diffs.iter().any(|d| d.t == GramMatrix::diagonal(&[1, 1]) && d.count1 == 8 && d.count2 == 0));
    let keys: Vec<(i64, Vec<i64>)> = diffs.iter().map(|d| (d.t.trace(), d.t.entries().to_vec())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(diffs.iter().all(|d| d.count1 != d.count2));
}

#[test]
fn table_respects_the_vector_cap() {
    let limits = Limits::default().with_vector_cap(100);
    assert!(matches!(
        coefficient_table(&parse_lattice("E8").unwrap(), 2, 2, &limits),
        Err(flat_tori::Error::CapExceeded { .. })
    ));
}

#[test]
fn large_two_slot_coefficients_against_plain_pair_counts() {
    let limits = Limits::default();
    let e8 = parse_lattice("E8").unwrap();
    let table = flat_tori::short_vectors(&e8, 6, &limits).unwrap();
    let halves = |n: u64| -> Vec<Vec<i64>> {
        table.group(n).iter().map(|v| v.halves.iter().map(|&h| h as i64).collect()).collect()
    };
    let (fours, sixes) = (halves(4), halves(6));
    let mut plain: BTreeMap<i64, u64> = BTreeMap::new();
    for u in &sixes {
        for v in &fours {
            let q: i64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
            *plain.entry(q / 4).or_default() += 1;
        }
    }
    let engine = ThetaEngine::new(&e8, &[4, 6].into_iter().collect(), 6, limits).unwrap();
    for x in -5..=5 {
        let expected = plain.get(&x).copied().unwrap_or(0);
        assert_eq!(engine.representation_number(&m(&[&[6, x], &[x, 4]])).unwrap(), expected, "x = {x}");
        assert_eq!(engine.representation_number(&m(&[&[4, x], &[x, 6]])).unwrap(), expected, "x = {x}");
    }
}
