//! The acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//! Every criterion is self-contained: examples are rebuilt here rather than
//! imported from library fixtures.

use itertools::Itertools;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use tropom::bigraph::{are_compatible, incompatibility_witness, BiGraph};
use tropom::fms::ValidationMode;
use tropom::lattice::{binomial, simplex_points, LatticePoint};
use tropom::matchfield::{LinkageVariant, MatchingField};
use tropom::topearr::{ArrangementLevel, TopeArrangement};
use tropom::treelink::build_covector;
use tropom::{
    enumerate, extraction, roundtrip_audit, EnumerationKind, EnumerationTask,
    FineMixedSubdivision, GenericTom, ObjectHandle,
};

fn report(number: usize, description: &str, outcome: Result<(), String>) {
    match outcome {
        Ok(()) => println!("criterion {number:02} PASS: {description}"),
        Err(reason) => {
            println!("criterion {number:02} FAIL: {description} — {reason}");
            panic!("criterion {number:02} failed: {reason}");
        }
    }
}

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn enumerated_fms(n: usize, d: usize) -> Vec<FineMixedSubdivision> {
    enumerate(&EnumerationTask::new(EnumerationKind::Fms, n, d))
        .unwrap()
        .objects
        .into_iter()
        .map(|h| match h {
            ObjectHandle::Fms(f) => f,
            other => panic!("expected an fms, got {}", other.kind()),
        })
        .collect()
}

fn spanning_trees(n: usize, d: usize) -> Vec<BiGraph> {
    let full: u64 = (1 << d) - 1;
    let mut rows = vec![1u64; n];
    let mut out = Vec::new();
    'outer: loop {
        if rows.iter().map(|m| m.count_ones() as usize).sum::<usize>() == n + d - 1 {
            let g = BiGraph::from_rows(n, d, rows.clone()).unwrap();
            if g.is_spanning_tree() {
                out.push(g);
            }
        }
        for i in (0..n).rev() {
            if rows[i] < full {
                rows[i] += 1;
                continue 'outer;
            }
            rows[i] = 1;
        }
        break;
    }
    out
}

/// The staircase subdivision of 2Δ³ used throughout the documentation.
fn staircase_cells() -> Vec<BiGraph> {
    [
        [0b1111u64, 0b0001],
        [0b1110, 0b0011],
        [0b1100, 0b0111],
        [0b1000, 0b1111],
    ]
    .into_iter()
    .map(|rows| BiGraph::from_rows(2, 4, rows.to_vec()).unwrap())
    .collect()
}

#[test]
fn criterion_01_documented_example_validates() {
    report(
        1,
        "the documented (2,4) collection passes all validation modes with 4 cells",
        (|| {
            let fms = FineMixedSubdivision::new(2, 4, staircase_cells())
                .map_err(|e| e.to_string())?;
            for mode in [
                ValidationMode::Full,
                ValidationMode::LinkageOnly,
                ValidationMode::CompatOnly,
            ] {
                let r = fms.validate(mode);
                check!(r.verdict, "{mode:?} rejected the example: {}", r.summary());
            }
            let tom = GenericTom::from_tree_types(2, 4, staircase_cells())
                .map_err(|e| e.to_string())?;
            let r = tom.validate().map_err(|e| e.to_string())?;
            check!(r.verdict, "matroid axioms rejected the example: {}", r.summary());
            check!(
                fms.cell_count() == binomial(4, 1),
                "cell count {} != C(4,1)",
                fms.cell_count()
            );
            Ok(())
        })(),
    );
}

#[test]
fn criterion_02_documented_counterexample_is_rejected() {
    report(
        2,
        "type (24,13) is incompatible with the second and third tree-types, witness on ({1,2},{2,3})",
        (|| {
            let bad = BiGraph::from_rows(2, 4, vec![0b1010, 0b0101]).unwrap();
            let cells = staircase_cells();
            for k in [1usize, 2] {
                let compat = are_compatible(&bad, &cells[k]).map_err(|e| e.to_string())?;
                check!(!compat, "claimed compatible with tree-type {}", k + 1);
                let witness = incompatibility_witness(&bad, &cells[k])
                    .map_err(|e| e.to_string())?
                    .ok_or_else(|| format!("no witness against tree-type {}", k + 1))?;
                check!(
                    witness.left == vec![0, 1] && witness.right == vec![1, 2],
                    "witness sets ({:?},{:?}) are not ({{1,2}},{{2,3}})",
                    witness.left,
                    witness.right
                );
                check!(
                    witness.matching_first != witness.matching_second,
                    "witness matchings coincide"
                );
            }
            let mut types = cells.clone();
            types.push(bad);
            let tom = GenericTom::from_types(2, 4, types, false).map_err(|e| e.to_string())?;
            let r = tom.validate().map_err(|e| e.to_string())?;
            check!(!r.verdict, "a collection containing the bad type passed validation");
            Ok(())
        })(),
    );
}

#[test]
fn criterion_03_cell_count_law_and_mode_equivalence() {
    report(
        3,
        "every desk-scale subdivision has C(n+d-2,n-1) cells and the three validation modes coincide",
        (|| {
            for n in 1..=6usize {
                for d in 1..=6usize {
                    if n + d > 7 {
                        continue;
                    }
                    let want = binomial(n + d - 2, n - 1);
                    for fms in enumerated_fms(n, d) {
                        check!(
                            fms.cell_count() == want,
                            "({n},{d}): {} cells, expected {want}",
                            fms.cell_count()
                        );
                        let full = fms.validate(ValidationMode::Full).verdict;
                        let linkage = fms.validate(ValidationMode::LinkageOnly).verdict;
                        let compat = fms.validate(ValidationMode::CompatOnly).verdict;
                        check!(
                            full && linkage && compat,
                            "({n},{d}): enumerated subdivision fails a mode"
                        );
                    }
                }
            }
            for (n, d) in [(2usize, 2usize), (2, 3), (3, 2), (2, 4), (4, 2)] {
                let trees = spanning_trees(n, d);
                let want = binomial(n + d - 2, n - 1);
                for indices in (0..trees.len()).combinations(want) {
                    let cells: Vec<BiGraph> =
                        indices.iter().map(|&k| trees[k].clone()).collect();
                    let fms = FineMixedSubdivision::new(n, d, cells).unwrap();
                    let full = fms.validate(ValidationMode::Full).verdict;
                    let linkage = fms.validate(ValidationMode::LinkageOnly).verdict;
                    let compat = fms.validate(ValidationMode::CompatOnly).verdict;
                    check!(
                        full == linkage && linkage == compat,
                        "({n},{d}): modes disagree on candidate {indices:?}"
                    );
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0x6163_6331);
            for (n, d, rounds) in
                [(3, 3, 600), (2, 5, 600), (5, 2, 600), (3, 4, 400), (4, 3, 400)]
            {
                let trees = spanning_trees(n, d);
                let want = binomial(n + d - 2, n - 1);
                for _ in 0..rounds {
                    let picks = rand::seq::index::sample(&mut rng, trees.len(), want);
                    let cells: Vec<BiGraph> = picks.iter().map(|k| trees[k].clone()).collect();
                    let fms = FineMixedSubdivision::new(n, d, cells).unwrap();
                    let full = fms.validate(ValidationMode::Full).verdict;
                    let linkage = fms.validate(ValidationMode::LinkageOnly).verdict;
                    let compat = fms.validate(ValidationMode::CompatOnly).verdict;
                    check!(
                        full == linkage && linkage == compat,
                        "({n},{d}): modes disagree on a sampled candidate"
                    );
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_04_degree_bijection() {
    report(
        4,
        "reduced right/left degree vectors biject with the lattice points of the two simplices",
        (|| {
            for (n, d) in [(2, 2), (2, 3), (3, 2), (2, 4), (4, 2), (3, 3), (2, 5), (5, 2)] {
                for fms in enumerated_fms(n, d) {
                    let r = fms.check_degree_bijection();
                    check!(r.verdict, "({n},{d}): {}", r.summary());
                    let rd: BTreeSet<Vec<usize>> = fms
                        .cells()
                        .iter()
                        .map(|c| c.right_degrees().iter().map(|&x| x - 1).collect())
                        .collect();
                    let rd_want: BTreeSet<Vec<usize>> = simplex_points(d, n - 1)
                        .into_iter()
                        .map(|p| p.coords().to_vec())
                        .collect();
                    check!(rd == rd_want, "({n},{d}): right-degree set mismatch");
                    let ld: BTreeSet<Vec<usize>> = fms
                        .cells()
                        .iter()
                        .map(|c| c.left_degrees().iter().map(|&x| x - 1).collect())
                        .collect();
                    let ld_want: BTreeSet<Vec<usize>> = simplex_points(n, d - 1)
                        .into_iter()
                        .map(|p| p.coords().to_vec())
                        .collect();
                    check!(ld == ld_want, "({n},{d}): left-degree set mismatch");
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_05_linkage_variant_agreement() {
    report(
        5,
        "the five linkage formulations agree exhaustively at (3,2),(4,2),(4,3) and on 1000 random larger fields",
        (|| {
            for (np, d) in [(3usize, 2usize), (4, 2), (4, 3)] {
                let outcome =
                    enumerate(&EnumerationTask::new(EnumerationKind::MatchingField, np, d))
                        .map_err(|e| e.to_string())?;
                check!(outcome.complete, "({np},{d}): enumeration incomplete");
                for handle in outcome.objects {
                    let field = match handle {
                        ObjectHandle::Field(f) => f,
                        other => return Err(format!("unexpected {}", other.kind())),
                    };
                    let verdicts: Vec<bool> = LinkageVariant::ALL
                        .iter()
                        .map(|&v| field.check_linkage(v).verdict)
                        .collect();
                    check!(
                        verdicts.iter().all(|&v| v == verdicts[0]),
                        "({np},{d}): variants disagree: {verdicts:?}"
                    );
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0x6163_6335);
            let mut total = 0usize;
            for (np, d, rounds) in [(5usize, 2usize, 334usize), (6, 2, 333), (5, 3, 333)] {
                for round in 0..rounds {
                    let field = if round % 10 == 0 {
                        let mut pi: Vec<usize> = (0..np).collect();
                        pi.shuffle(&mut rng);
                        MatchingField::from_images(np, d, false, |elems| {
                            let mut ranked: Vec<usize> =
                                elems.iter().map(|&i| pi[i]).collect();
                            ranked.sort_unstable();
                            elems
                                .iter()
                                .map(|&i| ranked.iter().position(|&x| x == pi[i]).unwrap())
                                .collect()
                        })
                        .unwrap()
                    } else {
                        MatchingField::from_images(np, d, false, |_| {
                            let mut images: Vec<usize> = (0..d).collect();
                            images.shuffle(&mut rng);
                            images
                        })
                        .unwrap()
                    };
                    let verdicts: Vec<bool> = LinkageVariant::ALL
                        .iter()
                        .map(|&v| field.check_linkage(v).verdict)
                        .collect();
                    check!(
                        verdicts.iter().all(|&v| v == verdicts[0]),
                        "({np},{d}): variants disagree on a random field"
                    );
                    total += 1;
                }
            }
            check!(total == 1000, "sampled {total} fields, wanted 1000");
            Ok(())
        })(),
    );
}

#[test]
fn criterion_06_roundtrips_and_extraction_injectivity() {
    report(
        6,
        "conversion round trips are the identity and extraction is injective on every enumerated family",
        (|| {
            for (n, d) in [(2usize, 2usize), (2, 3), (3, 2), (3, 3), (2, 4)] {
                let family = enumerated_fms(n, d);
                let mut images = BTreeSet::new();
                for fms in &family {
                    let audit = roundtrip_audit(&ObjectHandle::Fms(fms.clone()));
                    check!(audit.verdict, "({n},{d}): {}", audit.summary());
                    let tom = GenericTom::from_tree_types(n, d, fms.cells().to_vec())
                        .map_err(|e| e.to_string())?;
                    let stack = extraction(&tom).map_err(|e| e.to_string())?;
                    images.insert(tropom::json::handle_to_string(
                        &ObjectHandle::Stack(stack),
                        false,
                    ));
                }
                check!(
                    images.len() == family.len(),
                    "({n},{d}): extraction collided ({} images from {} subdivisions)",
                    images.len(),
                    family.len()
                );
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_07_census_equalities() {
    report(
        7,
        "#trianguloids = #subdivisions and #pre-trianguloids = #extended arrangements at every size, strict gap at (2,3)",
        (|| {
            let count = |kind, n, d| {
                enumerate(&EnumerationTask::new(kind, n, d))
                    .map(|o| o.objects.len())
                    .map_err(|e| e.to_string())
            };
            for (n, d) in [(2usize, 2usize), (2, 3), (3, 2), (2, 4), (3, 3)] {
                let fms = count(EnumerationKind::Fms, n, d)?;
                let tri = count(EnumerationKind::Trianguloid, n, d)?;
                let pre = count(EnumerationKind::PreTrianguloid, n, d)?;
                let eta = count(EnumerationKind::TopeArrangement, n, d)?;
                check!(tri == fms, "({n},{d}): {tri} trianguloids != {fms} subdivisions");
                check!(pre == eta, "({n},{d}): {pre} pre-trianguloids != {eta} arrangements");
            }
            let pre23 = count(EnumerationKind::PreTrianguloid, 2, 3)?;
            let tri23 = count(EnumerationKind::Trianguloid, 2, 3)?;
            check!(
                pre23 > tri23,
                "(2,3): expected a strict gap, got {pre23} vs {tri23}"
            );
            Ok(())
        })(),
    );
}

#[test]
fn criterion_08_oracle_counts() {
    report(
        8,
        "oracle counts: fms(2,2)=2, fms(2,3)=6, fms(1,d)=1",
        (|| {
            check!(enumerated_fms(2, 2).len() == 2, "fms(2,2) != 2");
            check!(enumerated_fms(2, 3).len() == 6, "fms(2,3) != 6");
            for d in 1..=6 {
                let got = enumerated_fms(1, d).len();
                check!(got == 1, "fms(1,{d}) = {got}, expected 1");
            }
            Ok(())
        })(),
    );
}

/// All topes of K_{n,d} whose right degree vector equals `u`.
fn topes_at(n: usize, d: usize, u: &LatticePoint) -> Vec<BiGraph> {
    let mut maps: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..n {
        maps = maps
            .into_iter()
            .flat_map(|m| {
                (0..d).map(move |j| {
                    let mut next = m.clone();
                    next.push(j);
                    next
                })
            })
            .collect();
    }
    maps.into_iter()
        .map(|m| BiGraph::from_map(d, &m).unwrap())
        .filter(|g| g.right_degrees() == u.coords())
        .collect()
}

#[test]
fn criterion_09_axiom_ladder() {
    report(
        9,
        "sector = Δ-linkage, ∇-acyclic ⇒ sector, and hexagon = all-w ∇-tree under pre-trianguloid, on every positional tope map",
        (|| {
            for (n, d) in [(2usize, 3usize), (3, 2)] {
                let mut candidates: Vec<Vec<(LatticePoint, BiGraph)>> = vec![Vec::new()];
                for v in simplex_points(d, n) {
                    let choices = topes_at(n, d, &v);
                    candidates = candidates
                        .into_iter()
                        .flat_map(|prefix| {
                            let v = v.clone();
                            choices.iter().map(move |t| {
                                let mut next = prefix.clone();
                                next.push((v.clone(), t.clone()));
                                next
                            })
                        })
                        .collect();
                }
                for entries in candidates {
                    let arr = TopeArrangement::new(n, d, entries).unwrap();
                    let compat = arr.validate(ArrangementLevel::TopeArrangement).verdict;
                    let r = arr.validate(ArrangementLevel::Trianguloid);
                    let sector = r.first("arrangement.sector").is_none();
                    let hexagon = r.first("arrangement.hexagon").is_none();
                    let delta = arr.delta_linkage_report().verdict;
                    check!(
                        sector == delta,
                        "({n},{d}): sector {sector} but Δ-linkage {delta}"
                    );
                    let nabla_acyclic = simplex_points(d, n + 1).iter().all(|w| {
                        let mut union = BiGraph::empty(n, d).unwrap();
                        for j in w.support() {
                            let below = w.minus_unit(j).unwrap();
                            union = union.union(arr.tope(&below).unwrap()).unwrap();
                        }
                        union.is_forest()
                    });
                    if nabla_acyclic {
                        check!(sector, "({n},{d}): ∇-acyclic map violates sector");
                    }
                    if compat && sector {
                        let nabla_tree = arr.nabla_report().verdict;
                        check!(
                            hexagon == nabla_tree,
                            "({n},{d}): hexagon {hexagon} but ∇-tree {nabla_tree}"
                        );
                    }
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_10_tree_linkage_covector_suite() {
    report(
        10,
        "tree-linkage covector invariants and path labels hold for every subdivision and anchor",
        (|| {
            for (n, d) in [(2usize, 2usize), (2, 3), (3, 2), (2, 4), (4, 2), (3, 3)] {
                for fms in enumerated_fms(n, d) {
                    for t in simplex_points(d, n - 2) {
                        let covector =
                            build_covector(&fms, &t).map_err(|e| format!("({n},{d}) at {t}: {e}"))?;
                        let invariants = covector.check_invariants();
                        check!(
                            invariants.verdict,
                            "({n},{d}) at {t}: {}",
                            invariants.summary()
                        );
                        let labels = covector.check_path_labels();
                        check!(labels.verdict, "({n},{d}) at {t}: {}", labels.summary());
                    }
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_11_spread_out_simplices() {
    report(
        11,
        "at most m unmixed cells over every scaled sub-simplex, and the large tree union has right degrees s+m",
        (|| {
            for (n, d) in [(2usize, 2usize), (2, 3), (3, 2), (2, 4), (4, 2), (3, 3)] {
                for fms in enumerated_fms(n, d) {
                    let arr = TopeArrangement::from_fms(&fms).map_err(|e| e.to_string())?;
                    for m in 1..=n {
                        for s in simplex_points(d, n - m) {
                            let unmixed =
                                fms.spread_out_count(&s, m).map_err(|e| e.to_string())?;
                            check!(
                                unmixed <= m,
                                "({n},{d}) at {s}, m={m}: {unmixed} unmixed cells"
                            );
                            let union =
                                arr.large_tree_union(&s, m).map_err(|e| e.to_string())?;
                            let want: Vec<usize> =
                                s.coords().iter().map(|&c| c + m).collect();
                            check!(
                                union.right_degrees() == want,
                                "({n},{d}) at {s}, m={m}: union degrees {:?}",
                                union.right_degrees()
                            );
                        }
                    }
                }
            }
            Ok(())
        })(),
    );
}
