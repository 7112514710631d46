//! The five linkage formulations must issue identical verdicts, and tope-field
//! amalgamation must not depend on the order the column steps are taken in.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use tropom::lattice::LatticePoint;
use tropom::matchfield::{LinkageVariant, MatchingField};
use tropom::{enumerate, EnumerationKind, EnumerationTask, ObjectHandle};

fn all_fields(n_prime: usize, d: usize) -> Vec<MatchingField> {
    let outcome = enumerate(&EnumerationTask::new(
        EnumerationKind::MatchingField,
        n_prime,
        d,
    ))
    .unwrap();
    assert!(outcome.complete);
    outcome
        .objects
        .into_iter()
        .map(|h| match h {
            ObjectHandle::Field(f) => f,
            other => panic!("expected a field, got {}", other.kind()),
        })
        .collect()
}

fn five_verdicts(field: &MatchingField) -> [bool; 5] {
    LinkageVariant::ALL.map(|v| field.check_linkage(v).verdict)
}

#[test]
fn linkage_variants_agree_on_every_field_exhaustively() {
    for (n_prime, d) in [(3, 2), (4, 2), (4, 3)] {
        let fields = all_fields(n_prime, d);
        let mut linked = 0usize;
        for field in &fields {
            let verdicts = five_verdicts(field);
            assert!(
                verdicts.iter().all(|&v| v == verdicts[0]),
                "({n_prime},{d}): variants disagree: {verdicts:?}"
            );
            linked += usize::from(verdicts[0]);
        }
        // Dual route: the dedicated linkage enumeration must find the same set.
        let direct = enumerate(&EnumerationTask::new(
            EnumerationKind::LinkageMatchingField,
            n_prime,
            d,
        ))
        .unwrap();
        assert_eq!(direct.objects.len(), linked, "({n_prime},{d})");
    }
}

fn random_field(n_prime: usize, d: usize, rng: &mut ChaCha8Rng) -> MatchingField {
    MatchingField::from_images(n_prime, d, false, |_elems| {
        let mut images: Vec<usize> = (0..d).collect();
        images.shuffle(rng);
        images
    })
    .unwrap()
}

/// A relabeling of the order-preserving field: left vertices permuted by
/// `pi`, columns by `rho`. Relabeling preserves linkage, so these populate
/// the linked side of the sample at sizes where uniform draws almost never
/// land on a linked field.
fn relabeled_monotone(n_prime: usize, d: usize, rng: &mut ChaCha8Rng) -> MatchingField {
    let mut pi: Vec<usize> = (0..n_prime).collect();
    pi.shuffle(rng);
    let mut rho: Vec<usize> = (0..d).collect();
    rho.shuffle(rng);
    MatchingField::from_images(n_prime, d, false, |elems| {
        let mut ranked: Vec<usize> = elems.iter().map(|&i| pi[i]).collect();
        ranked.sort_unstable();
        elems
            .iter()
            .map(|&i| rho[ranked.iter().position(|&x| x == pi[i]).unwrap()])
            .collect()
    })
    .unwrap()
}

#[test]
fn linkage_variants_agree_on_random_fields_beyond_the_exhaustive_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x746f_6d31);
    for (n_prime, d) in [(5, 2), (6, 2), (5, 3)] {
        let mut seen_linked = false;
        let mut seen_broken = false;
        for round in 0..1000 {
            let field = if round % 10 == 0 {
                relabeled_monotone(n_prime, d, &mut rng)
            } else {
                random_field(n_prime, d, &mut rng)
            };
            let verdicts = five_verdicts(&field);
            assert!(
                verdicts.iter().all(|&v| v == verdicts[0]),
                "({n_prime},{d}): variants disagree: {verdicts:?}"
            );
            seen_linked |= verdicts[0];
            seen_broken |= !verdicts[0];
        }
        // The sample must exercise both verdicts or the agreement is vacuous.
        assert!(seen_linked && seen_broken, "({n_prime},{d}) sample one-sided");
    }
}

fn linkage_fields(n_prime: usize, d: usize) -> Vec<MatchingField> {
    let outcome = enumerate(&EnumerationTask::new(
        EnumerationKind::LinkageMatchingField,
        n_prime,
        d,
    ))
    .unwrap();
    outcome
        .objects
        .into_iter()
        .map(|h| match h {
            ObjectHandle::Field(f) => f,
            other => panic!("expected a field, got {}", other.kind()),
        })
        .collect()
}

/// Every ordering of the same multiset of column steps must land on the same
/// tope field, and must match the canonical `amalgamate_to`.
#[test]
fn amalgamation_order_does_not_matter() {
    for field in linkage_fields(4, 2) {
        let base = field.to_tope_field();
        let ab = base.amalgamate(0).unwrap().amalgamate(1).unwrap();
        let ba = base.amalgamate(1).unwrap().amalgamate(0).unwrap();
        assert_eq!(ab, ba);
        assert_eq!(ab, base.amalgamate_to(&LatticePoint::new(vec![2, 2])).unwrap());
    }
    for field in linkage_fields(5, 2) {
        let base = field.to_tope_field();
        let target = LatticePoint::new(vec![3, 2]);
        let mut routes = Vec::new();
        for order in [[0, 0, 1], [0, 1, 0], [1, 0, 0]] {
            let mut cur = base.clone();
            for j in order {
                cur = cur.amalgamate(j).unwrap();
            }
            routes.push(cur);
        }
        assert!(routes.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(routes[0], base.amalgamate_to(&target).unwrap());
    }
}

#[test]
fn maximal_amalgamation_ends_in_a_single_honest_tope() {
    for field in linkage_fields(4, 3) {
        let base = field.to_tope_field();
        let full = base.amalgamate_to(&LatticePoint::new(vec![2, 1, 1])).unwrap();
        assert!(full.is_maximal());
        let tope = full.the_tope().unwrap();
        assert!(tope.classify().tope);
        assert_eq!(tope.right_degrees(), vec![2, 1, 1]);
    }
}

#[test]
fn intermediate_amalgamations_remain_linked() {
    for field in linkage_fields(5, 2).into_iter().take(30) {
        let mut cur = field.to_tope_field();
        while !cur.is_maximal() {
            assert!(cur.check_linkage().verdict, "thickness {}", cur.thickness());
            cur = cur.amalgamate(cur.thickness() % 2).unwrap();
        }
    }
}
