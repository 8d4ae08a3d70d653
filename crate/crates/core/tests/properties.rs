//! Property tests over randomly generated lotteries, mixture weights, and
//! utilities: the algebraic laws and order invariants that the rest of the
//! crate leans on.

use num::{BigInt, BigRational, One, ToPrimitive};
use proptest::prelude::*;

use vnm::calibration::affine_match;
use vnm::lottery::SimpleLottery;
use vnm::preference::{PreferenceOracle, Verdict};
use vnm::space::Outcome;
use vnm::utility::{expectation, UtilityFunction};

/// Exact rational in [0, 1] with a bounded denominator.
fn unit_rational() -> impl Strategy<Value = BigRational> {
    (0u32..=4096u32).prop_map(|n| BigRational::new(BigInt::from(n), BigInt::from(4096u32)))
}

/// Positive-coordinate lotteries with up to five atoms and exact weights.
fn lottery() -> impl Strategy<Value = SimpleLottery> {
    proptest::collection::vec((1u32..=2000u32, 1u32..=64u32), 1..=5).prop_map(|pairs| {
        let total: u64 = pairs.iter().map(|(_, w)| *w as u64).sum();
        SimpleLottery::from_atoms(pairs.into_iter().map(|(x, w)| {
            (
                Outcome::new(x as f64 / 100.0).unwrap(),
                BigRational::new(BigInt::from(w), BigInt::from(total)),
            )
        }))
        .expect("weights normalize to one")
    })
}

fn catalog_member(idx: usize) -> UtilityFunction {
    match idx % 5 {
        0 => UtilityFunction::log(),
        1 => UtilityFunction::sqrt(),
        2 => UtilityFunction::crra(2.0).unwrap(),
        3 => UtilityFunction::logistic(),
        _ => UtilityFunction::linear(),
    }
}

proptest! {
    /// First mixture-set law: full weight on the first argument returns it.
    #[test]
    fn mix_at_full_weight_is_identity(p in lottery(), q in lottery()) {
        let m = SimpleLottery::mix(&BigRational::one(), &p, &q).unwrap();
        prop_assert_eq!(m, p);
    }

    /// Second law: swapping arguments complements the weight, exactly.
    #[test]
    fn mix_weight_complement_symmetry(t in unit_rational(), p in lottery(), q in lottery()) {
        let lhs = SimpleLottery::mix(&t, &p, &q).unwrap();
        let rhs = SimpleLottery::mix(&(BigRational::one() - &t), &q, &p).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    /// Third law: nested mixing against a fixed side multiplies weights.
    #[test]
    fn mix_nesting_is_multiplicative(
        t in unit_rational(),
        s in unit_rational(),
        p in lottery(),
        q in lottery(),
    ) {
        let inner = SimpleLottery::mix(&s, &p, &q).unwrap();
        let lhs = SimpleLottery::mix(&t, &inner, &q).unwrap();
        let rhs = SimpleLottery::mix(&(&s * &t), &p, &q).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    /// Mixtures keep total mass at exactly one.
    #[test]
    fn mix_preserves_unit_mass(t in unit_rational(), p in lottery(), q in lottery()) {
        let m = SimpleLottery::mix(&t, &p, &q).unwrap();
        let total: BigRational = m.atoms().values().cloned().sum();
        prop_assert!(total.is_one());
    }

    /// Support of a mixture is the union of supports for interior weights,
    /// and a subset of it always.
    #[test]
    fn mixture_support_is_the_union_for_interior_weights(
        t in unit_rational(),
        p in lottery(),
        q in lottery(),
    ) {
        let m = SimpleLottery::mix(&t, &p, &q).unwrap();
        let union: std::collections::BTreeSet<_> = p
            .support()
            .into_iter()
            .chain(q.support())
            .collect();
        let support: std::collections::BTreeSet<_> = m.support().into_iter().collect();
        prop_assert!(support.is_subset(&union));
        if !t.is_one() && t.to_f64().unwrap() != 0.0 {
            prop_assert_eq!(support, union);
        }
    }

    /// Expectation is linear in the mixture weight for every catalog member.
    #[test]
    fn expectation_is_affine_along_segments(
        t in unit_rational(),
        p in lottery(),
        q in lottery(),
        idx in 0usize..5,
    ) {
        let u = catalog_member(idx);
        let m = SimpleLottery::mix(&t, &p, &q).unwrap();
        let lhs = expectation(&m, &u).unwrap();
        let tf = t.to_f64().unwrap();
        let rhs = tf * expectation(&p, &u).unwrap() + (1.0 - tf) * expectation(&q, &u).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12, "deviation {}", (lhs - rhs).abs());
    }

    /// Verdicts are antisymmetric and invariant under positive affine
    /// transformation of the backing utility.
    #[test]
    fn verdicts_flip_and_survive_affine_maps(
        p in lottery(),
        q in lottery(),
        idx in 0usize..5,
    ) {
        let u = catalog_member(idx);
        let o = PreferenceOracle::from_utility(u.clone());
        let v = o.compare(&p, &q).unwrap();
        prop_assert_eq!(o.compare(&q, &p).unwrap(), v.flipped());

        let scaled = PreferenceOracle::from_utility(
            UtilityFunction::affine(2.0, 3.0, u).unwrap(),
        );
        prop_assert_eq!(scaled.compare(&p, &q).unwrap(), v);
    }

    /// Utility-backed verdicts are transitive on sampled triples.
    #[test]
    fn utility_backed_orders_are_transitive(
        a in lottery(),
        b in lottery(),
        c in lottery(),
        idx in 0usize..5,
    ) {
        let o = PreferenceOracle::from_utility(catalog_member(idx));
        let ab = o.compare(&a, &b).unwrap();
        let bc = o.compare(&b, &c).unwrap();
        let ac = o.compare(&a, &c).unwrap();
        if ab.first_weak() && bc.first_weak() {
            prop_assert!(ac.first_weak());
        }
        if ab == Verdict::Indifferent && bc == Verdict::Indifferent {
            prop_assert_eq!(ac, Verdict::Indifferent);
        }
    }

    /// Affine matching recovers planted coefficients from catalog pairs.
    #[test]
    fn affine_match_recovers_planted_coefficients(
        a in 1u32..50u32,
        b in -20i32..20i32,
        idx in 0usize..5,
    ) {
        let a = a as f64 / 10.0;
        let b = b as f64 / 4.0;
        let u = catalog_member(idx);
        let v = UtilityFunction::affine(a, b, u.clone()).unwrap();
        let grid: Vec<Outcome> = (1..=20)
            .map(|i| Outcome::new(0.5 * i as f64).unwrap())
            .collect();
        let fit = affine_match(&v, &u, &grid).unwrap();
        prop_assert!((fit.a - a).abs() < 1e-9);
        prop_assert!((fit.b - b).abs() < 1e-9);
        prop_assert!(fit.residual < 1e-9);
    }
}
