//! Randomized end-to-end invariants: for random monomial quotient rings
//! `F_p[x,y]/I` and the residue-field map, the whole pipeline must satisfy
//! the structural laws — the closure is a closed resolution with
//! Γ-decomposable differential, the two constructions agree on variable
//! counts, the comparison verifies, and the counting identities hold.

use proptest::prelude::*;

use tate_core::classify;
use tate_core::compare;
use tate_core::dga::Window;
use tate_core::pi;
use tate_core::resolve;
use tate_core::ring::{MapPresentation, Monomial, Polynomial, QuotientRing, RingPresentation};
use tate_core::coeffs::{FieldScalar, PrimeP};

fn residue_field_map(q: u32, ideal: &[(u32, u32)]) -> MapPresentation {
    let p = PrimeP::new(q).unwrap();
    let mono = |e: (u32, u32)| Polynomial::monomial(FieldScalar::ONE, Monomial { exps: vec![e.0, e.1] });
    let ring = QuotientRing::new(RingPresentation {
        p,
        generators: vec![("x".into(), 1), ("y".into(), 1)],
        relations: ideal.iter().map(|&e| mono(e)).collect(),
    })
    .unwrap();
    MapPresentation::new(ring, vec![mono((1, 0)), mono((0, 1))]).unwrap()
}

fn arb_monomial() -> impl Strategy<Value = (u32, u32)> {
    // one monomial of total degree two or three
    (2u32..=3).prop_flat_map(|total| (0u32..=total).prop_map(move |a| (a, total - a)))
}

fn arb_monomial_ideal() -> impl Strategy<Value = Vec<(u32, u32)>> {
    proptest::collection::vec(arb_monomial(), 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn random_monomial_quotients_satisfy_the_structural_laws(
        ideal in arb_monomial_ideal(),
        qi in 0usize..2,
    ) {
        let q = [2u32, 3][qi];
        let map = residue_field_map(q, &ideal);
        let window = Window::new(4, 14).unwrap();
        let closure = resolve::acyclic_closure(&map, window).unwrap();
        let model = resolve::minimal_model(&map, window).unwrap();

        // residue field maps are closed, hence weakly-closed
        let (closed, witness) = classify::is_closed(&closure);
        prop_assert!(closed, "ideal {ideal:?} at p={q}: {witness:?}");
        prop_assert!(closure.ext.gamma_indecomposables().unwrap().differential_is_zero());
        prop_assert!(model.ext.indecomposables().unwrap().differential_is_zero());

        // both builds resolve S inside the certified window
        prop_assert!(resolve::verify_acyclicity(&closure).unwrap().ok);
        prop_assert!(resolve::verify_acyclicity(&model).unwrap().ok);

        // the comparison pipeline reproduces the model counts and verifies
        let (cmp_model, cmp) = compare::comparison_from_closure(&closure, window).unwrap();
        prop_assert_eq!(cmp_model.variable_counts(), model.variable_counts());
        prop_assert!(compare::verify_chain_map(&cmp_model, &closure, &cmp).ok);
        prop_assert!(compare::verify_quasi_iso(&cmp_model, &closure, &cmp).ok);
        prop_assert!(compare::exact_sequence_check(&cmp_model, &closure, &cmp).unwrap().ok);

        // counting identities and deviation prediction
        prop_assert!(classify::poincare_check(&closure).ok);
        prop_assert!(classify::poincare_check(&model).ok);
        let table = classify::deviations(&model, &closure);
        prop_assert!(classify::deviations_consistent(&table).unwrap().is_empty());

        // the homotopy Lie algebra of a closed map has trivial brackets
        let lie = pi::homotopy_lie_algebra(&cmp_model).unwrap();
        let (abelian, bw) = pi::check_abelian(&lie);
        prop_assert!(abelian, "ideal {ideal:?} at p={q}: {bw:?}");
        prop_assert!(pi::verify_lie_axioms(&lie).is_ok());
    }
}
