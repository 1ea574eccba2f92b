use liepnm_core::gauss::{assemble, condition, reduce, whiten, LinearData};
use liepnm_core::prior::{is_feasible, HatBasis};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::sample::subsequence;

/// A well-posed problem: N knots on [0, 1], n design points at the
/// midpoints of distinct intervals, positive initial value `b0`.
fn problem() -> impl Strategy<Value = (HatBasis, f64, Vec<f64>, Vec<f64>)> {
    (4usize..30)
        .prop_flat_map(|n_knots| {
            let intervals: Vec<usize> = (0..n_knots - 1).collect();
            (
                Just(n_knots),
                subsequence(intervals, 1..=n_knots - 2),
                0.01..0.3f64,
                prop::collection::vec(0.0..1.0f64, n_knots),
            )
        })
        .prop_map(|(n_knots, picked, b0, raw)| {
            let basis = HatBasis::new(0.0, 1.0, n_knots).unwrap();
            let h = basis.spacing();
            let design: Vec<f64> = picked.iter().map(|&j| basis.knot(j) + h / 2.0).collect();
            let data: Vec<f64> = design.iter().enumerate().map(|(i, _)| raw[i] * 0.5).collect();
            (basis, b0, design, data)
        })
}

fn build(basis: &HatBasis, b0: f64, design: &[f64], data: &[f64]) -> (LinearData, DVector<f64>, DMatrix<f64>) {
    let d = assemble(basis, basis.lo(), b0, design, data).unwrap();
    let (mu, sigma) = condition(&d).unwrap();
    (d, mu, sigma)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn rank_law_and_projector_identities((basis, b0, design, data) in problem()) {
        let (d, mu, sigma) = build(&basis, b0, &design, &data);
        let n_rows = design.len() + 1;
        let red = reduce(&sigma, None).unwrap();
        prop_assert_eq!(red.rho, basis.len() - n_rows);
        prop_assert!((&sigma * &sigma - &sigma).abs().max() < 1e-9);
        prop_assert!((&sigma * d.phi.transpose()).abs().max() < 1e-9);
        prop_assert!((&d.phi * &mu - &d.b).abs().max() < 1e-10);
        prop_assert!((&sigma - sigma.transpose()).abs().max() < 1e-12);
    }

    #[test]
    fn whitened_reconstruction_preserves_the_data(
        (basis, b0, design, data) in problem(),
        draws in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 30), 50),
    ) {
        let (d, mu, sigma) = build(&basis, b0, &design, &data);
        let red = reduce(&sigma, Some(basis.len() - design.len() - 1)).unwrap();
        let w = whiten(&mu, &red);
        for raw in &draws {
            let zt = DVector::from_column_slice(&raw[..w.rho]);
            let z = w.reconstruct(&zt);
            prop_assert!((&d.phi * &z - &d.b).abs().max() < 1e-9);
        }
    }

    #[test]
    fn polytope_membership_is_order_cone_membership(
        (basis, b0, design, data) in problem(),
        draws in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 30), 50),
        scale in 0.01..1.0f64,
    ) {
        let (_, mu, sigma) = build(&basis, b0, &design, &data);
        let red = reduce(&sigma, None).unwrap();
        let w = whiten(&mu, &red);
        for raw in &draws {
            let zt = DVector::from_iterator(w.rho, raw[..w.rho].iter().map(|v| v * scale));
            let slack = w.slack(&zt);
            if slack.iter().any(|s| s.abs() < 1e-12) {
                continue;
            }
            let z: Vec<f64> = w.reconstruct(&zt).iter().copied().collect();
            prop_assert_eq!(is_feasible(&z), slack.iter().all(|&s| s >= 0.0));
        }
    }
}

#[test]
fn no_data_leaves_the_prior_untouched() {
    let basis = HatBasis::new(0.0, 1.0, 5).unwrap();
    // Initial condition only: one row, rank N - 1.
    let d = assemble(&basis, 0.0, 0.0, &[], &[]).unwrap();
    let (mu, sigma) = condition(&d).unwrap();
    assert!(mu.iter().all(|&v| v == 0.0));
    let red = reduce(&sigma, Some(4)).unwrap();
    assert!(red.lambda.iter().all(|&l| (l - 1.0).abs() < 1e-12));
}
