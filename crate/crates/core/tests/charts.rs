use liepnm_core::charts::{
    integration_constant_second_order, Branch, CanonicalChart, OdeFamily,
};
use liepnm_core::expr::Expression;
use proptest::prelude::*;

fn first() -> CanonicalChart {
    CanonicalChart::first_order(1.0, 5.0).unwrap()
}

fn second() -> CanonicalChart {
    CanonicalChart::second_order(5.0, 10.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn canonical_residuals(chart: &CanonicalChart, x: f64, y: f64) -> (f64, f64) {
    let (xi, eta) = chart.generator().eval(x, y);
    let [[rx, ry], [sx, sy]] = chart.jacobian(x, y).unwrap();
    (xi * rx + eta * ry, xi * sx + eta * sy - 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn first_order_round_trip(x in 0.1..20.0f64, y in 0.01..50.0f64) {
        let c = first();
        let (r, s) = c.forward(x, y).unwrap();
        let (x2, y2) = c.inverse(r, s).unwrap();
        prop_assert!(rel(x2, x) < 1e-12 && rel(y2, y) < 1e-12);
        let (r2, s2) = c.forward(x2, y2).unwrap();
        prop_assert!(rel(r2, r) < 1e-12 && (s2 - s).abs() < 1e-12 * s.abs().max(1.0));
    }

    #[test]
    fn second_order_round_trip(x in 0.5..20.0f64, y in -30.0..-0.5f64) {
        let c = second();
        let (r, s) = c.forward(x, y).unwrap();
        let (x2, y2) = c.inverse(r, s).unwrap();
        prop_assert!(rel(x2, x) < 1e-12 && rel(y2, y) < 1e-12);
    }

    #[test]
    fn canonical_equations_hold(x in 0.5..10.0f64, y in 0.5..10.0f64, yn in -10.0..-0.5f64) {
        let (a, b) = canonical_residuals(&first(), x, y);
        prop_assert!(a.abs() < 1e-10 && b.abs() < 1e-10);
        let (a, b) = canonical_residuals(&second(), x, yn);
        prop_assert!(a.abs() < 1e-10 && b.abs() < 1e-10);
    }

    #[test]
    fn envelope_maps_to_interval_ends(r in 0.2..5.0f64, rn in -1.0..-0.05f64) {
        let c = first();
        prop_assert!((c.inverse(r, c.s_lo(r)).unwrap().0 - 1.0).abs() < 1e-10);
        prop_assert!((c.inverse(r, c.s_hi(r)).unwrap().0 - 5.0).abs() < 1e-10);
        let c = second();
        prop_assert!((c.inverse(rn, c.s_lo(rn)).unwrap().0 - 5.0).abs() < 1e-10);
        prop_assert!((c.inverse(rn, c.s_hi(rn)).unwrap().0 - 10.0).abs() < 1e-10);
    }

    #[test]
    fn admissible_curves_push_forward_monotonically(
        raw in prop::collection::vec(0.0..1.0f64, 2..12),
        second_family in any::<bool>(),
    ) {
        // Piecewise linear zeta in (0, 1) with nonnegative slopes; strictly
        // inside the envelope so the push-forward must increase in x.
        let mut zs: Vec<f64> = raw.iter().map(|v| 0.01 + 0.98 * v).collect();
        zs.sort_by(f64::total_cmp);
        let (chart, r_lo, r_hi) = if second_family {
            (second(), -0.3, -0.24)
        } else {
            (first(), 1.0, 2.05)
        };
        let pieces = zs.len() - 1;
        let zeta = |r: f64| {
            let t = (r - r_lo) / (r_hi - r_lo) * pieces as f64;
            let i = (t.floor() as usize).min(pieces - 1);
            zs[i] + (zs[i + 1] - zs[i]) * (t - i as f64)
        };
        let mut prev = f64::NEG_INFINITY;
        for k in 0..1000 {
            let r = r_lo + (r_hi - r_lo) * k as f64 / 999.0;
            let s = chart.s_lo(r) + chart.width() * zeta(r);
            prop_assert!(s > chart.s_lo(r) && s < chart.s_hi(r));
            let (x, _) = chart.inverse(r, s).unwrap();
            prop_assert!(x > prev, "x not increasing at r = {}", r);
            prev = x;
        }
    }
}

#[test]
fn initial_invariants_agree_with_chart_derivative() {
    // w = y1 (x/y)^2 recomputed through u = ds/dr as w = u / (1 + u).
    let c = second();
    for &(x, y, y1) in &[(5.0, -10.0, 1.0), (6.0, -3.0, 0.4), (2.0, 7.0, 2.5)] {
        let [[rx, ry], [sx, sy]] = c.jacobian(x, y).unwrap();
        let u = (sx + sy * y1) / (rx + ry * y1);
        let w_chart = u / (1.0 + u);
        let w = y1 * x * x / (y * y);
        assert!((w_chart - w).abs() < 1e-12, "{w_chart} vs {w}");
        let (r, _) = c.forward(x, y).unwrap();
        assert!((r - (1.0 / y - 1.0 / x)).abs() < 1e-12);
    }
}

#[test]
fn integration_constant_satisfies_invariant_relation() {
    for &(x0, y0, y0p) in &[(5.0, -10.0, 1.0), (2.0, 3.0, 0.5), (1.0, -4.0, 2.0)] {
        let c = integration_constant_second_order(x0, y0, y0p).unwrap();
        assert!(c.residual(x0, y0, y0p).abs() < 1e-10);
        let expected = if x0 / y0 >= 0.0 { Branch::Plus } else { Branch::Minus };
        assert_eq!(c.branch, expected);
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[test]
fn reduced_first_order_integral_matches_closed_form() {
    // d s~/d r~ = (1 - r~) / (+-r~^{3/2} + 2 r~ (r~ + 1)) against
    // s~ = -log(2 r~ +- sqrt(r~) + 2) + log(r~)/2.
    for sign in [1.0, -1.0] {
        let h = move |t: f64| (1.0 - t) / (sign * t.powf(1.5) + 2.0 * t * (t + 1.0));
        let closed = move |t: f64| -(2.0 * t + sign * t.sqrt() + 2.0).ln() + t.ln() / 2.0;
        for k in 1..=9 {
            let b = 0.1 + 0.1 * k as f64;
            let q = adaptive_simpson(&h, 0.1, b, 1e-13);
            assert!((q - (closed(b) - closed(0.1))).abs() < 1e-8, "sign {sign}, b {b}");
        }
    }
}

#[test]
fn family_zeta_slopes_invert_the_envelope_derivative() {
    let fam = OdeFamily::FirstOrderHomogeneous {
        f: Expression::parse("1/r + r").unwrap(),
        x0: 1.0,
        x_t: 5.0,
        y0: 1.0,
    };
    assert_eq!(fam.r0().unwrap(), 1.0);
    // G(2) = 2.5, s_lo' = 0.5
    let b = fam.zeta_slope(2.0, 2.5).unwrap();
    assert!((b - 2.0 / 5f64.ln()).abs() < 1e-15);

    let fam = OdeFamily::SecondOrderExample {
        x0: 5.0,
        x_t: 10.0,
        y0: -10.0,
        y0_prime: 1.0,
    };
    assert!((fam.r0().unwrap() + 0.3).abs() < 1e-15);
    assert!((fam.zeta_slope(-0.3, 1.0).unwrap() - 20.0).abs() < 1e-12);
}
