use proptest::prelude::*;
use rotflow::radial_profile::{cutoff_eval, solve_radial_ivp, Nonlinearity, RadialIvpProblem, RadialProfile, StepControl};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20_000))]

    #[test]
    fn cutoff_range_plateau_support_and_parity(t in -3.0f64..3.0) {
        let c = cutoff_eval(t).value;
        prop_assert!((0.0..=1.0).contains(&c));
        if t.abs() <= 1.0 {
            prop_assert_eq!(c, 1.0);
        }
        if t.abs() >= 2.0 {
            prop_assert_eq!(c, 0.0);
        }
        prop_assert_eq!(c, cutoff_eval(-t).value);
    }

    #[test]
    fn cutoff_is_monotone_on_the_ramp(a in 1.0f64..2.0, b in 1.0f64..2.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(cutoff_eval(lo).value >= cutoff_eval(hi).value);
    }
}

#[test]
fn cutoff_plateau_exhaustive_sample() {
    let n = 1_000_000;
    for k in 0..n {
        let t = -3.0 + 6.0 * (k as f64 + 0.5) / n as f64;
        let c = cutoff_eval(t).value;
        assert!((0.0..=1.0).contains(&c));
        assert!(t.abs() > 1.0 || c == 1.0);
        assert!(t.abs() < 2.0 || c == 0.0);
        assert_eq!(c, cutoff_eval(-t).value);
    }
}

#[test]
fn closed_form_value_and_laplacian_examples() {
    let b = RadialProfile::closed_form(1.0, 1.0, 4).unwrap();
    assert!((b.profile_eval(0.5).unwrap().0 - 0.31640625).abs() < 1e-15);
    assert!((b.radial_laplacian(0.0).unwrap() + 16.0).abs() < 1e-12);
    assert_eq!(b.radial_laplacian(1.0).unwrap(), 0.0);
    assert_eq!(b.radial_laplacian(1.7).unwrap(), 0.0);
    // β = (1 - r²)⁴: β' = -8r(1-r²)³, β'' = -8(1-r²)³ + 48r²(1-r²)²
    let r: f64 = 0.5;
    let s = 1.0 - r * r;
    let expected = -8.0 * s.powi(3) + 48.0 * r * r * s * s - 8.0 * s.powi(3);
    assert!((b.radial_laplacian(r).unwrap() - expected).abs() < 1e-13);
}

#[test]
fn profile_derivatives_match_finite_differences() {
    let h = 1e-4;
    for (a, rho, p) in [(1.0, 1.0, 4u32), (0.7, 2.0, 10), (-1.3, 1.5, 6)] {
        let b = RadialProfile::closed_form(a, rho, p).unwrap();
        // Samples stop short of the support edge.
        for k in 1..36 {
            let r = rho * k as f64 / 40.0;
            let (_, d1, d2) = b.profile_eval(r).unwrap();
            let f = |x: f64| b.profile_eval(x).unwrap().0;
            let fd1 = (f(r + h) - f(r - h)) / (2.0 * h);
            let fd2 = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
            let scale1 = d1.abs().max(1e-3 * a.abs());
            let scale2 = d2.abs().max(1e-2 * a.abs());
            assert!((fd1 - d1).abs() <= 1e-6 * scale1, "beta' at r={r}: {fd1} vs {d1}");
            assert!((fd2 - d2).abs() <= 1e-6 * scale2.max(1.0), "beta'' at r={r}: {fd2} vs {d2}");
        }
    }
}

fn log_solution_error(step: f64) -> f64 {
    let (r0, c, b) = (0.2, 1.0, 0.5);
    let p = RadialIvpProblem::new(Nonlinearity::new(|_| 0.0), r0, c, b, 0.0)
        .with_interval(r0, 2.2)
        .with_control(StepControl::Fixed { step })
        .with_table_spacing(0.5);
    let seg = solve_radial_ivp(&p).unwrap();
    seg.radii
        .iter()
        .zip(&seg.values)
        .map(|(&r, &v)| (v - (c + b * r0 * (r / r0).ln())).abs())
        .fold(0.0, f64::max)
}

#[test]
fn fixed_step_convergence_matches_fifth_order() {
    let coarse = log_solution_error(0.1);
    let fine = log_solution_error(0.05);
    let ratio = coarse / fine;
    assert!((ratio - 32.0).abs() <= 0.3 * 32.0, "ratio {ratio} (errors {coarse:e}, {fine:e})");
}

fn bessel_j0(r: f64) -> (f64, f64) {
    // Power series of J0 and J0' = -J1.
    let x = r / 2.0;
    let (mut term, mut j0) = (1.0, 1.0);
    let (mut t1, mut j1) = (x, x);
    for k in 1..80 {
        let k = k as f64;
        term *= -x * x / (k * k);
        j0 += term;
        t1 *= -x * x / (k * (k + 1.0));
        j1 += t1;
    }
    (j0, -j1)
}

#[test]
fn linear_nonlinearity_reproduces_bessel_j0() {
    let r0 = 0.01;
    let (v0, s0) = bessel_j0(r0);
    let p = RadialIvpProblem::new(Nonlinearity::new(|phi| phi), r0, v0, s0, 0.0).with_interval(r0, 10.0);
    let seg = solve_radial_ivp(&p).unwrap();
    assert_eq!(seg.values[0], v0);
    let err = seg.radii.iter().zip(&seg.values).map(|(&r, &v)| (v - bessel_j0(r).0).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "max |phi - J0| = {err:e}");
}
