use std::f64::consts::PI;
use std::path::PathBuf;

use rotflow::flow_composer::{rotate_clockwise, Bump, FlowSpec};
use rotflow::pipeline::PipelineConfig;
use rotflow::spectral_solver::{
    rhs, rotate_reference, run, step, velocity_from_vorticity, Dealias, Fft2, SolverConfig, SpectralGrid,
    VorticityState,
};
use rotflow::Error;
use rustfft::num_complex::Complex64;

fn two_bump() -> FlowSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/two_bump.toml");
    PipelineConfig::load(&path, &[]).unwrap().flow_spec().unwrap()
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[test]
fn fft_round_trip() {
    let n = 64;
    let mut fft = Fft2::new(n);
    let orig: Vec<Complex64> =
        (0..n * n).map(|k| Complex64::new(((k * 7919) % 113) as f64 / 113.0 - 0.5, ((k * 104729) % 97) as f64 / 97.0)).collect();
    let mut data = orig.clone();
    fft.forward(&mut data);
    fft.inverse(&mut data);
    let err = orig.iter().zip(&data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-13, "{err:e}");
}

#[test]
fn single_mode_velocity_and_steadiness() {
    let grid = SpectralGrid::new(32, PI).unwrap();
    let nodes = grid.nodes();
    let w: Vec<f64> = (0..nodes.len()).map(|k| nodes.point_at(k)[0].sin()).collect();
    let state = VorticityState::new(grid, w, 0.0).unwrap();
    let v = velocity_from_vorticity(&state);
    for k in 0..nodes.len() {
        let x = nodes.point_at(k)[0];
        assert!(v.vx[k].abs() < 1e-13);
        assert!((v.vy[k] + x.cos()).abs() < 1e-13);
    }
    assert!(rhs(&state, Dealias::TwoThirds).iter().all(|t| t.abs() < 1e-13));
}

#[test]
fn nonzero_mean_rejected() {
    let grid = SpectralGrid::new(16, 1.0).unwrap();
    assert!(matches!(VorticityState::new(grid, vec![1.0; 256], 0.0), Err(Error::NonzeroMean { .. })));
    assert!(matches!(SpectralGrid::new(24, 1.0), Err(Error::InvalidGrid(_))));
}

#[test]
fn excessive_fixed_step_is_a_cfl_violation() {
    let spec = two_bump();
    let grid = SpectralGrid::new(64, 10.0).unwrap();
    let s = VorticityState::from_spec(&spec, grid).unwrap();
    assert!(matches!(step(&s, &SolverConfig::default(), 1.0), Err(Error::CflViolation { .. })));
}

fn evolve(state: &VorticityState, dt: f64, steps: usize) -> Vec<f64> {
    let cfg = SolverConfig::default();
    let mut s = state.clone();
    for _ in 0..steps {
        s = step(&s, &cfg, dt).unwrap();
    }
    s.omega().to_vec()
}

#[test]
fn time_stepping_is_fourth_order() {
    let spec = two_bump();
    let grid = SpectralGrid::new(128, 10.0).unwrap();
    let s0 = VorticityState::from_spec(&spec, grid).unwrap();
    let t = 0.08;
    let a = evolve(&s0, t / 10.0, 10);
    let b = evolve(&s0, t / 20.0, 20);
    let c = evolve(&s0, t / 40.0, 40);
    let ratio = l2_diff(&a, &b) / l2_diff(&b, &c);
    assert!((12.0..=20.0).contains(&ratio), "Richardson ratio {ratio}");
}

#[test]
fn evolution_commutes_with_quarter_turns() {
    let spec = two_bump();
    let turned = FlowSpec::new(
        spec.angular_velocity(),
        spec.gluing_radius(),
        spec.bumps().iter().map(|b| Bump::new(rotate_clockwise(b.center, -PI / 2.0), b.profile.clone())).collect(),
    )
    .unwrap();
    let grid = SpectralGrid::new(64, 10.0).unwrap();
    let n = grid.n();
    let a = evolve(&VorticityState::from_spec(&spec, grid).unwrap(), 0.005, 10);
    let b = evolve(&VorticityState::from_spec(&turned, grid).unwrap(), 0.005, 10);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            let src = ((n - i) % n) * n + j;
            assert!((b[k] - a[src]).abs() <= 1e-11 * scale, "node ({i}, {j})");
        }
    }
}

#[test]
fn rotated_reference_is_a_group_action() {
    let spec = two_bump();
    let grid = SpectralGrid::new(64, 10.0).unwrap();
    let w0 = spec.vorticity_grid(&grid.nodes());
    assert_eq!(rotate_reference(&spec, grid, 0.0), w0);
    let full = rotate_reference(&spec, grid, 2.0 * PI);
    assert!(l2_diff(&full, &w0) < 1e-9 * l2_diff(&w0, &vec![0.0; w0.len()]));
    let x = [1.3, -0.4];
    let once = rotate_clockwise(rotate_clockwise(x, 0.3), 0.9);
    let both = rotate_clockwise(x, 1.2);
    assert!((once[0] - both[0]).abs() < 1e-15 && (once[1] - both[1]).abs() < 1e-15);
}

#[test]
fn short_run_tracks_rigid_rotation_and_conserves() {
    let spec = two_bump();
    let grid = SpectralGrid::new(128, 10.0).unwrap();
    let cfg = SolverConfig { diagnostic_every: 20, ..SolverConfig::default() };
    let report = run(&spec, grid, &cfg, 0.5).unwrap();
    assert!(report.max_error() < 5e-2, "{:e}", report.max_error());
    assert!(report.energy_drift() < 1e-6);
    assert!(report.enstrophy_drift() < 1e-4);
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("t,energy,enstrophy,min_w,max_w,e_rot,bump0_angle,bump1_angle\n"));
    assert_eq!(text.lines().count(), report.rows.len() + 1);
}
