//! Time integration driver and per-snapshot diagnostics.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use log::{debug, info};

use crate::error::{Error, Result};
use crate::flow_composer::{rotate_clockwise, FlowSpec};

use super::{rotate_reference, SolverConfig, SpectralGrid, SpectralSolver, VelocityField, VorticityState};

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub min_w: f64,
    pub max_w: f64,
    pub e_rot: f64,
    /// Polar angle of each tracked bump centre.
    pub angles: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub dt: f64,
    pub steps: usize,
    pub rows: Vec<DiagnosticRow>,
    pub final_state: VorticityState,
}

impl RunReport {
    pub fn final_error(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.e_rot)
    }

    pub fn max_error(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.e_rot))
    }

    fn drift(&self, f: impl Fn(&DiagnosticRow) -> f64) -> f64 {
        let first = f(&self.rows[0]);
        let worst = self.rows.iter().fold(0.0f64, |m, r| m.max((f(r) - first).abs()));
        if first != 0.0 {
            worst / first.abs()
        } else {
            worst
        }
    }

    /// Largest relative deviation of the energy from its initial value.
    pub fn energy_drift(&self) -> f64 {
        self.drift(|r| r.energy)
    }

    pub fn enstrophy_drift(&self) -> f64 {
        self.drift(|r| r.enstrophy)
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        let bumps = self.rows.first().map_or(0, |r| r.angles.len());
        write!(w, "t,energy,enstrophy,min_w,max_w,e_rot")?;
        for k in 0..bumps {
            write!(w, ",bump{k}_angle")?;
        }
        writeln!(w)?;
        for r in &self.rows {
            write!(w, "{:e},{:e},{:e},{:e},{:e},{:e}", r.t, r.energy, r.enstrophy, r.min_w, r.max_w, r.e_rot)?;
            for a in &r.angles {
                write!(w, ",{a:e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

/// Evolves `ω₀` of `spec` to `horizon` and records diagnostics.
pub fn run(spec: &FlowSpec, grid: SpectralGrid, config: &SolverConfig, horizon: f64) -> Result<RunReport> {
    run_with(spec, grid, config, horizon, &mut |_| Ok(()))
}

/// Like [`run`], calling `on_snapshot` at the configured snapshot cadence
/// (and for the initial state).
pub fn run_with(
    spec: &FlowSpec,
    grid: SpectralGrid,
    config: &SolverConfig,
    horizon: f64,
    on_snapshot: &mut dyn FnMut(&VorticityState) -> Result<()>,
) -> Result<RunReport> {
    config.validate()?;
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::InvalidGrid(format!("horizon must be finite and non-negative, got {horizon}")));
    }
    let initial = VorticityState::from_spec(spec, grid)?;
    let mut solver = SpectralSolver::new(grid, config.dealias, config.filter_order);
    let mut w = solver.to_spectrum(initial.omega());
    let v0 = solver.velocity_spectral(&w);
    let h = grid.spacing();
    let vmax = v0.max_speed();

    let omega = spec.angular_velocity();
    let mut dt = match config.dt {
        Some(dt) => {
            let courant = dt * vmax / h;
            if courant > 1.0 {
                return Err(Error::CflViolation { courant });
            }
            dt
        }
        None => {
            let mut dt = if vmax > 0.0 { config.cfl * h / vmax } else { f64::INFINITY };
            if omega != 0.0 {
                dt = dt.min(2.0 * PI / (omega.abs() * 1000.0));
            }
            dt
        }
    };
    let steps = if horizon == 0.0 {
        0
    } else if dt.is_finite() {
        (horizon / dt).ceil() as usize
    } else {
        1
    };
    if steps > 0 {
        dt = horizon / steps as f64;
    }
    info!("spectral run: N = {}, dt = {dt:e}, {steps} steps, max|v| = {vmax:e}", grid.n());

    let reference0 = reference(spec, grid, 0.0, initial.removed_mean());
    let norm0 = l2(&reference0);
    let mut tracker = Tracker { spec, grid, removed_mean: initial.removed_mean(), norm0 };

    let mut rows = vec![tracker.row(&initial.omega, &v0, 0.0)];
    on_snapshot(&initial)?;
    let mut state = initial;
    for n in 1..=steps {
        solver.rk4_step(&mut w, dt);
        if w.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Instability { step: n, time: n as f64 * dt });
        }
        let t = n as f64 * dt;
        let report = n % config.diagnostic_every == 0 || n == steps;
        let snapshot = config.snapshot_every.is_some_and(|s| n % s == 0);
        if report || snapshot {
            state.omega = solver.to_physical(&w);
            state.time = t;
        }
        if report {
            let v = solver.velocity_spectral(&w);
            let row = tracker.row(&state.omega, &v, t);
            debug!("t = {t:.6} e_rot = {:e}", row.e_rot);
            rows.push(row);
        }
        if snapshot {
            on_snapshot(&state)?;
        }
    }
    if steps == 0 {
        state.omega = solver.to_physical(&w);
    }
    Ok(RunReport { dt, steps, rows, final_state: state })
}

fn reference(spec: &FlowSpec, grid: SpectralGrid, t: f64, removed_mean: f64) -> Vec<f64> {
    let mut r = rotate_reference(spec, grid, t);
    r.iter_mut().for_each(|v| *v -= removed_mean);
    r
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Tracker<'a> {
    spec: &'a FlowSpec,
    grid: SpectralGrid,
    removed_mean: f64,
    norm0: f64,
}

impl Tracker<'_> {
    fn row(&mut self, omega: &[f64], v: &VelocityField, t: f64) -> DiagnosticRow {
        let h = self.grid.spacing();
        let energy = 0.5 * v.vx.iter().zip(&v.vy).map(|(a, b)| a * a + b * b).sum::<f64>() * h * h;
        let enstrophy = omega.iter().map(|w| w * w).sum::<f64>() * h * h;
        let min_w = omega.iter().copied().fold(f64::INFINITY, f64::min);
        let max_w = omega.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let reference = reference(self.spec, self.grid, t, self.removed_mean);
        let diff = omega.iter().zip(&reference).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let e_rot = if self.norm0 > 0.0 { diff / self.norm0 } else { diff };
        let angles = self.spec.bumps().iter().map(|b| self.track(omega, b.center, b.support_radius(), t)).collect();
        DiagnosticRow { t, energy, enstrophy, min_w, max_w, e_rot, angles }
    }

    /// Angle of the first moment of `|ω - 2Ω|` over the disk of radius `rho`
    /// about the predicted bump position.
    fn track(&self, omega: &[f64], q: [f64; 2], rho: f64, t: f64) -> f64 {
        let c = rotate_clockwise(q, -self.spec.angular_velocity() * t);
        let nodes = self.grid.nodes();
        let two_omega = 2.0 * self.spec.angular_velocity();
        let (mut m, mut mx, mut my) = (0.0, 0.0, 0.0);
        for (k, &w) in omega.iter().enumerate() {
            let p = nodes.point_at(k);
            if (p[0] - c[0]).hypot(p[1] - c[1]) < rho {
                let a = (w + self.removed_mean - two_omega).abs();
                m += a;
                mx += a * p[0];
                my += a * p[1];
            }
        }
        if m > 0.0 {
            my.atan2(mx)
        } else {
            c[1].atan2(c[0])
        }
    }
}
