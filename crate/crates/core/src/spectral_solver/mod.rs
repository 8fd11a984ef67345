//! Pseudo-spectral evolution of `∂ₜω + v·∇ω = 0` on a periodic box that
//! contains the compact support of the flow, with diagnostics measuring
//! the distance to exact rigid rotation.

mod diagnostics;
mod fft;

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_composer::{rotate_clockwise, FlowSpec, Grid2};

pub use diagnostics::{run, run_with, DiagnosticRow, RunReport};
pub use fft::Fft2;

/// Relative size of the grid mean tolerated by the torus Poisson inversion.
pub const MEAN_TOLERANCE: f64 = 1e-12;

/// Largest admissible ratio `2R / L`.
pub const PADDING: f64 = 0.9;

/// `N × N` nodes on the periodic box `[-L, L)²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    n: usize,
    half_width: f64,
}

impl SpectralGrid {
    pub fn new(n: usize, half_width: f64) -> Result<SpectralGrid> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("resolution must be a power of two >= 16, got {n}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {half_width}")));
        }
        Ok(SpectralGrid { n, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> Grid2 {
        Grid2::square_periodic(self.n, self.half_width)
    }

    /// Signed integer mode of FFT index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Physical wavenumber of FFT index `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        PI / self.half_width * self.mode(i) as f64
    }

    /// Rejects specs whose support `2R` is not inside `0.9 L`.
    pub fn check_support(&self, spec: &FlowSpec) -> Result<()> {
        let s = spec.support_radius();
        if s >= PADDING * self.half_width {
            return Err(Error::InvalidGrid(format!(
                "flow support 2R = {s} must be below {PADDING} L = {}",
                PADDING * self.half_width
            )));
        }
        Ok(())
    }
}

/// Vorticity snapshot on a spectral grid.
#[derive(Clone, Debug)]
pub struct VorticityState {
    grid: SpectralGrid,
    omega: Vec<f64>,
    time: f64,
    removed_mean: f64,
}

impl VorticityState {
    pub fn new(grid: SpectralGrid, omega: Vec<f64>, time: f64) -> Result<VorticityState> {
        if omega.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("expected {} samples, got {}", grid.len(), omega.len())));
        }
        let max = omega.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mean = grid_mean(&omega);
        if mean.abs() > MEAN_TOLERANCE * max {
            return Err(Error::NonzeroMean { mean, tolerance: MEAN_TOLERANCE * max });
        }
        Ok(VorticityState { grid, omega, time, removed_mean: 0.0 })
    }

    /// Samples `ω₀` of `spec` and removes the (quadrature-level) grid mean.
    pub fn from_spec(spec: &FlowSpec, grid: SpectralGrid) -> Result<VorticityState> {
        grid.check_support(spec)?;
        let mut omega = spec.vorticity_grid(&grid.nodes());
        let mean = grid_mean(&omega);
        omega.iter_mut().for_each(|w| *w -= mean);
        Ok(VorticityState { grid, omega, time: 0.0, removed_mean: mean })
    }

    pub fn grid(&self) -> SpectralGrid {
        self.grid
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Constant subtracted from the sampled field by [`VorticityState::from_spec`].
    pub fn removed_mean(&self) -> f64 {
        self.removed_mean
    }

    pub fn mean(&self) -> f64 {
        grid_mean(&self.omega)
    }

    pub fn max_abs(&self) -> f64 {
        self.omega.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

fn grid_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dealias {
    TwoThirds,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Courant number used when `dt` is not fixed.
    pub cfl: f64,
    /// Fixed time step; overrides the CFL rule when set.
    pub dt: Option<f64>,
    pub dealias: Dealias,
    /// Order `2m` of the exponential filter `exp(-36 (|k|/k_max)^(2m))`.
    pub filter_order: Option<u32>,
    /// Steps between diagnostic rows (the first and last step always report).
    pub diagnostic_every: usize,
    /// Steps between snapshot callbacks.
    pub snapshot_every: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { cfl: 0.5, dt: None, dealias: Dealias::TwoThirds, filter_order: None, diagnostic_every: 10, snapshot_every: None }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidGrid(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::InvalidGrid(format!("dt must be positive, got {dt}")));
            }
        }
        if self.diagnostic_every == 0 || self.snapshot_every == Some(0) {
            return Err(Error::InvalidGrid("cadences must be positive".into()));
        }
        if self.filter_order == Some(0) {
            return Err(Error::InvalidGrid("filter order must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct VelocityField {
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
}

impl VelocityField {
    pub fn max_speed(&self) -> f64 {
        self.vx.iter().zip(&self.vy).fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)))
    }
}

/// Reusable spectral operators and work buffers for one grid.
pub struct SpectralSolver {
    grid: SpectralGrid,
    fft: Fft2,
    /// Derivative wavenumbers per FFT index, Nyquist zeroed.
    kd: Vec<f64>,
    /// `1/|k|²` in spectral layout, zero at `k = 0`.
    inv_k2: Vec<f64>,
    /// Tendency mask in spectral layout.
    mask: Vec<f64>,
    /// Optional per-step state filter in spectral layout.
    filter: Option<Vec<f64>>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    c: Vec<Complex64>,
}

impl SpectralSolver {
    pub fn new(grid: SpectralGrid, dealias: Dealias, filter_order: Option<u32>) -> SpectralSolver {
        let n = grid.n();
        let kd: Vec<f64> = (0..n).map(|i| if i == n / 2 { 0.0 } else { grid.wavenumber(i) }).collect();
        let mut inv_k2 = vec![0.0; n * n];
        let mut mask = vec![0.0; n * n];
        let cutoff = n as i64 / 3;
        for a in 0..n {
            for b in 0..n {
                let (ka, kb) = (grid.wavenumber(a), grid.wavenumber(b));
                let k2 = ka * ka + kb * kb;
                if k2 > 0.0 {
                    inv_k2[a * n + b] = 1.0 / k2;
                }
                let (ma, mb) = (grid.mode(a).abs(), grid.mode(b).abs());
                let keep = match dealias {
                    Dealias::TwoThirds => ma < cutoff && mb < cutoff,
                    Dealias::None => a != n / 2 && b != n / 2,
                };
                if keep && k2 > 0.0 {
                    mask[a * n + b] = 1.0;
                }
            }
        }
        let filter = filter_order.map(|m| {
            let kmax = grid.wavenumber(n / 2 - 1);
            let mut f = vec![0.0; n * n];
            for a in 0..n {
                for b in 0..n {
                    let k = grid.wavenumber(a).hypot(grid.wavenumber(b)) / kmax;
                    f[a * n + b] = (-36.0 * k.powi(2 * m as i32)).exp();
                }
            }
            f
        });
        let zero = Complex64::new(0.0, 0.0);
        SpectralSolver {
            grid,
            fft: Fft2::new(n),
            kd,
            inv_k2,
            mask,
            filter,
            a: vec![zero; n * n],
            b: vec![zero; n * n],
            c: vec![zero; n * n],
        }
    }

    pub fn grid(&self) -> SpectralGrid {
        self.grid
    }

    pub fn to_spectrum(&mut self, omega: &[f64]) -> Vec<Complex64> {
        let mut s: Vec<Complex64> = omega.iter().map(|&w| Complex64::new(w, 0.0)).collect();
        self.fft.forward(&mut s);
        s
    }

    pub fn to_physical(&mut self, spectrum: &[Complex64]) -> Vec<f64> {
        self.a.copy_from_slice(spectrum);
        self.fft.inverse(&mut self.a);
        self.a.iter().map(|z| z.re).collect()
    }

    /// Velocity from a vorticity spectrum.
    pub fn velocity_spectral(&mut self, w: &[Complex64]) -> VelocityField {
        let n = self.grid.n();
        for a in 0..n {
            for b in 0..n {
                let s = a * n + b;
                let psi = -w[s] * self.inv_k2[s];
                let i = Complex64::new(0.0, 1.0);
                // u = -∂y ψ, v = ∂x ψ packed as u + i v
                let u = -i * self.kd[b] * psi;
                let v = i * self.kd[a] * psi;
                self.a[s] = u + i * v;
            }
        }
        self.fft.inverse(&mut self.a);
        VelocityField { vx: self.a.iter().map(|z| z.re).collect(), vy: self.a.iter().map(|z| z.im).collect() }
    }

    /// Spectral tendency `-(v·∇ω)^` of a vorticity spectrum, masked.
    pub fn tendency(&mut self, w: &[Complex64], out: &mut [Complex64]) {
        let n = self.grid.n();
        let i = Complex64::new(0.0, 1.0);
        for a in 0..n {
            let ka = self.kd[a];
            for b in 0..n {
                let s = a * n + b;
                let kb = self.kd[b];
                let psi = -w[s] * self.inv_k2[s];
                self.a[s] = -i * kb * psi + i * (i * ka * psi);
                self.b[s] = i * ka * w[s] + i * (i * kb * w[s]);
            }
        }
        self.fft.inverse(&mut self.a);
        self.fft.inverse(&mut self.b);
        for ((c, v), g) in self.c.iter_mut().zip(&self.a).zip(&self.b) {
            *c = Complex64::new(-(v.re * g.re + v.im * g.im), 0.0);
        }
        self.fft.forward(&mut self.c);
        for ((o, c), m) in out.iter_mut().zip(&self.c).zip(&self.mask) {
            *o = c * m;
        }
    }

    /// One classical RK4 step of the spectral state.
    pub fn rk4_step(&mut self, w: &mut [Complex64], dt: f64) {
        let len = w.len();
        let zero = Complex64::new(0.0, 0.0);
        let mut k = vec![zero; len];
        let mut acc = vec![zero; len];
        let mut stage = vec![zero; len];
        self.tendency(w, &mut k);
        for s in 0..len {
            acc[s] = k[s];
            stage[s] = w[s] + k[s] * (0.5 * dt);
        }
        self.tendency(&stage, &mut k);
        for s in 0..len {
            acc[s] += k[s] * 2.0;
            stage[s] = w[s] + k[s] * (0.5 * dt);
        }
        self.tendency(&stage, &mut k);
        for s in 0..len {
            acc[s] += k[s] * 2.0;
            stage[s] = w[s] + k[s] * dt;
        }
        self.tendency(&stage, &mut k);
        for s in 0..len {
            w[s] += (acc[s] + k[s]) * (dt / 6.0);
        }
        if let Some(f) = &self.filter {
            w.iter_mut().zip(f).for_each(|(z, g)| *z *= g);
        }
    }
}

/// `v = ∇⊥Δ⁻¹ω`, computed spectrally.
pub fn velocity_from_vorticity(state: &VorticityState) -> VelocityField {
    let mut solver = SpectralSolver::new(state.grid, Dealias::TwoThirds, None);
    let w = solver.to_spectrum(&state.omega);
    solver.velocity_spectral(&w)
}

/// Physical tendency `-v·∇ω` of `state`.
pub fn rhs(state: &VorticityState, dealias: Dealias) -> Vec<f64> {
    let mut solver = SpectralSolver::new(state.grid, dealias, None);
    let w = solver.to_spectrum(&state.omega);
    let mut out = vec![Complex64::new(0.0, 0.0); w.len()];
    solver.tendency(&w, &mut out);
    solver.to_physical(&out)
}

/// Advances `state` by one RK4 step of size `dt`.
pub fn step(state: &VorticityState, config: &SolverConfig, dt: f64) -> Result<VorticityState> {
    let mut solver = SpectralSolver::new(state.grid, config.dealias, config.filter_order);
    let v = solver.velocity_from(&state.omega);
    let courant = dt * v.max_speed() / state.grid.spacing();
    if courant > 1.0 {
        return Err(Error::CflViolation { courant });
    }
    let mut w = solver.to_spectrum(&state.omega);
    solver.rk4_step(&mut w, dt);
    let omega = solver.to_physical(&w);
    if omega.iter().any(|v| !v.is_finite()) {
        return Err(Error::Instability { step: 1, time: state.time + dt });
    }
    Ok(VorticityState { grid: state.grid, omega, time: state.time + dt, removed_mean: state.removed_mean })
}

impl SpectralSolver {
    fn velocity_from(&mut self, omega: &[f64]) -> VelocityField {
        let w = self.to_spectrum(omega);
        self.velocity_spectral(&w)
    }
}

/// Analytic `ω₀(R_{Ωt} x)` on the grid nodes.
pub fn rotate_reference(spec: &FlowSpec, grid: SpectralGrid, t: f64) -> Vec<f64> {
    let nodes = grid.nodes();
    let angle = spec.angular_velocity() * t;
    (0..nodes.len()).into_par_iter().map(|k| spec.vorticity(rotate_clockwise(nodes.point_at(k), angle))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_mode(grid: SpectralGrid) -> VorticityState {
        let l = grid.half_width();
        let nodes = grid.nodes();
        let w = (0..nodes.len()).map(|k| (PI * nodes.point_at(k)[0] / l).sin()).collect();
        VorticityState::new(grid, w, 0.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(SpectralGrid::new(8, 1.0).is_err());
        assert!(SpectralGrid::new(48, 1.0).is_err());
        assert!(SpectralGrid::new(32, 1.0).is_ok());
    }

    #[test]
    fn single_mode_inversion() {
        let g = SpectralGrid::new(32, 3.0).unwrap();
        let s = single_mode(g);
        let v = velocity_from_vorticity(&s);
        let nodes = g.nodes();
        for k in 0..nodes.len() {
            let x = nodes.point_at(k)[0];
            assert!(v.vx[k].abs() < 1e-13);
            assert!((v.vy[k] + 3.0 / PI * (PI * x / 3.0).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_and_single_mode_are_steady() {
        let g = SpectralGrid::new(32, 3.0).unwrap();
        let z = VorticityState::new(g, vec![0.0; g.len()], 0.0).unwrap();
        assert!(rhs(&z, Dealias::TwoThirds).iter().all(|&v| v == 0.0));
        let cfg = SolverConfig::default();
        assert!(step(&z, &cfg, 0.1).unwrap().omega().iter().all(|&v| v == 0.0));
        let s = single_mode(g);
        let next = step(&s, &cfg, 0.1).unwrap();
        for (a, b) in next.omega().iter().zip(s.omega()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nonzero_mean_rejected() {
        let g = SpectralGrid::new(16, 1.0).unwrap();
        assert!(matches!(VorticityState::new(g, vec![1.0; 256], 0.0), Err(Error::NonzeroMean { .. })));
    }
}
