//! Pointwise residual of the rotating-solution equation `∇⊥φ · ∇Δφ = 0`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

use super::grid::{Grid2, GridData};
use super::{FlowSpec, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualMethod {
    Analytic,
    FiniteDifference,
}

#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub method: ResidualMethod,
    /// Raw residual values on the evaluation grid.
    pub values: GridData,
    pub max_abs: f64,
    pub rms: f64,
    /// `max |∇⊥φ|` over the grid.
    pub velocity_scale: f64,
    /// `max |∇Δφ|` over the grid.
    pub gradient_scale: f64,
    pub normalized_max: f64,
    pub normalized_rms: f64,
}

impl ResidualReport {
    fn from_parts(method: ResidualMethod, grid: Grid2, parts: Vec<[f64; 3]>, noise: f64) -> Result<ResidualReport> {
        let n = parts.len() as f64;
        let max_abs = parts.iter().fold(0.0f64, |m, p| m.max(p[0].abs()));
        let rms = (parts.iter().map(|p| p[0] * p[0]).sum::<f64>() / n).sqrt();
        let velocity_scale = parts.iter().fold(0.0f64, |m, p| m.max(p[1]));
        let mut gradient_scale = parts.iter().fold(0.0f64, |m, p| m.max(p[2]));
        if gradient_scale <= noise {
            gradient_scale = 0.0;
        }
        let norm = velocity_scale * gradient_scale;
        let scaled = |v: f64| if norm > 0.0 { v / norm } else { 0.0 };
        Ok(ResidualReport {
            method,
            values: GridData::new(grid, "residual", parts.iter().map(|p| p[0]).collect())?,
            max_abs,
            rms,
            velocity_scale,
            gradient_scale,
            normalized_max: scaled(max_abs),
            normalized_rms: scaled(rms),
        })
    }
}

/// Residual of `spec` on `grid`. Analytic jets are used unless the spec
/// carries an imported field, in which case `φ̃` is sampled and
/// differentiated with fourth-order central differences.
pub fn residual_rotating(spec: &FlowSpec, grid: &Grid2) -> Result<ResidualReport> {
    if spec.imported().is_none() {
        return jet_residual(spec, grid);
    }
    let pad = FD_BORDER;
    let padded = Grid2 {
        nx: grid.nx + 2 * pad,
        ny: grid.ny + 2 * pad,
        x0: grid.x0 - pad as f64 * grid.dx,
        y0: grid.y0 - pad as f64 * grid.dy,
        dx: grid.dx,
        dy: grid.dy,
    };
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let values = (0..padded.len()).into_par_iter().map(|k| spec.phi_tilde(padded.point_at(k)).value).collect();
    fd_residual(&GridData::new(padded, "phi", values)?)
}

/// Residual from analytic jets of any field.
pub fn jet_residual<F: ScalarField + ?Sized>(field: &F, grid: &Grid2) -> Result<ResidualReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let parts = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let j = field.jet(grid.point_at(k));
            let gl = j.grad_laplacian();
            [j.rotating_residual(), j.grad_norm(), gl[0].hypot(gl[1])]
        })
        .collect();
    ResidualReport::from_parts(ResidualMethod::Analytic, *grid, parts, 0.0)
}

/// Nodes lost on each side by [`fd_residual`].
pub const FD_BORDER: usize = 4;

const D1: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];

/// Finite-difference residual of sampled `φ`. The result lives on the
/// interior grid with [`FD_BORDER`] nodes stripped from every side.
/// A `max |∇Δφ|` at the rounding-noise level is reported as zero, so a
/// harmonic `φ` normalizes to 0.
pub fn fd_residual(phi: &GridData) -> Result<ResidualReport> {
    let g = phi.grid;
    if g.nx <= 2 * FD_BORDER || g.ny <= 2 * FD_BORDER {
        return Err(Error::EmptyGrid);
    }
    let (nx, ny) = (g.nx, g.ny);
    let v = &phi.values;
    let at = |i: usize, j: usize| v[j * nx + i];
    // Laplacian on nodes at least two away from the edge.
    let mut lap = vec![0.0; nx * ny];
    lap.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        if j < 2 || j + 2 >= ny {
            return;
        }
        for i in 2..nx - 2 {
            let mut sx = 0.0;
            let mut sy = 0.0;
            for s in 0..5 {
                sx += D2[s] * at(i + s - 2, j);
                sy += D2[s] * at(i, j + s - 2);
            }
            row[i] = sx / (g.dx * g.dx) + sy / (g.dy * g.dy);
        }
    });
    let inner = Grid2 {
        nx: nx - 2 * FD_BORDER,
        ny: ny - 2 * FD_BORDER,
        x0: g.x0 + FD_BORDER as f64 * g.dx,
        y0: g.y0 + FD_BORDER as f64 * g.dy,
        dx: g.dx,
        dy: g.dy,
    };
    let parts = (0..inner.len())
        .into_par_iter()
        .map(|k| {
            let i = k % inner.nx + FD_BORDER;
            let j = k / inner.nx + FD_BORDER;
            let mut d = [0.0; 4];
            for s in 0..5 {
                d[0] += D1[s] * at(i + s - 2, j);
                d[1] += D1[s] * at(i, j + s - 2);
                d[2] += D1[s] * lap[j * nx + i + s - 2];
                d[3] += D1[s] * lap[(j + s - 2) * nx + i];
            }
            let (px, py) = (d[0] / g.dx, d[1] / g.dy);
            let (lx, ly) = (d[2] / g.dx, d[3] / g.dy);
            [-py * lx + px * ly, px.hypot(py), lx.hypot(ly)]
        })
        .collect();
    // Rounding floor of the differenced samples.
    let phi_max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let h = g.dx.min(g.dy);
    let noise = 100.0 * 24.0 * f64::EPSILON * phi_max / (h * h * h);
    ResidualReport::from_parts(ResidualMethod::FiniteDifference, inner, parts, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_composer::Bump;
    use crate::radial_profile::RadialProfile;

    #[test]
    fn radial_spec_residual_is_roundoff() {
        let b = Bump::new([0.0, 0.0], RadialProfile::closed_form(1.0, 1.5, 6).unwrap());
        let spec = FlowSpec::new(1.0, 2.0, vec![b]).unwrap();
        let r = residual_rotating(&spec, &Grid2::square_closed(129, 4.5)).unwrap();
        assert_eq!(r.method, ResidualMethod::Analytic);
        assert!(r.normalized_max < 1e-13, "{}", r.normalized_max);
    }

    #[test]
    fn harmonic_patch_has_zero_fd_residual() {
        let g = Grid2 { nx: 64, ny: 64, x0: -1.0, y0: -1.0, dx: 1.0 / 32.0, dy: 1.0 / 32.0 };
        let d = GridData::from_fn(g, "phi", |p| p[0] * p[1]).unwrap();
        let r = fd_residual(&d).unwrap();
        assert_eq!(r.values.grid.nx, 56);
        assert!(r.max_abs < 1e-9);
        assert_eq!(r.gradient_scale, 0.0);
        assert_eq!(r.normalized_max, 0.0);
    }

    #[test]
    fn fd_matches_analytic_factors() {
        let b = Bump::new([0.3, -0.2], RadialProfile::closed_form(1.0, 1.0, 8).unwrap());
        let spec = FlowSpec::new(0.0, 2.0, vec![b]).unwrap();
        let g = Grid2::square_closed(201, 1.5);
        let a = jet_residual(&spec, &g).unwrap();
        let d = GridData::from_fn(g, "phi", |p| spec.phi_tilde(p).value).unwrap();
        let f = fd_residual(&d).unwrap();
        assert!((a.velocity_scale - f.velocity_scale).abs() < 1e-5 * a.velocity_scale);
        assert!((a.gradient_scale - f.gradient_scale).abs() < 1e-2 * a.gradient_scale);
    }

    #[test]
    fn empty_grid_rejected() {
        let spec = FlowSpec::new(1.0, 1.0, vec![]).unwrap();
        assert!(matches!(residual_rotating(&spec, &Grid2::square_closed(0, 1.0)), Err(Error::EmptyGrid)));
    }
}
