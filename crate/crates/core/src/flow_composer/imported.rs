//! Inner stream functions supplied as sampled grids.

use crate::error::{Error, Result};
use crate::radial_profile::fornberg_weights;

use super::grid::GridData;
use super::jet::Jet;
use super::ScalarField;

/// A sampled inner stream function `φ̄`, interpolated with tensor-product
/// local polynomials. It vanishes identically outside its grid, so the
/// outermost frame of samples must be zero.
#[derive(Clone, Debug)]
pub struct ImportedField {
    data: GridData,
    order: usize,
}

impl ImportedField {
    pub fn new(data: GridData, order: usize) -> Result<ImportedField> {
        let g = data.grid;
        if order == 0 || g.nx < order + 1 || g.ny < order + 1 {
            return Err(Error::InvalidImport(format!(
                "grid {}x{} too small for interpolation order {order}",
                g.nx, g.ny
            )));
        }
        if !(g.dx > 0.0 && g.dy > 0.0) {
            return Err(Error::InvalidImport("grid spacing must be positive".into()));
        }
        if data.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImport("non-finite samples".into()));
        }
        let scale = data.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let frame_max = (0..g.nx)
            .flat_map(|i| [data.at(i, 0), data.at(i, g.ny - 1)])
            .chain((0..g.ny).flat_map(|j| [data.at(0, j), data.at(g.nx - 1, j)]))
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if frame_max > 1e-12 * scale {
            return Err(Error::InvalidImport(format!(
                "field does not vanish on the outer frame (max |phi| there = {frame_max:e})"
            )));
        }
        Ok(ImportedField { data, order })
    }

    pub fn data(&self) -> &GridData {
        &self.data
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Largest distance from the origin of a grid corner.
    pub fn reach(&self) -> f64 {
        let g = &self.data.grid;
        [g.x0, g.x_max()]
            .iter()
            .flat_map(|&x| [g.y0, g.y_max()].map(|y| x.hypot(y)))
            .fold(0.0, f64::max)
    }

    /// Location of the sample with the largest `|φ̄|`.
    pub fn peak(&self) -> [f64; 2] {
        let (k, _) = self
            .data
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v.abs() > best.1 { (k, v.abs()) } else { best });
        self.data.grid.point_at(k)
    }

    pub fn jet(&self, x: [f64; 2]) -> Jet {
        let g = &self.data.grid;
        if x[0] < g.x0 || x[0] > g.x_max() || x[1] < g.y0 || x[1] > g.y_max() {
            return Jet::ZERO;
        }
        let w = self.order + 1;
        let start = |z: f64, z0: f64, dz: f64, n: usize| -> usize {
            let cell = ((z - z0) / dz).floor().max(0.0) as usize;
            cell.saturating_sub((w - 1) / 2).min(n - w)
        };
        let i0 = start(x[0], g.x0, g.dx, g.nx);
        let j0 = start(x[1], g.y0, g.dy, g.ny);
        let xs: Vec<f64> = (i0..i0 + w).map(|i| g.x0 + i as f64 * g.dx).collect();
        let ys: Vec<f64> = (j0..j0 + w).map(|j| g.y0 + j as f64 * g.dy).collect();
        let wx = fornberg_weights(x[0], &xs, 3);
        let wy = fornberg_weights(x[1], &ys, 3);
        let deriv = |p: usize, q: usize| -> f64 {
            let mut s = 0.0;
            for (b, wyb) in wy[q].iter().enumerate() {
                let row = &self.data.values[(j0 + b) * g.nx + i0..(j0 + b) * g.nx + i0 + w];
                let inner: f64 = wx[p].iter().zip(row).map(|(a, v)| a * v).sum();
                s += wyb * inner;
            }
            s
        };
        Jet {
            value: deriv(0, 0),
            grad: [deriv(1, 0), deriv(0, 1)],
            hess: [deriv(2, 0), deriv(1, 1), deriv(0, 2)],
            third: [deriv(3, 0), deriv(2, 1), deriv(1, 2), deriv(0, 3)],
        }
    }
}

impl ScalarField for ImportedField {
    fn jet(&self, x: [f64; 2]) -> Jet {
        ImportedField::jet(self, x)
    }

    /// Distance from the origin to the nearest grid edge.
    fn extent(&self) -> f64 {
        let g = &self.data.grid;
        [-g.x0, g.x_max(), -g.y0, g.y_max()].into_iter().fold(f64::INFINITY, f64::min).max(0.0)
    }
}
