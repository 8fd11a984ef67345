//! Planar fields assembled from radial bumps and glued to the exterior
//! rigid-rotation profile.
//!
//! The relative stream function is
//!
//! ```text
//! φ̃(x) = χ(|x|/R) φ̄(x) - (1 - χ(|x|/R)) Ω|x|²/2
//! ```
//!
//! with `φ̄` a sum of disjoint compactly supported radial bumps (plus an
//! optional imported grid). The velocity is `v₀ = ∇⊥φ̃ + Ωx⊥` and the
//! vorticity `ω₀ = Δφ̃ + 2Ω`; both vanish identically for `|x| >= 2R`.

mod grid;
mod imported;
mod jet;
mod residual;
mod structure;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial_profile::{cutoff_eval, ProfileValue, RadialProfile};

pub use grid::{Grid2, GridData};
pub use imported::ImportedField;
pub use jet::Jet;
pub use residual::{fd_residual, jet_residual, residual_rotating, ResidualMethod, ResidualReport, FD_BORDER};
pub use structure::{
    check_locally_radial, omega_bounds_check, Annulus, LocallyRadialReport, OmegaBoundsReport, RadialVerdict,
};

/// Anything that can report a third-order jet of a scalar field.
pub trait ScalarField: Sync {
    fn jet(&self, x: [f64; 2]) -> Jet;

    /// Radius of the centred disk on which the field is defined.
    fn extent(&self) -> f64 {
        f64::INFINITY
    }
}

impl<F> ScalarField for F
where
    F: Fn([f64; 2]) -> Jet + Sync,
{
    fn jet(&self, x: [f64; 2]) -> Jet {
        self(x)
    }
}

/// Clockwise rotation by `angle`.
pub fn rotate_clockwise(x: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * x[0] + s * x[1], -s * x[0] + c * x[1]]
}

/// `x⊥ = (-x₂, x₁)`.
pub fn perp(x: [f64; 2]) -> [f64; 2] {
    [-x[1], x[0]]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub profile: RadialProfile,
}

impl Bump {
    pub fn new(center: [f64; 2], profile: RadialProfile) -> Bump {
        Bump { center, profile }
    }

    pub fn support_radius(&self) -> f64 {
        self.profile.support_radius()
    }

    fn jet(&self, x: [f64; 2]) -> Option<Jet> {
        let r = (x[0] - self.center[0]).hypot(x[1] - self.center[1]);
        if r >= self.support_radius() {
            return None;
        }
        Some(Jet::radial(self.center, x, &self.profile.eval_unchecked(r)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    ImportedGrid,
}

/// Full construction recipe of a glued rotating flow.
#[derive(Clone, Debug)]
pub struct FlowSpec {
    angular_velocity: f64,
    gluing_radius: f64,
    bumps: Vec<Bump>,
    imported: Option<Arc<ImportedField>>,
}

impl FlowSpec {
    pub fn new(angular_velocity: f64, gluing_radius: f64, bumps: Vec<Bump>) -> Result<FlowSpec> {
        if !angular_velocity.is_finite() {
            return Err(Error::InvalidSpec(format!("angular velocity {angular_velocity} is not finite")));
        }
        if !(gluing_radius.is_finite() && gluing_radius > 0.0) {
            return Err(Error::InvalidSpec(format!("gluing radius must be positive, got {gluing_radius}")));
        }
        for (k, b) in bumps.iter().enumerate() {
            b.profile.validate()?;
            if !(b.center[0].is_finite() && b.center[1].is_finite()) {
                return Err(Error::InvalidSpec(format!("bump {k} centre is not finite")));
            }
            let reach = b.center[0].hypot(b.center[1]) + b.support_radius();
            if reach >= gluing_radius {
                return Err(Error::SupportEscapes { index: k, reach, radius: gluing_radius });
            }
        }
        for i in 0..bumps.len() {
            for j in i + 1..bumps.len() {
                let (a, b) = (&bumps[i], &bumps[j]);
                let distance = (a.center[0] - b.center[0]).hypot(a.center[1] - b.center[1]);
                let radii = a.support_radius() + b.support_radius();
                if distance <= radii {
                    return Err(Error::Overlap { first: i, second: j, distance, radii });
                }
            }
        }
        Ok(FlowSpec { angular_velocity, gluing_radius, bumps, imported: None })
    }

    /// Adds a sampled inner function on top of the bumps. The grid must not
    /// overlap any bump support.
    pub fn with_imported(mut self, field: ImportedField) -> Result<FlowSpec> {
        let g = field.data().grid;
        let d = field.data();
        let scale = d.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let outside = (0..g.len())
            .filter(|&k| {
                let p = g.point_at(k);
                p[0].hypot(p[1]) >= self.gluing_radius
            })
            .fold(0.0f64, |m, k| m.max(d.values[k].abs()));
        if outside > 1e-12 * scale {
            return Err(Error::InvalidSpec(format!(
                "imported field is nonzero outside the gluing radius (max |phi| there = {outside:e})"
            )));
        }
        for (k, b) in self.bumps.iter().enumerate() {
            let cx = b.center[0].clamp(g.x0, g.x_max());
            let cy = b.center[1].clamp(g.y0, g.y_max());
            if (cx - b.center[0]).hypot(cy - b.center[1]) < b.support_radius() {
                return Err(Error::InvalidSpec(format!("imported grid overlaps bump {k}")));
            }
        }
        self.imported = Some(Arc::new(field));
        Ok(self)
    }

    pub fn angular_velocity(&self) -> f64 {
        self.angular_velocity
    }

    pub fn gluing_radius(&self) -> f64 {
        self.gluing_radius
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn imported(&self) -> Option<&ImportedField> {
        self.imported.as_deref()
    }

    pub fn provenance(&self) -> Provenance {
        if self.imported.is_some() {
            Provenance::ImportedGrid
        } else {
            Provenance::Analytic
        }
    }

    /// Same construction with a different angular velocity.
    pub fn with_angular_velocity(&self, angular_velocity: f64) -> Result<FlowSpec> {
        let mut s = FlowSpec::new(angular_velocity, self.gluing_radius, self.bumps.clone())?;
        s.imported = self.imported.clone();
        Ok(s)
    }

    /// Radius outside of which velocity and vorticity vanish.
    pub fn support_radius(&self) -> f64 {
        2.0 * self.gluing_radius
    }

    /// Jet of the inner function `φ̄`.
    pub fn inner_jet(&self, x: [f64; 2]) -> Jet {
        let mut j = self.bumps.iter().filter_map(|b| b.jet(x)).fold(Jet::ZERO, |a, b| a + b);
        if let Some(imp) = &self.imported {
            j = j + imp.jet(x);
        }
        j
    }

    fn cutoff_jet(&self, x: [f64; 2]) -> Jet {
        let r = x[0].hypot(x[1]);
        let rr = self.gluing_radius;
        let c = cutoff_eval(r / rr);
        let d1 = c.d1 / rr;
        let d2 = c.d2 / (rr * rr);
        let d3 = c.d3 / (rr * rr * rr);
        let pv = ProfileValue { value: c.value, d1, d2, d3, d1_over_r: d1 / r, bend: (d2 - d1 / r) / r };
        Jet::radial([0.0, 0.0], x, &pv)
    }

    /// `φ̃` and its derivatives through third order.
    pub fn phi_tilde(&self, x: [f64; 2]) -> Jet {
        let r = x[0].hypot(x[1]);
        let rr = self.gluing_radius;
        let rotation = Jet::half_square(x, self.angular_velocity);
        if r <= rr {
            // χ ≡ 1 on the closed ball, with all derivatives zero.
            return self.inner_jet(x);
        }
        if r >= 2.0 * rr {
            return -rotation;
        }
        let chi = self.cutoff_jet(x);
        let mut chi_minus_one = chi;
        chi_minus_one.value -= 1.0;
        chi.mul(&self.inner_jet(x)) + chi_minus_one.mul(&rotation)
    }

    /// `v₀ = ∇⊥φ̃ + Ωx⊥`.
    pub fn velocity(&self, x: [f64; 2]) -> [f64; 2] {
        velocity_from_jet(&self.phi_tilde(x), x, self.angular_velocity)
    }

    /// `ω₀ = Δφ̃ + 2Ω`.
    pub fn vorticity(&self, x: [f64; 2]) -> f64 {
        self.phi_tilde(x).laplacian() + 2.0 * self.angular_velocity
    }

    pub fn sample(&self, x: [f64; 2]) -> FieldSample {
        let j = self.phi_tilde(x);
        FieldSample {
            point: x,
            phi: j.value,
            grad: j.grad,
            laplacian: j.laplacian(),
            velocity: velocity_from_jet(&j, x, self.angular_velocity),
            vorticity: j.laplacian() + 2.0 * self.angular_velocity,
            provenance: self.provenance(),
        }
    }

    /// Evaluates `φ̃`, `v₀` and `ω₀` on every node of `grid`.
    pub fn sample_grid(&self, grid: &Grid2) -> Result<FieldGrids> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let samples: Vec<[f64; 4]> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let s = self.sample(grid.point_at(k));
                [s.phi, s.velocity[0], s.velocity[1], s.vorticity]
            })
            .collect();
        let column = |c: usize, name: &str| GridData::new(*grid, name, samples.iter().map(|s| s[c]).collect());
        Ok(FieldGrids {
            phi: column(0, "phi")?,
            vx: column(1, "vx")?,
            vy: column(2, "vy")?,
            omega: column(3, "omega")?,
        })
    }

    /// `ω₀` on every node of `grid`.
    pub fn vorticity_grid(&self, grid: &Grid2) -> Vec<f64> {
        (0..grid.len()).into_par_iter().map(|k| self.vorticity(grid.point_at(k))).collect()
    }
}

impl ScalarField for FlowSpec {
    fn jet(&self, x: [f64; 2]) -> Jet {
        self.phi_tilde(x)
    }
}

fn velocity_from_jet(j: &Jet, x: [f64; 2], omega: f64) -> [f64; 2] {
    let pg = j.perp_grad();
    let xp = perp(x);
    [pg[0] + omega * xp[0], pg[1] + omega * xp[1]]
}

/// Evaluated field quantities at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub point: [f64; 2],
    pub phi: f64,
    pub grad: [f64; 2],
    pub laplacian: f64,
    pub velocity: [f64; 2],
    pub vorticity: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug)]
pub struct FieldGrids {
    pub phi: GridData,
    pub vx: GridData,
    pub vy: GridData,
    pub omega: GridData,
}
