//! Locally radial decomposition and vorticity bounds of a construction.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

use super::grid::Grid2;
use super::FlowSpec;

const CIRCLE_ANGLES: usize = 64;
const CIRCLE_RADII: usize = 24;
const ANALYTIC_TOLERANCE: f64 = 1e-10;
const IMPORTED_TOLERANCE: f64 = 1e-6;

/// An open annulus `inner < |x - center| < outer` (`outer` may be infinite).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Annulus {
    pub center: [f64; 2],
    pub inner: f64,
    pub outer: f64,
    pub label: String,
    /// Largest normalized angular oscillation of `φ̃` over the sampled circles.
    pub variation: f64,
    pub radial: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialVerdict {
    Radial,
    LocallyRadial,
    NotLocallyRadial,
}

impl fmt::Display for RadialVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RadialVerdict::Radial => "radial",
            RadialVerdict::LocallyRadial => "locally radial, not radial",
            RadialVerdict::NotLocallyRadial => "not locally radial (numerically)",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LocallyRadialReport {
    pub verdict: RadialVerdict,
    pub annuli: Vec<Annulus>,
    pub tolerance: f64,
}

impl fmt::Display for LocallyRadialReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verdict: {}", self.verdict)?;
        for a in &self.annuli {
            writeln!(
                f,
                "  {:<12} center=({:.6}, {:.6}) r in ({:.6}, {}) variation={:.3e} radial={}",
                a.label, a.center[0], a.center[1], a.inner, a.outer, a.variation, a.radial
            )?;
        }
        write!(f, "  remaining points belong to the critical set")
    }
}

/// Largest `max - min` of `phi` over circles about `center`, relative to the
/// largest `|phi|` seen.
fn angular_variation(phi: impl Fn([f64; 2]) -> f64, center: [f64; 2], inner: f64, outer: f64) -> f64 {
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..CIRCLE_RADII {
        let r = inner + (outer - inner) * (i as f64 + 0.5) / CIRCLE_RADII as f64;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for a in 0..CIRCLE_ANGLES {
            let t = 2.0 * PI * a as f64 / CIRCLE_ANGLES as f64;
            let v = phi([center[0] + r * t.cos(), center[1] + r * t.sin()]);
            lo = lo.min(v);
            hi = hi.max(v);
            scale = scale.max(v.abs());
        }
        worst = worst.max(hi - lo);
    }
    if scale > 0.0 {
        worst / scale
    } else {
        0.0
    }
}

fn annulus(spec: &FlowSpec, center: [f64; 2], inner: f64, outer: f64, label: String, tol: f64) -> Annulus {
    // Infinite annuli are probed up to the support of the velocity and a bit past it.
    let probe = if outer.is_finite() { outer } else { 2.5 * spec.gluing_radius() };
    let variation = angular_variation(|x| spec.phi_tilde(x).value, center, inner, probe);
    Annulus { center, inner, outer, label, variation, radial: variation <= tol }
}

/// Realizes the decomposition of the plane into disjoint annuli on which
/// `φ̃` is radial plus a critical set, and verifies radiality by sampling.
pub fn check_locally_radial(spec: &FlowSpec) -> LocallyRadialReport {
    let omega = spec.angular_velocity();
    let rr = spec.gluing_radius();
    if let Some(imp) = spec.imported() {
        let mut candidates = vec![[0.0, 0.0], imp.peak()];
        candidates.dedup();
        let g = imp.data().grid;
        let mut annuli: Vec<Annulus> = candidates
            .into_iter()
            .map(|c| {
                let outer = [g.x0, g.x_max()]
                    .iter()
                    .flat_map(|&x| [g.y0, g.y_max()].map(|y| (x - c[0]).hypot(y - c[1])))
                    .fold(0.0, f64::max);
                let variation = angular_variation(|x| imp.jet(x).value, c, 0.0, outer);
                Annulus {
                    center: c,
                    inner: 0.0,
                    outer,
                    label: "imported".into(),
                    variation,
                    radial: variation <= IMPORTED_TOLERANCE,
                }
            })
            .collect();
        let verdict = if annuli.iter().any(|a| a.radial) {
            annuli.retain(|a| a.radial);
            annuli.truncate(1);
            RadialVerdict::LocallyRadial
        } else {
            RadialVerdict::NotLocallyRadial
        };
        return LocallyRadialReport { verdict, annuli, tolerance: IMPORTED_TOLERANCE };
    }

    let tol = ANALYTIC_TOLERANCE;
    let all_central = spec.bumps().iter().all(|b| b.center == [0.0, 0.0]);
    if all_central {
        let a = annulus(spec, [0.0, 0.0], 0.0, f64::INFINITY, "whole-plane".into(), tol);
        let verdict = if a.radial { RadialVerdict::Radial } else { RadialVerdict::NotLocallyRadial };
        return LocallyRadialReport { verdict, annuli: vec![a], tolerance: tol };
    }
    let mut annuli: Vec<Annulus> = spec
        .bumps()
        .iter()
        .enumerate()
        .map(|(k, b)| annulus(spec, b.center, 0.0, b.support_radius(), format!("bump-{k}"), tol))
        .collect();
    if omega != 0.0 {
        // The gluing ring and the far field share the origin as centre and are merged.
        annuli.push(annulus(spec, [0.0, 0.0], rr, f64::INFINITY, "exterior".into(), tol));
    }
    let verdict =
        if annuli.iter().all(|a| a.radial) { RadialVerdict::LocallyRadial } else { RadialVerdict::NotLocallyRadial };
    LocallyRadialReport { verdict, annuli, tolerance: tol }
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaBoundsReport {
    pub angular_velocity: f64,
    pub inf_plane: f64,
    pub sup_plane: f64,
    pub inf_ball: f64,
    pub sup_ball: f64,
    pub stationary: bool,
    /// `½ inf_{B_R} ω₀ < Ω < ½ sup_{B_R} ω₀`.
    pub strict_inclusion: bool,
    /// The full chain `inf_plane ≤ ½ inf_ball < Ω < ½ sup_ball ≤ sup_plane`.
    pub chain_holds: bool,
}

impl fmt::Display for OmegaBoundsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "omega = {}", self.angular_velocity)?;
        writeln!(f, "inf/sup over plane: {:.12e} / {:.12e}", self.inf_plane, self.sup_plane)?;
        writeln!(f, "inf/sup over ball:  {:.12e} / {:.12e}", self.inf_ball, self.sup_ball)?;
        if self.stationary {
            write!(f, "stationary case")
        } else {
            write!(f, "strict inclusion: {}  chain: {}", self.strict_inclusion, self.chain_holds)
        }
    }
}

/// Bounds of `ω₀` sampled on `grid`. Points outside the grid count as zero
/// vorticity, which is exact beyond `2R`.
pub fn omega_bounds_check(spec: &FlowSpec, grid: &Grid2) -> Result<OmegaBoundsReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let w = spec.vorticity_grid(grid);
    let rr = spec.gluing_radius();
    let (mut inf_plane, mut sup_plane) = (0.0f64, 0.0f64);
    let (mut inf_ball, mut sup_ball) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, &v) in w.iter().enumerate() {
        inf_plane = inf_plane.min(v);
        sup_plane = sup_plane.max(v);
        let p = grid.point_at(k);
        if p[0].hypot(p[1]) < rr {
            inf_ball = inf_ball.min(v);
            sup_ball = sup_ball.max(v);
        }
    }
    let omega = spec.angular_velocity();
    let strict_inclusion = 0.5 * inf_ball < omega && omega < 0.5 * sup_ball;
    Ok(OmegaBoundsReport {
        angular_velocity: omega,
        inf_plane,
        sup_plane,
        inf_ball,
        sup_ball,
        stationary: omega == 0.0,
        strict_inclusion,
        chain_holds: strict_inclusion && inf_plane <= 0.5 * inf_ball && 0.5 * sup_ball <= sup_plane,
    })
}
