//! Rigidity diagnostics: the set of radii whose centred circles are level
//! sets of `φ`, gradient vanishing on the boundary circles of that set, and
//! single-valuedness of `Δφ` as a function of `φ`.

mod relation;

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_composer::{check_locally_radial, FlowSpec, LocallyRadialReport, ScalarField};

pub use relation::{
    functional_relation_test, radial_consistency, FunctionalRelationReport, RadialConsistencyReport, Region,
    RelationParams,
};

/// Angles used for the global normalization of the circle statistic.
const BASE_ANGLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymmetryParams {
    pub r_max: f64,
    pub dr: f64,
    pub n_angles: usize,
    pub tau: f64,
}

impl Default for SymmetryParams {
    fn default() -> Self {
        SymmetryParams { r_max: 10.0, dr: 0.1, n_angles: 256, tau: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundarySide {
    /// A member interval starts here; the gap lies below.
    Lower,
    /// A member interval ends here; the gap lies above.
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryRadius {
    pub index: usize,
    pub radius: f64,
    pub side: BoundarySide,
    pub non_isolated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetrySetEstimate {
    pub params: SymmetryParams,
    pub radii: Vec<f64>,
    pub sigma: Vec<f64>,
    pub member: Vec<bool>,
    /// Closed member intervals `[a, b]`.
    pub intervals: Vec<(f64, f64)>,
    pub boundaries: Vec<BoundaryRadius>,
    /// Oscillation of `φ` used to normalize `sigma`.
    pub oscillation: f64,
}

impl SymmetrySetEstimate {
    /// Open gaps between consecutive member intervals.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.intervals.windows(2).map(|w| (w[0].1, w[1].0)).collect()
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "radius,sigma,member")?;
        for ((r, s), m) in self.radii.iter().zip(&self.sigma).zip(&self.member) {
            writeln!(w, "{r:e},{s:e},{}", u8::from(*m))?;
        }
        Ok(())
    }
}

fn circle_point(r: f64, k: usize, n: usize) -> [f64; 2] {
    let t = 2.0 * PI * k as f64 / n as f64;
    [r * t.cos(), r * t.sin()]
}

fn check_params(p: &SymmetryParams, extent: f64) -> Result<()> {
    if p.n_angles < 64 {
        return Err(Error::InvalidAnalysis(format!("n_angles must be at least 64, got {}", p.n_angles)));
    }
    if !(p.dr > 0.0 && p.r_max > 0.0 && p.tau >= 0.0) {
        return Err(Error::InvalidAnalysis("dr and r_max must be positive, tau non-negative".into()));
    }
    if p.r_max > extent {
        return Err(Error::OutOfExtent { r_max: p.r_max, extent });
    }
    Ok(())
}

/// Samples circles `|x| = i·dr` and marks those on which `φ` is constant to
/// within `tau` times its global oscillation.
pub fn estimate_symmetry_set<F: ScalarField + ?Sized>(field: &F, params: SymmetryParams) -> Result<SymmetrySetEstimate> {
    check_params(&params, field.extent())?;
    let count = (params.r_max / params.dr + 1e-9).floor() as usize;
    let radii: Vec<f64> = (0..=count).map(|i| i as f64 * params.dr).collect();
    let extremes = |r: f64, n: usize| -> (f64, f64) {
        (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| {
            let v = field.jet(circle_point(r, k, n)).value;
            (lo.min(v), hi.max(v))
        })
    };
    let base: Vec<(f64, f64)> = radii.par_iter().map(|&r| extremes(r, BASE_ANGLES)).collect();
    let lo = base.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    let hi = base.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    let oscillation = hi - lo;
    let sigma: Vec<f64> = radii
        .par_iter()
        .map(|&r| {
            if r == 0.0 || oscillation == 0.0 {
                return 0.0;
            }
            let (a, b) = extremes(r, params.n_angles);
            (b - a) / oscillation
        })
        .collect();
    let member: Vec<bool> = sigma.iter().map(|&s| s <= params.tau).collect();

    let mut runs: Vec<(usize, usize)> = Vec::new();
    for (i, &m) in member.iter().enumerate() {
        if !m {
            continue;
        }
        match runs.last_mut() {
            Some(last) if last.1 + 1 == i => last.1 = i,
            _ => runs.push((i, i)),
        }
    }
    let non_isolated = |i: usize| {
        let lo = i.saturating_sub(4);
        let hi = (i + 4).min(count);
        (lo..=hi).any(|j| j != i && member[j])
    };
    let mut boundaries = Vec::new();
    for &(a, b) in &runs {
        if a > 0 {
            boundaries.push(BoundaryRadius { index: a, radius: radii[a], side: BoundarySide::Lower, non_isolated: non_isolated(a) });
        }
        if b > 0 && b < count {
            boundaries.push(BoundaryRadius { index: b, radius: radii[b], side: BoundarySide::Upper, non_isolated: non_isolated(b) });
        }
    }
    let intervals = runs.iter().map(|&(a, b)| (radii[a], radii[b])).collect();
    Ok(SymmetrySetEstimate { params, radii, sigma, member, intervals, boundaries, oscillation })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryGradient {
    pub boundary: BoundaryRadius,
    /// `max_θ |∇φ|` on the sampled boundary circle, relative to `max |∇φ|`.
    pub at_sample: f64,
    /// Radius in the resolution bracket where the circle maximum is smallest.
    pub located_radius: f64,
    /// Smallest relative circle maximum over the bracket.
    pub relative: f64,
    pub tolerance: f64,
    /// Only non-isolated boundaries can violate.
    pub violation: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryGradientReport {
    pub gradient_scale: f64,
    pub entries: Vec<BoundaryGradient>,
}

impl BoundaryGradientReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| !e.violation)
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "radius,side,non_isolated,at_sample,located_radius,relative,violation")?;
        for e in &self.entries {
            let side = match e.boundary.side {
                BoundarySide::Lower => "lower",
                BoundarySide::Upper => "upper",
            };
            writeln!(
                w,
                "{:e},{side},{},{:e},{:e},{:e},{}",
                e.boundary.radius,
                u8::from(e.boundary.non_isolated),
                e.at_sample,
                e.located_radius,
                e.relative,
                u8::from(e.violation)
            )?;
        }
        Ok(())
    }
}

/// Default relative tolerance of [`boundary_gradient_check`].
pub const BOUNDARY_GRADIENT_TOLERANCE: f64 = 1e-8;

/// Largest `|∇φ|` on each boundary circle of `estimate`.
///
/// Each boundary is located as the circle of smallest gradient in a
/// bracket reaching `2·dr` into the member side and `dr` into the gap,
/// scanned at `dr/16`.
pub fn boundary_gradient_check<F: ScalarField + ?Sized>(
    field: &F,
    estimate: &SymmetrySetEstimate,
    tolerance: f64,
) -> BoundaryGradientReport {
    let p = estimate.params;
    let n = p.n_angles;
    let circle_max = |r: f64| -> f64 { (0..n).map(|k| field.jet(circle_point(r, k, n)).grad_norm()).fold(0.0, f64::max) };
    let gradient_scale = estimate
        .radii
        .par_iter()
        .map(|&r| (0..BASE_ANGLES).map(|k| field.jet(circle_point(r, k, BASE_ANGLES)).grad_norm()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    let rel = |g: f64| if gradient_scale > 0.0 { g / gradient_scale } else { 0.0 };
    let entries = estimate
        .boundaries
        .par_iter()
        .map(|b| {
            let (lo, hi) = match b.side {
                BoundarySide::Lower => (b.radius - p.dr, b.radius + 2.0 * p.dr),
                BoundarySide::Upper => (b.radius - 2.0 * p.dr, b.radius + p.dr),
            };
            let lo = lo.max(0.0);
            let hi = hi.min(p.r_max);
            let steps = ((hi - lo) / (p.dr / 16.0)).round() as usize;
            let mut scan: Vec<f64> = (0..=steps).map(|s| lo + (hi - lo) * s as f64 / steps.max(1) as f64).collect();
            scan.sort_by(|x, y| (x - b.radius).abs().total_cmp(&(y - b.radius).abs()));
            let (located_radius, g) = scan
                .into_iter()
                .map(|r| (r, circle_max(r)))
                .fold((b.radius, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
            let relative = rel(g);
            BoundaryGradient {
                boundary: *b,
                at_sample: rel(circle_max(b.radius)),
                located_radius,
                relative,
                tolerance,
                violation: b.non_isolated && relative > tolerance,
            }
        })
        .collect();
    BoundaryGradientReport { gradient_scale, entries }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisParams {
    pub symmetry: SymmetryParams,
    pub relation: RelationParams,
    pub boundary_tolerance: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            symmetry: SymmetryParams::default(),
            relation: RelationParams::default(),
            boundary_tolerance: BOUNDARY_GRADIENT_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LabelledRelation {
    pub label: String,
    pub region: Region,
    pub report: FunctionalRelationReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct LabelledConsistency {
    pub interval: (f64, f64),
    pub report: RadialConsistencyReport,
}

/// Every rigidity diagnostic for one construction.
#[derive(Clone, Debug, Serialize)]
pub struct RigidityReport {
    pub structure: LocallyRadialReport,
    pub symmetry: SymmetrySetEstimate,
    pub boundary: BoundaryGradientReport,
    pub per_annulus: Vec<LabelledRelation>,
    pub global: Option<LabelledRelation>,
    pub consistency: Vec<LabelledConsistency>,
}

impl RigidityReport {
    /// Largest per-annulus width `W`.
    pub fn max_annulus_width(&self) -> f64 {
        self.per_annulus.iter().map(|r| r.report.width).fold(0.0, f64::max)
    }
}

/// Runs the full set of diagnostics on the relative stream function of `spec`.
pub fn analyze(spec: &FlowSpec, params: &AnalysisParams) -> Result<RigidityReport> {
    let structure = check_locally_radial(spec);
    let symmetry = estimate_symmetry_set(spec, params.symmetry)?;
    let boundary = boundary_gradient_check(spec, &symmetry, params.boundary_tolerance);
    let rp = &params.relation;
    let mut per_annulus = Vec::new();
    for (k, b) in spec.bumps().iter().enumerate() {
        let region = Region { center: b.center, inner: 0.0, outer: b.support_radius() };
        match functional_relation_test(spec, &region, rp) {
            Ok(report) => per_annulus.push(LabelledRelation { label: format!("bump-{k}"), region, report }),
            Err(Error::EmptyRegion) => {}
            Err(e) => return Err(e),
        }
    }
    if let Some(imp) = spec.imported() {
        if let Some(a) = structure.annuli.iter().find(|a| a.label == "imported" && a.radial) {
            let region = Region { center: a.center, inner: 0.0, outer: a.outer.min(imp.reach()) };
            if let Ok(report) = functional_relation_test(spec, &region, rp) {
                per_annulus.push(LabelledRelation { label: "imported".into(), region, report });
            }
        }
    }
    let global_region = Region { center: [0.0, 0.0], inner: 0.0, outer: spec.gluing_radius() };
    let global = match functional_relation_test(spec, &global_region, rp) {
        Ok(report) => Some(LabelledRelation { label: "global".into(), region: global_region, report }),
        Err(Error::EmptyRegion) => None,
        Err(e) => return Err(e),
    };
    // Interiors of the member intervals only.
    let dr = params.symmetry.dr;
    let r_max = params.symmetry.r_max;
    let consistency = symmetry
        .intervals
        .iter()
        .map(|&(a, b)| {
            let a = if a > 0.0 { a + 2.0 * dr } else { a };
            let b = if b < r_max { b - 2.0 * dr } else { b };
            (a, b)
        })
        .filter_map(|(a, b)| {
            radial_consistency(spec, [0.0, 0.0], a, b, dr).ok().map(|report| LabelledConsistency { interval: (a, b), report })
        })
        .collect();
    Ok(RigidityReport { structure, symmetry, boundary, per_annulus, global, consistency })
}

impl fmt::Display for RigidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "structure: {}", self.structure.verdict)?;
        write!(f, "symmetry set:")?;
        for (a, b) in &self.symmetry.intervals {
            write!(f, " [{a:.4}, {b:.4}]")?;
        }
        writeln!(f)?;
        for e in &self.boundary.entries {
            writeln!(
                f,
                "boundary r = {:.4} ({}isolated): max|grad phi| / scale = {:.3e} at r = {:.4}{}",
                e.boundary.radius,
                if e.boundary.non_isolated { "non-" } else { "" },
                e.relative,
                e.located_radius,
                if e.violation { "  VIOLATION" } else { "" }
            )?;
        }
        for r in self.per_annulus.iter().chain(&self.global) {
            writeln!(f, "relation {}: {}", r.label, r.report)?;
        }
        for c in &self.consistency {
            writeln!(
                f,
                "radial consistency on [{:.4}, {:.4}]: relative discrepancy {:.3e}",
                c.interval.0, c.interval.1, c.report.relative
            )?;
        }
        Ok(())
    }
}
