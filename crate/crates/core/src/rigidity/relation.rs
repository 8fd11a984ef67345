//! Single-valuedness of `Δφ` as a function of `φ`, and agreement of the
//! planar Laplacian with the radial operator on symmetric regions.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_composer::ScalarField;
use crate::radial_profile::fornberg_weights;

/// Open annulus `inner < |x - center| < outer`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub center: [f64; 2],
    pub inner: f64,
    pub outer: f64,
}

impl Region {
    fn contains(&self, x: [f64; 2]) -> bool {
        let d = (x[0] - self.center[0]).hypot(x[1] - self.center[1]);
        d > self.inner && d < self.outer
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelationParams {
    pub bins: usize,
    /// Verdict threshold relative to the range of `Δφ`.
    pub tau_f: f64,
    /// Points with `|∇φ|` at or below this fraction of the regional maximum are dropped.
    pub gradient_threshold: f64,
    /// Nodes per side of the Cartesian sampling of the region's bounding box.
    pub resolution: usize,
    /// Neighbours (in `φ` order) used for each local quadratic fit.
    pub window: usize,
}

impl Default for RelationParams {
    fn default() -> Self {
        RelationParams { bins: 256, tau_f: 1e-6, gradient_threshold: 1e-6, resolution: 256, window: 7 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FunctionalRelationReport {
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
    pub sample_count: usize,
    pub filtered_out: usize,
    /// Largest per-bin spread of the local-fit residuals.
    pub width: f64,
    /// Largest per-bin spread of the raw `Δφ` values.
    pub binned_spread: f64,
    /// Range of `Δφ` over the samples.
    pub range: f64,
    pub tau_f: f64,
    pub single_valued: bool,
}

impl FunctionalRelationReport {
    pub fn relative_width(&self) -> f64 {
        if self.range > 0.0 {
            self.width / self.range
        } else {
            0.0
        }
    }

    /// Scatter of `(φ, Δφ)` pairs as two-column CSV.
    pub fn write_scatter(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "phi,lap_phi")?;
        for (a, b) in &self.samples {
            writeln!(w, "{a:e},{b:e}")?;
        }
        Ok(())
    }
}

impl fmt::Display for FunctionalRelationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} samples ({} filtered), W = {:.3e} ({:.3e} of range {:.3e}), raw binned spread {:.3e}: {}",
            self.sample_count,
            self.filtered_out,
            self.width,
            self.relative_width(),
            self.range,
            self.binned_spread,
            if self.single_valued { "single-valued" } else { "multi-valued" }
        )
    }
}

/// Residual at `x[i]` of the least-squares quadratic through the window.
fn local_fit_residual(xs: &[f64], ys: &[f64], i: usize) -> f64 {
    let x0 = xs[i];
    let span = xs.iter().fold(0.0f64, |m, x| m.max((x - x0).abs()));
    if span == 0.0 {
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        return ys[i] - mean;
    }
    // Normal equations of a + b t + c t² in t = (x - x0) / span.
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (x, y) in xs.iter().zip(ys) {
        let t = (x - x0) / span;
        let basis = [1.0, t, t * t];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += basis[r] * basis[c];
            }
            rhs[r] += basis[r] * y;
        }
    }
    for dim in [3usize, 2, 1] {
        if let Some(sol) = solve(&m, &rhs, dim) {
            return ys[i] - sol;
        }
    }
    0.0
}

/// Constant coefficient of the leading `dim × dim` system, if well conditioned.
fn solve(m: &[[f64; 3]; 3], rhs: &[f64; 3], dim: usize) -> Option<f64> {
    let mut a = [[0.0f64; 4]; 3];
    for r in 0..dim {
        a[r][..dim].copy_from_slice(&m[r][..dim]);
        a[r][3] = rhs[r];
    }
    let scale = (0..dim).map(|r| a[r][r].abs()).fold(0.0, f64::max);
    for col in 0..dim {
        let piv = (col..dim).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        for r in 0..dim {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..4 {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some(a[0][3] / a[0][0])
}

/// Samples `(φ, Δφ)` over `region`, drops near-critical points and measures
/// how far the samples are from lying on one curve.
///
/// Samples are ordered by `φ`; each gets the residual of a least-squares
/// quadratic through its `window` nearest neighbours in that order. On a
/// single smooth curve those residuals are tiny, while interleaved branches
/// leave residuals of the size of their separation. `W` is the largest
/// per-bin spread of the residuals.
pub fn functional_relation_test<F: ScalarField + ?Sized>(
    field: &F,
    region: &Region,
    params: &RelationParams,
) -> Result<FunctionalRelationReport> {
    if params.bins == 0 || params.resolution < 2 || params.window < 3 {
        return Err(Error::InvalidAnalysis("bins, resolution and window are too small".into()));
    }
    if !(region.outer > region.inner && region.inner >= 0.0) {
        return Err(Error::InvalidAnalysis(format!("invalid region radii ({}, {})", region.inner, region.outer)));
    }
    let outer = if region.outer.is_finite() { region.outer } else { field.extent() };
    if !outer.is_finite() {
        return Err(Error::InvalidAnalysis("unbounded region".into()));
    }
    let n = params.resolution;
    let h = 2.0 * outer / (n - 1) as f64;
    let raw: Vec<(f64, f64, f64)> = (0..n * n)
        .into_par_iter()
        .filter_map(|k| {
            let x = [region.center[0] - outer + (k % n) as f64 * h, region.center[1] - outer + (k / n) as f64 * h];
            if !region.contains(x) {
                return None;
            }
            let j = field.jet(x);
            Some((j.value, j.laplacian(), j.grad_norm()))
        })
        .collect();
    let gmax = raw.iter().fold(0.0f64, |m, s| m.max(s.2));
    let cut = params.gradient_threshold * gmax;
    let mut samples: Vec<(f64, f64)> = raw.iter().filter(|s| s.2 > cut).map(|s| (s.0, s.1)).collect();
    let filtered_out = raw.len() - samples.len();
    if samples.len() < params.window {
        return Err(Error::EmptyRegion);
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let m = samples.len();
    let w = params.window;
    let residuals: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let start = i.saturating_sub(w / 2).min(m - w);
            local_fit_residual(&xs[start..start + w], &ys[start..start + w], i - start)
        })
        .collect();

    let (pmin, pmax) = (xs[0], xs[m - 1]);
    let bin_of = |p: f64| {
        if pmax > pmin {
            (((p - pmin) / (pmax - pmin) * params.bins as f64) as usize).min(params.bins - 1)
        } else {
            0
        }
    };
    let mut res_bins = vec![(f64::INFINITY, f64::NEG_INFINITY); params.bins];
    let mut raw_bins = vec![(f64::INFINITY, f64::NEG_INFINITY); params.bins];
    for i in 0..m {
        let b = bin_of(xs[i]);
        res_bins[b] = (res_bins[b].0.min(residuals[i]), res_bins[b].1.max(residuals[i]));
        raw_bins[b] = (raw_bins[b].0.min(ys[i]), raw_bins[b].1.max(ys[i]));
    }
    let spread = |bins: &[(f64, f64)]| bins.iter().filter(|b| b.1 >= b.0).map(|b| b.1 - b.0).fold(0.0, f64::max);
    let width = spread(&res_bins);
    let binned_spread = spread(&raw_bins);
    let range = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max) - ys.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FunctionalRelationReport {
        samples,
        sample_count: m,
        filtered_out,
        width,
        binned_spread,
        range,
        tau_f: params.tau_f,
        single_valued: width <= params.tau_f * range,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RadialConsistencyReport {
    pub center: [f64; 2],
    pub inner: f64,
    pub outer: f64,
    pub max_discrepancy: f64,
    /// `max |Δφ|` over the compared points.
    pub scale: f64,
    pub relative: f64,
}

const RAY_ORDER: usize = 6;
const CHECK_ANGLES: usize = 8;

/// Extracts `φ(r)` along a ray from `center`, differentiates it with local
/// polynomials and compares `φ'' + φ'/r` against the planar `Δφ` on circles
/// of the same radii.
pub fn radial_consistency<F: ScalarField + ?Sized>(
    field: &F,
    center: [f64; 2],
    inner: f64,
    outer: f64,
    dr: f64,
) -> Result<RadialConsistencyReport> {
    let width = outer - inner;
    if !(width >= 4.0 * dr) {
        return Err(Error::IntervalTooThin { width, minimum: 4.0 * dr });
    }
    let hs = dr / 16.0;
    let count = (width / hs).ceil() as usize;
    let radii: Vec<f64> = (0..=count).map(|i| inner + width * i as f64 / count as f64).collect();
    let on_ray = |r: f64| field.jet([center[0] + r, center[1]]).value;
    let values: Vec<f64> = radii.iter().map(|&r| on_ray(r)).collect();
    // Mirror an interval that starts at the centre.
    let (nodes, samples): (Vec<f64>, Vec<f64>) = if inner == 0.0 {
        radii[1..].iter().rev().map(|r| (-r, on_ray(*r))).chain(radii.iter().copied().zip(values.iter().copied())).unzip()
    } else {
        (radii.clone(), values.clone())
    };
    let w = RAY_ORDER + 1;
    let pairs: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| {
            let upper = nodes.partition_point(|&x| x <= r);
            let start = upper.saturating_sub(1).saturating_sub(RAY_ORDER / 2).min(nodes.len() - w);
            let wts = fornberg_weights(r, &nodes[start..start + w], 2);
            let d1: f64 = wts[1].iter().zip(&samples[start..start + w]).map(|(a, b)| a * b).sum();
            let d2: f64 = wts[2].iter().zip(&samples[start..start + w]).map(|(a, b)| a * b).sum();
            let radial = if r > 0.0 { d2 + d1 / r } else { 2.0 * d2 };
            (0..CHECK_ANGLES)
                .map(|k| {
                    let t = 2.0 * PI * (k as f64 + 0.5) / CHECK_ANGLES as f64;
                    let lap = field.jet([center[0] + r * t.cos(), center[1] + r * t.sin()]).laplacian();
                    ((lap - radial).abs(), lap.abs())
                })
                .fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)))
        })
        .collect();
    let max_discrepancy = pairs.iter().fold(0.0f64, |m, p| m.max(p.0));
    let scale = pairs.iter().fold(0.0f64, |m, p| m.max(p.1));
    Ok(RadialConsistencyReport {
        center,
        inner,
        outer,
        max_discrepancy,
        scale,
        relative: if scale > 0.0 { max_discrepancy / scale } else { max_discrepancy },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_composer::{Bump, FlowSpec, Jet};
    use crate::radial_profile::RadialProfile;

    fn bump(c: [f64; 2], a: f64, rho: f64, p: u32) -> Bump {
        Bump::new(c, RadialProfile::closed_form(a, rho, p).unwrap())
    }

    #[test]
    fn single_bump_relation_is_single_valued() {
        let spec = FlowSpec::new(0.0, 3.0, vec![bump([0.0, 0.0], 1.0, 1.5, 8)]).unwrap();
        let region = Region { center: [0.0, 0.0], inner: 0.0, outer: 1.5 };
        let r = functional_relation_test(&spec, &region, &RelationParams::default()).unwrap();
        assert!(r.single_valued, "{r}");
        assert!(r.filtered_out > 0);
    }

    #[test]
    fn distinct_bumps_are_multi_valued_globally() {
        let spec = FlowSpec::new(1.0, 4.0, vec![bump([2.0, 0.0], 1.0, 1.5, 6), bump([-2.0, 0.0], 0.6, 1.5, 8)]).unwrap();
        let p = RelationParams::default();
        let local = functional_relation_test(&spec, &Region { center: [2.0, 0.0], inner: 0.0, outer: 1.5 }, &p).unwrap();
        let global = functional_relation_test(&spec, &Region { center: [0.0, 0.0], inner: 0.0, outer: 4.0 }, &p).unwrap();
        assert!(!global.single_valued);
        assert!(global.width >= 100.0 * local.width, "{local} / {global}");
    }

    #[test]
    fn constant_region_is_empty() {
        let f = |_: [f64; 2]| Jet::constant(3.0);
        let r = functional_relation_test(&f, &Region { center: [0.0, 0.0], inner: 0.0, outer: 1.0 }, &RelationParams::default());
        assert!(matches!(r, Err(Error::EmptyRegion)));
    }

    #[test]
    fn radial_consistency_on_radial_and_exterior() {
        let spec = FlowSpec::new(1.0, 3.0, vec![bump([0.0, 0.0], 1.0, 2.0, 8)]).unwrap();
        let r = radial_consistency(&spec, [0.0, 0.0], 0.0, 7.0, 0.1).unwrap();
        assert!(r.relative < 1e-8, "{}", r.relative);
        let two = FlowSpec::new(1.0, 4.0, vec![bump([2.0, 0.0], 1.0, 1.5, 6), bump([-2.0, 0.0], 0.6, 1.5, 8)]).unwrap();
        let e = radial_consistency(&two, [0.0, 0.0], 4.0, 8.0, 0.1).unwrap();
        assert!(e.relative < 1e-8, "{}", e.relative);
        assert!(matches!(radial_consistency(&spec, [0.0, 0.0], 1.0, 1.2, 0.1), Err(Error::IntervalTooThin { .. })));
    }
}
