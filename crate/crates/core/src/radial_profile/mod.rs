//! One-dimensional radial building blocks: the plateau cutoff, compactly
//! supported stream-function profiles, and the radial semilinear IVP.

mod interp;
mod ivp;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use interp::{fornberg_weights, local_derivatives};
pub use ivp::{IvpSegment, Nonlinearity, RadialIvpProblem, StepControl, solve_radial_ivp};

/// Value and derivatives of the plateau cutoff at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffValue {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl CutoffValue {
    const ONE: CutoffValue = CutoffValue { value: 1.0, d1: 0.0, d2: 0.0, d3: 0.0 };
    const ZERO: CutoffValue = CutoffValue { value: 0.0, d1: 0.0, d2: 0.0, d3: 0.0 };
}

/// `exp(-1/s)` for `s > 0` and its first three derivatives; zero otherwise.
fn smooth_step_seed(s: f64) -> [f64; 4] {
    if s <= 0.0 {
        return [0.0; 4];
    }
    let h = (-1.0 / s).exp();
    if h == 0.0 {
        return [0.0; 4];
    }
    let u = 1.0 / s;
    let u2 = u * u;
    [
        h,
        h * u2,
        h * (u2 * u2 - 2.0 * u2 * u),
        h * (u2 * u2 * u2 - 6.0 * u2 * u2 * u + 6.0 * u2 * u2),
    ]
}

/// Smooth even cutoff: 1 on `|t| <= 1`, 0 on `|t| >= 2`, built as the
/// partition `h(2-|t|) / (h(2-|t|) + h(|t|-1))` with `h(s) = exp(-1/s)`.
pub fn cutoff_eval(t: f64) -> CutoffValue {
    let a = t.abs();
    if a <= 1.0 {
        return CutoffValue::ONE;
    }
    if a >= 2.0 {
        return CutoffValue::ZERO;
    }
    let hn = smooth_step_seed(2.0 - a);
    let hd = smooth_step_seed(a - 1.0);
    // derivatives with respect to |t|
    let num = [hn[0], -hn[1], hn[2], -hn[3]];
    let den = [
        num[0] + hd[0],
        num[1] + hd[1],
        num[2] + hd[2],
        num[3] + hd[3],
    ];
    let q0 = num[0] / den[0];
    let q1 = (num[1] - q0 * den[1]) / den[0];
    let q2 = (num[2] - 2.0 * q1 * den[1] - q0 * den[2]) / den[0];
    let q3 = (num[3] - 3.0 * q2 * den[1] - 3.0 * q1 * den[2] - q0 * den[3]) / den[0];
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    CutoffValue { value: q0, d1: sign * q1, d2: q2, d3: sign * q3 }
}

/// Profile value and radial derivatives, together with the two
/// combinations that are singular-looking at the origin:
/// `d1_over_r = β'/r` and `bend = (β'' - β'/r)/r`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ProfileValue {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d1_over_r: f64,
    pub bend: f64,
}

impl ProfileValue {
    /// Radial Laplacian `β'' + β'/r`.
    pub fn laplacian(&self) -> f64 {
        self.d2 + self.d1_over_r
    }

    /// Radial derivative of the Laplacian, `(Δβ)'`.
    pub fn laplacian_slope(&self) -> f64 {
        self.d3 + self.bend
    }
}

/// Compactly supported radial stream-function profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadialProfile {
    /// `A (1 - (r/ρ)²)^p` on `[0, ρ]`, zero beyond; of class `C^{p-1}`.
    ClosedForm {
        amplitude: f64,
        support_radius: f64,
        exponent: u32,
    },
    Tabulated(TabulatedProfile),
}

impl RadialProfile {
    pub fn closed_form(amplitude: f64, support_radius: f64, exponent: u32) -> Result<Self> {
        let p = RadialProfile::ClosedForm { amplitude, support_radius, exponent };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RadialProfile::ClosedForm { amplitude, support_radius, exponent } => {
                if !amplitude.is_finite() {
                    return Err(Error::InvalidProfile(format!("amplitude {amplitude} is not finite")));
                }
                if !(support_radius.is_finite() && *support_radius > 0.0) {
                    return Err(Error::InvalidProfile(format!(
                        "support radius must be positive, got {support_radius}"
                    )));
                }
                if *exponent < 3 {
                    return Err(Error::InvalidProfile(format!(
                        "smoothness exponent must be at least 3, got {exponent}"
                    )));
                }
                Ok(())
            }
            RadialProfile::Tabulated(t) => t.validate(),
        }
    }

    pub fn support_radius(&self) -> f64 {
        match self {
            RadialProfile::ClosedForm { support_radius, .. } => *support_radius,
            RadialProfile::Tabulated(t) => t.support_radius(),
        }
    }

    /// Largest `k` with the profile in `C^k` across its support boundary,
    /// when known.
    pub fn smoothness(&self) -> Option<u32> {
        match self {
            RadialProfile::ClosedForm { exponent, .. } => Some(exponent - 1),
            RadialProfile::Tabulated(_) => None,
        }
    }

    pub fn eval(&self, r: f64) -> Result<ProfileValue> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::NegativeRadius(r));
        }
        Ok(self.eval_unchecked(r))
    }

    /// Evaluation for `r >= 0` known by the caller.
    pub(crate) fn eval_unchecked(&self, r: f64) -> ProfileValue {
        match self {
            RadialProfile::ClosedForm { amplitude, support_radius, exponent } => {
                closed_form_eval(*amplitude, *support_radius, *exponent, r)
            }
            RadialProfile::Tabulated(t) => t.eval(r),
        }
    }

    /// `(β, β', β'')` at `r`.
    pub fn profile_eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        let v = self.eval(r)?;
        Ok((v.value, v.d1, v.d2))
    }

    /// `Δβ = β'' + β'/r`, with the limit `2β''(0)` at the origin.
    pub fn radial_laplacian(&self, r: f64) -> Result<f64> {
        Ok(self.eval(r)?.laplacian())
    }
}

fn closed_form_eval(amp: f64, rho: f64, p: u32, r: f64) -> ProfileValue {
    if r >= rho {
        return ProfileValue::default();
    }
    let p_f = p as f64;
    let rho2 = rho * rho;
    let s = r * r / rho2;
    let u = 1.0 - s;
    let u_p3 = u.powi(p as i32 - 3);
    let u_p2 = u_p3 * u;
    let u_p1 = u_p2 * u;
    let value = amp * u_p1 * u;
    let d1_over_r = -2.0 * amp * p_f / rho2 * u_p1;
    let d1 = d1_over_r * r;
    let bend = 4.0 * amp * p_f * (p_f - 1.0) * r / (rho2 * rho2) * u_p2;
    let d2 = d1_over_r + bend * r;
    let d3 = 4.0 * amp * p_f * (p_f - 1.0) * r / (rho2 * rho2)
        * (3.0 * u_p2 - 2.0 * (p_f - 2.0) * s * u_p3);
    ProfileValue { value, d1, d2, d3, d1_over_r, bend }
}

/// Profile given by samples `(r_i, β_i)`, interpolated locally with a
/// polynomial of degree `order`. When the table starts at `r = 0` the
/// samples are mirrored so that the interpolant is even.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableData", into = "TableData")]
pub struct TabulatedProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
    order: usize,
    nodes: Vec<f64>,
    samples: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TableData {
    radii: Vec<f64>,
    values: Vec<f64>,
    order: usize,
}

impl TryFrom<TableData> for TabulatedProfile {
    type Error = Error;
    fn try_from(d: TableData) -> Result<Self> {
        TabulatedProfile::new(d.radii, d.values, d.order)
    }
}

impl From<TabulatedProfile> for TableData {
    fn from(t: TabulatedProfile) -> Self {
        TableData { radii: t.radii, values: t.values, order: t.order }
    }
}

pub const DEFAULT_INTERPOLATION_ORDER: usize = 5;

impl TabulatedProfile {
    pub fn new(radii: Vec<f64>, values: Vec<f64>, order: usize) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::InvalidProfile("radius and value columns differ in length".into()));
        }
        if order == 0 {
            return Err(Error::InvalidProfile("interpolation order must be positive".into()));
        }
        if radii.len() < order + 1 {
            return Err(Error::InvalidProfile(format!(
                "table of {} samples is too short for order {order}",
                radii.len()
            )));
        }
        if radii.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("table contains non-finite entries".into()));
        }
        if radii[0] < 0.0 {
            return Err(Error::InvalidProfile("table radii must be non-negative".into()));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile("table radii must be strictly increasing".into()));
        }
        let (nodes, samples) = if radii[0] == 0.0 {
            let mut nodes: Vec<f64> = radii[1..].iter().rev().map(|r| -r).collect();
            let mut samples: Vec<f64> = values[1..].iter().rev().copied().collect();
            nodes.extend_from_slice(&radii);
            samples.extend_from_slice(&values);
            (nodes, samples)
        } else {
            (radii.clone(), values.clone())
        };
        Ok(TabulatedProfile { radii, values, order, nodes, samples })
    }

    /// Reads a two-column whitespace separated `(r, β)` table. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn load(path: &Path, order: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let bad = |reason: String| Error::TableFormat { path: path.to_path_buf(), reason };
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(bad(format!("line {}: expected 2 columns, found {}", lineno + 1, cols.len())));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("line {}: {e}", lineno + 1)));
            radii.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
        }
        TabulatedProfile::new(radii, values, order).map_err(|e| bad(e.to_string()))
    }

    fn validate(&self) -> Result<()> {
        TabulatedProfile::new(self.radii.clone(), self.values.clone(), self.order).map(|_| ())
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn support_radius(&self) -> f64 {
        *self.radii.last().expect("validated table is non-empty")
    }

    fn eval(&self, r: f64) -> ProfileValue {
        if r >= self.support_radius() {
            return ProfileValue::default();
        }
        let width = self.order + 1;
        let start = interp::window_start(&self.nodes, r, width);
        let nodes = &self.nodes[start..start + width];
        let mut d = local_derivatives(r, nodes, &self.samples[start..start + width]);
        if r == 0.0 {
            // Odd derivatives of an even function vanish at the centre.
            d[1] = 0.0;
            d[3] = 0.0;
        }
        let (d1_over_r, bend) = if r > 0.0 {
            let q = d[1] / r;
            (q, (d[2] - q) / r)
        } else {
            (d[2], 0.0)
        };
        ProfileValue { value: d[0], d1: d[1], d2: d[2], d3: d[3], d1_over_r, bend }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_plateau_support_and_midpoint() {
        assert_eq!(cutoff_eval(0.5).value, 1.0);
        assert_eq!(cutoff_eval(-1.0).value, 1.0);
        assert_eq!(cutoff_eval(3.0).value, 0.0);
        assert_eq!(cutoff_eval(2.0).value, 0.0);
        assert_eq!(cutoff_eval(1.5).value, 0.5);
        assert_eq!(cutoff_eval(0.5).d1, 0.0);
        assert_eq!(cutoff_eval(2.5).d2, 0.0);
    }

    #[test]
    fn cutoff_derivatives_match_finite_differences() {
        let h = 1e-5;
        for &t in &[1.1, 1.3, 1.5, 1.77, 1.9, -1.2, -1.6] {
            let c = cutoff_eval(t);
            let fd1 = (cutoff_eval(t + h).value - cutoff_eval(t - h).value) / (2.0 * h);
            let fd2 = (cutoff_eval(t + h).d1 - cutoff_eval(t - h).d1) / (2.0 * h);
            let fd3 = (cutoff_eval(t + h).d2 - cutoff_eval(t - h).d2) / (2.0 * h);
            assert!((c.d1 - fd1).abs() < 1e-7 * (1.0 + c.d1.abs()), "t={t}");
            assert!((c.d2 - fd2).abs() < 1e-6 * (1.0 + c.d2.abs()), "t={t}");
            assert!((c.d3 - fd3).abs() < 1e-5 * (1.0 + c.d3.abs()), "t={t}");
        }
    }

    #[test]
    fn closed_form_examples() {
        let p = RadialProfile::closed_form(1.0, 1.0, 4).unwrap();
        assert_eq!(p.profile_eval(0.0).unwrap(), (1.0, 0.0, -8.0));
        assert_eq!(p.profile_eval(1.0).unwrap(), (0.0, 0.0, 0.0));
        assert_eq!(p.profile_eval(0.5).unwrap().0, 0.31640625);
        assert_eq!(p.radial_laplacian(0.0).unwrap(), -16.0);
        assert_eq!(p.radial_laplacian(1.3).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_laplacian_matches_symbolic_derivative() {
        // β = (1 - r²)^4: β' = -8r(1-r²)^3, β'' = -8(1-r²)^3 + 48 r² (1-r²)^2
        let p = RadialProfile::closed_form(1.0, 1.0, 4).unwrap();
        let r: f64 = 0.5;
        let u: f64 = 1.0 - r * r;
        let d1 = -8.0 * r * u.powi(3);
        let d2 = -8.0 * u.powi(3) + 48.0 * r * r * u * u;
        let lap = p.radial_laplacian(r).unwrap();
        assert!((lap - (d2 + d1 / r)).abs() < 1e-14);
        // β''' = 144 r (1-r²)^2 - 192 r³ (1-r²)
        let d3 = 144.0 * r * u * u - 192.0 * r.powi(3) * u;
        assert!((p.eval(r).unwrap().d3 - d3).abs() < 1e-13);
    }

    #[test]
    fn negative_radius_rejected() {
        let p = RadialProfile::closed_form(1.0, 1.0, 4).unwrap();
        assert!(matches!(p.eval(-0.1), Err(Error::NegativeRadius(_))));
    }

    #[test]
    fn invalid_closed_form_parameters() {
        assert!(RadialProfile::closed_form(1.0, 0.0, 4).is_err());
        assert!(RadialProfile::closed_form(1.0, 1.0, 2).is_err());
        assert!(RadialProfile::closed_form(f64::NAN, 1.0, 4).is_err());
    }

    #[test]
    fn tabulated_reproduces_closed_form() {
        let exact = RadialProfile::closed_form(1.0, 1.0, 8).unwrap();
        let n = 2048;
        let radii: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let values: Vec<f64> = radii.iter().map(|&r| exact.eval(r).unwrap().value).collect();
        let tab = RadialProfile::Tabulated(TabulatedProfile::new(radii, values, 5).unwrap());
        for &r in &[0.0, 1e-4, 0.1234, 0.5, 0.77, 0.999] {
            let a = exact.eval(r).unwrap();
            let b = tab.eval(r).unwrap();
            assert!((a.value - b.value).abs() < 1e-12, "r={r}");
            assert!((a.d1 - b.d1).abs() < 1e-9, "r={r}");
            assert!((a.d2 - b.d2).abs() < 1e-6, "r={r}");
        }
        assert_eq!(tab.eval(1.0).unwrap(), ProfileValue::default());
        assert_eq!(tab.eval(0.0).unwrap().d1, 0.0);
    }

    #[test]
    fn table_validation() {
        assert!(TabulatedProfile::new(vec![0.0, 0.5, 0.4, 1.0], vec![1.0; 4], 2).is_err());
        assert!(TabulatedProfile::new(vec![0.0, 0.5], vec![1.0, 0.0], 5).is_err());
        assert!(TabulatedProfile::new(vec![-1.0, 0.5, 1.0], vec![1.0; 3], 1).is_err());
    }

    #[test]
    fn table_round_trips_through_serde() {
        let t = TabulatedProfile::new(vec![0.0, 0.5, 1.0, 1.5], vec![1.0, 0.5, 0.1, 0.0], 3).unwrap();
        let p = RadialProfile::Tabulated(t);
        let s = serde_json::to_string(&p).unwrap();
        let back: RadialProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
    }
}
