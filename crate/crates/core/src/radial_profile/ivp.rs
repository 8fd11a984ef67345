//! Radial semilinear IVP `φ'' + φ'/r + f(φ) = 0` on an interval away from
//! the origin, integrated with the Dormand–Prince 5(4) pair.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::{RadialProfile, TabulatedProfile};

/// Scalar nonlinearity `f` of the radial equation.
#[derive(Clone)]
pub struct Nonlinearity(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl Nonlinearity {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Nonlinearity(Arc::new(f))
    }

    pub fn eval(&self, phi: f64) -> f64 {
        (self.0)(phi)
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Nonlinearity(..)")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepControl {
    /// Embedded error control with mixed absolute/relative tolerance.
    Adaptive { atol: f64, rtol: f64 },
    /// Constant nominal step; each table interval is split into equal
    /// sub-steps no longer than `step`.
    Fixed { step: f64 },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Adaptive { atol: 1e-10, rtol: 1e-10 }
    }
}

#[derive(Clone, Debug)]
pub struct RadialIvpProblem {
    pub nonlinearity: Nonlinearity,
    pub r0: f64,
    pub phi0: f64,
    pub slope0: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub control: StepControl,
    /// Target spacing of the output table; defaults to `(r_max - r_min)/2048`.
    pub table_spacing: Option<f64>,
}

impl RadialIvpProblem {
    /// Problem on the symmetric interval `(r0 - eps, r0 + eps)`.
    pub fn new(nonlinearity: Nonlinearity, r0: f64, phi0: f64, slope0: f64, eps: f64) -> Self {
        RadialIvpProblem {
            nonlinearity,
            r0,
            phi0,
            slope0,
            r_min: r0 - eps,
            r_max: r0 + eps,
            control: StepControl::default(),
            table_spacing: None,
        }
    }

    pub fn with_interval(mut self, r_min: f64, r_max: f64) -> Self {
        self.r_min = r_min;
        self.r_max = r_max;
        self
    }

    pub fn with_control(mut self, control: StepControl) -> Self {
        self.control = control;
        self
    }

    pub fn with_table_spacing(mut self, spacing: f64) -> Self {
        self.table_spacing = Some(spacing);
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidIvp(m));
        if !(self.r_min > 0.0) {
            return bad(format!("interval must stay away from the origin, r_min = {}", self.r_min));
        }
        if !(self.r_min <= self.r0 && self.r0 <= self.r_max && self.r_min < self.r_max) {
            return bad(format!(
                "r0 = {} must lie in [{}, {}]",
                self.r0, self.r_min, self.r_max
            ));
        }
        if !(self.phi0.is_finite() && self.slope0.is_finite()) {
            return bad("initial data must be finite".into());
        }
        match self.control {
            StepControl::Adaptive { atol, rtol } if !(atol > 0.0 && rtol >= 0.0) => {
                return bad("tolerances must be positive".into());
            }
            StepControl::Fixed { step } if !(step > 0.0) => {
                return bad("fixed step must be positive".into());
            }
            _ => {}
        }
        if let Some(s) = self.table_spacing {
            if !(s > 0.0) {
                return bad("table spacing must be positive".into());
            }
        }
        Ok(())
    }
}

/// Sampled solution of the radial IVP, nodes in increasing `r`.
#[derive(Clone, Debug)]
pub struct IvpSegment {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl IvpSegment {
    /// Tabulated profile through the sampled values.
    pub fn to_profile(&self, order: usize) -> Result<RadialProfile> {
        Ok(RadialProfile::Tabulated(TabulatedProfile::new(
            self.radii.clone(),
            self.values.clone(),
            order,
        )?))
    }

    /// Order of the integrator's global error under fixed steps.
    pub const ORDER: u32 = 5;
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Integrator<'a> {
    f: &'a Nonlinearity,
    accepted: usize,
    rejected: usize,
}

impl Integrator<'_> {
    fn rhs(&self, r: f64, y: [f64; 2]) -> Result<[f64; 2]> {
        let fv = self.f.eval(y[0]);
        if !fv.is_finite() {
            return Err(Error::NonlinearityFailure { r, phi: y[0] });
        }
        Ok([y[1], -y[1] / r - fv])
    }

    /// One Dormand–Prince step; returns the 5th-order update and the
    /// embedded error vector.
    fn dp_step(&self, r: f64, y: [f64; 2], h: f64) -> Result<([f64; 2], [f64; 2])> {
        let mut k = [[0.0; 2]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for c in 0..2 {
                    ys[c] += h * A[s][j] * kj[c];
                }
            }
            k[s] = self.rhs(r + C[s] * h, ys)?;
        }
        let mut y5 = y;
        let mut err = [0.0; 2];
        for s in 0..7 {
            for c in 0..2 {
                y5[c] += h * B5[s] * k[s][c];
                err[c] += h * (B5[s] - B4[s]) * k[s][c];
            }
        }
        Ok((y5, err))
    }

    fn advance(&mut self, r_from: f64, r_to: f64, y: [f64; 2], control: StepControl, h_guess: &mut f64) -> Result<[f64; 2]> {
        let span = r_to - r_from;
        let dir = span.signum();
        match control {
            StepControl::Fixed { step } => {
                let n = (span.abs() / step - 1e-9).ceil().max(1.0) as usize;
                let h = span / n as f64;
                let mut y = y;
                for i in 0..n {
                    let r = r_from + i as f64 * h;
                    y = self.dp_step(r, y, h)?.0;
                    self.accepted += 1;
                }
                Ok(y)
            }
            StepControl::Adaptive { atol, rtol } => {
                let mut r = r_from;
                let mut y = y;
                let mut h = h_guess.abs().min(span.abs()) * dir;
                let mut attempts = 0usize;
                while (r_to - r) * dir > 0.0 {
                    if (r_to - r).abs() <= 1e-13 * r_to.abs().max(1.0) {
                        break;
                    }
                    let last = (r + h - r_to) * dir >= 0.0;
                    let h_try = if last { r_to - r } else { h };
                    if h_try.abs() < 1e-14 * r.abs().max(1.0) {
                        return Err(Error::StepUnderflow { r, h: h_try });
                    }
                    attempts += 1;
                    if attempts > 10_000_000 {
                        return Err(Error::StepUnderflow { r, h: h_try });
                    }
                    let (y_new, e) = self.dp_step(r, y, h_try)?;
                    let norm = ((0..2)
                        .map(|c| {
                            let sc = atol + rtol * y[c].abs().max(y_new[c].abs());
                            (e[c] / sc).powi(2)
                        })
                        .sum::<f64>()
                        / 2.0)
                        .sqrt();
                    let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                    if norm <= 1.0 {
                        r = if last { r_to } else { r + h_try };
                        y = y_new;
                        self.accepted += 1;
                        if !last || factor < 1.0 {
                            h = h_try * factor;
                        }
                    } else {
                        self.rejected += 1;
                        h = h_try * factor;
                    }
                }
                *h_guess = h.abs();
                Ok(y)
            }
        }
    }
}

/// Integrates the radial IVP outward and inward from `r0`, returning the
/// solution tabulated on a grid that contains `r0` as a node.
pub fn solve_radial_ivp(problem: &RadialIvpProblem) -> Result<IvpSegment> {
    problem.validate()?;
    let target = problem
        .table_spacing
        .unwrap_or((problem.r_max - problem.r_min) / 2048.0);
    let lo_len = problem.r0 - problem.r_min;
    let hi_len = problem.r_max - problem.r0;
    let n_lo = if lo_len > 0.0 { (lo_len / target).ceil() as usize } else { 0 };
    let n_hi = if hi_len > 0.0 { (hi_len / target).ceil() as usize } else { 0 };

    let mut integ = Integrator { f: &problem.nonlinearity, accepted: 0, rejected: 0 };
    let y0 = [problem.phi0, problem.slope0];
    let h0 = target.min(1e-3 * problem.r0.max(1e-3));

    let mut upper = vec![(problem.r0, y0)];
    let mut y = y0;
    let mut h = h0;
    for i in 1..=n_hi {
        let a = problem.r0 + (i - 1) as f64 * hi_len / n_hi as f64;
        let b = if i == n_hi { problem.r_max } else { problem.r0 + i as f64 * hi_len / n_hi as f64 };
        y = integ.advance(a, b, y, problem.control, &mut h)?;
        upper.push((b, y));
    }
    let mut lower = Vec::with_capacity(n_lo);
    let mut y = y0;
    let mut h = h0;
    for i in 1..=n_lo {
        let a = problem.r0 - (i - 1) as f64 * lo_len / n_lo as f64;
        let b = if i == n_lo { problem.r_min } else { problem.r0 - i as f64 * lo_len / n_lo as f64 };
        y = integ.advance(a, b, y, problem.control, &mut h)?;
        lower.push((b, y));
    }
    lower.reverse();
    lower.extend(upper);
    Ok(IvpSegment {
        radii: lower.iter().map(|p| p.0).collect(),
        values: lower.iter().map(|p| p.1[0]).collect(),
        slopes: lower.iter().map(|p| p.1[1]).collect(),
        accepted_steps: integ.accepted,
        rejected_steps: integ.rejected,
    })
}
