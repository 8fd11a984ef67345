//! Third-order jets of planar scalar fields.

use std::ops::{Add, Neg, Sub};

use crate::radial_profile::ProfileValue;

/// Value and Cartesian derivatives up to third order at one point.
///
/// `hess = [xx, xy, yy]` and `third = [xxx, xxy, xyy, yyy]`, i.e. both are
/// indexed by the number of `y` derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
    pub third: [f64; 4],
}

impl Jet {
    pub const ZERO: Jet = Jet { value: 0.0, grad: [0.0; 2], hess: [0.0; 3], third: [0.0; 4] };

    pub fn constant(c: f64) -> Jet {
        Jet { value: c, ..Jet::ZERO }
    }

    pub fn laplacian(&self) -> f64 {
        self.hess[0] + self.hess[2]
    }

    /// `∇Δ` of the field.
    pub fn grad_laplacian(&self) -> [f64; 2] {
        [self.third[0] + self.third[2], self.third[1] + self.third[3]]
    }

    /// `∇⊥ = (-∂₂, ∂₁)` of the field.
    pub fn perp_grad(&self) -> [f64; 2] {
        [-self.grad[1], self.grad[0]]
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad[0].hypot(self.grad[1])
    }

    /// `∇⊥φ · ∇Δφ`.
    pub fn rotating_residual(&self) -> f64 {
        let g = self.grad_laplacian();
        -self.grad[1] * g[0] + self.grad[0] * g[1]
    }

    fn d1(&self, i: usize) -> f64 {
        self.grad[i]
    }

    fn d2(&self, i: usize, j: usize) -> f64 {
        self.hess[i + j]
    }

    fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        self.third[i + j + k]
    }

    /// Product rule through third order.
    pub fn mul(&self, o: &Jet) -> Jet {
        let (f, g) = (self, o);
        let mut out = Jet { value: f.value * g.value, ..Jet::ZERO };
        for i in 0..2 {
            out.grad[i] = f.d1(i) * g.value + f.value * g.d1(i);
        }
        for (slot, (i, j)) in [(0usize, 0usize), (0, 1), (1, 1)].into_iter().enumerate() {
            out.hess[slot] = f.d2(i, j) * g.value
                + f.d1(i) * g.d1(j)
                + f.d1(j) * g.d1(i)
                + f.value * g.d2(i, j);
        }
        for (slot, (i, j, k)) in [(0usize, 0usize, 0usize), (0, 0, 1), (0, 1, 1), (1, 1, 1)]
            .into_iter()
            .enumerate()
        {
            out.third[slot] = f.d3(i, j, k) * g.value
                + f.d2(i, j) * g.d1(k)
                + f.d2(i, k) * g.d1(j)
                + f.d2(j, k) * g.d1(i)
                + f.d1(i) * g.d2(j, k)
                + f.d1(j) * g.d2(i, k)
                + f.d1(k) * g.d2(i, j)
                + f.value * g.d3(i, j, k);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            value: self.value * s,
            grad: self.grad.map(|v| v * s),
            hess: self.hess.map(|v| v * s),
            third: self.third.map(|v| v * s),
        }
    }

    /// Jet of `x ↦ f(|x - center|)` from the radial derivatives of `f`.
    pub fn radial(center: [f64; 2], x: [f64; 2], f: &ProfileValue) -> Jet {
        let dx = x[0] - center[0];
        let dy = x[1] - center[1];
        let r = dx.hypot(dy);
        if r == 0.0 {
            return Jet {
                value: f.value,
                grad: [0.0; 2],
                hess: [f.d2, 0.0, f.d2],
                third: [0.0; 4],
            };
        }
        let n = [dx / r, dy / r];
        let a = f.d2;
        let b = f.d1_over_r;
        let c = f.bend;
        let mut jet = Jet { value: f.value, ..Jet::ZERO };
        jet.grad = [f.d1 * n[0], f.d1 * n[1]];
        for (slot, (i, j)) in [(0usize, 0usize), (0, 1), (1, 1)].into_iter().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            let nn = n[i] * n[j];
            jet.hess[slot] = a * nn + b * (delta - nn);
        }
        for (slot, (i, j, k)) in [(0usize, 0usize, 0usize), (0, 0, 1), (0, 1, 1), (1, 1, 1)]
            .into_iter()
            .enumerate()
        {
            let dl = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
            let nnn = n[i] * n[j] * n[k];
            jet.third[slot] = f.d3 * nnn
                + c * (dl(i, j) * n[k] + dl(i, k) * n[j] + dl(j, k) * n[i] - 3.0 * nnn);
        }
        jet
    }

    /// Jet of `x ↦ s |x|² / 2`.
    pub fn half_square(x: [f64; 2], s: f64) -> Jet {
        Jet {
            value: s * (x[0] * x[0] + x[1] * x[1]) / 2.0,
            grad: [s * x[0], s * x[1]],
            hess: [s, 0.0, s],
            third: [0.0; 4],
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            grad: [self.grad[0] + o.grad[0], self.grad[1] + o.grad[1]],
            hess: [self.hess[0] + o.hess[0], self.hess[1] + o.hess[1], self.hess[2] + o.hess[2]],
            third: [
                self.third[0] + o.third[0],
                self.third[1] + o.third[1],
                self.third[2] + o.third[2],
                self.third[3] + o.third[3],
            ],
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}
