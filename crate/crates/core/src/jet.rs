//! Second-order forward-mode jets over the three chart coordinates.
//!
//! A [`Jet2`] carries a value together with its gradient and (symmetric)
//! Hessian with respect to the chart variables. Arithmetic propagates all
//! three exactly, so coefficient fields built from jets never need finite
//! differences. The [`Scalar`] trait abstracts over plain `f64` and `Jet2`
//! so that geometric formulas are written once and evaluated either way.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Index of the `(i, j)` entry in packed symmetric 3x3 storage
/// `[xx, xy, xz, yy, yz, zz]`.
#[inline]
pub const fn sym_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

/// Value, gradient and Hessian of a function of three variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 3],
    /// Packed `[xx, xy, xz, yy, yz, zz]`.
    pub hess: [f64; 6],
}

impl Jet2 {
    pub const fn constant(value: f64) -> Self {
        Self { value, grad: [0.0; 3], hess: [0.0; 6] }
    }

    /// The coordinate function `x_axis` evaluated at `value`.
    pub fn variable(value: f64, axis: usize) -> Self {
        let mut grad = [0.0; 3];
        grad[axis] = 1.0;
        Self { value, grad, hess: [0.0; 6] }
    }

    #[inline]
    pub fn hessian(&self, i: usize, j: usize) -> f64 {
        self.hess[sym_index(i, j)]
    }

    pub fn hessian_matrix(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.hessian(i, j);
            }
        }
        m
    }

    /// Compose with a scalar function given its value and first two
    /// derivatives at `self.value`.
    #[inline]
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let g = &self.grad;
        let mut grad = [0.0; 3];
        for k in 0..3 {
            grad[k] = f1 * g[k];
        }
        let mut hess = [0.0; 6];
        let mut n = 0;
        for i in 0..3 {
            for j in i..3 {
                hess[n] = f1 * self.hess[n] + f2 * g[i] * g[j];
                n += 1;
            }
        }
        Self { value: f0, grad, hess }
    }

    pub fn recip(&self) -> Self {
        let v = self.value;
        let inv = 1.0 / v;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(self, o: Jet2) -> Jet2 {
        let mut r = self;
        r.value += o.value;
        for k in 0..3 {
            r.grad[k] += o.grad[k];
        }
        for k in 0..6 {
            r.hess[k] += o.hess[k];
        }
        r
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(self, o: Jet2) -> Jet2 {
        let mut r = self;
        r.value -= o.value;
        for k in 0..3 {
            r.grad[k] -= o.grad[k];
        }
        for k in 0..6 {
            r.hess[k] -= o.hess[k];
        }
        r
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, o: Jet2) -> Jet2 {
        let (a, b) = (self.value, o.value);
        let mut grad = [0.0; 3];
        for k in 0..3 {
            grad[k] = a * o.grad[k] + b * self.grad[k];
        }
        let mut hess = [0.0; 6];
        let mut n = 0;
        for i in 0..3 {
            for j in i..3 {
                hess[n] = a * o.hess[n]
                    + b * self.hess[n]
                    + self.grad[i] * o.grad[j]
                    + self.grad[j] * o.grad[i];
                n += 1;
            }
        }
        Jet2 { value: a * b, grad, hess }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    #[inline]
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    #[inline]
    fn neg(self) -> Jet2 {
        let mut r = self;
        r.value = -r.value;
        for g in r.grad.iter_mut() {
            *g = -*g;
        }
        for h in r.hess.iter_mut() {
            *h = -*h;
        }
        r
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(mut self, c: f64) -> Jet2 {
        self.value += c;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(mut self, c: f64) -> Jet2 {
        self.value -= c;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(mut self, c: f64) -> Jet2 {
        self.value *= c;
        for g in self.grad.iter_mut() {
            *g *= c;
        }
        for h in self.hess.iter_mut() {
            *h *= c;
        }
        self
    }
}

impl Div<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn div(self, c: f64) -> Jet2 {
        self * (1.0 / c)
    }
}

/// Numbers that geometric formulas are evaluated over: `f64` for values
/// only, [`Jet2`] when derivatives are needed.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Whether sampling a field into this type needs its derivatives.
    const WITH_DERIVATIVES: bool;

    fn constant(c: f64) -> Self;
    /// Chart coordinate `axis` at point `p`.
    fn coordinate(p: [f64; 3], axis: usize) -> Self;
    fn from_jet(j: Jet2) -> Self;
    fn value(&self) -> f64;

    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn abs(self) -> Self;
    fn recip(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, e: f64) -> Self;

    fn square(self) -> Self {
        self * self
    }
}

impl Scalar for f64 {
    const WITH_DERIVATIVES: bool = false;

    #[inline]
    fn constant(c: f64) -> Self {
        c
    }
    #[inline]
    fn coordinate(p: [f64; 3], axis: usize) -> Self {
        p[axis]
    }
    #[inline]
    fn from_jet(j: Jet2) -> Self {
        j.value
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
}

impl Scalar for Jet2 {
    const WITH_DERIVATIVES: bool = true;

    #[inline]
    fn constant(c: f64) -> Self {
        Jet2::constant(c)
    }
    #[inline]
    fn coordinate(p: [f64; 3], axis: usize) -> Self {
        Jet2::variable(p[axis], axis)
    }
    #[inline]
    fn from_jet(j: Jet2) -> Self {
        j
    }
    #[inline]
    fn value(&self) -> f64 {
        self.value
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }
    fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }
    fn abs(self) -> Self {
        if self.value < 0.0 {
            -self
        } else {
            self
        }
    }
    fn recip(self) -> Self {
        Jet2::recip(&self)
    }
    fn powi(self, n: i32) -> Self {
        let v = self.value;
        let nf = n as f64;
        let f0 = v.powi(n);
        let f1 = if n == 0 { 0.0 } else { nf * v.powi(n - 1) };
        let f2 = if n == 0 || n == 1 { 0.0 } else { nf * (nf - 1.0) * v.powi(n - 2) };
        self.chain(f0, f1, f2)
    }
    fn powf(self, e: f64) -> Self {
        let v = self.value;
        self.chain(v.powf(e), e * v.powf(e - 1.0), e * (e - 1.0) * v.powf(e - 2.0))
    }
}
