//! Truncated power series (jets) of one variable.
//!
//! A series stores `c_0..c_T`, the coefficients of `(x - center)^j`. All the
//! derivative-at-a-point formulas in the engine are evaluated by multiplying
//! and powering these jets and then reading off a single coefficient.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient field for [`TruncatedSeries`]. Implemented for `f64` (the
/// default path) and `BigRational` (exact checks in `verify`).
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(n: i64) -> Self;
    fn to_f64_lossy(&self) -> f64;
    /// Whether two centers count as the same expansion point.
    fn same_point(&self, other: &Self) -> bool;
}

impl Scalar for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
    fn same_point(&self, other: &Self) -> bool {
        (self - other).abs() <= 1e-12 * self.abs().max(other.abs()).max(1.0)
    }
}

impl Scalar for BigRational {
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
    fn same_point(&self, other: &Self) -> bool {
        self == other
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSeries<T = f64> {
    pub center: T,
    pub coeffs: Vec<T>,
}

impl<T: Scalar> TruncatedSeries<T> {
    /// Panics on an empty coefficient list; a jet always has `c_0`.
    pub fn new(center: T, coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a truncated series needs at least c_0");
        Self { center, coeffs }
    }

    pub fn constant(center: T, c: T, order: usize) -> Self {
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = c;
        Self { center, coeffs }
    }

    pub fn zero(center: T, order: usize) -> Self {
        Self::constant(center, T::zero(), order)
    }

    pub fn one(center: T, order: usize) -> Self {
        Self::constant(center, T::one(), order)
    }

    /// The identity function `x` expanded at `center`.
    pub fn variable(center: T, order: usize) -> Self {
        let mut s = Self::constant(center.clone(), center, order);
        if order >= 1 {
            s.coeffs[1] = T::one();
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, T::zero());
        Self { center: self.center.clone(), coeffs }
    }

    fn check_center(&self, other: &Self) -> Result<()> {
        if self.center.same_point(&other.center) {
            Ok(())
        } else {
            Err(Error::CenterMismatch(
                self.center.to_f64_lossy(),
                other.center.to_f64_lossy(),
            ))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let t = self.order().min(other.order());
        let coeffs = (0..=t)
            .map(|j| self.coeffs[j].clone() + other.coeffs[j].clone())
            .collect();
        Ok(Self { center: self.center.clone(), coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-T::one())
    }

    pub fn scale(&self, c: &T) -> Self {
        Self {
            center: self.center.clone(),
            coeffs: self.coeffs.iter().map(|a| a.clone() * c.clone()).collect(),
        }
    }

    pub fn add_constant(&self, c: &T) -> Self {
        let mut s = self.clone();
        s.coeffs[0] = s.coeffs[0].clone() + c.clone();
        s
    }

    /// Cauchy product truncated at the smaller order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let t = self.order().min(other.order());
        let mut coeffs = vec![T::zero(); t + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(t + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(t + 1 - i) {
                coeffs[i + j] = coeffs[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self { center: self.center.clone(), coeffs }
    }

    pub fn pow_int(&self, p: u32) -> Self {
        let mut result = Self::one(self.center.clone(), self.order());
        let mut base = self.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        result
    }

    /// `q` with `q * other = self` to the common order.
    pub fn div(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let b0 = other.coeffs[0].clone();
        if b0.is_zero() {
            return Err(Error::ZeroConstantTerm);
        }
        let t = self.order().min(other.order());
        let mut q: Vec<T> = Vec::with_capacity(t + 1);
        for n in 0..=t {
            let mut acc = self.coeffs[n].clone();
            for j in 1..=n {
                acc = acc - other.coeffs[j].clone() * q[n - j].clone();
            }
            q.push(acc / b0.clone());
        }
        Ok(Self { center: self.center.clone(), coeffs: q })
    }

    pub fn derivative(&self) -> Result<Self> {
        if self.order() == 0 {
            return Err(Error::InsufficientOrder { need: 1, have: 0 });
        }
        let coeffs = (1..=self.order())
            .map(|j| T::from_i64(j as i64) * self.coeffs[j].clone())
            .collect();
        Ok(Self { center: self.center.clone(), coeffs })
    }

    /// Antiderivative vanishing at the center; order grows by one.
    pub fn integral(&self) -> Self {
        let mut coeffs = vec![T::zero()];
        for (j, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c.clone() / T::from_i64(j as i64 + 1));
        }
        Self { center: self.center.clone(), coeffs }
    }

    /// `m! * c_m`, the m-th derivative at the center.
    pub fn deriv_at_center(&self, m: usize) -> Result<T> {
        if m > self.order() {
            return Err(Error::InsufficientOrder { need: m, have: self.order() });
        }
        let mut f = T::one();
        for i in 2..=m {
            f = f * T::from_i64(i as i64);
        }
        Ok(f * self.coeffs[m].clone())
    }

    /// Limit of the symmetrized divided difference over `n` points that all
    /// collapse to the center: `f^{(n-1)}(center) / (n-1)!`.
    pub fn divided_difference_limit(&self, n: usize) -> Result<T> {
        if n == 0 {
            return Err(Error::Guard { what: "n", value: 0, range: ">= 1" });
        }
        if n - 1 > self.order() {
            return Err(Error::InsufficientOrder { need: n - 1, have: self.order() });
        }
        Ok(self.coeffs[n - 1].clone())
    }

    /// Value of the truncated polynomial at `x`.
    pub fn eval(&self, x: &T) -> T {
        let h = x.clone() - self.center.clone();
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * h.clone() + c.clone())
    }
}

impl TruncatedSeries<f64> {
    pub fn from_coeffs(center: f64, coeffs: &[f64]) -> Self {
        Self::new(center, coeffs.to_vec())
    }

    /// Expansion of `num(x) / den(x)` at `center`, where both polynomials are
    /// given by coefficients of powers of `x` itself (not of `x - center`).
    pub fn from_rational(num: &[f64], den: &[f64], center: f64, order: usize) -> Result<Self> {
        let x = Self::variable(center, order);
        let poly = |p: &[f64]| {
            p.iter()
                .rev()
                .fold(Self::zero(center, order), |acc, &c| acc.mul_unchecked(&x).add_constant(&c))
        };
        poly(num).div(&poly(den))
    }

    pub fn exp(&self) -> Self {
        let t = self.order();
        let mut b = vec![0.0; t + 1];
        b[0] = self.coeffs[0].exp();
        for n in 1..=t {
            let s: f64 = (1..=n).map(|j| j as f64 * self.coeffs[j] * b[n - j]).sum();
            b[n] = s / n as f64;
        }
        Self { center: self.center, coeffs: b }
    }

    pub fn ln(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0 <= 0.0 {
            return Err(Error::NonPositiveLog(a0));
        }
        let t = self.order();
        let mut b = vec![0.0; t + 1];
        b[0] = a0.ln();
        for n in 1..=t {
            let s: f64 = (1..n).map(|j| j as f64 * b[j] * self.coeffs[n - j]).sum();
            b[n] = (n as f64 * self.coeffs[n] - s) / (n as f64 * a0);
        }
        Ok(Self { center: self.center, coeffs: b })
    }

    /// `outer(inner(x))`, expanded at `inner.center`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if !inner.coeffs[0].same_point(&self.center) {
            return Err(Error::CompositionMismatch { inner: inner.coeffs[0], outer: self.center });
        }
        let t = self.order().min(inner.order());
        let mut d = inner.truncate(t);
        d.coeffs[0] = 0.0;
        let mut acc = Self::zero(inner.center, t);
        for &c in self.coeffs[..=t].iter().rev() {
            acc = acc.mul_unchecked(&d).add_constant(&c);
        }
        Ok(acc)
    }
}
