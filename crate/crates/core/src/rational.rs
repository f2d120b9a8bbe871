//! Rational functions in partial-fraction form.
//!
//! The measure reconstruction needs `Psi'`, `Phi'` far from the expansion
//! center, at complex arguments, with their real poles known exactly. Every
//! model in [`crate::models`] has rational `Psi'` and `Phi'`, so they are kept
//! as `poly(x) + sum_p sum_j c_{p,j} / (x - p)^{j+1}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TruncatedSeries;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub at: f64,
    /// `coeffs[j]` multiplies `1 / (x - at)^{j+1}`.
    pub coeffs: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PartialFractions {
    /// Coefficients of `1, x, x^2, ...`.
    pub poly: Vec<f64>,
    pub poles: Vec<Pole>,
}

impl PartialFractions {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn polynomial(poly: &[f64]) -> Self {
        Self { poly: poly.to_vec(), poles: Vec::new() }
    }

    /// `r / (x - p)`.
    pub fn simple_pole(p: f64, r: f64) -> Self {
        Self { poly: Vec::new(), poles: vec![Pole { at: p, coeffs: vec![r] }] }
    }

    /// `theta / (1 - theta x)`, the derivative of `-log(1 - theta x)`.
    pub fn spike(theta: f64) -> Self {
        if theta == 0.0 {
            Self::zero()
        } else {
            Self::simple_pole(1.0 / theta, -1.0)
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.poly.len().max(other.poly.len());
        let poly = (0..n)
            .map(|i| self.poly.get(i).unwrap_or(&0.0) + other.poly.get(i).unwrap_or(&0.0))
            .collect();
        let mut out = Self { poly, poles: self.poles.clone() };
        for q in &other.poles {
            out.add_pole_terms(q.at, &q.coeffs);
        }
        out
    }

    fn add_pole_terms(&mut self, at: f64, coeffs: &[f64]) {
        match self.poles.iter_mut().find(|p| p.at == at) {
            Some(p) => {
                if p.coeffs.len() < coeffs.len() {
                    p.coeffs.resize(coeffs.len(), 0.0);
                }
                for (a, b) in p.coeffs.iter_mut().zip(coeffs) {
                    *a += b;
                }
            }
            None => self.poles.push(Pole { at, coeffs: coeffs.to_vec() }),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            poly: self.poly.iter().map(|v| v * c).collect(),
            poles: self
                .poles
                .iter()
                .map(|p| Pole { at: p.at, coeffs: p.coeffs.iter().map(|v| v * c).collect() })
                .collect(),
        }
    }

    /// `x * self`, using `x / (x-p)^{j+1} = 1/(x-p)^j + p/(x-p)^{j+1}`.
    pub fn mul_x(&self) -> Self {
        let mut poly = vec![0.0];
        poly.extend_from_slice(&self.poly);
        let mut out = Self { poly, poles: Vec::new() };
        for p in &self.poles {
            let mut coeffs: Vec<f64> = p.coeffs.iter().map(|c| c * p.at).collect();
            for (j, c) in p.coeffs.iter().enumerate() {
                if j == 0 {
                    out.poly[0] += c;
                } else {
                    coeffs[j - 1] += c;
                }
            }
            out.add_pole_terms(p.at, &coeffs);
        }
        out
    }

    pub fn derivative(&self) -> Self {
        let poly = self.poly.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
        let poles = self
            .poles
            .iter()
            .map(|p| {
                let mut coeffs = vec![0.0];
                coeffs.extend(p.coeffs.iter().enumerate().map(|(j, c)| -((j + 1) as f64) * c));
                Pole { at: p.at, coeffs }
            })
            .collect();
        Self { poly, poles }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = self.poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
        for p in &self.poles {
            let inv = 1.0 / (z - p.at);
            let mut pw = inv;
            for &c in &p.coeffs {
                acc += c * pw;
                pw *= inv;
            }
        }
        acc
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval(Complex64::new(x, 0.0)).re
    }

    /// Coefficient of `1/(x - p)` at the pole `p`, zero if `p` is not a pole.
    pub fn residue(&self, p: f64) -> f64 {
        self.poles.iter().find(|q| q.at == p).and_then(|q| q.coeffs.first().copied()).unwrap_or(0.0)
    }

    pub fn has_pole(&self, p: f64) -> bool {
        self.poles.iter().any(|q| q.at == p && q.coeffs.iter().any(|&c| c != 0.0))
    }

    /// Real points where the function is infinite.
    pub fn pole_locations(&self) -> Vec<f64> {
        self.poles.iter().filter(|q| q.coeffs.iter().any(|&c| c != 0.0)).map(|q| q.at).collect()
    }

    /// Degree of the polynomial part, ignoring trailing zeros; `None` if it vanishes.
    pub fn poly_degree(&self) -> Option<usize> {
        self.poly.iter().rposition(|&c| c != 0.0)
    }

    /// `lim_{x -> inf} x * self(x)` when `self` decays at infinity.
    pub fn decay_coefficient(&self) -> Option<f64> {
        if self.poly_degree().is_some() {
            return None;
        }
        Some(self.poles.iter().map(|p| p.coeffs.first().copied().unwrap_or(0.0)).sum())
    }

    /// Taylor expansion at `center` up to `order`.
    pub fn to_series(&self, center: f64, order: usize) -> Result<TruncatedSeries> {
        let x = TruncatedSeries::variable(center, order);
        let mut acc = self
            .poly
            .iter()
            .rev()
            .fold(TruncatedSeries::zero(center, order), |acc, &c| acc.mul(&x).expect("same center").add_constant(&c));
        for p in &self.poles {
            if p.at == center {
                return Err(Error::InvalidParameter(format!("pole at the expansion center {center}")));
            }
            let inv = TruncatedSeries::from_rational(&[1.0], &[-p.at, 1.0], center, order)?;
            let mut pw = inv.clone();
            for &c in &p.coeffs {
                acc = acc.add(&pw.scale(&c))?;
                pw = pw.mul(&inv)?;
            }
        }
        Ok(acc)
    }
}
