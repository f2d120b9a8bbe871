//! Limit and correction measures: reconstruction from the functional inverse
//! of the Cauchy transform, outlier atoms from poles of the numerator, and a
//! catalog of closed-form densities used as quadrature cross-checks.
//!
//! With `F = Psi' + 1/x` (HC side, center 0) or `F = x Psi' + x/(x-1)` (Schur
//! side, center 1) and `x_+(y)` the root of `F(x) = y` that tends to the
//! center as `y -> infinity`, the moment generating function of a correction
//! is `G(y) = -N(x_+)/F'(x_+)` where `N = Phi'` (HC) or `Phi' - 1/(2x)`
//! (Schur). The density is `-(1/pi) Im G(t + i0)`. Outliers come from poles of
//! `N` lying on the arc of the real projective line swept by `x_+` on the
//! real axis outside the support, i.e. between the two critical points of
//! `F` that bracket the center.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momentengine::{correction1_hc, lln_moments_hc, schur_correction1, schur_lln_moments, Side};
use crate::rational::PartialFractions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    Probability,
    SignedCorrection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// Quadrature weights matching `grid`; when absent the trapezoid rule on
    /// `grid` is used.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weights: Option<Vec<f64>>,
    /// `(location, weight)` pairs.
    pub atoms: Vec<(f64, f64)>,
    pub support: Option<(f64, f64)>,
    pub kind: MeasureKind,
    /// Grid indices where the root solve failed; their density is set to 0.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub invalid: Vec<usize>,
    /// Reconstructions only: summed relative misfit of mass and moments
    /// `k <= 3` against the engine, as measured by the sign calibration.
    /// Large values flag contributions no density or atom can carry.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mismatch: Option<f64>,
}

impl SpectralMeasure {
    fn quadrature(&self, f: impl Fn(f64) -> f64) -> f64 {
        match &self.weights {
            Some(w) => self.grid.iter().zip(&self.density).zip(w).map(|((&t, &d), &w)| w * d * f(t)).sum(),
            None => self
                .grid
                .windows(2)
                .zip(self.density.windows(2))
                .map(|(t, d)| 0.5 * (t[1] - t[0]) * (d[0] * f(t[0]) + d[1] * f(t[1])))
                .sum(),
        }
    }

    pub fn continuous_mass(&self) -> f64 {
        self.quadrature(|_| 1.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.continuous_mass() + self.atoms.iter().map(|a| a.1).sum::<f64>()
    }

    /// Checks the invariants of the measure kind: finite density, atoms off
    /// the open support and, for probabilities, nonnegativity and unit mass.
    pub fn validate(&self) -> Result<()> {
        if self.grid.len() != self.density.len() || self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("grid must be increasing and match the density".into()));
        }
        if self.density.iter().any(|d| !d.is_finite()) {
            return Err(Error::Numeric("density is not finite".into()));
        }
        if let Some((lo, hi)) = self.support {
            if self.atoms.iter().any(|&(x, _)| x > lo + 1e-9 && x < hi - 1e-9) {
                return Err(Error::InvalidParameter("atom inside the open support".into()));
            }
        }
        if self.kind == MeasureKind::Probability {
            if self.density.iter().any(|&d| d < -1e-9) {
                return Err(Error::Numeric("negative density in a probability measure".into()));
            }
            if (self.total_mass() - 1.0).abs() > 1e-3 {
                return Err(Error::Numeric(format!("total mass {} is not 1", self.total_mass())));
            }
        }
        Ok(())
    }
}

/// Moments `k = 0..=K` of a measure: quadrature of the density plus atoms.
pub fn quadrature_moments(m: &SpectralMeasure, k_max: usize) -> Vec<f64> {
    (0..=k_max)
        .map(|k| {
            let atoms: f64 = m.atoms.iter().map(|&(x, w)| w * x.powi(k as i32)).sum();
            m.quadrature(|t| t.powi(k as i32)) + atoms
        })
        .collect()
}

/// Nodes `t = c - R cos(phi)` at midpoints in `phi` with weights `R sin(phi) dphi`.
/// Integrands with inverse square-root edge singularities become smooth in `phi`.
pub fn cos_grid(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    let h = PI / n as f64;
    (0..n)
        .map(|i| {
            let phi = (i as f64 + 0.5) * h;
            (c - r * phi.cos(), r * phi.sin() * h)
        })
        .unzip()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Numerator {
    /// Reconstruct the limit measure itself.
    Lln,
    /// Reconstruct the correction with numerator `N` (already including the
    /// Schur-side `-1/(2x)` term).
    Correction(PartialFractions),
}

/// Where to look for the critical points of `F`: offsets from the center
/// between `1e-6` and `reach`, log-spaced with `samples` points per side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub reach: f64,
    pub samples: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { reach: 1e4, samples: 40_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KFunction {
    pub side: Side,
    pub dpsi: PartialFractions,
    pub numerator: Numerator,
    pub scan: ScanOptions,
    /// Finite real poles of `N` considered for outliers. Filled from the
    /// partial fractions by the constructors; callers may override.
    pub poles: Vec<f64>,
    f: PartialFractions,
    df: PartialFractions,
}

/// Arc of the real projective line between the two critical points of `F`
/// that bracket the center. `wraps` means the arc passes through infinity; an
/// infinite endpoint means infinity is itself critical.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub left: f64,
    pub right: f64,
    pub wraps: bool,
}

impl Arc {
    pub fn contains(&self, p: f64) -> bool {
        if self.wraps {
            p > self.left || p < self.right
        } else {
            p > self.left && p < self.right
        }
    }
}

impl KFunction {
    fn build(side: Side, dpsi: PartialFractions, numerator: Numerator) -> Self {
        let f = match side {
            Side::Hc => dpsi.add(&PartialFractions::simple_pole(0.0, 1.0)),
            Side::Schur => dpsi
                .mul_x()
                .add(&PartialFractions::polynomial(&[1.0]))
                .add(&PartialFractions::simple_pole(1.0, 1.0)),
        };
        let df = f.derivative();
        let poles = match &numerator {
            Numerator::Lln => Vec::new(),
            Numerator::Correction(n) => n.pole_locations(),
        };
        Self { side, dpsi, numerator, scan: ScanOptions::default(), poles, f, df }
    }

    pub fn lln(side: Side, dpsi: PartialFractions) -> Self {
        Self::build(side, dpsi, Numerator::Lln)
    }

    pub fn correction(side: Side, dpsi: PartialFractions, dphi: PartialFractions) -> Self {
        let n = match side {
            Side::Hc => dphi,
            Side::Schur => dphi.add(&PartialFractions::simple_pole(0.0, -0.5)),
        };
        Self::build(side, dpsi, Numerator::Correction(n))
    }

    pub fn with_scan(mut self, scan: ScanOptions) -> Self {
        self.scan = scan;
        self
    }

    pub fn center(&self) -> f64 {
        self.side.center()
    }

    pub fn f(&self, z: Complex64) -> Complex64 {
        self.f.eval(z)
    }

    pub fn f_real(&self, x: f64) -> f64 {
        self.f.eval_real(x)
    }

    pub fn df(&self, z: Complex64) -> Complex64 {
        self.df.eval(z)
    }

    /// `F - F(infinity) = O(x^-2)`, so `F'` has a multiple zero at infinity.
    fn critical_at_infinity(&self) -> bool {
        matches!(self.f.poly_degree(), None | Some(0))
            && self.f.add(&PartialFractions::polynomial(&[-self.f_endpoint(f64::INFINITY)])).decay_coefficient() == Some(0.0)
    }

    /// `F` on the extended real line.
    fn f_endpoint(&self, x: f64) -> f64 {
        if x.is_infinite() {
            match self.f.poly_degree() {
                None => 0.0,
                Some(0) => self.f.poly[0],
                _ => x,
            }
        } else {
            self.f_real(x)
        }
    }

    fn is_f_pole(&self, x: f64) -> bool {
        self.f.has_pole(x)
    }

    /// Engine moments `k = 1..=K` of the measure this function reconstructs.
    pub fn engine_moments(&self, k_max: usize) -> Result<Vec<f64>> {
        let c = self.center();
        let order = k_max + 3;
        let psi = self.dpsi.to_series(c, order)?.integral();
        match (&self.numerator, self.side) {
            (Numerator::Lln, Side::Hc) => lln_moments_hc(&psi, k_max),
            (Numerator::Lln, Side::Schur) => schur_lln_moments(&psi, k_max),
            (Numerator::Correction(n), side) => {
                let dphi = match side {
                    Side::Hc => n.clone(),
                    Side::Schur => n.add(&PartialFractions::simple_pole(0.0, 0.5)),
                };
                let phi = dphi.to_series(c, order)?.integral();
                match side {
                    Side::Hc => correction1_hc(&psi, &phi, k_max),
                    Side::Schur => schur_correction1(&psi, &phi, k_max),
                }
            }
        }
    }

    /// Engine total mass: 1 for a limit measure, 0 for a correction.
    pub fn engine_mass(&self) -> f64 {
        match self.numerator {
            Numerator::Lln => 1.0,
            Numerator::Correction(_) => 0.0,
        }
    }

    fn scan_offsets(&self) -> Vec<f64> {
        let n = self.scan.samples.max(16);
        let (a, b) = ((1e-6f64).ln(), self.scan.reach.ln());
        (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
    }

    /// First zero of `F'` along the given points, skipping poles of `F`.
    fn first_critical(&self, xs: &[f64]) -> Option<f64> {
        let g = |x: f64| self.df.eval_real(x);
        let pole_between = |a: f64, b: f64| {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.f.pole_locations().iter().any(|&p| p >= lo && p <= hi)
        };
        for w in xs.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            let (ga, gb) = (g(a), g(b));
            if !ga.is_finite() || !gb.is_finite() || pole_between(a, b) {
                continue;
            }
            if ga == 0.0 {
                return Some(a);
            }
            if ga.signum() == gb.signum() {
                continue;
            }
            let mut fa = ga;
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let gm = g(m);
                if gm == 0.0 || (b - a).abs() <= 1e-12 * m.abs().max(1.0) {
                    a = m;
                    b = m;
                    break;
                }
                if gm.signum() == fa.signum() {
                    a = m;
                    fa = gm;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        None
    }

    /// Critical points bracketing the center, or `None` when `F'` has no real
    /// zero at all (purely atomic measure).
    pub fn arc(&self) -> Result<Option<Arc>> {
        let c = self.center();
        let offs = self.scan_offsets();
        let near = |sign: f64| offs.iter().map(|s| c + sign * s).collect::<Vec<_>>();
        let far = |sign: f64| offs.iter().rev().map(|s| c + sign * s).collect::<Vec<_>>();
        let right_near = self.first_critical(&near(1.0));
        let left_near = self.first_critical(&near(-1.0));
        let (right, left) = if self.critical_at_infinity() {
            (right_near.or(Some(f64::INFINITY)), left_near.or(Some(f64::NEG_INFINITY)))
        } else {
            (right_near.or_else(|| self.first_critical(&far(-1.0))), left_near.or_else(|| self.first_critical(&far(1.0))))
        };
        match (left, right) {
            (None, None) => Ok(None),
            (Some(l), Some(r)) if l != r => Ok(Some(Arc { left: l, right: r, wraps: l > r })),
            _ => Err(Error::Numeric("could not bracket the center between two critical points".into())),
        }
    }

    /// Continuous support `[lo, hi]` from the critical values.
    ///
    /// A Schur-side limit density can sit at its ceiling 1 past a critical
    /// value. The root then stays on the negative axis until it passes
    /// through 0 or infinity, so the support extends to the nearest of
    /// `F(0)`, `F(inf)` on that side.
    pub fn support(&self) -> Result<Option<(f64, f64)>> {
        let Some(a) = self.arc()? else { return Ok(None) };
        let (u, v) = (self.f_endpoint(a.left), self.f_endpoint(a.right));
        let (mut lo, mut hi) = (u.min(v), u.max(v));
        if matches!(self.numerator, Numerator::Lln) && self.side == Side::Schur && hi > lo {
            let stops: Vec<f64> = [self.f_endpoint(0.0), self.f_endpoint(f64::INFINITY)]
                .into_iter()
                .filter(|y| y.is_finite())
                .collect();
            let step = 1e-3 * (hi - lo);
            let saturated = |t: f64| self.raw_density(t, 1e-6).is_some_and(|d| d > 0.5);
            if saturated(lo - step) {
                if let Some(y) = stops.iter().copied().filter(|&y| y < lo).reduce(f64::max) {
                    lo = y;
                }
            }
            if saturated(hi + step) {
                if let Some(y) = stops.iter().copied().filter(|&y| y > hi).reduce(f64::min) {
                    hi = y;
                }
            }
        }
        Ok(Some((lo, hi)))
    }

    /// Atoms with the orientation in which `G(y) = sum m_k y^{-k-1}`.
    fn raw_atoms(&self) -> Result<Vec<(f64, f64)>> {
        let arc = self.arc()?;
        let inside = |p: f64| arc.is_none_or(|a| a.contains(p));
        let critical_value = |y: f64| {
            arc.is_some_and(|a| {
                [a.left, a.right].iter().any(|&x| (self.f_endpoint(x) - y).abs() <= 1e-9 * y.abs().max(1.0))
            })
        };
        let mut atoms = Vec::new();
        let infinity_in_arc = arc.is_none_or(|a| a.wraps);
        let infinity_endpoint = arc.is_some_and(|a| a.left.is_infinite() || a.right.is_infinite());
        let f_at_infinity = match self.f.poly_degree() {
            None => Some(0.0),
            Some(0) => Some(self.f.poly[0]),
            _ => None,
        };
        match &self.numerator {
            Numerator::Lln => {
                // Limit measures can only carry an atom from x_+ reaching infinity.
                if let (Side::Hc, true, Some(f_inf)) = (self.side, infinity_in_arc, f_at_infinity) {
                    let w = self.f.add(&PartialFractions::polynomial(&[-f_inf])).decay_coefficient().unwrap_or(0.0);
                    if w != 0.0 {
                        atoms.push((f_inf, w));
                    }
                }
            }
            Numerator::Correction(n) => {
                for &p in &self.poles {
                    if self.is_f_pole(p) {
                        continue;
                    }
                    let y = self.f_real(p);
                    let r = n.residue(p);
                    if r == 0.0 {
                        continue;
                    }
                    if critical_value(y) {
                        atoms.push((y, -0.5 * r));
                    } else if inside(p) {
                        atoms.push((y, -r));
                    }
                }
                if let (Some(f_inf), Some(rho)) = (f_at_infinity, n.decay_coefficient()) {
                    let w = if infinity_endpoint {
                        0.5 * rho
                    } else if infinity_in_arc {
                        rho
                    } else {
                        0.0
                    };
                    if w != 0.0 {
                        atoms.push((f_inf, w));
                    }
                }
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(atoms)
    }

    /// Root of `F(x) = y` on the branch through the center, continued down
    /// from far above the real axis.
    pub fn solve_branch(&self, y: Complex64) -> Option<Complex64> {
        let c = self.center();
        let top = 1e3 * y.re.abs().max(1.0);
        let steps = 80;
        let mut x = Complex64::new(c, 0.0) + 1.0 / Complex64::new(y.re, top);
        let ratio = (y.im / top).powf(1.0 / steps as f64);
        let mut h = top;
        for s in 0..=steps {
            let target = Complex64::new(y.re, if s == steps { y.im } else { h });
            x = self.newton(x, target)?;
            h *= ratio;
        }
        Some(x)
    }

    fn newton(&self, mut x: Complex64, y: Complex64) -> Option<Complex64> {
        for _ in 0..60 {
            let r = self.f(x) - y;
            let d = self.df(x);
            if !r.is_finite() || !d.is_finite() || d.norm() == 0.0 {
                return None;
            }
            let mut step = r / d;
            // keep the iterate from jumping across a pole of F
            let cap = 0.5 * (x - self.center()).norm().max(1e-3);
            if step.norm() > cap {
                step *= cap / step.norm();
            }
            x -= step;
            if step.norm() <= 1e-14 * x.norm().max(1.0) {
                return Some(x);
            }
        }
        let r = (self.f(x) - y).norm();
        (r <= 1e-9 * y.norm().max(1.0)).then_some(x)
    }

    /// Density in the natural orientation at height `eta`.
    fn raw_density_at(&self, t: f64, eta: f64) -> Option<f64> {
        let x = self.solve_branch(Complex64::new(t, eta))?;
        let g = match (&self.numerator, self.side) {
            (Numerator::Lln, Side::Hc) => x,
            (Numerator::Lln, Side::Schur) => x.ln(),
            (Numerator::Correction(n), _) => -n.eval(x) / self.df(x),
        };
        Some(-g.im / PI)
    }

    /// Linear Richardson extrapolation in `eta` from `eta` and `eta/2`.
    fn raw_density(&self, t: f64, eta: f64) -> Option<f64> {
        let a = self.raw_density_at(t, eta)?;
        let b = self.raw_density_at(t, 0.5 * eta)?;
        Some(2.0 * b - a)
    }

    /// Global sign making the reconstruction's moments match the engine.
    pub fn orientation(&self) -> Result<f64> {
        Ok(self.calibrate()?.0)
    }

    /// Orientation sign and the remaining moment misfit under it.
    pub fn calibrate(&self) -> Result<(f64, f64)> {
        let k_max = 3;
        let engine = self.engine_moments(k_max)?;
        let atoms = self.raw_atoms()?;
        let measure = match self.support()? {
            Some((lo, hi)) => {
                let (grid, weights) = cos_grid(lo, hi, 1500);
                let density = grid.iter().map(|&t| self.raw_density(t, 1e-4).unwrap_or(0.0)).collect();
                SpectralMeasure {
                    grid,
                    density,
                    weights: Some(weights),
                    atoms,
                    support: Some((lo, hi)),
                    kind: MeasureKind::SignedCorrection,
                    invalid: Vec::new(),
                    mismatch: None,
                }
            }
            None => SpectralMeasure {
                grid: Vec::new(),
                density: Vec::new(),
                weights: None,
                atoms,
                support: None,
                kind: MeasureKind::SignedCorrection,
                invalid: Vec::new(),
                mismatch: None,
            },
        };
        let q = quadrature_moments(&measure, k_max);
        let err = |s: f64| {
            let mass = (s * q[0] - self.engine_mass()).abs();
            mass + (1..=k_max).map(|k| (s * q[k] - engine[k - 1]).abs() / engine[k - 1].abs().max(1.0)).sum::<f64>()
        };
        let (plus, minus) = (err(1.0), err(-1.0));
        let (s, best) = if plus <= minus { (1.0, plus) } else { (-1.0, minus) };
        // Near critical parameters the edge singularity is poorly resolved by
        // the grid; the sign is still trustworthy as long as the wrong one is
        // clearly worse.
        if best > 5e-2 && best > 0.5 * plus.max(minus) {
            return Err(Error::Numeric(format!(
                "sign calibration failed: moment mismatch {plus:.3e} (+) / {minus:.3e} (-)"
            )));
        }
        Ok((s, best))
    }
}

/// Outlier atoms `(location, weight)` of the reconstructed measure.
pub fn detect_outliers(kf: &KFunction) -> Result<Vec<(f64, f64)>> {
    let s = kf.orientation()?;
    Ok(kf.raw_atoms()?.into_iter().map(|(x, w)| (x, s * w)).collect())
}

/// Density on `grid` (sampled at `t + i eta` and `t + i eta/2`, extrapolated)
/// together with the outlier atoms.
pub fn reconstruct_density(kf: &KFunction, grid: &[f64], eta: f64) -> Result<SpectralMeasure> {
    if !(1e-5..=1e-1).contains(&eta) {
        return Err(Error::InvalidParameter(format!("eta = {eta} must lie in [1e-5, 1e-1]")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
    }
    let (s, mismatch) = kf.calibrate()?;
    let mut invalid = Vec::new();
    let density = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| match kf.raw_density(t, eta) {
            Some(d) => s * d,
            None => {
                invalid.push(i);
                0.0
            }
        })
        .collect();
    let atoms = kf.raw_atoms()?.into_iter().map(|(x, w)| (x, s * w)).collect();
    let kind = match kf.numerator {
        Numerator::Lln => MeasureKind::Probability,
        Numerator::Correction(_) => MeasureKind::SignedCorrection,
    };
    Ok(SpectralMeasure {
        grid: grid.to_vec(),
        density,
        weights: None,
        atoms,
        support: kf.support()?,
        kind,
        invalid,
        mismatch: Some(mismatch),
    })
}

/// Catalog entries and their parameters.
pub const CATALOG_NAMES: &[(&str, &str)] = &[
    ("semicircle", ""),
    ("gue_correction", ""),
    ("wishart_correction", "lambda"),
    ("gue_bbp", "theta"),
    ("wishart_bbp", "lambda,theta"),
    ("dbbp_lln", "gamma"),
    ("dbbp", "gamma,alpha"),
    ("aztec_lln", "alpha,A"),
    ("aztec", "alpha,A"),
];

pub const DEFAULT_CATALOG_POINTS: usize = 4000;

pub fn catalog(name: &str, params: &[f64]) -> Result<SpectralMeasure> {
    catalog_with_points(name, params, DEFAULT_CATALOG_POINTS)
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// `1` above the threshold, `1/2` at it, `0` below.
fn step(value: f64, threshold: f64) -> f64 {
    if same(value, threshold) {
        0.5
    } else if value > threshold {
        1.0
    } else {
        0.0
    }
}

fn want(name: &str, params: &[f64], n: usize) -> Result<()> {
    if params.len() != n {
        return Err(Error::InvalidParameter(format!("catalog {name} takes {n} parameter(s), got {}", params.len())));
    }
    Ok(())
}

fn tabulate(
    lo: f64,
    hi: f64,
    n: usize,
    kind: MeasureKind,
    atoms: Vec<(f64, f64)>,
    f: impl Fn(f64) -> f64,
) -> SpectralMeasure {
    let (grid, weights) = cos_grid(lo, hi, n);
    let density = grid.iter().map(|&t| f(t)).collect();
    let atoms = atoms.into_iter().filter(|a| a.1 != 0.0).collect();
    SpectralMeasure { grid, density, weights: Some(weights), atoms, support: Some((lo, hi)), kind, invalid: Vec::new(), mismatch: None }
}

/// Closed-form measures of the worked examples, sampled on `points` nodes.
pub fn catalog_with_points(name: &str, params: &[f64], points: usize) -> Result<SpectralMeasure> {
    use MeasureKind::*;
    let m = match name {
        "semicircle" => {
            want(name, params, 0)?;
            tabulate(-2.0, 2.0, points, Probability, vec![], |t| (4.0 - t * t).max(0.0).sqrt() / (2.0 * PI))
        }
        "gue_correction" => {
            want(name, params, 0)?;
            tabulate(-2.0, 2.0, points, SignedCorrection, vec![], |t| (t * t - 2.0) / (2.0 * PI * (4.0 - t * t).sqrt()))
        }
        "wishart_correction" => {
            want(name, params, 1)?;
            let l = params[0];
            if l <= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "wishart_correction needs lambda > 1 (got {l}); for lambda <= 1 derivatives of delta(0) are missing"
                )));
            }
            let (lo, hi) = (l + 1.0 - 2.0 * l.sqrt(), l + 1.0 + 2.0 * l.sqrt());
            tabulate(lo, hi, points, SignedCorrection, vec![], |u| {
                (l * u * u - 2.0 * l * l * u + (l + 1.0) * u + (l - 1.0).powi(3))
                    / (2.0 * PI * u.powi(3) * ((hi - u) * (u - lo)).sqrt())
            })
        }
        "gue_bbp" => {
            want(name, params, 1)?;
            let th = params[0];
            if th == 0.0 {
                return Err(Error::InvalidParameter("gue_bbp needs theta != 0".into()));
            }
            let atom = (th + 1.0 / th, step(th.abs(), 1.0));
            tabulate(-2.0, 2.0, points, SignedCorrection, vec![atom], |t| {
                -th * (t - 2.0 * th) / (2.0 * PI * (th * (t - th) - 1.0) * (4.0 - t * t).sqrt())
            })
        }
        "wishart_bbp" => {
            want(name, params, 2)?;
            let (l, th) = (params[0], params[1]);
            if l != 1.0 {
                return Err(Error::InvalidParameter("wishart_bbp closed form is only available for lambda = 1".into()));
            }
            if th == 1.0 || th == 0.0 {
                return Err(Error::InvalidParameter("wishart_bbp needs theta not in {0, 1}".into()));
            }
            let atom = (th + 1.0 + 1.0 / (th - 1.0), step((th - 1.0).abs(), 1.0));
            // the density alone has mass 1/2 for every theta; the hard edge carries
            // the compensating atom, invisible to moments k >= 1
            tabulate(0.0, 4.0, points, SignedCorrection, vec![(0.0, -0.5), atom], |t| {
                th * (2.0 - th) / (2.0 * PI * ((1.0 - th) * t + th * th) * ((4.0 - t) * t).sqrt())
            })
        }
        "dbbp_lln" => {
            want(name, params, 1)?;
            let g = params[0];
            if g <= 1.0 {
                return Err(Error::InvalidParameter(format!("dbbp_lln needs gamma > 1, got {g}")));
            }
            let (lo, hi) = ((g.sqrt() - 1.0).powi(2), (g.sqrt() + 1.0).powi(2));
            tabulate(lo, hi, points, Probability, vec![], |t| {
                ((t - 1.0 + g) / (2.0 * (g * t).sqrt())).clamp(-1.0, 1.0).acos() / PI
            })
        }
        "dbbp" => {
            want(name, params, 2)?;
            let (g, a) = (params[0], params[1]);
            if g <= 1.0 || a <= 0.0 {
                return Err(Error::InvalidParameter(format!("dbbp needs gamma > 1 and alpha > 0, got {g}, {a}")));
            }
            let (lo, hi) = ((g.sqrt() - 1.0).powi(2), (g.sqrt() + 1.0).powi(2));
            let atom = (a + 1.0 + g + g / a, step(a, g.sqrt()));
            tabulate(lo, hi, points, SignedCorrection, vec![atom], |t| {
                let bracket = a * (t - 2.0 * a - g - 1.0) / (g + a * a + a * g + a - a * t) - (t + 1.0 - g) / (2.0 * t);
                bracket / (2.0 * PI * ((g + 1.0 + 2.0 * g.sqrt() - t) * (t - g - 1.0 + 2.0 * g.sqrt())).sqrt())
            })
        }
        "aztec_lln" => {
            want(name, params, 2)?;
            let a = aztec_alpha(params)?;
            let edge = 1.0 - (1.0 - 2.0 * a).powi(2);
            tabulate(0.0, 1.0 / a, points, Probability, vec![], |t| {
                let w = 1.0 - (2.0 * a * t - 1.0).powi(2);
                if (1.0 - 2.0 * a * t).powi(2) <= edge {
                    ((1.0 - 2.0 * a) / w.sqrt()).clamp(-1.0, 1.0).acos() / PI
                } else {
                    1.0
                }
            })
        }
        "aztec" => {
            want(name, params, 2)?;
            let a = aztec_alpha(params)?;
            let big_a = params[1];
            if big_a <= 1.0 {
                return Err(Error::InvalidParameter(format!("aztec needs A > 1, got {big_a}")));
            }
            let r = (1.0 - (2.0 * a - 1.0).powi(2)).sqrt();
            let (lo, hi) = ((1.0 - r) / (2.0 * a), (1.0 + r) / (2.0 * a));
            let threshold = (big_a + 1.0).powi(2) / (2.0 * (big_a * big_a + 1.0));
            let loc = (-1.0 + 2.0 * a * big_a - big_a) / (a * (big_a * big_a - 1.0));
            let atoms = vec![
                // frozen-region edges: the Schur-side points x = 0 and x = infinity
                (0.0, 0.5),
                (loc, -step(a, threshold)),
                (1.0 / a, -0.5),
            ];
            tabulate(lo, hi, points, SignedCorrection, atoms, |t| {
                let bracket = a + (1.0 - 2.0 * a) / (4.0 * t) - a * (2.0 * a - 1.0) / (4.0 * (a * t - 1.0))
                    + a * (2.0 * big_a * big_a * a - big_a * big_a - 2.0 * big_a + 2.0 * a - 1.0)
                        / (2.0 * (-a * t + big_a * big_a * a * t - 2.0 * a * big_a + 1.0 + big_a));
                bracket / (PI * (1.0 - (2.0 * a - 1.0).powi(2) - (2.0 * a * t - 1.0).powi(2)).sqrt())
            })
        }
        _ => return Err(Error::InvalidParameter(format!("unknown catalog entry {name}"))),
    };
    Ok(m)
}

fn aztec_alpha(params: &[f64]) -> Result<f64> {
    let a = params[0];
    if !(a > 0.5 && a < 1.0) {
        return Err(Error::InvalidParameter(format!("aztec needs 1/2 < alpha < 1, got {a}")));
    }
    Ok(a)
}

// ---------------------------------------------------------------------------
// Second-order functionals

fn poly_eval(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn poly_deriv(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect()
}

/// Quotient of `p(t) - p(s)` by `t - s` (synthetic division, so the
/// removable singularity at `t = s` never appears).
fn poly_divided(p: &[f64], s: f64) -> Vec<f64> {
    if p.len() <= 1 {
        return vec![0.0];
    }
    let n = p.len() - 1;
    let mut q = vec![0.0; n];
    let mut acc = 0.0;
    for i in (1..=n).rev() {
        acc = acc * s + p[i];
        q[i - 1] = acc;
    }
    q
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

const ARCSINE_NODES: usize = 512;

/// `int_{-2}^{2} g(t) / sqrt(4 - t^2) dt` via `t = 2 cos(phi)` (exact for
/// polynomials of degree below `2 * ARCSINE_NODES`).
fn arcsine_integral(g: impl Fn(f64) -> f64) -> f64 {
    let h = PI / ARCSINE_NODES as f64;
    (0..ARCSINE_NODES).map(|i| g(2.0 * ((i as f64 + 0.5) * h).cos())).sum::<f64>() * h
}

/// `int_{-2}^{2} dt / ((s - t) sqrt(4 - t^2))` for `|s| > 2`.
fn cauchy_arcsine(s: f64) -> f64 {
    PI * s.signum() / (s * s - 4.0).sqrt()
}

/// First-order BBP functional of a spike `theta`: atom at `theta + 1/theta`
/// when `|theta| > 1` minus the arcsine-weighted Cauchy term.
fn bbp_first_order(p: &[f64], th: f64) -> f64 {
    let s = th + 1.0 / th;
    // (t - 2 th) P(t) / (t - s) = q(t) + (s - 2 th) P(s) / (t - s)
    let tp = poly_mul(&[-2.0 * th, 1.0], p);
    let q = poly_divided(&tp, s);
    let remainder = (s - 2.0 * th) * poly_eval(p, s);
    let integral = arcsine_integral(|t| poly_eval(&q, t)) - remainder * cauchy_arcsine(s);
    let atom = if th.abs() > 1.0 { poly_eval(p, s) } else { 0.0 };
    atom - integral / (2.0 * PI)
}

/// Difference-quotient terms a spike `theta` contributes at second order.
fn spike_second_order(p: &[f64], th: f64) -> f64 {
    let s = th + 1.0 / th;
    let q1 = poly_divided(&poly_deriv(p), s);
    let q2 = poly_divided(&q1, s);
    let b = th * th / (2.0 * PI) * arcsine_integral(|t| poly_eval(&q1, t));
    let c = -(th * th - 1.0) / (4.0 * PI) * arcsine_integral(|t| (t - 2.0 * th) * poly_eval(&q2, t));
    b + c
}

fn genus_term(p: &[f64]) -> f64 {
    let d2 = poly_deriv(&poly_deriv(p));
    arcsine_integral(|t| poly_eval(&d2, t) * (t * t - 2.0)) / (24.0 * PI)
}

/// Functional names accepted by [`eval_second_order_functional`].
pub const FUNCTIONAL_NAMES: &[(&str, &str)] = &[
    ("gue_pure", ""),
    ("gue_full", ""),
    ("spiked_three_scale", "theta1,theta2"),
    ("higher_bbp", "theta1,theta2"),
    ("gue_four_scale_third", ""),
];

/// Closed-form correction functionals evaluated on a polynomial `P` given by
/// ascending coefficients. The spiked and higher-BBP entries return the
/// coefficient of the second correction scale.
pub fn eval_second_order_functional(name: &str, params: &[f64], p: &[f64]) -> Result<f64> {
    if p.len() > 13 {
        return Err(Error::Guard { what: "deg P", value: p.len() as i64 - 1, range: "0..=12" });
    }
    let p: Vec<f64> = if p.is_empty() { vec![0.0] } else { p.to_vec() };
    let d1 = poly_deriv(&p);
    let d2 = poly_deriv(&d1);
    let check_theta = |th: f64| {
        if th.abs() == 1.0 || th == 0.0 {
            Err(Error::InvalidParameter(format!("singular parameter theta = {th}")))
        } else {
            Ok(th)
        }
    };
    match name {
        "gue_pure" => {
            want(name, params, 0)?;
            Ok(genus_term(&p))
        }
        "gue_full" => {
            want(name, params, 0)?;
            Ok(arcsine_integral(|t| {
                poly_eval(&d2, t) * (t * t - 2.0) / 12.0
                    + poly_eval(&d1, t) * (t * t * t - 3.0 * t) / 2.0
                    + poly_eval(&p, t) * (t * t - 2.0)
            }) / (2.0 * PI))
        }
        "spiked_three_scale" => {
            want(name, params, 2)?;
            let th1 = check_theta(params[0])?;
            let th2 = params[1];
            let a = th2 / (2.0 * PI) * arcsine_integral(|t| (4.0 - t * t) * poly_eval(&d1, t));
            Ok(a + spike_second_order(&p, th1) + genus_term(&p))
        }
        "higher_bbp" => {
            want(name, params, 2)?;
            let th1 = check_theta(params[0])?;
            let th2 = check_theta(params[1])?;
            Ok(bbp_first_order(&p, th2) + spike_second_order(&p, th1))
        }
        "gue_four_scale_third" => {
            want(name, params, 0)?;
            Ok(arcsine_integral(|t| {
                (t.powi(4) - 4.0 * t * t + 2.0) * poly_eval(&d2, t)
                    + (6.0 * t.powi(3) - 18.0 * t) * poly_eval(&d1, t)
                    + (6.0 * t * t - 12.0) * poly_eval(&p, t)
            }) / (2.0 * PI))
        }
        _ => Err(Error::InvalidParameter(format!("unknown functional {name}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::model;
    use approx::assert_relative_eq;

    #[test]
    fn semicircle_reconstruction() {
        let kf = KFunction::lln(Side::Hc, PartialFractions::polynomial(&[0.0, 1.0]));
        let (lo, hi) = kf.support().unwrap().unwrap();
        assert_relative_eq!(lo, -2.0, epsilon = 1e-10);
        assert_relative_eq!(hi, 2.0, epsilon = 1e-10);
        let m = reconstruct_density(&kf, &[-1.0, 0.0, 1.5], 1e-3).unwrap();
        assert_relative_eq!(m.density[1], 1.0 / PI, epsilon = 1e-6);
        assert_relative_eq!(m.density[2], (4.0f64 - 2.25).sqrt() / (2.0 * PI), epsilon = 1e-5);
        assert!(m.atoms.is_empty());
    }

    #[test]
    fn gue_correction_reconstruction() {
        let x = PartialFractions::polynomial(&[0.0, 1.0]);
        let kf = KFunction::correction(Side::Hc, x.clone(), x);
        let m = reconstruct_density(&kf, &[0.0, 1.0], 1e-3).unwrap();
        assert_relative_eq!(m.density[0], -1.0 / (2.0 * PI), epsilon = 1e-5);
        assert_relative_eq!(m.density[1], -1.0 / (2.0 * PI * 3.0f64.sqrt()), epsilon = 1e-5);
    }

    #[test]
    fn bbp_outliers() {
        for (th, want) in [(2.0, vec![(2.5, 1.0)]), (0.5, vec![]), (-3.0, vec![(-3.0 - 1.0 / 3.0, 1.0)])] {
            let m = model("gue-bbp", &[th]).unwrap();
            let atoms = detect_outliers(&m.k_function_correction()).unwrap();
            assert_eq!(atoms.len(), want.len(), "theta={th}");
            for (a, w) in atoms.iter().zip(&want) {
                assert_relative_eq!(a.0, w.0, epsilon = 1e-12);
                assert_relative_eq!(a.1, w.1, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn uniform_schur_is_atomic() {
        let m = model("uniform-schur", &[]).unwrap();
        let kf = m.k_function_correction();
        assert_eq!(kf.support().unwrap(), None);
        let atoms = detect_outliers(&kf).unwrap();
        assert_eq!(atoms, vec![(0.0, 0.5), (1.0, -0.5)]);
    }

    #[test]
    fn aztec_outliers() {
        let m = model("aztec", &[0.9, 3.0]).unwrap();
        let atoms = detect_outliers(&m.k_function_correction()).unwrap();
        assert_eq!(atoms.len(), 3);
        assert_relative_eq!(atoms[0].0, 0.0);
        assert_relative_eq!(atoms[0].1, 0.5);
        assert_relative_eq!(atoms[1].0, (-1.0 + 5.4 - 3.0) / (0.9 * 8.0), epsilon = 1e-12);
        assert_relative_eq!(atoms[1].1, -1.0);
        assert_relative_eq!(atoms[2].0, 1.0 / 0.9, epsilon = 1e-12);
        assert_relative_eq!(atoms[2].1, -0.5);
    }

    #[test]
    fn catalog_examples() {
        let g = catalog("gue_correction", &[]).unwrap();
        let mid = g.grid.len() / 2;
        assert_relative_eq!(0.5 * (g.density[mid] + g.density[mid - 1]), -1.0 / (2.0 * PI), epsilon = 1e-5);
        let q = quadrature_moments(&g, 2);
        assert!(q[0].abs() < 1e-6);
        assert_relative_eq!(q[2], 1.0, epsilon = 1e-10);
        let d = catalog("dbbp", &[9.0, 4.0]).unwrap();
        assert_eq!(d.atoms, vec![(16.25, 1.0)]);
        let d = catalog("dbbp", &[9.0, 3.0]).unwrap();
        assert_eq!(d.atoms, vec![(16.0, 0.5)]);
        assert!(catalog("dbbp", &[0.5, 3.0]).is_err());
        let s = catalog("semicircle", &[]).unwrap();
        assert_relative_eq!(quadrature_moments(&s, 2)[2], 1.0, epsilon = 1e-4);
        s.validate().unwrap();
        let atoms_only = SpectralMeasure {
            grid: vec![],
            density: vec![],
            weights: None,
            atoms: vec![(2.5, 1.0)],
            support: None,
            kind: MeasureKind::SignedCorrection,
            invalid: vec![],
            mismatch: None,
        };
        assert_relative_eq!(quadrature_moments(&atoms_only, 3)[3], 15.625);
    }

    #[test]
    fn functionals() {
        assert_relative_eq!(eval_second_order_functional("gue_pure", &[], &[0., 0., 0., 0., 1.]).unwrap(), 1.0, epsilon = 1e-12);
        assert!(eval_second_order_functional("gue_full", &[], &[1.0]).unwrap().abs() < 1e-15);
        assert_relative_eq!(eval_second_order_functional("gue_full", &[], &[0., 0., 1.]).unwrap(), 1.0, epsilon = 1e-12);
        assert!(eval_second_order_functional("higher_bbp", &[1.0, 0.5], &[1.0]).is_err());
        assert!(eval_second_order_functional("gue_pure", &[], &[0.0; 14]).is_err());
    }

    #[test]
    fn divided_polynomials() {
        let p = [1.0, -2.0, 0.5, 3.0];
        let q = poly_divided(&p, 1.7);
        for t in [0.3, -1.1, 2.0] {
            assert_relative_eq!(poly_eval(&q, t), (poly_eval(&p, t) - poly_eval(&p, 1.7)) / (t - 1.7), max_relative = 1e-13);
        }
        let g = arcsine_integral(|t| 1.0 / (3.0 - t));
        assert_relative_eq!(g, cauchy_arcsine(3.0), max_relative = 1e-10);
    }
}
