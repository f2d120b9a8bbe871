//! Monte Carlo for the normalized power traces `N^{-1} Tr A^k` of random
//! Hermitian matrices, and weighted least-squares fits of their `1/N`
//! expansion against the moment engine.
//!
//! Matrices are normalized so that eigenvalues are `O(1)`: a GUE component
//! has `E[a_ij a_kl] = sigma^2 delta_il delta_jk / N`, a Wishart component is
//! `X X^* / N` with `X` of size `N x round(lambda N)` and unit-variance complex
//! entries. A component with scale exponent `s` is multiplied by `N^{-s}`.
//!
//! When the spec is one unitarily invariant component plus at most one spike,
//! sampling goes through the tridiagonal (GUE) or bidiagonal (Wishart)
//! models. They have the same spectral law as the dense matrix, and the
//! Householder reduction fixes `e_1`, so a spike at `e_1` stays a rank-one
//! diagonal perturbation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momentengine::{correction1_hc, correction2_hc, lln_moments_hc};
use crate::rational::PartialFractions;

pub const MAX_N: usize = 2048;
pub const MAX_K: usize = 12;

/// Deterministic eigenvalue list for a Haar-rotated fixed spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpectrumSampler {
    /// `values[j]` repeated in proportion to `weights[j]` (largest remainder).
    Atoms { values: Vec<f64>, weights: Vec<f64> },
    /// Midpoint quantiles of the uniform law on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
}

impl SpectrumSampler {
    pub fn eigenvalues(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Self::Uniform { lo, hi } => Ok((0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()),
            Self::Atoms { values, weights } => {
                if values.is_empty() || values.len() != weights.len() || weights.iter().any(|&w| w < 0.0) {
                    return Err(Error::InvalidParameter("atoms need matching values and nonnegative weights".into()));
                }
                let total: f64 = weights.iter().sum();
                if total <= 0.0 {
                    return Err(Error::InvalidParameter("atom weights sum to zero".into()));
                }
                let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
                let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
                let mut order: Vec<usize> = (0..exact.len()).collect();
                order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
                let short = n - counts.iter().sum::<usize>();
                for &j in order.iter().take(short) {
                    counts[j] += 1;
                }
                Ok(values.iter().zip(&counts).flat_map(|(&v, &c)| std::iter::repeat_n(v, c)).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentKind {
    Gue { sigma: f64 },
    Wishart { lambda: f64 },
    DiagSpikes { thetas: Vec<f64> },
    HaarFixedSpectrum { spectrum: SpectrumSampler },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    #[serde(flatten)]
    pub kind: ComponentKind,
    /// The component enters as `N^{-scale}` times its normalized form.
    #[serde(default)]
    pub scale: f64,
    /// Conjugate by an independent Haar unitary.
    #[serde(default)]
    pub conjugate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub components: Vec<Component>,
}

impl EnsembleSpec {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let spec = Self { components };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gue(sigma: f64) -> Self {
        Self { components: vec![Component { kind: ComponentKind::Gue { sigma }, scale: 0.0, conjugate: false }] }
    }

    pub fn wishart(lambda: f64) -> Self {
        Self { components: vec![Component { kind: ComponentKind::Wishart { lambda }, scale: 0.0, conjugate: false }] }
    }

    pub fn with(mut self, kind: ComponentKind, scale: f64, conjugate: bool) -> Self {
        self.components.push(Component { kind, scale, conjugate });
        self
    }

    pub fn with_spikes(self, thetas: &[f64]) -> Self {
        self.with(ComponentKind::DiagSpikes { thetas: thetas.to_vec() }, 0.0, false)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidParameter("ensemble needs at least one component".into()));
        }
        for c in &self.components {
            if !c.scale.is_finite() {
                return Err(Error::InvalidParameter("scale exponent must be finite".into()));
            }
            match &c.kind {
                ComponentKind::Wishart { lambda } if !(*lambda > 0.0) => {
                    return Err(Error::InvalidParameter(format!("wishart ratio must be positive, got {lambda}")))
                }
                ComponentKind::Gue { sigma } if !sigma.is_finite() => {
                    return Err(Error::InvalidParameter("gue sigma must be finite".into()))
                }
                ComponentKind::DiagSpikes { thetas } if thetas.iter().any(|t| !t.is_finite()) => {
                    return Err(Error::InvalidParameter("spikes must be finite".into()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn banded_plan(&self) -> Option<Banded> {
        let mut base = None;
        let mut spike = None;
        for c in &self.components {
            match &c.kind {
                ComponentKind::Gue { sigma } if base.is_none() => base = Some((Base::Gue(*sigma), c.scale)),
                ComponentKind::Wishart { lambda } if base.is_none() => base = Some((Base::Wishart(*lambda), c.scale)),
                ComponentKind::DiagSpikes { thetas } if spike.is_none() && thetas.len() <= 1 && !c.conjugate => {
                    spike = Some((thetas.first().copied().unwrap_or(0.0), c.scale))
                }
                _ => return None,
            }
        }
        let (base, scale) = base?;
        Some(Banded { base, scale, spike })
    }

    /// Engine predictions `(mu, mu', mu'' + nu'')` for `k = 1..=K` when the
    /// spec maps onto `Psi`, `Phi`, `T` inputs; `None` otherwise.
    pub fn engine_prediction(&self, k_max: usize) -> Result<Option<[Vec<f64>; 3]>> {
        let mut parts = [PartialFractions::zero(), PartialFractions::zero(), PartialFractions::zero()];
        let slot = |s: f64| [0.0, 0.5, 1.0].iter().position(|&v| v == s);
        let mut spike_components = 0;
        for c in &self.components {
            match &c.kind {
                ComponentKind::Gue { sigma } => {
                    let Some(i) = slot(c.scale) else { return Ok(None) };
                    parts[i] = parts[i].add(&PartialFractions::polynomial(&[0.0, sigma * sigma]));
                }
                ComponentKind::Wishart { lambda } if c.scale == 0.0 => {
                    parts[0] = parts[0].add(&PartialFractions::simple_pole(1.0, -lambda));
                }
                ComponentKind::DiagSpikes { thetas } => {
                    spike_components += 1;
                    for &th in thetas {
                        if c.scale == 0.0 {
                            parts[1] = parts[1].add(&PartialFractions::spike(th));
                        } else if c.scale == 1.0 {
                            parts[2] = parts[2].add(&PartialFractions::polynomial(&[th]));
                        } else {
                            return Ok(None);
                        }
                    }
                }
                _ => return Ok(None),
            }
        }
        if spike_components > 1 {
            return Ok(None);
        }
        let order = k_max + 3;
        let [psi, phi, t] = [0, 1, 2].map(|i| parts[i].to_series(0.0, order).map(|s| s.integral()));
        let (psi, phi, t) = (psi?, phi?, t?);
        let mu = lln_moments_hc(&psi, k_max)?;
        let mu1 = correction1_hc(&psi, &phi, k_max)?;
        let (a, b) = correction2_hc(&psi, &phi, &t, k_max)?;
        Ok(Some([mu, mu1, a.iter().zip(&b).map(|(x, y)| x + y).collect()]))
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    // unit variance: E|z|^2 = 1
    Complex64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

/// `chi_{2m} / sqrt(2)`, the norm of an `m`-vector of unit complex Gaussians.
fn complex_chi(rng: &mut impl Rng, m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    (ChiSquared::new(2.0 * m as f64).expect("positive dof").sample(rng) / 2.0).sqrt()
}

fn gue_dense(rng: &mut impl Rng, n: usize, sigma: f64) -> DMatrix<Complex64> {
    let s = sigma / (n as f64).sqrt();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = Complex64::new(normal(rng) * s, 0.0);
        for j in i + 1..n {
            let z = complex_normal(rng) * s;
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
        }
    }
    a
}

fn wishart_cols(lambda: f64, n: usize) -> usize {
    ((lambda * n as f64).round() as usize).max(1)
}

fn wishart_dense(rng: &mut impl Rng, n: usize, lambda: f64) -> DMatrix<Complex64> {
    let m = wishart_cols(lambda, n);
    let x = DMatrix::from_fn(n, m, |_, _| complex_normal(rng));
    (&x * x.adjoint()) / Complex64::new(n as f64, 0.0)
}

/// Haar unitary from the QR decomposition of a complex Ginibre matrix, with
/// the phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary(rng: &mut impl Rng, n: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| complex_normal(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Dense sample of the ensemble, deterministic in `seed`.
pub fn sample_matrix(spec: &EnsembleSpec, n: usize, seed: u64) -> Result<DMatrix<Complex64>> {
    spec.validate()?;
    if n == 0 || n > MAX_N {
        return Err(Error::Guard { what: "N", value: n as i64, range: "1..=2048" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = DMatrix::<Complex64>::zeros(n, n);
    for c in &spec.components {
        let mut m = match &c.kind {
            ComponentKind::Gue { sigma } => gue_dense(&mut rng, n, *sigma),
            ComponentKind::Wishart { lambda } => wishart_dense(&mut rng, n, *lambda),
            ComponentKind::DiagSpikes { thetas } => {
                if thetas.len() > n {
                    return Err(Error::InvalidParameter(format!("{} spikes do not fit in N = {n}", thetas.len())));
                }
                let mut d = DMatrix::zeros(n, n);
                for (i, &t) in thetas.iter().enumerate() {
                    d[(i, i)] = Complex64::new(t, 0.0);
                }
                d
            }
            ComponentKind::HaarFixedSpectrum { spectrum } => {
                let ev = spectrum.eigenvalues(n)?;
                DMatrix::from_diagonal(&DVector::from_iterator(n, ev.into_iter().map(|v| Complex64::new(v, 0.0))))
            }
        };
        if c.conjugate {
            let u = haar_unitary(&mut rng, n);
            m = &u * m * u.adjoint();
        }
        total += m * Complex64::new((n as f64).powf(-c.scale), 0.0);
    }
    Ok(total)
}

fn guard_k(k_max: usize) -> Result<()> {
    if k_max == 0 || k_max > MAX_K {
        return Err(Error::Guard { what: "K", value: k_max as i64, range: "1..=12" });
    }
    Ok(())
}

/// `N^{-1} Tr A^k` for `k = 1..=K` from the Hermitian eigenvalues.
pub fn empirical_moments(a: &DMatrix<Complex64>, k_max: usize) -> Result<Vec<f64>> {
    guard_k(k_max)?;
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidParameter("matrix must be square and nonempty".into()));
    }
    let ev = a.clone().symmetric_eigen().eigenvalues;
    if ev.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("eigenvalue solver returned non-finite values".into()));
    }
    Ok(power_sums(ev.iter().copied(), k_max).into_iter().map(|p| p / n as f64).collect())
}

fn power_sums(values: impl Iterator<Item = f64>, k_max: usize) -> Vec<f64> {
    let mut p = vec![0.0; k_max];
    for v in values {
        let mut x = 1.0;
        for pk in p.iter_mut() {
            x *= v;
            *pk += x;
        }
    }
    p
}

/// `N^{-1} Tr A^k` by repeated multiplication (slow cross-check).
pub fn trace_moments(a: &DMatrix<Complex64>, k_max: usize) -> Result<Vec<f64>> {
    guard_k(k_max)?;
    let n = a.nrows() as f64;
    let mut p = a.clone();
    let mut out = Vec::with_capacity(k_max);
    for _ in 0..k_max {
        out.push(p.trace().re / n);
        p = &p * a;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Base {
    Gue(f64),
    Wishart(f64),
}

/// One invariant component plus an optional spike at `e_1`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Banded {
    base: Base,
    scale: f64,
    spike: Option<(f64, f64)>,
}

/// Real symmetric tridiagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.diag.len();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = Complex64::new(self.diag[i], 0.0);
        }
        for (i, &b) in self.off.iter().enumerate() {
            a[(i, i + 1)] = Complex64::new(b, 0.0);
            a[(i + 1, i)] = Complex64::new(b, 0.0);
        }
        a
    }

    /// `N^{-1} Tr T^k` for `k = 1..=K` by banded products: `T^j` has
    /// bandwidth `j`, so the cost is `O(N K^2)`.
    pub fn trace_moments(&self, k_max: usize) -> Vec<f64> {
        let n = self.diag.len();
        // band[d + w][i] = (T^j)_{i, i+d} for |d| <= w
        let mut w = 0usize;
        let mut band = vec![vec![1.0; n]];
        let mut out = Vec::with_capacity(k_max);
        for _ in 0..k_max {
            let nw = w + 1;
            let mut next = vec![vec![0.0; n]; 2 * nw + 1];
            for (bi, row) in band.iter().enumerate() {
                let d = bi as isize - w as isize;
                for i in 0..n {
                    let j = i as isize + d;
                    if j < 0 || j >= n as isize {
                        continue;
                    }
                    let v = row[i];
                    if v == 0.0 {
                        continue;
                    }
                    let j = j as usize;
                    // (P T)_{i, c} = sum_j P_{i, j} T_{j, c}, c in {j-1, j, j+1}
                    let mut put = |c: usize, t: f64| {
                        let dd = c as isize - i as isize + nw as isize;
                        next[dd as usize][i] += v * t;
                    };
                    put(j, self.diag[j]);
                    if j + 1 < n {
                        put(j + 1, self.off[j]);
                    }
                    if j > 0 {
                        put(j - 1, self.off[j - 1]);
                    }
                }
            }
            band = next;
            w = nw;
            out.push(band[w].iter().sum::<f64>() / n as f64);
        }
        out
    }
}

/// Tridiagonal model of `sigma * GUE`: diagonal `N(0,1)`, off-diagonal
/// `chi_{2(N-i)}/sqrt 2`, all divided by `sqrt N`.
pub fn gue_tridiagonal(rng: &mut impl Rng, n: usize, sigma: f64) -> Tridiagonal {
    let s = sigma / (n as f64).sqrt();
    let diag = (0..n).map(|_| normal(rng) * s).collect();
    let off = (1..n).map(|i| complex_chi(rng, n - i) * s).collect();
    Tridiagonal { diag, off }
}

/// `B B^*/N` for the lower bidiagonal Laguerre model `B` of an `N x M`
/// complex Gaussian matrix: `B_ii = chi_{2(M-i)}`, `B_{i+1,i} = chi_{2(N-1-i)}`
/// (each over `sqrt 2`).
pub fn wishart_tridiagonal(rng: &mut impl Rng, n: usize, lambda: f64) -> Tridiagonal {
    let m = wishart_cols(lambda, n);
    let r = n.min(m);
    let d: Vec<f64> = (0..r).map(|i| complex_chi(rng, m - i)).collect();
    let s: Vec<f64> = (0..n.saturating_sub(1).min(m)).map(|i| complex_chi(rng, n - 1 - i)).collect();
    let b_ii = |i: usize| d.get(i).copied().unwrap_or(0.0);
    let b_sub = |i: usize| s.get(i).copied().unwrap_or(0.0);
    let inv = 1.0 / n as f64;
    // (B B^T)_{ii} = B_ii^2 + B_{i,i-1}^2, (B B^T)_{i+1,i} = B_{i+1,i} B_ii
    let diag = (0..n)
        .map(|i| (b_ii(i).powi(2) + if i > 0 { b_sub(i - 1).powi(2) } else { 0.0 }) * inv)
        .collect();
    let off = (0..n.saturating_sub(1)).map(|i| b_sub(i) * b_ii(i) * inv).collect();
    Tridiagonal { diag, off }
}

fn sample_banded(plan: &Banded, n: usize, seed: u64) -> Tridiagonal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = match plan.base {
        Base::Gue(sigma) => gue_tridiagonal(&mut rng, n, sigma),
        Base::Wishart(lambda) => wishart_tridiagonal(&mut rng, n, lambda),
    };
    let f = (n as f64).powf(-plan.scale);
    t.diag.iter_mut().chain(t.off.iter_mut()).for_each(|v| *v *= f);
    if let Some((theta, s)) = plan.spike {
        t.diag[0] += theta * (n as f64).powf(-s);
    }
    t
}

/// Independent stream per `(N, sample)`.
pub fn stream_seed(base: u64, n: usize, sample: usize) -> u64 {
    let mut z = base ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (sample as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-`k` mean and standard error of `N^{-1} Tr A^k` over `samples` draws.
pub fn moment_statistics(spec: &EnsembleSpec, n: usize, k_max: usize, samples: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    guard_k(k_max)?;
    spec.validate()?;
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples for a standard error".into()));
    }
    let plan = spec.banded_plan();
    let draws: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let seed = stream_seed(seed, n, s);
            match &plan {
                Some(p) => Ok(sample_banded(p, n, seed).trace_moments(k_max)),
                None => empirical_moments(&sample_matrix(spec, n, seed)?, k_max),
            }
        })
        .collect::<Result<_>>()?;
    let sf = samples as f64;
    let mut mean = vec![0.0; k_max];
    for d in &draws {
        for (m, v) in mean.iter_mut().zip(d) {
            *m += v / sf;
        }
    }
    let mut var = vec![0.0; k_max];
    for d in &draws {
        for ((s, v), m) in var.iter_mut().zip(d).zip(&mean) {
            *s += (v - m).powi(2) / (sf - 1.0);
        }
    }
    Ok((mean, var.iter().map(|v| (v / sf).sqrt()).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub k: usize,
    pub n_grid: Vec<usize>,
    pub means: Vec<f64>,
    pub std_errs: Vec<f64>,
    /// Powers of `1/N` in the fitted model, e.g. `[0, 1]` or `[0, 2]`.
    pub powers: Vec<i32>,
    pub coeffs: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub predictions: Option<Vec<f64>>,
    pub z_scores: Option<Vec<f64>>,
    pub dof: usize,
}

impl MCReport {
    pub fn std_err(&self, i: usize) -> f64 {
        self.cov[i][i].max(0.0).sqrt()
    }

    /// All `|z| <= bound`; `None` without predictions.
    pub fn within(&self, bound: f64) -> Option<bool> {
        self.z_scores.as_ref().map(|z| z.iter().all(|v| v.abs() <= bound))
    }
}

/// Weighted least squares of `means` on `N^{-p}` for `p` in `powers`, with
/// inverse-variance weights (unit weights when some error is zero).
pub fn wls(n_grid: &[usize], means: &[f64], std_errs: &[f64], powers: &[i32]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (rows, cols) = (n_grid.len(), powers.len());
    if rows < cols + 1 {
        return Err(Error::InvalidParameter(format!("{rows} grid points cannot fit {cols} coefficients with a residual")));
    }
    let exact = std_errs.contains(&0.0);
    let x = DMatrix::from_fn(rows, cols, |i, j| (n_grid[i] as f64).powi(-powers[j]));
    let w = DVector::from_fn(rows, |i, _| if exact { 1.0 } else { std_errs[i].powi(-2) });
    let xtw = DMatrix::from_fn(cols, rows, |j, i| x[(i, j)] * w[i]);
    let normal = &xtw * &x;
    let inv = normal.clone().try_inverse().ok_or_else(|| Error::Numeric("singular design; N grid too degenerate".into()))?;
    let beta = &inv * (&xtw * DVector::from_column_slice(means));
    let cov = if exact { DMatrix::zeros(cols, cols) } else { inv };
    Ok((beta.iter().copied().collect(), (0..cols).map(|i| (0..cols).map(|j| cov[(i, j)]).collect()).collect()))
}

fn z_score(fit: f64, pred: f64, se: f64) -> f64 {
    let d = fit - pred;
    if se > 0.0 {
        d / se
    } else if d.abs() <= 1e-12 * pred.abs().max(1.0) {
        0.0
    } else {
        f64::INFINITY.copysign(d)
    }
}

fn reports(
    n_grid: &[usize],
    stats: &[(Vec<f64>, Vec<f64>)],
    k_max: usize,
    powers: &[i32],
    predict: impl Fn(usize) -> Option<Vec<f64>>,
) -> Result<Vec<MCReport>> {
    (1..=k_max)
        .map(|k| {
            let means: Vec<f64> = stats.iter().map(|s| s.0[k - 1]).collect();
            let std_errs: Vec<f64> = stats.iter().map(|s| s.1[k - 1]).collect();
            let (coeffs, cov) = wls(n_grid, &means, &std_errs, powers)?;
            let predictions = predict(k);
            let z_scores = predictions
                .as_ref()
                .map(|p| p.iter().enumerate().map(|(i, &v)| z_score(coeffs[i], v, cov[i][i].max(0.0).sqrt())).collect());
            Ok(MCReport {
                k,
                n_grid: n_grid.to_vec(),
                means,
                std_errs,
                powers: powers.to_vec(),
                coeffs,
                cov,
                predictions,
                z_scores,
                dof: n_grid.len() - powers.len(),
            })
        })
        .collect()
}

fn grid_statistics(spec: &EnsembleSpec, k_max: usize, n_grid: &[usize], samples: usize, seed: u64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    n_grid.iter().map(|&n| moment_statistics(spec, n, k_max, samples, seed)).collect()
}

/// Fits `a + b/N` (`orders = 1`) or `a + b/N + c/N^2` (`orders = 2`) to the
/// simulated means for every `k <= K` and scores them against the engine.
pub fn fit_expansion(
    spec: &EnsembleSpec,
    k_max: usize,
    n_grid: &[usize],
    samples: usize,
    orders: usize,
    seed: u64,
) -> Result<Vec<MCReport>> {
    if !(1..=2).contains(&orders) {
        return Err(Error::Guard { what: "orders", value: orders as i64, range: "1..=2" });
    }
    if n_grid.len() < orders + 2 {
        return Err(Error::InvalidParameter(format!("N grid needs at least {} points", orders + 2)));
    }
    let powers: Vec<i32> = (0..=orders as i32).collect();
    let stats = grid_statistics(spec, k_max, n_grid, samples, seed)?;
    let pred = spec.engine_prediction(k_max)?;
    reports(n_grid, &stats, k_max, &powers, |k| pred.as_ref().map(|p| p[..=orders].iter().map(|row| row[k - 1]).collect()))
}

/// Topological expansion of the GUE: fits `a + c/N^2` for even `k <= K` and
/// compares with Catalan numbers and the engine's genus-one term.
pub fn genus_check(k_max: usize, n_grid: &[usize], samples: usize, seed: u64) -> Result<Vec<MCReport>> {
    if !(2..=8).contains(&k_max) || k_max % 2 == 1 {
        return Err(Error::Guard { what: "K", value: k_max as i64, range: "even, 2..=8" });
    }
    let spec = EnsembleSpec::gue(1.0);
    let stats = grid_statistics(&spec, k_max, n_grid, samples, seed)?;
    let [mu, _, second] = spec.engine_prediction(k_max)?.expect("gue has engine inputs");
    let all = reports(n_grid, &stats, k_max, &[0, 2], |k| Some(vec![mu[k - 1], second[k - 1]]))?;
    Ok(all.into_iter().filter(|r| r.k % 2 == 0).collect())
}
