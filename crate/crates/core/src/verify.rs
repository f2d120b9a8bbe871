//! Small-N checks of the operator identities behind the moment engine:
//! the Harish-Chandra determinant formula, rational Schur characters and the
//! eigenrelations of `D_k` and its Schur-side analogue `D_k^{U(N)}`.
//!
//! Derivatives are taken by lifting one coordinate to a jet, so nothing here
//! relies on finite differences.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Scalar, TruncatedSeries};

/// Minimum spacing of evaluation points in numeric mode.
pub const MIN_GAP: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    /// Matrix spectrum (HC side) or signature (Schur side, integer entries).
    pub lambda: Vec<f64>,
    pub x: Vec<f64>,
}

impl SpectrumPoint {
    pub fn new(lambda: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if lambda.len() != x.len() {
            return Err(Error::InvalidParameter(format!(
                "lambda has {} entries but x has {}",
                lambda.len(),
                x.len()
            )));
        }
        guard("N", x.len(), 1, 8, "1..=8")?;
        Ok(Self { lambda, x })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// `lambda` as a signature: weakly decreasing integers.
    pub fn signature(&self) -> Result<Vec<i64>> {
        let sig: Vec<i64> = self
            .lambda
            .iter()
            .map(|&l| {
                if l.fract() == 0.0 && l.abs() < 1e15 {
                    Ok(l as i64)
                } else {
                    Err(Error::InvalidParameter(format!("signature entry {l} is not an integer")))
                }
            })
            .collect::<Result<_>>()?;
        if sig.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("signature must be weakly decreasing".into()));
        }
        Ok(sig)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub instances: usize,
    pub max_rel_err: f64,
    pub pass: bool,
}

fn guard(what: &'static str, v: usize, lo: usize, hi: usize, range: &'static str) -> Result<()> {
    if v < lo || v > hi {
        return Err(Error::Guard { what, value: v as i64, range });
    }
    Ok(())
}

fn check_distinct(what: &str, v: &[f64], gap: f64) -> Result<()> {
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if (v[i] - v[j]).abs() < gap || v[i] == v[j] {
                return Err(Error::Coincident(format!("{what}[{i}] = {} and {what}[{j}] = {} are too close", v[i], v[j])));
            }
        }
    }
    Ok(())
}

/// All permutations of `0..n` with their signs.
fn permutations(n: usize) -> Vec<(Vec<usize>, i64)> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<(Vec<usize>, i64)>) {
        let n = used.len();
        if prefix.len() == n {
            let inversions = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| prefix[i] > prefix[j]).count();
            out.push((prefix.clone(), if inversions % 2 == 0 { 1 } else { -1 }));
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                go(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn det<T: Scalar>(m: &[Vec<T>]) -> T {
    permutations(m.len())
        .into_iter()
        .map(|(p, s)| {
            let term = p.iter().enumerate().fold(T::one(), |acc, (i, &j)| acc * m[i][j].clone());
            if s > 0 {
                term
            } else {
                -term
            }
        })
        .fold(T::zero(), |a, b| a + b)
}

fn minor<T: Clone>(m: &[Vec<T>], row: usize, col: usize) -> Vec<Vec<T>> {
    m.iter()
        .enumerate()
        .filter(|&(i, _)| i != row)
        .map(|(_, r)| r.iter().enumerate().filter(|&(j, _)| j != col).map(|(_, v)| v.clone()).collect())
        .collect()
}

fn vandermonde<T: Scalar>(v: &[T]) -> T {
    let mut acc = T::one();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            acc = acc * (v[i].clone() - v[j].clone());
        }
    }
    acc
}

fn superfactorial(n: usize) -> f64 {
    (1..n).map(|i| (1..=i).product::<usize>() as f64).product()
}

/// `sum_j (-1)^{row+j} entry(j) * minor(row, j)` of the matrix `m`, where the
/// entries of `row` are replaced by the jets `row_jets`. Returns the jet of
/// the determinant in the lifted coordinate.
fn det_along_jet_row<T: Scalar>(m: &[Vec<T>], row: usize, row_jets: &[TruncatedSeries<T>]) -> Result<TruncatedSeries<T>> {
    let order = row_jets[0].order();
    let center = row_jets[0].center.clone();
    let mut acc = TruncatedSeries::zero(center, order);
    for (j, jet) in row_jets.iter().enumerate() {
        let mut cof = det(&minor(m, row, j));
        if (row + j) % 2 == 1 {
            cof = -cof;
        }
        acc = acc.add(&jet.scale(&cof))?;
    }
    Ok(acc)
}

/// Harish-Chandra integral `c_N det(exp(x_i lambda_j)) / (V(x) V(lambda))`.
///
/// Both Vandermonde factors are divided out analytically: the value equals
/// `c_N det(h_ij)` where `h_ij` is the divided difference of `exp(x lambda)`
/// over `x_1..x_i` and `lambda_1..lambda_j`. These come from the first block
/// row of `exp(Z_lambda (x) Z_x)` with `Z` the bidiagonal node matrices, so the
/// result is accurate for clustered points and continuous when they coincide.
pub fn hc_eval(p: &SpectrumPoint) -> Result<f64> {
    let n = p.n();
    guard("N", n, 1, 6, "1..=6")?;
    if p.x.iter().chain(&p.lambda).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite entry".into()));
    }
    let z = |v: &[f64]| DMatrix::from_fn(n, n, |i, j| if i == j { v[i] } else if j == i + 1 { 1.0 } else { 0.0 });
    let e = z(&p.lambda).kronecker(&z(&p.x)).exp();
    let h = DMatrix::from_fn(n, n, |i, j| e[(0, j * n + i)]);
    let v = superfactorial(n) * h.determinant();
    if !v.is_finite() {
        return Err(Error::Numeric("Harish-Chandra value overflowed".into()));
    }
    Ok(v)
}

/// Direct permutation-sum form of [`hc_eval`], used as an oracle at well
/// separated points.
pub fn hc_eval_permutation_sum(p: &SpectrumPoint) -> Result<f64> {
    let n = p.n();
    guard("N", n, 1, 6, "1..=6")?;
    check_distinct("x", &p.x, 0.0)?;
    if p.lambda.iter().all(|&l| l == p.lambda[0]) {
        return Ok((p.lambda[0] * p.x.iter().sum::<f64>()).exp());
    }
    check_distinct("lambda", &p.lambda, 0.0)?;
    let sum: f64 = permutations(n)
        .into_iter()
        .map(|(perm, s)| s as f64 * perm.iter().enumerate().map(|(i, &j)| p.x[i] * p.lambda[j]).sum::<f64>().exp())
        .sum();
    Ok(superfactorial(n) * sum / (vandermonde(&p.x) * vandermonde(&p.lambda)))
}

fn rel_err(lhs: f64, rhs: f64, scale: f64) -> f64 {
    let d = (lhs - rhs).abs();
    if d == 0.0 {
        0.0
    } else {
        d / scale.max(f64::MIN_POSITIVE)
    }
}

/// Relative error of `D_k(HC(.; lambda)) = (sum lambda_i^k) HC(.; lambda)` at `x`.
/// The error is measured against `max(sum |lambda_i|^k, 1) * |HC|`, so that
/// spectra with `sum lambda_i^k = 0` are still compared on a natural scale.
pub fn check_dk_eigenrelation(p: &SpectrumPoint, k: usize) -> Result<f64> {
    let n = p.n();
    guard("N", n, 1, 5, "1..=5")?;
    guard("k", k, 1, 4, "1..=4")?;
    check_distinct("x", &p.x, MIN_GAP)?;
    let f = hc_eval(p)?;
    let kfact: f64 = (1..=k).product::<usize>() as f64;
    let all_equal = p.lambda.iter().all(|&l| l == p.lambda[0]);
    // sum_i d_i^k (V(x) f)
    let mut lhs = 0.0;
    if all_equal {
        let c = p.lambda[0];
        for i in 0..n {
            let jets = lift(&p.x, i, k);
            let v = jet_vandermonde(&jets)?;
            let e = TruncatedSeries::variable(0.0, k).scale(&c).exp().scale(&(c * p.x.iter().sum::<f64>()).exp());
            lhs += v.mul(&TruncatedSeries::new(p.x[i], e.coeffs))?.coeffs[k] * kfact;
        }
    } else {
        let m: Vec<Vec<f64>> = p.x.iter().map(|&xi| p.lambda.iter().map(|&l| (xi * l).exp()).collect()).collect();
        let scale = superfactorial(n) / vandermonde(&p.lambda);
        for i in 0..n {
            let row: Vec<TruncatedSeries> =
                p.lambda.iter().map(|&l| TruncatedSeries::variable(p.x[i], k).scale(&l).exp()).collect();
            lhs += det_along_jet_row(&m, i, &row)?.coeffs[k] * kfact * scale;
        }
    }
    lhs /= vandermonde(&p.x);
    let eig: f64 = p.lambda.iter().map(|l| l.powi(k as i32)).sum();
    let eig_abs: f64 = p.lambda.iter().map(|l| l.abs().powi(k as i32)).sum();
    Ok(rel_err(lhs, eig * f, eig_abs.max(1.0) * f.abs()))
}

/// Coordinates as jets, with coordinate `i` lifted to order `k`.
fn lift<T: Scalar>(x: &[T], i: usize, k: usize) -> Vec<TruncatedSeries<T>> {
    x.iter()
        .enumerate()
        .map(|(j, xj)| {
            let mut s = TruncatedSeries::constant(x[i].clone(), xj.clone(), k);
            if j == i && k >= 1 {
                s.coeffs[1] = T::one();
            }
            s
        })
        .collect()
}

fn jet_vandermonde<T: Scalar>(jets: &[TruncatedSeries<T>]) -> Result<TruncatedSeries<T>> {
    let mut acc = TruncatedSeries::one(jets[0].center.clone(), jets[0].order());
    for i in 0..jets.len() {
        for j in i + 1..jets.len() {
            acc = acc.mul(&jets[i].sub(&jets[j])?)?;
        }
    }
    Ok(acc)
}

/// `u^e` as a jet, for any integer `e`.
fn jet_pow<T: Scalar>(u: &TruncatedSeries<T>, e: i64) -> Result<TruncatedSeries<T>> {
    if e >= 0 {
        Ok(u.pow_int(e as u32))
    } else {
        TruncatedSeries::one(u.center.clone(), u.order()).div(&u.pow_int((-e) as u32))
    }
}

fn scalar_pow<T: Scalar>(u: &T, e: i64) -> T {
    let mut acc = T::one();
    for _ in 0..e.unsigned_abs() {
        acc = acc * u.clone();
    }
    if e < 0 {
        T::one() / acc
    } else {
        acc
    }
}

/// Bialternant `det(u_i^{lambda_j + N - j}) / V(u)` for pairwise distinct `u`.
fn bialternant<T: Scalar>(sig: &[i64], u: &[T]) -> T {
    let n = sig.len();
    let m: Vec<Vec<T>> =
        u.iter().map(|ui| (0..n).map(|j| scalar_pow(ui, sig[j] + (n - 1 - j) as i64)).collect()).collect();
    det(&m) / vandermonde(u)
}

/// Jacobi-Trudi `det(h_{mu_i - i + j})` times `(prod u)^{lambda_N}`, valid at
/// coincident points.
fn jacobi_trudi<T: Scalar>(sig: &[i64], u: &[T]) -> T {
    let n = sig.len();
    let shift = sig[n - 1];
    let mu: Vec<i64> = sig.iter().map(|l| l - shift).collect();
    let top = (mu[0] + n as i64) as usize;
    // h[m] over all of u, built one variable at a time
    let mut h = vec![T::zero(); top + 1];
    h[0] = T::one();
    for ui in u {
        for m in 1..=top {
            h[m] = h[m].clone() + ui.clone() * h[m - 1].clone();
        }
    }
    let entry = |idx: i64| if idx < 0 { T::zero() } else { h[idx as usize].clone() };
    let m: Vec<Vec<T>> = (0..n).map(|i| (0..n).map(|j| entry(mu[i] - i as i64 + j as i64)).collect()).collect();
    let prod = u.iter().fold(T::one(), |a, b| a * b.clone());
    det(&m) * scalar_pow(&prod, shift)
}

fn schur_generic<T: Scalar>(sig: &[i64], u: &[T]) -> Result<T> {
    guard("N", sig.len(), 1, 5, "1..=5")?;
    let distinct = (0..u.len()).all(|i| (i + 1..u.len()).all(|j| u[i] != u[j]));
    if sig[sig.len() - 1] < 0 && u.iter().any(|v| v.is_zero()) {
        return Err(Error::InvalidParameter("negative signature entries need nonzero u".into()));
    }
    Ok(if distinct { bialternant(sig, u) } else { jacobi_trudi(sig, u) })
}

/// Rational Schur character `chi^lambda(u)` in double precision.
pub fn schur_eval(p: &SpectrumPoint) -> Result<f64> {
    schur_generic(&p.signature()?, &p.x)
}

/// Exact rational Schur character; `x` entries are read as exact binary
/// fractions.
pub fn schur_eval_exact(p: &SpectrumPoint) -> Result<BigRational> {
    schur_generic(&p.signature()?, &exact_points(&p.x)?)
}

fn exact_points(x: &[f64]) -> Result<Vec<BigRational>> {
    x.iter()
        .map(|&v| BigRational::from_float(v).ok_or_else(|| Error::InvalidParameter(format!("{v} is not finite"))))
        .collect()
}

/// `chi^lambda(1^N) = prod_{i<j} (lambda_i - i - lambda_j + j) / (j - i)`.
pub fn schur_dimension(sig: &[i64]) -> Result<BigInt> {
    guard("N", sig.len(), 1, 12, "1..=12")?;
    if sig.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidParameter("signature must be weakly decreasing".into()));
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..sig.len() {
        for j in i + 1..sig.len() {
            num *= BigInt::from(sig[i] - sig[j] + (j - i) as i64);
            den *= BigInt::from((j - i) as i64);
        }
    }
    Ok(num / den)
}

fn stirling2(k: usize) -> Vec<Vec<i64>> {
    let mut s = vec![vec![0i64; k + 1]; k + 1];
    s[0][0] = 1;
    for n in 1..=k {
        for j in 1..=n {
            s[n][j] = j as i64 * s[n - 1][j] + s[n - 1][j - 1];
        }
    }
    s
}

/// `V(u)^{-1} sum_i (u_i d_i)^k (V(u) chi^lambda)` with `(u d)^k = sum_j S(k,j) u^j d^j`.
fn dk_schur_lhs<T: Scalar>(sig: &[i64], u: &[T], k: usize) -> Result<T> {
    let n = sig.len();
    let s = stirling2(k);
    let exps: Vec<i64> = (0..n).map(|j| sig[j] + (n - 1 - j) as i64).collect();
    let m: Vec<Vec<T>> = u.iter().map(|ui| exps.iter().map(|&e| scalar_pow(ui, e)).collect()).collect();
    let mut total = T::zero();
    for i in 0..n {
        let var = TruncatedSeries::variable(u[i].clone(), k);
        let row = exps.iter().map(|&e| jet_pow(&var, e)).collect::<Result<Vec<_>>>()?;
        let jet = det_along_jet_row(&m, i, &row)?;
        for (j, sj) in s[k].iter().enumerate().skip(1) {
            if *sj != 0 {
                total = total + T::from_i64(*sj) * scalar_pow(&u[i], j as i64) * jet.deriv_at_center(j)?;
            }
        }
    }
    Ok(total / vandermonde(u))
}

fn schur_eigenvalue(sig: &[i64], k: usize) -> i64 {
    let n = sig.len();
    (0..n).map(|i| (sig[i] + (n - 1 - i) as i64).pow(k as u32)).sum()
}

/// `D_k^{U(N)} chi^lambda = sum_i (lambda_i + N - i)^k chi^lambda` at `u = x`.
/// In exact mode the result is `0.0` exactly when the identity holds in
/// rational arithmetic.
pub fn check_dk_schur_eigenrelation(p: &SpectrumPoint, k: usize, exact: bool) -> Result<f64> {
    let sig = p.signature()?;
    guard("N", sig.len(), 1, 4, "1..=4")?;
    guard("k", k, 1, 4, "1..=4")?;
    let eig = schur_eigenvalue(&sig, k);
    if exact {
        check_distinct("u", &p.x, 0.0)?;
        let u = exact_points(&p.x)?;
        let lhs = dk_schur_lhs(&sig, &u, k)?;
        let rhs = BigRational::from_integer(eig.into()) * bialternant(&sig, &u);
        if lhs == rhs {
            return Ok(0.0);
        }
        let d = (lhs - rhs.clone()).abs().to_f64().unwrap_or(f64::INFINITY);
        let scale = rhs.abs().to_f64().unwrap_or(1.0).max(f64::MIN_POSITIVE);
        Ok((d / scale).max(f64::MIN_POSITIVE))
    } else {
        check_distinct("u", &p.x, MIN_GAP)?;
        let lhs = dk_schur_lhs(&sig, &p.x, k)?;
        let chi = bialternant(&sig, &p.x);
        let eig_abs: f64 = (0..sig.len()).map(|i| ((sig[i] + (sig.len() - 1 - i) as i64) as f64).abs().powi(k as i32)).sum();
        Ok(rel_err(lhs, eig as f64 * chi, eig_abs.max(1.0) * chi.abs()))
    }
}

/// Test function `sum_t prod_i P_{t,i}(x_i)`; `terms[t][i]` holds ascending
/// coefficients of `P_{t,i}`, and a missing polynomial counts as `1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub terms: Vec<Vec<Vec<f64>>>,
}

impl TestFunction {
    pub fn constant() -> Self {
        Self { terms: vec![vec![]] }
    }

    /// `sum_i x_i^p` in `n` variables.
    pub fn power_sum(n: usize, p: usize) -> Self {
        let mut mono = vec![0.0; p + 1];
        mono[p] = 1.0;
        Self {
            terms: (0..n)
                .map(|i| (0..n).map(|j| if i == j { mono.clone() } else { vec![1.0] }).collect())
                .collect(),
        }
    }

    fn factor(&self, t: usize, i: usize) -> &[f64] {
        self.terms[t].get(i).map(|v| v.as_slice()).unwrap_or(&[1.0])
    }

    /// `d_l^j f` at `x`.
    fn partial(&self, x: &[f64], l: usize, j: usize) -> f64 {
        (0..self.terms.len())
            .map(|t| {
                (0..x.len())
                    .map(|i| {
                        let mut c = self.factor(t, i).to_vec();
                        if i == l {
                            for _ in 0..j {
                                c = c.iter().enumerate().skip(1).map(|(d, v)| d as f64 * v).collect();
                            }
                        }
                        c.iter().rev().fold(0.0, |acc, v| acc * x[i] + v)
                    })
                    .product::<f64>()
            })
            .sum()
    }

    /// `f` with coordinate `l` lifted to a jet of order `k`.
    fn jet(&self, x: &[f64], l: usize, k: usize) -> Result<TruncatedSeries> {
        let mut acc = TruncatedSeries::zero(x[l], k);
        for t in 0..self.terms.len() {
            let mut term = TruncatedSeries::one(x[l], k);
            for (i, xi) in x.iter().enumerate() {
                let c = self.factor(t, i);
                let var = if i == l { TruncatedSeries::variable(x[l], k) } else { TruncatedSeries::constant(x[l], *xi, k) };
                let val = c.iter().rev().fold(TruncatedSeries::zero(x[l], k), |acc, v| {
                    acc.mul(&var).expect("same center").add_constant(v)
                });
                term = term.mul(&val)?;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }
}

/// Compares the direct definition of `D_k f` with its divided-difference
/// expansion. Returns the relative error with a unit floor on the scale.
pub fn check_dk_expansion_equivalence(x: &[f64], k: usize, f: &TestFunction) -> Result<f64> {
    let n = x.len();
    guard("N", n, 1, 4, "1..=4")?;
    guard("k", k, 1, 3, "1..=3")?;
    check_distinct("x", x, MIN_GAP)?;
    let kfact = (1..=k).product::<usize>() as f64;
    let mut direct = 0.0;
    for l in 0..n {
        let jets = lift(x, l, k);
        let vf = jet_vandermonde(&jets)?.mul(&f.jet(x, l, k)?)?;
        direct += vf.coeffs[k] * kfact;
    }
    direct /= vandermonde(x);

    let mut expansion = 0.0;
    for m in 0..=k.min(n - 1) {
        let binom = (0..m).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64);
        for tuple in distinct_tuples(n, m + 1) {
            let l0 = tuple[0];
            let den: f64 = tuple[1..].iter().map(|&l| x[l0] - x[l]).product();
            expansion += binom * f.partial(x, l0, k - m) / den;
        }
    }
    Ok(rel_err(direct, expansion, direct.abs().max(expansion.abs()).max(1.0)))
}

fn distinct_tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t: Vec<usize>| {
                (0..n).filter(|v| !t.contains(v)).map(|v| [t.as_slice(), &[v]].concat()).collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

/// `n` points in `[lo, hi]` with pairwise gaps of at least [`MIN_GAP`].
pub fn gapped_points(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
        if check_distinct("x", &v, MIN_GAP).is_ok() {
            return v;
        }
    }
}

fn report(check: &str, errs: &[f64], tol: f64) -> CheckReport {
    let max = errs.iter().cloned().fold(0.0, f64::max);
    CheckReport { check: check.into(), instances: errs.len(), max_rel_err: max, pass: max <= tol }
}

/// Random instances of the `D_k` eigenrelation: `N <= n_max`, `k <= k_max`,
/// spectra in `[-2, 2]`, points in `[-1, 1]`.
pub fn eigenrelation_batch(instances: usize, n_max: usize, k_max: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::with_capacity(instances);
    for _ in 0..instances {
        let n = rng.gen_range(1..=n_max);
        let k = rng.gen_range(1..=k_max);
        let p = SpectrumPoint::new(gapped_points(&mut rng, n, -2.0, 2.0), gapped_points(&mut rng, n, -1.0, 1.0))?;
        errs.push(check_dk_eigenrelation(&p, k)?);
    }
    Ok(report("dk-eigenrelation", &errs, 1e-8))
}

/// All partitions in the `n x lambda1_max` box.
pub fn signatures_in_box(n: usize, lambda1_max: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|s: Vec<i64>| {
                let top = *s.last().unwrap_or(&lambda1_max);
                (0..=top).map(move |v| [s.clone(), vec![v]].concat())
            })
            .collect();
    }
    out
}

/// Exact-rational sweep of the Schur eigenrelation over every partition with
/// `lambda_1 <= lambda1_max`, `N <= n_max`, `k <= k_max`, at two rational points each.
pub fn schur_exact_sweep(lambda1_max: i64, n_max: usize, k_max: usize) -> Result<CheckReport> {
    let pools = [[0.5, 1.25, 2.0, 3.5], [-0.75, 0.375, 1.5, 2.25]];
    let mut errs = Vec::new();
    for n in 1..=n_max {
        for sig in signatures_in_box(n, lambda1_max) {
            for pool in &pools {
                let p = SpectrumPoint::new(sig.iter().map(|&v| v as f64).collect(), pool[..n].to_vec())?;
                for k in 1..=k_max {
                    errs.push(check_dk_schur_eigenrelation(&p, k, true)?);
                }
            }
        }
    }
    Ok(report("dk-schur-eigenrelation", &errs, 0.0))
}

/// Random instances of the divided-difference expansion with random
/// polynomial test functions of degree at most 4.
pub fn expansion_batch(instances: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::with_capacity(instances);
    for _ in 0..instances {
        let n = rng.gen_range(1..=4);
        let k = rng.gen_range(1..=3);
        let x = gapped_points(&mut rng, n, -1.0, 1.0);
        let terms = (0..rng.gen_range(1..=3))
            .map(|_| (0..n).map(|_| (0..rng.gen_range(1..=5)).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect())
            .collect();
        errs.push(check_dk_expansion_equivalence(&x, k, &TestFunction { terms })?);
    }
    Ok(report("dk-expansion", &errs, 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::E;

    fn pt(l: &[f64], x: &[f64]) -> SpectrumPoint {
        SpectrumPoint::new(l.to_vec(), x.to_vec()).unwrap()
    }

    #[test]
    fn hc_examples() {
        assert_relative_eq!(hc_eval(&pt(&[2.0], &[0.5])).unwrap(), E, max_relative = 1e-15);
        assert_relative_eq!(hc_eval(&pt(&[1.0, 0.0], &[1.0, 0.0])).unwrap(), E - 1.0, max_relative = 1e-15);
        assert_eq!(hc_eval(&pt(&[0.0; 3], &[0.3, -0.2, 0.9])).unwrap(), 1.0);
        assert!(matches!(hc_eval_permutation_sum(&pt(&[1.0, 0.0], &[0.5, 0.5])), Err(Error::Coincident(_))));
        // coincident x: (e^{x_1} - e^{x_2}) / (x_1 - x_2) -> e^x
        let x: f64 = 0.5;
        assert_relative_eq!(hc_eval(&pt(&[1.0, 0.0], &[x, x])).unwrap(), x.exp(), max_relative = 1e-14);
        // scalar spectrum: exp(l * sum x), also at coincident x
        let l: f64 = 0.8;
        assert_relative_eq!(hc_eval(&pt(&[l, l], &[x, x])).unwrap(), (2.0 * x * l).exp(), max_relative = 1e-13);
        assert!(matches!(hc_eval(&pt(&[0.0; 7], &[0.0; 7])), Err(Error::Guard { .. })));
    }

    #[test]
    fn hc_is_continuous_at_coincident_points() {
        let l = [1.0, -0.5, 0.25];
        let at = |d: f64| hc_eval(&pt(&l, &[0.3, 0.3 + d, -0.6])).unwrap();
        let limit = at(0.0);
        let (e3, e4) = ((at(1e-3) - limit).abs(), (at(1e-4) - limit).abs());
        assert!(e4 < 0.2 * e3 && e3 < 1e-2, "{e3} {e4}");
    }

    #[test]
    fn hc_matches_permutation_sum_when_separated() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=5 {
            let p = pt(&gapped_points(&mut rng, n, -3.0, 3.0), &gapped_points(&mut rng, n, -1.0, 1.0));
            let (a, b) = (hc_eval(&p).unwrap(), hc_eval_permutation_sum(&p).unwrap());
            assert!((a - b).abs() <= 1e-6 * a.abs(), "n={n}: {a} vs {b}");
        }
        let p = pt(&[0.9, -0.4, 0.3], &[0.7, -0.8, 0.1]);
        assert_relative_eq!(hc_eval(&p).unwrap(), hc_eval_permutation_sum(&p).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn schur_examples() {
        let u = [0.5, 1.25];
        assert_relative_eq!(schur_eval(&pt(&[1.0, 0.0], &u)).unwrap(), 1.75);
        assert_relative_eq!(schur_eval(&pt(&[1.0, 1.0], &u)).unwrap(), 0.625);
        assert_eq!(schur_eval_exact(&pt(&[2.0, 1.0, 0.0], &[1.0; 3])).unwrap(), BigRational::from_integer(8.into()));
        assert_eq!(schur_dimension(&[0, 0, 0]).unwrap(), BigInt::from(1));
        assert_eq!(schur_dimension(&[1, 0, 0, 0, 0]).unwrap(), BigInt::from(5));
        assert_eq!(schur_dimension(&[2, 1, 0]).unwrap(), BigInt::from(8));
        assert!(pt(&[0.0, 1.0], &u).signature().is_err());
        // negative signatures: det^{-1}
        assert_relative_eq!(schur_eval(&pt(&[-1.0, -1.0], &u)).unwrap(), 1.6);
    }

    #[test]
    fn schur_at_ones_is_dimension() {
        for n in 1..=4 {
            for sig in signatures_in_box(n, 3) {
                let p = pt(&sig.iter().map(|&v| v as f64).collect::<Vec<_>>(), &vec![1.0; n]);
                assert_eq!(schur_eval_exact(&p).unwrap(), BigRational::from_integer(schur_dimension(&sig).unwrap()));
            }
        }
    }

    #[test]
    fn eigenrelation_examples() {
        assert!(check_dk_eigenrelation(&pt(&[1.0, 0.0], &[0.7, -0.3]), 1).unwrap() <= 1e-10);
        assert!(check_dk_eigenrelation(&pt(&[3.0, 1.0, 0.0, -2.0], &[0.61, -0.37, 0.12, -0.9]), 3).unwrap() <= 1e-8);
        assert!(check_dk_eigenrelation(&pt(&[0.0; 3], &[0.61, -0.37, 0.12]), 2).unwrap() <= 1e-12);
        assert!(check_dk_eigenrelation(&pt(&[0.7; 2], &[0.61, -0.37]), 3).unwrap() <= 1e-12);
    }

    #[test]
    fn schur_eigenrelation_examples() {
        let u = [0.5, 1.25, 2.0];
        assert_eq!(schur_eigenvalue(&[2, 1, 0], 1), 6);
        assert_eq!(check_dk_schur_eigenrelation(&pt(&[2.0, 1.0, 0.0], &u), 1, true).unwrap(), 0.0);
        assert_eq!(schur_eigenvalue(&[0, 0], 2), 1);
        assert_eq!(check_dk_schur_eigenrelation(&pt(&[0.0, 0.0], &u[..2]), 2, true).unwrap(), 0.0);
        assert_eq!(schur_eigenvalue(&[1, 0], 3), 8);
        assert_eq!(check_dk_schur_eigenrelation(&pt(&[1.0, 0.0], &u[..2]), 3, true).unwrap(), 0.0);
        assert!(check_dk_schur_eigenrelation(&pt(&[1.0, -2.0], &u[..2]), 4, false).unwrap() < 1e-12);
    }

    #[test]
    fn schur_eigenrelation_rejects_a_wrong_eigenvalue() {
        // the exact comparison separates neighbouring eigenvalues
        let sig = [1, 0];
        let u: Vec<BigRational> = exact_points(&[0.5, 1.25]).unwrap();
        let lhs = dk_schur_lhs(&sig, &u, 2).unwrap();
        let chi = bialternant(&sig, &u);
        assert_eq!(lhs, BigRational::from_integer(4.into()) * chi.clone());
        assert_ne!(lhs, BigRational::from_integer(5.into()) * chi);
    }

    #[test]
    fn expansion_examples() {
        let x = [0.4, -0.55, 0.9];
        assert!(check_dk_expansion_equivalence(&x, 2, &TestFunction::constant()).unwrap() < 1e-12);
        assert!(check_dk_expansion_equivalence(&x, 2, &TestFunction::power_sum(3, 2)).unwrap() <= 1e-10);
        let f = TestFunction { terms: vec![vec![vec![1.0, 2.0], vec![0.0, 0.0, 1.0], vec![-1.0, 0.5, 0.0, 1.0], vec![0.3, 1.0]]] };
        assert!(check_dk_expansion_equivalence(&[0.4, -0.55, 0.9, 0.1], 3, &f).unwrap() <= 1e-9);
    }

    #[test]
    fn batches_pass() {
        assert!(eigenrelation_batch(50, 4, 3, 7).unwrap().pass);
        assert!(expansion_batch(30, 11).unwrap().pass);
        let r = schur_exact_sweep(2, 2, 2).unwrap();
        assert!(r.pass && r.max_rel_err == 0.0);
    }

    proptest! {
        #[test]
        fn hc_symmetric_under_permutation(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..=5);
            let l = gapped_points(&mut rng, n, -2.0, 2.0);
            let x = gapped_points(&mut rng, n, -1.0, 1.0);
            let base = hc_eval(&pt(&l, &x)).unwrap();
            let perms = permutations(n);
            let (p1, _) = &perms[rng.gen_range(0..perms.len())];
            let (p2, _) = &perms[rng.gen_range(0..perms.len())];
            let xp: Vec<f64> = p1.iter().map(|&i| x[i]).collect();
            let lp: Vec<f64> = p2.iter().map(|&i| l[i]).collect();
            let v = hc_eval(&pt(&lp, &xp)).unwrap();
            prop_assert!((v - base).abs() <= 1e-12 * base.abs().max(1.0), "{} vs {}", v, base);
        }

        #[test]
        fn bialternant_matches_jacobi_trudi(a in 0i64..4, b in 0i64..4, c in 0i64..4) {
            let mut sig = vec![a, b, c];
            sig.sort_unstable_by(|x, y| y.cmp(x));
            let u = exact_points(&[0.5, -1.25, 3.0]).unwrap();
            prop_assert_eq!(bialternant(&sig, &u), jacobi_trudi(&sig, &u));
        }
    }
}
