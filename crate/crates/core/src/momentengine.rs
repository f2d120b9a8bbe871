//! Moments and 1/N corrections evaluated directly from the local expansion
//! of the transform: every term is a derivative at the center of a product of
//! powers of `Psi'`, `Phi'`, ..., read off from a [`TruncatedSeries`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ncpart::CumulantTable;
use crate::series::TruncatedSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Harish-Chandra transforms, expanded at 0.
    Hc,
    /// Schur generating functions, expanded at 1.
    Schur,
}

impl Side {
    pub fn center(self) -> f64 {
        match self {
            Side::Hc => 0.0,
            Side::Schur => 1.0,
        }
    }
}

/// `Psi_0..Psi_n` of a multi-scale expansion. `epsilon` labels the scale
/// `N^{-epsilon}` of each successive term; no formula depends on its value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticInput {
    pub side: Side,
    pub series: Vec<TruncatedSeries>,
    pub epsilon: f64,
}

impl AsymptoticInput {
    pub fn new(side: Side, series: Vec<TruncatedSeries>, epsilon: f64) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::InvalidParameter("at least Psi_0 is required".into()));
        }
        if series.iter().any(|s| s.center != side.center()) {
            return Err(Error::InvalidParameter(format!(
                "all series must be centered at {}",
                side.center()
            )));
        }
        // n * epsilon <= 1 is not enforced: the three-scale second-order
        // examples use epsilon = 1 with n = 2.
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in (0, 1]")));
        }
        Ok(Self { side, series, epsilon })
    }
}

/// Moment sequences per correction order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResult {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub side: Option<Side>,
    pub scales: Vec<String>,
    pub orders: Vec<Vec<f64>>,
}

impl ExpansionResult {
    pub fn k_max(&self) -> usize {
        self.orders.first().map_or(0, Vec::len)
    }
}

/// Truncation order that covers moments up to `k_max` and corrections up to `n`.
pub fn default_order(k_max: usize, n: usize) -> usize {
    k_max + n + 2
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn require(s: &TruncatedSeries, need: usize) -> Result<()> {
    if s.order() < need {
        Err(Error::InsufficientOrder { need, have: s.order() })
    } else {
        Ok(())
    }
}

fn require_k(k_max: usize) -> Result<()> {
    if k_max == 0 {
        Err(Error::Guard { what: "K", value: 0, range: ">= 1" })
    } else {
        Ok(())
    }
}

/// `sum_{m=0}^{top} k! / (m! (m+1+shift)! (top-m)! extra) * d^m body(m)` at the center.
fn derivative_sum(
    k: usize,
    top: usize,
    shift: usize,
    extra: f64,
    body: impl Fn(usize) -> Result<TruncatedSeries>,
) -> Result<f64> {
    let mut total = 0.0;
    for m in 0..=top {
        let coef = fact(k) / (fact(m) * fact(m + 1 + shift) * fact(top - m) * extra);
        total += coef * body(m)?.deriv_at_center(m)?;
    }
    Ok(total)
}

fn pow(s: &TruncatedSeries, p: usize) -> TruncatedSeries {
    s.pow_int(p as u32)
}

/// LLN moments `mu_1..mu_K` on the Harish-Chandra side.
pub fn lln_moments_hc(psi: &TruncatedSeries, k_max: usize) -> Result<Vec<f64>> {
    require_k(k_max)?;
    require(psi, k_max + 1)?;
    let dpsi = psi.derivative()?;
    (1..=k_max)
        .map(|k| derivative_sum(k, k, 0, 1.0, |m| Ok(pow(&dpsi, k - m))))
        .collect()
}

/// First correction `mu'_1..mu'_K` on the Harish-Chandra side.
pub fn correction1_hc(psi: &TruncatedSeries, phi: &TruncatedSeries, k_max: usize) -> Result<Vec<f64>> {
    require_k(k_max)?;
    require(psi, k_max + 1)?;
    require(phi, k_max + 1)?;
    let dpsi = psi.derivative()?;
    let dphi = phi.derivative()?;
    (1..=k_max)
        .map(|k| derivative_sum(k, k - 1, 0, 1.0, |m| pow(&dpsi, k - m - 1).mul(&dphi)))
        .collect()
}

/// Second-order correction split into the infinitesimal part `mu''` and the
/// remaining part `nu''` (which depends on `Psi'''` and `Psi''^2` only).
pub fn correction2_hc(
    psi: &TruncatedSeries,
    phi: &TruncatedSeries,
    t: &TruncatedSeries,
    k_max: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    require_k(k_max)?;
    for s in [psi, phi, t] {
        require(s, k_max + 2)?;
    }
    let d1 = psi.derivative()?;
    let d2 = d1.derivative()?;
    let d3 = d2.derivative()?;
    let dphi = phi.derivative()?;
    let dt = t.derivative()?;
    let dphi2 = dphi.mul(&dphi)?;
    let d2sq = d2.mul(&d2)?;
    let mut mu = Vec::with_capacity(k_max);
    let mut nu = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut a = derivative_sum(k, k - 1, 0, 1.0, |m| pow(&d1, k - m - 1).mul(&dt))?;
        if k >= 2 {
            a += 0.5 * derivative_sum(k, k - 2, 0, 1.0, |m| pow(&d1, k - m - 2).mul(&dphi2))?;
        }
        mu.push(a);
        let mut b = 0.0;
        if k >= 3 {
            b += derivative_sum(k, k - 3, 0, 24.0, |m| pow(&d1, k - m - 3).mul(&d3))?;
            b += derivative_sum(k, k - 3, 1, 12.0, |m| pow(&d1, k - m - 3).mul(&d3))?;
        }
        if k >= 4 {
            b += derivative_sum(k, k - 4, 1, 12.0, |m| pow(&d1, k - m - 4).mul(&d2sq))?;
        }
        nu.push(b);
    }
    Ok((mu, nu))
}

/// Integer solutions of `b_1 + 2 b_2 + ... + j b_j = j`.
pub fn composition_tuples(j: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, j: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i > j {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for b in 0..=left / i {
            cur.push(b);
            rec(i + 1, j, left - b * i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, j, j, &mut Vec::new(), &mut out);
    out
}

/// All orders `mu^{(0)}..mu^{(n)}` of a multi-scale Harish-Chandra input.
pub fn higher_corrections_hc(input: &AsymptoticInput, k_max: usize) -> Result<ExpansionResult> {
    require_k(k_max)?;
    if input.side != Side::Hc {
        return Err(Error::InvalidParameter("higher corrections need a Harish-Chandra side input".into()));
    }
    let n = input.series.len() - 1;
    if n > 4 {
        return Err(Error::Guard { what: "n", value: n as i64, range: "0..=4" });
    }
    for s in &input.series {
        require(s, k_max + n + 1)?;
    }
    let d: Vec<TruncatedSeries> = input.series.iter().map(|s| s.derivative()).collect::<Result<_>>()?;
    let mut orders = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let tuples = composition_tuples(j);
        let mut row = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let mut total = 0.0;
            for b in &tuples {
                let nb: usize = b.iter().sum();
                if nb > k {
                    continue;
                }
                let bfact: f64 = b.iter().map(|&x| fact(x)).product();
                let mut tail = TruncatedSeries::one(0.0, d[0].order());
                for (i, &bi) in b.iter().enumerate() {
                    tail = tail.mul(&pow(&d[i + 1], bi))?;
                }
                total += derivative_sum(k, k - nb, 0, bfact, |m| pow(&d[0], k - m - nb).mul(&tail))?;
            }
            row.push(total);
        }
        orders.push(row);
    }
    let scales = (0..=n)
        .map(|j| if j == 0 { "1".to_string() } else { format!("N^-{}", j as f64 * input.epsilon) })
        .collect();
    Ok(ExpansionResult { side: Some(Side::Hc), scales, orders })
}

/// Cumulant rows `kappa^{(i)}_m = i! Psi_i^{(m)}(0) / (m-1)!` whose
/// infinitesimal moments reproduce `i!` times the engine's order-i row.
pub fn hc_infinitesimal_cumulants(series: &[TruncatedSeries], k_max: usize) -> Result<CumulantTable> {
    let rows = series
        .iter()
        .enumerate()
        .map(|(i, s)| {
            (1..=k_max)
                .map(|m| Ok(fact(i) * s.deriv_at_center(m)? / fact(m - 1)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    CumulantTable::new(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Growth `N^l` with `l > 1`: concentration at `Psi'(0)`.
    Degenerate,
    /// `theta = 0`.
    Ergodic,
    /// `0 < theta < 1`.
    Intermediate,
}

pub fn regime_moments(psi: &TruncatedSeries, regime: Regime, k_max: usize) -> Result<Vec<f64>> {
    require_k(k_max)?;
    require(psi, k_max)?;
    match regime {
        Regime::Degenerate => {
            let c = psi.deriv_at_center(1)?;
            Ok((1..=k_max).map(|k| c.powi(k as i32)).collect())
        }
        Regime::Ergodic | Regime::Intermediate => (1..=k_max)
            .map(|k| Ok(psi.deriv_at_center(k)? / fact(k - 1)))
            .collect(),
    }
}

fn require_center(s: &TruncatedSeries, c: f64) -> Result<()> {
    if s.center != c {
        Err(Error::CenterMismatch(s.center, c))
    } else {
        Ok(())
    }
}

/// LLN moments `m_1..m_K` on the Schur side (series centered at 1).
pub fn schur_lln_moments(psi: &TruncatedSeries, k_max: usize) -> Result<Vec<f64>> {
    require_k(k_max)?;
    require_center(psi, 1.0)?;
    require(psi, k_max + 1)?;
    let dpsi = psi.derivative()?;
    let x = TruncatedSeries::variable(1.0, dpsi.order());
    (1..=k_max)
        .map(|k| {
            let xk = pow(&x, k);
            derivative_sum(k, k, 0, 1.0, |m| xk.mul(&pow(&dpsi, k - m)))
        })
        .collect()
}

/// First correction `m'_1..m'_K` on the Schur side.
pub fn schur_correction1(psi: &TruncatedSeries, phi: &TruncatedSeries, k_max: usize) -> Result<Vec<f64>> {
    require_k(k_max)?;
    require_center(psi, 1.0)?;
    require_center(phi, 1.0)?;
    require(psi, k_max + 1)?;
    require(phi, k_max + 1)?;
    let dpsi = psi.derivative()?;
    let order = dpsi.order();
    let x = TruncatedSeries::variable(1.0, order);
    let half_over_x = TruncatedSeries::constant(1.0, 0.5, order).div(&x)?;
    let factor = phi.derivative()?.sub(&half_over_x)?;
    (1..=k_max)
        .map(|k| {
            let head = pow(&x, k).mul(&factor)?;
            derivative_sum(k, k - 1, 0, 1.0, |m| head.mul(&pow(&dpsi, k - m - 1)))
        })
        .collect()
}

/// Quantized cumulants of orders 0 and 1 from Schur-side `Psi`, `Phi`.
pub fn quantized_cumulants(psi: &TruncatedSeries, phi: &TruncatedSeries, k_max: usize) -> Result<CumulantTable> {
    require_k(k_max)?;
    require_center(psi, 1.0)?;
    require_center(phi, 1.0)?;
    require(psi, k_max)?;
    require(phi, k_max)?;
    let u = TruncatedSeries::variable(0.0, k_max);
    let eu = u.exp();
    let a = psi.compose(&eu)?;
    // (e^u - 1)/u = sum u^j / (j+1)!
    let ratio = TruncatedSeries::new(0.0, (0..=k_max).map(|j| 1.0 / fact(j + 1)).collect());
    let b = ratio.ln()?;
    let gamma = phi.compose(&eu)?.sub(&u.scale(&0.5))?;
    let zero_row = a.add(&b)?;
    let row = |s: &TruncatedSeries| {
        (1..=k_max)
            .map(|n| Ok(s.deriv_at_center(n)? / fact(n - 1)))
            .collect::<Result<Vec<f64>>>()
    };
    CumulantTable::new(vec![row(&zero_row)?, row(&gamma)?])
}

/// `Phi(x) = sum_i -log(1 - theta_i x)`, built from `Phi' = sum theta_i / (1 - theta_i x)`.
pub fn finite_rank_phi(thetas: &[f64], order: usize) -> Result<TruncatedSeries> {
    let d_order = order.saturating_sub(1);
    let mut dphi = TruncatedSeries::zero(0.0, d_order);
    for &th in thetas {
        let term = TruncatedSeries::from_rational(&[th], &[1.0, -th], 0.0, d_order)?;
        dphi = dphi.add(&term)?;
    }
    Ok(dphi.integral().truncate(order))
}

/// `Psi(b) = g1 b + g2 b^2/2 + sum_n (-x_n b - log(1 - x_n b))`.
pub fn voiculescu_psi(g1: f64, g2: f64, xs: &[f64], order: usize) -> Result<TruncatedSeries> {
    if g2 < 0.0 {
        return Err(Error::InvalidParameter(format!("gamma2 = {g2} must be nonnegative")));
    }
    let d_order = order.saturating_sub(1);
    let mut dpsi = TruncatedSeries::from_rational(&[g1, g2], &[1.0], 0.0, d_order)?;
    for &x in xs {
        // -x + x / (1 - x b) = x^2 b / (1 - x b)
        let term = TruncatedSeries::from_rational(&[0.0, x * x], &[1.0, -x], 0.0, d_order)?;
        dpsi = dpsi.add(&term)?;
    }
    Ok(dpsi.integral().truncate(order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpart::{cumulants_to_moments, infinitesimal_moments};
    use approx::assert_relative_eq;

    fn hc(c: &[f64], order: usize) -> TruncatedSeries {
        TruncatedSeries::from_coeffs(0.0, c).truncate(order)
    }

    fn gue(order: usize) -> TruncatedSeries {
        hc(&[0.0, 0.0, 0.5], order)
    }

    #[test]
    fn lln_examples() {
        assert_eq!(lln_moments_hc(&gue(10), 8).unwrap(), vec![0., 1., 0., 2., 0., 5., 0., 14.]);
        assert!(lln_moments_hc(&hc(&[0.0], 10), 5).unwrap().iter().all(|&v| v == 0.0));
        // Psi' = 1/(1-x): free Poisson with rate 1
        let psi = TruncatedSeries::from_rational(&[1.0], &[1.0, -1.0], 0.0, 6).unwrap().integral();
        let m = lln_moments_hc(&psi, 3).unwrap();
        for (a, b) in m.iter().zip([1.0, 2.0, 5.0]) {
            assert_relative_eq!(*a, b, max_relative = 1e-14);
        }
        assert!(matches!(lln_moments_hc(&gue(3), 5), Err(Error::InsufficientOrder { .. })));
        assert!(lln_moments_hc(&gue(3), 0).is_err());
    }

    #[test]
    fn correction1_examples() {
        assert_eq!(correction1_hc(&gue(8), &gue(8), 4).unwrap()[1], 1.0);
        assert!(correction1_hc(&gue(8), &hc(&[0.0], 8), 4).unwrap().iter().all(|&v| v == 0.0));
        let phi = finite_rank_phi(&[2.0], 8).unwrap();
        let c = correction1_hc(&gue(8), &phi, 4).unwrap();
        assert_eq!(c[0], 2.0);
        // spike theta: mu'_2 = theta^2, mu'_3 = 3 theta + theta^3
        assert_eq!(c[1], 4.0);
        assert_eq!(c[2], 14.0);
    }

    #[test]
    fn correction2_examples() {
        let z = hc(&[0.0], 8);
        let (mu, nu) = correction2_hc(&gue(8), &z, &z, 6).unwrap();
        assert_eq!(mu[3], 0.0);
        assert_relative_eq!(nu[3], 1.0, max_relative = 1e-14);
        // GUE genus one: E tr A^6 = 5 + 10/N^2
        assert_relative_eq!(nu[5], 10.0, max_relative = 1e-14);
        let c = 0.37;
        let (mu, _) = correction2_hc(&gue(8), &z, &hc(&[0.0, c], 8), 3).unwrap();
        assert_eq!(mu[0], c);
        let (mu, nu) = correction2_hc(&z, &z, &z, 5).unwrap();
        assert!(mu.iter().chain(&nu).all(|&v| v == 0.0));
    }

    #[test]
    fn higher_examples() {
        let psi = gue(12);
        let phi = hc(&[0.0, 0.4, -0.3, 0.2, 0.1], 12);
        let input = AsymptoticInput::new(Side::Hc, vec![psi.clone(), phi.clone()], 1.0).unwrap();
        let r = higher_corrections_hc(&input, 8).unwrap();
        assert_eq!(r.orders[0], lln_moments_hc(&psi, 8).unwrap());
        let c1 = correction1_hc(&psi, &phi, 8).unwrap();
        for (a, b) in r.orders[1].iter().zip(&c1) {
            assert_relative_eq!(*a, *b, max_relative = 1e-13, epsilon = 1e-15);
        }
        let th2 = 0.8;
        let input =
            AsymptoticInput::new(Side::Hc, vec![psi.clone(), hc(&[0.0], 12), hc(&[0.0, th2], 12)], 0.5).unwrap();
        let r = higher_corrections_hc(&input, 4).unwrap();
        assert_eq!(r.orders[2][0], th2);
        assert_eq!(r.scales, vec!["1", "N^-0.5", "N^-1"]);
        let zeros = vec![hc(&[0.0], 12); 4];
        let input = AsymptoticInput::new(Side::Hc, [vec![psi], zeros].concat(), 0.25).unwrap();
        let r = higher_corrections_hc(&input, 5).unwrap();
        assert!(r.orders[1..].iter().flatten().all(|&v| v == 0.0));
        assert_eq!(composition_tuples(4).len(), 5);
    }

    #[test]
    fn higher_matches_correction2() {
        let psi = hc(&[0.0, 0.2, 0.5, -0.3, 0.1], 12);
        let phi = hc(&[0.0, 0.4, -0.3, 0.2, 0.1], 12);
        let t = hc(&[0.0, -0.6, 0.1, 0.3], 12);
        let input = AsymptoticInput::new(Side::Hc, vec![psi.clone(), phi.clone(), t.clone()], 0.5).unwrap();
        let r = higher_corrections_hc(&input, 8).unwrap();
        let (mu, _) = correction2_hc(&psi, &phi, &t, 8).unwrap();
        for (a, b) in r.orders[2].iter().zip(&mu) {
            assert_relative_eq!(*a, *b, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn cumulant_consistency() {
        let psi = hc(&[0.0, 0.3, -0.7, 0.2, 0.9, -0.4, 0.1, 0.5, -0.2, 0.3, 0.1, -0.1], 11);
        let table = hc_infinitesimal_cumulants(std::slice::from_ref(&psi), 10).unwrap();
        let oracle = cumulants_to_moments(&table.rows[0], 10).unwrap();
        for (a, b) in lln_moments_hc(&psi, 10).unwrap().iter().zip(&oracle) {
            assert_relative_eq!(*a, *b, max_relative = 1e-9, epsilon = 1e-12);
        }
        let phi = hc(&[0.0, -0.2, 0.4, 0.6, -0.3, 0.2, 0.7, -0.5, 0.1, 0.2, 0.3, 0.1], 11);
        let table = hc_infinitesimal_cumulants(&[psi.clone(), phi.clone()], 8).unwrap();
        let inf = infinitesimal_moments(&table, 8).unwrap();
        for (a, b) in correction1_hc(&psi, &phi, 8).unwrap().iter().zip(&inf.orders[1]) {
            assert_relative_eq!(*a, *b, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn regimes() {
        let g = regime_moments(&gue(6), Regime::Ergodic, 4).unwrap();
        assert_eq!(g, vec![0.0, 1.0, 0.0, 0.0]);
        let d = regime_moments(&hc(&[0.0, 1.5, 0.3], 6), Regime::Degenerate, 3).unwrap();
        assert_eq!(d, vec![1.5, 2.25, 3.375]);
        let e = TruncatedSeries::variable(0.0, 8).exp().add_constant(&-1.0);
        let i = regime_moments(&e, Regime::Intermediate, 5).unwrap();
        for (k, v) in i.iter().enumerate() {
            assert_relative_eq!(*v, 1.0 / fact(k), max_relative = 1e-14);
        }
    }

    #[test]
    fn schur_examples() {
        let zero = TruncatedSeries::zero(1.0, 10);
        let m = schur_lln_moments(&zero, 8).unwrap();
        for (k, v) in m.iter().enumerate() {
            assert_relative_eq!(*v, 1.0 / (k as f64 + 2.0), max_relative = 1e-14);
        }
        let c = schur_correction1(&zero, &zero, 8).unwrap();
        for v in c {
            assert_relative_eq!(v, -0.5, max_relative = 1e-13);
        }
        let g = 9.0;
        let psi = TruncatedSeries::from_coeffs(1.0, &[0.0, g]).truncate(10);
        assert_relative_eq!(schur_lln_moments(&psi, 1).unwrap()[0], g + 0.5);
        // Phi' = 1/(2x) cancels the correction entirely
        let half_log = TruncatedSeries::variable(1.0, 10).ln().unwrap().scale(&0.5);
        assert!(schur_correction1(&psi, &half_log, 6).unwrap().iter().all(|v| v.abs() < 1e-12));
        assert!(schur_lln_moments(&gue(10), 3).is_err());
    }

    #[test]
    fn quantized_examples() {
        let zero = TruncatedSeries::zero(1.0, 8);
        let t = quantized_cumulants(&zero, &zero, 6).unwrap();
        let want = [0.5, 1.0 / 12.0, 0.0, -1.0 / 720.0, 0.0, 1.0 / 30240.0];
        for (a, b) in t.rows[0].iter().zip(want) {
            assert_relative_eq!(*a, b, max_relative = 1e-12, epsilon = 1e-15);
        }
        assert_eq!(t.rows[1][0], -0.5);
        assert!(t.rows[1][1..].iter().all(|v| v.abs() < 1e-15));
        let psi = TruncatedSeries::from_coeffs(1.0, &[0.0, 9.0]).truncate(8);
        let t = quantized_cumulants(&psi, &zero, 4).unwrap();
        assert_relative_eq!(t.rows[0][0], 9.5);
    }

    #[test]
    fn constructors() {
        let phi = finite_rank_phi(&[2.0], 6).unwrap();
        assert_eq!(phi.derivative().unwrap().coeffs, vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
        assert!(finite_rank_phi(&[], 4).unwrap().coeffs.iter().all(|&v| v == 0.0));
        let d = finite_rank_phi(&[1.0, -1.0], 6).unwrap().derivative().unwrap();
        assert_eq!(d.coeffs, vec![0.0, 2.0, 0.0, 2.0, 0.0, 2.0]);
        assert_eq!(voiculescu_psi(0.0, 1.0, &[], 4).unwrap().coeffs, vec![0.0, 0.0, 0.5, 0.0, 0.0]);
        assert_eq!(voiculescu_psi(0.7, 0.0, &[], 3).unwrap().coeffs, vec![0.0, 0.7, 0.0, 0.0]);
        // M copies of x_n = 1: Psi' = M x / (1 - x)
        let w = voiculescu_psi(0.0, 0.0, &[1.0; 3], 6).unwrap().derivative().unwrap();
        assert_eq!(w.coeffs, vec![0.0, 3.0, 3.0, 3.0, 3.0, 3.0]);
        assert!(voiculescu_psi(0.0, -1.0, &[], 3).is_err());
    }
}
