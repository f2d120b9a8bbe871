//! Non-crossing partitions and the moment/cumulant transforms built on them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momentengine::ExpansionResult;

pub const MAX_K: usize = 14;
pub const MAX_INFINITESIMAL_ORDER: usize = 4;

/// A non-crossing partition of `{1..k}`, stored as a restricted growth
/// string: `labels[i]` is the block index of element `i + 1`, blocks being
/// numbered in order of their smallest element.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NoncrossingPartition {
    labels: Vec<u8>,
}

impl NoncrossingPartition {
    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m as usize + 1)
    }

    /// Blocks as increasing lists of 1-based elements, ordered by first element.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i + 1);
        }
        out
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.num_blocks()];
        for &l in &self.labels {
            out[l as usize] += 1;
        }
        out
    }

    /// Builds a partition from blocks, rejecting crossings and non-partitions.
    pub fn from_blocks(k: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![u8::MAX; k];
        for (b, block) in blocks.iter().enumerate() {
            for &e in block {
                if e == 0 || e > k || labels[e - 1] != u8::MAX {
                    return Err(Error::InvalidParameter(format!("blocks do not partition 1..{k}")));
                }
                labels[e - 1] = b as u8;
            }
        }
        if labels.contains(&u8::MAX) {
            return Err(Error::InvalidParameter(format!("blocks do not cover 1..{k}")));
        }
        let labels = canonical(&labels);
        if is_crossing(&labels) {
            return Err(Error::InvalidParameter("partition has a crossing".into()));
        }
        Ok(Self { labels })
    }
}

impl fmt::Display for NoncrossingPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks()
            .iter()
            .map(|b| b.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "{}", parts.join("|"))
    }
}

fn canonical(labels: &[u8]) -> Vec<u8> {
    let mut map = [u8::MAX; 256];
    let mut next = 0u8;
    labels
        .iter()
        .map(|&l| {
            if map[l as usize] == u8::MAX {
                map[l as usize] = next;
                next += 1;
            }
            map[l as usize]
        })
        .collect()
}

fn is_crossing(labels: &[u8]) -> bool {
    let k = labels.len();
    for a in 0..k {
        for b in a + 1..k {
            if labels[b] == labels[a] {
                continue;
            }
            for c in b + 1..k {
                if labels[c] != labels[a] {
                    continue;
                }
                if labels[c + 1..].contains(&labels[b]) {
                    return true;
                }
            }
        }
    }
    false
}

fn guard_k(k: usize) -> Result<()> {
    if (1..=MAX_K).contains(&k) {
        Ok(())
    } else {
        Err(Error::Guard { what: "k", value: k as i64, range: "1..=14" })
    }
}

/// All of NC(k), sorted by restricted growth string.
///
/// The block of the first element of an interval splits the rest of the
/// interval into gaps that are partitioned independently, so every output
/// is non-crossing by construction.
pub fn enumerate_nc(k: usize) -> Result<Vec<NoncrossingPartition>> {
    guard_k(k)?;
    let mut out = Vec::new();
    let mut labels = vec![0u8; k];
    let mut stack = vec![(0usize, k)];
    next_arc(&mut stack, &mut labels, 0, &mut out);
    out.sort_unstable();
    Ok(out.into_iter().map(|labels| NoncrossingPartition { labels }).collect())
}

fn next_arc(stack: &mut Vec<(usize, usize)>, labels: &mut [u8], next: u8, out: &mut Vec<Vec<u8>>) {
    let Some((l, r)) = stack.pop() else {
        out.push(canonical(labels));
        return;
    };
    if l >= r {
        next_arc(stack, labels, next, out);
    } else {
        labels[l] = next;
        grow_block(l, r, stack, labels, next, out);
    }
    stack.push((l, r));
}

fn grow_block(
    prev: usize,
    r: usize,
    stack: &mut Vec<(usize, usize)>,
    labels: &mut [u8],
    label: u8,
    out: &mut Vec<Vec<u8>>,
) {
    stack.push((prev + 1, r));
    next_arc(stack, labels, label + 1, out);
    stack.pop();
    for j in prev + 1..r {
        labels[j] = label;
        stack.push((prev + 1, j));
        grow_block(j, r, stack, labels, label, out);
        stack.pop();
    }
}

/// `m_k = sum over NC(k) of prod kappa_{|V|}` for `k = 1..K`.
pub fn cumulants_to_moments(kappa: &[f64], k_max: usize) -> Result<Vec<f64>> {
    need_len(kappa, k_max)?;
    (1..=k_max)
        .map(|k| {
            Ok(enumerate_nc(k)?
                .iter()
                .map(|p| p.labels_sizes_product(|s| kappa[s - 1]))
                .sum())
        })
        .collect()
}

impl NoncrossingPartition {
    fn labels_sizes_product(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.block_sizes().into_iter().map(f).product()
    }
}

fn need_len(v: &[f64], k_max: usize) -> Result<()> {
    guard_k(k_max)?;
    if v.len() < k_max {
        return Err(Error::InvalidParameter(format!(
            "sequence has {} entries, {k_max} needed",
            v.len()
        )));
    }
    Ok(())
}

/// Inverse of [`cumulants_to_moments`], solving for `kappa_k` from the
/// one-block term.
pub fn moments_to_cumulants(m: &[f64], k_max: usize) -> Result<Vec<f64>> {
    need_len(m, k_max)?;
    let mut kappa: Vec<f64> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let rest: f64 = enumerate_nc(k)?
            .iter()
            .filter(|p| p.num_blocks() > 1)
            .map(|p| p.labels_sizes_product(|s| kappa[s - 1]))
            .sum();
        kappa.push(m[k - 1] - rest);
    }
    Ok(kappa)
}

/// Per-order free cumulant rows `kappa^{(i)}_1..kappa^{(i)}_K`, `i = 0..order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantTable {
    pub order: usize,
    pub rows: Vec<Vec<f64>>,
}

impl CumulantTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let len = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || len == 0 || rows.iter().any(|r| r.len() != len) {
            return Err(Error::InvalidParameter("cumulant rows must be nonempty and of equal length".into()));
        }
        Ok(Self { order: rows.len() - 1, rows })
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Infinitesimal moments `phi^{(i)}(x^k)` for `i = 0..order`, `k = 1..K`:
/// a sum over NC(k) and over ways to distribute `i` derivative orders among
/// the blocks, weighted by multinomial coefficients.
pub fn infinitesimal_moments(table: &CumulantTable, k_max: usize) -> Result<ExpansionResult> {
    if table.order > MAX_INFINITESIMAL_ORDER {
        return Err(Error::Guard { what: "order", value: table.order as i64, range: "0..=4" });
    }
    need_len(&table.rows[0], k_max)?;
    let nu = table.order;
    let mut orders = vec![Vec::with_capacity(k_max); nu + 1];
    for k in 1..=k_max {
        let parts = enumerate_nc(k)?;
        for (i, row) in orders.iter_mut().enumerate() {
            let mut total = 0.0;
            for p in &parts {
                let sizes = p.block_sizes();
                let mut lambda = vec![0usize; sizes.len()];
                distribute(table, &sizes, &mut lambda, 0, i, i, &mut total);
            }
            row.push(total);
        }
    }
    Ok(ExpansionResult {
        side: None,
        scales: (0..=nu).map(|i| format!("phi^({i})")).collect(),
        orders,
    })
}

fn distribute(
    table: &CumulantTable,
    sizes: &[usize],
    lambda: &mut [usize],
    j: usize,
    remaining: usize,
    total_order: usize,
    acc: &mut f64,
) {
    if j == sizes.len() {
        if remaining == 0 {
            let weight = multinomial(total_order, lambda);
            let prod: f64 = sizes
                .iter()
                .zip(lambda.iter())
                .map(|(&s, &l)| table.rows[l][s - 1])
                .product();
            *acc += weight as f64 * prod;
        }
        return;
    }
    let cap = remaining.min(table.order);
    for l in 0..=cap {
        lambda[j] = l;
        distribute(table, sizes, lambda, j + 1, remaining - l, total_order, acc);
    }
    lambda[j] = 0;
}

fn multinomial(n: usize, parts: &[usize]) -> u64 {
    let fact = |m: usize| (1..=m as u64).product::<u64>();
    parts.iter().fold(fact(n), |acc, &p| acc / fact(p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftDirection {
    ToQuantized,
    FromQuantized,
}

/// Free cumulants of the uniform measure on [0, 1].
pub fn uniform_cumulants(k_max: usize) -> Result<Vec<f64>> {
    let m: Vec<f64> = (1..=k_max).map(|k| 1.0 / (k as f64 + 1.0)).collect();
    moments_to_cumulants(&m, k_max)
}

/// Subtracts (to quantized) or adds back (from quantized) the cumulants of
/// the uniform measure on [0, 1].
pub fn quantized_r_shift(kappa: &[f64], direction: ShiftDirection) -> Result<Vec<f64>> {
    if kappa.is_empty() {
        return Ok(Vec::new());
    }
    let u = uniform_cumulants(kappa.len())?;
    let sign = match direction {
        ShiftDirection::ToQuantized => -1.0,
        ShiftDirection::FromQuantized => 1.0,
    };
    Ok(kappa.iter().zip(&u).map(|(a, b)| a + sign * b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn catalan(n: usize) -> u64 {
        let mut c = vec![1u64; n + 1];
        for m in 1..=n {
            c[m] = (0..m).map(|i| c[i] * c[m - 1 - i]).sum();
        }
        c[n]
    }

    /// Every set partition as a restricted growth string.
    fn all_set_partitions(k: usize) -> Vec<Vec<u8>> {
        fn rec(labels: &mut Vec<u8>, k: usize, max: u8, out: &mut Vec<Vec<u8>>) {
            if labels.len() == k {
                out.push(labels.clone());
                return;
            }
            for l in 0..=max {
                labels.push(l);
                rec(labels, k, if l == max { max + 1 } else { max }, out);
                labels.pop();
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), k, 0, &mut out);
        out
    }

    #[test]
    fn counts_are_catalan() {
        for k in 1..=12 {
            assert_eq!(enumerate_nc(k).unwrap().len() as u64, catalan(k), "k={k}");
        }
        assert!(enumerate_nc(0).is_err());
        assert!(enumerate_nc(15).is_err());
    }

    #[test]
    fn matches_filter_oracle() {
        for k in 1..=8 {
            let filtered: BTreeSet<Vec<u8>> =
                all_set_partitions(k).into_iter().filter(|l| !is_crossing(l)).collect();
            let got: BTreeSet<Vec<u8>> = enumerate_nc(k).unwrap().into_iter().map(|p| p.labels).collect();
            assert_eq!(got, filtered, "k={k}");
        }
        assert_eq!(all_set_partitions(4).len(), 15);
        assert_eq!(all_set_partitions(4).iter().filter(|l| is_crossing(l)).count(), 1);
    }

    #[test]
    fn dump_format() {
        let p = NoncrossingPartition::from_blocks(4, &[vec![1, 3], vec![2], vec![4]]).unwrap();
        assert_eq!(p.to_string(), "1,3|2|4");
        assert!(NoncrossingPartition::from_blocks(4, &[vec![1, 3], vec![2, 4]]).is_err());
        assert_eq!(enumerate_nc(3).unwrap()[0].to_string(), "1,2,3");
    }

    #[test]
    fn block_profile_counts() {
        use std::collections::BTreeMap;
        let fact = |m: usize| (1..=m as u128).product::<u128>();
        for k in 1..=10 {
            let mut counts: BTreeMap<Vec<usize>, u128> = BTreeMap::new();
            for p in enumerate_nc(k).unwrap() {
                let mut r = vec![0usize; k + 1];
                for s in p.block_sizes() {
                    r[s] += 1;
                }
                *counts.entry(r).or_default() += 1;
            }
            for (r, n) in counts {
                let blocks: usize = r.iter().sum();
                let denom: u128 = fact(k - blocks + 1) * r.iter().map(|&x| fact(x)).product::<u128>();
                assert_eq!(n, fact(k) / denom, "k={k} profile={r:?}");
            }
        }
    }

    #[test]
    fn moment_examples() {
        let semi = [0., 1., 0., 0., 0., 0.];
        assert_eq!(cumulants_to_moments(&semi, 6).unwrap(), vec![0., 1., 0., 2., 0., 5.]);
        let c = 0.7;
        let m = cumulants_to_moments(&[c, 0., 0., 0.], 4).unwrap();
        for (k, v) in m.iter().enumerate() {
            assert_relative_eq!(*v, c.powi(k as i32 + 1), max_relative = 1e-15);
        }
        let l = 1.3;
        let m = cumulants_to_moments(&[l; 3], 3).unwrap();
        assert_relative_eq!(m[0], l);
        assert_relative_eq!(m[1], l + l * l);
        assert_relative_eq!(m[2], l + 3. * l * l + l * l * l, max_relative = 1e-15);
        assert_eq!(moments_to_cumulants(&[0., 1., 0., 2., 0., 5.], 6).unwrap(), semi.to_vec());
        let k = moments_to_cumulants(&[c, c * c, c * c * c], 3).unwrap();
        assert_relative_eq!(k[0], c);
        assert!(k[1].abs() < 1e-15 && k[2].abs() < 1e-15);
    }

    #[test]
    fn infinitesimal_examples() {
        let kappa = vec![0., 1., 0., 2., 0.7, -0.3];
        let single = CumulantTable::new(vec![kappa.clone()]).unwrap();
        assert_eq!(infinitesimal_moments(&single, 6).unwrap().orders[0], cumulants_to_moments(&kappa, 6).unwrap());

        let semi = vec![0., 1., 0., 0.];
        let t = CumulantTable::new(vec![semi.clone(), semi.clone()]).unwrap();
        let r = infinitesimal_moments(&t, 4).unwrap();
        assert_eq!(r.orders[1][1], 1.0);
        assert_eq!(r.orders[1][3], 4.0);

        let c = 0.6;
        let t = CumulantTable::new(vec![vec![0.3, -1.2], vec![c, 0.0], vec![0.0, 0.0]]).unwrap();
        let r = infinitesimal_moments(&t, 2).unwrap();
        assert_relative_eq!(r.orders[2][1], 2.0 * c * c, max_relative = 1e-15);
        assert!(infinitesimal_moments(&CumulantTable::new(vec![vec![1.0]; 6]).unwrap(), 1).is_err());
    }

    #[test]
    fn order_one_matches_marked_block_sum() {
        let k0 = [0.3, -0.5, 0.8, 0.1, -0.9, 0.4, 0.2, -0.6];
        let k1 = [0.7, 0.2, -0.4, 0.9, 0.5, -0.1, 0.3, 0.6];
        let t = CumulantTable::new(vec![k0.to_vec(), k1.to_vec()]).unwrap();
        let r = infinitesimal_moments(&t, 8).unwrap();
        for k in 1..=8 {
            let mut direct = 0.0;
            for p in enumerate_nc(k).unwrap() {
                let sizes = p.block_sizes();
                for v in 0..sizes.len() {
                    let prod: f64 = sizes
                        .iter()
                        .enumerate()
                        .map(|(w, &s)| if w == v { k1[s - 1] } else { k0[s - 1] })
                        .product();
                    direct += prod;
                }
            }
            assert_relative_eq!(r.orders[1][k - 1], direct, max_relative = 1e-13, epsilon = 1e-15);
        }
    }

    #[test]
    fn uniform_shift() {
        let u = uniform_cumulants(6).unwrap();
        assert_relative_eq!(u[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(u[1], 1.0 / 12.0, max_relative = 1e-13);
        assert!(u[2].abs() < 1e-15);
        assert_relative_eq!(u[3], -1.0 / 720.0, max_relative = 1e-10);
        let z = quantized_r_shift(&u, ShiftDirection::ToQuantized).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(quantized_r_shift(&[0.0; 6], ShiftDirection::FromQuantized).unwrap(), u);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn transforms_are_inverse(kappa in proptest::collection::vec(-1.0f64..1.0, 10)) {
            // round-off follows the unsigned partition sums, which are the
            // moments of |kappa|; the signed moments can cancel far below them
            let m = cumulants_to_moments(&kappa, 10).unwrap();
            let abs: Vec<f64> = kappa.iter().map(|v| v.abs()).collect();
            let scale = cumulants_to_moments(&abs, 10).unwrap().iter().fold(1.0f64, |s, v| s.max(*v));
            let back = moments_to_cumulants(&m, 10).unwrap();
            for (a, b) in back.iter().zip(&kappa) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn shift_round_trip(k in proptest::collection::vec(-1.0f64..1.0, 1..8)) {
            let q = quantized_r_shift(&k, ShiftDirection::ToQuantized).unwrap();
            let back = quantized_r_shift(&q, ShiftDirection::FromQuantized).unwrap();
            for (a, b) in back.iter().zip(&k) {
                prop_assert!((a - b).abs() <= 1e-14);
            }
        }
    }
}
