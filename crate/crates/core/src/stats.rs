//! Two-sided Wilcoxon signed-rank test.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{HaasError, Result};

/// Largest sample size for which the exact null distribution is used.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Pairs left after dropping zero differences.
    pub n: usize,
    /// Smaller of the positive and negative signed-rank sums.
    pub w: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Normal approximation with tie correction, no continuity correction.
    pub z: f64,
    pub p_normal: f64,
    /// Exact p when `n ≤ EXACT_MAX_N`, otherwise the normal p.
    pub p: f64,
    pub exact: bool,
    /// `|z| / sqrt(n)`.
    pub r: f64,
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Average ranks of `values` (1-based), ties sharing the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in &idx[i..=j] {
            ranks[*k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Tests paired samples `(x, y)` on the differences `x − y`.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<WilcoxonResult> {
    let diffs: Vec<f64> = pairs.iter().map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(HaasError::Degenerate("all paired differences are zero".into()));
    }
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(HaasError::Degenerate("non-finite difference".into()));
    }
    let n = diffs.len();
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w_minus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d < 0.0).map(|(_, r)| r).sum();
    let w = w_plus.min(w_minus) + 0.0;

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = if var > 0.0 { (w - mean) / var.sqrt() } else { 0.0 };
    let p_normal = (2.0 * normal_cdf(-z.abs())).min(1.0);
    let exact = n <= EXACT_MAX_N;
    let p = if exact { exact_p(&ranks, w) } else { p_normal };
    Ok(WilcoxonResult {
        n,
        w,
        w_plus,
        w_minus,
        z,
        p_normal,
        p,
        exact,
        r: z.abs() / nf.sqrt(),
    })
}

/// Exact two-sided p under the sign-flip null, by counting subsets of the
/// doubled (integer) ranks.
fn exact_p(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for k in (r..=total).rev() {
            counts[k] += counts[k - r];
        }
    }
    let w2 = (w * 2.0).round() as usize;
    let hits: f64 = counts
        .iter()
        .enumerate()
        .filter(|(k, _)| (*k).min(total - *k) <= w2)
        .map(|(_, c)| c)
        .sum();
    (hits / 2f64.powi(ranks.len() as i32)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Enumerates all sign assignments of the ranks.
    fn brute_force_p(pairs: &[(f64, f64)]) -> f64 {
        let diffs: Vec<f64> = pairs.iter().map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
        let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
        let total: f64 = ranks.iter().sum();
        let observed: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
        let w_obs = observed.min(total - observed);
        let n = ranks.len();
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let s: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
            if s.min(total - s) <= w_obs + 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn unanimous_thirty() {
        let pairs: Vec<(f64, f64)> = (0..30).map(|i| (1.0 + i as f64 * 0.1, 0.5)).collect();
        let r = wilcoxon_signed_rank(&pairs).unwrap();
        assert_eq!(r.w, 0.0);
        assert_abs_diff_eq!(r.z, -4.782, epsilon = 1e-3);
        assert_abs_diff_eq!(r.r, 0.873, epsilon = 0.005);
        assert!(r.p < 0.001);
        assert!(!r.exact);
    }

    #[test]
    fn antisymmetric_is_null() {
        let pairs: Vec<(f64, f64)> = [0.3, 0.1, 0.7, 0.2, 0.9, 0.4]
            .iter()
            .flat_map(|d| [(*d, 0.0), (0.0, *d)])
            .collect();
        let r = wilcoxon_signed_rank(&pairs).unwrap();
        assert_eq!(r.w_plus, r.w_minus);
        assert_abs_diff_eq!(r.p, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.p_normal, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn six_pairs_exact() {
        let pairs = [(1.0, 0.2), (0.4, 0.9), (2.0, 0.5), (0.3, 0.1), (1.2, 0.0), (0.7, 0.65)];
        let r = wilcoxon_signed_rank(&pairs).unwrap();
        assert!(r.exact);
        assert_abs_diff_eq!(r.p, brute_force_p(&pairs), epsilon = 1e-9);
    }

    #[test]
    fn zero_differences_rejected() {
        assert!(matches!(
            wilcoxon_signed_rank(&[(1.0, 1.0), (2.0, 2.0)]),
            Err(HaasError::Degenerate(_))
        ));
    }

    #[test]
    fn ties_average() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    proptest! {
        #[test]
        fn exact_matches_sign_flip_oracle(
            d in prop::collection::vec(prop_oneof![(-5i32..=5).prop_map(|v| v as f64 * 0.5), -3.0f64..3.0], 1..=10)
        ) {
            let pairs: Vec<(f64, f64)> = d.iter().map(|v| (*v, 0.0)).collect();
            prop_assume!(d.iter().any(|v| *v != 0.0));
            let r = wilcoxon_signed_rank(&pairs).unwrap();
            prop_assert!((r.p - brute_force_p(&pairs)).abs() <= 1e-9);
        }
    }
}
