//! Small statistics used by the study reports.

use xai_chest_core::eval::LinkResult;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval of a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn ber_interval(r: &LinkResult) -> (f64, f64) {
    wilson_interval(r.bit_errors, r.total_bits, Z95)
}

/// `a` is not significantly better than `b`: the 95% intervals overlap or
/// `a` lies above.
pub fn not_better(a: &LinkResult, b: &LinkResult) -> bool {
    ber_interval(a).1 >= ber_interval(b).0
}

/// `a` is significantly worse than `b`: disjoint intervals with `a` above.
pub fn significantly_worse(a: &LinkResult, b: &LinkResult) -> bool {
    ber_interval(a).0 > ber_interval(b).1
}

/// Ranks starting at 1 with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|a, b| x[*a].total_cmp(&x[*b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation; `NaN` when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// 0-based position of each of `indices` when `values` is sorted ascending
/// (stable, so ties keep subcarrier order).
pub fn ascending_ranks(values: &[f64], indices: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    indices.iter().map(|i| order.iter().position(|o| o == i).expect("index in range")).collect()
}

/// Size of the lowest quartile of `n` values.
pub fn lowest_quartile_len(n: usize) -> usize {
    n / 4
}
