use proptest::prelude::*;
use rand::Rng;
use xai_chest_core::estimators::{cubic_spline, dpa_step, sta_combine, trfi_interpolate, ChannelEstimate, StaParams, StaReference};
use xai_chest_core::phy::{build_frame, map_bits, FrameSpec, Modulation, ModulationScheme};
use xai_chest_core::seed::rng_from_seed;
use xai_chest_core::Complex64;

/// Not-a-knot cubic spline assembled as one dense `4(n−1)` system in the
/// piecewise coefficients `a + b·t + c·t² + d·t³` and solved by Gaussian
/// elimination.
fn dense_not_a_knot(xs: &[f64], ys: &[f64], query: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let m = 4 * (n - 1);
    let mut a = vec![vec![0.0; m + 1]; m];
    let mut row = 0;
    let h = |i: usize| xs[i + 1] - xs[i];
    for i in 0..n - 1 {
        a[row][4 * i] = 1.0;
        a[row][m] = ys[i];
        row += 1;
        let t = h(i);
        a[row][4 * i..4 * i + 4].copy_from_slice(&[1.0, t, t * t, t * t * t]);
        a[row][m] = ys[i + 1];
        row += 1;
    }
    for i in 0..n - 2 {
        let t = h(i);
        a[row][4 * i + 1..4 * i + 4].copy_from_slice(&[1.0, 2.0 * t, 3.0 * t * t]);
        a[row][4 * (i + 1) + 1] = -1.0;
        row += 1;
        a[row][4 * i + 2..4 * i + 4].copy_from_slice(&[2.0, 6.0 * t]);
        a[row][4 * (i + 1) + 2] = -2.0;
        row += 1;
    }
    a[row][3] = 1.0;
    a[row][7] = -1.0;
    row += 1;
    a[row][4 * (n - 3) + 3] = 1.0;
    a[row][4 * (n - 2) + 3] = -1.0;

    for col in 0..m {
        let p = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, p);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..m).map(|i| a[i][m] / a[i][i]).collect();
    query
        .iter()
        .map(|&x| {
            let i = (0..n - 1).rev().find(|&i| xs[i] <= x).unwrap_or(0);
            let t = x - xs[i];
            coef[4 * i] + t * (coef[4 * i + 1] + t * (coef[4 * i + 2] + t * coef[4 * i + 3]))
        })
        .collect()
}

fn spec() -> FrameSpec {
    FrameSpec::ieee80211p().with_n_symbols(1)
}

fn random_channel(seed: u64, k: usize) -> Vec<Complex64> {
    let mut rng = rng_from_seed(seed);
    (0..k)
        .map(|_| Complex64::new(rng.random_range(0.3..1.5), rng.random_range(-1.0..1.0)))
        .collect()
}

#[test]
fn dpa_returns_true_channel_for_noiseless_symbol() {
    let spec = spec();
    let scheme = ModulationScheme::new(Modulation::Qam16);
    let mut rng = rng_from_seed(1);
    let bits: Vec<u8> = (0..spec.k_data * 4).map(|_| rng.random_range(0..2u8)).collect();
    let x = build_frame(&map_bits(&bits, &scheme).unwrap(), &spec).unwrap().remove(0);
    let h = random_channel(2, spec.k_on);
    let y = xai_chest_core::phy::OfdmSymbolFreq::new(x.values.iter().zip(&h).map(|(x, h)| x * h).collect());
    let prev = ChannelEstimate::new(h.iter().map(|h| h * Complex64::new(1.01, 0.005)).collect());
    let (est, decided) = dpa_step(&y, &prev, &scheme, &spec).unwrap();
    assert_eq!(decided, x);
    for (e, t) in est.values.iter().zip(&h) {
        assert!((e - t).norm() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn sta_preserves_constants(re in -2.0f64..2.0, im in -2.0f64..2.0, alpha in 1.0f64..10.0, beta in 0usize..6) {
        let c = Complex64::new(re, im);
        let h = ChannelEstimate::new(vec![c; 52]);
        let p = StaParams { alpha, beta, reference: StaReference::StaOutput };
        for v in sta_combine(&h, &h, &p).values {
            prop_assert!((v - c).norm() <= 1e-12);
        }
    }

    #[test]
    fn sta_output_within_convex_hull(seed in any::<u64>(), alpha in 1.0f64..10.0, beta in 0usize..6) {
        let dpa = random_channel(seed, 52);
        let prev = random_channel(seed ^ 1, 52);
        let p = StaParams { alpha, beta, reference: StaReference::StaOutput };
        let out = sta_combine(&ChannelEstimate::new(dpa.clone()), &ChannelEstimate::new(prev.clone()), &p);
        for (k, v) in out.values.iter().enumerate() {
            let lo = k.saturating_sub(beta);
            let hi = (k + beta).min(51);
            let pool: Vec<Complex64> = dpa[lo..=hi].iter().copied().chain([prev[k]]).collect();
            for part in [|z: &Complex64| z.re, |z: &Complex64| z.im] {
                let min = pool.iter().map(part).fold(f64::INFINITY, f64::min);
                let max = pool.iter().map(part).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(part(v) >= min - 1e-12 && part(v) <= max + 1e-12);
            }
        }
    }

    #[test]
    fn spline_matches_dense_not_a_knot_oracle(
        ys in proptest::collection::vec(-3.0f64..3.0, 4..14),
        gaps in proptest::collection::vec(0.5f64..3.0, 13),
    ) {
        let mut xs = vec![0.0];
        for g in &gaps[..ys.len() - 1] {
            xs.push(xs.last().unwrap() + g);
        }
        let end = *xs.last().unwrap();
        let query: Vec<f64> = (0..=40).map(|i| end * i as f64 / 40.0).collect();
        let got = cubic_spline(&xs, &ys, &query);
        let want = dense_not_a_knot(&xs, &ys, &query);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-9 * 1f64.max(w.abs()), "{g} vs {w}");
        }
    }

    #[test]
    fn trfi_reproduces_cubic_channel_on_unreliable_subcarriers(
        coef in proptest::collection::vec(-1.0f64..1.0, 8),
        unreliable in proptest::collection::btree_set(0usize..52, 0..40),
    ) {
        let spec = spec();
        let cubic = |k: f64, c: &[f64]| c[0] + k * (c[1] * 0.1 + k * (c[2] * 0.01 + k * c[3] * 0.001));
        let truth: Vec<Complex64> = spec
            .active_subcarriers
            .iter()
            .map(|&k| Complex64::new(cubic(k as f64, &coef[..4]), cubic(k as f64, &coef[4..])))
            .collect();
        let mut reliable = vec![true; 52];
        let mut corrupted = truth.clone();
        for &p in &unreliable {
            if !spec.is_pilot(p) {
                reliable[p] = false;
                corrupted[p] += Complex64::new(5.0, -5.0);
            }
        }
        let out = trfi_interpolate(&ChannelEstimate::new(corrupted), &reliable, &spec).unwrap();
        prop_assert!(!out.fell_back);
        for (e, t) in out.estimate.values.iter().zip(&truth) {
            prop_assert!((e - t).norm() <= 1e-9);
        }
    }
}
