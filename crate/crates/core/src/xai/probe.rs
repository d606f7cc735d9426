use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::neural::{evaluate_mse, Dataset, Mlp};
use crate::seed::{SeedTree, Stream};

/// Relative tolerance of the midpoint test, scaled by the curve's range.
pub const CONVEXITY_TOLERANCE: f64 = 1e-9;

/// Evidence that `g` is not convex: `g(m) > (g(a) + g(b)) / 2 + tol` with
/// `m = (a + b) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityViolation {
    pub a: f64,
    pub m: f64,
    pub b: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub curve: Vec<(f64, f64)>,
    pub certificate: Option<ConvexityViolation>,
}

/// Seeded random unit vector in parameter space.
pub fn unit_direction(model: &Mlp, seed: u64) -> Vec<f64> {
    let mut rng = SeedTree::new(seed).stream(Stream::Direction).rng();
    let v: Vec<f64> = (0..model.params.num_params()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// `g(t) = L_U(θ + t·v)` on `t_grid` and the strongest midpoint-convexity
/// violation among grid triples, if any.
pub fn loss_landscape_probe(model: &Mlp, data: &Dataset, direction_seed: u64, t_grid: &[f64]) -> Result<ProbeResult> {
    if t_grid.is_empty() {
        return Err(Error::Config("probe needs at least one t value".into()));
    }
    let v = unit_direction(model, direction_seed);
    let curve = t_grid
        .par_iter()
        .map(|&t| {
            let mut m = model.clone();
            for (p, d) in m.params.iter_mut().zip(&v) {
                *p += t * d;
            }
            evaluate_mse(&m, data).map(|g| (t, g))
        })
        .collect::<Result<Vec<_>>>()?;
    let certificate = find_convexity_violation(&curve, CONVEXITY_TOLERANCE);
    Ok(ProbeResult { curve, certificate })
}

/// Scans all triples `(a, (a+b)/2, b)` present on the sampled curve.
pub fn find_convexity_violation(curve: &[(f64, f64)], rel_tol: f64) -> Option<ConvexityViolation> {
    let mut pts = curve.to_vec();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    if pts.len() < 3 {
        return None;
    }
    let (g_min, g_max) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let tol = rel_tol * (g_max - g_min);
    let t_span = pts[pts.len() - 1].0 - pts[0].0;
    let match_tol = 1e-9 * t_span.max(f64::MIN_POSITIVE);
    let mut best: Option<ConvexityViolation> = None;
    for i in 0..pts.len() {
        for j in i + 2..pts.len() {
            let mid = 0.5 * (pts[i].0 + pts[j].0);
            let k = pts.partition_point(|p| p.0 < mid - match_tol);
            if k >= pts.len() || (pts[k].0 - mid).abs() > match_tol || k <= i || k >= j {
                continue;
            }
            let excess = pts[k].1 - 0.5 * (pts[i].1 + pts[j].1);
            if excess > tol && best.is_none_or(|b| excess > b.excess) {
                best = Some(ConvexityViolation {
                    a: pts[i].0,
                    m: pts[k].0,
                    b: pts[j].0,
                    excess,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Activation;
    use crate::seed::rng_from_seed;

    #[test]
    fn convex_and_nonconvex_curves() {
        let grid: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let parabola: Vec<(f64, f64)> = grid.iter().map(|&t| (t, t * t + 0.3 * t)).collect();
        assert!(find_convexity_violation(&parabola, CONVEXITY_TOLERANCE).is_none());
        let wave: Vec<(f64, f64)> = grid.iter().map(|&t| (t, (3.0 * t).cos())).collect();
        let c = find_convexity_violation(&wave, CONVEXITY_TOLERANCE).unwrap();
        assert!(((c.a + c.b) / 2.0 - c.m).abs() < 1e-9);
        assert!(c.excess > 0.0);
    }

    #[test]
    fn linear_model_is_convex_along_lines() {
        let model = Mlp::init(&[3, 2], Activation::Identity, &mut rng_from_seed(4)).unwrap();
        let mut ds = Dataset::new(3, 2);
        for i in 0..30 {
            let x = [(i as f64).sin(), (i as f64 * 0.7).cos(), 0.1 * i as f64 - 1.5];
            ds.push(&x, &[x[0] - x[2], 0.5 * x[1]]).unwrap();
        }
        let grid: Vec<f64> = (0..81).map(|i| -2.0 + 0.05 * i as f64).collect();
        let r = loss_landscape_probe(&model, &ds, 7, &grid).unwrap();
        assert!(r.certificate.is_none());
        let g0 = r.curve.iter().find(|p| p.0.abs() < 1e-12).unwrap().1;
        assert!((g0 - evaluate_mse(&model, &ds).unwrap()).abs() < 1e-15);
        let v = unit_direction(&model, 7);
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
