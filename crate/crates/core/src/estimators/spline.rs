//! Not-a-knot cubic spline interpolation, the default "cubic" interpolant of
//! most numerical environments. With four knots it reduces to the unique
//! cubic through them; with fewer knots the Lagrange polynomial is used.

/// Interpolates (or extrapolates with the end pieces) at `query`.
pub fn cubic_spline(xs: &[f64], ys: &[f64], query: &[f64]) -> Vec<f64> {
    let n = xs.len();
    debug_assert_eq!(n, ys.len());
    match n {
        0 => vec![0.0; query.len()],
        1 => vec![ys[0]; query.len()],
        2 | 3 => query.iter().map(|&x| lagrange(xs, ys, x)).collect(),
        _ => {
            let m = second_derivatives(xs, ys);
            query.iter().map(|&x| evaluate(xs, ys, &m, x)).collect()
        }
    }
}

fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..xs.len() {
        let mut w = 1.0;
        for j in 0..xs.len() {
            if i != j {
                w *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += w * ys[i];
    }
    acc
}

/// Knot second derivatives under not-a-knot end conditions (third derivative
/// continuous across the second and penultimate knots). The two end rows are
/// folded into their neighbours so the remaining system is tridiagonal.
fn second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let slope: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();

    // Unknowns M_1..M_{n-2}; interior equation i (1..=n-2):
    // h_{i-1} M_{i-1} + 2(h_{i-1}+h_i) M_i + h_i M_{i+1} = 6(slope_i − slope_{i-1}).
    let size = n - 2;
    let mut sub = vec![0.0; size];
    let mut diag = vec![0.0; size];
    let mut sup = vec![0.0; size];
    let mut rhs = vec![0.0; size];
    for r in 0..size {
        let i = r + 1;
        sub[r] = h[i - 1];
        diag[r] = 2.0 * (h[i - 1] + h[i]);
        sup[r] = h[i];
        rhs[r] = 6.0 * (slope[i] - slope[i - 1]);
    }
    // M_0 = ((h0 + h1) M_1 − h0 M_2) / h1
    let (h0, h1) = (h[0], h[1]);
    diag[0] += h0 * (h0 + h1) / h1;
    if size > 1 {
        sup[0] -= h0 * h0 / h1;
    }
    // M_{n-1} = ((h_{n-2} + h_{n-3}) M_{n-2} − h_{n-2} M_{n-3}) / h_{n-3}
    let (ha, hb) = (h[n - 2], h[n - 3]);
    diag[size - 1] += ha * (ha + hb) / hb;
    if size > 1 {
        sub[size - 1] -= ha * ha / hb;
    }

    let mut inner = solve_tridiagonal(&sub, &diag, &sup, &rhs);
    let m0 = if size > 1 {
        ((h0 + h1) * inner[0] - h0 * inner[1]) / h1
    } else {
        inner[0]
    };
    let mn = if size > 1 {
        ((ha + hb) * inner[size - 1] - ha * inner[size - 2]) / hb
    } else {
        inner[0]
    };
    let mut m = Vec::with_capacity(n);
    m.push(m0);
    m.append(&mut inner);
    m.push(mn);
    m
}

fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn evaluate(xs: &[f64], ys: &[f64], m: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let seg = match xs.partition_point(|&k| k <= x) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    };
    let h = xs[seg + 1] - xs[seg];
    let a = (xs[seg + 1] - x) / h;
    let b = (x - xs[seg]) / h;
    a * ys[seg] + b * ys[seg + 1] + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * h * h / 6.0
}
