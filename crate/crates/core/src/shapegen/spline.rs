//! Periodic cubic spline on a uniform knot sequence.
//!
//! For closed data `y_0 .. y_{n-1}` (with `y_n = y_0`) the second
//! derivatives `m_i` at the knots solve the cyclic tridiagonal system
//! `m_{i-1} + 4 m_i + m_{i+1} = 6 (y_{i+1} - 2 y_i + y_{i-1})`.

use crate::geom::Point;

/// Second derivatives of the periodic interpolant. Needs `values.len() >= 3`.
pub fn periodic_second_derivatives(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3, "periodic spline needs at least 3 knots");
    let rhs: Vec<f64> = (0..n)
        .map(|i| {
            let prev = values[(i + n - 1) % n];
            let next = values[(i + 1) % n];
            6.0 * (next - 2.0 * values[i] + prev)
        })
        .collect();
    solve_cyclic(1.0, 4.0, 1.0, &rhs)
}

/// Solves the cyclic tridiagonal system with constant sub/main/super
/// diagonals `a, b, c`, bottom-left corner `c` and top-right corner `a`,
/// via Sherman-Morrison on top of the Thomas algorithm.
fn solve_cyclic(a: f64, b: f64, c: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let alpha = c;
    let beta = a;
    let gamma = -b;
    let mut diag = vec![b; n];
    diag[0] = b - gamma;
    diag[n - 1] = b - alpha * beta / gamma;

    let x = thomas(a, &diag, c, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(a, &diag, c, &u);

    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn thomas(a: f64, diag: &[f64], c: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c / diag[0];
    dp[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - a * cp[i - 1];
        cp[i] = c / m;
        dp[i] = (rhs[i] - a * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Value of segment `i` at local parameter `t` in `[0, 1]`.
#[inline]
fn eval_segment(y0: f64, y1: f64, m0: f64, m1: f64, t: f64) -> f64 {
    let s = 1.0 - t;
    s * y0 + t * y1 + ((s * s * s - s) * m0 + (t * t * t - t) * m1) / 6.0
}

/// Samples the closed curve through `anchors`: `samples_per_span` points per
/// interval plus the closing point, `anchors.len() * samples_per_span + 1`
/// points in total. Sample `k * samples_per_span` is exactly anchor `k`.
pub fn sample_closed(anchors: &[Point], samples_per_span: usize) -> Vec<Point> {
    let n = anchors.len();
    let xs: Vec<f64> = anchors.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = anchors.iter().map(|p| p[1]).collect();
    let mx = periodic_second_derivatives(&xs);
    let my = periodic_second_derivatives(&ys);
    let mut out = Vec::with_capacity(n * samples_per_span + 1);
    for i in 0..n {
        let j = (i + 1) % n;
        for k in 0..samples_per_span {
            let t = k as f64 / samples_per_span as f64;
            out.push([
                eval_segment(xs[i], xs[j], mx[i], mx[j], t),
                eval_segment(ys[i], ys[j], my[i], my[j], t),
            ]);
        }
    }
    let (i, j) = (n - 1, 0);
    out.push([
        eval_segment(xs[i], xs[j], mx[i], mx[j], 1.0),
        eval_segment(ys[i], ys[j], my[i], my[j], 1.0),
    ]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    // Dense Gaussian elimination on the full cyclic matrix, independent of
    // the Sherman-Morrison path.
    fn dense_oracle(values: &[f64]) -> Vec<f64> {
        let n = values.len();
        let mut m = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            m[i][i] += 4.0;
            m[i][(i + 1) % n] += 1.0;
            m[i][(i + n - 1) % n] += 1.0;
            m[i][n] = 6.0 * (values[(i + 1) % n] - 2.0 * values[i] + values[(i + n - 1) % n]);
        }
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
                .unwrap();
            m.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = m[r][col] / m[col][col];
                    for k in col..=n {
                        m[r][k] -= f * m[col][k];
                    }
                }
            }
        }
        (0..n).map(|i| m[i][n] / m[i][i]).collect()
    }

    #[test]
    fn cyclic_solver_matches_dense_elimination() {
        for n in [3usize, 4, 7, 30, 100] {
            let vals: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64).sin()).collect();
            let fast = periodic_second_derivatives(&vals);
            let slow = dense_oracle(&vals);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn interpolates_anchors_and_closes() {
        let anchors = [[0.1, 0.2], [0.8, 0.1], [0.9, 0.7], [0.4, 0.9], [0.2, 0.6]];
        let pts = sample_closed(&anchors, 16);
        assert_eq!(pts.len(), 5 * 16 + 1);
        for (k, a) in anchors.iter().enumerate() {
            assert_eq!(pts[k * 16], *a);
        }
        assert_eq!(pts.first(), pts.last());
    }

    #[test]
    fn second_derivative_is_continuous_across_knots() {
        // Finite-difference second derivative on either side of each knot
        // agrees with the solved m_i.
        let ys = [0.3, 0.9, 0.1, 0.5, 0.7, 0.2];
        let m = periodic_second_derivatives(&ys);
        let n = ys.len();
        let h = 1e-4;
        for i in 0..n {
            let prev = (i + n - 1) % n;
            let next = (i + 1) % n;
            let left = |t: f64| eval_segment(ys[prev], ys[i], m[prev], m[i], t);
            let right = |t: f64| eval_segment(ys[i], ys[next], m[i], m[next], t);
            let d2_left = (left(1.0) - 2.0 * left(1.0 - h) + left(1.0 - 2.0 * h)) / (h * h);
            let d2_right = (right(0.0) - 2.0 * right(h) + right(2.0 * h)) / (h * h);
            assert!((d2_left - m[i]).abs() < 1e-3);
            assert!((d2_right - m[i]).abs() < 1e-3);
        }
    }

    #[test]
    fn constant_data_gives_zero_curvature() {
        let m = periodic_second_derivatives(&[0.5; 8]);
        assert!(m.iter().all(|v| v.abs() < 1e-15));
    }
}
