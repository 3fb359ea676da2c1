//! Gauss rules on the unit interval and the reference triangle.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature point on the reference triangle `{(s, t) : s, t >= 0, s + t <= 1}`.
#[derive(Debug, Clone, Copy)]
pub struct TrianglePoint {
    pub bary: [f64; 3],
    /// Weight on the reference triangle (weights sum to 1/2).
    pub weight: f64,
}

/// Collapsed tensor Gauss rule with `n` points per direction, exact for
/// polynomials of total degree `2n - 2`.
pub fn triangle_rule(n: usize) -> Vec<TrianglePoint> {
    let (x, w) = gauss_legendre(n);
    let mut pts = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let u = x[a];
            let v = x[b];
            let s = u;
            let t = (1.0 - u) * v;
            pts.push(TrianglePoint {
                bary: [1.0 - s - t, s, t],
                weight: w[a] * w[b] * (1.0 - u),
            });
        }
    }
    pts
}
