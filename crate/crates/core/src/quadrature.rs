//! Gauss–Legendre rules and closed-form logarithmic integrals.

use std::f64::consts::PI;

use crate::geometry::{cross, Point};

/// Four-point Gauss–Legendre rule on `[0, 1]` (weights sum to one).
pub const GAUSS4_NODES: [f64; 4] = [
    0.5 - 0.5 * 0.861_136_311_594_052_6,
    0.5 - 0.5 * 0.339_981_043_584_856_3,
    0.5 + 0.5 * 0.339_981_043_584_856_3,
    0.5 + 0.5 * 0.861_136_311_594_052_6,
];
pub const GAUSS4_WEIGHTS: [f64; 4] = [
    0.5 * 0.347_854_845_137_453_8,
    0.5 * 0.652_145_154_862_546_1,
    0.5 * 0.652_145_154_862_546_1,
    0.5 * 0.347_854_845_137_453_8,
];

/// `n`-point Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = mid - half * z;
        nodes[n - 1 - i] = mid + half * z;
        let w = 2.0 * half / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `int_{[a,b]} -log|x - y| ds(y)` along the straight segment `[a, b]`.
pub fn segment_log_integral(x: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len = d.norm();
    let u = d / len;
    let p = x - a;
    let t0 = p.dot(&u);
    let h = cross(u, p).abs();
    let antiderivative = |z: f64| -> f64 {
        let r2 = z * z + h * h;
        let log_term = if r2 > 0.0 { z * r2.ln() } else { 0.0 };
        let atan_term = if h > 0.0 { 2.0 * h * (z / h).atan() } else { 0.0 };
        log_term - 2.0 * z + atan_term
    };
    -0.5 * (antiderivative(len - t0) - antiderivative(-t0))
}

/// Mean of the Riesz kernel over pairs of points in the unit square:
/// `-log|x - y|` for `alpha = 2`, `|x - y|^{alpha - 2}` otherwise.
///
/// Uses `int k(x-y) = 4 int_{[0,1]^2} k(z)(1-z1)(1-z2) dz` in polar
/// coordinates with the radial integral in closed form.
pub fn unit_square_self_energy(alpha: f64) -> f64 {
    let (th, wt) = gauss_legendre(48, 0.0, PI / 4.0);
    let mut total = 0.0;
    for (&t, &w) in th.iter().zip(&wt) {
        let (c, s) = (t.cos(), t.sin());
        let r = 1.0 / c;
        let coeffs = [(1.0, 1), (-(c + s), 2), (c * s, 3)];
        let radial: f64 = if alpha >= 2.0 {
            coeffs
                .iter()
                .map(|&(k, m)| {
                    let m1 = (m + 1) as f64;
                    -k * r.powf(m1) * (r.ln() / m1 - 1.0 / (m1 * m1))
                })
                .sum()
        } else {
            let p = 2.0 - alpha;
            coeffs
                .iter()
                .map(|&(k, m)| {
                    let e = m as f64 + 1.0 - p;
                    k * r.powf(e) / e
                })
                .sum()
        };
        total += w * radial;
    }
    8.0 * total
}
