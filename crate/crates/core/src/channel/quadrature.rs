//! Composite Gauss-Legendre rules whose panel edges include every kink of the
//! integrand, so each panel sees a smooth function.

use std::f64::consts::PI;

pub const PANEL_ORDER: usize = 8;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Nodes and weights of a composite rule on `[a, b]` with roughly `nodes`
/// points, panel edges forced onto `kinks` that fall strictly inside.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn composite(a: f64, b: f64, kinks: &[f64], nodes: usize) -> Self {
        let panels = (nodes / PANEL_ORDER).max(1);
        let h = (b - a) / panels as f64;
        let mut edges: Vec<f64> = (0..=panels).map(|i| a + h * i as f64).collect();
        edges.extend(kinks.iter().copied().filter(|&k| k > a && k < b));
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        let (gx, gw) = gauss_legendre(PANEL_ORDER);
        let mut rule = Rule { nodes: Vec::new(), weights: Vec::new() };
        for pair in edges.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, w) in gx.iter().zip(&gw) {
                rule.nodes.push(mid + half * x);
                rule.weights.push(half * w);
            }
        }
        rule
    }
}

pub fn integrate_with_kinks(f: impl Fn(f64) -> f64, a: f64, b: f64, kinks: &[f64], nodes: usize) -> f64 {
    let r = Rule::composite(a, b, kinks, nodes);
    r.nodes.iter().zip(&r.weights).map(|(&x, &w)| w * f(x)).sum()
}
