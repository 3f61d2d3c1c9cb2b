//! Adaptive composite Gauss-Legendre quadrature for vector-valued integrands.
//!
//! The rule is open: endpoints are never evaluated, so integrands with
//! integrable endpoint singularities are fine.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 20;
pub const MAX_PANELS: usize = 1 << 16;

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

fn panel<const D: usize>(f: &impl Fn(f64) -> [f64; D], a: f64, b: f64) -> [f64; D] {
    let (x, w) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = [0.0; D];
    for (xi, wi) in x.iter().zip(w) {
        let v = f(mid + half * xi);
        for d in 0..D {
            acc[d] += wi * v[d];
        }
    }
    acc.map(|s| s * half)
}

/// Integrate `f` over [a, b] to absolute tolerance `tol` (max over components).
///
/// Starts from `initial_panels` equal panels; each panel is accepted once its
/// single-panel and two-half-panel estimates agree to its share of `tol`.
pub fn integrate<const D: usize>(
    f: impl Fn(f64) -> [f64; D],
    a: f64,
    b: f64,
    initial_panels: usize,
    tol: f64,
) -> Result<[f64; D]> {
    let initial = initial_panels.max(1);
    let width = b - a;
    let mut stack: Vec<(f64, f64, [f64; D])> = (0..initial)
        .rev()
        .map(|i| {
            let lo = a + width * i as f64 / initial as f64;
            let hi = a + width * (i + 1) as f64 / initial as f64;
            (lo, hi, panel(&f, lo, hi))
        })
        .collect();
    let mut total = [0.0; D];
    let mut panels = initial;
    let mut worst = 0.0f64;
    while let Some((lo, hi, coarse)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel(&f, lo, mid);
        let right = panel(&f, mid, hi);
        let err = (0..D)
            .map(|d| (left[d] + right[d] - coarse[d]).abs())
            .fold(0.0, f64::max);
        // the floor keeps endpoint singularities from bisecting forever
        let share = (tol * (hi - lo) / width).max(tol * 1e-6);
        if err <= share || panels >= MAX_PANELS {
            if err > share {
                worst = worst.max(err);
            }
            for d in 0..D {
                total[d] += left[d] + right[d];
            }
        } else {
            panels += 1;
            stack.push((mid, hi, right));
            stack.push((lo, mid, left));
        }
    }
    if worst > 0.0 {
        return Err(Error::QuadratureNotConverged {
            tol,
            estimate: worst,
            panels,
        });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        let (x, w) = gauss_legendre(ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let m38: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((m38 - 2.0 / 39.0).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_integral() {
        let got = integrate(|k| [(40.0 * k).cos(), (40.0 * k).sin()], 0.0, std::f64::consts::PI, 4, 1e-12)
            .unwrap();
        assert!(got[0].abs() < 1e-12);
        assert!((got[1] - (1.0 - (40.0 * std::f64::consts::PI).cos()) / 40.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_is_integrable() {
        let got = integrate(|x| [1.0 / x.sqrt()], 0.0, 1.0, 1, 1e-9).unwrap();
        assert!((got[0] - 2.0).abs() < 1e-8);
    }
}
