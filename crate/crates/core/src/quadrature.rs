//! Adaptive Gauss-Legendre quadrature on finite intervals.
//!
//! Every integrand in this crate is a smooth Gaussian-weighted function, so a
//! fixed-order Gauss-Legendre panel refined by bisection converges quickly.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 20;
const MAX_DEPTH: u32 = 40;

/// Default absolute tolerance for expectations.
pub const DEFAULT_TOL: f64 = 1e-10;

struct Rule {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let (nodes, weights) = legendre_nodes(ORDER);
        let mut r = Rule {
            nodes: [0.0; ORDER],
            weights: [0.0; ORDER],
        };
        r.nodes.copy_from_slice(&nodes);
        r.weights.copy_from_slice(&weights);
        r
    })
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1],
/// found by Newton iteration on P_n from the Chebyshev initial guess.
pub fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let r = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    r.nodes
        .iter()
        .zip(r.weights.iter())
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Panels are bisected until a panel agrees with the sum of its halves.
/// Fails with [`Error::NumericFailure`] on non-finite values or when the
/// recursion depth is exhausted.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::NumericFailure(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let whole = panel(&f, a, b);
    let v = refine(&f, a, b, whole, tol, 0)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericFailure("quadrature produced a non-finite value".into()))
    }
}

fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let left = panel(f, a, mid);
    let right = panel(f, mid, b);
    let halves = left + right;
    if !halves.is_finite() {
        return Err(Error::NumericFailure(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    let err = (halves - whole).abs();
    // Relative floor so large-magnitude integrals terminate at machine precision.
    if err <= tol.max(64.0 * f64::EPSILON * halves.abs()) {
        return Ok(halves);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::NumericFailure(format!(
            "quadrature did not converge on [{a}, {b}] (error estimate {err:e})"
        )));
    }
    Ok(refine(f, a, mid, left, 0.5 * tol, depth + 1)? + refine(f, mid, b, right, 0.5 * tol, depth + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        let (x, w) = legendre_nodes(5);
        // Degree 9 is the highest exact degree for n = 5.
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_normalizes() {
        let v = integrate(
            |x| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            -10.0,
            10.0,
            1e-12,
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let r = integrate(|x| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, 1e-10);
        assert!(matches!(r, Err(Error::NumericFailure(_))));
        let r = integrate(|x| 1.0 / x, 0.0, 1.0, 1e-10);
        assert!(matches!(r, Err(Error::NumericFailure(_))));
    }
}
