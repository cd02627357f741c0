//! One-dimensional maximization helpers: log-spaced grid scans and
//! golden-section refinement.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Returns `(x_max, f_max)`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (b - a).abs() <= tol * (1.0 + x1.abs().max(x2.abs())) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `n` log-spaced magnitudes from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (l, h) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l + (h - l) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Scans `xs`, then refines around the best point with golden-section search
/// restricted to its neighbours. Returns `(x, f(x))` of the best point found.
pub fn scan_and_refine<F: Fn(f64) -> f64>(f: F, xs: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty());
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let (best, _) = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let lo = xs[best.saturating_sub(1)];
    let hi = xs[(best + 1).min(xs.len() - 1)];
    let mut out = (xs[best], vals[best]);
    if hi > lo {
        let (x, v) = golden_section_max(&f, lo, hi, 1e-12);
        if v > out.1 {
            out = (x, v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_vertex() {
        let (x, v) = golden_section_max(|x| -(x - 1.3) * (x - 1.3) + 2.0, -5.0, 5.0, 1e-12);
        assert!((x - 1.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scan_refines_between_grid_points() {
        let xs = log_space(0.01, 100.0, 9);
        let (x, _) = scan_and_refine(|x: f64| -(x.ln() - 0.7).powi(2), &xs);
        assert!((x.ln() - 0.7).abs() < 1e-5);
    }
}
