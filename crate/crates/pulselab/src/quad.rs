//! Thin wrapper over double-exponential quadrature.

const CHUNK: f64 = 4.0;
const TOL: f64 = 1e-14;

/// Integral of `f` over `[a, b]`, split into chunks of moderate length so
/// that decaying or mildly oscillating integrands are resolved.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -integrate(f, b, a);
    }
    let pieces = ((b - a) / CHUNK).ceil().max(1.0) as usize;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let lo = a + h * k as f64;
            let hi = if k + 1 == pieces { b } else { lo + h };
            quadrature::integrate(&f, lo, hi, TOL).integral
        })
        .sum()
}

const GL_ORDER: usize = 16;

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Golub-Welsch).
fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let j = nalgebra::DMatrix::from_fn(n, n, |i, k| {
            if i.abs_diff(k) == 1 {
                let m = i.max(k) as f64;
                m / (4.0 * m * m - 1.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = j.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> =
            (0..n).map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2))).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    })
}

/// Composite Gauss-Legendre rule with `panels` equal panels. Unlike
/// [`integrate`] the result depends smoothly on parameters of `f`.
pub fn integrate_fixed(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre();
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let mid = a + h * (k as f64 + 0.5);
            x.iter().zip(w).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}
