//! Banded solvers used by the finite-difference boundary value problems.

use num_complex::{Complex64, ComplexFloat};

use crate::error::{PulseError, Result};

/// Scalars the banded solvers work with.
pub trait Scalar: ComplexFloat {
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Thomas algorithm for `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
/// `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal<T: Scalar>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    let scale = diag.iter().fold(0.0f64, |a, d| a.max(d.modulus()));
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut smallest = f64::INFINITY;
    let mut denom = diag[0];
    for i in 0..n {
        if i > 0 {
            denom = diag[i] - sub[i] * c[i - 1];
        }
        let mag = denom.modulus();
        if !(mag > 1e-300 && mag > scale * 1e-15) {
            return Err(PulseError::SingularSystem {
                context: format!("tridiagonal elimination, row {i}"),
                condition: scale / mag.max(f64::MIN_POSITIVE),
            });
        }
        smallest = smallest.min(mag);
        if i + 1 < n {
            c[i] = sup[i] / denom;
        }
        d[i] = if i == 0 { rhs[0] / denom } else { (rhs[i] - sub[i] * d[i - 1]) / denom };
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] = x[i] - c[i] * next;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(PulseError::SingularSystem {
            context: "tridiagonal back substitution".into(),
            condition: scale / smallest,
        });
    }
    Ok(x)
}

/// Cyclic tridiagonal system: row 0 couples to `x[n-1]` through `sub[0]`,
/// row n-1 couples to `x[0]` through `sup[n-1]` (Sherman-Morrison).
pub fn solve_cyclic_tridiagonal<T: Scalar>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    if n < 3 {
        return Err(PulseError::InvalidParameter("cyclic system needs n >= 3".into()));
    }
    let alpha = sup[n - 1];
    let beta = sub[0];
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let x = solve_tridiagonal(sub, &bb, sup, rhs)?;
    let mut u = vec![T::zero(); n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(sub, &bb, sup, &u)?;
    let fact = (x[0] + beta * x[n - 1] / gamma) / (T::one() + z[0] + beta * z[n - 1] / gamma);
    Ok(x.iter().zip(&z).map(|(&xi, &zi)| xi - fact * zi).collect())
}

/// Tridiagonal matrix-vector product with the same band conventions.
pub fn tridiagonal_apply<T: Scalar>(sub: &[T], diag: &[T], sup: &[T], x: &[T]) -> Vec<T> {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut s = diag[i] * x[i];
            if i > 0 {
                s = s + sub[i] * x[i - 1];
            }
            if i + 1 < n {
                s = s + sup[i] * x[i + 1];
            }
            s
        })
        .collect()
}
