//! Model parameters, derived small parameters and the assumption report.

use crate::error::{PulseError, Result};
use crate::terrain::Terrain;

/// Rainfall `a`, mortality `m` and diffusivity ratio `d` of the model
///
/// ```text
/// U_t = U_xx + f U_x + g U + a - U - U V^2
/// V_t = D^2 V_xx - m V + U V^2
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub m: f64,
    pub d: f64,
}

impl ModelParams {
    pub fn new(a: f64, m: f64, d: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("m", m), ("D", d)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(PulseError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { a, m, d })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSet {
    pub epsilon: f64,
    pub mu: f64,
    pub tau: f64,
    pub nu: f64,
}

pub fn derive_scales(p: &ModelParams) -> ScaleSet {
    let sm = p.m.sqrt();
    ScaleSet {
        epsilon: p.a / p.m,
        mu: p.m * sm * p.d / (p.a * p.a),
        tau: p.d * p.a * p.a / (p.m * sm),
        nu: p.m * p.m * p.d / (p.a * p.a),
    }
}

/// Threshold below which epsilon counts as small.
pub const EPSILON_SMALL: f64 = 0.1;
/// Sup-norm bound used for the O(1) coefficient check.
pub const COEFF_BOUND: f64 = 10.0;
/// Far-field coefficients below this magnitude count as decayed.
pub const FAR_FIELD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// epsilon = a/m is small.
    pub a1: bool,
    pub epsilon: f64,
    /// f odd and g even.
    pub a2: bool,
    pub odd_residual: f64,
    pub even_residual: f64,
    /// sup sqrt(f^2+g^2) < 1/4.
    pub a3: bool,
    pub delta: f64,
    /// f, g vanish at both ends.
    pub a4: bool,
    pub far_field: [(f64, f64); 2],
    /// f, g uniformly bounded.
    pub a5: bool,
    pub sup_f: f64,
    pub sup_g: f64,
}

pub fn check_assumptions(params: &ModelParams, terrain: &Terrain) -> AssumptionReport {
    let eps = derive_scales(params).epsilon;
    let l = crate::terrain::DELTA_HALF_WIDTH;
    let n = 4001;
    let (odd_residual, even_residual) = terrain.symmetry_residuals(l, n);
    let mut sup_f = 0.0f64;
    let mut sup_g = 0.0f64;
    for i in 0..n {
        let x = -l + 2.0 * l * i as f64 / (n - 1) as f64;
        let (f, g) = terrain.fg(x);
        sup_f = sup_f.max(f.abs());
        sup_g = sup_g.max(g.abs());
    }
    let lo = terrain.fg(-l);
    let hi = terrain.fg(l);
    let decayed = |(f, g): (f64, f64)| f.abs() < FAR_FIELD_TOL && g.abs() < FAR_FIELD_TOL;
    AssumptionReport {
        a1: eps < EPSILON_SMALL,
        epsilon: eps,
        a2: odd_residual <= 1e-12 && even_residual <= 1e-12,
        odd_residual,
        even_residual,
        a3: terrain.delta < 0.25,
        delta: terrain.delta,
        a4: terrain.period().is_none() && decayed(lo) && decayed(hi),
        far_field: [lo, hi],
        a5: sup_f.is_finite() && sup_g.is_finite() && sup_f <= COEFF_BOUND && sup_g <= COEFF_BOUND,
        sup_f,
        sup_g,
    }
}
