//! Exponential-dichotomy constants and the geometric bounds built on them.

use nalgebra::Matrix2;

use crate::error::{PulseError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichotomyConstants {
    pub k_aut: f64,
    pub rho_aut: f64,
    pub k: f64,
    pub rho: f64,
    pub delta: f64,
}

fn check_validity(k_aut: f64, rho_aut: f64, delta: f64) -> Result<()> {
    if !(k_aut > 0.0 && rho_aut > 0.0 && delta >= 0.0) {
        return Err(PulseError::InvalidParameter(format!(
            "need K_aut > 0, rho_aut > 0, delta >= 0 (got {k_aut}, {rho_aut}, {delta})"
        )));
    }
    let limit = rho_aut / (4.0 * k_aut * k_aut);
    if delta >= limit {
        return Err(PulseError::NoDichotomy { delta, limit });
    }
    Ok(())
}

/// Constants of the perturbed dichotomy: `K = 5/2 K_aut^2`, `rho = rho_aut - 2 K_aut delta`.
pub fn roughness_constants(k_aut: f64, rho_aut: f64, delta: f64) -> Result<DichotomyConstants> {
    check_validity(k_aut, rho_aut, delta)?;
    Ok(DichotomyConstants {
        k_aut,
        rho_aut,
        k: 2.5 * k_aut * k_aut,
        rho: rho_aut - 2.0 * k_aut * delta,
        delta,
    })
}

/// Bound on the distance between perturbed and autonomous projections.
pub fn projection_distance_bound(k_aut: f64, rho_aut: f64, delta: f64) -> Result<f64> {
    check_validity(k_aut, rho_aut, delta)?;
    Ok(4.0 * k_aut.powi(3) * delta / rho_aut)
}

/// Bound on the distance between perturbed and autonomous bounded solutions for forcing norm `f_norm`.
pub fn bounded_solution_distance_bound(c: &DichotomyConstants, f_norm: f64) -> f64 {
    4.0 * c.delta * c.k_aut * c.k / (c.rho_aut * c.rho) * f_norm
}

/// Closeness of unit vectors spanning perturbed and autonomous projection lines.
pub fn projection_vector_closeness(delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(PulseError::InvalidParameter(format!("delta must be non-negative, got {delta}")));
    }
    Ok((8.0 * delta).sqrt())
}

/// Endpoint of a slope interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    NegInfinity,
    PosInfinity,
}

impl Bound {
    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            _ => None,
        }
    }
}

/// Admissible deviation `C - C_aut` of a slope from its autonomous value.
///
/// When `disjoint` is set the set is the complement `(-inf, C_max] U [C_min, inf)`
/// of the open gap between the two bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeInterval {
    pub c_aut: f64,
    pub delta: f64,
    pub c_min: Bound,
    pub c_max: Bound,
    pub disjoint: bool,
}

const SINGULAR_REL: f64 = 1e-12;

impl SlopeInterval {
    pub fn contains(&self, c: f64) -> bool {
        let above_min = match self.c_min {
            Bound::Finite(v) => c >= v,
            Bound::NegInfinity => true,
            Bound::PosInfinity => false,
        };
        let below_max = match self.c_max {
            Bound::Finite(v) => c <= v,
            Bound::PosInfinity => true,
            Bound::NegInfinity => false,
        };
        if self.disjoint {
            above_min || below_max
        } else {
            above_min && below_max
        }
    }
}

pub fn slope_interval(delta: f64, c_aut: f64) -> Result<SlopeInterval> {
    if !(delta >= 0.0) || !c_aut.is_finite() {
        return Err(PulseError::InvalidParameter(format!("bad slope interval input ({delta}, {c_aut})")));
    }
    if delta >= 0.25 {
        return Err(PulseError::NoDichotomy { delta, limit: 0.25 });
    }
    let s = 2.0 * 2f64.sqrt() * delta.sqrt() * (1.0 - 2.0 * delta).sqrt();
    let numer = (1.0 + c_aut * c_aut) * s;
    let base = 1.0 - 4.0 * delta;
    let shift = c_aut * s;
    let root = c_aut / (1.0 + c_aut * c_aut).sqrt();
    // singular where the denominators vanish, i.e. delta = (1 +- C/sqrt(1+C^2))/4
    let singular = |den: f64, delta_sing: f64| {
        den.abs() <= SINGULAR_REL * (base.abs() + shift.abs()).max(f64::MIN_POSITIVE)
            || (delta - delta_sing).abs() <= SINGULAR_REL * delta_sing.max(f64::MIN_POSITIVE)
    };
    let den_min = base + shift;
    let den_max = base - shift;
    let c_min = if delta == 0.0 {
        Bound::Finite(0.0)
    } else if singular(den_min, 0.25 * (1.0 + root)) {
        Bound::NegInfinity
    } else {
        Bound::Finite(-numer / den_min)
    };
    let c_max = if delta == 0.0 {
        Bound::Finite(0.0)
    } else if singular(den_max, 0.25 * (1.0 - root)) {
        Bound::PosInfinity
    } else {
        Bound::Finite(numer / den_max)
    };
    let disjoint = matches!((c_min, c_max), (Bound::Finite(lo), Bound::Finite(hi)) if hi < lo);
    Ok(SlopeInterval { c_aut, delta, c_min, c_max, disjoint })
}

/// Spectral norm of `Phi(x) P Phi(s)^{-1}` for the autonomous planar system
/// `A0 = [[0,1],[1,0]]` with `P` the projection onto the decaying direction.
pub fn autonomous_stable_propagator_norm(x: f64, s: f64) -> f64 {
    let a0 = Matrix2::new(0.0, 1.0, 1.0, 0.0);
    let p = Matrix2::new(0.5, -0.5, -0.5, 0.5);
    let phi_x = (a0 * x).exp();
    let phi_s_inv = (a0 * (-s)).exp();
    spectral_norm(&(phi_x * p * phi_s_inv))
}

pub fn spectral_norm(m: &Matrix2<f64>) -> f64 {
    m.svd(false, false).singular_values.max()
}
