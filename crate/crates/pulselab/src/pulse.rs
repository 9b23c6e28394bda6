//! Leading-order stationary pulses: the fast homoclinic, take-off and
//! touch-down curves, the pulse amplitude `u0` and the stitched profile.

use std::path::Path;

use crate::error::{PulseError, Result};
use crate::model::{derive_scales, ModelParams};
use crate::slowfield::{self, SlowFieldSolution, SlowGrid};
use crate::terrain::Terrain;

/// Half-width of the fast grid in `xi`.
pub const FAST_HALF_WIDTH: f64 = 40.0;
/// Step of the fast grid.
pub const FAST_STEP: f64 = 0.01;

/// `omega(xi) = 3/2 sech^2(xi/2)`.
pub fn omega(xi: f64) -> f64 {
    let s = 1.0 / (0.5 * xi).cosh();
    1.5 * s * s
}

pub fn omega_prime(xi: f64) -> f64 {
    let s = 1.0 / (0.5 * xi).cosh();
    -1.5 * s * s * (0.5 * xi).tanh()
}

/// Fast homoclinic `v = omega/u0` and `q = dv/dxi`.
pub fn fast_homoclinic(xi: f64, u0: f64) -> (f64, f64) {
    (omega(xi) / u0, omega_prime(xi) / u0)
}

/// `H(v, q; u) = q^2/2 - v^2/2 + u v^3/3`.
pub fn hamiltonian(v: f64, q: f64, u: f64) -> f64 {
    0.5 * q * q - 0.5 * v * v + u * v * v * v / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    TakeOff,
    TouchDown,
}

/// `p = -3 eps/u` (take-off) or `+3 eps/u` (touch-down).
pub fn takeoff_touchdown(u: f64, epsilon: f64, which: Crossing) -> Result<f64> {
    if !(u > 0.0) {
        return Err(PulseError::OutsideDomain(format!("take-off/touch-down curves need u > 0, got {u}")));
    }
    Ok(match which {
        Crossing::TakeOff => -3.0 * epsilon / u,
        Crossing::TouchDown => 3.0 * epsilon / u,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Minus,
    Plus,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Minus => "minus",
            Branch::Plus => "plus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum U0Status {
    TwoRoots,
    /// Zero discriminant: a single double root.
    DoubleRoot,
    /// Negative discriminant, no pulse.
    NoRealRoots,
    /// The smaller root is not positive.
    NonPositive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct U0Roots {
    pub discriminant: f64,
    pub minus: Option<f64>,
    pub plus: Option<f64>,
    pub status: U0Status,
}

impl U0Roots {
    pub fn get(&self, branch: Branch) -> Option<f64> {
        match branch {
            Branch::Minus => self.minus,
            Branch::Plus => self.plus,
        }
    }
}

/// Roots of `mu u0^2 - u_b(0) u0 - 3/C^s(0) = 0`,
/// `u0 = (u_b(0) +- sqrt(u_b(0)^2 + 12 mu / C^s(0))) / (2 mu)`.
pub fn compute_u0(ub0: f64, cs0: f64, mu: f64) -> Result<U0Roots> {
    if !(mu > 0.0) {
        return Err(PulseError::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    if !(cs0 < 0.0) {
        return Err(PulseError::InvalidParameter(format!("C^s(0) must be negative, got {cs0}")));
    }
    let disc = ub0 * ub0 + 12.0 * mu / cs0;
    let scale = ub0 * ub0 + (12.0 * mu / cs0).abs();
    if disc.abs() <= 1e-12 * scale {
        let u = ub0 / (2.0 * mu);
        let status = if u > 0.0 { U0Status::DoubleRoot } else { U0Status::NonPositive };
        let root = (u > 0.0).then_some(u);
        return Ok(U0Roots { discriminant: 0.0, minus: root, plus: root, status });
    }
    if disc < 0.0 {
        return Ok(U0Roots { discriminant: disc, minus: None, plus: None, status: U0Status::NoRealRoots });
    }
    let sq = disc.sqrt();
    // the product of the roots is -3/(mu C^s); dividing avoids cancellation
    let big = (ub0 + ub0.signum() * sq) / (2.0 * mu);
    let small = -3.0 / (mu * cs0 * big);
    let (minus, plus) = if big >= small { (small, big) } else { (big, small) };
    if minus > 0.0 {
        Ok(U0Roots { discriminant: disc, minus: Some(minus), plus: Some(plus), status: U0Status::TwoRoots })
    } else {
        Ok(U0Roots {
            discriminant: disc,
            minus: None,
            plus: (plus > 0.0).then_some(plus),
            status: U0Status::NonPositive,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExistenceReport {
    pub ub0: f64,
    pub cs0: f64,
    pub cu0: f64,
    pub mu: f64,
    pub discriminant: f64,
    /// `u_b(0) > 0`
    pub positive_background: bool,
    /// `C^s(0) < 0`
    pub negative_slope: bool,
    /// `u_b(0)^2 + 12 mu / C^s(0) > 0`
    pub positive_discriminant: bool,
    pub exists: bool,
    pub roots: Option<U0Roots>,
}

impl ExistenceReport {
    /// Name of the first failed condition.
    pub fn failure(&self) -> Option<&'static str> {
        if !self.positive_background {
            Some("u_b(0) <= 0")
        } else if !self.negative_slope {
            Some("C^s(0) >= 0")
        } else if !self.positive_discriminant {
            Some("u_b(0)^2 + 12 mu/C^s(0) <= 0")
        } else {
            None
        }
    }
}

pub fn existence_from_solution(sol: &SlowFieldSolution, mu: f64) -> Result<ExistenceReport> {
    let ub0 = sol.ub0();
    let (cs0, cu0) = (sol.cs0, sol.cu0);
    let positive_background = ub0 > 0.0;
    let negative_slope = cs0 < 0.0;
    let (discriminant, roots) = if negative_slope {
        let r = compute_u0(ub0, cs0, mu)?;
        (ub0 * ub0 + 12.0 * mu / cs0, Some(r))
    } else {
        (f64::NAN, None)
    };
    // a double root still yields a (degenerate) pulse
    let positive_discriminant = roots.is_some_and(|r| matches!(r.status, U0Status::TwoRoots | U0Status::DoubleRoot));
    Ok(ExistenceReport {
        ub0,
        cs0,
        cu0,
        mu,
        discriminant,
        positive_background,
        negative_slope,
        positive_discriminant,
        exists: positive_background && negative_slope && positive_discriminant,
        roots,
    })
}

pub fn existence_check(terrain: &Terrain, params: &ModelParams) -> Result<ExistenceReport> {
    let sol = slowfield::solve(terrain, &SlowGrid::for_terrain(terrain))?;
    existence_from_solution(&sol, derive_scales(params).mu)
}

/// Leading-order profile in the fast variable `xi` and the slow variable `x = eps^2 mu xi`.
///
/// `p` is the first-order variable with `du/dxi = eps p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseProfile {
    pub params: ModelParams,
    pub u0: f64,
    pub branch: Branch,
    pub epsilon: f64,
    pub mu: f64,
    pub position: f64,
    /// Seam location `1/sqrt(eps)` in `xi`.
    pub seam: f64,
    pub xi: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub q: Vec<f64>,
    pub slow_x: Vec<f64>,
    pub slow_u: Vec<f64>,
    pub slow_p: Vec<f64>,
}

impl PulseProfile {
    /// Physical coordinates and amplitudes `(x, U, V)` of the fast-grid samples.
    pub fn physical(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let ModelParams { a, m, d } = self.params;
        let sm = m.sqrt();
        let x = self.xi.iter().map(|xi| d / sm * xi).collect();
        let u = self.u.iter().map(|u| m * sm * d / a * u).collect();
        let v = self.v.iter().map(|v| a / (d * sm) * v).collect();
        (x, u, v)
    }

    /// Columns `xi, u, p, v, q, x, U, V`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let (x, big_u, big_v) = self.physical();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["xi", "u", "p", "v", "q", "x", "U", "V"])?;
        for i in 0..self.xi.len() {
            w.write_record(
                [self.xi[i], self.u[i], self.p[i], self.v[i], self.q[i], x[i], big_u[i], big_v[i]]
                    .map(crate::fmt_g12),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Columns `x, u, p` on the slow grid.
    pub fn write_slow_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "u", "p"])?;
        for i in 0..self.slow_x.len() {
            w.write_record([self.slow_x[i], self.slow_u[i], self.slow_p[i]].map(crate::fmt_g12))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn assemble_profile(terrain: &Terrain, params: &ModelParams, branch: Branch) -> Result<PulseProfile> {
    let sol = slowfield::solve(terrain, &SlowGrid::for_terrain(terrain))?;
    assemble_from_solution(&sol, params, branch)
}

pub fn assemble_from_solution(sol: &SlowFieldSolution, params: &ModelParams, branch: Branch) -> Result<PulseProfile> {
    let sc = derive_scales(params);
    let (eps, mu) = (sc.epsilon, sc.mu);
    let report = existence_from_solution(sol, mu)?;
    if let Some(why) = report.failure() {
        return Err(PulseError::NoPulse(why.into()));
    }
    let u0 = report
        .roots
        .and_then(|r| r.get(branch))
        .ok_or_else(|| PulseError::NoPulse(format!("no positive root on the {} branch", branch.label())))?;
    let ub0 = sol.ub0();
    let jump = ub0 - mu * u0;

    let slow_u_at = |x: f64| {
        let s = sol.sample(x);
        let (ud, pd) = if x >= 0.0 { (s.u_plus, s.p_plus) } else { (s.u_minus, s.p_minus) };
        ((s.u_b - jump * ud) / mu, eps * (s.p_b - jump * pd))
    };
    let slow_x = sol.grid.clone();
    let (slow_u, slow_p): (Vec<f64>, Vec<f64>) = slow_x.iter().map(|&x| slow_u_at(x)).unzip();

    let c = sol.centre();
    let p_right = eps * (sol.p_b[c] - jump * sol.p_plus[c]);
    let p_left = eps * (sol.p_b[c] - jump * sol.p_minus[c]);
    let p_mid = 0.5 * (p_left + p_right);

    let n = (2.0 * FAST_HALF_WIDTH / FAST_STEP).round() as usize + 1;
    let xi: Vec<f64> = (0..n).map(|i| -FAST_HALF_WIDTH + i as f64 * FAST_STEP).collect();
    let seam = 1.0 / eps.sqrt();
    let scale = eps * eps * mu;
    let mut u = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for &z in &xi {
        let (vf, qf) = fast_homoclinic(z, u0);
        let t = (0.5 * z).tanh();
        let pf = p_mid + eps / u0 * 4.5 * (t - t * t * t / 3.0);
        // linear blend over two cells centred on the seam; w = 1 is pure slow field
        let w = ((z.abs() - seam + FAST_STEP) / (2.0 * FAST_STEP)).clamp(0.0, 1.0);
        if w > 0.0 {
            let (us, ps) = slow_u_at(scale * z);
            u.push((1.0 - w) * u0 + w * us);
            p.push((1.0 - w) * pf + w * ps);
            v.push((1.0 - w) * vf);
            q.push((1.0 - w) * qf);
        } else {
            u.push(u0);
            p.push(pf);
            v.push(vf);
            q.push(qf);
        }
    }
    Ok(PulseProfile {
        params: *params,
        u0,
        branch,
        epsilon: eps,
        mu,
        position: 0.0,
        seam,
        xi,
        u,
        p,
        v,
        q,
        slow_x,
        slow_u,
        slow_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_derivative() {
        let h = 1e-5;
        for xi in [-3.0, -0.4, 0.0, 1.7] {
            let fd = (omega(xi + h) - omega(xi - h)) / (2.0 * h);
            assert!((fd - omega_prime(xi)).abs() < 1e-9);
        }
    }

    #[test]
    fn double_root() {
        let r = compute_u0(1.0, -1.0, 1.0 / 12.0).unwrap();
        assert_eq!(r.status, U0Status::DoubleRoot);
        assert!((r.minus.unwrap() - 6.0).abs() < 1e-12);
    }
}
