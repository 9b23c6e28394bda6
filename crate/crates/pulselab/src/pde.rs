//! Direct simulation of
//!
//! ```text
//! U_t = U_xx + f U_x + g U + a - U - U V^2
//! V_t = D^2 V_xx - m V + U V^2
//! ```
//!
//! Diffusion is backward Euler. By default the linear terms and the uptake
//! `-U V^2` (linear in `U`) sit on the implicit diagonal, while advection and
//! the `U V^2` source of `V` stay explicit; `ReactionTreatment::Explicit`
//! keeps every reaction explicit instead.

use std::path::Path;

use crate::error::{PulseError, Result};
use crate::linalg::solve_cyclic_tridiagonal;
use crate::model::{derive_scales, ModelParams};
use crate::terrain::Terrain;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Neumann,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReactionTreatment {
    LinearlyImplicit,
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeState {
    pub x: Vec<f64>,
    pub dx: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
    pub boundary: Boundary,
    /// Number of negative samples reset to zero so far.
    pub clipped: usize,
}

impl PdeState {
    /// Uniform grid on `[lo, hi]`; periodic grids drop the duplicate right end.
    pub fn grid(lo: f64, hi: f64, dx: f64, boundary: Boundary) -> Result<Vec<f64>> {
        if !(hi > lo) || !(dx > 0.0) {
            return Err(PulseError::InvalidParameter(format!("bad PDE grid [{lo}, {hi}] with dx = {dx}")));
        }
        let cells = ((hi - lo) / dx).round().max(4.0) as usize;
        let h = (hi - lo) / cells as f64;
        let n = match boundary {
            Boundary::Neumann => cells + 1,
            Boundary::Periodic => cells,
        };
        Ok((0..n).map(|i| lo + i as f64 * h).collect())
    }

    pub fn new(x: Vec<f64>, u: Vec<f64>, v: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if x.len() < 5 || u.len() != x.len() || v.len() != x.len() {
            return Err(PulseError::InvalidParameter("state arrays must match the grid (>= 5 points)".into()));
        }
        let dx = x[1] - x[0];
        Ok(Self { x, dx, u, v, t: 0.0, boundary, clipped: 0 })
    }

    /// Columns `x, U, V`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "U", "V"])?;
        for i in 0..self.x.len() {
            w.write_record([self.x[i], self.u[i], self.v[i]].map(crate::fmt_g12))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Default spacing `D/(8 sqrt m)`.
pub fn default_dx(p: &ModelParams) -> f64 {
    p.d / (8.0 * p.m.sqrt())
}

/// Default step `0.1 min(1, 1/m)`.
pub fn default_dt(p: &ModelParams) -> f64 {
    0.1 * (1.0f64).min(1.0 / p.m)
}

/// Leading-order flat-terrain pulses at `positions` on the given grid.
pub fn seed_pulses(params: &ModelParams, x: &[f64], positions: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let ModelParams { a, m, d } = *params;
    let mu = derive_scales(params).mu;
    let u0 = if 12.0 * mu < 1.0 { (1.0 - (1.0 - 12.0 * mu).sqrt()) / (2.0 * mu) } else { 3.0 };
    let sm = m.sqrt();
    let u = x
        .iter()
        .map(|&xi| a * positions.iter().map(|p| 1.0 - (1.0 - mu * u0) * (-(xi - p).abs()).exp()).product::<f64>())
        .collect();
    let v = x
        .iter()
        .map(|&xi| {
            positions
                .iter()
                .map(|p| {
                    let s = 1.0 / (sm * (xi - p) / (2.0 * d)).cosh();
                    a / (d * sm) * 1.5 / u0 * s * s
                })
                .sum()
        })
        .collect();
    (u, v)
}

/// Stepping options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub dt: f64,
    pub reaction: ReactionTreatment,
}

/// LU factors of a tridiagonal matrix without pivoting.
struct Thomas {
    sub: Vec<f64>,
    c: Vec<f64>,
    inv: Vec<f64>,
}

impl Thomas {
    fn new(sub: &[f64], diag: &[f64], sup: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut c = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let den = diag[i] - if i > 0 { sub[i] * prev } else { 0.0 };
            if !(den.abs() > 1e-14 * diag[i].abs()) {
                return Err(PulseError::SingularSystem { context: format!("implicit step, row {i}"), condition: f64::INFINITY });
            }
            inv[i] = 1.0 / den;
            prev = if i + 1 < n { sup[i] * inv[i] } else { 0.0 };
            c[i] = prev;
        }
        Ok(Self { sub: sub.to_vec(), c, inv })
    }

    fn solve(&self, x: &mut [f64]) {
        let n = x.len();
        x[0] *= self.inv[0];
        for i in 1..n {
            x[i] = (x[i] - self.sub[i] * x[i - 1]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c[i] * x[i + 1];
        }
    }
}

/// Precomputed coefficients for repeated steps on one grid.
pub struct Stepper {
    params: ModelParams,
    opts: StepOptions,
    f: Vec<f64>,
    g: Vec<f64>,
    boundary: Boundary,
    dx: f64,
    /// Factored constant `V` system (Neumann only).
    v_factor: Option<Thomas>,
    /// Factored constant `U` system for explicit reactions (Neumann only).
    u_factor: Option<Thomas>,
}

impl Stepper {
    pub fn new(params: &ModelParams, terrain: &Terrain, state: &PdeState, opts: StepOptions) -> Result<Self> {
        if !(opts.dt > 0.0) {
            return Err(PulseError::InvalidParameter(format!("dt must be positive, got {}", opts.dt)));
        }
        let mut f = Vec::with_capacity(state.x.len());
        let mut g = Vec::with_capacity(state.x.len());
        for &x in &state.x {
            let (fx, gx) = terrain.eval(x)?;
            f.push(fx);
            g.push(gx);
        }
        let mut s = Self {
            params: *params,
            opts,
            f,
            g,
            boundary: state.boundary,
            dx: state.dx,
            v_factor: None,
            u_factor: None,
        };
        if s.boundary == Boundary::Neumann {
            let n = state.x.len();
            let (dt, m, d) = (opts.dt, params.m, params.d);
            let vm = if opts.reaction == ReactionTreatment::LinearlyImplicit { dt * m } else { 0.0 };
            let (sub, diag, sup) = s.bands(d * d, |_| vm, n);
            s.v_factor = Some(Thomas::new(&sub, &diag, &sup)?);
            if opts.reaction == ReactionTreatment::Explicit {
                let (sub, diag, sup) = s.bands(1.0, |_| 0.0, n);
                s.u_factor = Some(Thomas::new(&sub, &diag, &sup)?);
            }
        }
        Ok(s)
    }

    fn solve(&self, sub: &[f64], diag: &[f64], sup: &[f64], mut rhs: Vec<f64>) -> Result<Vec<f64>> {
        match self.boundary {
            Boundary::Neumann => {
                Thomas::new(sub, diag, sup)?.solve(&mut rhs);
                Ok(rhs)
            }
            Boundary::Periodic => solve_cyclic_tridiagonal(sub, diag, sup, &rhs),
        }
    }

    /// Bands of `I - dt k d_xx` plus the extra diagonal.
    fn bands(&self, k: f64, extra: impl Fn(usize) -> f64, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let r = self.opts.dt * k / (self.dx * self.dx);
        let mut sub = vec![-r; n];
        let mut sup = vec![-r; n];
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + 2.0 * r + extra(i)).collect();
        if self.boundary == Boundary::Neumann {
            sup[0] = -2.0 * r;
            sub[n - 1] = -2.0 * r;
        }
        (sub, diag, sup)
    }

    fn solve_constant(&self, k: f64, extra: f64, factor: &Option<Thomas>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
        match factor {
            Some(th) => {
                th.solve(&mut rhs);
                Ok(rhs)
            }
            None => {
                let (sub, diag, sup) = self.bands(k, |_| extra, rhs.len());
                self.solve(&sub, &diag, &sup, rhs)
            }
        }
    }

    fn ux(&self, u: &[f64], i: usize) -> f64 {
        let n = u.len();
        match self.boundary {
            Boundary::Neumann if i == 0 || i == n - 1 => 0.0,
            Boundary::Neumann => (u[i + 1] - u[i - 1]) / (2.0 * self.dx),
            Boundary::Periodic => (u[(i + 1) % n] - u[(i + n - 1) % n]) / (2.0 * self.dx),
        }
    }

    pub fn step(&self, s: &mut PdeState) -> Result<()> {
        let ModelParams { a, m, d } = self.params;
        let dt = self.opts.dt;
        let n = s.x.len();
        let (un, vn) = (&s.u, &s.v);
        let (u_new, v_new) = match self.opts.reaction {
            ReactionTreatment::LinearlyImplicit if self.boundary == Boundary::Neumann => {
                let r = dt / (self.dx * self.dx);
                let mut u1: Vec<f64> = (0..n).map(|i| un[i] + dt * (a + self.f[i] * self.ux(un, i))).collect();
                let mut c = vec![0.0; n];
                // fused factor-and-forward sweep; off-diagonals are -r except -2r at the walls
                let mut prev_c = 0.0;
                for i in 0..n {
                    let diag = 1.0 + 2.0 * r + dt * (1.0 - self.g[i] + vn[i] * vn[i]);
                    let sub = if i == n - 1 { -2.0 * r } else { -r };
                    let sup = if i == 0 { -2.0 * r } else { -r };
                    let den = if i == 0 { diag } else { diag - sub * prev_c };
                    let inv = 1.0 / den;
                    if i > 0 {
                        u1[i] -= sub * u1[i - 1];
                    }
                    u1[i] *= inv;
                    prev_c = sup * inv;
                    c[i] = prev_c;
                }
                for i in (0..n - 1).rev() {
                    u1[i] -= c[i] * u1[i + 1];
                }
                let rhs: Vec<f64> = (0..n).map(|i| vn[i] + dt * u1[i] * vn[i] * vn[i]).collect();
                let v1 = self.solve_constant(d * d, dt * m, &self.v_factor, rhs)?;
                (u1, v1)
            }
            ReactionTreatment::LinearlyImplicit => {
                let (sub, diag, sup) = self.bands(1.0, |i| dt * (1.0 - self.g[i] + vn[i] * vn[i]), n);
                let rhs: Vec<f64> = (0..n).map(|i| un[i] + dt * (a + self.f[i] * self.ux(un, i))).collect();
                let u1 = self.solve(&sub, &diag, &sup, rhs)?;
                let rhs: Vec<f64> = (0..n).map(|i| vn[i] + dt * u1[i] * vn[i] * vn[i]).collect();
                let v1 = self.solve_constant(d * d, dt * m, &self.v_factor, rhs)?;
                (u1, v1)
            }
            ReactionTreatment::Explicit => {
                let rhs: Vec<f64> = (0..n)
                    .map(|i| {
                        let uv2 = un[i] * vn[i] * vn[i];
                        un[i] + dt * (self.f[i] * self.ux(un, i) + self.g[i] * un[i] + a - un[i] - uv2)
                    })
                    .collect();
                let u1 = self.solve_constant(1.0, 0.0, &self.u_factor, rhs)?;
                let rhs: Vec<f64> = (0..n).map(|i| vn[i] + dt * (-m * vn[i] + un[i] * vn[i] * vn[i])).collect();
                let v1 = self.solve_constant(d * d, 0.0, &self.v_factor, rhs)?;
                (u1, v1)
            }
        };
        if let Some(i) = (0..n).find(|&i| !(u_new[i].is_finite() && v_new[i].is_finite())) {
            return Err(PulseError::Breakdown(format!(
                "non-finite value at x = {} after step t = {} (dt = {dt}, U = {}, V = {})",
                s.x[i], s.t, u_new[i], v_new[i]
            )));
        }
        s.u = u_new;
        s.v = v_new;
        for w in s.u.iter_mut().chain(s.v.iter_mut()) {
            if *w < 0.0 {
                *w = 0.0;
                s.clipped += 1;
            } else if *w < 1e-250 {
                // keeps subnormals out of the tails
                *w = 0.0;
            }
        }
        s.t += dt;
        Ok(())
    }
}

/// Single IMEX step.
pub fn step(state: &mut PdeState, params: &ModelParams, terrain: &Terrain, opts: StepOptions) -> Result<()> {
    Stepper::new(params, terrain, state, opts)?.step(state)
}

/// Positions of the local maxima of `V` that exceed ten times the far-field
/// level and a tenth of the global maximum, refined by a parabola through
/// three samples.
pub fn locate_pulses(s: &PdeState) -> Vec<f64> {
    let v = &s.v;
    let n = v.len();
    let far = v[0].abs().max(v[n - 1].abs()).max(1e-300);
    let vmax = v.iter().cloned().fold(0.0, f64::max);
    let periodic = s.boundary == Boundary::Periodic;
    let mut out = vec![];
    for i in 0..n {
        if !periodic && (i == 0 || i == n - 1) {
            continue;
        }
        let (l, r) = ((i + n - 1) % n, (i + 1) % n);
        let (a, b, c) = (v[l], v[i], v[r]);
        if !(b > a && b >= c) || !(b > 10.0 * far) || b < 0.1 * vmax {
            continue;
        }
        let den = a - 2.0 * b + c;
        let off = if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 };
        out.push(s.x[i] + off * s.dx);
    }
    out.sort_by(f64::total_cmp);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub step: StepOptions,
    pub t_end: f64,
    pub sample_dt: f64,
    /// Stop once `max |dU/dt|, |dV/dt|` drops below this value.
    pub steady_tol: f64,
    pub keep_snapshots: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeRun {
    pub times: Vec<f64>,
    pub tracks: Vec<Vec<f64>>,
    pub snapshots: Vec<PdeState>,
    pub final_state: PdeState,
    pub steady: bool,
    /// Last measured `max |dU/dt|, |dV/dt|`.
    pub rate: f64,
    pub steps: usize,
}

impl PdeRun {
    /// Columns `t, P1, ..., PN` with `N` the largest pulse count seen; missing entries empty.
    pub fn write_tracks_csv(&self, path: &Path) -> Result<()> {
        let n = self.tracks.iter().map(|p| p.len()).max().unwrap_or(0);
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|j| format!("P{j}")));
        w.write_record(&header)?;
        for (t, p) in self.times.iter().zip(&self.tracks) {
            let mut row = vec![crate::fmt_g12(*t)];
            row.extend((0..n).map(|j| p.get(j).map(|v| crate::fmt_g12(*v)).unwrap_or_default()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Time stepping from `init` until `t_end` or a steady state.
pub fn run(params: &ModelParams, terrain: &Terrain, init: PdeState, opts: &RunOptions) -> Result<PdeRun> {
    if !(opts.t_end > 0.0 && opts.sample_dt > 0.0) {
        return Err(PulseError::InvalidParameter("t_end and sample_dt must be positive".into()));
    }
    let stepper = Stepper::new(params, terrain, &init, opts.step)?;
    let mut s = init;
    let mut times = vec![s.t];
    let mut tracks = vec![locate_pulses(&s)];
    let mut snapshots = if opts.keep_snapshots { vec![s.clone()] } else { vec![] };
    let mut next_sample = s.t + opts.sample_dt;
    let t_stop = s.t + opts.t_end;
    let mut steps = 0;
    let mut rate = f64::INFINITY;
    let mut steady = false;
    while s.t < t_stop - 1e-12 {
        // the rate is measured on every tenth step
        let measure = steps % 10 == 9;
        let old = measure.then(|| (s.u.clone(), s.v.clone()));
        stepper.step(&mut s)?;
        steps += 1;
        if let Some((u_old, v_old)) = old {
            let dt = opts.step.dt;
            rate = u_old
                .iter()
                .zip(&s.u)
                .chain(v_old.iter().zip(&s.v))
                .map(|(a, b)| (a - b).abs() / dt)
                .fold(0.0, f64::max);
        }
        let sample_now = s.t >= next_sample - 1e-12;
        steady = rate < opts.steady_tol;
        if sample_now || steady {
            times.push(s.t);
            tracks.push(locate_pulses(&s));
            if opts.keep_snapshots {
                snapshots.push(s.clone());
            }
            while next_sample <= s.t + 1e-12 {
                next_sample += opts.sample_dt;
            }
        }
        if steady {
            break;
        }
    }
    Ok(PdeRun { times, tracks, snapshots, final_state: s, steady, rate, steps })
}

/// Largest residual of the stationary equations at interior nodes, relative
/// to the largest term of the same equation anywhere on the grid.
pub fn stationary_residual(params: &ModelParams, terrain: &Terrain, s: &PdeState) -> Result<f64> {
    let ModelParams { a, m, d } = *params;
    let n = s.x.len();
    let h2 = s.dx * s.dx;
    let (mut res_u, mut res_v, mut scale_u, mut scale_v) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 2..n - 2 {
        let (f, g) = terrain.eval(s.x[i])?;
        let (u, v) = (s.u[i], s.v[i]);
        let uxx = (s.u[i + 1] - 2.0 * u + s.u[i - 1]) / h2;
        let vxx = (s.v[i + 1] - 2.0 * v + s.v[i - 1]) / h2;
        let ux = (s.u[i + 1] - s.u[i - 1]) / (2.0 * s.dx);
        let terms_u = [uxx, f * ux, g * u, a, -u, -u * v * v];
        let terms_v = [d * d * vxx, -m * v, u * v * v];
        res_u = res_u.max(terms_u.iter().sum::<f64>().abs());
        res_v = res_v.max(terms_v.iter().sum::<f64>().abs());
        scale_u = terms_u.iter().fold(scale_u, |acc, t| acc.max(t.abs()));
        scale_v = terms_v.iter().fold(scale_v, |acc, t| acc.max(t.abs()));
    }
    Ok((res_u / scale_u.max(1e-300)).max(res_v / scale_v.max(1e-300)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_soil_is_steady() {
        let p = ModelParams::new(0.5, 0.45, 0.01).unwrap();
        let x = PdeState::grid(-5.0, 5.0, 0.01, Boundary::Neumann).unwrap();
        let n = x.len();
        let mut s = PdeState::new(x, vec![0.5; n], vec![0.0; n], Boundary::Neumann).unwrap();
        let opts = StepOptions { dt: 0.1, reaction: ReactionTreatment::LinearlyImplicit };
        step(&mut s, &p, &Terrain::flat(), opts).unwrap();
        assert!(s.u.iter().all(|u| (u - 0.5).abs() < 1e-12) && s.v.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn locate_symmetric_bump() {
        let x = PdeState::grid(-5.0, 5.0, 0.01, Boundary::Neumann).unwrap();
        let v: Vec<f64> = x.iter().map(|&t| crate::pulse::omega((t - 2.0) / 0.05)).collect();
        let n = x.len();
        let s = PdeState::new(x, vec![0.0; n], v, Boundary::Neumann).unwrap();
        let p = locate_pulses(&s);
        assert_eq!(p.len(), 1);
        assert!((p[0] - 2.0).abs() < 1e-4, "{p:?}");
    }
}
