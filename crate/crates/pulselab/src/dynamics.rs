//! Pulse-location dynamics: the DAE for the slow field between pulses, the
//! pulse velocities, fixed points and their eigenvalues, pitchfork
//! continuation in the terrain curvature and the two-pulse construction.
//!
//! Boundary value problems are solved by sweeping linear relations
//! `alpha u + beta u' + eta = 0` through `u'' + f u' + (g - 1) u + s = 0`.
//! A relation stays satisfied along solutions when `(alpha, beta, eta)`
//! obeys the adjoint equation, and it is renormalized after every step, so
//! regions with `g > 1` cause no blowup.

use rayon::prelude::*;

use crate::error::{PulseError, Result};
use crate::slowfield::lncosh;
use crate::terrain::{Terrain, TerrainKind};

/// RK4 step of the relation sweeps.
pub const SWEEP_STEP: f64 = 0.005;
/// Distance from the outermost pulse to the far-field boundary.
pub const FAR_DISTANCE: f64 = 40.0;
/// Pulses closer than this many sweep steps count as collided.
pub const COLLISION_CELLS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Relation {
    alpha: f64,
    beta: f64,
    eta: f64,
}

impl Relation {
    fn dirichlet(val: f64) -> Self {
        Self { alpha: 1.0, beta: 0.0, eta: -val }
    }

    /// `u'` implied by the relation at a point where `u = val`.
    fn slope(&self, val: f64) -> f64 {
        -(self.alpha * val + self.eta) / self.beta
    }

    fn normalized(self) -> Self {
        let n = self.alpha.hypot(self.beta);
        Self { alpha: self.alpha / n, beta: self.beta / n, eta: self.eta / n }
    }

    fn axpy(self, k: f64, d: Relation) -> Self {
        Self { alpha: self.alpha + k * d.alpha, beta: self.beta + k * d.beta, eta: self.eta + k * d.eta }
    }
}

fn adjoint_rhs(t: &Terrain, x: f64, n: Relation, source: f64) -> Relation {
    let (f, g) = t.fg(x);
    Relation { alpha: -(1.0 - g) * n.beta, beta: -n.alpha + f * n.beta, eta: source * n.beta }
}

/// Relation carried from `x0` to `x1`; returns the relation at every node
/// `x0 + k (x1 - x0)/steps` when `record` is set, otherwise only the last.
fn sweep(t: &Terrain, start: Relation, x0: f64, x1: f64, source: f64, h: f64, record: bool) -> Vec<Relation> {
    let steps = ((x1 - x0).abs() / h).ceil().max(1.0) as usize;
    let dx = (x1 - x0) / steps as f64;
    let mut n = start.normalized();
    let mut out = Vec::with_capacity(if record { steps + 1 } else { 1 });
    if record {
        out.push(n);
    }
    for k in 0..steps {
        let x = x0 + k as f64 * dx;
        let k1 = adjoint_rhs(t, x, n, source);
        let k2 = adjoint_rhs(t, x + 0.5 * dx, n.axpy(0.5 * dx, k1), source);
        let k3 = adjoint_rhs(t, x + 0.5 * dx, n.axpy(0.5 * dx, k2), source);
        let k4 = adjoint_rhs(t, x + dx, n.axpy(dx, k3), source);
        n = Relation {
            alpha: n.alpha + dx / 6.0 * (k1.alpha + 2.0 * k2.alpha + 2.0 * k3.alpha + k4.alpha),
            beta: n.beta + dx / 6.0 * (k1.beta + 2.0 * k2.beta + 2.0 * k3.beta + k4.beta),
            eta: n.eta + dx / 6.0 * (k1.eta + 2.0 * k2.eta + 2.0 * k3.eta + k4.eta),
        }
        .normalized();
        if record {
            out.push(n);
        }
    }
    if !record {
        out.push(n);
    }
    out
}

/// Far-field relation `u' = r (u - u_p)` from the frozen coefficients at `x`.
/// `right` selects the solution decaying towards `+inf`.
fn far_relation(t: &Terrain, x: f64, right: bool, source: f64) -> Relation {
    let (f, g) = t.fg(x);
    let kappa = 1.0 - g;
    let (r, up) = if kappa > 0.0 {
        let disc = (f * f + 4.0 * kappa).sqrt();
        (if right { 0.5 * (-f - disc) } else { 0.5 * (-f + disc) }, source / kappa)
    } else {
        (if right { -1.0 } else { 1.0 }, source)
    };
    Relation { alpha: -r, beta: 1.0, eta: r * up }
}

/// How the amplitude condition at each pulse is treated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `mu << 1`: `u(P_j) = 0`, amplitudes read off the jumps.
    Limit,
    /// `u(P_j) = mu u0_j` coupled with the jump condition, solved by Newton.
    Finite { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaeOptions {
    pub step: f64,
    pub far: f64,
    pub regime: Regime,
    /// Reconstruct `u` on a grid (not needed for velocities).
    pub profile: bool,
}

impl Default for DaeOptions {
    fn default() -> Self {
        Self { step: SWEEP_STEP, far: FAR_DISTANCE, regime: Regime::Limit, profile: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaeSolution {
    pub positions: Vec<f64>,
    /// `u(P_j)`.
    pub values: Vec<f64>,
    /// `u'(P_j^-)`.
    pub d_minus: Vec<f64>,
    /// `u'(P_j^+)`.
    pub d_plus: Vec<f64>,
    pub u0: Vec<f64>,
    /// `|u'(P+) - u'(P-) - 6/u0|` per pulse.
    pub jump_residuals: Vec<f64>,
    pub newton_iterations: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

fn far_ends(t: &Terrain, positions: &[f64], far: f64) -> Result<(f64, f64)> {
    let (first, last) = (positions[0], positions[positions.len() - 1]);
    let (mut lo, mut hi) = (first - far, last + far);
    if let Some((a, b)) = t.sample_range() {
        if first < a || last > b {
            return Err(PulseError::Extrapolation { x: if first < a { first } else { last }, lo: a, hi: b });
        }
        lo = lo.max(a);
        hi = hi.min(b);
    }
    Ok((lo, hi))
}

fn check_positions(t: &Terrain, positions: &[f64], step: f64) -> Result<()> {
    if positions.is_empty() {
        return Err(PulseError::InvalidParameter("at least one pulse position required".into()));
    }
    if positions.iter().any(|p| !p.is_finite()) {
        return Err(PulseError::InvalidParameter("non-finite pulse position".into()));
    }
    if positions.windows(2).any(|w| !(w[1] - w[0] > step)) {
        return Err(PulseError::InvalidParameter("pulse positions must be strictly increasing".into()));
    }
    if let Some((lo, hi)) = t.sample_range() {
        for &p in positions {
            if p < lo || p > hi {
                return Err(PulseError::Extrapolation { x: p, lo, hi });
            }
        }
    }
    Ok(())
}

/// One-sided derivatives for prescribed values `u(P_j)`.
fn one_sided(t: &Terrain, pos: &[f64], vals: &[f64], opts: &DaeOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = pos.len();
    let (lo, hi) = far_ends(t, pos, opts.far)?;
    let h = opts.step;
    let mut dm = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let left = sweep(t, far_relation(t, lo, false, 1.0), lo, pos[0], 1.0, h, false)[0];
    dm[0] = left.slope(vals[0]);
    let right = sweep(t, far_relation(t, hi, true, 1.0), hi, pos[n - 1], 1.0, h, false)[0];
    dp[n - 1] = right.slope(vals[n - 1]);
    for j in 0..n - 1 {
        let back = sweep(t, Relation::dirichlet(vals[j + 1]), pos[j + 1], pos[j], 1.0, h, false)[0];
        dp[j] = back.slope(vals[j]);
        let fwd = sweep(t, Relation::dirichlet(vals[j]), pos[j], pos[j + 1], 1.0, h, false)[0];
        dm[j + 1] = fwd.slope(vals[j + 1]);
    }
    for v in dm.iter().chain(&dp) {
        if !v.is_finite() {
            return Err(PulseError::Breakdown("relation sweep produced a non-finite derivative".into()));
        }
    }
    Ok((dm, dp))
}

/// `u` and `u'` on a grid spanning the far-field window.
fn reconstruct(t: &Terrain, pos: &[f64], vals: &[f64], opts: &DaeOptions) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (lo, hi) = far_ends(t, pos, opts.far)?;
    let h = opts.step;
    let mut bounds = vec![lo];
    bounds.extend_from_slice(pos);
    bounds.push(hi);
    let (mut xs, mut us, mut dus) = (vec![], vec![], vec![]);
    for s in 0..bounds.len() - 1 {
        let (a, b) = (bounds[s], bounds[s + 1]);
        let start_fwd = if s == 0 { far_relation(t, a, false, 1.0) } else { Relation::dirichlet(vals[s - 1]) };
        let start_back =
            if s == bounds.len() - 2 { far_relation(t, b, true, 1.0) } else { Relation::dirichlet(vals[s]) };
        let fwd = sweep(t, start_fwd, a, b, 1.0, h, true);
        let mut back = sweep(t, start_back, b, a, 1.0, h, true);
        back.reverse();
        let steps = fwd.len() - 1;
        let first = if s == 0 { 0 } else { 1 };
        for k in first..=steps {
            let x = a + (b - a) * k as f64 / steps as f64;
            let (p, q) = (fwd[k], back[k]);
            let det = p.alpha * q.beta - p.beta * q.alpha;
            if det.abs() < 1e-14 {
                return Err(PulseError::SingularSystem { context: format!("relation crossing at x = {x}"), condition: 1.0 / det.abs() });
            }
            let u = (-p.eta * q.beta + q.eta * p.beta) / det;
            let du = (-p.alpha * q.eta + q.alpha * p.eta) / det;
            xs.push(x);
            us.push(u);
            dus.push(du);
        }
    }
    Ok((xs, us, dus))
}

/// Solves the DAE for pulses at `positions`.
pub fn solve_dae(t: &Terrain, positions: &[f64], opts: &DaeOptions) -> Result<DaeSolution> {
    check_positions(t, positions, opts.step)?;
    let n = positions.len();
    let (values, d_minus, d_plus, u0, iterations) = match opts.regime {
        Regime::Limit => {
            let vals = vec![0.0; n];
            let (dm, dp) = one_sided(t, positions, &vals, opts)?;
            let u0: Vec<f64> = dm.iter().zip(&dp).map(|(a, b)| 6.0 / (b - a)).collect();
            (vals, dm, dp, u0, 0)
        }
        Regime::Finite { mu } => {
            if !(mu > 0.0) {
                return Err(PulseError::InvalidParameter(format!("mu must be positive, got {mu}")));
            }
            finite_mu(t, positions, mu, opts)?
        }
    };
    let jump_residuals = (0..n).map(|j| (d_plus[j] - d_minus[j] - 6.0 / u0[j]).abs()).collect();
    let (x, u, du) = if opts.profile { reconstruct(t, positions, &values, opts)? } else { (vec![], vec![], vec![]) };
    Ok(DaeSolution { positions: positions.to_vec(), values, d_minus, d_plus, u0, jump_residuals, newton_iterations: iterations, x, u, du })
}

type FiniteParts = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, usize);

fn finite_mu(t: &Terrain, pos: &[f64], mu: f64, opts: &DaeOptions) -> Result<FiniteParts> {
    let n = pos.len();
    let jumps = |vals: &[f64]| -> Result<Vec<f64>> {
        let (dm, dp) = one_sided(t, pos, vals, opts)?;
        Ok(dp.iter().zip(&dm).map(|(a, b)| a - b).collect())
    };
    // jumps are affine in the prescribed values: J(v) = M v + c
    let c = jumps(&vec![0.0; n])?;
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let jk = jumps(&e)?;
        for i in 0..n {
            m[(i, k)] = jk[i] - c[i];
        }
    }
    if c.iter().any(|&cj| !(cj > 0.0)) {
        return Err(PulseError::NoPulse("non-positive slope jump in the mu -> 0 limit".into()));
    }
    let mut u0: Vec<f64> = c.iter().map(|cj| 6.0 / cj).collect();
    let mut last = vec![];
    for it in 1..=50 {
        let res: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|k| mu * m[(i, k)] * u0[k]).sum::<f64>() + c[i] - 6.0 / u0[i])
            .collect();
        last = res.iter().map(|r| r.abs()).collect();
        if last.iter().all(|&r| r < 1e-10) {
            let vals: Vec<f64> = u0.iter().map(|u| mu * u).collect();
            let (dm, dp) = one_sided(t, pos, &vals, opts)?;
            return Ok((vals, dm, dp, u0, it - 1));
        }
        let mut jac = m.scale(mu);
        for i in 0..n {
            jac[(i, i)] += 6.0 / (u0[i] * u0[i]);
        }
        let rhs = nalgebra::DVector::from_vec(res.iter().map(|r| -r).collect());
        let step = jac.lu().solve(&rhs).ok_or_else(|| PulseError::SingularSystem {
            context: "finite-mu Newton Jacobian".into(),
            condition: f64::INFINITY,
        })?;
        for i in 0..n {
            // keep amplitudes positive
            u0[i] = (u0[i] + step[i]).max(0.5 * u0[i]);
        }
        if u0.iter().any(|u| !u.is_finite()) {
            break;
        }
    }
    Err(PulseError::NewtonDivergence { iterations: 50, residuals: last })
}

/// `dP_j/dt = (tau/6)[u'(P_j^+)^2 - u'(P_j^-)^2]`.
pub fn pulse_velocity(t: &Terrain, positions: &[f64], tau: f64, opts: &DaeOptions) -> Result<Vec<f64>> {
    let sol = solve_dae(t, positions, &DaeOptions { profile: false, ..*opts })?;
    Ok(velocities_of(&sol, tau))
}

fn velocities_of(sol: &DaeSolution, tau: f64) -> Vec<f64> {
    sol.d_plus.iter().zip(&sol.d_minus).map(|(p, m)| tau / 6.0 * (p * p - m * m)).collect()
}

/// Velocity of a single pulse at `p`.
pub fn single_velocity(t: &Terrain, p: f64, tau: f64, opts: &DaeOptions) -> Result<f64> {
    Ok(pulse_velocity(t, &[p], tau, opts)?[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub collided: bool,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.positions.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Columns `t, P1, ..., PN`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let n = self.positions.first().map_or(0, |p| p.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|j| format!("P{j}")));
        w.write_record(&header)?;
        for (t, p) in self.times.iter().zip(&self.positions) {
            let mut row = vec![crate::fmt_g12(*t)];
            row.extend(p.iter().map(|v| crate::fmt_g12(*v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn rk4_positions(t: &Terrain, y: &[f64], dt: f64, tau: f64, opts: &DaeOptions) -> Result<Vec<f64>> {
    let add = |a: &[f64], k: &[f64], s: f64| -> Vec<f64> { a.iter().zip(k).map(|(x, d)| x + s * d).collect() };
    let k1 = pulse_velocity(t, y, tau, opts)?;
    let k2 = pulse_velocity(t, &add(y, &k1, 0.5 * dt), tau, opts)?;
    let k3 = pulse_velocity(t, &add(y, &k2, 0.5 * dt), tau, opts)?;
    let k4 = pulse_velocity(t, &add(y, &k3, dt), tau, opts)?;
    Ok((0..y.len()).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}

fn collided(p: &[f64], step: f64) -> bool {
    p.windows(2).any(|w| w[1] - w[0] < COLLISION_CELLS * step)
}

/// RK4 with step doubling and relative tolerance `rtol`.
pub fn integrate_pulse_ode(
    t: &Terrain,
    initial: &[f64],
    t_end: f64,
    tau: f64,
    rtol: f64,
    opts: &DaeOptions,
) -> Result<Trajectory> {
    if !(t_end > 0.0) || !(rtol > 0.0) {
        return Err(PulseError::InvalidParameter("t_end and rtol must be positive".into()));
    }
    let mut y = initial.to_vec();
    let mut time = 0.0;
    let mut traj = Trajectory { times: vec![0.0], positions: vec![y.clone()], collided: false, rejected_steps: 0 };
    if collided(&y, opts.step) {
        traj.collided = true;
        return Ok(traj);
    }
    let mut dt = t_end / 100.0;
    while time < t_end {
        dt = dt.min(t_end - time);
        let trial = rk4_positions(t, &y, dt, tau, opts);
        let half = rk4_positions(t, &y, 0.5 * dt, tau, opts)
            .and_then(|mid| if collided(&mid, opts.step) { Ok(mid) } else { rk4_positions(t, &mid, 0.5 * dt, tau, opts) });
        let (full, fine) = match (trial, half) {
            (Ok(a), Ok(b)) => (a, b),
            // a stage left the admissible ordering; shrink the step
            (Err(PulseError::InvalidParameter(_)), _) | (_, Err(PulseError::InvalidParameter(_))) => {
                dt *= 0.25;
                traj.rejected_steps += 1;
                if dt < 1e-14 * t_end.max(1.0) {
                    traj.collided = true;
                    break;
                }
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let scale = fine.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let err = fine.iter().zip(&full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / 15.0;
        let tol = rtol * scale;
        if err <= tol {
            time += dt;
            y = fine.iter().zip(&full).map(|(a, b)| a + (a - b) / 15.0).collect();
            traj.times.push(time);
            traj.positions.push(y.clone());
            if collided(&y, opts.step) {
                traj.collided = true;
                break;
            }
        } else {
            traj.rejected_steps += 1;
        }
        let fac = if err > 0.0 { 0.9 * (tol / err).powf(0.2) } else { 5.0 };
        dt *= fac.clamp(0.2, 5.0);
    }
    Ok(traj)
}

/// Sign changes of the single-pulse velocity on a 400-point scan of
/// `[lo, hi]`, refined by bisection to `1e-10`.
pub fn find_fixed_points(t: &Terrain, lo: f64, hi: f64, opts: &DaeOptions) -> Result<Vec<f64>> {
    if !(lo < hi) {
        return Err(PulseError::InvalidParameter(format!("empty bracket [{lo}, {hi}]")));
    }
    let n = 400;
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let vs: Vec<f64> = xs.par_iter().map(|&p| single_velocity(t, p, 1.0, opts)).collect::<Result<_>>()?;
    let mut roots = vec![];
    for i in 0..n - 1 {
        let (va, vb) = (vs[i], vs[i + 1]);
        if va == 0.0 {
            roots.push(xs[i]);
            continue;
        }
        if va * vb < 0.0 {
            roots.push(bisect(|p| single_velocity(t, p, 1.0, opts), xs[i], xs[i + 1], va, 1e-10)?);
        }
    }
    if vs[n - 1] == 0.0 {
        roots.push(xs[n - 1]);
    }
    Ok(roots)
}

fn bisect(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> Result<f64> {
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Ingredients of the fixed-point eigenvalue at a single pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointEigen {
    pub lambda: f64,
    pub d_plus: f64,
    pub d_minus: f64,
    pub u2_plus: f64,
    pub u2_minus: f64,
    pub w1_plus: f64,
    pub w1_minus: f64,
    pub velocity: f64,
}

/// `(tau/6){2 d+ [u''(P+) + w'(P+)] - 2 d- [u''(P-) + w'(P-)]}` where `w`
/// solves the homogeneous equation with `w(P+-) = -u'(P+-)`, decaying at both ends.
pub fn fixed_point_eigenvalue(t: &Terrain, p: f64, tau: f64, opts: &DaeOptions) -> Result<FixedPointEigen> {
    check_positions(t, &[p], opts.step)?;
    let (lo, hi) = far_ends(t, &[p], opts.far)?;
    let left = sweep(t, far_relation(t, lo, false, 1.0), lo, p, 1.0, opts.step, false)[0];
    let right = sweep(t, far_relation(t, hi, true, 1.0), hi, p, 1.0, opts.step, false)[0];
    let (dm, dp) = (left.slope(0.0), right.slope(0.0));
    let (f, _) = t.fg(p);
    let (u2p, u2m) = (-f * dp - 1.0, -f * dm - 1.0);
    // homogeneous relations share alpha and beta: w' = -alpha w / beta with w = -d
    let (w1p, w1m) = (right.alpha * dp / right.beta, left.alpha * dm / left.beta);
    let lambda = tau / 6.0 * (2.0 * dp * (u2p + w1p) - 2.0 * dm * (u2m + w1m));
    Ok(FixedPointEigen {
        lambda,
        d_plus: dp,
        d_minus: dm,
        u2_plus: u2p,
        u2_minus: u2m,
        w1_plus: w1p,
        w1_minus: w1m,
        velocity: tau / 6.0 * (dp * dp - dm * dm),
    })
}

/// Centered difference of the single-pulse velocity, for cross-checks.
pub fn velocity_derivative_fd(t: &Terrain, p: f64, tau: f64, h: f64, opts: &DaeOptions) -> Result<f64> {
    Ok((single_velocity(t, p + h, tau, opts)? - single_velocity(t, p - h, tau, opts)?) / (2.0 * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Sech,
    Cosine,
}

impl Family {
    pub fn terrain(self, amplitude: f64, b: f64) -> Result<Terrain> {
        match self {
            Family::Gaussian => Terrain::gaussian(amplitude, b),
            Family::Sech => Terrain::sech(amplitude, b),
            Family::Cosine => Terrain::cosine(amplitude, b),
        }
    }

    pub fn kind(self, amplitude: f64, b: f64) -> TerrainKind {
        match self {
            Family::Gaussian => TerrainKind::Gaussian { amplitude, rate: b },
            Family::Sech => TerrainKind::Sech { amplitude, rate: b },
            Family::Cosine => TerrainKind::Cosine { amplitude, wavenumber: b },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Sech => "sech",
            Family::Cosine => "cosine",
        }
    }

    /// Default window for off-centre fixed points.
    pub fn position_window(self, b: f64) -> f64 {
        match self {
            Family::Cosine => 1.05 * std::f64::consts::PI / b,
            Family::Gaussian => 4.0 / b.sqrt(),
            Family::Sech => 6.0 / b,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = PulseError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Family::Gaussian),
            "sech" => Ok(Family::Sech),
            "cosine" | "cos" => Ok(Family::Cosine),
            other => Err(PulseError::InvalidParameter(format!("unknown terrain family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    pub b: f64,
    pub position: f64,
    pub eigenvalue: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bifurcation {
    pub family: Family,
    pub amplitude: f64,
    /// Critical curvature where the eigenvalue at `P = 0` changes sign.
    pub b_c: Option<f64>,
    pub branch: Vec<BranchPoint>,
}

impl Bifurcation {
    /// Columns `B, P, lambda, stable`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["B", "P", "lambda", "stable"])?;
        for p in &self.branch {
            w.write_record([
                crate::fmt_g12(p.b),
                crate::fmt_g12(p.position),
                crate::fmt_g12(p.eigenvalue),
                (p.stable as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Eigenvalue at `P = 0` as a function of `B` (with `tau = 1`).
pub fn centre_eigenvalue(family: Family, amplitude: f64, b: f64, opts: &DaeOptions) -> Result<f64> {
    Ok(fixed_point_eigenvalue(&family.terrain(amplitude, b)?, 0.0, 1.0, opts)?.lambda)
}

/// Bisection for the sign change of the centre eigenvalue on `[b_lo, b_hi]`.
pub fn critical_curvature(family: Family, amplitude: f64, b_lo: f64, b_hi: f64, opts: &DaeOptions) -> Result<Option<f64>> {
    if !(0.0 < b_lo && b_lo < b_hi) {
        return Err(PulseError::InvalidParameter(format!("bad B bracket [{b_lo}, {b_hi}]")));
    }
    // coarse scan first so that the bracket may contain several sign changes
    let n = 41;
    let bs: Vec<f64> = (0..n).map(|i| b_lo + (b_hi - b_lo) * i as f64 / (n - 1) as f64).collect();
    let es: Vec<f64> = bs.par_iter().map(|&b| centre_eigenvalue(family, amplitude, b, opts)).collect::<Result<_>>()?;
    for i in 0..n - 1 {
        if es[i] == 0.0 {
            return Ok(Some(bs[i]));
        }
        if es[i] * es[i + 1] < 0.0 {
            let r = bisect(|b| centre_eigenvalue(family, amplitude, b, opts), bs[i], bs[i + 1], es[i], 1e-9)?;
            return Ok(Some(r));
        }
    }
    Ok(None)
}

/// Critical curvature plus the fixed points (and their stability) at `samples`
/// values of `B` spread over the bracket. Sweeps run in parallel.
pub fn continue_bifurcation(
    family: Family,
    amplitude: f64,
    b_lo: f64,
    b_hi: f64,
    samples: usize,
    tau: f64,
    opts: &DaeOptions,
) -> Result<Bifurcation> {
    let b_c = critical_curvature(family, amplitude, b_lo, b_hi, opts)?;
    let samples = samples.max(2);
    let bs: Vec<f64> = (0..samples).map(|i| b_lo + (b_hi - b_lo) * i as f64 / (samples - 1) as f64).collect();
    let per_b: Vec<Vec<BranchPoint>> = bs
        .par_iter()
        .map(|&b| -> Result<Vec<BranchPoint>> {
            let terrain = family.terrain(amplitude, b)?;
            let w = family.position_window(b);
            let mut pts = find_fixed_points(&terrain, -w, w, opts)?;
            if !pts.iter().any(|p| p.abs() < 1e-8) {
                pts.push(0.0);
            }
            pts.sort_by(f64::total_cmp);
            pts.iter()
                .map(|&p| {
                    let e = fixed_point_eigenvalue(&terrain, p, tau, opts)?;
                    Ok(BranchPoint { b, position: p, eigenvalue: e.lambda, stable: e.lambda < 0.0 })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(Bifurcation { family, amplitude, b_c, branch: per_b.into_iter().flatten().collect() })
}

/// `T(P) = u_b'(P) - u_b(P)[(r/2)(tanh(rP) - 1) + beta tanh(beta P)]` for
/// `h = -2 ln cosh(beta x)`, `r = sqrt(1 + beta^2)`; symmetric two-pulse
/// states at `+-P` are its zeros.
pub fn two_pulse_t(p: f64, beta: f64) -> f64 {
    let r = lncosh::rate(beta);
    let (ub, dub) = lncosh::u_b(beta, p);
    dub - ub * (0.5 * r * ((r * p).tanh() - 1.0) + beta * (beta * p).tanh())
}

/// Root of `two_pulse_t` on `(0, inf)`.
pub fn two_pulse_root(beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(PulseError::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let t0 = two_pulse_t(0.0, beta);
    let mut hi = 1.0;
    while two_pulse_t(hi, beta) > 0.0 {
        hi *= 2.0;
        if hi > 200.0 {
            return Err(PulseError::Breakdown("no sign change of T on (0, 200]".into()));
        }
    }
    bisect(|p| Ok(two_pulse_t(p, beta)), 0.0, hi, t0, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_single_pulse() {
        let t = Terrain::flat();
        let s = solve_dae(&t, &[0.0], &DaeOptions::default()).unwrap();
        assert!((s.d_plus[0] - 1.0).abs() < 1e-10 && (s.d_minus[0] + 1.0).abs() < 1e-10);
        assert!((s.u0[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn flat_finite_mu_matches_quadratic() {
        let mu = 0.05;
        let t = Terrain::flat();
        let s = solve_dae(&t, &[0.0], &DaeOptions { regime: Regime::Finite { mu }, ..Default::default() }).unwrap();
        let exact = (1.0 - (1.0 - 12.0 * mu).sqrt()) / (2.0 * mu);
        assert!((s.u0[0] - exact).abs() < 1e-8, "{} vs {exact}", s.u0[0]);
    }
}
