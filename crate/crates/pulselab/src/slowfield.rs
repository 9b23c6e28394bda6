//! The super-slow linear problem `u'' + f u' + g u - u + 1 = 0`: its bounded
//! solution and the solutions decaying at `+inf` / `-inf`.
//!
//! Second-order centered differences on a uniform grid containing `x = 0`.
//! Far ends carry Robin conditions taken from the frozen coefficients at the
//! boundary (for vanishing coefficients `u' = -(u - 1)` on the right and
//! `u' = u - 1` on the left). Cosine terrains use periodic conditions on an
//! integer number of periods for the bounded solution. By default one
//! Richardson step (grids `h` and `h/2`) lifts the result to fourth order.

use std::path::Path;

use crate::error::{PulseError, Result};
use crate::linalg::{solve_cyclic_tridiagonal, solve_tridiagonal};
use crate::terrain::Terrain;

/// Default spacing of the reported grid.
pub const DEFAULT_STEP: f64 = 0.004;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowGrid {
    pub half_width: f64,
    /// Number of nodes, odd so that `x = 0` is a node.
    pub n: usize,
    /// Combine the `h` and `h/2` solutions by Richardson extrapolation.
    pub extrapolate: bool,
}

impl SlowGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) || n < 5 {
            return Err(PulseError::InvalidParameter(format!("bad slow grid (L = {half_width}, n = {n})")));
        }
        let n = n | 1;
        Ok(Self { half_width, n, extrapolate: true })
    }

    pub fn second_order(mut self) -> Self {
        self.extrapolate = false;
        self
    }

    /// Default truncation `max(20, 30/(1 - 2 delta))` (60 once delta reaches 1/4),
    /// rounded up to whole periods for periodic terrain.
    pub fn for_terrain(t: &Terrain) -> Self {
        let l = default_half_width(t);
        let cells = (l / DEFAULT_STEP).ceil() as usize;
        Self { half_width: l, n: 2 * cells + 1, extrapolate: true }
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let c = (self.n - 1) / 2;
        let h = self.step();
        (0..self.n).map(|i| (i as f64 - c as f64) * h).collect()
    }

    fn refined(&self) -> Self {
        Self { n: 2 * self.n - 1, ..*self }
    }
}

pub fn default_half_width(t: &Terrain) -> f64 {
    let mut l = if t.delta < 0.25 { (30.0 / (1.0 - 2.0 * t.delta)).max(20.0) } else { 60.0 };
    if let Some(p) = t.period() {
        let k = (2.0 * l / p).ceil();
        l = 0.5 * k * p;
    }
    l
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlowFieldSolution {
    pub grid: Vec<f64>,
    pub u_b: Vec<f64>,
    pub p_b: Vec<f64>,
    pub u_plus: Vec<f64>,
    pub p_plus: Vec<f64>,
    pub u_minus: Vec<f64>,
    pub p_minus: Vec<f64>,
    pub cs0: f64,
    pub cu0: f64,
    /// Largest discrete residual of the underlying finest solves.
    pub residual: f64,
    pub periodic: bool,
}

/// Values of all fields at an arbitrary point (cubic Hermite interpolation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowSample {
    pub u_b: f64,
    pub p_b: f64,
    pub u_plus: f64,
    pub p_plus: f64,
    pub u_minus: f64,
    pub p_minus: f64,
}

impl SlowFieldSolution {
    pub fn centre(&self) -> usize {
        (self.grid.len() - 1) / 2
    }

    pub fn ub0(&self) -> f64 {
        self.u_b[self.centre()]
    }

    pub fn sample(&self, x: f64) -> SlowSample {
        let n = self.grid.len();
        let h = self.grid[1] - self.grid[0];
        let pos = ((x - self.grid[0]) / h).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let t = pos - i as f64;
        let herm = |y: &[f64], dy: &[f64]| {
            let (h00, h10, h01, h11) = (
                (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t),
                t * (1.0 - t) * (1.0 - t),
                t * t * (3.0 - 2.0 * t),
                t * t * (t - 1.0),
            );
            let v = h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1];
            let (d00, d10, d01, d11) =
                (6.0 * t * t - 6.0 * t, 3.0 * t * t - 4.0 * t + 1.0, -6.0 * t * t + 6.0 * t, 3.0 * t * t - 2.0 * t);
            let dv = (d00 * y[i] + d01 * y[i + 1]) / h + d10 * dy[i] + d11 * dy[i + 1];
            (v, dv)
        };
        let (u_b, p_b) = herm(&self.u_b, &self.p_b);
        let (u_plus, p_plus) = herm(&self.u_plus, &self.p_plus);
        let (u_minus, p_minus) = herm(&self.u_minus, &self.p_minus);
        SlowSample { u_b, p_b, u_plus, p_plus, u_minus, p_minus }
    }

    /// Columns `x, u_b, p_b, u_plus, u_minus`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "u_b", "p_b", "u_plus", "u_minus"])?;
        for i in 0..self.grid.len() {
            w.write_record(
                [self.grid[i], self.u_b[i], self.p_b[i], self.u_plus[i], self.u_minus[i]].map(crate::fmt_g12),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Decaying root and particular level of the frozen far-field equation
/// `u'' + f u' + (g - 1) u + s = 0` at `x`.
fn far_field(t: &Terrain, x: f64, side: Side) -> Option<(f64, f64)> {
    let (f, g) = t.fg(x);
    let kappa = 1.0 - g;
    if !(kappa > 0.0) {
        return None;
    }
    let disc = (f * f + 4.0 * kappa).sqrt();
    let r = match side {
        Side::Plus => 0.5 * (-f - disc),
        Side::Minus => 0.5 * (-f + disc),
    };
    Some((r, 1.0 / kappa))
}

fn far_field_or_flat(t: &Terrain, x: f64, side: Side) -> Result<(f64, f64)> {
    match far_field(t, x, side) {
        Some(v) => Ok(v),
        None if t.period().is_some() => Ok((if side == Side::Plus { -1.0 } else { 1.0 }, 1.0)),
        None => Err(PulseError::SingularSystem {
            context: format!("far field at x = {x}: 1 - g <= 0, no decaying mode"),
            condition: f64::INFINITY,
        }),
    }
}

struct Stencil {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    g: Vec<f64>,
}

fn stencil(t: &Terrain, xs: &[f64], h: f64) -> Stencil {
    let n = xs.len();
    let (mut a, mut b, mut c) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut gs = vec![0.0; n];
    let ih2 = 1.0 / (h * h);
    for i in 0..n {
        let (f, g) = t.fg(xs[i]);
        a[i] = ih2 - 0.5 * f / h;
        b[i] = -2.0 * ih2 + g - 1.0;
        c[i] = ih2 + 0.5 * f / h;
        gs[i] = g;
    }
    Stencil { a, b, c, g: gs }
}

struct Raw {
    u_b: Vec<f64>,
    p_b: Vec<f64>,
    u_plus: Vec<f64>,
    p_plus: Vec<f64>,
    u_minus: Vec<f64>,
    p_minus: Vec<f64>,
    residual: f64,
}

fn centered(u: &[f64], h: f64, left: f64, right: f64) -> Vec<f64> {
    let n = u.len();
    let mut p = vec![0.0; n];
    for i in 1..n - 1 {
        p[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    p[0] = left;
    p[n - 1] = right;
    p
}

/// Row residuals relative to the size of the terms in each row.
fn residual_of(s: &Stencil, u: &[f64], rhs: f64, range: std::ops::Range<usize>) -> f64 {
    range
        .map(|i| {
            let (x, y, z) = (s.a[i] * u[i - 1], s.b[i] * u[i], s.c[i] * u[i + 1]);
            (x + y + z - rhs).abs() / (x.abs() + y.abs() + z.abs() + rhs.abs())
        })
        .fold(0.0, f64::max)
}

fn bounded_raw(t: &Terrain, grid: &SlowGrid, s: &Stencil, periodic: bool) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = grid.n;
    let h = grid.step();
    let l = grid.half_width;
    if periodic {
        // unknowns at nodes 0..n-2, node n-1 coincides with node 0
        let m = n - 1;
        // solve for the deviation w = u - 1, which carries the forcing -g
        let rhs: Vec<f64> = s.g[..m].iter().map(|g| -g).collect();
        let w = solve_cyclic_tridiagonal(&s.a[..m], &s.b[..m], &s.c[..m], &rhs)?;
        let u: Vec<f64> = w.iter().map(|w| 1.0 + w).collect();
        let mut full = u.clone();
        full.push(u[0]);
        let mut p = vec![0.0; n];
        for i in 0..m {
            p[i] = (u[(i + 1) % m] - u[(i + m - 1) % m]) / (2.0 * h);
        }
        p[n - 1] = p[0];
        let res = (0..m)
            .map(|i| (s.a[i] * u[(i + m - 1) % m] + s.b[i] * u[i] + s.c[i] * u[(i + 1) % m] + 1.0).abs())
            .fold(0.0, f64::max);
        return Ok((full, p, res));
    }
    let (rl, ul) = far_field_or_flat(t, -l, Side::Minus)?;
    let (rr, ur) = far_field_or_flat(t, l, Side::Plus)?;
    let mut sub = s.a.clone();
    let mut diag = s.b.clone();
    let mut sup = s.c.clone();
    // unknown is w = u - 1, forced by -g
    let mut rhs: Vec<f64> = s.g.iter().map(|g| -g).collect();
    // ghost w_{-1} = w_1 - 2 h rl (w_0 - (ul - 1))
    diag[0] = s.b[0] - 2.0 * h * rl * s.a[0];
    sup[0] = s.a[0] + s.c[0];
    rhs[0] -= 2.0 * h * rl * (ul - 1.0) * s.a[0];
    // ghost w_{n} = w_{n-2} + 2 h rr (w_{n-1} - (ur - 1))
    sub[n - 1] = s.a[n - 1] + s.c[n - 1];
    diag[n - 1] = s.b[n - 1] + 2.0 * h * rr * s.c[n - 1];
    rhs[n - 1] += 2.0 * h * rr * (ur - 1.0) * s.c[n - 1];
    let w = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    let u: Vec<f64> = w.iter().map(|w| 1.0 + w).collect();
    let p = centered(&u, h, rl * (u[0] - ul), rr * (u[n - 1] - ur));
    let res = residual_of(s, &u, -1.0, 1..n - 1);
    Ok((u, p, res))
}

fn decaying_raw(t: &Terrain, grid: &SlowGrid, s: &Stencil, side: Side) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = grid.n;
    let c = (n - 1) / 2;
    let h = grid.step();
    let l = grid.half_width;
    let mut u = vec![0.0; n];
    u[c] = 1.0;
    match side {
        Side::Plus => {
            let (r, _) = far_field_or_flat(t, l, Side::Plus)?;
            let idx: Vec<usize> = (c + 1..n).collect();
            let m = idx.len();
            let mut sub: Vec<f64> = idx.iter().map(|&i| s.a[i]).collect();
            let mut diag: Vec<f64> = idx.iter().map(|&i| s.b[i]).collect();
            let mut sup: Vec<f64> = idx.iter().map(|&i| s.c[i]).collect();
            let mut rhs = vec![0.0; m];
            rhs[0] = -s.a[c + 1];
            sub[m - 1] = s.a[n - 1] + s.c[n - 1];
            diag[m - 1] = s.b[n - 1] + 2.0 * h * r * s.c[n - 1];
            sup[m - 1] = 0.0;
            let v = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
            u[c + 1..].copy_from_slice(&v);
            for i in (1..=c).rev() {
                u[i - 1] = -(s.b[i] * u[i] + s.c[i] * u[i + 1]) / s.a[i];
            }
            let p = centered(&u, h, (u[1] - u[0]) / h, r * u[n - 1]);
            Ok((u.clone(), p, residual_of(s, &u, 0.0, 1..n - 1)))
        }
        Side::Minus => {
            let (r, _) = far_field_or_flat(t, -l, Side::Minus)?;
            let m = c;
            let mut sub: Vec<f64> = (0..m).map(|i| s.a[i]).collect();
            let mut diag: Vec<f64> = (0..m).map(|i| s.b[i]).collect();
            let mut sup: Vec<f64> = (0..m).map(|i| s.c[i]).collect();
            let mut rhs = vec![0.0; m];
            diag[0] = s.b[0] - 2.0 * h * r * s.a[0];
            sup[0] = s.a[0] + s.c[0];
            sub[0] = 0.0;
            rhs[m - 1] = -s.c[c - 1];
            let v = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
            u[..c].copy_from_slice(&v);
            for i in c..n - 1 {
                u[i + 1] = -(s.a[i] * u[i - 1] + s.b[i] * u[i]) / s.c[i];
            }
            let p = centered(&u, h, r * u[0], (u[n - 1] - u[n - 2]) / h);
            Ok((u.clone(), p, residual_of(s, &u, 0.0, 1..n - 1)))
        }
    }
}

fn check_grid(t: &Terrain, grid: &SlowGrid) -> Result<()> {
    if let Some((lo, hi)) = t.sample_range() {
        if -grid.half_width < lo || grid.half_width > hi {
            return Err(PulseError::Extrapolation { x: grid.half_width, lo, hi });
        }
    }
    let h = grid.step();
    for x in [-grid.half_width, 0.0, grid.half_width] {
        let (f, _) = t.fg(x);
        if f.abs() * h >= 2.0 {
            return Err(PulseError::InvalidParameter(format!("grid step {h} too coarse for |f| = {}", f.abs())));
        }
    }
    Ok(())
}

fn is_periodic(t: &Terrain, grid: &SlowGrid) -> bool {
    match t.period() {
        Some(p) => {
            let k = 2.0 * grid.half_width / p;
            (k - k.round()).abs() < 1e-9 && k.round() >= 1.0
        }
        None => false,
    }
}

fn raw(t: &Terrain, grid: &SlowGrid, want_bounded: bool, sides: &[Side]) -> Result<Raw> {
    let xs = grid.nodes();
    let s = stencil(t, &xs, grid.step());
    let periodic = is_periodic(t, grid);
    let mut out = Raw {
        u_b: vec![],
        p_b: vec![],
        u_plus: vec![],
        p_plus: vec![],
        u_minus: vec![],
        p_minus: vec![],
        residual: 0.0,
    };
    if want_bounded {
        let (u, p, r) = bounded_raw(t, grid, &s, periodic)?;
        out.u_b = u;
        out.p_b = p;
        out.residual = out.residual.max(r);
    }
    for &side in sides {
        let (u, p, r) = decaying_raw(t, grid, &s, side)?;
        out.residual = out.residual.max(r);
        match side {
            Side::Plus => (out.u_plus, out.p_plus) = (u, p),
            Side::Minus => (out.u_minus, out.p_minus) = (u, p),
        }
    }
    Ok(out)
}

fn richardson(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse.iter().enumerate().map(|(i, &c)| (4.0 * fine[2 * i] - c) / 3.0).collect()
}

fn solve_raw(t: &Terrain, grid: &SlowGrid, want_bounded: bool, sides: &[Side]) -> Result<Raw> {
    check_grid(t, grid)?;
    let coarse = raw(t, grid, want_bounded, sides)?;
    if !grid.extrapolate {
        return Ok(coarse);
    }
    let fine = raw(t, &grid.refined(), want_bounded, sides)?;
    let comb = |c: &Vec<f64>, f: &Vec<f64>| if c.is_empty() { vec![] } else { richardson(c, f) };
    Ok(Raw {
        u_b: comb(&coarse.u_b, &fine.u_b),
        p_b: comb(&coarse.p_b, &fine.p_b),
        u_plus: comb(&coarse.u_plus, &fine.u_plus),
        p_plus: comb(&coarse.p_plus, &fine.p_plus),
        u_minus: comb(&coarse.u_minus, &fine.u_minus),
        p_minus: comb(&coarse.p_minus, &fine.p_minus),
        residual: coarse.residual.max(fine.residual),
    })
}

/// Bounded solution and its derivative on the grid, plus the discrete residual.
pub fn solve_bounded(t: &Terrain, grid: &SlowGrid) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let r = solve_raw(t, grid, true, &[])?;
    Ok((r.u_b, r.p_b, r.residual))
}

/// Solution decaying towards `+inf` (`Plus`) or `-inf` (`Minus`), normalized to 1 at `x = 0`.
pub fn solve_decaying(t: &Terrain, side: Side, grid: &SlowGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = solve_raw(t, grid, false, &[side])?;
    Ok(match side {
        Side::Plus => (r.u_plus, r.p_plus),
        Side::Minus => (r.u_minus, r.p_minus),
    })
}

pub fn solve(t: &Terrain, grid: &SlowGrid) -> Result<SlowFieldSolution> {
    let r = solve_raw(t, grid, true, &[Side::Plus, Side::Minus])?;
    let mut sol = SlowFieldSolution {
        grid: grid.nodes(),
        u_b: r.u_b,
        p_b: r.p_b,
        u_plus: r.u_plus,
        p_plus: r.p_plus,
        u_minus: r.u_minus,
        p_minus: r.p_minus,
        cs0: f64::NAN,
        cu0: f64::NAN,
        residual: r.residual,
        periodic: is_periodic(t, grid),
    };
    let (cs, cu) = slopes(&sol)?;
    sol.cs0 = cs;
    sol.cu0 = cu;
    Ok(sol)
}

/// `(C^s(0), C^u(0))` as logarithmic derivatives of the decaying solutions at 0.
pub fn slopes(sol: &SlowFieldSolution) -> Result<(f64, f64)> {
    let c = sol.centre();
    let (up, um) = (sol.u_plus[c], sol.u_minus[c]);
    for v in [up, um] {
        if !(v.abs() >= 1e-12) {
            return Err(PulseError::DegenerateNormalization(v.abs()));
        }
    }
    Ok((sol.p_plus[c] / up, sol.p_minus[c] / um))
}

/// Closed forms for `h = -2 ln cosh(beta x)`, where `u_+- = exp(-+ r x) cosh(beta x)`
/// with `r = sqrt(1 + beta^2)`.
pub mod lncosh {
    use crate::quad::integrate_fixed;

    pub fn rate(beta: f64) -> f64 {
        (1.0 + beta * beta).sqrt()
    }

    pub fn u_plus(beta: f64, x: f64) -> f64 {
        (-rate(beta) * x).exp() * (beta * x).cosh()
    }

    pub fn u_minus(beta: f64, x: f64) -> f64 {
        (rate(beta) * x).exp() * (beta * x).cosh()
    }

    pub fn du_plus(beta: f64, x: f64) -> f64 {
        let r = rate(beta);
        (-r * x).exp() * (-r * (beta * x).cosh() + beta * (beta * x).sinh())
    }

    pub fn du_minus(beta: f64, x: f64) -> f64 {
        let r = rate(beta);
        (r * x).exp() * (r * (beta * x).cosh() + beta * (beta * x).sinh())
    }

    const PANELS: usize = 400;

    fn window(beta: f64) -> f64 {
        45.0 / (rate(beta) - beta)
    }

    /// `I1(x) = int_x^inf exp(r (x - z)) sech(beta z) dz`.
    pub fn i1(beta: f64, x: f64) -> f64 {
        let r = rate(beta);
        integrate_fixed(|t| (-r * t).exp() / (beta * (x + t)).cosh(), 0.0, window(beta), PANELS)
    }

    /// `I2(x) = int_-inf^x exp(-r (x - z)) sech(beta z) dz`.
    pub fn i2(beta: f64, x: f64) -> f64 {
        let r = rate(beta);
        integrate_fixed(|t| (-r * t).exp() / (beta * (x - t)).cosh(), 0.0, window(beta), PANELS)
    }

    /// Bounded solution and its derivative.
    pub fn u_b(beta: f64, x: f64) -> (f64, f64) {
        let r = rate(beta);
        let (a, b) = (i1(beta, x), i2(beta, x));
        let (ch, sh) = ((beta * x).cosh(), (beta * x).sinh());
        (ch * (a + b) / (2.0 * r), (r * ch * (a - b) + beta * sh * (a + b)) / (2.0 * r))
    }
}
