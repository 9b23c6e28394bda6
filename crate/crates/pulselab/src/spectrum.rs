//! Linear stability: essential spectrum, the fast reduced operator, the
//! nonlocal integral `R(lambda)`, the slow transmission function `t22`
//! and the small eigenvalue formulas.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::Family;
use crate::error::{PulseError, Result};
use crate::linalg::solve_tridiagonal;
use crate::model::{derive_scales, ModelParams};
use crate::pulse::{omega, omega_prime, Branch};
use crate::quad::integrate;
use crate::terrain::{Terrain, TerrainKind};

/// Poles of `R` sit at the two non-zero eigenvalues of the reduced operator.
pub const POLES: [f64; 2] = [1.25, -0.75];
pub const POLE_GUARD: f64 = 1e-3;
/// Below this modulus the translation mode is projected out of `V_in`.
pub const KERNEL_RADIUS: f64 = 0.1;

/// Right edge of the essential spectrum `(-inf, max(-m, -1)]` in the unscaled eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssentialSpectrum {
    pub sup: f64,
}

impl std::fmt::Display for EssentialSpectrum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(-inf, {}]", crate::fmt_g12(self.sup))
    }
}

pub fn essential_spectrum(m: f64) -> Result<EssentialSpectrum> {
    if !(m > 0.0) {
        return Err(PulseError::InvalidParameter(format!("m must be positive, got {m}")));
    }
    Ok(EssentialSpectrum { sup: (-m).max(-1.0) })
}

/// Uniform grid on `[-L, L]` for the fast variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastGrid {
    pub half_width: f64,
    pub step: f64,
}

impl Default for FastGrid {
    fn default() -> Self {
        Self { half_width: 40.0, step: 0.005 }
    }
}

impl FastGrid {
    pub fn nodes(&self) -> Vec<f64> {
        let n = (2.0 * self.half_width / self.step).round() as usize;
        let h = 2.0 * self.half_width / n as f64;
        (0..=n).map(|i| -self.half_width + i as f64 * h).collect()
    }
}

fn sturm_count_below(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        d = if i == 0 { a - x } else { a - x - off * off / d };
        if d == 0.0 {
            d = f64::EPSILON * (a.abs() + x.abs() + off.abs());
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn reduced_matrix(half_width: f64, n: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let h = 2.0 * half_width / (n + 1) as f64;
    let xi: Vec<f64> = (1..=n).map(|i| -half_width + i as f64 * h).collect();
    let diag = xi.iter().map(|&z| -2.0 / (h * h) - 1.0 + 2.0 * omega(z)).collect();
    (xi, diag, 1.0 / (h * h))
}

/// Largest `k` eigenvalues (descending) of the finite-difference reduced
/// operator `v'' - (1 - 3 sech^2(xi/2)) v` with Dirichlet ends and `n`
/// interior points, by Sturm-sequence bisection.
pub fn reduced_operator_eigs(half_width: f64, n: usize, k: usize) -> Result<Vec<f64>> {
    if !(half_width > 0.0) || n < 3 || k == 0 || k > n {
        return Err(PulseError::InvalidParameter(format!("bad reduced-operator grid (L = {half_width}, n = {n}, k = {k})")));
    }
    let (_, diag, off) = reduced_matrix(half_width, n);
    let lo0 = diag.iter().fold(f64::INFINITY, |a, &d| a.min(d - 2.0 * off));
    let hi0 = diag.iter().fold(f64::NEG_INFINITY, |a, &d| a.max(d + 2.0 * off));
    Ok((0..k)
        .map(|j| {
            let idx = n - 1 - j;
            let (mut lo, mut hi) = (lo0, hi0);
            while hi - lo > 1e-13 * (1.0 + hi.abs().max(lo.abs())) {
                let mid = 0.5 * (lo + hi);
                if sturm_count_below(&diag, off, mid) > idx {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect())
}

/// Unit eigenvector for an eigenvalue of the discretized reduced operator (inverse iteration).
pub fn reduced_operator_eigenvector(half_width: f64, n: usize, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (xi, diag, off) = reduced_matrix(half_width, n);
    let shift = lambda + 1e-9 * (1.0 + lambda.abs());
    let d: Vec<f64> = diag.iter().map(|a| a - shift).collect();
    let offs = vec![off; n];
    let mut v: Vec<f64> = xi.iter().map(|z| 1.0 + 0.1 * z.sin()).collect();
    for _ in 0..4 {
        v = solve_tridiagonal(&offs, &d, &offs, &v)?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok((xi, v))
}

/// `R(lambda)` with a flag for the pole guard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RValue {
    pub lambda: Complex64,
    pub r: Complex64,
    pub near_pole: bool,
}

fn check_fast_branch(lambda: Complex64) -> Result<Complex64> {
    let k = (Complex64::new(1.0, 0.0) + lambda).sqrt();
    if !(k.re > 0.0) {
        return Err(PulseError::OutsideDomain(format!("Re sqrt(1 + lambda) <= 0 at lambda = {lambda}")));
    }
    Ok(k)
}

pub fn near_pole(lambda: Complex64) -> bool {
    POLES.iter().any(|&p| (lambda - p).norm() < POLE_GUARD)
}

/// `R(lambda) = int omega V` where `(L^r - lambda) V = omega^2`, decaying at both ends.
pub fn eval_r(lambda: Complex64, grid: &FastGrid) -> Result<RValue> {
    let k = check_fast_branch(lambda)?;
    if near_pole(lambda) {
        return Ok(RValue { lambda, r: Complex64::new(f64::NAN, f64::NAN), near_pole: true });
    }
    let xi = grid.nodes();
    let n = xi.len();
    let h = xi[1] - xi[0];
    let ih2 = Complex64::new(1.0 / (h * h), 0.0);
    let om: Vec<f64> = xi.iter().map(|&z| omega(z)).collect();
    let mut sub = vec![ih2; n];
    let mut sup = vec![ih2; n];
    let mut diag: Vec<Complex64> = om.iter().map(|&w| -2.0 * ih2 - 1.0 - lambda + 2.0 * w).collect();
    let rhs: Vec<Complex64> = om.iter().map(|&w| Complex64::new(w * w, 0.0)).collect();
    // ghost nodes from V' = k V at the left end and V' = -k V at the right end
    diag[0] -= 2.0 * h * k * ih2;
    sup[0] = 2.0 * ih2;
    diag[n - 1] -= 2.0 * h * k * ih2;
    sub[n - 1] = 2.0 * ih2;
    let mut v = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    if lambda.norm() < KERNEL_RADIUS {
        let dw: Vec<f64> = xi.iter().map(|&z| omega_prime(z)).collect();
        let num: Complex64 = v.iter().zip(&dw).map(|(a, b)| a * b).sum();
        let den: f64 = dw.iter().map(|b| b * b).sum();
        let c = num / den;
        v.iter_mut().zip(&dw).for_each(|(a, b)| *a -= c * b);
    }
    let mut r = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        r += w * h * om[i] * v[i];
    }
    Ok(RValue { lambda, r, near_pole: false })
}

/// Dichotomy threshold `delta_c(lambda) = |sqrt(1+m lambda)| |sqrt((1+m lambda)/(2+m lambda))| / 4`.
pub fn delta_c_lambda(lambda: Complex64, m: f64) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let s = one + m * lambda;
    0.25 * s.sqrt().norm() * (s / (one + s)).sqrt().norm()
}

/// Infimum of `delta_c(lambda)` over the admissible region, `sqrt(6)/24`.
pub fn delta_c_stability() -> f64 {
    6f64.sqrt() / 24.0
}

/// Slope `p2(0)/u2(0)` of the slow solution decaying as `x -> -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowSlope {
    pub value: Complex64,
    pub delta_c: f64,
    /// `delta < delta_c(lambda)`; when false the value is still the numeric one.
    pub dichotomy_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowSlopeOptions {
    pub half_width: f64,
    pub step: f64,
}

impl Default for SlowSlopeOptions {
    fn default() -> Self {
        Self { half_width: 40.0, step: 0.005 }
    }
}

fn check_slow_branch(lambda: Complex64, m: f64) -> Result<()> {
    let edge = (-1.0f64).max(-1.0 / m);
    if lambda.im == 0.0 && lambda.re <= edge {
        return Err(PulseError::OutsideDomain(format!("lambda = {lambda} on the essential spectrum (edge {edge})")));
    }
    Ok(())
}

pub fn slow_slope_for_lambda(t: &Terrain, lambda: Complex64, m: f64, opts: &SlowSlopeOptions) -> Result<SlowSlope> {
    if !(m > 0.0) {
        return Err(PulseError::InvalidParameter(format!("m must be positive, got {m}")));
    }
    check_slow_branch(lambda, m)?;
    let one = Complex64::new(1.0, 0.0);
    let s = one + m * lambda;
    let delta_c = delta_c_lambda(lambda, m);
    let dichotomy_ok = t.delta < delta_c;
    if t.is_flat() {
        return Ok(SlowSlope { value: s.sqrt(), delta_c, dichotomy_ok });
    }
    let mut x0 = -opts.half_width;
    if let Some((lo, _)) = t.sample_range() {
        x0 = x0.max(lo);
    }
    let (f0, g0) = t.fg(x0);
    let rate = 0.5 * (-f0 + (f0 * f0 + 4.0 * (s - g0)).sqrt());
    let steps = (-x0 / opts.step).ceil().max(1.0) as usize;
    let h = -x0 / steps as f64;
    let rhs = |x: f64, u: Complex64, p: Complex64| {
        let (f, g) = t.fg(x);
        (p, (s - g) * u - f * p)
    };
    let (mut u, mut p) = (one, rate);
    for k in 0..steps {
        let x = x0 + k as f64 * h;
        let (a1, b1) = rhs(x, u, p);
        let (a2, b2) = rhs(x + 0.5 * h, u + 0.5 * h * a1, p + 0.5 * h * b1);
        let (a3, b3) = rhs(x + 0.5 * h, u + 0.5 * h * a2, p + 0.5 * h * b2);
        let (a4, b4) = rhs(x + h, u + h * a3, p + h * b3);
        u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        p += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        let n = u.norm() + p.norm();
        u /= n;
        p /= n;
    }
    if u.norm() < 1e-300 {
        return Err(PulseError::DegenerateNormalization(u.norm()));
    }
    Ok(SlowSlope { value: p / u, delta_c, dichotomy_ok })
}

/// Value of the slow transmission function at one `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct T22Value {
    pub lambda: Complex64,
    pub r: Complex64,
    pub slope: Complex64,
    pub t22: Complex64,
    pub near_pole: bool,
    pub dichotomy_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StabilityGrids {
    pub fast: FastGrid,
    pub slow: SlowSlopeOptions,
}

/// `t22(lambda) = 1 + (3 - R(lambda)) / (u0^2 mu S(lambda))` with `S` the slow slope.
pub fn nlep_residual(lambda: Complex64, t: &Terrain, m: f64, mu: f64, u0: f64, grids: &StabilityGrids) -> Result<T22Value> {
    let slope = slow_slope_for_lambda(t, lambda, m, &grids.slow)?;
    let r = eval_r(lambda, &grids.fast)?;
    let t22 = if r.near_pole {
        Complex64::new(f64::NAN, f64::NAN)
    } else {
        1.0 + (3.0 - r.r) / (u0 * u0 * mu * slope.value)
    };
    Ok(T22Value { lambda, r: r.r, slope: slope.value, t22, near_pole: r.near_pole, dichotomy_ok: slope.dichotomy_ok })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonOptions {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub n_re: usize,
    pub n_im: usize,
}

impl Default for SkeletonOptions {
    fn default() -> Self {
        Self { re_range: (-1.5, 1.5), im_range: (-1.5, 1.5), n_re: 400, n_im: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeEigOptions {
    pub lambda_max: f64,
    pub scan_points: usize,
    pub grids: StabilityGrids,
    pub skeleton: Option<SkeletonOptions>,
}

impl Default for LargeEigOptions {
    fn default() -> Self {
        Self { lambda_max: 10.0, scan_points: 600, grids: StabilityGrids::default(), skeleton: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeEigReport {
    pub u0: f64,
    /// Real roots of `t22` in the scaled eigenvalue `lambda`.
    pub roots: Vec<f64>,
    /// Real-axis samples of `t22`.
    pub scan: Vec<T22Value>,
    /// Zero contour of `Im[(R - 3)/S]`, as line segments.
    pub skeleton: Vec<[Complex64; 2]>,
}

impl LargeEigReport {
    /// Roots in the unscaled eigenvalue `m lambda`.
    pub fn unscaled_roots(&self, m: f64) -> Vec<f64> {
        self.roots.iter().map(|r| m * r).collect()
    }

    /// Columns `lambda_re, lambda_im, R_re, R_im, t22_re, t22_im`.
    pub fn write_scan_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["lambda_re", "lambda_im", "R_re", "R_im", "t22_re", "t22_im"])?;
        for s in &self.scan {
            w.write_record(
                [s.lambda.re, s.lambda.im, s.r.re, s.r.im, s.t22.re, s.t22.im].map(crate::fmt_g12),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Columns `segment, re, im`, two rows per segment.
    pub fn write_skeleton_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["segment", "re", "im"])?;
        for (k, seg) in self.skeleton.iter().enumerate() {
            for z in seg {
                w.write_record([k.to_string(), crate::fmt_g12(z.re), crate::fmt_g12(z.im)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn real_t22(lambda: f64, t: &Terrain, m: f64, mu: f64, u0: f64, grids: &StabilityGrids) -> Result<T22Value> {
    nlep_residual(Complex64::new(lambda, 0.0), t, m, mu, u0, grids)
}

/// Real roots of `t22` on `(max(-1, -1/m), lambda_max]` plus the optional skeleton.
pub fn find_large_eigs_for(t: &Terrain, m: f64, mu: f64, u0: f64, opts: &LargeEigOptions) -> Result<LargeEigReport> {
    let lo = (-1.0f64).max(-1.0 / m) + POLE_GUARD;
    let hi = opts.lambda_max;
    if !(hi > lo) {
        return Err(PulseError::InvalidParameter(format!("lambda_max = {hi} below the spectrum edge")));
    }
    // scan each pole-free piece separately so sign flips through a pole are ignored
    let mut cuts = vec![lo];
    for p in POLES {
        if p - POLE_GUARD > lo && p + POLE_GUARD < hi {
            cuts.push(p - POLE_GUARD);
            cuts.push(p + POLE_GUARD);
        }
    }
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let per = (opts.scan_points / (cuts.len() / 2)).max(8);
    let mut roots = vec![];
    let mut scan = vec![];
    for piece in cuts.chunks(2) {
        let (a, b) = (piece[0], piece[1]);
        let xs: Vec<f64> = (0..per).map(|i| a + (b - a) * i as f64 / (per - 1) as f64).collect();
        let vals: Vec<T22Value> =
            xs.par_iter().map(|&l| real_t22(l, t, m, mu, u0, &opts.grids)).collect::<Result<_>>()?;
        for i in 0..per - 1 {
            let (fa, fb) = (vals[i].t22.re, vals[i + 1].t22.re);
            if fa == 0.0 {
                roots.push(xs[i]);
            } else if fa * fb < 0.0 {
                let (mut x0, mut x1, mut f0) = (xs[i], xs[i + 1], fa);
                while x1 - x0 > 1e-10 {
                    let xm = 0.5 * (x0 + x1);
                    let fm = real_t22(xm, t, m, mu, u0, &opts.grids)?.t22.re;
                    if f0 * fm <= 0.0 {
                        x1 = xm;
                    } else {
                        x0 = xm;
                        f0 = fm;
                    }
                }
                roots.push(0.5 * (x0 + x1));
            }
        }
        scan.extend(vals);
    }
    let skeleton = match &opts.skeleton {
        Some(s) => skeleton(t, m, s, &opts.grids)?,
        None => vec![],
    };
    Ok(LargeEigReport { u0, roots, scan, skeleton })
}

/// Builds `u0` for the requested branch from the slow field, then scans.
pub fn find_large_eigs(t: &Terrain, params: &ModelParams, branch: Branch, opts: &LargeEigOptions) -> Result<LargeEigReport> {
    let mu = derive_scales(params).mu;
    let report = crate::pulse::existence_check(t, params)?;
    let u0 = report
        .roots
        .and_then(|r| r.get(branch))
        .ok_or_else(|| PulseError::NoPulse(report.failure().unwrap_or("no root on this branch").into()))?;
    find_large_eigs_for(t, params.m, mu, u0, opts)
}

/// Marching-squares zero contour of `Im[(R(lambda) - 3)/S(lambda)]`.
pub fn skeleton(t: &Terrain, m: f64, s: &SkeletonOptions, grids: &StabilityGrids) -> Result<Vec<[Complex64; 2]>> {
    let (nr, ni) = (s.n_re.max(2), s.n_im.max(2));
    let re = |i: usize| s.re_range.0 + (s.re_range.1 - s.re_range.0) * i as f64 / (nr - 1) as f64;
    let im = |j: usize| s.im_range.0 + (s.im_range.1 - s.im_range.0) * j as f64 / (ni - 1) as f64;
    let field: Vec<Vec<f64>> = (0..ni)
        .into_par_iter()
        .map(|j| {
            (0..nr)
                .map(|i| {
                    let l = Complex64::new(re(i), im(j));
                    let r = match eval_r(l, &grids.fast) {
                        Ok(v) if !v.near_pole => v.r,
                        _ => return f64::NAN,
                    };
                    match slow_slope_for_lambda(t, l, m, &grids.slow) {
                        Ok(sl) => ((r - 3.0) / sl.value).im,
                        Err(_) => f64::NAN,
                    }
                })
                .collect()
        })
        .collect();
    let cut = (-1.0f64).max(-1.0 / m);
    let mut segs = vec![];
    for j in 0..ni - 1 {
        for i in 0..nr - 1 {
            let (x0, x1, y0, y1) = (re(i), re(i + 1), im(j), im(j + 1));
            // cells straddling the branch cut carry a spurious sign change
            if y0 < 0.0 && y1 > 0.0 && x0 < cut {
                continue;
            }
            let c = [field[j][i], field[j][i + 1], field[j + 1][i + 1], field[j + 1][i]];
            if c.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let p = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)];
            let mut hits = vec![];
            for e in 0..4 {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                if (a < 0.0) != (b < 0.0) {
                    let w = a / (a - b);
                    let (pa, pb) = (p[e], p[(e + 1) % 4]);
                    hits.push(Complex64::new(pa.0 + w * (pb.0 - pa.0), pa.1 + w * (pb.1 - pa.1)));
                }
            }
            match hits.len() {
                2 => segs.push([hits[0], hits[1]]),
                4 => {
                    // saddle cell: pair by the centre value
                    let centre = 0.25 * c.iter().sum::<f64>();
                    if (centre < 0.0) == (c[0] < 0.0) {
                        segs.push([hits[0], hits[3]]);
                        segs.push([hits[1], hits[2]]);
                    } else {
                        segs.push([hits[0], hits[1]]);
                        segs.push([hits[2], hits[3]]);
                    }
                }
                _ => {}
            }
        }
    }
    Ok(segs)
}

/// Which closed form of the small eigenvalue to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmallEigForm {
    /// `2 tau delta/(u0 - tau(1 - mu u0)) int e^{-2x}[f~'(1 - mu u0) + g~'(e^x + mu u0 - 1)]`
    General,
    /// `mu, tau << 1`: `(2/3) tau delta int e^{-2x}[f~' + g~'(e^x - 1)]`
    DoubleLimit,
    /// Same as `General` written through the height function `h~`.
    HeightFunction,
    /// `(2/3) delta tau [h~(0) + int h~ (e^{-x} - 4 e^{-2x})]`
    HeightFunctionLimit,
    /// Shape read as `h^` with `h~(x) = h^(sigma x)`: `tau delta sigma^2 (1 - mu u0) h^''(0)/(u0 - tau(1 - mu u0))`.
    WeakCurvature { sigma: f64 },
    /// Shape read as `h(` with `h~(x) = h((x/sigma)`: `2 tau delta/(...) [-mu u0 h(''(0)/sigma^2 + (1 - 2 mu u0) h((0)]`.
    StrongCurvature { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallEigInput<'a> {
    pub shape: &'a TerrainKind,
    pub delta: f64,
    pub tau: f64,
    pub mu: f64,
    pub u0: f64,
}

impl<'a> SmallEigInput<'a> {
    /// Shape and `delta` from a scaled terrain; other terrains count as scale 1.
    pub fn from_terrain(t: &'a Terrain, tau: f64, mu: f64, u0: f64) -> Self {
        let (delta, shape) = t.scale_and_shape();
        Self { shape, delta, tau, mu, u0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallEig {
    pub lambda: f64,
    /// `tau (1 - mu u0) > 0.1 u0`: outside the small-`tau` regime.
    pub tau_warning: bool,
}

/// Upper end of the quadrature window.
const SMALL_EIG_WINDOW: f64 = 40.0;

pub fn small_eigenvalue(form: SmallEigForm, inp: &SmallEigInput) -> Result<SmallEig> {
    let SmallEigInput { shape, delta, tau, mu, u0 } = *inp;
    if !(u0 > 0.0) || !(tau >= 0.0) || !(mu >= 0.0) {
        return Err(PulseError::InvalidParameter(format!("need u0 > 0, tau >= 0, mu >= 0 (got {u0}, {tau}, {mu})")));
    }
    let q = 1.0 - mu * u0;
    let den = u0 - tau * q;
    if !(den > 0.0) {
        return Err(PulseError::InvalidParameter(format!("u0 - tau(1 - mu u0) = {den} is not positive")));
    }
    let pref = 2.0 * tau * delta / den;
    let jet = |x: f64| {
        shape
            .height_jet(x)
            .ok_or_else(|| PulseError::InvalidParameter("height-function form needs a height-derived shape".into()))
    };
    let lambda = match form {
        SmallEigForm::General => {
            pref * integrate(
                |x| {
                    let c = shape.coefficients(x);
                    (-2.0 * x).exp() * (c.df * q + c.dg * (x.exp() + mu * u0 - 1.0))
                },
                0.0,
                SMALL_EIG_WINDOW,
            )
        }
        SmallEigForm::DoubleLimit => {
            2.0 / 3.0
                * tau
                * delta
                * integrate(
                    |x| {
                        let c = shape.coefficients(x);
                        (-2.0 * x).exp() * (c.df + c.dg * (x.exp() - 1.0))
                    },
                    0.0,
                    SMALL_EIG_WINDOW,
                )
        }
        SmallEigForm::HeightFunction => {
            let j0 = jet(0.0)?;
            jet(1.0)?;
            let tail = integrate(
                |x| shape.height_jet(x).map_or(0.0, |j| j[0]) * ((-x).exp() - 4.0 * q * (-2.0 * x).exp()),
                0.0,
                SMALL_EIG_WINDOW,
            );
            pref * (-mu * u0 * j0[2] + j0[0] * (1.0 - 2.0 * mu * u0) + tail)
        }
        SmallEigForm::HeightFunctionLimit => {
            let j0 = jet(0.0)?;
            let tail = integrate(
                |x| shape.height_jet(x).map_or(0.0, |j| j[0]) * ((-x).exp() - 4.0 * (-2.0 * x).exp()),
                0.0,
                SMALL_EIG_WINDOW,
            );
            2.0 / 3.0 * delta * tau * (j0[0] + tail)
        }
        SmallEigForm::WeakCurvature { sigma } => tau * delta * sigma * sigma * q / den * jet(0.0)?[2],
        SmallEigForm::StrongCurvature { sigma } => {
            let j0 = jet(0.0)?;
            pref * (-mu * u0 * j0[2] / (sigma * sigma) + (1.0 - 2.0 * mu * u0) * j0[0])
        }
    };
    Ok(SmallEig { lambda, tau_warning: tau * q > 0.1 * u0 })
}

/// Root in `B` of the height-function limit form for a unit-amplitude family shape.
pub fn small_eig_critical_curvature(family: Family, b_lo: f64, b_hi: f64) -> Result<Option<f64>> {
    let eval = |b: f64| -> Result<f64> {
        let shape = family.kind(1.0, b);
        let inp = SmallEigInput { shape: &shape, delta: 1.0, tau: 1.0, mu: 0.0, u0: 3.0 };
        Ok(small_eigenvalue(SmallEigForm::HeightFunctionLimit, &inp)?.lambda)
    };
    let n = 60;
    let bs: Vec<f64> = (0..n).map(|i| b_lo + (b_hi - b_lo) * i as f64 / (n - 1) as f64).collect();
    let mut prev = eval(bs[0])?;
    for w in bs.windows(2) {
        let next = eval(w[1])?;
        if prev == 0.0 {
            return Ok(Some(w[0]));
        }
        if prev * next < 0.0 {
            let (mut a, mut b, mut fa) = (w[0], w[1], prev);
            while b - a > 1e-12 {
                let m = 0.5 * (a + b);
                let fm = eval(m)?;
                if fa * fm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        prev = next;
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub essential_sup: f64,
    pub reduced_eigs: Vec<f64>,
    /// Real roots of `t22`, unscaled (`m lambda`).
    pub large_eig_roots: Vec<f64>,
    pub small_eig: f64,
    /// `formula` for scaled terrains, otherwise `pulse-ode`.
    pub small_eig_source: &'static str,
    pub delta_c: f64,
    pub u0: f64,
}

/// Assembles the full report for one pulse branch.
pub fn spectrum_report(t: &Terrain, params: &ModelParams, branch: Branch, opts: &LargeEigOptions) -> Result<SpectrumReport> {
    let sc = derive_scales(params);
    let large = find_large_eigs(t, params, branch, opts)?;
    let (small_eig, small_eig_source) = match t.kind {
        TerrainKind::ScaledPair { .. } => {
            let inp = SmallEigInput::from_terrain(t, sc.tau, sc.mu, large.u0);
            (small_eigenvalue(SmallEigForm::General, &inp)?.lambda, "formula")
        }
        _ => {
            let e = crate::dynamics::fixed_point_eigenvalue(t, 0.0, sc.tau, &Default::default())?;
            (e.lambda, "pulse-ode")
        }
    };
    Ok(SpectrumReport {
        essential_sup: essential_spectrum(params.m)?.sup,
        reduced_eigs: reduced_operator_eigs(40.0, 4000, 3)?,
        large_eig_roots: large.unscaled_roots(params.m),
        small_eig,
        small_eig_source,
        delta_c: delta_c_stability(),
        u0: large.u0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_at_zero() {
        let r = eval_r(Complex64::new(0.0, 0.0), &FastGrid::default()).unwrap();
        assert!((r.r.re - 6.0).abs() < 1e-4 && r.r.im.abs() < 1e-12, "{:?}", r.r);
    }

    #[test]
    fn sturm_top_three() {
        let e = reduced_operator_eigs(40.0, 4000, 3).unwrap();
        for (a, b) in e.iter().zip([1.25, 0.0, -0.75]) {
            assert!((a - b).abs() < 1e-3, "{e:?}");
        }
    }
}
