//! Terrain catalog: the advection/reaction coefficient pair `(f, g)`,
//! usually `f = h'` and `g = h''` for a height function `h`.

use std::f64::consts::PI;

use crate::error::{PulseError, Result};
use crate::spline::CubicSpline;

/// Half-width of the window on which the sup-norm `delta` is measured.
pub const DELTA_HALF_WIDTH: f64 = 50.0;
const DELTA_GRID: usize = 4001;

/// Coefficients and their first derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coefficients {
    pub f: f64,
    pub g: f64,
    pub df: f64,
    pub dg: f64,
}

/// Sampled `(f, g)` with cubic interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPair {
    f: CubicSpline,
    g: CubicSpline,
}

impl SampledPair {
    pub fn new(x: Vec<f64>, f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        Ok(Self { f: CubicSpline::new(x.clone(), f)?, g: CubicSpline::new(x, g)? })
    }

    /// Samples two closures on a uniform grid over `[-half_width, half_width]`.
    pub fn from_fn(half_width: f64, n: usize, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> Result<Self> {
        let x: Vec<f64> = (0..n).map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64).collect();
        let fs = x.iter().map(|&t| f(t)).collect();
        let gs = x.iter().map(|&t| g(t)).collect();
        Self::new(x, fs, gs)
    }

    pub fn range(&self) -> (f64, f64) {
        self.f.range()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TerrainKind {
    Flat,
    /// `h = A exp(-B x^2)`
    Gaussian { amplitude: f64, rate: f64 },
    /// `h = A sech(B x)`
    Sech { amplitude: f64, rate: f64 },
    /// `h = A cos(B x)`
    Cosine { amplitude: f64, wavenumber: f64 },
    /// `h = -2 ln cosh(beta x)`
    LnCosh { beta: f64 },
    /// `(f, g) = scale * (f~, g~)` with the shape taken from another kind.
    ScaledPair { scale: f64, shape: Box<TerrainKind> },
    Custom(SampledPair),
}

impl TerrainKind {
    pub fn coefficients(&self, x: f64) -> Coefficients {
        if let Some([_, h1, h2, h3]) = self.height_jet(x) {
            return Coefficients { f: h1, g: h2, df: h2, dg: h3 };
        }
        match self {
            TerrainKind::ScaledPair { scale, shape } => {
                let c = shape.coefficients(x);
                Coefficients { f: scale * c.f, g: scale * c.g, df: scale * c.df, dg: scale * c.dg }
            }
            TerrainKind::Custom(s) => {
                let (f, df) = s.f.eval(x);
                let (g, dg) = s.g.eval(x);
                Coefficients { f, g, df, dg }
            }
            _ => unreachable!("height-derived kinds handled above"),
        }
    }

    /// `[h, h', h'', h''']` for kinds derived from a height function.
    pub fn height_jet(&self, x: f64) -> Option<[f64; 4]> {
        match *self {
            TerrainKind::Flat => Some([0.0; 4]),
            TerrainKind::Gaussian { amplitude: a, rate: b } => {
                let e = a * (-b * x * x).exp();
                Some([
                    e,
                    -2.0 * b * x * e,
                    (4.0 * b * b * x * x - 2.0 * b) * e,
                    (12.0 * b * b * x - 8.0 * b * b * b * x * x * x) * e,
                ])
            }
            TerrainKind::Sech { amplitude: a, rate: b } => {
                let s = 1.0 / (b * x).cosh();
                let t = (b * x).tanh();
                Some([
                    a * s,
                    -a * b * s * t,
                    a * b * b * s * (1.0 - 2.0 * s * s),
                    -a * b * b * b * s * t * (1.0 - 6.0 * s * s),
                ])
            }
            TerrainKind::Cosine { amplitude: a, wavenumber: b } => {
                let (sn, cs) = (b * x).sin_cos();
                Some([a * cs, -a * b * sn, -a * b * b * cs, a * b * b * b * sn])
            }
            TerrainKind::LnCosh { beta } => {
                let bx = beta * x;
                let t = bx.tanh();
                let s2 = 1.0 / (bx.cosh() * bx.cosh());
                // -2 ln cosh(bx) without overflow for large |bx|
                let ax = bx.abs();
                let lncosh = ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2;
                Some([
                    -2.0 * lncosh,
                    -2.0 * beta * t,
                    -2.0 * beta * beta * s2,
                    4.0 * beta * beta * beta * s2 * t,
                ])
            }
            TerrainKind::ScaledPair { scale, ref shape } => shape.height_jet(x).map(|j| j.map(|v| scale * v)),
            TerrainKind::Custom(_) => None,
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            TerrainKind::Cosine { wavenumber, .. } if *wavenumber != 0.0 => Some(2.0 * PI / wavenumber.abs()),
            TerrainKind::ScaledPair { shape, .. } => shape.period(),
            _ => None,
        }
    }

    pub fn is_flat(&self) -> bool {
        match self {
            TerrainKind::Flat => true,
            TerrainKind::Gaussian { amplitude, .. }
            | TerrainKind::Sech { amplitude, .. }
            | TerrainKind::Cosine { amplitude, .. } => *amplitude == 0.0,
            TerrainKind::LnCosh { beta } => *beta == 0.0,
            TerrainKind::ScaledPair { scale, shape } => *scale == 0.0 || shape.is_flat(),
            TerrainKind::Custom(_) => false,
        }
    }

    fn analytically_symmetric(&self) -> Option<bool> {
        match self {
            TerrainKind::Custom(_) => None,
            TerrainKind::ScaledPair { shape, .. } => shape.analytically_symmetric(),
            _ => Some(true),
        }
    }

    pub fn label(&self) -> String {
        match self {
            TerrainKind::Flat => "flat".into(),
            TerrainKind::Gaussian { amplitude, rate } => format!("gaussian:{amplitude}:{rate}"),
            TerrainKind::Sech { amplitude, rate } => format!("sech:{amplitude}:{rate}"),
            TerrainKind::Cosine { amplitude, wavenumber } => format!("cosine:{amplitude}:{wavenumber}"),
            TerrainKind::LnCosh { beta } => format!("lncosh:{beta}"),
            TerrainKind::ScaledPair { scale, shape } => format!("scaled:{scale}:{}", shape.label()),
            TerrainKind::Custom(_) => "custom".into(),
        }
    }
}

impl std::str::FromStr for TerrainKind {
    type Err = PulseError;

    /// Parses the labels produced by [`TerrainKind::label`] (except `custom`).
    fn from_str(spec: &str) -> Result<Self> {
        let bad = || PulseError::InvalidParameter(format!("unrecognised terrain spec '{spec}'"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = spec.trim().splitn(2, ':').collect();
        let args: Vec<&str> = parts.get(1).map(|r| r.split(':').collect()).unwrap_or_default();
        let two = || -> Result<(f64, f64)> {
            match args[..] {
                [p, q] => Ok((num(p)?, num(q)?)),
                _ => Err(bad()),
            }
        };
        match parts[0].trim().to_ascii_lowercase().as_str() {
            "flat" if args.is_empty() => Ok(TerrainKind::Flat),
            "gaussian" => two().map(|(amplitude, rate)| TerrainKind::Gaussian { amplitude, rate }),
            "sech" => two().map(|(amplitude, rate)| TerrainKind::Sech { amplitude, rate }),
            "cosine" => two().map(|(amplitude, wavenumber)| TerrainKind::Cosine { amplitude, wavenumber }),
            "lncosh" if args.len() == 1 => Ok(TerrainKind::LnCosh { beta: num(args[0])? }),
            "scaled" => {
                let rest = parts.get(1).ok_or_else(bad)?;
                let (scale, shape) = rest.split_once(':').ok_or_else(bad)?;
                Ok(TerrainKind::ScaledPair { scale: num(scale)?, shape: Box::new(shape.parse()?) })
            }
            _ => Err(bad()),
        }
    }
}

impl SampledPair {
    /// Reads a headered CSV with columns `x, f, g`.
    pub fn read_csv(path: &std::path::Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let (mut x, mut f, mut g) = (vec![], vec![], vec![]);
        for rec in r.records() {
            let rec = rec?;
            let val = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| PulseError::InvalidParameter(format!("bad terrain row {:?}", rec)))
            };
            x.push(val(0)?);
            f.push(val(1)?);
            g.push(val(2)?);
        }
        Self::new(x, f, g)
    }
}

/// A terrain together with its sup-norm and symmetry flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Terrain {
    pub kind: TerrainKind,
    pub delta: f64,
    pub symmetric: bool,
}

impl Terrain {
    pub fn new(kind: TerrainKind) -> Result<Self> {
        validate(&kind)?;
        let delta = sup_norm(&kind, DELTA_HALF_WIDTH, DELTA_GRID);
        let symmetric = match kind.analytically_symmetric() {
            Some(s) => s,
            None => {
                let (lo, hi) = sampled_range(&kind).unwrap_or((0.0, 0.0));
                let half = (-lo).min(hi);
                if half <= 0.0 {
                    false
                } else {
                    let (o, e) = symmetry_residuals(&kind, half, DELTA_GRID);
                    o <= 1e-12 && e <= 1e-12
                }
            }
        };
        Ok(Self { kind, delta, symmetric })
    }

    /// Terrain from a spec string; `csv:PATH` loads sampled coefficients.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.trim().strip_prefix("csv:") {
            Some(path) => Self::custom(SampledPair::read_csv(std::path::Path::new(path))?),
            None => Self::new(spec.parse()?),
        }
    }

    pub fn flat() -> Self {
        Self { kind: TerrainKind::Flat, delta: 0.0, symmetric: true }
    }

    pub fn gaussian(amplitude: f64, rate: f64) -> Result<Self> {
        Self::new(TerrainKind::Gaussian { amplitude, rate })
    }

    pub fn sech(amplitude: f64, rate: f64) -> Result<Self> {
        Self::new(TerrainKind::Sech { amplitude, rate })
    }

    pub fn cosine(amplitude: f64, wavenumber: f64) -> Result<Self> {
        Self::new(TerrainKind::Cosine { amplitude, wavenumber })
    }

    pub fn lncosh(beta: f64) -> Result<Self> {
        Self::new(TerrainKind::LnCosh { beta })
    }

    pub fn scaled(scale: f64, shape: TerrainKind) -> Result<Self> {
        Self::new(TerrainKind::ScaledPair { scale, shape: Box::new(shape) })
    }

    pub fn custom(samples: SampledPair) -> Result<Self> {
        Self::new(TerrainKind::Custom(samples))
    }

    /// Checked evaluation of `(f, g)`; sampled terrains refuse to extrapolate.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        if !x.is_finite() {
            return Err(PulseError::InvalidParameter(format!("non-finite position {x}")));
        }
        if let Some((lo, hi)) = self.sample_range() {
            if x < lo || x > hi {
                return Err(PulseError::Extrapolation { x, lo, hi });
            }
        }
        Ok(self.fg(x))
    }

    /// Unchecked `(f, g)`; sampled terrains are held constant outside their range.
    #[inline]
    pub fn fg(&self, x: f64) -> (f64, f64) {
        let c = self.kind.coefficients(x);
        (c.f, c.g)
    }

    #[inline]
    pub fn coefficients(&self, x: f64) -> Coefficients {
        self.kind.coefficients(x)
    }

    pub fn period(&self) -> Option<f64> {
        self.kind.period()
    }

    pub fn is_flat(&self) -> bool {
        self.kind.is_flat()
    }

    pub fn sample_range(&self) -> Option<(f64, f64)> {
        sampled_range(&self.kind)
    }

    /// Scale factor and unscaled shape; non-scaled terrains report scale 1.
    pub fn scale_and_shape(&self) -> (f64, &TerrainKind) {
        match &self.kind {
            TerrainKind::ScaledPair { scale, shape } => (*scale, shape),
            k => (1.0, k),
        }
    }

    pub fn symmetry_residuals(&self, half_width: f64, n: usize) -> (f64, f64) {
        symmetry_residuals(&self.kind, half_width, n)
    }
}

fn sampled_range(k: &TerrainKind) -> Option<(f64, f64)> {
    match k {
        TerrainKind::Custom(s) => Some(s.range()),
        TerrainKind::ScaledPair { shape, .. } => sampled_range(shape),
        _ => None,
    }
}

fn validate(kind: &TerrainKind) -> Result<()> {
    let bad = |what: &str, v: f64| Err(PulseError::InvalidParameter(format!("{what} must be finite, got {v}")));
    match kind {
        TerrainKind::Flat | TerrainKind::Custom(_) => Ok(()),
        TerrainKind::Gaussian { amplitude, rate } | TerrainKind::Sech { amplitude, rate } => {
            if !amplitude.is_finite() {
                return bad("amplitude", *amplitude);
            }
            if !(rate.is_finite() && *rate > 0.0) {
                return Err(PulseError::InvalidParameter(format!("rate must be positive, got {rate}")));
            }
            Ok(())
        }
        TerrainKind::Cosine { amplitude, wavenumber } => {
            if !amplitude.is_finite() {
                return bad("amplitude", *amplitude);
            }
            if !(wavenumber.is_finite() && *wavenumber > 0.0) {
                return Err(PulseError::InvalidParameter(format!("wavenumber must be positive, got {wavenumber}")));
            }
            Ok(())
        }
        TerrainKind::LnCosh { beta } => {
            if !(beta.is_finite() && *beta >= 0.0) {
                return Err(PulseError::InvalidParameter(format!("beta must be non-negative, got {beta}")));
            }
            Ok(())
        }
        TerrainKind::ScaledPair { scale, shape } => {
            if !scale.is_finite() {
                return bad("scale", *scale);
            }
            validate(shape)
        }
    }
}

fn symmetry_residuals(kind: &TerrainKind, half_width: f64, n: usize) -> (f64, f64) {
    let mut odd: f64 = 0.0;
    let mut even: f64 = 0.0;
    for i in 0..n {
        let x = half_width * i as f64 / (n - 1).max(1) as f64;
        let p = kind.coefficients(x);
        let q = kind.coefficients(-x);
        odd = odd.max((p.f + q.f).abs());
        even = even.max((p.g - q.g).abs());
    }
    (odd, even)
}

fn sup_norm(kind: &TerrainKind, half_width: f64, n: usize) -> f64 {
    let s = |x: f64| {
        let c = kind.coefficients(x);
        c.f.hypot(c.g)
    };
    let step = 2.0 * half_width / (n - 1) as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..n {
        let v = s(-half_width + step * i as f64);
        if v > best.1 {
            best = (i, v);
        }
    }
    let centre = -half_width + step * best.0 as f64;
    let lo = (centre - step).max(-half_width);
    let hi = (centre + step).min(half_width);
    best.1.max(golden_max(s, lo, hi))
}

/// Golden-section search for the maximum of a unimodal function.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (hi - lo).abs() < 1e-13 {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    fc.max(fd).max(f(lo)).max(f(hi))
}

/// Sup-norm of `sqrt(f^2 + g^2)` on `[-L, L]`: grid search plus golden-section refinement.
pub fn terrain_delta(t: &Terrain, half_width: f64, n: usize) -> Result<f64> {
    if !(half_width > 0.0) || n < 100 {
        return Err(PulseError::InvalidParameter("terrain_delta needs L > 0 and n >= 100".into()));
    }
    Ok(sup_norm(&t.kind, half_width, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_values_at_origin() {
        assert_eq!(Terrain::flat().fg(1.3), (0.0, 0.0));
        let (f, g) = Terrain::lncosh(1.0).unwrap().fg(0.0);
        assert!(f.abs() < 1e-15 && (g + 2.0).abs() < 1e-15);
        let (f, g) = Terrain::gaussian(1.0, 0.5).unwrap().fg(0.0);
        assert!(f.abs() < 1e-15 && (g + 1.0).abs() < 1e-15);
    }

    #[test]
    fn delta_values() {
        let t = Terrain::lncosh(0.1).unwrap();
        assert!((t.delta - 0.2).abs() < 1e-3, "{}", t.delta);
        let t = Terrain::gaussian(1.0, 0.5).unwrap();
        assert!(t.delta >= 1.0);
    }

    #[test]
    fn custom_refuses_extrapolation() {
        let s = SampledPair::from_fn(5.0, 101, |x| x.cos(), |x| x.cos()).unwrap();
        let t = Terrain::custom(s).unwrap();
        assert!(t.eval(6.0).is_err());
        assert!(t.eval(1.0).is_ok());
        assert!(!t.symmetric);
    }

    #[test]
    fn lncosh_height_is_overflow_safe() {
        let j = TerrainKind::LnCosh { beta: 1.0 }.height_jet(800.0).unwrap();
        assert!(j[0].is_finite() && (j[0] + 2.0 * (800.0 - std::f64::consts::LN_2)).abs() < 1e-9);
    }
}
