//! Run configuration: a TOML file with `[params]`, `[terrain]`, `[numerics]`
//! and `[output]` sections. Command-line flags override file values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub terrain: TerrainSection,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, rename = "D", skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrainSection {
    /// `flat`, `gaussian:A:B`, `sech:A:B`, `cosine:A:k`, `lncosh:beta`,
    /// `scaled:delta:<spec>` or `csv:PATH`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
}

macro_rules! numerics {
    ($( $(#[$doc:meta])* $name:ident : $ty:ty ),* $(,)?) => {
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct Numerics {
            $( $(#[$doc])* #[serde(default, skip_serializing_if = "Option::is_none")] pub $name: Option<$ty>, )*
        }

        impl Numerics {
            /// Takes every value set in `other`.
            pub fn overlay(&mut self, other: &Numerics) {
                $( if other.$name.is_some() { self.$name = other.$name.clone(); } )*
            }
        }
    };
}

numerics! {
    /// Slow-field half-width `L`.
    half_width: f64,
    /// Slow-field grid points.
    n: usize,
    second_order: bool,
    dx: f64,
    dt: f64,
    t_end: f64,
    sample_dt: f64,
    rtol: f64,
    tolerance: f64,
    bracket: (f64, f64),
    b_range: (f64, f64),
    x_range: (f64, f64),
    samples: usize,
    positions: Vec<f64>,
    /// `minus` or `plus`.
    branch: String,
    family: String,
    amplitude: f64,
    beta: f64,
    form: String,
    sigma: f64,
    /// `neumann` or `periodic`.
    boundary: String,
    /// `linearly-implicit` or `explicit`.
    reaction: String,
    finite_mu: bool,
    skeleton: bool,
    lambda_max: f64,
    scan_points: usize,
    snapshots: bool,
    k_aut: f64,
    rho_aut: f64,
    c_aut: f64,
    delta: f64,
    f_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<bool>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Values present in `other` replace those in `self`.
    pub fn overlay(&mut self, other: &RunConfig) {
        if other.command.is_some() {
            self.command = other.command.clone();
        }
        let p = &other.params;
        self.params.a = p.a.or(self.params.a);
        self.params.m = p.m.or(self.params.m);
        self.params.d = p.d.or(self.params.d);
        if other.terrain.spec.is_some() {
            self.terrain.spec = other.terrain.spec.clone();
        }
        self.numerics.overlay(&other.numerics);
        if other.output.dir.is_some() {
            self.output.dir = other.output.dir.clone();
        }
        self.output.plot = other.output.plot.or(self.output.plot);
    }
}

/// Parses `lo:hi`.
pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad number '{a}'"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad number '{b}'"))?;
    Ok((lo, hi))
}
