//! Command-line front end: argument parsing, config merging and one runner per subcommand.

pub mod config;

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use pulselab::dichotomy::{self, Bound};
use pulselab::dynamics::{self, DaeOptions, Family, Regime};
use pulselab::model::{check_assumptions, derive_scales, ModelParams};
use pulselab::pde::{self, Boundary, PdeState, ReactionTreatment, RunOptions, StepOptions};
use pulselab::pulse::{self, Branch};
use pulselab::slowfield::{self, SlowGrid};
use pulselab::spectrum::{self, LargeEigOptions, SkeletonOptions, SmallEigForm, SmallEigInput};
use pulselab::terrain::Terrain;
use pulselab::{fmt_g12, PulseError};

pub use config::{parse_range, Numerics, RunConfig};

pub const DEFAULT_OUT: &str = "pulselab_out";
pub const OUT_ENV: &str = "PULSELAB_OUT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] PulseError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pulselab", version, about = "Pulses of the extended Klausmeier model on varying terrain")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct Global {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the effective configuration to this file.
    #[arg(long = "save-config", global = true)]
    pub save_config: Option<PathBuf>,
    /// Output directory (the PULSELAB_OUT environment variable takes precedence).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Emit gnuplot scripts next to the CSV files.
    #[arg(long, global = true)]
    pub plot: bool,
    #[arg(long, global = true)]
    pub a: Option<f64>,
    #[arg(long, global = true)]
    pub m: Option<f64>,
    #[arg(long = "D", global = true)]
    pub d: Option<f64>,
    /// flat | gaussian:A:B | sech:A:B | cosine:A:k | lncosh:beta | scaled:delta:SPEC | csv:PATH
    #[arg(long, global = true)]
    pub terrain: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report which modelling assumptions the terrain and parameters satisfy.
    Check,
    /// Dichotomy constants and the admissible slope interval.
    DichotomyBounds(DichotomyArgs),
    /// Solve the slow background and decaying solutions.
    Slowfield(SlowArgs),
    /// Existence check and leading-order profile of a stationary pulse.
    ConstructPulse(PulseArgs),
    /// Essential spectrum, reduced operator, large and small eigenvalues.
    Spectrum(SpectrumArgs),
    /// Closed-form small eigenvalue for a scaled terrain.
    SmallEig(SmallEigArgs),
    /// Integrate the pulse-location ODE.
    PulseOde(PulseOdeArgs),
    /// Fixed points of the single-pulse ODE and their eigenvalues.
    FixedPoints(FixedPointArgs),
    /// Pitchfork continuation in the curvature parameter B.
    Bifurcate(BifurcateArgs),
    /// Symmetric two-pulse configuration on ln-cosh terrain.
    TwoPulse(TwoPulseArgs),
    /// Direct simulation of the PDE.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::DichotomyBounds(_) => "dichotomy-bounds",
            Command::Slowfield(_) => "slowfield",
            Command::ConstructPulse(_) => "construct-pulse",
            Command::Spectrum(_) => "spectrum",
            Command::SmallEig(_) => "small-eig",
            Command::PulseOde(_) => "pulse-ode",
            Command::FixedPoints(_) => "fixed-points",
            Command::Bifurcate(_) => "bifurcate",
            Command::TwoPulse(_) => "two-pulse",
            Command::Simulate(_) => "simulate",
        }
    }

    fn numerics(&self) -> Numerics {
        let mut n = Numerics::default();
        match self {
            Command::Check => {}
            Command::DichotomyBounds(a) => {
                n.k_aut = a.k_aut;
                n.rho_aut = a.rho_aut;
                n.c_aut = a.c_aut;
                n.delta = a.delta;
                n.f_norm = a.f_norm;
            }
            Command::Slowfield(a) => {
                n.half_width = a.half_width;
                n.n = a.n;
                n.second_order = a.second_order.then_some(true);
            }
            Command::ConstructPulse(a) => n.branch = a.branch.clone(),
            Command::Spectrum(a) => {
                n.branch = a.branch.clone();
                n.skeleton = a.skeleton.then_some(true);
                n.lambda_max = a.lambda_max;
                n.scan_points = a.scan_points;
            }
            Command::SmallEig(a) => {
                n.form = a.form.clone();
                n.sigma = a.sigma;
                n.branch = a.branch.clone();
            }
            Command::PulseOde(a) => {
                n.positions = a.positions.clone();
                n.t_end = a.t_end;
                n.rtol = a.rtol;
                n.finite_mu = a.finite_mu.then_some(true);
            }
            Command::FixedPoints(a) => {
                n.bracket = a.bracket;
                n.finite_mu = a.finite_mu.then_some(true);
            }
            Command::Bifurcate(a) => {
                n.family = a.family.clone();
                n.amplitude = a.amplitude;
                n.b_range = a.b_range;
                n.samples = a.samples;
            }
            Command::TwoPulse(a) => n.beta = a.beta,
            Command::Simulate(a) => {
                n.positions = a.positions.clone();
                n.t_end = a.t_end;
                n.sample_dt = a.sample_dt;
                n.dt = a.dt;
                n.dx = a.dx;
                n.x_range = a.x_range;
                n.boundary = a.boundary.clone();
                n.reaction = a.reaction.clone();
                n.snapshots = a.snapshots.then_some(true);
            }
        }
        n
    }
}

fn range_arg(s: &str) -> Result<(f64, f64), String> {
    parse_range(s)
}

#[derive(Debug, Args)]
pub struct DichotomyArgs {
    #[arg(long = "K-aut")]
    pub k_aut: Option<f64>,
    #[arg(long = "rho-aut")]
    pub rho_aut: Option<f64>,
    #[arg(long = "C-aut")]
    pub c_aut: Option<f64>,
    /// Defaults to the sup-norm of the terrain.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "F-norm")]
    pub f_norm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SlowArgs {
    #[arg(long = "L")]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Skip Richardson extrapolation.
    #[arg(long)]
    pub second_order: bool,
}

#[derive(Debug, Args)]
pub struct PulseArgs {
    /// minus | plus
    #[arg(long)]
    pub branch: Option<String>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub branch: Option<String>,
    /// Trace the skeleton curves in the complex plane.
    #[arg(long)]
    pub skeleton: bool,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub scan_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SmallEigArgs {
    /// general | double-limit | height-function | height-function-limit | weak-curvature | strong-curvature
    #[arg(long)]
    pub form: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub branch: Option<String>,
}

#[derive(Debug, Args)]
pub struct PulseOdeArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub positions: Option<Vec<f64>>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Solve the finite-mu DAE instead of the limit problem.
    #[arg(long)]
    pub finite_mu: bool,
}

#[derive(Debug, Args)]
pub struct FixedPointArgs {
    #[arg(long, value_parser = range_arg, allow_hyphen_values = true)]
    pub bracket: Option<(f64, f64)>,
    #[arg(long)]
    pub finite_mu: bool,
}

#[derive(Debug, Args)]
pub struct BifurcateArgs {
    /// gaussian | sech | cosine
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long = "A")]
    pub amplitude: Option<f64>,
    #[arg(long = "B-range", value_parser = range_arg)]
    pub b_range: Option<(f64, f64)>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TwoPulseArgs {
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub positions: Option<Vec<f64>>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub sample_dt: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long, value_parser = range_arg, allow_hyphen_values = true)]
    pub x_range: Option<(f64, f64)>,
    /// neumann | periodic
    #[arg(long)]
    pub boundary: Option<String>,
    /// linearly-implicit | explicit
    #[arg(long)]
    pub reaction: Option<String>,
    /// Keep a CSV snapshot at every sample time.
    #[arg(long)]
    pub snapshots: bool,
}

/// Ordered `key=value` lines, each optionally annotated with its defining formula.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, String, String)>,
}

impl Summary {
    pub fn num(&mut self, key: &str, v: f64, formula: &str) {
        self.entries.push((key.into(), fmt_g12(v), formula.into()));
    }

    pub fn text(&mut self, key: &str, v: impl ToString, formula: &str) {
        self.entries.push((key.into(), v.to_string(), formula.into()));
    }

    pub fn list(&mut self, key: &str, v: &[f64], formula: &str) {
        let s = v.iter().map(|x| fmt_g12(*x)).collect::<Vec<_>>().join(";");
        self.entries.push((key.into(), s, formula.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.0 == key).map(|e| e.1.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v, f) in &self.entries {
            if f.is_empty() {
                let _ = writeln!(out, "{k}={v}");
            } else {
                let _ = writeln!(out, "{k}={v}  # {f}");
            }
        }
        out
    }

    /// Inverse of [`Summary::render`] for the key/value part.
    pub fn parse(text: &str) -> Vec<(String, String)> {
        text.lines()
            .filter_map(|l| {
                let body = l.split("  # ").next()?;
                let (k, v) = body.split_once('=')?;
                Some((k.trim().to_string(), v.trim().to_string()))
            })
            .collect()
    }
}

/// Everything a runner needs after merging file, flags and environment.
pub struct Context {
    pub config: RunConfig,
    pub params: ModelParams,
    pub terrain: Terrain,
    pub out: PathBuf,
    pub plot: bool,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn num(&self) -> &Numerics {
        &self.config.numerics
    }

    fn branch(&self) -> Result<Branch, CliError> {
        match self.num().branch.as_deref().unwrap_or("minus") {
            "minus" | "-" => Ok(Branch::Minus),
            "plus" | "+" => Ok(Branch::Plus),
            other => Err(CliError::Usage(format!("branch must be minus or plus, got '{other}'"))),
        }
    }

    fn dae(&self) -> DaeOptions {
        let mut o = DaeOptions::default();
        if self.num().finite_mu.unwrap_or(false) {
            o.regime = Regime::Finite { mu: derive_scales(&self.params).mu };
        }
        o
    }

    /// Writes `<stem>.gp` plotting `columns` (1-based, x first) of `csv`.
    fn plot_script(&self, stem: &str, csv: &str, x: usize, ys: &[(usize, &str)]) -> Result<(), CliError> {
        if !self.plot {
            return Ok(());
        }
        let mut s = String::from("set datafile separator ','\nset key top right\n");
        let curves: Vec<String> = ys
            .iter()
            .enumerate()
            .map(|(i, (c, title))| {
                let file = if i == 0 { format!("'{csv}'") } else { "''".into() };
                format!("{file} skip 1 using {x}:{c} with lines title '{title}'")
            })
            .collect();
        let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
        std::fs::write(self.path(&format!("{stem}.gp")), s)?;
        Ok(())
    }
}

/// Merges config file, flags and environment into a [`Context`].
pub fn build_context(cli: &Cli) -> Result<Context, CliError> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let name = cli.command.name();
    if let Some(c) = &cfg.command {
        if c != name {
            return Err(CliError::Usage(format!("config is for '{c}' but the subcommand is '{name}'")));
        }
    }
    let mut flags = RunConfig { command: Some(name.into()), ..Default::default() };
    flags.params.a = g.a;
    flags.params.m = g.m;
    flags.params.d = g.d;
    flags.terrain.spec = g.terrain.clone();
    flags.numerics = cli.command.numerics();
    flags.output.dir = g.out.as_ref().map(|p| p.display().to_string());
    flags.output.plot = g.plot.then_some(true);
    cfg.overlay(&flags);

    let params = ModelParams::new(cfg.params.a.unwrap_or(0.5), cfg.params.m.unwrap_or(0.45), cfg.params.d.unwrap_or(0.01))?;
    let terrain = Terrain::parse(cfg.terrain.spec.as_deref().unwrap_or("flat")).map_err(|e| match e {
        PulseError::InvalidParameter(m) => CliError::Usage(m),
        other => CliError::Domain(other),
    })?;
    let out = match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(cfg.output.dir.clone().unwrap_or_else(|| DEFAULT_OUT.into())),
    };
    let plot = cfg.output.plot.unwrap_or(false);
    Ok(Context { config: cfg, params, terrain, out, plot })
}

/// Runs one parsed invocation and returns the summary written to `summary.txt`.
pub fn execute(cli: &Cli) -> Result<Summary, CliError> {
    let ctx = build_context(cli)?;
    if let Some(j) = cli.global.jobs {
        // a global pool may already exist when called repeatedly in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    if let Some(p) = &cli.global.save_config {
        std::fs::write(p, ctx.config.to_toml()?)?;
    }
    std::fs::create_dir_all(&ctx.out)?;
    let mut s = Summary::default();
    s.text("command", cli.command.name(), "");
    match &cli.command {
        Command::Check => check(&ctx, &mut s)?,
        Command::DichotomyBounds(_) => dichotomy_bounds(&ctx, &mut s)?,
        Command::Slowfield(_) => slow(&ctx, &mut s)?,
        Command::ConstructPulse(_) => construct(&ctx, &mut s)?,
        Command::Spectrum(_) => spectrum_cmd(&ctx, &mut s)?,
        Command::SmallEig(_) => small_eig(&ctx, &mut s)?,
        Command::PulseOde(_) => pulse_ode(&ctx, &mut s)?,
        Command::FixedPoints(_) => fixed_points(&ctx, &mut s)?,
        Command::Bifurcate(_) => bifurcate(&ctx, &mut s)?,
        Command::TwoPulse(_) => two_pulse(&ctx, &mut s)?,
        Command::Simulate(_) => simulate(&ctx, &mut s)?,
    }
    std::fs::write(ctx.path("summary.txt"), s.render())?;
    Ok(s)
}

fn header(ctx: &Context, s: &mut Summary) {
    let sc = derive_scales(&ctx.params);
    s.num("a", ctx.params.a, "");
    s.num("m", ctx.params.m, "");
    s.num("D", ctx.params.d, "");
    s.text("terrain", ctx.terrain.kind.label(), "");
    s.num("epsilon", sc.epsilon, "epsilon = a/m");
    s.num("mu", sc.mu, "mu = m sqrt(m) D/a^2");
    s.num("tau", sc.tau, "tau = D a^2/m^(3/2)");
    s.num("nu", sc.nu, "nu = m^2 D/a^2");
}

fn check(ctx: &Context, s: &mut Summary) -> Result<(), CliError> {
    header(ctx, s);
    let r = check_assumptions(&ctx.params, &ctx.terrain);
    s.text("a1", r.a1, "epsilon = a/m small");
    s.text("a2", r.a2, "f odd, g even");
    s.num("odd_residual", r.odd_residual, "max |f(x) + f(-x)|");
    s.num("even_residual", r.even_residual, "max |g(x) - g(-x)|");
    s.text("a3", r.a3, "delta = sup sqrt(f^2 + g^2) < 1/4");
    s.num("delta", r.delta, "delta = sup sqrt(f^2 + g^2)");
    s.text("a4", r.a4, "f, g -> 0 as |x| -> inf");
    s.text("a5", r.a5, "sup |f|, sup |g| bounded");
    s.num("sup_f", r.sup_f, "sup |f|");
    s.num("sup_g", r.sup_g, "sup |g|");
    Ok(())
}

fn bound_str(b: Bound) -> String {
    match b {
        Bound::Finite(v) => fmt_g12(v),
        Bound::NegInfinity => "-inf".into(),
        Bound::PosInfinity => "inf".into(),
    }
}

fn dichotomy_bounds(ctx: &Context, s: &mut Summary) -> Result<(), CliError> {
    let n = ctx.num();
    let (k, rho) = (n.k_aut.unwrap_or(1.0), n.rho_aut.unwrap_or(1.0));
    let delta = n.delta.unwrap_or(ctx.terrain.delta);
    let c_aut = n.c_aut.unwrap_or(-1.0);
    s.num("K_aut", k, "");
    s.num("rho_aut", rho, "");
    s.num("delta", delta, "delta = sup sqrt(f^2 + g^2)");
    let c = dichotomy::roughness_constants(k, rho, delta)?;
    s.num("K", c.k, "K = (5/2) K_aut^2");
    s.num("rho", c.rho, "rho = rho_aut - 2 K_aut delta");
    s.num("projection_distance", dichotomy::projection_distance_bound(k, rho, delta)?, "4 K_aut^3 delta/rho_aut");
    let f_norm = n.f_norm.unwrap_or(1.0);
    s.num(
        "bounded_solution_distance",
        dichotomy::bounded_solution_distance_bound(&c, f_norm),
        "4 delta K_aut K |F|/(rho_aut rho)",
    );
    s.num("projection_vector_closeness", dichotomy::projection_vector_closeness(delta)?, "sqrt(8 delta)");
    let iv = dichotomy::slope_interval(delta, c_aut)?;
    s.num("C_aut", c_aut, "");
    s.text("C_min", bound_str(iv.c_min), "lower bound on C - C_aut");
    s.text("C_max", bound_str(iv.c_max), "upper bound on C - C_aut");
    s.text("disjoint", iv.disjoint, "C_max < C_min: admissible set is a complement");
    Ok(())
}

fn slow_grid(ctx: &Context) -> Result<SlowGrid, CliError> {
    let n = ctx.num();
    let mut g = SlowGrid::for_terrain(&ctx.terrain);
    if n.half_width.is_some() || n.n.is_some() {
        let l = n.half_width.unwrap_or(g.half_width);
        let pts = n.n.unwrap_or_else(|| 2 * (l / slowfield::DEFAULT_STEP).ceil() as usize + 1);
        g = SlowGrid::new(l, pts)?;
    }
    if n.second_order.unwrap_or(false) {
        g = g.second_order();
    }
    Ok(g)
}

fn slow(ctx: &Context, s: &mut Summary) -> Result<(), CliError> {
    s.text("terrain", ctx.terrain.kind.label(), "");
    let grid = slow_grid(ctx)?;
    s.num("L", grid.half_width, "");
    s.text("n", grid.n, "");
    let sol = slowfield::solve(&ctx.terrain, &grid)?;
    s.num("ub0", sol.ub0(), "u_b(0): bounded solution of u'' + f u' + g u - u + 1 = 0");
    s.num("Cs0", sol.cs0, "C^s(0) = u_+'(0)/u_+(0)");
    s.num("Cu0", sol.cu0, "C^u(0) = u_-'(0)/u_-(0)");
    s.num("residual", sol.residual, "relative discrete residual");
    let dev = sol.u_b.iter().zip(&sol.p_b).map(|(u, p)| (u - 1.0).hypot(*p)).fold(0.0, f64::max);
    s.num("sup_background_deviation", dev, "sup sqrt((u_b - 1)^2 + u_b'^2)");
    let d = ctx.terrain.delta;
    if d < 0.5 {
        s.num("background_bound", 10.0 * d / (1.0 - 2.0 * d), "10 delta/(1 - 2 delta)");
    }
    sol.write_csv(&ctx.path("slowfield.csv"))?;
    ctx.plot_script("slowfield", "slowfield.csv", 1, &[(2, "u_b"), (4, "u_+"), (5, "u_-")])?;
    Ok(())
}

fn construct(ctx: &Context, s: &mut Summary) -> Result<(), CliError> {
    header(ctx, s);
    let rep = pulse::existence_check(&ctx.terrain, &ctx.params)?;
    s.num("ub0", rep.ub0, "u_b(0)");
    s.num("Cs0", rep.cs0, "C^s(0) = u_+'(0)/u_+(0)");
    s.num("discriminant", rep.discriminant, "u_b(0)^2 + 12 mu/C^s(0)");
    s.text("exists", rep.exists, "u_b(0) > 0, C^s(0) < 0, discriminant > 0");
    if let Some(r) = rep.roots {
        for (key, v) in [("u0_minus", r.minus), ("u0_plus", r.plus)] {
            if let Some(v) = v {
                s.num(key, v, "u0 = (u_b(0) -+ sqrt(u_b(0)^2 + 12 mu/C^s(0)))/(2 mu)");
            }
        }
    }
    if let Some(why) = rep.failure() {
        return Err(PulseError::NoPulse(why.into()).into());
    }
    let branch = ctx.branch()?;
    let prof = pulse::assemble_profile(&ctx.terrain, &ctx.params, branch)?;
    s.text("branch", branch.label(), "");
    s.num("u0", prof.u0, "pulse amplitude in the scaled fast variables");
    let (_, _, v) = prof.physical();
    s.num("V_max", v.iter().cloned().fold(0.0, f64::max), "3 a/(2 u0 sqrt(m) D) at leading order");
    prof.write_csv(&ctx.path("profile.csv"))?;
    prof.write_slow_csv(&ctx.path("profile_slow.csv"))?;
    ctx.plot_script("profile", "profile.csv", 6, &[(7, "U"), (8, "V")])?;
    Ok(())
}

fn spectrum_cmd(ctx: &Context, s: &mut Summary) -> Result<(), CliError> {
    header(ctx, s);
    let n = ctx.num();
    let branch = ctx.branch()?;
    let mut opts = LargeEigOptions::default();
    if let Some(l) = n.lambda_max {
        opts.lambda_max = l;
    }
    if let Some(k) = n.scan_points {
        opts.scan_points = k;
    }
    let rep = spectrum::spectrum_report(&ctx.terrain, &ctx.params, branch, &opts)?;
    if n.skeleton.unwrap_or(false) {
        opts.skeleton = Some(SkeletonOptions::default());
    }
    let large = spectrum::find_large_eigs(&ctx.terrain, &ctx.params, branch, &opts)?;
    s.text("branch", branch.label(), "");
    s.num("u0", rep.u0, "");
    s.num("essential_sup", rep.essential_sup, "sup of (-inf, max(-m, -1)]");
    s.list("reduced_eigs", &rep.reduced_eigs, "top eigenvalues of v'' - v + 2 omega v; exact 5/4, 0, -3/4");
    s.list("large_eig_roots_scaled", &large.roots, "real roots of t22 = 1 + (3 - R)/(u0^2 mu S)");
    s.list("large_eig_roots", &rep.large_eig_roots, "m times the scaled roots");
    s.num("small_eig", rep.small_eig, "eigenvalue near 0 from the translation mode");
    s.text("small_eig_source", rep.small_eig_source, "");
    s.num("delta_c", rep.delta_c, "sqrt(6)/24");
    large.write_scan_csv(&ctx.path("t22_scan.csv"))?;
    ctx.plot_script("t22_scan", "t22_scan.csv", 1, &[(5, "Re t22"), (3, "Re R")])?;
    if n.skeleton.unwrap_or(false) {
        large.write_skeleton_csv(&ctx.path("skeleton.csv"))?;
        ctx.plot_script("skeleton", "skeleton.csv", 2, &[(3, "Im[(R-3)/S] = 0")])?;
    }
    Ok(())
}

fn parse_form(name: &str, sigma: f64) -> Result<SmallEigForm, CliError> {
    Ok(match name {
        "general" => SmallEigForm::General,
        "double-limit" => SmallEigForm::DoubleLimit,
        "height-function" => SmallEigForm::HeightFunction,
        "height-function-limit" => SmallEigForm::HeightFunctionLimit,
        "weak-curvature" => SmallEigForm::WeakCurvature { sigma },
        "strong-curvature" => SmallEigForm::StrongCurvature { sigma },
        other => return Err(CliError::Usage(format!("unknown small-eigenvalue form '{other}'"))),
    })
}

fn small_eig(ctx: &Context, s: &mut Summary) -> Result<(), CliError> {
    header(ctx, s);
    let n = ctx.num();
    let form_name = n.form.clone().unwrap_or_else(|| "general".into());
    let form = parse_form(&form_name, n.sigma.unwrap_or(1.0))?;
    let sc = derive_scales(&ctx.params);
    let rep = pulse::existence_check(&ctx.terrain, &ctx.params)?;
    if let Some(why) = rep.failure() {
        return Err(PulseError::NoPulse(why.into()).into());
    }
    let branch = ctx.branch()?;
    let u0 = rep.roots.and_then(|r| r.get(branch)).ok_or_else(|| PulseError::NoPulse("no root on this branch".into()))?;
    let inp = SmallEigInput::from_terrain(&ctx.terrain, sc.tau, sc.mu, u0);
    let e = spectrum::small_eigenvalue(form, &inp)?;
    s.text("form", form_name, "");
    s.num("u0", u0, "");
    s.num("delta", inp.delta, "terrain scale");
    s.num("lambda", e.lambda, "small eigenvalue of the stationary pulse");
    s.text("tau_warning", e.tau_warning, "tau (1 - mu u0) > 0.1 u0");
    Ok(())
}

fn pulse_ode(ctx: &Context, s: &mut Summary) -> Result<(), CliError> {
    header(ctx, s);
    let n = ctx.num();
    let sc = derive_scales(&ctx.params);
    let init = n.positions.clone().unwrap_or_else(|| vec![0.5]);
    let tr = dynamics::integrate_pulse_ode(
        &ctx.terrain,
        &init,
        n.t_end.unwrap_or(1000.0),
        sc.tau,
        n.rtol.unwrap_or(1e-6),
        &ctx.dae(),
    )?;
    s.list("initial", &init, "");
    s.list("final", tr.last(), "dP/dt = (tau/6)[u'(P+)^2 - u'(P-)^2]");
    s.num("t_final", *tr.times.last().unwrap_or(&0.0), "");
    s.text("collided", tr.collided, "");
    s.text("rejected_steps", tr.rejected_steps, "");
    tr.write_csv(&ctx.path("trajectory.csv"))?;
    let cols: Vec<(usize, String)> = (0..init.len()).map(|j| (j + 2, format!("P{}", j + 1))).collect();
    let refs: Vec<(usize, &str)> = cols.iter().map(|(c, t)| (*c, t.as_str())).collect();
    ctx.plot_script("trajectory", "trajectory.csv", 1, &refs)?;
    Ok(())
}

fn fixed_points(ctx: &Context, s: &mut Summary) -> Result<(), CliError> {
    header(ctx, s);
    let n = ctx.num();
    let (lo, hi) = n.bracket.unwrap_or((-5.0, 5.0));
    let opts = ctx.dae();
    let tau = derive_scales(&ctx.params).tau;
    let pts = dynamics::find_fixed_points(&ctx.terrain, lo, hi, &opts)?;
    let mut eigs = vec![];
    let path = ctx.path("fixed_points.csv");
    let mut rows = String::from("P,lambda,stable\n");
    for &p in &pts {
        let e = dynamics::fixed_point_eigenvalue(&ctx.terrain, p, tau, &opts)?;
        eigs.push(e.lambda);
        let _ = writeln!(rows, "{},{},{}", fmt_g12(p), fmt_g12(e.lambda), (e.lambda < 0.0) as u8);
    }
    std::fs::write(path, rows)?;
    s.list("fixed_points", &pts, "zeros of u'(P+)^2 - u'(P-)^2");
    s.list("eigenvalues", &eigs, "(tau/6){2 d+[u''(P+) + w'(P+)] - 2 d-[u''(P-) + w'(P-)]}");
    Ok(())
}

fn bifurcate(ctx: &Context, s: &mut Summary) -> Result<(), CliError> {
    header(ctx, s);
    let n = ctx.num();
    let family: Family = n.family.as_deref().unwrap_or("gaussian").parse().map_err(|e: PulseError| CliError::Usage(e.to_string()))?;
    let a = n.amplitude.unwrap_or(1.0);
    let (lo, hi) = n.b_range.unwrap_or((0.1, 2.0));
    let tau = derive_scales(&ctx.params).tau;
    let b = dynamics::continue_bifurcation(family, a, lo, hi, n.samples.unwrap_or(40), tau, &ctx.dae())?;
    s.text("family", family.name(), "");
    s.num("A", a, "");
    match b.b_c {
        Some(v) => s.num("B_c", v, "B where the eigenvalue of P = 0 changes sign"),
        None => s.text("B_c", "none", "no sign change in the B range"),
    }
    s.text("points", b.branch.len(), "");
    b.write_csv(&ctx.path("bifurcation.csv"))?;
    ctx.plot_script("bifurcation", "bifurcation.csv", 1, &[(2, "P*")])?;
    Ok(())
}

fn two_pulse(ctx: &Context, s: &mut Summary) -> Result<(), CliError> {
    let beta = ctx.num().beta.unwrap_or(1.0);
    let root = dynamics::two_pulse_root(beta)?;
    s.num("beta", beta, "");
    s.num("P_star", root, "root of T(P) = u_b'(P) - u_b(P)[(r/2)(tanh rP - 1) + beta tanh beta P]");
    s.num("T0", dynamics::two_pulse_t(0.0, beta), "T(0)");
    let mut rows = String::from("P,T\n");
    for i in 0..=500 {
        let p = 5.0 * i as f64 / 500.0;
        let _ = writeln!(rows, "{},{}", fmt_g12(p), fmt_g12(dynamics::two_pulse_t(p, beta)));
    }
    std::fs::write(ctx.path("two_pulse.csv"), rows)?;
    ctx.plot_script("two_pulse", "two_pulse.csv", 1, &[(2, "T(P)")])?;
    Ok(())
}

fn simulate(ctx: &Context, s: &mut Summary) -> Result<(), CliError> {
    header(ctx, s);
    let n = ctx.num();
    let p = &ctx.params;
    let boundary = match n.boundary.as_deref().unwrap_or("neumann") {
        "neumann" => Boundary::Neumann,
        "periodic" => Boundary::Periodic,
        other => return Err(CliError::Usage(format!("boundary must be neumann or periodic, got '{other}'"))),
    };
    let reaction = match n.reaction.as_deref().unwrap_or("linearly-implicit") {
        "linearly-implicit" => ReactionTreatment::LinearlyImplicit,
        "explicit" => ReactionTreatment::Explicit,
        other => return Err(CliError::Usage(format!("unknown reaction treatment '{other}'"))),
    };
    let (lo, hi) = n.x_range.unwrap_or((-30.0, 30.0));
    let x = PdeState::grid(lo, hi, n.dx.unwrap_or_else(|| pde::default_dx(p)), boundary)?;
    let positions = n.positions.clone().unwrap_or_else(|| vec![0.0]);
    let (u, v) = pde::seed_pulses(p, &x, &positions);
    let init = PdeState::new(x, u, v, boundary)?;
    let t_end = n.t_end.unwrap_or(1000.0);
    let keep = n.snapshots.unwrap_or(false);
    let opts = RunOptions {
        step: StepOptions { dt: n.dt.unwrap_or_else(|| pde::default_dt(p)), reaction },
        t_end,
        sample_dt: n.sample_dt.unwrap_or(t_end / 100.0),
        steady_tol: 1e-9,
        keep_snapshots: keep,
    };
    let run = pde::run(p, &ctx.terrain, init, &opts)?;
    let last = run.tracks.last().cloned().unwrap_or_default();
    s.list("seed", &positions, "");
    s.list("final_positions", &last, "V maxima, parabolic refinement");
    s.num("t_final", run.final_state.t, "");
    s.text("steady", run.steady, "max |dU/dt|, |dV/dt| < 1e-9");
    s.num("rate", run.rate, "max |dU/dt|, |dV/dt| at the last check");
    s.text("steps", run.steps, "");
    s.text("clipped", run.final_state.clipped, "negative samples reset to 0");
    s.num("stationary_residual", pde::stationary_residual(p, &ctx.terrain, &run.final_state)?, "");
    s.num("V_max", run.final_state.v.iter().cloned().fold(0.0, f64::max), "");
    run.write_tracks_csv(&ctx.path("tracks.csv"))?;
    run.final_state.write_csv(&ctx.path("final.csv"))?;
    for (k, snap) in run.snapshots.iter().enumerate() {
        snap.write_csv(&ctx.path(&format!("snapshot_{k:04}.csv")))?;
    }
    ctx.plot_script("final", "final.csv", 1, &[(2, "U"), (3, "V")])?;
    ctx.plot_script("tracks", "tracks.csv", 1, &[(2, "P1")])?;
    Ok(())
}

/// Parses `argv`, runs, prints the summary and returns the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(s) => {
            print!("{}", s.render());
            0
        }
        Err(e) => {
            eprintln!("pulselab {}: {e}", cli.command.name());
            if let CliError::Usage(_) = e {
                eprintln!("run 'pulselab {} --help' for the synopsis", cli.command.name());
            }
            e.exit_code()
        }
    }
}
