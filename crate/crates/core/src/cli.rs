//! The `cluster-mass` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 growth halted
//! without targets (partial outputs are still written), 3 validation failure.
//!
//! Precedence for growth settings is flag, then config file, then default.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::analysis::{forest_stats, format_reports, validate_suite, ValidationConfig};
use crate::distributions::{DistributionSpec, Extended};
use crate::error::{Error, Result};
use crate::growth::{grow, write_records_jsonl, GrowthConfig, GrowthRun, MassFamily, Scheme};
use crate::normalized_mass::{
    beta_marginal_density, dirichlet_density, levy_marginal_density, sample_normalized,
    write_samples_csv, ConditioningSet, ProbVector,
};
use crate::rng::RngStream;

/// Clip applied to grid endpoints where a density diverges.
pub const ENDPOINT_EPSILON: f64 = 1e-6;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_HALTED: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "cluster-mass",
    version,
    about = "Random tree growth by normalized cluster masses"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every random draw. Required by grow, sample and validate.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory (standard output when omitted, except for grow).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Tsv,
    Dot,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grow a forest and export edges, statistics and step records.
    Grow(GrowArgs),
    /// Tabulate a closed-form density on a grid as CSV.
    Density {
        #[command(subcommand)]
        kind: DensityCmd,
    },
    /// Draw variates or normalized mass vectors as CSV.
    Sample {
        #[command(subcommand)]
        kind: SampleCmd,
    },
    /// Run the sampler validation battery.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct GrowArgs {
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long)]
    steps: Option<u64>,
    /// Poisson arrival rate per step.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    LeafMass,
    FreeMass,
    MeanDegree,
    MeanFitness,
    MeanAffine,
    RandomForest,
    Crp,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::LeafMass => Scheme::LeafMass,
            SchemeArg::FreeMass => Scheme::FreeMass,
            SchemeArg::MeanDegree => Scheme::MeanDegree,
            SchemeArg::MeanFitness => Scheme::MeanFitness,
            SchemeArg::MeanAffine => Scheme::MeanAffine,
            SchemeArg::RandomForest => Scheme::RandomForest,
            SchemeArg::Crp => Scheme::Crp,
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct Grid {
    #[arg(long, default_value_t = 101)]
    points: usize,
}

#[derive(Subcommand, Debug)]
enum DensityCmd {
    /// Gamma(alpha, lambda) on [0, max-x].
    Gamma {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 10.0)]
        max_x: f64,
        #[command(flatten)]
        grid: Grid,
    },
    /// Levy(alpha) on [0, max-x].
    Levy {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 10.0)]
        max_x: f64,
        #[command(flatten)]
        grid: Grid,
    },
    /// Beta(alpha-i, alpha-total - alpha-i) on [0, 1].
    BetaMarginal {
        #[arg(long)]
        alpha_i: f64,
        #[arg(long)]
        alpha_total: f64,
        #[command(flatten)]
        grid: Grid,
    },
    /// Marginal of one component under Levy conditioners, on [0, 1].
    LevyMarginal {
        #[arg(long)]
        alpha_i: f64,
        #[arg(long)]
        alpha_total: f64,
        #[command(flatten)]
        grid: Grid,
    },
    /// Dirichlet density along p1 in [0, 1], the remaining mass split in
    /// proportion to the remaining shapes.
    DirichletSlice {
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[command(flatten)]
        grid: Grid,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Gamma,
    Levy,
    Stable,
}

#[derive(Subcommand, Debug)]
enum SampleCmd {
    /// Raw variates of one distribution.
    Dist {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.5)]
        nu: f64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// Normalized mass vectors, one row per draw.
    Normalized {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.5)]
        nu: f64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, default_value_t = ValidationConfig::DEFAULT_SAMPLES)]
    n_samples: usize,
}

/// Contents of a `--config` file. Every field is optional; unknown keys are
/// rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: Option<Scheme>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub family: Option<MassFamily>,
    pub fitness_spec: Option<DistributionSpec>,
    pub poisson_rate: Option<f64>,
    pub steps: Option<u64>,
    pub seed: Option<u64>,
    pub resample_per_arrival: Option<bool>,
    pub fixed_mass: Option<bool>,
    pub record_weights: Option<bool>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub n_samples: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))
    }
}

/// Runs the CLI with the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI against the given streams and returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_CONFIG
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::HaltedNoTargets { .. } => EXIT_HALTED,
                _ => EXIT_CONFIG,
            }
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let format = match (cli.format, &config.format) {
        (Some(f), _) => Some(f),
        (None, Some(s)) => Some(
            Format::from_str(s, true)
                .map_err(|_| Error::InvalidInput(format!("format: unknown value {s:?}")))?,
        ),
        (None, None) => None,
    };
    let seed = cli.seed.or(config.seed);
    let out_dir = cli.out.clone().or_else(|| config.out.clone());
    match cli.command {
        Command::Grow(args) => cmd_grow(&config, &args, seed, out_dir, format, out),
        Command::Density { kind } => {
            let table = density_table(&kind)?;
            emit(out_dir.as_deref(), "density.csv", out, |w| {
                write_density_csv(&table, w)
            })?;
            Ok(EXIT_OK)
        }
        Command::Sample { kind } => cmd_sample(&kind, require_seed(seed)?, out_dir.as_deref(), out),
        Command::Validate(args) => {
            let n_samples = if args.n_samples != ValidationConfig::DEFAULT_SAMPLES {
                args.n_samples
            } else {
                config.n_samples.unwrap_or(args.n_samples)
            };
            let cfg = ValidationConfig {
                n_samples,
                seed: require_seed(seed)?,
            };
            let reports = validate_suite(&cfg)?;
            let passed = reports.iter().all(|r| r.passed);
            emit(out_dir.as_deref(), "validation.txt", out, |w| {
                if format == Some(Format::Json) {
                    serde_json::to_writer_pretty(&mut *w, &reports)?;
                    writeln!(w)
                } else {
                    write!(w, "{}", format_reports(&reports))
                }
            })?;
            Ok(if passed { EXIT_OK } else { EXIT_VALIDATION })
        }
    }
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| Error::InvalidInput("seed: --seed (or a config seed) is required".into()))
}

fn io_err(e: io::Error) -> Error {
    Error::InvalidInput(format!("output: {e}"))
}

/// Writes to `dir/name` when an output directory is set, else to `out`.
fn emit<F>(dir: Option<&Path>, name: &str, out: &mut dyn Write, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err)?;
            let mut w = BufWriter::new(File::create(dir.join(name)).map_err(io_err)?);
            body(&mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        None => body(out).map_err(io_err),
    }
}

fn write_file<F>(path: PathBuf, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err)
}

/// Merges defaults, config file and flags into a growth configuration.
pub fn growth_config(
    config: &RunConfig,
    overrides: GrowthOverrides,
    seed: Option<u64>,
) -> Result<GrowthConfig> {
    let scheme = overrides
        .scheme
        .or(config.scheme)
        .ok_or_else(|| Error::InvalidInput("scheme: required (config or --scheme)".into()))?;
    let mut cfg = GrowthConfig::new(scheme);
    cfg.eta = overrides.eta.or(config.eta).unwrap_or(cfg.eta);
    cfg.beta = overrides.beta.or(config.beta).unwrap_or(cfg.beta);
    cfg.delta = overrides.delta.or(config.delta).unwrap_or(cfg.delta);
    cfg.poisson_rate = overrides
        .rate
        .or(config.poisson_rate)
        .unwrap_or(cfg.poisson_rate);
    cfg.steps = overrides.steps.or(config.steps).unwrap_or(cfg.steps);
    cfg.family = config.family.unwrap_or(cfg.family);
    cfg.fitness_spec = config.fitness_spec;
    cfg.resample_per_arrival = config.resample_per_arrival.unwrap_or(false);
    cfg.fixed_mass = config.fixed_mass.unwrap_or(false);
    cfg.record_weights = config.record_weights.unwrap_or(true);
    cfg.seed = require_seed(seed)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Command-line overrides of growth settings.
#[derive(Clone, Copy, Debug, Default)]
pub struct GrowthOverrides {
    pub scheme: Option<Scheme>,
    pub steps: Option<u64>,
    pub rate: Option<f64>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
}

fn cmd_grow(
    config: &RunConfig,
    args: &GrowArgs,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    format: Option<Format>,
    out: &mut dyn Write,
) -> Result<i32> {
    let overrides = GrowthOverrides {
        scheme: args.scheme.map(Scheme::from),
        steps: args.steps,
        rate: args.rate,
        eta: args.eta,
        beta: args.beta,
        delta: args.delta,
    };
    let cfg = growth_config(config, overrides, seed)?;
    let dot = match format {
        None | Some(Format::Tsv) => false,
        Some(Format::Dot) => true,
        Some(other) => {
            return Err(Error::InvalidInput(format!(
                "format: grow writes tsv or dot, not {other:?}"
            )));
        }
    };
    let dir = out_dir.unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(io_err)?;

    let (run, halted) = match grow(&cfg) {
        Ok(run) => (run, None),
        Err(Error::HaltedNoTargets { step, partial }) => (*partial, Some(step)),
        Err(e) => return Err(e),
    };
    write_outputs(&run, &dir, dot)?;
    let _ = writeln!(
        out,
        "grew {} vertices, {} edges, {} roots into {}",
        run.forest.len(),
        run.forest.edge_count(),
        run.forest.roots().len(),
        dir.display()
    );
    match halted {
        Some(step) => Err(Error::HaltedNoTargets {
            step,
            partial: Box::new(run),
        }),
        None => Ok(EXIT_OK),
    }
}

fn write_outputs(run: &GrowthRun, dir: &Path, dot: bool) -> Result<()> {
    write_file(dir.join("edges.tsv"), |w| run.forest.write_edge_list(w))?;
    write_file(dir.join("stats.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &forest_stats(&run.forest))?;
        writeln!(w)
    })?;
    write_file(dir.join("steps.jsonl"), |w| {
        write_records_jsonl(&run.records, w)
    })?;
    if dot {
        write_file(dir.join("forest.dot"), |w| run.forest.write_dot(w))?;
    }
    Ok(())
}

/// A tabulated density ready for CSV output.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityCsv {
    pub column: &'static str,
    pub rows: Vec<(f64, f64)>,
    pub clipped: bool,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "--{name}: must be positive, got {v}"
        )))
    }
}

fn grid_points(points: usize) -> Result<usize> {
    if points < 2 {
        return Err(Error::InvalidInput(format!(
            "--points: need at least 2, got {points}"
        )));
    }
    Ok(points)
}

/// Evaluates `f` on `points` equispaced nodes of `[lo, hi]`. An endpoint
/// where `f` diverges is moved inward by `ENDPOINT_EPSILON`.
fn tabulate<F>(column: &'static str, lo: f64, hi: f64, points: usize, f: F) -> Result<DensityCsv>
where
    F: Fn(f64) -> Result<Extended>,
{
    let points = grid_points(points)?;
    let last = points - 1;
    let mut clipped = false;
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let x = if i == last {
            hi
        } else {
            lo + (hi - lo) * i as f64 / last as f64
        };
        let value = match f(x) {
            Ok(Extended::Finite(v)) => v,
            Ok(Extended::Infinite) | Err(Error::BoundaryDivergence { .. })
                if i == 0 || i == last =>
            {
                clipped = true;
                let inner = if i == 0 {
                    lo + ENDPOINT_EPSILON
                } else {
                    hi - ENDPOINT_EPSILON
                };
                let v = match f(inner)? {
                    Extended::Finite(v) => v,
                    Extended::Infinite => f64::INFINITY,
                };
                rows.push((inner, v));
                continue;
            }
            Ok(Extended::Infinite) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        rows.push((x, value));
    }
    Ok(DensityCsv {
        column,
        rows,
        clipped,
    })
}

fn named(name: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::InvalidInput(format!("{name}: {e}"))
}

fn density_table(kind: &DensityCmd) -> Result<DensityCsv> {
    match *kind {
        DensityCmd::Gamma {
            alpha,
            lambda,
            max_x,
            grid,
        } => {
            positive("alpha", alpha)?;
            positive("lambda", lambda)?;
            positive("max-x", max_x)?;
            let spec = DistributionSpec::gamma(alpha, lambda)?;
            tabulate("x", 0.0, max_x, grid.points, |x| spec.density(x))
        }
        DensityCmd::Levy { alpha, max_x, grid } => {
            positive("alpha", alpha)?;
            positive("max-x", max_x)?;
            let spec = DistributionSpec::levy(alpha)?;
            tabulate("x", 0.0, max_x, grid.points, |x| spec.density(x))
        }
        DensityCmd::BetaMarginal {
            alpha_i,
            alpha_total,
            grid,
        } => {
            split("alpha-i", alpha_i, alpha_total)?;
            tabulate("p", 0.0, 1.0, grid.points, |p| {
                beta_marginal_density(p, alpha_i, alpha_total).map(Extended::Finite)
            })
        }
        DensityCmd::LevyMarginal {
            alpha_i,
            alpha_total,
            grid,
        } => {
            split("alpha-i", alpha_i, alpha_total)?;
            tabulate("p", 0.0, 1.0, grid.points, |p| {
                levy_marginal_density(p, alpha_i, alpha_total).map(Extended::Finite)
            })
        }
        DensityCmd::DirichletSlice { ref alphas, grid } => {
            if alphas.len() < 2 {
                return Err(Error::InvalidInput(
                    "--alphas: need at least two shapes".into(),
                ));
            }
            for &a in alphas {
                positive("alphas", a)?;
            }
            let rest: f64 = alphas[1..].iter().sum();
            tabulate("p1", 0.0, 1.0, grid.points, |p1| {
                let mut p = vec![p1];
                p.extend(alphas[1..].iter().map(|a| (1.0 - p1) * a / rest));
                let pv = ProbVector::new(p).map_err(named("slice"))?;
                dirichlet_density(&pv, alphas).map(Extended::Finite)
            })
        }
    }
}

fn split(name: &str, alpha_i: f64, alpha_total: f64) -> Result<()> {
    positive(name, alpha_i)?;
    if !(alpha_total.is_finite() && alpha_total > alpha_i) {
        return Err(Error::InvalidInput(format!(
            "--alpha-total: must exceed --{name} ({alpha_i}), got {alpha_total}"
        )));
    }
    Ok(())
}

/// Header, optional clipping comment, then rows at 17 significant digits.
pub fn write_density_csv(table: &DensityCsv, w: &mut dyn Write) -> io::Result<()> {
    if table.clipped {
        writeln!(
            w,
            "# divergent endpoints clipped by epsilon = {ENDPOINT_EPSILON:e}"
        )?;
    }
    writeln!(w, "{},density", table.column)?;
    for (x, f) in &table.rows {
        writeln!(w, "{x:.16e},{f:.16e}")?;
    }
    Ok(())
}

fn family_spec(family: FamilyArg, alpha: f64, lambda: f64, nu: f64) -> Result<DistributionSpec> {
    positive("alpha", alpha)?;
    match family {
        FamilyArg::Gamma => {
            positive("lambda", lambda)?;
            DistributionSpec::gamma(alpha, lambda)
        }
        FamilyArg::Levy => DistributionSpec::levy(alpha),
        FamilyArg::Stable => {
            if !(nu > 0.0 && nu < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "--nu: must lie in (0, 1), got {nu}"
                )));
            }
            DistributionSpec::stable(alpha, nu)
        }
    }
}

fn cmd_sample(kind: &SampleCmd, seed: u64, dir: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let mut rng = RngStream::new(seed, 0);
    match *kind {
        SampleCmd::Dist {
            family,
            alpha,
            lambda,
            nu,
            count,
        } => {
            let spec = family_spec(family, alpha, lambda, nu)?;
            let xs = (0..count)
                .map(|_| spec.sample(&mut rng))
                .collect::<Result<Vec<f64>>>()?;
            emit(dir, "samples.csv", out, |w| {
                writeln!(w, "x")?;
                for x in &xs {
                    writeln!(w, "{x:.16e}")?;
                }
                Ok(())
            })?;
        }
        SampleCmd::Normalized {
            family,
            ref alphas,
            lambda,
            nu,
            count,
        } => {
            let specs = alphas
                .iter()
                .map(|&a| family_spec(family, a, lambda, nu).map_err(named("--alphas")))
                .collect::<Result<Vec<_>>>()?;
            let cond = ConditioningSet::new(specs)?;
            let rows = (0..count)
                .map(|_| sample_normalized(&cond, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            emit(dir, "samples.csv", out, |w| write_samples_csv(&rows, w))?;
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(
            std::iter::once("cluster-mass").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    fn rows(csv: &str) -> Vec<(f64, f64)> {
        csv.lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn gamma_density_rows() {
        let (code, out, _) = run_capture(&[
            "density", "gamma", "--alpha", "1", "--lambda", "2", "--points", "3", "--max-x", "1",
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("x,density\n"));
        let r = rows(&out);
        let expect = [
            (0.0, 2.0),
            (0.5, 2.0 * (-1.0f64).exp()),
            (1.0, 2.0 * (-2.0f64).exp()),
        ];
        for (got, want) in r.iter().zip(expect) {
            assert_eq!(got.0, want.0);
            assert!((got.1 - want.1).abs() < 1e-15);
        }
    }

    #[test]
    fn levy_marginal_midpoint() {
        let (code, out, _) = run_capture(&[
            "density",
            "levy-marginal",
            "--alpha-i",
            "1",
            "--alpha-total",
            "2",
            "--points",
            "101",
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("# divergent endpoints clipped"));
        let r = rows(&out);
        assert_eq!(r.len(), 101);
        assert_eq!(r[0].0, ENDPOINT_EPSILON);
        assert_eq!(r[100].0, 1.0 - ENDPOINT_EPSILON);
        assert_eq!(r[50].0, 0.5);
        assert!((r[50].1 - std::f64::consts::FRAC_2_PI).abs() < 1e-6);
    }

    #[test]
    fn beta_marginal_normalizes() {
        let (code, out, _) = run_capture(&[
            "density",
            "beta-marginal",
            "--alpha-i",
            "2",
            "--alpha-total",
            "5",
            "--points",
            "10000",
        ]);
        assert_eq!(code, 0);
        let r = rows(&out);
        let area: f64 = r
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum();
        assert!((area - 1.0).abs() < 1e-3, "{area}");
    }

    #[test]
    fn dirichlet_slice_runs() {
        let (code, out, _) = run_capture(&[
            "density",
            "dirichlet-slice",
            "--alphas",
            "2,3,4",
            "--points",
            "11",
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("p1,density\n"));
        assert_eq!(rows(&out).len(), 11);
    }

    #[test]
    fn bad_density_parameter_names_flag() {
        let (code, _, err) = run_capture(&["density", "gamma", "--alpha", "-1"]);
        assert_eq!(code, 1);
        assert!(err.contains("--alpha"), "{err}");
    }

    #[test]
    fn sample_requires_seed() {
        let (code, _, err) = run_capture(&[
            "sample", "dist", "--family", "levy", "--alpha", "1", "--count", "1",
        ]);
        assert_eq!(code, 1);
        assert!(err.contains("seed"));
    }

    #[test]
    fn sample_dist_reproducible() {
        let args = [
            "sample", "dist", "--family", "levy", "--alpha", "1", "--count", "1", "--seed", "9",
        ];
        let (code, a, _) = run_capture(&args);
        let (_, b, _) = run_capture(&args);
        assert_eq!(code, 0);
        assert_eq!(a, b);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].parse::<f64>().unwrap() >= 0.0);
    }

    #[test]
    fn sample_normalized_rows_sum_to_one() {
        let (code, out, _) = run_capture(&[
            "sample",
            "normalized",
            "--family",
            "gamma",
            "--alphas",
            "1,3",
            "--count",
            "500",
            "--seed",
            "7",
        ]);
        assert_eq!(code, 0);
        for line in out.lines().skip(1) {
            let s: f64 = line.split(',').map(|c| c.parse::<f64>().unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn usage_errors_and_help() {
        assert_eq!(run_capture(&["validate", "--bogus"]).0, 1);
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("Usage"));
    }

    #[test]
    fn grow_rejects_bad_delta() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("forest.json");
        fs::write(
            &cfg,
            r#"{"scheme":"RandomForest","beta":1.0,"delta":1.5,"steps":10}"#,
        )
        .unwrap();
        let (code, _, err) = run_capture(&[
            "grow",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "1",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 1);
        assert!(err.contains("delta"), "{err}");
    }

    #[test]
    fn config_unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        fs::write(&cfg, r#"{"scheme":"LeafMass","stepz":3}"#).unwrap();
        let (code, _, err) =
            run_capture(&["grow", "--config", cfg.to_str().unwrap(), "--seed", "1"]);
        assert_eq!(code, 1);
        assert!(err.contains("stepz"), "{err}");
    }

    #[test]
    fn grow_zero_steps() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let (code, _, err) = run_capture(&[
            "grow",
            "--scheme",
            "leaf-mass",
            "--steps",
            "0",
            "--seed",
            "4",
            "--out",
            out.to_str().unwrap(),
            "--format",
            "dot",
        ]);
        assert_eq!(code, 0, "{err}");
        assert_eq!(fs::read_to_string(out.join("edges.tsv")).unwrap(), "");
        assert_eq!(
            fs::read_to_string(out.join("forest.dot")).unwrap(),
            "digraph forest {\n  0;\n}\n"
        );
        let stats: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
        assert_eq!(stats["vertices"], 1);
    }
}
