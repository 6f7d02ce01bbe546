//! Command-line flags, the JSON config file, and their resolution into run configurations.
//!
//! Every parameter is looked up in the flags first, then in the config file section of
//! the command, then in the defaults below.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "nil", version, about = "Ricci flow, rounding and development on Nil geometry")]
pub struct Cli {
    /// JSON config file with one optional section per command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the homogeneous Ricci flow from a left-invariant metric.
    Flow(FlowArgs),
    /// Run the curvature-halving schedule on a set of collapsed initial metrics.
    Stability(StabilityArgs),
    /// Round a metric field on a nilmanifold to a unit-volume Nil metric.
    Round(RoundArgs),
    /// Lattice utilities.
    Lattice {
        #[command(subcommand)]
        action: LatticeAction,
    },
    /// Develop a locally Nil metric patch into Nil.
    Develop(DevelopArgs),
    /// Run a fixed, seeded battery of checks and print the report.
    Selftest(SelftestArgs),
}

#[derive(Debug, Subcommand)]
pub enum LatticeAction {
    /// Classify the lattices of a catalog by their base orbifold.
    Classify(ClassifyArgs),
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct FlowArgs {
    /// `identity`, a JSON Gram matrix (`{"gram": [..9]}` or nine numbers), or a file holding one.
    #[arg(long)]
    pub g0: Option<String>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Lattice label (`Gamma<k>` or a catalog label) for the almost-flat ratio column.
    #[arg(long)]
    pub lattice: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityArgs {
    /// JSON list of `{"metric": {"gram": [..]}, "lattice": {..}}`; the built-in set when absent.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Fixes the schedule constant instead of tuning it.
    #[arg(long)]
    pub a: Option<f64>,
    /// Fixes the growth constant instead of tuning it.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct RoundArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub lattice: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Smoothing time after curvature normalization.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Write the pure-JSON field variant instead of the binary one.
    #[arg(long)]
    pub json: Option<bool>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyArgs {
    /// Lattice catalog; the shipped catalog when absent.
    pub catalog: Option<PathBuf>,
    /// Word radius for the group computations.
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct DevelopArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Multiple of `h²` allowed for the holonomy defect.
    #[arg(long)]
    pub defect_factor: Option<f64>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub flow: FlowArgs,
    pub stability: StabilityArgs,
    pub round: RoundArgs,
    pub lattice: ClassifyArgs,
    pub develop: DevelopArgs,
    pub selftest: SelftestArgs,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::usage(format!("{name} must be positive and finite, got {x}")))
    }
}

fn required<T>(name: &str, x: Option<T>) -> Result<T> {
    x.ok_or_else(|| CliError::usage(format!("missing {name}")))
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowConfig {
    pub g0: String,
    pub t_end: f64,
    pub tol: f64,
    pub lattice: Option<String>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl FlowConfig {
    pub fn resolve(cli: FlowArgs, file: FlowArgs) -> Result<Self> {
        Ok(Self {
            g0: pick(cli.g0, file.g0, "identity".into()),
            t_end: positive("t-end", pick(cli.t_end, file.t_end, 1.0))?,
            tol: positive("tol", pick(cli.tol, file.tol, nil_flow::DEFAULT_TOL))?,
            lattice: cli.lattice.or(file.lattice),
            out: cli.out.or(file.out),
            report: cli.report.or(file.report),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityRunConfig {
    pub catalog: Option<PathBuf>,
    pub eps: f64,
    pub eps0: f64,
    pub steps: usize,
    pub samples: usize,
    pub tol: f64,
    pub a: Option<f64>,
    pub c: Option<f64>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl StabilityRunConfig {
    pub fn resolve(cli: StabilityArgs, file: StabilityArgs) -> Result<Self> {
        let defaults = nil_flow::StabilityConfig::default();
        let steps = pick(cli.steps, file.steps, defaults.steps);
        let samples = pick(cli.samples, file.samples, defaults.samples);
        if steps == 0 || samples < 2 {
            return Err(CliError::usage(format!("need steps ≥ 1 and samples ≥ 2, got {steps} and {samples}")));
        }
        let a = cli.a.or(file.a).map(|a| positive("a", a)).transpose()?;
        let c = cli.c.or(file.c).map(|c| positive("c", c)).transpose()?;
        Ok(Self {
            catalog: cli.catalog.or(file.catalog),
            eps: positive("eps", pick(cli.eps, file.eps, 0.01))?,
            eps0: positive("eps0", pick(cli.eps0, file.eps0, defaults.eps0))?,
            steps,
            samples,
            tol: positive("tol", pick(cli.tol, file.tol, defaults.tol))?,
            a,
            c,
            out: cli.out.or(file.out),
            report: cli.report.or(file.report),
        })
    }

    pub fn module_config(&self) -> nil_flow::StabilityConfig {
        nil_flow::StabilityConfig {
            a: self.a,
            c: self.c,
            eps0: self.eps0,
            steps: self.steps,
            samples: self.samples,
            tol: self.tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundConfig {
    pub input: PathBuf,
    pub lattice: String,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub tau: f64,
    pub json: bool,
}

impl RoundConfig {
    pub fn resolve(cli: RoundArgs, file: RoundArgs) -> Result<Self> {
        let tau = pick(cli.tau, file.tau, nil_rounding::RoundOptions::default().tau);
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(CliError::usage(format!("tau must be non-negative and finite, got {tau}")));
        }
        Ok(Self {
            input: required("--in", cli.input.or(file.input))?,
            lattice: required("--lattice", cli.lattice.or(file.lattice))?,
            out: cli.out.or(file.out),
            report: cli.report.or(file.report),
            tau,
            json: pick(cli.json, file.json, false),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyConfig {
    pub catalog: Option<PathBuf>,
    pub radius: usize,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl ClassifyConfig {
    pub fn resolve(cli: ClassifyArgs, file: ClassifyArgs) -> Result<Self> {
        let radius = pick(cli.radius, file.radius, nil_lattice::DEFAULT_RADIUS);
        if radius == 0 {
            return Err(CliError::usage("radius must be positive"));
        }
        Ok(Self { catalog: cli.catalog.or(file.catalog), radius, out: cli.out.or(file.out), report: cli.report.or(file.report) })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DevelopConfig {
    pub input: PathBuf,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub defect_factor: f64,
}

impl DevelopConfig {
    pub fn resolve(cli: DevelopArgs, file: DevelopArgs) -> Result<Self> {
        Ok(Self {
            input: required("--in", cli.input.or(file.input))?,
            out: cli.out.or(file.out),
            report: cli.report.or(file.report),
            defect_factor: positive("defect-factor", pick(cli.defect_factor, file.defect_factor, 10.0))?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl SelftestConfig {
    pub fn resolve(cli: SelftestArgs, file: SelftestArgs) -> Result<Self> {
        Ok(Self { seed: pick(cli.seed, file.seed, 1), out: cli.out.or(file.out) })
    }
}
