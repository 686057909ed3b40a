//! Command-line flags and the resolved run configuration.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gausszeros::{QuadratureSpec, TestFunction};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "gausszeros", version, about = "Zeros of stationary Gaussian processes: Kac-Rice densities, variance constants and Monte Carlo checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// k-point density of the zero set at each configuration.
    Rho,
    /// Variance constant and its lower bound.
    Sigma2,
    /// Simulate paths and report zero counts and linear statistics.
    Simulate,
    /// Empirical and predicted central moments of a linear statistic.
    Moments,
    /// Ratio of clustered and full densities.
    Clustering,
    /// Vanishing-order constant at a configuration with repeated points.
    Vanishing,
    /// Table of the two-point excess function.
    Fcurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Preset name (bargmann-fock, sinc-sqrt3, cauchy) or path to a spectral table in JSON.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Configuration as comma-separated reals; repeat the flag for several configurations.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub points: Vec<String>,
    /// Partition of the point indices, e.g. "{0,1},{2}".
    #[arg(long, global = true)]
    pub partition: Option<String>,
    /// Scale parameter R (window length for simulations).
    #[arg(long = "R", global = true)]
    pub r: Option<f64>,
    /// Number of Monte Carlo replicates.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "GAUSSZEROS_THREADS")]
    pub threads: Option<usize>,
    /// Absolute quadrature tolerance.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Largest z of the F table.
    #[arg(long, global = true)]
    pub zmax: Option<f64>,
    /// Step of the F table.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Test function: indicator:a,b | gaussian:c,w | table:x0,x1,..|y0,y1,..
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub phi: Option<String>,
    /// Moment order.
    #[arg(long, global = true)]
    pub p: Option<usize>,
    /// Half-width of the counting intervals for k-point estimates.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Monte Carlo samples for the conditional moments of densities.
    #[arg(long, global = true)]
    pub mc_samples: Option<usize>,
    /// Include zero lists in replicate output.
    #[arg(long, global = true)]
    pub zeros: bool,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Read settings from a JSON file; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub model: String,
    pub points: Vec<Vec<f64>>,
    pub partition: Option<String>,
    #[serde(rename = "R")]
    pub r: f64,
    pub n: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub quadrature: QuadratureSpec,
    pub grid_step: f64,
    pub padding_factor: f64,
    pub zmax: f64,
    pub step: f64,
    pub phi: TestFunction,
    pub p: usize,
    pub epsilon: f64,
    pub mc_samples: usize,
    pub zeros: bool,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            model: "bargmann-fock".into(),
            points: Vec::new(),
            partition: None,
            r: 50.0,
            n: 1000,
            seed: 0,
            threads: None,
            quadrature: QuadratureSpec::default(),
            grid_step: 0.02,
            padding_factor: 2.0,
            zmax: 10.0,
            step: 0.01,
            phi: TestFunction::Indicator { a: 0.0, b: 1.0 },
            p: 2,
            epsilon: 0.05,
            mc_samples: 1_000_000,
            zeros: false,
            out: None,
            format: None,
        }
    }
}

pub fn parse_points(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("cannot parse '{s}' in --points {text}")))
        .collect()
}

impl RunConfig {
    /// Starts from `base` (defaults or a config file) and applies the flags.
    pub fn resolve(base: RunConfig, command: Command, flags: &Flags) -> Result<RunConfig, String> {
        let mut c = base;
        c.command = Some(command);
        if let Some(v) = &flags.model {
            c.model = v.clone();
        }
        if !flags.points.is_empty() {
            c.points = flags.points.iter().map(|p| parse_points(p)).collect::<Result<_, _>>()?;
        }
        if let Some(v) = &flags.partition {
            c.partition = Some(v.clone());
        }
        if let Some(v) = flags.r {
            c.r = v;
        }
        if let Some(v) = flags.n {
            c.n = v;
        }
        if let Some(v) = flags.seed {
            c.seed = v;
        }
        if let Some(v) = flags.threads {
            c.threads = Some(v);
        }
        if let Some(v) = flags.tolerance {
            c.quadrature.abs_tolerance = v;
        }
        if let Some(v) = flags.zmax {
            c.zmax = v;
        }
        if let Some(v) = flags.step {
            c.step = v;
        }
        if let Some(v) = &flags.phi {
            c.phi = TestFunction::parse(v).map_err(|e| e.to_string())?;
        }
        if let Some(v) = flags.p {
            c.p = v;
        }
        if let Some(v) = flags.epsilon {
            c.epsilon = v;
        }
        if let Some(v) = flags.mc_samples {
            c.mc_samples = v;
        }
        if flags.zeros {
            c.zeros = true;
        }
        if let Some(v) = &flags.out {
            c.out = Some(v.clone());
        }
        if let Some(v) = flags.format {
            c.format = Some(v);
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.quadrature.validate().map_err(|e| e.to_string())?;
        let positive = [("R", self.r), ("step", self.step), ("zmax", self.zmax), ("epsilon", self.epsilon)];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(format!("{name} must be positive and finite, got {v}"));
        }
        if self.n == 0 {
            return Err("n must be at least 1".into());
        }
        if self.threads == Some(0) {
            return Err("threads must be at least 1".into());
        }
        if self.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err("points must be finite".into());
        }
        Ok(())
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}
