mod config;

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use gausszeros::correlation_models::model_from_spectral_json;
use gausszeros::kac_rice_densities::{clustering_ratio_with, rho_k_with, rho_with_partition_mc, vanishing_constant_with};
use gausszeros::pair_correlation_variance::{
    expected_linear_statistic, predicted_covariance, sigma_lower_bound, sigma_squared_report, two_point_F,
};
use gausszeros::partitions_combinatorics::predicted_central_moment;
use gausszeros::process_simulation::{empirical_k_point, linear_statistic, moments_of, PathSampler};
use gausszeros::{CorrelationModel, ErrorCategory, IndexPartition, MonteCarloSpec, SimulationSpec};
use rayon::prelude::*;
use serde_json::json;

use config::{Cli, Command, Format, RunConfig};

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

const EXIT_DOMAIN: u8 = 2;
const EXIT_NUMERICS: u8 = 3;
const EXIT_CONFIG: u8 = 4;

impl From<gausszeros::Error> for Failure {
    fn from(e: gausszeros::Error) -> Self {
        let code = match e.category() {
            ErrorCategory::Domain => EXIT_DOMAIN,
            ErrorCategory::Numerics => EXIT_NUMERICS,
            ErrorCategory::Config => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: EXIT_CONFIG, message: format!("i/o error: {e}") }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure { code: EXIT_CONFIG, message: format!("csv error: {e}") }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_CONFIG, message: message.into() }
}

type Out = Box<dyn Write>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let base = match &cli.flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| config_error(format!("invalid config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let cfg = RunConfig::resolve(base, cli.command, &cli.flags).map_err(config_error)?;
    let mut out: Out = match &cfg.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    if cli.flags.dump_config {
        serde_json::to_writer_pretty(&mut out, &cfg).map_err(|e| config_error(e.to_string()))?;
        writeln!(out)?;
        out.flush()?;
        return Ok(());
    }
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| config_error(format!("cannot start thread pool: {e}")))?;
    }
    let model = load_model(&cfg.model)?;
    match cli.command {
        Command::Rho => cmd_rho(&cfg, &model, &mut out)?,
        Command::Sigma2 => cmd_sigma2(&cfg, &model, &mut out)?,
        Command::Simulate => cmd_simulate(&cfg, &model, &mut out)?,
        Command::Moments => cmd_moments(&cfg, &model, &mut out)?,
        Command::Clustering => cmd_clustering(&cfg, &model, &mut out)?,
        Command::Vanishing => cmd_vanishing(&cfg, &model, &mut out)?,
        Command::Fcurve => cmd_fcurve(&cfg, &model, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn load_model(name: &str) -> Result<CorrelationModel, Failure> {
    if let Ok(m) = CorrelationModel::from_name(name) {
        return Ok(m);
    }
    let path = Path::new(name);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        return Ok(model_from_spectral_json(&text)?);
    }
    Err(config_error(format!("unknown model '{name}' (presets: bargmann-fock, sinc-sqrt3, cauchy, or a JSON table path)")))
}

fn mc_spec(cfg: &RunConfig) -> MonteCarloSpec {
    MonteCarloSpec::with_samples(cfg.mc_samples, cfg.seed)
}

fn require_points(cfg: &RunConfig) -> Result<&[Vec<f64>], Failure> {
    if cfg.points.is_empty() || cfg.points.iter().any(Vec::is_empty) {
        return Err(config_error("--points is required"));
    }
    Ok(&cfg.points)
}

fn json_line(out: &mut Out, v: &serde_json::Value) -> Result<(), Failure> {
    writeln!(out, "{v}")?;
    Ok(())
}

/// Summary rows `quantity, estimate, stderr, ci_lo, ci_hi, n`.
struct Row {
    quantity: String,
    estimate: f64,
    stderr: Option<f64>,
    ci: Option<(f64, f64)>,
    n: Option<usize>,
}

impl Row {
    fn plain(quantity: impl Into<String>, estimate: f64) -> Row {
        Row { quantity: quantity.into(), estimate, stderr: None, ci: None, n: None }
    }

    fn to_json(&self) -> serde_json::Value {
        json!({
            "quantity": self.quantity,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "ci_lo": self.ci.map(|c| c.0),
            "ci_hi": self.ci.map(|c| c.1),
            "n": self.n,
        })
    }
}

fn write_rows(out: &mut Out, rows: &[Row], format: Format) -> Result<(), Failure> {
    match format {
        Format::Json => {
            for r in rows {
                json_line(out, &r.to_json())?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["quantity", "estimate", "stderr", "ci_lo", "ci_hi", "n"])?;
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            for r in rows {
                w.write_record([
                    r.quantity.clone(),
                    r.estimate.to_string(),
                    opt(r.stderr),
                    opt(r.ci.map(|c| c.0)),
                    opt(r.ci.map(|c| c.1)),
                    r.n.map(|v| v.to_string()).unwrap_or_default(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_rho(cfg: &RunConfig, model: &CorrelationModel, out: &mut Out) -> Result<(), Failure> {
    let mc = mc_spec(cfg);
    let mut rows = Vec::new();
    for x in require_points(cfg)? {
        let res = match &cfg.partition {
            Some(p) => {
                let part = IndexPartition::parse(p, x.len())?;
                rho_with_partition_mc(model, x, &part, &mc)?
            }
            None => rho_k_with(model, x, &mc)?,
        };
        if cfg.format_or(Format::Json) == Format::Json {
            json_line(
                out,
                &json!({
                    "points": x,
                    "rho": res.rho,
                    "d": res.d_value,
                    "n": res.n_value,
                    "n_stderr": res.n_std_error,
                    "partition": res.partition_used.to_string(),
                    "vandermonde": res.vandermonde_factor,
                }),
            )?;
        } else {
            let label = x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
            rows.push(Row { quantity: format!("rho({label})"), estimate: res.rho, stderr: Some(res.rho_std_error()), ci: None, n: None });
        }
    }
    if !rows.is_empty() {
        write_rows(out, &rows, Format::Csv)?;
    }
    Ok(())
}

fn cmd_sigma2(cfg: &RunConfig, model: &CorrelationModel, out: &mut Out) -> Result<(), Failure> {
    let report = sigma_squared_report(model, &cfg.quadrature)?;
    let lower = sigma_lower_bound(model, &cfg.quadrature)?;
    match cfg.format_or(Format::Json) {
        Format::Json => json_line(
            out,
            &json!({
                "model": model.name(),
                "sigma2": report.sigma2,
                "lower_bound": lower,
                "converged": report.converged,
                "truncation": report.truncation,
                "quadrature_error": report.quadrature_error,
            }),
        )?,
        Format::Csv => write_rows(
            out,
            &[
                Row { stderr: Some(report.quadrature_error), ..Row::plain("sigma2", report.sigma2) },
                Row::plain("lower_bound", lower),
            ],
            Format::Csv,
        )?,
    }
    if !report.converged {
        return Err(gausszeros::Error::QuadratureNotConverged { estimate: report.sigma2, error: report.quadrature_error }.into());
    }
    Ok(())
}

fn simulation_spec(cfg: &RunConfig, window_len: f64, origin: f64) -> SimulationSpec {
    SimulationSpec {
        origin,
        window_len,
        grid_step: cfg.grid_step,
        num_samples: cfg.n,
        master_seed: cfg.seed,
        padding_factor: cfg.padding_factor,
    }
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = gausszeros::rng::pairwise_sum(v) / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn cmd_simulate(cfg: &RunConfig, model: &CorrelationModel, out: &mut Out) -> Result<(), Failure> {
    // With --points, estimate the k-point function from interval counts.
    if !cfg.points.is_empty() {
        let x = &require_points(cfg)?[0];
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min) - cfg.epsilon;
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + cfg.epsilon;
        let spec = simulation_spec(cfg, hi - lo, lo);
        let (est, se) = empirical_k_point(model, &spec, x, cfg.epsilon)?;
        let rho = rho_k_with(model, x, &mc_spec(cfg))?.rho;
        let rows = [
            Row { stderr: Some(se), n: Some(cfg.n), ..Row::plain("empirical_k_point", est) },
            Row::plain("rho_k", rho),
        ];
        return write_rows(out, &rows, cfg.format_or(Format::Json));
    }
    let spec = simulation_spec(cfg, cfg.r, 0.0);
    let sampler = PathSampler::new(model, &spec)?;
    let samples: Vec<_> = (0..cfg.n as u64).into_par_iter().map(|i| sampler.zeros(i)).collect();
    let stats: Vec<f64> =
        samples.iter().map(|s| linear_statistic(s, &cfg.phi, cfg.r)).collect::<Result<_, _>>()?;
    match cfg.format_or(Format::Json) {
        Format::Json => {
            for (i, (s, stat)) in samples.iter().zip(&stats).enumerate() {
                let mut v = json!({ "replicate": i, "seed": s.replicate_seed, "count": s.zeros.len(), "stat": stat });
                if cfg.zeros {
                    v["zeros"] = json!(s.zeros);
                }
                json_line(out, &v)?;
            }
        }
        Format::Csv => {
            let counts: Vec<f64> = samples.iter().map(|s| s.zeros.len() as f64).collect();
            let (cm, cse) = mean_and_stderr(&counts);
            let (sm, sse) = mean_and_stderr(&stats);
            let var = moments_of(&stats, sm, &[2], cfg.seed).remove(0);
            let rows = [
                Row { stderr: Some(cse), n: Some(cfg.n), ..Row::plain("mean_count", cm) },
                Row::plain("expected_count", cfg.r / PI),
                Row { stderr: Some(sse), n: Some(cfg.n), ..Row::plain("mean_stat", sm) },
                Row::plain("expected_stat", expected_linear_statistic(&cfg.phi, cfg.r)),
                Row {
                    stderr: Some(var.std_error),
                    ci: Some((var.ci_lo, var.ci_hi)),
                    n: Some(cfg.n),
                    ..Row::plain("variance_stat", var.estimate)
                },
            ];
            write_rows(out, &rows, Format::Csv)?;
        }
    }
    Ok(())
}

fn cmd_moments(cfg: &RunConfig, model: &CorrelationModel, out: &mut Out) -> Result<(), Failure> {
    if cfg.p == 0 || cfg.p > 6 {
        return Err(config_error(format!("--p must lie in 1..=6, got {}", cfg.p)));
    }
    let (a, b) = cfg.phi.support();
    let origin = (cfg.r * a).min(0.0);
    let spec = simulation_spec(cfg, cfg.r * b - origin, origin);
    let sampler = PathSampler::new(model, &spec)?;
    let stats: Vec<f64> = (0..cfg.n as u64)
        .into_par_iter()
        .map(|i| linear_statistic(&sampler.zeros(i), &cfg.phi, cfg.r))
        .collect::<Result<_, _>>()?;
    let orders: Vec<usize> = (1..=cfg.p).collect();
    let mut rows: Vec<Row> = moments_of(&stats, expected_linear_statistic(&cfg.phi, cfg.r), &orders, cfg.seed)
        .into_iter()
        .map(|m| Row {
            quantity: format!("m{}", m.order),
            estimate: m.estimate,
            stderr: Some(m.std_error),
            ci: Some((m.ci_lo, m.ci_hi)),
            n: Some(m.num_samples),
        })
        .collect();
    let m2 = predicted_covariance(model, &cfg.phi, &cfg.phi, cfg.r, &cfg.quadrature)?;
    rows.push(Row::plain("predicted_m2", m2));
    let phis = vec![cfg.phi.clone(); cfg.p];
    let mp = predicted_central_moment(model, &phis, cfg.r, &cfg.quadrature)?;
    rows.push(Row::plain(format!("predicted_m{}", cfg.p), mp));
    write_rows(out, &rows, cfg.format_or(Format::Json))
}

fn cmd_clustering(cfg: &RunConfig, model: &CorrelationModel, out: &mut Out) -> Result<(), Failure> {
    let part = cfg.partition.as_ref().ok_or_else(|| config_error("--partition is required"))?;
    for x in require_points(cfg)? {
        let p = IndexPartition::parse(part, x.len())?;
        let (ratio, bound) = clustering_ratio_with(model, x, &p, &mc_spec(cfg))?;
        match cfg.format_or(Format::Json) {
            Format::Json => json_line(out, &json!({ "points": x, "partition": p.to_string(), "ratio": ratio, "bound": bound }))?,
            Format::Csv => write_rows(out, &[Row::plain("ratio", ratio), Row::plain("bound", bound)], Format::Csv)?,
        }
    }
    Ok(())
}

fn cmd_vanishing(cfg: &RunConfig, model: &CorrelationModel, out: &mut Out) -> Result<(), Failure> {
    for y in require_points(cfg)? {
        let v = vanishing_constant_with(model, y, &mc_spec(cfg))?;
        match cfg.format_or(Format::Json) {
            Format::Json => json_line(
                out,
                &json!({ "points": y, "ell": v.value, "stderr": v.std_error, "partition": v.partition.to_string() }),
            )?,
            Format::Csv => write_rows(out, &[Row { stderr: Some(v.std_error), ..Row::plain("ell", v.value) }], Format::Csv)?,
        }
    }
    Ok(())
}

fn cmd_fcurve(cfg: &RunConfig, model: &CorrelationModel, out: &mut Out) -> Result<(), Failure> {
    let count = (cfg.zmax / cfg.step + 1e-9).floor() as usize;
    let table: Vec<(f64, f64)> = (1..=count)
        .map(|i| {
            let z = i as f64 * cfg.step;
            two_point_F(model, z).map(|f| (z, f))
        })
        .collect::<Result<_, _>>()?;
    match cfg.format_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["z", "F"])?;
            for (z, f) in table {
                w.write_record([z.to_string(), f.to_string()])?;
            }
            w.flush()?;
        }
        Format::Json => {
            for (z, f) in table {
                json_line(out, &json!({ "z": z, "F": f }))?;
            }
        }
    }
    Ok(())
}
