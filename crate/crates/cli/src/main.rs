mod output;
mod plots;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use hypoflow::format::{csv_row, Float};
use hypoflow::fp::{check_improved_eep, evolve_fp, FpConfig, FpInitial};
use hypoflow::hypo::{
    eigenvalues_m2_closed_form, eigenvalues_numeric, m2, multiset_distance, optimize_lambda_star,
    SearchConfig,
};
use hypoflow::kfp::{evolve_kfp, KfpConfig, KfpInitial};
use hypoflow::suite::{run_suite, Check, SuiteConfig};
use hypoflow::{Error as CoreError, Execution, PhiFamily, ScalarField};

use output::Artifacts;

#[derive(Parser)]
#[command(name = "hypoflow", version, about = "Entropy decay experiments for OU and kinetic Fokker-Planck flows")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for random initial data or the first suite seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated exponents, overriding the config's p_list.
    #[arg(long, global = true, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the closed-form spectrum of M2(½, 1, κ).
    Eigen {
        #[arg(long, default_value_t = 0.0)]
        kappa_min: f64,
        #[arg(long, default_value_t = 8.0)]
        kappa_max: f64,
        #[arg(long, default_value_t = 0.0625)]
        step: f64,
    },
    /// Maximise λ⋆ over the feasible (λ, ν) set.
    Optimize {
        #[arg(long)]
        kappa: f64,
    },
    /// Run the OU flow.
    EvolveFp,
    /// Run the kinetic Fokker-Planck flow.
    EvolveKfp,
    /// Run the sampled inequality suite.
    Check {
        /// Comma-separated check names; all checks when absent.
        #[arg(long, value_delimiter = ',')]
        suite: Option<Vec<String>>,
        #[arg(long)]
        seeds: Option<u64>,
    },
}

/// Tolerances for the hard invariants of a trajectory.
const MASS_TOL: f64 = 1e-8;
const MONOTONE_TOL: f64 = 1e-10;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Aborted runs and broken preconditions are scientific failures; anything
/// else is a usage or configuration problem.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<CoreError>() {
        Some(CoreError::Aborted { .. } | CoreError::Precondition(_)) => 1,
        _ => 2,
    }
}

fn execution() -> Result<Execution> {
    let Ok(raw) = std::env::var("HYPOFLOW_THREADS") else {
        return Ok(Execution::Parallel);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow!("HYPOFLOW_THREADS must be a positive integer, got '{raw}'"))?;
    if n == 1 {
        return Ok(Execution::Sequential);
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(Execution::Parallel)
}

fn run(cli: Cli) -> Result<bool> {
    let exec = execution()?;
    match &cli.command {
        Command::Eigen { kappa_min, kappa_max, step } => cmd_eigen(&cli, *kappa_min, *kappa_max, *step),
        Command::Optimize { kappa } => cmd_optimize(&cli, *kappa),
        Command::EvolveFp => cmd_evolve_fp(&cli, exec),
        Command::EvolveKfp => cmd_evolve_kfp(&cli, exec),
        Command::Check { suite, seeds } => cmd_check(&cli, suite.as_deref(), *seeds, exec),
    }
}

fn load<T: DeserializeOwned>(path: Option<&Path>) -> Result<T> {
    let path = path.ok_or_else(|| anyhow!("--config is required for this command"))?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn say(cli: &Cli, msg: impl AsRef<str>) {
    if !cli.quiet {
        println!("{}", msg.as_ref());
    }
}

fn kappa_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
        bail!("kappa range and step must be finite");
    }
    if !(0.0..=8.0).contains(&lo) || !(0.0..=8.0).contains(&hi) {
        bail!("kappa range [{lo}, {hi}] must lie in [0, 8]");
    }
    if lo > hi {
        bail!("empty kappa range: {lo} > {hi}");
    }
    if step <= 0.0 {
        bail!("step must be positive, got {step}");
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

#[derive(Serialize)]
struct SpectrumRecord {
    kappa: f64,
    eigenvalues_closed: [f64; 4],
    eigenvalues_numeric: Vec<f64>,
}

fn spectrum(kappa: f64) -> Result<SpectrumRecord> {
    Ok(SpectrumRecord {
        kappa,
        eigenvalues_closed: eigenvalues_m2_closed_form(kappa).as_array(),
        eigenvalues_numeric: eigenvalues_numeric(&m2(0.5, 1.0, kappa))?,
    })
}

fn cmd_eigen(cli: &Cli, lo: f64, hi: f64, step: f64) -> Result<bool> {
    let kappas = kappa_grid(lo, hi, step)?;
    let art = Artifacts::new(&cli.out, "eigen", json!({ "kappa_min": lo, "kappa_max": hi, "step": step }))?;
    let records: Vec<SpectrumRecord> = kappas.iter().map(|&k| spectrum(k)).collect::<Result<_>>()?;
    let mut csv = String::from("kappa,l1,l2,l3,l4\n");
    for r in &records {
        let [a, b, c, d] = r.eigenvalues_closed;
        csv_row(&mut csv, &[r.kappa, a, b, c, d]);
    }
    let worst = records
        .iter()
        .map(|r| multiset_distance(&r.eigenvalues_closed, &r.eigenvalues_numeric))
        .fold(0.0, f64::max);
    art.csv("eigen.csv", &csv)?;
    art.gnuplot("eigen.gp", &plots::eigen("eigen.csv"))?;
    art.json("eigen.json", &json!({ "rows": records, "max_closed_numeric_distance": worst }))?;
    say(cli, format!("eigen: {} rows, closed vs numeric within {worst:.3e}", records.len()));
    Ok(true)
}

fn cmd_optimize(cli: &Cli, kappa: f64) -> Result<bool> {
    if !(0.0..=8.0).contains(&kappa) {
        bail!("kappa = {kappa} outside [0, 8]");
    }
    let search = SearchConfig::default();
    let art = Artifacts::new(&cli.out, "optimize", json!({ "kappa": kappa, "search": search }))?;
    let opt = optimize_lambda_star(kappa, &search)?;
    let spec = spectrum(kappa)?;
    art.json(
        "optimize.json",
        &json!({
            "kappa": opt.kappa,
            "lambda_opt": opt.lambda_opt,
            "nu_opt": opt.nu_opt,
            "value": opt.value,
            "eigenvalues_closed": spec.eigenvalues_closed,
            "eigenvalues_numeric": spec.eigenvalues_numeric,
        }),
    )?;
    say(
        cli,
        format!("optimize: kappa={kappa} lambda={} nu={} value={}", opt.lambda_opt, opt.nu_opt, opt.value),
    );
    Ok(true)
}

/// Fit window for exponential rates: the last five eighths of the run.
fn rate_window(t_end: f64) -> (f64, f64) {
    (0.375 * t_end, t_end)
}

fn max_increase(series: &[f64]) -> f64 {
    series.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn monotone(series: &[f64]) -> bool {
    let scale = series.first().copied().unwrap_or(0.0).abs();
    max_increase(series) <= MONOTONE_TOL * scale + 1e-15
}

fn cmd_evolve_fp(cli: &Cli, exec: Execution) -> Result<bool> {
    let mut cfg: FpConfig = load(cli.config.as_deref())?;
    if let Some(p) = &cli.p {
        cfg.p_list = p.clone();
    }
    if let (Some(s), FpInitial::RandomMixture { seed, .. }) = (cli.seed, &mut cfg.initial) {
        *seed = s;
    }
    cfg.validate()?;
    let art = Artifacts::new(&cli.out, "evolve-fp", &cfg)?;
    let grid = std::sync::Arc::new(hypoflow::QuadratureGrid::from_spec(1, &cfg.grid)?);
    let w0: ScalarField = cfg.initial.sample(grid)?;
    let trace = evolve_fp(&w0, &cfg, exec)?;

    let window = rate_window(cfg.t_end);
    let mut channels = Vec::new();
    let mut monotone_ok = true;
    for (i, ch) in trace.channels.iter().enumerate() {
        let fam = PhiFamily::new(ch.p)?;
        monotone_ok &= monotone(&ch.entropy);
        let eep = if fam.p > 1.0 && fam.p < 2.0 { Some(check_improved_eep(&trace, &fam)?) } else { None };
        channels.push(json!({
            "p": ch.p,
            "rate": trace.fit_entropy_rate(ch.p, window).ok(),
            "entropy_initial": ch.entropy.first(),
            "entropy_final": ch.entropy.last(),
            "max_entropy_increase": max_increase(&ch.entropy),
            "production_residual": trace.production_residual(i),
            "production_budget": trace.production_budget(i),
            "improved_eep": eep,
        }));
    }
    let drift = trace.max_mass_drift() / trace.mass[0].abs().max(f64::MIN_POSITIVE);
    let mass_ok = drift <= MASS_TOL;
    let passed = mass_ok && monotone_ok;
    art.csv("fp_trace.csv", &trace.to_csv())?;
    art.gnuplot("fp.gp", &plots::fp("fp_trace.csv", &cfg.p_list))?;
    art.json(
        "fp_summary.json",
        &json!({
            "rate_window": window,
            "channels": channels,
            "relative_mass_drift": drift,
            "min_value": trace.min_value.iter().copied().fold(f64::INFINITY, f64::min),
            "defect": trace.defect,
            "invariants": { "mass": mass_ok, "monotone_entropy": monotone_ok },
            "passed": passed,
        }),
    )?;
    say(cli, format!("evolve-fp: {} samples, mass drift {drift:.3e}, passed={passed}", trace.times.len()));
    Ok(passed)
}

fn cmd_evolve_kfp(cli: &Cli, exec: Execution) -> Result<bool> {
    let mut cfg: KfpConfig = load(cli.config.as_deref())?;
    if let Some(p) = &cli.p {
        cfg.p_list = p.clone();
    }
    if let (Some(s), KfpInitial::Random { seed, .. }) = (cli.seed, &mut cfg.initial) {
        *seed = s;
    }
    cfg.validate()?;
    let art = Artifacts::new(&cli.out, "evolve-kfp", &cfg)?;
    let g0 = cfg.initial.sample(cfg.build_grid()?)?;
    let trace = evolve_kfp(&g0, &cfg, exec)?;

    let window = rate_window(cfg.t_end);
    let mut channels = Vec::new();
    let mut monotone_ok = true;
    for ch in &trace.channels {
        let entropy = ch.series(|d| d.entropy);
        let j_half = ch.series(|d| d.j_half);
        monotone_ok &= monotone(&entropy) && monotone(&j_half);
        let slopes: Vec<f64> = trace.log_j_slope(ch.p)?.into_iter().filter(|s| s.is_finite()).collect();
        let a = ch.series(|d| d.a);
        let rho = &ch.rho_t;
        let above = rho.iter().filter(|&&r| r > 0.5).count();
        let tau = trace.tau(ch.p)?;
        channels.push(json!({
            "p": ch.p,
            "rate": trace.fit_entropy_rate(ch.p, window).ok(),
            "max_log_j_slope": slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            "min_log_j_slope": slopes.iter().copied().fold(f64::INFINITY, f64::min),
            "a_initial": a.first(),
            "a_first_sample": a.get(1),
            "rho": {
                "min": rho.iter().copied().fold(f64::INFINITY, f64::min),
                "max": rho.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                "mean": rho.iter().sum::<f64>() / rho.len().max(1) as f64,
                "fraction_above_half": above as f64 / rho.len().max(1) as f64,
            },
            "lambda_final": ch.lambda_t.last(),
            "tau": tau.tau,
            "tau_converged": tau.converged,
            "zero_events": ch.zero_events,
        }));
    }
    let drift = trace.max_mass_drift() / trace.mass[0].abs().max(f64::MIN_POSITIVE);
    let mass_ok = drift <= MASS_TOL;
    let passed = mass_ok && monotone_ok;
    art.csv("kfp_trace.csv", &trace.to_csv())?;
    art.gnuplot("kfp.gp", &plots::kfp("kfp_trace.csv", &cfg.p_list))?;
    art.json(
        "kfp_summary.json",
        &json!({
            "rate_window": window,
            "channels": channels,
            "relative_mass_drift": drift,
            "min_value": trace.min_value.iter().copied().fold(f64::INFINITY, f64::min),
            "defect": trace.defect,
            "controller_enabled": trace.controller_enabled,
            "invariants": { "mass": mass_ok, "monotone_entropy_and_j": monotone_ok },
            "passed": passed,
        }),
    )?;
    say(cli, format!("evolve-kfp: {} samples, mass drift {drift:.3e}, passed={passed}", trace.times.len()));
    Ok(passed)
}

fn cmd_check(cli: &Cli, selector: Option<&[String]>, seeds: Option<u64>, exec: Execution) -> Result<bool> {
    let mut cfg: SuiteConfig = match &cli.config {
        Some(path) => load(Some(path))?,
        None => SuiteConfig::default(),
    };
    if let Some(names) = selector {
        cfg.checks = names.iter().map(|n| Check::parse(n.trim())).collect::<hypoflow::Result<_>>()?;
    }
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    if let Some(s) = cli.seed {
        cfg.first_seed = s;
    }
    if let Some(p) = &cli.p {
        cfg.p_list = p.clone();
    }
    cfg.checks.sort();
    cfg.checks.dedup();
    let art = Artifacts::new(&cli.out, "check", &cfg)?;
    let report = run_suite(&cfg, exec)?;
    let mut csv = String::from("check,p_or_q,seeds,min_margin,argmin_seed,violations\n");
    for r in &report.reports {
        csv += &format!(
            "{},{},{},{},{},{}\n",
            r.check.name(),
            Float(r.p_or_q),
            r.seeds,
            Float(r.min_margin),
            r.argmin_seed,
            r.violations
        );
    }
    art.csv("check.csv", &csv)?;
    art.json("check.json", &json!({ "report": report, "passed": report.passed() }))?;
    say(
        cli,
        format!(
            "check: {} reports, {} violations",
            report.reports.len(),
            report.total_violations
        ),
    );
    Ok(report.passed())
}
