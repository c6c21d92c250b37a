use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use parampass::basis::{BasisKind, ParamBasis};
use parampass::dataset::{load_dataset, rms_error, FitSplit, RmsMode, SampledDataset};
use parampass::enforcement::{enforce, EnforceConfig, QpConfig};
use parampass::fixtures;
use parampass::gsk::{default_poles, fit, stability_sweep, GskConfig};
use parampass::model::ParamModel;
use parampass::oracle::dense_sweep;
use parampass::passivity::{adaptive_check, CheckConfig, ViolationReport};
use parampass::report::{
    export_enforce_log_csv, export_eval_csv, export_fit_report_csv, export_gsk_log_csv, export_psi_csv,
    export_report, ReportFormat,
};

/// Exit status for "completed, but the model is not passive".
const EXIT_VIOLATIONS: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "parampass", version, about = "Parameterized macromodel fitting, passivity check and enforcement")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a parameterized model to a sampled dataset.
    Fit(FitArgs),
    /// Check uniform passivity over the parameter range.
    Check(CheckArgs),
    /// Perturb the numerator until the model is passive.
    Enforce(EnforceArgs),
    /// Evaluate a model on a frequency and parameter grid.
    Eval(EvalArgs),
    /// Certify a model with the dense-sweep oracle and compare with the check.
    Validate(ValidateArgs),
    /// Write a synthetic model and dataset.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitKind {
    /// Columns 1, 3, 5, ... fit; the others validate.
    Alternating,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Chebyshev,
    Monomial,
    Trigonometric,
}

#[derive(Args)]
struct CheckFlags {
    #[arg(long, default_value_t = CheckConfig::default().gamma)]
    gamma: f64,
    #[arg(long, default_value_t = CheckConfig::default().kappa)]
    kappa: usize,
    #[arg(long, default_value_t = CheckConfig::default().max_passes)]
    max_passes: usize,
    #[arg(long, default_value_t = CheckConfig::default().im_tol)]
    im_tol: f64,
    #[arg(long, default_value_t = CheckConfig::default().band_samples)]
    band_samples: usize,
    #[arg(long, default_value_t = CheckConfig::default().omega_cap_factor)]
    omega_cap_factor: f64,
    /// Skip the stability sweep that otherwise blocks unstable models.
    #[arg(long)]
    allow_unstable: bool,
}

impl CheckFlags {
    fn config(&self) -> CheckConfig {
        CheckConfig {
            gamma: self.gamma,
            kappa: self.kappa,
            max_passes: self.max_passes,
            im_tol: self.im_tol,
            band_samples: self.band_samples,
            omega_cap_factor: self.omega_cap_factor,
        }
    }
}

#[derive(Args)]
struct ReportOut {
    /// Non-passive bands (csv) or the full report (json).
    #[arg(long, default_value = "violations")]
    violations: PathBuf,
    /// `theta, psi` samples.
    #[arg(long, default_value = "psi.csv")]
    psi: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset manifest.
    #[arg(long)]
    data: PathBuf,
    /// Number of basis poles.
    #[arg(long)]
    order: usize,
    /// Number of parameter basis functions.
    #[arg(long, default_value_t = 2)]
    param_terms: usize,
    #[arg(long, value_enum, default_value_t = BasisArg::Chebyshev)]
    basis: BasisArg,
    #[arg(long, value_enum, default_value_t = SplitKind::Alternating)]
    split: SplitKind,
    #[arg(long, default_value_t = GskConfig::default().max_iterations)]
    gsk_iters: usize,
    #[arg(long, default_value_t = GskConfig::default().stop_tol)]
    stop_tol: f64,
    /// Write the model even if the stability sweep finds unstable poles.
    #[arg(long)]
    allow_unstable: bool,
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
    #[arg(long, default_value = "fit_report.csv")]
    report: PathBuf,
    #[arg(long, default_value = "gsk_log.csv")]
    log: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    check: CheckFlags,
    #[command(flatten)]
    out: ReportOut,
}

#[derive(Args)]
struct EnforceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitKind::Alternating)]
    split: SplitKind,
    #[command(flatten)]
    check: CheckFlags,
    #[arg(long, default_value_t = EnforceConfig::default().margin)]
    margin: f64,
    #[arg(long, default_value_t = EnforceConfig::default().max_iterations)]
    max_iters: usize,
    #[arg(long, default_value_t = QpConfig::default().feas_tol)]
    feas_tol: f64,
    #[arg(long, default_value_t = QpConfig::default().gap_tol)]
    gap_tol: f64,
    #[arg(long, default_value_t = QpConfig::default().max_ip_iters)]
    max_ip_iters: usize,
    #[arg(long, default_value = "passive_model.json")]
    out: PathBuf,
    #[arg(long, default_value = "enforce_log.csv")]
    log: PathBuf,
    #[command(flatten)]
    report: ReportOut,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Frequency in Hz; repeatable.
    #[arg(long = "freq")]
    freqs: Vec<f64>,
    /// Linear frequency sweep `start:stop:count` in Hz.
    #[arg(long)]
    freq_range: Option<String>,
    /// Parameter value; repeatable.
    #[arg(long = "theta")]
    thetas: Vec<f64>,
    /// Linear parameter sweep `start:stop:count`.
    #[arg(long)]
    theta_range: Option<String>,
    /// Append a row for `s = ∞` per parameter value.
    #[arg(long)]
    infinity: bool,
    #[arg(long, default_value = "eval.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleFlags {
    #[arg(long, default_value_t = 2048)]
    oracle_nf: usize,
    #[arg(long, default_value_t = 101)]
    oracle_ntheta: usize,
    /// The sweep extends to this multiple of the largest pole magnitude.
    #[arg(long, default_value_t = 10.0)]
    f_max_mult: f64,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    oracle: OracleFlags,
    #[command(flatten)]
    check: CheckFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    /// `c/(s + 1)`, independent of the parameter.
    SinglePole,
    /// `ϑ/(s + 1)` on `[0.5, 1.5]`.
    Linear,
    /// Seeded 2-port with a peak slightly above 1 and noisy data.
    Shallow,
    /// Seeded 2-port of order 44 with 500 frequencies and 9 parameter values.
    Pcb,
    /// Seeded random model with the given peak.
    Random,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gain of `single-pole`, peak of `random`.
    #[arg(long, default_value_t = 2.0)]
    value: f64,
    #[arg(long, default_value_t = 2)]
    ports: usize,
    #[arg(long, default_value = "model.json")]
    model: PathBuf,
    /// Dataset manifest; the sample CSVs are written next to it.
    #[arg(long)]
    data: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Command::Fit(a) => cmd_fit(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Enforce(a) => cmd_enforce(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::Synth(a) => cmd_synth(&a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn split_for(kind: SplitKind, n: usize) -> FitSplit {
    match kind {
        SplitKind::Alternating if n > 1 => FitSplit::alternating(n),
        _ => FitSplit::all(n),
    }
}

fn load_model(path: &Path) -> Result<ParamModel> {
    ParamModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn ensure_stable(model: &ParamModel, allow: bool) -> Result<()> {
    if allow {
        return Ok(());
    }
    let st = stability_sweep(model, 101)?;
    if !st.stable {
        bail!(
            "model has an unstable pole {:+.3e}{:+.3e}j at theta = {} (use --allow-unstable to proceed)",
            st.worst_pole.0,
            st.worst_pole.1,
            st.worst_theta
        );
    }
    Ok(())
}

fn write_check(report: &ViolationReport, out: &ReportOut) -> Result<()> {
    let mut vpath = out.violations.clone();
    if vpath.extension().is_none() {
        vpath.set_extension(match out.format {
            Format::Csv => "csv",
            Format::Json => "json",
        });
    }
    export_report(report, &vpath, out.format.into())?;
    export_psi_csv(report, &out.psi)?;
    Ok(())
}

fn summarize(report: &ViolationReport) {
    println!(
        "samples: {}, passes: {}, converged: {}",
        report.samples.len(),
        report.passes_used,
        report.converged
    );
    match report.max_violation() {
        None => println!("passive: no violations"),
        Some(s) => {
            let lo = report.violations.iter().map(|v| v.theta).fold(f64::INFINITY, f64::min);
            let hi = report.violations.iter().map(|v| v.theta).fold(f64::NEG_INFINITY, f64::max);
            println!(
                "not passive: {} violations for theta in [{lo}, {hi}], max sigma {s:.9}",
                report.violations.len()
            );
        }
    }
}

fn cmd_fit(a: &FitArgs) -> Result<u8> {
    let data = load_dataset(&a.data)?;
    let kind = match a.basis {
        BasisArg::Chebyshev => BasisKind::Chebyshev,
        BasisArg::Monomial => BasisKind::Monomial,
        BasisArg::Trigonometric => BasisKind::Trigonometric,
    };
    let params = data.params();
    if params.len() < 2 {
        bail!("fitting needs at least two parameter values");
    }
    let pb = ParamBasis::new(kind, a.param_terms, params[0], params[params.len() - 1])?;
    let poles = default_poles(a.order, data.f_min(), data.f_max())?;
    let split = split_for(a.split, data.n_params());
    let cfg = GskConfig {
        max_iterations: a.gsk_iters,
        stop_tol: a.stop_tol,
        ..GskConfig::default()
    };
    let out = fit(&data, &split, &poles, pb, &cfg)?;
    export_gsk_log_csv(&out.log, &a.log)?;
    ensure_stable(&out.model, a.allow_unstable)?;
    out.model.save(&a.out)?;
    export_fit_report_csv(&out.model, &data, &split, &a.report)?;
    let worst = rms_error(&out.model, &data, split.fit(), RmsMode::Absolute)?.worst;
    println!(
        "fit: {} iterations (best {}), converged: {}, worst abs RMS on fit columns {worst:.3e}",
        out.log.len(),
        out.best_iteration,
        out.converged
    );
    if !out.converged {
        eprintln!("warning: GSK iteration did not meet the stopping tolerance; best iterate written");
    }
    Ok(0)
}

fn cmd_check(a: &CheckArgs) -> Result<u8> {
    let model = load_model(&a.model)?;
    ensure_stable(&model, a.check.allow_unstable)?;
    let report = adaptive_check(&model, &a.check.config())?;
    write_check(&report, &a.out)?;
    summarize(&report);
    Ok(if report.is_passive() { 0 } else { EXIT_VIOLATIONS })
}

fn cmd_enforce(a: &EnforceArgs) -> Result<u8> {
    let model = load_model(&a.model)?;
    let data = load_dataset(&a.data)?;
    ensure_stable(&model, a.check.allow_unstable)?;
    let cfg = EnforceConfig {
        margin: a.margin,
        max_iterations: a.max_iters,
        qp: QpConfig {
            feas_tol: a.feas_tol,
            gap_tol: a.gap_tol,
            max_ip_iters: a.max_ip_iters,
            ..QpConfig::default()
        },
        ..EnforceConfig::default()
    };
    let out = enforce(&model, &data, &split_for(a.split, data.n_params()), &a.check.config(), &cfg)?;
    out.model.save(&a.out)?;
    export_enforce_log_csv(&out.log, &a.log)?;
    write_check(&out.final_report, &a.report)?;
    println!("enforce: {} perturbation steps", out.iterations);
    summarize(&out.final_report);
    if out.converged {
        Ok(0)
    } else {
        eprintln!("warning: violations remain after {} iterations; last iterate written", out.iterations);
        Ok(EXIT_VIOLATIONS)
    }
}

fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("range '{spec}' is not start:stop:count");
    }
    let a: f64 = parts[0].parse().with_context(|| format!("bad range start in '{spec}'"))?;
    let b: f64 = parts[1].parse().with_context(|| format!("bad range stop in '{spec}'"))?;
    let n: usize = parts[2].parse().with_context(|| format!("bad range count in '{spec}'"))?;
    Ok(match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    })
}

fn cmd_eval(a: &EvalArgs) -> Result<u8> {
    let model = load_model(&a.model)?;
    let mut freqs = a.freqs.clone();
    if let Some(r) = &a.freq_range {
        freqs.extend(parse_range(r)?);
    }
    let mut thetas = a.thetas.clone();
    if let Some(r) = &a.theta_range {
        thetas.extend(parse_range(r)?);
    }
    if thetas.is_empty() || (freqs.is_empty() && !a.infinity) {
        bail!("empty evaluation grid");
    }
    let outside = thetas.iter().filter(|t| !model.param_basis().contains(**t)).count();
    if outside > 0 {
        eprintln!("warning: {outside} parameter values lie outside the model domain");
    }
    export_eval_csv(&model, &freqs, &thetas, a.infinity, &a.out)?;
    Ok(0)
}

fn cmd_validate(a: &ValidateArgs) -> Result<u8> {
    let model = load_model(&a.model)?;
    let o = &a.oracle;
    let oracle = dense_sweep(&model, o.oracle_nf, o.oracle_ntheta, o.f_max_mult)?;
    ensure_stable(&model, a.check.allow_unstable)?;
    let report = adaptive_check(&model, &a.check.config())?;
    let n_cross: usize = oracle.columns.iter().map(|c| c.crossings.len()).sum();
    println!(
        "oracle: {} ({}x{} grid, max sigma {:.9} at theta = {}, omega = {:.6e} rad/s, {n_cross} unit crossings)",
        if oracle.pass { "PASS" } else { "FAIL" },
        o.oracle_nf,
        o.oracle_ntheta,
        oracle.max_sigma,
        oracle.argmax_theta,
        oracle.argmax_omega * model.omega_ref()
    );
    println!(
        "check:  {} ({} samples, {} violations)",
        if report.is_passive() { "PASS" } else { "FAIL" },
        report.samples.len(),
        report.violations.len()
    );
    let agree = oracle.pass == report.is_passive();
    if agree {
        println!("verdict: {}", if oracle.pass { "passive" } else { "not passive" });
    } else {
        println!("verdict: inconclusive, the oracle and the check disagree");
    }
    Ok(if oracle.pass && report.is_passive() { 0 } else { EXIT_VIOLATIONS })
}

fn cmd_synth(a: &SynthArgs) -> Result<u8> {
    let default_grid = |m: &ParamModel| -> SampledDataset {
        let pb = m.param_basis();
        let f_max = m.freq_scale_hz() * m.poles().max_magnitude().max(1.0) * 2.0;
        let freqs: Vec<f64> = (0..=100).map(|k| f_max * k as f64 / 100.0).collect();
        let thetas: Vec<f64> = (0..9)
            .map(|k| pb.theta_min() + (pb.theta_max() - pb.theta_min()) * k as f64 / 8.0)
            .collect();
        fixtures::dataset_from_model(m, &freqs, &thetas)
    };
    let (model, data) = match a.kind {
        SynthKind::SinglePole => {
            let m = fixtures::single_pole(a.value);
            let d = default_grid(&m);
            (m, d)
        }
        SynthKind::Linear => {
            let m = fixtures::linear_in_theta();
            let d = default_grid(&m);
            (m, d)
        }
        SynthKind::Shallow => {
            let f = fixtures::shallow_two_port(a.seed);
            (f.model, f.data)
        }
        SynthKind::Pcb => fixtures::pcb_scale(a.seed),
        SynthKind::Random => {
            let m = fixtures::random_model(a.seed, a.ports, 1, 2, 2, a.value);
            let d = default_grid(&m);
            (m, d)
        }
    };
    model.save(&a.model)?;
    if let Some(p) = &a.data {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        data.save(p)?;
    }
    Ok(0)
}
