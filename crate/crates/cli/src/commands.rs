//! One function per subcommand.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ptrs_core::autocorr::{empirical_autocorr, AutocorrEstimate};
use ptrs_core::cost::{cost_vs_spacing, evaluate, per_position_cost, CostMethod, CostReport};
use ptrs_core::model::{default_fit_range, fit, ExpModel};
use ptrs_core::pattern::{FirstPilot, PilotPattern};
use ptrs_core::planner::{
    fc_warning, fit_affine, plan, refine_exact, LinearCostFit, OmegaEtaModel, PlanRequest,
};
use ptrs_core::sim::{self, PhysicalSource, SimMode, SimResult, SimScenario};
use ptrs_core::synth::{synthesize_batch, PhaseNoiseTrace, DEFAULT_FS_HZ};
use ptrs_core::wiener::{coefficients_closed, coefficients_numeric, WienerCoefficients};
use ptrs_core::{io, reference, Error};
use serde::{Deserialize, Serialize};

use crate::args::{
    first_pilot, lag_window, load_psd, range, ModelArgs, PatternArgs, Range, SourceArgs,
    DEFAULT_CARRIER_HZ,
};
use crate::output::{print_json, Run};
use crate::{resolve_seed, Cli, CliError, Command, DEFAULT_SEED};

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth(a) => synth(cli, a),
        Command::Autocorr(a) => autocorr(cli, a),
        Command::Fit(a) => fit_model(cli, a),
        Command::Coeffs(a) => coeffs(cli, a),
        Command::Cost(a) => cost(cli, a),
        Command::SweepDelta(a) => sweep_delta(cli, a),
        Command::SweepFc(a) => sweep_fc(cli, a),
        Command::SweepAb(a) => sweep_ab(cli, a),
        Command::FitAffine(a) => fit_affine_cmd(cli, a),
        Command::Plan(a) => plan_cmd(cli, a),
        Command::Simulate(a) => simulate(cli, a),
    }
}

fn run(cli: &Cli, name: &'static str) -> Result<Run, CliError> {
    Run::new(cli.out_dir.clone(), name, cli)
}

fn cost_method(s: &str) -> Result<CostMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn sim_mode(s: &str) -> Result<SimMode, String> {
    match s {
        "surrogate" => Ok(SimMode::Surrogate),
        "physical" => Ok(SimMode::Physical),
        _ => Err(format!("unknown mode '{s}' (surrogate, physical)")),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    Ok(BufReader::new(File::open(path).map_err(Error::from)?))
}

fn first_line(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(Error::from)?;
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .unwrap_or(bytes.len());
    Ok(String::from_utf8_lossy(&bytes[..end]).trim().to_string())
}

/// Binary trace file, or a single-trace CSV when the extension is `.csv`.
fn load_traces(path: &Path, fs_hz: f64) -> Result<Vec<PhaseNoiseTrace>, CliError> {
    if path.extension().is_some_and(|e| e == "csv") {
        Ok(vec![io::read_trace_csv(open(path)?, fs_hz)?])
    } else {
        Ok(io::read_traces_bin(path)?)
    }
}

fn synthesize(
    source: &SourceArgs,
    count: usize,
    seed: u64,
    run: &mut Run,
) -> Result<Vec<PhaseNoiseTrace>, CliError> {
    if count == 0 {
        return Err(CliError::Usage("--traces must be at least 1".into()));
    }
    let psd = source.psd()?;
    run.resolve("psd", &psd)?;
    run.resolve("carrier_hz", &source.carrier())?;
    Ok(synthesize_batch(
        &psd,
        source.carrier(),
        source.fs,
        source.n,
        count,
        seed,
    )?)
}

fn estimate(
    traces: &[PhaseNoiseTrace],
    max_lag: Option<usize>,
) -> Result<AutocorrEstimate, CliError> {
    let shortest = traces.iter().map(PhaseNoiseTrace::len).min().unwrap_or(0);
    Ok(empirical_autocorr(traces, max_lag.unwrap_or(shortest / 4))?)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Number of independent traces.
    #[arg(long, default_value_t = 1)]
    pub traces: usize,
    /// Also export the first trace as `trace.csv`.
    #[arg(long)]
    pub csv: bool,
}

fn synth(cli: &Cli, a: &SynthArgs) -> Result<(), CliError> {
    let mut run = run(cli, "synth")?;
    let (seed, origin) = resolve_seed(cli.seed, DEFAULT_SEED)?;
    run.resolve("seed", &seed)?;
    run.resolve("seed_source", &origin)?;
    let traces = synthesize(&a.source, a.traces, seed, &mut run)?;
    let mut w = run.create("traces.bin")?;
    for t in &traces {
        io::write_trace_bin(&mut w, t)?;
    }
    w.flush().map_err(Error::from)?;
    if a.csv {
        io::write_trace_csv(run.create("trace.csv")?, &traces[0])?;
    }
    run.finish()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AutocorrArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Traces to synthesize when no input file is given.
    #[arg(long, default_value_t = 400)]
    pub traces: usize,
    /// Trace file from `synth` (`.bin`, or `.csv` at sampling rate --fs).
    #[arg(long)]
    pub from_file: Option<PathBuf>,
    /// Largest lag; defaults to a quarter of the trace length.
    #[arg(long)]
    pub max_lag: Option<usize>,
}

fn autocorr(cli: &Cli, a: &AutocorrArgs) -> Result<(), CliError> {
    let mut run = run(cli, "autocorr")?;
    let traces = match &a.from_file {
        Some(path) => load_traces(path, a.source.fs)?,
        None => {
            let (seed, origin) = resolve_seed(cli.seed, DEFAULT_SEED)?;
            run.resolve("seed", &seed)?;
            run.resolve("seed_source", &origin)?;
            synthesize(&a.source, a.traces, seed, &mut run)?
        }
    };
    let est = estimate(&traces, a.max_lag)?;
    run.resolve("realizations", &est.n_realizations)?;
    run.resolve("max_imag", &est.max_imag)?;
    io::write_autocorr_csv(run.create("autocorr.csv")?, &est)?;
    run.finish()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Traces to synthesize when no input file is given.
    #[arg(long, default_value_t = 400)]
    pub traces: usize,
    /// Autocorrelation CSV from `autocorr`, or a trace file from `synth`.
    #[arg(long)]
    pub from_file: Option<PathBuf>,
    /// Fit window `lo:hi` in lags.
    #[arg(long, value_parser = lag_window)]
    pub lags: Option<(usize, usize)>,
}

fn fit_model(cli: &Cli, a: &FitArgs) -> Result<(), CliError> {
    let mut run = run(cli, "fit")?;
    let (est, default_window, carrier) = match &a.from_file {
        Some(path) if first_line(path)?.starts_with("lag,") => {
            let est = io::read_autocorr_csv(open(path)?)?;
            let window = (0, est.max_lag);
            (est, window, a.source.fc)
        }
        Some(path) => {
            let traces = load_traces(path, a.source.fs)?;
            let n = traces.iter().map(PhaseNoiseTrace::len).min().unwrap_or(0);
            (estimate(&traces, None)?, default_fit_range(n), a.source.fc)
        }
        None => {
            let (seed, origin) = resolve_seed(cli.seed, DEFAULT_SEED)?;
            run.resolve("seed", &seed)?;
            run.resolve("seed_source", &origin)?;
            let traces = synthesize(&a.source, a.traces, seed, &mut run)?;
            (
                estimate(&traces, None)?,
                default_fit_range(a.source.n),
                Some(a.source.carrier()),
            )
        }
    };
    let window = a.lags.unwrap_or(default_window);
    run.resolve("lags", &window)?;
    let mut model = fit(&est, window)?;
    if let Some(fc) = carrier {
        model = model.with_carrier(fc);
    }
    if model.is_poor_fit() {
        eprintln!("warning: poor fit, mse = {:.3e}", model.fit_mse);
    }
    run.write_json("model.json", &model)?;
    print_json(&model)?;
    run.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffMethod {
    Closed,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffFormat {
    Csv,
    Bin,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CoeffsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub pattern: PatternArgs,
    #[arg(long, value_enum, default_value = "closed")]
    pub method: CoeffMethod,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: CoeffFormat,
    /// Existing coefficient file to compare against and convert.
    #[arg(long)]
    pub from_file: Option<PathBuf>,
}

#[derive(Serialize)]
struct CoeffsSummary {
    n_total: usize,
    n_pilots: usize,
    method: CoeffMethod,
    fallback: bool,
    output: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_abs_diff_vs_input: Option<f64>,
}

fn coeffs(cli: &Cli, a: &CoeffsArgs) -> Result<(), CliError> {
    let mut run = run(cli, "coeffs")?;
    let model = a.model.resolve()?;
    let pattern = a.pattern.resolve()?;
    run.resolve("model", &model)?;
    run.resolve("pattern", &pattern)?;
    let (computed, method, fallback) = match a.method {
        CoeffMethod::Numeric => (
            coefficients_numeric(&model, &pattern)?,
            CoeffMethod::Numeric,
            false,
        ),
        CoeffMethod::Closed => match coefficients_closed(&model, &pattern) {
            Err(Error::FallbackToNumeric { .. }) => (
                coefficients_numeric(&model, &pattern)?,
                CoeffMethod::Numeric,
                true,
            ),
            r => (r?, CoeffMethod::Closed, false),
        },
    };
    let (out, diff) = match &a.from_file {
        Some(path) => {
            let weights = if path.extension().is_some_and(|e| e == "csv") {
                io::read_coeffs_csv(open(path)?, pattern.n_total, pattern.n_pilots)?
            } else {
                io::read_coeffs_bin(open(path)?)?
            };
            if weights.shape() != computed.weights.shape() {
                return Err(Error::Domain(format!(
                    "{} holds a {:?} matrix, pattern needs {:?}",
                    path.display(),
                    weights.shape(),
                    computed.weights.shape()
                ))
                .into());
            }
            let diff = (&weights - &computed.weights).amax();
            (
                WienerCoefficients {
                    weights,
                    pattern,
                    model,
                },
                Some(diff),
            )
        }
        None => (computed, None),
    };
    let name = match a.format {
        CoeffFormat::Csv => "coeffs.csv",
        CoeffFormat::Bin => "coeffs.bin",
    };
    let w = run.create(name)?;
    match a.format {
        CoeffFormat::Csv => io::write_coeffs_csv(w, &out)?,
        CoeffFormat::Bin => io::write_coeffs_bin(w, &out)?,
    }
    print_json(&CoeffsSummary {
        n_total: pattern.n_total,
        n_pilots: pattern.n_pilots,
        method,
        fallback,
        output: name.into(),
        max_abs_diff_vs_input: diff,
    })?;
    run.finish()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CostArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub pattern: PatternArgs,
    /// numeric, boxed or quasipoly. Closed forms fall back to numeric below 3 pilots.
    #[arg(long, default_value = "boxed", value_parser = cost_method)]
    pub method: CostMethod,
    /// Also write the per-position cost J_n to `jn.csv`.
    #[arg(long)]
    pub dump_jn: bool,
    /// `cost.json` from an earlier run; its model and pattern are reused.
    #[arg(long)]
    pub from_file: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct CostRecord {
    model: ExpModel,
    pattern: PilotPattern,
    #[serde(flatten)]
    report: CostReport,
}

#[derive(Deserialize)]
struct CostInput {
    model: ExpModel,
    pattern: PilotPattern,
}

fn cost(cli: &Cli, a: &CostArgs) -> Result<(), CliError> {
    let mut run = run(cli, "cost")?;
    let (model, pattern) = match &a.from_file {
        Some(path) => {
            let input: CostInput = io::read_json(path)?;
            let p = input.pattern;
            (
                input.model.validated()?,
                PilotPattern::new(p.n_total, p.p1, p.delta, p.n_pilots)?,
            )
        }
        None => (a.model.resolve()?, a.pattern.resolve()?),
    };
    let report = evaluate(&model, &pattern, a.method)?;
    if report.fallback {
        eprintln!(
            "note: {} pilots; {} replaced by the numeric path",
            pattern.n_pilots, a.method
        );
    }
    if a.dump_jn {
        let jn = per_position_cost(&model, &pattern)?;
        let mut w = run.create("jn.csv")?;
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "n,j_n")?;
            for (i, v) in jn.iter().enumerate() {
                writeln!(w, "{},{v}", i + 1)?;
            }
            w.flush()
        };
        write().map_err(Error::from)?;
    }
    let record = CostRecord {
        model,
        pattern,
        report,
    };
    run.write_json("cost.json", &record)?;
    print_json(&record)?;
    run.finish()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepDeltaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    #[arg(long, default_value = "1", value_parser = first_pilot)]
    pub p1: FirstPilot,
    /// Spacings as `lo:hi:step` or a comma list.
    #[arg(long, default_value = "1:109:12", value_parser = range)]
    pub deltas: Range,
    #[arg(long, default_value = "boxed", value_parser = cost_method)]
    pub method: CostMethod,
}

fn warn_failed(rows: &[ptrs_core::cost::SweepRow]) {
    for r in rows {
        if let Some(e) = &r.error {
            eprintln!("warning: delta = {}: {e}", r.delta);
        }
    }
}

fn sweep_delta(cli: &Cli, a: &SweepDeltaArgs) -> Result<(), CliError> {
    let mut run = run(cli, "sweep-delta")?;
    let model = a.model.resolve()?;
    run.resolve("model", &model)?;
    let rows = cost_vs_spacing(&model, a.n, a.p1, &a.deltas.spacings()?, a.method);
    warn_failed(&rows);
    io::write_sweep_csv(run.create("sweep_delta.csv")?, &rows)?;
    run.finish()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepFcArgs {
    /// Carrier frequencies in Hz, served by the built-in reference models.
    #[arg(long, default_value = "100e9:300e9:25e9", value_parser = range)]
    pub fc: Range,
    /// Model files (each with fc_hz) to use instead of the reference models.
    #[arg(long)]
    pub model: Vec<PathBuf>,
    #[arg(long, default_value = "20,50,100", value_parser = range)]
    pub deltas: Range,
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    #[arg(long, default_value = "1", value_parser = first_pilot)]
    pub p1: FirstPilot,
    #[arg(long, default_value = "boxed", value_parser = cost_method)]
    pub method: CostMethod,
}

fn sweep_fc(cli: &Cli, a: &SweepFcArgs) -> Result<(), CliError> {
    let mut run = run(cli, "sweep-fc")?;
    let models: Vec<(f64, ExpModel)> = if a.model.is_empty() {
        a.fc.0
            .iter()
            .map(|&fc| Ok((fc, reference::model_at(fc)?)))
            .collect::<Result<_, CliError>>()?
    } else {
        a.model
            .iter()
            .map(|path| {
                let m: ExpModel = io::read_json(path)?;
                let fc = m.fc_hz.ok_or_else(|| {
                    CliError::Usage(format!(
                        "{} has no fc_hz; sweep-fc needs it",
                        path.display()
                    ))
                })?;
                Ok((fc, m.validated()?))
            })
            .collect::<Result<_, CliError>>()?
    };
    run.resolve("models", &models)?;
    let deltas = a.deltas.spacings()?;
    let series: Vec<_> = models
        .iter()
        .map(|(fc, m)| (*fc, cost_vs_spacing(m, a.n, a.p1, &deltas, a.method)))
        .collect();
    for (_, rows) in &series {
        warn_failed(rows);
    }
    io::write_fc_sweep_csv(run.create("sweep_fc.csv")?, &series)?;
    run.finish()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepAbArgs {
    /// Decay rates.
    #[arg(long, default_value = "0.007:0.008:0.0001", value_parser = range)]
    pub a: Range,
    /// Correlation floors.
    #[arg(long, default_value = "0.8:0.99:0.01", value_parser = range)]
    pub b: Range,
    #[arg(long, default_value_t = 50)]
    pub delta: usize,
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    #[arg(long, default_value = "1", value_parser = first_pilot)]
    pub p1: FirstPilot,
    #[arg(long, default_value = "boxed", value_parser = cost_method)]
    pub method: CostMethod,
    /// Grid CSV whose (a, b) pairs are re-evaluated instead of --a x --b.
    #[arg(long)]
    pub from_file: Option<PathBuf>,
}

fn sweep_ab(cli: &Cli, a: &SweepAbArgs) -> Result<(), CliError> {
    let mut run = run(cli, "sweep-ab")?;
    let pairs: Vec<(f64, f64)> = match &a.from_file {
        Some(path) => io::read_ab_grid_csv(open(path)?)?
            .into_iter()
            .map(|(x, y, _)| (x, y))
            .collect(),
        None => {
            a.a.0
                .iter()
                .flat_map(|&x| a.b.0.iter().map(move |&y| (x, y)))
                .collect()
        }
    };
    let pattern = PilotPattern::uniform(a.n, a.p1.resolve(a.delta), a.delta)?;
    run.resolve("pattern", &pattern)?;
    let grid: Vec<(f64, f64, f64)> = pairs
        .iter()
        .map(|&(x, y)| {
            let j = ExpModel::new(x, y).and_then(|m| evaluate(&m, &pattern, a.method));
            match j {
                Ok(r) => (x, y, r.j_pct),
                Err(e) => {
                    eprintln!("warning: a = {x}, b = {y}: {e}");
                    (x, y, f64::NAN)
                }
            }
        })
        .collect();
    io::write_ab_grid_csv(run.create("sweep_ab.csv")?, &grid)?;
    run.finish()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitAffineArgs {
    /// Sweep CSV from sweep-delta or sweep-fc, or a table from fit-affine.
    #[arg(long)]
    pub from_file: Option<PathBuf>,
    /// Carrier frequencies (default 100e9:300e9:25e9). With a sweep-delta
    /// file, a single value labels the series.
    #[arg(long, value_parser = range)]
    pub fc: Option<Range>,
    #[arg(long, default_value = "1:109:12", value_parser = range)]
    pub deltas: Range,
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    #[arg(long, default_value = "1", value_parser = first_pilot)]
    pub p1: FirstPilot,
    #[arg(long, default_value = "boxed", value_parser = cost_method)]
    pub method: CostMethod,
}

#[derive(Serialize)]
struct FitEntry {
    fc_hz: f64,
    #[serde(flatten)]
    fit: LinearCostFit,
}

/// Readable by `plan --coefs`.
#[derive(Serialize)]
struct AffineSummary {
    #[serde(flatten)]
    coefs: OmegaEtaModel,
    fits: Vec<FitEntry>,
}

fn group_by_fc(rows: &[(f64, f64, f64)]) -> Vec<(f64, Vec<(f64, f64)>)> {
    let mut groups: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for &(fc, d, j) in rows {
        match groups.iter_mut().find(|g| g.0 == fc) {
            Some(g) => g.1.push((d, j)),
            None => groups.push((fc, vec![(d, j)])),
        }
    }
    groups
}

fn fit_affine_cmd(cli: &Cli, a: &FitAffineArgs) -> Result<(), CliError> {
    let mut run = run(cli, "fit-affine")?;
    let series: Vec<(f64, Vec<(f64, f64)>)> = match &a.from_file {
        Some(path) => {
            let header = first_line(path)?;
            if header.split(',').any(|h| h == "omega") {
                let samples = io::read_affine_csv(open(path)?)?;
                let coefs = OmegaEtaModel::refit(&samples)?;
                let summary = AffineSummary {
                    coefs,
                    fits: Vec::new(),
                };
                run.write_json("omega_eta.json", &summary)?;
                print_json(&summary)?;
                return run.finish();
            }
            if header.split(',').any(|h| h == "fc_hz") {
                group_by_fc(&io::read_fc_sweep_csv(open(path)?)?)
            } else {
                let label = match &a.fc {
                    Some(Range(v)) if v.len() == 1 => v[0],
                    Some(_) => {
                        return Err(CliError::Usage(
                            "a single-series sweep takes one --fc label".into(),
                        ))
                    }
                    None => f64::NAN,
                };
                vec![(label, io::read_sweep_csv(open(path)?)?)]
            }
        }
        None => {
            let fcs = a.fc.clone().unwrap_or(Range(vec![
                100e9, 125e9, 150e9, 175e9, 200e9, 225e9, 250e9, 275e9, 300e9,
            ]));
            let deltas = a.deltas.spacings()?;
            fcs.0
                .iter()
                .map(|&fc| {
                    let m = reference::model_at(fc)?;
                    let rows = cost_vs_spacing(&m, a.n, a.p1, &deltas, a.method);
                    warn_failed(&rows);
                    let points = rows
                        .iter()
                        .filter(|r| r.j_pct.is_finite())
                        .map(|r| (r.delta as f64, r.j_pct))
                        .collect();
                    Ok((fc, points))
                })
                .collect::<Result<_, CliError>>()?
        }
    };
    let fits: Vec<(f64, LinearCostFit)> = series
        .iter()
        .map(|(fc, points)| Ok((*fc, fit_affine(points)?)))
        .collect::<Result<_, CliError>>()?;
    io::write_affine_csv(run.create("fit_affine.csv")?, &fits)?;
    let samples: Vec<(f64, f64, f64)> = fits
        .iter()
        .filter(|(fc, _)| fc.is_finite())
        .map(|(fc, f)| (*fc, f.omega, f.eta))
        .collect();
    let entries = fits
        .into_iter()
        .map(|(fc_hz, fit)| FitEntry { fc_hz, fit })
        .collect();
    if samples.is_empty() {
        print_json(&serde_json::json!({ "fits": entries }))?;
    } else {
        let summary = AffineSummary {
            coefs: OmegaEtaModel::refit(&samples)?,
            fits: entries,
        };
        run.write_json("omega_eta.json", &summary)?;
        print_json(&summary)?;
    }
    run.finish()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlanArgs {
    /// Carrier frequency in Hz.
    #[arg(long, required_unless_present = "from_file")]
    pub fc: Option<f64>,
    /// Samples per symbol [default: 4096].
    #[arg(long)]
    pub n: Option<usize>,
    /// Cost ceiling in % of N.
    #[arg(long, required_unless_present = "from_file")]
    pub max_cost: Option<f64>,
    /// Minimum spacing allowed by the overhead budget.
    #[arg(long, required_unless_present = "from_file")]
    pub delta0: Option<usize>,
    /// omega/eta coefficients JSON from fit-affine.
    #[arg(long)]
    pub coefs: Option<PathBuf>,
    /// Lower the affine spacing until the closed-form cost meets the ceiling.
    #[arg(long)]
    pub exact_refine: bool,
    /// Model for --exact-refine; defaults to the reference model at --fc.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "1", value_parser = first_pilot)]
    pub p1: FirstPilot,
    /// `plan.json` from an earlier run; its request fields are reused.
    #[arg(long, conflicts_with_all = ["fc", "max_cost", "delta0", "n"])]
    pub from_file: Option<PathBuf>,
}

fn plan_cmd(cli: &Cli, a: &PlanArgs) -> Result<(), CliError> {
    let mut run = run(cli, "plan")?;
    let request = match &a.from_file {
        Some(path) => io::read_json::<PlanRequest>(path)?,
        None => PlanRequest {
            fc_hz: a.fc.expect("required by clap"),
            n_total: a.n.unwrap_or(4096),
            max_cost_pct: a.max_cost.expect("required by clap"),
            delta0: a.delta0.expect("required by clap"),
        },
    };
    if let Some(w) = fc_warning(request.fc_hz) {
        eprintln!("warning: {w}");
    }
    let coefs = match &a.coefs {
        Some(path) => io::read_json(path)?,
        None => OmegaEtaModel::default(),
    };
    run.resolve("request", &request)?;
    run.resolve("coefs", &coefs)?;
    let mut result = plan(&request, &coefs)?;
    if a.exact_refine {
        let model = match &a.model {
            Some(path) => io::read_json::<ExpModel>(path)?.validated()?,
            None => reference::model_at(request.fc_hz)?,
        };
        run.resolve("model", &model)?;
        result = refine_exact(&result, &model, a.p1)?;
    }
    run.write_json("plan.json", &result)?;
    print_json(&result)?;
    run.finish()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub pattern: PatternArgs,
    /// surrogate (noise drawn from the model) or physical (from a PSD).
    #[arg(long, default_value = "surrogate", value_parser = sim_mode)]
    pub mode: SimMode,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// SNR on data symbols in dB; pilots stay noiseless.
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// PSD JSON for physical mode; defaults to the built-in profile.
    #[arg(long)]
    pub psd: Option<PathBuf>,
    /// Sampling rate for physical mode, Hz.
    #[arg(long, default_value_t = DEFAULT_FS_HZ)]
    pub fs: f64,
    /// `sim.json` from an earlier run; its scenario is rerun.
    #[arg(long)]
    pub from_file: Option<PathBuf>,
}

#[derive(Serialize)]
struct SimRecord<'a> {
    #[serde(flatten)]
    result: &'a SimResult,
    scenario: &'a SimScenario,
}

#[derive(Deserialize)]
struct SimInput {
    scenario: SimScenario,
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<(), CliError> {
    let mut run = run(cli, "simulate")?;
    let mut scenario = match &a.from_file {
        Some(path) => {
            let mut s = io::read_json::<SimInput>(path)?.scenario;
            s.model = s.model.validated()?;
            let p = s.pattern;
            s.pattern = PilotPattern::new(p.n_total, p.p1, p.delta, p.n_pilots)?;
            s
        }
        None => {
            let model = a.model.resolve()?;
            let physical = match a.mode {
                SimMode::Surrogate => None,
                SimMode::Physical => Some(PhysicalSource {
                    psd: load_psd(a.psd.as_deref())?,
                    carrier_hz: model.fc_hz.unwrap_or(DEFAULT_CARRIER_HZ),
                    fs_hz: a.fs,
                }),
            };
            SimScenario {
                pattern: a.pattern.resolve()?,
                model,
                mode: a.mode,
                physical,
                trials: a.trials,
                seed: DEFAULT_SEED,
                snr_db: a.snr_db,
            }
        }
    };
    let (seed, origin) = resolve_seed(cli.seed, scenario.seed)?;
    scenario.seed = seed;
    run.resolve("seed_source", &origin)?;
    run.resolve("scenario", &scenario)?;
    let result = sim::run(&scenario)?;
    let record = SimRecord {
        result: &result,
        scenario: &scenario,
    };
    run.write_json("sim.json", &record)?;
    print_json(&record)?;
    run.finish()
}
