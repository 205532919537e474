//! Subcommands of the `pairstate` binary.

pub mod selftest;
pub mod table;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use pairstate::config::{Estimator, ExperimentConfig, OutputFormat};
use pairstate::estimate::{self, LiMethod, OptimizerConfig};
use pairstate::plausible::{self, PlausibilityRequest};
use pairstate::povm::{self, PovmKind};
use pairstate::recon::Decomposition;
use pairstate::sim::{self, CountVector, RunOptions};
use serde::Serialize;

pub use table::{read_rows, write_rows, ResultRow};

/// Usage errors exit with 2, runtime failures with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) => write!(f, "error: {e:#}"),
            CliError::Runtime(e) => write!(f, "runtime failure: {e:#}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn usage<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Usage(e.into())
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Runtime(e.into())
}

/// Library errors caused by bad input are usage errors.
fn classify(e: pairstate::Error) -> CliError {
    use pairstate::Error as E;
    match e {
        E::Config(_) | E::ArityMismatch { .. } | E::EmptyData | E::Domain(_) => usage(e),
        other => runtime(other),
    }
}

#[derive(Debug, Clone, Default)]
pub struct CommonOptions {
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub seed: Option<u64>,
    pub verbose: bool,
}

pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(usage)?;
    let config: ExperimentConfig = toml::from_str(&text).map_err(|e| usage(anyhow!("{}: {e}", path.display())))?;
    Ok(config)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    rng: &'static str,
    master_seed: u64,
    config: &'a ExperimentConfig,
    outputs: Vec<String>,
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display())).map_err(runtime)
}

fn extension(format: OutputFormat) -> &'static str {
    match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimulateOptions {
    pub timings: bool,
    pub write_counts: bool,
}

pub fn cmd_simulate(config_path: &Path, common: &CommonOptions, sim_opts: SimulateOptions) -> CliResult<PathBuf> {
    let mut config = load_config(config_path)?;
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    config.validate().map_err(|e| usage(anyhow!("{}: {e}", config_path.display())))?;
    let format = common.format.unwrap_or(config.output.format);
    let out = common
        .out
        .clone()
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display())).map_err(runtime)?;

    if common.verbose {
        eprintln!(
            "simulate: {} povm, {} runs, N up to {}, estimators {:?}",
            config.povm,
            config.runs,
            config.n_schedule.last().unwrap_or(&0),
            config.estimators.iter().map(|e| e.name()).collect::<Vec<_>>()
        );
    }
    let records = sim::run_experiment_with(&config, &RunOptions { timings: sim_opts.timings }).map_err(runtime)?;

    let results_name = format!("results.{}", extension(format));
    let mut buf = Vec::new();
    write_rows(&table::rows(&records), format, &mut buf).map_err(runtime)?;
    write_file(&out.join(&results_name), &buf)?;
    let mut outputs = vec![results_name];

    if sim_opts.write_counts {
        let dir = out.join("counts");
        fs::create_dir_all(&dir).map_err(runtime)?;
        for rec in &records {
            for cp in &rec.checkpoints {
                let name = format!("run{}_N{}.csv", rec.run, cp.n_total);
                let mut buf = Vec::new();
                write_counts(&cp.counts, config.povm, &mut buf).map_err(runtime)?;
                write_file(&dir.join(&name), &buf)?;
                outputs.push(format!("counts/{name}"));
            }
        }
    }

    let manifest = Manifest {
        tool: "pairstate",
        version: env!("CARGO_PKG_VERSION"),
        command: "simulate",
        rng: sim::RNG_ALGORITHM,
        master_seed: config.master_seed,
        config: &config,
        outputs,
    };
    let mut text = serde_json::to_vec_pretty(&manifest).map_err(runtime)?;
    text.push(b'\n');
    write_file(&out.join("manifest.json"), &text)?;
    if common.verbose {
        eprintln!("simulate: wrote {}", out.display());
    }
    Ok(out)
}

/// Counts file: header `outcome,count`, one row per outcome in the
/// documented order.
pub fn write_counts<W: Write>(counts: &CountVector, povm: PovmKind, w: W) -> anyhow::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["outcome", "count"])?;
    for (label, c) in povm.labels().iter().zip(counts.counts()) {
        wtr.write_record([label.to_string(), c.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_counts(path: &Path, povm: PovmKind) -> CliResult<CountVector> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display())).map_err(usage)?;
    let headers = rdr.headers().map_err(usage)?.clone();
    if headers.len() != 2 || &headers[0] != "outcome" || &headers[1] != "count" {
        return Err(usage(anyhow!("{}: header must be `outcome,count`", path.display())));
    }
    let mut counts = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(usage)?;
        let line = i + 2;
        let value: u64 = rec[1]
            .trim()
            .parse()
            .map_err(|e| usage(anyhow!("{}: line {line}: count `{}`: {e}", path.display(), &rec[1])))?;
        if let Some(expected) = povm.labels().get(i) {
            if rec[0].trim() != *expected {
                return Err(usage(anyhow!("{}: line {line}: outcome `{}` where `{expected}` was expected", path.display(), &rec[0])));
            }
        }
        counts.push(value);
    }
    let counts = CountVector::new(counts);
    povm.check_arity(&counts).map_err(|e| usage(anyhow!("{}: {e}", path.display())))?;
    Ok(counts)
}

#[derive(Debug, Serialize)]
struct StateReport {
    theta: f64,
    phi: f64,
    bloch: [f64; 3],
    probability: f64,
}

#[derive(Debug, Serialize)]
struct EstimateReport {
    estimator: Estimator,
    states: Vec<StateReport>,
    degenerate: bool,
    clamped: bool,
    ill_conditioned: bool,
    objective: Option<f64>,
    converged: Option<bool>,
}

#[derive(Debug, Serialize)]
struct LiDiagnostics {
    /// SIC: eigenvalues of the triplet matrix. Tetrahedron: of the 4×4 matrix.
    eigenvalues: Vec<f64>,
    positive: bool,
    singlet_weight: Option<f64>,
}

#[derive(Debug, Serialize)]
struct EstimateOutput {
    povm: PovmKind,
    n_total: u64,
    linear_inversion: LiDiagnostics,
    estimates: Vec<EstimateReport>,
}

fn state_reports(d: &Decomposition) -> Vec<StateReport> {
    let mut v = vec![(d.state0, d.p0)];
    if !d.degenerate {
        v.push((d.state1, d.p1));
    }
    v.into_iter()
        .map(|(s, p)| StateReport { theta: s.theta(), phi: s.phi(), bloch: s.bloch().to_array(), probability: p })
        .collect()
}

fn emit(common: &CommonOptions, name: &str, json: &impl Serialize, csv_rows: Option<Vec<Vec<String>>>) -> CliResult<()> {
    let format = common.format.unwrap_or(OutputFormat::Json);
    let mut buf = Vec::new();
    match (format, csv_rows) {
        (OutputFormat::Csv, Some(rows)) => {
            let mut wtr = csv::Writer::from_writer(&mut buf);
            for r in rows {
                wtr.write_record(r).map_err(runtime)?;
            }
            wtr.flush().map_err(runtime)?;
        }
        (OutputFormat::Csv, None) => return Err(usage(anyhow!("csv output is not available for this command"))),
        (OutputFormat::Json, _) => {
            buf = serde_json::to_vec_pretty(json).map_err(runtime)?;
            buf.push(b'\n');
        }
    }
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(runtime)?;
            write_file(&dir.join(format!("{name}.{}", extension(format))), &buf)
        }
        None => std::io::stdout().write_all(&buf).map_err(runtime),
    }
}

pub fn cmd_estimate(counts_path: &Path, povm: PovmKind, estimators: &[Estimator], optimizer: &OptimizerConfig, common: &CommonOptions) -> CliResult<()> {
    let counts = read_counts(counts_path, povm)?;
    if counts.total() == 0 {
        return Err(usage(anyhow!("{}: {}", counts_path.display(), pairstate::Error::EmptyData)));
    }
    let linear_inversion = match povm {
        PovmKind::Sic => {
            let inv = povm::sic_linear_inversion(&counts).map_err(classify)?;
            LiDiagnostics { eigenvalues: inv.matrix.eigen().values.to_vec(), positive: inv.positive, singlet_weight: None }
        }
        PovmKind::Tetra => {
            let inv = povm::tetra_linear_inversion(&counts).map_err(classify)?;
            let ev = inv.state.eigenvalues4().to_vec();
            LiDiagnostics { positive: ev[0] >= -1e-10, eigenvalues: ev, singlet_weight: Some(inv.singlet_weight) }
        }
    };
    let mut opt = *optimizer;
    if let Some(seed) = common.seed {
        opt.seed = seed;
    }
    let mut estimates = Vec::new();
    for &e in estimators {
        let (d, objective, converged) = match e {
            Estimator::LiXi => (estimate::li_pipeline(&counts, povm, LiMethod::Xi), None, None),
            Estimator::LiMoments => (estimate::li_pipeline(&counts, povm, LiMethod::Moments), None, None),
            Estimator::Ml => match estimate::ml_estimate(&counts, povm, &opt) {
                Ok(ml) => (Ok(ml.decomposition()), Some(ml.objective), Some(ml.converged)),
                Err(err) => (Err(err), None, None),
            },
        };
        let d = d.map_err(|err| runtime(anyhow!("{e}: {err}")))?;
        estimates.push(EstimateReport {
            estimator: e,
            states: state_reports(&d),
            degenerate: d.degenerate,
            clamped: d.clamped,
            ill_conditioned: d.ill_conditioned,
            objective,
            converged,
        });
    }
    let mut rows = vec![["estimator", "state", "theta", "phi", "x", "y", "z", "probability"].map(String::from).to_vec()];
    for est in &estimates {
        for (k, s) in est.states.iter().enumerate() {
            let mut r = vec![est.estimator.to_string(), k.to_string(), s.theta.to_string(), s.phi.to_string()];
            r.extend(s.bloch.iter().map(f64::to_string));
            r.push(s.probability.to_string());
            rows.push(r);
        }
    }
    let output = EstimateOutput { povm, n_total: counts.total(), linear_inversion, estimates };
    emit(common, "estimate", &output, Some(rows))
}

#[derive(Debug, Clone, Copy)]
pub struct PlausibleOptions {
    pub samples: u64,
    pub chunk_size: u64,
}

#[derive(Serialize)]
struct PlausibleOutput {
    povm: PovmKind,
    theta_ml: pairstate::qstate::ParamVector,
    report: plausible::PlausibilityReport,
}

pub fn cmd_plausible(counts_path: &Path, povm: PovmKind, optimizer: &OptimizerConfig, popts: PlausibleOptions, common: &CommonOptions) -> CliResult<()> {
    let counts = read_counts(counts_path, povm)?;
    let seed = common.seed.unwrap_or(0);
    let mut opt = *optimizer;
    opt.seed = seed;
    let theta_ml = if counts.total() == 0 {
        pairstate::qstate::ParamVector::new(0.0, 0.0, 0.0, 0.0, 0.0).expect("valid angles")
    } else {
        estimate::ml_estimate(&counts, povm, &opt).map_err(classify)?.params
    };
    if popts.samples == 0 || popts.chunk_size == 0 {
        return Err(usage(anyhow!("--samples and --chunk-size must be positive")));
    }
    let req = PlausibilityRequest { counts, theta_ml, truth: None };
    let report = plausible::plausibility_batch(std::slice::from_ref(&req), povm, popts.samples, seed, popts.chunk_size)
        .pop()
        .expect("one report")
        .map_err(runtime)?;
    let rows = vec![
        ["N", "lambda_pl", "size", "credibility", "se_lambda", "se_size", "se_credibility", "samples"].map(String::from).to_vec(),
        vec![
            report.n_total.to_string(),
            report.lambda_pl.to_string(),
            report.size_pl.to_string(),
            report.credibility_pl.to_string(),
            report.se_lambda.to_string(),
            report.se_size.to_string(),
            report.se_credibility.to_string(),
            report.samples.to_string(),
        ],
    ];
    emit(common, "plausible", &PlausibleOutput { povm, theta_ml, report }, Some(rows))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsRow {
    pub run: usize,
    #[serde(rename = "N")]
    pub n: u64,
    pub lambda_pl: f64,
    pub size: f64,
    pub credibility: f64,
    pub scaled_lambda: f64,
    pub scaled_size: f64,
    pub scaled_one_minus_credibility: f64,
    pub ratio_d: f64,
    pub predicted_size: f64,
    pub predicted_one_minus_credibility: f64,
}

pub fn asymptotics_rows(rows: &[ResultRow]) -> CliResult<Vec<AsymptoticsRow>> {
    let mut out = Vec::new();
    for r in rows {
        let (Some(l), Some(s), Some(c)) = (r.lambda_pl, r.size, r.credibility) else {
            continue;
        };
        let a = plausible::asymptotics(r.n, l, s, c).map_err(|e| runtime(anyhow!("run {} N {}: {e}", r.run, r.n)))?;
        out.push(AsymptoticsRow {
            run: r.run,
            n: r.n,
            lambda_pl: l,
            size: s,
            credibility: c,
            scaled_lambda: a.scaled_lambda,
            scaled_size: a.scaled_size,
            scaled_one_minus_credibility: a.scaled_one_minus_credibility,
            ratio_d: a.ratio_d,
            predicted_size: a.predicted_size,
            predicted_one_minus_credibility: a.predicted_one_minus_credibility,
        });
    }
    if out.is_empty() {
        return Err(usage(anyhow!("the table has no plausibility values")));
    }
    Ok(out)
}

pub fn cmd_asymptotics(table_path: &Path, common: &CommonOptions) -> CliResult<()> {
    let rows = read_rows(table_path).map_err(usage)?;
    let series = asymptotics_rows(&rows)?;
    let format = common.format.unwrap_or(OutputFormat::Csv);
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(&mut buf);
            for r in &series {
                wtr.serialize(r).map_err(runtime)?;
            }
            wtr.flush().map_err(runtime)?;
        }
        OutputFormat::Json => {
            buf = serde_json::to_vec_pretty(&series).map_err(runtime)?;
            buf.push(b'\n');
        }
    }
    drop(rows);
    let common = CommonOptions { format: Some(format), ..common.clone() };
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(runtime)?;
            write_file(&dir.join(format!("asymptotics.{}", extension(format))), &buf)
        }
        None => std::io::stdout().write_all(&buf).map_err(runtime),
    }
}

pub fn cmd_selftest(common: &CommonOptions) -> CliResult<()> {
    let results = selftest::run(common.seed.unwrap_or(1));
    let mut failed = 0;
    for r in &results {
        println!("{} {:<46} max deviation {:.3e} (limit {:.0e})", if r.passed() { "PASS" } else { "FAIL" }, r.name, r.max_deviation, r.limit);
        failed += usize::from(!r.passed());
    }
    if failed > 0 {
        return Err(runtime(anyhow!("{failed} self-test check(s) failed")));
    }
    Ok(())
}
