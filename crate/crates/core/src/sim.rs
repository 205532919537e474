//! Multinomial count sampling and the batch experiment driver.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Estimator, ExperimentConfig};
use crate::error::{Error, Result};
use crate::estimate::{self, MlEstimate, Score};
use crate::plausible::{self, PlausibilityReport, PlausibilityRequest};
use crate::qstate::ParamVector;
use crate::recon::Decomposition;

/// Identifier of the generator and stream-derivation scheme, stored with
/// every run record.
pub const RNG_ALGORITHM: &str = "chacha8-rand_chacha-0.9/seed_from_u64+stream";

/// Independent stream families carved out of one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Counts = 0,
    Optimizer = 1,
    Prior = 2,
}

/// Generator for `(seed, kind, index)`; distinct triples give
/// non-overlapping ChaCha streams.
pub fn stream_rng(seed: u64, kind: StreamKind, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << 62);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((kind as u64) << 62) | (index & ((1 << 62) - 1)));
    rng
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountVector(Vec<u64>);

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Self {
        Self(counts)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// `n_j / N`.
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        let n = self.total();
        if n == 0 {
            return Err(Error::EmptyData);
        }
        Ok(self.0.iter().map(|&c| c as f64 / n as f64).collect())
    }

    pub fn add(&mut self, other: &CountVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
}

fn checked_probabilities(probs: &[f64]) -> Result<Vec<f64>> {
    if let Some(q) = probs.iter().find(|q| !q.is_finite() || **q < -1e-12) {
        return Err(Error::Domain(format!("probability {q} is negative or non-finite")));
    }
    let clipped: Vec<f64> = probs.iter().map(|q| q.max(0.0)).collect();
    let sum: f64 = clipped.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(clipped.into_iter().map(|q| q / sum).collect())
}

/// Multinomial draw of `n` events by sequential conditional binomials.
pub fn sample_counts_with<R: Rng + ?Sized>(probs: &[f64], n: u64, rng: &mut R) -> Result<CountVector> {
    let q = checked_probabilities(probs)?;
    let mut out = vec![0u64; q.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    for (j, &qj) in q.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if j + 1 == q.len() {
            out[j] = remaining;
            break;
        }
        let p = if mass > 0.0 { (qj / mass).clamp(0.0, 1.0) } else { 1.0 };
        let k = Binomial::new(remaining, p)
            .map_err(|e| Error::Domain(format!("binomial({remaining}, {p}): {e}")))?
            .sample(rng);
        out[j] = k;
        remaining -= k;
        mass -= qj;
    }
    Ok(CountVector(out))
}

pub fn sample_counts(probs: &[f64], n: u64, seed: u64) -> Result<CountVector> {
    sample_counts_with(probs, n, &mut stream_rng(seed, StreamKind::Counts, 0))
}

/// Nested counts at each schedule entry: the counts at `N_k` extend those at
/// `N_{k-1}` by a fresh draw of `N_k - N_{k-1}` events.
pub fn sample_schedule<R: Rng + ?Sized>(probs: &[f64], schedule: &[u64], rng: &mut R) -> Result<Vec<CountVector>> {
    let mut acc = CountVector::zeros(probs.len());
    let mut prev = 0;
    let mut out = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let step = n.checked_sub(prev).ok_or_else(|| Error::Config("n_schedule must be increasing".into()))?;
        acc.add(&sample_counts_with(probs, step, rng)?);
        out.push(acc.clone());
        prev = n;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub estimator: Estimator,
    pub decomposition: Option<Decomposition>,
    pub score: Option<Score>,
    /// Maximum-likelihood parameters and optimizer status.
    pub ml: Option<MlEstimate>,
    pub error: Option<String>,
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub n_total: u64,
    pub counts: CountVector,
    pub estimates: Vec<EstimateRecord>,
    pub plausibility: Option<PlausibilityReport>,
    pub plausibility_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub master_seed: u64,
    pub rng: String,
    pub checkpoints: Vec<CheckpointRecord>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record per-estimator wall times; off keeps records reproducible.
    pub timings: bool,
}

pub fn estimate_record(
    estimator: Estimator,
    counts: &CountVector,
    config: &ExperimentConfig,
    truth: &ParamVector,
    opt_rng: &mut ChaCha8Rng,
    options: &RunOptions,
) -> EstimateRecord {
    let start = Instant::now();
    let mut record = EstimateRecord {
        estimator,
        decomposition: None,
        score: None,
        ml: None,
        error: None,
        wall_time_s: None,
    };
    let result = match estimator {
        Estimator::LiXi | Estimator::LiMoments => {
            let method = if estimator == Estimator::LiXi {
                estimate::LiMethod::Xi
            } else {
                estimate::LiMethod::Moments
            };
            estimate::li_pipeline(counts, config.povm, method)
        }
        Estimator::Ml => estimate::ml_estimate_with_rng(counts, config.povm, &config.optimizer, opt_rng).map(|ml| {
            let d = ml.decomposition();
            record.ml = Some(ml);
            d
        }),
    };
    match result {
        Ok(d) => {
            record.score = Some(estimate::match_and_score(truth, &d));
            record.decomposition = Some(d);
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    if options.timings {
        record.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    record
}

fn simulate_run(config: &ExperimentConfig, truth: &ParamVector, probs: &[f64], run: usize, options: &RunOptions) -> Result<RunRecord> {
    let mut rng = stream_rng(config.master_seed, StreamKind::Counts, run as u64);
    let counts = sample_schedule(probs, &config.n_schedule, &mut rng)?;
    let mut opt_rng = stream_rng(config.master_seed, StreamKind::Optimizer, run as u64);
    let checkpoints = config
        .n_schedule
        .iter()
        .zip(counts)
        .map(|(&n_total, counts)| {
            let estimates = config
                .estimators
                .iter()
                .map(|&e| estimate_record(e, &counts, config, truth, &mut opt_rng, options))
                .collect();
            CheckpointRecord {
                n_total,
                counts,
                estimates,
                plausibility: None,
                plausibility_error: None,
            }
        })
        .collect();
    Ok(RunRecord {
        run,
        master_seed: config.master_seed,
        rng: RNG_ALGORITHM.to_string(),
        checkpoints,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    run_experiment_with(config, &RunOptions::default())
}

/// Runs every `(run, N)` pair of the configuration. Runs execute in
/// parallel; plausibility is then evaluated for all runs over one shared
/// prior sample.
pub fn run_experiment_with(config: &ExperimentConfig, options: &RunOptions) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let truth = config.truth()?;
    let probs = config.povm.probabilities(&truth);
    let mut records: Vec<RunRecord> = (0..config.runs)
        .into_par_iter()
        .map(|run| {
            simulate_run(config, &truth, probs.as_slice(), run, options)
                .map_err(|e| Error::Domain(format!("run {run}: {e}")))
        })
        .collect::<Result<_>>()?;

    let checkpoints = config.plausibility_checkpoints();
    if checkpoints.is_empty() {
        return Ok(records);
    }
    let mut slots = Vec::new();
    let mut requests = Vec::new();
    for (r, rec) in records.iter().enumerate() {
        for (c, cp) in rec.checkpoints.iter().enumerate() {
            if !checkpoints.contains(&cp.n_total) {
                continue;
            }
            let ml = cp.estimates.iter().find_map(|e| e.ml.as_ref());
            match ml {
                Some(ml) => {
                    slots.push((r, c));
                    requests.push(PlausibilityRequest {
                        counts: cp.counts.clone(),
                        theta_ml: ml.params,
                        truth: Some(truth),
                    });
                }
                None => slots.push((r, c)),
            }
        }
    }
    let pl = &config.plausibility;
    let mut results = plausible::plausibility_batch(&requests, config.povm, pl.samples, config.master_seed, pl.chunk_size).into_iter();
    for (r, c) in slots {
        let cp = &mut records[r].checkpoints[c];
        if cp.estimates.iter().all(|e| e.ml.is_none()) {
            cp.plausibility_error = Some("maximum-likelihood estimate unavailable".into());
            continue;
        }
        match results.next().expect("one result per request") {
            Ok(rep) => cp.plausibility = Some(rep),
            Err(e) => cp.plausibility_error = Some(e.to_string()),
        }
    }
    Ok(records)
}
