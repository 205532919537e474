//! Monte-Carlo plausible region: threshold `λ_pl`, size and credibility
//! under the isotropic-Bloch-vector, Jeffreys-probability prior, plus the
//! large-N predictions for size and credibility.
//!
//! Prior draws come in fixed-size chunks, each from its own stream; all
//! reductions run in chunk order so reports are bitwise reproducible for a
//! given `(seed, chunk_size)` regardless of the worker count.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::estimate::log_likelihood;
use crate::povm::{PovmKind, TETRA_OUTCOMES};
use crate::qstate::ParamVector;
use crate::sim::{stream_rng, CountVector, StreamKind};

pub const DEFAULT_CHUNK: u64 = 1 << 16;

/// Stands in for `log 0` so that `0 · log q` stays finite.
const LOG_FLOOR: f64 = -1e300;

/// One draw from the prior: `a`, `b` isotropic on the sphere (`cos 2θ`
/// uniform on `[-1, 1]`, `φ` uniform) and `α` uniform on `[0, π/2]`.
pub fn draw_prior<R: Rng + ?Sized>(rng: &mut R) -> ParamVector {
    let mut state = || {
        let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
        let phi = 2.0 * PI * rng.random::<f64>();
        (0.5 * z.acos(), phi)
    };
    let (theta0, phi0) = state();
    let (theta1, phi1) = state();
    let alpha = FRAC_PI_2 * rng.random::<f64>();
    ParamVector { theta0, phi0, theta1, phi1, alpha }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorSampler {
    pub seed: u64,
    pub samples: u64,
    pub chunk_size: u64,
}

impl PriorSampler {
    pub fn new(seed: u64, samples: u64) -> Self {
        Self { seed, samples, chunk_size: DEFAULT_CHUNK }
    }

    pub fn chunks(&self) -> u64 {
        self.samples.div_ceil(self.chunk_size)
    }

    fn chunk_len(&self, c: u64) -> u64 {
        self.chunk_size.min(self.samples - c * self.chunk_size)
    }

    pub fn chunk(&self, c: u64) -> impl Iterator<Item = ParamVector> {
        let mut rng = stream_rng(self.seed, StreamKind::Prior, c);
        (0..self.chunk_len(c)).map(move |_| draw_prior(&mut rng))
    }

    pub fn iter(&self) -> impl Iterator<Item = ParamVector> + '_ {
        (0..self.chunks()).flat_map(move |c| self.chunk(c))
    }
}

pub fn sample_prior(m: u64, seed: u64) -> impl Iterator<Item = ParamVector> {
    let s = PriorSampler::new(seed, m);
    (0..s.chunks()).flat_map(move |c| s.chunk(c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityRequest {
    pub counts: CountVector,
    pub theta_ml: ParamVector,
    /// The source that generated the counts, when known.
    pub truth: Option<ParamVector>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityReport {
    pub n_total: u64,
    pub lambda_pl: f64,
    pub size_pl: f64,
    pub credibility_pl: f64,
    pub samples: u64,
    pub chunk_size: u64,
    pub se_lambda: f64,
    pub se_size: f64,
    pub se_credibility: f64,
    /// `log L(θ^ML)`.
    pub log_l_ml: f64,
    pub truth_lambda: Option<f64>,
    pub truth_plausible: Option<bool>,
}

struct Prepared {
    weights: [f64; TETRA_OUTCOMES],
    log_l_ml: f64,
    empty: bool,
}

fn prepare(req: &PlausibilityRequest, povm: PovmKind) -> Result<Prepared> {
    let log_l_ml = log_likelihood(&req.theta_ml, &req.counts, povm)?;
    if !log_l_ml.is_finite() && req.counts.total() > 0 {
        return Err(Error::Domain("the reference estimate has zero likelihood".into()));
    }
    let mut weights = [0.0; TETRA_OUTCOMES];
    for (w, &c) in weights.iter_mut().zip(req.counts.counts()) {
        *w = c as f64;
    }
    Ok(Prepared { weights, log_l_ml: if log_l_ml.is_finite() { log_l_ml } else { 0.0 }, empty: req.counts.total() == 0 })
}

#[inline]
fn log_probabilities(povm: PovmKind, p: &ParamVector, out: &mut [f64; TETRA_OUTCOMES]) {
    let arity = povm.arity();
    povm.probabilities_into(p, &mut out[..arity]);
    for v in out[..arity].iter_mut() {
        *v = if *v > 0.0 { v.ln() } else { LOG_FLOOR };
    }
}

#[inline]
fn ratio(prep: &Prepared, logq: &[f64; TETRA_OUTCOMES], arity: usize) -> f64 {
    let mut ll = 0.0;
    for j in 0..arity {
        ll += prep.weights[j] * logq[j];
    }
    let x = ll - prep.log_l_ml;
    if x < -745.2 {
        0.0
    } else {
        x.exp()
    }
}

/// Per-chunk accumulation of `f(request index, λ)` over every prior draw.
fn accumulate<T, F>(preps: &[&Prepared], povm: PovmKind, sampler: &PriorSampler, init: T, f: F) -> Vec<Vec<T>>
where
    T: Copy + Send + Sync,
    F: Fn(usize, f64, &mut T) + Sync,
{
    let arity = povm.arity();
    (0..sampler.chunks())
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![init; preps.len()];
            let mut logq = [0.0; TETRA_OUTCOMES];
            for p in sampler.chunk(c) {
                log_probabilities(povm, &p, &mut logq);
                for (r, prep) in preps.iter().enumerate() {
                    f(r, ratio(prep, &logq, arity), &mut acc[r]);
                }
            }
            acc
        })
        .collect()
}

#[derive(Clone, Copy, Default)]
struct Pass1 {
    sum: f64,
    sum_sq: f64,
}

#[derive(Clone, Copy, Default)]
struct Pass2 {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

fn no_data_report(m: u64, chunk: u64, req: &PlausibilityRequest) -> PlausibilityReport {
    PlausibilityReport {
        n_total: 0,
        lambda_pl: 1.0,
        size_pl: 1.0,
        credibility_pl: 1.0,
        samples: m,
        chunk_size: chunk,
        se_lambda: 0.0,
        se_size: 0.0,
        se_credibility: 0.0,
        log_l_ml: 0.0,
        truth_lambda: req.truth.map(|_| 1.0),
        truth_plausible: req.truth.map(|_| true),
    }
}

/// Plausibility for several count vectors against one shared prior sample.
/// Results are identical to separate [`plausibility`] calls with the same
/// `(m, seed, chunk_size)`.
pub fn plausibility_batch(
    requests: &[PlausibilityRequest],
    povm: PovmKind,
    m: u64,
    seed: u64,
    chunk_size: u64,
) -> Vec<Result<PlausibilityReport>> {
    if m == 0 || chunk_size == 0 {
        return requests.iter().map(|_| Err(Error::Config("plausibility needs M ≥ 1 and chunk_size ≥ 1".into()))).collect();
    }
    let sampler = PriorSampler { seed, samples: m, chunk_size };
    let prepared: Vec<Result<Prepared>> = requests.iter().map(|r| prepare(r, povm)).collect();
    let live: Vec<usize> = (0..requests.len())
        .filter(|&i| matches!(&prepared[i], Ok(p) if !p.empty))
        .collect();
    let preps: Vec<&Prepared> = live.iter().map(|&i| prepared[i].as_ref().expect("live requests are prepared")).collect();

    let mf = m as f64;
    let pass1 = accumulate(&preps, povm, &sampler, Pass1::default(), |_, l, a| {
        a.sum += l;
        a.sum_sq += l * l;
    });
    let totals1: Vec<Pass1> = (0..preps.len())
        .map(|r| pass1.iter().fold(Pass1::default(), |acc, c| Pass1 { sum: acc.sum + c[r].sum, sum_sq: acc.sum_sq + c[r].sum_sq }))
        .collect();
    let lambda_pl: Vec<f64> = totals1.iter().map(|t| t.sum / mf).collect();

    let pass2 = accumulate(&preps, povm, &sampler, Pass2::default(), |r, l, a| {
        if l > lambda_pl[r] {
            a.count += 1;
            a.sum += l;
            a.sum_sq += l * l;
        }
    });

    let mut live_reports = Vec::with_capacity(preps.len());
    for (r, prep) in preps.iter().enumerate() {
        let req = &requests[live[r]];
        let t1 = totals1[r];
        if t1.sum == 0.0 {
            live_reports.push(Err(Error::DegenerateSample));
            continue;
        }
        let t2 = pass2.iter().fold(Pass2::default(), |acc, c| Pass2 {
            count: acc.count + c[r].count,
            sum: acc.sum + c[r].sum,
            sum_sq: acc.sum_sq + c[r].sum_sq,
        });
        let lpl = lambda_pl[r];
        let size = t2.count as f64 / mf;
        let cred = t2.sum / t1.sum;
        let e_l2 = t1.sum_sq / mf;
        let var_l = (e_l2 - lpl * lpl).max(0.0);
        let var_c = ((1.0 - 2.0 * cred) * t2.sum_sq / mf + cred * cred * e_l2).max(0.0);
        let truth_lambda = req.truth.map(|t| {
            let ll = log_likelihood(&t, &req.counts, povm).unwrap_or(f64::NEG_INFINITY);
            (ll - prep.log_l_ml).exp()
        });
        live_reports.push(Ok(PlausibilityReport {
            n_total: req.counts.total(),
            lambda_pl: lpl,
            size_pl: size,
            credibility_pl: cred,
            samples: m,
            chunk_size,
            se_lambda: (var_l / mf).sqrt(),
            se_size: (size * (1.0 - size) / mf).sqrt(),
            se_credibility: (var_c / mf).sqrt() / lpl,
            log_l_ml: prep.log_l_ml,
            truth_lambda,
            truth_plausible: truth_lambda.map(|l| l > lpl),
        }));
    }

    let mut live_iter = live_reports.into_iter();
    prepared
        .iter()
        .enumerate()
        .map(|(i, p)| match p {
            Err(e) => Err(e.clone()),
            Ok(p) if p.empty => Ok(no_data_report(m, chunk_size, &requests[i])),
            Ok(_) => live_iter.next().expect("one report per live request"),
        })
        .collect()
}

pub fn plausibility(
    counts: &CountVector,
    povm: PovmKind,
    theta_ml: &ParamVector,
    m: u64,
    seed: u64,
) -> Result<PlausibilityReport> {
    let req = PlausibilityRequest { counts: counts.clone(), theta_ml: *theta_ml, truth: None };
    plausibility_batch(std::slice::from_ref(&req), povm, m, seed, DEFAULT_CHUNK).pop().expect("one report")
}

/// The raw `λ^(m)` values, grouped by chunk, in sampling order.
pub fn likelihood_ratios(req: &PlausibilityRequest, povm: PovmKind, sampler: &PriorSampler) -> Result<Vec<Vec<f64>>> {
    let prep = prepare(req, povm)?;
    let arity = povm.arity();
    let mut logq = [0.0; TETRA_OUTCOMES];
    Ok((0..sampler.chunks())
        .map(|c| {
            sampler
                .chunk(c)
                .map(|p| {
                    log_probabilities(povm, &p, &mut logq);
                    ratio(&prep, &logq, arity)
                })
                .collect()
        })
        .collect())
}

/// `λ(θ) > λ_pl`.
pub fn is_plausible(theta: &ParamVector, counts: &CountVector, povm: PovmKind, theta_ml: &ParamVector, lambda_pl: f64) -> Result<bool> {
    let ll = log_likelihood(theta, counts, povm)?;
    let ll_ml = log_likelihood(theta_ml, counts, povm)?;
    if ll == f64::NEG_INFINITY {
        return Ok(false);
    }
    Ok((ll - ll_ml).exp() > lambda_pl)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptotics {
    pub n_total: u64,
    /// `λ_pl U^{5/2} / Γ(7/2)` with `U = log(1/λ_pl)`.
    pub predicted_size: f64,
    /// `s (5/(2U) + 15/(4U²)) + erfc(√U)` with the predicted size.
    pub predicted_one_minus_credibility: f64,
    /// Measured `1 - c` over the same expression with the measured size.
    pub ratio_d: f64,
    /// `N^{5/2} λ_pl`.
    pub scaled_lambda: f64,
    /// `N^{5/2} log(N)^{-5/2} s_pl`.
    pub scaled_size: f64,
    /// `N^{5/2} log(N)^{-3/2} (1 - c_pl)`.
    pub scaled_one_minus_credibility: f64,
}

fn tail(size: f64, u: f64) -> f64 {
    size * (2.5 / u + 3.75 / (u * u)) + erfc(u.sqrt())
}

/// Large-N predictions from a measured `(λ_pl, size, credibility)` triple.
pub fn asymptotics(n_total: u64, lambda_pl: f64, size: f64, credibility: f64) -> Result<Asymptotics> {
    if !(lambda_pl > 0.0 && lambda_pl < 1.0) {
        return Err(Error::Domain(format!("lambda_pl = {lambda_pl} outside (0, 1)")));
    }
    let u = (1.0 / lambda_pl).ln();
    let predicted_size = lambda_pl * u.powf(2.5) / gamma(3.5);
    let n = n_total as f64;
    let n52 = n.powf(2.5);
    let ln_n = n.ln();
    Ok(Asymptotics {
        n_total,
        predicted_size,
        predicted_one_minus_credibility: tail(predicted_size, u),
        ratio_d: (1.0 - credibility) / tail(size, u),
        scaled_lambda: n52 * lambda_pl,
        scaled_size: n52 * ln_n.powf(-2.5) * size,
        scaled_one_minus_credibility: n52 * ln_n.powf(-1.5) * (1.0 - credibility),
    })
}
