//! Point estimators and their figures of merit.
//!
//! * linear inversion followed by either analytic route ([`li_pipeline`]);
//! * maximum likelihood over the five angles ([`ml_estimate`]), minimizing
//!   `-N⁻¹ log L(θ)` with the evolution strategy in [`cmaes`];
//! * fidelities, label-matched ppm errors and the Hilbert–Schmidt
//!   diagnostics of linear inversion.

pub mod cmaes;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::plausible::draw_prior;
use crate::povm::{self, PovmKind};
use crate::qstate::{ParamVector, PureQubit, TripletMatrix};
use crate::recon::{self, count_tolerance, Decomposition, Method};
use crate::sim::{stream_rng, CountVector, StreamKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub population: usize,
    /// Initial step size in radians.
    pub initial_step: f64,
    pub max_evals: u64,
    /// Convergence tolerance on `-N⁻¹ log L`.
    pub tolerance: f64,
    /// Extra runs after the first, each from a prior-sampled start.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            population: 12,
            initial_step: 0.3,
            max_evals: 20_000,
            tolerance: 1e-10,
            restarts: 3,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::Config("optimizer.population: must be at least 4".into()));
        }
        if !(self.initial_step > 0.0) || !(self.tolerance > 0.0) || self.max_evals == 0 {
            return Err(Error::Config("optimizer: initial_step, tolerance and max_evals must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiMethod {
    Xi,
    Moments,
}

/// Model probabilities at unconstrained angles; smooth in every argument.
#[inline]
fn raw_params(x: &[f64]) -> ParamVector {
    ParamVector { theta0: x[0], phi0: x[1], theta1: x[2], phi1: x[3], alpha: x[4] }
}

fn weighted_log_likelihood(params: &ParamVector, weights: &[f64], povm: PovmKind, q: &mut [f64]) -> f64 {
    povm.probabilities_into(params, q);
    let mut acc = 0.0;
    for (&n, &qj) in weights.iter().zip(q.iter()) {
        if n == 0.0 {
            continue;
        }
        if qj <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += n * qj.ln();
    }
    acc
}

/// `Σ_j n_j log q_j(θ)`, without the combinatorial factor.
pub fn log_likelihood(params: &ParamVector, counts: &CountVector, povm: PovmKind) -> Result<f64> {
    povm.check_arity(counts)?;
    let w: Vec<f64> = counts.counts().iter().map(|&c| c as f64).collect();
    let mut q = [0.0; povm::TETRA_OUTCOMES];
    Ok(weighted_log_likelihood(params, &w, povm, &mut q[..povm.arity()]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlEstimate {
    pub params: ParamVector,
    /// `-N⁻¹ log L` at `params`.
    pub objective: f64,
    pub evaluations: u64,
    pub converged: bool,
}

impl MlEstimate {
    pub fn decomposition(&self) -> Decomposition {
        Decomposition::from_parts(self.params.state0(), self.params.state1(), self.params.p0(), Method::MaxLikelihood)
    }
}

pub fn ml_estimate(counts: &CountVector, povm: PovmKind, opt: &OptimizerConfig) -> Result<MlEstimate> {
    ml_estimate_with_rng(counts, povm, opt, &mut stream_rng(opt.seed, StreamKind::Optimizer, 0))
}

pub fn ml_estimate_with_rng(counts: &CountVector, povm: PovmKind, opt: &OptimizerConfig, rng: &mut ChaCha8Rng) -> Result<MlEstimate> {
    povm.check_arity(counts)?;
    if counts.total() == 0 {
        return Err(Error::EmptyData);
    }
    let w: Vec<f64> = counts.counts().iter().map(|&c| c as f64).collect();
    let start = li_pipeline(counts, povm, LiMethod::Xi)
        .or_else(|_| li_pipeline(counts, povm, LiMethod::Moments))
        .ok()
        .and_then(|d| ParamVector::from_qubits(d.state0, d.state1, d.p0).ok());
    ml_estimate_weights(&w, povm, opt, start, rng)
}

/// Maximum likelihood for arbitrary non-negative outcome weights (counts or
/// exact probabilities). The first run starts at `start` when given, every
/// other run at a prior draw; the best result is returned.
pub fn ml_estimate_weights<R: Rng + ?Sized>(
    weights: &[f64],
    povm: PovmKind,
    opt: &OptimizerConfig,
    start: Option<ParamVector>,
    rng: &mut R,
) -> Result<MlEstimate> {
    opt.validate()?;
    if weights.len() != povm.arity() {
        return Err(Error::ArityMismatch { expected: povm.arity(), got: weights.len() });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyData);
    }
    let mut q = [0.0; povm::TETRA_OUTCOMES];
    let arity = povm.arity();
    let mut objective = |x: &[f64]| -weighted_log_likelihood(&raw_params(x), weights, povm, &mut q[..arity]) / total;
    let settings = cmaes::CmaesSettings {
        population: opt.population,
        sigma0: opt.initial_step,
        max_evals: opt.max_evals,
        f_tolerance: opt.tolerance,
        x_tolerance: 1e-12,
    };

    let mut best: Option<cmaes::CmaesResult> = None;
    let mut evaluations = 0;
    for k in 0..=opt.restarts {
        let x0 = match (k, start) {
            (0, Some(p)) => p,
            _ => draw_prior(rng),
        }
        .to_array();
        let r = cmaes::minimize(&mut objective, &x0, &settings, rng);
        evaluations += r.evaluations;
        if best.as_ref().map_or(true, |b| r.f < b.f) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one optimizer run");
    let raw: [f64; 5] = best.x.as_slice().try_into().expect("five parameters");
    Ok(MlEstimate {
        params: ParamVector::from_raw(raw),
        objective: best.f,
        evaluations,
        converged: best.converged,
    })
}

/// Linear inversion followed by one of the analytic routes. For the
/// tetrahedron the singlet component is removed first.
pub fn li_pipeline(counts: &CountVector, povm: PovmKind, method: LiMethod) -> Result<Decomposition> {
    let tol = count_tolerance(counts.total());
    match povm {
        PovmKind::Sic => {
            let inv = povm::sic_linear_inversion(counts)?;
            match method {
                LiMethod::Xi => recon::decompose_xi(&inv.matrix),
                LiMethod::Moments => recon::decompose_moments(&inv.matrix.to_moments(), tol),
            }
        }
        PovmKind::Tetra => {
            let inv = povm::tetra_linear_inversion(counts)?;
            let triplet = inv
                .state
                .without_singlet()
                .ok_or_else(|| Error::IllConditioned("estimate is entirely singlet".into()))?;
            match method {
                LiMethod::Xi => recon::decompose_xi(&triplet.to_triplet_matrix()),
                LiMethod::Moments => recon::decompose_moments(&triplet, tol),
            }
        }
    }
}

/// `|⟨x|y⟩|² = (1 + x·y)/2`.
pub fn fidelity(x: &PureQubit, y: &PureQubit) -> f64 {
    x.overlap(y).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub err0_ppm: f64,
    pub err1_ppm: f64,
    /// `|p̂₀ - p₀|` under the chosen pairing.
    pub prob_abs_err: f64,
    pub fidelity0: f64,
    pub fidelity1: f64,
    /// The estimate's labels were swapped to match the truth.
    pub swapped: bool,
}

impl Score {
    pub fn summed_ppm(&self) -> f64 {
        self.err0_ppm + self.err1_ppm
    }
}

/// Pairs estimated with true states by the larger total fidelity and scores
/// each pair.
pub fn match_and_score(truth: &ParamVector, est: &Decomposition) -> Score {
    let (t0, t1) = (truth.state0(), truth.state1());
    let direct = (fidelity(&t0, &est.state0), fidelity(&t1, &est.state1));
    let crossed = (fidelity(&t0, &est.state1), fidelity(&t1, &est.state0));
    let swapped = crossed.0 + crossed.1 > direct.0 + direct.1 + 1e-12;
    let ((f0, f1), p_hat) = if swapped { (crossed, est.p1) } else { (direct, est.p0) };
    Score {
        err0_ppm: (1.0 - f0) * 1e6,
        err1_ppm: (1.0 - f1) * 1e6,
        prob_abs_err: (p_hat - truth.p0()).abs(),
        fidelity0: f0,
        fidelity1: f1,
        swapped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// `‖Δρ‖² = tr(Δρ²)`.
    pub hs_error_sq: f64,
    /// `ε = ‖Δρ‖`.
    pub epsilon: f64,
    /// Eigenvalues `r₀ ≤ r₁ ≤ r₂` of the estimate.
    pub eigenvalues: [f64; 3],
    /// Lower bound on `|⟨u₀|ξ⟩|²`, clamped to `[0, 1]`.
    pub overlap_lower_bound: f64,
    pub ill_conditioned: bool,
}

/// Error of a linear-inversion estimate and the guaranteed overlap between
/// its lowest eigenvector `u₀` and the true null ket:
/// `1 - ε/r₁` if `r₀ ≥ 0`, else `(r₁ - ε)/(r₁ + |r₀|)`.
pub fn li_diagnostics(est: &TripletMatrix, truth: &TripletMatrix) -> DiagnosticsReport {
    let delta = linalg::sub(&est.0, &truth.0);
    let hs_error_sq = linalg::trace_product(&delta, &delta).re.max(0.0);
    let epsilon = hs_error_sq.sqrt();
    let eigenvalues = est.eigen().values;
    let [r0, r1, _] = eigenvalues;
    let (bound, ill_conditioned) = if r1 <= 0.0 {
        (0.0, true)
    } else if r0 >= 0.0 {
        (1.0 - epsilon / r1, false)
    } else {
        ((r1 - epsilon) / (r1 + r0.abs()), false)
    };
    DiagnosticsReport {
        hs_error_sq,
        epsilon,
        eigenvalues,
        overlap_lower_bound: bound.clamp(0.0, 1.0),
        ill_conditioned,
    }
}

/// `12 Σ_j (n_j/N - q_j)²`, the SIC linear-inversion error from counts.
pub fn sic_hs_error_sq(counts: &CountVector, q: &[f64]) -> Result<f64> {
    PovmKind::Sic.check_arity(counts)?;
    Ok(12.0 * counts.frequencies()?.iter().zip(q).map(|(f, q)| (f - q).powi(2)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

    fn two_state_source() -> ParamVector {
        ParamVector::from_raw([FRAC_PI_6, FRAC_PI_4, 2.0 * PI / 3.0, FRAC_PI_2, FRAC_PI_6])
    }

    #[test]
    fn fidelity_examples() {
        let z = PureQubit::zero();
        let plus = PureQubit::new(FRAC_PI_4, 0.0).unwrap();
        assert!((fidelity(&z, &z) - 1.0).abs() < 1e-15);
        assert!(fidelity(&z, &PureQubit::one()) < 1e-15);
        assert!((fidelity(&z, &plus) - 0.5).abs() < 1e-15);
        // oracle: (1 + a·b)/2
        let s = PureQubit::new(0.3, 2.0).unwrap();
        let t = PureQubit::new(1.1, 5.0).unwrap();
        assert!((fidelity(&s, &t) - 0.5 * (1.0 + s.bloch().dot(t.bloch()))).abs() < 1e-12);
    }

    #[test]
    fn scoring_is_label_invariant() {
        let truth = two_state_source();
        let d = Decomposition::from_parts(truth.state0(), truth.state1(), truth.p0(), Method::MaxLikelihood);
        let s = match_and_score(&truth, &d);
        assert!(s.err0_ppm.abs() < 1e-6 && s.err1_ppm.abs() < 1e-6 && s.prob_abs_err < 1e-12);
        let swapped = Decomposition { state0: d.state1, state1: d.state0, p0: d.p1, p1: d.p0, ..d };
        let s2 = match_and_score(&truth, &swapped);
        assert!(s2.err0_ppm.abs() < 1e-6 && s2.err1_ppm.abs() < 1e-6 && s2.prob_abs_err < 1e-12);

        let t = ParamVector::from_qubits(PureQubit::zero(), PureQubit::new(FRAC_PI_4, 0.0).unwrap(), 0.5).unwrap();
        // both pairings tie at total fidelity 1; the direct one is kept
        let bad = Decomposition::from_parts(PureQubit::zero(), PureQubit::new(FRAC_PI_4, PI).unwrap(), 0.6, Method::Xi);
        let s = match_and_score(&t, &bad);
        assert!(s.err0_ppm.abs() < 1e-6);
        assert!((s.err1_ppm - 1e6).abs() < 1e-6);
    }

    #[test]
    fn log_likelihood_matches_product() {
        let p = ParamVector::new(0.4, 1.0, 1.3, 3.0, 0.8).unwrap();
        let counts = CountVector::new(vec![3, 0, 1, 2, 5, 0, 1, 1, 2]);
        let q = PovmKind::Sic.probabilities(&p);
        let product: f64 = q.0.iter().zip(counts.counts()).map(|(q, &n)| q.powi(n as i32)).product();
        let ll = log_likelihood(&p, &counts, PovmKind::Sic).unwrap();
        assert!((ll - product.ln()).abs() < 1e-9);

        // ψ₀ = ψ₁ = |0⟩ never fires v₁
        let zero = ParamVector::new(0.0, 0.0, 0.0, 0.0, 0.3).unwrap();
        let mut c = vec![0; 9];
        c[0] = 1;
        assert_eq!(log_likelihood(&zero, &CountVector::new(c), PovmKind::Sic).unwrap(), f64::NEG_INFINITY);
        assert!(log_likelihood(&zero, &CountVector::new(vec![1; 10]), PovmKind::Sic).is_err());
    }

    #[test]
    fn exact_frequencies_maximize_likelihood_on_grid() {
        let p = ParamVector::new(0.5, 1.0, 1.2, 4.0, 0.6).unwrap();
        let q = PovmKind::Sic.probabilities(&p);
        let mut buf = [0.0; 9];
        let at_truth = weighted_log_likelihood(&p, &q.0, PovmKind::Sic, &mut buf);
        let steps = 7;
        for i in 0..steps {
            for j in 0..steps {
                for k in 0..steps {
                    for l in 0..steps {
                        for m in 0..steps {
                            let g = |s: usize, hi: f64| hi * s as f64 / (steps - 1) as f64;
                            let x = ParamVector { theta0: g(i, FRAC_PI_2), phi0: g(j, 2.0 * PI), theta1: g(k, FRAC_PI_2), phi1: g(l, 2.0 * PI), alpha: g(m, FRAC_PI_2) };
                            assert!(weighted_log_likelihood(&x, &q.0, PovmKind::Sic, &mut buf) <= at_truth + 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ml_recovers_exact_frequencies() {
        let truth = two_state_source();
        for povm in [PovmKind::Sic, PovmKind::Tetra] {
            let q = povm.probabilities(&truth);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let ml = ml_estimate_weights(&q.0, povm, &OptimizerConfig::default(), None, &mut rng).unwrap();
            let mut buf = [0.0; 10];
            let f_truth = -weighted_log_likelihood(&truth, &q.0, povm, &mut buf[..povm.arity()]);
            assert!(ml.objective <= f_truth + 1e-10);
            let s = match_and_score(&truth, &ml.decomposition());
            assert!(s.summed_ppm() < 10.0, "{povm}: {}", s.summed_ppm());
            let d = ml.decomposition();
            assert!((0.0..=1.0).contains(&d.p0) && (d.p0 + d.p1 - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn li_exact_counts_recover_truth() {
        let truth = ParamVector::new(0.3, 1.0, 1.1, 4.0, 0.7).unwrap();
        for povm in [PovmKind::Sic, PovmKind::Tetra] {
            let q = povm.probabilities(&truth);
            let counts = CountVector::new(q.0.iter().map(|x| (x * 1e12).round() as u64).collect());
            for method in [LiMethod::Xi, LiMethod::Moments] {
                let d = li_pipeline(&counts, povm, method).unwrap();
                let s = match_and_score(&truth, &d);
                assert!(s.summed_ppm() < 1e-3, "{povm} {method:?}: {}", s.summed_ppm());
                assert!(s.prob_abs_err < 1e-9);
            }
        }
        assert!(matches!(li_pipeline(&CountVector::zeros(9), PovmKind::Sic, LiMethod::Xi), Err(Error::EmptyData)));
    }

    #[test]
    fn diagnostics_examples() {
        let m = two_state_source().triplet_matrix();
        let r = li_diagnostics(&m, &m);
        assert_eq!(r.epsilon, 0.0);
        assert!((r.overlap_lower_bound - 1.0).abs() < 1e-15);
        let q = povm::sic_probabilities(&m);
        let counts = crate::sim::sample_counts(&q.0, 1000, 3).unwrap();
        let inv = povm::sic_linear_inversion(&counts).unwrap();
        let r = li_diagnostics(&inv.matrix, &m);
        assert!((r.hs_error_sq - sic_hs_error_sq(&counts, &q.0).unwrap()).abs() < 1e-12);
        assert!(r.overlap_lower_bound <= 1.0);
    }
}
