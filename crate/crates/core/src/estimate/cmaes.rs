//! (μ/μ_w, λ) covariance matrix adaptation evolution strategy with
//! cumulative step-size adaptation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmaesSettings {
    pub population: usize,
    pub sigma0: f64,
    pub max_evals: u64,
    /// Stop once the best objective values over the recent history and the
    /// current population both span less than this.
    pub f_tolerance: f64,
    pub x_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmaesResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: u64,
    pub converged: bool,
}

struct Params {
    mu: usize,
    weights: DVector<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c1: f64,
    c_mu: f64,
    chi_n: f64,
}

impl Params {
    fn new(n: usize, lambda: usize) -> Self {
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (0..mu).map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln()).collect();
        let total: f64 = raw.iter().sum();
        let weights = DVector::from_iterator(mu, raw.iter().map(|w| w / total));
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff)).min(1.0 - c1);
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self { mu, weights, mu_eff, c_sigma, d_sigma, c_c, c1, c_mu, chi_n }
    }
}

/// Minimizes `f` starting from `x0`. Non-finite objective values rank last.
pub fn minimize<F, R>(mut f: F, x0: &[f64], settings: &CmaesSettings, rng: &mut R) -> CmaesResult
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let n = x0.len();
    let lambda = settings.population.max(4);
    let p = Params::new(n, lambda);
    let history_len = 10 + (30.0 * n as f64 / lambda as f64).ceil() as usize;

    let mut mean = DVector::from_column_slice(x0);
    let mut sigma = settings.sigma0;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut b = DMatrix::<f64>::identity(n, n);
    let mut d = DVector::<f64>::from_element(n, 1.0);
    let mut p_sigma = DVector::<f64>::zeros(n);
    let mut p_c = DVector::<f64>::zeros(n);

    let mut best_x = x0.to_vec();
    let mut best_f = f(x0);
    let mut evals = 1u64;
    let mut history: Vec<f64> = Vec::new();
    let mut generation = 0u64;
    let mut converged = false;

    let mut xs: Vec<DVector<f64>> = vec![DVector::zeros(n); lambda];
    let mut ys: Vec<DVector<f64>> = vec![DVector::zeros(n); lambda];
    let mut fs = vec![0.0; lambda];
    let mut order: Vec<usize> = (0..lambda).collect();

    while evals + lambda as u64 <= settings.max_evals {
        for k in 0..lambda {
            let z = DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
            ys[k] = &b * z.component_mul(&d);
            xs[k] = &mean + &ys[k] * sigma;
            let v = f(xs[k].as_slice());
            fs[k] = if v.is_finite() { v } else { f64::INFINITY };
        }
        evals += lambda as u64;
        generation += 1;

        for (i, o) in order.iter_mut().enumerate() {
            *o = i;
        }
        order.sort_by(|&i, &j| fs[i].total_cmp(&fs[j]));
        if fs[order[0]] < best_f {
            best_f = fs[order[0]];
            best_x = xs[order[0]].as_slice().to_vec();
        }

        let mut y_w = DVector::<f64>::zeros(n);
        for i in 0..p.mu {
            y_w += &ys[order[i]] * p.weights[i];
        }
        mean += &y_w * sigma;

        // C^{-1/2} y_w = B D⁻¹ Bᵀ y_w
        let bt_y = b.transpose() * &y_w;
        let c_inv_half_y = &b * bt_y.component_div(&d);
        p_sigma = &p_sigma * (1.0 - p.c_sigma) + c_inv_half_y * (p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff).sqrt();
        let ps_norm = p_sigma.norm();
        let decay = 1.0 - (1.0 - p.c_sigma).powi(2 * generation as i32);
        let h_sigma = if ps_norm / decay.max(1e-300).sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * p.chi_n { 1.0 } else { 0.0 };
        p_c = &p_c * (1.0 - p.c_c) + &y_w * (h_sigma * (p.c_c * (2.0 - p.c_c) * p.mu_eff).sqrt());

        let mut rank_mu = DMatrix::<f64>::zeros(n, n);
        for i in 0..p.mu {
            let y = &ys[order[i]];
            rank_mu += y * y.transpose() * p.weights[i];
        }
        let delta_h = (1.0 - h_sigma) * p.c_c * (2.0 - p.c_c);
        cov = &cov * (1.0 - p.c1 - p.c_mu) + (&p_c * p_c.transpose() + &cov * delta_h) * p.c1 + rank_mu * p.c_mu;
        cov = (&cov + cov.transpose()) * 0.5;

        sigma *= ((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0)).exp();

        let eig = SymmetricEigen::new(cov.clone());
        b = eig.eigenvectors;
        d = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());

        history.push(fs[order[0]]);
        if history.len() > history_len {
            history.remove(0);
        }
        let pop_range = fs[order[lambda - 1]] - fs[order[0]];
        if history.len() == history_len {
            let (lo, hi) = history.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            if hi - lo < settings.f_tolerance && pop_range < settings.f_tolerance {
                converged = true;
                break;
            }
        }
        if sigma * d.max() < settings.x_tolerance {
            converged = true;
            break;
        }
        if !sigma.is_finite() || d.iter().any(|v| !v.is_finite()) {
            break;
        }
    }

    CmaesResult { x: best_x, f: best_f, evaluations: evals, converged }
}
