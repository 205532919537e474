//! Quick internal consistency checks run by `pairstate selftest`.

use pairstate::estimate::match_and_score;
use pairstate::linalg::{self, C64};
use pairstate::plausible::draw_prior;
use pairstate::povm::{self, SicPovm, TetraPovm};
use pairstate::recon::{decompose_moments, decompose_xi};
use pairstate::sim::{stream_rng, StreamKind};

const DRAWS: u64 = 200;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub max_deviation: f64,
    pub limit: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_deviation.is_finite() && self.max_deviation <= self.limit
    }
}

fn sum_elements<const N: usize>(elements: &[linalg::CMat<N>]) -> linalg::CMat<N> {
    elements.iter().fold(linalg::zeros::<N>(), |acc, e| linalg::add(&acc, e))
}

pub fn run(seed: u64) -> Vec<Check> {
    let sic = SicPovm::get();
    let tetra = TetraPovm::get();
    let mut checks = vec![
        Check {
            name: "sic completeness",
            max_deviation: linalg::max_abs_diff(&sum_elements(&sic.elements), &linalg::identity::<3>()),
            limit: 1e-12,
        },
        Check {
            name: "tetrahedron completeness",
            max_deviation: linalg::max_abs_diff(&sum_elements(&tetra.elements), &linalg::identity::<4>()),
            limit: 1e-12,
        },
    ];
    let mut duality = 0.0f64;
    for a in 0..povm::TETRA_OUTCOMES {
        for b in 0..povm::TETRA_OUTCOMES {
            let tr = linalg::trace_product(&tetra.elements[a], &tetra.reconstruction[b]);
            let expect = if a == b { 1.0 } else { 0.0 };
            duality = duality.max((tr - C64::new(expect, 0.0)).norm());
        }
    }
    checks.push(Check { name: "tetrahedron dual frame", max_deviation: duality, limit: 1e-12 });

    let mut rng = stream_rng(seed, StreamKind::Prior, 0);
    let (mut sic_inv, mut tetra_inv, mut xi, mut moments) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..DRAWS {
        let p = draw_prior(&mut rng);
        let m = p.triplet_matrix();
        let inv = povm::sic_inversion_from_frequencies(&povm::sic_probabilities(&m).0);
        sic_inv = sic_inv.max(linalg::max_abs_diff(&inv.matrix.0, &m.0));
        let st = p.ensemble_state();
        let inv = povm::tetra_inversion_from_frequencies(&povm::tetra_probabilities(&st).0);
        tetra_inv = tetra_inv.max((inv.state.s - st.s).norm() + inv.state.c.plus(&st.c.scaled(-1.0)).frobenius_norm());
        xi = xi.max(decompose_xi(&m).map_or(f64::INFINITY, |d| match_and_score(&p, &d).summed_ppm() * 1e-6));
        moments = moments.max(decompose_moments(&st, 1e-9).map_or(f64::INFINITY, |d| match_and_score(&p, &d).summed_ppm() * 1e-6));
    }
    checks.push(Check { name: "sic inversion of exact probabilities", max_deviation: sic_inv, limit: 1e-12 });
    checks.push(Check { name: "tetrahedron inversion of exact probabilities", max_deviation: tetra_inv, limit: 1e-12 });
    checks.push(Check { name: "null-ket round trip infidelity", max_deviation: xi, limit: 1e-8 });
    checks.push(Check { name: "moment round trip infidelity", max_deviation: moments, limit: 1e-8 });
    checks
}
