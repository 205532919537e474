//! The triplet SIC-POVM and the tetrahedron product POVM.
//!
//! Outcome order is fixed everywhere: SIC outcomes `v1..v9`; tetrahedron
//! outcomes `s1..s4` (both photons at exit k) followed by the coincidences
//! `c12, c13, c14, c23, c24, c34`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ONE, ZERO};
use crate::qstate::{BlochVector, CorrelationDyad, ParamVector, SymmetricTwoQubitState, TripletMatrix};
use crate::sim::CountVector;

pub const SIC_OUTCOMES: usize = 9;
pub const TETRA_OUTCOMES: usize = 10;

/// Coincidence exit pairs in outcome order.
pub const TETRA_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub const SIC_LABELS: [&str; SIC_OUTCOMES] = ["v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8", "v9"];
pub const TETRA_LABELS: [&str; TETRA_OUTCOMES] = ["s1", "s2", "s3", "s4", "c12", "c13", "c14", "c23", "c24", "c34"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PovmKind {
    Sic,
    Tetra,
}

impl PovmKind {
    pub fn arity(self) -> usize {
        match self {
            PovmKind::Sic => SIC_OUTCOMES,
            PovmKind::Tetra => TETRA_OUTCOMES,
        }
    }

    pub fn labels(self) -> &'static [&'static str] {
        match self {
            PovmKind::Sic => &SIC_LABELS,
            PovmKind::Tetra => &TETRA_LABELS,
        }
    }

    /// Outcome probabilities of the source described by `params`, written
    /// into `out[..arity]`.
    #[inline]
    pub fn probabilities_into(self, params: &ParamVector, out: &mut [f64]) {
        match self {
            PovmKind::Sic => SicPovm::get().probabilities_params(params, out),
            PovmKind::Tetra => TetraPovm::get().probabilities_params(params, out),
        }
    }

    pub fn probabilities(self, params: &ParamVector) -> ProbabilityVector {
        let mut out = vec![0.0; self.arity()];
        self.probabilities_into(params, &mut out);
        ProbabilityVector(out)
    }

    pub fn check_arity(self, counts: &CountVector) -> Result<()> {
        if counts.len() != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                got: counts.len(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for PovmKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PovmKind::Sic => "sic",
            PovmKind::Tetra => "tetra",
        })
    }
}

impl std::str::FromStr for PovmKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sic" => Ok(PovmKind::Sic),
            "tetra" => Ok(PovmKind::Tetra),
            other => Err(Error::Config(format!("unknown povm `{other}` (expected sic or tetra)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector(pub Vec<f64>);

impl ProbabilityVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn sum_sq(&self) -> f64 {
        self.0.iter().map(|q| q * q).sum()
    }
}

/// Nine triplet kets `v_j` with elements `Π_j = |v_j⟩⟨v_j|/3`.
#[derive(Debug, Clone)]
pub struct SicPovm {
    pub vectors: [[C64; 3]; SIC_OUTCOMES],
    pub elements: [CMat<3>; SIC_OUTCOMES],
}

static SIC: LazyLock<SicPovm> = LazyLock::new(SicPovm::build);
static TETRA: LazyLock<TetraPovm> = LazyLock::new(TetraPovm::build);

impl SicPovm {
    pub fn get() -> &'static SicPovm {
        &SIC
    }

    fn build() -> Self {
        let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let (o, z) = (ONE, ZERO);
        let rows: [[C64; 9]; 3] = [
            [z, -o, o, z, -w, o, z, -o, w],
            [o, z, -o, o, z, -w, w, z, -o],
            [-o, o, z, -w, o, z, -o, w, z],
        ];
        let vectors: [[C64; 3]; 9] = std::array::from_fn(|j| std::array::from_fn(|i| rows[i][j] * FRAC_1_SQRT_2));
        let elements = vectors.map(|v| linalg::scale(&linalg::outer(&v, &v), C64::new(1.0 / 3.0, 0.0)));
        Self { vectors, elements }
    }

    /// Reconstruction operator `12Π_j - I_tp` for outcome `j`.
    pub fn dual(&self, j: usize) -> CMat<3> {
        linalg::sub(&linalg::scale(&self.elements[j], C64::new(12.0, 0.0)), &linalg::identity::<3>())
    }

    #[inline]
    fn probabilities_params(&self, params: &ParamVector, out: &mut [f64]) {
        let w0 = params.state0().pair_ket();
        let w1 = params.state1().pair_ket();
        let (p0, p1) = (params.p0() / 3.0, params.p1() / 3.0);
        for (o, v) in out.iter_mut().zip(&self.vectors) {
            *o = p0 * linalg::inner(v, &w0).norm_sqr() + p1 * linalg::inner(v, &w1).norm_sqr();
        }
    }
}

/// `q_j = tr(Π_j ρ)`.
pub fn sic_probabilities(m: &TripletMatrix) -> ProbabilityVector {
    let sic = SicPovm::get();
    ProbabilityVector(sic.vectors.iter().map(|v| m.expectation(v) / 3.0).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SicInversion {
    pub matrix: TripletMatrix,
    pub min_eigenvalue: f64,
    /// No eigenvalue below `-1e-10`.
    pub positive: bool,
}

/// `ρ^LI = Σ_j (n_j/N)(12Π_j - I_tp)`.
pub fn sic_linear_inversion(counts: &CountVector) -> Result<SicInversion> {
    PovmKind::Sic.check_arity(counts)?;
    let freqs = counts.frequencies()?;
    Ok(sic_inversion_from_frequencies(&freqs))
}

pub fn sic_inversion_from_frequencies(freqs: &[f64]) -> SicInversion {
    let sic = SicPovm::get();
    let mut m = linalg::zeros::<3>();
    for (f, v) in freqs.iter().zip(&sic.vectors) {
        let proj = linalg::outer(v, v);
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += *f * 4.0 * proj[i][j];
            }
            m[i][i] -= C64::new(*f, 0.0);
        }
    }
    let matrix = TripletMatrix(m);
    let min_eigenvalue = matrix.eigen().values[0];
    SicInversion {
        matrix,
        min_eigenvalue,
        positive: min_eigenvalue >= -1e-10,
    }
}

/// Single-qubit tetrahedron measurement applied to both photons.
#[derive(Debug, Clone)]
pub struct TetraPovm {
    pub t: [BlochVector; 4],
    /// `Π_k^(s) = Π_k⊗Π_k`, then `Π_jk^(c) = Π_j⊗Π_k + Π_k⊗Π_j`, in outcome order.
    pub elements: [CMat<4>; TETRA_OUTCOMES],
    /// `R_k^(s) = R_k⊗R_k`, then `R_jk^(c) = ½(R_j⊗R_k + R_k⊗R_j)`.
    pub reconstruction: [CMat<4>; TETRA_OUTCOMES],
}

impl TetraPovm {
    pub fn get() -> &'static TetraPovm {
        &TETRA
    }

    fn build() -> Self {
        let k = 1.0 / 3.0_f64.sqrt();
        let t = [
            BlochVector::new(k, k, k),
            BlochVector::new(k, -k, -k),
            BlochVector::new(-k, k, -k),
            BlochVector::new(-k, -k, k),
        ];
        let sig = linalg::pauli();
        let single = |v: BlochVector, weight: f64, lead: f64| -> CMat<2> {
            let c = v.to_array();
            let mut m = linalg::scale(&linalg::identity::<2>(), C64::new(lead, 0.0));
            for j in 0..3 {
                m = linalg::add(&m, &linalg::scale(&sig[j], C64::new(weight * c[j], 0.0)));
            }
            m
        };
        let pi4: [CMat<2>; 4] = t.map(|v| single(v * 0.25, 1.0, 0.25));
        let r4: [CMat<2>; 4] = t.map(|v| single(v * 1.5, 1.0, 0.5));
        let half = C64::new(0.5, 0.0);
        let elements = std::array::from_fn(|o| {
            if o < 4 {
                linalg::kron(&pi4[o], &pi4[o])
            } else {
                let (j, k) = TETRA_PAIRS[o - 4];
                linalg::add(&linalg::kron(&pi4[j], &pi4[k]), &linalg::kron(&pi4[k], &pi4[j]))
            }
        });
        let reconstruction = std::array::from_fn(|o| {
            if o < 4 {
                linalg::kron(&r4[o], &r4[o])
            } else {
                let (j, k) = TETRA_PAIRS[o - 4];
                linalg::scale(&linalg::add(&linalg::kron(&r4[j], &r4[k]), &linalg::kron(&r4[k], &r4[j])), half)
            }
        });
        Self { t, elements, reconstruction }
    }

    #[inline]
    fn probabilities_params(&self, params: &ParamVector, out: &mut [f64]) {
        let a = params.state0().bloch();
        let b = params.state1().bloch();
        let (p0, p1) = (params.p0() / 16.0, params.p1() / 16.0);
        let ua: [f64; 4] = std::array::from_fn(|k| 1.0 + a.dot(self.t[k]));
        let ub: [f64; 4] = std::array::from_fn(|k| 1.0 + b.dot(self.t[k]));
        for k in 0..4 {
            out[k] = p0 * ua[k] * ua[k] + p1 * ub[k] * ub[k];
        }
        for (o, &(j, k)) in TETRA_PAIRS.iter().enumerate() {
            out[4 + o] = 2.0 * (p0 * ua[j] * ua[k] + p1 * ub[j] * ub[k]);
        }
    }
}

/// Tetrahedron outcome probabilities for any swap-symmetric state:
/// `q_k^(s) = (1 + 2t_k·s + t_k·C·t_k)/16`, `q_jk^(c) = (1 + (t_j+t_k)·s + t_j·C·t_k)/8`.
pub fn tetra_probabilities(state: &SymmetricTwoQubitState) -> ProbabilityVector {
    let t = &TetraPovm::get().t;
    let mut q = Vec::with_capacity(TETRA_OUTCOMES);
    for tk in t {
        q.push((1.0 + 2.0 * tk.dot(state.s) + state.c.bilinear(*tk, *tk)) / 16.0);
    }
    for &(j, k) in &TETRA_PAIRS {
        q.push((1.0 + (t[j] + t[k]).dot(state.s) + state.c.bilinear(t[j], t[k])) / 8.0);
    }
    ProbabilityVector(q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetraInversion {
    pub state: SymmetricTwoQubitState,
    /// `tr(I_sg ρ^LI)`.
    pub singlet_weight: f64,
    pub min_eigenvalue: f64,
    /// Positive semidefinite within 1e-10 and `tr C = 1` within 1e-12.
    pub valid: bool,
}

/// `s = 3Σ f_k t_k + (3/2)Σ f_jk (t_j+t_k)`,
/// `C = 9Σ f_k t_k t_k + (9/2)Σ f_jk (t_j t_k + t_k t_j)`.
pub fn tetra_linear_inversion(counts: &CountVector) -> Result<TetraInversion> {
    PovmKind::Tetra.check_arity(counts)?;
    let freqs = counts.frequencies()?;
    Ok(tetra_inversion_from_frequencies(&freqs))
}

pub fn tetra_inversion_from_frequencies(freqs: &[f64]) -> TetraInversion {
    let t = &TetraPovm::get().t;
    let mut s = BlochVector::default();
    let mut c = [[0.0; 3]; 3];
    for k in 0..4 {
        s = s + t[k] * (3.0 * freqs[k]);
        let tt = t[k].dyad(t[k]);
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] += 9.0 * freqs[k] * tt[i][j];
            }
        }
    }
    for (o, &(j, k)) in TETRA_PAIRS.iter().enumerate() {
        let f = freqs[4 + o];
        s = s + (t[j] + t[k]) * (1.5 * f);
        let jk = t[j].dyad(t[k]);
        for a in 0..3 {
            for b in 0..3 {
                c[a][b] += 4.5 * f * (jk[a][b] + jk[b][a]);
            }
        }
    }
    let state = SymmetricTwoQubitState::new(s, CorrelationDyad::from_matrix(c));
    let min_eigenvalue = state.eigenvalues4()[0];
    TetraInversion {
        state,
        singlet_weight: singlet_weight_from_frequencies(freqs),
        min_eigenvalue,
        valid: min_eigenvalue >= -1e-10 && (state.c.trace() - 1.0).abs() <= 1e-12,
    }
}

fn singlet_weight_from_frequencies(freqs: &[f64]) -> f64 {
    let same: f64 = freqs[..4].iter().sum();
    let coinc: f64 = freqs[4..].iter().sum();
    -2.0 * same + coinc
}

/// `tr(I_sg ρ^LI) = -(2/N)Σ n^(s) + (1/N)Σ n^(c)`.
pub fn singlet_weight(counts: &CountVector) -> Result<f64> {
    PovmKind::Tetra.check_arity(counts)?;
    Ok(singlet_weight_from_frequencies(&counts.frequencies()?))
}
