//! Recovery of the two states and their probabilities from the pair
//! density operator.
//!
//! Two independent routes are provided:
//!
//! * [`decompose_moments`] works on `(s, C)`: `C - ss = p₀p₁(a-b)(a-b)`,
//!   removing the component of `s` along `a - b` leaves `s' = (a+b)/2`, and
//!   `(p₀-p₁)² = (s-s')²/(1-s'²)`.
//! * [`xi_from_triplet`] + [`states_from_xi`] find the triplet ket `ξ`
//!   annihilated by ρ; the roots of `c₁₁ + 2c₀₁z + c₀₀z² = 0` with
//!   `z = a₀*/a₁*` are the two states.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::qstate::{BlochVector, PureQubit, SymmetricTwoQubitState, TripletMatrix};

/// Default threshold on `‖C - ss‖_F` for exact inputs.
pub const EXACT_TOLERANCE: f64 = 1e-8;

/// Gap between the two smallest eigenvalues below which `ξ` is flagged.
pub const XI_GAP_TOLERANCE: f64 = 1e-9;

/// Tolerance for count-derived inputs: `max(1e-8, 4/√N)`.
pub fn count_tolerance(n_total: u64) -> f64 {
    if n_total == 0 {
        return EXACT_TOLERANCE;
    }
    EXACT_TOLERANCE.max(4.0 / (n_total as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Moments,
    Xi,
    MaxLikelihood,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub state0: PureQubit,
    pub state1: PureQubit,
    pub p0: f64,
    pub p1: f64,
    /// The source appears to emit a single state.
    pub degenerate: bool,
    pub method: Method,
    /// A noisy intermediate quantity was clamped into its physical range.
    pub clamped: bool,
    /// The null ket was not well separated from the next eigenvector.
    pub ill_conditioned: bool,
}

impl Decomposition {
    fn single(state: PureQubit, method: Method) -> Self {
        Self {
            state0: state,
            state1: state,
            p0: 1.0,
            p1: 0.0,
            degenerate: true,
            method,
            clamped: false,
            ill_conditioned: false,
        }
    }

    /// A two-state decomposition with the label convention applied.
    pub fn from_parts(state0: PureQubit, state1: PureQubit, p0: f64, method: Method) -> Self {
        Self {
            state0,
            state1,
            p0,
            p1: 1.0 - p0,
            degenerate: false,
            method,
            clamped: false,
            ill_conditioned: false,
        }
        .ordered()
    }

    /// Orders labels so that `p0 ≥ p1`; exact ties put the lexicographically
    /// smaller Bloch vector first.
    fn ordered(mut self) -> Self {
        let swap = if self.p0 == self.p1 {
            self.state0.bloch().lex_cmp(&self.state1.bloch()).is_gt()
        } else {
            self.p0 < self.p1
        };
        if swap {
            std::mem::swap(&mut self.state0, &mut self.state1);
            std::mem::swap(&mut self.p0, &mut self.p1);
        }
        self
    }

    pub fn blochs(&self) -> (BlochVector, BlochVector) {
        (self.state0.bloch(), self.state1.bloch())
    }
}

fn unit_state(v: BlochVector) -> Result<PureQubit> {
    PureQubit::from_bloch(v).map_err(|_| Error::IllConditioned("reconstructed Bloch vector vanished".into()))
}

/// Moment route from `(s, C)` to `(a, b, p₀, p₁)`.
///
/// `e`, the top eigenvector of `C - ss`, is the direction of `a - b`;
/// `s' = s - (s·e)e`, `p₀ - p₁ = (s·e)/√(1 - s'²)` and
/// `a, b = s' ± √(1 - s'²) e`.
pub fn decompose_moments(state: &SymmetricTwoQubitState, tol: f64) -> Result<Decomposition> {
    let s = state.s;
    let conn = state.connected_correlation();
    if conn.frobenius_norm() <= tol {
        return Ok(Decomposition::single(unit_state(s)?, Method::Moments));
    }
    let s_sq = s.norm_sq();
    if s_sq >= 1.0 {
        return Err(Error::DegenerateInput { s_sq });
    }
    let (vals, vecs) = linalg::real_symmetric_eigen3(conn.matrix());
    if vals[2] <= 0.0 || -vals[0] > vals[2] {
        return Err(Error::NonPhysicalMoments { value: if vals[2] <= 0.0 { vals[2] } else { vals[0] } });
    }
    let mut e = BlochVector::new(vecs[0][2], vecs[1][2], vecs[2][2]);
    let mut along = s.dot(e);
    if along < 0.0 {
        e = e * -1.0;
        along = -along;
    }
    let s_prime = s - e * along;
    let half_sq = 1.0 - s_prime.norm_sq();
    let half = half_sq.sqrt();
    let clamped = along > half;
    let dp = if clamped { 1.0 } else { along / half };
    let p0 = 0.5 * (1.0 + dp);
    let p1 = 0.5 * (1.0 - dp);
    Ok(Decomposition {
        state0: unit_state(s_prime + e * half)?,
        state1: unit_state(s_prime - e * half)?,
        p0,
        p1,
        degenerate: false,
        method: Method::Moments,
        clamped,
        ill_conditioned: false,
    }
    .ordered())
}

/// `ξ = c₀₀|00⟩ + c₀₁(|01⟩+|10⟩) + c₁₁|11⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripletKet {
    pub c00: C64,
    pub c01: C64,
    pub c11: C64,
}

impl TripletKet {
    pub fn from_triplet_vector(v: &[C64; 3]) -> Self {
        Self {
            c00: v[0],
            c01: v[2] / SQRT_2,
            c11: v[1],
        }
    }

    pub fn to_triplet_vector(&self) -> [C64; 3] {
        [self.c00, self.c11, self.c01 * SQRT_2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.c00.norm_sqr() + 2.0 * self.c01.norm_sqr() + self.c11.norm_sqr()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sq().sqrt();
        Self {
            c00: self.c00 / n,
            c01: self.c01 / n,
            c11: self.c11 / n,
        }
    }

    /// `⟨ψ⊗ψ|ξ⟩`.
    pub fn pair_overlap(&self, psi: &PureQubit) -> C64 {
        linalg::inner(&psi.pair_ket(), &self.to_triplet_vector())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullKet {
    pub ket: TripletKet,
    pub eigenvalue: f64,
    /// The two smallest eigenvalues are closer than [`XI_GAP_TOLERANCE`].
    pub ill_conditioned: bool,
}

/// Eigenvector of the smallest eigenvalue of `m`, taken as `ξ`.
pub fn xi_from_triplet(m: &TripletMatrix) -> NullKet {
    let eig = m.eigen();
    NullKet {
        ket: TripletKet::from_triplet_vector(&eig.vector(0)),
        eigenvalue: eig.values[0],
        ill_conditioned: eig.values[1] - eig.values[0] < XI_GAP_TOLERANCE,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiStates {
    pub states: (PureQubit, PureQubit),
    /// Both roots coincide, so only one state is determined.
    pub degenerate: bool,
}

/// Roots of `c₁₁ + 2c₀₁z + c₀₀z² = 0`, each mapped to `(a₀, a₁) ∝ (z*, 1)`.
///
/// With `q = -(c₀₁ ± √(c₀₁² - c₀₀c₁₁))` (sign chosen to avoid cancellation)
/// the roots are `q/c₀₀` and `c₁₁/q`, so the states are `∝ (q*, c₀₀*)` and
/// `∝ (c₁₁*, q*)`; a vanishing `c₀₀` yields the root at infinity, `|0⟩`.
pub fn states_from_xi(xi: &TripletKet) -> Result<XiStates> {
    let n = xi.norm_sq().sqrt();
    if !(n > 0.0) {
        return Err(Error::Domain("null ket is identically zero".into()));
    }
    let xi = xi.normalized();
    let disc = (xi.c01 * xi.c01 - xi.c00 * xi.c11).sqrt();
    let d = if (xi.c01.conj() * disc).re >= 0.0 { disc } else { -disc };
    let q = -(xi.c01 + d);
    if q.norm() <= 1e-12 {
        let s = if xi.c00.norm() >= xi.c11.norm() {
            PureQubit::one()
        } else {
            PureQubit::zero()
        };
        return Ok(XiStates {
            states: (s, s),
            degenerate: true,
        });
    }
    let first = PureQubit::from_amplitudes(q.conj(), xi.c00.conj())?;
    let second = PureQubit::from_amplitudes(xi.c11.conj(), q.conj())?;
    Ok(XiStates {
        states: (first, second),
        degenerate: false,
    })
}

/// Least-squares `p₀` in `m ≈ p₀P₀ + (1-p₀)P₁`, clamped to `[0, 1]`.
pub fn probabilities_given_states(m: &TripletMatrix, psi0: &PureQubit, psi1: &PureQubit) -> Result<(f64, f64)> {
    let overlap = psi0.overlap(psi1);
    if overlap >= 1.0 - 1e-10 {
        return Err(Error::IllConditioned(format!("states nearly identical (overlap {overlap})")));
    }
    let p_0 = TripletMatrix::from_ket(&psi0.pair_ket());
    let p_1 = TripletMatrix::from_ket(&psi1.pair_ket());
    let d = linalg::sub(&p_0.0, &p_1.0);
    let r = linalg::sub(&m.0, &p_1.0);
    let num = linalg::trace_product(&r, &d).re;
    let den = 2.0 * (1.0 - overlap * overlap);
    let p0 = (num / den).clamp(0.0, 1.0);
    Ok((p0, 1.0 - p0))
}

/// Full null-ket route: `ξ` → states → probabilities.
pub fn decompose_xi(m: &TripletMatrix) -> Result<Decomposition> {
    let null = xi_from_triplet(m);
    if null.ill_conditioned && m.eigen().values[1].abs() < XI_GAP_TOLERANCE {
        // rank one: ρ = |ψψ⟩⟨ψψ| and every ket orthogonal to it is a null ket
        let st = crate::qstate::from_triplet_matrix(m);
        return Ok(Decomposition::single(unit_state(st.s)?, Method::Xi));
    }
    let roots = states_from_xi(&null.ket)?;
    let (s0, s1) = roots.states;
    if roots.degenerate || s0.overlap(&s1) >= 1.0 - 1e-10 {
        let mut d = Decomposition::single(s0, Method::Xi);
        d.ill_conditioned = null.ill_conditioned;
        return Ok(d);
    }
    let (p0, p1) = probabilities_given_states(m, &s0, &s1)?;
    Ok(Decomposition {
        state0: s0,
        state1: s1,
        p0,
        p1,
        degenerate: false,
        method: Method::Xi,
        clamped: false,
        ill_conditioned: null.ill_conditioned,
    }
    .ordered())
}
