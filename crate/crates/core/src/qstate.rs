//! State algebra for the pair source.
//!
//! A source emitting `ψ₀⊗ψ₀` with probability `p₀` and `ψ₁⊗ψ₁` with
//! probability `p₁` is described by the symmetric two-qubit operator
//!
//! ```text
//! ρ = ¼ (I₄ + s·(σ⁽¹⁾ + σ⁽²⁾) + σ⁽¹⁾·C·σ⁽²⁾),   s = p₀a + p₁b,   C = p₀aa + p₁bb
//! ```
//!
//! The `(s, C)` pair is the canonical representation. The 3×3 matrix in the
//! triplet basis `{|00⟩, |11⟩, (|01⟩+|10⟩)/√2}` and the full 4×4 matrix are
//! derived views.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, SQRT_2};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ONE, ZERO};

const TWO_PI: f64 = 2.0 * PI;

/// Below this modulus an amplitude is treated as zero when fixing the
/// relative phase, so that poles get `φ = 0`.
const POLE_EPS: f64 = 1e-14;

/// Numerical tolerances shared across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Analytic identities.
    pub identity: f64,
    /// Eigenvalue sign checks.
    pub eigenvalue: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-12,
            eigenvalue: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    pub fn dyad(self, o: Self) -> [[f64; 3]; 3] {
        let u = self.to_array();
        let v = o.to_array();
        std::array::from_fn(|i| std::array::from_fn(|j| u[i] * v[j]))
    }

    /// Total order on components, used to break label ties.
    pub fn lex_cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.x
            .total_cmp(&o.x)
            .then(self.y.total_cmp(&o.y))
            .then(self.z.total_cmp(&o.z))
    }
}

impl Add for BlochVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for BlochVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for BlochVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Symmetric 3×3 correlation dyad `C_jk = ⟨σ_j ⊗ σ_k⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrelationDyad {
    m: [[f64; 3]; 3],
}

impl CorrelationDyad {
    /// Stores the symmetric part of `m`, so `C_jk == C_kj` holds bitwise.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Self {
        let mut out = [[0.0; 3]; 3];
        for j in 0..3 {
            out[j][j] = m[j][j];
            for k in (j + 1)..3 {
                let v = 0.5 * (m[j][k] + m[k][j]);
                out[j][k] = v;
                out[k][j] = v;
            }
        }
        Self { m: out }
    }

    pub fn diag(d: [f64; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for j in 0..3 {
            m[j][j] = d[j];
        }
        Self { m }
    }

    pub fn identity() -> Self {
        Self::diag([1.0; 3])
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.m[j][k]
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn apply(&self, v: BlochVector) -> BlochVector {
        let a = v.to_array();
        let r: [f64; 3] = std::array::from_fn(|j| (0..3).map(|k| self.m[j][k] * a[k]).sum());
        BlochVector::from_array(r)
    }

    /// `u·C·v`.
    pub fn bilinear(&self, u: BlochVector, v: BlochVector) -> f64 {
        u.dot(self.apply(v))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            m: self.m.map(|row| row.map(|x| x * k)),
        }
    }

    pub fn plus(&self, o: &Self) -> Self {
        let mut m = self.m;
        for j in 0..3 {
            for k in 0..3 {
                m[j][k] += o.m[j][k];
            }
        }
        Self { m }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// A pure qubit `cos θ |0⟩ + e^{iφ} sin θ |1⟩` in canonical form:
/// `θ ∈ [0, π/2]`, `φ ∈ [0, 2π)`, and `φ = 0` at the poles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureQubit {
    theta: f64,
    phi: f64,
}

fn wrap_two_pi(phi: f64) -> f64 {
    let w = phi.rem_euclid(TWO_PI);
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

fn check_angle(name: &str, v: f64, hi: f64, hi_inclusive: bool) -> Result<()> {
    let ok = v.is_finite() && v >= 0.0 && if hi_inclusive { v <= hi } else { v < hi };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} outside [0, {hi}{}", if hi_inclusive { "]" } else { ")" })))
    }
}

impl PureQubit {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        check_angle("theta", theta, FRAC_PI_2, true)?;
        check_angle("phi", phi, TWO_PI, false)?;
        Ok(Self::from_angles_any(theta, phi))
    }

    /// Canonical form of `cos θ |0⟩ + e^{iφ} sin θ |1⟩` for arbitrary real
    /// angles (global phase discarded).
    pub fn from_angles_any(theta: f64, phi: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_amplitudes(C64::new(c, 0.0), C64::from_polar(s, phi))
            .expect("unit amplitudes are never zero")
    }

    /// Canonical form of the (not necessarily normalized) ket `a₀|0⟩ + a₁|1⟩`.
    pub fn from_amplitudes(a0: C64, a1: C64) -> Result<Self> {
        let r0 = a0.norm();
        let r1 = a1.norm();
        let n = r0.hypot(r1);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain("zero or non-finite qubit amplitudes".into()));
        }
        let theta = r1.atan2(r0);
        let phi = if r0 <= POLE_EPS * n || r1 <= POLE_EPS * n {
            0.0
        } else {
            wrap_two_pi(a1.arg() - a0.arg())
        };
        let theta = if r1 <= POLE_EPS * n {
            0.0
        } else if r0 <= POLE_EPS * n {
            FRAC_PI_2
        } else {
            theta
        };
        Ok(Self { theta, phi })
    }

    pub fn from_bloch(v: BlochVector) -> Result<Self> {
        let u = v
            .normalized()
            .ok_or_else(|| Error::Domain("zero Bloch vector has no pure state".into()))?;
        let theta = 0.5 * u.z.clamp(-1.0, 1.0).acos();
        let phi = u.y.atan2(u.x);
        Ok(Self::from_angles_any(theta, phi))
    }

    pub fn zero() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    pub fn one() -> Self {
        Self { theta: FRAC_PI_2, phi: 0.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        let (s, c) = self.theta.sin_cos();
        [C64::new(c, 0.0), C64::from_polar(s, self.phi)]
    }

    pub fn bloch(&self) -> BlochVector {
        bloch_from_angles_unchecked(self.theta, self.phi)
    }

    /// `ψ⊗ψ` in the triplet basis `(|00⟩, |11⟩, (|01⟩+|10⟩)/√2)`.
    pub fn pair_ket(&self) -> [C64; 3] {
        let [a0, a1] = self.amplitudes();
        [a0 * a0, a1 * a1, SQRT_2 * a0 * a1]
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &Self) -> f64 {
        let [a0, a1] = self.amplitudes();
        let [b0, b1] = other.amplitudes();
        (a0.conj() * b0 + a1.conj() * b1).norm_sqr()
    }
}

fn bloch_from_angles_unchecked(theta: f64, phi: f64) -> BlochVector {
    let (s2, c2) = (2.0 * theta).sin_cos();
    let (sp, cp) = phi.sin_cos();
    BlochVector::new(s2 * cp, s2 * sp, c2)
}

/// `(sin 2θ cos φ, sin 2θ sin φ, cos 2θ)`.
pub fn bloch_from_angles(theta: f64, phi: f64) -> Result<BlochVector> {
    check_angle("theta", theta, FRAC_PI_2, true)?;
    check_angle("phi", phi, TWO_PI, false)?;
    Ok(bloch_from_angles_unchecked(theta, phi))
}

/// The five angles `(θ₀, φ₀, θ₁, φ₁, α)` with `p₀ = cos²α`, `p₁ = sin²α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub theta0: f64,
    pub phi0: f64,
    pub theta1: f64,
    pub phi1: f64,
    pub alpha: f64,
}

impl ParamVector {
    pub fn new(theta0: f64, phi0: f64, theta1: f64, phi1: f64, alpha: f64) -> Result<Self> {
        check_angle("theta0", theta0, FRAC_PI_2, true)?;
        check_angle("phi0", phi0, TWO_PI, false)?;
        check_angle("theta1", theta1, FRAC_PI_2, true)?;
        check_angle("phi1", phi1, TWO_PI, false)?;
        check_angle("alpha", alpha, FRAC_PI_2, true)?;
        Ok(Self { theta0, phi0, theta1, phi1, alpha })
    }

    /// Maps arbitrary real angles onto the canonical box while keeping the
    /// physical source unchanged: states are re-expressed in canonical form
    /// and `α` is folded so that `cos²α` is preserved.
    pub fn from_raw(raw: [f64; 5]) -> Self {
        let s0 = PureQubit::from_angles_any(raw[0], raw[1]);
        let s1 = PureQubit::from_angles_any(raw[2], raw[3]);
        let (sa, ca) = raw[4].sin_cos();
        let alpha = sa.abs().atan2(ca.abs());
        Self::from_states(s0, s1, alpha)
    }

    fn from_states(s0: PureQubit, s1: PureQubit, alpha: f64) -> Self {
        Self {
            theta0: s0.theta,
            phi0: s0.phi,
            theta1: s1.theta,
            phi1: s1.phi,
            alpha,
        }
    }

    pub fn from_qubits(s0: PureQubit, s1: PureQubit, p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::Domain(format!("p0 = {p0} outside [0, 1]")));
        }
        Ok(Self::from_states(s0, s1, p0.sqrt().acos()))
    }

    pub fn from_bloch(a: BlochVector, b: BlochVector, p0: f64) -> Result<Self> {
        Self::from_qubits(PureQubit::from_bloch(a)?, PureQubit::from_bloch(b)?, p0)
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.theta0, self.phi0, self.theta1, self.phi1, self.alpha]
    }

    pub fn state0(&self) -> PureQubit {
        PureQubit { theta: self.theta0, phi: self.phi0 }
    }

    pub fn state1(&self) -> PureQubit {
        PureQubit { theta: self.theta1, phi: self.phi1 }
    }

    pub fn p0(&self) -> f64 {
        let c = self.alpha.cos();
        c * c
    }

    pub fn p1(&self) -> f64 {
        1.0 - self.p0()
    }

    pub fn swapped(&self) -> Self {
        Self {
            theta0: self.theta1,
            phi0: self.phi1,
            theta1: self.theta0,
            phi1: self.phi0,
            alpha: FRAC_PI_2 - self.alpha,
        }
    }

    pub fn ensemble_state(&self) -> SymmetricTwoQubitState {
        ensemble_state(self)
    }

    /// Triplet-sector matrix `p₀|w₀⟩⟨w₀| + p₁|w₁⟩⟨w₁|` built from the pair kets.
    pub fn triplet_matrix(&self) -> TripletMatrix {
        let w0 = self.state0().pair_ket();
        let w1 = self.state1().pair_ket();
        let m = linalg::add(
            &linalg::scale(&linalg::outer(&w0, &w0), C64::new(self.p0(), 0.0)),
            &linalg::scale(&linalg::outer(&w1, &w1), C64::new(self.p1(), 0.0)),
        );
        TripletMatrix(m)
    }
}

/// `s = p₀a + p₁b`, `C = p₀aa + p₁bb`.
pub fn ensemble_state(params: &ParamVector) -> SymmetricTwoQubitState {
    let a = params.state0().bloch();
    let b = params.state1().bloch();
    let (p0, p1) = (params.p0(), params.p1());
    let s = a * p0 + b * p1;
    let aa = a.dyad(a);
    let bb = b.dyad(b);
    let c: [[f64; 3]; 3] = std::array::from_fn(|j| std::array::from_fn(|k| p0 * aa[j][k] + p1 * bb[j][k]));
    SymmetricTwoQubitState::new(s, CorrelationDyad::from_matrix(c))
}

/// The `(s, C)` moment representation of a swap-symmetric two-qubit operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricTwoQubitState {
    pub s: BlochVector,
    pub c: CorrelationDyad,
}

impl SymmetricTwoQubitState {
    pub fn new(s: BlochVector, c: CorrelationDyad) -> Self {
        Self { s, c }
    }

    /// The two-qubit singlet: `s = 0`, `C = -𝟙`.
    pub fn singlet() -> Self {
        Self::new(BlochVector::default(), CorrelationDyad::identity().scaled(-1.0))
    }

    /// `tr(I_sg ρ) = ¼(1 - tr C)`.
    pub fn singlet_weight(&self) -> f64 {
        0.25 * (1.0 - self.c.trace())
    }

    /// `C - s s`.
    pub fn connected_correlation(&self) -> CorrelationDyad {
        let ss = self.s.dyad(self.s);
        CorrelationDyad::from_matrix(std::array::from_fn(|j| {
            std::array::from_fn(|k| self.c.get(j, k) - ss[j][k])
        }))
    }

    /// Removes the singlet admixture `w I_sg` and renormalizes the remaining
    /// triplet part. Returns `None` when nothing is left (`w = 1`).
    pub fn without_singlet(&self) -> Option<Self> {
        let w = self.singlet_weight();
        let keep = 1.0 - w;
        if keep.abs() < 1e-300 {
            return None;
        }
        let c = self.c.plus(&CorrelationDyad::identity().scaled(w)).scaled(1.0 / keep);
        Some(Self::new(self.s * (1.0 / keep), c))
    }

    /// The full 4×4 matrix in the computational basis `|00⟩,|01⟩,|10⟩,|11⟩`.
    pub fn to_matrix4(&self) -> CMat<4> {
        let sig = linalg::pauli();
        let id2 = linalg::identity::<2>();
        let s = self.s.to_array();
        let mut m = linalg::identity::<4>();
        for j in 0..3 {
            let sj = C64::new(s[j], 0.0);
            m = linalg::add(&m, &linalg::scale(&linalg::kron(&sig[j], &id2), sj));
            m = linalg::add(&m, &linalg::scale(&linalg::kron(&id2, &sig[j]), sj));
            for k in 0..3 {
                let cjk = C64::new(self.c.get(j, k), 0.0);
                m = linalg::add(&m, &linalg::scale(&linalg::kron(&sig[j], &sig[k]), cjk));
            }
        }
        linalg::scale(&m, C64::new(0.25, 0.0))
    }

    /// Eigenvalues of the 4×4 matrix, ascending.
    pub fn eigenvalues4(&self) -> [f64; 4] {
        linalg::hermitian_eigen(&self.to_matrix4()).values
    }

    /// Triplet-sector block `P_tp ρ P_tp` (trace `1 - w`) and the discarded
    /// singlet weight `w`.
    pub fn triplet_projection(&self) -> (TripletMatrix, f64) {
        (self.to_triplet_matrix(), self.singlet_weight())
    }

    /// Triplet-sector block of ρ. States with a singlet admixture are
    /// projected; see [`Self::triplet_projection`] for the discarded weight.
    pub fn to_triplet_matrix(&self) -> TripletMatrix {
        let [sx, sy, sz] = self.s.to_array();
        let c = |j, k| self.c.get(j, k);
        let m00 = 0.25 * (1.0 + 2.0 * sz + c(2, 2));
        let m11 = 0.25 * (1.0 - 2.0 * sz + c(2, 2));
        let m22 = 0.25 * (1.0 - c(2, 2) + c(0, 0) + c(1, 1));
        let m01 = C64::new(0.25 * (c(0, 0) - c(1, 1)), -0.5 * c(0, 1));
        let k = SQRT_2 / 4.0;
        let m02 = C64::new(k * (sx + c(0, 2)), -k * (sy + c(1, 2)));
        let m12 = C64::new(k * (sx - c(0, 2)), k * (sy - c(1, 2)));
        TripletMatrix([
            [C64::new(m00, 0.0), m01, m02],
            [m01.conj(), C64::new(m11, 0.0), m12],
            [m02.conj(), m12.conj(), C64::new(m22, 0.0)],
        ])
    }

    /// Whether the 4×4 matrix is positive semidefinite within `tol`.
    pub fn is_positive(&self, tol: f64) -> bool {
        self.eigenvalues4()[0] >= -tol
    }
}

/// Convenience wrapper for [`SymmetricTwoQubitState::triplet_projection`].
pub fn to_triplet_matrix(state: &SymmetricTwoQubitState) -> (TripletMatrix, f64) {
    state.triplet_projection()
}

pub fn from_triplet_matrix(m: &TripletMatrix) -> SymmetricTwoQubitState {
    m.to_moments()
}

/// Hermitian 3×3 matrix in the triplet basis `(|00⟩, |11⟩, (|01⟩+|10⟩)/√2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletMatrix(pub CMat<3>);

impl TripletMatrix {
    pub fn identity_over_3() -> Self {
        Self(linalg::scale(&linalg::identity::<3>(), C64::new(1.0 / 3.0, 0.0)))
    }

    pub fn diag(d: [f64; 3]) -> Self {
        let mut m = linalg::zeros::<3>();
        for i in 0..3 {
            m[i][i] = C64::new(d[i], 0.0);
        }
        Self(m)
    }

    pub fn from_ket(w: &[C64; 3]) -> Self {
        Self(linalg::outer(w, w))
    }

    pub fn matrix(&self) -> &CMat<3> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.0).re
    }

    pub fn normalized(&self) -> Self {
        Self(linalg::scale(&self.0, C64::new(1.0 / self.trace(), 0.0)))
    }

    pub fn eigen(&self) -> linalg::HermitianEigen<3> {
        linalg::hermitian_eigen(&self.0)
    }

    pub fn expectation(&self, v: &[C64; 3]) -> f64 {
        let mv: [C64; 3] = std::array::from_fn(|i| (0..3).map(|j| self.0[i][j] * v[j]).sum());
        linalg::inner(v, &mv).re
    }

    /// Inverse of [`SymmetricTwoQubitState::to_triplet_matrix`] for
    /// unit-trace triplet matrices.
    pub fn to_moments(&self) -> SymmetricTwoQubitState {
        let m = &self.0;
        let (m00, m11, m22) = (m[0][0].re, m[1][1].re, m[2][2].re);
        let czz = 2.0 * (m00 + m11) - 1.0;
        let sz = m00 - m11;
        let sum_xy = 4.0 * m22 - 1.0 + czz;
        let diff_xy = 4.0 * m[0][1].re;
        let cxy = -2.0 * m[0][1].im;
        let sxy = SQRT_2 * (m[0][2] + m[1][2].conj());
        let czxy = SQRT_2 * (m[0][2] - m[1][2].conj());
        let cxx = 0.5 * (sum_xy + diff_xy);
        let cyy = 0.5 * (sum_xy - diff_xy);
        let c = [
            [cxx, cxy, czxy.re],
            [cxy, cyy, -czxy.im],
            [czxy.re, -czxy.im, czz],
        ];
        SymmetricTwoQubitState::new(
            BlochVector::new(sxy.re, -sxy.im, sz),
            CorrelationDyad::from_matrix(c),
        )
    }
}

/// Basis change from the triplet basis to the computational basis (4×3).
pub fn triplet_basis() -> [[C64; 3]; 4] {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    [
        [ONE, ZERO, ZERO],
        [ZERO, ZERO, h],
        [ZERO, ZERO, h],
        [ZERO, ONE, ZERO],
    ]
}

/// Embeds a triplet matrix into the 4×4 computational-basis matrix.
pub fn triplet_to_matrix4(m: &TripletMatrix) -> CMat<4> {
    let b = triplet_basis();
    let mut out = linalg::zeros::<4>();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = ZERO;
            for k in 0..3 {
                for l in 0..3 {
                    acc += b[i][k] * m.0[k][l] * b[j][l].conj();
                }
            }
            out[i][j] = acc;
        }
    }
    out
}
