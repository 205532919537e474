//! Small dense complex matrices: Hermitian eigendecomposition by cyclic
//! Jacobi rotations, plus the Pauli/Kronecker helpers used to build
//! two-qubit operators.

use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat<const N: usize> = [[C64; N]; N];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 64;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as columns.
#[derive(Debug, Clone, Copy)]
pub struct HermitianEigen<const N: usize> {
    pub values: [f64; N],
    pub vectors: CMat<N>,
}

impl<const N: usize> HermitianEigen<N> {
    pub fn vector(&self, k: usize) -> [C64; N] {
        let mut v = [ZERO; N];
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = self.vectors[i][k];
        }
        v
    }
}

pub fn zeros<const N: usize>() -> CMat<N> {
    [[ZERO; N]; N]
}

pub fn identity<const N: usize>() -> CMat<N> {
    let mut m = zeros::<N>();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = ONE;
    }
    m
}

pub fn matmul<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> CMat<N> {
    let mut out = zeros::<N>();
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            if aik == ZERO {
                continue;
            }
            for j in 0..N {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn adjoint<const N: usize>(a: &CMat<N>) -> CMat<N> {
    let mut out = zeros::<N>();
    for i in 0..N {
        for j in 0..N {
            out[j][i] = a[i][j].conj();
        }
    }
    out
}

pub fn trace<const N: usize>(a: &CMat<N>) -> C64 {
    (0..N).map(|i| a[i][i]).sum()
}

/// `tr(A B)` without forming the product.
pub fn trace_product<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> C64 {
    let mut acc = ZERO;
    for i in 0..N {
        for k in 0..N {
            acc += a[i][k] * b[k][i];
        }
    }
    acc
}

pub fn scale<const N: usize>(a: &CMat<N>, s: C64) -> CMat<N> {
    let mut out = *a;
    out.iter_mut().flatten().for_each(|x| *x *= s);
    out
}

pub fn add<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> CMat<N> {
    let mut out = *a;
    for i in 0..N {
        for j in 0..N {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn sub<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> CMat<N> {
    add(a, &scale(b, -ONE))
}

pub fn outer<const N: usize>(u: &[C64; N], v: &[C64; N]) -> CMat<N> {
    let mut out = zeros::<N>();
    for i in 0..N {
        for j in 0..N {
            out[i][j] = u[i] * v[j].conj();
        }
    }
    out
}

pub fn inner<const N: usize>(u: &[C64; N], v: &[C64; N]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn frobenius_norm<const N: usize>(a: &CMat<N>) -> f64 {
    a.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_defect<const N: usize>(a: &CMat<N>) -> f64 {
    max_abs_diff(a, &adjoint(a))
}

/// Pauli matrices σ_x, σ_y, σ_z.
pub fn pauli() -> [CMat<2>; 3] {
    [
        [[ZERO, ONE], [ONE, ZERO]],
        [[ZERO, -I], [I, ZERO]],
        [[ONE, ZERO], [ZERO, -ONE]],
    ]
}

pub fn kron(a: &CMat<2>, b: &CMat<2>) -> CMat<4> {
    let mut out = zeros::<4>();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Rotates the vector so that its largest-modulus entry (first one on ties)
/// is real and positive.
pub fn canonical_phase<const N: usize>(v: &mut [C64; N]) {
    let max = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|x| x.norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    v.iter_mut().for_each(|x| *x *= phase);
    v[pivot] = C64::new(v[pivot].re, 0.0);
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Only the Hermitian part of the input is used.
pub fn hermitian_eigen<const N: usize>(input: &CMat<N>) -> HermitianEigen<N> {
    let mut a = zeros::<N>();
    for i in 0..N {
        a[i][i] = C64::new(input[i][i].re, 0.0);
        for j in (i + 1)..N {
            let h = 0.5 * (input[i][j] + input[j][i].conj());
            a[i][j] = h;
            a[j][i] = h.conj();
        }
    }
    let mut v = identity::<N>();
    let scale_sq = frobenius_norm(&a).powi(2).max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..N)
            .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j].norm_sqr())
            .sum();
        if off <= JACOBI_TOL * JACOBI_TOL * scale_sq {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[p][q];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                // unitary V = diag(1, u) · real rotation, zeroing a[p][q]
                let u = apq.conj() / r;
                let tau = (a[q][q].re - a[p][p].re) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for row in a.iter_mut() {
                    let xp = row[p];
                    let xq = row[q];
                    row[p] = c * xp - s * u * xq;
                    row[q] = s * xp + c * u * xq;
                }
                for k in 0..N {
                    let xp = a[p][k];
                    let xq = a[q][k];
                    a[p][k] = c * xp - s * u.conj() * xq;
                    a[q][k] = s * xp + c * u.conj() * xq;
                }
                a[p][q] = ZERO;
                a[q][p] = ZERO;
                a[p][p] = C64::new(a[p][p].re, 0.0);
                a[q][q] = C64::new(a[q][q].re, 0.0);

                for row in v.iter_mut() {
                    let xp = row[p];
                    let xq = row[q];
                    row[p] = c * xp - s * u * xq;
                    row[q] = s * xp + c * u * xq;
                }
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| a[i][i].re.total_cmp(&a[j][j].re));
    let mut values = [0.0; N];
    let mut vectors = zeros::<N>();
    for (k, &src) in order.iter().enumerate() {
        values[k] = a[src][src].re;
        let mut col: [C64; N] = std::array::from_fn(|i| v[i][src]);
        canonical_phase(&mut col);
        for i in 0..N {
            vectors[i][k] = col[i];
        }
    }
    HermitianEigen { values, vectors }
}

pub fn real_symmetric_eigen3(m: &[[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let cm: CMat<3> = std::array::from_fn(|i| std::array::from_fn(|j| C64::new(m[i][j], 0.0)));
    let eig = hermitian_eigen(&cm);
    let vecs = std::array::from_fn(|i| std::array::from_fn(|j| eig.vectors[i][j].re));
    (eig.values, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct<const N: usize>(e: &HermitianEigen<N>) -> CMat<N> {
        let mut out = zeros::<N>();
        for k in 0..N {
            let v = e.vector(k);
            out = add(&out, &scale(&outer(&v, &v), C64::new(e.values[k], 0.0)));
        }
        out
    }

    #[test]
    fn diagonal_input_is_sorted() {
        let mut m = zeros::<3>();
        m[0][0] = C64::new(1.0, 0.0);
        m[1][1] = C64::new(0.5, 0.0);
        let e = hermitian_eigen(&m);
        assert_eq!(e.values, [0.0, 0.5, 1.0]);
        let v0 = e.vector(0);
        assert!((v0[2] - ONE).norm() < 1e-15);
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let m: CMat<3> = [
            [C64::new(0.4, 0.0), C64::new(0.1, -0.2), C64::new(-0.05, 0.3)],
            [C64::new(0.1, 0.2), C64::new(0.35, 0.0), C64::new(0.0, 0.1)],
            [C64::new(-0.05, -0.3), C64::new(0.0, -0.1), C64::new(0.25, 0.0)],
        ];
        let e = hermitian_eigen(&m);
        assert!(max_abs_diff(&reconstruct(&e), &m) < 1e-13);
        for j in 0..3 {
            for k in 0..3 {
                let ip = inner(&e.vector(j), &e.vector(k));
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((ip - C64::new(expect, 0.0)).norm() < 1e-13);
            }
        }
        assert!(e.values[0] <= e.values[1] && e.values[1] <= e.values[2]);
    }

    #[test]
    fn four_by_four_spectrum() {
        let [x, y, z] = pauli();
        // σ·σ has eigenvalues {-3, 1, 1, 1}
        let ss = add(&add(&kron(&x, &x), &kron(&y, &y)), &kron(&z, &z));
        let e = hermitian_eigen(&ss);
        let expect = [-3.0, 1.0, 1.0, 1.0];
        for (a, b) in e.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn degenerate_input_gives_deterministic_vectors() {
        let m = scale(&identity::<3>(), C64::new(1.0 / 3.0, 0.0));
        let e1 = hermitian_eigen(&m);
        let e2 = hermitian_eigen(&m);
        assert_eq!(e1.vectors, e2.vectors);
        assert!((e1.values[0] - 1.0 / 3.0).abs() < 1e-15);
    }
}
