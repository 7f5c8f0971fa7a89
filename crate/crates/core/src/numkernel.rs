//! Dense complex matrices and a cyclic Jacobi eigensolver for Hermitian input.
//!
//! Storage is row-major: entry `(r, c)` lives at `r * dim + c`. The matrices
//! handled here are small (at most a few hundred rows), so there is no
//! blocked or sparse path.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute Hermiticity tolerance applied before eigendecomposition.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Default convergence threshold: off-diagonal Frobenius mass relative to `‖m‖_F`.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-14;
/// Sweep cap for the Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting NaN or infinite values.
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if let Some(k) = data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite {
                row: k / dim,
                col: k % dim,
            });
        }
        Ok(Self { dim, data })
    }

    /// Builds a real matrix from nested rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        Self::from_row_major(dim, data)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self::from_row_major(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        trace(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `m - m†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.dim, v.len(), "dimension mismatch");
        (0..self.dim)
            .map(|r| {
                self.data[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    fn check_same_dim(&self, other: &Self) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.check_same_dim(rhs);
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.check_same_dim(rhs);
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.check_same_dim(rhs);
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        out
    }
}

/// Sum of the diagonal entries.
pub fn trace(m: &ComplexMatrix) -> Complex64 {
    (0..m.dim).map(|i| m.get(i, i)).sum()
}

/// `result[m][n] = conj(a[m]) * b[n]`.
///
/// With `a = b = u` this is the pure-state density matrix whose entries are
/// `u*_m u_n`, the convention used by [`crate::states::ensemble_density`].
pub fn outer_product(a: &[Complex64], b: &[Complex64]) -> Result<ComplexMatrix> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    ComplexMatrix::from_fn(a.len(), |r, c| a[r].conj() * b[c])
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        let n = self.eigenvectors.dim();
        (0..n).map(|r| self.eigenvectors.get(r, k)).collect()
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvectors.dim();
        let mut out = ComplexMatrix::zeros(n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            for r in 0..n {
                let vr = self.eigenvectors.get(r, k) * lambda;
                for c in 0..n {
                    let idx = r * n + c;
                    out.data[idx] += vr * self.eigenvectors.get(c, k).conj();
                }
            }
        }
        out
    }

    /// Orthogonal projector onto the span of the eigenvectors selected by `keep`.
    pub fn projector(&self, mut keep: impl FnMut(f64) -> bool) -> ComplexMatrix {
        let n = self.eigenvectors.dim();
        let mut out = ComplexMatrix::zeros(n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            if !keep(lambda) {
                continue;
            }
            for r in 0..n {
                let vr = self.eigenvectors.get(r, k);
                for c in 0..n {
                    out.data[r * n + c] += vr * self.eigenvectors.get(c, k).conj();
                }
            }
        }
        out
    }

    /// `max |V†V - I|` over all entries.
    pub fn orthonormality_defect(&self) -> f64 {
        let v = &self.eigenvectors;
        let gram = &v.adjoint() * v;
        gram.max_abs_diff(&ComplexMatrix::identity(v.dim()))
    }
}

/// Diagonalises a Hermitian matrix with cyclic complex Jacobi rotations.
///
/// `tol` is the convergence threshold on the off-diagonal Frobenius mass,
/// relative to the Frobenius norm of `m`; [`DEFAULT_EIGEN_TOL`] is the usual
/// choice. The sweep order is fixed, so the output is a deterministic function
/// of the input bits.
pub fn hermitian_eigen(m: &ComplexMatrix, tol: f64) -> Result<SpectralDecomposition> {
    let n = m.dim();
    let scale = m.max_abs().max(1.0);
    let asymmetry = m.hermiticity_defect();
    if asymmetry > HERMITICITY_TOL * scale {
        return Err(Error::NotHermitian { asymmetry });
    }

    // Work on the exactly Hermitian part so rounding noise cannot accumulate.
    let mut a = ComplexMatrix::from_fn(n, |r, c| {
        if r == c {
            Complex64::new(m.get(r, r).re, 0.0)
        } else {
            (m.get(r, c) + m.get(c, r).conj()) * 0.5
        }
    })?;
    let mut v = ComplexMatrix::identity(n);
    let target = tol * a.frobenius_norm();

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_mass(&a);
        if off <= target || off == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                residual: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |r, k| v.get(r, order[k]))?;
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_mass(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut sum = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                sum += a.get(r, c).norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Annihilates `a[p][q]` with `U = D·R`, where `D` rotates the phase of
/// column `q` so the pivot becomes real and `R` is the real Jacobi rotation.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let n = a.dim();
    let phase = apq / g;
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let theta = (aqq - app) / (2.0 * g);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // Columns p, q of U.
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = -phase.conj() * s;
    let u_qq = phase.conj() * c;

    // A <- A U
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, akp * u_pp + akq * u_qp);
        a.set(k, q, akp * u_pq + akq * u_qq);
    }
    // A <- U† A
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, u_pp.conj() * apk + u_qp.conj() * aqk);
        a.set(q, k, u_pq.conj() * apk + u_qq.conj() * aqk);
    }
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));
    a.set(p, p, Complex64::new(a.get(p, p).re, 0.0));
    a.set(q, q, Complex64::new(a.get(q, q).re, 0.0));

    // V <- V U
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, vkp * u_pp + vkq * u_qp);
        v.set(k, q, vkp * u_pq + vkq * u_qq);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = ComplexMatrix::zeros(dim);
        for r in 0..dim {
            m.set(r, r, c(rng.gen_range(-1.0..1.0), 0.0));
            for col in (r + 1)..dim {
                let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m.set(r, col, z);
                m.set(col, r, z.conj());
            }
        }
        m
    }

    #[test]
    fn identity_eigenvalues() {
        let d = hermitian_eigen(&ComplexMatrix::identity(3), DEFAULT_EIGEN_TOL).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let d = hermitian_eigen(&m, DEFAULT_EIGEN_TOL).unwrap();
        assert!((d.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((d.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pauli_y_has_complex_eigenvectors() {
        let m = ComplexMatrix::from_row_major(
            2,
            vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        )
        .unwrap();
        let d = hermitian_eigen(&m, DEFAULT_EIGEN_TOL).unwrap();
        assert!((d.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!(d.reconstruct().max_abs_diff(&m) < 1e-15);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let m = random_hermitian(8, 7);
        let d = hermitian_eigen(&m, DEFAULT_EIGEN_TOL).unwrap();
        // Reconstruct-and-compare oracle.
        assert!(d.reconstruct().max_abs_diff(&m) < 1e-10);
        assert!(d.orthonormality_defect() < 1e-12);
        assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = d.eigenvalues.iter().sum();
        assert!((sum - m.trace().re).abs() < 1e-10);
    }

    #[test]
    fn eigen_is_deterministic() {
        let m = random_hermitian(12, 99);
        let a = hermitian_eigen(&m, DEFAULT_EIGEN_TOL).unwrap();
        let b = hermitian_eigen(&m, DEFAULT_EIGEN_TOL).unwrap();
        let bits = |d: &SpectralDecomposition| -> Vec<u64> {
            d.eigenvalues
                .iter()
                .map(|x| x.to_bits())
                .chain(
                    d.eigenvectors
                        .as_slice()
                        .iter()
                        .flat_map(|z| [z.re.to_bits(), z.im.to_bits()]),
                )
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.5, 0.0]]).unwrap();
        match hermitian_eigen(&m, DEFAULT_EIGEN_TOL) {
            Err(Error::NotHermitian { asymmetry }) => assert!((asymmetry - 0.5).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = ComplexMatrix::from_row_major(1, vec![c(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 0, col: 0 });
    }

    #[test]
    fn trace_examples() {
        assert_eq!(trace(&ComplexMatrix::identity(4)), c(4.0, 0.0));
        let u = [c(0.6, 0.0), c(0.0, 0.8)];
        assert!((trace(&outer_product(&u, &u).unwrap()) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn outer_product_examples() {
        let e0 = [c(1.0, 0.0), c(0.0, 0.0)];
        let m = outer_product(&e0, &e0).unwrap();
        assert_eq!(
            m,
            ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap()
        );

        let a = [c(1.0, 0.0), c(1.0, 0.0)];
        let b = [c(1.0, 0.0), c(-1.0, 0.0)];
        assert!(trace(&outer_product(&a, &b).unwrap()).norm() < 1e-15);

        assert!(matches!(
            outer_product(&a, &e0[..1]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn outer_product_convention() {
        let u = [c(0.0, 1.0), c(2.0, 0.0)];
        let m = outer_product(&u, &u).unwrap();
        // (0,1) = conj(u0) * u1 = -i * 2
        assert_eq!(m.get(0, 1), c(0.0, -2.0));
    }

    #[test]
    fn psd_outer_product_has_nonnegative_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in 2..10 {
            let u: Vec<Complex64> = (0..dim)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let d = hermitian_eigen(&outer_product(&u, &u).unwrap(), DEFAULT_EIGEN_TOL).unwrap();
            assert!(d.eigenvalues[0] >= -1e-12);
        }
    }

    #[test]
    fn degenerate_and_diagonal_input() {
        let m =
            ComplexMatrix::from_real_rows(&[&[2.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 2.0]])
                .unwrap();
        let d = hermitian_eigen(&m, DEFAULT_EIGEN_TOL).unwrap();
        assert_eq!(d.eigenvalues, vec![-1.0, 2.0, 2.0]);
        let zero = hermitian_eigen(&ComplexMatrix::zeros(3), DEFAULT_EIGEN_TOL).unwrap();
        assert_eq!(zero.eigenvalues, vec![0.0; 3]);
    }
}
