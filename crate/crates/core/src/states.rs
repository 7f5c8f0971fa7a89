//! Polarised spin states in the (N+1)-dimensional symmetric representation.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numkernel::{outer_product, ComplexMatrix};

/// Largest particle count for which dense operators are built.
pub const DENSE_CAP: usize = 512;

/// Polarisation direction in the x–y plane, measured from the x-axis and
/// canonicalised to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PolarisationAngle(f64);

impl PolarisationAngle {
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidAngle {
                name: "theta",
                value: theta,
            });
        }
        let mut t = theta.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2π for tiny negative input.
        if t >= TAU {
            t = 0.0;
        }
        Ok(Self(t))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Half the angular separation of two polarisation directions, in `[0, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HalfAngle(f64);

impl HalfAngle {
    pub fn new(delta: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&delta) {
            return Err(Error::InvalidAngle {
                name: "delta",
                value: delta,
            });
        }
        Ok(Self(delta))
    }

    /// `|wrap(θ₂ − θ₁)| / 2` with the difference wrapped into `(−π, π]`.
    pub fn between(theta1: PolarisationAngle, theta2: PolarisationAngle) -> Self {
        let mut d = (theta2.0 - theta1.0).rem_euclid(TAU);
        if d > PI {
            d -= TAU;
        }
        Self((d.abs() / 2.0).min(FRAC_PI_2))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Pure density operator of `particle_count` spin-1/2 particles polarised
/// along a common direction, as one spin-N/2 system.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    particle_count: usize,
}

impl DensityOperator {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn particle_count(&self) -> usize {
        self.particle_count
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Wraps an arbitrary matrix as a state with `dim - 1` particles.
    /// Only dimension and Hermiticity are checked.
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        let asymmetry = matrix.hermiticity_defect();
        if asymmetry > 1e-12 {
            return Err(Error::NotHermitian { asymmetry });
        }
        let particle_count = matrix.dim().saturating_sub(1);
        Ok(Self {
            matrix,
            particle_count,
        })
    }

    /// `‖ρ² − ρ‖∞`.
    pub fn purity_defect(&self) -> f64 {
        (&self.matrix * &self.matrix).max_abs_diff(&self.matrix)
    }
}

/// The vector `u` with `uₙ = 2^(−N/2) √C(N,n) e^{inθ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    entries: Vec<Complex64>,
}

impl AmplitudeVector {
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `Σₙ aₙ bₙ*`.
    pub fn dot_conj(&self, other: &Self) -> Complex64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b.conj())
            .sum()
    }
}

fn check_particles(n: usize) -> Result<()> {
    if n == 0 || n > DENSE_CAP {
        return Err(Error::ParticleCount { n, cap: DENSE_CAP });
    }
    Ok(())
}

/// `ln k!` for `k = 0..=n`, accumulated with compensated summation.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    out.push(0.0);
    for k in 1..=n {
        let x = (k as f64).ln();
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

/// `ln C(n, k)` for every `k = 0..=n`.
pub(crate) fn ln_binomials(n: usize) -> Vec<f64> {
    let lf = ln_factorials(n);
    (0..=n).map(|k| lf[n] - lf[k] - lf[n - k]).collect()
}

/// Single-particle state: `ensemble_density(theta, 1)`.
pub fn qubit_density(theta: PolarisationAngle) -> DensityOperator {
    ensemble_density(theta, 1).expect("one particle is always within the dense cap")
}

/// Entry `(m, n)` is `2^{−N} √(C(N,m) C(N,n)) e^{−i(m−n)θ}`.
pub fn ensemble_density(theta: PolarisationAngle, n_particles: usize) -> Result<DensityOperator> {
    check_particles(n_particles)?;
    let lnc = ln_binomials(n_particles);
    let ln2n = n_particles as f64 * std::f64::consts::LN_2;
    let th = theta.radians();
    let matrix = ComplexMatrix::from_fn(n_particles + 1, |m, n| {
        let magnitude = (0.5 * (lnc[m] + lnc[n]) - ln2n).exp();
        let phase = -((m as f64) - (n as f64)) * th;
        Complex64::from_polar(magnitude, phase)
    })?;
    Ok(DensityOperator {
        matrix,
        particle_count: n_particles,
    })
}

pub fn amplitude_vector(theta: PolarisationAngle, n_particles: usize) -> Result<AmplitudeVector> {
    check_particles(n_particles)?;
    let lnc = ln_binomials(n_particles);
    let half_ln2n = 0.5 * n_particles as f64 * std::f64::consts::LN_2;
    let th = theta.radians();
    let entries = lnc
        .iter()
        .enumerate()
        .map(|(n, l)| Complex64::from_polar((0.5 * l - half_ln2n).exp(), n as f64 * th))
        .collect();
    Ok(AmplitudeVector { entries })
}

/// Density operator rebuilt as `u* uᵀ` from the amplitude vector.
pub fn density_from_amplitudes(u: &AmplitudeVector) -> Result<DensityOperator> {
    let matrix = outer_product(u.entries(), u.entries())?;
    Ok(DensityOperator {
        particle_count: matrix.dim() - 1,
        matrix,
    })
}

/// Squared overlap of the two N-particle hypothesis states, `cos^{2N} δ`.
pub fn overlap_delta_squared(delta: HalfAngle, n_particles: usize) -> f64 {
    // sin(π/2 − δ) is exactly zero for orthogonal states, cos δ is not.
    let value = (std::f64::consts::FRAC_PI_2 - delta.radians())
        .sin()
        .powi(2 * n_particles as i32);
    debug_assert!(
        n_particles > 64 || (value - overlap_binomial_sum(delta, n_particles)).abs() <= 1e-12,
        "binomial-sum and closed-form overlaps disagree"
    );
    value
}

/// `|2^{−N} Σₘ C(N,m) e^{2imδ}|²`, the overlap evaluated term by term.
pub fn overlap_binomial_sum(delta: HalfAngle, n_particles: usize) -> f64 {
    let lnc = ln_binomials(n_particles);
    let ln2n = n_particles as f64 * std::f64::consts::LN_2;
    let two_delta = 2.0 * delta.radians();
    let sum: Complex64 = lnc
        .iter()
        .enumerate()
        .map(|(m, l)| Complex64::from_polar((l - ln2n).exp(), m as f64 * two_delta))
        .sum();
    sum.norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{hermitian_eigen, DEFAULT_EIGEN_TOL};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3};

    fn angle(t: f64) -> PolarisationAngle {
        PolarisationAngle::new(t).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn angle_canonicalisation() {
        assert_eq!(angle(-0.5).radians(), TAU - 0.5);
        assert_eq!(angle(TAU).radians(), 0.0);
        assert!(angle(-1e-18).radians() < TAU);
        assert!(PolarisationAngle::new(f64::NAN).is_err());
    }

    #[test]
    fn half_angle_from_angles() {
        let d = HalfAngle::between(angle(0.1), angle(TAU - 0.1));
        assert!((d.radians() - 0.1).abs() < 1e-15);
        let d = HalfAngle::between(angle(0.0), angle(PI));
        assert!((d.radians() - FRAC_PI_2).abs() < 1e-15);
        assert!(HalfAngle::new(2.0).is_err());
        assert!(HalfAngle::new(-0.1).is_err());
    }

    #[test]
    fn qubit_density_examples() {
        let rho = qubit_density(angle(0.0));
        assert!(
            rho.matrix()
                .max_abs_diff(&ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap())
                < 1e-15
        );

        let rho = qubit_density(angle(PI));
        assert!((rho.matrix().get(0, 1) - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((rho.matrix().get(1, 0) - c(-0.5, 0.0)).norm() < 1e-15);

        let rho = qubit_density(angle(0.7));
        // Index convention: (0,1) carries e^{+iθ}/2 since m - n = -1.
        assert!((rho.matrix().get(0, 1) - Complex64::from_polar(0.5, 0.7)).norm() < 1e-15);
        assert!((rho.matrix().trace() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(rho.purity_defect() < 1e-15);
    }

    #[test]
    fn ensemble_density_two_particles() {
        let rho = ensemble_density(angle(0.0), 2).unwrap();
        let s = std::f64::consts::SQRT_2;
        let expected =
            ComplexMatrix::from_real_rows(&[&[1.0, s, 1.0], &[s, 2.0, s], &[1.0, s, 1.0]])
                .unwrap()
                .scale(0.25);
        assert!(rho.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn ensemble_density_matches_qubit_and_outer_product() {
        for &t in &[0.0, 0.3, 2.0, 5.5] {
            let one = ensemble_density(angle(t), 1).unwrap();
            assert!(one.matrix().max_abs_diff(qubit_density(angle(t)).matrix()) < 1e-15);
            for n in [1, 2, 5, 17] {
                let rho = ensemble_density(angle(t), n).unwrap();
                let u = amplitude_vector(angle(t), n).unwrap();
                let via_u = density_from_amplitudes(&u).unwrap();
                assert!(rho.matrix().max_abs_diff(via_u.matrix()) < 1e-14);
            }
        }
    }

    #[test]
    fn amplitude_vector_examples() {
        let u = amplitude_vector(angle(0.0), 1).unwrap();
        for z in u.entries() {
            assert!((z - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
        let u = amplitude_vector(angle(0.0), 2).unwrap();
        let want = [0.5, FRAC_1_SQRT_2, 0.5];
        for (z, w) in u.entries().iter().zip(want) {
            assert!((z - c(w, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn density_fixes_conjugate_amplitudes() {
        for n in [1, 3, 10] {
            let th = angle(1.1);
            let rho = ensemble_density(th, n).unwrap();
            let u = amplitude_vector(th, n).unwrap();
            let conj_u: Vec<Complex64> = u.entries().iter().map(|z| z.conj()).collect();
            let image = rho.matrix().mul_vec(&conj_u);
            for (a, b) in image.iter().zip(&conj_u) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn ensemble_density_is_a_pure_state() {
        for n in [1, 2, 8, 33, 64] {
            for &t in &[0.0, 0.9, 3.3] {
                let rho = ensemble_density(angle(t), n).unwrap();
                assert!(rho.matrix().hermiticity_defect() <= 1e-12);
                assert!((rho.matrix().trace() - c(1.0, 0.0)).norm() <= 1e-12);
                assert!(rho.purity_defect() <= 1e-10);
                let d = hermitian_eigen(rho.matrix(), DEFAULT_EIGEN_TOL).unwrap();
                assert!(d.eigenvalues[0] >= -1e-12);
            }
        }
    }

    #[test]
    fn overlap_examples() {
        for n in [1, 4, 20] {
            assert_eq!(overlap_delta_squared(HalfAngle::new(0.0).unwrap(), n), 1.0);
            assert!(overlap_delta_squared(HalfAngle::new(FRAC_PI_2).unwrap(), n) < 1e-30);
        }
        let d = HalfAngle::new(FRAC_PI_3).unwrap();
        assert!((overlap_delta_squared(d, 3) - 0.015625).abs() < 1e-15);
        // Hand evaluation: |2^-3 (1 + e^{2iπ/3})^3|^2 = |(e^{iπ/3})^3|^2 / 64.
        let hand =
            (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, 2.0 * FRAC_PI_3)).powi(3) / 8.0;
        assert!((overlap_binomial_sum(d, 3) - hand.norm_sqr()).abs() < 1e-15);
    }

    #[test]
    fn rejects_particle_counts_outside_cap() {
        assert!(matches!(
            ensemble_density(angle(0.0), 0),
            Err(Error::ParticleCount { .. })
        ));
        assert!(matches!(
            amplitude_vector(angle(0.0), DENSE_CAP + 1),
            Err(Error::ParticleCount { .. })
        ));
    }

    #[test]
    fn amplitude_overlap_matches_delta_squared() {
        let (t1, t2) = (angle(0.4), angle(1.5));
        let delta = HalfAngle::between(t1, t2);
        for n in [1, 6, 40] {
            let u = amplitude_vector(t1, n).unwrap();
            let v = amplitude_vector(t2, n).unwrap();
            assert!((u.norm() - 1.0).abs() < 1e-12);
            let overlap = u.dot_conj(&v).norm_sqr();
            assert!((overlap - overlap_delta_squared(delta, n)).abs() < 1e-12);
        }
    }
}
