//! Bayesian quantum decision theory.
//!
//! The M-ary machinery (risk operators, expected cost, the Lagrange-operator
//! optimality test) is general. Optimal measurement synthesis is provided
//! for two hypotheses only, where the optimum is a projective measurement
//! onto the positive part of `ρ₂ − γρ₁`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numkernel::{hermitian_eigen, trace, ComplexMatrix, DEFAULT_EIGEN_TOL};
use crate::states::{
    ensemble_density, overlap_delta_squared, DensityOperator, HalfAngle, PolarisationAngle,
};

/// Eigenvalues with `|η|` at or below this go to `Π₁`.
pub const ZERO_EIGENVALUE_THRESHOLD: f64 = 1e-12;
/// Tolerance used when validating POM completeness and positivity.
pub const POM_TOL: f64 = 1e-10;
/// Default tolerance for [`check_optimality`].
pub const OPTIMALITY_TOL: f64 = 1e-9;

/// A candidate state of the system together with its prior probability.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub label: String,
    pub state: DensityOperator,
    pub prior: f64,
}

impl Hypothesis {
    pub fn new(label: impl Into<String>, state: DensityOperator, prior: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&prior) {
            return Err(Error::InvalidProbability {
                name: "prior",
                value: prior,
            });
        }
        Ok(Self {
            label: label.into(),
            state,
            prior,
        })
    }
}

fn validate_hypotheses(hypotheses: &[Hypothesis]) -> Result<usize> {
    let first = hypotheses.first().ok_or(Error::InvalidConfig {
        reason: "no hypotheses".into(),
    })?;
    let dim = first.state.dim();
    for h in hypotheses {
        if h.state.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: h.state.dim(),
            });
        }
        if !(0.0..=1.0).contains(&h.prior) {
            return Err(Error::InvalidProbability {
                name: "prior",
                value: h.prior,
            });
        }
    }
    let sum: f64 = hypotheses.iter().map(|h| h.prior).sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::PriorSum { sum });
    }
    Ok(dim)
}

/// `c[i][j]`: cost of choosing hypothesis `i` when `j` is true.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        let mut entries = Vec::with_capacity(size * size);
        for row in rows {
            if row.len() != size {
                return Err(Error::InvalidCosts {
                    reason: format!("row of length {} in a {size}x{size} matrix", row.len()),
                });
            }
            if row.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidCosts {
                    reason: "non-finite cost".into(),
                });
            }
            entries.extend(row);
        }
        Ok(Self { size, entries })
    }

    /// Cost 1 for a wrong decision, 0 for a correct one.
    pub fn zero_one(size: usize) -> Self {
        let entries = (0..size * size)
            .map(|k| if k / size == k % size { 0.0 } else { 1.0 })
            .collect();
        Self { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, choose: usize, truth: usize) -> f64 {
        self.entries[choose * self.size + truth]
    }

    pub fn is_zero_one(&self) -> bool {
        *self == Self::zero_one(self.size)
    }

    fn check_binary(&self) -> Result<()> {
        if self.size != 2 {
            return Err(Error::InvalidCosts {
                reason: format!(
                    "binary decision needs a 2x2 cost matrix, got {0}x{0}",
                    self.size
                ),
            });
        }
        if !(self.get(0, 1) > self.get(1, 1) && self.get(1, 0) > self.get(0, 0)) {
            return Err(Error::InvalidCosts {
                reason: "wrong decisions must cost more than right ones (c12 > c22, c21 > c11)"
                    .into(),
            });
        }
        Ok(())
    }
}

/// A measurement: one positive operator per hypothesis, summing to identity.
#[derive(Debug, Clone)]
pub struct Pom {
    elements: Vec<ComplexMatrix>,
}

impl Pom {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = elements
            .first()
            .map(ComplexMatrix::dim)
            .ok_or_else(|| Error::InvalidPom {
                reason: "empty".into(),
            })?;
        let mut total = ComplexMatrix::zeros(dim);
        for (j, e) in elements.iter().enumerate() {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.dim(),
                });
            }
            let asym = e.hermiticity_defect();
            if asym > 1e-12 {
                return Err(Error::InvalidPom {
                    reason: format!("element {j} not Hermitian ({asym:e})"),
                });
            }
            let min = hermitian_eigen(e, DEFAULT_EIGEN_TOL)?.eigenvalues[0];
            if min < -POM_TOL {
                return Err(Error::InvalidPom {
                    reason: format!("element {j} has negative eigenvalue {min:e}"),
                });
            }
            total = &total + e;
        }
        let defect = total.max_abs_diff(&ComplexMatrix::identity(dim));
        if defect > POM_TOL {
            return Err(Error::InvalidPom {
                reason: format!("elements sum to identity only within {defect:e}"),
            });
        }
        Ok(Self { elements })
    }

    /// `Π_{choice} = I`, every other element zero.
    pub fn always(choice: usize, outcomes: usize, dim: usize) -> Self {
        let elements = (0..outcomes)
            .map(|j| {
                if j == choice {
                    ComplexMatrix::identity(dim)
                } else {
                    ComplexMatrix::zeros(dim)
                }
            })
            .collect();
        Self { elements }
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }
}

/// `Tr(ρ Πⱼ)`, clamped to `[0, 1]`.
pub fn outcome_probability(state: &DensityOperator, pom: &Pom, j: usize) -> Result<f64> {
    if state.dim() != pom.dim() {
        return Err(Error::DimensionMismatch {
            expected: pom.dim(),
            found: state.dim(),
        });
    }
    let element = pom.elements.get(j).ok_or(Error::DimensionMismatch {
        expected: pom.len(),
        found: j,
    })?;
    Ok(trace_of_product(state.matrix(), element).re.clamp(0.0, 1.0))
}

/// `Tr(AB)` without forming the product.
fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.dim();
    let mut sum = Complex64::new(0.0, 0.0);
    for r in 0..n {
        for k in 0..n {
            sum += a.get(r, k) * b.get(k, r);
        }
    }
    sum
}

/// `Rᵢ = Σⱼ ξⱼ c[i][j] ρⱼ`.
pub fn risk_operators(hypotheses: &[Hypothesis], costs: &CostMatrix) -> Result<Vec<ComplexMatrix>> {
    let dim = validate_hypotheses(hypotheses)?;
    if costs.size() != hypotheses.len() {
        return Err(Error::DimensionMismatch {
            expected: hypotheses.len(),
            found: costs.size(),
        });
    }
    Ok((0..hypotheses.len())
        .map(|i| {
            hypotheses
                .iter()
                .enumerate()
                .fold(ComplexMatrix::zeros(dim), |acc, (j, h)| {
                    &acc + &h.state.matrix().scale(h.prior * costs.get(i, j))
                })
        })
        .collect())
}

fn check_pom_fits(risks: &[ComplexMatrix], pom: &Pom) -> Result<()> {
    if risks.len() != pom.len() {
        return Err(Error::DimensionMismatch {
            expected: risks.len(),
            found: pom.len(),
        });
    }
    if risks[0].dim() != pom.dim() {
        return Err(Error::DimensionMismatch {
            expected: risks[0].dim(),
            found: pom.dim(),
        });
    }
    Ok(())
}

/// `Σᵢ Tr(Rᵢ Πᵢ)`.
pub fn expected_cost(hypotheses: &[Hypothesis], costs: &CostMatrix, pom: &Pom) -> Result<f64> {
    let risks = risk_operators(hypotheses, costs)?;
    expected_cost_from_risks(&risks, pom)
}

pub fn expected_cost_from_risks(risks: &[ComplexMatrix], pom: &Pom) -> Result<f64> {
    check_pom_fits(risks, pom)?;
    Ok(risks
        .iter()
        .zip(pom.elements())
        .map(|(r, p)| trace_of_product(r, p).re)
        .sum())
}

/// Findings of the Lagrange-operator optimality test.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalityReport {
    /// `max |Υ − Υ†|` entrywise.
    pub upsilon_asymmetry: f64,
    /// Smallest eigenvalue of `Rⱼ − Υ`, per hypothesis.
    pub min_eigenvalue_excess: Vec<f64>,
    pub tolerance: f64,
    pub is_optimal: bool,
    /// `Re Tr Υ`.
    pub trace_upsilon: f64,
}

fn upsilon(risks: &[ComplexMatrix], pom: &Pom) -> ComplexMatrix {
    risks
        .iter()
        .zip(pom.elements())
        .fold(ComplexMatrix::zeros(pom.dim()), |acc, (r, p)| {
            &acc + &(r * p)
        })
}

/// Forms `Υ = Σⱼ Rⱼ Πⱼ` and checks that it is Hermitian and that every
/// `Rⱼ − Υ` is positive semidefinite, both within `tol`.
pub fn check_optimality(risks: &[ComplexMatrix], pom: &Pom, tol: f64) -> Result<OptimalityReport> {
    check_pom_fits(risks, pom)?;
    let ups = upsilon(risks, pom);
    let upsilon_asymmetry = ups.hermiticity_defect();
    // The excess test is on the Hermitian part; asymmetry is reported separately.
    let herm = ComplexMatrix::from_fn(ups.dim(), |r, c| {
        (ups.get(r, c) + ups.get(c, r).conj()) * 0.5
    })?;
    let min_eigenvalue_excess = risks
        .iter()
        .map(|r| {
            let diff = r - &herm;
            hermitian_eigen(&diff, DEFAULT_EIGEN_TOL).map(|d| {
                let m = d.eigenvalues[0];
                if m.abs() < 1e-12 {
                    0.0
                } else {
                    m
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let is_optimal = upsilon_asymmetry <= tol && min_eigenvalue_excess.iter().all(|&e| e >= -tol);
    Ok(OptimalityReport {
        upsilon_asymmetry,
        min_eigenvalue_excess,
        tolerance: tol,
        is_optimal,
        trace_upsilon: trace(&ups).re,
    })
}

/// Minimum Bayes cost as `Tr Υ`. Only meaningful at an optimal POM, so a
/// POM that fails [`check_optimality`] is rejected.
pub fn bayes_cost_from_upsilon(risks: &[ComplexMatrix], pom: &Pom) -> Result<f64> {
    let report = check_optimality(risks, pom, OPTIMALITY_TOL)?;
    if !report.is_optimal {
        return Err(Error::NotOptimal {
            detail: format!(
                "asymmetry {:e}, min excess {:e}",
                report.upsilon_asymmetry,
                report
                    .min_eigenvalue_excess
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min)
            ),
        });
    }
    Ok(report.trace_upsilon)
}

/// `γ = ξ₁(c₂₁ − c₁₁) / ξ₂(c₁₂ − c₂₂)`, which is `ξ/(1−ξ)` for 0-1 costs.
pub fn gamma(prior_xi: f64, costs: &CostMatrix) -> Result<f64> {
    costs.check_binary()?;
    if !(0.0..=1.0).contains(&prior_xi) {
        return Err(Error::InvalidProbability {
            name: "xi",
            value: prior_xi,
        });
    }
    if prior_xi == 0.0 || prior_xi == 1.0 {
        return Err(Error::DegeneratePrior { xi: prior_xi });
    }
    Ok(prior_xi * (costs.get(1, 0) - costs.get(0, 0))
        / ((1.0 - prior_xi) * (costs.get(0, 1) - costs.get(1, 1))))
}

fn prior_only_choice(prior_xi: f64, costs: &CostMatrix) -> usize {
    let cost1 = prior_xi * costs.get(0, 0) + (1.0 - prior_xi) * costs.get(0, 1);
    let cost2 = prior_xi * costs.get(1, 0) + (1.0 - prior_xi) * costs.get(1, 1);
    if cost2 < cost1 {
        1
    } else {
        0
    }
}

/// Cost of deciding from the prior alone.
pub fn prior_only_cost(prior_xi: f64, costs: &CostMatrix) -> f64 {
    let cost1 = prior_xi * costs.get(0, 0) + (1.0 - prior_xi) * costs.get(0, 1);
    let cost2 = prior_xi * costs.get(1, 0) + (1.0 - prior_xi) * costs.get(1, 1);
    cost1.min(cost2)
}

/// Optimal two-outcome measurement: `Π₂` projects onto the eigenvectors of
/// `ρ₂ − γρ₁` with eigenvalue above [`ZERO_EIGENVALUE_THRESHOLD`], and
/// `Π₁ = I − Π₂`. A degenerate prior yields the measurement that always
/// reports the certain hypothesis.
pub fn binary_optimal_pom(
    rho1: &DensityOperator,
    rho2: &DensityOperator,
    prior_xi: f64,
    costs: &CostMatrix,
) -> Result<Pom> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho1.dim(),
            found: rho2.dim(),
        });
    }
    let g = match gamma(prior_xi, costs) {
        Ok(g) => g,
        Err(Error::DegeneratePrior { .. }) => {
            return Ok(Pom::always(
                prior_only_choice(prior_xi, costs),
                2,
                rho1.dim(),
            ))
        }
        Err(e) => return Err(e),
    };
    let test = rho2.matrix() - &rho1.matrix().scale(g);
    let spectrum = hermitian_eigen(&test, DEFAULT_EIGEN_TOL)?;
    let pi2 = spectrum.projector(|eta| eta > ZERO_EIGENVALUE_THRESHOLD);
    let pi1 = &ComplexMatrix::identity(rho1.dim()) - &pi2;
    Ok(Pom {
        elements: vec![pi1, pi2],
    })
}

/// The decision problem: which of two polarisation directions prepared
/// an ensemble of `n_particles` spins.
#[derive(Debug, Clone)]
pub struct BinaryProblem {
    pub theta1: PolarisationAngle,
    pub theta2: PolarisationAngle,
    pub delta: HalfAngle,
    /// Prior probability of hypothesis 1.
    pub prior_xi: f64,
    pub costs: CostMatrix,
    pub n_particles: usize,
}

impl BinaryProblem {
    pub fn from_angles(
        prior_xi: f64,
        theta1: f64,
        theta2: f64,
        n_particles: usize,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&prior_xi) {
            return Err(Error::InvalidProbability {
                name: "xi",
                value: prior_xi,
            });
        }
        if n_particles == 0 {
            return Err(Error::ParticleCount {
                n: 0,
                cap: crate::states::DENSE_CAP,
            });
        }
        let theta1 = PolarisationAngle::new(theta1)?;
        let theta2 = PolarisationAngle::new(theta2)?;
        Ok(Self {
            theta1,
            theta2,
            delta: HalfAngle::between(theta1, theta2),
            prior_xi,
            costs: CostMatrix::zero_one(2),
            n_particles,
        })
    }

    /// Places the hypotheses at `θ₁ = 0`, `θ₂ = 2δ`.
    pub fn from_delta(prior_xi: f64, delta: f64, n_particles: usize) -> Result<Self> {
        let d = HalfAngle::new(delta)?;
        let mut p = Self::from_angles(prior_xi, 0.0, 2.0 * d.radians(), n_particles)?;
        p.delta = d;
        Ok(p)
    }

    pub fn with_costs(mut self, costs: CostMatrix) -> Result<Self> {
        costs.check_binary()?;
        self.costs = costs;
        Ok(self)
    }

    pub fn states(&self) -> Result<(DensityOperator, DensityOperator)> {
        Ok((
            ensemble_density(self.theta1, self.n_particles)?,
            ensemble_density(self.theta2, self.n_particles)?,
        ))
    }

    pub fn hypotheses(&self) -> Result<Vec<Hypothesis>> {
        let (rho1, rho2) = self.states()?;
        Ok(vec![
            Hypothesis::new("theta1", rho1, self.prior_xi)?,
            Hypothesis::new("theta2", rho2, 1.0 - self.prior_xi)?,
        ])
    }
}

/// Sum of the strictly positive eigenvalues of `ρ₂ − γρ₁`.
fn positive_eigenvalue_sum(rho1: &DensityOperator, rho2: &DensityOperator, g: f64) -> Result<f64> {
    let test = rho2.matrix() - &rho1.matrix().scale(g);
    let spectrum = hermitian_eigen(&test, DEFAULT_EIGEN_TOL)?;
    Ok(spectrum.eigenvalues.iter().filter(|&&eta| eta > 0.0).sum())
}

/// Bayes cost of the two given states from the spectrum of `ρ₂ − γρ₁`:
/// `ξ c₁₁ + (1−ξ) c₁₂ − (1−ξ)(c₁₂ − c₂₂) Σ_{η>0} η`.
pub fn binary_bayes_cost_states(
    rho1: &DensityOperator,
    rho2: &DensityOperator,
    prior_xi: f64,
    costs: &CostMatrix,
) -> Result<f64> {
    let g = match gamma(prior_xi, costs) {
        Ok(g) => g,
        Err(Error::DegeneratePrior { .. }) => return Ok(prior_only_cost(prior_xi, costs)),
        Err(e) => return Err(e),
    };
    let xi2 = 1.0 - prior_xi;
    let positive = positive_eigenvalue_sum(rho1, rho2, g)?;
    Ok(prior_xi * costs.get(0, 0) + xi2 * costs.get(0, 1)
        - xi2 * (costs.get(0, 1) - costs.get(1, 1)) * positive)
}

/// Bayes cost of the combined measurement on the whole ensemble, computed
/// numerically from the (N+1)-dimensional operators.
pub fn binary_bayes_cost_eigen(problem: &BinaryProblem) -> Result<f64> {
    let (rho1, rho2) = problem.states()?;
    binary_bayes_cost_states(&rho1, &rho2, problem.prior_xi, &problem.costs)
}

/// Non-zero eigenvalues `(λ₊, λ₋)` of the rank-two operator `ρ₂ − γρ₁` for
/// pure states with squared overlap `delta_sq`.
pub fn rank2_eigenvalues(gamma: f64, delta_sq: f64) -> (f64, f64) {
    let a = 1.0 - gamma;
    let root = (a * a - 4.0 * gamma * (delta_sq - 1.0)).max(0.0).sqrt();
    (0.5 * (a + root), 0.5 * (a - root))
}

/// `½(1 − √(1 − x))`, evaluated as `x / (2(1 + √(1 − x)))` so that tiny
/// `x` does not cancel to zero.
pub(crate) fn half_one_minus_sqrt(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x / (2.0 * (1.0 + (1.0 - x).sqrt()))
}

/// `½(1 − √(1 − 4ξ(1−ξ) cos^{2N} δ))`, the 0-1 Bayes cost of the combined
/// measurement.
pub fn combined_cost_closed(prior_xi: f64, delta: HalfAngle, n_particles: usize) -> f64 {
    half_one_minus_sqrt(
        4.0 * prior_xi * (1.0 - prior_xi) * overlap_delta_squared(delta, n_particles),
    )
}
