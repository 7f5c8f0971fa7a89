//! Adaptive one-particle-at-a-time measurement and grouped strategies.
//!
//! Each particle is measured with a Stern-Gerlach detector at angle `φ`;
//! spin up is seen with probability `b_k(φ) = cos²((θ_k − φ)/2)` under
//! hypothesis `k`. The detector is re-aimed after every outcome at the
//! angle that is optimal for the running posterior.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::decision::{
    binary_bayes_cost_states, binary_optimal_pom, half_one_minus_sqrt, outcome_probability,
    CostMatrix,
};
use crate::error::{Error, Result};
use crate::states::{
    ensemble_density, overlap_delta_squared, DensityOperator, HalfAngle, PolarisationAngle,
    DENSE_CAP,
};

/// Largest particle count [`enumerate_tree`] will expand (2^20 leaves).
pub const ENUMERATION_CAP: usize = 20;

/// Below this magnitude both components of the detector direction count as zero.
const DEGENERATE_DIRECTION: f64 = 1e-15;

/// Result of one spin measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Outcome {
    Up,
    Down,
}

impl Outcome {
    pub fn sign(self) -> i8 {
        match self {
            Outcome::Up => 1,
            Outcome::Down => -1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Outcome::Up => '+',
            Outcome::Down => '-',
        }
    }
}

/// Probability of spin up along `phi` for a particle polarised along `theta_k`.
pub fn bias(theta_k: PolarisationAngle, phi: f64) -> f64 {
    outcome_likelihood(theta_k, phi, Outcome::Up)
}

/// Probability of `outcome` along `phi`. The down probability is computed
/// as `sin²`, not `1 − bias`, so it stays accurate when it is tiny.
pub fn outcome_likelihood(theta_k: PolarisationAngle, phi: f64, outcome: Outcome) -> f64 {
    let half = (theta_k.radians() - phi) / 2.0;
    match outcome {
        Outcome::Up => half.cos().powi(2),
        Outcome::Down => half.sin().powi(2),
    }
}

/// Detector angle minimising the one-step Bayes cost at prior `prior_xi`,
/// in `[0, 2π)`. Spin up then favours hypothesis 1.
///
/// Fails only when the hypotheses coincide and the prior is exactly 1/2,
/// where every angle is equally (un)informative.
pub fn optimal_angle(
    prior_xi: f64,
    theta1: PolarisationAngle,
    theta2: PolarisationAngle,
) -> Result<f64> {
    let (t1, t2) = (theta1.radians(), theta2.radians());
    let y = prior_xi * t1.sin() - (1.0 - prior_xi) * t2.sin();
    let x = prior_xi * t1.cos() - (1.0 - prior_xi) * t2.cos();
    if x.abs() < DEGENERATE_DIRECTION && y.abs() < DEGENERATE_DIRECTION {
        return Err(Error::DegenerateDetector);
    }
    Ok(PolarisationAngle::new(y.atan2(x))?.radians())
}

/// [`optimal_angle`], falling back to `θ₁` where it is undefined (any
/// angle is optimal there).
pub fn detector_angle(prior_xi: f64, theta1: PolarisationAngle, theta2: PolarisationAngle) -> f64 {
    optimal_angle(prior_xi, theta1, theta2).unwrap_or(theta1.radians())
}

/// Expected 0-1 cost of measuring along `phi` and then making the Bayes
/// decision for each outcome.
pub fn one_step_cost(
    prior_xi: f64,
    theta1: PolarisationAngle,
    theta2: PolarisationAngle,
    phi: f64,
) -> f64 {
    [Outcome::Up, Outcome::Down]
        .into_iter()
        .map(|o| {
            (prior_xi * outcome_likelihood(theta1, phi, o))
                .min((1.0 - prior_xi) * outcome_likelihood(theta2, phi, o))
        })
        .sum()
}

/// Bayes update of the probability of hypothesis 1 after `outcome`, where
/// `b1`, `b2` are the spin-up probabilities under the two hypotheses.
/// Priors of exactly 0 or 1 are absorbing.
pub fn posterior_update(prior_xi: f64, b1: f64, b2: f64, outcome: Outcome) -> Result<f64> {
    for (name, value) in [("xi", prior_xi), ("b1", b1), ("b2", b2)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidProbability { name, value });
        }
    }
    match outcome {
        Outcome::Up => bayes_update(prior_xi, b1, b2, outcome),
        Outcome::Down => bayes_update(prior_xi, 1.0 - b1, 1.0 - b2, outcome),
    }
}

/// Posterior from the likelihoods `l1`, `l2` of the observed `outcome`.
pub(crate) fn bayes_update(prior_xi: f64, l1: f64, l2: f64, outcome: Outcome) -> Result<f64> {
    if prior_xi == 0.0 || prior_xi == 1.0 {
        return Ok(prior_xi);
    }
    let num = l1 * prior_xi;
    let den = num + l2 * (1.0 - prior_xi);
    if den <= 0.0 {
        return Err(Error::ImpossibleOutcome {
            outcome: outcome.symbol(),
        });
    }
    Ok(num / den)
}

/// The two posteriors reachable after `n` optimally aimed measurements:
/// `½(1 ± √(1 − 4ξ(1−ξ) cos^{2n} δ))`, `+` when the last outcome was up.
pub fn closed_posterior(prior_xi: f64, n: usize, last: Outcome, delta: HalfAngle) -> f64 {
    let overlap = if n == 0 {
        1.0
    } else {
        overlap_delta_squared(delta, n)
    };
    let lower = half_one_minus_sqrt(4.0 * prior_xi * (1.0 - prior_xi) * overlap);
    match last {
        Outcome::Up => 1.0 - lower,
        Outcome::Down => lower,
    }
}

/// Bayes cost of `n_particles` adaptive single-particle measurements.
pub fn sequential_cost_closed(prior_xi: f64, delta: HalfAngle, n_particles: usize) -> f64 {
    half_one_minus_sqrt(
        4.0 * prior_xi * (1.0 - prior_xi) * overlap_delta_squared(delta, n_particles),
    )
}

/// One root-to-leaf path of the posterior tree.
#[derive(Debug, Clone, Serialize)]
pub struct PosteriorBranch {
    pub outcomes: Vec<Outcome>,
    /// Probability of the outcome string under the prior mixture.
    pub weight: f64,
    pub posterior: f64,
    pub detector_angles: Vec<f64>,
}

/// A node of the posterior tree.
#[derive(Debug, Clone, Copy)]
pub struct TreeNode {
    pub weight: f64,
    pub posterior: f64,
    /// Detector angle used for the next measurement; `None` at the leaves.
    pub phi: Option<f64>,
}

/// Every outcome sequence of the adaptive policy, level by level.
///
/// Node `i` at depth `d` has children `2i` (up) and `2i + 1` (down), so the
/// bits of `i` read most-significant first spell out its outcome string.
#[derive(Debug, Clone)]
pub struct PosteriorTree {
    pub prior_xi: f64,
    levels: Vec<Vec<TreeNode>>,
    cost: f64,
}

impl PosteriorTree {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, depth: usize) -> &[TreeNode] {
        &self.levels[depth]
    }

    /// Weighted average, over depth `N − 1`, of the one-step Bayes cost of
    /// the final measurement.
    pub fn weighted_cost(&self) -> f64 {
        self.cost
    }

    /// `Σ weight · min(posterior, 1 − posterior)` over the leaves.
    pub fn terminal_cost(&self) -> f64 {
        self.levels[self.depth()]
            .iter()
            .map(|n| n.weight * n.posterior.min(1.0 - n.posterior))
            .sum()
    }

    /// Sorted posteriors at `depth`, merging values closer than `tol`.
    pub fn distinct_posteriors(&self, depth: usize, tol: f64) -> Vec<f64> {
        let mut values: Vec<f64> = self.levels[depth].iter().map(|n| n.posterior).collect();
        values.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::new();
        for v in values {
            if out.last().is_none_or(|&last| v - last > tol) {
                out.push(v);
            }
        }
        out
    }

    pub fn branch(&self, depth: usize, index: usize) -> PosteriorBranch {
        let node = self.levels[depth][index];
        let mut outcomes = Vec::with_capacity(depth);
        let mut detector_angles = Vec::with_capacity(depth);
        for d in 0..depth {
            let ancestor = index >> (depth - d);
            let bit = (index >> (depth - d - 1)) & 1;
            outcomes.push(if bit == 0 { Outcome::Up } else { Outcome::Down });
            detector_angles.push(
                self.levels[d][ancestor]
                    .phi
                    .expect("interior node has an angle"),
            );
        }
        PosteriorBranch {
            outcomes,
            weight: node.weight,
            posterior: node.posterior,
            detector_angles,
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = PosteriorBranch> + '_ {
        let depth = self.depth();
        (0..self.levels[depth].len()).map(move |i| self.branch(depth, i))
    }
}

/// Expands all `2^N` outcome sequences of the adaptive policy.
///
/// Branch weights are mixture path probabilities
/// `ξ Π b₁-terms + (1−ξ) Π b₂-terms`. A branch that is impossible under
/// both hypotheses keeps its parent's posterior with weight zero.
pub fn enumerate_tree(
    prior_xi: f64,
    theta1: PolarisationAngle,
    theta2: PolarisationAngle,
    n_particles: usize,
) -> Result<PosteriorTree> {
    if n_particles == 0 || n_particles > ENUMERATION_CAP {
        return Err(Error::TreeTooDeep {
            n: n_particles,
            cap: ENUMERATION_CAP,
        });
    }
    if !(0.0..=1.0).contains(&prior_xi) {
        return Err(Error::InvalidProbability {
            name: "xi",
            value: prior_xi,
        });
    }

    let mut levels: Vec<Vec<TreeNode>> = Vec::with_capacity(n_particles + 1);
    // Per-hypothesis path likelihoods for the current level.
    let mut lik: Vec<(f64, f64)> = vec![(1.0, 1.0)];
    let mut current = vec![TreeNode {
        weight: 1.0,
        posterior: prior_xi,
        phi: None,
    }];
    let mut cost = 0.0;

    for depth in 0..n_particles {
        let mut next = Vec::with_capacity(current.len() * 2);
        let mut next_lik = Vec::with_capacity(current.len() * 2);
        for (node, &(l1, l2)) in current.iter_mut().zip(&lik) {
            let phi = detector_angle(node.posterior, theta1, theta2);
            node.phi = Some(phi);
            if depth + 1 == n_particles {
                cost += node.weight * one_step_cost(node.posterior, theta1, theta2, phi);
            }
            for outcome in [Outcome::Up, Outcome::Down] {
                let (p1, p2) = (
                    outcome_likelihood(theta1, phi, outcome),
                    outcome_likelihood(theta2, phi, outcome),
                );
                let posterior = match bayes_update(node.posterior, p1, p2, outcome) {
                    Ok(p) => p,
                    Err(Error::ImpossibleOutcome { .. }) => node.posterior,
                    Err(e) => return Err(e),
                };
                let (c1, c2) = (l1 * p1, l2 * p2);
                next_lik.push((c1, c2));
                next.push(TreeNode {
                    weight: prior_xi * c1 + (1.0 - prior_xi) * c2,
                    posterior,
                    phi: None,
                });
            }
        }
        levels.push(std::mem::replace(&mut current, next));
        lik = next_lik;
    }
    levels.push(current);

    Ok(PosteriorTree {
        prior_xi,
        levels,
        cost,
    })
}

/// Ordered sub-ensemble sizes; each group is measured as one spin system.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition(Vec<usize>);

impl Partition {
    pub fn new(groups: Vec<usize>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidPartition {
                reason: "no groups".into(),
            });
        }
        if groups.contains(&0) {
            return Err(Error::InvalidPartition {
                reason: "empty group".into(),
            });
        }
        Ok(Self(groups))
    }

    /// `[1, 1, …, 1]`.
    pub fn sequential(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    /// `[n]`.
    pub fn combined(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    /// All ordered compositions of `n`, lexicographically ascending.
    pub fn compositions(n: usize) -> Vec<Self> {
        fn rec(rest: usize, prefix: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if rest == 0 {
                out.push(Partition(prefix.clone()));
                return;
            }
            for g in 1..=rest {
                prefix.push(g);
                rec(rest - g, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if n > 0 {
            rec(n, &mut Vec::new(), &mut out);
        }
        out
    }

    pub fn groups(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_sequential(&self) -> bool {
        self.0.iter().all(|&g| g == 1)
    }

    fn check_total(&self, n: usize) -> Result<()> {
        if self.total() != n {
            return Err(Error::InvalidPartition {
                reason: format!("groups sum to {}, expected {n}", self.total()),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Parses `"2+1+3"`.
    fn from_str(s: &str) -> Result<Self> {
        let groups = s
            .split('+')
            .map(|g| {
                g.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidPartition {
                        reason: format!("bad group size {g:?} in {s:?}"),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(groups)
    }
}

/// Hypothesis states for each distinct group size, built on demand.
#[derive(Debug)]
pub(crate) struct GroupStates {
    theta1: PolarisationAngle,
    theta2: PolarisationAngle,
    cache: HashMap<usize, (DensityOperator, DensityOperator)>,
}

impl GroupStates {
    pub(crate) fn new(theta1: PolarisationAngle, theta2: PolarisationAngle) -> Self {
        Self {
            theta1,
            theta2,
            cache: HashMap::new(),
        }
    }

    pub(crate) fn get(&mut self, size: usize) -> Result<&(DensityOperator, DensityOperator)> {
        if size > DENSE_CAP {
            return Err(Error::ParticleCount {
                n: size,
                cap: DENSE_CAP,
            });
        }
        if !self.cache.contains_key(&size) {
            let pair = (
                ensemble_density(self.theta1, size)?,
                ensemble_density(self.theta2, size)?,
            );
            self.cache.insert(size, pair);
        }
        Ok(&self.cache[&size])
    }

    /// Probabilities of the first outcome of the optimal two-outcome group
    /// measurement at prior `xi`, under hypothesis 1 and 2.
    pub(crate) fn first_outcome_probabilities(
        &mut self,
        size: usize,
        xi: f64,
    ) -> Result<(f64, f64)> {
        let (rho1, rho2) = self.get(size)?;
        let pom = binary_optimal_pom(rho1, rho2, xi, &CostMatrix::zero_one(2))?;
        Ok((
            outcome_probability(rho1, &pom, 0)?,
            outcome_probability(rho2, &pom, 0)?,
        ))
    }
}

/// Bayes cost of measuring the groups of `partition` in order, each with the
/// optimal binary measurement for the posterior left by the previous ones.
pub fn partition_cost(
    prior_xi: f64,
    theta1: PolarisationAngle,
    theta2: PolarisationAngle,
    partition: &Partition,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&prior_xi) {
        return Err(Error::InvalidProbability {
            name: "xi",
            value: prior_xi,
        });
    }
    partition.check_total(partition.total())?;
    let mut states = GroupStates::new(theta1, theta2);
    grouped_cost(prior_xi, partition.groups(), &mut states)
}

fn grouped_cost(xi: f64, groups: &[usize], states: &mut GroupStates) -> Result<f64> {
    let (&size, rest) = groups.split_first().expect("partition is non-empty");
    if rest.is_empty() {
        let (rho1, rho2) = states.get(size)?;
        return binary_bayes_cost_states(rho1, rho2, xi, &CostMatrix::zero_one(2));
    }
    if xi == 0.0 || xi == 1.0 {
        return Ok(0.0);
    }
    let (q1, q2) = states.first_outcome_probabilities(size, xi)?;
    let mut total = 0.0;
    for outcome in [Outcome::Up, Outcome::Down] {
        let prob = match outcome {
            Outcome::Up => xi * q1 + (1.0 - xi) * q2,
            Outcome::Down => xi * (1.0 - q1) + (1.0 - xi) * (1.0 - q2),
        };
        if prob <= 0.0 {
            continue;
        }
        let posterior = posterior_update(xi, q1, q2, outcome)?;
        total += prob * grouped_cost(posterior, rest, states)?;
    }
    Ok(total)
}

/// Decision cost plus a linear charge per measurement event.
pub fn total_cost_with_observation(
    decision_cost: f64,
    measurement_events: usize,
    per_measurement_cost: f64,
) -> f64 {
    debug_assert!(decision_cost >= 0.0 && per_measurement_cost >= 0.0);
    decision_cost + measurement_events as f64 * per_measurement_cost
}
