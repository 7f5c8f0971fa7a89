//! Seeded simulation of measurement strategies.
//!
//! Each trial draws the true hypothesis from the prior, samples the
//! outcomes of the strategy's measurements, makes the Bayes decision on the
//! final posterior and scores 0-1 loss.
//!
//! Streams: trial `t` uses `ChaCha8Rng::seed_from_u64(seed)` with
//! `set_stream(t)`. Trials only contribute integer counts, so the result is
//! bit-identical for any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::decision::BinaryProblem;
use crate::error::{Error, Result};
use crate::sequential::{
    bayes_update, bias, detector_angle, outcome_likelihood, GroupStates, Outcome, Partition,
    ENUMERATION_CAP,
};

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub problem: BinaryProblem,
    /// `[1; N]` is the adaptive sequential strategy, `[N]` the combined one.
    pub strategy: Partition,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub error_rate: f64,
    /// `√(p̂(1 − p̂)/T)`.
    pub standard_error: f64,
    pub trials: u64,
    pub errors: u64,
    /// Error rate conditional on hypothesis 1 and 2 being true.
    pub per_hypothesis_error: [f64; 2],
}

/// Measurement policy unrolled into a complete binary tree. Node `i` has
/// children `2i + 1` (first outcome) and `2i + 2` (second outcome).
#[derive(Debug)]
struct Plan {
    steps: usize,
    /// Probability of the first outcome under each hypothesis; interior nodes only.
    branch: Vec<(f64, f64)>,
    /// Decision at each leaf: true means hypothesis 1.
    choose_first: Vec<bool>,
}

impl Plan {
    fn build(config: &SimulationConfig) -> Result<Self> {
        let steps = config.strategy.groups().len();
        if steps > ENUMERATION_CAP {
            return Err(Error::InvalidConfig {
                reason: format!("{steps} measurement steps exceed the cap {ENUMERATION_CAP}"),
            });
        }
        let p = &config.problem;
        let interior = (1usize << steps) - 1;
        let mut plan = Plan {
            steps,
            branch: vec![(0.0, 0.0); interior],
            choose_first: vec![true; interior + 1],
        };
        let mut states = GroupStates::new(p.theta1, p.theta2);
        let sequential = config.strategy.is_sequential();
        let mut stack = vec![(0usize, p.prior_xi)];
        while let Some((node, xi)) = stack.pop() {
            if node >= interior {
                plan.choose_first[node - interior] = xi >= 0.5;
                continue;
            }
            let depth = usize::BITS as usize - 1 - (node + 1).leading_zeros() as usize;
            let phi = sequential.then(|| detector_angle(xi, p.theta1, p.theta2));
            let (q1, q2) = match phi {
                Some(phi) => (bias(p.theta1, phi), bias(p.theta2, phi)),
                None => states.first_outcome_probabilities(config.strategy.groups()[depth], xi)?,
            };
            plan.branch[node] = (q1, q2);
            for (k, outcome) in [Outcome::Up, Outcome::Down].into_iter().enumerate() {
                let (l1, l2) = match (phi, outcome) {
                    (Some(phi), _) => (
                        outcome_likelihood(p.theta1, phi, outcome),
                        outcome_likelihood(p.theta2, phi, outcome),
                    ),
                    (None, Outcome::Up) => (q1, q2),
                    (None, Outcome::Down) => (1.0 - q1, 1.0 - q2),
                };
                let next = match bayes_update(xi, l1, l2, outcome) {
                    Ok(v) => v,
                    Err(Error::ImpossibleOutcome { .. }) => xi,
                    Err(e) => return Err(e),
                };
                stack.push((2 * node + 1 + k, next));
            }
        }
        Ok(plan)
    }

    /// Returns whether hypothesis 1 is chosen.
    fn run(&self, first_is_true: bool, rng: &mut ChaCha8Rng) -> bool {
        let mut node = 0;
        for _ in 0..self.steps {
            let (q1, q2) = self.branch[node];
            let q = if first_is_true { q1 } else { q2 };
            node = if rng.gen::<f64>() < q {
                2 * node + 1
            } else {
                2 * node + 2
            };
        }
        self.choose_first[node - self.branch.len()]
    }
}

fn validate(config: &SimulationConfig) -> Result<()> {
    if config.trials == 0 {
        return Err(Error::InvalidConfig {
            reason: "trials must be at least 1".into(),
        });
    }
    if config.strategy.total() != config.problem.n_particles {
        return Err(Error::InvalidConfig {
            reason: format!(
                "strategy {} covers {} particles, problem has {}",
                config.strategy,
                config.strategy.total(),
                config.problem.n_particles
            ),
        });
    }
    if !config.problem.costs.is_zero_one() {
        return Err(Error::InvalidConfig {
            reason: "simulation scores 0-1 loss".into(),
        });
    }
    Ok(())
}

#[derive(Default, Clone, Copy)]
struct Tally {
    trials: [u64; 2],
    errors: [u64; 2],
}

impl Tally {
    fn merge(self, other: Self) -> Self {
        Self {
            trials: [
                self.trials[0] + other.trials[0],
                self.trials[1] + other.trials[1],
            ],
            errors: [
                self.errors[0] + other.errors[0],
                self.errors[1] + other.errors[1],
            ],
        }
    }
}

/// Runs the configured strategy for `config.trials` independent trials.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationResult> {
    validate(config)?;
    let plan = Plan::build(config)?;
    let xi = config.problem.prior_xi;
    let tally = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t);
            let first_is_true = rng.gen::<f64>() < xi;
            let chose_first = plan.run(first_is_true, &mut rng);
            let h = usize::from(!first_is_true);
            let mut tally = Tally::default();
            tally.trials[h] = 1;
            tally.errors[h] = u64::from(chose_first != first_is_true);
            tally
        })
        .reduce(Tally::default, Tally::merge);

    let errors = tally.errors[0] + tally.errors[1];
    let error_rate = errors as f64 / config.trials as f64;
    let rate = |h: usize| {
        if tally.trials[h] == 0 {
            0.0
        } else {
            tally.errors[h] as f64 / tally.trials[h] as f64
        }
    };
    Ok(SimulationResult {
        error_rate,
        standard_error: (error_rate * (1.0 - error_rate) / config.trials as f64).sqrt(),
        trials: config.trials,
        errors,
        per_hypothesis_error: [rate(0), rate(1)],
    })
}
