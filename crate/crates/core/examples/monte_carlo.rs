//! Simulated error rates of the sequential, combined and a mixed strategy
//! against the analytic minimum.

use qdecide::decision::{combined_cost_closed, BinaryProblem};
use qdecide::montecarlo::{simulate, SimulationConfig};
use qdecide::sequential::Partition;

fn main() -> qdecide::Result<()> {
    let problem = BinaryProblem::from_delta(0.4, 0.35, 6)?;
    let analytic = combined_cost_closed(problem.prior_xi, problem.delta, problem.n_particles);
    let trials = 200_000;
    println!("analytic {analytic:.6}");
    for strategy in [
        Partition::sequential(6)?,
        Partition::combined(6)?,
        Partition::new(vec![3, 2, 1])?,
    ] {
        let result = simulate(&SimulationConfig {
            problem: problem.clone(),
            strategy: strategy.clone(),
            trials,
            seed: 2024,
        })?;
        let sigma = (analytic * (1.0 - analytic) / trials as f64).sqrt();
        println!(
            "{:>12}: {:.6} +- {:.6}  z {:+.2}  per hypothesis {:.4?}",
            strategy.to_string(),
            result.error_rate,
            result.standard_error,
            (result.error_rate - analytic) / sigma,
            result.per_hypothesis_error
        );
    }
    Ok(())
}
