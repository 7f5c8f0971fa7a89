//! Adaptive single-particle measurements: every outcome sequence, and the
//! way the posteriors collapse onto two values per step.

use qdecide::sequential::{closed_posterior, enumerate_tree, sequential_cost_closed, Outcome};
use qdecide::states::{HalfAngle, PolarisationAngle};

fn main() -> qdecide::Result<()> {
    let (xi, theta1, theta2, n) = (0.7, 0.2, 1.1, 4);
    let (t1, t2) = (
        PolarisationAngle::new(theta1)?,
        PolarisationAngle::new(theta2)?,
    );
    let delta = HalfAngle::between(t1, t2);
    let tree = enumerate_tree(xi, t1, t2, n)?;

    for leaf in tree.leaves() {
        let outcomes: String = leaf.outcomes.iter().map(|o| o.symbol()).collect();
        let angles: Vec<String> = leaf
            .detector_angles
            .iter()
            .map(|a| format!("{a:.4}"))
            .collect();
        println!(
            "{outcomes}  weight {:.6}  posterior {:.6}  angles [{}]",
            leaf.weight,
            leaf.posterior,
            angles.join(", ")
        );
    }

    println!();
    for depth in 1..=n {
        println!(
            "depth {depth}: tree {:?}  closed [{:.12}, {:.12}]",
            tree.distinct_posteriors(depth, 1e-10),
            closed_posterior(xi, depth, Outcome::Down, delta),
            closed_posterior(xi, depth, Outcome::Up, delta),
        );
    }
    println!(
        "\ncost: tree {:.15}, closed {:.15}",
        tree.weighted_cost(),
        sequential_cost_closed(xi, delta, n)
    );
    Ok(())
}
