//! Minimum decision cost against ensemble size, and the ensemble size that
//! minimises cost once each measured particle carries a price.

use std::f64::consts::PI;

use qdecide::decision::{binary_bayes_cost_eigen, combined_cost_closed, BinaryProblem};
use qdecide::sequential::total_cost_with_observation;
use qdecide::states::HalfAngle;

fn main() -> qdecide::Result<()> {
    let xi = 0.3;
    println!(
        "{:>3} {:>12} {:>12} {:>12}",
        "N", "d=pi/12", "d=pi/6", "d=pi/4"
    );
    for n in 1..=10 {
        let row: Vec<String> = [PI / 12.0, PI / 6.0, PI / 4.0]
            .iter()
            .map(|&d| {
                Ok(format!(
                    "{:12.6e}",
                    combined_cost_closed(xi, HalfAngle::new(d)?, n)
                ))
            })
            .collect::<qdecide::Result<_>>()?;
        println!("{n:>3} {}", row.join(" "));
    }

    // The numeric route builds the (N+1)-dimensional states explicitly.
    let problem = BinaryProblem::from_delta(xi, PI / 6.0, 6)?;
    println!(
        "\nN=6, d=pi/6: closed {:.15}, eigen {:.15}",
        combined_cost_closed(xi, problem.delta, 6),
        binary_bayes_cost_eigen(&problem)?
    );

    let price = 2e-3;
    let delta = HalfAngle::new(PI / 12.0)?;
    let (best_n, best) = (1..=200)
        .map(|n| {
            (
                n,
                total_cost_with_observation(combined_cost_closed(xi, delta, n), n, price),
            )
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    println!("at {price} per particle the cheapest ensemble has N={best_n} (total {best:.6})");
    Ok(())
}
