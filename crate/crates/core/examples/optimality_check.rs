//! Builds the optimal measurement for an asymmetric cost matrix and checks
//! it, and a naive alternative, against the operator optimality conditions.

use qdecide::decision::{
    binary_optimal_pom, check_optimality, expected_cost, risk_operators, BinaryProblem, CostMatrix,
    Pom, OPTIMALITY_TOL,
};

fn main() -> qdecide::Result<()> {
    // Missing hypothesis 2 costs three times as much as a false alarm.
    let costs = CostMatrix::new(vec![vec![0.0, 3.0], vec![1.0, 0.0]])?;
    let problem = BinaryProblem::from_angles(0.6, 0.0, 0.9, 3)?.with_costs(costs)?;
    let hypotheses = problem.hypotheses()?;
    let risks = risk_operators(&hypotheses, &problem.costs)?;

    let optimal = binary_optimal_pom(
        &hypotheses[0].state,
        &hypotheses[1].state,
        problem.prior_xi,
        &problem.costs,
    )?;
    let naive = Pom::always(0, 2, problem.n_particles + 1);

    for (name, pom) in [("optimal", &optimal), ("always h1", &naive)] {
        let report = check_optimality(&risks, pom, OPTIMALITY_TOL)?;
        println!(
            "{name:>10}: cost {:.12}  Tr(Y) {:.12}  min excess {:?}  optimal {}",
            expected_cost(&hypotheses, &problem.costs, pom)?,
            report.trace_upsilon,
            report.min_eigenvalue_excess,
            report.is_optimal
        );
    }
    Ok(())
}
