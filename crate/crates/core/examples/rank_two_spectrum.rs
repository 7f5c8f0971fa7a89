//! Spectrum of the decision operator `ρ₂ − γρ₁` for growing ensembles: two
//! non-zero eigenvalues, whatever the dimension.

use qdecide::decision::{gamma, rank2_eigenvalues, CostMatrix};
use qdecide::numkernel::{hermitian_eigen, DEFAULT_EIGEN_TOL};
use qdecide::states::{ensemble_density, overlap_delta_squared, HalfAngle, PolarisationAngle};

fn main() -> qdecide::Result<()> {
    let (xi, delta) = (0.35, 0.3);
    let g = gamma(xi, &CostMatrix::zero_one(2))?;
    for n in [1, 2, 5, 10, 20, 40] {
        let rho1 = ensemble_density(PolarisationAngle::new(0.0)?, n)?;
        let rho2 = ensemble_density(PolarisationAngle::new(2.0 * delta)?, n)?;
        let values = hermitian_eigen(
            &(rho2.matrix() - &rho1.matrix().scale(g)),
            DEFAULT_EIGEN_TOL,
        )?
        .eigenvalues;
        let (plus, minus) = rank2_eigenvalues(g, overlap_delta_squared(HalfAngle::new(delta)?, n));
        let rest = values[1..values.len() - 1]
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        println!(
            "N={n:>2}  numeric ({:+.12}, {:+.12})  closed ({plus:+.12}, {minus:+.12})  others <= {rest:.1e}",
            values[values.len() - 1],
            values[0]
        );
    }
    Ok(())
}
