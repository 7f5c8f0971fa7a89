//! Splits the ensemble into ordered groups, each measured optimally given
//! what the earlier groups revealed, and compares every split with the
//! single combined measurement.

use qdecide::decision::combined_cost_closed;
use qdecide::sequential::{partition_cost, Partition};
use qdecide::states::{HalfAngle, PolarisationAngle};

fn main() -> qdecide::Result<()> {
    let (xi, delta, n) = (0.25, 0.4, 5);
    let (t1, t2) = (
        PolarisationAngle::new(0.0)?,
        PolarisationAngle::new(2.0 * delta)?,
    );
    let combined = combined_cost_closed(xi, HalfAngle::new(delta)?, n);
    println!("combined: {combined:.15}");
    for p in Partition::compositions(n) {
        let cost = partition_cost(xi, t1, t2, &p)?;
        println!(
            "{:>10}  {cost:.15}  gap {:+.2e}",
            p.to_string(),
            cost - combined
        );
    }
    Ok(())
}
