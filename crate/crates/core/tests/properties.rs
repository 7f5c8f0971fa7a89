use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use proptest::prelude::*;

use qdecide::cli::format_number;
use qdecide::decision::{binary_bayes_cost_eigen, combined_cost_closed, BinaryProblem};
use qdecide::numkernel::{hermitian_eigen, ComplexMatrix, DEFAULT_EIGEN_TOL};
use qdecide::sequential::{enumerate_tree, posterior_update, Outcome, Partition};
use qdecide::states::{
    amplitude_vector, density_from_amplitudes, ensemble_density, HalfAngle, PolarisationAngle,
};

fn hermitian(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim * dim).prop_map(move |raw| {
        ComplexMatrix::from_fn(dim, |r, c| {
            let (a, b) = (raw[r * dim + c], raw[c * dim + r]);
            match r.cmp(&c) {
                std::cmp::Ordering::Less => Complex64::new(a.0, a.1),
                std::cmp::Ordering::Equal => Complex64::new(a.0, 0.0),
                std::cmp::Ordering::Greater => Complex64::new(b.0, -b.1),
            }
        })
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_is_sorted_and_reconstructs(m in (1usize..9).prop_flat_map(hermitian)) {
        let s = hermitian_eigen(&m, DEFAULT_EIGEN_TOL).unwrap();
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = s.eigenvalues.iter().sum();
        prop_assert!((sum - m.trace().re).abs() < 1e-10);
        prop_assert!(s.reconstruct().max_abs_diff(&m) < 1e-10);
        prop_assert!(s.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn ensemble_states_are_pure(theta in -10.0..10.0f64, n in 1usize..24) {
        let theta = PolarisationAngle::new(theta).unwrap();
        let rho = ensemble_density(theta, n).unwrap();
        prop_assert!((rho.matrix().trace() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(rho.matrix().hermiticity_defect() < 1e-14);
        prop_assert!(rho.purity_defect() < 1e-12);
        let rebuilt = density_from_amplitudes(&amplitude_vector(theta, n).unwrap()).unwrap();
        prop_assert!(rebuilt.matrix().max_abs_diff(rho.matrix()) < 1e-13);
    }

    #[test]
    fn combined_cost_is_symmetric_and_bounded(xi in 0.0..=1.0f64, delta in 0.0..=FRAC_PI_2, n in 1usize..40) {
        let d = HalfAngle::new(delta).unwrap();
        let c = combined_cost_closed(xi, d, n);
        prop_assert!((c - combined_cost_closed(1.0 - xi, d, n)).abs() < 1e-15);
        prop_assert!(c >= 0.0 && c <= xi.min(1.0 - xi) + 1e-15);
    }

    #[test]
    fn closed_and_eigen_routes_agree(xi in 0.0..=1.0f64, t1 in 0.0..2.0 * PI, t2 in 0.0..2.0 * PI, n in 1usize..10) {
        let p = BinaryProblem::from_angles(xi, t1, t2, n).unwrap();
        let eigen = binary_bayes_cost_eigen(&p).unwrap();
        prop_assert!((eigen - combined_cost_closed(xi, p.delta, n)).abs() < 1e-10);
    }

    #[test]
    fn posteriors_form_a_martingale(xi in 0.01..0.99f64, delta in 0.0..=FRAC_PI_2, n in 1usize..10) {
        let tree = enumerate_tree(
            xi,
            PolarisationAngle::new(0.3).unwrap(),
            PolarisationAngle::new(0.3 + 2.0 * delta).unwrap(),
            n,
        )
        .unwrap();
        for depth in 0..=n {
            let level = tree.level(depth);
            let total: f64 = level.iter().map(|node| node.weight).sum();
            let mean: f64 = level.iter().map(|node| node.weight * node.posterior).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!((mean - xi).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_update_stays_a_probability(xi in 0.0..=1.0f64, b1 in 0.0..=1.0f64, b2 in 0.0..=1.0f64, up: bool) {
        let outcome = if up { Outcome::Up } else { Outcome::Down };
        if let Ok(p) = posterior_update(xi, b1, b2, outcome) {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn partitions_round_trip(groups in prop::collection::vec(1usize..6, 1..6)) {
        let p = Partition::new(groups.clone()).unwrap();
        let parsed: Partition = p.to_string().parse().unwrap();
        prop_assert_eq!(parsed.groups(), &groups[..]);
    }

    #[test]
    fn formatted_numbers_keep_twelve_digits(x in prop::num::f64::NORMAL) {
        let back: f64 = format_number(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs());
    }
}

#[test]
fn compositions_are_complete() {
    for n in 1..=10 {
        let all = Partition::compositions(n);
        assert_eq!(all.len(), 1 << (n - 1));
        assert!(all.iter().all(|p| p.total() == n));
    }
}
