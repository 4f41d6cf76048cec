mod common;

use approx::assert_relative_eq;
use common::*;
use inar_core::estimate::{
    build_design, contrast, contrast_gradient, intensity_series, solve_cls, ThetaVector,
};
use inar_core::model::{renewal_sequence, solve_renewal};
use inar_core::simulate::{simulate_path_traced, RngStream, SimulationOptions};
use inar_core::{CountPath, ModelParams};
use nalgebra::SymmetricEigen;
use proptest::prelude::*;

fn kernel_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, 0..8).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        if total >= 0.95 {
            raw.iter().map(|v| v * 0.95 / total).collect()
        } else {
            raw
        }
    })
}

fn path_strategy(min_len: usize) -> impl Strategy<Value = CountPath> {
    prop::collection::vec(0u64..60, min_len..120).prop_map(|c| CountPath::from_counts(c).unwrap())
}

#[test]
fn renewal_matches_convolution_powers() {
    let kernels = [
        case1().kernel,
        case2().kernel,
        vec![0.1, 0.2, 0.3],
        vec![0.0, 0.0, 0.45, 0.0, 0.3],
    ];
    for kernel in kernels {
        let fast = renewal_sequence(&kernel, 40).unwrap();
        let slow = renewal_by_convolution_powers(&kernel, 40);
        for n in 1..=40 {
            assert!((fast.get(n) - slow[n - 1]).abs() <= 1e-10, "n = {n}");
        }
    }
}

#[test]
fn renewal_of_quarter_geometric_is_half_geometric() {
    // A(z) = a(z) / (1 - a(z)) with a(z) = (z/4)/(1 - z/4) gives A_n = 2^{-(n+1)}.
    // The kernel stops below 1e-12, so A_20 misses alpha_20 ~ 9.1e-13.
    let renewal = renewal_sequence(&case1().kernel, 20).unwrap();
    for n in 1..=20 {
        assert!((renewal.get(n) - 0.5f64.powi(n as i32 + 1)).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn solve_renewal_resubstitutes(kernel in kernel_strategy(),
                                   y in prop::collection::vec(-50.0..50.0f64, 1..60)) {
        let x = solve_renewal(&y, &kernel).unwrap();
        let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for n in 0..y.len() {
            let conv: f64 = (1..=n).map(|s| kernel.get(s - 1).copied().unwrap_or(0.0) * x[n - s]).sum();
            let bound = x.iter().fold(scale, |m, v| m.max(v.abs()));
            prop_assert!((x[n] - y[n] - conv).abs() <= 1e-12 * bound);
        }
    }

    #[test]
    fn design_matches_outer_products(path in path_strategy(2), p in 0usize..6) {
        prop_assume!(p < path.len());
        let sys = build_design(&path, p).unwrap();
        let (y, b) = naive_design(&path, p);
        let scale = y.amax().max(1.0);
        prop_assert!((&sys.y - &y).amax() <= 1e-12 * scale);
        prop_assert!((&sys.b - &b).amax() <= 1e-12 * scale);
        prop_assert_eq!(&sys.y, &sys.y.transpose());
        let eig = SymmetricEigen::new(sys.y.clone());
        prop_assert!(eig.eigenvalues.min() >= -1e-10 * sys.y.trace());
    }

    #[test]
    fn estimate_is_global_minimiser(path in path_strategy(25), p in 1usize..4,
                                    delta in prop::collection::vec(-1.0..1.0f64, 4)) {
        let sys = build_design(&path, p).unwrap();
        let Ok(theta) = solve_cls(&sys) else { return Ok(()) };
        let at_min = contrast(&path, &theta, p).unwrap();
        let moved = ThetaVector::new(
            theta.mu + delta[0],
            theta.betas.iter().zip(&delta[1..]).map(|(b, d)| b + 0.1 * d).collect(),
        );
        let elsewhere = contrast(&path, &moved, p).unwrap();
        prop_assert!(elsewhere >= at_min - 1e-9 * at_min.abs().max(1.0));
        // the minimum value is -theta^T b
        let b_dot = theta.to_vector().dot(&sys.b);
        prop_assert!((at_min + b_dot).abs() <= 1e-9 * b_dot.abs().max(1.0));
    }

    #[test]
    fn capping_never_hurts_with_nonnegative_truth(
        rows in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 3), 1..20),
        truth in prop::collection::vec(0.0..1.0f64, 2),
    ) {
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|mut r| { r[0] += 10.0; r }).collect();
        let truth = ThetaVector::new(10.0, truth);
        let raw = inar_core::montecarlo::summarize(&rows, &truth, false).unwrap();
        let capped = inar_core::montecarlo::summarize(&rows, &truth, true).unwrap();
        prop_assert!(capped.mse <= raw.mse + 1e-15);
        prop_assert!(capped.rel_err_alpha <= raw.rel_err_alpha + 1e-15);
        prop_assert_eq!(capped.mean_theta, raw.mean_theta);
    }
}

#[test]
fn contrast_identities_on_random_pairs() {
    let mut rng = RngStream::new(7, 99);
    for i in 0..100 {
        let params = ModelParams::new(
            5.0 + 50.0 * rng.uniform(),
            vec![0.5 * rng.uniform(), 0.2 * rng.uniform()],
        );
        let path = sim(&params, 50 + (i * 7) % 300, i as u64);
        let p = 1 + i % 5;
        let sys = build_design(&path, p).unwrap();
        let theta = ThetaVector::new(
            100.0 * (rng.uniform() - 0.5),
            (0..p).map(|_| rng.uniform() - 0.5).collect(),
        );
        let v = theta.to_vector();
        let direct = contrast(&path, &theta, p).unwrap();
        let linear = -2.0 * v.dot(&sys.b);
        let quadratic = v.dot(&(&sys.y * &v));
        let form = linear + quadratic;
        let scale = linear.abs() + quadratic.abs();
        assert!(
            (direct - form).abs() <= 1e-10 * scale,
            "pair {i}: {direct} vs {form}"
        );

        // central differences against the analytic gradient
        let grad = contrast_gradient(&sys, &theta).unwrap();
        for j in 0..=p {
            let h = 1e-4 * v[j].abs().max(1.0);
            let mut up = v.clone();
            let mut down = v.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (contrast(&path, &ThetaVector::from_vector(&up), p).unwrap()
                - contrast(&path, &ThetaVector::from_vector(&down), p).unwrap())
                / (2.0 * h);
            let tol = 1e-6 * grad[j].abs().max(grad.amax() * 1e-3).max(1.0);
            assert!(
                (fd - grad[j]).abs() <= tol,
                "pair {i}, component {j}: {fd} vs {}",
                grad[j]
            );
        }
    }
}

#[test]
fn normal_equations_solved_to_working_precision() {
    for (params, seed) in [
        (case1(), 1),
        (case2(), 2),
        (ModelParams::new(3.0, vec![0.3, 0.2]), 3),
    ] {
        let path = sim(&params, 600, seed);
        let sys = build_design(&path, 10).unwrap();
        let theta = solve_cls(&sys).unwrap().to_vector();
        let resid = (&sys.y * &theta - &sys.b).norm();
        assert!(resid <= 1e-8 * sys.b.norm().max(1.0));
    }
}

#[test]
fn simulator_intensity_is_direct_convolution() {
    let params = case1();
    let mut rng = RngStream::new(11, 4);
    let (path, lambdas) =
        simulate_path_traced(&params, 400, &mut rng, SimulationOptions::default()).unwrap();
    let x = path.values();
    for n in 0..x.len() {
        let direct = params.nu + (1..=n).map(|k| params.alpha(k) * x[n - k]).sum::<f64>();
        assert_relative_eq!(lambdas[n], direct, max_relative = 1e-12);
    }
    // with the true finite kernel as theta, the estimator's intensity agrees
    let truth = ThetaVector::new(params.nu, params.kernel.clone());
    let phi = intensity_series(&path, &truth, params.kernel.len()).unwrap();
    for (a, b) in phi.iter().zip(&lambdas) {
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }
}

#[test]
fn intensity_lag_one_example() {
    let path = CountPath::from_counts(vec![3, 1, 4, 1, 5]).unwrap();
    let phi = intensity_series(&path, &ThetaVector::new(2.0, vec![0.5]), 1).unwrap();
    assert_eq!(phi, vec![2.0, 3.5, 2.5, 4.0, 2.5]);
}

#[test]
fn paths_depend_only_on_seed_and_stream() {
    let params = case2();
    let a = sim(&params, 300, 5);
    let b = sim(&params, 300, 5);
    assert_eq!(a.counts, b.counts);
    let other_stream =
        inar_core::simulate::simulate_path(&params, 300, &mut RngStream::new(5, 1)).unwrap();
    assert_ne!(a.counts, other_stream.counts);
}
