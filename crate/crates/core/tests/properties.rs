use nalgebra::DMatrix;
use proptest::prelude::*;

use mjp_stein::engine::solve::{stationarity_residual, STEIN_TOL};
use mjp_stein::engine::{solve_stein, stationary_distribution, tv_distance, DiscreteDistribution};
use mjp_stein::factor::{coordinate_bound, factorize, verify_factorization, JumpVector};
use mjp_stein::model::operators::{newton_remainder_e2, TruncatedModel};
use mjp_stein::model::{build_elementary, jacobian_at_equilibrium, local_covariance};
use mjp_stein::spectral::{
    sigma_norm, solve_lyapunov, spectral_summary, CovarianceMatrix, DriftMatrix,
};

/// `B - (‖B‖_F + margin) I` is Hurwitz for any `B`.
fn hurwitz(d: usize) -> impl Strategy<Value = DriftMatrix> {
    (prop::collection::vec(-1.0..1.0f64, d * d), 0.1..1.0f64).prop_map(move |(b, margin)| {
        let b = DMatrix::from_row_slice(d, d, &b);
        let shift = b.norm() + margin;
        DriftMatrix::new(b - DMatrix::identity(d, d) * shift).unwrap()
    })
}

/// `L Lᵀ + floor I`.
fn covariance(d: usize) -> impl Strategy<Value = CovarianceMatrix> {
    (prop::collection::vec(-2.0..2.0f64, d * d), 0.2..2.0f64).prop_map(move |(l, floor)| {
        let l = DMatrix::from_row_slice(d, d, &l);
        let m = &l * l.transpose() + DMatrix::identity(d, d) * floor;
        CovarianceMatrix::new((&m + m.transpose()) * 0.5).unwrap()
    })
}

fn pair(max_d: usize) -> impl Strategy<Value = (DriftMatrix, CovarianceMatrix)> {
    (1..=max_d).prop_flat_map(|d| (hurwitz(d), covariance(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lyapunov_solution_satisfies_equation((a, s2) in pair(4)) {
        let g = solve_lyapunov(&a, &s2).unwrap();
        let am = a.matrix();
        let r = am * &g.sigma + &g.sigma * am.transpose() + s2.matrix();
        let scale = s2.max_abs();
        prop_assert!(r.amax() <= 1e-10 * scale, "residual {}", r.amax());
        prop_assert!((&g.sigma - g.sigma.transpose()).amax() <= 1e-12 * g.sigma.amax());
        prop_assert!(spectral_summary(&g.sigma).unwrap().lambda_min > 0.0);
        prop_assert!(g.alpha1 > 0.0);
    }

    #[test]
    fn sigma_norm_is_a_norm(
        (a, s2) in pair(3),
        raw in prop::collection::vec(-5.0..5.0f64, 6),
        k in -3.0..3.0f64,
    ) {
        let g = solve_lyapunov(&a, &s2).unwrap();
        let d = g.dim();
        let (x, y) = (&raw[..d], &raw[3..3 + d]);
        let nx = sigma_norm(&g, x).unwrap();
        let ny = sigma_norm(&g, y).unwrap();
        let sum: Vec<f64> = x.iter().zip(y).map(|(p, q)| p + q).collect();
        let scaled: Vec<f64> = x.iter().map(|v| k * v).collect();
        prop_assert!(nx >= 0.0);
        prop_assert!(sigma_norm(&g, &sum).unwrap() <= nx + ny + 1e-12 * (1.0 + nx + ny));
        prop_assert!((sigma_norm(&g, &scaled).unwrap() - k.abs() * nx).abs() <= 1e-12 * (1.0 + nx));
        prop_assert_eq!(sigma_norm(&g, &vec![0.0; d]).unwrap(), 0.0);
    }

    #[test]
    fn factorization_reconstructs_with_bounds(s2 in (2usize..=3).prop_flat_map(covariance)) {
        let ws = factorize(&s2).unwrap();
        let d = s2.dim();
        prop_assert!(verify_factorization(&ws, &s2) <= 1e-10 * s2.max_abs().max(1.0));
        prop_assert!(ws.entries.iter().all(|(_, w)| *w >= 0.0));
        prop_assert!(ws.is_symmetric());
        prop_assert!(ws.max_coordinate() as f64 <= coordinate_bound(&s2).unwrap());
        let quarter = 0.25 * s2.lambda_min();
        for i in 0..d {
            let w = ws.weight(&JumpVector::unit(d, i)).unwrap_or(0.0);
            prop_assert!(w >= quarter * (1.0 - 1e-12), "coordinate {i}: {w} < {quarter}");
        }
    }

    #[test]
    fn newton_remainder_vanishes_on_quadratics(
        d in 1usize..=3,
        m in prop::collection::vec(-4i64..=4, 9),
        b in prop::collection::vec(-4i64..=4, 3),
        w in prop::collection::vec(-2i64..=2, 3),
        j in prop::collection::vec(-3i64..=3, 3),
    ) {
        let h = |x: &[i64]| {
            let mut v = 0.0;
            for r in 0..x.len() {
                v += (b[r] * x[r]) as f64;
                for c in 0..x.len() {
                    v += (x[r] * m[r * 3 + c] * x[c]) as f64;
                }
            }
            v
        };
        prop_assert_eq!(newton_remainder_e2(&h, &w[..d], &j[..d]), 0.0);
    }

    #[test]
    fn elementary_round_trip(
        (a, s2) in (1usize..=3).prop_flat_map(|d| (hurwitz(d), covariance(d))),
        c0 in 0.5..3.0f64,
    ) {
        let c = vec![c0; a.dim()];
        let e = build_elementary(&c, &a, &s2).unwrap();
        let jac = jacobian_at_equilibrium(&e.spec);
        prop_assert!((jac.matrix() - a.matrix()).amax() <= 1e-10);
        let cov = local_covariance(&e.spec, &c).unwrap();
        prop_assert!((cov.matrix() - s2.matrix()).amax() <= 1e-10);
    }

    #[test]
    fn tv_is_a_bounded_metric(p in prop::collection::vec(0.0..1.0f64, 2..12), seed in 0.0..1.0f64) {
        let states: Vec<Vec<i64>> = (0..p.len() as i64).map(|i| vec![i]).collect();
        let q: Vec<f64> = p.iter().enumerate().map(|(i, v)| (v + seed * i as f64).fract() + 0.01).collect();
        let p: Vec<f64> = p.iter().map(|v| v + 0.01).collect();
        let pd = DiscreteDistribution::new(states.clone(), p).unwrap();
        let qd = DiscreteDistribution::new(states, q).unwrap();
        let t = tv_distance(&pd, &qd);
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert_eq!(t, tv_distance(&qd, &pd));
        prop_assert_eq!(tv_distance(&pd, &pd), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stationary_and_stein_residuals(
        (a, s2) in (1usize..=2).prop_flat_map(|d| (hurwitz(d), covariance(d))),
        n in 10u64..30,
        frac in 0.3..0.9f64,
        cut in 0.0..1.0f64,
    ) {
        let d = a.dim();
        let e = build_elementary(&vec![2.0; d], &a, &s2).unwrap().at_scale(n);
        let limit = e.spec.delta0() / e.geom.sigma_summary().lambda_max.sqrt();
        let model = TruncatedModel::new(e.spec, e.geom, frac * limit).unwrap();
        let chain = model.chain().unwrap();
        let pi = stationary_distribution(&chain).unwrap();
        prop_assert!(stationarity_residual(&chain, &pi.probs) <= 1e-12 * chain.uniformization_rate());
        let k = ((cut * chain.len() as f64) as usize).min(chain.len() - 1);
        let target: Vec<usize> = (0..=k).collect();
        let sol = solve_stein(&chain, &pi, &target).unwrap();
        prop_assert!(sol.residual <= STEIN_TOL);
        let centred: f64 = sol.values.iter().zip(&pi.probs).map(|(h, p)| h * p).sum();
        prop_assert!(centred.abs() <= 1e-12 * (1.0 + sol.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
    }
}
