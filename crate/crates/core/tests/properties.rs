use proptest::prelude::*;
use wealth_exchange::ztransform::{
    characteristic_polynomial, characteristic_roots, closed_form, iterate_system, system_matrix,
    TwoEconomyParams,
};
use wealth_exchange::*;

fn agents(max: usize) -> impl Strategy<Value = Vec<AgentParams>> {
    prop::collection::vec((0.0f64..=1.0, 0.0f64..1e4), 2..max).prop_map(|v| {
        v.into_iter()
            .map(|(lambda, initial_wealth)| AgentParams {
                lambda,
                initial_wealth,
            })
            .collect()
    })
}

fn two_economy() -> impl Strategy<Value = TwoEconomyParams> {
    (
        0.0f64..1.0,
        0.0f64..1.0,
        0.0f64..=1.0,
        0.0f64..1e4,
        0.0f64..1e4,
    )
        .prop_map(|(lambda_x, lambda_y, epsilon, x0, y0)| TwoEconomyParams {
            lambda_x,
            lambda_y,
            epsilon,
            x0,
            y0,
        })
}

fn simplex(n: usize) -> impl Strategy<Value = EpsilonVector> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|u| normalize_epsilon(&u).unwrap())
}

proptest! {
    #[test]
    fn pairwise_delta_is_antisymmetric(
        (params, eps) in agents(12).prop_flat_map(|p| { let n = p.len(); (Just(p), simplex(n)) }),
        a in 0usize..12,
        b in 0usize..12,
    ) {
        let n = params.len();
        let (a, b) = (a % n, b % n);
        let state = WealthState::initial(&params);
        let ab = pairwise_delta(&state, &params, &eps, a, b).unwrap();
        let ba = pairwise_delta(&state, &params, &eps, b, a).unwrap();
        prop_assert!((ab + ba).abs() <= 1e-9 * (1.0 + ab.abs()));
    }

    #[test]
    fn step_conserves_and_stays_non_negative(
        (params, eps) in agents(30).prop_flat_map(|p| { let n = p.len(); (Just(p), simplex(n)) }),
    ) {
        let state = WealthState::initial(&params);
        let next = step(&state, &params, &eps).unwrap();
        let total = state.total();
        prop_assert!((next.total() - total).abs() <= 1e-9 * total.max(1.0));
        prop_assert!(next.wealth.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn frozen_state_is_a_fixed_point(
        wealth in prop::collection::vec(0.0f64..1e4, 1..20),
        seed in any::<u64>(),
    ) {
        let params: Vec<AgentParams> = wealth
            .iter()
            .map(|w| AgentParams { lambda: 1.0, initial_wealth: *w })
            .collect();
        let states = run_trajectory(&params, &NoiseBackground::Uniform, 20, RngSeed(seed), 5).unwrap();
        for s in &states {
            prop_assert_eq!(&s.wealth, &wealth);
        }
    }

    #[test]
    fn normalized_vectors_lie_on_the_simplex(u in prop::collection::vec(0.0f64..=1.0, 1..200)) {
        prop_assume!(u.iter().any(|x| *x > 0.0));
        let eps = normalize_epsilon(&u).unwrap();
        let sum: f64 = eps.values().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(eps.values().iter().all(|e| (0.0..=1.0).contains(e)));
    }

    #[test]
    fn closed_form_matches_matrix_iteration(p in two_economy()) {
        let sol = closed_form(&p);
        let a = system_matrix(&p);
        let w = p.total_wealth().max(1.0);
        let (mut x, mut y) = (p.x0, p.y0);
        for m in 0..=1000u64 {
            let (cx, cy) = sol.evaluate(m);
            prop_assert!((cx - x).abs() <= 1e-9 * w, "m={} x {} vs {}", m, cx, x);
            prop_assert!((cy - y).abs() <= 1e-9 * w);
            prop_assert!((cx + cy - p.total_wealth()).abs() <= 1e-9 * w);
            (x, y) = (a[0][0] * x + a[0][1] * y, a[1][0] * x + a[1][1] * y);
        }
        prop_assert_eq!(iterate_system(&p, 0), (p.x0, p.y0));
    }

    #[test]
    fn root_identities(p in two_economy()) {
        let r = characteristic_roots(&p);
        let m = system_matrix(&p);
        let poly = characteristic_polynomial(&p);
        prop_assert!(poly.eval(1.0).abs() <= 1e-12);
        prop_assert!(poly.eval(r.root_decay).abs() <= 1e-12);
        prop_assert!((r.root_decay - (m[0][0] + m[1][1] - 1.0)).abs() <= 1e-12);
        // Eigenvalue check: det(M - rI) = 0.
        let det = (m[0][0] - r.root_decay) * (m[1][1] - r.root_decay) - m[0][1] * m[1][0];
        prop_assert!(det.abs() <= 1e-12);
        let lo = p.lambda_x.min(p.lambda_y);
        let hi = p.lambda_x.max(p.lambda_y);
        prop_assert!(r.root_decay >= lo - 1e-15 && r.root_decay <= hi + 1e-15);
        prop_assert!(r.root_decay < 1.0);
        prop_assert!((m[0][0] + m[1][0] - 1.0).abs() <= 1e-15);
        prop_assert!((m[0][1] + m[1][1] - 1.0).abs() <= 1e-15);
    }
}
