use proptest::prelude::*;

use splitedge::acquisition::{constraint_penalty, expected_improvement, weights_at, AcquisitionWeights};
use splitedge::channel::{db_to_linear, linear_to_db};
use splitedge::gp::NormalizedInput;
use splitedge::harness::{compute_regret, decay_exponent};
use splitedge::system::{achievable_rate, compute_delays, local_compute_energy, Budget, RadioSpec, SplitConfig};
use splitedge::utility::Evaluation;
use splitedge::{CostBreakdown, Problem, RunRecord};

fn cost(e: f64, tau: f64, budget: &Budget) -> CostBreakdown {
    let mut c = CostBreakdown {
        e_compute_j: e,
        e_transmit_j: 0.0,
        tau_device_s: tau,
        tau_transmit_s: 0.0,
        tau_server_s: 0.0,
        feasible: false,
    };
    c.feasible = c.meets(budget);
    c
}

proptest! {
    #[test]
    fn rate_nondecreasing_in_power_and_gain(
        p in 0.01f64..1.0, dp in 0.0f64..1.0,
        g_db in -130.0f64..-70.0, dg in 0.0f64..20.0,
    ) {
        let radio = RadioSpec::default();
        let g = db_to_linear(g_db);
        let r = achievable_rate(p, g, &radio);
        prop_assert!(achievable_rate(p + dp, g, &radio) >= r);
        prop_assert!(achievable_rate(p, db_to_linear(g_db + dg), &radio) >= r);
        prop_assert!(r > 0.0);
    }

    #[test]
    fn db_round_trip(db in -200.0f64..50.0) {
        let back = linear_to_db(db_to_linear(db));
        prop_assert!((back - db).abs() <= 1e-12 * db.abs().max(1.0));
        let lin = db_to_linear(db);
        prop_assert!((db_to_linear(linear_to_db(lin)) - lin).abs() <= 1e-12 * lin);
    }

    #[test]
    fn compute_costs_monotone_in_layer(l in 1usize..37) {
        let p = Problem::bundled();
        let sys = &p.system;
        let (a, b) = (SplitConfig::new(l, 0.3), SplitConfig::new(l + 1, 0.3));
        prop_assert!(local_compute_energy(&b, &sys.profile, &sys.device) >= local_compute_energy(&a, &sys.profile, &sys.device));
        let (dev_a, srv_a) = compute_delays(&a, &sys.profile, &sys.device, &sys.server);
        let (dev_b, srv_b) = compute_delays(&b, &sys.profile, &sys.device, &sys.server);
        prop_assert!(dev_b >= dev_a);
        prop_assert!(srv_b <= srv_a);
    }

    #[test]
    fn transmit_delay_nonincreasing_in_power(l in 1usize..=37, p in 0.1f64..0.5, dp in 0.0f64..0.4, frame in 0usize..45) {
        let prob = Problem::bundled();
        let g = prob.trace.gain_at(frame);
        let hi = (p + dp).min(0.5);
        let a = prob.system.cost(&SplitConfig::new(l, p), g);
        let b = prob.system.cost(&SplitConfig::new(l, hi), g);
        prop_assert!(b.tau_transmit_s <= a.tau_transmit_s);
    }

    #[test]
    fn feasibility_flag_matches_budget_inequalities(l in 1usize..=37, p in 0.1f64..=0.5, frame in 0usize..45) {
        let prob = Problem::bundled();
        let c = prob.system.cost(&SplitConfig::new(l, p), prob.trace.gain_at(frame));
        let b = prob.system.budget;
        let direct = c.e_compute_j + c.e_transmit_j <= b.e_max_j
            && c.tau_device_s + c.tau_transmit_s + c.tau_server_s <= b.tau_max_s;
        prop_assert_eq!(c.feasible, direct);
        prop_assert_eq!(c, prob.system.cost(&SplitConfig::new(l, p), prob.trace.gain_at(frame)));
    }

    #[test]
    fn utility_bounded_and_power_independent_when_feasible(l in 1usize..=37, p in 0.1f64..=0.5, q in 0.1f64..=0.5, frame in 0usize..45) {
        let prob = Problem::bundled();
        let g = prob.trace.gain_at(frame);
        let budget = &prob.system.budget;
        let (a, b) = (SplitConfig::new(l, p), SplitConfig::new(l, q));
        let (ca, cb) = (prob.system.cost(&a, g), prob.system.cost(&b, g));
        let ua = prob.surface.accuracy(&a, &ca, budget);
        prop_assert!(ua <= prob.surface.base(l) && ua >= prob.surface.floor);
        if ca.feasible && cb.feasible {
            prop_assert_eq!(ua, prob.surface.accuracy(&b, &cb, budget));
        }
    }

    #[test]
    fn ei_nonnegative(mean in -3.0f64..3.0, std in 0.0f64..3.0, best in -3.0f64..3.0) {
        let ei = expected_improvement(mean, std, best);
        prop_assert!(ei >= 0.0);
        prop_assert!(ei >= (mean - best).max(0.0) - 1e-12);
        if std == 0.0 && mean <= best {
            prop_assert_eq!(ei, 0.0);
        }
    }

    #[test]
    fn ei_shift_invariant(mean in -1.0f64..1.0, std in 0.0f64..1.0, best in -1.0f64..1.0, c in 0.0f64..5.0) {
        let a = expected_improvement(mean, std, best);
        let b = expected_improvement(mean + c, std, best + c);
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn penalty_monotone_in_overshoot(e in 0.0f64..10.0, de in 0.0f64..5.0, tau in 0.0f64..10.0, dt in 0.0f64..5.0) {
        let b = Budget::default();
        let p0 = constraint_penalty(&cost(e, tau, &b), &b);
        prop_assert!(p0 >= 0.0);
        prop_assert!(constraint_penalty(&cost(e + de, tau + dt, &b), &b) >= p0);
        prop_assert_eq!(p0 == 0.0, cost(e, tau, &b).feasible);
    }

    #[test]
    fn schedule_weights_decay(t in 0.0f64..=1.0, s in 0.0f64..=1.0) {
        let w = AcquisitionWeights::default();
        let (b0, g0) = weights_at(&w, t.min(s));
        let (b1, g1) = weights_at(&w, t.max(s));
        prop_assert!(b1 <= b0 + 1e-15 && g1 <= g0 + 1e-15);
        prop_assert!(b1 >= w.base_end - 1e-15 && b0 <= w.base_start + 1e-15);
    }

    #[test]
    fn denormalize_stays_in_range_and_inverts(p in -0.5f64..1.5, l in -0.5f64..1.5) {
        let prob = Problem::bundled();
        let c = prob.system.denormalize(p, l);
        prop_assert!(c.layer >= 1 && c.layer <= 37);
        prop_assert!(c.power_w >= 0.1 && c.power_w <= 0.5);
        prop_assert!(prob.system.check(&c).is_ok());
        let (np, nl) = prob.system.normalize(&c);
        prop_assert_eq!(prob.system.denormalize(np, nl).layer, c.layer);
        prop_assert!((prob.system.denormalize(np, nl).power_w - c.power_w).abs() <= 1e-12);
        prop_assert!((np - p.clamp(0.0, 1.0)).abs() <= 1e-12);
    }

    #[test]
    fn record_best_is_monotone_and_regret_shapes_hold(us in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 1..40)) {
        let mut rec = RunRecord::new("p", 0);
        let b = Budget::default();
        for &(u, ok) in &us {
            let c = if ok { cost(1.0, 1.0, &b) } else { cost(9.0, 1.0, &b) };
            rec.push(&Evaluation { config: SplitConfig::new(1, 0.2), cost: c, utility: u });
        }
        let bests: Vec<f64> = rec.iterations.iter().filter_map(|it| it.best_so_far).collect();
        prop_assert!(bests.windows(2).all(|w| w[1] >= w[0]));
        let curve = compute_regret(&rec, 1.0);
        prop_assert!(curve.cumulative.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(curve.simple.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn exponent_invariant_to_rescaling(vals in proptest::collection::vec(0.01f64..1.0, 8..30), scale in 0.01f64..100.0) {
        let scaled: Vec<f64> = vals.iter().map(|v| v * scale).collect();
        match (decay_exponent(&vals, 2), decay_exponent(&scaled, 2)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9),
            (a, b) => prop_assert_eq!(a.is_some(), b.is_some()),
        }
    }

    #[test]
    fn normalized_distance_is_a_metric(a in (0.0f64..1.0, 0.0f64..1.0), b in (0.0f64..1.0, 0.0f64..1.0)) {
        let (x, y) = (NormalizedInput::new(a.0, a.1), NormalizedInput::new(b.0, b.1));
        prop_assert_eq!(x.distance(&y), y.distance(&x));
        prop_assert_eq!(x.distance(&x), 0.0);
    }
}
