use adaregret::harness::{
    audit_run, grid_comparator, interval_family, interval_regret, run, AuditOptions, ComparatorOracle,
    IntervalFamily, LearnerSpec, PgdOptions,
};
use adaregret::sacs_dyn::marker_count_bound;
use adaregret::{Domain, LearnerKind, LossFunction, Scenario, ShiftedQuadratic};
use proptest::prelude::*;

fn ball() -> Domain {
    Domain::unit_ball(2, 1.0).unwrap()
}

fn small_options() -> AuditOptions {
    AuditOptions {
        family: IntervalFamily::Sampled { n: 60 },
        ..AuditOptions::default()
    }
}

fn audited(kind: LearnerKind, scenario: &Scenario, options: &AuditOptions) -> adaregret::harness::AuditReport {
    let losses = scenario.generate().unwrap();
    let trace = run(&LearnerSpec::new(kind), &scenario.domain, &losses).unwrap();
    audit_run(&trace, &scenario.domain, &losses, &scenario.stage_ranges(), options).unwrap()
}

const KINDS: [LearnerKind; 4] = [
    LearnerKind::Sogd,
    LearnerKind::OgdConstant,
    LearnerKind::Sacs,
    LearnerKind::SacsCpgc,
];

#[test]
fn zero_loss_scenario_passes_with_zero_regret() {
    let scenario = Scenario {
        horizon: 200,
        domain: ball(),
        stage_starts: vec![1, 101],
        stage_targets: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        jitter: 0.0,
        seed: 0,
    };
    for kind in KINDS {
        let rep = audited(kind, &scenario, &small_options());
        assert!(rep.passed, "{kind:?}");
        for r in &rep.reports {
            assert_eq!(r.regret, 0.0);
            assert!(r.margin >= 0.0 && r.margin == r.bound);
        }
    }
}

#[test]
fn every_learner_passes_a_noisy_run() {
    let scenario = Scenario::piecewise(ball(), 512, 6, 0.15, 21).unwrap();
    for kind in KINDS {
        let rep = audited(kind, &scenario, &small_options());
        assert!(rep.passed, "{kind:?}: {:?}", rep.checks);
        assert!(rep.reports.windows(2).all(|p| p[0].margin <= p[1].margin));
    }
}

#[test]
fn exhaustive_family_covers_every_interval() {
    let scenario = Scenario::piecewise(ball(), 64, 3, 0.05, 2).unwrap();
    let options = AuditOptions {
        family: IntervalFamily::Exhaustive,
        ..AuditOptions::default()
    };
    let rep = audited(LearnerKind::Sacs, &scenario, &options);
    assert_eq!(rep.reports.len(), 64 * 65 / 2);
    assert!(rep.passed);
    assert!(interval_family(IntervalFamily::Exhaustive, 257, &[], 0).is_err());
}

#[test]
fn removing_the_additive_term_is_caught() {
    let scenario = Scenario::piecewise(ball(), 256, 4, 0.05, 3).unwrap();
    let options = AuditOptions {
        a_scale: 0.0,
        ..small_options()
    };
    let rep = audited(LearnerKind::Sacs, &scenario, &options);
    assert!(!rep.passed);
    assert!(rep.check("sacs-interval").unwrap().violations > 0);
}

#[test]
fn regret_arithmetic() {
    let domain = Domain::unit_ball(1, 10.0).unwrap();
    // Target at the center, where SOGD starts.
    let losses: Vec<LossFunction> = (0..10)
        .map(|_| ShiftedQuadratic::new(vec![0.0], 1.0).unwrap().into())
        .collect();
    let mut trace = run(&LearnerSpec::new(LearnerKind::Sogd), &domain, &losses).unwrap();
    // The learner starts at the optimum and never moves.
    assert_eq!(interval_regret(&trace, 1, 10, 0.0).unwrap(), 0.0);
    for r in &mut trace.rounds {
        r.loss = 0.5;
    }
    assert_eq!(interval_regret(&trace, 1, 10, 0.0).unwrap(), 5.0);
    assert!(interval_regret(&trace, 0, 3, 0.0).is_err());
    assert!(interval_regret(&trace, 4, 11, 0.0).is_err());
}

#[test]
fn oracle_reproduces_two_target_example() {
    let domain = Domain::unit_ball(2, 1.0).unwrap();
    let losses: Vec<LossFunction> = [[0.0, 0.0], [1.0, 0.0]]
        .iter()
        .map(|t| ShiftedQuadratic::for_domain(t.to_vec(), &domain).unwrap().into())
        .collect();
    let oracle = ComparatorOracle::new(&domain, &losses).unwrap();
    let c = oracle.best(1, 2).unwrap();
    assert!((c.point[0] - 0.5).abs() < 1e-15 && c.point[1].abs() < 1e-15);
    assert!((c.loss - 0.0625).abs() < 1e-15);
}

#[test]
fn marker_count_respects_hindsight_bound() {
    for seed in 0..4 {
        let scenario = Scenario::piecewise(ball(), 1024, 8, 0.4, 100 + seed).unwrap();
        let losses = scenario.generate().unwrap();
        let spec = LearnerSpec {
            threshold: Some(26.0),
            ..LearnerSpec::new(LearnerKind::SacsCpgc)
        };
        let trace = run(&spec, &scenario.domain, &losses).unwrap();
        let oracle = ComparatorOracle::new(&scenario.domain, &losses).unwrap();
        for (k, &t) in trace.markers().iter().enumerate() {
            let best = oracle.best(1, t).unwrap().loss;
            assert!(k < marker_count_bound(26.0, best));
        }
    }
}

fn targets() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 2), 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn audits_are_deterministic(seed in 0u64..500, kind in 0usize..4) {
        let scenario = Scenario::piecewise(ball(), 160, 3, 0.1, seed).unwrap();
        let options = AuditOptions { seed, ..small_options() };
        let a = audited(KINDS[kind], &scenario, &options);
        let b = audited(KINDS[kind], &scenario, &options);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn regret_against_a_fixed_point_is_additive(seed in 0u64..500, cut in 1usize..159, w in prop::collection::vec(-0.7..0.7f64, 2)) {
        let scenario = Scenario::piecewise(ball(), 160, 3, 0.1, seed).unwrap();
        let losses = scenario.generate().unwrap();
        let trace = run(&LearnerSpec::new(LearnerKind::Sacs), &scenario.domain, &losses).unwrap();
        let oracle = ComparatorOracle::new(&scenario.domain, &losses).unwrap();
        let whole = interval_regret(&trace, 1, 160, oracle.loss(&w, 1, 160).unwrap()).unwrap();
        let left = interval_regret(&trace, 1, cut, oracle.loss(&w, 1, cut).unwrap()).unwrap();
        let right = interval_regret(&trace, cut + 1, 160, oracle.loss(&w, cut + 1, 160).unwrap()).unwrap();
        prop_assert!((whole - left - right).abs() < 1e-9);
    }

    #[test]
    fn closed_form_matches_grid_refinement(ts in targets()) {
        let domain = ball();
        let losses: Vec<LossFunction> = ts
            .iter()
            .map(|t| ShiftedQuadratic::for_domain(t.clone(), &domain).unwrap().into())
            .collect();
        let oracle = ComparatorOracle::new(&domain, &losses).unwrap();
        let n = losses.len();
        let exact = oracle.best(1, n).unwrap();
        let grid = grid_comparator(&domain, |w| oracle.loss(w, 1, n).unwrap(), 30).unwrap();
        prop_assert!((exact.loss - grid.loss).abs() <= 1e-6);
        prop_assert!(exact.loss <= grid.loss + 1e-12);
    }

    #[test]
    fn closed_form_matches_projected_gradient(ts in targets()) {
        let domain = ball();
        let losses: Vec<LossFunction> = ts
            .iter()
            .map(|t| ShiftedQuadratic::for_domain(t.clone(), &domain).unwrap().into())
            .collect();
        let exact = ComparatorOracle::new(&domain, &losses).unwrap();
        let pgd = ComparatorOracle::iterative(&domain, &losses, PgdOptions::default()).unwrap();
        let n = losses.len();
        let a = exact.best(1, n).unwrap();
        let b = pgd.best(1, n).unwrap();
        prop_assert!(b.converged);
        prop_assert!((a.loss - b.loss).abs() <= 1e-9);
    }
}
