use adaregret::intervals::{cgc_cover, cgc_interval_at, cover_length_bound, gc_intervals_at, marker_cover};
use adaregret::meta::{log_weight, normalized_from_log, weight};
use adaregret::sacs::Sacs;
use adaregret::sacs_dyn::SacsCpgc;
use adaregret::sogd::Sogd;
use adaregret::vector::dist;
use adaregret::{Domain, Learner, LossFunction, Scenario, ShiftedQuadratic};
use proptest::prelude::*;

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, dim)
}

fn domains() -> impl Strategy<Value = Domain> {
    prop_oneof![
        (point(3), 0.1..3.0f64).prop_map(|(c, r)| Domain::ball(c, r).unwrap()),
        (point(3), prop::collection::vec(0.1..3.0f64, 3)).prop_map(|(c, h)| Domain::axis_box(c, h).unwrap()),
    ]
}

fn scenario(seed: u64, stages: usize, jitter: f64) -> (Scenario, Vec<LossFunction>) {
    let sc = Scenario::piecewise(Domain::unit_ball(2, 1.0).unwrap(), 300, stages, jitter, seed).unwrap();
    let losses = sc.generate().unwrap();
    (sc, losses)
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_lands_inside(d in domains(), x in point(3)) {
        let p = d.project(&x).unwrap();
        prop_assert!(d.contains(&p, 1e-12));
        let q = d.project(&p).unwrap();
        prop_assert!(dist(&p, &q) <= 1e-12);
        if d.contains(&x, 0.0) {
            prop_assert!(dist(&p, &x) <= 1e-12);
        }
    }

    #[test]
    fn projection_is_nonexpansive(d in domains(), x in point(3), y in point(3)) {
        let px = d.project(&x).unwrap();
        let py = d.project(&y).unwrap();
        prop_assert!(dist(&px, &py) <= dist(&x, &y) + 1e-12);
    }

    #[test]
    fn one_cgc_interval_per_start_with_doubling(t in 1usize..1 << 40) {
        let iv = cgc_interval_at(t).unwrap();
        prop_assert_eq!(iv.start, t);
        prop_assert!(iv.len().is_power_of_two());
        prop_assert_eq!(t % iv.len(), 0);
        prop_assert_eq!((t / iv.len()) % 2, 1);
        let next = cgc_interval_at(iv.end + 1).unwrap();
        prop_assert!(next.len() >= 2 * iv.len());
    }

    #[test]
    fn cgc_interval_is_among_gc_intervals(t in 1usize..100_000) {
        let iv = cgc_interval_at(t).unwrap();
        let gc = gc_intervals_at(t, usize::MAX / 4).unwrap();
        prop_assert!(gc.contains(&iv));
        prop_assert!(gc.windows(2).all(|p| p[1].len() == 2 * p[0].len()));
    }

    #[test]
    fn covers_are_consecutive_and_short(r in 1usize..1 << 30, len in 0usize..1 << 20) {
        let s = r + len;
        for cover in [cgc_cover(r, s).unwrap(), marker_cover(r, s).unwrap()] {
            prop_assert!(cover.is_well_formed());
            prop_assert_eq!(cover.query_start(), r);
            prop_assert!(cover.intervals.windows(2).all(|p| p[1].start == p[0].end + 1));
            prop_assert!(cover.intervals.last().unwrap().end >= s);
            prop_assert!(cover.len() <= cover_length_bound(r, s));
            prop_assert!((1usize << cover_length_bound(r, s)) >= s - r + 2);
        }
    }

    #[test]
    fn weight_grows_with_regret(r in -3.0..40.0f64, dr in 0.0..5.0f64, c in 0.0..300.0f64) {
        let lo = log_weight(r, c).unwrap();
        let hi = log_weight(r + dr, c).unwrap();
        prop_assert!(hi >= lo - 1e-12 * lo.abs().max(1.0));
    }

    #[test]
    fn log_weight_matches_direct_formula(r in -3.0..30.0f64, c in 0.0..200.0f64) {
        let phi = |x: f64| if x <= 0.0 { 1.0 } else { (x * x / (3.0 * (c + 1.0))).exp() };
        let direct = 0.5 * (phi(r + 1.0) - phi(r - 1.0));
        let w = weight(r, c).unwrap();
        prop_assert!((w - direct).abs() <= 1e-10 * direct.max(1.0), "{w} vs {direct}");
    }

    #[test]
    fn distributions_sum_to_one(lw in prop::collection::vec(-700.0..700.0f64, 1..64), shift in -100.0..100.0f64) {
        let p = normalized_from_log(&lw).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let shifted: Vec<f64> = lw.iter().map(|x| x + shift).collect();
        let q = normalized_from_log(&shifted).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn sogd_step_sizes_never_grow(seed in 0u64..1000, jitter in 0.0..0.3f64) {
        let (sc, losses) = scenario(seed, 3, jitter);
        let mut s = Sogd::new(&sc.domain, 1.0, None).unwrap();
        let mut last = s.step_size();
        for f in &losses {
            let step = s.step(f).unwrap();
            prop_assert!(step.eta <= last);
            prop_assert!(sc.domain.contains(&step.prediction, 1e-12));
            last = step.eta;
        }
    }

    #[test]
    fn sogd_replay_is_exact(seed in 0u64..1000) {
        let (sc, losses) = scenario(seed, 4, 0.1);
        let mut live = Sogd::new(&sc.domain, 1.0, None).unwrap();
        let mut replay = Sogd::new(&sc.domain, 1.0, None).unwrap();
        for f in &losses {
            let a = live.step(f).unwrap();
            let g = f.gradient(replay.prediction()).unwrap();
            let b = replay.step_with(a.loss, &g).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn sacs_plays_inside_with_normalized_weights(seed in 0u64..1000, jitter in 0.0..0.3f64) {
        let (sc, losses) = scenario(seed, 5, jitter);
        let mut sacs = Sacs::new(&sc.domain, 1.0).unwrap();
        for f in &losses {
            let w = sacs.predict().unwrap();
            prop_assert!(sc.domain.contains(&w, 1e-12));
            let p = sacs.active().normalized_weights().unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            // Log₂ growth of the active set.
            let t = sacs.round() as f64;
            prop_assert!(sacs.active().len() as f64 <= t.log2().floor() + 1.0);
            sacs.update(f).unwrap();
        }
    }

    #[test]
    fn cpgc_runs_keep_marker_invariants(seed in 0u64..1000, jitter in 0.0..0.5f64) {
        let (sc, losses) = scenario(seed, 6, jitter);
        let h = losses[0].smoothness();
        let mut learner = SacsCpgc::new(&sc.domain, 1.0, h, Some(26.0)).unwrap();
        let mut previous = 0;
        let mut latest_total = 0.0;
        for f in &losses {
            let info = learner.play(f).unwrap();
            latest_total += info.expert_losses.last().unwrap().loss;
            prop_assert!(sc.domain.contains(&info.prediction, 1e-12));
            let m = learner.markers();
            prop_assert!(m.count == previous || m.count == previous + 1);
            prop_assert_eq!(info.marker, m.count == previous + 1);
            previous = m.count;
            // Each marker after the first costs more than C of the newest
            // expert's loss.
            prop_assert!((m.count - 1) as f64 * learner.threshold() < latest_total + 1e-9 || m.count == 1);
        }
    }
}

#[test]
fn scaled_quadratic_keeps_self_bounding() {
    let f = LossFunction::from(ShiftedQuadratic::new(vec![0.3, -0.2], 0.25).unwrap());
    for w in [[0.0, 0.0], [1.0, 1.0], [-0.7, 0.1]] {
        let (v, g) = f.eval(&w).unwrap();
        let gg: f64 = g.iter().map(|x| x * x).sum();
        assert!(gg <= 4.0 * f.smoothness() * v + 1e-15);
    }
}
