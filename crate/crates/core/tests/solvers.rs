mod common;

use std::time::Duration;

use common::{oracle_instances, rel_close};
use menuforge::generate::{random_instance, GenConfig};
use menuforge::{
    solve_anneal, solve_bnb, solve_brute, AnnealConfig, MenuLayout, ObjectiveKind, SolveError,
};

const KINDS: [ObjectiveKind; 2] = [ObjectiveKind::TwoFold, ObjectiveKind::Ift];

#[test]
fn bnb_matches_brute_force() {
    for (k, inst) in oracle_instances().iter().enumerate() {
        for kind in KINDS {
            let brute = solve_brute(inst, kind).unwrap();
            let bnb = solve_bnb(inst, kind, None, None).unwrap();
            assert!(rel_close(brute.objective, bnb.objective, 1e-9), "instance {k} {kind:?}: {} vs {}", brute.objective, bnb.objective);
            assert_eq!(brute.layout, bnb.layout, "instance {k} {kind:?}");
            assert_eq!(bnb.gap, Some(0.0));
        }
    }
}

#[test]
fn brute_force_examples() {
    let one = random_instance(&GenConfig::new(1, 3, 0.5)).unwrap();
    let r = solve_brute(&one, ObjectiveKind::Ift).unwrap();
    assert_eq!(r.layout, MenuLayout::from_nested(vec![vec![vec![0]]]));
    let big = random_instance(&GenConfig::new(9, 3, 0.5)).unwrap();
    assert!(matches!(solve_brute(&big, ObjectiveKind::Ift), Err(SolveError::TooLarge { n: 9, max: 8 })));
}

#[test]
fn warm_start_with_optimum_needs_no_improvement() {
    for inst in oracle_instances().iter().take(8) {
        for kind in KINDS {
            let brute = solve_brute(inst, kind).unwrap();
            let warm = solve_bnb(inst, kind, None, Some(&brute.layout)).unwrap();
            assert_eq!(warm.incumbent_updates, 0);
            assert_eq!(warm.layout, brute.layout);
        }
    }
}

#[test]
fn time_limited_bnb_reports_a_gap() {
    let inst = random_instance(&GenConfig::new(20, 11, 0.6)).unwrap();
    for kind in KINDS {
        let r = solve_bnb(&inst, kind, Some(Duration::from_millis(1)), None).unwrap();
        r.layout.check_limits(&inst.limits).unwrap();
        assert!(r.layout.validate(20).is_empty());
        assert!(r.gap.unwrap() > 0.0, "{kind:?}");
        let bound = r.best_bound.unwrap();
        match kind {
            ObjectiveKind::Ift => assert!(bound <= r.objective),
            ObjectiveKind::TwoFold => assert!(bound >= r.objective),
        }
    }
}

#[test]
fn anneal_is_deterministic_and_never_beats_the_optimum() {
    for inst in oracle_instances().iter().take(6) {
        for kind in KINDS {
            let best = solve_brute(inst, kind).unwrap();
            let cfg = AnnealConfig { iterations_per_temperature: 50, ..AnnealConfig::with_seed(5) };
            let a = solve_anneal(inst, kind, &cfg, None).unwrap();
            let b = solve_anneal(inst, kind, &cfg, None).unwrap();
            assert_eq!(a.layout, b.layout);
            assert_eq!(a.objective, b.objective);
            assert_eq!(a.evaluations, b.evaluations);
            assert!(a.gap.is_none() && a.best_bound.is_none());
            assert!(a.layout.validate_with_loner(inst.n(), inst.loner_id).is_empty());
            assert!(a.layout.fits(&inst.limits));
            let (got, opt) = (kind.to_cost(a.objective), kind.to_cost(best.objective));
            assert!(got >= opt || rel_close(got, opt, 1e-9), "{got} < {opt}");
        }
    }
}

#[test]
fn frozen_chain_returns_its_start() {
    let inst = &oracle_instances()[3];
    let best = solve_brute(inst, ObjectiveKind::Ift).unwrap();
    let cfg = AnnealConfig { initial_temperature: Some(1e-12), ..AnnealConfig::with_seed(9) };
    let r = solve_anneal(inst, ObjectiveKind::Ift, &cfg, Some(&best.layout)).unwrap();
    assert_eq!(r.layout, best.layout);
    assert_eq!(r.incumbent_updates, 0);
}

#[test]
fn invalid_anneal_configs_are_rejected() {
    let inst = &oracle_instances()[0];
    for cfg in [
        AnnealConfig { cooling_rate: 1.0, ..AnnealConfig::default() },
        AnnealConfig { cooling_rate: 0.0, ..AnnealConfig::default() },
        AnnealConfig { iterations_per_temperature: 0, ..AnnealConfig::default() },
        AnnealConfig { min_temperature: 0.0, ..AnnealConfig::default() },
        AnnealConfig { initial_temperature: Some(-1.0), ..AnnealConfig::default() },
    ] {
        assert!(matches!(solve_anneal(inst, ObjectiveKind::Ift, &cfg, None), Err(SolveError::InvalidConfig(_))));
    }
}
