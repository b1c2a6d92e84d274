mod common;

use std::collections::BTreeMap;

use common::{oracle_instances, rel_close};
use menuforge::adapt::tradeoff_csv;
use menuforge::layout::{enumerate_layouts, random_layout};
use menuforge::{
    adapt_layout, compute_expectations, eval_adapted, layout_distance, parse_instance, personalize, solve_anneal,
    solve_bnb, solve_brute, sweep, AnnealConfig, ObjectiveKind, SolverChoice,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const WS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[test]
fn sweep_is_monotone_with_exact_endpoints() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for (k, inst) in oracle_instances().iter().enumerate().filter(|(_, i)| i.n() <= 6).take(8) {
        for kind in [ObjectiveKind::Ift, ObjectiveKind::TwoFold] {
            let baseline = random_layout(inst.n(), &inst.limits, inst.loner_id, &mut rng);
            let pts = sweep(inst, &baseline, &WS, kind, &SolverChoice::Bnb { time_limit: None }).unwrap();
            for pair in pts.windows(2) {
                assert!(pair[1].distance <= pair[0].distance, "instance {k}: {pts:?}");
                assert!(pair[1].performance >= pair[0].performance - 1e-9 * pair[0].performance.abs().max(1.0));
            }
            for p in &pts {
                assert!(p.layout.validate_with_loner(inst.n(), inst.loner_id).is_empty());
                assert_eq!(p.distance, layout_distance(&p.layout, &baseline).unwrap().total());
            }
            assert_eq!(pts[4].layout, baseline);
            assert_eq!(pts[4].distance, 0);
            let free = solve_brute(inst, kind).unwrap();
            assert!(rel_close(pts[0].performance, kind.to_cost(free.objective), 1e-9));
        }
    }
}

#[test]
fn half_weight_matches_brute_force_over_the_blend() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for inst in oracle_instances().iter().filter(|i| i.n() <= 5).take(5) {
        let e = compute_expectations(inst);
        let baseline = random_layout(inst.n(), &inst.limits, inst.loner_id, &mut rng);
        let r = adapt_layout(inst, &baseline, 0.5, ObjectiveKind::Ift, &SolverChoice::Bnb { time_limit: None }).unwrap();
        let best = enumerate_layouts(inst.n(), &inst.limits)
            .unwrap()
            .filter(|l| l.validate_with_loner(inst.n(), inst.loner_id).is_empty())
            .map(|l| eval_adapted(&l, &baseline, inst, 0.5, ObjectiveKind::Ift, &e).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(rel_close(r.objective, best, 1e-9), "{} vs {best}", r.objective);
        let brute = adapt_layout(inst, &baseline, 0.5, ObjectiveKind::Ift, &SolverChoice::Brute).unwrap();
        assert_eq!(brute.layout, r.layout);
    }
}

#[test]
fn optimal_baseline_is_kept_at_every_weight() {
    let inst = &oracle_instances()[4];
    let best = solve_bnb(inst, ObjectiveKind::Ift, None, None).unwrap();
    let pts = sweep(inst, &best.layout, &WS, ObjectiveKind::Ift, &SolverChoice::Brute).unwrap();
    assert!(pts.iter().all(|p| p.layout == best.layout && p.distance == 0));
    let csv = tradeoff_csv(&pts);
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("w,distance,performance\n0,0,"));
}

#[test]
fn annealing_adaptation_at_full_weight_keeps_baseline() {
    let inst = &oracle_instances()[7];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let baseline = random_layout(inst.n(), &inst.limits, inst.loner_id, &mut rng);
    let r = adapt_layout(inst, &baseline, 1.0, ObjectiveKind::TwoFold, &SolverChoice::Anneal(AnnealConfig::with_seed(1))).unwrap();
    assert_eq!(r.layout, baseline);
    assert_eq!(r.distance, Some(0));
}

#[test]
fn expert_and_novice_profiles_get_different_layouts() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../instances/notepad.json")).unwrap();
    let novice = parse_instance(&text).unwrap();
    let basics = ["New", "Open", "Save", "Cut", "Copy", "Paste", "Undo", "Print"];
    let profile: BTreeMap<usize, f64> =
        novice.commands.iter().filter(|c| basics.contains(&c.name.as_str())).map(|c| (c.id, 0.0)).collect();
    let expert = personalize(&novice, &profile).unwrap();
    assert_eq!(expert.associations, novice.associations);
    let cfg = AnnealConfig { iterations_per_temperature: 100, ..AnnealConfig::with_seed(11) };
    let a = solve_anneal(&novice, ObjectiveKind::Ift, &cfg, None).unwrap();
    let b = solve_anneal(&expert, ObjectiveKind::Ift, &cfg, None).unwrap();
    assert_ne!(a.layout, b.layout);
}
