use menuforge::generate::{random_instance, GenConfig};
use menuforge::layout::random_layout;
use menuforge::{
    augment_with_loner, bnb_bound, solve_anneal_problem, solve_brute, AnnealConfig, AssociationMatrix, Command,
    MenuLayout, ObjectiveKind, Problem, TaskInstance,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kind_strategy() -> impl Strategy<Value = ObjectiveKind> {
    prop_oneof![Just(ObjectiveKind::TwoFold), Just(ObjectiveKind::Ift)]
}

fn instance(n: usize, seed: u64, density: f64, prefs: bool, loner: bool) -> TaskInstance {
    let cfg = GenConfig { n, seed, density, preference_rate: if prefs { 0.4 } else { 0.0 } };
    let inst = random_instance(&cfg).unwrap();
    if loner {
        augment_with_loner(&inst).unwrap()
    } else {
        inst
    }
}

fn permuted(inst: &TaskInstance, perm: &[usize]) -> TaskInstance {
    // Command `i` becomes command `perm[i]`.
    let n = inst.n();
    let mut commands = inst.commands.clone();
    for (i, c) in inst.commands.iter().enumerate() {
        commands[perm[i]] = Command { id: perm[i], ..c.clone() };
    }
    let mut a = AssociationMatrix::new(n);
    for i in 0..n {
        for j in 0..n {
            a.set(perm[i], perm[j], inst.associations.get(i, j));
        }
    }
    TaskInstance { commands, associations: a, ..inst.clone() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn bound_never_exceeds_a_completion(
        n in 2usize..7, seed in any::<u64>(), density in 0.0f64..1.0, prefs in any::<bool>(),
        loner in any::<bool>(), kind in kind_strategy(), layout_seed in any::<u64>(), w in prop::option::of(0.0f64..=1.0),
    ) {
        let inst = instance(n, seed, density, prefs, loner);
        let mut rng = ChaCha8Rng::seed_from_u64(layout_seed);
        let problem = match w {
            Some(w) => {
                let baseline = random_layout(inst.n(), &inst.limits, inst.loner_id, &mut rng);
                Problem::adapted(&inst, kind, &baseline, w).unwrap()
            }
            None => Problem::new(&inst, kind).unwrap(),
        };
        for _ in 0..8 {
            let layout = random_layout(inst.n(), &inst.limits, inst.loner_id, &mut rng);
            let cost = problem.cost_of(&layout).unwrap();
            let (order, gaps) = layout.to_sequence();
            for k in 0..=order.len() {
                let b = bnb_bound(&problem, &order[..k], &gaps[..k]);
                prop_assert!(b <= cost + 1e-9 * cost.abs().max(1.0), "prefix {k}: bound {b} > cost {cost}");
            }
        }
    }

    #[test]
    fn relabeling_permutes_the_optimum(
        n in 2usize..6, seed in any::<u64>(), density in 0.0f64..1.0, kind in kind_strategy(),
        perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let inst = instance(n, seed, density, false, false);
        let mut perm: Vec<usize> = perm.into_iter().filter(|&p| p < n).collect();
        perm.truncate(n);
        let moved = permuted(&inst, &perm);
        let a = solve_brute(&inst, kind).unwrap();
        let b = solve_brute(&moved, kind).unwrap();
        prop_assert!((a.objective - b.objective).abs() <= 1e-9 * a.objective.abs().max(1.0));
        let mapped = a.layout.relabeled(&perm);
        let mapped_cost = Problem::new(&moved, kind).unwrap().cost_of(&mapped).unwrap();
        prop_assert!((kind.to_cost(b.objective) - mapped_cost).abs() <= 1e-9 * mapped_cost.abs().max(1.0));
        if b.layout != mapped {
            prop_assert!(b.layout < mapped);
        }
    }

    #[test]
    fn ift_argmin_ignores_frequency_scale(
        n in 2usize..6, seed in any::<u64>(), density in 0.0f64..1.0, prefs in any::<bool>(), k in 0.1f64..10.0,
    ) {
        let inst = instance(n, seed, density, prefs, false);
        let mut scaled = inst.clone();
        for c in &mut scaled.commands {
            c.frequency *= k;
        }
        let a = solve_brute(&inst, ObjectiveKind::Ift).unwrap();
        let b = solve_brute(&scaled, ObjectiveKind::Ift).unwrap();
        prop_assert_eq!(a.layout, b.layout);
    }

    #[test]
    fn annealing_stays_feasible(
        n in 1usize..12, seed in any::<u64>(), loner in any::<bool>(), kind in kind_strategy(), run_seed in any::<u64>(),
    ) {
        let inst = instance(n, seed, 0.6, true, loner);
        let problem = Problem::new(&inst, kind).unwrap();
        let cfg = AnnealConfig { iterations_per_temperature: 20, cooling_rate: 0.8, ..AnnealConfig::with_seed(run_seed) };
        let r = solve_anneal_problem(&problem, &cfg, None).unwrap();
        prop_assert!(r.layout.validate_with_loner(inst.n(), inst.loner_id).is_empty());
        prop_assert!(r.layout.fits(&inst.limits));
        prop_assert!((problem.natural(problem.cost_of(&r.layout).unwrap()) - r.objective).abs() < 1e-9 * r.objective.abs().max(1.0));
    }

    #[test]
    fn layout_order_is_total_and_consistent(
        n in 1usize..7, s1 in any::<u64>(), s2 in any::<u64>(),
    ) {
        let limits = menuforge::StructuralLimits::unbounded(n);
        let a = random_layout(n, &limits, None, &mut ChaCha8Rng::seed_from_u64(s1));
        let b = random_layout(n, &limits, None, &mut ChaCha8Rng::seed_from_u64(s2));
        prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
        prop_assert_eq!(a == b, a.cmp(&b) == std::cmp::Ordering::Equal);
        let (order, gaps) = a.to_sequence();
        prop_assert_eq!(MenuLayout::from_sequence(&order, &gaps), a);
    }
}
