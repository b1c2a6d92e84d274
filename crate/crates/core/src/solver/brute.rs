use rayon::prelude::*;

use super::front::Front;
use super::{Method, Problem, SolveError, SolveReport, Stats};
use crate::evaluator::ObjectiveKind;
use crate::instance::TaskInstance;
use crate::layout::{for_each_sequence, LayoutView, MenuLayout, MAX_ENUMERABLE};

/// Exhaustive search over every layout within the structural limits.
pub fn solve_brute(inst: &TaskInstance, kind: ObjectiveKind) -> Result<SolveReport, SolveError> {
    solve_brute_problem(&Problem::new(inst, kind)?)
}

pub fn solve_brute_problem(problem: &Problem) -> Result<SolveReport, SolveError> {
    let n = problem.n();
    if n > MAX_ENUMERABLE {
        return Err(SolveError::TooLarge { n, max: MAX_ENUMERABLE });
    }
    let mut stats = Stats::start(None);
    let perms: u64 = (1..=n as u64).product();
    let chunks = perms.min(64 * rayon::current_num_threads() as u64).max(1);
    let step = perms.div_ceil(chunks);
    let limits = problem.inst.limits;
    let loner = problem.inst.loner_id;

    let parts: Vec<(Front, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = (c * step).min(perms);
            let end = ((c + 1) * step).min(perms);
            let mut front = Front::new();
            let mut view = LayoutView::with_capacity(n);
            let mut evaluations = 0u64;
            for_each_sequence(n, &limits, start..end, |order, gaps| {
                if !problem.loner_leads(order, gaps) {
                    return;
                }
                view.fill_from_sequence(order, gaps, loner);
                evaluations += 1;
                let cost = problem.cost(&view);
                front.offer_with(cost, || {
                    let (d, b) = problem.tie(&view);
                    (d, b, MenuLayout::from_sequence(order, gaps))
                });
            });
            (front, evaluations)
        })
        .collect();

    let mut front = Front::new();
    for (part, evaluations) in parts {
        stats.evaluations += evaluations;
        front.merge(part);
    }
    stats.nodes = stats.evaluations;
    let (cost, key) = front.winner().ok_or(SolveError::NoFeasibleLayout)?;
    let layout = key.2.clone();
    stats.updates = 1;
    Ok(problem.report(layout, cost, Some(cost), Method::Brute, stats))
}
