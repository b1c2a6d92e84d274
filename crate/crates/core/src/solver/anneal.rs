use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Method, Problem, SolveError, SolveReport, Stats};
use crate::evaluator::ObjectiveKind;
use crate::instance::TaskInstance;
use crate::layout::{random_layout, LayoutView, MenuLayout};

/// Geometric cooling schedule with Metropolis acceptance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    /// `None` picks ten times the cost spread of 100 random layouts.
    pub initial_temperature: Option<f64>,
    pub cooling_rate: f64,
    pub iterations_per_temperature: usize,
    pub min_temperature: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit: Option<Duration>,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            initial_temperature: None,
            cooling_rate: 0.97,
            iterations_per_temperature: 200,
            min_temperature: 1e-4,
            seed: 0,
            time_limit: None,
        }
    }
}

impl AnnealConfig {
    pub fn with_seed(seed: u64) -> Self {
        AnnealConfig { seed, ..AnnealConfig::default() }
    }

    fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::InvalidConfig(m.to_string()));
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return bad("cooling rate must lie in (0, 1)");
        }
        if self.iterations_per_temperature == 0 {
            return bad("iterations per temperature must be positive");
        }
        if !(self.min_temperature > 0.0 && self.min_temperature.is_finite()) {
            return bad("minimum temperature must be positive");
        }
        if let Some(t) = self.initial_temperature {
            if !(t > 0.0 && t.is_finite()) {
                return bad("initial temperature must be positive");
            }
        }
        Ok(())
    }
}

pub fn solve_anneal(
    inst: &TaskInstance,
    kind: ObjectiveKind,
    config: &AnnealConfig,
    start: Option<&MenuLayout>,
) -> Result<SolveReport, SolveError> {
    solve_anneal_problem(&Problem::new(inst, kind)?, config, start)
}

/// Anneals from `start`, from the baseline when adapting, or from a random
/// layout. The run is reproducible for a fixed seed.
pub fn solve_anneal_problem(
    problem: &Problem,
    config: &AnnealConfig,
    start: Option<&MenuLayout>,
) -> Result<SolveReport, SolveError> {
    config.validate()?;
    let mut stats = Stats::start(Some(config.seed));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = problem.n();
    let limits = problem.inst.limits;
    let loner = problem.inst.loner_id;
    let mut view = LayoutView::with_capacity(n);
    let mut cost_of = |layout: &MenuLayout, stats: &mut Stats| {
        let (order, gaps) = layout.to_sequence();
        view.fill_from_sequence(&order, &gaps, loner);
        stats.evaluations += 1;
        problem.cost(&view)
    };

    let mut temp = match config.initial_temperature {
        Some(t) => t,
        None => {
            let costs: Vec<f64> =
                (0..100).map(|_| cost_of(&random_layout(n, &limits, loner, &mut rng), &mut stats)).collect();
            let mean = costs.iter().sum::<f64>() / costs.len() as f64;
            let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / costs.len() as f64;
            let sd = var.sqrt();
            if sd > 1e-12 && sd.is_finite() {
                10.0 * sd
            } else {
                1.0
            }
        }
    };

    let initial = match (start, &problem.adapt) {
        (Some(layout), _) => {
            problem.check_candidate(layout)?;
            layout.clone()
        }
        (None, Some(_)) => baseline_layout(problem),
        (None, None) => random_layout(n, &limits, loner, &mut rng),
    };
    let mut current = initial.to_nested();
    let mut current_cost = cost_of(&initial, &mut stats);
    let mut best = initial;
    let mut best_cost = current_cost;
    let deadline = config.time_limit.map(|t| Instant::now() + t);

    'outer: loop {
        for _ in 0..config.iterations_per_temperature {
            stats.nodes += 1;
            let Some(candidate) = propose(&current, problem, &mut rng) else { continue };
            let layout = MenuLayout::from_nested(candidate);
            let cost = cost_of(&layout, &mut stats);
            let delta = cost - current_cost;
            if delta <= 0.0 || rng.gen::<f64>() < (-delta / temp).exp() {
                current_cost = cost;
                if cost < best_cost {
                    best_cost = cost;
                    best = layout.clone();
                    stats.updates += 1;
                }
                current = layout.to_nested();
            }
            if deadline.is_some_and(|d| stats.nodes % 64 == 0 && Instant::now() >= d) {
                break 'outer;
            }
        }
        temp *= config.cooling_rate;
        if temp < config.min_temperature {
            break;
        }
    }
    Ok(problem.report(best, best_cost, None, Method::Anneal, stats))
}

fn baseline_layout(problem: &Problem) -> MenuLayout {
    let a = problem.adapt.as_ref().expect("adapting");
    let mut ids: Vec<usize> = (0..problem.n()).collect();
    ids.sort_by_key(|&i| (a.tab[i], a.row[i]));
    let mut tabs: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut last_tab = 0;
    for id in ids {
        if a.tab[id] != last_tab {
            tabs.push(Vec::new());
            last_tab = a.tab[id];
        }
        let tab = tabs.last_mut().expect("tab opened");
        if a.lead[id] || tab.is_empty() {
            tab.push(Vec::new());
        }
        tab.last_mut().expect("group opened").push(id);
    }
    MenuLayout::from_nested(tabs)
}

type Nested = Vec<Vec<Vec<usize>>>;

fn cleanup(layout: &mut Nested) {
    for tab in layout.iter_mut() {
        tab.retain(|g| !g.is_empty());
    }
    layout.retain(|t| !t.is_empty());
}

fn acceptable(layout: &Nested, problem: &Problem) -> bool {
    let lim = &problem.inst.limits;
    let groups: usize = layout.iter().map(Vec::len).sum();
    if layout.len() > lim.max_tabs || groups > lim.max_groups {
        return false;
    }
    if layout.iter().any(|t| t.iter().map(Vec::len).sum::<usize>() > lim.max_rows) {
        return false;
    }
    match problem.inst.loner_id {
        Some(k) => layout.iter().flatten().all(|g| g.iter().position(|&id| id == k).is_none_or(|p| p == 0)),
        None => true,
    }
}

fn cell(layout: &Nested, rng: &mut ChaCha8Rng) -> (usize, usize, usize) {
    let t = rng.gen_range(0..layout.len());
    let g = rng.gen_range(0..layout[t].len());
    let r = rng.gen_range(0..layout[t][g].len());
    (t, g, r)
}

/// One random neighbour, or `None` when the move does not apply or breaks
/// the limits.
fn propose(current: &Nested, problem: &Problem, rng: &mut ChaCha8Rng) -> Option<Nested> {
    let mut next = current.clone();
    match rng.gen_range(0..5) {
        0 => {
            let (t1, g1, r1) = cell(&next, rng);
            let (t2, g2, r2) = cell(&next, rng);
            if (t1, g1, r1) == (t2, g2, r2) {
                return None;
            }
            let tmp = next[t1][g1][r1];
            next[t1][g1][r1] = next[t2][g2][r2];
            next[t2][g2][r2] = tmp;
        }
        1 => {
            let (t, g, r) = cell(&next, rng);
            let id = next[t][g].remove(r);
            cleanup(&mut next);
            if next.is_empty() {
                return None;
            }
            let t = rng.gen_range(0..next.len());
            let g = rng.gen_range(0..next[t].len());
            let r = rng.gen_range(0..=next[t][g].len());
            next[t][g].insert(r, id);
        }
        2 => {
            let t = rng.gen_range(0..next.len());
            let g = rng.gen_range(0..next[t].len());
            if rng.gen_bool(0.5) {
                let len = next[t][g].len();
                if len < 2 {
                    return None;
                }
                let k = rng.gen_range(1..len);
                let tail = next[t][g].split_off(k);
                next[t].insert(g + 1, tail);
            } else {
                if g + 1 >= next[t].len() {
                    return None;
                }
                let tail = next[t].remove(g + 1);
                next[t][g].extend(tail);
            }
        }
        3 => {
            let t = rng.gen_range(0..next.len());
            let g = rng.gen_range(0..next[t].len());
            let group = next[t].remove(g);
            cleanup(&mut next);
            let target = rng.gen_range(0..=next.len());
            if target == next.len() {
                let at = rng.gen_range(0..=next.len());
                next.insert(at, vec![group]);
            } else {
                let at = rng.gen_range(0..=next[target].len());
                next[target].insert(at, group);
            }
        }
        _ => {
            if next.len() < 2 {
                return None;
            }
            let a = rng.gen_range(0..next.len());
            let b = rng.gen_range(0..next.len());
            if a == b {
                return None;
            }
            next.swap(a, b);
        }
    }
    cleanup(&mut next);
    (next != *current && acceptable(&next, problem)).then_some(next)
}
