use std::time::{Duration, Instant};

use super::front::Front;
use super::{prune_slack, Method, Problem, SolveError, SolveReport, Stats};
use crate::evaluator::{fitts_time, ObjectiveKind};
use crate::instance::TaskInstance;
use crate::layout::{Boundary, GroupView, LayoutView, MenuLayout};

/// Branch and bound in reading order: each step appends one command as a
/// continuation of the open group, the lead of a new group, or the lead of
/// a new tab. With a time limit the search stops once an incumbent exists
/// and the limit has passed, reporting the best remaining bound.
pub fn solve_bnb(
    inst: &TaskInstance,
    kind: ObjectiveKind,
    time_limit: Option<Duration>,
    incumbent: Option<&MenuLayout>,
) -> Result<SolveReport, SolveError> {
    solve_bnb_problem(&Problem::new(inst, kind)?, time_limit, incumbent)
}

pub fn solve_bnb_problem(
    problem: &Problem,
    time_limit: Option<Duration>,
    incumbent: Option<&MenuLayout>,
) -> Result<SolveReport, SolveError> {
    let mut search = Search {
        problem,
        front: Front::new(),
        stats: Stats::start(None),
        deadline: time_limit.map(|t| Instant::now() + t),
        view: LayoutView::with_capacity(problem.n()),
        open_min: f64::INFINITY,
        aborted: false,
    };
    if let Some(start) = incumbent {
        problem.check_candidate(start)?;
        let cost = problem.cost_of(start)?;
        let view = LayoutView::from_layout(start, problem.n(), problem.inst.loner_id);
        let (d, b) = problem.tie(&view);
        search.front.offer_with(cost, || (d, b, start.clone()));
        search.stats.evaluations += 1;
    }
    let mut state = Partial::new(problem.n());
    let root = bound(problem, &state);
    if root.is_finite() {
        search.dfs(&mut state, root);
    }
    let best = search.front.best_cost();
    let (cost, key) = search.front.winner().ok_or(SolveError::NoFeasibleLayout)?;
    let layout = key.2.clone();
    let lower = if search.aborted { best.min(search.open_min) } else { cost };
    Ok(problem.report(layout, cost, Some(lower), Method::Bnb, search.stats))
}

/// Lower bound on the cost of every completion of a partial sequence.
/// `gaps[0]` is treated as a new tab.
pub fn bnb_bound(problem: &Problem, order: &[usize], gaps: &[Boundary]) -> f64 {
    let mut state = Partial::new(problem.n());
    for (k, (&id, &gap)) in order.iter().zip(gaps).enumerate() {
        state.push(id, if k == 0 { Boundary::NewTab } else { gap }, problem.inst.loner_id);
    }
    bound(problem, &state)
}

struct Search<'a> {
    problem: &'a Problem,
    front: Front,
    stats: Stats,
    deadline: Option<Instant>,
    view: LayoutView,
    open_min: f64,
    aborted: bool,
}

impl Search<'_> {
    fn prune_above(&self) -> f64 {
        let best = self.front.best_cost();
        if best.is_finite() {
            best + prune_slack(best)
        } else {
            f64::INFINITY
        }
    }

    fn out_of_time(&mut self) -> bool {
        if self.aborted {
            return true;
        }
        if let Some(deadline) = self.deadline {
            if !self.front.is_empty() && self.stats.nodes % 32 == 0 && Instant::now() >= deadline {
                self.aborted = true;
            }
        }
        self.aborted
    }

    fn leaf(&mut self, state: &Partial) {
        let p = self.problem;
        self.view.fill_from_sequence(&state.order, &state.gaps, p.inst.loner_id);
        self.stats.evaluations += 1;
        let cost = p.cost(&self.view);
        let view = &self.view;
        if self.front.offer_with(cost, || {
            let (d, b) = p.tie(view);
            (d, b, MenuLayout::from_sequence(&state.order, &state.gaps))
        }) {
            self.stats.updates += 1;
        }
    }

    /// Returns `false` when the search was aborted.
    fn dfs(&mut self, state: &mut Partial, node_bound: f64) -> bool {
        self.stats.nodes += 1;
        let p = self.problem;
        if state.order.len() == p.n() {
            self.leaf(state);
            return true;
        }
        if self.out_of_time() {
            self.open_min = self.open_min.min(node_bound);
            return false;
        }
        let mut children: Vec<(f64, usize, Boundary)> = Vec::new();
        for &id in &p.branch_order {
            if state.placed[id] {
                continue;
            }
            for gap in [Boundary::Continue, Boundary::NewGroup, Boundary::NewTab] {
                if !state.allows(p, id, gap) {
                    continue;
                }
                state.push(id, gap, p.inst.loner_id);
                if state.can_complete(p) {
                    let b = bound(p, state);
                    if b <= self.prune_above() {
                        children.push((b, id, gap));
                    }
                }
                state.pop(p.inst.loner_id);
            }
        }
        children.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (k, &(b, id, gap)) in children.iter().enumerate() {
            if b > self.prune_above() {
                continue;
            }
            state.push(id, gap, p.inst.loner_id);
            let finished = self.dfs(state, b);
            state.pop(p.inst.loner_id);
            if !finished {
                let limit = self.prune_above();
                for &(rest, _, _) in &children[k + 1..] {
                    if rest <= limit {
                        self.open_min = self.open_min.min(rest);
                    }
                }
                return false;
            }
        }
        true
    }
}

/// A reading-order prefix with incremental bookkeeping.
struct Partial {
    placed: Vec<bool>,
    tab_of: Vec<usize>,
    row_of: Vec<usize>,
    group_of: Vec<usize>,
    groups: Vec<GroupView>,
    order: Vec<usize>,
    gaps: Vec<Boundary>,
    cur_tab: usize,
    cur_row: usize,
    saved: Vec<(usize, usize)>,
}

impl Partial {
    fn new(n: usize) -> Self {
        Partial {
            placed: vec![false; n],
            tab_of: vec![0; n],
            row_of: vec![0; n],
            group_of: vec![0; n],
            groups: Vec::with_capacity(n),
            order: Vec::with_capacity(n),
            gaps: Vec::with_capacity(n),
            cur_tab: 0,
            cur_row: 0,
            saved: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, id: usize, gap: Boundary, loner: Option<usize>) {
        self.saved.push((self.cur_tab, self.cur_row));
        match gap {
            Boundary::NewTab => {
                self.cur_tab += 1;
                self.cur_row = 1;
            }
            _ => self.cur_row += 1,
        }
        if gap != Boundary::Continue {
            self.groups.push(GroupView { tab: self.cur_tab, start: self.cur_row, lead: id, len: 0, visible_len: 0 });
        }
        let g = self.groups.len() - 1;
        self.groups[g].len += 1;
        if loner != Some(id) {
            self.groups[g].visible_len += 1;
        }
        self.placed[id] = true;
        self.tab_of[id] = self.cur_tab;
        self.row_of[id] = self.cur_row;
        self.group_of[id] = g;
        self.order.push(id);
        self.gaps.push(gap);
    }

    fn pop(&mut self, loner: Option<usize>) {
        let id = self.order.pop().expect("non-empty prefix");
        let gap = self.gaps.pop().expect("non-empty prefix");
        let g = self.groups.len() - 1;
        self.groups[g].len -= 1;
        if loner != Some(id) {
            self.groups[g].visible_len -= 1;
        }
        if gap != Boundary::Continue {
            self.groups.pop();
        }
        self.placed[id] = false;
        (self.cur_tab, self.cur_row) = self.saved.pop().expect("non-empty prefix");
    }

    fn allows(&self, p: &Problem, id: usize, gap: Boundary) -> bool {
        let lim = &p.inst.limits;
        if self.order.is_empty() {
            return gap == Boundary::NewTab;
        }
        match gap {
            Boundary::Continue => p.inst.loner_id != Some(id) && self.cur_row < lim.max_rows,
            Boundary::NewGroup => self.groups.len() < lim.max_groups && self.cur_row < lim.max_rows,
            Boundary::NewTab => self.cur_tab < lim.max_tabs && self.groups.len() < lim.max_groups,
        }
    }

    /// Whether the remaining commands still fit the limits.
    fn can_complete(&self, p: &Problem) -> bool {
        let lim = &p.inst.limits;
        let remaining = p.n() - self.order.len();
        if remaining == 0 {
            return true;
        }
        let rows_left = lim.max_rows - self.cur_row;
        let need = remaining.saturating_sub(rows_left).div_ceil(lim.max_rows);
        if self.cur_tab + need > lim.max_tabs || self.groups.len() + need > lim.max_groups {
            return false;
        }
        let loner_pending = p.inst.loner_id.is_some_and(|k| !self.placed[k]);
        !(loner_pending && need == 0 && self.groups.len() + 1 > lim.max_groups)
    }
}

/// Sum of `weights[k] * cost[k]` over the cheapest free slots, pairing the
/// largest weights with the cheapest slots. `weights` must be descending.
fn cheapest_slots(p: &Problem, state: &Partial, weights: &[f64]) -> f64 {
    let lim = &p.inst.limits;
    let mut heads: Vec<(usize, usize)> = Vec::with_capacity(lim.max_tabs + 1);
    if state.cur_tab >= 1 && state.cur_row < lim.max_rows {
        heads.push((state.cur_tab, state.cur_row + 1));
    }
    for t in state.cur_tab + 1..=lim.max_tabs {
        heads.push((t, 1));
    }
    let mut total = 0.0;
    for &w in weights {
        let mut best: Option<(usize, f64)> = None;
        for (h, &(tab, row)) in heads.iter().enumerate() {
            if row > lim.max_rows {
                continue;
            }
            let t = fitts_time(row, tab, &p.inst.fitts);
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((h, t));
            }
        }
        match best {
            Some((h, t)) => {
                total += w * t;
                heads[h].1 += 1;
            }
            None => return f64::INFINITY,
        }
    }
    total
}

fn bound(p: &Problem, s: &Partial) -> f64 {
    let inst = &p.inst;
    let unplaced: Vec<usize> = p.branch_order.iter().copied().filter(|&i| !s.placed[i]).collect();
    let weights: Vec<f64> =
        unplaced.iter().filter(|&&u| !inst.is_loner(u)).map(|&u| inst.commands[u].frequency).collect();
    let slots = cheapest_slots(p, s, &weights);
    if !slots.is_finite() {
        return f64::INFINITY;
    }
    let perf = match p.kind {
        ObjectiveKind::Ift => ift_bound(p, s, &unplaced, slots),
        ObjectiveKind::TwoFold => twofold_bound(p, s, &unplaced, slots),
    };
    match &p.adapt {
        Some(a) => {
            let mut dist = 0usize;
            for i in 0..p.n() {
                if s.placed[i] {
                    dist += s.tab_of[i].abs_diff(a.tab[i]) + s.row_of[i].abs_diff(a.row[i]);
                    continue;
                }
                let (bt, br) = (a.tab[i], a.row[i]);
                let later_tab = if bt > s.cur_tab { 0 } else { s.cur_tab + 1 - bt };
                let same_tab = if s.cur_tab >= 1 && s.cur_row < inst.limits.max_rows {
                    s.cur_tab.abs_diff(bt) + (s.cur_row + 1).saturating_sub(br)
                } else {
                    usize::MAX
                };
                dist += later_tab.min(same_tab);
            }
            a.w * dist as f64 + (1.0 - a.w) * perf
        }
        None => perf,
    }
}

fn ift_bound(p: &Problem, s: &Partial, unplaced: &[usize], slots: f64) -> f64 {
    let inst = &p.inst;
    let l = &inst.lambdas;
    let used = s.groups.len() as f64;
    let mut total = l.lambda_0 * slots;
    for i in 0..p.n() {
        if inst.is_loner(i) || !s.placed[i] {
            continue;
        }
        let own = s.group_of[i];
        let g = &s.groups[own];
        let scent = p.e.get(i, g.lead);
        let depth = (s.row_of[i] - g.start + 1) as f64;
        let mut inner = l.lambda_0 * fitts_time(s.row_of[i], s.tab_of[i], &inst.fitts)
            + l.lambda_1 * scent * depth
            + l.lambda_3 * (1.0 - scent) * used;
        for (c, other) in s.groups.iter().enumerate() {
            if c != own {
                inner += l.lambda_2 * p.e.get(i, other.lead) * other.visible_len as f64;
            }
        }
        if let Some(pref) = inst.commands[i].preferred_tab {
            if s.tab_of[i] != pref + 1 {
                inner += l.lambda_4;
            }
        }
        total += inst.commands[i].frequency * inner;
    }
    let closed = s.groups.len().saturating_sub(1);
    for &u in unplaced {
        if inst.is_loner(u) {
            continue;
        }
        let mut inner = 0.0;
        for g in &s.groups[..closed] {
            inner += l.lambda_2 * p.e.get(u, g.lead) * g.visible_len as f64;
        }
        if let Some(pref) = inst.commands[u].preferred_tab {
            if pref + 1 < s.cur_tab || pref + 1 > inst.limits.max_tabs {
                inner += l.lambda_4;
            }
        }
        total += inst.commands[u].frequency * inner;
    }
    total
}

fn twofold_bound(p: &Problem, s: &Partial, unplaced: &[usize], slots: f64) -> f64 {
    let inst = &p.inst;
    let l = &inst.lambdas;
    let a = &inst.associations;
    let open = s.groups.len().checked_sub(1);
    let mut reward = 0.0;
    let mut access = slots;
    for i in 0..p.n() {
        if !s.placed[i] {
            continue;
        }
        if !inst.is_loner(i) {
            access += inst.commands[i].frequency * fitts_time(s.row_of[i], s.tab_of[i], &inst.fitts);
        }
        for j in 0..p.n() {
            if i == j || !s.placed[j] {
                continue;
            }
            let sc = a.get(i, j);
            if sc == 0.0 {
                continue;
            }
            let same_group = if s.group_of[i] == s.group_of[j] { l.lambda_c } else { 0.0 };
            let same_tab = if s.tab_of[i] == s.tab_of[j] { l.lambda_m } else { 0.0 };
            reward += sc * (same_group + same_tab);
        }
        let in_open = if Some(s.group_of[i]) == open { l.lambda_c } else { 0.0 };
        let in_tab = if s.tab_of[i] == s.cur_tab { l.lambda_m } else { 0.0 };
        if in_open + in_tab > 0.0 {
            for &u in unplaced {
                reward += (a.get(i, u) + a.get(u, i)) * (in_open + in_tab);
            }
        }
    }
    for (k, &u) in unplaced.iter().enumerate() {
        for &v in &unplaced[k + 1..] {
            reward += (a.get(u, v) + a.get(v, u)) * (l.lambda_c + l.lambda_m);
        }
    }
    -reward + l.lambda_f * access
}
