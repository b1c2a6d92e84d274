//! Menu layouts: ordered tabs of ordered groups of ordered command ids.

mod enumerate;
mod render;

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::instance::StructuralLimits;

pub use enumerate::{enumerate_layouts, layout_count, LayoutEnumerator, MAX_ENUMERABLE};
pub(crate) use enumerate::for_each_sequence;
pub use render::{render_html, render_text};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("invalid layout: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("layout exceeds limits: {0}")]
    ExceedsLimits(String),
    #[error("layouts cover different command sets")]
    CommandSetMismatch,
    #[error("enumeration is limited to {max} commands, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("malformed layout json: {0}")]
    Json(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// A structural defect found by [`MenuLayout::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyTab { tab: usize },
    EmptyGroup { tab: usize, group: usize },
    DuplicateCommand(usize),
    MissingCommand(usize),
    UnknownCommand(usize),
    LonerNotLead(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyTab { tab } => write!(f, "empty tab {tab}"),
            Violation::EmptyGroup { tab, group } => write!(f, "empty group {group} on tab {tab}"),
            Violation::DuplicateCommand(id) => write!(f, "duplicate command {id}"),
            Violation::MissingCommand(id) => write!(f, "missing command {id}"),
            Violation::UnknownCommand(id) => write!(f, "unknown command {id}"),
            Violation::LonerNotLead(id) => write!(f, "loner {id} does not lead its group"),
        }
    }
}

/// How a command relates to the one placed just before it in reading order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Boundary {
    /// Same group.
    Continue,
    /// Starts a new group on the same tab.
    NewGroup,
    /// Starts a new tab.
    NewTab,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Tab {
    pub groups: Vec<Vec<usize>>,
}

/// Ordering is lexicographic on the written nested id lists, token by token,
/// with ids compared numerically and a separator ordered before a closing
/// bracket: `[[0,1]]` < `[[0],[1]]` < `[[0]],[[1]]`. In reading order this
/// compares, per position, the boundary before the id (same group < new
/// group < new tab) and then the id. It is the tie-break used by every
/// solver.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MenuLayout {
    pub tabs: Vec<Tab>,
}

impl Ord for MenuLayout {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let (a_ids, a_gaps) = self.to_sequence();
        let (b_ids, b_gaps) = other.to_sequence();
        let a = a_gaps.iter().zip(&a_ids);
        let b = b_gaps.iter().zip(&b_ids);
        a.cmp(b).then_with(|| self.tabs.cmp(&other.tabs))
    }
}

impl PartialOrd for MenuLayout {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// 1-based tab and row, 0-based group index in reading order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub tab: usize,
    pub row: usize,
    pub group: usize,
}

impl MenuLayout {
    pub fn from_nested(tabs: Vec<Vec<Vec<usize>>>) -> Self {
        MenuLayout { tabs: tabs.into_iter().map(|groups| Tab { groups }).collect() }
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<usize>>> {
        self.tabs.iter().map(|t| t.groups.clone()).collect()
    }

    /// Builds a layout from commands in reading order; `gaps[k]` says how
    /// `order[k]` attaches to its predecessor (`gaps[0]` is ignored).
    pub fn from_sequence(order: &[usize], gaps: &[Boundary]) -> Self {
        let mut tabs: Vec<Tab> = Vec::new();
        for (k, &id) in order.iter().enumerate() {
            let gap = if k == 0 { Boundary::NewTab } else { gaps[k] };
            match gap {
                Boundary::NewTab => tabs.push(Tab { groups: vec![vec![id]] }),
                Boundary::NewGroup => tabs.last_mut().expect("first gap opens a tab").groups.push(vec![id]),
                Boundary::Continue => tabs
                    .last_mut()
                    .and_then(|t| t.groups.last_mut())
                    .expect("first gap opens a group")
                    .push(id),
            }
        }
        MenuLayout { tabs }
    }

    /// Inverse of [`MenuLayout::from_sequence`].
    pub fn to_sequence(&self) -> (Vec<usize>, Vec<Boundary>) {
        let mut order = Vec::new();
        let mut gaps = Vec::new();
        for tab in &self.tabs {
            for (g, group) in tab.groups.iter().enumerate() {
                for (k, &id) in group.iter().enumerate() {
                    order.push(id);
                    gaps.push(match (g, k) {
                        (0, 0) => Boundary::NewTab,
                        (_, 0) => Boundary::NewGroup,
                        _ => Boundary::Continue,
                    });
                }
            }
        }
        (order, gaps)
    }

    pub fn command_count(&self) -> usize {
        self.tabs.iter().flat_map(|t| &t.groups).map(Vec::len).sum()
    }

    pub fn num_tabs(&self) -> usize {
        self.tabs.len()
    }

    pub fn num_groups(&self) -> usize {
        self.tabs.iter().map(|t| t.groups.len()).sum()
    }

    /// Groups in reading order (tab-major).
    pub fn groups(&self) -> impl Iterator<Item = &Vec<usize>> + '_ {
        self.tabs.iter().flat_map(|t| &t.groups)
    }

    /// Positions indexed by command id, for a layout over `0..n`.
    pub fn positions(&self, n: usize) -> Vec<Option<Position>> {
        let mut out = vec![None; n];
        let mut group = 0;
        for (t, tab) in self.tabs.iter().enumerate() {
            let mut row = 1;
            for members in &tab.groups {
                for &id in members {
                    if id < n {
                        out[id] = Some(Position { tab: t + 1, row, group });
                    }
                    row += 1;
                }
                group += 1;
            }
        }
        out
    }

    /// Set of ids appearing anywhere.
    pub fn command_set(&self) -> BTreeSet<usize> {
        self.groups().flatten().copied().collect()
    }

    /// Every structural defect for a layout over commands `0..n`.
    pub fn validate(&self, n: usize) -> Vec<Violation> {
        self.validate_with_loner(n, None)
    }

    /// As [`MenuLayout::validate`], also requiring `loner` to lead its group.
    pub fn validate_with_loner(&self, n: usize, loner: Option<usize>) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = vec![false; n];
        for (t, tab) in self.tabs.iter().enumerate() {
            if tab.groups.is_empty() {
                out.push(Violation::EmptyTab { tab: t + 1 });
            }
            for (g, members) in tab.groups.iter().enumerate() {
                if members.is_empty() {
                    out.push(Violation::EmptyGroup { tab: t + 1, group: g + 1 });
                }
                for (k, &id) in members.iter().enumerate() {
                    if id >= n {
                        out.push(Violation::UnknownCommand(id));
                        continue;
                    }
                    if seen[id] {
                        out.push(Violation::DuplicateCommand(id));
                    }
                    seen[id] = true;
                    if loner == Some(id) && k != 0 {
                        out.push(Violation::LonerNotLead(id));
                    }
                }
            }
        }
        out.extend(seen.iter().enumerate().filter(|(_, s)| !**s).map(|(id, _)| Violation::MissingCommand(id)));
        out
    }

    pub fn ensure_valid(&self, n: usize, loner: Option<usize>) -> Result<(), LayoutError> {
        let v = self.validate_with_loner(n, loner);
        if v.is_empty() {
            Ok(())
        } else {
            Err(LayoutError::Invalid(v))
        }
    }

    /// Checks tab, group and row counts against `limits`.
    pub fn check_limits(&self, limits: &StructuralLimits) -> Result<(), LayoutError> {
        if self.num_tabs() > limits.max_tabs {
            return Err(LayoutError::ExceedsLimits(format!("{} tabs > {}", self.num_tabs(), limits.max_tabs)));
        }
        if self.num_groups() > limits.max_groups {
            return Err(LayoutError::ExceedsLimits(format!("{} groups > {}", self.num_groups(), limits.max_groups)));
        }
        for (t, tab) in self.tabs.iter().enumerate() {
            let rows: usize = tab.groups.iter().map(Vec::len).sum();
            if rows > limits.max_rows {
                return Err(LayoutError::ExceedsLimits(format!("tab {} has {rows} rows > {}", t + 1, limits.max_rows)));
            }
        }
        Ok(())
    }

    pub fn fits(&self, limits: &StructuralLimits) -> bool {
        self.check_limits(limits).is_ok()
    }

    /// Applies `map` to every command id.
    pub fn relabeled(&self, map: &[usize]) -> MenuLayout {
        MenuLayout::from_nested(
            self.tabs
                .iter()
                .map(|t| t.groups.iter().map(|g| g.iter().map(|&id| map[id]).collect()).collect())
                .collect(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("layouts always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, LayoutError> {
        serde_json::from_str(text).map_err(|e| LayoutError::Json(e.to_string()))
    }
}

/// Per-command tab and row shifts between two layouts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutDistance {
    /// Indexed by command id; zero for ids absent from both layouts.
    pub tab_shift: Vec<usize>,
    pub row_shift: Vec<usize>,
    pub total_tab_shift: usize,
    pub total_row_shift: usize,
}

impl LayoutDistance {
    pub fn total(&self) -> usize {
        self.total_tab_shift + self.total_row_shift
    }
}

/// `|tab - tab'|` and `|row - row'|` per command, and their sums.
pub fn layout_distance(current: &MenuLayout, baseline: &MenuLayout) -> Result<LayoutDistance, LayoutError> {
    if current.command_set() != baseline.command_set() {
        return Err(LayoutError::CommandSetMismatch);
    }
    let n = current.command_set().last().map_or(0, |m| m + 1);
    let a = current.positions(n);
    let b = baseline.positions(n);
    let mut tab_shift = vec![0; n];
    let mut row_shift = vec![0; n];
    for id in 0..n {
        if let (Some(p), Some(q)) = (a[id], b[id]) {
            tab_shift[id] = p.tab.abs_diff(q.tab);
            row_shift[id] = p.row.abs_diff(q.row);
        }
    }
    Ok(LayoutDistance {
        total_tab_shift: tab_shift.iter().sum(),
        total_row_shift: row_shift.iter().sum(),
        tab_shift,
        row_shift,
    })
}

/// One group as seen by the evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupView {
    pub tab: usize,
    /// 1-based row of the first member.
    pub start: usize,
    pub lead: usize,
    pub len: usize,
    /// Members other than the loner magnet.
    pub visible_len: usize,
}

/// Flat, allocation-reusing view of a layout over commands `0..n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayoutView {
    pub tab_of: Vec<usize>,
    pub row_of: Vec<usize>,
    pub group_of: Vec<usize>,
    pub groups: Vec<GroupView>,
    pub tabs: usize,
}

impl LayoutView {
    pub fn with_capacity(n: usize) -> Self {
        LayoutView {
            tab_of: vec![0; n],
            row_of: vec![0; n],
            group_of: vec![0; n],
            groups: Vec::with_capacity(n),
            tabs: 0,
        }
    }

    /// Fills the view from a reading-order sequence.
    pub fn fill_from_sequence(&mut self, order: &[usize], gaps: &[Boundary], loner: Option<usize>) {
        let n = order.len();
        self.tab_of.resize(n, 0);
        self.row_of.resize(n, 0);
        self.group_of.resize(n, 0);
        self.groups.clear();
        self.tabs = 0;
        let mut row = 0;
        for (k, &id) in order.iter().enumerate() {
            let gap = if k == 0 { Boundary::NewTab } else { gaps[k] };
            match gap {
                Boundary::NewTab => {
                    self.tabs += 1;
                    row = 1;
                }
                _ => row += 1,
            }
            if gap != Boundary::Continue {
                self.groups.push(GroupView { tab: self.tabs, start: row, lead: id, len: 0, visible_len: 0 });
            }
            let g = self.groups.len() - 1;
            let group = &mut self.groups[g];
            group.len += 1;
            if loner != Some(id) {
                group.visible_len += 1;
            }
            self.tab_of[id] = self.tabs;
            self.row_of[id] = row;
            self.group_of[id] = g;
        }
    }

    /// View of a layout that must already be valid for `0..n`.
    pub fn from_layout(layout: &MenuLayout, n: usize, loner: Option<usize>) -> Self {
        let (order, gaps) = layout.to_sequence();
        debug_assert_eq!(order.len(), n);
        let mut view = LayoutView::with_capacity(n);
        view.fill_from_sequence(&order, &gaps, loner);
        view
    }
}

/// Draws a random layout of `n` commands within `limits`, with `loner`
/// (when given) leading its group.
pub fn random_layout<R: Rng + ?Sized>(
    n: usize,
    limits: &StructuralLimits,
    loner: Option<usize>,
    rng: &mut R,
) -> MenuLayout {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let min_tabs = n.div_ceil(limits.max_rows).max(1);
    let max_tabs = limits.max_tabs.min(n).max(min_tabs);
    let tabs = rng.gen_range(min_tabs..=max_tabs);

    let mut sizes = vec![1usize; tabs];
    for _ in tabs..n {
        let open: Vec<usize> = (0..tabs).filter(|&t| sizes[t] < limits.max_rows).collect();
        let t = *open.choose(rng).expect("capacity was checked");
        sizes[t] += 1;
    }

    let mut budget = limits.max_groups.saturating_sub(tabs);
    let mut rest = order.into_iter();
    let mut out = Vec::with_capacity(tabs);
    for &size in &sizes {
        let mut groups: Vec<Vec<usize>> = vec![vec![rest.next().expect("sizes sum to n")]];
        for _ in 1..size {
            let id = rest.next().expect("sizes sum to n");
            if budget > 0 && rng.gen_bool(0.4) {
                budget -= 1;
                groups.push(vec![id]);
            } else {
                groups.last_mut().expect("non-empty").push(id);
            }
        }
        out.push(groups);
    }
    let mut layout = MenuLayout::from_nested(out);
    if let Some(k) = loner {
        for tab in &mut layout.tabs {
            for g in &mut tab.groups {
                if let Some(p) = g.iter().position(|&id| id == k) {
                    g.remove(p);
                    g.insert(0, k);
                }
            }
        }
    }
    layout
}
