//! Adapting an existing layout and personalizing frequencies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::evaluator::ObjectiveKind;
use crate::instance::{override_frequencies, InstanceError, TaskInstance};
use crate::layout::MenuLayout;
use crate::solver::{Problem, SolveError, SolveReport, SolverChoice};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AdaptError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("weights must be sorted ascending, got {0} after {1}")]
    Unsorted(f64, f64),
    #[error("weight {0} is outside [0, 1]")]
    InvalidWeight(f64),
}

/// One optimized point on the distance/performance curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub w: f64,
    pub distance: usize,
    /// Base objective in minimization sense.
    pub performance: f64,
    pub layout: MenuLayout,
}

/// Minimizes `w * distance(layout, baseline) + (1 - w) * performance`.
///
/// At `w = 1` the baseline itself is returned; at `w = 0` the result scores
/// as well as an unconstrained optimization.
pub fn adapt_layout(
    inst: &TaskInstance,
    baseline: &MenuLayout,
    w: f64,
    kind: ObjectiveKind,
    solver: &SolverChoice,
) -> Result<SolveReport, SolveError> {
    let problem = Problem::adapted(inst, kind, baseline, w)?;
    problem.check_candidate(baseline)?;
    solver.solve(&problem, Some(baseline))
}

/// One adapted layout per weight in `ws`, which must be ascending.
pub fn sweep(
    inst: &TaskInstance,
    baseline: &MenuLayout,
    ws: &[f64],
    kind: ObjectiveKind,
    solver: &SolverChoice,
) -> Result<Vec<TradeoffPoint>, AdaptError> {
    for (k, &w) in ws.iter().enumerate() {
        if !(0.0..=1.0).contains(&w) {
            return Err(AdaptError::InvalidWeight(w));
        }
        if k > 0 && w <= ws[k - 1] {
            return Err(AdaptError::Unsorted(w, ws[k - 1]));
        }
    }
    ws.iter()
        .map(|&w| {
            let report = adapt_layout(inst, baseline, w, kind, solver)?;
            Ok(TradeoffPoint {
                w,
                distance: report.distance.unwrap_or(0),
                performance: report.performance.unwrap_or(f64::NAN),
                layout: report.layout,
            })
        })
        .collect()
}

/// CSV with a `w,distance,performance` header.
pub fn tradeoff_csv(points: &[TradeoffPoint]) -> String {
    let mut out = String::from("w,distance,performance\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.w, p.distance, p.performance));
    }
    out
}

/// Replaces the frequencies of the listed command ids and renormalizes.
pub fn personalize(inst: &TaskInstance, profile: &BTreeMap<usize, f64>) -> Result<TaskInstance, InstanceError> {
    if profile.is_empty() {
        return Ok(inst.clone());
    }
    override_frequencies(inst, profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{AssociationMatrix, Command, Lambdas};
    use crate::solver::solve_brute;

    fn small() -> TaskInstance {
        let commands = [0.4, 0.3, 0.2, 0.1]
            .iter()
            .enumerate()
            .map(|(id, &frequency)| Command { id, name: format!("c{id}"), frequency, preferred_tab: None })
            .collect();
        let mut a = AssociationMatrix::new(4);
        a.set(0, 3, 90.0);
        a.set(1, 2, 60.0);
        let inst = TaskInstance::new(commands, a, Default::default()).unwrap();
        let l = Lambdas { lambda_0: 1.0, lambda_1: 0.5, lambda_2: 0.5, lambda_3: 0.5, lambda_4: 1.0, ..inst.lambdas };
        inst.with_lambdas(l)
    }

    #[test]
    fn endpoints() {
        let inst = small();
        let baseline = MenuLayout::from_nested(vec![vec![vec![2, 1]], vec![vec![3], vec![0]]]);
        let pts = sweep(&inst, &baseline, &[0.0, 1.0], ObjectiveKind::Ift, &SolverChoice::Brute).unwrap();
        assert_eq!(pts[1].layout, baseline);
        assert_eq!(pts[1].distance, 0);
        let best = solve_brute(&inst, ObjectiveKind::Ift).unwrap();
        assert!((pts[0].performance - best.objective).abs() <= 1e-9 * best.objective.abs().max(1.0));
    }

    #[test]
    fn rejects_bad_weights() {
        let inst = small();
        let baseline = MenuLayout::from_nested(vec![vec![vec![0, 1, 2, 3]]]);
        let solver = SolverChoice::Brute;
        assert!(matches!(sweep(&inst, &baseline, &[0.5, 0.25], ObjectiveKind::Ift, &solver), Err(AdaptError::Unsorted(..))));
        assert!(matches!(sweep(&inst, &baseline, &[1.5], ObjectiveKind::Ift, &solver), Err(AdaptError::InvalidWeight(_))));
        let bad = MenuLayout::from_nested(vec![vec![vec![0, 1, 2]]]);
        assert!(adapt_layout(&inst, &bad, 0.5, ObjectiveKind::Ift, &solver).is_err());
    }

    #[test]
    fn personalize_profiles() {
        let inst = small();
        assert_eq!(personalize(&inst, &BTreeMap::new()).unwrap(), inst);
        let p = personalize(&inst, &BTreeMap::from([(0, 0.0)])).unwrap();
        assert_eq!(p.commands[0].frequency, 0.0);
        assert!((p.commands[1].frequency - 0.5).abs() < 1e-12);
        assert_eq!(p.associations, inst.associations);
        assert!(personalize(&inst, &BTreeMap::from([(1, -1.0)])).is_err());
        assert!(personalize(&inst, &BTreeMap::from([(9, 1.0)])).is_err());
        let zero = BTreeMap::from([(0, 0.0), (1, 0.0), (2, 0.0), (3, 0.0)]);
        assert!(personalize(&inst, &zero).is_err());
    }

    #[test]
    fn csv_header() {
        let p = TradeoffPoint { w: 0.5, distance: 3, performance: 1.25, layout: MenuLayout::from_nested(vec![vec![vec![0]]]) };
        assert_eq!(tradeoff_csv(&[p]), "w,distance,performance\n0.5,3,1.25\n");
    }
}
