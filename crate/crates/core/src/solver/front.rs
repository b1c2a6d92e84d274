use super::tolerance;
use crate::layout::MenuLayout;

pub(crate) type TieKey = (usize, usize, MenuLayout);

/// Candidates within tolerance of the best cost seen so far, kept free of
/// dominated entries. The winner is the smallest tie key among those within
/// tolerance of the final best cost, which does not depend on the order in
/// which candidates arrive.
#[derive(Debug, Clone)]
pub(crate) struct Front {
    items: Vec<(f64, TieKey)>,
    best: f64,
}

impl Front {
    pub fn new() -> Self {
        Front { items: Vec::new(), best: f64::INFINITY }
    }

    pub fn best_cost(&self) -> f64 {
        self.best
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Costs above this can never win.
    pub fn threshold(&self) -> f64 {
        if self.best.is_finite() {
            self.best + tolerance(self.best)
        } else {
            f64::INFINITY
        }
    }

    /// Offers a candidate; `key` is only built when the cost is competitive.
    /// Returns whether the best cost improved by more than the tolerance.
    pub fn offer_with(&mut self, cost: f64, key: impl FnOnce() -> TieKey) -> bool {
        if cost > self.threshold() {
            return false;
        }
        let key = key();
        self.insert(cost, key)
    }

    fn insert(&mut self, cost: f64, key: TieKey) -> bool {
        if self.items.iter().any(|(c, k)| *c <= cost && *k <= key) {
            return false;
        }
        self.items.retain(|(c, k)| !(cost <= *c && key <= *k));
        let improved = !self.best.is_finite() || cost < self.best - tolerance(self.best);
        self.best = self.best.min(cost);
        let limit = self.threshold();
        self.items.retain(|(c, _)| *c <= limit);
        self.items.push((cost, key));
        improved
    }

    pub fn merge(&mut self, other: Front) {
        for (cost, key) in other.items {
            if cost <= self.threshold() {
                self.insert(cost, key);
            }
        }
    }

    /// The winning cost and layout.
    pub fn winner(&self) -> Option<(f64, &TieKey)> {
        let limit = self.threshold();
        self.items.iter().filter(|(c, _)| *c <= limit).min_by(|a, b| a.1.cmp(&b.1)).map(|(c, k)| (*c, k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(d: usize, id: usize) -> TieKey {
        (d, 0, MenuLayout::from_nested(vec![vec![vec![id]]]))
    }

    #[test]
    fn order_independent_winner() {
        let cands = [(1.0, key(0, 5)), (1.0 + 1e-12, key(0, 1)), (0.5, key(0, 9)), (0.5, key(0, 7)), (2.0, key(0, 0))];
        let mut results = Vec::new();
        for rot in 0..cands.len() {
            let mut f = Front::new();
            for k in 0..cands.len() {
                let (c, kk) = cands[(k + rot) % cands.len()].clone();
                f.offer_with(c, || kk);
            }
            let (c, k) = f.winner().unwrap();
            results.push((c, k.clone()));
        }
        assert!(results.iter().all(|r| *r == results[0]));
        assert_eq!(results[0], (0.5, key(0, 7)));
    }

    #[test]
    fn near_ties_prefer_small_keys() {
        let mut f = Front::new();
        assert!(f.offer_with(1.0 + 1e-12, || key(0, 1)));
        assert!(!f.offer_with(1.0, || key(0, 3)));
        assert_eq!(f.winner().unwrap().1, &key(0, 1));
        let mut g = Front::new();
        g.offer_with(3.0, || key(0, 0));
        g.merge(f);
        assert_eq!(g.winner().unwrap().1, &key(0, 1));
    }
}
