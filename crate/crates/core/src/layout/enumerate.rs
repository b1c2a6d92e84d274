use super::{Boundary, LayoutError, MenuLayout};
use crate::instance::StructuralLimits;

/// Largest command count accepted by [`enumerate_layouts`].
pub const MAX_ENUMERABLE: usize = 8;

/// `n! * 3^(n-1)`: number of layouts of `n` commands without limits.
pub fn layout_count(n: usize) -> u64 {
    if n == 0 {
        return 0;
    }
    let fact: u64 = (1..=n as u64).product();
    fact * 3u64.pow(n as u32 - 1)
}

/// Rearranges `perm` into the next lexicographic permutation; returns
/// `false` (leaving `perm` sorted ascending) after the last one.
pub(crate) fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        perm.reverse();
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// The `k`-th permutation of `0..n` in lexicographic order.
pub(crate) fn nth_permutation(n: usize, mut k: u64) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    for remaining in (1..=n).rev() {
        let block: u64 = (1..remaining as u64).product();
        let idx = (k / block) as usize;
        k %= block;
        out.push(pool.remove(idx));
    }
    out
}

fn decode_gaps(mut code: u64, gaps: &mut [Boundary]) {
    if let Some(first) = gaps.first_mut() {
        *first = Boundary::NewTab;
    }
    for g in gaps.iter_mut().skip(1) {
        *g = match code % 3 {
            0 => Boundary::Continue,
            1 => Boundary::NewGroup,
            _ => Boundary::NewTab,
        };
        code /= 3;
    }
}

fn gaps_fit(gaps: &[Boundary], limits: &StructuralLimits) -> bool {
    let (mut tabs, mut groups, mut rows) = (0, 0, 0);
    for &g in gaps {
        match g {
            Boundary::NewTab => {
                tabs += 1;
                groups += 1;
                rows = 1;
            }
            Boundary::NewGroup => {
                groups += 1;
                rows += 1;
            }
            Boundary::Continue => rows += 1,
        }
        if tabs > limits.max_tabs || groups > limits.max_groups || rows > limits.max_rows {
            return false;
        }
    }
    true
}

/// Calls `visit(order, gaps)` for every sequence whose permutation index
/// lies in `perm_range` and whose structure fits `limits`.
pub(crate) fn for_each_sequence<F>(n: usize, limits: &StructuralLimits, perm_range: std::ops::Range<u64>, mut visit: F)
where
    F: FnMut(&[usize], &[Boundary]),
{
    if n == 0 || perm_range.is_empty() {
        return;
    }
    let structures = 3u64.pow(n as u32 - 1);
    let mut fitting: Vec<Vec<Boundary>> = Vec::new();
    let mut gaps = vec![Boundary::NewTab; n];
    for code in 0..structures {
        decode_gaps(code, &mut gaps);
        if gaps_fit(&gaps, limits) {
            fitting.push(gaps.clone());
        }
    }
    let mut perm = nth_permutation(n, perm_range.start);
    for _ in perm_range {
        for gaps in &fitting {
            visit(&perm, gaps);
        }
        next_permutation(&mut perm);
    }
}

/// Iterator over every layout of `n` commands that fits the limits.
///
/// Permutations advance in lexicographic order; within a permutation the
/// group and tab boundaries run through all `3^(n-1)` combinations.
pub struct LayoutEnumerator {
    perm: Vec<usize>,
    fitting: Vec<Vec<Boundary>>,
    next_structure: usize,
    done: bool,
}

impl Iterator for LayoutEnumerator {
    type Item = MenuLayout;

    fn next(&mut self) -> Option<MenuLayout> {
        if self.done {
            return None;
        }
        if self.next_structure == self.fitting.len() {
            self.next_structure = 0;
            if !next_permutation(&mut self.perm) {
                self.done = true;
                return None;
            }
        }
        let gaps = &self.fitting[self.next_structure];
        self.next_structure += 1;
        Some(MenuLayout::from_sequence(&self.perm, gaps))
    }
}

/// Every distinct layout of commands `0..n` within `limits`, each once.
pub fn enumerate_layouts(n: usize, limits: &StructuralLimits) -> Result<LayoutEnumerator, LayoutError> {
    if n > MAX_ENUMERABLE {
        return Err(LayoutError::TooLarge { n, max: MAX_ENUMERABLE });
    }
    let mut fitting = Vec::new();
    if n > 0 {
        let mut gaps = vec![Boundary::NewTab; n];
        for code in 0..3u64.pow(n as u32 - 1) {
            decode_gaps(code, &mut gaps);
            if gaps_fit(&gaps, limits) {
                fitting.push(gaps.clone());
            }
        }
    }
    Ok(LayoutEnumerator {
        perm: (0..n).collect(),
        done: fitting.is_empty(),
        fitting,
        next_structure: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn unconstrained_counts() {
        for n in 1..=5 {
            let all: Vec<_> = enumerate_layouts(n, &StructuralLimits::unbounded(n)).unwrap().collect();
            assert_eq!(all.len() as u64, layout_count(n), "n = {n}");
            let unique: HashSet<_> = all.iter().collect();
            assert_eq!(unique.len(), all.len());
            assert!(all.iter().all(|l| l.validate(n).is_empty()));
        }
        assert_eq!(layout_count(2), 6);
        assert_eq!(layout_count(3), 54);
    }

    #[test]
    fn two_commands_by_hand() {
        let all: Vec<_> = enumerate_layouts(2, &StructuralLimits::unbounded(2)).unwrap().collect();
        let expected = [
            MenuLayout::from_nested(vec![vec![vec![0, 1]]]),
            MenuLayout::from_nested(vec![vec![vec![0], vec![1]]]),
            MenuLayout::from_nested(vec![vec![vec![0]], vec![vec![1]]]),
            MenuLayout::from_nested(vec![vec![vec![1, 0]]]),
            MenuLayout::from_nested(vec![vec![vec![1], vec![0]]]),
            MenuLayout::from_nested(vec![vec![vec![1]], vec![vec![0]]]),
        ];
        assert_eq!(all, expected);
    }

    #[test]
    fn single_tab_limit() {
        let mut limits = StructuralLimits::unbounded(3);
        limits.max_tabs = 1;
        let all: Vec<_> = enumerate_layouts(3, &limits).unwrap().collect();
        assert_eq!(all.len(), 24);
        assert!(all.iter().all(|l| l.num_tabs() == 1));
    }

    #[test]
    fn guard_and_permutations() {
        assert!(matches!(
            enumerate_layouts(9, &StructuralLimits::unbounded(9)),
            Err(LayoutError::TooLarge { n: 9, .. })
        ));
        let mut p = nth_permutation(4, 0);
        for k in 1..24 {
            assert!(next_permutation(&mut p));
            assert_eq!(p, nth_permutation(4, k));
        }
        assert!(!next_permutation(&mut p));

        let mut count = 0;
        for_each_sequence(3, &StructuralLimits::unbounded(3), 2..4, |_, _| count += 1);
        assert_eq!(count, 2 * 9);
    }
}
