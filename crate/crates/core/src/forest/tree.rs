//! CART tree construction.
//!
//! Split search considers midpoint thresholds between consecutive distinct
//! sorted values of each candidate feature and maximizes impurity decrease
//! (Gini for classification, variance for regression). Classification split
//! comparisons are done in exact integer arithmetic over count fractions, so
//! ties resolve identically on every platform: lowest feature index first,
//! then lowest threshold.

use crate::forest::{ForestError, Node, Tree};
use crate::rng::Stream;

/// Gini impurity of a class-count vector: 1 - sum((c_i / n)^2).
pub fn gini_impurity(counts: &[u32]) -> Result<f64, ForestError> {
    let n: u64 = counts.iter().map(|c| u64::from(*c)).sum();
    if n == 0 {
        return Err(ForestError::EmptyNode);
    }
    let sum_sq: u64 = counts.iter().map(|c| u64::from(*c) * u64::from(*c)).sum();
    Ok(1.0 - sum_sq as f64 / (n as f64 * n as f64))
}

/// A chosen split point.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Impurity decrease at this node (Gini or variance units).
    pub decrease: f64,
}

/// Midpoint between consecutive distinct values, guarded so that `x <= t`
/// always separates the two.
#[inline]
pub fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t >= b {
        a
    } else {
        t
    }
}

pub(crate) enum Targets<'a> {
    Classes { y: &'a [usize], n_classes: usize },
    Values { y: &'a [f64] },
}

/// Exact fraction num/den for comparing classification splits.
#[derive(Clone, Copy, PartialEq)]
struct Frac {
    num: u128,
    den: u128,
}

impl Frac {
    fn gt(&self, other: &Frac) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct ClassSplitState {
    left: Vec<u64>,
    right: Vec<u64>,
    n_left: u64,
    n_right: u64,
}

impl ClassSplitState {
    fn new(total: &[u64]) -> Self {
        let n_right = total.iter().sum();
        ClassSplitState {
            left: vec![0; total.len()],
            right: total.to_vec(),
            n_left: 0,
            n_right,
        }
    }

    fn move_left(&mut self, class: usize) {
        self.left[class] += 1;
        self.right[class] -= 1;
        self.n_left += 1;
        self.n_right -= 1;
    }

    /// Score fraction (sum_l^2 * n_r + sum_r^2 * n_l) / (n_l * n_r); larger
    /// means lower weighted child impurity.
    fn score(&self) -> Frac {
        let sum_sq_left: u128 = self.left.iter().map(|c| u128::from(*c) * u128::from(*c)).sum();
        let sum_sq_right: u128 = self
            .right
            .iter()
            .map(|c| u128::from(*c) * u128::from(*c))
            .sum();
        Frac {
            num: sum_sq_left * u128::from(self.n_right) + sum_sq_right * u128::from(self.n_left),
            den: u128::from(self.n_left) * u128::from(self.n_right),
        }
    }
}

/// Best classification split over the candidate features, or None when no
/// split strictly decreases Gini impurity.
pub fn best_split_classification(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    rows: &[u32],
    candidates: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let n = rows.len() as u64;
    let mut parent = vec![0u64; n_classes];
    for r in rows {
        parent[y[*r as usize]] += 1;
    }
    let parent_sum_sq: u128 = parent.iter().map(|c| u128::from(*c) * u128::from(*c)).sum();

    let mut best: Option<(Frac, Split)> = None;
    let mut column: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    for &feature in candidates {
        column.clear();
        column.extend(rows.iter().map(|r| {
            let row = *r as usize;
            (x[row][feature], y[row])
        }));
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));

        let mut state = ClassSplitState::new(&parent);
        for i in 0..column.len() - 1 {
            state.move_left(column[i].1);
            if column[i].0 == column[i + 1].0 {
                continue;
            }
            if (state.n_left as usize) < min_leaf || (state.n_right as usize) < min_leaf {
                continue;
            }
            let score = state.score();
            // Improvement over the parent: score > parent_sum_sq / n, exact.
            if score.num * u128::from(n) <= parent_sum_sq * score.den {
                continue;
            }
            // Strict improvement over the incumbent keeps the lowest feature
            // index and threshold on ties (iteration order is ascending).
            if best.as_ref().is_none_or(|(s, _)| score.gt(s)) {
                let threshold = midpoint(column[i].0, column[i + 1].0);
                let g = score.num as f64 / score.den as f64;
                let decrease =
                    g / n as f64 - parent_sum_sq as f64 / (n as f64 * n as f64);
                best = Some((
                    score,
                    Split {
                        feature,
                        threshold,
                        decrease,
                    },
                ));
            }
        }
    }
    best.map(|(_, split)| split)
}

/// Best regression (variance-reduction) split over the candidate features.
pub fn best_split_regression(
    x: &[Vec<f64>],
    y: &[f64],
    rows: &[u32],
    candidates: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let n = rows.len() as f64;
    let total: f64 = rows.iter().map(|r| y[*r as usize]).sum();
    let parent_score = total * total / n;

    let mut best: Option<(f64, Split)> = None;
    let mut column: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
    for &feature in candidates {
        column.clear();
        column.extend(rows.iter().map(|r| {
            let row = *r as usize;
            (x[row][feature], y[row])
        }));
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));

        let mut sum_left = 0.0;
        let mut n_left = 0.0;
        for i in 0..column.len() - 1 {
            sum_left += column[i].1;
            n_left += 1.0;
            if column[i].0 == column[i + 1].0 {
                continue;
            }
            let n_right = n - n_left;
            if (n_left as usize) < min_leaf || (n_right as usize) < min_leaf {
                continue;
            }
            let sum_right = total - sum_left;
            let score = sum_left * sum_left / n_left + sum_right * sum_right / n_right;
            if score <= parent_score {
                continue;
            }
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                let threshold = midpoint(column[i].0, column[i + 1].0);
                let decrease = (score - parent_score) / n;
                best = Some((
                    score,
                    Split {
                        feature,
                        threshold,
                        decrease,
                    },
                ));
            }
        }
    }
    best.map(|(_, split)| split)
}

pub(crate) struct TreeBuilder<'a> {
    pub x: &'a [Vec<f64>],
    pub targets: Targets<'a>,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub features_per_split: usize,
    pub n_features: usize,
    pub n_root: usize,
}

impl<'a> TreeBuilder<'a> {
    pub fn build(&self, rows: Vec<u32>, rng: &mut Stream) -> Tree {
        let mut nodes = Vec::new();
        let mut importance = vec![0.0; self.n_features];
        self.grow(rows, 0, rng, &mut nodes, &mut importance);
        Tree { nodes, importance }
    }

    fn leaf(&self, rows: &[u32], nodes: &mut Vec<Node>) -> u32 {
        let node = match &self.targets {
            Targets::Classes { y, n_classes } => {
                let mut counts = vec![0u32; *n_classes];
                for r in rows {
                    counts[y[*r as usize]] += 1;
                }
                Node::ClassLeaf { counts }
            }
            Targets::Values { y } => {
                let sum: f64 = rows.iter().map(|r| y[*r as usize]).sum();
                Node::ValueLeaf {
                    value: sum / rows.len() as f64,
                    count: rows.len() as u32,
                }
            }
        };
        nodes.push(node);
        (nodes.len() - 1) as u32
    }

    fn is_pure(&self, rows: &[u32]) -> bool {
        match &self.targets {
            Targets::Classes { y, .. } => {
                let first = y[rows[0] as usize];
                rows.iter().all(|r| y[*r as usize] == first)
            }
            Targets::Values { y } => {
                let first = y[rows[0] as usize];
                rows.iter().all(|r| y[*r as usize] == first)
            }
        }
    }

    fn grow(
        &self,
        rows: Vec<u32>,
        depth: usize,
        rng: &mut Stream,
        nodes: &mut Vec<Node>,
        importance: &mut [f64],
    ) -> u32 {
        if depth >= self.max_depth
            || rows.len() < self.min_samples_split
            || self.is_pure(&rows)
        {
            return self.leaf(&rows, nodes);
        }

        let candidates = if self.features_per_split >= self.n_features {
            (0..self.n_features).collect::<Vec<_>>()
        } else {
            rng.sample_indices(self.n_features, self.features_per_split)
        };

        let split = match &self.targets {
            Targets::Classes { y, n_classes } => best_split_classification(
                self.x,
                y,
                *n_classes,
                &rows,
                &candidates,
                self.min_samples_leaf,
            ),
            Targets::Values { y } => {
                best_split_regression(self.x, y, &rows, &candidates, self.min_samples_leaf)
            }
        };
        let Some(split) = split else {
            return self.leaf(&rows, nodes);
        };

        importance[split.feature] += rows.len() as f64 / self.n_root as f64 * split.decrease;

        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
            .into_iter()
            .partition(|r| self.x[*r as usize][split.feature] <= split.threshold);
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

        let index = nodes.len() as u32;
        nodes.push(Node::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        let left = self.grow(left_rows, depth + 1, rng, nodes, importance);
        let right = self.grow(right_rows, depth + 1, rng, nodes, importance);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut nodes[index as usize]
        {
            *l = left;
            *r = right;
        }
        index
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_matches_hand_computed_values() {
        assert_eq!(gini_impurity(&[10, 0]).unwrap(), 0.0);
        assert_eq!(gini_impurity(&[5, 5]).unwrap(), 0.5);
        // 1 - (9/16 + 1/16) = 6/16
        assert_eq!(gini_impurity(&[3, 1]).unwrap(), 0.375);
        assert!(matches!(gini_impurity(&[0, 0]), Err(ForestError::EmptyNode)));
    }

    #[test]
    fn one_dimensional_split_lands_between_clusters() {
        // x = {1,2,9,10}, labels {A,A,B,B}: threshold 5.5, decrease 0.5.
        let x: Vec<Vec<f64>> = [1.0, 2.0, 9.0, 10.0].iter().map(|v| vec![*v]).collect();
        let y = vec![0usize, 0, 1, 1];
        let split = best_split_classification(&x, &y, 2, &[0, 1, 2, 3], &[0], 1).unwrap();
        assert_eq!(split.feature, 0);
        assert_eq!(split.threshold, 5.5);
        assert!((split.decrease - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_feature_yields_no_split() {
        let x: Vec<Vec<f64>> = (0..4).map(|_| vec![3.0]).collect();
        let y = vec![0usize, 1, 0, 1];
        assert!(best_split_classification(&x, &y, 2, &[0, 1, 2, 3], &[0], 1).is_none());
    }

    #[test]
    fn tie_breaks_choose_lowest_feature_index() {
        // Feature 1 duplicates feature 0: identical decreases everywhere.
        let x: Vec<Vec<f64>> = [1.0, 2.0, 9.0, 10.0]
            .iter()
            .map(|v| vec![*v, *v])
            .collect();
        let y = vec![0usize, 0, 1, 1];
        let split = best_split_classification(&x, &y, 2, &[0, 1, 2, 3], &[0, 1], 1).unwrap();
        assert_eq!(split.feature, 0);
    }

    #[test]
    fn no_improving_split_returns_none() {
        // Perfectly mixed at every threshold.
        let x: Vec<Vec<f64>> = [1.0, 2.0, 3.0, 4.0].iter().map(|v| vec![*v]).collect();
        let y = vec![0usize, 1, 0, 1];
        // Splitting at 1.5 leaves [1|0] vs [1,1|0,1]... check the search
        // only accepts strict improvements; the 2.5 split gives equal halves
        // with the same impurity as the parent.
        let split = best_split_classification(&x, &y, 2, &[0, 1, 2, 3], &[0], 1);
        // The 1.5 split does improve: left pure. Verify against brute force.
        assert!(split.is_some());
        let s = split.unwrap();
        assert_eq!(s.threshold, 1.5);
    }

    #[test]
    fn regression_split_reduces_variance() {
        let x: Vec<Vec<f64>> = [1.0, 2.0, 9.0, 10.0].iter().map(|v| vec![*v]).collect();
        let y = vec![5.0, 5.2, 20.0, 20.4];
        let split = best_split_regression(&x, &y, &[0, 1, 2, 3], &[0], 1).unwrap();
        assert_eq!(split.threshold, 5.5);
        assert!(split.decrease > 0.0);
    }

    #[test]
    fn midpoint_always_separates() {
        let a = 1.0f64;
        let b = a + f64::EPSILON;
        let t = midpoint(a, b);
        assert!(a <= t && t < b);
    }
}
