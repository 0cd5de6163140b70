//! Greedy CART induction for weighted multi-output regression.
//!
//! Shared by the tree partition representation and the tree surrogate.
//! Nodes split on the candidate minimising the weighted sum of squared errors
//! around the children's weighted mean vectors. Numeric candidates are the
//! midpoints between consecutive distinct values; categorical candidates put
//! one category on the left and the rest on the right. Ties go to the lowest
//! feature index, then the lowest threshold (or category id).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical { n_categories: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SplitRule {
    /// `value <= threshold` goes left.
    Threshold { feature: usize, threshold: f64 },
    /// `value == category` goes left.
    Category { feature: usize, category: usize },
}

impl SplitRule {
    pub fn feature(&self) -> usize {
        match *self {
            SplitRule::Threshold { feature, .. } | SplitRule::Category { feature, .. } => feature,
        }
    }

    #[inline]
    pub fn goes_left(&self, row: &[f64]) -> bool {
        match *self {
            SplitRule::Threshold { feature, threshold } => row[feature] <= threshold,
            SplitRule::Category { feature, category } => row[feature] == category as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    /// Weighted mean target vector.
    pub value: Vec<f64>,
    pub weight: f64,
    pub count: usize,
    /// Weighted SSE around `value`.
    pub impurity: f64,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        rule: SplitRule,
        left: usize,
        right: usize,
        stats: NodeStats,
    },
    Leaf {
        leaf_id: usize,
        stats: NodeStats,
    },
}

impl Node {
    pub fn stats(&self) -> &NodeStats {
        match self {
            Node::Split { stats, .. } | Node::Leaf { stats, .. } => stats,
        }
    }
}

/// One step on a root-to-leaf path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub rule: SplitRule,
    pub went_left: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub params: TreeParams,
    pub kinds: Vec<ColumnKind>,
    pub n_outputs: usize,
    /// Root is node 0.
    pub nodes: Vec<Node>,
    /// Node index of each leaf id.
    pub leaves: Vec<usize>,
}

impl RegressionTree {
    /// Fits a tree. `targets` and `weights` are row-aligned with `inputs`.
    pub fn fit(
        inputs: &[Vec<f64>],
        kinds: &[ColumnKind],
        targets: &[Vec<f64>],
        weights: &[f64],
        params: TreeParams,
    ) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::input("cannot fit a tree on zero rows"));
        }
        if targets.len() != inputs.len() || weights.len() != inputs.len() {
            return Err(Error::input(format!(
                "tree inputs misaligned: {} rows, {} targets, {} weights",
                inputs.len(),
                targets.len(),
                weights.len()
            )));
        }
        if params.min_leaf == 0 {
            return Err(Error::input("min_leaf must be at least 1"));
        }
        let n_outputs = targets[0].len();
        if n_outputs == 0 || targets.iter().any(|t| t.len() != n_outputs) {
            return Err(Error::input("targets must be non-empty and equally sized"));
        }
        if inputs.iter().any(|r| r.len() != kinds.len()) {
            return Err(Error::input("input rows do not match column kinds"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::input("weights must be finite and non-negative"));
        }
        let mut builder = Builder {
            inputs,
            kinds,
            targets,
            weights,
            params,
            nodes: Vec::new(),
            leaves: Vec::new(),
        };
        let all: Vec<usize> = (0..inputs.len()).collect();
        builder.grow(all, 0)?;
        Ok(RegressionTree {
            params,
            kinds: kinds.to_vec(),
            n_outputs,
            nodes: builder.nodes,
            leaves: builder.leaves,
        })
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn route(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { leaf_id, .. } => return *leaf_id,
                Node::Split {
                    rule, left, right, ..
                } => at = if rule.goes_left(row) { *left } else { *right },
            }
        }
    }

    pub fn leaf_stats(&self, leaf_id: usize) -> &NodeStats {
        self.nodes[self.leaves[leaf_id]].stats()
    }

    pub fn predict(&self, row: &[f64]) -> &[f64] {
        &self.leaf_stats(self.route(row)).value
    }

    /// Root-to-leaf conditions for every leaf, indexed by leaf id.
    pub fn leaf_paths(&self) -> Vec<Vec<PathStep>> {
        let mut paths = vec![Vec::new(); self.leaves.len()];
        let mut stack = vec![(0usize, Vec::<PathStep>::new())];
        while let Some((at, path)) = stack.pop() {
            match &self.nodes[at] {
                Node::Leaf { leaf_id, .. } => paths[*leaf_id] = path,
                Node::Split {
                    rule, left, right, ..
                } => {
                    let mut l = path.clone();
                    l.push(PathStep {
                        rule: *rule,
                        went_left: true,
                    });
                    let mut r = path;
                    r.push(PathStep {
                        rule: *rule,
                        went_left: false,
                    });
                    stack.push((*right, r));
                    stack.push((*left, l));
                }
            }
        }
        paths
    }

    /// Total impurity decrease attributed to each input column.
    pub fn impurity_decrease(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.kinds.len()];
        for node in &self.nodes {
            if let Node::Split {
                rule,
                left,
                right,
                stats,
            } = node
            {
                let children =
                    self.nodes[*left].stats().impurity + self.nodes[*right].stats().impurity;
                out[rule.feature()] += stats.impurity - children;
            }
        }
        out
    }
}

/// Human-readable names for tree input columns.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnLabels {
    pub names: Vec<String>,
    /// Category names for categorical columns.
    pub categories: Vec<Option<Vec<String>>>,
}

impl ColumnLabels {
    pub fn from_schema(schema: &crate::data::Schema) -> Self {
        ColumnLabels {
            names: schema.names(),
            categories: schema
                .features()
                .iter()
                .map(|f| f.categories().map(<[String]>::to_vec))
                .collect(),
        }
    }

    /// Labels for binary interpretable columns, shown in brackets.
    pub fn from_descriptions(descriptions: &[String]) -> Self {
        ColumnLabels {
            names: descriptions.iter().map(|d| format!("[{d}]")).collect(),
            categories: vec![None; descriptions.len()],
        }
    }

    pub fn describe(&self, step: &PathStep) -> String {
        match step.rule {
            SplitRule::Threshold { feature, threshold } => {
                let op = if step.went_left { "<=" } else { ">" };
                format!("{} {op} {threshold}", self.names[feature])
            }
            SplitRule::Category { feature, category } => {
                let op = if step.went_left { "=" } else { "!=" };
                let value = self.categories[feature]
                    .as_ref()
                    .and_then(|c| c.get(category).cloned())
                    .unwrap_or_else(|| category.to_string());
                format!("{} {op} {value}", self.names[feature])
            }
        }
    }

    /// Conjunction of a root-to-leaf path; `true` for the root leaf.
    pub fn describe_path(&self, path: &[PathStep]) -> String {
        if path.is_empty() {
            return "true".to_owned();
        }
        path.iter()
            .map(|s| self.describe(s))
            .collect::<Vec<_>>()
            .join(" AND ")
    }
}

pub fn column_kinds(schema: &crate::data::Schema) -> Vec<ColumnKind> {
    schema
        .features()
        .iter()
        .map(|f| match f.categories() {
            None => ColumnKind::Numeric,
            Some(c) => ColumnKind::Categorical {
                n_categories: c.len(),
            },
        })
        .collect()
}

struct Builder<'a> {
    inputs: &'a [Vec<f64>],
    kinds: &'a [ColumnKind],
    targets: &'a [Vec<f64>],
    weights: &'a [f64],
    params: TreeParams,
    nodes: Vec<Node>,
    leaves: Vec<usize>,
}

/// Running weighted sums for SSE = Σw‖y‖² − ‖Σwy‖² / Σw.
#[derive(Clone)]
struct Moments {
    weight: f64,
    count: usize,
    sum: Vec<f64>,
    sum_sq: f64,
}

impl Moments {
    fn new(n_outputs: usize) -> Self {
        Moments {
            weight: 0.0,
            count: 0,
            sum: vec![0.0; n_outputs],
            sum_sq: 0.0,
        }
    }

    fn add(&mut self, w: f64, y: &[f64]) {
        self.weight += w;
        self.count += 1;
        for (s, v) in self.sum.iter_mut().zip(y) {
            *s += w * v;
        }
        self.sum_sq += w * y.iter().map(|v| v * v).sum::<f64>();
    }

    fn minus(&self, other: &Moments) -> Moments {
        Moments {
            weight: self.weight - other.weight,
            count: self.count - other.count,
            sum: self
                .sum
                .iter()
                .zip(&other.sum)
                .map(|(a, b)| a - b)
                .collect(),
            sum_sq: self.sum_sq - other.sum_sq,
        }
    }

    fn sse(&self) -> f64 {
        if self.weight <= 0.0 {
            return 0.0;
        }
        let norm: f64 = self.sum.iter().map(|s| s * s).sum();
        (self.sum_sq - norm / self.weight).max(0.0)
    }
}

impl Builder<'_> {
    fn node_stats(&self, idx: &[usize], depth: usize) -> Result<NodeStats> {
        let m = self.targets[0].len();
        let weight: f64 = idx.iter().map(|&i| self.weights[i]).sum();
        if !(weight > 0.0) {
            return Err(Error::input("tree node has zero total weight"));
        }
        let mut value = vec![0.0; m];
        for &i in idx {
            for (v, t) in value.iter_mut().zip(&self.targets[i]) {
                *v += self.weights[i] * t;
            }
        }
        for v in &mut value {
            *v /= weight;
        }
        let impurity = idx
            .iter()
            .map(|&i| {
                self.weights[i]
                    * self.targets[i]
                        .iter()
                        .zip(&value)
                        .map(|(t, v)| (t - v) * (t - v))
                        .sum::<f64>()
            })
            .sum();
        Ok(NodeStats {
            value,
            weight,
            count: idx.len(),
            impurity,
            depth,
        })
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> Result<usize> {
        let stats = self.node_stats(&idx, depth)?;
        let tolerance = 1e-12 * stats.weight;
        let split = if depth < self.params.max_depth && stats.impurity > tolerance {
            self.best_split(&idx, stats.impurity, tolerance)?
        } else {
            None
        };
        let at = self.nodes.len();
        match split {
            None => {
                let leaf_id = self.leaves.len();
                self.leaves.push(at);
                self.nodes.push(Node::Leaf { leaf_id, stats });
            }
            Some((rule, left_idx, right_idx)) => {
                // Placeholder until children indices are known.
                self.nodes.push(Node::Split {
                    rule,
                    left: 0,
                    right: 0,
                    stats,
                });
                let left = self.grow(left_idx, depth + 1)?;
                let right = self.grow(right_idx, depth + 1)?;
                if let Node::Split {
                    left: l, right: r, ..
                } = &mut self.nodes[at]
                {
                    *l = left;
                    *r = right;
                }
            }
        }
        Ok(at)
    }

    /// Best admissible split whose exact child SSE improves on the parent by
    /// more than `tolerance`.
    fn best_split(
        &self,
        idx: &[usize],
        parent_sse: f64,
        tolerance: f64,
    ) -> Result<Option<(SplitRule, Vec<usize>, Vec<usize>)>> {
        let m = self.targets[0].len();
        let min_leaf = self.params.min_leaf;
        if idx.len() < 2 * min_leaf {
            return Ok(None);
        }
        let mut total = Moments::new(m);
        for &i in idx {
            total.add(self.weights[i], &self.targets[i]);
        }

        let mut best: Option<(f64, SplitRule)> = None;
        let consider = |score: f64, rule: SplitRule, best: &mut Option<(f64, SplitRule)>| {
            let better = match best {
                None => true,
                Some((b, _)) => score < *b - tolerance,
            };
            if better {
                *best = Some((score, rule));
            }
        };

        for (feature, kind) in self.kinds.iter().enumerate() {
            match kind {
                ColumnKind::Numeric => {
                    let mut order = idx.to_vec();
                    order.sort_by(|&a, &b| {
                        self.inputs[a][feature].total_cmp(&self.inputs[b][feature])
                    });
                    let mut left = Moments::new(m);
                    for pos in 0..order.len() - 1 {
                        let i = order[pos];
                        left.add(self.weights[i], &self.targets[i]);
                        let here = self.inputs[i][feature];
                        let next = self.inputs[order[pos + 1]][feature];
                        if here == next {
                            continue;
                        }
                        let n_left = pos + 1;
                        if n_left < min_leaf || order.len() - n_left < min_leaf {
                            continue;
                        }
                        let right = total.minus(&left);
                        if left.weight <= 0.0 || right.weight <= 0.0 {
                            continue;
                        }
                        let mut threshold = here + (next - here) / 2.0;
                        if !(threshold < next) {
                            threshold = here;
                        }
                        consider(
                            left.sse() + right.sse(),
                            SplitRule::Threshold { feature, threshold },
                            &mut best,
                        );
                    }
                }
                ColumnKind::Categorical { n_categories } => {
                    let mut per_cat: Vec<Moments> = vec![Moments::new(m); *n_categories];
                    for &i in idx {
                        let c = self.inputs[i][feature] as usize;
                        per_cat[c].add(self.weights[i], &self.targets[i]);
                    }
                    for (category, left) in per_cat.iter().enumerate() {
                        if left.count == 0 || left.count == idx.len() {
                            continue;
                        }
                        if left.count < min_leaf || idx.len() - left.count < min_leaf {
                            continue;
                        }
                        let right = total.minus(left);
                        if left.weight <= 0.0 || right.weight <= 0.0 {
                            continue;
                        }
                        consider(
                            left.sse() + right.sse(),
                            SplitRule::Category { feature, category },
                            &mut best,
                        );
                    }
                }
            }
        }

        let Some((_, rule)) = best else {
            return Ok(None);
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| rule.goes_left(&self.inputs[i]));
        let children =
            self.node_stats(&left_idx, 0)?.impurity + self.node_stats(&right_idx, 0)?.impurity;
        if parent_sse - children > tolerance {
            Ok(Some((rule, left_idx, right_idx)))
        } else {
            Ok(None)
        }
    }
}
