//! Local surrogate models and the explanations read from them.

use serde::{Deserialize, Serialize};

use super::ridge::fit_weighted_ridge;
use super::selection::project;
use crate::blackbox::{argmax, ProbabilityMatrix};
use crate::error::{Error, Result};
use crate::tree::{ColumnKind, ColumnLabels, RegressionTree, TreeParams};

/// Weighted ridge model of one class's probability over the selected
/// interpretable columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSurrogate {
    pub intercept: f64,
    /// Aligned with `columns`.
    pub coefficients: Vec<f64>,
    /// Selected column indices into the full design.
    pub columns: Vec<usize>,
    pub ridge: f64,
    pub target_class: usize,
}

impl LinearSurrogate {
    pub fn fit(
        design: &[Vec<f64>],
        probabilities: &ProbabilityMatrix,
        weights: &[f64],
        columns: &[usize],
        ridge: f64,
        target_class: usize,
    ) -> Result<Self> {
        if target_class >= probabilities.n_classes() {
            return Err(Error::input(format!(
                "target class {target_class} out of range"
            )));
        }
        let y = probabilities.column(target_class);
        let fit = fit_weighted_ridge(&project(design, columns), &y, weights, ridge)?;
        Ok(LinearSurrogate {
            intercept: fit.intercept,
            coefficients: fit.coefficients,
            columns: columns.to_vec(),
            ridge,
            target_class,
        })
    }

    /// Prediction from a full design row.
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .columns
                .iter()
                .zip(&self.coefficients)
                .map(|(&c, b)| b * row[c])
                .sum::<f64>()
    }

    /// Coefficient per design column; unselected columns get 0.
    pub fn attributions(&self, width: usize) -> Vec<f64> {
        let mut out = vec![0.0; width];
        for (&c, &b) in self.columns.iter().zip(&self.coefficients) {
            out[c] = b;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateInput {
    /// Interpretable binary encodings.
    Binary,
    /// Raw feature values.
    Raw,
}

/// Multi-output regression tree over all class probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSurrogate {
    pub tree: RegressionTree,
    pub input: SurrogateInput,
    /// Column indices (into the full input row) the tree was fitted on.
    pub columns: Vec<usize>,
}

impl TreeSurrogate {
    pub fn fit(
        inputs: &[Vec<f64>],
        kinds: &[ColumnKind],
        probabilities: &ProbabilityMatrix,
        weights: &[f64],
        columns: &[usize],
        input: SurrogateInput,
        params: TreeParams,
    ) -> Result<Self> {
        let sub = project(inputs, columns);
        let sub_kinds: Vec<ColumnKind> = columns.iter().map(|&c| kinds[c]).collect();
        let tree = RegressionTree::fit(&sub, &sub_kinds, probabilities.rows(), weights, params)?;
        Ok(TreeSurrogate {
            tree,
            input,
            columns: columns.to_vec(),
        })
    }

    fn project_row(&self, row: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|&c| row[c]).collect()
    }

    pub fn leaf_of(&self, row: &[f64]) -> usize {
        self.tree.route(&self.project_row(row))
    }

    /// Leaf probability vector for a full input row.
    pub fn predict(&self, row: &[f64]) -> &[f64] {
        &self.tree.leaf_stats(self.leaf_of(row)).value
    }

    /// Impurity decrease per full input column.
    pub fn attributions(&self, width: usize) -> Vec<f64> {
        let mut out = vec![0.0; width];
        for (j, v) in self.tree.impurity_decrease().into_iter().enumerate() {
            out[self.columns[j]] = v;
        }
        out
    }
}

/// Tree surrogate over every input column.
pub fn fit_tree_surrogate(
    inputs: &[Vec<f64>],
    kinds: &[ColumnKind],
    probabilities: &ProbabilityMatrix,
    weights: &[f64],
    input: SurrogateInput,
    max_depth: usize,
    min_leaf: usize,
) -> Result<TreeSurrogate> {
    if inputs.is_empty() {
        return Err(Error::input("cannot fit a tree surrogate on zero rows"));
    }
    let columns: Vec<usize> = (0..kinds.len()).collect();
    TreeSurrogate::fit(
        inputs,
        kinds,
        probabilities,
        weights,
        &columns,
        input,
        TreeParams {
            max_depth,
            min_leaf,
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Surrogate {
    Linear(LinearSurrogate),
    Tree(TreeSurrogate),
}

impl Surrogate {
    /// Predicted probability of `target` for a full input row.
    pub fn predict_target(&self, row: &[f64], target: usize) -> f64 {
        match self {
            Surrogate::Linear(m) => m.predict(row),
            Surrogate::Tree(m) => m.predict(row)[target],
        }
    }

    pub fn attributions(&self, width: usize) -> Vec<f64> {
        match self {
            Surrogate::Linear(m) => m.attributions(width),
            Surrogate::Tree(m) => m.attributions(width),
        }
    }

    pub fn uses_raw_input(&self) -> bool {
        matches!(
            self,
            Surrogate::Tree(TreeSurrogate {
                input: SurrogateInput::Raw,
                ..
            })
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionItem {
    /// Interpretable column index.
    pub feature: usize,
    pub description: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleItem {
    pub leaf: usize,
    pub rule: String,
    pub probabilities: Vec<f64>,
    pub weight: f64,
    pub contains_anchor: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Explanation {
    /// Items sorted by |value| descending, ties by feature index.
    Attribution {
        target_class: usize,
        target_name: String,
        intercept: f64,
        items: Vec<AttributionItem>,
    },
    /// One item per leaf, the anchor's leaf first, then by leaf id.
    Rules {
        target_class: usize,
        target_name: String,
        items: Vec<RuleItem>,
    },
}

impl Explanation {
    pub fn target_class(&self) -> usize {
        match self {
            Explanation::Attribution { target_class, .. }
            | Explanation::Rules { target_class, .. } => *target_class,
        }
    }
}

/// Reads the explanation off a trained surrogate.
///
/// `labels` names the surrogate's full input columns; `anchor_input` is the
/// anchor in the same input space.
pub fn extract_explanation(
    surrogate: &Surrogate,
    labels: &ColumnLabels,
    anchor_input: &[f64],
    class_names: &[String],
    target_class: usize,
) -> Explanation {
    let target_name = class_names.get(target_class).cloned().unwrap_or_default();
    match surrogate {
        Surrogate::Linear(m) => {
            let mut items: Vec<AttributionItem> = m
                .columns
                .iter()
                .zip(&m.coefficients)
                .map(|(&c, &value)| AttributionItem {
                    feature: c,
                    description: labels.names[c].clone(),
                    value,
                })
                .collect();
            items.sort_by(|a, b| {
                b.value
                    .abs()
                    .total_cmp(&a.value.abs())
                    .then(a.feature.cmp(&b.feature))
            });
            Explanation::Attribution {
                target_class,
                target_name,
                intercept: m.intercept,
                items,
            }
        }
        Surrogate::Tree(m) => {
            let sub_labels = ColumnLabels {
                names: m.columns.iter().map(|&c| labels.names[c].clone()).collect(),
                categories: m
                    .columns
                    .iter()
                    .map(|&c| labels.categories[c].clone())
                    .collect(),
            };
            let anchor_leaf = m.leaf_of(anchor_input);
            let paths = m.tree.leaf_paths();
            let mut order: Vec<usize> = (0..paths.len()).collect();
            order.sort_by_key(|&l| (l != anchor_leaf, l));
            let items = order
                .into_iter()
                .map(|leaf| {
                    let stats = m.tree.leaf_stats(leaf);
                    RuleItem {
                        leaf,
                        rule: sub_labels.describe_path(&paths[leaf]),
                        probabilities: stats.value.clone(),
                        weight: stats.weight,
                        contains_anchor: leaf == anchor_leaf,
                    }
                })
                .collect();
            Explanation::Rules {
                target_class,
                target_name,
                items,
            }
        }
    }
}

/// Class the surrogate predicts for a row, for agreement metrics.
pub fn tree_class(surrogate: &TreeSurrogate, row: &[f64]) -> usize {
    argmax(surrogate.predict(row))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> ColumnLabels {
        ColumnLabels::from_descriptions(&(0..n).map(|i| format!("bit{i}")).collect::<Vec<_>>())
    }

    fn linear(coefficients: Vec<f64>) -> Surrogate {
        let columns = (0..coefficients.len()).collect();
        Surrogate::Linear(LinearSurrogate {
            intercept: 0.1,
            coefficients,
            columns,
            ridge: 0.0,
            target_class: 0,
        })
    }

    fn close(got: &[f64], want: &[f64]) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
        }
    }

    fn order(e: &Explanation) -> Vec<usize> {
        match e {
            Explanation::Attribution { items, .. } => items.iter().map(|i| i.feature).collect(),
            _ => panic!("expected attributions"),
        }
    }

    #[test]
    fn attribution_sorted_by_magnitude() {
        let e = extract_explanation(
            &linear(vec![0.2, -0.9, 0.0]),
            &labels(3),
            &[1.0; 3],
            &["a".into(), "b".into()],
            0,
        );
        assert_eq!(order(&e), vec![1, 0, 2]);
    }

    #[test]
    fn zero_attributions_keep_feature_order() {
        let e = extract_explanation(
            &linear(vec![0.0; 4]),
            &labels(4),
            &[1.0; 4],
            &["a".into(), "b".into()],
            0,
        );
        assert_eq!(order(&e), vec![0, 1, 2, 3]);
    }

    #[test]
    fn depth_one_tree_rules_list_anchor_side_first() {
        let x = vec![
            vec![0.0, 1.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 0.0],
        ];
        let p = ProbabilityMatrix::new(vec![
            vec![0.9, 0.1],
            vec![0.7, 0.3],
            vec![0.2, 0.8],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let w = [1.0, 1.0, 1.0, 3.0];
        let s = fit_tree_surrogate(
            &x,
            &[ColumnKind::Numeric; 2],
            &p,
            &w,
            SurrogateInput::Binary,
            1,
            1,
        )
        .unwrap();
        let e = extract_explanation(
            &Surrogate::Tree(s),
            &labels(2),
            &[1.0, 1.0],
            &["a".into(), "b".into()],
            1,
        );
        let Explanation::Rules { items, .. } = e else {
            panic!()
        };
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].rule, "[bit0] > 0.5");
        assert!(items[0].contains_anchor);
        // Weighted means of the rows routed to each side.
        close(&items[0].probabilities, &[0.05, 0.95]);
        assert_eq!(items[1].rule, "[bit0] <= 0.5");
        close(&items[1].probabilities, &[0.8, 0.2]);
    }

    #[test]
    fn all_weight_on_one_sample_gives_its_row() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let p =
            ProbabilityMatrix::new(vec![vec![0.9, 0.1], vec![0.3, 0.7], vec![0.5, 0.5]]).unwrap();
        let s = fit_tree_surrogate(
            &x,
            &[ColumnKind::Numeric],
            &p,
            &[0.0, 1.0, 0.0],
            SurrogateInput::Raw,
            3,
            1,
        )
        .unwrap();
        for leaf in 0..s.tree.n_leaves() {
            let stats = s.tree.leaf_stats(leaf);
            if stats.weight > 0.0 {
                assert_eq!(stats.value, vec![0.3, 0.7]);
            }
        }
    }

    #[test]
    fn depth_zero_tree_predicts_weighted_mean() {
        let x = vec![vec![0.0], vec![1.0]];
        let p = ProbabilityMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = fit_tree_surrogate(
            &x,
            &[ColumnKind::Numeric],
            &p,
            &[3.0, 1.0],
            SurrogateInput::Raw,
            0,
            1,
        )
        .unwrap();
        assert_eq!(s.predict(&[0.0]), &[0.75, 0.25]);
    }
}
