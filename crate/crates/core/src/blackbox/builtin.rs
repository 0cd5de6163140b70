//! Reference models that run in-process: linear softmax, ordered rules and
//! k-nearest neighbours.

use serde_json::Value;

use super::{ConditionSpec, RuleSpec};
use crate::data::{Row, Schema};
use crate::error::{Error, Result};
use crate::explain::distance::GowerMetric;

fn check_classes(classes: &[String]) -> Result<()> {
    if classes.len() < 2 {
        return Err(Error::input("a model needs at least 2 classes"));
    }
    for (i, c) in classes.iter().enumerate() {
        if classes[..i].contains(c) {
            return Err(Error::input(format!("class {c:?} listed twice")));
        }
    }
    Ok(())
}

fn class_index(classes: &[String], name: &str) -> Result<usize> {
    classes
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| Error::input(format!("unknown class {name:?}")))
}

#[derive(Debug)]
pub struct LinearSoftmax {
    pub(super) schema: Schema,
    pub(super) classes: Vec<String>,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    pub(super) spec_digest: String,
}

impl LinearSoftmax {
    pub(super) fn new(
        schema: Schema,
        classes: Vec<String>,
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
        spec_digest: String,
    ) -> Result<Self> {
        check_classes(&classes)?;
        let width = encoded_width(&schema);
        if weights.len() != classes.len() || weights.iter().any(|w| w.len() != width) {
            return Err(Error::input(format!(
                "linear_softmax weights must be {} x {width} (classes x encoded features)",
                classes.len()
            )));
        }
        if bias.len() != classes.len() {
            return Err(Error::input(
                "linear_softmax bias must have one entry per class",
            ));
        }
        if weights
            .iter()
            .flatten()
            .chain(&bias)
            .any(|v| !v.is_finite())
        {
            return Err(Error::input("linear_softmax parameters must be finite"));
        }
        Ok(LinearSoftmax {
            schema,
            classes,
            weights,
            bias,
            spec_digest,
        })
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let x = encode_numeric(&self.schema, row);
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + w.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>())
            .collect()
    }

    pub(super) fn predict_row(&self, row: &[f64]) -> Vec<f64> {
        softmax(&self.scores(row))
    }
}

/// Numeric features pass through; categorical features are one-hot expanded.
pub fn encoded_width(schema: &Schema) -> usize {
    schema
        .features()
        .iter()
        .map(|f| f.categories().map_or(1, <[String]>::len))
        .sum()
}

fn encode_numeric(schema: &Schema, row: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(encoded_width(schema));
    for (f, &v) in schema.features().iter().zip(row) {
        match f.categories() {
            None => out.push(v),
            Some(cats) => out.extend((0..cats.len()).map(|c| f64::from(u8::from(c as f64 == v)))),
        }
    }
    out
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Gt,
    Ge,
    Lt,
    Le,
    Eq,
    Ne,
}

impl CmpOp {
    fn parse(op: &str) -> Result<Self> {
        Ok(match op {
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            "==" | "=" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            other => return Err(Error::input(format!("unknown comparison {other:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Condition {
    pub feature: usize,
    pub op: CmpOp,
    /// Category id for categorical features.
    pub value: f64,
}

impl Condition {
    pub fn holds(&self, row: &[f64]) -> bool {
        let v = row[self.feature];
        match self.op {
            CmpOp::Gt => v > self.value,
            CmpOp::Ge => v >= self.value,
            CmpOp::Lt => v < self.value,
            CmpOp::Le => v <= self.value,
            CmpOp::Eq => v == self.value,
            CmpOp::Ne => v != self.value,
        }
    }

    fn from_spec(schema: &Schema, spec: &ConditionSpec) -> Result<Self> {
        let feature = schema.index_of(&spec.feature).ok_or_else(|| {
            Error::input(format!("rule refers to unknown feature {:?}", spec.feature))
        })?;
        let op = CmpOp::parse(&spec.op)?;
        if !schema.feature(feature).is_numeric() && !matches!(op, CmpOp::Eq | CmpOp::Ne) {
            return Err(Error::input(format!(
                "categorical feature {:?} only supports == and !=",
                spec.feature
            )));
        }
        let value = schema.cell_from_json(feature, &spec.value)?;
        Ok(Condition { feature, op, value })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub class: usize,
}

#[derive(Debug)]
pub struct RuleModel {
    pub(super) schema: Schema,
    pub(super) classes: Vec<String>,
    rules: Vec<Rule>,
    default: usize,
    pub(super) spec_digest: String,
}

impl RuleModel {
    pub(super) fn from_spec(
        schema: &Schema,
        classes: &[String],
        rules: &[RuleSpec],
        default: &str,
        spec_digest: String,
    ) -> Result<Self> {
        check_classes(classes)?;
        let rules = rules
            .iter()
            .map(|r| {
                Ok(Rule {
                    conditions: r
                        .when
                        .iter()
                        .map(|c| Condition::from_spec(schema, c))
                        .collect::<Result<_>>()?,
                    class: class_index(classes, &r.class)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(RuleModel {
            schema: schema.clone(),
            classes: classes.to_vec(),
            rules,
            default: class_index(classes, default)?,
            spec_digest,
        })
    }

    pub fn classify(&self, row: &[f64]) -> usize {
        self.rules
            .iter()
            .find(|r| r.conditions.iter().all(|c| c.holds(row)))
            .map_or(self.default, |r| r.class)
    }

    pub(super) fn predict_row(&self, row: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.classes.len()];
        p[self.classify(row)] = 1.0;
        p
    }
}

#[derive(Debug)]
pub struct KnnModel {
    pub(super) schema: Schema,
    pub(super) classes: Vec<String>,
    k: usize,
    rows: Vec<Row>,
    labels: Vec<usize>,
    metric: GowerMetric,
    pub(super) spec_digest: String,
}

impl KnnModel {
    pub(super) fn from_spec(
        schema: &Schema,
        classes: &[String],
        k: usize,
        rows: &[Vec<Value>],
        labels: &[String],
        spec_digest: String,
    ) -> Result<Self> {
        check_classes(classes)?;
        if rows.len() != labels.len() {
            return Err(Error::input("knn needs one label per training row"));
        }
        if k == 0 || k > rows.len() {
            return Err(Error::input(format!(
                "knn k must be in 1..={} (got {k})",
                rows.len()
            )));
        }
        let rows: Vec<Row> = rows
            .iter()
            .map(|r| schema.row_from_json(r))
            .collect::<Result<_>>()?;
        let labels = labels
            .iter()
            .map(|l| class_index(classes, l))
            .collect::<Result<_>>()?;
        Ok(KnnModel {
            metric: GowerMetric::from_rows(schema, &rows),
            schema: schema.clone(),
            classes: classes.to_vec(),
            k,
            rows,
            labels,
            spec_digest,
        })
    }

    /// Vote fractions of the `k` nearest training rows. Equidistant rows are
    /// ordered by class index, then by training position.
    pub(super) fn predict_row(&self, row: &[f64]) -> Vec<f64> {
        let mut neighbours: Vec<(f64, usize, usize)> = self
            .rows
            .iter()
            .zip(&self.labels)
            .enumerate()
            .map(|(i, (r, &label))| (self.metric.distance_unchecked(row, r), label, i))
            .collect();
        neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut p = vec![0.0; self.classes.len()];
        for &(_, label, _) in &neighbours[..self.k] {
            p[label] += 1.0;
        }
        for v in &mut p {
            *v /= self.k as f64;
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::super::{ModelHandle, ModelSpec};
    use crate::data::{FeatureSpec, Schema};
    use serde_json::json;

    fn schema2() -> Schema {
        Schema::new(vec![FeatureSpec::numeric("x0"), FeatureSpec::numeric("x1")]).unwrap()
    }

    fn bind(spec: serde_json::Value, schema: &Schema) -> ModelHandle {
        let spec: ModelSpec = serde_json::from_value(spec).unwrap();
        ModelHandle::from_spec(&spec, schema).unwrap()
    }

    #[test]
    fn zero_linear_softmax_is_uniform() {
        let m = bind(
            json!({"kind": "linear_softmax", "classes": ["a", "b", "c"],
                   "weights": [[0, 0], [0, 0], [0, 0]], "bias": [0, 0, 0]}),
            &schema2(),
        );
        let p = m.predict_proba(&[vec![1.0, -3.0], vec![7.5, 2.0]]).unwrap();
        for row in p.rows() {
            assert_eq!(row, &[1.0 / 3.0; 3]);
        }
    }

    #[test]
    fn linear_softmax_one_hot_expands_categories() {
        let schema = Schema::new(vec![
            FeatureSpec::numeric("x"),
            FeatureSpec::categorical("c", ["u", "v"]),
        ])
        .unwrap();
        let m = bind(
            json!({"kind": "linear_softmax", "classes": ["a", "b"],
                   "weights": [[0, 0, 0], [0, 0, 2]], "bias": [0, 0]}),
            &schema,
        );
        let p = m.predict_proba(&[vec![5.0, 0.0], vec![5.0, 1.0]]).unwrap();
        assert_eq!(p.row(0), &[0.5, 0.5]);
        let e2 = 2f64.exp();
        assert!((p.row(1)[1] - e2 / (1.0 + e2)).abs() < 1e-15);
    }

    #[test]
    fn linear_softmax_shape_is_checked() {
        let spec: ModelSpec = serde_json::from_value(json!({"kind": "linear_softmax",
            "classes": ["a", "b"], "weights": [[0], [0]], "bias": [0, 0]}))
        .unwrap();
        assert!(ModelHandle::from_spec(&spec, &schema2()).is_err());
    }

    #[test]
    fn rule_model_hard_probabilities() {
        let m = bind(
            json!({"kind": "rule", "classes": ["A", "B"], "default": "B",
                   "rules": [{"when": [{"feature": "x0", "op": ">", "value": 0}], "class": "A"}]}),
            &schema2(),
        );
        let p = m.predict_proba(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(p.rows(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn rule_model_categorical_condition() {
        let schema = Schema::new(vec![FeatureSpec::categorical("c", ["u", "v"])]).unwrap();
        let m = bind(
            json!({"kind": "rule", "classes": ["A", "B"], "default": "A",
                   "rules": [{"when": [{"feature": "c", "op": "==", "value": "v"}], "class": "B"}]}),
            &schema,
        );
        assert_eq!(m.predict_proba(&[vec![1.0]]).unwrap().row(0), &[0.0, 1.0]);
        let bad: ModelSpec = serde_json::from_value(json!({"kind": "rule", "classes": ["A", "B"],
            "default": "A", "rules": [{"when": [{"feature": "c", "op": ">", "value": "v"}], "class": "B"}]}))
        .unwrap();
        assert!(ModelHandle::from_spec(&bad, &schema).is_err());
    }

    #[test]
    fn knn_k1_returns_label_of_identical_row() {
        let rows = [[0.0, 0.0], [1.0, 1.0], [2.0, 0.5], [3.0, 3.0]];
        let labels = ["a", "b", "a", "b"];
        let m = bind(
            json!({"kind": "knn", "classes": ["a", "b"], "k": 1, "rows": rows, "labels": labels}),
            &schema2(),
        );
        // Brute force: the query equals a training row, so that row is nearest.
        for (row, label) in rows.iter().zip(labels) {
            let p = m.predict_proba(&[row.to_vec()]).unwrap();
            let expected = if label == "a" { [1.0, 0.0] } else { [0.0, 1.0] };
            assert_eq!(p.row(0), &expected);
        }
    }

    #[test]
    fn knn_equidistant_pair_splits_votes() {
        let m = bind(
            json!({"kind": "knn", "classes": ["a", "b"], "k": 2,
                   "rows": [[-1.0, 0.0], [1.0, 0.0]], "labels": ["b", "a"]}),
            &schema2(),
        );
        assert_eq!(
            m.predict_proba(&[vec![0.0, 0.0]]).unwrap().row(0),
            &[0.5, 0.5]
        );
    }

    #[test]
    fn knn_tie_at_cutoff_prefers_lowest_class() {
        let m = bind(
            json!({"kind": "knn", "classes": ["a", "b"], "k": 1,
                   "rows": [[-1.0, 0.0], [1.0, 0.0]], "labels": ["b", "a"]}),
            &schema2(),
        );
        assert_eq!(
            m.predict_proba(&[vec![0.0, 0.0]]).unwrap().row(0),
            &[1.0, 0.0]
        );
    }

    #[test]
    fn knn_k_range_is_checked() {
        let spec: ModelSpec = serde_json::from_value(json!({"kind": "knn", "classes": ["a", "b"],
            "k": 3, "rows": [[0, 0], [1, 1]], "labels": ["a", "b"]}))
        .unwrap();
        assert!(ModelHandle::from_spec(&spec, &schema2()).is_err());
    }

    #[test]
    fn schema_mismatch_is_an_input_error() {
        let m = bind(
            json!({"kind": "rule", "classes": ["A", "B"], "default": "B", "rules": []}),
            &schema2(),
        );
        assert!(m.predict_proba(&[vec![1.0]]).is_err());
    }

    #[test]
    fn single_class_models_are_rejected() {
        let spec: ModelSpec = serde_json::from_value(
            json!({"kind": "rule", "classes": ["A"], "default": "A", "rules": []}),
        )
        .unwrap();
        assert!(ModelHandle::from_spec(&spec, &schema2()).is_err());
    }
}
