//! Interpretable representations: binary re-encodings of raw rows relative
//! to the explained instance.
//!
//! * Quartile discretisation: bit `j` says whether feature `j` falls in the
//!   same quartile bin as the anchor (same category for categorical
//!   features).
//! * Tree partition: a regression tree fitted to black-box outputs; a sample
//!   either shares the anchor's leaf (one bit) or is one-hot encoded over all
//!   leaves.

use serde::{Deserialize, Serialize};

use crate::blackbox::ProbabilityMatrix;
use crate::data::{ExplainedInstance, FeatureStats, Schema, TabularDataset};
use crate::error::{Error, Result};
use crate::tree::{column_kinds, ColumnLabels, RegressionTree, TreeParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryEncoding {
    pub bits: Vec<u8>,
    pub descriptions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureBins {
    Quartile {
        boundaries: [f64; 3],
        constant: bool,
    },
    PassThrough,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretiser {
    pub features: Vec<FeatureBins>,
}

/// Boundaries are the dataset's quartiles; categorical features pass through.
pub fn fit_quartile_discretiser(dataset: &TabularDataset) -> Discretiser {
    Discretiser {
        features: dataset
            .stats()
            .iter()
            .map(|s| match s {
                FeatureStats::Numeric(n) => FeatureBins::Quartile {
                    boundaries: [n.q25, n.q50, n.q75],
                    constant: n.min == n.max,
                },
                FeatureStats::Categorical { .. } => FeatureBins::PassThrough,
            })
            .collect(),
    }
}

/// Bin of `value` among `(-inf, b1]`, `(b1, b2]`, `(b2, b3]`, `(b3, inf)`.
pub fn bin_index(value: f64, boundaries: [f64; 3]) -> Result<usize> {
    if value.is_nan() {
        return Err(Error::input("cannot bin NaN"));
    }
    Ok(boundaries.iter().position(|&b| value <= b).unwrap_or(3))
}

fn bin_description(name: &str, bin: usize, [b1, b2, b3]: [f64; 3]) -> String {
    match bin {
        0 => format!("{name} <= {b1}"),
        1 => format!("{b1} < {name} <= {b2}"),
        2 => format!("{b2} < {name} <= {b3}"),
        _ => format!("{name} > {b3}"),
    }
}

/// Sample-independent part of the same-bin encoding for a given anchor.
#[derive(Clone, Debug)]
pub struct QuartileEncoder {
    /// Anchor bin for numeric features, anchor category for categorical.
    anchor_cells: Vec<AnchorCell>,
    descriptions: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
enum AnchorCell {
    Bin { bin: usize, boundaries: [f64; 3] },
    Category(f64),
}

impl QuartileEncoder {
    pub fn new(
        discretiser: &Discretiser,
        schema: &Schema,
        anchor: &ExplainedInstance,
    ) -> Result<Self> {
        schema.check_row(&anchor.values)?;
        if discretiser.features.len() != schema.len() {
            return Err(Error::input("discretiser does not match schema"));
        }
        let mut anchor_cells = Vec::with_capacity(schema.len());
        let mut descriptions = Vec::with_capacity(schema.len());
        for (j, (bins, spec)) in discretiser
            .features
            .iter()
            .zip(schema.features())
            .enumerate()
        {
            let value = anchor.values[j];
            match (bins, spec.categories()) {
                (FeatureBins::Quartile { boundaries, .. }, None) => {
                    let bin = bin_index(value, *boundaries)?;
                    descriptions.push(bin_description(&spec.name, bin, *boundaries));
                    anchor_cells.push(AnchorCell::Bin {
                        bin,
                        boundaries: *boundaries,
                    });
                }
                (FeatureBins::PassThrough, Some(cats)) => {
                    descriptions.push(format!("{} = {}", spec.name, cats[value as usize]));
                    anchor_cells.push(AnchorCell::Category(value));
                }
                _ => {
                    return Err(Error::input(format!(
                        "discretiser kind does not match feature {:?}",
                        spec.name
                    )))
                }
            }
        }
        Ok(QuartileEncoder {
            anchor_cells,
            descriptions,
        })
    }

    pub fn descriptions(&self) -> &[String] {
        &self.descriptions
    }

    pub fn anchor_bins(&self) -> Vec<Option<usize>> {
        self.anchor_cells
            .iter()
            .map(|c| match c {
                AnchorCell::Bin { bin, .. } => Some(*bin),
                AnchorCell::Category(_) => None,
            })
            .collect()
    }

    pub fn encode(&self, sample: &[f64]) -> Result<Vec<u8>> {
        if sample.len() != self.anchor_cells.len() {
            return Err(Error::input(format!(
                "sample has {} cells, expected {}",
                sample.len(),
                self.anchor_cells.len()
            )));
        }
        self.anchor_cells
            .iter()
            .zip(sample)
            .map(|(cell, &v)| match *cell {
                AnchorCell::Bin { bin, boundaries } => {
                    Ok(u8::from(bin_index(v, boundaries)? == bin))
                }
                AnchorCell::Category(c) => Ok(u8::from(v == c)),
            })
            .collect()
    }
}

pub fn encode_same_bin(
    sample: &[f64],
    anchor: &ExplainedInstance,
    discretiser: &Discretiser,
    schema: &Schema,
) -> Result<BinaryEncoding> {
    schema.check_row(sample)?;
    let encoder = QuartileEncoder::new(discretiser, schema, anchor)?;
    Ok(BinaryEncoding {
        bits: encoder.encode(sample)?,
        descriptions: encoder.descriptions,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafEncoding {
    SameLeaf,
    OneHot,
}

/// Regression tree over raw features, fitted to black-box probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreePartition {
    pub tree: RegressionTree,
    /// Rule text per leaf id.
    pub leaf_rules: Vec<String>,
}

pub fn fit_tree_partition(
    schema: &Schema,
    rows: &[Vec<f64>],
    targets: &ProbabilityMatrix,
    max_depth: usize,
    min_leaf: usize,
) -> Result<TreePartition> {
    if rows.is_empty() {
        return Err(Error::input("cannot fit a tree partition on zero rows"));
    }
    if targets.n_rows() != rows.len() {
        return Err(Error::input("tree partition targets are not row-aligned"));
    }
    let weights = vec![1.0; rows.len()];
    let tree = RegressionTree::fit(
        rows,
        &column_kinds(schema),
        targets.rows(),
        &weights,
        TreeParams {
            max_depth,
            min_leaf,
        },
    )?;
    let labels = ColumnLabels::from_schema(schema);
    let leaf_rules = tree
        .leaf_paths()
        .iter()
        .map(|p| labels.describe_path(p))
        .collect();
    Ok(TreePartition { tree, leaf_rules })
}

impl TreePartition {
    pub fn n_leaves(&self) -> usize {
        self.tree.n_leaves()
    }

    pub fn route(&self, row: &[f64]) -> usize {
        self.tree.route(row)
    }

    pub fn leaf_description(&self, leaf: usize) -> String {
        format!("leaf {leaf}: {}", self.leaf_rules[leaf])
    }
}

#[derive(Clone, Debug)]
pub struct LeafEncoder {
    anchor_leaf: usize,
    mode: LeafEncoding,
    descriptions: Vec<String>,
}

impl LeafEncoder {
    pub fn new(partition: &TreePartition, anchor: &ExplainedInstance, mode: LeafEncoding) -> Self {
        let anchor_leaf = partition.route(&anchor.values);
        let descriptions = match mode {
            LeafEncoding::SameLeaf => vec![partition.leaf_description(anchor_leaf)],
            LeafEncoding::OneHot => (0..partition.n_leaves())
                .map(|l| partition.leaf_description(l))
                .collect(),
        };
        LeafEncoder {
            anchor_leaf,
            mode,
            descriptions,
        }
    }

    pub fn anchor_leaf(&self) -> usize {
        self.anchor_leaf
    }

    pub fn descriptions(&self) -> &[String] {
        &self.descriptions
    }

    pub fn encode_leaf_id(&self, leaf: usize) -> Vec<u8> {
        match self.mode {
            LeafEncoding::SameLeaf => vec![u8::from(leaf == self.anchor_leaf)],
            LeafEncoding::OneHot => {
                let mut bits = vec![0; self.descriptions.len()];
                bits[leaf] = 1;
                bits
            }
        }
    }
}

pub fn encode_leaf(
    sample: &[f64],
    anchor: &ExplainedInstance,
    partition: &TreePartition,
    mode: LeafEncoding,
    schema: &Schema,
) -> Result<BinaryEncoding> {
    schema.check_row(sample)?;
    schema.check_row(&anchor.values)?;
    let encoder = LeafEncoder::new(partition, anchor, mode);
    Ok(BinaryEncoding {
        bits: encoder.encode_leaf_id(partition.route(sample)),
        descriptions: encoder.descriptions,
    })
}

/// A fitted representation plus the anchor-relative encoder.
#[derive(Clone, Debug)]
pub enum Encoder {
    Quartile {
        discretiser: Discretiser,
        encoder: QuartileEncoder,
    },
    Tree {
        partition: TreePartition,
        encoder: LeafEncoder,
    },
}

impl Encoder {
    pub fn descriptions(&self) -> &[String] {
        match self {
            Encoder::Quartile { encoder, .. } => encoder.descriptions(),
            Encoder::Tree { encoder, .. } => encoder.descriptions(),
        }
    }

    pub fn width(&self) -> usize {
        self.descriptions().len()
    }

    pub fn encode(&self, sample: &[f64]) -> Result<Vec<u8>> {
        match self {
            Encoder::Quartile { encoder, .. } => encoder.encode(sample),
            Encoder::Tree { partition, encoder } => {
                Ok(encoder.encode_leaf_id(partition.route(sample)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_dataset, FeatureSpec};

    fn dataset_0_to_7() -> TabularDataset {
        let text = (0..8).fold(String::from("x0,x1\n"), |s, i| {
            s + &format!("{i},{}\n", if i % 2 == 0 { "a" } else { "b" })
        });
        load_dataset(text.as_bytes(), None).unwrap()
    }

    #[test]
    fn quartile_boundaries_match_interpolated_quantiles() {
        let d = fit_quartile_discretiser(&dataset_0_to_7());
        assert_eq!(
            d.features[0],
            FeatureBins::Quartile {
                boundaries: [1.75, 3.5, 5.25],
                constant: false
            }
        );
        assert_eq!(d.features[1], FeatureBins::PassThrough);
    }

    #[test]
    fn constant_feature_is_flagged() {
        let schema = Schema::new(vec![FeatureSpec::numeric("c")]).unwrap();
        let ds = TabularDataset::new(schema, vec![vec![5.0]; 4]).unwrap();
        assert_eq!(
            fit_quartile_discretiser(&ds).features[0],
            FeatureBins::Quartile {
                boundaries: [5.0, 5.0, 5.0],
                constant: true
            }
        );
    }

    #[test]
    fn bin_edges() {
        let b = [1.75, 3.5, 5.25];
        assert_eq!(bin_index(1.75, b).unwrap(), 0);
        assert_eq!(bin_index(-100.0, b).unwrap(), 0);
        assert_eq!(bin_index(100.0, b).unwrap(), 3);
        assert_eq!(bin_index(3.5, b).unwrap(), 1);
        assert_eq!(bin_index(3.6, b).unwrap(), 2);
        assert!(bin_index(f64::NAN, b).is_err());
    }

    #[test]
    fn degenerate_boundaries_collapse_lower_bins() {
        let b = [5.0, 5.0, 5.0];
        assert_eq!(bin_index(5.0, b).unwrap(), 0);
        assert_eq!(bin_index(5.1, b).unwrap(), 3);
    }

    #[test]
    fn same_bin_encoding_cases() {
        let ds = dataset_0_to_7();
        let d = fit_quartile_discretiser(&ds);
        let anchor = ExplainedInstance::new(ds.schema(), vec![2.0, 0.0]).unwrap();
        let enc = encode_same_bin(&[2.0, 0.0], &anchor, &d, ds.schema()).unwrap();
        assert_eq!(enc.bits, vec![1, 1]);
        let enc = encode_same_bin(&[3.0, 1.0], &anchor, &d, ds.schema()).unwrap();
        assert_eq!(enc.bits, vec![1, 0]);
        let enc = encode_same_bin(&[7.0, 1.0], &anchor, &d, ds.schema()).unwrap();
        assert_eq!(enc.bits, vec![0, 0]);
        assert_eq!(enc.descriptions, vec!["1.75 < x0 <= 3.5", "x1 = a"]);
        assert!(encode_same_bin(&[3.0], &anchor, &d, ds.schema()).is_err());
    }

    #[test]
    fn depth_zero_partition_has_one_leaf() {
        let ds = dataset_0_to_7();
        let targets = ProbabilityMatrix::new(vec![vec![0.5, 0.5]; 8]).unwrap();
        let p = fit_tree_partition(ds.schema(), ds.rows(), &targets, 0, 1).unwrap();
        assert_eq!(p.n_leaves(), 1);
        let anchor = ds.instance(3).unwrap();
        for row in ds.rows() {
            let e = encode_leaf(row, &anchor, &p, LeafEncoding::SameLeaf, ds.schema()).unwrap();
            assert_eq!(e.bits, vec![1]);
        }
    }

    #[test]
    fn sign_split_threshold_lies_between_classes() {
        let schema = Schema::new(vec![FeatureSpec::numeric("x")]).unwrap();
        let xs = [-0.9, -0.5, -0.1, 0.2, 0.4, 0.95];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let targets = ProbabilityMatrix::new(
            xs.iter()
                .map(|&x| {
                    if x > 0.0 {
                        vec![0.0, 1.0]
                    } else {
                        vec![1.0, 0.0]
                    }
                })
                .collect(),
        )
        .unwrap();
        let p = fit_tree_partition(&schema, &rows, &targets, 1, 1).unwrap();
        match &p.tree.nodes[0] {
            crate::tree::Node::Split {
                rule: crate::tree::SplitRule::Threshold { threshold, .. },
                ..
            } => assert!(*threshold > -0.1 && *threshold < 0.2, "{threshold}"),
            other => panic!("expected a threshold split, got {other:?}"),
        }
    }

    #[test]
    fn one_hot_sets_exactly_the_routed_leaf() {
        let ds = dataset_0_to_7();
        let targets = ProbabilityMatrix::new(
            ds.rows()
                .iter()
                .map(|r| {
                    if r[0] > 3.0 {
                        vec![0.0, 1.0]
                    } else {
                        vec![1.0, 0.0]
                    }
                })
                .collect(),
        )
        .unwrap();
        let p = fit_tree_partition(ds.schema(), ds.rows(), &targets, 2, 1).unwrap();
        assert_eq!(p.n_leaves(), 2);
        let anchor = ds.instance(0).unwrap();
        for row in ds.rows() {
            let e = encode_leaf(row, &anchor, &p, LeafEncoding::OneHot, ds.schema()).unwrap();
            assert_eq!(e.bits.iter().filter(|&&b| b == 1).count(), 1);
            assert_eq!(e.bits.len(), e.descriptions.len());
        }
        let own = encode_leaf(
            &anchor.values,
            &anchor,
            &p,
            LeafEncoding::OneHot,
            ds.schema(),
        )
        .unwrap();
        assert_eq!(own.bits[p.route(&anchor.values)], 1);
        let same = encode_leaf(
            &anchor.values,
            &anchor,
            &p,
            LeafEncoding::SameLeaf,
            ds.schema(),
        )
        .unwrap();
        assert_eq!(same.bits, vec![1]);
        assert!(
            same.descriptions[0].starts_with("leaf 0: x0 <= 3.5"),
            "{:?}",
            same.descriptions
        );
    }
}
