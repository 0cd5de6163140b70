//! Typed tabular data: schema inference, CSV ingestion and per-feature
//! summary statistics.
//!
//! Rows are stored as `Vec<f64>`. Numeric cells hold their value; categorical
//! cells hold the index of the category in the feature's category list.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical;
use crate::error::{Error, Result};

pub type Row = Vec<f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical {
        #[serde(default)]
        categories: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Numeric,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Categorical {
                categories: categories.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, FeatureKind::Numeric)
    }

    pub fn categories(&self) -> Option<&[String]> {
        match &self.kind {
            FeatureKind::Numeric => None,
            FeatureKind::Categorical { categories } => Some(categories),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema(Vec<FeatureSpec>);

impl Schema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self> {
        let schema = Schema(features);
        schema.check()?;
        Ok(schema)
    }

    fn check(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::input("schema has no features"));
        }
        let mut seen = HashMap::new();
        for (i, f) in self.0.iter().enumerate() {
            if let Some(prev) = seen.insert(f.name.as_str(), i) {
                return Err(Error::input(format!(
                    "duplicate feature name {:?} (columns {prev} and {i})",
                    f.name
                )));
            }
            if let Some(cats) = f.categories() {
                if cats.is_empty() {
                    return Err(Error::input(format!(
                        "categorical feature {:?} has no categories",
                        f.name
                    )));
                }
                let mut distinct = std::collections::HashSet::new();
                for c in cats {
                    if !distinct.insert(c) {
                        return Err(Error::input(format!(
                            "categorical feature {:?} lists category {c:?} twice",
                            f.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.0
    }

    pub fn feature(&self, index: usize) -> &FeatureSpec {
        &self.0[index]
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|f| f.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|f| f.name == name)
    }

    /// Resolves a feature given either its name or its column index.
    pub fn resolve(&self, name_or_index: &str) -> Result<usize> {
        if let Some(i) = self.index_of(name_or_index) {
            return Ok(i);
        }
        match name_or_index.parse::<usize>() {
            Ok(i) if i < self.len() => Ok(i),
            _ => Err(Error::input(format!("unknown feature {name_or_index:?}"))),
        }
    }

    /// Checks that a row has one valid cell per feature.
    pub fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.len() {
            return Err(Error::input(format!(
                "row has {} cells, schema has {} features",
                row.len(),
                self.len()
            )));
        }
        for (j, (&v, f)) in row.iter().zip(&self.0).enumerate() {
            match f.categories() {
                None if !v.is_finite() => {
                    return Err(Error::input(format!(
                        "feature {j} ({}) is not a finite number",
                        f.name
                    )))
                }
                Some(cats) if !(v >= 0.0 && v.fract() == 0.0 && (v as usize) < cats.len()) => {
                    return Err(Error::input(format!(
                        "feature {j} ({}) holds {v}, not a category id",
                        f.name
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn cell_to_json(&self, feature: usize, value: f64) -> Value {
        match self.0[feature].categories() {
            None => Value::from(value),
            Some(cats) => Value::String(cats[value as usize].clone()),
        }
    }

    pub fn row_to_json(&self, row: &[f64]) -> Vec<Value> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| self.cell_to_json(j, v))
            .collect()
    }

    pub fn cell_from_json(&self, feature: usize, value: &Value) -> Result<f64> {
        let spec = &self.0[feature];
        match (spec.categories(), value) {
            (None, Value::Number(n)) => n
                .as_f64()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::input(format!("{}: not a finite number", spec.name))),
            (None, Value::String(s)) => self.parse_cell(feature, s),
            (Some(_), Value::String(s)) => self.parse_cell(feature, s),
            (Some(cats), Value::Number(n)) => {
                // Numeric category labels such as `1` are accepted by text.
                self.parse_cell(feature, &n.to_string())
                    .map_err(|_| Error::input(format!("{}: {n} is not one of {cats:?}", spec.name)))
            }
            (_, other) => Err(Error::input(format!(
                "{}: unsupported cell {other}",
                spec.name
            ))),
        }
    }

    pub fn row_from_json(&self, cells: &[Value]) -> Result<Row> {
        if cells.len() != self.len() {
            return Err(Error::input(format!(
                "row has {} cells, schema has {} features",
                cells.len(),
                self.len()
            )));
        }
        cells
            .iter()
            .enumerate()
            .map(|(j, v)| self.cell_from_json(j, v))
            .collect()
    }

    /// Parses a textual cell for the given feature.
    pub fn parse_cell(&self, feature: usize, text: &str) -> Result<f64> {
        let spec = &self.0[feature];
        let text = text.trim();
        match spec.categories() {
            None => parse_finite(text).ok_or_else(|| {
                Error::Type(format!(
                    "feature {:?}: {text:?} is not a finite number",
                    spec.name
                ))
            }),
            Some(cats) => cats
                .iter()
                .position(|c| c == text)
                .map(|i| i as f64)
                .ok_or_else(|| {
                    Error::Type(format!(
                        "feature {:?}: {text:?} is not a known category",
                        spec.name
                    ))
                }),
        }
    }

    /// Parses one comma-separated line of cells, e.g. `1.5,red,3`.
    pub fn parse_inline_row(&self, line: &str) -> Result<Row> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(line.as_bytes());
        let record = reader
            .records()
            .next()
            .ok_or_else(|| Error::input("empty instance"))?
            .map_err(|e| Error::input(format!("instance: {e}")))?;
        if record.len() != self.len() {
            return Err(Error::input(format!(
                "instance has {} cells, schema has {} features",
                record.len(),
                self.len()
            )));
        }
        record
            .iter()
            .enumerate()
            .map(|(j, cell)| self.parse_cell(j, cell))
            .collect()
    }

    pub fn format_cell(&self, feature: usize, value: f64) -> String {
        match self.0[feature].categories() {
            None => format!("{value}"),
            Some(cats) => cats[value as usize].clone(),
        }
    }
}

fn parse_finite(text: &str) -> Option<f64> {
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

impl NumericStats {
    pub fn from_values(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "statistics of an empty column");
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        NumericStats {
            mean,
            std: var.sqrt(),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            q25: quantile_sorted(&sorted, 0.25),
            q50: quantile_sorted(&sorted, 0.50),
            q75: quantile_sorted(&sorted, 0.75),
        }
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

/// Quantile of ascending `sorted` values by linear interpolation at rank
/// `(n - 1) * p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty slice");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let (a, b) = (sorted[lo], sorted[hi]);
    if lo == hi || a == b {
        return a;
    }
    (a + (h - lo as f64) * (b - a)).clamp(a, b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureStats {
    Numeric(NumericStats),
    Categorical { frequencies: Vec<f64> },
}

impl FeatureStats {
    pub fn numeric(&self) -> Option<&NumericStats> {
        match self {
            FeatureStats::Numeric(s) => Some(s),
            FeatureStats::Categorical { .. } => None,
        }
    }

    pub fn frequencies(&self) -> Option<&[f64]> {
        match self {
            FeatureStats::Numeric(_) => None,
            FeatureStats::Categorical { frequencies } => Some(frequencies),
        }
    }
}

/// Immutable typed dataset with precomputed per-feature statistics.
#[derive(Clone, Debug)]
pub struct TabularDataset {
    schema: Schema,
    rows: Vec<Row>,
    stats: Vec<FeatureStats>,
    digest: String,
}

impl TabularDataset {
    /// Builds a dataset from already-typed rows. The digest covers the
    /// canonical JSON of schema and rows.
    pub fn new(schema: Schema, rows: Vec<Row>) -> Result<Self> {
        let digest = canonical::digest(&(&schema, &rows))?;
        Self::with_digest(schema, rows, digest)
    }

    fn with_digest(schema: Schema, rows: Vec<Row>, digest: String) -> Result<Self> {
        schema.check()?;
        if rows.is_empty() {
            return Err(Error::input("dataset has no rows"));
        }
        for (i, row) in rows.iter().enumerate() {
            schema
                .check_row(row)
                .map_err(|e| Error::input(format!("row {}: {e}", i + 1)))?;
        }
        let stats = compute_stats(&schema, &rows);
        Ok(TabularDataset {
            schema,
            rows,
            stats,
            digest,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.rows[index]
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn stats(&self) -> &[FeatureStats] {
        &self.stats
    }

    /// SHA-256 of the source bytes (CSV) or of the canonical rows.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[feature]).collect()
    }

    pub fn instance(&self, index: usize) -> Result<ExplainedInstance> {
        let row = self.rows.get(index).ok_or_else(|| {
            Error::input(format!(
                "row index {index} out of range (dataset has {} rows)",
                self.rows.len()
            ))
        })?;
        Ok(ExplainedInstance {
            values: row.clone(),
            row_ref: Some(index),
        })
    }
}

fn compute_stats(schema: &Schema, rows: &[Row]) -> Vec<FeatureStats> {
    schema
        .features()
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            match f.categories() {
                None => FeatureStats::Numeric(NumericStats::from_values(&column)),
                Some(cats) => {
                    let mut counts = vec![0usize; cats.len()];
                    for v in column {
                        counts[v as usize] += 1;
                    }
                    let n = rows.len() as f64;
                    FeatureStats::Categorical {
                        frequencies: counts.into_iter().map(|c| c as f64 / n).collect(),
                    }
                }
            }
        })
        .collect()
}

/// The data point whose prediction is being explained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainedInstance {
    pub values: Row,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_ref: Option<usize>,
}

impl ExplainedInstance {
    pub fn new(schema: &Schema, values: Row) -> Result<Self> {
        schema.check_row(&values)?;
        Ok(ExplainedInstance {
            values,
            row_ref: None,
        })
    }
}

/// Reads a UTF-8 CSV document with a header row.
///
/// Without an override, a column is numeric iff every cell parses as a finite
/// number; otherwise it is categorical with categories in first-appearance
/// order. With an override, columns are matched by name and the override's
/// feature order is used; categorical overrides with an empty category list
/// have their categories inferred.
pub fn load_dataset<R: Read>(
    mut source: R,
    schema_override: Option<&Schema>,
) -> Result<TabularDataset> {
    let mut bytes = Vec::new();
    source
        .read_to_end(&mut bytes)
        .map_err(|e| Error::input(format!("reading CSV: {e}")))?;
    let digest = canonical::sha256_hex(&bytes);

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            message: format!("header: {e}"),
        })?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Parse {
            row: 0,
            message: "missing header row".into(),
        });
    }

    let mut cells: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row: row_no,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row: row_no,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        if let Some(j) = record.iter().position(str::is_empty) {
            return Err(Error::Parse {
                row: row_no,
                message: format!("missing value in column {:?}", header[j]),
            });
        }
        cells.push(record.iter().map(str::to_owned).collect());
    }
    if cells.is_empty() {
        return Err(Error::input("dataset has no rows"));
    }

    // Column order in the source for each schema feature.
    let (features, source_columns) = match schema_override {
        None => {
            let features = header
                .iter()
                .enumerate()
                .map(|(j, name)| infer_feature(name, cells.iter().map(|r| r[j].as_str())))
                .collect();
            (features, (0..header.len()).collect::<Vec<_>>())
        }
        Some(schema) => {
            let mut header_sorted = header.clone();
            header_sorted.sort();
            let mut names = schema.names();
            names.sort();
            if header_sorted != names {
                return Err(Error::input(format!(
                    "schema override names {:?} do not match CSV header {:?}",
                    schema.names(),
                    header
                )));
            }
            let mut features = Vec::with_capacity(schema.len());
            let mut columns = Vec::with_capacity(schema.len());
            for spec in schema.features() {
                let j = header
                    .iter()
                    .position(|h| *h == spec.name)
                    .expect("checked");
                let spec = match &spec.kind {
                    FeatureKind::Categorical { categories } if categories.is_empty() => {
                        infer_categorical(&spec.name, cells.iter().map(|r| r[j].as_str()))
                    }
                    _ => spec.clone(),
                };
                features.push(spec);
                columns.push(j);
            }
            (features, columns)
        }
    };
    let schema = Schema::new(features)?;

    let mut rows = Vec::with_capacity(cells.len());
    for (i, record) in cells.iter().enumerate() {
        let row = source_columns
            .iter()
            .enumerate()
            .map(|(j, &src)| {
                schema.parse_cell(j, &record[src]).map_err(|e| match e {
                    Error::Type(message) => Error::Type(format!("row {}: {message}", i + 1)),
                    other => other,
                })
            })
            .collect::<Result<Row>>()?;
        rows.push(row);
    }
    TabularDataset::with_digest(schema, rows, digest)
}

fn infer_feature<'a>(name: &str, cells: impl Iterator<Item = &'a str> + Clone) -> FeatureSpec {
    if cells.clone().all(|c| parse_finite(c).is_some()) {
        FeatureSpec::numeric(name)
    } else {
        infer_categorical(name, cells)
    }
}

fn infer_categorical<'a>(name: &str, cells: impl Iterator<Item = &'a str>) -> FeatureSpec {
    let mut categories: Vec<String> = Vec::new();
    for c in cells {
        if !categories.iter().any(|k| k == c) {
            categories.push(c.to_owned());
        }
    }
    FeatureSpec::categorical(name, categories)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub name: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub digest: String,
    pub row_count: usize,
    pub features: Vec<FeatureSummary>,
}

pub fn summarize(dataset: &TabularDataset) -> DatasetSummary {
    let features = dataset
        .schema()
        .features()
        .iter()
        .zip(dataset.stats())
        .map(|(spec, stats)| match (spec.categories(), stats) {
            (Some(cats), FeatureStats::Categorical { frequencies }) => FeatureSummary {
                name: spec.name.clone(),
                kind: "categorical".into(),
                numeric: None,
                frequencies: Some(
                    cats.iter()
                        .cloned()
                        .zip(frequencies.iter().copied())
                        .collect(),
                ),
                categories: Some(cats.to_vec()),
            },
            (_, FeatureStats::Numeric(s)) => FeatureSummary {
                name: spec.name.clone(),
                kind: "numeric".into(),
                numeric: Some(s.clone()),
                frequencies: None,
                categories: None,
            },
            _ => unreachable!("stats kind follows schema kind"),
        })
        .collect();
    DatasetSummary {
        digest: dataset.digest().to_owned(),
        row_count: dataset.n_rows(),
        features,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<TabularDataset> {
        load_dataset(text.as_bytes(), None)
    }

    #[test]
    fn infers_mixed_schema() {
        let ds = load("a,b,c\n1,x,2.5\n2,y,3.5\n").unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(
            ds.schema().features(),
            &[
                FeatureSpec::numeric("a"),
                FeatureSpec::categorical("b", ["x", "y"]),
                FeatureSpec::numeric("c"),
            ]
        );
        assert_eq!(ds.row(1), &[2.0, 1.0, 3.5]);
    }

    #[test]
    fn one_unparseable_cell_makes_column_categorical() {
        let ds = load("v\n1\n2\nthree\n").unwrap();
        assert_eq!(
            ds.schema().feature(0).categories().unwrap(),
            &["1", "2", "three"]
        );
    }

    #[test]
    fn non_finite_numbers_are_not_numeric() {
        let ds = load("v\n1\ninf\n").unwrap();
        assert!(!ds.schema().feature(0).is_numeric());
    }

    #[test]
    fn quartiles_of_zero_to_seven() {
        let text = (0..8).fold(String::from("v\n"), |s, i| s + &format!("{i}\n"));
        let ds = load(&text).unwrap();
        let s = ds.stats()[0].numeric().unwrap();
        assert_eq!((s.q25, s.q50, s.q75), (1.75, 3.5, 5.25));
    }

    #[test]
    fn ragged_row_reports_row_number() {
        let err = load("a,b\n1,2\n3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err:?}");
    }

    #[test]
    fn missing_value_is_rejected() {
        let err = load("a,b\n1,2\n3,\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err:?}");
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(load("a,b\n").is_err());
    }

    #[test]
    fn quoted_fields_follow_rfc4180() {
        let ds = load("name,v\n\"a, b\",1\n\"say \"\"hi\"\"\",2\n").unwrap();
        assert_eq!(
            ds.schema().feature(0).categories().unwrap(),
            &["a, b", "say \"hi\""]
        );
    }

    #[test]
    fn override_forces_numeric_and_reports_type_error() {
        let schema = Schema::new(vec![FeatureSpec::numeric("a")]).unwrap();
        let err = load_dataset("a\n1\nx\n".as_bytes(), Some(&schema)).unwrap_err();
        assert!(matches!(err, Error::Type(_)), "{err:?}");
    }

    #[test]
    fn override_reorders_and_fixes_categories() {
        let schema = Schema::new(vec![
            FeatureSpec::categorical("b", ["y", "x"]),
            FeatureSpec::categorical("a", Vec::<String>::new()),
        ]);
        // An empty category list is only valid inside an override document.
        assert!(schema.is_err());
        let doc = r#"[{"name":"b","kind":"categorical","categories":["y","x"]},
                      {"name":"a","kind":"categorical"}]"#;
        let schema: Schema = serde_json::from_str(doc).unwrap();
        let ds = load_dataset("a,b\n1,x\n2,y\n".as_bytes(), Some(&schema)).unwrap();
        assert_eq!(ds.schema().names(), vec!["b", "a"]);
        assert_eq!(ds.row(0), &[1.0, 0.0]);
        assert_eq!(ds.schema().feature(1).categories().unwrap(), &["1", "2"]);
    }

    #[test]
    fn override_name_mismatch_is_rejected() {
        let schema = Schema::new(vec![FeatureSpec::numeric("z")]).unwrap();
        assert!(load_dataset("a\n1\n".as_bytes(), Some(&schema)).is_err());
    }

    #[test]
    fn summary_of_two_rows() {
        let ds = load("a,b,c\n1,x,2.5\n2,y,3.5\n").unwrap();
        let s = summarize(&ds);
        assert_eq!(s.row_count, 2);
        assert_eq!(s.features[0].numeric.as_ref().unwrap().mean, 1.5);
        assert_eq!(s.features[2].numeric.as_ref().unwrap().mean, 3.0);
    }

    #[test]
    fn constant_column_statistics() {
        let ds = load("v\n5\n5\n5\n").unwrap();
        let s = ds.stats()[0].numeric().unwrap();
        assert_eq!(s.std, 0.0);
        assert_eq!((s.q25, s.q50, s.q75), (5.0, 5.0, 5.0));
    }

    #[test]
    fn categorical_frequencies() {
        let ds = load("c\nx\nx\ny\ny\n").unwrap();
        let s = summarize(&ds);
        let freq = s.features[0].frequencies.as_ref().unwrap();
        assert_eq!(freq["x"], 0.5);
        assert_eq!(freq["y"], 0.5);
    }

    #[test]
    fn summary_is_byte_identical_for_identical_bytes() {
        let text = "a,b\n1.25,u\n-3,v\n7,u\n";
        let one = canonical::to_canonical_string(&summarize(&load(text).unwrap())).unwrap();
        let two = canonical::to_canonical_string(&summarize(&load(text).unwrap())).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn inline_instance_parsing() {
        let ds = load("a,b\n1,x\n2,y\n").unwrap();
        assert_eq!(
            ds.schema().parse_inline_row("3.5, y").unwrap(),
            vec![3.5, 1.0]
        );
        assert!(ds.schema().parse_inline_row("3.5,z").is_err());
        assert!(ds.schema().parse_inline_row("3.5").is_err());
    }
}
