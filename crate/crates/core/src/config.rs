//! The explainer composition document: defaults, validation and
//! fingerprinting.
//!
//! Every field, its default, its allowed range and the condition under which
//! it applies live in [`FIELDS`]. Validation reads a JSON document (nested
//! sections or flat dotted keys), reports every violation at once and fills
//! the defaults. The validated form serialises back to a document that
//! contains only the applicable fields, which makes validation idempotent.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::canonical::{canonical_value_string, sha256_hex};
use crate::error::{Error, Result};
use crate::explain::distance::{DistanceDomain, DistanceMetric, KernelConfig};
use crate::explain::selection::{FeatureSelectionConfig, SelectionMethod};
use crate::explain::surrogate::SurrogateInput;
use crate::representation::LeafEncoding;
use crate::sampling::{CenterMode, SamplerConfig, SamplerKind};

pub const CONFIG_VERSION: u64 = 1;

#[derive(Clone, Copy, Debug)]
pub enum Rule {
    Choice(&'static [&'static str]),
    Int {
        min: u64,
        max: u64,
    },
    /// Lower bound is exclusive when `exclusive` is set.
    Float {
        min: f64,
        exclusive: bool,
    },
    /// Class name, class index, or null for the black box's choice at the
    /// anchor.
    ClassRef,
}

#[derive(Clone, Copy, Debug)]
pub struct FieldSpec {
    pub path: &'static str,
    /// The field only applies when another field holds the given value.
    pub when: Option<(&'static str, &'static str)>,
    pub rule: Rule,
    pub default: DefaultValue,
    pub doc: &'static str,
}

#[derive(Clone, Copy, Debug)]
pub enum DefaultValue {
    Text(&'static str),
    Int(u64),
    Float(f64),
    Null,
}

impl DefaultValue {
    fn to_value(self) -> Value {
        match self {
            DefaultValue::Text(s) => json!(s),
            DefaultValue::Int(i) => json!(i),
            DefaultValue::Float(f) => json!(f),
            DefaultValue::Null => Value::Null,
        }
    }
}

const TREE_DEPTH_MAX: u64 = 12;

pub const FIELDS: &[FieldSpec] = &[
    FieldSpec {
        path: "version",
        when: None,
        rule: Rule::Int { min: 1, max: 1 },
        default: DefaultValue::Int(CONFIG_VERSION),
        doc: "Document format version",
    },
    FieldSpec {
        path: "representation.kind",
        when: None,
        rule: Rule::Choice(&["quartile", "tree"]),
        default: DefaultValue::Text("quartile"),
        doc: "Interpretable representation",
    },
    FieldSpec {
        path: "representation.max_depth",
        when: Some(("representation.kind", "tree")),
        rule: Rule::Int {
            min: 0,
            max: TREE_DEPTH_MAX,
        },
        default: DefaultValue::Int(3),
        doc: "Depth limit of the partition tree",
    },
    FieldSpec {
        path: "representation.min_leaf",
        when: Some(("representation.kind", "tree")),
        rule: Rule::Int {
            min: 1,
            max: u32::MAX as u64,
        },
        default: DefaultValue::Int(10),
        doc: "Minimum samples per partition leaf",
    },
    FieldSpec {
        path: "representation.encode_mode",
        when: Some(("representation.kind", "tree")),
        rule: Rule::Choice(&["one_hot", "same_leaf"]),
        default: DefaultValue::Text("one_hot"),
        doc: "One bit per leaf, or one bit for the anchor's leaf",
    },
    FieldSpec {
        path: "sampler.kind",
        when: None,
        rule: Rule::Choice(&["gaussian", "mixup"]),
        default: DefaultValue::Text("gaussian"),
        doc: "Neighbourhood sampler",
    },
    FieldSpec {
        path: "sampler.n_samples",
        when: None,
        rule: Rule::Int {
            min: 1,
            max: 1_000_000,
        },
        default: DefaultValue::Int(1000),
        doc: "Number of sampled rows",
    },
    FieldSpec {
        path: "sampler.scale",
        when: Some(("sampler.kind", "gaussian")),
        rule: Rule::Float {
            min: 0.0,
            exclusive: true,
        },
        default: DefaultValue::Float(1.0),
        doc: "Multiplier on each feature's standard deviation",
    },
    FieldSpec {
        path: "sampler.center",
        when: Some(("sampler.kind", "gaussian")),
        rule: Rule::Choice(&["anchor", "global_mean"]),
        default: DefaultValue::Text("anchor"),
        doc: "Centre of the Gaussian",
    },
    FieldSpec {
        path: "sampler.alpha",
        when: Some(("sampler.kind", "mixup")),
        rule: Rule::Float {
            min: 0.0,
            exclusive: true,
        },
        default: DefaultValue::Float(1.0),
        doc: "Beta(alpha, alpha) concentration of the mixing weight",
    },
    FieldSpec {
        path: "kernel.width",
        when: None,
        rule: Rule::Float {
            min: 0.0,
            exclusive: true,
        },
        default: DefaultValue::Float(0.25),
        doc: "Kernel width w in exp(-d^2/w^2)",
    },
    FieldSpec {
        path: "kernel.metric",
        when: None,
        rule: Rule::Choice(&["gower_mixed"]),
        default: DefaultValue::Text("gower_mixed"),
        doc: "Distance on raw rows",
    },
    FieldSpec {
        path: "kernel.distance_domain",
        when: None,
        rule: Rule::Choice(&["original", "binary"]),
        default: DefaultValue::Text("original"),
        doc: "Measure distances on raw rows or on the binary encodings",
    },
    FieldSpec {
        path: "selection.method",
        when: None,
        rule: Rule::Choice(&["none", "highest_weight", "forward_selection"]),
        default: DefaultValue::Text("none"),
        doc: "Interpretable feature selection",
    },
    FieldSpec {
        path: "selection.k",
        when: None,
        rule: Rule::Int {
            min: 1,
            max: u32::MAX as u64,
        },
        default: DefaultValue::Int(3),
        doc: "Number of features to keep",
    },
    FieldSpec {
        path: "surrogate.kind",
        when: None,
        rule: Rule::Choice(&["linear", "tree"]),
        default: DefaultValue::Text("linear"),
        doc: "Surrogate model family",
    },
    FieldSpec {
        path: "surrogate.ridge",
        when: Some(("surrogate.kind", "linear")),
        rule: Rule::Float {
            min: 0.0,
            exclusive: false,
        },
        default: DefaultValue::Float(0.01),
        doc: "Ridge penalty on the coefficients",
    },
    FieldSpec {
        path: "surrogate.target_class",
        when: None,
        rule: Rule::ClassRef,
        default: DefaultValue::Null,
        doc: "Explained class (name or index); null picks the black box's class at the anchor",
    },
    FieldSpec {
        path: "surrogate.max_depth",
        when: Some(("surrogate.kind", "tree")),
        rule: Rule::Int {
            min: 0,
            max: TREE_DEPTH_MAX,
        },
        default: DefaultValue::Int(3),
        doc: "Depth limit of the surrogate tree",
    },
    FieldSpec {
        path: "surrogate.min_leaf",
        when: Some(("surrogate.kind", "tree")),
        rule: Rule::Int {
            min: 1,
            max: u32::MAX as u64,
        },
        default: DefaultValue::Int(5),
        doc: "Minimum samples per surrogate leaf",
    },
    FieldSpec {
        path: "surrogate.input",
        when: Some(("surrogate.kind", "tree")),
        rule: Rule::Choice(&["binary", "raw"]),
        default: DefaultValue::Text("binary"),
        doc: "Fit the tree on the binary encodings or on raw features",
    },
    FieldSpec {
        path: "evaluation.stability_k",
        when: None,
        rule: Rule::Int {
            min: 1,
            max: u32::MAX as u64,
        },
        default: DefaultValue::Int(3),
        doc: "Top-k size for the stability Jaccard score",
    },
    FieldSpec {
        path: "evaluation.stability_seeds",
        when: None,
        rule: Rule::Int { min: 2, max: 1000 },
        default: DefaultValue::Int(10),
        doc: "Number of seeds in a stability run",
    },
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassRef {
    Name(String),
    Index(usize),
}

impl ClassRef {
    pub fn resolve(&self, classes: &[String]) -> Result<usize> {
        match self {
            ClassRef::Index(i) if *i < classes.len() => Ok(*i),
            ClassRef::Index(i) => Err(Error::Config(format!(
                "surrogate.target_class {i} out of range for {} classes",
                classes.len()
            ))),
            ClassRef::Name(name) => classes.iter().position(|c| c == name).ok_or_else(|| {
                Error::Config(format!(
                    "surrogate.target_class {name:?} is not one of {classes:?}"
                ))
            }),
        }
    }

    fn to_value(&self) -> Value {
        match self {
            ClassRef::Name(s) => json!(s),
            ClassRef::Index(i) => json!(i),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RepresentationConfig {
    Quartile,
    Tree {
        max_depth: usize,
        min_leaf: usize,
        encode_mode: LeafEncoding,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SurrogateConfig {
    Linear {
        ridge: f64,
    },
    Tree {
        max_depth: usize,
        min_leaf: usize,
        input: SurrogateInput,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvaluationConfig {
    pub stability_k: usize,
    pub stability_seeds: usize,
}

/// A validated, fully defaulted composition.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplainerConfig {
    pub representation: RepresentationConfig,
    pub sampler: SamplerKind,
    pub n_samples: usize,
    pub kernel: KernelConfig,
    pub distance_domain: DistanceDomain,
    pub selection: FeatureSelectionConfig,
    pub surrogate: SurrogateConfig,
    pub target_class: Option<ClassRef>,
    pub evaluation: EvaluationConfig,
}

impl std::default::Default for ExplainerConfig {
    fn default() -> Self {
        validate(&json!({})).expect("default table is valid")
    }
}

impl ExplainerConfig {
    pub fn sampler_config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            kind: self.sampler,
            n_samples: self.n_samples,
            seed,
        }
    }

    /// Ridge penalty used by the linear surrogate and by highest-weight or
    /// forward selection.
    pub fn ridge(&self) -> f64 {
        match self.surrogate {
            SurrogateConfig::Linear { ridge } => ridge,
            SurrogateConfig::Tree { .. } => ridge_default(),
        }
    }

    /// Nested document holding only the applicable fields.
    pub fn to_document(&self) -> Value {
        let mut flat: Vec<(&str, Value)> = vec![("version", json!(CONFIG_VERSION))];
        match self.representation {
            RepresentationConfig::Quartile => flat.push(("representation.kind", json!("quartile"))),
            RepresentationConfig::Tree {
                max_depth,
                min_leaf,
                encode_mode,
            } => {
                flat.push(("representation.kind", json!("tree")));
                flat.push(("representation.max_depth", json!(max_depth)));
                flat.push(("representation.min_leaf", json!(min_leaf)));
                flat.push((
                    "representation.encode_mode",
                    serde_json::to_value(encode_mode).unwrap(),
                ));
            }
        }
        flat.push(("sampler.n_samples", json!(self.n_samples)));
        match self.sampler {
            SamplerKind::Gaussian { scale, center } => {
                flat.push(("sampler.kind", json!("gaussian")));
                flat.push(("sampler.scale", json!(scale)));
                flat.push(("sampler.center", serde_json::to_value(center).unwrap()));
            }
            SamplerKind::Mixup { alpha } => {
                flat.push(("sampler.kind", json!("mixup")));
                flat.push(("sampler.alpha", json!(alpha)));
            }
        }
        flat.push(("kernel.width", json!(self.kernel.width)));
        flat.push((
            "kernel.metric",
            serde_json::to_value(self.kernel.metric).unwrap(),
        ));
        flat.push((
            "kernel.distance_domain",
            serde_json::to_value(self.distance_domain).unwrap(),
        ));
        flat.push((
            "selection.method",
            serde_json::to_value(self.selection.method).unwrap(),
        ));
        flat.push(("selection.k", json!(self.selection.k)));
        match self.surrogate {
            SurrogateConfig::Linear { ridge } => {
                flat.push(("surrogate.kind", json!("linear")));
                flat.push(("surrogate.ridge", json!(ridge)));
            }
            SurrogateConfig::Tree {
                max_depth,
                min_leaf,
                input,
            } => {
                flat.push(("surrogate.kind", json!("tree")));
                flat.push(("surrogate.max_depth", json!(max_depth)));
                flat.push(("surrogate.min_leaf", json!(min_leaf)));
                flat.push(("surrogate.input", serde_json::to_value(input).unwrap()));
            }
        }
        flat.push((
            "surrogate.target_class",
            self.target_class
                .as_ref()
                .map_or(Value::Null, ClassRef::to_value),
        ));
        flat.push(("evaluation.stability_k", json!(self.evaluation.stability_k)));
        flat.push((
            "evaluation.stability_seeds",
            json!(self.evaluation.stability_seeds),
        ));
        nest(flat)
    }

    pub fn canonical_string(&self) -> String {
        canonical_value_string(&self.to_document())
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(self)
    }
}

fn ridge_default() -> f64 {
    match field("surrogate.ridge").default {
        DefaultValue::Float(f) => f,
        _ => unreachable!(),
    }
}

impl Serialize for ExplainerConfig {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_document().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExplainerConfig {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = Value::deserialize(deserializer)?;
        validate(&doc).map_err(serde::de::Error::custom)
    }
}

/// SHA-256 hex of the canonical document.
pub fn fingerprint(config: &ExplainerConfig) -> String {
    sha256_hex(config.canonical_string().as_bytes())
}

fn field(path: &str) -> &'static FieldSpec {
    FIELDS.iter().find(|f| f.path == path).expect("known field")
}

fn nest(flat: Vec<(&str, Value)>) -> Value {
    let mut root = Map::new();
    for (path, value) in flat {
        match path.split_once('.') {
            None => {
                root.insert(path.to_owned(), value);
            }
            Some((section, key)) => {
                root.entry(section)
                    .or_insert_with(|| Value::Object(Map::new()))
                    .as_object_mut()
                    .expect("section object")
                    .insert(key.to_owned(), value);
            }
        }
    }
    Value::Object(root)
}

fn flatten(
    prefix: &str,
    value: &Map<String, Value>,
    out: &mut BTreeMap<String, Value>,
    violations: &mut Vec<String>,
) {
    for (key, v) in value {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match v {
            Value::Object(inner) => flatten(&path, inner, out, violations),
            other => {
                if out.insert(path.clone(), other.clone()).is_some() {
                    violations.push(format!("{path} is given more than once"));
                }
            }
        }
    }
}

/// Checks one value against its field's rule and returns the normalised value.
fn check(spec: &FieldSpec, value: &Value) -> std::result::Result<Value, String> {
    let path = spec.path;
    match spec.rule {
        Rule::Choice(options) => match value.as_str() {
            Some(s) if options.contains(&s) => Ok(value.clone()),
            _ => Err(format!(
                "{path} must be one of {} (got {value})",
                options.join(", ")
            )),
        },
        Rule::Int { min, max } => {
            let int = value.as_u64().or_else(|| {
                value
                    .as_f64()
                    .filter(|f| f.fract() == 0.0 && *f >= 0.0 && *f <= u64::MAX as f64)
                    .map(|f| f as u64)
            });
            match int {
                Some(i) if i >= min && i <= max => Ok(json!(i)),
                Some(_) if min == max => Err(format!("{path} must be {min} (got {value})")),
                Some(i) if i < min => Err(format!("{path} must be >= {min} (got {value})")),
                Some(_) => Err(format!("{path} must be <= {max} (got {value})")),
                None if value.as_i64().is_some() => {
                    Err(format!("{path} must be >= {min} (got {value})"))
                }
                None => Err(format!("{path} must be an integer (got {value})")),
            }
        }
        Rule::Float { min, exclusive } => match value.as_f64() {
            Some(f) if f.is_finite() && (f > min || (!exclusive && f == min)) => Ok(json!(f)),
            Some(_) if exclusive => Err(format!("{path} must be > {min} (got {value})")),
            Some(_) => Err(format!("{path} must be >= {min} (got {value})")),
            None => Err(format!("{path} must be a number (got {value})")),
        },
        Rule::ClassRef => match value {
            Value::Null => Ok(Value::Null),
            Value::String(s) if !s.is_empty() => Ok(value.clone()),
            v if v.as_u64().is_some() => Ok(value.clone()),
            _ => Err(format!(
                "{path} must be a class name, a class index or null (got {value})"
            )),
        },
    }
}

/// Validates a document and fills the defaults; returns every violation at
/// once as [`Error::Validation`].
///
/// Fields that do not apply to the chosen kinds (for example
/// `sampler.alpha` with a Gaussian sampler) are accepted and dropped.
pub fn validate(document: &Value) -> Result<ExplainerConfig> {
    let mut violations = Vec::new();
    let Some(object) = document.as_object() else {
        return Err(Error::Validation(vec![format!(
            "config must be an object (got {document})"
        )]));
    };
    let mut given = BTreeMap::new();
    flatten("", object, &mut given, &mut violations);
    for path in given.keys() {
        if !FIELDS.iter().any(|f| f.path == path) {
            violations.push(format!("unknown field {path}"));
        }
    }

    let mut resolved: BTreeMap<&'static str, Value> = BTreeMap::new();
    for spec in FIELDS {
        if let Some((dep, expected)) = spec.when {
            if resolved.get(dep).and_then(Value::as_str) != Some(expected) {
                continue;
            }
        }
        let raw = given
            .get(spec.path)
            .cloned()
            .unwrap_or_else(|| spec.default.to_value());
        match check(spec, &raw) {
            Ok(v) => {
                resolved.insert(spec.path, v);
            }
            Err(message) => {
                violations.push(message);
                resolved.insert(spec.path, spec.default.to_value());
            }
        }
    }

    let text = |p: &str| resolved[p].as_str().unwrap_or_default().to_owned();
    let int = |p: &str| resolved[p].as_u64().unwrap_or_default() as usize;
    let float = |p: &str| resolved[p].as_f64().unwrap_or_default();

    let representation = match text("representation.kind").as_str() {
        "tree" => RepresentationConfig::Tree {
            max_depth: int("representation.max_depth"),
            min_leaf: int("representation.min_leaf"),
            encode_mode: from_text(&text("representation.encode_mode")),
        },
        _ => RepresentationConfig::Quartile,
    };
    let sampler = match text("sampler.kind").as_str() {
        "mixup" => SamplerKind::Mixup {
            alpha: float("sampler.alpha"),
        },
        _ => SamplerKind::Gaussian {
            scale: float("sampler.scale"),
            center: from_text::<CenterMode>(&text("sampler.center")),
        },
    };
    let selection = FeatureSelectionConfig {
        method: from_text::<SelectionMethod>(&text("selection.method")),
        k: int("selection.k"),
    };
    let surrogate = match text("surrogate.kind").as_str() {
        "tree" => SurrogateConfig::Tree {
            max_depth: int("surrogate.max_depth"),
            min_leaf: int("surrogate.min_leaf"),
            input: from_text(&text("surrogate.input")),
        },
        _ => SurrogateConfig::Linear {
            ridge: float("surrogate.ridge"),
        },
    };
    let target_class = match &resolved["surrogate.target_class"] {
        Value::String(s) => Some(ClassRef::Name(s.clone())),
        v => v.as_u64().map(|i| ClassRef::Index(i as usize)),
    };

    if let RepresentationConfig::Tree {
        max_depth,
        encode_mode: LeafEncoding::OneHot,
        ..
    } = representation
    {
        let max_leaves = 1usize << max_depth;
        if selection.method == SelectionMethod::HighestWeight && selection.k > max_leaves {
            violations.push(format!(
                "selection.k must be <= {max_leaves} (the most leaves a depth-{max_depth} one_hot tree representation can have) with highest_weight selection (got {})",
                selection.k
            ));
        }
    }

    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(ExplainerConfig {
        representation,
        sampler,
        n_samples: int("sampler.n_samples"),
        kernel: KernelConfig {
            width: float("kernel.width"),
            metric: from_text::<DistanceMetric>(&text("kernel.metric")),
        },
        distance_domain: from_text(&text("kernel.distance_domain")),
        selection,
        surrogate,
        target_class,
        evaluation: EvaluationConfig {
            stability_k: int("evaluation.stability_k"),
            stability_seeds: int("evaluation.stability_seeds"),
        },
    })
}

fn from_text<T: serde::de::DeserializeOwned>(text: &str) -> T {
    serde_json::from_value(Value::String(text.to_owned()))
        .expect("choice lists match the enum names")
}

/// The default table in machine-readable form: the defaulted document plus
/// one entry per field with its constraint and applicability.
pub fn defaults_document() -> Value {
    let fields: Vec<Value> = FIELDS
        .iter()
        .map(|f| {
            let mut entry = Map::new();
            entry.insert("path".into(), json!(f.path));
            entry.insert("default".into(), f.default.to_value());
            entry.insert("doc".into(), json!(f.doc));
            if let Some((dep, value)) = f.when {
                entry.insert("when".into(), json!({ "field": dep, "equals": value }));
            }
            match f.rule {
                Rule::Choice(options) => {
                    entry.insert("type".into(), json!("choice"));
                    entry.insert("choices".into(), json!(options));
                }
                Rule::Int { min, max } => {
                    entry.insert("type".into(), json!("integer"));
                    entry.insert("min".into(), json!(min));
                    entry.insert("max".into(), json!(max));
                }
                Rule::Float { min, exclusive } => {
                    entry.insert("type".into(), json!("number"));
                    entry.insert("min".into(), json!(min));
                    entry.insert("exclusive_min".into(), json!(exclusive));
                }
                Rule::ClassRef => {
                    entry.insert("type".into(), json!("class"));
                }
            }
            Value::Object(entry)
        })
        .collect();
    json!({
        "config": ExplainerConfig::default().to_document(),
        "fields": fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn violations(doc: Value) -> Vec<String> {
        match validate(&doc) {
            Err(Error::Validation(v)) => v,
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn minimal_document_is_fully_defaulted() {
        let c = validate(&json!({"sampler": {"kind": "gaussian"}})).unwrap();
        assert_eq!(c.representation, RepresentationConfig::Quartile);
        assert_eq!(c.kernel.width, 0.25);
        assert_eq!(c.surrogate, SurrogateConfig::Linear { ridge: 0.01 });
        assert_eq!(
            c.sampler,
            SamplerKind::Gaussian {
                scale: 1.0,
                center: CenterMode::Anchor
            }
        );
        assert_eq!(c.n_samples, 1000);
        assert_eq!(c.selection.method, SelectionMethod::None);
        assert_eq!(c.target_class, None);
        assert_eq!(c, ExplainerConfig::default());
    }

    #[test]
    fn negative_width_names_the_field() {
        let v = violations(json!({"kernel": {"width": -1}}));
        assert_eq!(v.len(), 1);
        assert!(v[0].starts_with("kernel.width must be > 0"), "{v:?}");
    }

    #[test]
    fn zero_alpha_is_rejected() {
        let v = violations(json!({"sampler": {"kind": "mixup", "alpha": 0}}));
        assert!(v[0].contains("sampler.alpha must be > 0"), "{v:?}");
    }

    #[test]
    fn all_violations_reported_together() {
        let v = violations(json!({
            "kernel": {"width": 0},
            "sampler": {"n_samples": 0, "kind": "uniform"},
            "surrogate": {"kind": "linear", "ridge": -0.5},
            "bogus": 1
        }));
        assert_eq!(v.len(), 5, "{v:?}");
        assert!(v.iter().any(|m| m == "unknown field bogus"));
    }

    #[test]
    fn dotted_and_nested_keys_are_equivalent() {
        let a = validate(&json!({"kernel.width": 0.5, "surrogate.kind": "tree"})).unwrap();
        let b =
            validate(&json!({"surrogate": {"kind": "tree"}, "kernel": {"width": 0.5}})).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn key_order_does_not_change_fingerprint() {
        let a: Value = serde_json::from_str(
            r#"{"kernel":{"width":0.3,"metric":"gower_mixed"},"sampler":{"kind":"mixup"}}"#,
        )
        .unwrap();
        let b: Value = serde_json::from_str(
            r#"{"sampler":{"kind":"mixup"},"kernel":{"metric":"gower_mixed","width":0.3}}"#,
        )
        .unwrap();
        assert_eq!(
            validate(&a).unwrap().fingerprint(),
            validate(&b).unwrap().fingerprint()
        );
    }

    #[test]
    fn changed_width_changes_fingerprint() {
        let a = validate(&json!({"kernel": {"width": 0.25}})).unwrap();
        let b = validate(&json!({"kernel": {"width": 0.26}})).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    #[test]
    fn integer_and_float_spellings_agree() {
        let a = validate(&json!({"sampler": {"scale": 1}})).unwrap();
        let b = validate(&json!({"sampler": {"scale": 1.0}})).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn validation_is_idempotent() {
        for doc in [
            json!({}),
            json!({"representation": {"kind": "tree", "max_depth": 2, "encode_mode": "same_leaf"}, "surrogate": {"kind": "tree", "input": "raw"}}),
            json!({"sampler": {"kind": "mixup", "alpha": 0.4}, "surrogate": {"target_class": "yes"}}),
            json!({"selection": {"method": "forward_selection", "k": 2}, "surrogate": {"target_class": 1}}),
        ] {
            let once = validate(&doc).unwrap();
            let twice = validate(&once.to_document()).unwrap();
            assert_eq!(once, twice);
            assert_eq!(once.canonical_string(), twice.canonical_string());
        }
    }

    #[test]
    fn inapplicable_fields_are_dropped() {
        let c = validate(&json!({"sampler": {"kind": "gaussian", "alpha": 5}})).unwrap();
        assert_eq!(c, ExplainerConfig::default());
        // Still type-checked only when applicable.
        assert!(validate(&json!({"sampler": {"kind": "gaussian", "alpha": -5}})).is_ok());
    }

    #[test]
    fn one_hot_highest_weight_k_bounded_by_leaves() {
        let v = violations(json!({
            "representation": {"kind": "tree", "max_depth": 1, "encode_mode": "one_hot"},
            "selection": {"method": "highest_weight", "k": 3}
        }));
        assert!(v[0].contains("selection.k"), "{v:?}");
        assert!(validate(&json!({
            "representation": {"kind": "tree", "max_depth": 2},
            "selection": {"method": "highest_weight", "k": 3}
        }))
        .is_ok());
    }

    #[test]
    fn wrong_version_is_rejected() {
        let v = violations(json!({"version": 2}));
        assert_eq!(v, vec!["version must be 1 (got 2)".to_owned()]);
    }

    #[test]
    fn malformed_values_do_not_panic() {
        for bad in [
            json!(null),
            json!([1]),
            json!({"kernel": {"width": "wide"}}),
            json!({"selection": {"k": 1.5}}),
            json!({"surrogate": {"target_class": -1}}),
        ] {
            assert!(validate(&bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn class_refs_resolve_by_name_or_index() {
        let classes = vec!["no".to_owned(), "yes".to_owned()];
        assert_eq!(ClassRef::Name("yes".into()).resolve(&classes).unwrap(), 1);
        assert_eq!(ClassRef::Index(0).resolve(&classes).unwrap(), 0);
        assert!(ClassRef::Index(2).resolve(&classes).is_err());
        assert!(ClassRef::Name("maybe".into()).resolve(&classes).is_err());
    }

    #[test]
    fn defaults_document_lists_every_field() {
        let d = defaults_document();
        assert_eq!(d["fields"].as_array().unwrap().len(), FIELDS.len());
        assert_eq!(d["config"]["kernel"]["width"], json!(0.25));
    }
}
