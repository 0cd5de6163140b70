//! Turning flags and request fields into core values.

use std::fs;
use std::path::Path;

use serde_json::Value;
use surrogate_core::blackbox::{ModelHandle, ModelSpec};
use surrogate_core::config::{validate, ClassRef, ExplainerConfig};
use surrogate_core::data::{load_dataset, ExplainedInstance, Schema, TabularDataset};
use surrogate_core::Error;

use crate::Failure;

pub fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

/// A JSON or TOML document. The extension decides; anything else is tried
/// as JSON first.
pub fn read_document(path: &Path) -> Result<Value, Failure> {
    let text = read_text(path)?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default();
    let parsed = match ext {
        "toml" => parse_toml(&text),
        "json" => serde_json::from_str(&text).map_err(|e| e.to_string()),
        _ => serde_json::from_str(&text).or_else(|_| parse_toml(&text)),
    };
    parsed.map_err(|e| Failure::Core(Error::Config(format!("{}: {e}", path.display()))))
}

fn parse_toml(text: &str) -> Result<Value, String> {
    let doc: toml::Value = toml::from_str(text).map_err(|e| e.to_string())?;
    serde_json::to_value(doc).map_err(|e| e.to_string())
}

pub fn load_config(path: Option<&Path>) -> Result<ExplainerConfig, Failure> {
    let doc = match path {
        Some(p) => read_document(p)?,
        None => Value::Object(Default::default()),
    };
    Ok(validate(&doc)?)
}

/// A config document from a request body; absent means all defaults.
pub fn config_from_value(doc: &Value) -> Result<ExplainerConfig, Failure> {
    match doc {
        Value::Null => Ok(validate(&Value::Object(Default::default()))?),
        other => Ok(validate(other)?),
    }
}

pub fn load_data(path: &Path, schema: Option<&Path>) -> Result<TabularDataset, Failure> {
    let schema = match schema {
        Some(p) => {
            let doc = read_document(p)?;
            // Either a bare feature list or {"features": [...]}.
            let list = doc.get("features").cloned().unwrap_or(doc);
            let schema: Schema = serde_json::from_value(list)
                .map_err(|e| Failure::Core(Error::Config(format!("{}: {e}", p.display()))))?;
            Some(schema)
        }
        None => None,
    };
    let file = fs::File::open(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    Ok(load_dataset(file, schema.as_ref())?)
}

fn split_classes(classes: Option<&str>) -> Vec<String> {
    classes
        .map(|c| {
            c.split(',')
                .map(|s| s.trim().to_owned())
                .filter(|s| !s.is_empty())
                .collect()
        })
        .unwrap_or_default()
}

/// `--model` forms: a built-in spec file (optionally prefixed `builtin:`),
/// inline spec JSON, `cmd:<command line>` or an `http://` URL. External
/// models need `--classes`.
pub fn open_model(
    arg: &str,
    classes: Option<&str>,
    schema: &Schema,
) -> Result<ModelHandle, Failure> {
    let external = arg.starts_with("cmd:") || arg.starts_with("http:") || arg.starts_with("https:");
    if external {
        let classes = split_classes(classes);
        if classes.is_empty() {
            return Err(Failure::Usage(
                "--classes is required with an external model".into(),
            ));
        }
        return Ok(ModelHandle::open_external(arg, classes, schema)?);
    }
    let spec = load_model_spec(arg)?;
    if let Some(given) = classes {
        if split_classes(Some(given)) != spec.classes() {
            return Err(Failure::Usage(format!(
                "--classes {given:?} disagrees with the model's classes {:?}",
                spec.classes()
            )));
        }
    }
    Ok(ModelHandle::from_spec(&spec, schema)?)
}

pub fn load_model_spec(arg: &str) -> Result<ModelSpec, Failure> {
    let source = arg.strip_prefix("builtin:").unwrap_or(arg);
    let text = if source.trim_start().starts_with('{') {
        source.to_owned()
    } else {
        read_text(Path::new(source))?
    };
    serde_json::from_str(&text)
        .map_err(|e| Failure::Core(Error::Config(format!("model spec: {e}"))))
}

/// A row index, or the instance's cells as one CSV line.
pub fn parse_instance(arg: &str, dataset: &TabularDataset) -> Result<ExplainedInstance, Failure> {
    let trimmed = arg.trim();
    if let Ok(index) = trimmed.parse::<usize>() {
        return Ok(dataset.instance(index)?);
    }
    let row = dataset.schema().parse_inline_row(trimmed)?;
    Ok(ExplainedInstance::new(dataset.schema(), row)?)
}

/// Request form of an instance: a row index, an array of cells, a CSV line,
/// or `{"row": i}` / `{"values": [...]}`.
pub fn instance_from_json(
    value: &Value,
    dataset: &TabularDataset,
) -> Result<ExplainedInstance, Failure> {
    match value {
        Value::Number(n) => {
            let index = n.as_u64().ok_or_else(|| {
                Failure::Usage(format!(
                    "instance index must be a non-negative integer (got {n})"
                ))
            })?;
            Ok(dataset.instance(index as usize)?)
        }
        Value::Array(cells) => {
            let row = dataset.schema().row_from_json(cells)?;
            Ok(ExplainedInstance::new(dataset.schema(), row)?)
        }
        Value::String(line) => parse_instance(line, dataset),
        Value::Object(map) => match (map.get("row"), map.get("values")) {
            (Some(row), None) => instance_from_json(row, dataset),
            (None, Some(values @ Value::Array(_))) => instance_from_json(values, dataset),
            _ => Err(Failure::Usage(
                "instance object needs exactly one of \"row\" or \"values\"".into(),
            )),
        },
        Value::Null => Err(Failure::Usage("instance is required".into())),
        other => Err(Failure::Usage(format!(
            "cannot read an instance from {other}"
        ))),
    }
}

/// `--seeds`: a count `n` (seeds `base..base+n`) or an explicit
/// comma-separated list.
pub fn parse_seeds(arg: &str, base: u64) -> Result<Vec<u64>, Failure> {
    let arg = arg.trim().trim_start_matches('[').trim_end_matches(']');
    if arg.contains(',') {
        return arg
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|e| Failure::Usage(format!("bad seed {s:?}: {e}")))
            })
            .collect();
    }
    let n: u64 = arg.parse().map_err(|e| {
        Failure::Usage(format!(
            "--seeds must be a count or a comma-separated list ({arg:?}: {e})"
        ))
    })?;
    Ok(count_seeds(n, base))
}

pub fn count_seeds(n: u64, base: u64) -> Vec<u64> {
    (0..n).map(|i| base.wrapping_add(i)).collect()
}

pub fn seeds_from_json(
    value: Option<&Value>,
    base: u64,
    default_count: usize,
) -> Result<Vec<u64>, Failure> {
    match value {
        None | Some(Value::Null) => Ok(count_seeds(default_count as u64, base)),
        Some(Value::Number(n)) => n.as_u64().map(|n| count_seeds(n, base)).ok_or_else(|| {
            Failure::Usage(format!("seeds must be a non-negative integer (got {n})"))
        }),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_u64()
                    .ok_or_else(|| Failure::Usage(format!("seed {v} is not a u64")))
            })
            .collect(),
        Some(other) => Err(Failure::Usage(format!(
            "seeds must be a count or a list (got {other})"
        ))),
    }
}

/// A class given by name or index.
pub fn class_ref(arg: &str) -> ClassRef {
    match arg.trim().parse::<usize>() {
        Ok(i) => ClassRef::Index(i),
        Err(_) => ClassRef::Name(arg.trim().to_owned()),
    }
}

pub fn class_ref_from_json(value: &Value) -> Result<ClassRef, Failure> {
    match value {
        Value::String(s) => Ok(ClassRef::Name(s.clone())),
        Value::Number(n) => n
            .as_u64()
            .map(|i| ClassRef::Index(i as usize))
            .ok_or_else(|| {
                Failure::Usage(format!(
                    "class index must be a non-negative integer (got {n})"
                ))
            }),
        other => Err(Failure::Usage(format!(
            "a class is a name or an index (got {other})"
        ))),
    }
}

/// A feature given by name or index.
pub fn feature_index(arg: &str, schema: &Schema) -> Result<usize, Failure> {
    Ok(schema.resolve(arg.trim())?)
}

pub fn feature_from_json(value: &Value, schema: &Schema) -> Result<usize, Failure> {
    match value {
        Value::String(s) => feature_index(s, schema),
        Value::Number(n) => feature_index(&n.to_string(), schema),
        other => Err(Failure::Usage(format!(
            "a feature is a name or an index (got {other})"
        ))),
    }
}

/// Labels file: one class name (or index) per line, one line per dataset
/// row. Blank lines are skipped.
pub fn load_labels(path: &Path, classes: &[String]) -> Result<Vec<usize>, Failure> {
    let text = read_text(path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| Ok(class_ref(l).resolve(classes)?))
        .collect()
}

pub fn labels_from_json(items: &[Value], classes: &[String]) -> Result<Vec<usize>, Failure> {
    items
        .iter()
        .map(|v| Ok(class_ref_from_json(v)?.resolve(classes)?))
        .collect()
}
