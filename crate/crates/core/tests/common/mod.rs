#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;

use surrogate_core::blackbox::{ModelHandle, ModelSpec};
use surrogate_core::data::{load_dataset, TabularDataset};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

/// 200 rows; `x0` has a narrow band just above its median of exactly 1.
pub fn band_dataset() -> TabularDataset {
    load_dataset(fs::File::open(fixture("band.csv")).unwrap(), None).unwrap()
}

/// `x0 > 1 → high`, otherwise `low`.
pub fn rule_spec() -> ModelSpec {
    serde_json::from_str(&fs::read_to_string(fixture("rule_model.json")).unwrap()).unwrap()
}

pub fn rule_model(dataset: &TabularDataset) -> ModelHandle {
    ModelHandle::from_spec(&rule_spec(), dataset.schema()).unwrap()
}

/// Row of `band.csv` with `x0 ≈ 2.51`, above the third quartile.
pub const ANCHOR_ROW: usize = 180;
