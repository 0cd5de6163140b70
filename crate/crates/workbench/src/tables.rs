//! Plain-text tables for standard output.

use std::fmt::Write;

use surrogate_core::evaluation::StabilityReport;
use surrogate_core::explain::surrogate::Explanation;
use surrogate_core::global::{IceCurves, PdResult, PermutationImportanceResult};
use surrogate_core::report::ExplanationReport;

fn width(labels: impl Iterator<Item = usize>, min: usize) -> usize {
    labels.max().unwrap_or(0).max(min)
}

pub fn explanation(report: &ExplanationReport) -> String {
    let mut out = String::new();
    let p = report
        .anchor_probabilities
        .get(report.target_class)
        .copied()
        .unwrap_or(f64::NAN);
    match &report.explanation {
        Explanation::Attribution {
            target_name,
            intercept,
            items,
            ..
        } => {
            let _ = writeln!(out, "target class: {target_name} (black-box p = {p:.4})");
            let w = width(items.iter().map(|i| i.description.len()), 7);
            let _ = writeln!(
                out,
                "{:>4}  {:<w$}  {:>12}",
                "rank", "feature", "attribution"
            );
            for (rank, item) in items.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{:>4}  {:<w$}  {:>+12.6}",
                    rank + 1,
                    item.description,
                    item.value
                );
            }
            let _ = writeln!(out, "intercept {intercept:+.6}");
        }
        Explanation::Rules {
            target_name, items, ..
        } => {
            let _ = writeln!(out, "target class: {target_name} (black-box p = {p:.4})");
            for item in items {
                let marker = if item.contains_anchor { "*" } else { " " };
                let probs: Vec<String> = item
                    .probabilities
                    .iter()
                    .map(|v| format!("{v:.3}"))
                    .collect();
                let _ = writeln!(
                    out,
                    "{marker} leaf {:>3}  weight {:>10.4}  [{}]  {}",
                    item.leaf,
                    item.weight,
                    probs.join(", "),
                    item.rule
                );
            }
        }
    }
    let f = &report.fidelity;
    let _ = writeln!(
        out,
        "fidelity: weighted r2 {}, weighted accuracy {:.4}{}",
        if f.weighted_r2.is_finite() {
            format!("{:.6}", f.weighted_r2)
        } else {
            "-inf".to_owned()
        },
        f.weighted_accuracy,
        if f.degenerate {
            " (constant target)"
        } else {
            ""
        }
    );
    let _ = writeln!(out, "fingerprint {}", report.fingerprint);
    out
}

pub fn stability(report: &StabilityReport) -> String {
    let mut out = String::new();
    let w = width(report.features.iter().map(|f| f.feature.len()), 7);
    let _ = writeln!(out, "{:<w$}  {:>12}    {:>10}", "feature", "mean", "std");
    for f in &report.features {
        let _ = writeln!(
            out,
            "{:<w$}  {:>+12.6} ± {:>10.6}",
            f.feature, f.mean, f.std
        );
    }
    let _ = writeln!(
        out,
        "mean top-{} jaccard over {} seeds: {:.4}",
        report.top_k, report.runs, report.mean_jaccard
    );
    out
}

pub fn importance(result: &PermutationImportanceResult) -> String {
    let mut out = String::new();
    let w = width(result.features.iter().map(|f| f.feature.len()), 7);
    let _ = writeln!(
        out,
        "baseline accuracy {:.4}, {} repeats",
        result.baseline, result.n_repeats
    );
    let _ = writeln!(out, "{:<w$}  {:>10}  {:>10}", "feature", "mean drop", "std");
    for f in &result.features {
        let _ = writeln!(
            out,
            "{:<w$}  {:>10.6}  {:>10.6}",
            f.feature, f.mean_drop, f.std_drop
        );
    }
    out
}

pub fn ice(curves: &IceCurves) -> String {
    format!(
        "ICE for {} (class {}): {} curves over {} grid points [{}, {}]\n",
        curves.feature_name,
        curves.target_name,
        curves.curves.len(),
        curves.grid.len(),
        curves.grid.first().copied().unwrap_or(f64::NAN),
        curves.grid.last().copied().unwrap_or(f64::NAN)
    )
}

pub fn pd(result: &PdResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "partial dependence of class {} on {}",
        result.pd.target_name, result.pd.feature_name
    );
    let _ = writeln!(out, "{:>14}  {:>10}", "grid", "pd");
    for (g, v) in result.pd.grid.iter().zip(&result.pd.values) {
        let _ = writeln!(out, "{g:>14.6}  {v:>10.6}");
    }
    out
}
