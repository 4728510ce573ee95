//! Per-category precision/recall/F1 and overall accuracy.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::Label;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("key mismatch: {missing} ids without predictions (first: {first_missing:?}), {extra} predictions without truth (first: {first_extra:?})")]
    KeyMismatch {
        missing: usize,
        extra: usize,
        first_missing: Option<String>,
        first_extra: Option<String>,
    },
}

/// Percentages in [0, 100].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub categories: BTreeMap<Label, CategoryScore>,
    /// Exact-match percentage over all rects.
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

pub fn score(predicted: &BTreeMap<String, Label>, truth: &BTreeMap<String, Label>) -> Result<MetricsReport, ScoreError> {
    let missing: Vec<&String> = truth.keys().filter(|k| !predicted.contains_key(*k)).collect();
    let extra: Vec<&String> = predicted.keys().filter(|k| !truth.contains_key(*k)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(ScoreError::KeyMismatch {
            missing: missing.len(),
            extra: extra.len(),
            first_missing: missing.first().map(|s| s.to_string()),
            first_extra: extra.first().map(|s| s.to_string()),
        });
    }
    let mut tp = BTreeMap::new();
    let mut pred_n = BTreeMap::new();
    let mut true_n = BTreeMap::new();
    for (id, t) in truth {
        let p = predicted[id];
        *true_n.entry(*t).or_insert(0) += 1;
        *pred_n.entry(p).or_insert(0) += 1;
        if p == *t {
            *tp.entry(p).or_insert(0) += 1;
        }
    }
    let get = |m: &BTreeMap<Label, usize>, l| m.get(&l).copied().unwrap_or(0);
    let categories = Label::ALL
        .into_iter()
        .map(|l| {
            let precision = pct(get(&tp, l), get(&pred_n, l));
            let recall = pct(get(&tp, l), get(&true_n, l));
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            (
                l,
                CategoryScore {
                    precision,
                    recall,
                    f1,
                    support: get(&true_n, l),
                },
            )
        })
        .collect();
    let correct = tp.values().sum();
    Ok(MetricsReport {
        categories,
        accuracy: pct(correct, truth.len()),
        correct,
        total: truth.len(),
    })
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

const LABEL_W: usize = 18;
const COL_W: usize = 10;

fn header(out: &mut String, titles: &[&str]) {
    let block = 3 * COL_W + 2;
    let _ = write!(out, "{:LABEL_W$}", "");
    for t in titles {
        let _ = write!(out, "|{t:^block$}");
    }
    out.push_str("|\n");
    let _ = write!(out, "{:<LABEL_W$}", "category");
    for _ in titles {
        let _ = write!(out, "| {:>COL_W$}{:>COL_W$}{:>COL_W$} ", "precision", "recall", "f1-score");
    }
    out.push_str("|\n");
}

/// Aligned-column results table: one block of precision/recall/F1 per
/// report, one row per category, overall accuracy last.
pub fn format_table(columns: &[(&str, &MetricsReport)]) -> String {
    let mut out = String::new();
    let titles: Vec<&str> = columns.iter().map(|(t, _)| *t).collect();
    header(&mut out, &titles);
    let rule = format!("{}\n", "-".repeat(LABEL_W + columns.len() * (3 * COL_W + 3) + 1));
    out.push_str(&rule);
    for l in Label::ALL {
        let _ = write!(out, "{:<LABEL_W$}", l.as_str());
        for (_, m) in columns {
            let c = m.categories[&l];
            let f = |v: f64| format!("{v:.2}%");
            let _ = write!(out, "| {:>COL_W$}{:>COL_W$}{:>COL_W$} ", f(c.precision), f(c.recall), f(c.f1));
        }
        out.push_str("|\n");
    }
    out.push_str(&rule);
    let _ = write!(out, "{:<LABEL_W$}", "overall accuracy");
    let block = 3 * COL_W + 2;
    for (_, m) in columns {
        let _ = write!(out, "|{:^block$}", format!("{:.2}%", m.accuracy));
    }
    out.push_str("|\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn labels(pairs: &[(&str, Label)]) -> BTreeMap<String, Label> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn perfect_prediction() {
        let t = labels(&[("a", Label::Product), ("b", Label::Shelf), ("c", Label::Other)]);
        let m = score(&t, &t).unwrap();
        assert_eq!(m.accuracy, 100.0);
        assert!(m.categories.values().all(|c| c.precision == 100.0 && c.recall == 100.0 && c.f1 == 100.0));
    }

    #[test]
    fn hand_computed() {
        let t = labels(&[("a", Label::Product), ("b", Label::Product), ("c", Label::Shelf)]);
        let p = labels(&[("a", Label::Product), ("b", Label::Other), ("c", Label::Shelf)]);
        let m = score(&p, &t).unwrap();
        let prod = m.categories[&Label::Product];
        assert_abs_diff_eq!(prod.precision, 100.0);
        assert_abs_diff_eq!(prod.recall, 50.0);
        assert_abs_diff_eq!(m.accuracy, 200.0 / 3.0, epsilon = 1e-9);
        assert_eq!(format!("{:.2}", m.accuracy), "66.67");
        // zero denominators
        assert_eq!(m.categories[&Label::Other].precision, 0.0);
        assert_eq!(m.categories[&Label::Other].recall, 0.0);
    }

    #[test]
    fn all_other_predictor() {
        let t = labels(&[("a", Label::Product), ("b", Label::Other), ("c", Label::Shelf), ("d", Label::Other)]);
        let p: BTreeMap<_, _> = t.keys().map(|k| (k.clone(), Label::Other)).collect();
        assert_abs_diff_eq!(score(&p, &t).unwrap().accuracy, 50.0);
    }

    #[test]
    fn mismatched_keys() {
        let t = labels(&[("a", Label::Product)]);
        let p = labels(&[("b", Label::Product)]);
        assert!(matches!(score(&p, &t), Err(ScoreError::KeyMismatch { missing: 1, extra: 1, .. })));
    }

    #[test]
    fn table_layout() {
        let t = labels(&[("a", Label::Product), ("b", Label::Shelf)]);
        let m = score(&t, &t).unwrap();
        let text = format_table(&[("without FoA", &m), ("with FoA", &m)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert!(lines[1].starts_with("category"));
        assert!(lines[3].starts_with("product"));
        assert!(lines[7].starts_with("overall accuracy"));
        assert!(lines.iter().all(|l| l.chars().count() == lines[1].chars().count()));
        assert_eq!(MetricsReport::from_json(&m.to_json()).unwrap(), m);
    }
}
