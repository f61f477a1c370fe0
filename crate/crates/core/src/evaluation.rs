//! Confusion counts, derived metrics and per-category report tables.

use serde::Serialize;

use crate::actionability::ActionabilityType;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, prediction: bool, gold: bool) {
        match (prediction, gold) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Count agreement between ±1 predictions and golds. Positive means > 0.
pub fn confusion(predictions: &[i8], golds: &[i8]) -> Result<Confusion> {
    if predictions.len() != golds.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: golds.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("no predictions to evaluate".into()));
    }
    let mut c = Confusion::default();
    for (&p, &g) in predictions.iter().zip(golds) {
        c.add(p > 0, g > 0);
    }
    Ok(c)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 are 0 when their denominators are 0.
pub fn metrics(c: &Confusion) -> MetricsReport {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    MetricsReport {
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision,
        recall,
        f1,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CategoryRow {
    pub category: ActionabilityType,
    pub metrics: MetricsReport,
    pub baseline_f1: f64,
}

/// Rendered report: aligned text with percentages, and a CSV twin.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportTable {
    pub text: String,
    pub csv: String,
}

fn percent(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

/// Nine rows in category order. Rows may arrive in any order.
pub fn report_table(rows: &[CategoryRow]) -> Result<ReportTable> {
    let ordered = ActionabilityType::ALL
        .iter()
        .map(|t| {
            rows.iter()
                .find(|r| r.category == *t)
                .ok_or_else(|| Error::MissingCategory(format!("no report for {} ({})", t.name(), t.code())))
        })
        .collect::<Result<Vec<_>>>()?;
    let width = ActionabilityType::ALL.iter().map(|t| t.title().len()).max().unwrap_or(0);
    let mut text = format!(
        "{:<width$}  {:>8}  {:>8}  {:>8}  {:>11}\n",
        "Category", "Accuracy", "F1", "Recall", "Baseline F1"
    );
    let mut csv = String::from("category,accuracy,f1,recall,baseline_f1\n");
    for r in ordered {
        let m = &r.metrics;
        text.push_str(&format!(
            "{:<width$}  {:>8}  {:>8}  {:>8}  {:>11}\n",
            r.category.title(),
            percent(m.accuracy),
            percent(m.f1),
            percent(m.recall),
            percent(r.baseline_f1)
        ));
        csv.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6}\n",
            r.category.name(),
            m.accuracy,
            m.f1,
            m.recall,
            r.baseline_f1
        ));
    }
    Ok(ReportTable { text, csv })
}
