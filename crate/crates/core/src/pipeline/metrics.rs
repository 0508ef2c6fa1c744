use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::chi_square_sf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub positive: ClassReport,
    pub negative: ClassReport,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub confusion: Confusion,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_report(hit: usize, predicted: usize, actual: usize) -> ClassReport {
    let precision = ratio(hit, predicted);
    let recall = ratio(hit, actual);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassReport {
        precision,
        recall,
        f1,
        support: actual,
    }
}

/// Per-class and support-weighted precision, recall and F1.
pub fn evaluate(preds: &[bool], golds: &[bool]) -> Result<EvalReport> {
    if preds.len() != golds.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: golds.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::InvalidParameter("evaluate needs at least one item".into()));
    }
    let mut c = Confusion {
        true_positive: 0,
        false_positive: 0,
        false_negative: 0,
        true_negative: 0,
    };
    for (&p, &g) in preds.iter().zip(golds) {
        match (p, g) {
            (true, true) => c.true_positive += 1,
            (true, false) => c.false_positive += 1,
            (false, true) => c.false_negative += 1,
            (false, false) => c.true_negative += 1,
        }
    }
    let positive = class_report(
        c.true_positive,
        c.true_positive + c.false_positive,
        c.true_positive + c.false_negative,
    );
    let negative = class_report(
        c.true_negative,
        c.true_negative + c.false_negative,
        c.true_negative + c.false_positive,
    );
    let n = preds.len() as f64;
    let (wp, wn) = (positive.support as f64 / n, negative.support as f64 / n);
    Ok(EvalReport {
        positive,
        negative,
        weighted_precision: wp * positive.precision + wn * negative.precision,
        weighted_recall: wp * positive.recall + wn * negative.recall,
        weighted_f1: wp * positive.f1 + wn * negative.f1,
        confusion: c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemar {
    /// Items A got right and B got wrong.
    pub b: usize,
    /// Items A got wrong and B got right.
    pub c: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// Continuity-corrected McNemar test from discordant counts.
pub fn mcnemar_counts(b: usize, c: usize) -> McNemar {
    if b + c == 0 {
        return McNemar {
            b,
            c,
            statistic: 0.0,
            p_value: 1.0,
        };
    }
    let diff = (b as f64 - c as f64).abs() - 1.0;
    let statistic = diff.powi(2) / (b + c) as f64;
    McNemar {
        b,
        c,
        statistic,
        p_value: chi_square_sf(statistic),
    }
}

pub fn mcnemar(preds_a: &[bool], preds_b: &[bool], gold: &[bool]) -> Result<McNemar> {
    if preds_a.len() != gold.len() || preds_b.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: preds_a.len().max(preds_b.len()),
            right: gold.len(),
        });
    }
    let mut b = 0;
    let mut c = 0;
    for ((&a, &bb), &g) in preds_a.iter().zip(preds_b).zip(gold) {
        match (a == g, bb == g) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok(mcnemar_counts(b, c))
}
