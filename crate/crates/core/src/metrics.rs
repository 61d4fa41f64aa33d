//! Confusion matrix and per-class / macro-averaged precision, recall and F1.

use std::fmt::Write as _;

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Counts with the troll class as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    let mut c = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t.is_positive(), p.is_positive()) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroScores<T> {
    pub troll: ClassScores<T>,
    pub not_troll: ClassScores<T>,
    pub macro_precision: T,
    pub macro_recall: T,
    pub macro_f1: T,
    /// Set when any ratio had a zero denominator and was scored 0.
    pub zero_division: bool,
}

fn safe_div<T: Real>(num: u64, den: u64, flag: &mut bool) -> T {
    if den == 0 {
        *flag = true;
        T::zero()
    } else {
        T::lit(num as f64) / T::lit(den as f64)
    }
}

fn class_scores<T: Real>(tp: u64, fp: u64, fn_: u64, flag: &mut bool) -> ClassScores<T> {
    let precision: T = safe_div(tp, tp + fp, flag);
    let recall: T = safe_div(tp, tp + fn_, flag);
    let sum = precision + recall;
    let f1 = if sum > T::zero() {
        T::lit(2.0) * precision * recall / sum
    } else {
        *flag = true;
        T::zero()
    };
    ClassScores {
        precision,
        recall,
        f1,
    }
}

/// Per-class scores and their unweighted means. Zero denominators score 0.
pub fn macro_prf<T: Real>(c: &ConfusionMatrix) -> MacroScores<T> {
    let mut flag = false;
    let troll = class_scores(c.tp, c.fp, c.fn_, &mut flag);
    let not_troll = class_scores(c.tn, c.fn_, c.fp, &mut flag);
    let half = T::lit(0.5);
    MacroScores {
        macro_precision: (troll.precision + not_troll.precision) * half,
        macro_recall: (troll.recall + not_troll.recall) * half,
        macro_f1: (troll.f1 + not_troll.f1) * half,
        troll,
        not_troll,
        zero_division: flag,
    }
}

/// Macro F1 straight from label vectors.
pub fn macro_f1(y_true: &[Label], y_pred: &[Label]) -> Result<f64> {
    Ok(macro_prf::<f64>(&confusion(y_true, y_pred)?).macro_f1)
}

/// Plain-text evaluation report: confusion matrix, then per-class and macro
/// precision / recall / F1 rows.
pub fn render_report(model: &str, c: &ConfusionMatrix, s: &MacroScores<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model\t{model}");
    let _ = writeln!(out, "samples\t{}", c.total());
    let _ = writeln!(
        out,
        "confusion\ttp={}\tfp={}\tfn={}\ttn={}",
        c.tp, c.fp, c.fn_, c.tn
    );
    let _ = writeln!(out, "class\tprecision\trecall\tf1");
    for (name, cs) in [("troll", &s.troll), ("not_troll", &s.not_troll)] {
        let _ = writeln!(
            out,
            "{name}\t{:.2}\t{:.2}\t{:.2}",
            cs.precision, cs.recall, cs.f1
        );
    }
    let _ = writeln!(
        out,
        "macro\t{:.2}\t{:.2}\t{:.2}",
        s.macro_precision, s.macro_recall, s.macro_f1
    );
    if s.zero_division {
        let _ = writeln!(out, "note\tzero denominators scored as 0");
    }
    out
}
