//! Classification metrics, calibration binning, before/after-selection
//! accuracy and the data-efficiency ledger.

use crate::error::{Error, Result};

pub fn accuracy(preds: &[usize], golds: &[usize]) -> Result<f64> {
    check_pair(preds, golds)?;
    let hits = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Unweighted mean of per-class F1. A class with no true positives (including
/// one that is neither predicted nor present) contributes 0.
pub fn macro_f1(preds: &[usize], golds: &[usize], k: usize) -> Result<f64> {
    check_pair(preds, golds)?;
    let mut tp = vec![0usize; k];
    let mut pred_count = vec![0usize; k];
    let mut gold_count = vec![0usize; k];
    for (&p, &g) in preds.iter().zip(golds) {
        for label in [p, g] {
            if label >= k {
                return Err(Error::LabelOutOfRange { label, k });
            }
        }
        pred_count[p] += 1;
        gold_count[g] += 1;
        if p == g {
            tp[p] += 1;
        }
    }
    let total: f64 = (0..k)
        .map(|c| {
            if tp[c] == 0 {
                return 0.0;
            }
            let precision = tp[c] as f64 / pred_count[c] as f64;
            let recall = tp[c] as f64 / gold_count[c] as f64;
            2.0 * precision * recall / (precision + recall)
        })
        .sum();
    Ok(total / k as f64)
}

fn check_pair(preds: &[usize], golds: &[usize]) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    if preds.len() != golds.len() {
        return Err(Error::Length {
            what: "predictions",
            expected: golds.len(),
            got: preds.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` for an empty bin.
    pub accuracy: Option<f64>,
    pub mean_value: Option<f64>,
}

/// Equal-width bins over `[lo, hi]`. The last bin is closed on the right;
/// values a hair outside the range are clamped into the edge bins.
pub fn calibration_bins(
    values: &[f64],
    correct: &[bool],
    lo: f64,
    hi: f64,
    n_bins: usize,
) -> Result<Vec<CalibrationBin>> {
    if n_bins < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {n_bins}")));
    }
    if !(hi > lo) {
        return Err(Error::Config(format!("empty bin range [{lo}, {hi}]")));
    }
    if values.len() != correct.len() {
        return Err(Error::Length {
            what: "correct flags",
            expected: values.len(),
            got: correct.len(),
        });
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    let mut hits = vec![0usize; n_bins];
    let mut sums = vec![0.0; n_bins];
    for (&v, &c) in values.iter().zip(correct) {
        if !v.is_finite() {
            return Err(Error::Config(format!("non-finite value {v}")));
        }
        let idx = (((v - lo) / width).floor().max(0.0) as usize).min(n_bins - 1);
        counts[idx] += 1;
        sums[idx] += v;
        if c {
            hits[idx] += 1;
        }
    }
    Ok((0..n_bins)
        .map(|i| CalibrationBin {
            lo: lo + i as f64 * width,
            hi: if i + 1 == n_bins { hi } else { lo + (i + 1) as f64 * width },
            count: counts[i],
            accuracy: (counts[i] > 0).then(|| hits[i] as f64 / counts[i] as f64),
            mean_value: (counts[i] > 0).then(|| sums[i] / counts[i] as f64),
        })
        .collect())
}

/// Teacher and student accuracy on a train batch, over the whole batch and
/// over the selected subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdEval {
    pub teacher_acc_before: f64,
    pub teacher_acc_after: Option<f64>,
    pub student_acc_before: f64,
    pub student_acc_after: Option<f64>,
    pub selected: usize,
    pub batch_size: usize,
}

/// Teacher accuracy compares pseudo-labels to gold; student accuracy compares
/// student predictions to pseudo-labels.
pub fn threshold_evaluation(
    pseudo_labels: &[usize],
    mask: &[bool],
    golds: &[usize],
    student_preds: &[usize],
) -> Result<ThresholdEval> {
    let n = pseudo_labels.len();
    if n == 0 {
        return Err(Error::Empty("batch"));
    }
    for (what, len) in [("mask", mask.len()), ("golds", golds.len()), ("student predictions", student_preds.len())] {
        if len != n {
            return Err(Error::Length {
                what,
                expected: n,
                got: len,
            });
        }
    }
    let mut t_all = 0usize;
    let mut s_all = 0usize;
    let mut t_sel = 0usize;
    let mut s_sel = 0usize;
    let mut sel = 0usize;
    for i in 0..n {
        let t_ok = pseudo_labels[i] == golds[i];
        let s_ok = student_preds[i] == pseudo_labels[i];
        t_all += t_ok as usize;
        s_all += s_ok as usize;
        if mask[i] {
            sel += 1;
            t_sel += t_ok as usize;
            s_sel += s_ok as usize;
        }
    }
    let frac = |a: usize, b: usize| a as f64 / b as f64;
    Ok(ThresholdEval {
        teacher_acc_before: frac(t_all, n),
        teacher_acc_after: (sel > 0).then(|| frac(t_sel, sel)),
        student_acc_before: frac(s_all, n),
        student_acc_after: (sel > 0).then(|| frac(s_sel, sel)),
        selected: sel,
        batch_size: n,
    })
}

/// Per-training-step record.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub batch_size: usize,
    pub selected: usize,
    pub cum_selected: usize,
    pub cum_seen: usize,
    pub loss: f64,
    pub uncertainty_min: f64,
    pub uncertainty_max: f64,
    pub confidence_min: f64,
    pub confidence_max: f64,
    pub student_tau: f64,
    pub teacher_tau: f64,
    pub student_local: Vec<f64>,
    pub teacher_local: Vec<f64>,
    pub student_thresholds: Vec<f64>,
    pub teacher_thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub step: usize,
    pub val_acc: f64,
    pub val_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdEvalRecord {
    pub step: usize,
    /// Under the mask actually used for training.
    pub combined: ThresholdEval,
    /// Under the teacher-confidence indicator alone.
    pub teacher_only: ThresholdEval,
    /// Under the student-uncertainty indicator alone.
    pub student_only: ThresholdEval,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLedger {
    pub steps: Vec<StepRecord>,
    pub evals: Vec<EvalRecord>,
    pub threshold_evals: Vec<ThresholdEvalRecord>,
}

impl RunLedger {
    pub fn cum_seen(&self) -> usize {
        self.steps.last().map_or(0, |s| s.cum_seen)
    }

    pub fn cum_selected(&self) -> usize {
        self.steps.last().map_or(0, |s| s.cum_selected)
    }

    /// Appends a step, filling the cumulative counters.
    pub fn push_step(&mut self, mut rec: StepRecord) {
        rec.cum_seen = self.cum_seen() + rec.batch_size;
        rec.cum_selected = self.cum_selected() + rec.selected;
        rec.step = self.steps.len();
        self.steps.push(rec);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyReport {
    pub total_selected: usize,
    pub total_seen: usize,
    /// Fraction in [0, 1]; 0 when nothing was seen.
    pub fraction: f64,
}

pub fn efficiency_report(ledger: &RunLedger) -> EfficiencyReport {
    let total_selected: usize = ledger.steps.iter().map(|s| s.selected).sum();
    let total_seen: usize = ledger.steps.iter().map(|s| s.batch_size).sum();
    EfficiencyReport {
        total_selected,
        total_seen,
        fraction: if total_seen == 0 {
            0.0
        } else {
            total_selected as f64 / total_seen as f64
        },
    }
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
