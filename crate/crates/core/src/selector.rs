//! Adaptive class-wise thresholds over teacher confidence and student
//! uncertainty, and the dual-indicator selection built on them.
//!
//! Each side keeps a [`ThresholdState`]: a global EMA of the batch-mean signal
//! and a per-class EMA of the class-conditional batch mean. The threshold for
//! class `y` is
//!
//! ```text
//! (local[y] / max(local)) ^ beta_local * tau ^ beta_global
//! ```
//!
//! A sample is kept when its student uncertainty reaches the student threshold
//! of its pseudo-label class and its teacher confidence reaches the teacher
//! threshold of the same class.

use serde::{Deserialize, Serialize};

use crate::data::PseudoLabeledSample;
use crate::error::{Error, Result};
use crate::student::StudentParams;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdState {
    pub tau: f64,
    pub local: Vec<f64>,
    pub lambda: f64,
    pub beta_local: f64,
    pub beta_global: f64,
    pub step: u64,
}

impl ThresholdState {
    pub fn new(k: usize, lambda: f64, beta_local: f64, beta_global: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("need K >= 2, got {k}")));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Config(format!("momentum must lie in (0, 1), got {lambda}")));
        }
        if !(beta_local >= 0.0 && beta_global >= 0.0) || !beta_local.is_finite() || !beta_global.is_finite() {
            return Err(Error::Config(format!(
                "exponents must be finite and nonnegative, got ({beta_local}, {beta_global})"
            )));
        }
        Ok(Self {
            tau: 0.0,
            local: vec![0.0; k],
            lambda,
            beta_local,
            beta_global,
            step: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.local.len()
    }

    /// Global EMA of the batch mean; advances the step counter.
    pub fn update_global(&mut self, signals: &[f64]) -> Result<()> {
        if signals.is_empty() {
            return Err(Error::Empty("signal batch"));
        }
        let mean = signals.iter().sum::<f64>() / signals.len() as f64;
        self.tau = self.lambda * self.tau + (1.0 - self.lambda) * mean;
        self.step += 1;
        Ok(())
    }

    /// Per-class EMA of the class-conditional batch mean. Classes absent from
    /// the batch keep their previous value.
    pub fn update_local(&mut self, signals: &[f64], labels: &[usize]) -> Result<()> {
        if signals.is_empty() {
            return Err(Error::Empty("signal batch"));
        }
        if labels.len() != signals.len() {
            return Err(Error::Length {
                what: "pseudo-labels",
                expected: signals.len(),
                got: labels.len(),
            });
        }
        let k = self.k();
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&s, &y) in signals.iter().zip(labels) {
            if y >= k {
                return Err(Error::LabelOutOfRange { label: y, k });
            }
            sums[y] += s;
            counts[y] += 1;
        }
        for y in 0..k {
            if counts[y] > 0 {
                let mean = sums[y] / counts[y] as f64;
                self.local[y] = self.lambda * self.local[y] + (1.0 - self.lambda) * mean;
            }
        }
        Ok(())
    }

    /// Applies both EMA updates for one batch.
    pub fn update(&mut self, signals: &[f64], labels: &[usize]) -> Result<()> {
        if labels.len() != signals.len() {
            return Err(Error::Length {
                what: "pseudo-labels",
                expected: signals.len(),
                got: labels.len(),
            });
        }
        // validate before mutating so a failed update leaves the state intact
        let mut next = self.clone();
        next.update_local(signals, labels)?;
        next.update_global(signals)?;
        *self = next;
        Ok(())
    }

    /// MaxNorm of the local vector at `y`; 0 when every local entry is 0.
    pub fn max_norm(&self, y: usize) -> Result<f64> {
        let k = self.k();
        if y >= k {
            return Err(Error::LabelOutOfRange { label: y, k });
        }
        let max = self.local.iter().copied().fold(0.0, f64::max);
        Ok(if max > 0.0 { self.local[y] / max } else { 0.0 })
    }

    /// Combined class threshold. `powf` gives 0^0 = 1, so a zero exponent
    /// disables its factor even at cold start.
    pub fn final_threshold(&self, y: usize) -> Result<f64> {
        let local = self.max_norm(y)?;
        Ok(local.powf(self.beta_local) * self.tau.powf(self.beta_global))
    }

    pub fn thresholds(&self) -> Vec<f64> {
        (0..self.k())
            .map(|y| self.final_threshold(y).expect("index in range"))
            .collect()
    }
}

/// Whether thresholds are refreshed with the current batch before or after it
/// is filtered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateOrder {
    #[default]
    UpdateThenSelect,
    SelectThenUpdate,
}

/// Population over which the confidence and uncertainty weights are
/// sum-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightNorm {
    #[default]
    FullBatch,
    SelectedOnly,
}

/// Which of the two indicators participate in the mask. A disabled indicator
/// is forced to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Indicators {
    pub teacher: bool,
    pub student: bool,
}

impl Indicators {
    pub const BOTH: Self = Self {
        teacher: true,
        student: true,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub mask: Vec<bool>,
    pub weights: Vec<f64>,
    pub student_thresholds_used: Vec<f64>,
    pub teacher_thresholds_used: Vec<f64>,
    /// Per-sample outcome of each indicator on its own.
    pub student_pass: Vec<bool>,
    pub teacher_pass: Vec<bool>,
    pub uncertainties: Vec<f64>,
    pub confidences: Vec<f64>,
}

impl SelectionResult {
    pub fn selected(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Per-sample threshold lookup and both indicators. Returns
/// (mask, student thresholds, teacher thresholds, student pass, teacher pass).
#[allow(clippy::type_complexity)]
pub fn select(
    batch: &[PseudoLabeledSample],
    uncertainties: &[f64],
    student: &ThresholdState,
    teacher: &ThresholdState,
    indicators: Indicators,
) -> Result<(Vec<bool>, Vec<f64>, Vec<f64>, Vec<bool>, Vec<bool>)> {
    if uncertainties.len() != batch.len() {
        return Err(Error::Length {
            what: "uncertainties",
            expected: batch.len(),
            got: uncertainties.len(),
        });
    }
    let student_thr = student.thresholds();
    let teacher_thr = teacher.thresholds();
    let n = batch.len();
    let (mut mask, mut s_used, mut t_used, mut s_pass, mut t_pass) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for (s, &u) in batch.iter().zip(uncertainties) {
        let y = s.pseudo_label;
        let (ts, tt) = (
            *student_thr.get(y).ok_or(Error::LabelOutOfRange { label: y, k: student.k() })?,
            *teacher_thr.get(y).ok_or(Error::LabelOutOfRange { label: y, k: teacher.k() })?,
        );
        let sp = u >= ts;
        let tp = s.confidence >= tt;
        mask.push((sp || !indicators.student) && (tp || !indicators.teacher));
        s_used.push(ts);
        t_used.push(tt);
        s_pass.push(sp);
        t_pass.push(tp);
    }
    Ok((mask, s_used, t_used, s_pass, t_pass))
}

/// v_i / sum(v), or 1/n when the sum is 0.
fn sum_normalize(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / v.len() as f64; v.len()]
    }
}

/// f(C)_i + f(U)_i with f a sum normalization. Under [`WeightNorm::FullBatch`]
/// every sample participates and the mask is ignored; under
/// [`WeightNorm::SelectedOnly`] only masked-in samples are normalized and the
/// rest get weight 0.
pub fn compute_weights(
    confidences: &[f64],
    uncertainties: &[f64],
    mask: &[bool],
    norm: WeightNorm,
) -> Result<Vec<f64>> {
    let n = confidences.len();
    if n == 0 {
        return Err(Error::Empty("batch"));
    }
    if uncertainties.len() != n || mask.len() != n {
        return Err(Error::Length {
            what: "weight inputs",
            expected: n,
            got: uncertainties.len().min(mask.len()),
        });
    }
    match norm {
        WeightNorm::FullBatch => {
            let fc = sum_normalize(confidences);
            let fu = sum_normalize(uncertainties);
            Ok(fc.iter().zip(&fu).map(|(c, u)| c + u).collect())
        }
        WeightNorm::SelectedOnly => {
            let idx: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
            let mut w = vec![0.0; n];
            if idx.is_empty() {
                return Ok(w);
            }
            let fc = sum_normalize(&idx.iter().map(|&i| confidences[i]).collect::<Vec<_>>());
            let fu = sum_normalize(&idx.iter().map(|&i| uncertainties[i]).collect::<Vec<_>>());
            for (j, &i) in idx.iter().enumerate() {
                w[i] = fc[j] + fu[j];
            }
            Ok(w)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorConfig {
    #[serde(default = "default_lambda")]
    pub lambda_s: f64,
    #[serde(default = "default_lambda")]
    pub lambda_t: f64,
    #[serde(default = "one")]
    pub beta_s1: f64,
    #[serde(default = "one")]
    pub beta_s2: f64,
    #[serde(default = "one")]
    pub beta_t1: f64,
    #[serde(default = "one")]
    pub beta_t2: f64,
    #[serde(default)]
    pub order: UpdateOrder,
    #[serde(default)]
    pub weight_norm: WeightNorm,
}

fn default_lambda() -> f64 {
    0.9
}

fn one() -> f64 {
    1.0
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            lambda_s: 0.9,
            lambda_t: 0.9,
            beta_s1: 1.0,
            beta_s2: 1.0,
            beta_t1: 1.0,
            beta_t2: 1.0,
            order: UpdateOrder::default(),
            weight_norm: WeightNorm::default(),
        }
    }
}

/// Student-side and teacher-side threshold state for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct Selector {
    pub student: ThresholdState,
    pub teacher: ThresholdState,
    pub order: UpdateOrder,
    pub weight_norm: WeightNorm,
}

impl Selector {
    pub fn new(k: usize, cfg: &SelectorConfig) -> Result<Self> {
        Ok(Self {
            student: ThresholdState::new(k, cfg.lambda_s, cfg.beta_s1, cfg.beta_s2)?,
            teacher: ThresholdState::new(k, cfg.lambda_t, cfg.beta_t1, cfg.beta_t2)?,
            order: cfg.order,
            weight_norm: cfg.weight_norm,
        })
    }

    /// Computes pre-update student uncertainties, refreshes both threshold
    /// states, builds the mask and (when `weighted`) the loss weights.
    pub fn run_batch(
        &mut self,
        batch: &[PseudoLabeledSample],
        params: &StudentParams,
        indicators: Indicators,
        weighted: bool,
    ) -> Result<SelectionResult> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let uncertainties = batch
            .iter()
            .map(|s| params.uncertainty(&s.sample))
            .collect::<Result<Vec<_>>>()?;
        self.select_with_signals(batch, uncertainties, indicators, weighted)
    }

    /// As [`Selector::run_batch`], with the uncertainties supplied.
    pub fn select_with_signals(
        &mut self,
        batch: &[PseudoLabeledSample],
        uncertainties: Vec<f64>,
        indicators: Indicators,
        weighted: bool,
    ) -> Result<SelectionResult> {
        let confidences: Vec<f64> = batch.iter().map(|s| s.confidence).collect();
        let labels: Vec<usize> = batch.iter().map(|s| s.pseudo_label).collect();

        if self.order == UpdateOrder::UpdateThenSelect {
            self.update_states(&uncertainties, &confidences, &labels)?;
        }
        let (mask, s_used, t_used, s_pass, t_pass) =
            select(batch, &uncertainties, &self.student, &self.teacher, indicators)?;
        if self.order == UpdateOrder::SelectThenUpdate {
            self.update_states(&uncertainties, &confidences, &labels)?;
        }

        let weights = if weighted {
            compute_weights(&confidences, &uncertainties, &mask, self.weight_norm)?
        } else {
            vec![1.0; batch.len()]
        };
        Ok(SelectionResult {
            mask,
            weights,
            student_thresholds_used: s_used,
            teacher_thresholds_used: t_used,
            student_pass: s_pass,
            teacher_pass: t_pass,
            uncertainties,
            confidences,
        })
    }

    fn update_states(&mut self, unc: &[f64], conf: &[f64], labels: &[usize]) -> Result<()> {
        let mut student = self.student.clone();
        student.update(unc, labels)?;
        self.teacher.update(conf, labels)?;
        self.student = student;
        Ok(())
    }
}
