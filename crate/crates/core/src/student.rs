//! Linear softmax student: p(y|x) = softmax(W x + b), trained with plain SGD
//! on the masked / weighted pseudo-label cross-entropy.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::{argmax, PseudoLabeledSample, ProbDist, Sample};
use crate::error::{Error, Result};
use crate::metrics;

const CHECKPOINT_MAGIC: &str = "llkd-student";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StudentParams {
    k: usize,
    d: usize,
    /// Row-major K x d.
    weights: Vec<f64>,
    bias: Vec<f64>,
    pub learning_rate: f64,
}

/// Gradient of the batch loss with respect to the weights and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl StudentParams {
    pub fn zeros(k: usize, d: usize, learning_rate: f64) -> Result<Self> {
        Self::from_parts(k, d, vec![0.0; k * d], vec![0.0; k], learning_rate)
    }

    pub fn from_parts(
        k: usize,
        d: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        learning_rate: f64,
    ) -> Result<Self> {
        if k < 2 || d < 1 {
            return Err(Error::Config(format!("invalid student shape K={k}, d={d}")));
        }
        if weights.len() != k * d {
            return Err(Error::Length {
                what: "weights",
                expected: k * d,
                got: weights.len(),
            });
        }
        if bias.len() != k {
            return Err(Error::Length {
                what: "bias",
                expected: k,
                got: bias.len(),
            });
        }
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        if weights.iter().chain(bias.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Config("non-finite student parameter".into()));
        }
        Ok(Self {
            k,
            d,
            weights,
            bias,
            learning_rate,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn logits(&self, sample: &Sample) -> Result<Vec<f64>> {
        if sample.features.len() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                got: sample.features.len(),
            });
        }
        Ok(self
            .weights
            .chunks_exact(self.d)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(&sample.features).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect())
    }

    pub fn forward(&self, sample: &Sample) -> Result<ProbDist> {
        Ok(softmax(&self.logits(sample)?))
    }

    /// Entropy of the predicted distribution.
    pub fn uncertainty(&self, sample: &Sample) -> Result<f64> {
        Ok(self.forward(sample)?.entropy())
    }

    pub fn predict(&self, sample: &Sample) -> Result<usize> {
        Ok(argmax(&self.logits(sample)?))
    }

    /// (1/B) sum_i w_i m_i (-ln p_i[pl_i]). Division is by the full batch size.
    pub fn batch_loss(
        &self,
        batch: &[PseudoLabeledSample],
        mask: &[bool],
        weights: &[f64],
    ) -> Result<f64> {
        check_batch(batch, mask, weights)?;
        let mut total = 0.0;
        for ((s, &m), &w) in batch.iter().zip(mask).zip(weights) {
            if !m {
                continue;
            }
            let p = self.forward(&s.sample)?;
            total += w * cross_entropy(&p, s.pseudo_label);
        }
        Ok(total / batch.len() as f64)
    }

    pub fn gradient(
        &self,
        batch: &[PseudoLabeledSample],
        mask: &[bool],
        weights: &[f64],
    ) -> Result<Gradient> {
        check_batch(batch, mask, weights)?;
        let b = batch.len() as f64;
        let mut grad = Gradient {
            weights: vec![0.0; self.k * self.d],
            bias: vec![0.0; self.k],
        };
        for ((s, &m), &w) in batch.iter().zip(mask).zip(weights) {
            if !m {
                continue;
            }
            if s.pseudo_label >= self.k {
                return Err(Error::LabelOutOfRange {
                    label: s.pseudo_label,
                    k: self.k,
                });
            }
            let p = self.forward(&s.sample)?;
            let scale = w / b;
            for (j, &pj) in p.as_slice().iter().enumerate() {
                let delta = scale * (pj - if j == s.pseudo_label { 1.0 } else { 0.0 });
                grad.bias[j] += delta;
                let row = &mut grad.weights[j * self.d..(j + 1) * self.d];
                for (g, x) in row.iter_mut().zip(&s.sample.features) {
                    *g += delta * x;
                }
            }
        }
        Ok(grad)
    }

    /// One SGD step. A fully masked batch leaves the parameters bit-identical.
    pub fn train_step(
        &self,
        batch: &[PseudoLabeledSample],
        mask: &[bool],
        weights: &[f64],
    ) -> Result<StudentParams> {
        let grad = self.gradient(batch, mask, weights)?;
        let mut next = self.clone();
        if !mask.iter().any(|&m| m) {
            return Ok(next);
        }
        for (p, g) in next.weights.iter_mut().zip(&grad.weights) {
            *p -= self.learning_rate * g;
        }
        for (p, g) in next.bias.iter_mut().zip(&grad.bias) {
            *p -= self.learning_rate * g;
        }
        Ok(next)
    }

    /// Accuracy and macro-F1 against gold labels.
    pub fn evaluate(&self, samples: &[Sample]) -> Result<(f64, f64)> {
        if samples.is_empty() {
            return Err(Error::Empty("evaluation set"));
        }
        let mut preds = Vec::with_capacity(samples.len());
        let mut golds = Vec::with_capacity(samples.len());
        for s in samples {
            golds.push(s.gold_or_err()?);
            preds.push(self.predict(s)?);
        }
        let acc = metrics::accuracy(&preds, &golds)?;
        let f1 = metrics::macro_f1(&preds, &golds, self.k)?;
        Ok((acc, f1))
    }

    /// Text checkpoint: a header line, a shape line, then K*d weights and K biases.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        writeln!(out, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}").unwrap();
        writeln!(out, "{} {} {}", self.k, self.d, self.learning_rate).unwrap();
        for row in self.weights.chunks_exact(self.d) {
            let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        let line: Vec<String> = self.bias.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
        let expected = format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}");
        if header.trim() != expected {
            return Err(perr(1, format!("expected header {expected:?}")));
        }
        let (_, shape) = lines.next().ok_or_else(|| perr(2, "missing shape".into()))?;
        let shape: Vec<&str> = shape.split_whitespace().collect();
        if shape.len() != 3 {
            return Err(perr(2, "shape line must be `K d learning_rate`".into()));
        }
        let k: usize = shape[0].parse().map_err(|e| perr(2, format!("K: {e}")))?;
        let d: usize = shape[1].parse().map_err(|e| perr(2, format!("d: {e}")))?;
        let lr: f64 = shape[2].parse().map_err(|e| perr(2, format!("lr: {e}")))?;
        let mut values = Vec::with_capacity(k * d + k);
        for (i, line) in lines {
            for tok in line.split_whitespace() {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|e| perr(i + 1, format!("{tok:?}: {e}")))?,
                );
            }
        }
        if values.len() != k * d + k {
            return Err(perr(
                0,
                format!("expected {} values, found {}", k * d + k, values.len()),
            ));
        }
        let bias = values.split_off(k * d);
        Self::from_parts(k, d, values, bias, lr)
    }
}

pub fn softmax(logits: &[f64]) -> ProbDist {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    ProbDist::from_softmax(exps.into_iter().map(|e| e / sum).collect())
}

/// -ln p[y], floored so a saturated softmax yields a large finite loss.
pub fn cross_entropy(p: &ProbDist, y: usize) -> f64 {
    -p.get(y).max(f64::MIN_POSITIVE).ln()
}

fn check_batch(batch: &[PseudoLabeledSample], mask: &[bool], weights: &[f64]) -> Result<()> {
    if mask.len() != batch.len() {
        return Err(Error::Length {
            what: "mask",
            expected: batch.len(),
            got: mask.len(),
        });
    }
    if weights.len() != batch.len() {
        return Err(Error::Length {
            what: "weights",
            expected: batch.len(),
            got: weights.len(),
        });
    }
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::Config(format!("sample weight must be nonnegative, got {w}")));
    }
    Ok(())
}
