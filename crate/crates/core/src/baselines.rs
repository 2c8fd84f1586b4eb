//! Reference selection rules and ablations sharing the adaptive selector's
//! per-batch mask interface.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::PseudoLabeledSample;
use crate::error::{Error, Result};
use crate::selector::{Indicators, SelectionResult};
use crate::teacher::sample_rng;

/// Ratio grid swept for the fixed-ratio baselines.
pub const RATIO_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Uniform random subset of each batch.
    Random,
    /// Every sample.
    NoDs,
    /// Lowest teacher entropy.
    EntropyScore,
    /// Highest student uncertainty.
    TopUncertainty,
    /// Teacher confidence at or above a fixed value.
    FixedConfThreshold,
    /// Adaptive selector, student indicator only.
    LlkdWoTc,
    /// Adaptive selector, teacher indicator only.
    LlkdWoSu,
    /// Adaptive selector with both indicators forced to 1.
    LlkdWoTcSu,
}

impl BaselineKind {
    pub fn uses_ratio(self) -> bool {
        matches!(self, Self::Random | Self::EntropyScore | Self::TopUncertainty)
    }

    /// Indicators for the adaptive-selector ablations.
    pub fn indicators(self) -> Option<Indicators> {
        match self {
            Self::LlkdWoTc => Some(Indicators {
                teacher: false,
                student: true,
            }),
            Self::LlkdWoSu => Some(Indicators {
                teacher: true,
                student: false,
            }),
            Self::LlkdWoTcSu => Some(Indicators {
                teacher: false,
                student: false,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub kind: BaselineKind,
    pub ratio: Option<f64>,
    pub threshold: Option<f64>,
    pub rng_seed: u64,
}

impl BaselineSpec {
    pub fn new(kind: BaselineKind) -> Self {
        Self {
            kind,
            ratio: None,
            threshold: None,
            rng_seed: 0,
        }
    }

    pub fn with_ratio(kind: BaselineKind, ratio: f64) -> Self {
        Self {
            ratio: Some(ratio),
            ..Self::new(kind)
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind.uses_ratio(), self.ratio) {
            (true, None) => {
                return Err(Error::Config(format!("{:?} needs a ratio", self.kind)));
            }
            (false, Some(_)) => {
                return Err(Error::Config(format!("{:?} takes no ratio", self.kind)));
            }
            (true, Some(r)) if !(r > 0.0 && r <= 1.0) => {
                return Err(Error::Config(format!("ratio must lie in (0, 1], got {r}")));
            }
            _ => {}
        }
        match (self.kind == BaselineKind::FixedConfThreshold, self.threshold) {
            (true, None) => Err(Error::Config("fixed_conf_threshold needs a threshold".into())),
            (false, Some(_)) => Err(Error::Config(format!("{:?} takes no threshold", self.kind))),
            (true, Some(t)) if !t.is_finite() => Err(Error::Config(format!("bad threshold {t}"))),
            _ => Ok(()),
        }
    }
}

/// ceil(ratio * B), robust to representation error such as 0.3 * 10.
pub fn ratio_count(ratio: f64, b: usize) -> usize {
    ((ratio * b as f64 - 1e-9).ceil().max(0.0) as usize).min(b)
}

/// Mask for one batch. `selection` is the adaptive selector's result on the
/// same batch and is required by the ablation kinds; `step` seeds the random
/// baseline's per-batch stream.
pub fn baseline_mask(
    spec: &BaselineSpec,
    batch: &[PseudoLabeledSample],
    uncertainties: &[f64],
    selection: Option<&SelectionResult>,
    step: u64,
) -> Result<Vec<bool>> {
    spec.validate()?;
    let b = batch.len();
    if uncertainties.len() != b {
        return Err(Error::Length {
            what: "uncertainties",
            expected: b,
            got: uncertainties.len(),
        });
    }
    let take = spec.ratio.map(|r| ratio_count(r, b)).unwrap_or(b);
    Ok(match spec.kind {
        BaselineKind::NoDs => vec![true; b],
        BaselineKind::Random => {
            let mut rng = sample_rng(spec.rng_seed, step);
            let mut mask = vec![false; b];
            for i in index::sample(&mut rng, b, take) {
                mask[i] = true;
            }
            mask
        }
        BaselineKind::EntropyScore => {
            let ent: Vec<f64> = batch.iter().map(|s| s.teacher_probs.entropy()).collect();
            lowest(&ent, take)
        }
        BaselineKind::TopUncertainty => {
            let neg: Vec<f64> = uncertainties.iter().map(|u| -u).collect();
            lowest(&neg, take)
        }
        BaselineKind::FixedConfThreshold => {
            let t = spec.threshold.expect("validated");
            batch.iter().map(|s| s.confidence >= t).collect()
        }
        kind @ (BaselineKind::LlkdWoTc | BaselineKind::LlkdWoSu | BaselineKind::LlkdWoTcSu) => {
            let sel = selection.ok_or_else(|| {
                Error::Config(format!("{kind:?} needs the adaptive selector's result"))
            })?;
            if sel.mask.len() != b {
                return Err(Error::Length {
                    what: "selection",
                    expected: b,
                    got: sel.mask.len(),
                });
            }
            let ind = kind.indicators().expect("ablation kind");
            sel.student_pass
                .iter()
                .zip(&sel.teacher_pass)
                .map(|(&s, &t)| (s || !ind.student) && (t || !ind.teacher))
                .collect()
        }
    })
}

/// Marks the `take` smallest keys, lowest index first on ties.
fn lowest(keys: &[f64], take: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    let mut mask = vec![false; keys.len()];
    for &i in order.iter().take(take) {
        mask[i] = true;
    }
    mask
}
