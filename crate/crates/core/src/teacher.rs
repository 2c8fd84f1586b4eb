//! Pseudo-label sources: a simulated teacher whose confidence predicts its own
//! correctness to a controllable degree, and ingestion of externally computed
//! teacher probability vectors.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::data::{LabelSet, ProbDist, PseudoLabeledSample, Sample};
use crate::error::{Error, Result};

const QUADRATURE_POINTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulatedTeacherConfig {
    pub base_accuracy: f64,
    #[serde(default)]
    pub calibration_strength: f64,
    /// Beta(a, b) shape of the confidence draw before rescaling to [1/K, 1].
    #[serde(default = "default_shape")]
    pub confidence_shape: (f64, f64),
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_shape() -> (f64, f64) {
    (4.0, 2.0)
}

impl SimulatedTeacherConfig {
    pub fn validate(&self, k: usize) -> Result<()> {
        let floor = 1.0 / k as f64;
        if !(self.base_accuracy > floor && self.base_accuracy <= 1.0) {
            return Err(Error::Config(format!(
                "base_accuracy must lie in (1/K, 1] = ({floor}, 1], got {}",
                self.base_accuracy
            )));
        }
        if !(self.calibration_strength >= 0.0 && self.calibration_strength.is_finite()) {
            return Err(Error::Config(format!(
                "calibration_strength must be finite and >= 0, got {}",
                self.calibration_strength
            )));
        }
        let (a, b) = self.confidence_shape;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Config(format!("confidence_shape must be positive, got ({a}, {b})")));
        }
        Ok(())
    }
}

/// Probability that the teacher is right given its confidence:
/// `logistic(shift + strength * z)`, where `z` is the standardized position of
/// the confidence within its Beta draw distribution and `shift` is solved so
/// the average over that distribution equals the base accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectnessLink {
    k: usize,
    mean_x: f64,
    sd_x: f64,
    strength: f64,
    /// `None` when the teacher is always right.
    shift: Option<f64>,
}

impl CorrectnessLink {
    pub fn solve(cfg: &SimulatedTeacherConfig, k: usize) -> Result<Self> {
        cfg.validate(k)?;
        let (a, b) = cfg.confidence_shape;
        let mean_x = a / (a + b);
        let sd_x = (a * b / ((a + b).powi(2) * (a + b + 1.0))).sqrt();
        let mut link = Self {
            k,
            mean_x,
            sd_x,
            strength: cfg.calibration_strength,
            shift: None,
        };
        if cfg.base_accuracy >= 1.0 {
            return Ok(link);
        }
        let nodes = beta_quadrature(a, b, QUADRATURE_POINTS);
        let expected = |shift: f64| -> f64 {
            nodes
                .iter()
                .map(|&(x, w)| w * logistic(shift + link.strength * (x - mean_x) / sd_x))
                .sum()
        };
        // expected() is increasing in shift
        let (mut lo, mut hi) = (-60.0, 60.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if expected(mid) < cfg.base_accuracy {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        link.shift = Some(0.5 * (lo + hi));
        Ok(link)
    }

    /// Maps a unit-interval draw onto [1/K, 1].
    pub fn confidence_from_unit(&self, x: f64) -> f64 {
        let floor = 1.0 / self.k as f64;
        floor + (1.0 - floor) * x
    }

    pub fn p_correct(&self, confidence: f64) -> f64 {
        let Some(shift) = self.shift else {
            return 1.0;
        };
        let floor = 1.0 / self.k as f64;
        let x = (confidence - floor) / (1.0 - floor);
        logistic(shift + self.strength * (x - self.mean_x) / self.sd_x)
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Midpoint nodes on (0, 1) weighted by the Beta(a, b) density, normalized to
/// sum to 1.
fn beta_quadrature(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let ln_norm = statrs::function::beta::ln_beta(a, b);
    let h = 1.0 / n as f64;
    let mut nodes: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            let ln_pdf = (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_norm;
            (x, ln_pdf.exp() * h)
        })
        .collect();
    let total: f64 = nodes.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut nodes {
        *w /= total;
    }
    nodes
}

/// Mass `confidence` on `label`, the rest spread evenly over the other labels.
pub fn teacher_probs(confidence: f64, label: usize, k: usize) -> Result<ProbDist> {
    if label >= k {
        return Err(Error::LabelOutOfRange { label, k });
    }
    let rest = (1.0 - confidence) / (k - 1) as f64;
    let mut p = vec![rest; k];
    p[label] = confidence;
    ProbDist::new(p)
}

/// Per-sample RNG stream derived from (seed, sample id).
pub(crate) fn sample_rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn simulate_teacher(
    samples: &[Sample],
    cfg: &SimulatedTeacherConfig,
    k: usize,
) -> Result<Vec<PseudoLabeledSample>> {
    let link = CorrectnessLink::solve(cfg, k)?;
    let (a, b) = cfg.confidence_shape;
    let beta = Beta::new(a, b).map_err(|e| Error::Config(format!("confidence_shape: {e}")))?;
    // keep the chosen label a strict maximum
    let floor = 1.0 / k as f64;
    let min_conf = floor + 1e-9;

    samples
        .iter()
        .map(|s| {
            let gold = s.gold_or_err()?;
            if gold >= k {
                return Err(Error::LabelOutOfRange { label: gold, k });
            }
            let mut rng = sample_rng(cfg.rng_seed, s.id);
            let c = link.confidence_from_unit(beta.sample(&mut rng)).clamp(min_conf, 1.0);
            let label = if rng.random::<f64>() < link.p_correct(c) {
                gold
            } else {
                let r = rng.random_range(0..k - 1);
                if r >= gold { r + 1 } else { r }
            };
            let probs = teacher_probs(c, label, k)?;
            let out = PseudoLabeledSample::new(s.clone(), probs);
            debug_assert_eq!(out.pseudo_label, label);
            Ok(out)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExternalHeader {
    k: usize,
    labels: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExternalRecord {
    id: u64,
    probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pseudo_label: Option<usize>,
}

/// One validated teacher output.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherRecord {
    pub id: u64,
    pub probs: ProbDist,
    pub pseudo_label: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalTeacher {
    pub labels: LabelSet,
    pub records: Vec<TeacherRecord>,
}

impl ExternalTeacher {
    /// Joins teacher outputs onto train samples by id. Every sample needs a
    /// record.
    pub fn attach(&self, samples: Vec<Sample>) -> Result<Vec<PseudoLabeledSample>> {
        let by_id: HashMap<u64, &TeacherRecord> = self.records.iter().map(|r| (r.id, r)).collect();
        samples
            .into_iter()
            .map(|s| {
                let rec = by_id
                    .get(&s.id)
                    .ok_or_else(|| Error::Config(format!("no teacher record for sample id {}", s.id)))?;
                Ok(PseudoLabeledSample::new(s, rec.probs.clone()))
            })
            .collect()
    }
}

/// Reads newline-delimited JSON: a header `{"k": K, "labels": [...]}` followed
/// by one `{"id", "probs", "pseudo_label"?}` object per line. Blank lines are
/// skipped.
pub fn ingest_external(path: &Path) -> Result<ExternalTeacher> {
    let text = fs::read_to_string(path)?;
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| perr(1, "missing header record".into()))?;
    let header: ExternalHeader =
        serde_json::from_str(header).map_err(|e| perr(hline, format!("malformed header: {e}")))?;
    let labels = LabelSet::new(header.labels).map_err(|e| perr(hline, e.to_string()))?;
    if labels.k() != header.k {
        return Err(perr(
            hline,
            format!("header declares K = {} but lists {} labels", header.k, labels.k()),
        ));
    }
    let k = header.k;
    let mut seen = HashMap::new();
    let mut records = Vec::new();
    for (n, line) in lines {
        let rec: ExternalRecord =
            serde_json::from_str(line).map_err(|e| perr(n, format!("malformed record: {e}")))?;
        if rec.probs.len() != k {
            return Err(perr(n, format!("expected {k} probabilities, got {}", rec.probs.len())));
        }
        let probs = ProbDist::new(rec.probs).map_err(|e| perr(n, e.to_string()))?;
        let pseudo_label = probs.argmax();
        if let Some(stored) = rec.pseudo_label {
            if stored != pseudo_label {
                return Err(perr(
                    n,
                    format!("label/argmax mismatch: stored {stored}, argmax {pseudo_label}"),
                ));
            }
        }
        if let Some(prev) = seen.insert(rec.id, n) {
            return Err(perr(n, format!("duplicate id {} (first on line {prev})", rec.id)));
        }
        records.push(TeacherRecord {
            id: rec.id,
            confidence: probs.confidence(),
            pseudo_label,
            probs,
        });
    }
    Ok(ExternalTeacher { labels, records })
}

/// Writes pseudo-labeled samples in the format [`ingest_external`] reads.
pub fn write_external(path: &Path, labels: &LabelSet, samples: &[PseudoLabeledSample]) -> Result<()> {
    let mut out = Vec::new();
    let header = ExternalHeader {
        k: labels.k(),
        labels: labels.names().to_vec(),
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("serializable"))?;
    for s in samples {
        let rec = ExternalRecord {
            id: s.sample.id,
            probs: s.teacher_probs.as_slice().to_vec(),
            pseudo_label: Some(s.pseudo_label),
        };
        writeln!(out, "{}", serde_json::to_string(&rec).expect("serializable"))?;
    }
    fs::write(path, out)?;
    Ok(())
}
