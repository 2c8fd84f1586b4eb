//! Samples, label sets, probability vectors and the elementary signals computed
//! from them (pseudo-label, confidence, entropy).

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Absolute tolerance on the sum of a probability vector.
pub const PROB_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::InvalidLabels(format!(
                "need at least 2 labels, got {}",
                names.len()
            )));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::InvalidLabels(format!("duplicate label {n:?}")));
            }
        }
        Ok(Self { names })
    }

    /// Labels named `class_0 .. class_{k-1}`.
    pub fn numbered(k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| format!("class_{i}")).collect())
    }

    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// A validated probability distribution over K labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist(Vec<f64>);

impl ProbDist {
    /// Rejects negative or non-finite entries and sums farther than
    /// [`PROB_SUM_TOL`] from 1. Never renormalizes.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidProbs(format!(
                "need at least 2 entries, got {}",
                probs.len()
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidProbs(format!("entry {i} is {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidProbs(format!(
                "sum out of tolerance: {sum}"
            )));
        }
        Ok(Self(probs))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn argmax(&self) -> usize {
        argmax_label(self)
    }

    pub fn confidence(&self) -> f64 {
        confidence(self)
    }

    pub fn entropy(&self) -> f64 {
        entropy(self)
    }

    /// Used by the softmax which guarantees the invariants by construction.
    pub(crate) fn from_softmax(probs: Vec<f64>) -> Self {
        Self(probs)
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax_label(p: &ProbDist) -> usize {
    argmax(p.as_slice())
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn confidence(p: &ProbDist) -> f64 {
    p.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Shannon entropy in nats, with 0 ln 0 = 0.
pub fn entropy(p: &ProbDist) -> f64 {
    let h: f64 = p
        .as_slice()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum();
    // rounding can push the sum a hair outside [0, ln K]
    h.clamp(0.0, (p.k() as f64).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub features: Vec<f64>,
    pub gold: Option<usize>,
}

impl Sample {
    pub fn new(id: u64, features: Vec<f64>, gold: Option<usize>) -> Self {
        Self { id, features, gold }
    }

    pub fn gold_or_err(&self) -> Result<usize> {
        self.gold.ok_or(Error::MissingGold(self.id))
    }
}

/// A train sample with the teacher's output attached.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabeledSample {
    pub sample: Sample,
    pub pseudo_label: usize,
    pub teacher_probs: ProbDist,
    pub confidence: f64,
}

impl PseudoLabeledSample {
    /// Derives the pseudo-label and confidence from the teacher probabilities.
    pub fn new(sample: Sample, teacher_probs: ProbDist) -> Self {
        let pseudo_label = teacher_probs.argmax();
        let confidence = teacher_probs.confidence();
        Self {
            sample,
            pseudo_label,
            teacher_probs,
            confidence,
        }
    }

    /// Whether the pseudo-label agrees with the (evaluation-only) gold label.
    pub fn is_correct(&self) -> Option<bool> {
        self.sample.gold.map(|g| g == self.pseudo_label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub labels: LabelSet,
    pub dim: usize,
    pub train: Vec<PseudoLabeledSample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl DatasetSplit {
    pub fn new(
        labels: LabelSet,
        train: Vec<PseudoLabeledSample>,
        val: Vec<Sample>,
        test: Vec<Sample>,
    ) -> Result<Self> {
        let dim = train
            .first()
            .map(|s| s.sample.features.len())
            .or_else(|| val.first().map(|s| s.features.len()))
            .ok_or(Error::Empty("dataset has no train or val samples"))?;
        let k = labels.k();
        let mut ids = HashSet::new();
        let all = train
            .iter()
            .map(|p| {
                if p.teacher_probs.k() != k {
                    return Err(Error::Dimension {
                        expected: k,
                        got: p.teacher_probs.k(),
                    });
                }
                Ok(&p.sample)
            })
            .chain(val.iter().chain(test.iter()).map(Ok));
        for s in all {
            let s = s?;
            if s.features.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: s.features.len(),
                });
            }
            if let Some(g) = s.gold {
                if g >= k {
                    return Err(Error::LabelOutOfRange { label: g, k });
                }
            }
            if !ids.insert(s.id) {
                return Err(Error::Config(format!(
                    "sample id {} appears more than once",
                    s.id
                )));
            }
        }
        for s in val.iter().chain(test.iter()) {
            s.gold_or_err()?;
        }
        Ok(Self {
            labels,
            dim,
            train,
            val,
            test,
        })
    }

    pub fn k(&self) -> usize {
        self.labels.k()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pd(v: &[f64]) -> ProbDist {
        ProbDist::new(v.to_vec()).unwrap()
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_label(&pd(&[0.1, 0.7, 0.2])), 1);
        assert_eq!(argmax_label(&pd(&[0.5, 0.5])), 0);
        assert_eq!(argmax_label(&pd(&[0.25; 4])), 0);
    }

    #[test]
    fn confidence_examples() {
        assert_eq!(confidence(&pd(&[0.1, 0.7, 0.2])), 0.7);
        assert_eq!(confidence(&pd(&[0.25; 4])), 0.25);
        assert_eq!(confidence(&pd(&[1.0, 0.0, 0.0])), 1.0);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&pd(&[1.0, 0.0, 0.0])), 0.0);
        assert!((entropy(&pd(&[0.25; 4])) - 4f64.ln()).abs() < 1e-12);
        assert!(entropy(&pd(&[0.2; 5])) <= 5f64.ln());
        // -(0.7 ln 0.7 + 0.2 ln 0.2 + 0.1 ln 0.1), evaluated by hand:
        // 0.7 * 0.356675 + 0.2 * 1.609438 + 0.1 * 2.302585 = 0.801819
        assert!((entropy(&pd(&[0.7, 0.2, 0.1])) - 0.801819).abs() < 1e-6);
    }

    #[test]
    fn probdist_rejects_bad_input() {
        let err = ProbDist::new(vec![0.5, 0.6]).unwrap_err();
        assert!(err.to_string().contains("sum out of tolerance"));
        assert!(ProbDist::new(vec![1.2, -0.2]).is_err());
        assert!(ProbDist::new(vec![f64::NAN, 1.0]).is_err());
        assert!(ProbDist::new(vec![1.0]).is_err());
        // within tolerance is accepted as-is
        let p = ProbDist::new(vec![0.5, 0.5 + 5e-7]).unwrap();
        assert_eq!(p.get(1), 0.5 + 5e-7);
    }

    #[test]
    fn label_set_invariants() {
        assert!(LabelSet::new(vec!["a".into()]).is_err());
        assert!(LabelSet::new(vec!["a".into(), "a".into()]).is_err());
        assert_eq!(LabelSet::numbered(3).unwrap().k(), 3);
    }

    #[test]
    fn split_rejects_duplicate_ids_and_missing_gold() {
        let labels = LabelSet::numbered(2).unwrap();
        let tr = PseudoLabeledSample::new(Sample::new(0, vec![0.0], None), pd(&[0.4, 0.6]));
        let dup = DatasetSplit::new(
            labels.clone(),
            vec![tr.clone()],
            vec![Sample::new(0, vec![1.0], Some(0))],
            vec![],
        );
        assert!(dup.is_err());
        let nogold = DatasetSplit::new(
            labels.clone(),
            vec![tr.clone()],
            vec![Sample::new(1, vec![1.0], None)],
            vec![],
        );
        assert!(matches!(nogold, Err(Error::MissingGold(1))));
        let ok = DatasetSplit::new(
            labels,
            vec![tr],
            vec![Sample::new(1, vec![1.0], Some(1))],
            vec![Sample::new(2, vec![1.0], Some(0))],
        )
        .unwrap();
        assert_eq!(ok.train[0].pseudo_label, 1);
        assert_eq!(ok.train[0].confidence, 0.6);
    }

    fn arb_probs() -> impl Strategy<Value = Vec<f64>> {
        (2usize..8).prop_flat_map(|k| proptest::collection::vec(0.0f64..1.0, k)).prop_filter_map(
            "nonzero mass",
            |raw| {
                let s: f64 = raw.iter().sum();
                (s > 1e-9).then(|| raw.iter().map(|x| x / s).collect())
            },
        )
    }

    proptest! {
        #[test]
        fn signal_bounds(v in arb_probs()) {
            let k = v.len() as f64;
            let p = ProbDist::new(v).unwrap();
            let h = entropy(&p);
            prop_assert!(h >= 0.0 && h <= k.ln() + 1e-12);
            let c = confidence(&p);
            prop_assert!(c >= 1.0 / k - 1e-12 && c <= 1.0);
            prop_assert_eq!(p.get(argmax_label(&p)), c);
        }

        #[test]
        fn argmax_scale_invariant(v in arb_probs(), c in 0.01f64..100.0) {
            let p = ProbDist::new(v.clone()).unwrap();
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            let s: f64 = scaled.iter().sum();
            let q = ProbDist::new(scaled.iter().map(|x| x / s).collect()).unwrap();
            // rescaling can merge near-ties; only compare when the max is clear
            let mut sorted = v.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            prop_assume!(sorted[0] - sorted[1] > 1e-9);
            prop_assert_eq!(argmax_label(&p), argmax_label(&q));
        }
    }
}
