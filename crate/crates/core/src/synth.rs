//! Seeded Gaussian-cluster classification data with known gold labels.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{LabelSet, Sample};
use crate::error::{Error, Result};

const MAX_PLACEMENT_ATTEMPTS: usize = 200;
/// Reject direction sets whose closest pair of unit vectors is nearer than
/// this; otherwise the scaled centers would sit far from the origin.
const MIN_UNIT_GAP: f64 = 0.25;
const DUMP_MAGIC: &str = "# llkd-dataset v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub k: usize,
    pub d: usize,
    pub n_train: usize,
    #[serde(default = "default_val")]
    pub n_val: usize,
    pub n_test: usize,
    pub class_separation: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// Optional per-class proportions; balanced when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_proportions: Option<Vec<f64>>,
}

fn default_val() -> usize {
    500
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.d < 2 {
            return Err(Error::Config(format!("need K >= 2 and d >= 2, got K={}, d={}", self.k, self.d)));
        }
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return Err(Error::Config("split sizes must all be >= 1".into()));
        }
        if !(self.class_separation > 0.0 && self.class_separation.is_finite()) {
            return Err(Error::Config(format!(
                "class_separation must be positive, got {}",
                self.class_separation
            )));
        }
        if let Some(p) = &self.class_proportions {
            if p.len() != self.k || p.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return Err(Error::Config(format!(
                    "class_proportions needs {} positive entries",
                    self.k
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub labels: LabelSet,
    pub dim: usize,
    pub seed: u64,
    /// Gold labels here are for evaluation only.
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
    /// Empty when loaded from a dump.
    pub centers: Vec<Vec<f64>>,
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let centers = place_centers(cfg.k, cfg.d, cfg.class_separation, &mut rng)?;
    let mut next_id = 0u64;
    let mut split = |n: usize, rng: &mut ChaCha8Rng| -> Vec<Sample> {
        let mut labels = class_sequence(n, cfg.k, cfg.class_proportions.as_deref());
        labels.shuffle(rng);
        labels
            .into_iter()
            .map(|y| {
                let x = centers[y]
                    .iter()
                    .map(|c| { let z: f64 = StandardNormal.sample(rng); c + z })
                    .collect::<Vec<f64>>();
                let s = Sample::new(next_id, x, Some(y));
                next_id += 1;
                s
            })
            .collect()
    };
    let train = split(cfg.n_train, &mut rng);
    let val = split(cfg.n_val, &mut rng);
    let test = split(cfg.n_test, &mut rng);
    Ok(SynthData {
        labels: LabelSet::numbered(cfg.k)?,
        dim: cfg.d,
        seed: cfg.rng_seed,
        train,
        val,
        test,
        centers,
    })
}

/// Random directions scaled so the closest pair of centers sits exactly
/// `separation` apart.
fn place_centers(k: usize, d: usize, separation: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let dirs: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / norm).collect()
            })
            .collect();
        let mut min_gap = f64::INFINITY;
        for i in 0..k {
            for j in i + 1..k {
                min_gap = min_gap.min(dist(&dirs[i], &dirs[j]));
            }
        }
        if min_gap >= MIN_UNIT_GAP {
            let scale = separation / min_gap;
            return Ok(dirs
                .into_iter()
                .map(|v| v.into_iter().map(|x| x * scale).collect())
                .collect());
        }
    }
    Err(Error::Infeasible(MAX_PLACEMENT_ATTEMPTS))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Round-robin labels for a balanced split, or largest-remainder counts for
/// explicit proportions.
fn class_sequence(n: usize, k: usize, proportions: Option<&[f64]>) -> Vec<usize> {
    let Some(p) = proportions else {
        return (0..n).map(|i| i % k).collect();
    };
    let total: f64 = p.iter().sum();
    let exact: Vec<f64> = p.iter().map(|x| x / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .partial_cmp(&(exact[a] - exact[a].floor()))
            .unwrap()
            .then(a.cmp(&b))
    });
    let short = n - counts.iter().sum::<usize>();
    for &c in order.iter().take(short) {
        counts[c] += 1;
    }
    counts
        .iter()
        .enumerate()
        .flat_map(|(c, &m)| std::iter::repeat_n(c, m))
        .collect()
}

/// Writes a comment header with (K, d, split sizes, seed), a column header,
/// then one `id,gold,x0..` row per sample in train, val, test order.
pub fn dump(data: &SynthData, path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{DUMP_MAGIC}").unwrap();
    writeln!(
        out,
        "# k={} d={} n_train={} n_val={} n_test={} seed={}",
        data.labels.k(),
        data.dim,
        data.train.len(),
        data.val.len(),
        data.test.len(),
        data.seed
    )
    .unwrap();
    let cols: Vec<String> = (0..data.dim).map(|i| format!("x{i}")).collect();
    writeln!(out, "id,gold,{}", cols.join(",")).unwrap();
    for s in data.train.iter().chain(&data.val).chain(&data.test) {
        write!(out, "{},{}", s.id, s.gold.map_or(String::new(), |g| g.to_string())).unwrap();
        for x in &s.features {
            write!(out, ",{x}").unwrap();
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SynthData> {
    let text = fs::read_to_string(path)?;
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == DUMP_MAGIC => {}
        _ => return Err(perr(1, format!("expected {DUMP_MAGIC:?}"))),
    }
    let (hn, header) = lines.next().ok_or_else(|| perr(2, "missing header".into()))?;
    let mut fields = std::collections::HashMap::new();
    for tok in header.trim_start_matches('#').split_whitespace() {
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| perr(hn, format!("bad header field {tok:?}")))?;
        let val: u64 = val.parse().map_err(|e| perr(hn, format!("{key}: {e}")))?;
        fields.insert(key.to_string(), val);
    }
    let get = |key: &str| {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| perr(hn, format!("header lacks {key}")))
    };
    let (k, d) = (get("k")? as usize, get("d")? as usize);
    let sizes = [get("n_train")? as usize, get("n_val")? as usize, get("n_test")? as usize];
    let seed = get("seed")?;
    let _ = lines.next().ok_or_else(|| perr(3, "missing column header".into()))?;

    let mut samples = Vec::with_capacity(sizes.iter().sum());
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != d + 2 {
            return Err(perr(n, format!("expected {} columns, got {}", d + 2, toks.len())));
        }
        let id: u64 = toks[0].parse().map_err(|e| perr(n, format!("id: {e}")))?;
        let gold = if toks[1].is_empty() {
            None
        } else {
            let g: usize = toks[1].parse().map_err(|e| perr(n, format!("gold: {e}")))?;
            if g >= k {
                return Err(perr(n, format!("gold label {g} out of range for K = {k}")));
            }
            Some(g)
        };
        let features = toks[2..]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|e| perr(n, format!("feature {t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        samples.push(Sample::new(id, features, gold));
    }
    if samples.len() != sizes.iter().sum::<usize>() {
        return Err(perr(
            hn,
            format!("header promises {} rows, found {}", sizes.iter().sum::<usize>(), samples.len()),
        ));
    }
    let test = samples.split_off(sizes[0] + sizes[1]);
    let val = samples.split_off(sizes[0]);
    Ok(SynthData {
        labels: LabelSet::numbered(k)?,
        dim: d,
        seed,
        train: samples,
        val,
        test,
        centers: Vec::new(),
    })
}
