//! Training loop and experiment orchestration.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::baseline_mask;
use crate::config::{ExperimentConfig, MethodConfig, MethodKind, SweepGrid};
use crate::data::{DatasetSplit, PseudoLabeledSample};
use crate::error::{Error, Result};
use crate::metrics::{
    self, calibration_bins, efficiency_report, threshold_evaluation, CalibrationBin,
    EfficiencyReport, EvalRecord, RunLedger, StepRecord, ThresholdEvalRecord,
};
use crate::selector::{Indicators, Selector};
use crate::student::StudentParams;
use crate::synth;
use crate::teacher::{self, simulate_teacher};

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub ledger: RunLedger,
    /// Step after which the retained snapshot was taken.
    pub best_step: usize,
    pub best_val_acc: f64,
    pub best_val_f1: f64,
    pub test_acc: f64,
    pub test_f1: f64,
    pub efficiency: EfficiencyReport,
    /// Teacher confidence vs pseudo-label correctness on the train split;
    /// empty when train gold labels are unavailable.
    pub teacher_calibration: Vec<CalibrationBin>,
    pub params: StudentParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub runs: Vec<RunResult>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub acc_mean: f64,
    pub acc_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub val_acc_mean: f64,
    pub selected_mean: f64,
    pub fraction_mean: f64,
}

impl ExperimentResult {
    pub fn summary(&self) -> Summary {
        let col = |f: fn(&RunResult) -> f64| self.runs.iter().map(f).collect::<Vec<f64>>();
        let (acc_mean, acc_std) = metrics::mean_std(&col(|r| r.test_acc));
        let (f1_mean, f1_std) = metrics::mean_std(&col(|r| r.test_f1));
        Summary {
            acc_mean,
            acc_std,
            f1_mean,
            f1_std,
            val_acc_mean: metrics::mean_std(&col(|r| r.best_val_acc)).0,
            selected_mean: metrics::mean_std(&col(|r| r.efficiency.total_selected as f64)).0,
            fraction_mean: metrics::mean_std(&col(|r| r.efficiency.fraction)).0,
        }
    }
}

/// Builds the split for one seed: data, then teacher pseudo-labels. Seeds in
/// the config are offset by the run seed so each seed draws fresh data.
pub fn prepare_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<DatasetSplit> {
    let data = match (&cfg.data.synthetic, &cfg.data.path) {
        (Some(syn), _) => {
            let mut syn = syn.clone();
            syn.rng_seed = syn.rng_seed.wrapping_add(seed);
            synth::generate(&syn)?
        }
        (None, Some(path)) => synth::load(path)?,
        (None, None) => return Err(Error::Config("no data source".into())),
    };
    let k = data.labels.k();
    let train = match (&cfg.teacher.simulated, &cfg.teacher.path) {
        (Some(sim), _) => {
            let mut sim = *sim;
            sim.rng_seed = sim.rng_seed.wrapping_add(seed);
            simulate_teacher(&data.train, &sim, k)?
        }
        (None, Some(path)) => {
            let ext = teacher::ingest_external(path)?;
            if ext.labels.k() != k {
                return Err(Error::Config(format!(
                    "teacher file has K = {}, dataset has K = {k}",
                    ext.labels.k()
                )));
            }
            ext.attach(data.train)?
        }
        (None, None) => return Err(Error::Config("no teacher source".into())),
    };
    DatasetSplit::new(data.labels, train, data.val, data.test)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let runs = cfg
        .seeds
        .iter()
        .map(|&seed| {
            let split = prepare_dataset(cfg, seed)?;
            train_run(cfg, &split, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        runs,
    })
}

fn indicators_for(method: &MethodConfig) -> Indicators {
    method
        .kind
        .baseline_kind()
        .and_then(|k| k.indicators())
        .unwrap_or(Indicators::BOTH)
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// One training run on a prepared split. The adaptive selector's state is
/// updated on every batch for every method, so thresholds are logged even
/// when a baseline decides the mask.
pub fn train_run(cfg: &ExperimentConfig, split: &DatasetSplit, seed: u64) -> Result<RunResult> {
    let k = split.k();
    let b = cfg.student.batch_size;
    let weighted = cfg.method.kind == MethodKind::LlkdW;
    let baseline = cfg.method.baseline(seed);
    let indicators = indicators_for(&cfg.method);
    let has_train_gold = split.train.iter().all(|s| s.sample.gold.is_some());

    let mut params = StudentParams::zeros(k, split.dim, cfg.student.learning_rate)?;
    let mut selector = Selector::new(k, &cfg.selector)?;
    let mut ledger = RunLedger::default();
    let mut best: Option<(f64, f64, usize, StudentParams)> = None;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..split.train.len()).collect();
    let total_steps = cfg.student.epochs * split.train.len().div_ceil(b);

    for epoch in 0..cfg.student.epochs {
        order.shuffle(&mut shuffle_rng);
        let n_batches = order.len().div_ceil(b);
        for (bi, idx) in order.chunks(b).enumerate() {
            let step = ledger.steps.len();
            let batch: Vec<PseudoLabeledSample> = idx.iter().map(|&i| split.train[i].clone()).collect();
            let sel = selector.run_batch(&batch, &params, indicators, weighted)?;
            let mask = match &baseline {
                Some(spec) => baseline_mask(spec, &batch, &sel.uncertainties, Some(&sel), step as u64)?,
                None => sel.mask.clone(),
            };
            let weights = if weighted { sel.weights.clone() } else { vec![1.0; batch.len()] };

            let logged = (step + 1) % cfg.eval_every == 0;
            if logged && has_train_gold {
                let pl: Vec<usize> = batch.iter().map(|s| s.pseudo_label).collect();
                let gold: Vec<usize> = batch.iter().map(|s| s.sample.gold.expect("checked")).collect();
                let preds = batch
                    .iter()
                    .map(|s| params.predict(&s.sample))
                    .collect::<Result<Vec<_>>>()?;
                ledger.threshold_evals.push(ThresholdEvalRecord {
                    step,
                    combined: threshold_evaluation(&pl, &mask, &gold, &preds)?,
                    teacher_only: threshold_evaluation(&pl, &sel.teacher_pass, &gold, &preds)?,
                    student_only: threshold_evaluation(&pl, &sel.student_pass, &gold, &preds)?,
                });
            }

            let loss = params.batch_loss(&batch, &mask, &weights)?;
            if !loss.is_finite() {
                return Err(non_finite(step, &batch, &sel.uncertainties, &mask, loss));
            }
            params = params.train_step(&batch, &mask, &weights)?;
            if params.weights().iter().chain(params.bias()).any(|x| !x.is_finite()) {
                return Err(non_finite(step, &batch, &sel.uncertainties, &mask, loss));
            }

            let (umin, umax) = min_max(&sel.uncertainties);
            let (cmin, cmax) = min_max(&sel.confidences);
            ledger.push_step(StepRecord {
                step,
                epoch,
                batch_size: batch.len(),
                selected: mask.iter().filter(|&&m| m).count(),
                cum_selected: 0,
                cum_seen: 0,
                loss,
                uncertainty_min: umin,
                uncertainty_max: umax,
                confidence_min: cmin,
                confidence_max: cmax,
                student_tau: selector.student.tau,
                teacher_tau: selector.teacher.tau,
                student_local: selector.student.local.clone(),
                teacher_local: selector.teacher.local.clone(),
                student_thresholds: selector.student.thresholds(),
                teacher_thresholds: selector.teacher.thresholds(),
            });

            let end_of_epoch = bi + 1 == n_batches;
            if logged || end_of_epoch || step + 1 == total_steps {
                let (acc, f1) = params.evaluate(&split.val)?;
                ledger.evals.push(EvalRecord {
                    step,
                    val_acc: acc,
                    val_f1: f1,
                });
                let better = best
                    .as_ref()
                    .is_none_or(|(ba, bf, _, _)| acc > *ba || (acc == *ba && f1 > *bf));
                if better {
                    best = Some((acc, f1, step, params.clone()));
                }
            }
        }
    }

    let (best_val_acc, best_val_f1, best_step, best_params) =
        best.ok_or(Error::Empty("training produced no evaluation"))?;
    // test split is touched once, on the retained snapshot
    let (test_acc, test_f1) = best_params.evaluate(&split.test)?;
    let teacher_calibration = if has_train_gold {
        let conf: Vec<f64> = split.train.iter().map(|s| s.confidence).collect();
        let ok: Vec<bool> = split.train.iter().map(|s| s.is_correct().expect("checked")).collect();
        calibration_bins(&conf, &ok, 1.0 / k as f64, 1.0, cfg.calibration_bins)?
    } else {
        Vec::new()
    };
    Ok(RunResult {
        seed,
        efficiency: efficiency_report(&ledger),
        ledger,
        best_step,
        best_val_acc,
        best_val_f1,
        test_acc,
        test_f1,
        teacher_calibration,
        params: best_params,
    })
}

fn non_finite(step: usize, batch: &[PseudoLabeledSample], unc: &[f64], mask: &[bool], loss: f64) -> Error {
    let rows: Vec<String> = batch
        .iter()
        .zip(unc)
        .zip(mask)
        .map(|((s, u), m)| {
            format!(
                "id={} pl={} conf={} unc={} sel={}",
                s.sample.id, s.pseudo_label, s.confidence, u, *m as u8
            )
        })
        .collect();
    Error::NonFinite {
        step,
        detail: format!("loss {loss} (or parameters diverged after the update); batch: [{}]", rows.join("; ")),
    }
}

/// One executed grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: Vec<(&'static str, f64)>,
    pub val_acc: f64,
    pub test_acc: f64,
    pub test_f1: f64,
    pub fraction: f64,
    pub best: bool,
}

/// Cartesian product of the grid (empty axes keep the base value).
pub fn grid_points(base: &ExperimentConfig, grid: &SweepGrid) -> Vec<(Vec<(&'static str, f64)>, ExperimentConfig)> {
    type Setter = fn(&mut ExperimentConfig, f64);
    let axes: [(&'static str, &Vec<f64>, Setter); 7] = [
        ("lambda_s", &grid.lambda_s, |c, v| c.selector.lambda_s = v),
        ("lambda_t", &grid.lambda_t, |c, v| c.selector.lambda_t = v),
        ("beta_s1", &grid.beta_s1, |c, v| c.selector.beta_s1 = v),
        ("beta_s2", &grid.beta_s2, |c, v| c.selector.beta_s2 = v),
        ("beta_t1", &grid.beta_t1, |c, v| c.selector.beta_t1 = v),
        ("beta_t2", &grid.beta_t2, |c, v| c.selector.beta_t2 = v),
        ("ratio", &grid.ratio, |c, v| c.method.ratio = Some(v)),
    ];
    let mut points = vec![(Vec::new(), base.clone())];
    for (name, values, set) in axes {
        if values.is_empty() {
            continue;
        }
        points = points
            .into_iter()
            .flat_map(|(desc, cfg)| {
                values.iter().map(move |&v| {
                    let mut c = cfg.clone();
                    set(&mut c, v);
                    let mut d = desc.clone();
                    d.push((name, v));
                    (d, c)
                })
            })
            .collect();
    }
    points
}

/// Runs every grid point and flags the row with the highest mean validation
/// accuracy (first one on ties).
pub fn sweep(base: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    let points = grid_points(base, grid);
    if points.is_empty() {
        return Err(Error::Empty("sweep grid"));
    }
    let mut rows = points
        .into_iter()
        .map(|(point, cfg)| {
            let s = run_experiment(&cfg)?.summary();
            Ok(SweepRow {
                point,
                val_acc: s.val_acc_mean,
                test_acc: s.acc_mean,
                test_f1: s.f1_mean,
                fraction: s.fraction_mean,
                best: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.val_acc > rows[best].val_acc {
            best = i;
        }
    }
    rows[best].best = true;
    Ok(rows)
}
