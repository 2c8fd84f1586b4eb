//! Acceptance criteria. Runs as a plain binary so every criterion prints one
//! PASS/FAIL line; exits nonzero if any criterion fails.

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use llkd::baselines::{baseline_mask, BaselineKind, BaselineSpec};
use llkd::config::{ExperimentConfig, MethodConfig, MethodKind};
use llkd::data::{DatasetSplit, LabelSet, ProbDist, PseudoLabeledSample, Sample};
use llkd::metrics::{calibration_bins, efficiency_report, macro_f1, RunLedger, StepRecord};
use llkd::report;
use llkd::runner::{prepare_dataset, run_experiment, train_run, ExperimentResult};
use llkd::selector::{Indicators, Selector, SelectorConfig, ThresholdState};
use llkd::student::StudentParams;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

// ---------------------------------------------------------------------------
// Scalar-loop reference of the threshold updates, selection and weights.

#[derive(Clone)]
struct RefState {
    tau: f64,
    local: Vec<f64>,
    lambda: f64,
    b1: f64,
    b2: f64,
}

impl RefState {
    fn new(k: usize, lambda: f64, b1: f64, b2: f64) -> Self {
        Self { tau: 0.0, local: vec![0.0; k], lambda, b1, b2 }
    }

    fn step(&mut self, signals: &[f64], labels: &[usize]) {
        let b = signals.len();
        let mut sum = 0.0;
        for i in 0..b {
            sum += signals[i];
        }
        for y in 0..self.local.len() {
            let mut num = 0.0;
            let mut den = 0usize;
            for i in 0..b {
                if labels[i] == y {
                    num += signals[i];
                    den += 1;
                }
            }
            if den > 0 {
                self.local[y] = self.lambda * self.local[y] + (1.0 - self.lambda) * (num / den as f64);
            }
        }
        self.tau = self.lambda * self.tau + (1.0 - self.lambda) * (sum / b as f64);
    }

    fn threshold(&self, y: usize) -> f64 {
        let mut max = 0.0f64;
        for &v in &self.local {
            if v > max {
                max = v;
            }
        }
        let norm = if max > 0.0 { self.local[y] / max } else { 0.0 };
        norm.powf(self.b1) * self.tau.powf(self.b2)
    }
}

fn ref_weights(conf: &[f64], unc: &[f64]) -> Vec<f64> {
    let b = conf.len();
    let (mut sc, mut su) = (0.0, 0.0);
    for i in 0..b {
        sc += conf[i];
        su += unc[i];
    }
    (0..b)
        .map(|i| {
            let fc = if sc > 0.0 { conf[i] / sc } else { 1.0 / b as f64 };
            let fu = if su > 0.0 { unc[i] / su } else { 1.0 / b as f64 };
            fc + fu
        })
        .collect()
}

fn random_batch(rng: &mut ChaCha8Rng, k: usize, b: usize, d: usize) -> Vec<PseudoLabeledSample> {
    (0..b)
        .map(|i| {
            let label = rng.random_range(0..k);
            let c = 1.0 / k as f64 + 1e-6 + rng.random::<f64>() * (1.0 - 1.0 / k as f64 - 1e-6);
            let mut p = vec![(1.0 - c) / (k - 1) as f64; k];
            p[label] = c;
            let x = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            PseudoLabeledSample::new(Sample::new(i as u64, x, None), ProbDist::new(p).unwrap())
        })
        .collect()
}

fn c1_selector_oracle() -> Outcome {
    let start = Instant::now();
    let (k, b, batches, traces) = (3usize, 8usize, 5usize, 200usize);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0usize;
    for trace in 0..traces {
        let cfg = SelectorConfig {
            lambda_s: rng.random_range(0.05..0.95),
            lambda_t: rng.random_range(0.05..0.95),
            beta_s1: rng.random_range(0..2) as f64,
            beta_s2: rng.random_range(0..2) as f64,
            beta_t1: rng.random_range(0..2) as f64,
            beta_t2: rng.random_range(0..2) as f64,
            ..Default::default()
        };
        let mut sel = Selector::new(k, &cfg).unwrap();
        let mut rs = RefState::new(k, cfg.lambda_s, cfg.beta_s1, cfg.beta_s2);
        let mut rt = RefState::new(k, cfg.lambda_t, cfg.beta_t1, cfg.beta_t2);
        // half the traces draw uncertainties from a random student, half at random
        let params = StudentParams::from_parts(
            k,
            4,
            (0..k * 4).map(|_| rng.random_range(-1.0..1.0)).collect(),
            (0..k).map(|_| rng.random_range(-1.0..1.0)).collect(),
            0.1,
        )
        .unwrap();
        for _ in 0..batches {
            let batch = random_batch(&mut rng, k, b, 4);
            let result = if trace % 2 == 0 {
                let unc: Vec<f64> = (0..b).map(|_| rng.random::<f64>() * (k as f64).ln()).collect();
                sel.select_with_signals(&batch, unc, Indicators::BOTH, true).unwrap()
            } else {
                sel.run_batch(&batch, &params, Indicators::BOTH, true).unwrap()
            };
            let unc = &result.uncertainties;
            if trace % 2 == 1 {
                for (s, u) in batch.iter().zip(unc) {
                    if params.uncertainty(&s.sample).unwrap() != *u {
                        mismatches += 1;
                    }
                }
            }
            let conf: Vec<f64> = batch.iter().map(|s| s.confidence).collect();
            let labels: Vec<usize> = batch.iter().map(|s| s.pseudo_label).collect();
            rs.step(unc, &labels);
            rt.step(&conf, &labels);
            let w = ref_weights(&conf, unc);
            for i in 0..b {
                let ts = rs.threshold(labels[i]);
                let tt = rt.threshold(labels[i]);
                let m = unc[i] >= ts && conf[i] >= tt;
                if result.student_thresholds_used[i] != ts
                    || result.teacher_thresholds_used[i] != tt
                    || result.mask[i] != m
                    || result.weights[i] != w[i]
                {
                    mismatches += 1;
                }
            }
            if sel.student.tau != rs.tau || sel.teacher.tau != rt.tau || sel.student.local != rs.local || sel.teacher.local != rt.local {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("{traces} traces bit-identical to scalar reference in {elapsed:.2?}"),
        format!("{mismatches} mismatches, {elapsed:.2?}"),
    )
}

fn c2_ema_closed_form() -> Outcome {
    let mut worst = 0.0f64;
    for &v in &[0.1, 0.5, 1.0, 1.6094379124341003] {
        let mut s = ThresholdState::new(3, 0.9, 1.0, 1.0).unwrap();
        for t in 1..=50 {
            s.update(&[v; 4], &[0, 1, 2, 0]).unwrap();
            let err = ((s.tau - v).abs() - 0.9f64.powi(t) * v).abs();
            worst = worst.max(err);
            for &l in &s.local {
                worst = worst.max(((l - v).abs() - 0.9f64.powi(t) * v).abs());
            }
        }
    }
    check(worst <= 1e-12, format!("max deviation {worst:e} <= 1e-12"), format!("max deviation {worst:e}"))
}

fn c3_gradient_check() -> Outcome {
    let (k, d, b) = (3usize, 5usize, 4usize);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let params = StudentParams::from_parts(
            k,
            d,
            (0..k * d).map(|_| rng.random_range(-1.0..1.0)).collect(),
            (0..k).map(|_| rng.random_range(-1.0..1.0)).collect(),
            0.1,
        )
        .unwrap();
        let batch = random_batch(&mut rng, k, b, d);
        let mask: Vec<bool> = (0..b).map(|i| i == 0 || rng.random::<f64>() < 0.7).collect();
        let weights: Vec<f64> = (0..b).map(|_| rng.random_range(0.1..2.0)).collect();
        let g = params.gradient(&batch, &mask, &weights).unwrap();
        let h = 1e-5;
        let mut analytic = g.weights.clone();
        analytic.extend(&g.bias);
        let mut numeric = Vec::with_capacity(analytic.len());
        for idx in 0..k * d + k {
            let eval = |delta: f64| {
                let mut p = params.clone();
                if idx < k * d {
                    p.weights_mut()[idx] += delta;
                } else {
                    p.bias_mut()[idx - k * d] += delta;
                }
                p.batch_loss(&batch, &mask, &weights).unwrap()
            };
            numeric.push((eval(h) - eval(-h)) / (2.0 * h));
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let norm = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
        worst = worst.max(diff / norm);
    }
    check(worst <= 1e-4, format!("worst relative error {worst:e} over 20 instances"), format!("relative error {worst:e}"))
}

fn benchmark(method: MethodConfig, seeds: Vec<u64>) -> ExperimentResult {
    run_experiment(&ExperimentConfig::reference_benchmark(method, seeds)).expect("benchmark run")
}

fn c4_signal_bounds(llkd: &ExperimentResult) -> Outcome {
    let k = 5.0f64;
    let (ln_k, floor) = (k.ln(), 1.0 / k);
    let mut violations = 0usize;
    let mut steps = 0usize;
    for run in &llkd.runs {
        for s in &run.ledger.steps {
            steps += 1;
            let ok = s.uncertainty_min >= 0.0
                && s.uncertainty_max <= ln_k
                && s.confidence_min >= floor
                && s.confidence_max <= 1.0
                && (0.0..=ln_k).contains(&s.student_tau)
                && (0.0..=1.0).contains(&s.teacher_tau)
                && s.student_local.iter().chain(&s.student_thresholds).all(|v| (0.0..=ln_k).contains(v))
                && s.teacher_local.iter().chain(&s.teacher_thresholds).all(|v| (0.0..=1.0).contains(v));
            violations += !ok as usize;
        }
    }
    check(
        violations == 0 && steps > 0,
        format!("{steps} logged steps within [0, ln K] / [1/K, 1] bounds"),
        format!("{violations} of {steps} steps out of bounds"),
    )
}

fn c5_ablation_chain() -> Outcome {
    let seeds = vec![0, 1];
    let trivial = benchmark(MethodConfig::new(MethodKind::LlkdWoTcSu), seeds.clone());
    let no_ds = benchmark(MethodConfig::new(MethodKind::NoDs), seeds.clone());
    let mut identical = true;
    for (a, b) in trivial.runs.iter().zip(&no_ds.runs) {
        identical &= a.ledger == b.ledger
            && report::ledger_table(&a.ledger) == report::ledger_table(&b.ledger)
            && report::thresholds_table(&a.ledger) == report::thresholds_table(&b.ledger)
            && a.test_acc == b.test_acc
            && a.params == b.params;
    }

    // single-indicator ablations against the scalar reference
    let (k, bsz) = (3usize, 8usize);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut mismatches = 0usize;
    for _ in 0..100 {
        let mut sel = Selector::new(k, &SelectorConfig::default()).unwrap();
        let mut rs = RefState::new(k, 0.9, 1.0, 1.0);
        let mut rt = RefState::new(k, 0.9, 1.0, 1.0);
        for step in 0..5u64 {
            let batch = random_batch(&mut rng, k, bsz, 2);
            let unc: Vec<f64> = (0..bsz).map(|_| rng.random::<f64>() * (k as f64).ln()).collect();
            let r = sel.select_with_signals(&batch, unc.clone(), Indicators::BOTH, false).unwrap();
            let labels: Vec<usize> = batch.iter().map(|s| s.pseudo_label).collect();
            let conf: Vec<f64> = batch.iter().map(|s| s.confidence).collect();
            rs.step(&unc, &labels);
            rt.step(&conf, &labels);
            let wo_tc = baseline_mask(&BaselineSpec::new(BaselineKind::LlkdWoTc), &batch, &unc, Some(&r), step).unwrap();
            let wo_su = baseline_mask(&BaselineSpec::new(BaselineKind::LlkdWoSu), &batch, &unc, Some(&r), step).unwrap();
            for i in 0..bsz {
                mismatches += (wo_tc[i] != (unc[i] >= rs.threshold(labels[i]))) as usize;
                mismatches += (wo_su[i] != (conf[i] >= rt.threshold(labels[i]))) as usize;
            }
        }
    }
    check(
        identical && mismatches == 0,
        "both-trivial ledger bit-identical to No_DS; w/o TC and w/o SU masks match single-indicator reference".into(),
        format!("ledgers identical: {identical}; single-indicator mismatches: {mismatches}"),
    )
}

fn c6_threshold_direction(llkd: &ExperimentResult) -> Outcome {
    let mut t = [0.0; 2];
    let mut s = [0.0; 2];
    let mut comb = [0.0; 4];
    let (mut nt, mut ns, mut nc) = (0.0, 0.0, 0.0);
    for run in &llkd.runs {
        for r in &run.ledger.threshold_evals {
            if let Some(after) = r.teacher_only.teacher_acc_after {
                t[0] += r.teacher_only.teacher_acc_before;
                t[1] += after;
                nt += 1.0;
            }
            if let Some(after) = r.student_only.student_acc_after {
                s[0] += r.student_only.student_acc_before;
                s[1] += after;
                ns += 1.0;
            }
            if let (Some(ta), Some(sa)) = (r.combined.teacher_acc_after, r.combined.student_acc_after) {
                comb[0] += r.combined.teacher_acc_before;
                comb[1] += ta;
                comb[2] += r.combined.student_acc_before;
                comb[3] += sa;
                nc += 1.0;
            }
        }
    }
    let (tb, ta, sb, sa) = (t[0] / nt, t[1] / nt, s[0] / ns, s[1] / ns);
    let c = comb.map(|x| x / nc);
    let detail = format!(
        "teacher threshold: teacher ACC {tb:.4} -> {ta:.4}; student threshold: student ACC {sb:.4} -> {sa:.4} \
         (combined mask: teacher {:.4} -> {:.4}, student {:.4} -> {:.4})",
        c[0], c[1], c[2], c[3]
    );
    check(ta >= tb + 0.03 && sa <= sb - 0.03, detail.clone(), detail)
}

fn c7_headline(llkd: &ExperimentResult) -> Outcome {
    let start = Instant::now();
    let no_ds = benchmark(MethodConfig::new(MethodKind::NoDs), (0..5).collect());
    let mut random_acc = Vec::new();
    for run in &llkd.runs {
        let method = MethodConfig {
            ratio: Some(run.efficiency.fraction),
            ..MethodConfig::new(MethodKind::Random)
        };
        let r = benchmark(method, vec![run.seed]);
        random_acc.push(r.runs[0].test_acc);
    }
    let random_mean = random_acc.iter().sum::<f64>() / random_acc.len() as f64;
    let s = llkd.summary();
    let nd = no_ds.summary();
    let elapsed = start.elapsed();
    let detail = format!(
        "LLKD {:.4} vs Random@matched {:.4} (+{:.4}) vs No_DS {:.4}; LLKD selected {:.1}% of seen; baselines ran in {elapsed:.2?}",
        s.acc_mean,
        random_mean,
        s.acc_mean - random_mean,
        nd.acc_mean,
        100.0 * s.fraction_mean
    );
    check(
        s.acc_mean >= random_mean + 0.01 && s.acc_mean >= nd.acc_mean && s.fraction_mean <= 0.60 && elapsed < Duration::from_secs(900),
        detail.clone(),
        detail,
    )
}

/// Every sample has the same features and the same teacher confidence, so
/// every batch has uniform confidences and uniform uncertainties.
fn flat_split(n: usize, k: usize) -> DatasetSplit {
    let labels = LabelSet::numbered(k).unwrap();
    let x = vec![0.7, -0.3];
    let train = (0..n as u64)
        .map(|i| {
            let y = (i as usize * 7 + i as usize / 3) % k;
            let mut p = vec![0.1 / (k - 1) as f64; k];
            p[y] = 0.9;
            PseudoLabeledSample::new(Sample::new(i, x.clone(), Some(y)), ProbDist::new(p).unwrap())
        })
        .collect();
    let eval = |off: u64| (0..20).map(|i| Sample::new(off + i, x.clone(), Some(i as usize % k))).collect();
    DatasetSplit::new(labels, train, eval(10_000), eval(20_000)).unwrap()
}

fn c8_weighted_variant() -> Outcome {
    // weights sum to 2 on every batch of a benchmark epoch
    let cfg = ExperimentConfig::reference_benchmark(MethodConfig::new(MethodKind::LlkdW), vec![0]);
    let split = prepare_dataset(&cfg, 0).unwrap();
    let mut sel = Selector::new(split.k(), &cfg.selector).unwrap();
    let params = StudentParams::zeros(split.k(), split.dim, 0.1).unwrap();
    let mut worst = 0.0f64;
    for batch in split.train.chunks(32) {
        let r = sel.run_batch(batch, &params, Indicators::BOTH, true).unwrap();
        worst = worst.max((r.weights.iter().sum::<f64>() - 2.0).abs());
    }
    let sums_ok = worst <= 1e-12;

    // uniform signals: LLKD_w at lr equals LLKD at lr * 2 / B, loss scaled by 2 / B
    let (k, b, lr) = (4usize, 16usize, 0.5);
    let split = flat_split(160, k);
    let mut w_cfg = ExperimentConfig::reference_benchmark(MethodConfig::new(MethodKind::LlkdW), vec![0]);
    w_cfg.student.batch_size = b;
    w_cfg.student.epochs = 3;
    w_cfg.student.learning_rate = lr;
    w_cfg.eval_every = 5;
    let mut u_cfg = w_cfg.clone();
    u_cfg.method = MethodConfig::new(MethodKind::Llkd);
    u_cfg.student.learning_rate = lr * 2.0 / b as f64;
    let w = train_run(&w_cfg, &split, 0).unwrap();
    let u = train_run(&u_cfg, &split, 0).unwrap();
    let scale = 2.0 / b as f64;
    let mut masks_equal = w.ledger.steps.len() == u.ledger.steps.len();
    let mut worst_rel = 0.0f64;
    for (a, c) in w.ledger.steps.iter().zip(&u.ledger.steps) {
        masks_equal &= a.selected == c.selected && a.batch_size == c.batch_size;
        if c.loss > 0.0 {
            worst_rel = worst_rel.max((a.loss - scale * c.loss).abs() / (scale * c.loss));
        }
    }
    let first_step_same_lr = {
        let mut u_same = u_cfg.clone();
        u_same.student.learning_rate = lr;
        let us = train_run(&u_same, &split, 0).unwrap();
        (w.ledger.steps[0].loss - scale * us.ledger.steps[0].loss).abs() <= 1e-15
    };
    let detail = format!(
        "max |sum(w) - 2| = {worst:e}; uniform-signal ledgers: masks equal {masks_equal}, max loss-ratio deviation {worst_rel:e}"
    );
    check(sums_ok && masks_equal && worst_rel <= 1e-9 && first_step_same_lr, detail.clone(), detail)
}

fn oracle_macro_f1(preds: &[usize], golds: &[usize], k: usize) -> f64 {
    let mut cm = vec![vec![0usize; k]; k];
    for (&p, &g) in preds.iter().zip(golds) {
        cm[g][p] += 1;
    }
    let mut total = 0.0;
    for c in 0..k {
        let tp = cm[c][c];
        let predicted: usize = (0..k).map(|g| cm[g][c]).sum();
        let actual: usize = cm[c].iter().sum();
        let f1 = if tp == 0 {
            0.0
        } else {
            let p = tp as f64 / predicted as f64;
            let r = tp as f64 / actual as f64;
            2.0 * p * r / (p + r)
        };
        total += f1;
    }
    total / k as f64
}

fn step_with(b: usize, sel: usize) -> StepRecord {
    StepRecord {
        step: 0,
        epoch: 0,
        batch_size: b,
        selected: sel,
        cum_selected: 0,
        cum_seen: 0,
        loss: 0.0,
        uncertainty_min: 0.0,
        uncertainty_max: 0.0,
        confidence_min: 0.0,
        confidence_max: 0.0,
        student_tau: 0.0,
        teacher_tau: 0.0,
        student_local: vec![],
        teacher_local: vec![],
        student_thresholds: vec![],
        teacher_thresholds: vec![],
    }
}

fn c9_metrics_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut f1_mismatch = 0usize;
    for _ in 0..1000 {
        let k = rng.random_range(2..8);
        let n = rng.random_range(1..200);
        let golds: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let preds: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        f1_mismatch += (macro_f1(&preds, &golds, k).unwrap() != oracle_macro_f1(&preds, &golds, k)) as usize;
    }
    let mut bin_mismatch = 0usize;
    for _ in 0..100 {
        let n = rng.random_range(1..500);
        let vals: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..=1.0)).collect();
        let ok: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let bins = calibration_bins(&vals, &ok, 0.2, 1.0, rng.random_range(2..20)).unwrap();
        bin_mismatch += (bins.iter().map(|b| b.count).sum::<usize>() != n) as usize;
    }
    let mut eff_mismatch = 0usize;
    for _ in 0..100 {
        let mut ledger = RunLedger::default();
        let (mut sel_total, mut seen_total) = (0usize, 0usize);
        for _ in 0..rng.random_range(1..50) {
            let b = rng.random_range(1..40);
            let mask: Vec<bool> = (0..b).map(|_| rng.random()).collect();
            let sel = mask.iter().filter(|&&m| m).count();
            sel_total += sel;
            seen_total += b;
            ledger.push_step(step_with(b, sel));
        }
        let r = efficiency_report(&ledger);
        eff_mismatch += (r.total_selected != sel_total
            || r.total_seen != seen_total
            || r.fraction != sel_total as f64 / seen_total as f64) as usize;
    }
    check(
        f1_mismatch + bin_mismatch + eff_mismatch == 0,
        "macro-F1 equals confusion-matrix oracle on 1000 random cases; bin counts sum to N; efficiency matches hand sums".into(),
        format!("mismatches: f1 {f1_mismatch}, bins {bin_mismatch}, efficiency {eff_mismatch}"),
    )
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::reference_benchmark(MethodConfig::new(MethodKind::Llkd), vec![3]);
    cfg.student.epochs = 2;
    let cfg_path = dir.path().join("cfg.toml");
    fs::write(&cfg_path, cfg.to_toml()).unwrap();
    let bin = env!("CARGO_BIN_EXE_llkd");
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = Command::new(bin)
            .args(["run", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return Err(format!("run failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        outputs.push(out);
    }
    let files = ["summary.tsv", "llkd/seed_3/ledger.tsv", "llkd/seed_3/thresholds.tsv", "llkd/seed_3/threshold_eval.tsv", "llkd/seed_3/student.ckpt"];
    let mut differing = Vec::new();
    for f in files {
        if fs::read(outputs[0].join(f)).unwrap() != fs::read(outputs[1].join(f)).unwrap() {
            differing.push(f);
        }
    }
    check(
        differing.is_empty(),
        format!("two `run` invocations produced byte-identical {}", files.join(", ")),
        format!("files differ: {differing:?}"),
    )
}

fn main() {
    let total = Instant::now();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 selector oracle equivalence", c1_selector_oracle()),
        ("2 EMA closed form", c2_ema_closed_form()),
        ("3 gradient check", c3_gradient_check()),
    ];
    let bench_start = Instant::now();
    let llkd = benchmark(MethodConfig::new(MethodKind::Llkd), (0..5).collect());
    let bench_time = bench_start.elapsed();
    results.push(("4 signal bounds", c4_signal_bounds(&llkd)));
    results.push(("5 ablation-chain exactness", c5_ablation_chain()));
    results.push(("6 threshold-evaluation direction", c6_threshold_direction(&llkd)));
    results.push(("7 headline direction", c7_headline(&llkd)));
    results.push(("8 weighted variant consistency", c8_weighted_variant()));
    results.push(("9 metrics oracles", c9_metrics_oracles()));
    results.push(("10 determinism", c10_determinism()));

    println!("acceptance: LLKD reference benchmark (5 seeds) took {bench_time:.2?}");
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(msg) => println!("[PASS] criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] criterion {name}: {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.2?}", results.len() - failed, total.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
