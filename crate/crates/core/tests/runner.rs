use llkd::config::{ExperimentConfig, MethodConfig, MethodKind, SweepGrid, ALL_METHODS};
use llkd::data::{DatasetSplit, LabelSet, ProbDist, PseudoLabeledSample, Sample};
use llkd::runner::{grid_points, run_experiment, sweep, train_run};
use llkd::Error;

fn small(method: MethodConfig, seeds: Vec<u64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::reference_benchmark(method, seeds);
    let syn = cfg.data.synthetic.as_mut().unwrap();
    syn.n_train = 400;
    syn.n_val = 100;
    syn.n_test = 200;
    cfg.student.epochs = 2;
    cfg.eval_every = 5;
    cfg
}

fn method_for(kind: MethodKind) -> MethodConfig {
    let mut m = MethodConfig::new(kind);
    match kind {
        MethodKind::Random | MethodKind::EntropyScore | MethodKind::TopUncertainty => m.ratio = Some(0.3),
        MethodKind::FixedConfThreshold => m.threshold = Some(0.8),
        _ => {}
    }
    m
}

#[test]
fn every_method_sees_each_sample_once_per_epoch() {
    for kind in ALL_METHODS {
        let cfg = small(method_for(kind), vec![1]);
        let res = run_experiment(&cfg).unwrap();
        let run = &res.runs[0];
        assert_eq!(run.efficiency.total_seen, 400 * 2, "{kind:?}");
        assert!(run.efficiency.total_selected <= run.efficiency.total_seen);
        assert_eq!(run.ledger.steps.len(), 2 * 400usize.div_ceil(32));
    }
}

#[test]
fn three_seed_summary_uses_sample_std() {
    let res = run_experiment(&small(MethodConfig::new(MethodKind::Llkd), vec![0, 1, 2])).unwrap();
    assert_eq!(res.runs.len(), 3);
    let accs: Vec<f64> = res.runs.iter().map(|r| r.test_acc).collect();
    let mean = accs.iter().sum::<f64>() / 3.0;
    let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 2.0;
    let s = res.summary();
    assert!((s.acc_mean - mean).abs() < 1e-12);
    assert!((s.acc_std - var.sqrt()).abs() < 1e-12);
}

#[test]
fn seeds_differ_but_repeat() {
    let cfg = small(MethodConfig::new(MethodKind::Llkd), vec![0, 1]);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.runs[0].ledger, a.runs[1].ledger);
}

#[test]
fn overflowing_logits_abort_with_step() {
    let labels = LabelSet::numbered(2).unwrap();
    let sample = |id: u64, y: usize| {
        let x = if y == 0 { vec![1e300, -1e300] } else { vec![-1e300, 1e300] };
        Sample::new(id, x, Some(y))
    };
    let train = (0..64)
        .map(|i| {
            let y = (i % 2) as usize;
            let mut p = vec![0.2; 2];
            p[y] = 0.8;
            PseudoLabeledSample::new(sample(i, y), ProbDist::new(p).unwrap())
        })
        .collect();
    let split = DatasetSplit::new(labels, train, vec![sample(100, 0)], vec![sample(101, 1)]).unwrap();
    let mut cfg = small(MethodConfig::new(MethodKind::NoDs), vec![0]);
    cfg.student.learning_rate = 1.0;
    match train_run(&cfg, &split, 0) {
        Err(e @ Error::NonFinite { .. }) => assert!(e.to_string().contains("id=")),
        other => panic!("expected non-finite abort, got {other:?}"),
    }
}

#[test]
fn grid_sizes() {
    let base = small(MethodConfig::new(MethodKind::Llkd), vec![0]);
    let lambdas = vec![0.1, 0.3, 0.5, 0.7, 0.9];
    let grid = SweepGrid { lambda_s: lambdas.clone(), lambda_t: lambdas, ..Default::default() };
    let pts = grid_points(&base, &grid);
    assert_eq!(pts.len(), 25);
    assert!(pts.iter().any(|(_, c)| c.selector.lambda_s == 0.1 && c.selector.lambda_t == 0.9));

    let b = vec![0.0, 1.0];
    let grid = SweepGrid { beta_s1: b.clone(), beta_s2: b.clone(), beta_t1: b.clone(), beta_t2: b, ..Default::default() };
    assert_eq!(grid_points(&base, &grid).len(), 16);
    assert_eq!(grid_points(&base, &SweepGrid::default()).len(), 1);
}

#[test]
fn sweep_flags_best_by_validation() {
    let base = small(MethodConfig::new(MethodKind::Llkd), vec![0]);
    let grid = SweepGrid { lambda_s: vec![0.1, 0.9], ..Default::default() };
    let rows = sweep(&base, &grid).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows.iter().filter(|r| r.best).count(), 1);
    let best = rows.iter().find(|r| r.best).unwrap();
    assert!(rows.iter().all(|r| r.val_acc <= best.val_acc));
}
