//! Tab-separated report files. Column order is stable; undefined values are
//! written as `NA`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{CalibrationBin, RunLedger, ThresholdEval};
use crate::runner::{ExperimentResult, RunResult, SweepRow};

pub const SUMMARY_HEADER: &str =
    "method\tseed\tacc\tmacro_f1\tval_acc\tbest_step\tselected\tseen\tpercentage";
pub const LEDGER_HEADER: &str = "step\tepoch\tbatch_size\tselected\tcum_selected\tcum_seen\tloss\tuncertainty_min\tuncertainty_max\tconfidence_min\tconfidence_max";
pub const THRESHOLDS_HEADER: &str = "step\tside\tclass\ttau_global\tlocal\tthreshold";
pub const EVALS_HEADER: &str = "step\tval_acc\tval_macro_f1";
pub const THRESHOLD_EVAL_HEADER: &str = "step\tview\tteacher_acc_before\tteacher_acc_after\tstudent_acc_before\tstudent_acc_after\tselected\tbatch_size";
pub const CALIBRATION_HEADER: &str = "bin_lo\tbin_hi\tcount\taccuracy\tmean_confidence";
pub const SWEEP_HEADER_TAIL: &str = "val_acc\ttest_acc\ttest_macro_f1\tpercentage\tbest";

fn na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Writes to a sibling temp file, then renames over the target.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn summary_table(results: &[ExperimentResult]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for res in results {
        let method = res.config.method.to_string();
        for r in &res.runs {
            writeln!(
                out,
                "{method}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.seed,
                r.test_acc,
                r.test_f1,
                r.best_val_acc,
                r.best_step,
                r.efficiency.total_selected,
                r.efficiency.total_seen,
                100.0 * r.efficiency.fraction
            )
            .unwrap();
        }
        let s = res.summary();
        writeln!(
            out,
            "{method}\tmean\t{}\t{}\t{}\tNA\t{}\tNA\t{}",
            s.acc_mean, s.f1_mean, s.val_acc_mean, s.selected_mean, 100.0 * s.fraction_mean
        )
        .unwrap();
        writeln!(out, "{method}\tstd\t{}\t{}\tNA\tNA\tNA\tNA\tNA", s.acc_std, s.f1_std).unwrap();
    }
    out
}

pub fn ledger_table(ledger: &RunLedger) -> String {
    let mut out = format!("{LEDGER_HEADER}\n");
    for s in &ledger.steps {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.step,
            s.epoch,
            s.batch_size,
            s.selected,
            s.cum_selected,
            s.cum_seen,
            s.loss,
            s.uncertainty_min,
            s.uncertainty_max,
            s.confidence_min,
            s.confidence_max
        )
        .unwrap();
    }
    out
}

/// Long format: one row per (step, side, class).
pub fn thresholds_table(ledger: &RunLedger) -> String {
    let mut out = format!("{THRESHOLDS_HEADER}\n");
    for s in &ledger.steps {
        for (side, tau, local, thr) in [
            ("student", s.student_tau, &s.student_local, &s.student_thresholds),
            ("teacher", s.teacher_tau, &s.teacher_local, &s.teacher_thresholds),
        ] {
            for (c, (l, t)) in local.iter().zip(thr).enumerate() {
                writeln!(out, "{}\t{side}\t{c}\t{tau}\t{l}\t{t}", s.step).unwrap();
            }
        }
    }
    out
}

pub fn evals_table(ledger: &RunLedger) -> String {
    let mut out = format!("{EVALS_HEADER}\n");
    for e in &ledger.evals {
        writeln!(out, "{}\t{}\t{}", e.step, e.val_acc, e.val_f1).unwrap();
    }
    out
}

pub fn threshold_eval_table(ledger: &RunLedger) -> String {
    let mut out = format!("{THRESHOLD_EVAL_HEADER}\n");
    let row = |out: &mut String, step: usize, view: &str, e: &ThresholdEval| {
        writeln!(
            out,
            "{step}\t{view}\t{}\t{}\t{}\t{}\t{}\t{}",
            e.teacher_acc_before,
            na(e.teacher_acc_after),
            e.student_acc_before,
            na(e.student_acc_after),
            e.selected,
            e.batch_size
        )
        .unwrap();
    };
    for t in &ledger.threshold_evals {
        row(&mut out, t.step, "combined", &t.combined);
        row(&mut out, t.step, "teacher", &t.teacher_only);
        row(&mut out, t.step, "student", &t.student_only);
    }
    out
}

pub fn calibration_table(bins: &[CalibrationBin]) -> String {
    let mut out = format!("{CALIBRATION_HEADER}\n");
    for b in bins {
        writeln!(out, "{}\t{}\t{}\t{}\t{}", b.lo, b.hi, b.count, na(b.accuracy), na(b.mean_value)).unwrap();
    }
    out
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    if let Some(first) = rows.first() {
        for (name, _) in &first.point {
            write!(out, "{name}\t").unwrap();
        }
    }
    writeln!(out, "{SWEEP_HEADER_TAIL}").unwrap();
    for r in rows {
        for (_, v) in &r.point {
            write!(out, "{v}\t").unwrap();
        }
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.val_acc,
            r.test_acc,
            r.test_f1,
            100.0 * r.fraction,
            r.best as u8
        )
        .unwrap();
    }
    out
}

/// Directory holding one run's files: `<root>/<method>/seed_<seed>`.
pub fn run_dir(root: &Path, method: &str, seed: u64) -> PathBuf {
    root.join(method).join(format!("seed_{seed}"))
}

pub fn write_run(dir: &Path, run: &RunResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join("ledger.tsv"), &ledger_table(&run.ledger))?;
    write_atomic(&dir.join("thresholds.tsv"), &thresholds_table(&run.ledger))?;
    write_atomic(&dir.join("evals.tsv"), &evals_table(&run.ledger))?;
    write_atomic(&dir.join("threshold_eval.tsv"), &threshold_eval_table(&run.ledger))?;
    write_atomic(&dir.join("calibration.tsv"), &calibration_table(&run.teacher_calibration))?;
    let ckpt = dir.join("student.ckpt");
    run.params.save(&ckpt)?;
    Ok(())
}

/// Writes every run's files, the method's `summary.tsv` and resolved config
/// under `<root>/<method>/`, then rebuilds `<root>/summary.tsv` from all method
/// summaries present (sorted by method name).
pub fn write_experiment(root: &Path, result: &ExperimentResult) -> Result<()> {
    let method = result.config.method.to_string();
    let method_dir = root.join(&method);
    fs::create_dir_all(&method_dir)?;
    for run in &result.runs {
        write_run(&run_dir(root, &method, run.seed), run)?;
    }
    write_atomic(&method_dir.join("summary.tsv"), &summary_table(std::slice::from_ref(result)))?;
    write_atomic(&method_dir.join("config.toml"), &result.config.to_toml())?;

    let mut methods: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("summary.tsv").is_file())
        .collect();
    methods.sort();
    let mut combined = format!("{SUMMARY_HEADER}\n");
    for dir in methods {
        let text = fs::read_to_string(dir.join("summary.tsv"))?;
        for line in text.lines().skip(1) {
            combined.push_str(line);
            combined.push('\n');
        }
    }
    write_atomic(&root.join("summary.tsv"), &combined)?;
    Ok(())
}

/// Aggregates read back from a run directory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunDigest {
    pub steps: usize,
    pub total_selected: usize,
    pub total_seen: usize,
    /// (teacher before, teacher after, student before, student after), averaged
    /// over logged steps with a nonempty selection, per view.
    pub combined: Option<[f64; 4]>,
    pub teacher_view: Option<[f64; 4]>,
    pub student_view: Option<[f64; 4]>,
}

fn read_table(path: &Path, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: "unexpected header".into(),
            })
        }
    }
    Ok(lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i + 1, l.split('\t').map(str::to_string).collect()))
        .collect())
}

pub fn digest_run(dir: &Path) -> Result<RunDigest> {
    let ledger_path = dir.join("ledger.tsv");
    let num = |path: &Path, line: usize, s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("{s:?}: {e}"),
        })
    };
    let rows = read_table(&ledger_path, LEDGER_HEADER)?;
    let mut total_selected = 0usize;
    let mut total_seen = 0usize;
    for (line, r) in &rows {
        total_seen += num(&ledger_path, *line, &r[2])? as usize;
        total_selected += num(&ledger_path, *line, &r[3])? as usize;
    }
    let te_path = dir.join("threshold_eval.tsv");
    let te = read_table(&te_path, THRESHOLD_EVAL_HEADER)?;
    let mut views = [[0.0; 4]; 3];
    let mut counts = [0usize; 3];
    for (line, r) in &te {
        let v = match r[1].as_str() {
            "combined" => 0,
            "teacher" => 1,
            "student" => 2,
            other => {
                return Err(Error::Parse {
                    path: te_path.clone(),
                    line: *line,
                    msg: format!("unknown view {other:?}"),
                })
            }
        };
        if r[3] == "NA" {
            continue;
        }
        for j in 0..4 {
            views[v][j] += num(&te_path, *line, &r[2 + j])?;
        }
        counts[v] += 1;
    }
    let avg = |v: usize| (counts[v] > 0).then(|| views[v].map(|x| x / counts[v] as f64));
    Ok(RunDigest {
        steps: rows.len(),
        total_selected,
        total_seen,
        combined: avg(0),
        teacher_view: avg(1),
        student_view: avg(2),
    })
}
