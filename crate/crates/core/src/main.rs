use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use llkd::config::{ExperimentConfig, MethodConfig, MethodKind};
use llkd::report;
use llkd::runner;
use llkd::synth;
use llkd::teacher;

#[derive(Parser)]
#[command(name = "llkd", version, about = "Adaptive data selection for teacher-to-student distillation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Run only these seeds (repeatable).
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Replace the configured method, e.g. `llkd`, `no_ds`, `random`.
    #[arg(long)]
    method: Option<String>,
    /// Ratio for fixed-ratio methods.
    #[arg(long)]
    ratio: Option<f64>,
    /// Confidence threshold for `fixed_conf_threshold`.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate over every configured seed, writing reports.
    Run(Overrides),
    /// Run the `[sweep]` grid of the config and write sweep.tsv.
    Sweep(Overrides),
    /// Generate the synthetic dataset of a config and dump it.
    GenData {
        #[arg(short, long)]
        config: PathBuf,
        /// Dataset file to write.
        #[arg(short, long)]
        out: PathBuf,
        /// Also write simulated teacher outputs for the train split (JSONL).
        #[arg(long)]
        teacher_out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Summarize a run directory (`<out>/<method>/seed_<n>`).
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn load_config(o: &Overrides) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&o.config)?;
    if !o.seeds.is_empty() {
        cfg.seeds = o.seeds.clone();
    }
    if let Some(m) = &o.method {
        cfg.method = MethodConfig::new(MethodKind::parse(m)?);
    }
    if o.ratio.is_some() {
        cfg.method.ratio = o.ratio;
    }
    if o.threshold.is_some() {
        cfg.method.threshold = o.threshold;
    }
    cfg.validate()?;
    let out = o
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .context("no output directory: pass --out or set output_dir")?;
    std::fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    cfg.output_dir = Some(out.clone());
    Ok((cfg, out))
}

fn run(o: &Overrides) -> anyhow::Result<()> {
    let (cfg, out) = load_config(o)?;
    let result = runner::run_experiment(&cfg)?;
    report::write_experiment(&out, &result).with_context(|| format!("writing {}", out.display()))?;
    print!("{}", report::summary_table(std::slice::from_ref(&result)));
    Ok(())
}

fn sweep(o: &Overrides) -> anyhow::Result<()> {
    let (cfg, out) = load_config(o)?;
    let Some(grid) = cfg.sweep.clone() else {
        bail!("config has no [sweep] section");
    };
    let rows = runner::sweep(&cfg, &grid)?;
    let table = report::sweep_table(&rows);
    report::write_atomic(&out.join("sweep.tsv"), &table)?;
    print!("{table}");
    Ok(())
}

fn gen_data(config: &Path, out: &Path, teacher_out: Option<&Path>, seed: u64) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let Some(mut syn) = cfg.data.synthetic.clone() else {
        bail!("config has no [data.synthetic] section");
    };
    syn.rng_seed = syn.rng_seed.wrapping_add(seed);
    let data = synth::generate(&syn)?;
    synth::dump(&data, out)?;
    if let Some(path) = teacher_out {
        let Some(mut sim) = cfg.teacher.simulated else {
            bail!("--teacher-out needs a [teacher.simulated] section");
        };
        sim.rng_seed = sim.rng_seed.wrapping_add(seed);
        let labeled = teacher::simulate_teacher(&data.train, &sim, data.labels.k())?;
        teacher::write_external(path, &data.labels, &labeled)?;
    }
    Ok(())
}

fn show_report(dir: &Path) -> anyhow::Result<()> {
    let d = report::digest_run(dir).with_context(|| format!("reading {}", dir.display()))?;
    println!("steps\t{}", d.steps);
    println!("selected\t{}", d.total_selected);
    println!("seen\t{}", d.total_seen);
    let pct = if d.total_seen == 0 { 0.0 } else { 100.0 * d.total_selected as f64 / d.total_seen as f64 };
    println!("percentage\t{pct:.2}");
    for (name, v) in [("combined", d.combined), ("teacher", d.teacher_view), ("student", d.student_view)] {
        if let Some([tb, ta, sb, sa]) = v {
            println!("{name}\tteacher_acc {tb:.4} -> {ta:.4}\tstudent_acc {sb:.4} -> {sa:.4}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Run(o) => run(o),
        Command::Sweep(o) => sweep(o),
        Command::GenData {
            config,
            out,
            teacher_out,
            seed,
        } => gen_data(config, out, teacher_out.as_deref(), *seed),
        Command::Report { run_dir } => show_report(run_dir),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
