use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ilp_core::datasets::{generate, load_problem, write_problem, Task, TaskSpec};
use ilp_core::experiment::{
    evaluate_saved, ground, run, score, sweep, RunConfig, SavedModel, SweepAxis, SweepRow,
};
use ilp_core::infer::WeightMode;
use ilp_core::training::{TrainConfig, TrainError};
use ilp_core::IlpProblem;

#[derive(Parser)]
#[command(name = "ilp", version, about = "Learn logic programs with function symbols from examples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated benchmark problem.
    Gen(GenArgs),
    /// Search clauses, train weights and print the learned program.
    Train(TrainArgs),
    /// Score saved weights on a problem's test split.
    Eval(EvalArgs),
    /// Run a noise or clause-count sweep and write CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    task: Task,
    /// Examples per class.
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Longest list, largest natural or deepest tree.
    #[arg(long)]
    max_size: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Multi,
    Pair,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args, Default)]
struct Hyper {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long = "T")]
    steps: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_frac: Option<f64>,
    #[arg(long)]
    beam_size: Option<usize>,
    #[arg(long)]
    beam_steps: Option<usize>,
    #[arg(long)]
    n_body: Option<usize>,
    #[arg(long)]
    n_nest: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, value_enum)]
    weight_mode: Option<Mode>,
    /// Generate this many clauses breadth-first instead of by beam search.
    #[arg(long)]
    naive_gen: Option<usize>,
    #[arg(long, value_enum)]
    prune_zero: Option<Switch>,
    /// Subtract this much per entailed negative when scoring clauses.
    #[arg(long)]
    neg_penalty: Option<f64>,
    /// Cap valuations at 1 after each inference step.
    #[arg(long)]
    clamp: bool,
}

#[derive(Args)]
struct DataArgs {
    /// Task whose defaults (and generator, without --problem) to use.
    #[arg(long)]
    task: Option<Task>,
    /// Problem file; generated from --task when absent.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Examples per class for generated data.
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Seed for generated data; defaults to the run seed.
    #[arg(long)]
    data_seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: Hyper,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the clauses and weights here.
    #[arg(long)]
    save: Option<PathBuf>,
    /// Write the full run record here.
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    weights: PathBuf,
    /// Score the examples of this problem file instead of the test split.
    #[arg(long)]
    holdout: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Noise,
    Nclause,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: Hyper,
    #[arg(long, value_enum)]
    axis: Axis,
    /// Axis values; defaults to 0..0.5 by 0.05 (noise) or 10..40 by 10 (nclause).
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = [1u64, 2, 3, 4, 5])]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Diverged(String),
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Failure {
        match e {
            TrainError::Diverged { .. } => Failure::Diverged(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn config(msg: impl ToString) -> Failure {
    Failure::Config(msg.to_string())
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_data(data: &DataArgs, seed: u64) -> Result<IlpProblem, Failure> {
    match (&data.problem, data.task) {
        (Some(path), _) => load_problem(path).map_err(config),
        (None, Some(task)) => Ok(generate(&TaskSpec::new(task, data.n, data.data_seed.unwrap_or(seed)))),
        (None, None) => Err(config("either --task or --problem is required")),
    }
}

fn base_config(task: Option<Task>, seed: u64) -> RunConfig {
    match task {
        Some(t) => RunConfig::for_task(t, seed),
        None => RunConfig {
            task: None,
            train: TrainConfig { seed, ..TrainConfig::default() },
            beam_size: 10,
            beam_steps: 5,
            n_body: 1,
            n_nest: 1,
            prune_zero: true,
            neg_penalty: 0.0,
            naive_gen: None,
            noise: 0.0,
            split: 0.7,
        },
    }
}

fn apply(h: &Hyper, mut c: RunConfig) -> Result<RunConfig, Failure> {
    let t = &mut c.train;
    if let Some(v) = h.m {
        t.m = v;
    }
    if let Some(v) = h.steps {
        t.steps = v;
    }
    if let Some(v) = h.gamma {
        t.gamma = v;
    }
    if let Some(v) = h.lr {
        t.lr = v;
    }
    if let Some(v) = h.epochs {
        t.epochs = v;
    }
    if let Some(v) = h.batch_frac {
        t.batch_frac = v;
    }
    if let Some(v) = h.weight_mode {
        t.weight_mode = match v {
            Mode::Multi => WeightMode::Multi,
            Mode::Pair => WeightMode::Pair,
        };
    }
    t.clamp |= h.clamp;
    if let Some(v) = h.beam_size {
        c.beam_size = v;
    }
    if let Some(v) = h.beam_steps {
        c.beam_steps = v;
    }
    if let Some(v) = h.n_body {
        c.n_body = v;
    }
    if let Some(v) = h.n_nest {
        c.n_nest = v;
    }
    if let Some(v) = h.noise {
        c.noise = v;
    }
    if let Some(v) = h.prune_zero {
        c.prune_zero = matches!(v, Switch::On);
    }
    if let Some(v) = h.neg_penalty {
        c.neg_penalty = v;
    }
    if h.naive_gen.is_some() {
        c.naive_gen = h.naive_gen;
    }
    validate(&c)?;
    Ok(c)
}

fn validate(c: &RunConfig) -> Result<(), Failure> {
    let t = &c.train;
    let checks = [
        (t.m >= 1, "--m must be at least 1"),
        (t.steps >= 1, "--T must be at least 1"),
        (t.gamma > 0.0 && t.gamma.is_finite(), "--gamma must be positive"),
        (t.lr > 0.0 && t.lr.is_finite(), "--lr must be positive"),
        (t.batch_frac > 0.0 && t.batch_frac <= 1.0, "--batch-frac must lie in (0, 1]"),
        (c.beam_size >= 1, "--beam-size must be at least 1"),
        (c.beam_steps >= 1, "--beam-steps must be at least 1"),
        ((0.0..=1.0).contains(&c.noise), "--noise must lie in [0, 1]"),
        (c.naive_gen != Some(0), "--naive-gen must be at least 1"),
    ];
    match checks.iter().find(|(ok, _)| !ok) {
        Some((_, msg)) => Err(config(msg)),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    event: &'static str,
    task: Option<Task>,
    seed: u64,
    m: usize,
    #[serde(rename = "T")]
    steps: usize,
    weight_mode: WeightMode,
    num_clauses: usize,
    num_atoms: usize,
    params: usize,
    train_mse: f64,
    test_mse: f64,
    auc: Option<f64>,
    runtime_s: f64,
    dataset_hash: &'a str,
    program_text: &'a str,
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn cmd_gen(a: GenArgs) -> Result<(), Failure> {
    let mut spec = TaskSpec::new(a.task, a.n, a.seed);
    if let Some(s) = a.max_size {
        if s == 0 {
            return Err(config("--max-size must be at least 1"));
        }
        spec.max_size = s;
    }
    write_out(a.out.as_deref(), &write_problem(&generate(&spec)))
}

fn cmd_train(a: TrainArgs) -> Result<(), Failure> {
    let problem = load_data(&a.data, a.seed)?;
    let cfg = apply(&a.hyper, base_config(a.data.task, a.seed))?;
    if problem.initial.is_empty() && cfg.naive_gen.is_none() {
        return Err(config("the problem declares no init clauses"));
    }
    let out = run(&problem, &cfg)?;
    eprintln!("{}", out.context.diagnostic());
    let r = &out.record;
    println!(
        "{}",
        json(&serde_json::json!({"event": "grounding", "num_atoms": r.num_atoms, "skipped_nonground": r.skipped_nonground}))
    );
    for (epoch, loss) in &r.loss_samples {
        println!("{}", json(&serde_json::json!({"event": "epoch", "epoch": epoch, "loss": loss})));
    }
    let summary = Summary {
        event: "summary",
        task: cfg.task,
        seed: cfg.train.seed,
        m: cfg.train.m,
        steps: cfg.train.steps,
        weight_mode: cfg.train.weight_mode,
        num_clauses: r.num_clauses,
        num_atoms: r.num_atoms,
        params: r.params,
        train_mse: r.train_metrics.mse,
        test_mse: r.test_metrics.mse,
        auc: r.test_metrics.auc,
        runtime_s: r.runtime_s,
        dataset_hash: &r.dataset_hash,
        program_text: &r.program_text,
    };
    println!("{}", json(&summary));
    eprintln!("{}", r.program_text);
    if let Some(p) = &a.save {
        write_out(Some(p), &serde_json::to_string_pretty(&out.model).expect("serializable"))?;
    }
    if let Some(p) = &a.record {
        write_out(Some(p), &serde_json::to_string_pretty(r).expect("serializable"))?;
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.weights).map_err(|e| config(format!("cannot read weights {}: {e}", a.weights.display())))?;
    let saved: SavedModel = serde_json::from_str(&text).map_err(|e| config(format!("{}: {e}", a.weights.display())))?;
    let problem = load_data(&a.data, saved.config.train.seed)?;
    let (metrics, num_atoms) = match &a.holdout {
        None => {
            let (m, ctx) = evaluate_saved(&problem, &saved).map_err(config)?;
            (m, ctx.num_atoms())
        }
        Some(path) => {
            let held = load_problem(path).map_err(config)?;
            let labelled: Vec<_> = ilp_core::training::make_labels(&held);
            let atoms: Vec<_> = labelled.iter().map(|(a, _)| a.clone()).collect();
            let clauses = saved.clauses(&problem).map_err(config)?;
            let (train_q, test) = ilp_core::experiment::prepare_data(&problem, &saved.config);
            let mut seeds: Vec<_> = test.into_iter().map(|(a, _)| a).collect();
            seeds.extend(atoms);
            let icfg = saved.config.train.infer_config();
            let ctx = ground(&train_q, &clauses, &icfg, &seeds);
            (score(&ctx, &saved.weights, &icfg, &labelled)?, ctx.num_atoms())
        }
    };
    println!(
        "{}",
        json(&serde_json::json!({
            "event": "eval",
            "num_atoms": num_atoms,
            "test_auc": metrics.auc,
            "test_mse": metrics.mse,
            "test_cross_entropy": metrics.cross_entropy,
        }))
    );
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Failure> {
    if a.seeds.is_empty() {
        return Err(config("--seeds needs at least one seed"));
    }
    let mut problems = std::collections::HashMap::new();
    for &seed in &a.seeds {
        problems.insert(seed, load_data(&a.data, seed)?);
    }
    let cfg = apply(&a.hyper, base_config(a.data.task, a.seeds[0]))?;
    let axis = match a.axis {
        Axis::Noise => SweepAxis::Noise,
        Axis::Nclause => SweepAxis::Nclause,
    };
    let values = a.values.clone().unwrap_or_else(|| axis.default_values());
    if values.is_empty() {
        return Err(config("--values needs at least one value"));
    }
    if axis == SweepAxis::Noise && values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(config("noise values must lie in [0, 1]"));
    }
    if axis == SweepAxis::Nclause && values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
        return Err(config("clause counts must be positive integers"));
    }
    let rows = sweep(|seed| problems[&seed].clone(), &cfg, axis, &values, &a.seeds)?;
    let mut text = String::from(SweepRow::CSV_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&r.csv());
        text.push('\n');
    }
    write_out(a.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    let _ = std::io::stdout().flush();
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Diverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
