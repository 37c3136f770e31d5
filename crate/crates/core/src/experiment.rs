//! The full learning pipeline: split, noise, clause generation, grounding,
//! training, extraction and scoring.

use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datasets::{inject_noise, split, write_problem, Task, TestSet};
use crate::entailment::ProofConfig;
use crate::grounding::GroundContext;
use crate::infer::{InferConfig, Model, WeightSet};
use crate::logic::{parse_clause, Atom, Clause, ParseError, Printer};
use crate::problem::IlpProblem;
use crate::refinement::RefinementConfig;
use crate::search::{beam_search, naive_generate, BeamConfig};
use crate::training::{
    extract_program, index_targets, make_labels, metrics, predict, train, LearnedClause, Metrics, TrainConfig,
    TrainError,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub task: Option<Task>,
    pub train: TrainConfig,
    pub beam_size: usize,
    pub beam_steps: usize,
    pub n_body: usize,
    pub n_nest: usize,
    pub prune_zero: bool,
    pub neg_penalty: f64,
    /// Generate this many clauses without looking at examples instead of beam search.
    pub naive_gen: Option<usize>,
    pub noise: f64,
    pub split: f64,
}

impl RunConfig {
    /// The shipped hyperparameters for `task`.
    pub fn for_task(task: Task, seed: u64) -> RunConfig {
        let d = task.defaults();
        RunConfig {
            task: Some(task),
            train: TrainConfig { m: d.m, steps: d.steps, seed, ..TrainConfig::default() },
            beam_size: d.beam_size,
            beam_steps: d.beam_steps,
            n_body: 1,
            n_nest: 1,
            prune_zero: true,
            neg_penalty: 0.0,
            naive_gen: None,
            noise: 0.0,
            split: 0.7,
        }
    }

    pub fn beam(&self) -> BeamConfig {
        BeamConfig { prune_zero: self.prune_zero, neg_penalty: self.neg_penalty, ..BeamConfig::new(self.beam_size, self.beam_steps) }
    }

    pub fn refinement(&self) -> RefinementConfig {
        RefinementConfig { n_body: self.n_body, n_nest: self.n_nest, base_nest: 0 }
    }

    pub fn proof(&self) -> ProofConfig {
        ProofConfig::new(self.train.steps.max(1))
    }
}

/// Everything needed to reproduce or re-evaluate a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub dataset_hash: String,
    pub num_clauses: usize,
    pub num_atoms: usize,
    pub skipped_nonground: usize,
    pub params: usize,
    /// (epoch, mini-batch loss) at regular intervals.
    pub loss_samples: Vec<(usize, f64)>,
    pub train_metrics: Metrics,
    pub test_metrics: Metrics,
    pub program: Vec<LearnedClause>,
    pub program_text: String,
    pub runtime_s: f64,
}

/// Learned weights with the clause set they index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub config: RunConfig,
    pub clauses: Vec<String>,
    pub weights: WeightSet,
}

impl SavedModel {
    pub fn clauses(&self, problem: &IlpProblem) -> Result<Vec<Clause>, ParseError> {
        self.clauses.iter().map(|c| parse_clause(c, Some(&problem.language))).collect()
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub record: RunRecord,
    pub model: SavedModel,
    pub clauses: Vec<Clause>,
    pub context: GroundContext,
    pub history: Vec<f64>,
}

pub fn dataset_hash(problem: &IlpProblem) -> String {
    hex::encode(Sha256::digest(write_problem(problem).as_bytes()))
}

/// Training split (with label noise applied) and held-out test atoms.
pub fn prepare_data(problem: &IlpProblem, cfg: &RunConfig) -> (IlpProblem, TestSet) {
    let (train, test) = split(problem, cfg.split, cfg.train.seed);
    (inject_noise(&train, cfg.noise, cfg.train.seed), test)
}

pub fn generate_clauses(train: &IlpProblem, cfg: &RunConfig) -> Vec<Clause> {
    match cfg.naive_gen {
        Some(n) => naive_generate(&train.initial, train, &cfg.refinement(), n),
        None => beam_search(&train.initial, train, &cfg.beam(), &cfg.refinement(), cfg.proof()).clauses,
    }
}

/// Grounds `clauses` with the training examples, background and `extra`
/// atoms as seeds.
pub fn ground(train: &IlpProblem, clauses: &[Clause], cfg: &InferConfig, extra: &[Atom]) -> GroundContext {
    GroundContext::build(train, clauses, cfg.steps, extra)
}

/// Scores labelled atoms, all of which must be in the context.
pub fn score(ctx: &GroundContext, w: &WeightSet, cfg: &InferConfig, labelled: &[(Atom, f64)]) -> Result<Metrics, TrainError> {
    let targets = index_targets(ctx, labelled)?;
    let idx: Vec<usize> = targets.iter().map(|t| t.0).collect();
    let ys: Vec<f64> = targets.iter().map(|t| t.1).collect();
    Ok(metrics(&predict(&Model::new(ctx), w, cfg, &idx), &ys))
}

/// Runs the whole pipeline on `problem`.
pub fn run(problem: &IlpProblem, cfg: &RunConfig) -> Result<RunOutput, TrainError> {
    let start = Instant::now();
    let (train_q, test) = prepare_data(problem, cfg);
    let clauses = generate_clauses(&train_q, cfg);
    let icfg = cfg.train.infer_config();
    let test_atoms: Vec<Atom> = test.iter().map(|(a, _)| a.clone()).collect();
    let ctx = ground(&train_q, &clauses, &icfg, &test_atoms);
    log::info!("{}", ctx.diagnostic());
    let model = Model::new(&ctx);
    let labels = make_labels(&train_q);
    let targets = index_targets(&ctx, &labels)?;
    let outcome = train(&model, &targets, &cfg.train)?;
    let w = outcome.weights;
    let train_metrics = score(&ctx, &w, &icfg, &labels)?;
    let test_metrics = score(&ctx, &w, &icfg, &test)?;
    let learned = extract_program(&w, &clauses);
    let printer = Printer::for_language(&problem.language);
    let program: Vec<LearnedClause> = learned
        .clauses
        .iter()
        .map(|(c, p)| LearnedClause { clause: printer.clause(c), confidence: *p })
        .collect();
    let program_text = program.iter().map(|c| format!("{}.", c.clause)).collect::<Vec<_>>().join("\n");
    let every = (cfg.train.epochs / 100).max(1);
    let loss_samples = outcome.history.iter().enumerate().filter(|(e, _)| e % every == 0).map(|(e, l)| (e, *l)).collect();
    let record = RunRecord {
        config: *cfg,
        dataset_hash: dataset_hash(problem),
        num_clauses: clauses.len(),
        num_atoms: ctx.num_atoms(),
        skipped_nonground: ctx.skipped_nonground,
        params: w.param_count(),
        loss_samples,
        train_metrics,
        test_metrics,
        program,
        program_text,
        runtime_s: start.elapsed().as_secs_f64(),
    };
    let saved = SavedModel { config: *cfg, clauses: clauses.iter().map(|c| printer.clause(c)).collect(), weights: w };
    Ok(RunOutput { record, model: saved, clauses, context: ctx, history: outcome.history })
}

/// Test metrics of a saved model on `problem`, recomputed the way `run` did.
pub fn evaluate_saved(problem: &IlpProblem, saved: &SavedModel) -> Result<(Metrics, GroundContext), EvalError> {
    let clauses = saved.clauses(problem)?;
    let (train_q, test) = prepare_data(problem, &saved.config);
    let icfg = saved.config.train.infer_config();
    let test_atoms: Vec<Atom> = test.iter().map(|(a, _)| a.clone()).collect();
    let ctx = ground(&train_q, &clauses, &icfg, &test_atoms);
    if saved.weights.clauses != clauses.len() {
        return Err(EvalError::Shape { weights: saved.weights.clauses, clauses: clauses.len() });
    }
    Ok((score(&ctx, &saved.weights, &icfg, &test)?, ctx))
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("saved clause does not parse: {0}")]
    Clause(#[from] ParseError),
    #[error("weights cover {weights} clauses but the model lists {clauses}")]
    Shape { weights: usize, clauses: usize },
    #[error(transparent)]
    Train(#[from] TrainError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Noise,
    Nclause,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Noise => "noise",
            SweepAxis::Nclause => "nclause",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::Noise => (0..=10).map(|i| i as f64 / 20.0).collect(),
            SweepAxis::Nclause => vec![10.0, 20.0, 30.0, 40.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    /// "beam" or "naive"
    pub generator: String,
    pub seed: u64,
    pub num_clauses: usize,
    pub test_auc: Option<f64>,
    pub test_mse: f64,
    pub train_mse: f64,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "axis,value,generator,seed,num_clauses,test_auc,test_mse,train_mse";

    pub fn csv(&self) -> String {
        let auc = self.test_auc.map_or(String::new(), |a| a.to_string());
        format!(
            "{},{},{},{},{},{},{},{}",
            self.axis.name(),
            self.value,
            self.generator,
            self.seed,
            self.num_clauses,
            auc,
            self.test_mse,
            self.train_mse
        )
    }
}

/// Beam width that keeps the generated set within `budget` clauses.
pub fn beam_for_budget(cfg: &RunConfig, budget: usize, initial: usize) -> RunConfig {
    let mut out = *cfg;
    out.naive_gen = None;
    let open_steps = cfg.beam_steps.saturating_sub(1).max(1);
    out.beam_size = (budget.saturating_sub(initial) / open_steps).max(1);
    out
}

/// Runs every (value, seed) job on the dataset `data(seed)`. Noise sweeps use
/// beam search; clause-count sweeps run both generators at each budget. Rows
/// come back sorted.
pub fn sweep(
    data: impl Fn(u64) -> IlpProblem,
    base: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepRow>, TrainError> {
    let problems: HashMap<u64, IlpProblem> = seeds.iter().map(|&s| (s, data(s))).collect();
    let mut jobs: Vec<(f64, &'static str, u64, RunConfig)> = Vec::new();
    for &value in values {
        for &seed in seeds {
            let problem = &problems[&seed];
            let mut cfg = *base;
            cfg.train.seed = seed;
            match axis {
                SweepAxis::Noise => {
                    cfg.noise = value;
                    jobs.push((value, "beam", seed, cfg));
                }
                SweepAxis::Nclause => {
                    let n = value as usize;
                    jobs.push((value, "beam", seed, beam_for_budget(&cfg, n, problem.initial.len())));
                    jobs.push((value, "naive", seed, RunConfig { naive_gen: Some(n), ..cfg }));
                }
            }
        }
    }
    let results: Vec<Result<SweepRow, TrainError>> = jobs
        .into_par_iter()
        .map(|(value, generator, seed, cfg)| {
            let out = run(&problems[&seed], &cfg)?;
            Ok(SweepRow {
                axis,
                value,
                generator: generator.to_owned(),
                seed,
                num_clauses: out.record.num_clauses,
                test_auc: out.record.test_metrics.auc,
                test_mse: out.record.test_metrics.mse,
                train_mse: out.record.train_metrics.mse,
            })
        })
        .collect();
    let mut rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| {
        a.value.total_cmp(&b.value).then_with(|| a.generator.cmp(&b.generator)).then_with(|| a.seed.cmp(&b.seed))
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate, TaskSpec};

    #[test]
    fn zero_epochs_reports_initial_metrics() {
        let q = generate(&TaskSpec::new(Task::Member, 20, 1));
        let mut cfg = RunConfig::for_task(Task::Member, 1);
        cfg.train.epochs = 0;
        let out = run(&q, &cfg).unwrap();
        assert!(out.history.is_empty());
        assert_eq!(out.record.params, 2 * out.record.num_clauses);
        let (m, _) = evaluate_saved(&q, &out.model).unwrap();
        assert_eq!(m, out.record.test_metrics);
    }
}
