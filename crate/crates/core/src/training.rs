//! Fitting clause weights to labelled atoms, program extraction, metrics.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grounding::GroundContext;
use crate::infer::{InferConfig, Model, Tape, WeightMode, WeightSet};
use crate::logic::{Atom, Clause};
use crate::problem::IlpProblem;

/// Predictions are clipped to [CLIP, 1 - CLIP] inside the loss.
pub const CLIP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub m: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub gamma: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_frac: f64,
    pub seed: u64,
    pub weight_mode: WeightMode,
    pub clamp: bool,
    pub init_std: f64,
    pub rms_decay: f64,
    pub rms_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            m: 2,
            steps: 4,
            gamma: 1e-5,
            lr: 0.01,
            epochs: 3000,
            batch_frac: 0.05,
            seed: 0,
            weight_mode: WeightMode::Multi,
            clamp: false,
            init_std: 0.1,
            rms_decay: 0.99,
            rms_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn infer_config(&self) -> InferConfig {
        InferConfig { gamma: self.gamma, steps: self.steps, clamp: self.clamp }
    }

    pub fn batch_size(&self, n: usize) -> usize {
        ((self.batch_frac * n as f64).ceil() as usize).clamp(1, n.max(1))
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TrainError {
    #[error("training diverged at epoch {epoch} (non-finite loss); retry with a different --seed")]
    Diverged { epoch: usize },
    #[error("no training examples")]
    NoExamples,
    #[error("atom {0} is not in the grounding")]
    MissingAtom(String),
}

/// (E, 1) for positives and (E, 0) for negatives.
pub fn make_labels(problem: &IlpProblem) -> Vec<(Atom, f64)> {
    problem.labelled().into_iter().map(|(a, y)| (a, if y { 1.0 } else { 0.0 })).collect()
}

/// Resolves labelled atoms to grounding indices.
pub fn index_targets(ctx: &GroundContext, labels: &[(Atom, f64)]) -> Result<Vec<(usize, f64)>, TrainError> {
    labels
        .iter()
        .map(|(a, y)| ctx.table.index_of(a).map(|j| (j, *y)).ok_or_else(|| TrainError::MissingAtom(a.to_string())))
        .collect()
}

/// Raw v_T at each index.
pub fn predict(model: &Model, w: &WeightSet, cfg: &InferConfig, indices: &[usize]) -> Vec<f64> {
    let tape = model.forward(w, cfg);
    indices.iter().map(|&j| tape.output()[j]).collect()
}

pub fn cross_entropy(p: f64, y: f64) -> f64 {
    let p = p.clamp(CLIP, 1.0 - CLIP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Mean cross-entropy over `batch` and its gradient with respect to the weights.
pub fn loss_and_grad(model: &Model, w: &WeightSet, cfg: &InferConfig, batch: &[(usize, f64)]) -> (f64, Vec<f64>) {
    loss_and_grad_with(model, w, cfg, batch, &mut Tape::default())
}

/// As [`loss_and_grad`], reusing the buffers of `tape`.
pub fn loss_and_grad_with(
    model: &Model,
    w: &WeightSet,
    cfg: &InferConfig,
    batch: &[(usize, f64)],
    tape: &mut Tape,
) -> (f64, Vec<f64>) {
    model.forward_into(w, cfg, tape);
    let out = tape.output();
    let n = batch.len() as f64;
    let mut grad_out = vec![0.0; out.len()];
    let mut loss = 0.0;
    for &(j, y) in batch {
        let p = out[j].clamp(CLIP, 1.0 - CLIP);
        loss += cross_entropy(p, y);
        grad_out[j] += (p - y) / (p * (1.0 - p)) / n;
    }
    (loss / n, model.backward(w, cfg, tape, &grad_out))
}

#[derive(Clone, Debug)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
    mean_sq: Vec<f64>,
}

impl RmsProp {
    pub fn new(lr: f64, decay: f64, eps: f64, size: usize) -> RmsProp {
        RmsProp { lr, decay, eps, mean_sq: vec![0.0; size] }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        for ((p, &g), s) in params.iter_mut().zip(grads).zip(&mut self.mean_sq) {
            *s = self.decay * *s + (1.0 - self.decay) * g * g;
            *p -= self.lr * g / (s.sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub weights: WeightSet,
    /// Mini-batch loss per epoch.
    pub history: Vec<f64>,
}

/// Seeded initialisation, then per epoch one RMSProp step on a mini-batch
/// drawn without replacement.
pub fn train(model: &Model, targets: &[(usize, f64)], cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    if targets.is_empty() {
        return Err(TrainError::NoExamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = WeightSet::normal(cfg.weight_mode, cfg.m, model.num_clauses(), cfg.init_std, &mut rng);
    let icfg = cfg.infer_config();
    let mut opt = RmsProp::new(cfg.lr, cfg.rms_decay, cfg.rms_eps, w.param_count());
    let k = cfg.batch_size(targets.len());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut tape = Tape::default();
    for epoch in 0..cfg.epochs {
        let batch: Vec<(usize, f64)> = sample(&mut rng, targets.len(), k).into_iter().map(|i| targets[i]).collect();
        let (loss, grad) = loss_and_grad_with(model, &w, &icfg, &batch, &mut tape);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(TrainError::Diverged { epoch });
        }
        history.push(loss);
        opt.step(&mut w.data, &grad);
    }
    Ok(TrainOutcome { weights: w, history })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnedClause {
    pub clause: String,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnedProgram {
    pub clauses: Vec<(Clause, f64)>,
}

impl LearnedProgram {
    pub fn program(&self) -> Vec<Clause> {
        self.clauses.iter().map(|(c, _)| c.clone()).collect()
    }

    pub fn canonical_set(&self) -> HashSet<String> {
        self.clauses.iter().map(|(c, _)| c.canonical_text()).collect()
    }
}

/// Argmax clause per weight row (both clauses of the best pair in pair
/// mode), deduplicated up to renaming, with softmax confidences.
pub fn extract_program(w: &WeightSet, clauses: &[Clause]) -> LearnedProgram {
    assert_eq!(w.clauses, clauses.len());
    let probs = w.probabilities();
    let picks: Vec<(usize, f64)> = match w.mode {
        WeightMode::Multi => w
            .argmax_rows()
            .into_iter()
            .enumerate()
            .map(|(l, i)| (i, probs[l * w.clauses + i]))
            .collect(),
        WeightMode::Pair => {
            let best = probs
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (k, &p)| if p > b.1 { (k, p) } else { b });
            vec![(best.0 / w.clauses, best.1), (best.0 % w.clauses, best.1)]
        }
    };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, conf) in picks {
        if seen.insert(clauses[i].canonical_text()) {
            out.push((clauses[i].clone(), conf));
        }
    }
    LearnedProgram { clauses: out }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Undefined when only one class is present.
    pub auc: Option<f64>,
    pub mse: f64,
    pub cross_entropy: f64,
}

/// Mann-Whitney AUC with ties counted as one half.
pub fn auc(preds: &[f64], labels: &[f64]) -> Option<f64> {
    let pos: Vec<f64> = preds.iter().zip(labels).filter(|(_, &y)| y >= 0.5).map(|(&p, _)| p).collect();
    let neg: Vec<f64> = preds.iter().zip(labels).filter(|(_, &y)| y < 0.5).map(|(&p, _)| p).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

pub fn mse(preds: &[f64], labels: &[f64]) -> f64 {
    if preds.is_empty() {
        return 0.0;
    }
    preds.iter().zip(labels).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / preds.len() as f64
}

pub fn metrics(preds: &[f64], labels: &[f64]) -> Metrics {
    assert_eq!(preds.len(), labels.len());
    let ce = if preds.is_empty() {
        0.0
    } else {
        preds.iter().zip(labels).map(|(&p, &y)| cross_entropy(p, y)).sum::<f64>() / preds.len() as f64
    };
    Metrics { auc: auc(preds, labels), mse: mse(preds, labels), cross_entropy: ce }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::{build_index_tensor, convert_background, AtomTable};
    use crate::logic::{parse_atom, parse_clause, Language, Term};

    fn c(s: &str) -> Clause {
        parse_clause(s, None).unwrap()
    }

    #[test]
    fn labels_from_problem() {
        let mut q = IlpProblem::new(Language::new().with_predicate("p", 2).with_constants(&["a", "b"]));
        q.positives = vec![parse_atom("p(a,a)", None).unwrap()];
        q.negatives = vec![parse_atom("p(a,b)", None).unwrap()];
        let y = make_labels(&q);
        assert_eq!(y.len(), 2);
        assert!(y.contains(&(q.positives[0].clone(), 1.0)));
        assert!(y.contains(&(q.negatives[0].clone(), 0.0)));
    }

    #[test]
    fn loss_values() {
        assert!(cross_entropy(1.0, 1.0) < 1e-6);
        assert!((cross_entropy(0.5, 0.0) - 2f64.ln()).abs() < 1e-12);
        assert!((cross_entropy(0.5, 1.0) - 2f64.ln()).abs() < 1e-12);
        assert!(cross_entropy(0.0, 1.0).is_finite());
    }

    #[test]
    fn metric_values() {
        assert_eq!(auc(&[0.9, 0.8, 0.1, 0.2], &[1.0, 1.0, 0.0, 0.0]), Some(1.0));
        assert_eq!(auc(&[0.3; 4], &[1.0, 1.0, 0.0, 0.0]), Some(0.5));
        assert_eq!(auc(&[0.3, 0.2], &[1.0, 1.0]), None);
        assert_eq!(mse(&[1.0, 0.0], &[1.0, 0.0]), 0.0);
        assert_eq!(mse(&[0.5, 0.5], &[1.0, 0.0]), 0.25);
    }

    #[test]
    fn rmsprop_first_step() {
        let mut opt = RmsProp::new(0.01, 0.99, 1e-8, 1);
        let mut p = [1.0];
        opt.step(&mut p, &[2.0]);
        // s = 0.01 * 4, step = 0.01 * 2 / 0.2
        assert!((p[0] - (1.0 - 0.1)).abs() < 1e-6);
    }

    #[test]
    fn extraction_dedups_and_ignores_shifts() {
        let cs = [c("p(x,y)"), c("p(x,x)"), c("p(y,y)")];
        let mut w = WeightSet::zeros(WeightMode::Multi, 2, 3);
        w.data = vec![0.0, 5.0, 0.0, 0.0, 0.0, 6.0];
        let prog = extract_program(&w, &cs);
        assert_eq!(prog.clauses.len(), 1);
        assert!(prog.clauses[0].1 > 0.9 && prog.clauses[0].1 <= 1.0);
        for x in &mut w.data[3..] {
            *x += 17.0;
        }
        assert_eq!(extract_program(&w, &cs), prog);
    }

    fn nat(n: usize) -> Atom {
        Atom::new("e", vec![Term::nested("s", n, Term::constant("0"))])
    }

    fn even_model() -> (Model, Vec<(usize, f64)>, Vec<Clause>) {
        let clauses = vec![c("e(x)"), c("e(s(s(x))) :- e(x)"), c("e(s(x)) :- e(x)")];
        let mut t = AtomTable::new();
        for n in 0..9 {
            t.insert(nat(n));
        }
        let x = build_index_tensor(&clauses, &t);
        let model = Model::from_parts(&x, convert_background(&[nat(0)], &t));
        let targets = (1..9).map(|n| (t.index_of(&nat(n)).unwrap(), if n % 2 == 0 { 1.0 } else { 0.0 })).collect();
        (model, targets, clauses)
    }

    #[test]
    fn training_finds_the_even_rule() {
        let (model, targets, clauses) = even_model();
        let cfg = TrainConfig { m: 1, steps: 4, epochs: 300, batch_frac: 1.0, lr: 0.05, seed: 3, ..Default::default() };
        let out = train(&model, &targets, &cfg).unwrap();
        assert!(out.history.last().unwrap() < out.history.first().unwrap());
        let prog = extract_program(&out.weights, &clauses);
        assert_eq!(prog.program(), vec![clauses[1].clone()]);
        let idx: Vec<usize> = targets.iter().map(|t| t.0).collect();
        let ys: Vec<f64> = targets.iter().map(|t| t.1).collect();
        let m = metrics(&predict(&model, &out.weights, &cfg.infer_config(), &idx), &ys);
        assert_eq!(m.auc, Some(1.0));
        assert!(m.mse < 0.01);
    }

    #[test]
    fn training_is_deterministic() {
        let (model, targets, _) = even_model();
        let cfg = TrainConfig { m: 2, epochs: 20, batch_frac: 0.5, seed: 11, ..Default::default() };
        let a = train(&model, &targets, &cfg).unwrap();
        let b = train(&model, &targets, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.weights, b.weights);
        let zero = train(&model, &targets, &TrainConfig { epochs: 0, ..cfg }).unwrap();
        assert!(zero.history.is_empty());
    }
}
