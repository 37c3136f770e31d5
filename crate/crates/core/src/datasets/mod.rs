//! Benchmark task generators, label noise, train/test splits and the
//! problem file format.

mod format;
mod tasks;

pub use format::{load_problem, parse_problem, save_problem, write_problem, FormatError};
pub use tasks::{generate, Task, TaskDefaults, TaskSpec, UnknownTask, ALL_TASKS};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::logic::Atom;
use crate::problem::IlpProblem;

/// Moves ⌊fraction·|examples|⌋ uniformly chosen examples to the other
/// class. Examples are indexed in text order, so applying the same call
/// twice restores the original problem.
pub fn inject_noise(problem: &IlpProblem, fraction: f64, seed: u64) -> IlpProblem {
    assert!((0.0..=1.0).contains(&fraction), "noise fraction must lie in [0, 1]");
    let mut all: Vec<(Atom, bool)> = problem.labelled();
    all.sort_by_cached_key(|(a, _)| a.to_string());
    let k = (fraction * all.len() as f64 + 1e-9).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in sample(&mut rng, all.len(), k) {
        all[i].1 = !all[i].1;
    }
    let mut out = problem.clone();
    out.positives = all.iter().filter(|(_, y)| *y).map(|(a, _)| a.clone()).collect();
    out.negatives = all.iter().filter(|(_, y)| !*y).map(|(a, _)| a.clone()).collect();
    out
}

/// Labelled atoms held out from training.
pub type TestSet = Vec<(Atom, f64)>;

/// Stratified split: `fraction` of each class (rounded) goes to training.
pub fn split(problem: &IlpProblem, fraction: f64, seed: u64) -> (IlpProblem, TestSet) {
    assert!((0.0..=1.0).contains(&fraction), "split fraction must lie in [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cut = |atoms: &[Atom]| {
        let mut order: Vec<usize> = (0..atoms.len()).collect();
        order.shuffle(&mut rng);
        let k = (fraction * atoms.len() as f64).round() as usize;
        let mut train: Vec<Atom> = order[..k].iter().map(|&i| atoms[i].clone()).collect();
        let mut test: Vec<Atom> = order[k..].iter().map(|&i| atoms[i].clone()).collect();
        tasks::sort_atoms(&mut train);
        tasks::sort_atoms(&mut test);
        (train, test)
    };
    let (pos_train, pos_test) = cut(&problem.positives);
    let (neg_train, neg_test) = cut(&problem.negatives);
    let mut train = problem.clone();
    train.positives = pos_train;
    train.negatives = neg_train;
    let test = pos_test.into_iter().map(|a| (a, 1.0)).chain(neg_test.into_iter().map(|a| (a, 0.0))).collect();
    (train, test)
}
