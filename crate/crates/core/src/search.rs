//! Clause generation: example-guided beam search over the refinement
//! lattice, and an unguided breadth-first baseline.

use std::cmp::Ordering;
use std::collections::{HashSet, VecDeque};

use rayon::prelude::*;

use crate::entailment::{score_clause, ProofConfig};
use crate::logic::Clause;
use crate::problem::IlpProblem;
use crate::refinement::{refine, RefinementConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamConfig {
    /// N_beam
    pub beam_size: usize,
    /// T_beam
    pub beam_steps: usize,
    /// Discard refinements that entail no positive example.
    pub prune_zero: bool,
    /// Weight of entailed negatives in the score; 0 scores positives only.
    pub neg_penalty: f64,
}

impl BeamConfig {
    pub fn new(beam_size: usize, beam_steps: usize) -> BeamConfig {
        assert!(beam_size >= 1 && beam_steps >= 1, "beam size and steps must be positive");
        BeamConfig { beam_size, beam_steps, prune_zero: true, neg_penalty: 0.0 }
    }
}

#[derive(Clone, Debug)]
struct Scored {
    clause: Clause,
    text: String,
    score: f64,
    positives: usize,
}

impl Scored {
    fn new(clause: Clause, score: f64, positives: usize) -> Scored {
        let text = clause.canonical_text();
        Scored { clause, text, score, positives }
    }

    /// Higher score first; on ties fewer constants, shorter body, then text.
    fn rank(&self, other: &Scored) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.clause.count_constants().cmp(&other.clause.count_constants()))
            .then_with(|| self.clause.body.len().cmp(&other.clause.body.len()))
            .then_with(|| self.text.cmp(&other.text))
    }
}

/// Score-ordered buffer of bounded size.
struct Beam {
    cap: usize,
    items: Vec<Scored>,
}

impl Beam {
    fn insert(&mut self, s: Scored) {
        if self.items.iter().any(|i| i.text == s.text) {
            return;
        }
        let at = self.items.partition_point(|i| i.rank(&s) == Ordering::Less);
        if at < self.cap {
            self.items.insert(at, s);
            self.items.truncate(self.cap);
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    /// The generated clause set 𝒞, ordered by score then canonical text.
    pub clauses: Vec<Clause>,
    pub scores: Vec<f64>,
    /// Number of refinements scored.
    pub evaluated: usize,
    /// Open set at the start of every iteration.
    pub opened: Vec<Vec<Clause>>,
}

/// Beam search from `initial`: each iteration adds the open clauses to 𝒞,
/// scores all their refinements and keeps the best `beam_size` as the next
/// open set. Refinements of the last iteration are scored but never added.
pub fn beam_search(
    initial: &[Clause],
    problem: &IlpProblem,
    beam: &BeamConfig,
    refinement: &RefinementConfig,
    proof: ProofConfig,
) -> SearchResult {
    assert!(!initial.is_empty(), "beam search needs initial clauses");
    let mut rcfg = *refinement;
    let inherited = initial.iter().map(Clause::nest_depth).max().unwrap_or(0);
    rcfg.base_nest = rcfg.base_nest.max(inherited);

    let score = |c: &Clause| {
        let s = score_clause(c, problem, proof, beam.neg_penalty);
        (s.value, s.positives)
    };

    let mut to_open: Vec<Scored> = initial
        .iter()
        .map(|c| {
            let (v, p) = score(c);
            Scored::new(c.clone(), v, p)
        })
        .collect();
    let mut generated: Vec<Scored> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut opened = Vec::new();
    let mut evaluated = 0;

    for _ in 0..beam.beam_steps {
        opened.push(to_open.iter().map(|s| s.clause.clone()).collect());
        let mut candidates: Vec<Clause> = Vec::new();
        let mut fresh: HashSet<String> = HashSet::new();
        for s in &to_open {
            if seen.insert(s.text.clone()) {
                generated.push(s.clone());
            }
        }
        for s in &to_open {
            for r in refine(&s.clause, &problem.language, &rcfg) {
                let text = r.canonical_text();
                if !seen.contains(&text) && fresh.insert(text) {
                    candidates.push(r);
                }
            }
        }
        evaluated += candidates.len();
        let scored: Vec<Scored> = candidates
            .into_par_iter()
            .map(|c| {
                let (v, p) = score(&c);
                Scored::new(c, v, p)
            })
            .collect();
        let mut next = Beam { cap: beam.beam_size, items: Vec::new() };
        for s in scored {
            if beam.prune_zero && s.positives == 0 {
                continue;
            }
            next.insert(s);
        }
        to_open = next.items;
    }

    generated.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.text.cmp(&b.text)));
    SearchResult {
        scores: generated.iter().map(|s| s.score).collect(),
        clauses: generated.into_iter().map(|s| s.clause).collect(),
        evaluated,
        opened,
    }
}

/// Breadth-first refinement from `initial` without looking at examples,
/// stopping once `n_clause` clauses have been generated.
pub fn naive_generate(
    initial: &[Clause],
    problem: &IlpProblem,
    refinement: &RefinementConfig,
    n_clause: usize,
) -> Vec<Clause> {
    let mut rcfg = *refinement;
    rcfg.base_nest = rcfg.base_nest.max(initial.iter().map(Clause::nest_depth).max().unwrap_or(0));
    let mut start: Vec<Clause> = initial.to_vec();
    start.sort_by_cached_key(Clause::canonical_text);
    let mut seen: HashSet<String> = HashSet::new();
    let mut queue: VecDeque<Clause> = VecDeque::new();
    for c in start {
        if seen.insert(c.canonical_text()) {
            queue.push_back(c);
        }
    }
    let mut out = Vec::new();
    while out.len() < n_clause {
        let Some(c) = queue.pop_front() else { break };
        for r in refine(&c, &problem.language, &rcfg) {
            if seen.insert(r.canonical_text()) {
                queue.push_back(r);
            }
        }
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_atom, parse_clause, Language};

    fn c(s: &str) -> Clause {
        parse_clause(s, None).unwrap()
    }

    fn example3() -> IlpProblem {
        let lang = Language::new()
            .with_predicate("p", 2)
            .with_predicate("q", 2)
            .with_function("f", 1)
            .with_constants(&["a", "b", "c"])
            .with_variables(&["x", "y", "z"]);
        let mut q = IlpProblem::new(lang);
        let a = |s: &str| parse_atom(s, None).unwrap();
        q.positives = ["p(a,a)", "p(b,b)", "p(b,c)", "p(c,b)"].map(a).to_vec();
        q.background = ["q(b,c)", "q(c,b)"].map(a).to_vec();
        q.initial = vec![c("p(x,y)")];
        q
    }

    fn texts(cs: &[Clause]) -> Vec<String> {
        cs.iter().map(Clause::canonical_text).collect()
    }

    #[test]
    fn worked_beam_example() {
        let q = example3();
        let res = beam_search(
            &q.initial,
            &q,
            &BeamConfig::new(2, 2),
            &RefinementConfig::default(),
            ProofConfig::new(2),
        );
        let got = texts(&res.clauses);
        for s in ["p(x,y)", "p(x,x)", "p(x,y) :- q(x,y)"] {
            assert!(got.contains(&c(s).canonical_text()), "missing {s} in {got:?}");
        }
        let opened_second = texts(&res.opened[1]);
        assert!(!opened_second.contains(&c("p(f(x),y)").canonical_text()));
        assert_eq!(got.len(), 3);
    }

    #[test]
    fn single_step_returns_initial() {
        let q = example3();
        let init = vec![c("p(x,y)"), c("p(y,x)")];
        let res = beam_search(&init, &q, &BeamConfig::new(3, 1), &RefinementConfig::default(), ProofConfig::new(2));
        assert_eq!(texts(&res.clauses), vec!["p(x,y)".to_string()]);
    }

    #[test]
    fn beam_is_deterministic_and_bounded() {
        let q = example3();
        let cfg = BeamConfig::new(3, 3);
        let a = beam_search(&q.initial, &q, &cfg, &RefinementConfig::default(), ProofConfig::new(2));
        let b = beam_search(&q.initial, &q, &cfg, &RefinementConfig::default(), ProofConfig::new(2));
        assert_eq!(a.clauses, b.clauses);
        assert!(a.opened.iter().all(|o| o.len() <= 3));
        assert!(a.clauses.len() <= 1 + 3 * 2);
    }

    #[test]
    fn naive_generation() {
        let mut q = example3();
        q.language = Language::new()
            .with_predicate("p", 2)
            .with_predicate("q", 2)
            .with_function("f", 1)
            .with_constants(&["a", "b"])
            .with_variables(&["x", "y", "z"]);
        let one = naive_generate(&q.initial, &q, &RefinementConfig::default(), 1);
        assert_eq!(one, vec![c("p(x,y)")]);
        let ten = naive_generate(&q.initial, &q, &RefinementConfig::default(), 10);
        assert_eq!(ten.len(), 10);
        let distinct: HashSet<String> = texts(&ten).into_iter().collect();
        assert_eq!(distinct.len(), 10);
        assert_eq!(ten[0], q.initial[0]);
    }
}
