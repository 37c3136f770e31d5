//! Depth-bounded SLD resolution and a restricted forward-chaining oracle.
//!
//! The depth bound counts clause applications along a branch of the proof
//! tree, so an atom provable within depth `d` is exactly one that `d` rounds
//! of forward chaining derive. Running out of depth reports "not entailed";
//! the prover under-approximates ⊨ for recursive programs.

use std::collections::{HashMap, HashSet};

use crate::logic::{match_ground, unify, Atom, Clause, Substitution};
use crate::problem::IlpProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProofConfig {
    pub max_depth: usize,
}

impl ProofConfig {
    pub fn new(max_depth: usize) -> ProofConfig {
        assert!(max_depth >= 1, "proof depth must be at least 1");
        ProofConfig { max_depth }
    }
}

/// A prover for one program and background set, memoizing ground goals.
pub struct Prover<'a> {
    program: &'a [Clause],
    background: HashSet<&'a Atom>,
    background_list: &'a [Atom],
    max_depth: usize,
    memo: HashMap<(Atom, usize), bool>,
    next_tag: u32,
}

impl<'a> Prover<'a> {
    pub fn new(program: &'a [Clause], background: &'a [Atom], cfg: ProofConfig) -> Prover<'a> {
        Prover {
            program,
            background: background.iter().collect(),
            background_list: background,
            max_depth: cfg.max_depth,
            memo: HashMap::new(),
            next_tag: 1,
        }
    }

    pub fn entails(&mut self, goal: &Atom) -> bool {
        assert!(goal.is_ground(), "goal must be ground: {goal}");
        self.prove_ground(goal, self.max_depth)
    }

    fn fresh_tag(&mut self) -> u32 {
        let t = self.next_tag;
        self.next_tag += 1;
        t
    }

    fn prove_ground(&mut self, goal: &Atom, depth: usize) -> bool {
        if *goal == Atom::top() || self.background.contains(goal) {
            return true;
        }
        if depth == 0 {
            return false;
        }
        let key = (goal.clone(), depth);
        if let Some(&known) = self.memo.get(&key) {
            return known;
        }
        // Recursion through the same goal at lower depth cannot loop forever,
        // so no in-progress marker is needed.
        let program = self.program;
        let mut proved = false;
        for clause in program {
            let Some(theta) = match_ground(&clause.head, goal) else { continue };
            let body: Vec<Atom> = clause.body.iter().map(|b| b.apply(&theta)).collect();
            proved = if body.iter().all(Atom::is_ground) {
                body.iter().all(|b| self.prove_ground(b, depth - 1))
            } else {
                let tag = self.fresh_tag();
                let goals: Vec<(Atom, usize)> = body
                    .iter()
                    .map(|b| (b.map_vars(&mut |v| crate::logic::Term::Var(v.tagged(tag))), depth - 1))
                    .collect();
                self.solve(&goals, &Substitution::new())
            };
            if proved {
                break;
            }
        }
        self.memo.insert(key, proved);
        proved
    }

    /// Solves a conjunction that may contain unbound variables.
    fn solve(&mut self, goals: &[(Atom, usize)], theta: &Substitution) -> bool {
        let Some(((first, depth), rest)) = goals.split_first() else { return true };
        let goal = first.apply(theta);
        if goal.is_ground() {
            return self.prove_ground(&goal, *depth) && self.solve(rest, theta);
        }
        let background = self.background_list;
        for fact in background {
            if let Some(sigma) = unify(&goal, fact) {
                if self.solve(rest, &theta.compose(&sigma)) {
                    return true;
                }
            }
        }
        if *depth == 0 {
            return false;
        }
        let program = self.program;
        for clause in program {
            let renamed = clause.rename(self.fresh_tag());
            let Some(sigma) = unify(&goal, &renamed.head) else { continue };
            let mut next: Vec<(Atom, usize)> =
                renamed.body.iter().map(|b| (b.clone(), depth - 1)).collect();
            next.extend(rest.iter().cloned());
            if self.solve(&next, &theta.compose(&sigma)) {
                return true;
            }
        }
        false
    }
}

/// Whether `program ∪ background ⊢ goal` within `cfg.max_depth` clause applications.
pub fn entails(program: &[Clause], background: &[Atom], goal: &Atom, cfg: ProofConfig) -> bool {
    Prover::new(program, background, cfg).entails(goal)
}

/// Number of positive examples entailed by ℬ ∪ {clause}.
pub fn eval_clause(clause: &Clause, problem: &IlpProblem, cfg: ProofConfig) -> usize {
    let program = std::slice::from_ref(clause);
    let mut prover = Prover::new(program, &problem.background, cfg);
    problem.positives.iter().filter(|e| prover.entails(e)).count()
}

/// Clause score with an optional penalty for entailed negatives:
/// `pos - neg_penalty * neg`. With a zero penalty this is [`eval_clause`].
pub fn score_clause(
    clause: &Clause,
    problem: &IlpProblem,
    cfg: ProofConfig,
    neg_penalty: f64,
) -> ClauseScore {
    let program = std::slice::from_ref(clause);
    let mut prover = Prover::new(program, &problem.background, cfg);
    let positives = problem.positives.iter().filter(|e| prover.entails(e)).count();
    let negatives = if neg_penalty != 0.0 {
        problem.negatives.iter().filter(|e| prover.entails(e)).count()
    } else {
        0
    };
    ClauseScore { positives, negatives, value: positives as f64 - neg_penalty * negatives as f64 }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClauseScore {
    pub positives: usize,
    pub negatives: usize,
    pub value: f64,
}

/// Atoms of `atoms` derivable from `background` within `steps` rounds of
/// forward chaining, plus ⊤ and the background itself. Derivations only pass
/// through atoms of `atoms ∪ background`.
pub fn forward_closure(
    program: &[Clause],
    background: &[Atom],
    atoms: &[Atom],
    steps: usize,
) -> HashSet<Atom> {
    let mut truth: HashSet<Atom> = background.iter().cloned().collect();
    truth.insert(Atom::top());
    for _ in 0..steps {
        let known: Vec<Atom> = truth.iter().cloned().collect();
        let mut derived = Vec::new();
        for g in atoms {
            if truth.contains(g) {
                continue;
            }
            let fires = program.iter().any(|c| {
                match_ground(&c.head, g)
                    .is_some_and(|theta| body_holds(&c.body, &theta, &truth, &known))
            });
            if fires {
                derived.push(g.clone());
            }
        }
        if derived.is_empty() {
            break;
        }
        truth.extend(derived);
    }
    truth
}

fn body_holds(body: &[Atom], theta: &Substitution, truth: &HashSet<Atom>, known: &[Atom]) -> bool {
    let Some((first, rest)) = body.split_first() else { return true };
    let b = first.apply(theta);
    if b.is_ground() {
        return truth.contains(&b) && body_holds(rest, theta, truth, known);
    }
    known.iter().any(|fact| {
        match_ground(&b, fact).is_some_and(|sigma| body_holds(rest, &theta.compose(&sigma), truth, known))
    })
}
