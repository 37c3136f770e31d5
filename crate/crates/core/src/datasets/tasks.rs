use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entailment::{ProofConfig, Prover};
use crate::logic::{parse_atom, parse_clause, Atom, Clause, Language, Term};
use crate::problem::IlpProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Member,
    Plus,
    Append,
    Delete,
    Subtree,
}

pub const ALL_TASKS: [Task; 5] = [Task::Member, Task::Plus, Task::Append, Task::Delete, Task::Subtree];

/// Hyperparameters each task ships with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaskDefaults {
    pub m: usize,
    pub steps: usize,
    pub beam_size: usize,
    pub beam_steps: usize,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("unknown task `{0}` (expected member, plus, append, delete or subtree)")]
pub struct UnknownTask(pub String);

impl FromStr for Task {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Task, UnknownTask> {
        ALL_TASKS.into_iter().find(|t| t.name() == s).ok_or_else(|| UnknownTask(s.to_owned()))
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const LIST_ITEMS: [&str; 3] = ["a", "b", "c"];

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Member => "member",
            Task::Plus => "plus",
            Task::Append => "append",
            Task::Delete => "delete",
            Task::Subtree => "subtree",
        }
    }

    pub fn defaults(self) -> TaskDefaults {
        let (m, steps, beam_size, beam_steps) = match self {
            Task::Member => (2, 4, 3, 3),
            Task::Plus => (3, 8, 10, 5),
            Task::Append => (3, 4, 10, 5),
            Task::Delete => (2, 4, 10, 5),
            Task::Subtree => (4, 4, 15, 3),
        };
        TaskDefaults { m, steps, beam_size, beam_steps }
    }

    /// Default cap on list length, natural number or tree depth.
    pub fn default_size(self) -> usize {
        match self {
            Task::Member | Task::Append | Task::Delete => 5,
            Task::Plus => 9,
            Task::Subtree => 3,
        }
    }

    pub fn language(self) -> Language {
        let lists = |pred: &str, arity| {
            Language::new().with_predicate(pred, arity).with_function("f", 2).with_constants(&["a", "b", "c", "*"])
        };
        match self {
            Task::Member => lists("mem", 2),
            Task::Plus => Language::new().with_predicate("plus", 3).with_function("s", 1).with_constants(&["0"]),
            Task::Append => lists("app", 3).with_variables(&["x", "y", "z", "v", "w", "u"]),
            Task::Delete => lists("del", 3).with_variables(&["x", "y", "z", "v", "w", "u"]),
            Task::Subtree => {
                Language::new().with_predicate("sub", 2).with_function("f", 2).with_constants(&LIST_ITEMS)
            }
        }
    }

    fn parse_atoms(self, lang: &Language, texts: &[&str]) -> Vec<Atom> {
        texts.iter().map(|t| parse_atom(t, Some(lang)).expect("valid built-in atom")).collect()
    }

    fn parse_clauses(self, lang: &Language, texts: &[&str]) -> Vec<Clause> {
        texts.iter().map(|t| parse_clause(t, Some(lang)).expect("valid built-in clause")).collect()
    }

    pub fn background(self) -> Vec<Atom> {
        let lang = self.language();
        let texts: &[&str] = match self {
            Task::Member => &["mem(a,[a])", "mem(b,[b])", "mem(c,[c])"],
            Task::Plus => &["plus(0,0,0)"],
            Task::Append => &["app([],[],[])"],
            Task::Delete => &["del(a,[a],[])", "del(b,[b],[])", "del(c,[c],[])"],
            Task::Subtree => &["sub(a,a)", "sub(b,b)", "sub(c,c)"],
        };
        self.parse_atoms(&lang, texts)
    }

    pub fn initial(self) -> Vec<Clause> {
        let lang = self.language();
        let text = match self {
            Task::Member => "mem(x,y)",
            Task::Plus => "plus(x,y,z)",
            Task::Append => "app(x,y,z)",
            Task::Delete => "del(x,y,z)",
            Task::Subtree => "sub(x,y)",
        };
        self.parse_clauses(&lang, &[text])
    }

    /// A reference program for the relation the examples are drawn from.
    pub fn target_program(self) -> Vec<Clause> {
        let lang = self.language();
        let texts: &[&str] = match self {
            Task::Member => &["mem(x,[y|z]) :- mem(x,z)", "mem(x,[x|y])"],
            Task::Plus => &["plus(0,x,x)", "plus(x,s(y),s(z)) :- plus(x,y,z)", "plus(s(x),y,s(z)) :- plus(y,x,z)"],
            Task::Append => &["app([],x,x)", "app(x,[],x)", "app([x|y],z,[x|v]) :- app(y,z,v)"],
            Task::Delete => &["del(x,[x|y],y)", "del(x,[y|z],[y|v]) :- del(x,z,v)"],
            Task::Subtree => {
                &["sub(f(x,y),f(x,y))", "sub(x,f(y,z)) :- sub(x,z)", "sub(x,f(y,z)) :- sub(x,y)", "sub(x,f(y,x))"]
            }
        };
        self.parse_clauses(&lang, texts)
    }
}

/// What to generate: `per_class` positives and as many negatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaskSpec {
    pub task: Task,
    pub per_class: usize,
    /// List length, largest natural, or tree depth.
    pub max_size: usize,
    pub seed: u64,
}

impl TaskSpec {
    pub fn new(task: Task, per_class: usize, seed: u64) -> TaskSpec {
        TaskSpec { task, per_class, max_size: task.default_size(), seed }
    }
}

/// Proof depth used to confirm that a sampled negative is false.
const NEGATIVE_DEPTH: usize = 32;
const MAX_ATTEMPTS: usize = 200_000;

fn c(name: &str) -> Term {
    Term::constant(name)
}

fn list(items: &[&'static str]) -> Term {
    Language::list(items.iter().map(|s| c(s)).collect())
}

fn nat(n: usize) -> Term {
    Term::nested("s", n, c("0"))
}

struct Sampler {
    rng: ChaCha8Rng,
    max: usize,
}

impl Sampler {
    fn item(&mut self) -> &'static str {
        LIST_ITEMS.choose(&mut self.rng).copied().unwrap()
    }

    fn items(&mut self, lo: usize, hi: usize) -> Vec<&'static str> {
        let n = self.rng.random_range(lo..=hi);
        (0..n).map(|_| self.item()).collect()
    }

    /// One random substitution, deletion or insertion.
    fn corrupt(&mut self, mut xs: Vec<&'static str>) -> Vec<&'static str> {
        match self.rng.random_range(0..3) {
            0 if !xs.is_empty() => {
                let i = self.rng.random_range(0..xs.len());
                let old = xs[i];
                while xs[i] == old {
                    xs[i] = self.item();
                }
            }
            1 if !xs.is_empty() => {
                let i = self.rng.random_range(0..xs.len());
                xs.remove(i);
            }
            _ => {
                let i = self.rng.random_range(0..=xs.len());
                let it = self.item();
                xs.insert(i, it);
            }
        }
        xs
    }

    /// The node reached by following random children for a uniformly drawn
    /// number of levels.
    fn descend(&mut self, t: &Term) -> Term {
        let mut x = t;
        for _ in 0..self.rng.random_range(0..=self.max) {
            if let Term::Fn(_, args) = x {
                x = args.choose(&mut self.rng).unwrap();
            }
        }
        x.clone()
    }

    /// `t` with one uniformly chosen leaf replaced by a different item.
    fn swap_leaf(&mut self, t: &Term) -> Term {
        let mut leaves = Vec::new();
        collect_leaves(t, &mut leaves);
        let old = *leaves.choose(&mut self.rng).unwrap();
        let mut by = self.item();
        while by == old {
            by = self.item();
        }
        let mut k = leaves.iter().filter(|&&l| l == old).count();
        k = self.rng.random_range(0..k);
        replace_leaf(t, old, by, &mut k)
    }

    fn tree(&mut self, depth: usize) -> Term {
        if depth == 0 || self.rng.random_bool(0.25) {
            c(self.item())
        } else {
            Term::func("f", vec![self.tree(depth - 1), self.tree(depth - 1)])
        }
    }

    fn positive(&mut self, task: Task) -> Atom {
        let m = self.max;
        match task {
            Task::Member => {
                let xs = self.items(1, m);
                let x = *xs.choose(&mut self.rng).unwrap();
                Atom::new("mem", vec![c(x), list(&xs)])
            }
            Task::Plus => {
                let a = self.rng.random_range(0..=m);
                let b = self.rng.random_range(0..=m - a);
                Atom::new("plus", vec![nat(a), nat(b), nat(a + b)])
            }
            Task::Append => {
                let total = self.items(0, m);
                let cut = self.rng.random_range(0..=total.len());
                Atom::new("app", vec![list(&total[..cut]), list(&total[cut..]), list(&total)])
            }
            Task::Delete => {
                let xs = self.items(1, m);
                let i = self.rng.random_range(0..xs.len());
                let mut rest = xs.clone();
                let x = rest.remove(i);
                Atom::new("del", vec![c(x), list(&xs), list(&rest)])
            }
            Task::Subtree => {
                let y = Term::func("f", vec![self.tree(m - 1), self.tree(m - 1)]);
                let x = self.descend(&y);
                Atom::new("sub", vec![x, y])
            }
        }
    }

    fn negative(&mut self, task: Task) -> Atom {
        let m = self.max;
        match task {
            Task::Member => {
                let xs = self.items(1, m);
                let x = self.item();
                Atom::new("mem", vec![c(x), list(&xs)])
            }
            Task::Plus => {
                let a = self.rng.random_range(0..=m);
                let b = self.rng.random_range(0..=m);
                let s = self.rng.random_range(0..=m);
                Atom::new("plus", vec![nat(a), nat(b), nat(s)])
            }
            Task::Append => {
                let total = self.items(0, m);
                let cut = self.rng.random_range(0..=total.len());
                let out = if self.rng.random_bool(0.5) { self.corrupt(total.clone()) } else { self.items(0, m) };
                Atom::new("app", vec![list(&total[..cut]), list(&total[cut..]), list(&out)])
            }
            Task::Delete => {
                let xs = self.items(1, m);
                let x = self.item();
                let mut rest = xs.clone();
                rest.remove(self.rng.random_range(0..xs.len()));
                let out = if self.rng.random_bool(0.5) { self.corrupt(rest) } else { self.items(0, m - 1) };
                Atom::new("del", vec![c(x), list(&xs), list(&out)])
            }
            Task::Subtree => {
                if self.rng.random_bool(0.5) {
                    let other = Term::func("f", vec![self.tree(m - 1), self.tree(m - 1)]);
                    let x = self.descend(&other);
                    let mut y = Term::func("f", vec![self.tree(m - 1), self.tree(m - 1)]);
                    for _ in 0..100 {
                        let mut nodes = Vec::new();
                        subterms(&y, &mut nodes);
                        if !nodes.contains(&x) {
                            break;
                        }
                        y = Term::func("f", vec![self.tree(m - 1), self.tree(m - 1)]);
                    }
                    Atom::new("sub", vec![x, y])
                } else {
                    let y = Term::func("f", vec![self.tree(m - 1), self.tree(m - 1)]);
                    let mut nodes = Vec::new();
                    subterms(&y, &mut nodes);
                    let node = nodes.choose(&mut self.rng).unwrap().clone();
                    Atom::new("sub", vec![self.swap_leaf(&node), y])
                }
            }
        }
    }
}

fn collect_leaves(t: &Term, out: &mut Vec<&'static str>) {
    match t {
        Term::Fn(_, args) => args.iter().for_each(|a| collect_leaves(a, out)),
        Term::Const(s) => out.push(s.as_str()),
        Term::Var(_) => {}
    }
}

/// Replaces the `k`-th occurrence of leaf `old` by `by`.
fn replace_leaf(t: &Term, old: &str, by: &'static str, k: &mut usize) -> Term {
    match t {
        Term::Fn(f, args) => Term::Fn(*f, args.iter().map(|a| replace_leaf(a, old, by, k)).collect()),
        Term::Const(s) if s.as_str() == old => {
            let hit = *k == 0;
            *k = k.wrapping_sub(1);
            if hit {
                c(by)
            } else {
                t.clone()
            }
        }
        _ => t.clone(),
    }
}

fn subterms(t: &Term, out: &mut Vec<Term>) {
    out.push(t.clone());
    if let Term::Fn(_, args) = t {
        for a in args {
            subterms(a, out);
        }
    }
}

pub(crate) fn sort_atoms(atoms: &mut [Atom]) {
    atoms.sort_by_cached_key(|a| a.to_string());
}

/// Samples a labelled problem for `spec.task`. Positives are provable from
/// the target program and background within the task's inference steps;
/// negatives are not provable at all; neither appears in the background.
/// Both example lists come back sorted by text.
pub fn generate(spec: &TaskSpec) -> IlpProblem {
    let task = spec.task;
    assert!(spec.max_size >= 1, "max size must be positive");
    let mut q = IlpProblem::new(task.language());
    q.background = task.background();
    q.initial = task.initial();
    let target = task.target_program();
    let steps = task.defaults().steps;
    let mut shallow = Prover::new(&target, &q.background, ProofConfig::new(steps));
    let mut deep = Prover::new(&target, &q.background, ProofConfig::new(NEGATIVE_DEPTH));
    let mut sampler = Sampler { rng: ChaCha8Rng::seed_from_u64(spec.seed), max: spec.max_size };
    let mut seen: HashSet<Atom> = q.background.iter().cloned().collect();

    let mut positives = Vec::new();
    let mut attempts = 0;
    while positives.len() < spec.per_class && attempts < MAX_ATTEMPTS {
        attempts += 1;
        let a = sampler.positive(task);
        if !seen.contains(&a) && shallow.entails(&a) {
            seen.insert(a.clone());
            positives.push(a);
        }
    }
    let mut negatives = Vec::new();
    attempts = 0;
    while negatives.len() < spec.per_class && attempts < MAX_ATTEMPTS {
        attempts += 1;
        let a = sampler.negative(task);
        if !seen.contains(&a) && !deep.entails(&a) {
            seen.insert(a.clone());
            negatives.push(a);
        }
    }
    assert!(
        positives.len() == spec.per_class && negatives.len() == spec.per_class,
        "could not sample {} examples per class for {task} at size {}",
        spec.per_class,
        spec.max_size
    );
    sort_atoms(&mut positives);
    sort_atoms(&mut negatives);
    q.positives = positives;
    q.negatives = negatives;
    q
}

#[cfg(test)]
fn sym_list(t: &Term) -> Option<Vec<crate::sym::Sym>> {
    match t {
        Term::Const(s) if s.as_str() == "*" => Some(vec![]),
        Term::Fn(f, args) if f.as_str() == "f" && args.len() == 2 => {
            let Term::Const(h) = &args[0] else { return None };
            let mut rest = sym_list(&args[1])?;
            rest.insert(0, *h);
            Some(rest)
        }
        _ => None,
    }
}
