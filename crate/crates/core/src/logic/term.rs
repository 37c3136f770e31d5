use std::fmt;

use crate::logic::subst::Substitution;
use crate::sym::Sym;

/// A clause variable. `tag` is 0 for variables written by the user; the
/// prover renames clause instances apart by giving them a nonzero tag.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var {
    pub name: Sym,
    pub tag: u32,
}

impl Var {
    pub fn new(name: impl Into<Sym>) -> Var {
        Var { name: name.into(), tag: 0 }
    }

    pub fn tagged(self, tag: u32) -> Var {
        Var { name: self.name, tag }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tag == 0 {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}_{}", self.name, self.tag)
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Const(Sym),
    Var(Var),
    Fn(Sym, Vec<Term>),
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Const(Sym::new(name))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(Var::new(name))
    }

    pub fn func(name: &str, args: Vec<Term>) -> Term {
        assert!(!args.is_empty(), "compound terms need at least one argument");
        Term::Fn(Sym::new(name), args)
    }

    /// `s^n(base)` for a unary function symbol `s`.
    pub fn nested(name: &str, depth: usize, base: Term) -> Term {
        (0..depth).fold(base, |t, _| Term::func(name, vec![t]))
    }

    pub fn nest_depth(&self) -> usize {
        match self {
            Term::Const(_) | Term::Var(_) => 0,
            Term::Fn(_, args) => 1 + args.iter().map(Term::nest_depth).max().unwrap_or(0),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Const(_) => true,
            Term::Var(_) => false,
            Term::Fn(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn occurs(&self, v: Var) -> bool {
        match self {
            Term::Const(_) => false,
            Term::Var(w) => *w == v,
            Term::Fn(_, args) => args.iter().any(|a| a.occurs(v)),
        }
    }

    /// Appends variables in first-occurrence order, skipping ones already seen.
    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Const(_) => {}
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Term::Fn(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn apply(&self, theta: &Substitution) -> Term {
        if theta.is_empty() {
            return self.clone();
        }
        match self {
            Term::Const(_) => self.clone(),
            Term::Var(v) => theta.get(*v).cloned().unwrap_or_else(|| self.clone()),
            Term::Fn(f, args) => Term::Fn(*f, args.iter().map(|a| a.apply(theta)).collect()),
        }
    }

    pub fn map_vars(&self, f: &mut impl FnMut(Var) -> Term) -> Term {
        match self {
            Term::Const(_) => self.clone(),
            Term::Var(v) => f(*v),
            Term::Fn(g, args) => Term::Fn(*g, args.iter().map(|a| a.map_vars(f)).collect()),
        }
    }

    pub fn count_constants(&self) -> usize {
        match self {
            Term::Const(_) => 1,
            Term::Var(_) => 0,
            Term::Fn(_, args) => args.iter().map(Term::count_constants).sum(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Fn(g, args) => {
                write!(f, "{g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

pub const TRUE_NAME: &str = "true";
pub const FALSE_NAME: &str = "false";

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Atom {
    pub pred: Sym,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Atom {
        Atom { pred: Sym::new(pred), args }
    }

    /// ⊤
    pub fn top() -> Atom {
        Atom::new(TRUE_NAME, vec![])
    }

    /// ⊥
    pub fn bottom() -> Atom {
        Atom::new(FALSE_NAME, vec![])
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn nest_depth(&self) -> usize {
        self.args.iter().map(Term::nest_depth).max().unwrap_or(0)
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        self.args.iter().for_each(|a| a.collect_vars(out));
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn apply(&self, theta: &Substitution) -> Atom {
        Atom { pred: self.pred, args: self.args.iter().map(|a| a.apply(theta)).collect() }
    }

    pub fn map_vars(&self, f: &mut impl FnMut(Var) -> Term) -> Atom {
        Atom { pred: self.pred, args: self.args.iter().map(|a| a.map_vars(f)).collect() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pred)?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Definite clause `head :- body`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<Atom>,
}

/// Names used for canonical variable renaming, in order.
pub const CANONICAL_VARS: [&str; 6] = ["x", "y", "z", "v", "w", "u"];

impl Clause {
    pub fn new(head: Atom, body: Vec<Atom>) -> Clause {
        Clause { head, body }
    }

    pub fn fact(head: Atom) -> Clause {
        Clause { head, body: vec![] }
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    /// V(C) in first-occurrence order (head first, left to right).
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.head.collect_vars(&mut out);
        self.body.iter().for_each(|b| b.collect_vars(&mut out));
        out
    }

    pub fn nest_depth(&self) -> usize {
        std::iter::once(&self.head).chain(&self.body).map(Atom::nest_depth).max().unwrap_or(0)
    }

    pub fn count_constants(&self) -> usize {
        std::iter::once(&self.head)
            .chain(&self.body)
            .flat_map(|a| &a.args)
            .map(Term::count_constants)
            .sum()
    }

    pub fn apply(&self, theta: &Substitution) -> Clause {
        Clause {
            head: self.head.apply(theta),
            body: self.body.iter().map(|b| b.apply(theta)).collect(),
        }
    }

    pub fn map_vars(&self, mut f: impl FnMut(Var) -> Term) -> Clause {
        Clause {
            head: self.head.map_vars(&mut f),
            body: self.body.iter().map(|b| b.map_vars(&mut f)).collect(),
        }
    }

    /// Renames variables by first occurrence onto `names`; falls back to
    /// `x6`, `x7`, ... when `names` runs out.
    pub fn canonical_with(&self, names: &[Sym]) -> Clause {
        let order = self.vars();
        self.map_vars(|v| {
            let i = order.iter().position(|w| *w == v).expect("variable collected");
            let name = names.get(i).copied().unwrap_or_else(|| Sym::new(&format!("x{i}")));
            Term::Var(Var { name, tag: 0 })
        })
    }

    pub fn canonical(&self) -> Clause {
        let names: Vec<Sym> = CANONICAL_VARS.iter().map(|s| Sym::new(s)).collect();
        self.canonical_with(&names)
    }

    /// Plain-syntax text of the canonical form; the total order key for clauses.
    pub fn canonical_text(&self) -> String {
        self.canonical().to_string()
    }

    pub fn alpha_eq(&self, other: &Clause) -> bool {
        self.canonical() == other.canonical()
    }

    /// Standardizes the clause apart by tagging every variable.
    pub fn rename(&self, tag: u32) -> Clause {
        self.map_vars(|v| Term::Var(v.tagged(tag)))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        for (i, b) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " :- " } else { ", " })?;
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// DV_n(C): ordered n-tuples of pairwise-distinct variables of the clause.
pub fn distinct_var_tuples(clause: &Clause, n: usize) -> Vec<Vec<Var>> {
    assert!(n >= 1, "tuple length must be positive");
    let vars = clause.vars();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    permutations(&vars, n, &mut current, &mut out);
    out
}

fn permutations(pool: &[Var], n: usize, current: &mut Vec<Var>, out: &mut Vec<Vec<Var>>) {
    if current.len() == n {
        out.push(current.clone());
        return;
    }
    for &v in pool {
        if !current.contains(&v) {
            current.push(v);
            permutations(pool, n, current, out);
            current.pop();
        }
    }
}
