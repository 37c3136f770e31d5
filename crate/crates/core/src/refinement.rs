//! Downward refinement operators: function application, constant
//! substitution, variable replacement and body-atom addition.

use std::collections::HashSet;

use crate::logic::{distinct_var_tuples, Atom, Clause, Language, Substitution, Term, Var};

/// Syntactic bias applied to refinements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefinementConfig {
    /// Maximum body length.
    pub n_body: usize,
    /// Maximum function nesting a refinement step may introduce.
    pub n_nest: usize,
    /// Nesting already present in the initial clauses; added to `n_nest`.
    pub base_nest: usize,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig { n_body: 1, n_nest: 1, base_nest: 0 }
    }
}

impl RefinementConfig {
    pub fn nest_limit(&self) -> usize {
        self.n_nest + self.base_nest
    }
}

fn substitute(clause: &Clause, z: Var, t: Term) -> Clause {
    clause.apply(&Substitution::from_pairs([(z, t)]))
}

fn fresh_vars(clause: &Clause, lang: &Language) -> Vec<Var> {
    let used = clause.vars();
    lang.variable_vars().into_iter().filter(|v| !used.contains(v)).collect()
}

/// ρ_fun: replace a variable by `f(x1..xn)` over fresh, pairwise distinct
/// variables, taken in the language's variable order.
pub fn rho_fun(clause: &Clause, lang: &Language) -> Vec<Clause> {
    let fresh = fresh_vars(clause, lang);
    let mut out = Vec::new();
    for z in clause.vars() {
        for &(f, arity) in &lang.functions {
            if fresh.len() < arity {
                continue;
            }
            let args = fresh[..arity].iter().map(|v| Term::Var(*v)).collect();
            out.push(substitute(clause, z, Term::Fn(f, args)));
        }
    }
    out
}

/// ρ_sub: replace a variable by a constant.
pub fn rho_sub(clause: &Clause, lang: &Language) -> Vec<Clause> {
    let mut out = Vec::new();
    for z in clause.vars() {
        for &a in &lang.constants {
            out.push(substitute(clause, z, Term::Const(a)));
        }
    }
    out
}

/// ρ_rep: identify two distinct variables, deduplicated up to renaming.
pub fn rho_rep(clause: &Clause, _lang: &Language) -> Vec<Clause> {
    let vars = clause.vars();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &z in &vars {
        for &y in &vars {
            if z == y {
                continue;
            }
            let r = substitute(clause, z, Term::Var(y));
            if seen.insert(r.canonical()) {
                out.push(r);
            }
        }
    }
    out
}

/// ρ_add: append `p(x1..xn)` for every predicate and every tuple in DV_n.
pub fn rho_add(clause: &Clause, lang: &Language) -> Vec<Clause> {
    let mut out = Vec::new();
    for &(p, arity) in &lang.predicates {
        let tuples = if arity == 0 { vec![vec![]] } else { distinct_var_tuples(clause, arity) };
        for tuple in tuples {
            let mut r = clause.clone();
            r.body.push(Atom { pred: p, args: tuple.into_iter().map(Term::Var).collect() });
            out.push(r);
        }
    }
    out
}

/// ρ_ℒ filtered by the bias in `cfg`: alpha-distinct, never alpha-equivalent
/// to `clause`, renamed onto the language's variables and sorted by
/// canonical text.
pub fn refine(clause: &Clause, lang: &Language, cfg: &RefinementConfig) -> Vec<Clause> {
    let own = clause.canonical();
    let depth = clause.nest_depth();
    let mut seen = HashSet::new();
    let mut out: Vec<(String, Clause)> = Vec::new();
    let candidates = rho_fun(clause, lang)
        .into_iter()
        .chain(rho_sub(clause, lang))
        .chain(rho_rep(clause, lang))
        .chain(rho_add(clause, lang));
    for r in candidates {
        if r.body.len() > cfg.n_body {
            continue;
        }
        let d = r.nest_depth();
        if d > depth && d > cfg.nest_limit() {
            continue;
        }
        let canon = r.canonical();
        if canon == own || !seen.insert(canon.clone()) {
            continue;
        }
        out.push((canon.to_string(), r.canonical_with(&lang.variables)));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out.into_iter().map(|(_, c)| c).collect()
}
