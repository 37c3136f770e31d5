//! Substitutions and most general unifiers (Robinson, with occurs check).

use std::fmt;

use crate::logic::term::{Atom, Term, Var};

/// Finite map from variables to terms, kept in binding order.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct Substitution {
    bindings: Vec<(Var, Term)>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Term)>) -> Substitution {
        let mut s = Substitution::new();
        for (v, t) in pairs {
            s.bind(v, t);
        }
        s
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, v: Var) -> Option<&Term> {
        self.bindings.iter().find(|(w, _)| *w == v).map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Var, Term)> {
        self.bindings.iter()
    }

    /// Adds or replaces a binding without touching the others.
    pub fn bind(&mut self, v: Var, t: Term) {
        match self.bindings.iter_mut().find(|(w, _)| *w == v) {
            Some(slot) => slot.1 = t,
            None => self.bindings.push((v, t)),
        }
    }

    /// Follows variable-to-variable chains of a triangular substitution.
    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.get(*v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Fn(f, args) => Term::Fn(*f, args.iter().map(|a| self.resolve(a)).collect()),
            other => other.clone(),
        }
    }

    fn occurs(&self, v: Var, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => *w == v,
            Term::Const(_) => false,
            Term::Fn(_, args) => args.iter().any(|a| self.occurs(v, a)),
        }
    }

    /// Turns triangular bindings into an idempotent substitution.
    fn resolved(self) -> Substitution {
        let bindings = self.bindings.iter().map(|(v, t)| (*v, self.resolve(t))).collect();
        Substitution { bindings }
    }

    /// θσ: apply `self`, then `other`.
    pub fn compose(&self, other: &Substitution) -> Substitution {
        let mut out: Vec<(Var, Term)> =
            self.bindings.iter().map(|(v, t)| (*v, t.apply(other))).collect();
        for (v, t) in &other.bindings {
            if !out.iter().any(|(w, _)| w == v) {
                out.push((*v, t.clone()));
            }
        }
        out.retain(|(v, t)| *t != Term::Var(*v));
        Substitution { bindings: out }
    }

    fn unify_terms(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if self.occurs(*x, t) {
                    return false;
                }
                self.bindings.push((*x, t.clone()));
                true
            }
            (Term::Const(c), Term::Const(d)) => c == d,
            (Term::Fn(f, xs), Term::Fn(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.unify_terms(x, y))
            }
            _ => false,
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}={t}")?;
        }
        f.write_str("}")
    }
}

/// Most general unifier of two atoms, or `None` when they do not unify.
///
/// When two variables meet, the one from `a` becomes the key.
pub fn unify(a: &Atom, b: &Atom) -> Option<Substitution> {
    if a.pred != b.pred || a.args.len() != b.args.len() {
        return None;
    }
    let mut s = Substitution::new();
    for (x, y) in a.args.iter().zip(&b.args) {
        if !s.unify_terms(x, y) {
            return None;
        }
    }
    Some(s.resolved())
}

pub fn unifiable(a: &Atom, b: &Atom) -> bool {
    unify(a, b).is_some()
}

/// One-way matching of `pattern` against a ground atom. Agrees with
/// [`unify`] whenever `ground` has no variables.
pub fn match_ground(pattern: &Atom, ground: &Atom) -> Option<Substitution> {
    if pattern.pred != ground.pred || pattern.args.len() != ground.args.len() {
        return None;
    }
    let mut s = Substitution::new();
    for (p, g) in pattern.args.iter().zip(&ground.args) {
        if !match_term(p, g, &mut s) {
            return None;
        }
    }
    Some(s)
}

fn match_term(p: &Term, g: &Term, s: &mut Substitution) -> bool {
    match (p, g) {
        (Term::Var(v), _) => match s.get(*v) {
            Some(bound) => bound == g,
            None => {
                s.bindings.push((*v, g.clone()));
                true
            }
        },
        (Term::Const(c), Term::Const(d)) => c == d,
        (Term::Fn(f, xs), Term::Fn(h, ys)) => {
            f == h && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_term(x, y, s))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: usize, base: Term) -> Term {
        Term::nested("s", n, base)
    }

    fn zero() -> Term {
        Term::constant("0")
    }

    #[test]
    fn apply_examples() {
        let e = Atom::new("e", vec![Term::var("x")]);
        let theta = Substitution::from_pairs([(Var::new("x"), s(4, zero()))]);
        assert_eq!(e.apply(&theta), Atom::new("e", vec![s(4, zero())]));

        let p = Atom::new("p", vec![Term::var("x"), Term::var("y")]);
        assert_eq!(p.apply(&Substitution::new()), p);

        let pxx = Atom::new("p", vec![Term::var("x"), Term::var("x")]);
        let fyz = Term::func("f", vec![Term::var("y"), Term::var("z")]);
        let theta = Substitution::from_pairs([(Var::new("x"), fyz.clone())]);
        assert_eq!(pxx.apply(&theta), Atom::new("p", vec![fyz.clone(), fyz]));
    }

    #[test]
    fn unify_examples() {
        let a = Atom::new("e", vec![s(2, Term::var("x"))]);
        let b = Atom::new("e", vec![s(6, zero())]);
        let theta = unify(&a, &b).unwrap();
        assert_eq!(theta, Substitution::from_pairs([(Var::new("x"), s(4, zero()))]));

        let a = Atom::new("p", vec![Term::var("x"), Term::var("y")]);
        let b = Atom::new("p", vec![Term::constant("a"), Term::constant("b")]);
        let theta = unify(&a, &b).unwrap();
        assert_eq!(theta.to_string(), "{x=a, y=b}");

        let a = Atom::new("p", vec![Term::var("x")]);
        let b = Atom::new("p", vec![Term::func("f", vec![Term::var("x")])]);
        assert!(unify(&a, &b).is_none());
    }

    #[test]
    fn unify_failures() {
        let a = Atom::new("p", vec![Term::constant("a")]);
        let b = Atom::new("q", vec![Term::constant("a")]);
        assert!(unify(&a, &b).is_none());
        let b = Atom::new("p", vec![Term::constant("b")]);
        assert!(unify(&a, &b).is_none());
        assert!(unify(&Atom::top(), &Atom::bottom()).is_none());
        assert!(unify(&Atom::top(), &Atom::top()).is_some());
    }

    #[test]
    fn mgu_is_idempotent() {
        // p(x, f(y)) vs p(f(z), x): x=f(z), then f(y)=f(z) -> y=z
        let a = Atom::new("p", vec![Term::var("x"), Term::func("f", vec![Term::var("y")])]);
        let b = Atom::new("p", vec![Term::func("f", vec![Term::var("z")]), Term::var("x")]);
        let theta = unify(&a, &b).unwrap();
        assert_eq!(a.apply(&theta), b.apply(&theta));
        assert_eq!(a.apply(&theta).apply(&theta), a.apply(&theta));
    }

    #[test]
    fn compose_applies_in_order() {
        let t1 = Substitution::from_pairs([(Var::new("x"), Term::var("y"))]);
        let t2 = Substitution::from_pairs([(Var::new("y"), Term::constant("a"))]);
        let c = t1.compose(&t2);
        let p = Atom::new("p", vec![Term::var("x"), Term::var("y")]);
        assert_eq!(p.apply(&c), p.apply(&t1).apply(&t2));
    }
}
