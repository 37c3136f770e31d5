use crate::logic::term::{Term, Var, FALSE_NAME, TRUE_NAME};
use crate::sym::Sym;

/// Variables every problem gets unless it declares its own.
pub const DEFAULT_VARIABLES: [&str; 5] = ["x", "y", "z", "v", "w"];

pub const LIST_CONS: &str = "f";
pub const LIST_NIL: &str = "*";

/// ℒ = (𝒫, ℱ, 𝒜, 𝒱). Each category keeps declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Language {
    pub predicates: Vec<(Sym, usize)>,
    pub functions: Vec<(Sym, usize)>,
    pub constants: Vec<Sym>,
    pub variables: Vec<Sym>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LanguageError {
    #[error("`{0}` is declared twice")]
    Duplicate(String),
    #[error("`{0}` is reserved")]
    Reserved(String),
    #[error("function symbol `{0}` needs arity >= 1")]
    NullaryFunction(String),
}

impl Default for Language {
    fn default() -> Self {
        Language {
            predicates: vec![],
            functions: vec![],
            constants: vec![],
            variables: DEFAULT_VARIABLES.iter().map(|v| Sym::new(v)).collect(),
        }
    }
}

impl Language {
    pub fn new() -> Language {
        Language::default()
    }

    pub fn with_predicate(mut self, name: &str, arity: usize) -> Self {
        self.add_predicate(name, arity).expect("valid predicate");
        self
    }

    pub fn with_function(mut self, name: &str, arity: usize) -> Self {
        self.add_function(name, arity).expect("valid function");
        self
    }

    pub fn with_constants(mut self, names: &[&str]) -> Self {
        for n in names {
            self.add_constant(n).expect("valid constant");
        }
        self
    }

    pub fn with_variables(mut self, names: &[&str]) -> Self {
        self.variables = names.iter().map(|v| Sym::new(v)).collect();
        self
    }

    fn check_fresh(&self, name: &str) -> Result<(), LanguageError> {
        if name == TRUE_NAME || name == FALSE_NAME {
            return Err(LanguageError::Reserved(name.to_owned()));
        }
        let s = Sym::new(name);
        let taken = self.predicates.iter().any(|(p, _)| *p == s)
            || self.functions.iter().any(|(f, _)| *f == s)
            || self.constants.contains(&s)
            || self.variables.contains(&s);
        if taken {
            return Err(LanguageError::Duplicate(name.to_owned()));
        }
        Ok(())
    }

    pub fn add_predicate(&mut self, name: &str, arity: usize) -> Result<(), LanguageError> {
        self.check_fresh(name)?;
        self.predicates.push((Sym::new(name), arity));
        Ok(())
    }

    pub fn add_function(&mut self, name: &str, arity: usize) -> Result<(), LanguageError> {
        if arity == 0 {
            return Err(LanguageError::NullaryFunction(name.to_owned()));
        }
        self.check_fresh(name)?;
        self.functions.push((Sym::new(name), arity));
        Ok(())
    }

    pub fn add_constant(&mut self, name: &str) -> Result<(), LanguageError> {
        self.check_fresh(name)?;
        self.constants.push(Sym::new(name));
        Ok(())
    }

    /// Replaces the variable supply.
    pub fn set_variables(&mut self, names: &[&str]) -> Result<(), LanguageError> {
        self.variables.clear();
        for n in names {
            self.check_fresh(n)?;
            self.variables.push(Sym::new(n));
        }
        Ok(())
    }

    pub fn predicate_arity(&self, name: Sym) -> Option<usize> {
        self.predicates.iter().find(|(p, _)| *p == name).map(|(_, a)| *a)
    }

    pub fn function_arity(&self, name: Sym) -> Option<usize> {
        self.functions.iter().find(|(f, _)| *f == name).map(|(_, a)| *a)
    }

    pub fn is_constant(&self, name: Sym) -> bool {
        self.constants.contains(&name)
    }

    pub fn is_variable(&self, name: Sym) -> bool {
        self.variables.contains(&name)
    }

    pub fn variable_vars(&self) -> Vec<Var> {
        self.variables.iter().map(|&name| Var { name, tag: 0 }).collect()
    }

    /// List sugar is available only with binary `f` and the constant `*`.
    pub fn has_lists(&self) -> bool {
        self.function_arity(Sym::new(LIST_CONS)) == Some(2) && self.is_constant(Sym::new(LIST_NIL))
    }

    pub fn nil() -> Term {
        Term::constant(LIST_NIL)
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::func(LIST_CONS, vec![head, tail])
    }

    /// Builds `[items]` as nested cons cells ending in `*`.
    pub fn list(items: Vec<Term>) -> Term {
        items.into_iter().rev().fold(Language::nil(), |tail, h| Language::cons(h, tail))
    }
}
