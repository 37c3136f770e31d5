//! First-order syntax: terms, atoms, definite clauses, substitutions and
//! unification, plus the textual syntax used by problem files.

pub mod language;
pub mod subst;
pub mod syntax;
pub mod term;

pub use language::{Language, LanguageError};
pub use subst::{match_ground, unifiable, unify, Substitution};
pub use syntax::{parse_atom, parse_atom_at, parse_clause, parse_clause_at, parse_term, ParseError, Printer};
pub use term::{distinct_var_tuples, Atom, Clause, Term, Var};
