//! Learning definite logic programs with function symbols from noisy
//! examples: refinement-based beam search proposes clauses, backward
//! enumeration fixes the relevant ground atoms, and a differentiable
//! forward-chaining model picks the program by gradient descent.

pub mod datasets;
pub mod entailment;
pub mod experiment;
pub mod grounding;
pub mod infer;
pub mod logic;
pub mod problem;
pub mod refinement;
pub mod search;
pub mod sym;
pub mod training;

pub use problem::IlpProblem;
