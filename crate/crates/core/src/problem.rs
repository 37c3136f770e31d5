use crate::logic::{Atom, Clause, Language};

/// Q = (ℰ⁺, ℰ⁻, ℬ, ℒ) together with the initial clauses 𝒞₀.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IlpProblem {
    pub language: Language,
    pub positives: Vec<Atom>,
    pub negatives: Vec<Atom>,
    pub background: Vec<Atom>,
    pub initial: Vec<Clause>,
}

impl IlpProblem {
    pub fn new(language: Language) -> IlpProblem {
        IlpProblem {
            language,
            positives: vec![],
            negatives: vec![],
            background: vec![],
            initial: vec![],
        }
    }

    pub fn num_examples(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    /// Every example with its label, positives first.
    pub fn labelled(&self) -> Vec<(Atom, bool)> {
        self.positives
            .iter()
            .map(|a| (a.clone(), true))
            .chain(self.negatives.iter().map(|a| (a.clone(), false)))
            .collect()
    }
}
