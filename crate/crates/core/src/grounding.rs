//! Ground-atom enumeration by backward chaining from the examples, the
//! clause/atom index tensor, and the initial valuation.

use std::collections::HashMap;

use crate::logic::{match_ground, Atom, Clause};
use crate::problem::IlpProblem;

pub const BOTTOM: usize = 0;
pub const TOP: usize = 1;

/// Ordered ground atoms with ⊥ at 0 and ⊤ at 1.
#[derive(Clone, Debug, Default)]
pub struct AtomTable {
    atoms: Vec<Atom>,
    index: HashMap<Atom, usize>,
}

impl AtomTable {
    pub fn new() -> AtomTable {
        let mut t = AtomTable::default();
        t.insert(Atom::bottom());
        t.insert(Atom::top());
        t
    }

    /// Appends `atom` if absent; returns whether it was added.
    pub fn insert(&mut self, atom: Atom) -> bool {
        if self.index.contains_key(&atom) {
            return false;
        }
        self.index.insert(atom.clone(), self.atoms.len());
        self.atoms.push(atom);
        true
    }

    pub fn index_of(&self, atom: &Atom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.index.contains_key(atom)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    pub table: AtomTable,
    /// Non-ground subgoals met (and dropped) while enumerating.
    pub skipped_nonground: usize,
}

/// Seeds the table with ⊥, ⊤, E⁺, E⁻, ℬ and `extra_seeds`, then `steps`
/// times adds the ground body atoms of every clause whose head matches an
/// atom already present. Appends in clause, atom, body order.
pub fn enumerate_atoms(
    problem: &IlpProblem,
    clauses: &[Clause],
    steps: usize,
    extra_seeds: &[Atom],
) -> Enumeration {
    let mut table = AtomTable::new();
    let seeds = problem
        .positives
        .iter()
        .chain(&problem.negatives)
        .chain(&problem.background)
        .chain(extra_seeds);
    for a in seeds {
        assert!(a.is_ground(), "seed atom must be ground: {a}");
        table.insert(a.clone());
    }
    let mut skipped = 0;
    for _ in 0..steps {
        let mut found: Vec<Atom> = Vec::new();
        let mut found_idx = AtomTable::default();
        for clause in clauses {
            if clause.body.is_empty() {
                continue;
            }
            for g in table.atoms() {
                if g.pred != clause.head.pred {
                    continue;
                }
                let Some(theta) = match_ground(&clause.head, g) else { continue };
                for b in &clause.body {
                    let sub = b.apply(&theta);
                    if !sub.is_ground() {
                        skipped += 1;
                    } else if !table.contains(&sub) && found_idx.insert(sub.clone()) {
                        found.push(sub);
                    }
                }
            }
        }
        if found.is_empty() {
            break;
        }
        for a in found {
            table.insert(a);
        }
    }
    Enumeration { table, skipped_nonground: skipped }
}

/// v₀: 1 on ⊤ and on background atoms, 0 elsewhere.
pub fn convert_background(background: &[Atom], table: &AtomTable) -> Vec<f64> {
    let mut v = vec![0.0; table.len()];
    v[TOP] = 1.0;
    for a in background {
        if let Some(j) = table.index_of(a) {
            v[j] = 1.0;
        }
    }
    v
}

/// Index tensor over clauses × atoms × body positions, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexTensor {
    pub clauses: usize,
    pub atoms: usize,
    /// b: longest body in the clause set, at least 1.
    pub width: usize,
    pub data: Vec<u32>,
}

impl IndexTensor {
    pub fn get(&self, i: usize, j: usize, k: usize) -> usize {
        self.data[(i * self.atoms + j) * self.width + k] as usize
    }

    /// X[i, j, ·]
    pub fn row(&self, i: usize, j: usize) -> &[u32] {
        let at = (i * self.atoms + j) * self.width;
        &self.data[at..at + self.width]
    }

    /// X[i], an atoms × width block.
    pub fn clause_block(&self, i: usize) -> &[u32] {
        let at = i * self.atoms * self.width;
        &self.data[at..at + self.atoms * self.width]
    }
}

/// Subgoals missing from the table or non-ground map to ⊥; short bodies are
/// padded with ⊤; the ⊥ and ⊤ rows map to themselves.
pub fn build_index_tensor(clauses: &[Clause], table: &AtomTable) -> IndexTensor {
    let width = clauses.iter().map(|c| c.body.len()).max().unwrap_or(0).max(1);
    let n = table.len();
    let mut data = vec![BOTTOM as u32; clauses.len() * n * width];
    for (i, clause) in clauses.iter().enumerate() {
        for (j, g) in table.atoms().iter().enumerate() {
            let row = &mut data[(i * n + j) * width..(i * n + j + 1) * width];
            if j == BOTTOM {
                continue;
            }
            if j == TOP {
                row.fill(TOP as u32);
                continue;
            }
            if g.pred != clause.head.pred {
                continue;
            }
            let Some(theta) = match_ground(&clause.head, g) else { continue };
            for (k, slot) in row.iter_mut().enumerate() {
                *slot = match clause.body.get(k) {
                    None => TOP as u32,
                    Some(b) => {
                        let sub = b.apply(&theta);
                        table.index_of(&sub).map_or(BOTTOM as u32, |x| x as u32)
                    }
                };
            }
        }
    }
    IndexTensor { clauses: clauses.len(), atoms: n, width, data }
}

/// Everything the differentiable model needs about one problem and clause set.
#[derive(Clone, Debug)]
pub struct GroundContext {
    pub table: AtomTable,
    pub tensor: IndexTensor,
    pub v0: Vec<f64>,
    pub skipped_nonground: usize,
}

impl GroundContext {
    pub fn build(problem: &IlpProblem, clauses: &[Clause], steps: usize, extra_seeds: &[Atom]) -> GroundContext {
        let en = enumerate_atoms(problem, clauses, steps, extra_seeds);
        let tensor = build_index_tensor(clauses, &en.table);
        let v0 = convert_background(&problem.background, &en.table);
        GroundContext { table: en.table, tensor, v0, skipped_nonground: en.skipped_nonground }
    }

    pub fn num_atoms(&self) -> usize {
        self.table.len()
    }

    pub fn num_clauses(&self) -> usize {
        self.tensor.clauses
    }

    pub fn diagnostic(&self) -> String {
        format!("grounding: |G|={} skipped_nonground={}", self.num_atoms(), self.skipped_nonground)
    }
}
