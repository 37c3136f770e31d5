//! Differentiable forward chaining over a grounded clause set, with exact
//! reverse-mode gradients for the clause weights.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::grounding::{GroundContext, IndexTensor, BOTTOM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// m independent distributions over clauses.
    Multi,
    /// One distribution over ordered clause pairs.
    Pair,
}

/// Clause weights, row-major: `rows × clauses`, where rows is m in multi
/// mode and |𝒞| in pair mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub mode: WeightMode,
    pub rows: usize,
    pub clauses: usize,
    pub data: Vec<f64>,
}

impl WeightSet {
    pub fn zeros(mode: WeightMode, m: usize, clauses: usize) -> WeightSet {
        assert!(clauses >= 1, "need at least one clause");
        let rows = match mode {
            WeightMode::Multi => {
                assert!(m >= 1, "m must be positive");
                m
            }
            WeightMode::Pair => clauses,
        };
        WeightSet { mode, rows, clauses, data: vec![0.0; rows * clauses] }
    }

    /// Entries drawn from N(0, std²).
    pub fn normal<R: Rng + ?Sized>(mode: WeightMode, m: usize, clauses: usize, std: f64, rng: &mut R) -> WeightSet {
        let mut w = WeightSet::zeros(mode, m, clauses);
        let dist = Normal::new(0.0, std).expect("finite std");
        for x in &mut w.data {
            *x = dist.sample(rng);
        }
        w
    }

    pub fn param_count(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.data[l * self.clauses..(l + 1) * self.clauses]
    }

    /// Softmax per row (multi) or over the whole matrix (pair).
    pub fn probabilities(&self) -> Vec<f64> {
        match self.mode {
            WeightMode::Multi => self.data.chunks(self.clauses).flat_map(softmax).collect(),
            WeightMode::Pair => softmax(&self.data),
        }
    }

    /// Per row, or for pair mode per first clause, the most probable column.
    pub fn argmax_rows(&self) -> Vec<usize> {
        self.data
            .chunks(self.clauses)
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
                    .0
            })
            .collect()
    }
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// γ·log Σ exp(x/γ), shifted by the maximum.
pub fn softor(xs: &[f64], gamma: f64) -> f64 {
    assert!(gamma > 0.0, "gamma must be positive");
    match xs {
        [] => f64::NEG_INFINITY,
        [x] => *x,
        _ => {
            let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            max + gamma * xs.iter().map(|&x| scaled_exp(x - max, gamma)).sum::<f64>().ln()
        }
    }
}

/// exp(d/γ) for d ≤ 0, skipping the call once it would underflow.
#[inline]
fn scaled_exp(d: f64, gamma: f64) -> f64 {
    let z = d / gamma;
    if z < -746.0 {
        0.0
    } else {
        z.exp()
    }
}

/// ∂softor/∂x_l: the softmax of x/γ.
pub fn softor_weights(xs: &[f64], gamma: f64) -> Vec<f64> {
    let scaled: Vec<f64> = xs.iter().map(|&x| x / gamma).collect();
    softmax(&scaled)
}

fn softor2(a: f64, b: f64, gamma: f64) -> f64 {
    let (max, min) = if a >= b { (a, b) } else { (b, a) };
    max + gamma * scaled_exp(min - max, gamma).ln_1p()
}

/// Share of the gradient of softor(a, b) that flows to `a`.
fn softor2_weight(a: f64, b: f64, gamma: f64) -> f64 {
    if b <= a {
        1.0 / (1.0 + scaled_exp(b - a, gamma))
    } else {
        let e = scaled_exp(a - b, gamma);
        e / (1.0 + e)
    }
}

/// gather(a, B)[j,k] = a[B[j,k]] for a row-major |𝒢|×width block.
pub fn gather(a: &[f64], block: &[u32], width: usize) -> Vec<Vec<f64>> {
    block.chunks(width).map(|row| row.iter().map(|&i| a[i as usize]).collect()).collect()
}

/// c_i(v)[j] = Π_k v[X[i,j,k]].
pub fn clause_fn(tensor: &IndexTensor, i: usize, v: &[f64]) -> Vec<f64> {
    gather(v, tensor.clause_block(i), tensor.width).into_iter().map(|r| r.iter().product()).collect()
}

/// h(v) = Σ_i probs[i] · c_i(v).
pub fn weighted_sum(probs: &[f64], cs: &[Vec<f64>]) -> Vec<f64> {
    let mut h = vec![0.0; cs.first().map_or(0, Vec::len)];
    for (p, c) in probs.iter().zip(cs) {
        for (hj, cj) in h.iter_mut().zip(c) {
            *hj += p * cj;
        }
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InferConfig {
    pub gamma: f64,
    /// T
    pub steps: usize,
    /// Cap valuations at 1 after every step.
    pub clamp: bool,
}

impl InferConfig {
    pub fn new(gamma: f64, steps: usize) -> InferConfig {
        assert!(gamma > 0.0, "gamma must be positive");
        InferConfig { gamma, steps, clamp: false }
    }
}

/// Rows of X[i] that contain no ⊥ entry; every other row evaluates to 0.
#[derive(Clone, Debug)]
struct SparseClause {
    rows: Vec<u32>,
    idx: Vec<u32>,
}

/// Intermediate values of one forward pass. Buffers are reused when the
/// same tape is passed to [`Model::forward_into`] again.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    steps: usize,
    /// v_0 .. v_T
    valuations: Vec<Vec<f64>>,
    probs: Vec<f64>,
    /// per step: values on every clause's active rows, clause blocks at `Model::offsets`
    clause_out: Vec<Vec<f64>>,
    /// per step: h_1..h_m stored atom-major (multi only)
    mixed: Vec<Vec<f64>>,
    /// per step: r(v_t)
    rule: Vec<Vec<f64>>,
    /// per step: entries capped by the clamp
    capped: Vec<Vec<bool>>,
    scratch: Scratch,
}

#[derive(Clone, Debug, Default)]
struct Scratch {
    g: Vec<f64>,
    dv: Vec<f64>,
    dr: Vec<f64>,
    dc: Vec<f64>,
    dh: Vec<f64>,
    dprobs: Vec<f64>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        &self.valuations[self.steps]
    }

    /// v_0 .. v_T
    pub fn valuations(&self) -> &[Vec<f64>] {
        &self.valuations[..=self.steps]
    }
}

fn slot<T>(v: &mut Vec<Vec<T>>, i: usize) -> &mut Vec<T> {
    if v.len() <= i {
        v.resize_with(i + 1, Vec::new);
    }
    &mut v[i]
}

fn reset(buf: &mut Vec<f64>, len: usize) {
    buf.clear();
    buf.resize(len, 0.0);
}

/// Compiled form of a ground context for repeated inference.
#[derive(Clone, Debug)]
pub struct Model {
    atoms: usize,
    width: usize,
    v0: Vec<f64>,
    clauses: Vec<SparseClause>,
    offsets: Vec<usize>,
}

impl Model {
    pub fn new(ctx: &GroundContext) -> Model {
        Model::from_parts(&ctx.tensor, ctx.v0.clone())
    }

    pub fn from_parts(tensor: &IndexTensor, v0: Vec<f64>) -> Model {
        assert_eq!(v0.len(), tensor.atoms, "v0 length must match the atom count");
        let width = tensor.width;
        let clauses = (0..tensor.clauses)
            .map(|i| {
                let mut sc = SparseClause { rows: Vec::new(), idx: Vec::new() };
                for (j, row) in tensor.clause_block(i).chunks(width).enumerate() {
                    if row.iter().all(|&x| x as usize != BOTTOM) {
                        sc.rows.push(j as u32);
                        sc.idx.extend_from_slice(row);
                    }
                }
                sc
            })
            .collect::<Vec<SparseClause>>();
        let mut offsets = vec![0];
        for sc in &clauses {
            offsets.push(offsets.last().unwrap() + sc.rows.len());
        }
        Model { atoms: tensor.atoms, width, v0, clauses, offsets }
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms
    }

    pub fn v0(&self) -> &[f64] {
        &self.v0
    }

    fn clause_values(&self, v: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for sc in &self.clauses {
            match self.width {
                1 => out.extend(sc.idx.iter().map(|&x| v[x as usize])),
                2 => out.extend(sc.idx.chunks_exact(2).map(|r| v[r[0] as usize] * v[r[1] as usize])),
                w => out.extend(sc.idx.chunks_exact(w).map(|r| r.iter().map(|&x| v[x as usize]).product::<f64>())),
            }
        }
    }

    fn block<'a>(&self, flat: &'a [f64], i: usize) -> &'a [f64] {
        &flat[self.offsets[i]..self.offsets[i + 1]]
    }

    fn dense(&self, i: usize, vals: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.atoms];
        for (&j, &x) in self.clauses[i].rows.iter().zip(vals) {
            out[j as usize] = x;
        }
        out
    }

    /// T steps of v ← softor(v, r(v)) from v₀, keeping what backward needs.
    pub fn forward(&self, w: &WeightSet, cfg: &InferConfig) -> Tape {
        let mut tape = Tape::default();
        self.forward_into(w, cfg, &mut tape);
        tape
    }

    /// As [`Model::forward`], writing into an existing tape.
    pub fn forward_into(&self, w: &WeightSet, cfg: &InferConfig, tape: &mut Tape) {
        assert_eq!(w.clauses, self.num_clauses(), "weight width must match the clause count");
        let n = self.num_clauses();
        tape.steps = cfg.steps;
        tape.probs = w.probabilities();
        let v0 = slot(&mut tape.valuations, 0);
        v0.clear();
        v0.extend_from_slice(&self.v0);
        for t in 0..cfg.steps {
            let (done, rest) = tape.valuations.split_at_mut(t + 1);
            let v = &done[t];
            let cs = slot(&mut tape.clause_out, t);
            self.clause_values(v, cs);
            let rule = slot(&mut tape.rule, t);
            reset(rule, self.atoms);
            match w.mode {
                WeightMode::Multi => {
                    let m = w.rows;
                    let hs = slot(&mut tape.mixed, t);
                    reset(hs, self.atoms * m);
                    let mut p = vec![0.0; m];
                    for (i, sc) in self.clauses.iter().enumerate() {
                        for (l, pl) in p.iter_mut().enumerate() {
                            *pl = tape.probs[l * n + i];
                        }
                        for (&j, &c) in sc.rows.iter().zip(self.block(cs, i)) {
                            let h = &mut hs[j as usize * m..(j as usize + 1) * m];
                            for (hl, pl) in h.iter_mut().zip(&p) {
                                *hl += pl * c;
                            }
                        }
                    }
                    for (rj, h) in rule.iter_mut().zip(hs.chunks(m)) {
                        *rj = softor(h, cfg.gamma);
                    }
                }
                WeightMode::Pair => {
                    let dense: Vec<Vec<f64>> = (0..n).map(|i| self.dense(i, self.block(cs, i))).collect();
                    for a in 0..n {
                        for b in 0..n {
                            let p = tape.probs[a * n + b];
                            for (j, rj) in rule.iter_mut().enumerate() {
                                *rj += p * softor2(dense[a][j], dense[b][j], cfg.gamma);
                            }
                        }
                    }
                }
            }
            if rest.is_empty() {
                tape.valuations.push(Vec::new());
            }
            let (done, rest) = tape.valuations.split_at_mut(t + 1);
            let v = &done[t];
            let next = &mut rest[0];
            next.clear();
            next.extend(v.iter().zip(rule.iter()).map(|(&a, &b)| softor2(a, b, cfg.gamma)));
            next[BOTTOM] = 0.0;
            let capped = slot(&mut tape.capped, t);
            capped.clear();
            capped.resize(self.atoms, false);
            if cfg.clamp {
                for (x, c) in next.iter_mut().zip(capped.iter_mut()) {
                    if *x > 1.0 {
                        *x = 1.0;
                        *c = true;
                    }
                }
            }
        }
    }

    /// Gradient of a scalar loss with respect to the weights, given its
    /// gradient with respect to v_T.
    pub fn backward(&self, w: &WeightSet, cfg: &InferConfig, tape: &mut Tape, grad_out: &[f64]) -> Vec<f64> {
        assert_eq!(grad_out.len(), self.atoms);
        let n = self.num_clauses();
        let mut sc = std::mem::take(&mut tape.scratch);
        reset(&mut sc.dprobs, tape.probs.len());
        sc.g.clear();
        sc.g.extend_from_slice(grad_out);
        for t in (0..tape.steps).rev() {
            let v = &tape.valuations[t];
            let r = &tape.rule[t];
            let cs = &tape.clause_out[t];
            let g = &mut sc.g;
            g[BOTTOM] = 0.0;
            for (gj, &c) in g.iter_mut().zip(&tape.capped[t]) {
                if c {
                    *gj = 0.0;
                }
            }
            reset(&mut sc.dv, self.atoms);
            reset(&mut sc.dr, self.atoms);
            let (dv, dr) = (&mut sc.dv, &mut sc.dr);
            for j in 0..self.atoms {
                let a = softor2_weight(v[j], r[j], cfg.gamma);
                dv[j] = g[j] * a;
                dr[j] = g[j] * (1.0 - a);
            }
            // gradient with respect to each clause's active-row outputs
            reset(&mut sc.dc, cs.len());
            let dc = &mut sc.dc;
            let dprobs = &mut sc.dprobs;
            match w.mode {
                WeightMode::Multi => {
                    let hs = &tape.mixed[t];
                    let m = w.rows;
                    reset(&mut sc.dh, self.atoms * m);
                    let dh = &mut sc.dh;
                    for j in 0..self.atoms {
                        if dr[j] == 0.0 {
                            continue;
                        }
                        let h = &hs[j * m..(j + 1) * m];
                        let d = &mut dh[j * m..(j + 1) * m];
                        if m == 1 {
                            d[0] = dr[j];
                            continue;
                        }
                        let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        let mut z = 0.0;
                        for (dl, &hl) in d.iter_mut().zip(h) {
                            *dl = scaled_exp(hl - max, cfg.gamma);
                            z += *dl;
                        }
                        for dl in d.iter_mut() {
                            *dl *= dr[j] / z;
                        }
                    }
                    let mut p = vec![0.0; m];
                    let mut acc = vec![0.0; m];
                    for (i, clause) in self.clauses.iter().enumerate() {
                        for (l, pl) in p.iter_mut().enumerate() {
                            *pl = tape.probs[l * n + i];
                        }
                        acc.iter_mut().for_each(|a| *a = 0.0);
                        let base = self.offsets[i];
                        for (k, (&j, &c)) in clause.rows.iter().zip(self.block(cs, i)).enumerate() {
                            let d = &dh[j as usize * m..(j as usize + 1) * m];
                            let mut s = 0.0;
                            for l in 0..m {
                                acc[l] += d[l] * c;
                                s += p[l] * d[l];
                            }
                            dc[base + k] += s;
                        }
                        for l in 0..m {
                            dprobs[l * n + i] += acc[l];
                        }
                    }
                }
                WeightMode::Pair => {
                    let dense: Vec<Vec<f64>> = (0..n).map(|i| self.dense(i, self.block(cs, i))).collect();
                    let mut ddense = vec![vec![0.0; self.atoms]; n];
                    for a in 0..n {
                        for b in 0..n {
                            let p = tape.probs[a * n + b];
                            let mut acc = 0.0;
                            for j in 0..self.atoms {
                                if dr[j] == 0.0 {
                                    continue;
                                }
                                let (x, y) = (dense[a][j], dense[b][j]);
                                acc += dr[j] * softor2(x, y, cfg.gamma);
                                let s = softor2_weight(x, y, cfg.gamma);
                                ddense[a][j] += p * dr[j] * s;
                                ddense[b][j] += p * dr[j] * (1.0 - s);
                            }
                            dprobs[a * n + b] += acc;
                        }
                    }
                    for (i, clause) in self.clauses.iter().enumerate() {
                        for (k, &j) in clause.rows.iter().enumerate() {
                            dc[self.offsets[i] + k] = ddense[i][j as usize];
                        }
                    }
                }
            }
            for (i, clause) in self.clauses.iter().enumerate() {
                let dci = &dc[self.offsets[i]..self.offsets[i + 1]];
                if self.width == 1 {
                    for (&x, &d) in clause.idx.iter().zip(dci) {
                        dv[x as usize] += d;
                    }
                    continue;
                }
                for (row, &d) in clause.idx.chunks_exact(self.width).zip(dci) {
                    if d == 0.0 {
                        continue;
                    }
                    match *row {
                        [x0, x1] => {
                            let (x0, x1) = (x0 as usize, x1 as usize);
                            dv[x0] += d * v[x1];
                            dv[x1] += d * v[x0];
                        }
                        [x0, x1, x2] => {
                            let (x0, x1, x2) = (x0 as usize, x1 as usize, x2 as usize);
                            dv[x0] += d * v[x1] * v[x2];
                            dv[x1] += d * v[x0] * v[x2];
                            dv[x2] += d * v[x0] * v[x1];
                        }
                        _ => {
                            for a in 0..row.len() {
                                let mut others = d;
                                for (b, &xb) in row.iter().enumerate() {
                                    if b != a {
                                        others *= v[xb as usize];
                                    }
                                }
                                dv[row[a] as usize] += others;
                            }
                        }
                    }
                }
            }
            std::mem::swap(&mut sc.g, &mut sc.dv);
        }
        let out = softmax_backward(w, &tape.probs, &sc.dprobs);
        tape.scratch = sc;
        out
    }
}

fn softmax_backward(w: &WeightSet, probs: &[f64], dprobs: &[f64]) -> Vec<f64> {
    let block = match w.mode {
        WeightMode::Multi => w.clauses,
        WeightMode::Pair => probs.len(),
    };
    let mut out = Vec::with_capacity(probs.len());
    for (p, d) in probs.chunks(block).zip(dprobs.chunks(block)) {
        let dot: f64 = p.iter().zip(d).map(|(a, b)| a * b).sum();
        out.extend(p.iter().zip(d).map(|(a, b)| a * (b - dot)));
    }
    out
}

/// v_T for the given weights.
pub fn infer(ctx: &GroundContext, w: &WeightSet, cfg: &InferConfig) -> Vec<f64> {
    Model::new(ctx).forward(w, cfg).output().to_vec()
}
