use std::collections::{HashMap, HashSet};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ilp_core::datasets::{generate, Task, TaskSpec, ALL_TASKS};
use ilp_core::entailment::{forward_closure, ProofConfig};
use ilp_core::experiment::{generate_clauses, prepare_data, run, sweep, RunConfig, RunOutput, SweepAxis, SweepRow};
use ilp_core::grounding::{build_index_tensor, enumerate_atoms, AtomTable, GroundContext};
use ilp_core::infer::{InferConfig, Model, Tape, WeightMode, WeightSet};
use ilp_core::logic::{parse_atom, parse_clause, Atom, Clause, Language, Term};
use ilp_core::refinement::{refine, RefinementConfig};
use ilp_core::search::{beam_search, BeamConfig};
use ilp_core::training::{index_targets, loss_and_grad_with, make_labels};
use ilp_core::IlpProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn c(s: &str) -> Clause {
    parse_clause(s, None).unwrap()
}

fn nat(n: usize) -> Term {
    Term::nested("s", n, Term::constant("0"))
}

fn e(n: usize) -> Atom {
    Atom::new("e", vec![nat(n)])
}

fn golden() -> Outcome {
    let mut failures = Vec::new();

    let lang = Language::new()
        .with_predicate("p", 2)
        .with_predicate("q", 2)
        .with_function("f", 1)
        .with_constants(&["a", "b"])
        .with_variables(&["x", "y", "z"]);
    let refined: HashSet<String> =
        refine(&c("p(x,y)"), &lang, &RefinementConfig::default()).iter().map(Clause::canonical_text).collect();
    for s in ["p(a,y)", "p(x,a)", "p(b,y)", "p(x,b)", "p(x,x)", "p(f(z),y)", "p(x,f(z))", "p(x,y) :- q(x,y)"] {
        if !refined.contains(&c(s).canonical_text()) {
            failures.push(format!("refinement lacks {s}"));
        }
    }

    let mut q = IlpProblem::new(lang.with_constants(&["c"]));
    q.positives = ["p(a,a)", "p(b,b)", "p(b,c)", "p(c,b)"].iter().map(|s| parse_atom(s, None).unwrap()).collect();
    q.background = ["q(b,c)", "q(c,b)"].iter().map(|s| parse_atom(s, None).unwrap()).collect();
    q.initial = vec![c("p(x,y)")];
    let beam =
        beam_search(&q.initial, &q, &BeamConfig::new(2, 2), &RefinementConfig::default(), ProofConfig::new(2));
    let got: HashSet<String> = beam.clauses.iter().map(Clause::canonical_text).collect();
    for s in ["p(x,y)", "p(x,x)", "p(x,y) :- q(x,y)"] {
        if !got.contains(&c(s).canonical_text()) {
            failures.push(format!("beam lacks {s}"));
        }
    }

    let mut q = IlpProblem::new(Language::new().with_predicate("e", 1).with_function("s", 1).with_constants(&["0"]));
    q.positives = vec![e(6)];
    q.negatives = vec![e(1)];
    q.background = vec![e(0)];
    let table = enumerate_atoms(&q, &[c("e(s(s(x))) :- e(x)")], 2, &[]).table;
    let atoms: HashSet<Atom> = table.atoms().iter().cloned().collect();
    let want: HashSet<Atom> = [Atom::bottom(), Atom::top(), e(0), e(1), e(2), e(4), e(6)].into();
    if atoms != want || table.contains(&e(3)) || table.contains(&e(5)) {
        failures.push(format!("enumeration gave {} atoms", atoms.len()));
    }

    let mut t = AtomTable::new();
    for n in [0, 1, 2, 4] {
        t.insert(e(n));
    }
    let x = build_index_tensor(&[c("e(x)"), c("e(s(s(x))) :- e(x)")], &t);
    let row = |i| (0..6).map(|j| x.get(i, j, 0)).collect::<Vec<_>>();
    if row(0) != [0, 1, 1, 1, 1, 1] || row(1) != [0, 1, 0, 0, 2, 4] {
        failures.push(format!("index tensor rows {:?} {:?}", row(0), row(1)));
    }

    if failures.is_empty() {
        outcome(true, "refinement, beam, enumeration and index tensor match")
    } else {
        outcome(false, failures.join("; "))
    }
}

/// Weights putting all mass of row l on `picks[l]`.
fn one_hot(picks: &[usize], clauses: usize) -> WeightSet {
    let mut w = WeightSet::zeros(WeightMode::Multi, picks.len(), clauses);
    for (l, &i) in picks.iter().enumerate() {
        w.data[l * clauses + i] = 1e3;
    }
    w
}

fn oracle_equivalence() -> Outcome {
    let mut mismatches = 0;
    let mut atoms = 0;
    let mut worst = String::new();
    for task in ALL_TASKS {
        let target = task.target_program();
        let steps = task.defaults().steps;
        for seed in 0..100u64 {
            let q = generate(&TaskSpec::new(task, 10, seed));
            let mut clauses = target.clone();
            for init in &q.initial {
                clauses.extend(refine(init, &q.language, &RefinementConfig::default()).into_iter().take(6));
            }
            let ctx = GroundContext::build(&q, &clauses, steps, &[]);
            let w = one_hot(&(0..target.len()).collect::<Vec<_>>(), clauses.len());
            let v = Model::new(&ctx).forward(&w, &InferConfig::new(1e-3, steps)).output().to_vec();
            let truth = forward_closure(&target, &q.background, ctx.table.atoms(), steps);
            for (j, a) in ctx.table.atoms().iter().enumerate() {
                atoms += 1;
                let predicted = v[j].round() == 1.0;
                if predicted != truth.contains(a) {
                    mismatches += 1;
                    worst = format!("{task} seed {seed}: {a} at {}", v[j]);
                }
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches over {atoms} ground atoms in 500 instances {worst}"),
    )
}

fn gradient_instance(rng: &mut ChaCha8Rng, mode: WeightMode) -> (Model, WeightSet, InferConfig) {
    let lang = Language::new()
        .with_predicate("e", 1)
        .with_predicate("o", 1)
        .with_function("s", 1)
        .with_constants(&["0"])
        .with_variables(&["x", "y"]);
    let cfg = RefinementConfig { n_body: 2, n_nest: 2, base_nest: 0 };
    let mut pool = Vec::new();
    for head in [c("e(x)"), c("o(x)")] {
        for r in refine(&head, &lang, &cfg) {
            pool.extend(refine(&r, &lang, &cfg));
            pool.push(r);
        }
    }
    pool.retain(|cl| {
        let hv = cl.head.vars();
        cl.body.iter().all(|b| b.vars().iter().all(|v| hv.contains(v)))
    });
    loop {
        let n = rng.random_range(2..=6);
        let clauses: Vec<Clause> = (0..n).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect();
        let mut q = IlpProblem::new(lang.clone());
        for _ in 0..rng.random_range(1..=4) {
            let k = rng.random_range(0..=8);
            let a = if rng.random_bool(0.5) { e(k) } else { Atom::new("o", vec![nat(k)]) };
            q.positives.push(a);
        }
        q.background = vec![e(0), Atom::new("o", vec![nat(1)])];
        let steps = rng.random_range(1..=3);
        let ctx = GroundContext::build(&q, &clauses, steps, &[]);
        if ctx.num_atoms() > 40 {
            continue;
        }
        let m = rng.random_range(1..=3);
        let w = WeightSet::normal(mode, m, clauses.len(), 1.0, rng);
        return (Model::new(&ctx), w, InferConfig::new(0.1, steps));
    }
}

fn gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for k in 0..40 {
        let mode = if k < 20 { WeightMode::Multi } else { WeightMode::Pair };
        let (model, w, cfg) = gradient_instance(&mut rng, mode);
        let seed: Vec<f64> = (0..model.num_atoms()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |w: &WeightSet| -> f64 {
            model.forward(w, &cfg).output().iter().zip(&seed).map(|(a, b)| a * b).sum()
        };
        let mut tape = model.forward(&w, &cfg);
        let analytic = model.backward(&w, &cfg, &mut tape, &seed);
        let h = 1e-4;
        for i in 0..w.data.len() {
            let mut plus = w.clone();
            plus.data[i] += h;
            let mut minus = w.clone();
            minus.data[i] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let scale = analytic[i].abs().max(numeric.abs());
            if scale > 1e-8 {
                checked += 1;
                worst = worst.max((analytic[i] - numeric).abs() / scale);
            }
        }
    }
    outcome(
        worst < 1e-4,
        format!("max relative error {worst:.2e} over {checked} partials (20 multi and 20 pair instances)"),
    )
}

fn canonical(program: &[Clause]) -> HashSet<String> {
    program.iter().map(Clause::canonical_text).collect()
}

fn target_programs(runs: &HashMap<(Task, u64), RunOutput>) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for task in ALL_TASKS {
        let target = canonical(&task.target_program());
        let mut matched = 0;
        let mut good = 0;
        for seed in SEEDS {
            let rec = &runs[&(task, seed)].record;
            let learned: HashSet<String> = rec.program.iter().map(|l| c(&l.clause).canonical_text()).collect();
            if learned == target {
                matched += 1;
            }
            if rec.test_metrics.mse < 0.01 {
                good += 1;
            }
        }
        let ok = match task {
            Task::Member | Task::Delete => matched >= 3,
            _ => good >= 1,
        };
        pass &= ok;
        parts.push(format!("{task}: exact {matched}/5, test mse<0.01 {good}/5"));
    }
    outcome(pass, parts.join(", "))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn noise_curve(task: Task) -> Vec<(f64, f64)> {
    let values = SweepAxis::Noise.default_values();
    let data = |seed| generate(&TaskSpec::new(task, 50, seed));
    let rows = sweep(data, &RunConfig::for_task(task, 1), SweepAxis::Noise, &values, &SEEDS).expect("noise sweep");
    values.iter().map(|&v| (v, mean(rows.iter().filter(|r| r.value == v).map(|r| r.test_mse)))).collect()
}

fn noise_robustness() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for task in [Task::Member, Task::Subtree] {
        let curve = noise_curve(task);
        let at = |x: f64| curve.iter().find(|(v, _)| (v - x).abs() < 1e-9).unwrap().1;
        let inversions = curve.windows(2).filter(|p| p[1].1 < p[0].1).count();
        let ok = at(0.1) < 0.05 && at(0.0) <= at(0.3) && inversions <= 1;
        pass &= ok;
        parts.push(format!(
            "{task}: mse@0.1 {:.4}, mse@0 {:.4}, mse@0.3 {:.4}, inversions {inversions}",
            at(0.1),
            at(0.0),
            at(0.3)
        ));
    }
    outcome(pass, parts.join("; "))
}

fn clause_budget() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for task in [Task::Append, Task::Delete] {
        let values = SweepAxis::Nclause.default_values();
        let data = |seed| generate(&TaskSpec::new(task, 50, seed));
        let rows: Vec<SweepRow> =
            sweep(data, &RunConfig::for_task(task, 1), SweepAxis::Nclause, &values, &SEEDS).expect("clause sweep");
        let perfect = rows
            .iter()
            .filter(|r| r.generator == "beam" && r.num_clauses <= 40 && r.test_auc == Some(1.0))
            .count();
        let auc_at = |generator: &str| {
            mean(rows.iter().filter(|r| r.value == 10.0 && r.generator == generator).map(|r| r.test_auc.unwrap_or(0.5)))
        };
        let (beam, naive) = (auc_at("beam"), auc_at("naive"));
        let ok = perfect >= 1 && naive < beam;
        pass &= ok;
        parts.push(format!(
            "{task}: beam runs with auc 1.0 and |C|<=40: {perfect}, mean auc at 10 clauses beam {beam:.3} naive {naive:.3}"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn step_time(model: &Model, w: &WeightSet, cfg: &InferConfig, batch: &[(usize, f64)]) -> Duration {
    let mut tape = Tape::default();
    loss_and_grad_with(model, w, cfg, batch, &mut tape);
    let reps = 5;
    let start = Instant::now();
    for _ in 0..reps {
        loss_and_grad_with(model, w, cfg, batch, &mut tape);
    }
    start.elapsed() / reps
}

fn parameter_structure() -> Outcome {
    let multi = WeightSet::zeros(WeightMode::Multi, 2, 12).param_count();
    let pair = WeightSet::zeros(WeightMode::Pair, 2, 12).param_count();

    let task = Task::Plus;
    let q = generate(&TaskSpec::new(task, 50, 1));
    let cfg = RunConfig::for_task(task, 1);
    let (train_q, _) = prepare_data(&q, &cfg);
    let clauses = generate_clauses(&train_q, &cfg);
    let icfg = cfg.train.infer_config();
    let ctx = GroundContext::build(&train_q, &clauses, icfg.steps, &[]);
    let model = Model::new(&ctx);
    let targets = index_targets(&ctx, &make_labels(&train_q)).unwrap();
    let batch = &targets[..cfg.train.batch_size(targets.len())];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let wm = WeightSet::normal(WeightMode::Multi, cfg.train.m, clauses.len(), 0.1, &mut rng);
    let wp = WeightSet::normal(WeightMode::Pair, cfg.train.m, clauses.len(), 0.1, &mut rng);
    let tm = step_time(&model, &wm, &icfg, batch);
    let tp = step_time(&model, &wp, &icfg, batch);
    let n = clauses.len();
    let counts_ok = multi == 24 && pair == 144 && wm.param_count() == cfg.train.m * n && wp.param_count() == n * n;
    outcome(
        counts_ok && tm < tp,
        format!(
            "params 24/144 -> {multi}/{pair}; plus |C|={n} |G|={}: multi {:.2} ms/step, pair {:.2} ms/step",
            ctx.num_atoms(),
            tm.as_secs_f64() * 1e3,
            tp.as_secs_f64() * 1e3
        ),
    )
}

fn grounding_sizes(runs: &HashMap<(Task, u64), RunOutput>) -> Outcome {
    let mut means = Vec::new();
    let mut in_range = true;
    for task in ALL_TASKS {
        let sizes: Vec<usize> = SEEDS
            .iter()
            .map(|&seed| {
                let out = &runs[&(task, seed)];
                let (train_q, _) = prepare_data(&generate(&TaskSpec::new(task, 50, seed)), &out.record.config);
                GroundContext::build(&train_q, &out.clauses, out.record.config.train.steps, &[]).num_atoms()
            })
            .collect();
        in_range &= sizes.iter().all(|&s| (50..=10_000).contains(&s));
        means.push((task, mean(sizes.iter().map(|&s| s as f64))));
    }
    let smallest = means.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    let text: Vec<String> = means.iter().map(|(t, m)| format!("{t} {m:.0}")).collect();
    outcome(in_range && smallest == Task::Member, format!("mean |G| over 5 seeds: {}", text.join(", ")))
}

fn property_suites() -> Outcome {
    let dir = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let binary = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            name.starts_with("properties-") && p.extension().is_none()
        })
        .max_by_key(|p| p.metadata().and_then(|m| m.modified()).ok());
    let start = Instant::now();
    let status = match binary {
        Some(path) => Command::new(path).arg("--quiet").output(),
        None => Command::new(env!("CARGO"))
            .args(["test", "-p", "ilp-core", "--test", "properties", "--quiet"])
            .output(),
    };
    let elapsed = start.elapsed();
    match status {
        Ok(out) => {
            let summary = String::from_utf8_lossy(&out.stdout)
                .lines()
                .find(|l| l.starts_with("test result"))
                .unwrap_or("no summary")
                .to_owned();
            outcome(
                out.status.success() && elapsed < Duration::from_secs(120),
                format!("{summary} in {:.1}s", elapsed.as_secs_f64()),
            )
        }
        Err(err) => outcome(false, format!("could not start property suite: {err}")),
    }
}

fn report(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    println!(
        "{} [{id}] {name}: {} ({:.1}s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        start.elapsed().as_secs_f64()
    );
    o.pass
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= report(1, "worked examples", golden);
    ok &= report(2, "one-hot inference equals symbolic closure", oracle_equivalence);
    ok &= report(3, "analytic gradients equal central differences", gradients);

    let start = Instant::now();
    let mut runs = HashMap::new();
    for task in ALL_TASKS {
        for seed in SEEDS {
            let q = generate(&TaskSpec::new(task, 50, seed));
            let out = run(&q, &RunConfig::for_task(task, seed)).expect("training run");
            runs.insert((task, seed), out);
        }
    }
    println!("      (25 benchmark runs took {:.1}s)", start.elapsed().as_secs_f64());
    ok &= report(4, "learned programs on clean data", || target_programs(&runs));
    ok &= report(5, "test error under label noise", noise_robustness);
    ok &= report(6, "clause budget and naive generation", clause_budget);
    ok &= report(7, "parameter counts and step cost", parameter_structure);
    ok &= report(8, "grounded atom counts", || grounding_sizes(&runs));
    ok &= report(9, "property suites", property_suites);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
