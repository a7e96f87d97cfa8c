//! Sampled verification of the algebraic laws: a registry of law cases, an
//! instance generator per case, and a deterministic parallel runner.

mod expansion;
mod gen;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::equiv::{check_with, CheckOptions, Flavor, Strength, Witness};
use crate::lts::{Bounds, Scope};
use crate::sos::Direction;
use crate::term::{is_fully_executed, max_key, sort, with_complements, Action, Definitions, Label, Process, RelabelMap};

pub use expansion::{erase, expansion_lhs, expansion_rhs, prune};
pub use gen::{constants, gen_terms, names, Gen, GenConfig, CONSTANTS, MAX_SAMPLE_ACTIONS};

/// Larger instances are redrawn: their state spaces grow exponentially
/// with the number of parallel prefixes.
pub const MAX_INSTANCE_ACTIONS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Equivalent,
    Inequivalent,
    /// The equation is claimed in the literature but fails here; a pinned
    /// counterexample must stay inequivalent.
    Refuted,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub lhs: Process,
    pub rhs: Process,
    pub defs: Definitions,
}

impl Instance {
    fn new(lhs: Process, rhs: Process, g: &Gen) -> Instance {
        Instance { lhs, rhs, defs: g.defs.clone() }
    }
}

type InstanceFn = Arc<dyn Fn(&mut Gen, &Bounds) -> Option<Instance> + Send + Sync>;

#[derive(Clone)]
pub struct LawCase {
    /// `item/strength-flavor`, e.g. `static.4/strong-hp`.
    pub id: String,
    /// Law item, e.g. `static.4`.
    pub item: String,
    pub template: (&'static str, &'static str),
    pub flavor: Flavor,
    pub strength: Strength,
    pub scope: Scope,
    pub expect: Expect,
    instance: InstanceFn,
    pinned: Option<fn() -> Instance>,
}

impl LawCase {
    /// One sampled instantiation, retried until the side conditions hold.
    pub fn instantiate(&self, g: &mut Gen, bounds: &Bounds) -> Option<Instance> {
        (0..100).find_map(|_| (self.instance)(g, bounds).filter(|i| instance_weight(i) <= MAX_INSTANCE_ACTIONS))
    }

    pub fn pinned(&self) -> Option<Instance> {
        self.pinned.map(|f| f())
    }

    pub fn options(&self, bounds: Bounds) -> CheckOptions {
        CheckOptions::new(self.flavor, self.strength, bounds).scope(self.scope)
    }
}

impl std::fmt::Debug for LawCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LawCase({})", self.id)
    }
}

fn scope_name(s: Scope) -> &'static str {
    match s {
        Scope::ForwardReverse => "fr",
        Scope::Forward => "f",
        Scope::Reverse => "r",
    }
}

fn weight(p: &Process, defs: &Definitions, fuel: usize) -> usize {
    match p {
        Process::Const(c) if fuel > 0 => defs.map.get(c).map_or(0, |b| weight(b, defs, fuel - 1)),
        Process::Prefix(a, b) => a.len() + weight(b, defs, fuel),
        _ => p.children().map(|c| weight(c, defs, fuel)).sum(),
    }
}

/// Unexecuted prefixes of the larger side, constants unfolded.
pub fn instance_weight(inst: &Instance) -> usize {
    weight(&inst.lhs, &inst.defs, 8).max(weight(&inst.rhs, &inst.defs, 8))
}

/// Bounds wide and deep enough that a finite instance is never truncated.
pub fn instance_bounds(base: &Bounds, inst: &Instance) -> Bounds {
    let n = instance_weight(inst);
    Bounds { max_depth: base.max_depth.max(n), max_width: base.max_width.max(n), max_states: base.max_states }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub related: bool,
    pub bounded: bool,
}

pub fn evaluate(case: &LawCase, inst: &Instance, bounds: &Bounds) -> Outcome {
    let opts = case.options(instance_bounds(bounds, inst));
    match check_with(&inst.lhs, &inst.rhs, &inst.defs, &opts) {
        Ok(v) => Outcome { related: v.related, bounded: v.bounded },
        Err(_) => Outcome { related: false, bounded: true },
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FailingInstance {
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LawResult {
    pub law_id: String,
    pub item: String,
    pub flavor: Flavor,
    pub strength: Strength,
    pub scope: String,
    pub expect: Expect,
    pub samples: usize,
    /// Instances on which the stated equation (or inequation) held.
    pub passes: usize,
    /// Instances on which it did not, on untruncated state spaces.
    pub fails: usize,
    /// Verdicts limited by exploration bounds.
    pub bounded: usize,
    /// Refuted laws: the pinned counterexample is still inequivalent.
    pub pinned_refuted: Option<bool>,
    pub failing: Vec<FailingInstance>,
}

impl LawResult {
    pub fn ok(&self) -> bool {
        match self.expect {
            Expect::Refuted => self.pinned_refuted == Some(true),
            _ => self.fails == 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub samples: usize,
    pub results: Vec<LawResult>,
    /// Congruence input pairs rejected as not equivalent.
    pub rejected: usize,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.results.iter().all(LawResult::ok)
    }

    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| !r.ok()).count()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let w = self.results.iter().map(|r| r.law_id.len()).max().unwrap_or(4).max(4);
        let _ = writeln!(out, "{:w$}  {:>7}  {:>5}  {:>5}  {:>7}  status", "law", "samples", "pass", "fail", "bounded");
        for r in &self.results {
            let status = match (r.expect, r.ok()) {
                (Expect::Refuted, true) => "refuted",
                (Expect::Refuted, false) => "FAIL (pinned counterexample no longer refutes)",
                (_, true) => "ok",
                (_, false) => "FAIL",
            };
            let _ = writeln!(out, "{:w$}  {:>7}  {:>5}  {:>5}  {:>7}  {status}", r.law_id, r.samples, r.passes, r.fails, r.bounded);
            if r.expect != Expect::Refuted {
                for f in &r.failing {
                    let _ = writeln!(out, "    counterexample: {}  vs  {}", f.lhs, f.rhs);
                }
            }
        }
        if self.rejected > 0 {
            let _ = writeln!(out, "rejected input pairs: {}", self.rejected);
        }
        let _ = writeln!(
            out,
            "summary: {} cases, {} failing, seed {}, {} samples each",
            self.results.len(),
            self.failures(),
            self.seed,
            self.samples
        );
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

fn fnv(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn sample_rng(seed: u64, id: &str, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv(id));
    rng.set_stream(i as u64);
    rng
}

fn case_config(cfg: &GenConfig, case: &LawCase) -> GenConfig {
    let mut c = cfg.clone();
    if case.strength == Strength::Weak {
        c.include_tau = true;
    }
    c
}

/// Runs `samples` instantiations of every case, in parallel, with results
/// independent of scheduling.
pub fn run_law_suite(cfg: &GenConfig, laws: &[LawCase], bounds: &Bounds, samples: usize) -> Report {
    let jobs: Vec<(usize, usize)> = (0..laws.len()).flat_map(|c| (0..samples).map(move |i| (c, i))).collect();
    let outcomes: Vec<(usize, Option<(Instance, Outcome)>)> = jobs
        .par_iter()
        .map(|&(c, i)| {
            let case = &laws[c];
            let mut g = Gen::with_rng(case_config(cfg, case), sample_rng(cfg.seed, &case.id, i));
            let inst = case.instantiate(&mut g, bounds);
            (
                c,
                inst.map(|inst| {
                    let o = evaluate(case, &inst, bounds);
                    (inst, o)
                }),
            )
        })
        .collect();
    let pinned: Vec<Option<bool>> = laws.par_iter().map(|case| case.pinned().map(|inst| !evaluate(case, &inst, bounds).related)).collect();
    let mut results: Vec<LawResult> = laws
        .iter()
        .zip(pinned)
        .map(|(case, pinned_refuted)| LawResult {
            law_id: case.id.clone(),
            item: case.item.clone(),
            flavor: case.flavor,
            strength: case.strength,
            scope: scope_name(case.scope).into(),
            expect: case.expect,
            samples: 0,
            passes: 0,
            fails: 0,
            bounded: 0,
            pinned_refuted,
            failing: vec![],
        })
        .collect();
    for (c, res) in outcomes {
        let r = &mut results[c];
        let Some((inst, o)) = res else { continue };
        r.samples += 1;
        if o.bounded {
            r.bounded += 1;
        }
        let want = laws[c].expect != Expect::Inequivalent;
        if o.related == want {
            r.passes += 1;
        } else if !o.bounded {
            r.fails += 1;
            if r.failing.len() < 5 {
                r.failing.push(FailingInstance { lhs: inst.lhs.to_string(), rhs: inst.rhs.to_string() });
            }
        }
    }
    Report { seed: cfg.seed, samples, results, rejected: 0 }
}

fn verified(p: &Process, q: &Process, defs: &Definitions, bounds: &Bounds, flavor: Flavor, strength: Strength) -> bool {
    let inst = Instance { lhs: p.clone(), rhs: q.clone(), defs: defs.clone() };
    let opts = CheckOptions::new(flavor, strength, instance_bounds(bounds, &inst));
    check_with(p, q, defs, &opts).is_ok_and(|v| v.related && !v.bounded)
}

/// An equivalent pair drawn from the monoid and static laws (and the last
/// τ-law for weak checks), confirmed by the checker.
pub fn equivalent_pair(g: &mut Gen, flavor: Flavor, strength: Strength, bounds: &Bounds) -> Option<(Process, Process)> {
    for _ in 0..20 {
        let pick = g.rng.gen_range(0..if strength == Strength::Weak { 17 } else { 16 });
        let inst = match pick {
            0..=3 => monoid(pick + 1, g),
            4..=14 => static_law(pick - 3, g),
            15 => Some(Instance::new(g.standard_at(2), g.standard_at(2), g)).map(|i| Instance { rhs: i.lhs.clone(), ..i }),
            _ => tau_law(13, g),
        };
        // leave room for the context around the pair
        let Some(inst) = inst.filter(|i| instance_weight(i) <= MAX_INSTANCE_ACTIONS - 4) else { continue };
        if verified(&inst.lhs, &inst.rhs, &inst.defs, bounds, flavor, strength) {
            return Some((inst.lhs, inst.rhs));
        }
    }
    None
}

/// Runs both sides of an equivalent pair to related, fully executed states.
pub fn executed_pair(p: &Process, q: &Process, defs: &Definitions, bounds: &Bounds, strength: Strength) -> Option<(Process, Process)> {
    let inst = Instance { lhs: p.clone(), rhs: q.clone(), defs: defs.clone() };
    let opts = CheckOptions::new(Flavor::Step, strength, instance_bounds(bounds, &inst));
    let v = check_with(p, q, defs, &opts).ok()?;
    let Some(Witness::Pairs(pairs)) = &v.witness else { return None };
    let mut s = v.left.initial;
    for _ in 0..64 {
        match v.left.outgoing(s, Direction::Forward).next() {
            Some(e) => s = e.dst,
            None => break,
        }
    }
    let left = &v.left.states[s].term;
    if !is_fully_executed(left) {
        return None;
    }
    let r = pairs.iter().filter(|(a, _)| *a == s).map(|(_, b)| *b).find(|b| is_fully_executed(&v.right.states[*b].term))?;
    Some((left.clone(), v.right.states[r].term.clone()))
}

pub const CONTEXTS: [char; 8] = ['a', 'b', 'c', 'd', 'e', 'f', 'g', 'h'];

fn context_scope(schema: char) -> Scope {
    match schema {
        'a' | 'b' => Scope::Forward,
        'c' | 'd' => Scope::Reverse,
        _ => Scope::ForwardReverse,
    }
}

/// Places an equivalent pair into context `schema`. Reverse contexts first
/// run the pair to executed states.
pub fn in_context(
    schema: char,
    p1: &Process,
    p2: &Process,
    g: &mut Gen,
    bounds: &Bounds,
    flavor: Flavor,
    strength: Strength,
) -> Option<(Process, Process)> {
    let multi = |g: &mut Gen| {
        let n = g.rng.gen_range(2..=3);
        let mut v: Vec<Action> = (0..n).map(|_| g.action()).collect();
        v.sort();
        v
    };
    Some(match schema {
        'a' => {
            let a = g.action();
            (Process::prefix(a.clone(), p1.clone()), Process::prefix(a, p2.clone()))
        }
        'b' => {
            let acts = multi(g);
            (Process::Prefix(acts.clone(), Arc::new(p1.clone())), Process::Prefix(acts, Arc::new(p2.clone())))
        }
        'c' | 'd' => {
            let (x1, x2) = executed_pair(p1, p2, &g.defs, bounds, strength)?;
            if !verified(&x1, &x2, &g.defs, bounds, flavor, strength) {
                return None;
            }
            let m = max_key(&x1).max(max_key(&x2)) + 1;
            let acts = if schema == 'c' { vec![g.action()] } else { multi(g) };
            let past = Process::Past(acts, m, Arc::new(Process::Nil));
            (Process::seq(x1, past.clone()), Process::seq(x2, past))
        }
        'e' => {
            let q = g.standard_at(2);
            (Process::sum(p1.clone(), q.clone()), Process::sum(p2.clone(), q))
        }
        'f' => {
            let q = g.standard_at(2);
            (Process::par(p1.clone(), q.clone()), Process::par(p2.clone(), q))
        }
        'g' => {
            let l = g.label_set();
            (Process::restrict(p1.clone(), l.clone()), Process::restrict(p2.clone(), l))
        }
        _ => {
            let f = g.relabel();
            (Process::relabel(p1.clone(), f.clone()), Process::relabel(p2.clone(), f))
        }
    })
}

/// Wraps each pair in every context schema and re-checks it. Pairs that are
/// not equivalent to begin with are rejected and counted.
pub fn check_congruence(
    pairs: &[(Process, Process)],
    defs: &Definitions,
    cfg: &GenConfig,
    bounds: &Bounds,
    flavor: Flavor,
    strength: Strength,
) -> Report {
    let accepted: Vec<&(Process, Process)> = pairs.par_iter().filter(|(p, q)| verified(p, q, defs, bounds, flavor, strength)).collect();
    let rejected = pairs.len() - accepted.len();
    let jobs: Vec<(usize, char)> = (0..accepted.len()).flat_map(|i| CONTEXTS.iter().map(move |c| (i, *c))).collect();
    let outcomes: Vec<(char, Option<(Process, Process, Outcome)>)> = jobs
        .par_iter()
        .map(|&(i, schema)| {
            let id = format!("congruence.{schema}");
            let mut g = Gen::with_rng(cfg.clone(), sample_rng(cfg.seed, &id, i));
            g.defs = defs.clone();
            let (p1, p2) = accepted[i];
            let wrapped = (0..20).find_map(|_| in_context(schema, p1, p2, &mut g, bounds, flavor, strength));
            let res = wrapped.map(|(l, r)| {
                let inst = Instance { lhs: l.clone(), rhs: r.clone(), defs: defs.clone() };
                let opts = CheckOptions::new(flavor, strength, instance_bounds(bounds, &inst)).scope(context_scope(schema));
                let o = match check_with(&l, &r, defs, &opts) {
                    Ok(v) => Outcome { related: v.related, bounded: v.bounded },
                    Err(_) => Outcome { related: false, bounded: true },
                };
                (l, r, o)
            });
            (schema, res)
        })
        .collect();
    let mut results: Vec<LawResult> = CONTEXTS
        .iter()
        .map(|c| LawResult {
            law_id: format!("congruence.{c}/{strength}-{flavor}"),
            item: format!("congruence.{c}"),
            flavor,
            strength,
            scope: scope_name(context_scope(*c)).into(),
            expect: Expect::Equivalent,
            samples: 0,
            passes: 0,
            fails: 0,
            bounded: 0,
            pinned_refuted: None,
            failing: vec![],
        })
        .collect();
    for (schema, res) in outcomes {
        let r = &mut results[CONTEXTS.iter().position(|c| *c == schema).unwrap()];
        let Some((l, rr, o)) = res else { continue };
        r.samples += 1;
        if o.bounded {
            r.bounded += 1;
        }
        if o.related {
            r.passes += 1;
        } else if !o.bounded {
            r.fails += 1;
            if r.failing.len() < 5 {
                r.failing.push(FailingInstance { lhs: l.to_string(), rhs: rr.to_string() });
            }
        }
    }
    Report { seed: cfg.seed, samples: accepted.len(), results, rejected }
}

// ---- law instances ----

fn monoid(item: usize, g: &mut Gen) -> Option<Instance> {
    let (p, q, r) = (g.standard(), g.standard(), g.standard());
    let (l, rhs) = match item {
        1 => (Process::sum(p.clone(), q.clone()), Process::sum(q, p)),
        2 => (Process::sum(p.clone(), Process::sum(q.clone(), r.clone())), Process::sum(Process::sum(p, q), r)),
        3 => (Process::sum(p.clone(), p.clone()), p),
        _ => (Process::sum(p.clone(), Process::Nil), p),
    };
    Some(Instance::new(l, rhs, g))
}

fn sort_names(p: &Process, defs: &Definitions) -> Option<BTreeSet<Label>> {
    let s = sort(p, defs, 16).ok()?;
    if s.lower_bound {
        return None;
    }
    Some(s.labels)
}

fn static_law(item: usize, g: &mut Gen) -> Option<Instance> {
    let (p, q, r) = (g.standard(), g.standard(), g.standard());
    let defs = g.defs.clone();
    let (l, rhs) = match item {
        1 => (Process::par(p.clone(), q.clone()), Process::par(q, p)),
        2 => (Process::par(p.clone(), Process::par(q.clone(), r.clone())), Process::par(Process::par(p, q), r)),
        3 => (Process::par(p.clone(), Process::Nil), p),
        4 => {
            let sp = with_complements(&sort_names(&p, &defs)?);
            let l: BTreeSet<Label> = g.label_set().into_iter().filter(|x| !sp.contains(x)).collect();
            (Process::restrict(p.clone(), l), p)
        }
        5 => {
            let (k, l) = (g.label_set(), g.label_set());
            let kl = k.union(&l).cloned().collect();
            (Process::restrict(Process::restrict(p.clone(), k), l), Process::restrict(p, kl))
        }
        6 => {
            let f = g.relabel();
            let l = g.label_set();
            let mut universe: BTreeSet<String> = names(g.cfg.alphabet).into_iter().collect();
            universe.extend(sort_names(&p, &defs)?.into_iter().map(|x| x.name.to_string()));
            universe.extend(f.0.keys().cloned());
            let pre: BTreeSet<Label> =
                universe.into_iter().filter(|n| crate::term::blocks(&l, &f.label(&Label::plain(n)))).map(|n| Label::plain(&n)).collect();
            (Process::restrict(Process::relabel(p.clone(), f.clone()), l), Process::relabel(Process::restrict(p, pre), f))
        }
        7 => {
            let sp = sort_names(&p, &defs)?;
            let sq = sort_names(&q, &defs)?;
            let l: BTreeSet<Label> = g
                .label_set()
                .into_iter()
                .filter(|x| !sp.iter().any(|a| sq.contains(&a.complement()) && crate::term::blocks(&[x.clone()].into(), a)))
                .collect();
            (
                Process::restrict(Process::par(p.clone(), q.clone()), l.clone()),
                Process::par(Process::restrict(p, l.clone()), Process::restrict(q, l)),
            )
        }
        8 => (Process::relabel(p.clone(), RelabelMap::identity()), p),
        9 => {
            let f = g.relabel();
            let sp: BTreeSet<String> = sort_names(&p, &defs)?.into_iter().map(|x| x.name.to_string()).collect();
            let mut f2 = f.clone();
            for n in names(g.cfg.alphabet) {
                if !sp.contains(&n) && g.rng.gen_bool(0.7) {
                    let t = g.label();
                    f2.0.insert(n, t);
                }
            }
            (Process::relabel(p.clone(), f), Process::relabel(p, f2))
        }
        10 => {
            let (f, f2) = (g.relabel(), g.relabel());
            (Process::relabel(Process::relabel(p.clone(), f.clone()), f2.clone()), Process::relabel(p, f.then(&f2)))
        }
        _ => {
            let f = g.injective_relabel();
            (
                Process::relabel(Process::par(p.clone(), q.clone()), f.clone()),
                Process::par(Process::relabel(p, f.clone()), Process::relabel(q, f)),
            )
        }
    };
    Some(Instance::new(l, rhs, g))
}

fn milner(g: &mut Gen) -> Option<Instance> {
    let a = g.visible();
    let b = g.visible();
    if a.complements(&b) {
        return None;
    }
    let nil = || Process::Nil;
    let lhs = Process::par(Process::prefix(a.clone(), nil()), Process::prefix(b.clone(), nil()));
    let rhs = Process::sum(Process::prefix(a.clone(), Process::prefix(b.clone(), nil())), Process::prefix(b, Process::prefix(a, nil())));
    Some(Instance::new(lhs, rhs, g))
}

fn expansion_components(g: &mut Gen) -> (Vec<(Process, RelabelMap)>, BTreeSet<Label>) {
    loop {
        let n = g.rng.gen_range(1..=3);
        let comps: Vec<(Process, RelabelMap)> = (0..n)
            .map(|_| {
                let p = g.standard_at(2);
                let f = if g.rng.gen_bool(0.5) { RelabelMap::identity() } else { g.relabel() };
                (p, f)
            })
            .collect();
        let total: usize = comps.iter().map(|(p, _)| p.action_count()).sum();
        if total <= MAX_SAMPLE_ACTIONS {
            let l = if g.rng.gen_bool(0.5) { BTreeSet::new() } else { g.label_set() };
            return (comps, l);
        }
    }
}

/// Splits an executed `(P1[f1] | .. | Pn[fn]) \ L` back into its components.
fn split(p: &Process, comps: &[(Process, RelabelMap)], l: &BTreeSet<Label>) -> Option<Vec<(Process, RelabelMap)>> {
    let mut cur = p;
    if !l.is_empty() {
        let Process::Restrict(b, _) = cur else { return None };
        cur = b;
    }
    let mut out = Vec::new();
    for (i, (_, f)) in comps.iter().enumerate() {
        let part = if i + 1 == comps.len() {
            cur
        } else {
            let Process::Par(x, y) = cur else { return None };
            cur = y;
            x
        };
        let inner = if f.0.is_empty() {
            part.clone()
        } else {
            let Process::Relabel(b, _) = part else { return None };
            (**b).clone()
        };
        out.push((inner, f.clone()));
    }
    Some(out)
}

fn expansion(dir: Direction, g: &mut Gen, bounds: &Bounds) -> Option<Instance> {
    let (comps, l) = expansion_components(g);
    let comps = match dir {
        Direction::Forward => comps,
        Direction::Reverse => {
            let lhs = expansion_lhs(&comps, &l);
            let k = g.rng.gen_range(1..=4);
            let run = g.run(&lhs, Some(k));
            split(&run, &comps, &l)?
        }
    };
    let lhs = expansion_lhs(&comps, &l);
    let rhs = expansion_rhs(&comps, &l, &g.defs, bounds, dir).ok()?;
    Some(Instance::new(lhs, rhs, g))
}

fn pinned_expansion_forward() -> Instance {
    let comps = vec![
        (Process::prefix(Action::Vis(Label::plain("a")), Process::Nil), RelabelMap::identity()),
        (Process::prefix(Action::Vis(Label::plain("b")), Process::Nil), RelabelMap::identity()),
    ];
    let defs = Definitions::new();
    let rhs = expansion_rhs(&comps, &BTreeSet::new(), &defs, &Bounds::default(), Direction::Forward).expect("finite");
    Instance { lhs: expansion_lhs(&comps, &BTreeSet::new()), rhs, defs }
}

fn pinned_expansion_reverse() -> Instance {
    let comps = vec![
        (Process::past(Action::Vis(Label::plain("a")), 1, Process::Nil), RelabelMap::identity()),
        (Process::past(Action::Vis(Label::plain("b")), 2, Process::Nil), RelabelMap::identity()),
    ];
    let defs = Definitions::new();
    let rhs = expansion_rhs(&comps, &BTreeSet::new(), &defs, &Bounds::default(), Direction::Reverse).expect("finite");
    Instance { lhs: expansion_lhs(&comps, &BTreeSet::new()), rhs, defs }
}

fn pinned_weak_sum() -> Instance {
    let p = |t: &str| crate::syntax::parse(t).expect("pinned term parses");
    Instance { lhs: p("a.nil + b.nil"), rhs: p("(tau.nil | a.nil) + b.nil"), defs: Definitions::new() }
}

fn multi(g: &mut Gen) -> Vec<Action> {
    let n = g.rng.gen_range(2..=3);
    let mut v: Vec<Action> = (0..n).map(|_| g.visible()).collect();
    v.sort();
    v
}

fn tau_law(item: usize, g: &mut Gen) -> Option<Instance> {
    use Process as P;
    let tau = || vec![Action::Tau];
    let pre = |acts: Vec<Action>, body: Process| P::Prefix(acts, Arc::new(body));
    let past = |acts: Vec<Action>, k, body: Process| P::Past(acts, k, Arc::new(body));
    let (l, r) = match item {
        1 => {
            let p = g.standard();
            (p.clone(), pre(tau(), p))
        }
        2 => {
            let p = g.executed();
            let m = max_key(&p) + 1;
            (p.clone(), P::seq(p, past(tau(), m, P::Nil)))
        }
        3 | 5 => {
            let p = g.standard();
            let a = if item == 3 { vec![g.visible()] } else { multi(g) };
            (pre(a.clone(), pre(tau(), p.clone())), pre(a, p))
        }
        4 | 6 => {
            let p = g.executed();
            let m = max_key(&p) + 1;
            let a = if item == 4 { vec![g.visible()] } else { multi(g) };
            (P::seq(p.clone(), past(tau(), m, past(a.clone(), m + 1, P::Nil))), P::seq(p, past(a, m, P::Nil)))
        }
        7 => {
            let p = g.standard();
            (P::sum(p.clone(), pre(tau(), p.clone())), pre(tau(), p))
        }
        8 => {
            let p = g.executed();
            let m = max_key(&p) + 1;
            let pt = P::seq(p.clone(), past(tau(), m, P::Nil));
            (P::sum(p, pt.clone()), pt)
        }
        9 | 11 => {
            let (p, q) = (g.standard(), g.standard());
            let a = if item == 9 { vec![g.visible()] } else { multi(g) };
            let pq = P::sum(p.clone(), q);
            (pre(a.clone(), P::sum(pre(tau(), pq.clone()), p)), pre(a, pq))
        }
        10 | 12 => {
            let (p, q) = (g.executed(), g.standard());
            let m = max_key(&p) + 1;
            let a = if item == 10 { vec![g.visible()] } else { multi(g) };
            let pq = P::sum(p.clone(), q);
            (P::seq(P::sum(P::seq(pq.clone(), past(tau(), m, P::Nil)), p), past(a.clone(), m + 1, P::Nil)), P::seq(pq, past(a, m, P::Nil)))
        }
        _ => {
            let p = g.standard();
            (p.clone(), P::par(pre(tau(), P::Nil), p))
        }
    };
    Some(Instance::new(l, r, g))
}

fn congruence(item: char, flavor: Flavor, strength: Strength, g: &mut Gen, bounds: &Bounds) -> Option<Instance> {
    if item == '1' {
        let p = g.standard();
        let mut defs = g.defs.clone();
        defs.insert("K", p.clone());
        return Some(Instance { lhs: Process::Const("K".into()), rhs: p, defs });
    }
    let (p1, p2) = equivalent_pair(g, flavor, strength, bounds)?;
    let (l, r) = in_context(item, &p1, &p2, g, bounds, flavor, strength)?;
    Some(Instance::new(l, r, g))
}

fn tau_scope(item: usize) -> Scope {
    match item {
        13 => Scope::ForwardReverse,
        i if i % 2 == 1 => Scope::Forward,
        _ => Scope::Reverse,
    }
}

const MONOID: [(&str, &str); 4] = [("P + Q", "Q + P"), ("P + (Q + R)", "(P + Q) + R"), ("P + P", "P"), ("P + nil", "P")];

const STATIC: [(&str, &str); 11] = [
    ("P | Q", "Q | P"),
    ("P | (Q | R)", "(P | Q) | R"),
    ("P | nil", "P"),
    ("P \\ L", "P"),
    ("P \\ K \\ L", "P \\ (K u L)"),
    ("P[f] \\ L", "P \\ f^-1(L) [f]"),
    ("(P | Q) \\ L", "P \\ L | Q \\ L"),
    ("P[Id]", "P"),
    ("P[f]", "P[f']"),
    ("P[f][f']", "P[f' o f]"),
    ("(P | Q)[f]", "P[f] | Q[f]"),
];

const TAU: [(&str, &str); 13] = [
    ("P", "tau.P"),
    ("P", "P.tau[m]"),
    ("a.tau.P", "a.P"),
    ("P.tau[k].a[m]", "P.a[m]"),
    ("(a1 || .. || an).tau.P", "(a1 || .. || an).P"),
    ("P.tau[k].(a1[m] || .. || an[m])", "P.(a1[m] || .. || an[m])"),
    ("P + tau.P", "tau.P"),
    ("P + P.tau[m]", "P.tau[m]"),
    ("a.(tau.(P + Q) + P)", "a.(P + Q)"),
    ("((P + Q).tau[k] + P).a[m]", "(P + Q).a[m]"),
    ("(a1 || .. || an).(tau.(P + Q) + P)", "(a1 || .. || an).(P + Q)"),
    ("((P + Q).tau[k] + P).(a1[m] || .. || an[m])", "(P + Q).(a1[m] || .. || an[m])"),
    ("P", "tau.nil | P"),
];

const CONGRUENCE: [(char, &str, &str); 9] = [
    ('1', "A  (A := P)", "P"),
    ('a', "a.P1", "a.P2"),
    ('b', "(a1 || .. || an).P1", "(a1 || .. || an).P2"),
    ('c', "P1.a[m]", "P2.a[m]"),
    ('d', "P1.(a1[m] || .. || an[m])", "P2.(a1[m] || .. || an[m])"),
    ('e', "P1 + Q", "P2 + Q"),
    ('f', "P1 | Q", "P2 | Q"),
    ('g', "P1 \\ L", "P2 \\ L"),
    ('h', "P1[f]", "P2[f]"),
];

fn case(
    item: String,
    template: (&'static str, &'static str),
    flavor: Flavor,
    strength: Strength,
    scope: Scope,
    expect: Expect,
    instance: InstanceFn,
) -> LawCase {
    LawCase { id: format!("{item}/{strength}-{flavor}"), item, template, flavor, strength, scope, expect, instance, pinned: None }
}

/// Every law item for every flavor it is stated for.
pub fn registry() -> Vec<LawCase> {
    let mut out = Vec::new();
    let strong = Strength::Strong;
    let fr = Scope::ForwardReverse;
    for flavor in Flavor::ALL {
        for (i, t) in MONOID.iter().enumerate() {
            out.push(case(format!("monoid.{}", i + 1), *t, flavor, strong, fr, Expect::Equivalent, Arc::new(move |g, _| monoid(i + 1, g))));
        }
    }
    for flavor in Flavor::ALL {
        for (i, t) in STATIC.iter().enumerate() {
            out.push(case(
                format!("static.{}", i + 1),
                *t,
                flavor,
                strong,
                fr,
                Expect::Equivalent,
                Arc::new(move |g, _| static_law(i + 1, g)),
            ));
        }
    }
    for (i, flavor) in [Flavor::Pomset, Flavor::Step, Flavor::Hp, Flavor::Hhp].into_iter().enumerate() {
        out.push(case(
            format!("milner.{}", i + 1),
            ("a | b", "a.b + b.a"),
            flavor,
            strong,
            fr,
            Expect::Inequivalent,
            Arc::new(|g, _| milner(g)),
        ));
    }
    for flavor in Flavor::ALL {
        for (name, dir, scope) in [("forward", Direction::Forward, Scope::Forward), ("reverse", Direction::Reverse, Scope::Reverse)] {
            let refuted = flavor != Flavor::Step || dir == Direction::Reverse;
            let mut c = case(
                format!("expansion.{name}"),
                ("(P1[f1] | .. | Pn[fn]) \\ L", "sum of joint steps"),
                flavor,
                strong,
                scope,
                if refuted { Expect::Refuted } else { Expect::Equivalent },
                Arc::new(move |g, b| expansion(dir, g, b)),
            );
            if refuted {
                c.pinned = Some(if dir == Direction::Forward { pinned_expansion_forward } else { pinned_expansion_reverse });
            }
            out.push(c);
        }
    }
    for flavor in Flavor::ALL {
        for (i, t) in TAU.iter().enumerate() {
            out.push(case(
                format!("tau.{}", i + 1),
                *t,
                flavor,
                Strength::Weak,
                tau_scope(i + 1),
                Expect::Equivalent,
                Arc::new(move |g, _| tau_law(i + 1, g)),
            ));
        }
    }
    for strength in [Strength::Strong, Strength::Weak] {
        for flavor in Flavor::ALL {
            for (item, l, r) in CONGRUENCE {
                let scope = if item == '1' { fr } else { context_scope(item) };
                // τ.nil | P is weakly equivalent to P, but not inside a sum
                let refuted = item == 'e' && strength == Strength::Weak;
                let mut c = case(
                    format!("congruence.{item}"),
                    (l, r),
                    flavor,
                    strength,
                    scope,
                    if refuted { Expect::Refuted } else { Expect::Equivalent },
                    Arc::new(move |g, b| congruence(item, flavor, strength, g, b)),
                );
                if refuted {
                    c.pinned = Some(pinned_weak_sum);
                }
                out.push(c);
            }
        }
    }
    out
}

/// Cases whose id starts with any of `prefixes` (all cases when empty).
pub fn select(prefixes: &[&str]) -> Vec<LawCase> {
    registry().into_iter().filter(|c| prefixes.is_empty() || prefixes.iter().any(|p| c.id.starts_with(p))).collect()
}
