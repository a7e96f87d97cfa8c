//! Shared helpers for the integration tests: term and pair samplers, and
//! two naive checkers that share nothing with the library's deciders except
//! the explored transition systems.

#![allow(dead_code)]

use std::collections::BTreeSet;

use std::sync::Arc;

use rctc::equiv::{check, Flavor, Strength};
use rctc::laws::{registry, Expect, Gen, GenConfig, Instance};
use rctc::lts::{explore_scoped, Bounds, KeyedLts, Scope, StateId};
use rctc::sos::{forward_steps, reverse_steps, Direction, SosConfig, Transition};
use rctc::term::{sort, Action, Definitions, Process};

pub fn gen(seed: u64) -> Gen {
    Gen::new(GenConfig { seed, ..GenConfig::default() })
}

pub fn roomy(p: &Process, q: &Process) -> Bounds {
    let n = p.action_count().max(q.action_count()) + 8;
    Bounds::new(n, n, 20000).unwrap()
}

pub fn explore_fr(p: &Process, defs: &Definitions, bounds: &Bounds) -> KeyedLts {
    explore_scoped(p, defs, bounds, Scope::ForwardReverse, &SosConfig::width(bounds.max_width)).unwrap()
}

/// Pairs drawn from the law registry (related and unrelated ones alike),
/// mixed with unrelated random pairs, each side at most `max_actions`.
pub fn sample_pairs(seed: u64, n: usize, max_actions: usize) -> Vec<Instance> {
    let cases: Vec<_> = registry()
        .into_iter()
        .filter(|c| {
            c.strength == Strength::Strong && c.flavor == Flavor::Step && c.expect != Expect::Refuted && !c.item.starts_with("congruence")
        })
        .collect();
    let mut g = gen(seed);
    let bounds = Bounds::default();
    let mut out = Vec::new();
    let mut i = 0;
    while out.len() < n {
        i += 1;
        let inst = if i % 4 == 0 {
            let (p, q) = (g.standard(), g.standard());
            Some(Instance { lhs: p, rhs: q, defs: g.defs.clone() })
        } else {
            cases[i % cases.len()].instantiate(&mut g, &bounds)
        };
        if let Some(inst) = inst {
            let small = |p: &Process| total_actions(p, &inst.defs) <= max_actions;
            if small(&inst.lhs) && small(&inst.rhs) {
                out.push(inst);
            }
        }
    }
    out
}

/// Prefixes of a term with constants unfolded.
pub fn total_actions(p: &Process, defs: &Definitions) -> usize {
    match p {
        Process::Const(c) => defs.map.get(c).map_or(0, |b| total_actions(b, defs)),
        Process::Prefix(a, b) | Process::Past(a, _, b) => a.len() + total_actions(b, defs),
        _ => p.children().map(|c| total_actions(c, defs)).sum(),
    }
}

fn step_label(lts: &KeyedLts, e: usize) -> (Direction, Vec<Action>) {
    let edge = &lts.edges[e];
    let mut acts = edge.label.actions.clone();
    acts.sort();
    (edge.direction, acts)
}

/// Strong forward-reverse step bisimilarity by iterating the defining
/// clauses from the full relation until nothing changes.
pub fn naive_step(l: &KeyedLts, r: &KeyedLts) -> bool {
    let mut rel: BTreeSet<(StateId, StateId)> = (0..l.states.len()).flat_map(|a| (0..r.states.len()).map(move |b| (a, b))).collect();
    let simulates = |rel: &BTreeSet<(StateId, StateId)>, a: StateId, b: StateId, flip: bool| {
        let (x, y) = if flip { (r, l) } else { (l, r) };
        x.out[a].iter().all(|e1| {
            let lab = step_label(x, *e1);
            y.out[b].iter().any(|e2| {
                let (d1, d2) = (x.edges[*e1].dst, y.edges[*e2].dst);
                let pair = if flip { (d2, d1) } else { (d1, d2) };
                step_label(y, *e2) == lab && rel.contains(&pair)
            })
        })
    };
    loop {
        let next: BTreeSet<_> = rel.iter().copied().filter(|&(a, b)| simulates(&rel, a, b, false) && simulates(&rel, b, a, true)).collect();
        if next.len() == rel.len() {
            return rel.contains(&(l.initial, r.initial));
        }
        rel = next;
    }
}

type Map = Vec<(usize, usize)>;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn before(lts: &KeyedLts, s: StateId, i: usize, j: usize) -> bool {
    lts.states[s].history.below[j] >> i & 1 == 1
}

/// Every label- and order-preserving bijection between the two histories.
fn isos(l: &KeyedLts, s1: StateId, r: &KeyedLts, s2: StateId) -> Vec<Map> {
    let (h1, h2) = (&l.states[s1].history, &r.states[s2].history);
    if h1.len() != h2.len() {
        return vec![];
    }
    permutations(h1.len())
        .into_iter()
        .filter(|p| {
            (0..p.len()).all(|i| h1.events[i].action == h2.events[p[i]].action)
                && (0..p.len()).all(|i| (0..p.len()).all(|j| before(l, s1, i, j) == before(r, s2, p[i], p[j])))
        })
        .map(|p| p.into_iter().enumerate().collect())
        .collect()
}

fn transport(f: &Map, m1: &[Option<usize>], m2: &[Option<usize>]) -> Option<Map> {
    let mut g = Vec::new();
    for (a, b) in f {
        match (m1[*a], m2[*b]) {
            (Some(x), Some(y)) => g.push((x, y)),
            (None, None) => {}
            _ => return None,
        }
    }
    Some(g)
}

type Triple = (StateId, Map, StateId);

fn norm(mut f: Map) -> Map {
    f.sort();
    f
}

/// One side's clauses for a triple: every move of `x` from `a` is answered
/// by `y` from `b` into a triple of `rel`.
fn answered(x: &KeyedLts, y: &KeyedLts, a: StateId, f: &Map, b: StateId, rel: &BTreeSet<Triple>, flip: bool, hered: bool) -> bool {
    let key = |p: StateId, g: Map, q: StateId| {
        if flip {
            (q, norm(g.into_iter().map(|(u, v)| (v, u)).collect()), p)
        } else {
            (p, norm(g), q)
        }
    };
    for e1 in x.out[a].iter().map(|e| &x.edges[*e]) {
        let mut ok = false;
        for e2 in y.out[b].iter().map(|e| &y.edges[*e]) {
            if e2.direction != e1.direction {
                continue;
            }
            let Some(base) = transport(f, &e1.map, &e2.map) else { continue };
            match e1.direction {
                Direction::Forward => {
                    if e1.events.len() != e2.events.len() {
                        continue;
                    }
                    for p in permutations(e1.events.len()) {
                        let mut g = base.clone();
                        g.extend(e1.events.iter().enumerate().map(|(i, ev)| (*ev, e2.events[p[i]])));
                        if rel.contains(&key(e1.dst, g, e2.dst)) {
                            ok = true;
                        }
                    }
                }
                Direction::Reverse => {
                    // the removed events must correspond under f
                    let img: BTreeSet<usize> = e1.events.iter().filter_map(|ev| f.iter().find(|(u, _)| u == ev).map(|(_, v)| *v)).collect();
                    if img != e2.events.iter().copied().collect::<BTreeSet<_>>() {
                        continue;
                    }
                    if rel.contains(&key(e1.dst, base, e2.dst)) {
                        ok = true;
                    } else if hered {
                        return false;
                    }
                }
            }
        }
        if !ok {
            return false;
        }
    }
    true
}

/// Strong forward-reverse (hereditary) history-preserving bisimilarity:
/// all posetal triples over reachable state pairs, pruned to the greatest
/// set closed under the clauses.
pub fn naive_hp(l: &KeyedLts, r: &KeyedLts, hereditary: bool) -> bool {
    let mut rel: BTreeSet<Triple> = BTreeSet::new();
    for a in 0..l.states.len() {
        for b in 0..r.states.len() {
            for f in isos(l, a, r, b) {
                rel.insert((a, norm(f), b));
            }
        }
    }
    loop {
        let next: BTreeSet<Triple> = rel
            .iter()
            .filter(|(a, f, b)| {
                let inv: Map = f.iter().map(|(u, v)| (*v, *u)).collect();
                answered(l, r, *a, f, *b, &rel, false, hereditary) && answered(r, l, *b, &inv, *a, &rel, true, hereditary)
            })
            .cloned()
            .collect();
        if next.len() == rel.len() {
            return rel.iter().any(|(a, _, b)| *a == l.initial && *b == r.initial);
        }
        rel = next;
    }
}

/// Replaces every constant by its body; generated constants are not recursive.
pub fn unfold(p: &Process, defs: &Definitions) -> Process {
    use Process::*;
    let u = |q: &Arc<Process>| Arc::new(unfold(q, defs));
    match p {
        Nil => Nil,
        Const(c) => defs.map.get(c).map_or(p.clone(), |b| unfold(b, defs)),
        Prefix(a, b) => Prefix(a.clone(), u(b)),
        Past(a, k, b) => Past(a.clone(), *k, u(b)),
        Sum(x, y) => Sum(u(x), u(y)),
        Par(x, y) => Par(u(x), u(y)),
        Seq(x, y) => Seq(u(x), u(y)),
        Restrict(b, l) => Restrict(u(b), l.clone()),
        Relabel(b, f) => Relabel(u(b), f.clone()),
    }
}

fn same_state(x: &Process, y: &Process, defs: &Definitions) -> bool {
    x.canonical().0 == y.canonical().0 || unfold(x, defs).canonical().0 == unfold(y, defs).canonical().0
}

/// States forward-reachable from `p`, at most `cap` of them.
pub fn reachable(p: &Process, defs: &Definitions, width: usize, cap: usize) -> Vec<Process> {
    let mut seen = BTreeSet::new();
    let mut todo = vec![p.clone()];
    while let Some(s) = todo.pop() {
        if seen.len() >= cap || !seen.insert(s.clone()) {
            continue;
        }
        todo.extend(forward_steps(&s, defs, width).unwrap().into_iter().map(|t| t.target));
    }
    seen.into_iter().collect()
}

fn moves(s: &Process, defs: &Definitions, width: usize) -> Vec<Transition> {
    let mut all = forward_steps(s, defs, width).unwrap();
    all.extend(reverse_steps(s, defs, width).unwrap());
    all
}

/// Edges of the reachable states that cannot be undone (forward) or redone
/// (reverse) back to their source, described for the failure message.
pub fn loop_violations(p: &Process, defs: &Definitions) -> Vec<String> {
    let mut bad = Vec::new();
    for s in reachable(p, defs, 8, 60) {
        for t in moves(&s, defs, 8) {
            let back = match t.direction {
                Direction::Forward => reverse_steps(&t.target, defs, 8).unwrap(),
                Direction::Reverse => forward_steps(&t.target, defs, 8).unwrap(),
            };
            let ok = back.iter().any(|b| {
                b.label.actions == t.label.actions
                    && (t.direction == Direction::Reverse || b.label.keys == t.label.keys)
                    && same_state(&b.target, &s, defs)
            });
            if !ok {
                bad.push(format!("{s} {} {}", t.label.render(t.direction), t.target));
            }
        }
    }
    bad
}

/// Transitions of reachable states that leave the sort or enlarge it.
pub fn sort_violations(p: &Process, defs: &Definitions) -> Vec<String> {
    let mut bad = Vec::new();
    for s in reachable(p, defs, 8, 60) {
        let sp = sort(&s, defs, 32).unwrap().labels;
        for t in moves(&s, defs, 8) {
            let st = sort(&t.target, defs, 32).unwrap().labels;
            let outside = t.label.actions.iter().filter_map(|a| a.label()).any(|l| !sp.contains(l));
            if outside || !st.is_subset(&sp) {
                bad.push(format!("{s} {} {}", t.label.render(t.direction), t.target));
            }
        }
    }
    bad
}

/// Compares the strong checker for `flavor` with the naive deciders on `n`
/// pairs of at most five prefixes; returns (compared, related).
pub fn oracle_agreement(seed: u64, n: usize, flavor: Flavor) -> Result<(usize, usize), String> {
    let (mut compared, mut related) = (0, 0);
    for inst in sample_pairs(seed, n, 5) {
        let b = roomy(&inst.lhs, &inst.rhs);
        let (l, r) = (explore_fr(&inst.lhs, &inst.defs, &b), explore_fr(&inst.rhs, &inst.defs, &b));
        if l.truncated() || r.truncated() {
            continue;
        }
        let naive = match flavor {
            Flavor::Step => naive_step(&l, &r),
            Flavor::Hp => naive_hp(&l, &r, false),
            Flavor::Hhp => naive_hp(&l, &r, true),
            Flavor::Pomset => return Err("no naive pomset decider".into()),
        };
        let v = check(&inst.lhs, &inst.rhs, &inst.defs, &b, flavor, Strength::Strong).unwrap();
        if v.related != naive {
            return Err(format!("{flavor:?} disagrees on {}  vs  {}", inst.lhs, inst.rhs));
        }
        compared += 1;
        related += v.related as usize;
    }
    Ok((compared, related))
}

/// Pairs for the inclusion ladder: law instances of every strength, some
/// refuted ones among them, and random pairs.
pub fn ladder_pairs(seed: u64, n: usize) -> Vec<Instance> {
    let cases: Vec<_> = registry().into_iter().filter(|c| c.flavor == Flavor::Step && !c.item.starts_with("congruence")).collect();
    let mut g = Gen::new(GenConfig { seed, include_tau: true, ..GenConfig::default() });
    let bounds = Bounds::default();
    let mut out = Vec::new();
    let mut i = 0;
    while out.len() < n {
        i += 1;
        let inst = if i % 3 == 0 {
            let (p, q) = (g.standard(), g.standard());
            Some(Instance { lhs: p, rhs: q, defs: g.defs.clone() })
        } else {
            cases[(i * 7) % cases.len()].instantiate(&mut g, &bounds)
        };
        if let Some(inst) = inst.filter(|x| total_actions(&x.lhs, &x.defs).max(total_actions(&x.rhs, &x.defs)) <= 8) {
            out.push(inst);
        }
    }
    out
}

/// Verdicts of all eight checkers, indexed by strength then flavor in
/// `Flavor::ALL` order; `None` when some exploration was truncated.
pub fn verdicts(inst: &Instance) -> Option<[[bool; 4]; 2]> {
    let b = roomy(&inst.lhs, &inst.rhs);
    let mut out = [[false; 4]; 2];
    for (i, s) in [Strength::Strong, Strength::Weak].into_iter().enumerate() {
        for (j, f) in Flavor::ALL.into_iter().enumerate() {
            let v = check(&inst.lhs, &inst.rhs, &inst.defs, &b, f, s).ok()?;
            if v.bounded {
                return None;
            }
            out[i][j] = v.related;
        }
    }
    Some(out)
}

/// hhp ⇒ hp ⇒ pomset ⇒ step within a strength, strong ⇒ weak per flavor.
pub fn ladder_holds(v: &[[bool; 4]; 2]) -> bool {
    let chain = |r: &[bool; 4]| (r[3] <= r[2]) && (r[2] <= r[1]) && (r[1] <= r[0]);
    chain(&v[0]) && chain(&v[1]) && (0..4).all(|j| v[0][j] <= v[1][j])
}
