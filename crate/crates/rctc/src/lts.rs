//! Bounded exploration of the keyed transition system.
//!
//! States are terms with keys renamed by first use, so interleavings that
//! differ only in key choice meet in one state. Each state carries the
//! history of executed events read off the term: an event is a key together
//! with an ordinal inside that key's group (a multi-prefix has several), a
//! synchronisation is one τ event spanning two prefixes, and causality is
//! containment in the residual of an earlier prefix or the right side of a
//! sequential composition.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::pomset::{Pomset, MAX_EVENTS};
use crate::sos::{steps, Direction, SosConfig, StepLabel};
use crate::syntax::{parse, render};
use crate::term::{Action, Definitions, Key, Process, RelabelMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    /// Forward events per run, counted from the initial state.
    pub max_depth: usize,
    pub max_width: usize,
    pub max_states: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_depth: 6, max_width: 3, max_states: 20000 }
    }
}

impl Bounds {
    pub fn new(max_depth: usize, max_width: usize, max_states: usize) -> Result<Bounds, Error> {
        let b = Bounds { max_depth, max_width, max_states };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.max_depth == 0 || self.max_width == 0 || self.max_states == 0 {
            return Err(Error::Bounds("depth, width and states must all be at least 1".into()));
        }
        Ok(())
    }
}

/// Which directions exploration follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Scope {
    #[default]
    ForwardReverse,
    Forward,
    Reverse,
}

impl Scope {
    pub fn forward(self) -> bool {
        self != Scope::Reverse
    }

    pub fn reverse(self) -> bool {
        self != Scope::Forward
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventId {
    pub key: Key,
    pub ord: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventRecord {
    pub id: EventId,
    pub action: Action,
    /// Immediate causal predecessors, as indices into the history.
    pub causes: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct History {
    pub events: Vec<EventRecord>,
    /// `below[i]`: bitset of events strictly before event `i`.
    pub below: Vec<u64>,
}

impl History {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn index_of(&self, id: EventId) -> Option<usize> {
        self.events.iter().position(|e| e.id == id)
    }

    pub fn labels(&self) -> Vec<Action> {
        self.events.iter().map(|e| e.action.clone()).collect()
    }

    pub fn pomset(&self, mask: u64) -> Pomset {
        Pomset::restrict(&self.labels(), &self.below, mask)
    }

    pub fn all(&self) -> u64 {
        mask_of(self.len())
    }

    pub fn visible(&self) -> u64 {
        self.events.iter().enumerate().filter(|(_, e)| !e.action.is_tau()).fold(0, |m, (i, _)| m | 1 << i)
    }
}

pub fn mask_of(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[derive(Clone, Debug)]
struct Site {
    key: Key,
    node: usize,
    action: Action,
    causes: BTreeSet<usize>,
}

struct SiteCollector {
    sites: Vec<Site>,
    alias: Vec<usize>,
    nodes: usize,
}

impl SiteCollector {
    fn resolve(&self, mut s: usize) -> usize {
        while self.alias[s] != s {
            s = self.alias[s];
        }
        s
    }

    fn collect(&mut self, p: &Process, ctx: &BTreeSet<usize>, rel: &mut Vec<RelabelMap>) -> Vec<usize> {
        use Process::*;
        match p {
            Nil | Const(_) | Prefix(..) => vec![],
            Past(acts, k, body) => {
                let node = self.nodes;
                self.nodes += 1;
                let mut mine = Vec::new();
                for a in acts {
                    let action = rel.iter().rev().fold(a.clone(), |x, f| f.action(&x));
                    let id = self.sites.len();
                    self.sites.push(Site { key: *k, node, action, causes: ctx.clone() });
                    self.alias.push(id);
                    mine.push(id);
                }
                let inner: BTreeSet<usize> = mine.iter().copied().collect();
                mine.extend(self.collect(body, &inner, rel));
                mine
            }
            Par(x, y) => {
                let mut out = self.collect(x, ctx, rel);
                out.extend(self.collect(y, ctx, rel));
                out
            }
            Seq(x, y) => {
                let mut out = self.collect(x, ctx, rel);
                let mut after = ctx.clone();
                after.extend(out.iter().copied());
                out.extend(self.collect(y, &after, rel));
                out
            }
            Sum(x, y) => {
                let left = self.collect(x, ctx, rel);
                let right = self.collect(y, ctx, rel);
                // both summands executed the same events: identify the copies
                let mut taken = BTreeSet::new();
                let mut out = left.clone();
                for r in right {
                    let twin = left.iter().copied().find(|l| {
                        !taken.contains(l) && self.sites[*l].key == self.sites[r].key && self.sites[*l].action == self.sites[r].action
                    });
                    match twin {
                        Some(l) => {
                            taken.insert(l);
                            self.alias[r] = l;
                            let extra = self.sites[r].causes.clone();
                            self.sites[l].causes.extend(extra);
                        }
                        None => out.push(r),
                    }
                }
                out
            }
            Restrict(b, _) => self.collect(b, ctx, rel),
            Relabel(b, f) => {
                rel.push(f.clone());
                let out = self.collect(b, ctx, rel);
                rel.pop();
                out
            }
        }
    }
}

/// Some key is shared by executed actions whose synchronisation partners
/// cannot be told apart from the term: two different pairings of its
/// complementary actions across components are possible.
pub fn ambiguous_pairing(p: &Process) -> bool {
    let mut c = SiteCollector { sites: vec![], alias: vec![], nodes: 0 };
    let live = c.collect(p, &BTreeSet::new(), &mut Vec::new());
    let mut groups: BTreeMap<Key, Vec<(usize, Action)>> = BTreeMap::new();
    for s in live.into_iter().filter(|s| c.alias[*s] == *s) {
        let site = &c.sites[s];
        groups.entry(site.key).or_default().push((site.node, site.action.clone()));
    }
    groups.values().any(|g| g.len() > 2 && pairings(g) > 1)
}

/// Distinct maximum pairings of complementary sites from different nodes,
/// sites with equal node and action being interchangeable.
fn pairings(sites: &[(usize, Action)]) -> usize {
    type Pairing = Vec<((usize, Action), (usize, Action))>;
    fn go(i: usize, sites: &[(usize, Action)], used: &mut Vec<bool>, cur: &mut Pairing, out: &mut BTreeSet<Pairing>) {
        if i == sites.len() {
            let mut p = cur.clone();
            p.sort();
            out.insert(p);
            return;
        }
        go(i + 1, sites, used, cur, out);
        if used[i] {
            return;
        }
        for j in i + 1..sites.len() {
            if !used[j] && sites[i].0 != sites[j].0 && sites[i].1.complements(&sites[j].1) {
                used[i] = true;
                used[j] = true;
                let (a, b) = (sites[i].clone(), sites[j].clone());
                cur.push(if a < b { (a, b) } else { (b, a) });
                go(i + 1, sites, used, cur, out);
                cur.pop();
                used[i] = false;
                used[j] = false;
            }
        }
    }
    let mut all = BTreeSet::new();
    go(0, sites, &mut vec![false; sites.len()], &mut Vec::new(), &mut all);
    let best = all.iter().map(Vec::len).max().unwrap_or(0);
    all.iter().filter(|p| p.len() == best).count()
}

/// A pairing of complementary sites from different nodes with as many pairs
/// as possible, as events ordered by their first site. Greedy pairing in term
/// order can pair two sites that each belong with a third component.
fn max_pairing(sites: &[(usize, Action)]) -> Vec<Vec<usize>> {
    fn go(i: usize, sites: &[(usize, Action)], partner: &mut Vec<Option<usize>>, pairs: usize, best: &mut (usize, Vec<Option<usize>>)) {
        let left = (i..sites.len()).filter(|j| partner[*j].is_none()).count() / 2;
        if pairs + left <= best.0 && !best.1.is_empty() {
            return;
        }
        if i == sites.len() {
            *best = (pairs, partner.clone());
            return;
        }
        if partner[i].is_none() {
            for j in i + 1..sites.len() {
                if partner[j].is_none() && sites[i].0 != sites[j].0 && sites[i].1.complements(&sites[j].1) {
                    partner[i] = Some(j);
                    partner[j] = Some(i);
                    go(i + 1, sites, partner, pairs + 1, best);
                    partner[i] = None;
                    partner[j] = None;
                }
            }
        }
        go(i + 1, sites, partner, pairs, best);
    }
    let mut best = (0, vec![]);
    go(0, sites, &mut vec![None; sites.len()], 0, &mut best);
    (0..sites.len())
        .filter_map(|i| match best.1[i] {
            Some(j) if j < i => None,
            Some(j) => Some(vec![i, j]),
            None => Some(vec![i]),
        })
        .collect()
}

/// Executed events of a term with their causal order.
pub fn history(p: &Process) -> History {
    let mut c = SiteCollector { sites: vec![], alias: vec![], nodes: 0 };
    let live = c.collect(p, &BTreeSet::new(), &mut Vec::new());
    let live: Vec<usize> = live.into_iter().filter(|s| c.alias[*s] == *s).collect();

    // group by key in order of first occurrence, pairing synchronised sites
    let mut key_order: Vec<Key> = Vec::new();
    let mut by_key: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    for s in &live {
        let key = c.sites[*s].key;
        if !key_order.contains(&key) {
            key_order.push(key);
        }
        by_key.entry(key).or_default().push(*s);
    }
    let groups: BTreeMap<Key, Vec<Vec<usize>>> = by_key
        .into_iter()
        .map(|(k, ss)| {
            let shape: Vec<(usize, Action)> = ss.iter().map(|s| (c.sites[*s].node, c.sites[*s].action.clone())).collect();
            (k, max_pairing(&shape).into_iter().map(|ev| ev.into_iter().map(|i| ss[i]).collect()).collect())
        })
        .collect();
    let mut events: Vec<(EventId, Action, Vec<usize>)> = Vec::new();
    for k in &key_order {
        for (ord, ev) in groups[k].iter().enumerate() {
            let action = if ev.len() == 2 { Action::Tau } else { c.sites[ev[0]].action.clone() };
            events.push((EventId { key: *k, ord }, action, ev.clone()));
        }
    }
    let mut site_event: HashMap<usize, usize> = HashMap::new();
    for (i, (_, _, ss)) in events.iter().enumerate() {
        for s in ss {
            site_event.insert(*s, i);
        }
    }
    let n = events.len();
    assert!(n <= MAX_EVENTS, "history exceeds {MAX_EVENTS} events");
    let mut direct = vec![0u64; n];
    for (i, (_, _, ss)) in events.iter().enumerate() {
        for s in ss {
            for cause in &c.sites[*s].causes {
                let e = site_event[&c.resolve(*cause)];
                if e != i {
                    direct[i] |= 1 << e;
                }
            }
        }
    }
    // transitive closure
    let mut below = direct.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            let mut acc = below[i];
            for j in 0..n {
                if below[i] >> j & 1 == 1 {
                    acc |= below[j];
                }
            }
            if acc != below[i] {
                below[i] = acc;
                changed = true;
            }
        }
    }
    let records = events
        .into_iter()
        .enumerate()
        .map(|(i, (id, action, _))| {
            // immediate = direct causes not implied through another cause
            let implied = (0..n).filter(|j| below[i] >> j & 1 == 1).fold(0u64, |m, j| m | below[j]);
            let causes = (0..n).filter(|j| below[i] >> j & 1 == 1 && implied >> j & 1 == 0).collect();
            EventRecord { id, action, causes }
        })
        .collect();
    History { events: records, below }
}

pub type StateId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub id: StateId,
    pub term: Process,
    pub history: History,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub src: StateId,
    pub dst: StateId,
    pub direction: Direction,
    pub label: StepLabel,
    /// Forward: the new events (indices into `dst` history). Reverse: the removed events (indices into `src`).
    pub events: Vec<usize>,
    /// `map[i]`: index in `dst` of event `i` of `src`, if it survives.
    pub map: Vec<Option<usize>>,
    /// Keys of `src` renamed to keys of `dst`.
    pub keymap: Vec<(Key, Key)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Truncation {
    pub depth: bool,
    pub width: bool,
    pub states: bool,
}

impl Truncation {
    pub fn any(&self) -> bool {
        self.depth || self.width || self.states
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyedLts {
    pub states: Vec<State>,
    pub edges: Vec<Edge>,
    pub initial: StateId,
    pub truncation: Truncation,
    /// Outgoing edge indices per state.
    pub out: Vec<Vec<usize>>,
}

impl KeyedLts {
    pub fn truncated(&self) -> bool {
        self.truncation.any()
    }

    pub fn outgoing(&self, s: StateId, dir: Direction) -> impl Iterator<Item = &Edge> {
        self.out[s].iter().map(|e| &self.edges[*e]).filter(move |e| e.direction == dir)
    }

    pub fn state_of(&self, term: &Process) -> Option<StateId> {
        let (c, _) = term.canonical();
        self.states.iter().position(|s| s.term == c)
    }

    fn rebuild_out(&mut self) {
        self.out = vec![Vec::new(); self.states.len()];
        for (i, e) in self.edges.iter().enumerate() {
            self.out[e.src].push(i);
        }
    }
}

/// Relate two states through a transition: event map and new/removed events.
fn link(
    src: &History,
    dst: &History,
    dir: Direction,
    keymap: &BTreeMap<Key, Key>,
    step_keys: &BTreeSet<Key>,
) -> (Vec<usize>, Vec<Option<usize>>) {
    let map: Vec<Option<usize>> = src
        .events
        .iter()
        .map(|e| {
            if dir == Direction::Reverse && step_keys.contains(&e.id.key) {
                return None;
            }
            keymap.get(&e.id.key).and_then(|k| dst.index_of(EventId { key: *k, ord: e.id.ord }))
        })
        .collect();
    let events = match dir {
        Direction::Forward => {
            let kept: BTreeSet<usize> = map.iter().flatten().copied().collect();
            (0..dst.len()).filter(|i| !kept.contains(i)).collect()
        }
        Direction::Reverse => (0..src.len()).filter(|i| map[*i].is_none()).collect(),
    };
    (events, map)
}

/// Breadth-first exploration of forward and reverse steps within `bounds`.
pub fn explore(p: &Process, defs: &Definitions, bounds: &Bounds) -> Result<KeyedLts, Error> {
    explore_scoped(p, defs, bounds, Scope::ForwardReverse, &SosConfig::width(bounds.max_width))
}

pub fn explore_scoped(p: &Process, defs: &Definitions, bounds: &Bounds, scope: Scope, cfg: &SosConfig) -> Result<KeyedLts, Error> {
    bounds.validate()?;
    defs.check_closed(p)?;
    let cfg = SosConfig { max_width: bounds.max_width, ..cfg.clone() };
    let (init, _) = p.canonical();
    let h0 = history(&init);
    let depth_limit = bounds.max_depth + h0.len();
    let mut states = vec![State { id: 0, term: init.clone(), history: h0 }];
    let mut index: HashMap<Process, StateId> = HashMap::from([(init, 0)]);
    let mut edges = Vec::new();
    let mut trunc = Truncation::default();
    let mut queue = VecDeque::from([0usize]);
    let mut dirs = Vec::new();
    if scope.forward() {
        dirs.push(Direction::Forward);
    }
    if scope.reverse() {
        dirs.push(Direction::Reverse);
    }
    while let Some(s) = queue.pop_front() {
        for &dir in &dirs {
            let set = steps(&states[s].term, defs, dir, &cfg)?;
            trunc.width |= set.width_truncated;
            for t in set.transitions {
                let (target, keymap) = t.target.canonical();
                let dst = match index.get(&target) {
                    Some(d) => *d,
                    None => {
                        let h = history(&target);
                        if dir == Direction::Forward && h.len() > depth_limit {
                            trunc.depth = true;
                            continue;
                        }
                        if states.len() >= bounds.max_states {
                            trunc.states = true;
                            continue;
                        }
                        let id = states.len();
                        states.push(State { id, term: target.clone(), history: h });
                        index.insert(target, id);
                        queue.push_back(id);
                        id
                    }
                };
                let src_keys = states[s].term.keys();
                let full: BTreeMap<Key, Key> =
                    src_keys.iter().chain(t.label.keys.iter()).filter_map(|k| keymap.get(k).map(|v| (*k, *v))).collect();
                let (events, map) = link(&states[s].history, &states[dst].history, dir, &full, &t.label.key_set());
                let label = match dir {
                    Direction::Forward => StepLabel {
                        keys: t.label.keys.iter().map(|k| keymap[k]).collect(),
                        sync_keys: t.label.sync_keys.iter().map(|k| keymap[k]).collect(),
                        actions: t.label.actions.clone(),
                    },
                    Direction::Reverse => t.label.clone(),
                };
                let keymap = src_keys.iter().filter_map(|k| full.get(k).map(|v| (*k, *v))).collect();
                edges.push(Edge { src: s, dst, direction: dir, label, events, map, keymap });
            }
        }
    }
    let mut lts = KeyedLts { states, edges, initial: 0, truncation: trunc, out: vec![] };
    lts.rebuild_out();
    Ok(lts)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PomsetRun {
    /// In canonical form.
    pub pomset: Pomset,
    pub end: StateId,
    /// The run's events, as a bitset over the end state's history (forward)
    /// or the start state's history (reverse).
    pub events: u64,
}

/// Forward runs of at most `max_events` events from `from`, one per end state and pomset class.
pub fn pomset_runs(lts: &KeyedLts, from: StateId, max_events: usize) -> Vec<PomsetRun> {
    runs(lts, from, max_events, Direction::Forward, false)
}

/// Reverse runs undoing at most `max_events` events.
pub fn reverse_pomset_runs(lts: &KeyedLts, from: StateId, max_events: usize) -> Vec<PomsetRun> {
    runs(lts, from, max_events, Direction::Reverse, false)
}

/// Runs in direction `dir`. With `weak`, τ events are dropped from the
/// pomsets, runs must contain a visible event, and the length bound counts
/// visible events only.
pub fn runs(lts: &KeyedLts, from: StateId, max_events: usize, dir: Direction, weak: bool) -> Vec<PomsetRun> {
    let mut out: Vec<PomsetRun> = Vec::new();
    let mut seen_runs: BTreeSet<(StateId, Pomset)> = BTreeSet::new();
    let start_hist = &lts.states[from].history;
    let count = |h: &History, mask: u64| -> usize {
        if weak {
            (mask & h.visible()).count_ones() as usize
        } else {
            mask.count_ones() as usize
        }
    };
    // node: (state, mask, back) where for forward the mask is new events in the
    // current state and for reverse the removed events of `from`; `back` maps
    // current events to `from` events (reverse only)
    let mut seen: BTreeSet<(StateId, u64)> = BTreeSet::from([(from, 0)]);
    let mut queue: VecDeque<(StateId, u64, Vec<usize>)> = VecDeque::from([(from, 0, (0..start_hist.len()).collect())]);
    while let Some((s, mask, back)) = queue.pop_front() {
        for e in lts.outgoing(s, dir) {
            let (next_mask, next_back) = match dir {
                Direction::Forward => {
                    let mut m = 0u64;
                    for (i, t) in e.map.iter().enumerate() {
                        if let Some(t) = t {
                            if mask >> i & 1 == 1 {
                                m |= 1 << t;
                            }
                        }
                    }
                    for n in &e.events {
                        m |= 1 << n;
                    }
                    (m, vec![])
                }
                Direction::Reverse => {
                    let mut m = mask;
                    for r in &e.events {
                        m |= 1 << back[*r];
                    }
                    let mut nb = vec![0; lts.states[e.dst].history.len()];
                    for (i, t) in e.map.iter().enumerate() {
                        if let Some(t) = t {
                            nb[*t] = back[i];
                        }
                    }
                    (m, nb)
                }
            };
            let hist = match dir {
                Direction::Forward => &lts.states[e.dst].history,
                Direction::Reverse => start_hist,
            };
            if count(hist, next_mask) > max_events {
                continue;
            }
            if !seen.insert((e.dst, next_mask)) {
                continue;
            }
            let shown = if weak { next_mask & hist.visible() } else { next_mask };
            if shown != 0 {
                let pomset = hist.pomset(shown).canonical();
                if seen_runs.insert((e.dst, pomset.clone())) {
                    out.push(PomsetRun { pomset, end: e.dst, events: next_mask });
                }
            }
            queue.push_back((e.dst, next_mask, next_back));
        }
    }
    if max_events == 0 {
        out.clear();
        out.push(PomsetRun { pomset: Pomset::empty(), end: from, events: 0 });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Text,
    Machine,
}

#[derive(Serialize, Deserialize)]
struct MachineEvent {
    key: Key,
    ord: usize,
    action: String,
    causes: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct MachineState {
    id: StateId,
    term: String,
    history: Vec<MachineEvent>,
}

#[derive(Serialize, Deserialize)]
struct MachineEdge {
    src: StateId,
    dst: StateId,
    direction: Direction,
    events: Vec<String>,
    keys: Vec<Key>,
    sync_keys: Vec<Key>,
    keymap: Vec<(Key, Key)>,
}

#[derive(Serialize, Deserialize)]
struct MachineLts {
    initial: StateId,
    truncated: bool,
    truncated_depth: bool,
    truncated_width: bool,
    truncated_states: bool,
    states: Vec<MachineState>,
    edges: Vec<MachineEdge>,
}

fn sorted_edges(lts: &KeyedLts) -> Vec<&Edge> {
    let mut edges: Vec<&Edge> = lts.edges.iter().collect();
    edges.sort_by(|a, b| (a.src, a.dst, a.direction, &a.label).cmp(&(b.src, b.dst, b.direction, &b.label)));
    edges
}

pub fn export(lts: &KeyedLts, format: ExportFormat) -> String {
    match format {
        ExportFormat::Text => {
            let mut out = String::new();
            let t = &lts.truncation;
            let _ = writeln!(
                out,
                "lts states={} edges={} initial={} truncated={}",
                lts.states.len(),
                lts.edges.len(),
                lts.initial,
                if t.any() {
                    let mut why = vec![];
                    if t.depth {
                        why.push("depth");
                    }
                    if t.width {
                        why.push("width");
                    }
                    if t.states {
                        why.push("states");
                    }
                    why.join(",")
                } else {
                    "no".into()
                }
            );
            for s in &lts.states {
                let hist: Vec<String> = s
                    .history
                    .events
                    .iter()
                    .map(|e| {
                        let causes: Vec<String> = e.causes.iter().map(|c| c.to_string()).collect();
                        format!("{}@{}.{}<{}>", e.action, e.id.key, e.id.ord, causes.join(","))
                    })
                    .collect();
                let _ = writeln!(out, "state {} {} history=[{}]", s.id, render(&s.term), hist.join(" "));
            }
            for e in sorted_edges(lts) {
                let arrow = match e.direction {
                    Direction::Forward => "->",
                    Direction::Reverse => "~>",
                };
                let _ = writeln!(out, "edge {} {} {} {}", e.src, arrow, e.dst, e.label.render(e.direction));
            }
            out
        }
        ExportFormat::Machine => {
            let m = MachineLts {
                initial: lts.initial,
                truncated: lts.truncated(),
                truncated_depth: lts.truncation.depth,
                truncated_width: lts.truncation.width,
                truncated_states: lts.truncation.states,
                states: lts
                    .states
                    .iter()
                    .map(|s| MachineState {
                        id: s.id,
                        term: render(&s.term),
                        history: s
                            .history
                            .events
                            .iter()
                            .map(|e| MachineEvent {
                                key: e.id.key,
                                ord: e.id.ord,
                                action: e.action.to_string(),
                                causes: e.causes.iter().copied().collect(),
                            })
                            .collect(),
                    })
                    .collect(),
                edges: sorted_edges(lts)
                    .into_iter()
                    .map(|e| MachineEdge {
                        src: e.src,
                        dst: e.dst,
                        direction: e.direction,
                        events: e.label.actions.iter().map(|a| a.to_string()).collect(),
                        keys: e.label.keys.clone(),
                        sync_keys: e.label.sync_keys.iter().copied().collect(),
                        keymap: e.keymap.clone(),
                    })
                    .collect(),
            };
            serde_json::to_string_pretty(&m).expect("serialisable") + "\n"
        }
    }
}

fn parse_action(s: &str) -> Result<Action, Error> {
    match parse(&format!("{s}.nil"))? {
        Process::Prefix(mut a, _) if a.len() == 1 => Ok(a.remove(0)),
        _ => Err(Error::Import(format!("bad action `{s}`"))),
    }
}

/// Read back the machine format; histories and event maps are recomputed from the terms.
pub fn import(src: &str) -> Result<KeyedLts, Error> {
    let m: MachineLts = serde_json::from_str(src).map_err(|e| Error::Import(e.to_string()))?;
    let mut states = Vec::new();
    for (i, s) in m.states.iter().enumerate() {
        if s.id != i {
            return Err(Error::Import(format!("state ids must be dense, found {}", s.id)));
        }
        let term = parse(&s.term)?;
        let h = history(&term);
        let listed: Vec<(Key, usize, String)> = s.history.iter().map(|e| (e.key, e.ord, e.action.clone())).collect();
        let derived: Vec<(Key, usize, String)> = h.events.iter().map(|e| (e.id.key, e.id.ord, e.action.to_string())).collect();
        if listed != derived {
            return Err(Error::Import(format!("history of state {i} does not match its term")));
        }
        states.push(State { id: i, term, history: h });
    }
    let mut edges = Vec::new();
    for e in m.edges {
        if e.src >= states.len() || e.dst >= states.len() || e.keys.len() != e.events.len() {
            return Err(Error::Import("edge refers to a missing state".into()));
        }
        let actions = e.events.iter().map(|a| parse_action(a)).collect::<Result<Vec<_>, _>>()?;
        let label = StepLabel { actions, keys: e.keys, sync_keys: e.sync_keys.into_iter().collect() };
        let full: BTreeMap<Key, Key> = e.keymap.iter().copied().collect();
        let (events, map) = link(&states[e.src].history, &states[e.dst].history, e.direction, &full, &label.key_set());
        edges.push(Edge { src: e.src, dst: e.dst, direction: e.direction, label, events, map, keymap: e.keymap });
    }
    let truncation = Truncation { depth: m.truncated_depth, width: m.truncated_width, states: m.truncated_states };
    let mut lts = KeyedLts { states, edges, initial: m.initial, truncation, out: vec![] };
    lts.rebuild_out();
    Ok(lts)
}

/// Same states in the same order and the same edge multiset.
pub fn same_lts(a: &KeyedLts, b: &KeyedLts) -> bool {
    let key = |l: &KeyedLts| {
        let mut v: Vec<_> = l.edges.iter().map(|e| (e.src, e.dst, e.direction, e.label.clone(), e.events.clone(), e.map.clone())).collect();
        v.sort();
        v
    };
    a.states == b.states && a.initial == b.initial && a.truncation == b.truncation && key(a) == key(b)
}
