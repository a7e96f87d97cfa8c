//! Forward and reverse transition derivation.
//!
//! Steps are built bottom-up: every operator receives the steps of its
//! operands and combines, filters or relabels them. Fresh keys for a forward
//! step start at `max_key(top) + 1` and are numbered left to right; a
//! synchronisation merges the keys of its two participants into one.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::sync::Arc;

use crate::error::Error;
use crate::lts::ambiguous_pairing;
use crate::term::{blocks_action, is_fully_executed, is_standard, max_key, Action, Definitions, Key, Process};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

/// How a parallel component may undo a key on its own.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ParReverse {
    /// Allowed when the key does not occur in the other component.
    #[default]
    KeyOccurrence,
    /// Allowed only when the other component cannot reverse at all.
    TermWide,
}

#[derive(Clone, Debug)]
pub struct SosConfig {
    pub max_width: usize,
    pub par_reverse: ParReverse,
    /// Nesting limit for unfolding constants without passing a prefix.
    pub unfold_limit: usize,
}

impl SosConfig {
    pub fn width(max_width: usize) -> SosConfig {
        SosConfig { max_width, ..SosConfig::default() }
    }
}

impl Default for SosConfig {
    fn default() -> Self {
        SosConfig { max_width: usize::MAX, par_reverse: ParReverse::KeyOccurrence, unfold_limit: 64 }
    }
}

/// Events of one step, sorted; `keys[i]` is the key of `actions[i]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepLabel {
    pub actions: Vec<Action>,
    pub keys: Vec<Key>,
    pub sync_keys: BTreeSet<Key>,
}

impl StepLabel {
    fn new(mut events: Vec<(Action, Key)>, sync_keys: BTreeSet<Key>) -> StepLabel {
        events.sort();
        let (actions, keys) = events.into_iter().unzip();
        StepLabel { actions, keys, sync_keys }
    }

    pub fn width(&self) -> usize {
        self.actions.len()
    }

    pub fn key_set(&self) -> BTreeSet<Key> {
        self.keys.iter().copied().collect()
    }

    pub fn visible(&self) -> Vec<Action> {
        self.actions.iter().filter(|a| !a.is_tau()).cloned().collect()
    }

    pub fn is_silent(&self) -> bool {
        self.actions.iter().all(Action::is_tau)
    }

    /// `{a, b}` for forward labels, `{a[1], b[2]}` for reverse ones.
    pub fn render(&self, dir: Direction) -> String {
        let parts: Vec<String> = self
            .actions
            .iter()
            .zip(&self.keys)
            .map(|(a, k)| match dir {
                Direction::Forward => a.to_string(),
                Direction::Reverse => format!("{a}[{k}]"),
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub source: Process,
    pub label: StepLabel,
    pub direction: Direction,
    pub target: Process,
}

#[derive(Clone, Debug, Default)]
pub struct StepSet {
    pub transitions: Vec<Transition>,
    /// Some step was dropped because it exceeded the width bound.
    pub width_truncated: bool,
}

#[derive(Clone, Debug)]
struct Raw {
    events: Vec<(Action, Key)>,
    syncs: BTreeSet<Key>,
    target: Process,
    /// Identity of each event within the step, stable under synchronisation.
    ids: Vec<u32>,
    /// Complementary events that met at a parallel composition without
    /// synchronising; one of each pair must synchronise elsewhere.
    pending: Vec<(u32, u32)>,
}

impl Raw {
    fn leaf(events: Vec<(Action, Key)>, target: Process) -> Raw {
        let ids = (0..events.len() as u32).collect();
        Raw { events, syncs: BTreeSet::new(), target, ids, pending: vec![] }
    }

    /// Some pending pair is still unsynchronised.
    fn unmatched(&self) -> bool {
        let visible = |id: u32| self.ids.iter().position(|i| *i == id).is_some_and(|i| !self.events[i].0.is_tau());
        self.pending.iter().any(|(a, b)| visible(*a) && visible(*b))
    }

    fn keys(&self) -> BTreeSet<Key> {
        self.events.iter().map(|e| e.1).collect()
    }

    fn sorted_events(&self) -> Vec<(Action, Key)> {
        let mut e = self.events.clone();
        e.sort();
        e
    }

    fn rename(&self, f: &dyn Fn(Key) -> Key) -> Raw {
        Raw {
            events: self.events.iter().map(|(a, k)| (a.clone(), f(*k))).collect(),
            syncs: self.syncs.iter().map(|k| f(*k)).collect(),
            target: self.target.map_keys(f),
            ids: self.ids.clone(),
            pending: self.pending.clone(),
        }
    }

    fn with_target(&self, target: Process) -> Raw {
        Raw { target, ..self.clone() }
    }

    /// Combines with a step `b` of a parallel component along the matching
    /// `m`; `b` must already use keys disjoint from this step's fresh keys
    /// and `rn` merges the keys of synchronised pairs.
    fn join(&self, b: &Raw, m: &[(usize, usize)], rn: &dyn Fn(Key) -> Key, target: Process) -> Raw {
        // ids of synchronised events can linger in `pending`, so never reuse them
        let offset = self.ids.iter().chain(self.pending.iter().flat_map(|(x, y)| [x, y])).max().map_or(0, |i| i + 1);
        let pa: HashSet<usize> = m.iter().map(|p| p.0).collect();
        let pb: HashSet<usize> = m.iter().map(|p| p.1).collect();
        let mut events = Vec::new();
        let mut ids = self.ids.clone();
        let mut syncs: BTreeSet<Key> = self.syncs.iter().chain(&b.syncs).map(|k| rn(*k)).collect();
        let mut pending = self.pending.clone();
        pending.extend(b.pending.iter().map(|(x, y)| (x + offset, y + offset)));
        for (i, (act, k)) in self.events.iter().enumerate() {
            if pa.contains(&i) {
                events.push((Action::Tau, rn(*k)));
                syncs.insert(rn(*k));
            } else {
                events.push((act.clone(), rn(*k)));
                for (j, (bact, _)) in b.events.iter().enumerate() {
                    if !pb.contains(&j) && act.complements(bact) {
                        pending.push((self.ids[i], b.ids[j] + offset));
                    }
                }
            }
        }
        for (j, (act, k)) in b.events.iter().enumerate() {
            if !pb.contains(&j) {
                events.push((act.clone(), rn(*k)));
                ids.push(b.ids[j] + offset);
            }
        }
        Raw { events, syncs, target, ids, pending }
    }
}

struct Engine<'a> {
    defs: &'a Definitions,
    cfg: &'a SosConfig,
    width_truncated: bool,
}

fn box_target(p: &Process) -> Arc<Process> {
    Arc::new(p.clone())
}

/// Renumber the fresh keys (`>= base`) of a forward step to `base, base+1, ..` by event order.
fn compact(raw: Raw, base: Key) -> Raw {
    let mut map = BTreeMap::new();
    for (_, k) in &raw.events {
        if *k >= base && !map.contains_key(k) {
            let next = base + map.len() as Key;
            map.insert(*k, next);
        }
    }
    if map.iter().all(|(a, b)| a == b) {
        return raw;
    }
    raw.rename(&|k| *map.get(&k).unwrap_or(&k))
}

fn fresh_count(raw: &Raw, base: Key) -> Key {
    raw.events.iter().map(|e| e.1).filter(|k| *k >= base).collect::<BTreeSet<_>>().len() as Key
}

/// All ways of pairing complementary events across two steps. `same_key`
/// restricts pairs to events carrying equal keys; undoing, differently keyed
/// events never belonged to one synchronisation.
fn sync_matchings(left: &[(Action, Key)], right: &[(Action, Key)], same_key: bool) -> Vec<Vec<(usize, usize)>> {
    fn go(
        i: usize,
        left: &[(Action, Key)],
        right: &[(Action, Key)],
        same_key: bool,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if i == left.len() {
            out.push(cur.clone());
            return;
        }
        go(i + 1, left, right, same_key, used, cur, out);
        for j in 0..right.len() {
            if !used[j] && left[i].0.complements(&right[j].0) && (!same_key || left[i].1 == right[j].1) {
                used[j] = true;
                cur.push((i, j));
                go(i + 1, left, right, same_key, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, left, right, same_key, &mut vec![false; right.len()], &mut Vec::new(), &mut out);
    out
}

fn find(parent: &mut BTreeMap<Key, Key>, k: Key) -> Key {
    let p = *parent.get(&k).unwrap_or(&k);
    if p == k {
        return k;
    }
    let r = find(parent, p);
    parent.insert(k, r);
    r
}

impl<'a> Engine<'a> {
    fn fits(&mut self, n: usize) -> bool {
        if n > self.cfg.max_width {
            self.width_truncated = true;
            false
        } else {
            true
        }
    }

    fn forward(&mut self, p: &Process, base: Key, unfold: usize) -> Result<Vec<Raw>, Error> {
        use Process::*;
        Ok(match p {
            Nil => vec![],
            Const(n) => {
                if unfold >= self.cfg.unfold_limit {
                    return Err(Error::UnguardedRecursion(n.clone()));
                }
                let body = self.defs.get(n)?;
                self.forward(body, base, unfold + 1)?
            }
            Prefix(acts, body) => {
                if !is_standard(body) || !self.fits(acts.len()) {
                    return Ok(vec![]);
                }
                vec![Raw::leaf(acts.iter().map(|a| (a.clone(), base)).collect(), Past(acts.clone(), base, body.clone()))]
            }
            Past(acts, k, body) => self
                .forward(body, base, 0)?
                .into_iter()
                .map(|r| {
                    let t = Past(acts.clone(), *k, Arc::new(r.target.clone()));
                    r.with_target(t)
                })
                .collect(),
            Sum(x, y) => {
                let (sx, sy) = (is_standard(x), is_standard(y));
                let mut out = Vec::new();
                if sx || sy {
                    if sy {
                        for r in self.forward(x, base, unfold)? {
                            let t = Sum(Arc::new(r.target.clone()), y.clone());
                            out.push(r.with_target(t));
                        }
                    }
                    if sx {
                        for r in self.forward(y, base, unfold)? {
                            let t = Sum(x.clone(), Arc::new(r.target.clone()));
                            out.push(r.with_target(t));
                        }
                    }
                } else {
                    let rx = self.forward(x, base, unfold)?;
                    let ry = self.forward(y, base, unfold)?;
                    for a in &rx {
                        for b in &ry {
                            if let Some(j) = joint_forward(a, b, base) {
                                out.push(j);
                            }
                        }
                    }
                }
                out
            }
            Seq(x, y) => {
                let mut out = Vec::new();
                if is_standard(y) {
                    for r in self.forward(x, base, unfold)? {
                        let t = Seq(Arc::new(r.target.clone()), y.clone());
                        out.push(r.with_target(t));
                    }
                }
                if is_fully_executed(x) {
                    for r in self.forward(y, base, unfold)? {
                        let t = Seq(x.clone(), Arc::new(r.target.clone()));
                        out.push(r.with_target(t));
                    }
                }
                out
            }
            Par(x, y) => self.forward_par(x, y, base, unfold)?,
            Restrict(body, l) => self
                .forward(body, base, unfold)?
                .into_iter()
                .filter(|r| !r.events.iter().any(|(a, _)| blocks_action(l, a)))
                .map(|r| {
                    let t = Restrict(Arc::new(r.target.clone()), l.clone());
                    r.with_target(t)
                })
                .collect(),
            Relabel(body, f) => self
                .forward(body, base, unfold)?
                .into_iter()
                .map(|r| Raw {
                    events: r.events.iter().map(|(a, k)| (f.action(a), *k)).collect(),
                    target: Relabel(Arc::new(r.target.clone()), f.clone()),
                    ..r
                })
                .collect(),
        })
    }

    fn forward_par(&mut self, x: &Process, y: &Process, base: Key, unfold: usize) -> Result<Vec<Raw>, Error> {
        let lx: Vec<Option<Raw>> = self.forward(x, base, unfold)?.into_iter().map(Some).chain([None]).collect();
        let ly: Vec<Option<Raw>> = self.forward(y, base, unfold)?.into_iter().map(Some).chain([None]).collect();
        let mut out = Vec::new();
        for a in &lx {
            for b in &ly {
                match (a, b) {
                    (None, None) => {}
                    (Some(a), None) => out.push(a.with_target(Process::par(a.target.clone(), y.clone()))),
                    (None, Some(b)) => {
                        if self.fits(b.events.len()) {
                            out.push(b.with_target(Process::par(x.clone(), b.target.clone())));
                        }
                    }
                    (Some(a), Some(b)) => self.combine_forward(a, b, base, &mut out),
                }
            }
        }
        Ok(out)
    }

    fn combine_forward(&mut self, a: &Raw, b: &Raw, base: Key, out: &mut Vec<Raw>) {
        let shift = fresh_count(a, base);
        let b = b.rename(&|k| if k >= base { k + shift } else { k });
        for m in sync_matchings(&a.events, &b.events, false) {
            let width = a.events.len() + b.events.len() - m.len();
            if !self.fits(width) {
                continue;
            }
            let mut parent = BTreeMap::new();
            for (i, j) in &m {
                let (ka, kb) = (a.events[*i].1, b.events[*j].1);
                let (ra, rb) = (find(&mut parent, ka), find(&mut parent, kb));
                if ra != rb {
                    parent.insert(ra.max(rb), ra.min(rb));
                }
            }
            let keys: Vec<Key> = a.keys().into_iter().chain(b.keys()).collect();
            let map: BTreeMap<Key, Key> = keys.iter().map(|k| (*k, find(&mut parent, *k))).collect();
            let rn = |k: Key| *map.get(&k).unwrap_or(&k);
            let target = if m.is_empty() {
                Process::par(a.target.clone(), b.target.clone())
            } else {
                Process::par(a.target.map_keys(&rn), b.target.map_keys(&rn))
            };
            out.push(compact(a.join(&b, &m, &rn, target), base));
        }
    }

    fn reverse_par(&mut self, x: &Process, y: &Process) -> Result<Vec<Raw>, Error> {
        let rx = self.reverse(x)?;
        let ry = self.reverse(y)?;
        let mut shared: Option<(BTreeSet<Key>, BTreeSet<Key>)> = None;
        let term_wide = self.cfg.par_reverse == ParReverse::TermWide;
        let (x_stuck, y_stuck) = (rx.is_empty(), ry.is_empty());
        let lx: Vec<Option<&Raw>> = rx.iter().map(Some).chain([None]).collect();
        let ly: Vec<Option<&Raw>> = ry.iter().map(Some).chain([None]).collect();
        let idle_x = Raw::leaf(vec![], x.clone());
        let idle_y = Raw::leaf(vec![], y.clone());
        let mut out = Vec::new();
        for a in &lx {
            for b in &ly {
                if a.is_none() && b.is_none() {
                    continue;
                }
                let a = a.unwrap_or(&idle_x);
                let b = b.unwrap_or(&idle_y);
                let (ka, kb) = (a.keys(), b.keys());
                // keys shared with the other component must be undone together
                if !ka.is_subset(&kb) || !kb.is_subset(&ka) {
                    let (kx, ky) = shared.get_or_insert_with(|| (x.keys(), y.keys()));
                    if !ka.iter().filter(|k| ky.contains(k)).all(|k| kb.contains(k))
                        || !kb.iter().filter(|k| kx.contains(k)).all(|k| ka.contains(k))
                    {
                        continue;
                    }
                }
                if term_wide && ((b.events.is_empty() && !y_stuck) || (a.events.is_empty() && !x_stuck)) {
                    continue;
                }
                for m in sync_matchings(&a.events, &b.events, true) {
                    let width = a.events.len() + b.events.len() - m.len();
                    if !self.fits(width) {
                        continue;
                    }
                    let target = Process::par(a.target.clone(), b.target.clone());
                    out.push(a.join(b, &m, &|k| k, target));
                }
            }
        }
        Ok(out)
    }

    fn reverse(&mut self, p: &Process) -> Result<Vec<Raw>, Error> {
        use Process::*;
        Ok(match p {
            Nil | Const(_) | Prefix(..) => vec![],
            Past(acts, k, body) => {
                if is_standard(body) {
                    if !self.fits(acts.len()) {
                        return Ok(vec![]);
                    }
                    vec![Raw::leaf(acts.iter().map(|a| (a.clone(), *k)).collect(), Prefix(acts.clone(), body.clone()))]
                } else {
                    self.reverse(body)?
                        .into_iter()
                        .map(|r| {
                            let t = Past(acts.clone(), *k, Arc::new(r.target.clone()));
                            r.with_target(t)
                        })
                        .collect()
                }
            }
            Sum(x, y) => {
                let (sx, sy) = (is_standard(x), is_standard(y));
                let mut out = Vec::new();
                let rx = if sx { vec![] } else { self.reverse(x)? };
                let ry = if sy { vec![] } else { self.reverse(y)? };
                for r in &rx {
                    if r.keys().iter().all(|k| !y.has_key(*k)) {
                        out.push(r.with_target(Sum(box_target(&r.target), y.clone())));
                    }
                }
                for r in &ry {
                    if r.keys().iter().all(|k| !x.has_key(*k)) {
                        out.push(r.with_target(Sum(x.clone(), box_target(&r.target))));
                    }
                }
                for a in &rx {
                    for b in &ry {
                        if a.sorted_events() == b.sorted_events() {
                            out.push(a.with_target(Process::sum(a.target.clone(), b.target.clone())));
                        }
                    }
                }
                out
            }
            Seq(x, y) => {
                let mut out = Vec::new();
                if is_fully_executed(x) {
                    for r in self.reverse(y)? {
                        let t = Seq(x.clone(), Arc::new(r.target.clone()));
                        out.push(r.with_target(t));
                    }
                }
                if is_standard(y) {
                    for r in self.reverse(x)? {
                        let t = Seq(Arc::new(r.target.clone()), y.clone());
                        out.push(r.with_target(t));
                    }
                }
                out
            }
            Par(x, y) => self.reverse_par(x, y)?,
            Restrict(body, l) => self
                .reverse(body)?
                .into_iter()
                .filter(|r| !r.events.iter().any(|(a, _)| blocks_action(l, a)))
                .map(|r| {
                    let t = Restrict(Arc::new(r.target.clone()), l.clone());
                    r.with_target(t)
                })
                .collect(),
            Relabel(body, f) => self
                .reverse(body)?
                .into_iter()
                .map(|r| Raw {
                    events: r.events.iter().map(|(a, k)| (f.action(a), *k)).collect(),
                    target: Relabel(Arc::new(r.target.clone()), f.clone()),
                    ..r
                })
                .collect(),
        })
    }
}

/// Both summands perform the same step with the same fresh keys.
fn joint_forward(a: &Raw, b: &Raw, base: Key) -> Option<Raw> {
    let ea = a.sorted_events();
    let eb = b.sorted_events();
    if ea.len() != eb.len() || ea.iter().zip(&eb).any(|(x, y)| x.0 != y.0) {
        return None;
    }
    let mut map = BTreeMap::new();
    for (x, y) in ea.iter().zip(&eb) {
        if *map.entry(y.1).or_insert(x.1) != x.1 {
            return None;
        }
    }
    let tb = b.target.map_keys(&|k| if k >= base { *map.get(&k).unwrap_or(&k) } else { k });
    Some(a.with_target(Process::sum(a.target.clone(), tb)))
}

fn finish(p: &Process, raws: Vec<Raw>, dir: Direction) -> Vec<Transition> {
    let set: BTreeSet<Transition> = raws
        .into_iter()
        .filter(|r| !r.events.is_empty() && !r.unmatched())
        // keys cannot record which of several candidates a multi-prefix synchronised with
        .filter(|r| dir == Direction::Reverse || r.syncs.is_empty() || !ambiguous_pairing(&r.target) || ambiguous_pairing(p))
        .map(|r| Transition { source: p.clone(), label: StepLabel::new(r.events, r.syncs), direction: dir, target: r.target })
        .collect();
    set.into_iter().collect()
}

/// All step transitions of `p` in direction `dir`, at most `cfg.max_width` events each.
pub fn steps(p: &Process, defs: &Definitions, dir: Direction, cfg: &SosConfig) -> Result<StepSet, Error> {
    let mut eng = Engine { defs, cfg, width_truncated: false };
    let raws = match dir {
        Direction::Forward => eng.forward(p, max_key(p) + 1, 0)?,
        Direction::Reverse => eng.reverse(p)?,
    };
    Ok(StepSet { transitions: finish(p, raws, dir), width_truncated: eng.width_truncated })
}

pub fn forward_single(p: &Process, defs: &Definitions) -> Result<Vec<Transition>, Error> {
    Ok(steps(p, defs, Direction::Forward, &SosConfig::width(1))?.transitions)
}

pub fn reverse_single(p: &Process, defs: &Definitions) -> Result<Vec<Transition>, Error> {
    Ok(steps(p, defs, Direction::Reverse, &SosConfig::width(1))?.transitions)
}

pub fn forward_steps(p: &Process, defs: &Definitions, max_width: usize) -> Result<Vec<Transition>, Error> {
    Ok(steps(p, defs, Direction::Forward, &SosConfig::width(max_width))?.transitions)
}

pub fn reverse_steps(p: &Process, defs: &Definitions, max_width: usize) -> Result<Vec<Transition>, Error> {
    Ok(steps(p, defs, Direction::Reverse, &SosConfig::width(max_width))?.transitions)
}

#[derive(Clone, Debug, Default)]
pub struct WeakSteps {
    pub transitions: Vec<Transition>,
    /// The τ-closure budget ran out.
    pub truncated: bool,
}

/// Budget on states visited by each τ-closure.
pub const TAU_CLOSURE_BUDGET: usize = 4096;

fn tau_closure(p: &Process, defs: &Definitions, dir: Direction, cfg: &SosConfig, truncated: &mut bool) -> Result<Vec<Process>, Error> {
    let mut seen = HashSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::from([p.clone()]);
    seen.insert(p.clone());
    while let Some(s) = queue.pop_front() {
        order.push(s.clone());
        for t in steps(&s, defs, dir, cfg)?.transitions {
            if t.label.is_silent() && !seen.contains(&t.target) {
                if seen.len() >= TAU_CLOSURE_BUDGET {
                    *truncated = true;
                    continue;
                }
                seen.insert(t.target.clone());
                queue.push_back(t.target);
            }
        }
    }
    Ok(order)
}

fn weak_steps(p: &Process, defs: &Definitions, dir: Direction, max_width: usize) -> Result<WeakSteps, Error> {
    let cfg = SosConfig::width(max_width);
    let mut truncated = false;
    let mut out = BTreeSet::new();
    for s in tau_closure(p, defs, dir, &cfg, &mut truncated)? {
        for t in steps(&s, defs, dir, &cfg)?.transitions {
            if t.label.is_silent() {
                continue;
            }
            let (actions, keys): (Vec<Action>, Vec<Key>) =
                t.label.actions.iter().zip(&t.label.keys).filter(|(a, _)| !a.is_tau()).map(|(a, k)| (a.clone(), *k)).unzip();
            let label = StepLabel { actions, keys, sync_keys: BTreeSet::new() };
            for end in tau_closure(&t.target, defs, dir, &cfg, &mut truncated)? {
                out.insert(Transition { source: p.clone(), label: label.clone(), direction: dir, target: end });
            }
        }
    }
    Ok(WeakSteps { transitions: out.into_iter().collect(), truncated })
}

/// Transitions `τ* · X · τ*` with X carrying at least one visible event; labels keep only visible events.
pub fn weak_forward_steps(p: &Process, defs: &Definitions, max_width: usize) -> Result<WeakSteps, Error> {
    weak_steps(p, defs, Direction::Forward, max_width)
}

pub fn weak_reverse_steps(p: &Process, defs: &Definitions, max_width: usize) -> Result<WeakSteps, Error> {
    weak_steps(p, defs, Direction::Reverse, max_width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn p(s: &str) -> Process {
        parse(s).unwrap()
    }

    fn d() -> Definitions {
        Definitions::new()
    }

    fn shown(ts: &[Transition]) -> Vec<String> {
        let mut v: Vec<String> = ts.iter().map(|t| format!("{} -> {}", t.label.render(t.direction), t.target)).collect();
        v.sort();
        v
    }

    #[test]
    fn prefix_fires_with_key_one() {
        assert_eq!(shown(&forward_single(&p("a.nil"), &d()).unwrap()), vec!["{a} -> a[1].nil"]);
        assert!(forward_single(&Process::Nil, &d()).unwrap().is_empty());
    }

    #[test]
    fn sync_shares_one_key() {
        let ts = shown(&forward_single(&p("a.nil | ~a.nil"), &d()).unwrap());
        assert_eq!(ts, vec!["{a} -> a[1].nil | ~a.nil", "{tau} -> a[1].nil | ~a[1].nil", "{~a} -> a.nil | ~a[1].nil"]);
        let t = forward_single(&p("a.nil | ~a.nil"), &d()).unwrap();
        let sync = t.iter().find(|t| t.label.actions == vec![Action::Tau]).unwrap();
        assert_eq!(sync.label.sync_keys, [1].into());
    }

    #[test]
    fn reverse_prefix_and_sync() {
        assert_eq!(shown(&reverse_single(&p("a[1].nil"), &d()).unwrap()), vec!["{a[1]} -> a.nil"]);
        assert!(reverse_single(&p("a.nil"), &d()).unwrap().is_empty());
        assert_eq!(shown(&reverse_single(&p("a[1].nil | ~a[1].nil"), &d()).unwrap()), vec!["{tau[1]} -> a.nil | ~a.nil"]);
    }

    #[test]
    fn forward_step_shapes() {
        let ts = shown(&forward_steps(&p("a.nil | b.nil"), &d(), 2).unwrap());
        assert!(ts.contains(&"{a, b} -> a[1].nil | b[2].nil".to_string()), "{ts:?}");
        let ts = forward_steps(&p("a.b.nil"), &d(), 2).unwrap();
        assert!(ts.iter().all(|t| t.label.width() == 1));
        let ts = forward_steps(&p("a.nil | ~a.nil"), &d(), 2).unwrap();
        assert!(!ts.iter().any(|t| t.label.width() == 2));
        assert_eq!(ts.len(), 3);
    }

    #[test]
    fn reverse_step_shapes() {
        let ts = shown(&reverse_steps(&p("a[1].nil | b[2].nil"), &d(), 2).unwrap());
        assert!(ts.contains(&"{a[1], b[2]} -> a.nil | b.nil".to_string()));
        assert!(reverse_steps(&Process::Nil, &d(), 2).unwrap().is_empty());
        let ts = shown(&reverse_steps(&p("(a[1].nil).b[2].nil"), &d(), 2).unwrap());
        assert_eq!(ts, vec!["{b[2]} -> (a[1].nil).b.nil"]);
        let ts = shown(&reverse_steps(&p("a[1].b[2].nil"), &d(), 2).unwrap());
        assert_eq!(ts, vec!["{b[2]} -> a[1].b.nil"]);
    }

    #[test]
    fn sum_commits_to_a_branch() {
        let ts = shown(&forward_single(&p("a.nil + b.nil"), &d()).unwrap());
        assert_eq!(ts, vec!["{a} -> a[1].nil + b.nil", "{b} -> a.nil + b[1].nil"]);
        assert!(forward_single(&p("a[1].nil + b.nil"), &d()).unwrap().is_empty());
        assert_eq!(shown(&reverse_single(&p("a[1].nil + b.nil"), &d()).unwrap()), vec!["{a[1]} -> a.nil + b.nil"]);
    }

    #[test]
    fn joint_sum_moves_together() {
        // both summands executed the same event: undo it jointly
        let q = p("a[1].nil + (a[1].nil).tau[2].nil");
        let ts = shown(&reverse_single(&q, &d()).unwrap());
        assert_eq!(ts, vec!["{tau[2]} -> a[1].nil + (a[1].nil).tau.nil"]);
        let q = p("a[1].nil + (a[1].nil).tau.nil");
        let ts = shown(&reverse_single(&q, &d()).unwrap());
        assert_eq!(ts, vec!["{a[1]} -> a.nil + (a.nil).tau.nil"]);
    }

    #[test]
    fn complementary_events_never_share_a_step() {
        let ts = shown(&reverse_steps(&p("a[1].nil | ~a[2].nil"), &d(), 2).unwrap());
        assert_eq!(ts, vec!["{a[1]} -> a.nil | ~a[2].nil", "{~a[2]} -> a[1].nil | ~a.nil"]);
        let ts = shown(&reverse_steps(&p("a[1].nil | ~a[1].nil | b[2].nil"), &d(), 2).unwrap());
        assert!(ts.contains(&"{tau[1], b[2]} -> a.nil | ~a.nil | b.nil".to_string()), "{ts:?}");
    }

    #[test]
    fn discharged_obligations_stay_discharged() {
        // the idle `d` must not inherit the id of the synchronised ~a
        let ts = shown(&forward_steps(&p("(a.nil | ((a || b).nil | ~a.nil)) | d.nil"), &d(), 5).unwrap());
        assert!(ts.contains(&"{tau, a, b, d} -> (a[1].nil | (a[2] || b[2]).nil | ~a[1].nil) | d[3].nil".to_string()), "{ts:?}");
    }

    #[test]
    fn seq_gates() {
        assert!(forward_single(&p("(a.nil).b.nil"), &d()).unwrap().iter().all(|t| t.label.actions[0].to_string() == "a"));
        let ts = shown(&forward_single(&p("(a[1].nil).b.nil"), &d()).unwrap());
        assert_eq!(ts, vec!["{b} -> (a[1].nil).b[2].nil"]);
    }

    #[test]
    fn restriction_and_relabelling() {
        let ts = shown(&forward_steps(&p("(a.nil | ~a.nil) \\ {a}"), &d(), 2).unwrap());
        assert_eq!(ts, vec!["{tau} -> (a[1].nil | ~a[1].nil) \\ {a}"]);
        let ts = shown(&forward_single(&p("a.nil[a->b]"), &d()).unwrap());
        assert_eq!(ts, vec!["{b} -> a[1].nil[a->b]"]);
    }

    #[test]
    fn constants_unfold() {
        let mut defs = Definitions::new();
        defs.insert("A", p("a.A"));
        let ts = shown(&forward_single(&Process::Const("A".into()), &defs).unwrap());
        assert_eq!(ts, vec!["{a} -> a[1].A"]);
        defs.insert("B", p("B + b.nil"));
        assert!(matches!(forward_single(&Process::Const("B".into()), &defs), Err(Error::UnguardedRecursion(_))));
        assert!(matches!(forward_single(&Process::Const("C".into()), &defs), Err(Error::UnknownConstant(_))));
    }

    #[test]
    fn multi_prefix_and_width() {
        let s = steps(&p("(a || b).nil"), &d(), Direction::Forward, &SosConfig::width(1)).unwrap();
        assert!(s.transitions.is_empty());
        assert!(s.width_truncated);
        let ts = shown(&forward_steps(&p("(a || b).nil"), &d(), 2).unwrap());
        assert_eq!(ts, vec!["{a, b} -> (a[1] || b[1]).nil"]);
        let ts = shown(&reverse_steps(&p("(a[1] || b[1]).nil"), &d(), 2).unwrap());
        assert_eq!(ts, vec!["{a[1], b[1]} -> (a || b).nil"]);
    }

    #[test]
    fn sync_obligations_span_nesting() {
        // b[1] may stay unsynchronised when ~b syncs with the other b, however the components nest
        for t in ["b.nil | (b.nil | ~b.nil)", "(b.nil | b.nil) | ~b.nil", "(b.nil | ~b.nil) \\ {c} | b.nil"] {
            let ts = shown(&forward_steps(&p(t), &d(), 3).unwrap());
            assert_eq!(ts.iter().filter(|s| s.starts_with("{tau, b}")).count(), 2, "{t}: {ts:?}");
            assert!(!ts.iter().any(|s| s.starts_with("{~b, b")), "{t}: {ts:?}");
        }
    }

    #[test]
    fn ambiguous_multi_sync_is_dropped() {
        let q = p("a.nil | (~a || c).nil | (~a || ~c).nil");
        let ts = shown(&forward_steps(&q, &d(), 3).unwrap());
        assert!(!ts.iter().any(|s| s.starts_with("{tau, tau, ~a}")), "{ts:?}");
        assert!(ts.iter().any(|s| s.starts_with("{tau, c}")), "{ts:?}");
    }

    #[test]
    fn multi_prefix_partner_reverses_together() {
        let q = p("(a || b).nil | ~a.nil");
        let ts = forward_steps(&q, &d(), 3).unwrap();
        let sync = ts.iter().find(|t| t.label.actions.contains(&Action::Tau)).unwrap();
        assert_eq!(sync.target, p("(a[1] || b[1]).nil | ~a[1].nil"));
        let back = shown(&reverse_steps(&sync.target, &d(), 3).unwrap());
        assert_eq!(back, vec!["{tau[1], b[1]} -> (a || b).nil | ~a.nil"]);
    }

    #[test]
    fn weak_steps_absorb_tau() {
        let w = weak_forward_steps(&p("tau.a.nil"), &d(), 2).unwrap();
        assert_eq!(shown(&w.transitions), vec!["{a} -> tau[1].a[2].nil"]);
        let w = weak_forward_steps(&p("tau.tau.a.nil"), &d(), 2).unwrap();
        assert_eq!(shown(&w.transitions), vec!["{a} -> tau[1].tau[2].a[3].nil"]);
        let w = weak_forward_steps(&p("a.nil"), &d(), 2).unwrap();
        assert_eq!(shown(&w.transitions), shown(&forward_steps(&p("a.nil"), &d(), 2).unwrap()));
        let w = weak_reverse_steps(&p("a[1].nil"), &d(), 2).unwrap();
        assert_eq!(shown(&w.transitions), vec!["{a[1]} -> a.nil"]);
        assert!(weak_reverse_steps(&Process::Nil, &d(), 2).unwrap().transitions.is_empty());
        let w = weak_reverse_steps(&p("tau[1].a[2].nil"), &d(), 2).unwrap();
        assert_eq!(shown(&w.transitions), vec!["{a[2]} -> tau.a.nil", "{a[2]} -> tau[1].a.nil"]);
    }

    #[test]
    fn term_wide_reverse_mode() {
        let q = p("a[1].nil | b[2].nil");
        let cfg = SosConfig { par_reverse: ParReverse::TermWide, ..SosConfig::width(2) };
        let s = steps(&q, &d(), Direction::Reverse, &cfg).unwrap();
        assert_eq!(shown(&s.transitions), vec!["{a[1], b[2]} -> a.nil | b.nil"]);
    }
}
