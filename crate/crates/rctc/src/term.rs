//! Term model: labels, actions, keys and processes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::Error;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub name: Arc<str>,
    pub co: bool,
}

impl Label {
    pub fn plain(name: &str) -> Label {
        Label { name: name.into(), co: false }
    }

    pub fn co(name: &str) -> Label {
        Label { name: name.into(), co: true }
    }

    pub fn complement(&self) -> Label {
        Label { name: self.name.clone(), co: !self.co }
    }

    pub fn is_complement_of(&self, other: &Label) -> bool {
        self.name == other.name && self.co != other.co
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.co {
            write!(f, "~{}", self.name)
        } else {
            write!(f, "{}", self.name)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Tau,
    Vis(Label),
}

impl Action {
    pub fn label(&self) -> Option<&Label> {
        match self {
            Action::Tau => None,
            Action::Vis(l) => Some(l),
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Action::Tau)
    }

    /// True when the two actions can synchronise.
    pub fn complements(&self, other: &Action) -> bool {
        match (self, other) {
            (Action::Vis(a), Action::Vis(b)) => a.is_complement_of(b),
            _ => false,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Tau => write!(f, "tau"),
            Action::Vis(l) => write!(f, "{l}"),
        }
    }
}

pub type Key = u32;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KeyedAction {
    pub action: Action,
    pub key: Key,
}

impl fmt::Display for KeyedAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.action, self.key)
    }
}

/// Relabelling on plain names; co-names follow by complement and tau is fixed.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelabelMap(pub BTreeMap<String, Label>);

impl RelabelMap {
    pub fn identity() -> RelabelMap {
        RelabelMap::default()
    }

    pub fn from_pairs(pairs: &[(&str, Label)]) -> RelabelMap {
        RelabelMap(pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect())
    }

    pub fn label(&self, l: &Label) -> Label {
        match self.0.get(&*l.name) {
            Some(img) if l.co => img.complement(),
            Some(img) => img.clone(),
            None => l.clone(),
        }
    }

    pub fn action(&self, a: &Action) -> Action {
        apply_relabel(self, a)
    }

    /// `outer ∘ self`: first apply `self`, then `outer`.
    pub fn then(&self, outer: &RelabelMap) -> RelabelMap {
        let mut out = BTreeMap::new();
        let names: BTreeSet<&String> = self.0.keys().chain(outer.0.keys()).collect();
        for n in names {
            out.insert(n.clone(), outer.label(&self.label(&Label::plain(n))));
        }
        RelabelMap(out)
    }
}

pub fn apply_relabel(f: &RelabelMap, a: &Action) -> Action {
    match a {
        Action::Tau => Action::Tau,
        Action::Vis(l) => Action::Vis(f.label(l)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Process {
    Nil,
    Const(String),
    /// `α.P` or `(α1 || .. || αn).P`, not yet executed.
    Prefix(Vec<Action>, Arc<Process>),
    /// Executed prefix `α[m].P` or `(α1[m] || .. || αn[m]).P`; one key for the whole group.
    Past(Vec<Action>, Key, Arc<Process>),
    Sum(Arc<Process>, Arc<Process>),
    Par(Arc<Process>, Arc<Process>),
    /// General sequential composition `P.Q`.
    Seq(Arc<Process>, Arc<Process>),
    Restrict(Arc<Process>, BTreeSet<Label>),
    Relabel(Arc<Process>, RelabelMap),
}

use Process::*;

impl Process {
    pub fn prefix(a: Action, body: Process) -> Process {
        Prefix(vec![a], Arc::new(body))
    }

    pub fn past(a: Action, key: Key, body: Process) -> Process {
        Past(vec![a], key, Arc::new(body))
    }

    pub fn sum(p: Process, q: Process) -> Process {
        Sum(Arc::new(p), Arc::new(q))
    }

    pub fn par(p: Process, q: Process) -> Process {
        Par(Arc::new(p), Arc::new(q))
    }

    pub fn seq(p: Process, q: Process) -> Process {
        Seq(Arc::new(p), Arc::new(q))
    }

    pub fn restrict(p: Process, labels: BTreeSet<Label>) -> Process {
        Restrict(Arc::new(p), labels)
    }

    pub fn relabel(p: Process, f: RelabelMap) -> Process {
        Relabel(Arc::new(p), f)
    }

    /// Right-nested parallel composition of the given components.
    pub fn par_all(mut parts: Vec<Process>) -> Process {
        let mut acc = parts.pop().unwrap_or(Nil);
        while let Some(p) = parts.pop() {
            acc = Process::par(p, acc);
        }
        acc
    }

    /// Left-nested sum; nil for an empty list.
    pub fn sum_all(parts: Vec<Process>) -> Process {
        let mut it = parts.into_iter();
        let Some(mut acc) = it.next() else { return Nil };
        for p in it {
            acc = Process::sum(acc, p);
        }
        acc
    }

    pub fn children(&self) -> impl Iterator<Item = &Process> {
        let pair: [Option<&Process>; 2] = match self {
            Nil | Const(_) => [None, None],
            Prefix(_, b) | Past(_, _, b) | Restrict(b, _) | Relabel(b, _) => [Some(b), None],
            Sum(p, q) | Par(p, q) | Seq(p, q) => [Some(p), Some(q)],
        };
        pair.into_iter().flatten()
    }

    /// Number of prefix actions (executed or not) in the term, constants not unfolded.
    pub fn action_count(&self) -> usize {
        let own = match self {
            Prefix(a, _) | Past(a, _, _) => a.len(),
            _ => 0,
        };
        own + self.children().map(|c| c.action_count()).sum::<usize>()
    }

    pub fn size(&self) -> usize {
        1 + self.children().map(|c| c.size()).sum::<usize>()
    }

    pub fn keys(&self) -> BTreeSet<Key> {
        let mut out = BTreeSet::new();
        self.collect_keys(&mut out);
        out
    }

    fn collect_keys(&self, out: &mut BTreeSet<Key>) {
        if let Past(_, k, _) = self {
            out.insert(*k);
        }
        for c in self.children() {
            c.collect_keys(out);
        }
    }

    pub fn has_key(&self, k: Key) -> bool {
        match self {
            Past(_, m, b) => *m == k || b.has_key(k),
            _ => self.children().any(|c| c.has_key(k)),
        }
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_consts(&mut out);
        out
    }

    fn collect_consts(&self, out: &mut BTreeSet<String>) {
        if let Const(n) = self {
            out.insert(n.clone());
        }
        for c in self.children() {
            c.collect_consts(out);
        }
    }

    /// Rename every key through `f`.
    pub fn map_keys(&self, f: &dyn Fn(Key) -> Key) -> Process {
        match self {
            Nil | Const(_) => self.clone(),
            Prefix(a, b) => Prefix(a.clone(), Arc::new(b.map_keys(f))),
            Past(a, k, b) => Past(a.clone(), f(*k), Arc::new(b.map_keys(f))),
            Sum(p, q) => Process::sum(p.map_keys(f), q.map_keys(f)),
            Par(p, q) => Process::par(p.map_keys(f), q.map_keys(f)),
            Seq(p, q) => Process::seq(p.map_keys(f), q.map_keys(f)),
            Restrict(b, l) => Process::restrict(b.map_keys(f), l.clone()),
            Relabel(b, m) => Process::relabel(b.map_keys(f), m.clone()),
        }
    }

    /// Keys in first-use preorder.
    pub fn keys_in_order(&self) -> Vec<Key> {
        let mut out = Vec::new();
        self.collect_key_order(&mut out);
        out
    }

    fn collect_key_order(&self, out: &mut Vec<Key>) {
        if let Past(_, k, _) = self {
            if !out.contains(k) {
                out.push(*k);
            }
        }
        for c in self.children() {
            c.collect_key_order(out);
        }
    }

    /// Rename keys to 1, 2, .. by first use; returns the renamed term and old→new map.
    pub fn canonical(&self) -> (Process, BTreeMap<Key, Key>) {
        let order = self.keys_in_order();
        let map: BTreeMap<Key, Key> = order.iter().enumerate().map(|(i, k)| (*k, i as Key + 1)).collect();
        if map.iter().all(|(a, b)| a == b) {
            return (self.clone(), map);
        }
        let renamed = self.map_keys(&|k| map[&k]);
        (renamed, map)
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::syntax::render(self))
    }
}

/// Constant environment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Definitions {
    pub map: BTreeMap<String, Process>,
}

impl Definitions {
    pub fn new() -> Definitions {
        Definitions::default()
    }

    pub fn get(&self, name: &str) -> Result<&Process, Error> {
        self.map.get(name).ok_or_else(|| Error::UnknownConstant(name.to_string()))
    }

    pub fn insert(&mut self, name: &str, body: Process) {
        self.map.insert(name.to_string(), body);
    }

    /// Every body is standard and every referenced constant is defined.
    pub fn validate(&self) -> Result<(), Error> {
        for (name, body) in &self.map {
            if !is_standard(body) {
                return Err(Error::NonStandardDefinition(name.clone()));
            }
            for c in body.constants() {
                self.get(&c)?;
            }
        }
        Ok(())
    }

    /// Constants reachable from `p` are all defined.
    pub fn check_closed(&self, p: &Process) -> Result<(), Error> {
        let mut seen = BTreeSet::new();
        let mut todo: Vec<String> = p.constants().into_iter().collect();
        while let Some(c) = todo.pop() {
            if seen.insert(c.clone()) {
                todo.extend(self.get(&c)?.constants());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sort {
    pub labels: BTreeSet<Label>,
    /// Constant unfolding ran out of fuel, so `labels` may be incomplete.
    pub lower_bound: bool,
}

/// The sort of `p`: visible labels it may ever perform, executed ones included.
pub fn sort(p: &Process, defs: &Definitions, fuel: usize) -> Result<Sort, Error> {
    let mut s = Sort { labels: BTreeSet::new(), lower_bound: false };
    sort_into(p, defs, fuel, &mut s.labels, &mut s.lower_bound)?;
    Ok(s)
}

fn sort_into(p: &Process, defs: &Definitions, fuel: usize, out: &mut BTreeSet<Label>, lower: &mut bool) -> Result<(), Error> {
    match p {
        Nil => {}
        Const(n) => {
            let body = defs.get(n)?;
            if fuel == 0 {
                *lower = true;
            } else {
                sort_into(body, defs, fuel - 1, out, lower)?;
            }
        }
        Prefix(acts, b) | Past(acts, _, b) => {
            out.extend(acts.iter().filter_map(|a| a.label().cloned()));
            sort_into(b, defs, fuel, out, lower)?;
        }
        Sum(x, y) | Par(x, y) | Seq(x, y) => {
            sort_into(x, defs, fuel, out, lower)?;
            sort_into(y, defs, fuel, out, lower)?;
        }
        Restrict(b, l) => {
            let mut inner = BTreeSet::new();
            sort_into(b, defs, fuel, &mut inner, lower)?;
            out.extend(inner.into_iter().filter(|x| !blocks(l, x)));
        }
        Relabel(b, f) => {
            let mut inner = BTreeSet::new();
            sort_into(b, defs, fuel, &mut inner, lower)?;
            out.extend(inner.iter().map(|x| f.label(x)));
        }
    }
    Ok(())
}

/// Whether restriction set `l` forbids label `x`.
pub fn blocks(l: &BTreeSet<Label>, x: &Label) -> bool {
    l.contains(x) || l.contains(&x.complement())
}

pub fn blocks_action(l: &BTreeSet<Label>, a: &Action) -> bool {
    a.label().is_some_and(|x| blocks(l, x))
}

/// No executed (keyed) prefix anywhere.
pub fn is_standard(p: &Process) -> bool {
    match p {
        Past(..) => false,
        _ => p.children().all(|c| is_standard(c)),
    }
}

/// No unexecuted prefix left along the executed path.
///
/// For a sum only the branch that was taken counts; when neither branch has
/// started, both must be inert.
pub fn is_fully_executed(p: &Process) -> bool {
    match p {
        Nil => true,
        Const(_) | Prefix(..) => false,
        Past(_, _, b) | Restrict(b, _) | Relabel(b, _) => is_fully_executed(b),
        Par(x, y) | Seq(x, y) => is_fully_executed(x) && is_fully_executed(y),
        Sum(x, y) => match (is_standard(x), is_standard(y)) {
            (false, true) => is_fully_executed(x),
            (true, false) => is_fully_executed(y),
            _ => is_fully_executed(x) && is_fully_executed(y),
        },
    }
}

pub fn max_key(p: &Process) -> Key {
    match p {
        Past(_, k, b) => (*k).max(max_key(b)),
        _ => p.children().map(|c| max_key(c)).max().unwrap_or(0),
    }
}

/// Labels of `p` and their complements, handy for restriction side conditions.
pub fn with_complements(labels: &BTreeSet<Label>) -> BTreeSet<Label> {
    labels.iter().flat_map(|l| [l.clone(), l.complement()]).collect()
}
