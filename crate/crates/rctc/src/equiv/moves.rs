//! Transition views of an explored LTS used by the checkers.

use std::collections::{BTreeSet, VecDeque};

use crate::lts::{runs, KeyedLts, StateId};
use crate::pomset::Pomset;
use crate::sos::Direction;
use crate::term::Action;

use super::Strength;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MoveLabel {
    Step(Direction, Vec<Action>),
    Pomset(Direction, Pomset),
}

impl MoveLabel {
    pub fn direction(&self) -> Direction {
        match self {
            MoveLabel::Step(d, _) | MoveLabel::Pomset(d, _) => *d,
        }
    }

    pub fn render(&self) -> String {
        let dir = match self.direction() {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        };
        match self {
            MoveLabel::Step(_, acts) => {
                let parts: Vec<String> = acts.iter().map(|a| a.to_string()).collect();
                format!("{dir} step {{{}}}", parts.join(", "))
            }
            MoveLabel::Pomset(_, p) => format!("{dir} pomset {}", render_pomset(p)),
        }
    }
}

pub fn render_pomset(p: &Pomset) -> String {
    let events: Vec<String> = p.labels.iter().map(|a| a.to_string()).collect();
    let mut order = Vec::new();
    for j in 0..p.len() {
        for i in 0..p.len() {
            if p.below(i, j) {
                order.push(format!("{i}<{j}"));
            }
        }
    }
    if order.is_empty() {
        format!("{{{}}}", events.join(", "))
    } else {
        format!("{{{}}} order [{}]", events.join(", "), order.join(", "))
    }
}

/// `(label, target)` moves of every state.
pub type LabelledMoves = Vec<Vec<(MoveLabel, StateId)>>;

/// States reachable by silent edges in direction `dir`, including `s`.
pub fn tau_closure(lts: &KeyedLts, s: StateId, dir: Direction) -> Vec<StateId> {
    let mut seen = BTreeSet::from([s]);
    let mut queue = VecDeque::from([s]);
    let mut out = Vec::new();
    while let Some(x) = queue.pop_front() {
        out.push(x);
        for e in lts.outgoing(x, dir) {
            if e.label.is_silent() && seen.insert(e.dst) {
                queue.push_back(e.dst);
            }
        }
    }
    out
}

pub fn step_moves(lts: &KeyedLts, strength: Strength, allowed: &[Direction]) -> LabelledMoves {
    let mut out = vec![Vec::new(); lts.states.len()];
    for s in 0..lts.states.len() {
        let mut set = BTreeSet::new();
        for &dir in allowed {
            match strength {
                Strength::Strong => {
                    for e in lts.outgoing(s, dir) {
                        set.insert((MoveLabel::Step(dir, e.label.actions.clone()), e.dst));
                    }
                }
                Strength::Weak => {
                    for a in tau_closure(lts, s, dir) {
                        for e in lts.outgoing(a, dir) {
                            if e.label.is_silent() {
                                continue;
                            }
                            for b in tau_closure(lts, e.dst, dir) {
                                set.insert((MoveLabel::Step(dir, e.label.visible()), b));
                            }
                        }
                    }
                }
            }
        }
        out[s] = set.into_iter().collect();
    }
    out
}

pub fn pomset_moves(lts: &KeyedLts, strength: Strength, allowed: &[Direction], max_events: usize) -> LabelledMoves {
    let weak = strength == Strength::Weak;
    let mut out = vec![Vec::new(); lts.states.len()];
    for s in 0..lts.states.len() {
        let mut set = BTreeSet::new();
        for &dir in allowed {
            for r in runs(lts, s, max_events, dir, weak) {
                set.insert((MoveLabel::Pomset(dir, r.pomset), r.end));
            }
        }
        out[s] = set.into_iter().collect();
    }
    out
}

/// A move that tracks event identity, for history-preserving checks. Only
/// the events a flavor observes (all for strong, visible ones for weak) are
/// listed.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TrackedMove {
    pub direction: Direction,
    pub dst: StateId,
    /// Forward: new events in `dst`. Reverse: removed events of the source.
    pub events: Vec<usize>,
    /// Source event → destination event for observed events that survive.
    pub map: Vec<(usize, usize)>,
}

pub fn observed(lts: &KeyedLts, s: StateId, strength: Strength) -> u64 {
    let h = &lts.states[s].history;
    match strength {
        Strength::Strong => h.all(),
        Strength::Weak => h.visible(),
    }
}

pub fn tracked_moves(lts: &KeyedLts, strength: Strength, allowed: &[Direction]) -> Vec<Vec<TrackedMove>> {
    let mut out = vec![Vec::new(); lts.states.len()];
    for s in 0..lts.states.len() {
        let mut set = BTreeSet::new();
        for &dir in allowed {
            match strength {
                Strength::Strong => {
                    for e in lts.outgoing(s, dir) {
                        let map = e.map.iter().enumerate().filter_map(|(i, t)| t.map(|t| (i, t))).collect();
                        set.insert(TrackedMove { direction: dir, dst: e.dst, events: e.events.clone(), map });
                    }
                }
                Strength::Weak => weak_tracked(lts, s, dir, &mut set),
            }
        }
        out[s] = set.into_iter().collect();
    }
    out
}

/// τ* · X · τ* paths from `s`, following observed events along the way.
fn weak_tracked(lts: &KeyedLts, s: StateId, dir: Direction, out: &mut BTreeSet<TrackedMove>) {
    let vis0 = lts.states[s].history.visible();
    // cur: source visible event -> current index; new: visible events added (forward, current indices)
    // removed: visible source events undone (reverse)
    #[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
    struct Node {
        at: StateId,
        done: bool,
        cur: Vec<(usize, usize)>,
        new: Vec<usize>,
        removed: Vec<usize>,
    }
    let start = Node {
        at: s,
        done: false,
        cur: (0..lts.states[s].history.len()).filter(|i| vis0 >> i & 1 == 1).map(|i| (i, i)).collect(),
        new: vec![],
        removed: vec![],
    };
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        if n.done {
            let events = match dir {
                Direction::Forward => n.new.clone(),
                Direction::Reverse => n.removed.clone(),
            };
            out.insert(TrackedMove { direction: dir, dst: n.at, events, map: n.cur.clone() });
        }
        for e in lts.outgoing(n.at, dir) {
            let silent = e.label.is_silent();
            if !silent && n.done {
                continue;
            }
            let dst_vis = lts.states[e.dst].history.visible();
            let mut next = Node { at: e.dst, done: n.done || !silent, cur: vec![], new: vec![], removed: n.removed.clone() };
            for (src, c) in &n.cur {
                match e.map[*c] {
                    Some(t) => next.cur.push((*src, t)),
                    None => next.removed.push(*src),
                }
            }
            for c in &n.new {
                if let Some(t) = e.map[*c] {
                    next.new.push(t);
                }
            }
            if dir == Direction::Forward {
                for t in &e.events {
                    if dst_vis >> t & 1 == 1 {
                        next.new.push(*t);
                    }
                }
            }
            next.new.sort();
            next.removed.sort();
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
}
