//! History-preserving checks over posetal triples `(s1, f, s2)`, where `f`
//! is an order isomorphism between the observed histories of two states.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::lts::{KeyedLts, StateId};
use crate::sos::Direction;
use crate::term::Action;

use super::moves::{observed, TrackedMove};
use super::{Evidence, EvidenceStep, Side, Strength, Triple};

/// Label- and order-preserving bijections between the observed events of two states.
pub fn isomorphisms(l1: &KeyedLts, s1: StateId, l2: &KeyedLts, s2: StateId, strength: Strength) -> Vec<Vec<(usize, usize)>> {
    let m1 = observed(l1, s1, strength);
    let m2 = observed(l2, s2, strength);
    let a: Vec<usize> = (0..64).filter(|i| m1 >> i & 1 == 1).collect();
    let b: Vec<usize> = (0..64).filter(|i| m2 >> i & 1 == 1).collect();
    if a.len() != b.len() {
        return vec![];
    }
    let h1 = &l1.states[s1].history;
    let h2 = &l2.states[s2].history;
    let mut out = Vec::new();
    fn go(
        i: usize,
        a: &[usize],
        b: &[usize],
        h1: &crate::lts::History,
        h2: &crate::lts::History,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if i == a.len() {
            out.push(cur.clone());
            return;
        }
        let x = a[i];
        for (j, y) in b.iter().enumerate() {
            if used[j] || h1.events[x].action != h2.events[*y].action {
                continue;
            }
            let ok = cur
                .iter()
                .all(|(p, q)| (h1.below[x] >> p & 1) == (h2.below[*y] >> q & 1) && (h1.below[*p] >> x & 1) == (h2.below[*q] >> y & 1));
            if ok {
                used[j] = true;
                cur.push((x, *y));
                go(i + 1, a, b, h1, h2, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    go(0, &a, &b, h1, h2, &mut vec![false; b.len()], &mut Vec::new(), &mut out);
    out
}

/// Whether `f` is an order isomorphism between the observed events of the two states.
pub fn is_iso(l1: &KeyedLts, s1: StateId, l2: &KeyedLts, s2: StateId, f: &[(usize, usize)], strength: Strength) -> bool {
    let m1 = observed(l1, s1, strength);
    let m2 = observed(l2, s2, strength);
    let h1 = &l1.states[s1].history;
    let h2 = &l2.states[s2].history;
    let dom: u64 = f.iter().fold(0, |m, (x, _)| m | 1 << x);
    let img: u64 = f.iter().fold(0, |m, (_, y)| m | 1 << y);
    if dom != m1 || img != m2 || dom.count_ones() as usize != f.len() || img.count_ones() as usize != f.len() {
        return false;
    }
    f.iter().all(|(x, y)| h1.events[*x].action == h2.events[*y].action)
        && f.iter().all(|(x, y)| f.iter().all(|(p, q)| (h1.below[*x] >> p & 1) == (h2.below[*y] >> q & 1)))
}

fn lookup(f: &[(usize, usize)], x: usize) -> Option<usize> {
    f.iter().find(|(a, _)| *a == x).map(|(_, b)| *b)
}

fn labels(l: &KeyedLts, s: StateId, events: &[usize]) -> Vec<Action> {
    let mut v: Vec<Action> = events.iter().map(|e| l.states[s].history.events[*e].action.clone()).collect();
    v.sort();
    v
}

/// Triples reached when `m1` is answered by `m2` from `(s1, f, s2)`.
pub fn answers(
    l1: &KeyedLts,
    l2: &KeyedLts,
    f: &[(usize, usize)],
    m1: &TrackedMove,
    m2: &TrackedMove,
    strength: Strength,
) -> Vec<Vec<(usize, usize)>> {
    if m1.direction != m2.direction || m1.events.len() != m2.events.len() {
        return vec![];
    }
    match m1.direction {
        Direction::Reverse => {
            let image: BTreeSet<usize> = m1.events.iter().filter_map(|e| lookup(f, *e)).collect();
            let removed2: BTreeSet<usize> = m2.events.iter().copied().collect();
            if image.len() != m1.events.len() || image != removed2 {
                return vec![];
            }
            let mut g = Vec::new();
            for (x, y) in f {
                if m1.events.contains(x) {
                    continue;
                }
                match (lookup(&m1.map, *x), lookup(&m2.map, *y)) {
                    (Some(a), Some(b)) => g.push((a, b)),
                    _ => return vec![],
                }
            }
            g.sort();
            if is_iso(l1, m1.dst, l2, m2.dst, &g, strength) {
                vec![g]
            } else {
                vec![]
            }
        }
        Direction::Forward => {
            if labels(l1, m1.dst, &m1.events) != labels(l2, m2.dst, &m2.events) {
                return vec![];
            }
            let mut base = Vec::new();
            for (x, y) in f {
                match (lookup(&m1.map, *x), lookup(&m2.map, *y)) {
                    (Some(a), Some(b)) => base.push((a, b)),
                    _ => return vec![],
                }
            }
            let h1 = &l1.states[m1.dst].history;
            let h2 = &l2.states[m2.dst].history;
            let mut out = Vec::new();
            // label-preserving bijections between the new events, checked for order
            fn go(
                i: usize,
                m1: &TrackedMove,
                m2: &TrackedMove,
                h1: &crate::lts::History,
                h2: &crate::lts::History,
                used: &mut Vec<bool>,
                cur: &mut Vec<(usize, usize)>,
                out: &mut Vec<Vec<(usize, usize)>>,
            ) {
                if i == m1.events.len() {
                    out.push(cur.clone());
                    return;
                }
                let x = m1.events[i];
                for (j, y) in m2.events.iter().enumerate() {
                    if !used[j] && h1.events[x].action == h2.events[*y].action {
                        used[j] = true;
                        cur.push((x, *y));
                        go(i + 1, m1, m2, h1, h2, used, cur, out);
                        cur.pop();
                        used[j] = false;
                    }
                }
            }
            let mut cands = Vec::new();
            go(0, m1, m2, h1, h2, &mut vec![false; m2.events.len()], &mut base.clone(), &mut cands);
            for mut g in cands {
                g.sort();
                if is_iso(l1, m1.dst, l2, m2.dst, &g, strength) {
                    out.push(g);
                }
            }
            out
        }
    }
}

struct Node {
    triple: Triple,
    /// Each challenge lists its possible answers.
    challenges: Vec<(Side, usize, Vec<usize>)>,
    /// Downward-closure obligations: each must have an alive candidate.
    retractions: Vec<(Side, usize, Vec<usize>)>,
}

pub struct HpGame<'a> {
    l1: &'a KeyedLts,
    l2: &'a KeyedLts,
    game1: &'a [Vec<TrackedMove>],
    game2: &'a [Vec<TrackedMove>],
    nodes: Vec<Node>,
    index: HashMap<Triple, usize>,
    pub roots: Vec<usize>,
    /// Round in which a triple was removed; `None` if it survives.
    pub removed: Vec<Option<usize>>,
}

pub struct HpInput<'a> {
    pub left: &'a KeyedLts,
    pub right: &'a KeyedLts,
    pub strength: Strength,
    /// Moves the game is played over.
    pub game_left: &'a [Vec<TrackedMove>],
    pub game_right: &'a [Vec<TrackedMove>],
    /// Reverse moves used for downward closure (hereditary flavor only).
    pub retract: Option<(&'a [Vec<TrackedMove>], &'a [Vec<TrackedMove>])>,
}

impl<'a> HpGame<'a> {
    pub fn solve(input: HpInput<'a>) -> HpGame<'a> {
        let HpInput { left: l1, right: l2, strength, game_left: game1, game_right: game2, retract } = input;
        let mut g = HpGame { l1, l2, game1, game2, nodes: vec![], index: HashMap::new(), roots: vec![], removed: vec![] };
        let mut queue = VecDeque::new();
        for f in isomorphisms(l1, l1.initial, l2, l2.initial, strength) {
            let t = Triple { left: l1.initial, right: l2.initial, map: f };
            let id = g.intern(t, &mut queue);
            g.roots.push(id);
        }
        while let Some(id) = queue.pop_front() {
            let t = g.nodes[id].triple.clone();
            let mut challenges = Vec::new();
            let mut resp1: Vec<Vec<usize>> = vec![vec![]; game1[t.left].len()];
            let mut resp2: Vec<Vec<usize>> = vec![vec![]; game2[t.right].len()];
            for (i, m1) in game1[t.left].iter().enumerate() {
                for (j, m2) in game2[t.right].iter().enumerate() {
                    for f in answers(l1, l2, &t.map, m1, m2, strength) {
                        let nid = g.intern(Triple { left: m1.dst, right: m2.dst, map: f }, &mut queue);
                        resp1[i].push(nid);
                        resp2[j].push(nid);
                    }
                }
            }
            for (i, r) in resp1.into_iter().enumerate() {
                challenges.push((Side::Left, i, r));
            }
            for (j, r) in resp2.into_iter().enumerate() {
                challenges.push((Side::Right, j, r));
            }
            let mut retractions = Vec::new();
            if let Some((r1, r2)) = retract {
                let mut back1: Vec<Vec<usize>> = vec![vec![]; r1[t.left].len()];
                let mut back2: Vec<Vec<usize>> = vec![vec![]; r2[t.right].len()];
                for (i, m1) in r1[t.left].iter().enumerate() {
                    for (j, m2) in r2[t.right].iter().enumerate() {
                        for f in answers(l1, l2, &t.map, m1, m2, strength) {
                            let nid = g.intern(Triple { left: m1.dst, right: m2.dst, map: f }, &mut queue);
                            back1[i].push(nid);
                            back2[j].push(nid);
                        }
                    }
                }
                retractions.extend(back1.into_iter().enumerate().map(|(i, r)| (Side::Left, i, r)));
                retractions.extend(back2.into_iter().enumerate().map(|(j, r)| (Side::Right, j, r)));
            }
            g.nodes[id].challenges = challenges;
            g.nodes[id].retractions = retractions;
        }
        g.fixpoint();
        g
    }

    fn intern(&mut self, t: Triple, queue: &mut VecDeque<usize>) -> usize {
        if let Some(id) = self.index.get(&t) {
            return *id;
        }
        let id = self.nodes.len();
        self.index.insert(t.clone(), id);
        self.nodes.push(Node { triple: t, challenges: vec![], retractions: vec![] });
        queue.push_back(id);
        id
    }

    fn fixpoint(&mut self) {
        let n = self.nodes.len();
        self.removed = vec![None; n];
        let mut round = 0;
        loop {
            round += 1;
            let alive = |x: &usize, removed: &Vec<Option<usize>>| removed[*x].is_none();
            let dead: Vec<usize> = (0..n)
                .filter(|id| self.removed[*id].is_none())
                .filter(|id| {
                    let node = &self.nodes[*id];
                    node.challenges.iter().chain(&node.retractions).any(|(_, _, r)| !r.iter().any(|x| alive(x, &self.removed)))
                })
                .collect();
            if dead.is_empty() {
                break;
            }
            for id in dead {
                self.removed[id] = Some(round);
            }
        }
    }

    pub fn related(&self) -> bool {
        self.roots.iter().any(|r| self.removed[*r].is_none())
    }

    /// Alive triples reachable from an alive root through alive answers.
    pub fn witness(&self) -> Vec<Triple> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<usize> = self.roots.iter().copied().filter(|r| self.removed[*r].is_none()).take(1).collect();
        seen.extend(queue.iter().copied());
        while let Some(id) = queue.pop_front() {
            let node = &self.nodes[id];
            for (_, _, r) in node.challenges.iter().chain(&node.retractions) {
                for x in r {
                    if self.removed[*x].is_none() && seen.insert(*x) {
                        queue.push_back(*x);
                    }
                }
            }
        }
        seen.into_iter().map(|id| self.nodes[id].triple.clone()).collect()
    }

    fn describe(&self, side: Side, s: StateId, m: &TrackedMove) -> String {
        let (lts, dst) = match side {
            Side::Left => (self.l1, m.dst),
            Side::Right => (self.l2, m.dst),
        };
        let (dir, hist_state) = match m.direction {
            Direction::Forward => ("forward", dst),
            Direction::Reverse => ("reverse", s),
        };
        let h = &lts.states[hist_state].history;
        let mut parts: Vec<String> = m
            .events
            .iter()
            .map(|e| match m.direction {
                Direction::Forward => h.events[*e].action.to_string(),
                Direction::Reverse => format!("{}[{}]", h.events[*e].action, h.events[*e].id.key),
            })
            .collect();
        parts.sort();
        format!("{dir} step {{{}}}", parts.join(", "))
    }

    pub fn evidence(&self) -> Evidence {
        let Some(&root) = self.roots.iter().max_by_key(|r| self.removed[**r]) else {
            return Evidence { steps: vec![], note: Some("initial histories are not isomorphic".into()) };
        };
        let mut steps = Vec::new();
        let mut cur = root;
        while let Some(level) = self.removed[cur] {
            let node = &self.nodes[cur];
            let t = &node.triple;
            let sep = |r: &Vec<usize>| r.iter().all(|x| self.removed[*x].is_some_and(|k| k < level));
            let mut pick: Option<&(Side, usize, Vec<usize>)> = None;
            for c in node.challenges.iter().chain(&node.retractions) {
                if sep(&c.2) && (pick.is_none() || (c.2.is_empty() && !pick.unwrap().2.is_empty())) {
                    pick = Some(c);
                }
            }
            let Some((side, mi, resp)) = pick else { break };
            let is_retraction = node.retractions.iter().any(|r| std::ptr::eq(r, pick.unwrap()));
            let (moves, s) = match (side, is_retraction) {
                (Side::Left, _) => (if is_retraction { None } else { Some(&self.game1[t.left]) }, t.left),
                (Side::Right, _) => (if is_retraction { None } else { Some(&self.game2[t.right]) }, t.right),
            };
            let label = match moves {
                Some(ms) => self.describe(*side, s, &ms[*mi]),
                None => "retraction".to_string(),
            };
            let next = resp.iter().copied().max_by_key(|x| self.removed[*x]);
            let to = match moves {
                Some(ms) => ms[*mi].dst,
                None => s,
            };
            steps.push(EvidenceStep {
                side: *side,
                from: (t.left, t.right),
                label,
                to,
                response: next.map(|x| match side {
                    Side::Left => self.nodes[x].triple.right,
                    Side::Right => self.nodes[x].triple.left,
                }),
            });
            match next {
                None => break,
                Some(x) => cur = x,
            }
        }
        Evidence { steps, note: None }
    }
}
