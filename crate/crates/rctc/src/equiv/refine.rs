//! Partition refinement over the disjoint union of two LTSs.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::lts::StateId;

use super::moves::{LabelledMoves, MoveLabel};
use super::{Evidence, EvidenceStep, Side};

pub struct Refinement {
    /// `rounds[r][s]`: block of state `s` after `r` refinement rounds.
    rounds: Vec<Vec<usize>>,
    offset: usize,
}

impl Refinement {
    pub fn new(left: &LabelledMoves, right: &LabelledMoves) -> Refinement {
        let offset = left.len();
        let n = offset + right.len();
        let mut label_ids: HashMap<&MoveLabel, usize> = HashMap::new();
        let mut edges: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
        for (moves, off) in [(left, 0), (right, offset)] {
            for ms in moves {
                let v = ms
                    .iter()
                    .map(|(l, d)| {
                        let next = label_ids.len();
                        (*label_ids.entry(l).or_insert(next), d + off)
                    })
                    .collect();
                edges.push(v);
            }
        }
        let mut rounds = vec![vec![0usize; n]];
        let mut count = 1;
        loop {
            let cur = rounds.last().unwrap();
            let mut ids: HashMap<(usize, Vec<(usize, usize)>), usize> = HashMap::new();
            let next: Vec<usize> = (0..n)
                .map(|s| {
                    let sig: BTreeSet<(usize, usize)> = edges[s].iter().map(|(l, d)| (*l, cur[*d])).collect();
                    let key = (cur[s], sig.into_iter().collect());
                    let fresh = ids.len();
                    *ids.entry(key).or_insert(fresh)
                })
                .collect();
            let new_count = ids.len();
            rounds.push(next);
            if new_count == count {
                break;
            }
            count = new_count;
        }
        Refinement { rounds, offset }
    }

    fn block(&self, round: usize, side: Side, s: StateId) -> usize {
        let off = if side == Side::Left { 0 } else { self.offset };
        self.rounds[round][s + off]
    }

    pub fn related(&self, l: StateId, r: StateId) -> bool {
        let last = self.rounds.len() - 1;
        self.block(last, Side::Left, l) == self.block(last, Side::Right, r)
    }

    /// First round separating the pair, if any.
    pub fn level(&self, l: StateId, r: StateId) -> Option<usize> {
        (0..self.rounds.len()).find(|k| self.block(*k, Side::Left, l) != self.block(*k, Side::Right, r))
    }

    /// Related pairs reachable from `(l, r)` through matched moves.
    pub fn witness(&self, left: &LabelledMoves, right: &LabelledMoves, l: StateId, r: StateId) -> Vec<(StateId, StateId)> {
        let mut seen = BTreeSet::from([(l, r)]);
        let mut queue = VecDeque::from([(l, r)]);
        while let Some((a, b)) = queue.pop_front() {
            for (lab, x) in &left[a] {
                for (lab2, y) in &right[b] {
                    if lab == lab2 && self.related(*x, *y) && seen.insert((*x, *y)) {
                        queue.push_back((*x, *y));
                    }
                }
            }
        }
        seen.into_iter().collect()
    }

    /// Alternating distinguishing sequence for an unrelated pair.
    pub fn evidence(&self, left: &LabelledMoves, right: &LabelledMoves, l: StateId, r: StateId) -> Evidence {
        let mut steps = Vec::new();
        let (mut a, mut b) = (l, r);
        while let Some(level) = self.level(a, b) {
            if level == 0 {
                break;
            }
            let mut best: Option<(Side, MoveLabel, StateId, Vec<StateId>)> = None;
            for side in [Side::Left, Side::Right] {
                let (mine, theirs) = match side {
                    Side::Left => (&left[a], &right[b]),
                    Side::Right => (&right[b], &left[a]),
                };
                for (lab, x) in mine {
                    let responses: Vec<StateId> = theirs.iter().filter(|(l2, _)| l2 == lab).map(|(_, y)| *y).collect();
                    let separated = responses.iter().all(|y| {
                        let (ll, rr) = if side == Side::Left { (*x, *y) } else { (*y, *x) };
                        self.level(ll, rr).is_some_and(|k| k < level)
                    });
                    if !separated {
                        continue;
                    }
                    let better = match &best {
                        None => true,
                        Some((_, _, _, resp)) => responses.is_empty() && !resp.is_empty(),
                    };
                    if better {
                        best = Some((side, lab.clone(), *x, responses));
                    }
                }
            }
            let Some((side, label, x, responses)) = best else { break };
            let pick = responses.iter().copied().max_by_key(|y| {
                let (ll, rr) = if side == Side::Left { (x, *y) } else { (*y, x) };
                self.level(ll, rr).unwrap_or(0)
            });
            steps.push(EvidenceStep { side, from: (a, b), label: label.render(), to: x, response: pick });
            match pick {
                None => break,
                Some(y) => {
                    (a, b) = if side == Side::Left { (x, y) } else { (y, x) };
                }
            }
        }
        Evidence { steps, note: None }
    }
}
