//! Small labelled partial orders with an isomorphism-invariant canonical form.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use crate::term::Action;

/// Events `0..n`; `preds[i]` is the bitset of events strictly below `i`
/// (transitively closed).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pomset {
    pub labels: Vec<Action>,
    pub preds: Vec<u64>,
}

pub const MAX_EVENTS: usize = 64;

impl Pomset {
    pub fn empty() -> Pomset {
        Pomset { labels: vec![], preds: vec![] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn below(&self, a: usize, b: usize) -> bool {
        self.preds[b] >> a & 1 == 1
    }

    /// The sub-pomset on the events selected by `mask` of a closed order.
    pub fn restrict(labels: &[Action], preds: &[u64], mask: u64) -> Pomset {
        let idx: Vec<usize> = (0..labels.len()).filter(|i| mask >> i & 1 == 1).collect();
        let pos: BTreeMap<usize, usize> = idx.iter().enumerate().map(|(n, i)| (*i, n)).collect();
        let mut out = Pomset { labels: Vec::new(), preds: Vec::new() };
        for i in &idx {
            out.labels.push(labels[*i].clone());
            let mut bits = 0u64;
            for (j, n) in &pos {
                if preds[*i] >> j & 1 == 1 {
                    bits |= 1 << n;
                }
            }
            out.preds.push(bits);
        }
        out
    }

    fn permuted(&self, perm: &[usize]) -> Pomset {
        // perm[new] = old
        let mut inv = vec![0; perm.len()];
        for (n, o) in perm.iter().enumerate() {
            inv[*o] = n;
        }
        let labels = perm.iter().map(|o| self.labels[*o].clone()).collect();
        let preds = perm
            .iter()
            .map(|o| {
                let mut bits = 0u64;
                for (j, n) in inv.iter().enumerate() {
                    if self.preds[*o] >> j & 1 == 1 {
                        bits |= 1 << n;
                    }
                }
                bits
            })
            .collect();
        Pomset { labels, preds }
    }

    fn succs(&self, i: usize) -> usize {
        (0..self.len()).filter(|j| self.below(i, *j)).count()
    }

    /// Representative shared by exactly the pomsets isomorphic to `self`.
    pub fn canonical(&self) -> Pomset {
        thread_local! {
            static SEEN: RefCell<HashMap<Pomset, Pomset>> = RefCell::new(HashMap::new());
        }
        if let Some(c) = SEEN.with(|m| m.borrow().get(self).cloned()) {
            return c;
        }
        let c = self.compute_canonical();
        SEEN.with(|m| {
            let mut m = m.borrow_mut();
            if m.len() > 1 << 16 {
                m.clear();
            }
            m.insert(self.clone(), c.clone());
        });
        c
    }

    fn compute_canonical(&self) -> Pomset {
        let n = self.len();
        // colour refinement on (label, colours below, colours above)
        let mut colour: Vec<usize> = {
            let keys: Vec<_> = (0..n).map(|i| (self.labels[i].clone(), self.preds[i].count_ones(), self.succs(i))).collect();
            rank(&keys)
        };
        loop {
            let keys: Vec<_> = (0..n)
                .map(|i| {
                    let mut down: Vec<usize> = (0..n).filter(|j| self.below(*j, i)).map(|j| colour[j]).collect();
                    let mut up: Vec<usize> = (0..n).filter(|j| self.below(i, *j)).map(|j| colour[j]).collect();
                    down.sort();
                    up.sort();
                    (colour[i], down, up)
                })
                .collect();
            let next = rank(&keys);
            let classes = |c: &Vec<usize>| c.iter().collect::<std::collections::BTreeSet<_>>().len();
            if classes(&next) == classes(&colour) {
                break;
            }
            colour = next;
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            groups.entry(colour[i]).or_default().push(i);
        }
        let groups: Vec<Vec<usize>> = groups.into_values().collect();
        // twins (same label, same events below and above) are interchangeable,
        // so only their relative positions matter
        let succ_mask = |i: usize| (0..n).filter(|j| self.below(i, *j)).fold(0u64, |m, j| m | 1 << j);
        let twin = rank(&(0..n).map(|i| (self.labels[i].clone(), self.preds[i], succ_mask(i))).collect::<Vec<_>>());
        let mut best: Option<Pomset> = None;
        let mut perm = Vec::with_capacity(n);
        search(self, &groups, &twin, 0, &mut perm, &mut best);
        best.unwrap_or_else(Pomset::empty)
    }
}

fn rank<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).unwrap()).collect()
}

fn search(p: &Pomset, groups: &[Vec<usize>], twin: &[usize], g: usize, perm: &mut Vec<usize>, best: &mut Option<Pomset>) {
    if g == groups.len() {
        let cand = p.permuted(perm);
        if best.as_ref().is_none_or(|b| cand < *b) {
            *best = Some(cand);
        }
        return;
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in &groups[g] {
        members.entry(twin[*i]).or_default().push(*i);
    }
    let mut classes: Vec<usize> = groups[g].iter().map(|i| twin[*i]).collect();
    classes.sort();
    loop {
        let len = perm.len();
        let mut next: BTreeMap<usize, usize> = BTreeMap::new();
        for c in &classes {
            let k = next.entry(*c).or_default();
            perm.push(members[c][*k]);
            *k += 1;
        }
        search(p, groups, twin, g + 1, perm, best);
        perm.truncate(len);
        if !next_permutation(&mut classes) {
            break;
        }
    }
}

/// Advances to the next lexicographic arrangement; false after the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|i| v[i - 1] < v[*i]) else { return false };
    let j = (i..v.len()).rev().find(|j| v[*j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Label- and order-preserving bijection search.
pub fn isomorphic(x: &Pomset, y: &Pomset) -> bool {
    if x.len() != y.len() {
        return false;
    }
    let mut lx = x.labels.clone();
    let mut ly = y.labels.clone();
    lx.sort();
    ly.sort();
    if lx != ly {
        return false;
    }
    fn go(x: &Pomset, y: &Pomset, i: usize, map: &mut Vec<usize>, used: &mut Vec<bool>) -> bool {
        if i == x.len() {
            return true;
        }
        for j in 0..y.len() {
            if used[j] || x.labels[i] != y.labels[j] {
                continue;
            }
            let consistent = (0..i).all(|k| x.below(k, i) == y.below(map[k], j) && x.below(i, k) == y.below(j, map[k]));
            if consistent {
                used[j] = true;
                map.push(j);
                if go(x, y, i + 1, map, used) {
                    return true;
                }
                map.pop();
                used[j] = false;
            }
        }
        false
    }
    go(x, y, 0, &mut Vec::new(), &mut vec![false; y.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Label;

    fn act(s: &str) -> Action {
        Action::Vis(Label::plain(s))
    }

    fn chain(labels: &[&str]) -> Pomset {
        let preds = (0..labels.len()).map(|i| (1u64 << i) - 1).collect();
        Pomset { labels: labels.iter().map(|l| act(l)).collect(), preds }
    }

    fn anti(labels: &[&str]) -> Pomset {
        Pomset { labels: labels.iter().map(|l| act(l)).collect(), preds: vec![0; labels.len()] }
    }

    #[test]
    fn iso_examples() {
        assert!(isomorphic(&anti(&["a"]), &anti(&["a"])));
        assert!(!isomorphic(&chain(&["a", "b"]), &anti(&["a", "b"])));
        let swapped = Pomset { labels: vec![act("b"), act("a")], preds: vec![1 << 1, 0] };
        assert!(isomorphic(&chain(&["a", "b"]), &swapped));
        assert_eq!(chain(&["a", "b"]).canonical(), swapped.canonical());
        assert_ne!(chain(&["a", "b"]).canonical(), anti(&["a", "b"]).canonical());
    }

    #[test]
    fn canonical_handles_symmetric_shapes() {
        // N-shape vs two disjoint chains over the same labels
        let n = Pomset { labels: vec![act("a"), act("a"), act("b"), act("b")], preds: vec![0, 0, 0b01, 0b11] };
        let two = Pomset { labels: vec![act("a"), act("a"), act("b"), act("b")], preds: vec![0, 0, 0b01, 0b10] };
        assert!(!isomorphic(&n, &two));
        assert_ne!(n.canonical(), two.canonical());
        let n2 = n.permuted(&[1, 0, 3, 2]);
        assert!(isomorphic(&n, &n2));
        assert_eq!(n.canonical(), n2.canonical());
    }

    #[test]
    fn restrict_keeps_order() {
        let c = chain(&["a", "b", "c"]);
        let r = Pomset::restrict(&c.labels, &c.preds, 0b101);
        assert_eq!(r, chain(&["a", "c"]));
    }

    fn closed(labels: Vec<Action>, edges: &[(usize, usize)]) -> Pomset {
        let n = labels.len();
        let mut preds = vec![0u64; n];
        for &(a, b) in edges {
            if a < b && b < n {
                preds[b] |= 1 << a | preds[a];
            }
        }
        // edges only point upwards, so one pass in index order closes the relation
        for b in 0..n {
            for a in 0..b {
                if preds[b] >> a & 1 == 1 {
                    preds[b] |= preds[a];
                }
            }
        }
        Pomset { labels, preds }
    }

    proptest::proptest! {
        #[test]
        fn canonical_forms_decide_isomorphism(
            ls in proptest::collection::vec(0..2usize, 1..7),
            e1 in proptest::collection::vec((0..7usize, 0..7usize), 0..8),
            e2 in proptest::collection::vec((0..7usize, 0..7usize), 0..8),
            shuffle in proptest::collection::vec(0..7usize, 7),
        ) {
            let labels: Vec<Action> = ls.iter().map(|l| act(["a", "b"][*l])).collect();
            let x = closed(labels.clone(), &e1);
            let y = closed(labels, &e2);
            proptest::prop_assert_eq!(isomorphic(&x, &y), x.canonical() == y.canonical());
            let mut perm: Vec<usize> = (0..x.len()).collect();
            for (i, s) in shuffle.iter().enumerate().take(x.len()) {
                perm.swap(i, s % x.len());
            }
            proptest::prop_assert_eq!(x.permuted(&perm).canonical(), x.canonical());
        }
    }
}
