//! Right-hand sides of the expansion law for `(P1[f1] | .. | Pn[fn]) \ L`.
//!
//! The forward form is a sum of prefixed continuations, one per joint step
//! of the components (each component fires one of its own steps or idles,
//! complementary pairs across components synchronise to τ). The reverse
//! form is a sum of sequential compositions `P'.X[m]`, one per joint
//! reverse step.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::Error;
use crate::lts::{explore, Bounds};
use crate::sos::{forward_steps, reverse_steps, Direction};
use crate::term::{blocks_action, is_standard, max_key, Action, Definitions, Key, Label, Process, RelabelMap};

/// `(P1[f1] | .. | Pn[fn]) \ L`, leaving out identity relabellings and an empty restriction.
pub fn expansion_lhs(components: &[(Process, RelabelMap)], restriction: &BTreeSet<Label>) -> Process {
    let parts = components.iter().map(|(p, f)| if f.0.is_empty() { p.clone() } else { Process::relabel(p.clone(), f.clone()) }).collect();
    wrap(Process::par_all(parts), restriction)
}

fn wrap(p: Process, restriction: &BTreeSet<Label>) -> Process {
    if restriction.is_empty() {
        p
    } else {
        Process::restrict(p, restriction.clone())
    }
}

/// The future of a term with its past forgotten.
pub fn erase(p: &Process) -> Process {
    use Process::*;
    match p {
        Nil | Const(_) | Prefix(..) => p.clone(),
        Past(_, _, b) => erase(b),
        Sum(x, y) => match (is_standard(x), is_standard(y)) {
            (false, true) => erase(x),
            (true, false) => erase(y),
            _ => Process::sum(erase(x), erase(y)),
        },
        Par(x, y) => Process::par(erase(x), erase(y)),
        Seq(x, y) => Process::seq(erase(x), erase(y)),
        Restrict(b, l) => Process::restrict(erase(b), l.clone()),
        Relabel(b, f) => Process::relabel(erase(b), f.clone()),
    }
}

/// The past of a term with its future forgotten.
pub fn prune(p: &Process) -> Process {
    use Process::*;
    match p {
        Nil | Const(_) | Prefix(..) => Nil,
        Past(a, k, b) => Past(a.clone(), *k, Arc::new(prune(b))),
        Sum(x, y) => match (is_standard(x), is_standard(y)) {
            (false, true) => prune(x),
            (true, false) => prune(y),
            (true, true) => Nil,
            (false, false) => Process::sum(prune(x), prune(y)),
        },
        Par(x, y) => Process::par(prune(x), prune(y)),
        Seq(x, y) if is_standard(y) => prune(x),
        Seq(x, y) => Process::seq(prune(x), prune(y)),
        Restrict(b, l) => Process::restrict(prune(b), l.clone()),
        Relabel(b, f) => Process::relabel(prune(b), f.clone()),
    }
}

struct Move {
    /// Relabelled actions with their keys (keys unused forward).
    events: Vec<(Action, Key)>,
    target: Process,
}

fn moves(p: &Process, f: &RelabelMap, defs: &Definitions, width: usize, dir: Direction) -> Result<Vec<Move>, Error> {
    let ts = match dir {
        Direction::Forward => forward_steps(p, defs, width)?,
        Direction::Reverse => reverse_steps(p, defs, width)?,
    };
    Ok(ts
        .into_iter()
        .map(|t| Move { events: t.label.actions.iter().zip(&t.label.keys).map(|(a, k)| (f.action(a), *k)).collect(), target: t.target })
        .collect())
}

/// Pairings of complementary events from different components, each
/// leaving no complementary cross pair unpaired.
fn matchings(events: &[(usize, Action)], same_key: Option<&[Key]>) -> Vec<Vec<(usize, usize)>> {
    let n = events.len();
    let can =
        |i: usize, j: usize| events[i].0 != events[j].0 && events[i].1.complements(&events[j].1) && same_key.is_none_or(|k| k[i] == k[j]);
    let mut out = Vec::new();
    fn go(
        i: usize,
        n: usize,
        can: &dyn Fn(usize, usize) -> bool,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if i == n {
            let maximal = (0..n).all(|a| used[a] || (a + 1..n).all(|b| used[b] || !can(a, b)));
            if maximal {
                out.push(cur.clone());
            }
            return;
        }
        if used[i] {
            go(i + 1, n, can, used, cur, out);
            return;
        }
        go(i + 1, n, can, used, cur, out);
        for j in i + 1..n {
            if !used[j] && can(i, j) {
                used[i] = true;
                used[j] = true;
                cur.push((i, j));
                go(i + 1, n, can, used, cur, out);
                cur.pop();
                used[i] = false;
                used[j] = false;
            }
        }
    }
    go(0, n, &can, &mut vec![false; n], &mut Vec::new(), &mut out);
    out
}

fn label_of(events: &[(usize, Action)], m: &[(usize, usize)]) -> Vec<Action> {
    let paired: BTreeSet<usize> = m.iter().flat_map(|(a, b)| [*a, *b]).collect();
    let mut acts: Vec<Action> = m.iter().map(|_| Action::Tau).collect();
    acts.extend(events.iter().enumerate().filter(|(i, _)| !paired.contains(i)).map(|(_, e)| e.1.clone()));
    acts.sort();
    acts
}

/// Every way of picking, per component, one of its moves or nothing.
fn choices(per: &[Vec<Move>]) -> Vec<Vec<Option<usize>>> {
    let mut out: Vec<Vec<Option<usize>>> = vec![vec![]];
    for ms in per {
        let mut next = Vec::new();
        for c in &out {
            let mut idle = c.clone();
            idle.push(None);
            next.push(idle);
            for i in 0..ms.len() {
                let mut v = c.clone();
                v.push(Some(i));
                next.push(v);
            }
        }
        out = next;
    }
    out.retain(|c| c.iter().any(Option::is_some));
    out
}

/// Expansion of `(P1[f1] | .. | Pn[fn]) \ L` in direction `dir`. Forward
/// components must be standard; reverse components are the executed parts
/// of one composed term, so keys shared between them are synchronisations.
pub fn expansion_rhs(
    components: &[(Process, RelabelMap)],
    restriction: &BTreeSet<Label>,
    defs: &Definitions,
    bounds: &Bounds,
    dir: Direction,
) -> Result<Process, Error> {
    let width = usize::MAX;
    for (p, _) in components {
        if explore(p, defs, bounds)?.truncated() {
            return Err(Error::NotFinite);
        }
    }
    let per: Vec<Vec<Move>> = components.iter().map(|(p, f)| moves(p, f, defs, width, dir)).collect::<Result<_, _>>()?;
    let lhs = expansion_lhs(components, restriction);
    let mut fresh = max_key(&lhs);
    let mut summands = BTreeSet::new();
    for choice in choices(&per) {
        let mut events: Vec<(usize, Action)> = Vec::new();
        let mut keys: Vec<Key> = Vec::new();
        let mut undone: Vec<BTreeSet<Key>> = vec![BTreeSet::new(); components.len()];
        for (i, c) in choice.iter().enumerate() {
            if let Some(m) = c {
                for (a, k) in &per[i][*m].events {
                    events.push((i, a.clone()));
                    keys.push(*k);
                    undone[i].insert(*k);
                }
            }
        }
        if dir == Direction::Reverse {
            // a key shared with another component is a synchronisation and goes back jointly
            let consistent = undone.iter().enumerate().all(|(i, ks)| {
                ks.iter().all(|k| components.iter().enumerate().all(|(j, (q, _))| j == i || !q.has_key(*k) || undone[j].contains(k)))
            });
            if !consistent {
                continue;
            }
        }
        let continuation: Vec<(Process, RelabelMap)> = components
            .iter()
            .zip(&choice)
            .enumerate()
            .map(|(i, ((p, f), c))| match c {
                Some(m) => (per[i][*m].target.clone(), f.clone()),
                None => (p.clone(), f.clone()),
            })
            .collect();
        let same_key = if dir == Direction::Reverse { Some(keys.as_slice()) } else { None };
        let ms = matchings(&events, same_key);
        for m in ms {
            let label = label_of(&events, &m);
            if label.iter().any(|a| blocks_action(restriction, a)) {
                continue;
            }
            let summand = match dir {
                Direction::Forward => {
                    let cont: Vec<(Process, RelabelMap)> = continuation.iter().map(|(p, f)| (erase(p), f.clone())).collect();
                    Process::Prefix(label, Arc::new(expansion_lhs(&cont, restriction)))
                }
                Direction::Reverse => {
                    let cont: Vec<(Process, RelabelMap)> = continuation.iter().map(|(p, f)| (prune(p), f.clone())).collect();
                    fresh += 1;
                    let past = Process::Past(label, fresh, Arc::new(Process::Nil));
                    wrap(Process::seq(expansion_lhs(&cont, &BTreeSet::new()), past), restriction)
                }
            };
            summands.insert(summand);
        }
    }
    Ok(Process::sum_all(summands.into_iter().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equiv::{check_with, CheckOptions, Flavor, Strength};
    use crate::lts::Scope;
    use crate::syntax::parse;

    fn forward_equivalent(lhs: &Process, rhs: &Process) -> bool {
        let opts = CheckOptions::new(Flavor::Step, Strength::Strong, Bounds::new(8, 8, 20000).unwrap()).scope(Scope::Forward);
        check_with(lhs, rhs, &Definitions::new(), &opts).unwrap().related
    }

    #[test]
    fn single_component_prefix() {
        let comps = vec![(parse("a.nil").unwrap(), RelabelMap::identity())];
        let rhs = expansion_rhs(&comps, &BTreeSet::new(), &Definitions::new(), &Bounds::default(), Direction::Forward).unwrap();
        assert_eq!(rhs, parse("a.nil").unwrap());
    }

    #[test]
    fn complementary_pair_gets_tau_summand() {
        let comps = vec![(parse("a.nil").unwrap(), RelabelMap::identity()), (parse("~a.nil").unwrap(), RelabelMap::identity())];
        let rhs = expansion_rhs(&comps, &BTreeSet::new(), &Definitions::new(), &Bounds::default(), Direction::Forward).unwrap();
        let text = rhs.to_string();
        assert!(text.contains("tau.(nil | nil)"), "{text}");
        assert!(text.contains("a.(nil | ~a.nil)"), "{text}");
        assert!(forward_equivalent(&expansion_lhs(&comps, &BTreeSet::new()), &rhs));
    }

    #[test]
    fn restricted_relabelled_components() {
        let f = RelabelMap::from_pairs(&[("b", Label::plain("c"))]);
        let comps = vec![(parse("a.b.nil + c.nil").unwrap(), f), (parse("~c.nil | d.nil").unwrap(), RelabelMap::identity())];
        let l: BTreeSet<Label> = [Label::plain("c")].into();
        let rhs = expansion_rhs(&comps, &l, &Definitions::new(), &Bounds::default(), Direction::Forward).unwrap();
        assert!(forward_equivalent(&expansion_lhs(&comps, &l), &rhs));
    }

    #[test]
    fn reverse_form_single_history() {
        let comps = vec![(parse("a[1].b[2].nil").unwrap(), RelabelMap::identity())];
        let rhs = expansion_rhs(&comps, &BTreeSet::new(), &Definitions::new(), &Bounds::default(), Direction::Reverse).unwrap();
        let opts = CheckOptions::new(Flavor::Step, Strength::Strong, Bounds::default()).scope(Scope::Reverse);
        assert!(check_with(&comps[0].0, &rhs, &Definitions::new(), &opts).unwrap().related, "{rhs}");
    }

    #[test]
    fn erase_and_prune_split_past_from_future() {
        let p = parse("a[1].(b.nil | c[2].nil) + d.nil").unwrap();
        assert_eq!(erase(&p), parse("b.nil | nil").unwrap());
        assert_eq!(prune(&p), parse("a[1].(nil | c[2].nil)").unwrap());
    }
}
