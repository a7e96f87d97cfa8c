//! Strong and weak forward-reverse step, pomset, hp and hhp bisimilarity on
//! explored keyed transition systems.

mod hp;
mod moves;
mod refine;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::Error;
use crate::lts::{explore_scoped, Bounds, KeyedLts, Scope, StateId};
use crate::sos::{Direction, SosConfig};
use crate::term::{Definitions, Process};

pub use crate::pomset::isomorphic as pomset_isomorphic;
pub use moves::{render_pomset, LabelledMoves, MoveLabel, TrackedMove};

use hp::{answers, is_iso, isomorphisms, HpGame, HpInput};
use moves::{pomset_moves, step_moves, tracked_moves};
use refine::Refinement;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    Strong,
    Weak,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Step,
    Pomset,
    Hp,
    Hhp,
}

impl Flavor {
    pub const ALL: [Flavor; 4] = [Flavor::Step, Flavor::Pomset, Flavor::Hp, Flavor::Hhp];
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strength::Strong => "strong",
            Strength::Weak => "weak",
        })
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Step => "step",
            Flavor::Pomset => "pomset",
            Flavor::Hp => "hp",
            Flavor::Hhp => "hhp",
        })
    }
}

impl FromStr for Strength {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "strong" => Ok(Strength::Strong),
            "weak" => Ok(Strength::Weak),
            _ => Err(format!("unknown strength `{s}`")),
        }
    }
}

impl FromStr for Flavor {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "step" => Ok(Flavor::Step),
            "pomset" => Ok(Flavor::Pomset),
            "hp" => Ok(Flavor::Hp),
            "hhp" => Ok(Flavor::Hhp),
            _ => Err(format!("unknown flavor `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// `(s1, f, s2)`: `map` pairs history indices of `left` with those of `right`, sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Triple {
    pub left: StateId,
    pub right: StateId,
    pub map: Vec<(usize, usize)>,
}

/// One round of the distinguishing game: `side` moves from the pair `from`
/// with `label` to `to`; the other side answers with `response`, or cannot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EvidenceStep {
    pub side: Side,
    pub from: (StateId, StateId),
    pub label: String,
    pub to: StateId,
    pub response: Option<StateId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct Evidence {
    pub steps: Vec<EvidenceStep>,
    pub note: Option<String>,
}

impl Evidence {
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(n) = &self.note {
            out.push_str(n);
            out.push('\n');
        }
        for s in &self.steps {
            let (me, other) = match s.side {
                Side::Left => ("left", "right"),
                Side::Right => ("right", "left"),
            };
            out.push_str(&format!("({}, {}): {me} does {} to {}; ", s.from.0, s.from.1, s.label, s.to));
            match s.response {
                Some(r) => out.push_str(&format!("{other} answers to {r}\n")),
                None => out.push_str(&format!("{other} cannot answer\n")),
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Witness {
    Pairs(Vec<(StateId, StateId)>),
    Triples(Vec<Triple>),
}

impl Witness {
    pub fn len(&self) -> usize {
        match self {
            Witness::Pairs(v) => v.len(),
            Witness::Triples(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub flavor: Flavor,
    pub strength: Strength,
    pub scope: Scope,
    pub bounds: Bounds,
    pub sos: SosConfig,
}

impl CheckOptions {
    pub fn new(flavor: Flavor, strength: Strength, bounds: Bounds) -> CheckOptions {
        CheckOptions { flavor, strength, scope: Scope::ForwardReverse, bounds, sos: SosConfig::default() }
    }

    pub fn scope(mut self, scope: Scope) -> CheckOptions {
        self.scope = scope;
        self
    }

    fn allowed(&self) -> Vec<Direction> {
        let mut v = Vec::new();
        if self.scope.forward() {
            v.push(Direction::Forward);
        }
        if self.scope.reverse() {
            v.push(Direction::Reverse);
        }
        v
    }

    /// Longest pomset run considered: the forward depth, or the whole
    /// history when undoing.
    fn max_events(&self, l: &KeyedLts, r: &KeyedLts) -> usize {
        let hist = l.states.iter().chain(&r.states).map(|s| s.history.len()).max().unwrap_or(0);
        self.bounds.max_depth.max(hist).min(crate::pomset::MAX_EVENTS)
    }

    /// hhp in forward-only scope needs reverse edges for its retractions.
    fn explore_scope(&self) -> Scope {
        if self.flavor == Flavor::Hhp && !self.scope.reverse() {
            Scope::ForwardReverse
        } else {
            self.scope
        }
    }
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub related: bool,
    /// Exploration was truncated, so the verdict holds up to bounds only.
    pub bounded: bool,
    pub witness: Option<Witness>,
    pub evidence: Option<Evidence>,
    pub left: Arc<KeyedLts>,
    pub right: Arc<KeyedLts>,
    pub options: CheckOptions,
}

/// Forward-reverse check with default step-engine settings.
pub fn check(p: &Process, q: &Process, defs: &Definitions, bounds: &Bounds, flavor: Flavor, strength: Strength) -> Result<Verdict, Error> {
    check_with(p, q, defs, &CheckOptions::new(flavor, strength, *bounds))
}

pub fn check_with(p: &Process, q: &Process, defs: &Definitions, opts: &CheckOptions) -> Result<Verdict, Error> {
    let scope = opts.explore_scope();
    let sos = SosConfig { max_width: opts.bounds.max_width, ..opts.sos.clone() };
    let left = Arc::new(explore_scoped(p, defs, &opts.bounds, scope, &sos)?);
    let right = Arc::new(explore_scoped(q, defs, &opts.bounds, scope, &sos)?);
    Ok(decide(left, right, opts))
}

/// Decides an already explored pair of LTSs.
pub fn decide(left: Arc<KeyedLts>, right: Arc<KeyedLts>, opts: &CheckOptions) -> Verdict {
    let allowed = opts.allowed();
    let bounded = left.truncated() || right.truncated();
    let (related, witness, evidence) = match opts.flavor {
        Flavor::Step | Flavor::Pomset => {
            let (lm, rm) = labelled(&left, &right, opts, &allowed);
            let refinement = Refinement::new(&lm, &rm);
            let (a, b) = (left.initial, right.initial);
            if refinement.related(a, b) {
                (true, Some(Witness::Pairs(refinement.witness(&lm, &rm, a, b))), None)
            } else {
                (false, None, Some(refinement.evidence(&lm, &rm, a, b)))
            }
        }
        Flavor::Hp | Flavor::Hhp => {
            let g1 = tracked_moves(&left, opts.strength, &allowed);
            let g2 = tracked_moves(&right, opts.strength, &allowed);
            let back = retractions(&left, &right, opts);
            let game = HpGame::solve(HpInput {
                left: &left,
                right: &right,
                strength: opts.strength,
                game_left: &g1,
                game_right: &g2,
                retract: back.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice())),
            });
            if game.related() {
                (true, Some(Witness::Triples(game.witness())), None)
            } else {
                (false, None, Some(game.evidence()))
            }
        }
    };
    Verdict { related, bounded, witness, evidence, left, right, options: opts.clone() }
}

fn labelled(left: &KeyedLts, right: &KeyedLts, opts: &CheckOptions, allowed: &[Direction]) -> (LabelledMoves, LabelledMoves) {
    match opts.flavor {
        Flavor::Pomset => {
            let n = opts.max_events(left, right);
            (pomset_moves(left, opts.strength, allowed, n), pomset_moves(right, opts.strength, allowed, n))
        }
        _ => (step_moves(left, opts.strength, allowed), step_moves(right, opts.strength, allowed)),
    }
}

type Moves = Vec<Vec<TrackedMove>>;

fn retractions(left: &KeyedLts, right: &KeyedLts, opts: &CheckOptions) -> Option<(Moves, Moves)> {
    if opts.flavor != Flavor::Hhp || opts.scope.reverse() {
        return None;
    }
    let r = [Direction::Reverse];
    Some((tracked_moves(left, opts.strength, &r), tracked_moves(right, opts.strength, &r)))
}

/// Re-checks every clause of the bisimulation definition on the verdict's
/// witness, recomputing transitions from the stored LTSs.
pub fn validate_witness(v: &Verdict) -> bool {
    let Some(w) = &v.witness else { return false };
    let opts = &v.options;
    let (l, r) = (&*v.left, &*v.right);
    let allowed = opts.allowed();
    match w {
        Witness::Pairs(pairs) => {
            if !matches!(opts.flavor, Flavor::Step | Flavor::Pomset) {
                return false;
            }
            let set: HashSet<(StateId, StateId)> = pairs.iter().copied().collect();
            if !set.contains(&(l.initial, r.initial)) {
                return false;
            }
            let (lm, rm) = labelled(l, r, opts, &allowed);
            pairs.iter().all(|(a, b)| {
                let forth = lm[*a].iter().all(|(lab, x)| rm[*b].iter().any(|(lab2, y)| lab == lab2 && set.contains(&(*x, *y))));
                let back = rm[*b].iter().all(|(lab, y)| lm[*a].iter().any(|(lab2, x)| lab == lab2 && set.contains(&(*x, *y))));
                forth && back
            })
        }
        Witness::Triples(triples) => {
            if !matches!(opts.flavor, Flavor::Hp | Flavor::Hhp) {
                return false;
            }
            let set: HashSet<&Triple> = triples.iter().collect();
            let roots = isomorphisms(l, l.initial, r, r.initial, opts.strength);
            if !roots.into_iter().any(|f| set.contains(&Triple { left: l.initial, right: r.initial, map: f })) {
                return false;
            }
            let g1 = tracked_moves(l, opts.strength, &allowed);
            let g2 = tracked_moves(r, opts.strength, &allowed);
            let back = retractions(l, r, opts);
            let answered = |t: &Triple, m1: &TrackedMove, m2: &TrackedMove| {
                answers(l, r, &t.map, m1, m2, opts.strength)
                    .into_iter()
                    .any(|f| set.contains(&Triple { left: m1.dst, right: m2.dst, map: f }))
            };
            let clauses = |t: &Triple, a: &[Vec<TrackedMove>], b: &[Vec<TrackedMove>]| {
                a[t.left].iter().all(|m1| b[t.right].iter().any(|m2| answered(t, m1, m2)))
                    && b[t.right].iter().all(|m2| a[t.left].iter().any(|m1| answered(t, m1, m2)))
            };
            triples.iter().all(|t| {
                is_iso(l, t.left, r, t.right, &t.map, opts.strength)
                    && clauses(t, &g1, &g2)
                    && back.as_ref().is_none_or(|(b1, b2)| clauses(t, b1, b2))
            })
        }
    }
}

/// Replays distinguishing evidence on the stored LTSs: every challenge and
/// response is a real move with the stated label, consecutive rounds chain,
/// and for step and pomset checks the final challenge has no equally
/// labelled answer at all.
pub fn replay_evidence(v: &Verdict) -> bool {
    let Some(ev) = &v.evidence else { return false };
    if v.related {
        return false;
    }
    if ev.steps.is_empty() {
        return ev.note.is_some();
    }
    let opts = &v.options;
    let (l, r) = (&*v.left, &*v.right);
    let allowed = opts.allowed();
    if ev.steps[0].from != (l.initial, r.initial) {
        return false;
    }
    let labels: Option<(LabelledMoves, LabelledMoves)> = match opts.flavor {
        Flavor::Step | Flavor::Pomset => Some(labelled(l, r, opts, &allowed)),
        _ => None,
    };
    let (g1, g2) = (tracked_moves(l, opts.strength, &allowed), tracked_moves(r, opts.strength, &allowed));
    for (i, s) in ev.steps.iter().enumerate() {
        let (mine, theirs) = match s.side {
            Side::Left => (s.from.0, s.from.1),
            Side::Right => (s.from.1, s.from.0),
        };
        match &labels {
            Some((lm, rm)) => {
                let (a, b) = match s.side {
                    Side::Left => (lm, rm),
                    Side::Right => (rm, lm),
                };
                let Some((lab, _)) = a[mine].iter().find(|(lab, x)| lab.render() == s.label && *x == s.to) else {
                    return false;
                };
                match s.response {
                    Some(y) => {
                        if !b[theirs].iter().any(|(l2, d)| l2 == lab && *d == y) {
                            return false;
                        }
                    }
                    None => {
                        if b[theirs].iter().any(|(l2, _)| l2 == lab) {
                            return false;
                        }
                    }
                }
            }
            None => {
                let a = if s.side == Side::Left { &g1 } else { &g2 };
                if s.label != "retraction" && !a[mine].iter().any(|m| m.dst == s.to) {
                    return false;
                }
            }
        }
        if let (Some(y), Some(next)) = (s.response, ev.steps.get(i + 1)) {
            let pair = if s.side == Side::Left { (s.to, y) } else { (y, s.to) };
            if next.from != pair {
                return false;
            }
        }
    }
    ev.steps.last().is_some_and(|s| s.response.is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn run(p: &str, q: &str, flavor: Flavor, strength: Strength) -> Verdict {
        let defs = Definitions::new();
        check(&parse(p).unwrap(), &parse(q).unwrap(), &defs, &Bounds::default(), flavor, strength).unwrap()
    }

    #[test]
    fn milner_distinguished_by_concurrent_step() {
        for flavor in Flavor::ALL {
            let v = run("a.nil | b.nil", "a.b.nil + b.a.nil", flavor, Strength::Strong);
            assert!(!v.related, "{flavor}");
            let ev = v.evidence.as_ref().unwrap();
            assert!(ev.steps[0].label.contains("{a, b}"), "{flavor}: {}", ev.render());
            assert_eq!(ev.steps[0].side, Side::Left);
            assert!(replay_evidence(&v), "{flavor}");
        }
    }

    #[test]
    fn sum_with_nil_is_neutral() {
        for flavor in Flavor::ALL {
            let v = run("a.(b.nil | c.nil) + nil", "a.(b.nil | c.nil)", flavor, Strength::Strong);
            assert!(v.related, "{flavor}");
            assert!(validate_witness(&v), "{flavor}");
        }
    }

    #[test]
    fn reflexive_for_all_flavors() {
        for flavor in Flavor::ALL {
            for strength in [Strength::Strong, Strength::Weak] {
                let v = run("(a || b).nil | ~a.c.nil + tau.d.nil", "(a || b).nil | ~a.c.nil + tau.d.nil", flavor, strength);
                assert!(v.related && validate_witness(&v), "{flavor} {strength}");
            }
        }
    }

    #[test]
    fn tau_prefix_weakly_absorbed_forward() {
        let defs = Definitions::new();
        let p = parse("a.b.nil").unwrap();
        let q = parse("tau.a.b.nil").unwrap();
        for flavor in Flavor::ALL {
            let opts = CheckOptions::new(flavor, Strength::Weak, Bounds::default()).scope(Scope::Forward);
            let v = check_with(&p, &q, &defs, &opts).unwrap();
            assert!(v.related && validate_witness(&v), "{flavor}");
            let strong = CheckOptions::new(flavor, Strength::Strong, Bounds::default()).scope(Scope::Forward);
            assert!(!check_with(&p, &q, &defs, &strong).unwrap().related, "{flavor}");
        }
    }

    #[test]
    fn corrupted_witness_rejected() {
        for flavor in Flavor::ALL {
            let mut v = run("a.nil | b.nil", "b.nil | a.nil", flavor, Strength::Strong);
            assert!(v.related && validate_witness(&v));
            v.witness = Some(match v.witness.take().unwrap() {
                Witness::Pairs(mut p) => {
                    p.pop();
                    Witness::Pairs(p)
                }
                Witness::Triples(mut t) => {
                    t.pop();
                    Witness::Triples(t)
                }
            });
            assert!(!validate_witness(&v), "{flavor}");
        }
    }

    #[test]
    fn joint_step_is_not_an_interleaving() {
        let s = run("(a.nil | b.nil)", "(a || b).nil + a.b.nil + b.a.nil", Flavor::Step, Strength::Strong);
        assert!(!s.related);
    }

    #[test]
    fn pomset_isomorphism_reexport() {
        use crate::pomset::Pomset;
        use crate::term::{Action, Label};
        let a = Pomset { labels: vec![Action::Vis(Label::plain("a"))], preds: vec![0] };
        assert!(pomset_isomorphic(&a, &a.clone()));
    }
}
