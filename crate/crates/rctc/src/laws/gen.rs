//! Deterministic pseudo-random terms, label sets and relabellings.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sos::forward_single;
use crate::syntax::parse_defs;
use crate::term::{is_fully_executed, Action, Definitions, Label, Process, RelabelMap};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    /// Number of channel names, drawn from `a`, `b`, `c`, ...
    pub alphabet: usize,
    /// Nesting depth of operators.
    pub max_depth: usize,
    /// Largest number of parallel components in one term.
    pub max_par: usize,
    pub include_tau: bool,
    /// Produce states reached by executing some prefixes of a standard term.
    pub include_keys: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { seed: 0, alphabet: 3, max_depth: 3, max_par: 2, include_tau: false, include_keys: false }
    }
}

/// Upper limit on the prefixes of one generated term.
pub const MAX_SAMPLE_ACTIONS: usize = 6;

/// Non-recursive constants available to generated terms.
pub const CONSTANTS: &str = "\
A := a.nil
B := a.b.nil + c.nil
C := (a || b).nil
D := ~a.A
";

pub fn constants() -> Definitions {
    parse_defs(CONSTANTS).expect("constant table parses")
}

pub fn names(n: usize) -> Vec<String> {
    (0..n.clamp(1, 26)).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
}

pub struct Gen {
    pub cfg: GenConfig,
    pub rng: ChaCha8Rng,
    pub defs: Definitions,
    names: Vec<String>,
}

impl Gen {
    pub fn new(cfg: GenConfig) -> Gen {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Gen::with_rng(cfg, rng)
    }

    pub fn with_rng(cfg: GenConfig, rng: ChaCha8Rng) -> Gen {
        let names = names(cfg.alphabet);
        Gen { cfg, rng, defs: constants(), names }
    }

    pub fn name(&mut self) -> String {
        self.names.choose(&mut self.rng).unwrap().clone()
    }

    pub fn label(&mut self) -> Label {
        let n = self.name();
        if self.rng.gen_bool(0.3) {
            Label::co(&n)
        } else {
            Label::plain(&n)
        }
    }

    /// A visible action, or τ when the configuration allows it.
    pub fn action(&mut self) -> Action {
        if self.cfg.include_tau && self.rng.gen_bool(0.2) {
            Action::Tau
        } else {
            Action::Vis(self.label())
        }
    }

    pub fn visible(&mut self) -> Action {
        Action::Vis(self.label())
    }

    pub fn actions(&mut self, min: usize, max: usize) -> Vec<Action> {
        let n = self.rng.gen_range(min..=max);
        let mut v: Vec<Action> = (0..n).map(|_| self.action()).collect();
        v.sort();
        v
    }

    pub fn label_set(&mut self) -> BTreeSet<Label> {
        let names = self.names.clone();
        names.iter().filter(|_| self.rng.gen_bool(0.4)).map(|n| Label::plain(n)).collect()
    }

    pub fn relabel(&mut self) -> RelabelMap {
        let names = self.names.clone();
        let mut f = RelabelMap::identity();
        for n in names {
            if self.rng.gen_bool(0.5) {
                let target = self.name();
                let img = if self.rng.gen_bool(0.2) { Label::co(&target) } else { Label::plain(&target) };
                f.0.insert(n, img);
            }
        }
        f
    }

    /// A relabelling injective on every label: a permutation of the names
    /// with an optional polarity flip per name.
    pub fn injective_relabel(&mut self) -> RelabelMap {
        let mut targets = self.names.clone();
        targets.shuffle(&mut self.rng);
        let mut f = RelabelMap::identity();
        for (n, t) in self.names.clone().into_iter().zip(targets) {
            let img = if self.rng.gen_bool(0.2) { Label::co(&t) } else { Label::plain(&t) };
            f.0.insert(n, img);
        }
        f
    }

    /// A standard term within the configured depth, width and size.
    pub fn standard(&mut self) -> Process {
        loop {
            let p = self.term(self.cfg.max_depth, self.cfg.max_par.max(1));
            if p.action_count() <= MAX_SAMPLE_ACTIONS {
                return p;
            }
        }
    }

    pub fn standard_at(&mut self, depth: usize) -> Process {
        let saved = self.cfg.max_depth;
        self.cfg.max_depth = depth;
        let p = self.standard();
        self.cfg.max_depth = saved;
        p
    }

    /// A generated term; with `include_keys`, some of its prefixes have
    /// already been executed.
    pub fn process(&mut self) -> Process {
        let p = self.standard();
        if self.cfg.include_keys {
            let n = self.rng.gen_range(0..=3);
            self.run(&p, Some(n))
        } else {
            p
        }
    }

    /// Executes up to `limit` single forward transitions (all of them when
    /// `None`), picking among them at random.
    pub fn run(&mut self, p: &Process, limit: Option<usize>) -> Process {
        let mut cur = p.clone();
        for _ in 0..limit.unwrap_or(64) {
            let ts = forward_single(&cur, &self.defs).unwrap_or_default();
            let Some(t) = ts.choose(&mut self.rng) else { break };
            cur = t.target.clone();
        }
        cur
    }

    /// A fully executed term: a standard term run until it stops, retried
    /// until nothing unexecuted remains on its path.
    pub fn executed(&mut self) -> Process {
        loop {
            let p = self.standard();
            let x = self.run(&p, None);
            if is_fully_executed(&x) {
                return x;
            }
        }
    }

    fn term(&mut self, depth: usize, par: usize) -> Process {
        if depth == 0 {
            return if self.rng.gen_bool(0.15) { self.constant() } else { Process::Nil };
        }
        let d = depth - 1;
        let mut choices: Vec<(u32, u8)> = vec![(1, 0), (4, 1), (1, 2), (2, 3), (1, 5), (1, 6), (1, 7), (1, 8)];
        if par >= 2 {
            choices.push((2, 4));
        }
        let total: u32 = choices.iter().map(|c| c.0).sum();
        let mut pick = self.rng.gen_range(0..total);
        let mut kind = 0;
        for (w, k) in choices {
            if pick < w {
                kind = k;
                break;
            }
            pick -= w;
        }
        match kind {
            0 => Process::Nil,
            1 => Process::Prefix(self.actions(1, 1), Arc::new(self.term(d, par))),
            2 => Process::Prefix(self.actions(2, 2), Arc::new(self.term(d, par))),
            3 => Process::sum(self.term(d, par), self.term(d, par)),
            4 => {
                let left = self.rng.gen_range(1..par);
                Process::par(self.term(d, left), self.term(d, par - left))
            }
            5 => Process::seq(self.term(d, par), self.term(d, par)),
            6 => Process::restrict(self.term(d, par), self.label_set()),
            7 => Process::relabel(self.term(d, par), self.relabel()),
            _ => self.constant(),
        }
    }

    fn constant(&mut self) -> Process {
        let names: Vec<String> = self.defs.map.keys().cloned().collect();
        Process::Const(names.choose(&mut self.rng).unwrap().clone())
    }
}

/// Deterministic stream of generated terms.
pub fn gen_terms(cfg: GenConfig) -> impl Iterator<Item = Process> {
    let mut g = Gen::new(cfg);
    std::iter::from_fn(move || Some(g.process()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn has_tau(p: &Process) -> bool {
        match p {
            Process::Prefix(a, _) | Process::Past(a, _, _) if a.contains(&Action::Tau) => true,
            _ => p.children().any(|c| has_tau(c)),
        }
    }

    fn depth(p: &Process) -> usize {
        1 + p.children().map(|c| depth(c)).max().unwrap_or(0)
    }

    #[test]
    fn streams_are_reproducible() {
        let cfg = GenConfig { seed: 11, include_tau: true, ..GenConfig::default() };
        let a: Vec<Process> = gen_terms(cfg.clone()).take(50).collect();
        let b: Vec<Process> = gen_terms(cfg).take(50).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn depth_one_stays_shallow() {
        let cfg = GenConfig { seed: 3, max_depth: 1, ..GenConfig::default() };
        for p in gen_terms(cfg).take(200) {
            assert!(depth(&p) <= 2, "{p}");
        }
    }

    #[test]
    fn tau_only_when_enabled() {
        let cfg = GenConfig { seed: 5, include_tau: false, ..GenConfig::default() };
        assert!(gen_terms(cfg).take(300).all(|p| !has_tau(&p)));
        let cfg = GenConfig { seed: 5, include_tau: true, ..GenConfig::default() };
        assert!(gen_terms(cfg).take(300).any(|p| has_tau(&p)));
    }

    #[test]
    fn every_constructor_appears() {
        let cfg = GenConfig { seed: 1, include_keys: true, include_tau: true, ..GenConfig::default() };
        let mut seen = BTreeSet::new();
        fn walk(p: &Process, seen: &mut BTreeSet<&'static str>) {
            seen.insert(match p {
                Process::Nil => "nil",
                Process::Const(_) => "const",
                Process::Prefix(a, _) if a.len() > 1 => "multi",
                Process::Prefix(..) => "prefix",
                Process::Past(..) => "past",
                Process::Sum(..) => "sum",
                Process::Par(..) => "par",
                Process::Seq(..) => "seq",
                Process::Restrict(..) => "restrict",
                Process::Relabel(..) => "relabel",
            });
            for c in p.children() {
                walk(c, seen);
            }
        }
        for p in gen_terms(cfg).take(500) {
            walk(&p, &mut seen);
        }
        assert_eq!(seen.len(), 10, "{seen:?}");
    }

    #[test]
    fn executed_terms_are_fully_executed() {
        let mut g = Gen::new(GenConfig { seed: 9, ..GenConfig::default() });
        for _ in 0..50 {
            assert!(is_fully_executed(&g.executed()));
        }
    }
}
