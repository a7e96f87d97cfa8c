//! Timed acceptance run: one line per criterion, nonzero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use common::{ladder_holds, ladder_pairs, loop_violations, oracle_agreement, reachable, sort_violations, verdicts};
use rctc::equiv::{check, Flavor, Strength};
use rctc::laws::{check_congruence, equivalent_pair, run_law_suite, select, Gen, GenConfig, LawCase, LawResult};
use rctc::lts::Bounds;
use rctc::syntax::parse;
use rctc::term::Definitions;

const SEED: u64 = 2024;

type Outcome = Result<String, String>;

fn gen_config(depth: usize) -> GenConfig {
    GenConfig { seed: SEED, max_depth: depth, max_par: 2, ..GenConfig::default() }
}

/// Runs the sampled cases and fails on any non-truncated counterexample,
/// whatever the registry expects of the law.
fn sampled(cases: Vec<LawCase>, depth: usize, samples: usize) -> Vec<LawResult> {
    run_law_suite(&gen_config(depth), &cases, &Bounds::default(), samples).results
}

fn verdict(results: &[LawResult]) -> Outcome {
    let checked: usize = results.iter().map(|r| r.samples).sum();
    let bounded: usize = results.iter().map(|r| r.bounded).sum();
    let failing: Vec<String> =
        results.iter().filter(|r| r.fails > 0).map(|r| format!("{} ({}/{})", r.law_id, r.fails, r.samples)).collect();
    let short = results.iter().filter(|r| r.samples == 0).count();
    if failing.is_empty() && short == 0 {
        Ok(format!("{checked} instances, {bounded} truncated"))
    } else if failing.is_empty() {
        Err(format!("{short} cases produced no instance"))
    } else {
        let first = results.iter().find_map(|r| r.failing.first()).map(|f| format!("; e.g. {}  vs  {}", f.lhs, f.rhs)).unwrap_or_default();
        Err(format!("failing: {}{first}", failing.join(", ")))
    }
}

fn milner() -> Outcome {
    let (p, q) = (parse("a.nil | b.nil").unwrap(), parse("a.b.nil + b.a.nil").unwrap());
    for f in Flavor::ALL {
        let v = check(&p, &q, &Definitions::new(), &Bounds::default(), f, Strength::Strong).map_err(|e| e.to_string())?;
        let ev = v.evidence.as_ref().map(|e| e.render()).unwrap_or_default();
        if v.related || !ev.contains("{a, b}") {
            return Err(format!("{f:?}: related={} evidence={ev:?}", v.related));
        }
    }
    Ok("not related under step, pomset, hp and hhp; evidence fires {a, b}".into())
}

fn monoid() -> Outcome {
    verdict(&sampled(select(&["monoid"]), 4, 200))
}

fn statics() -> Outcome {
    let (shallow, deep): (Vec<LawCase>, Vec<LawCase>) =
        select(&["static"]).into_iter().partition(|c| matches!(c.flavor, Flavor::Hp | Flavor::Hhp));
    let mut results = sampled(deep, 4, 200);
    results.extend(sampled(shallow, 3, 200));
    verdict(&results)
}

fn expansion() -> Outcome {
    let cases = select(&["expansion.forward/strong-step", "expansion.reverse/strong-step"]);
    verdict(&sampled(cases, 3, 50))
}

fn tau() -> Outcome {
    verdict(&sampled(select(&["tau"]), 3, 200))
}

fn congruence() -> Outcome {
    let bounds = Bounds::default();
    let mut results = Vec::new();
    let mut rejected = 0;
    for strength in [Strength::Strong, Strength::Weak] {
        for flavor in Flavor::ALL {
            let cfg = GenConfig { include_tau: strength == Strength::Weak, ..gen_config(3) };
            let mut g = Gen::new(cfg.clone());
            let mut pairs = Vec::new();
            while pairs.len() < 100 {
                pairs.extend(equivalent_pair(&mut g, flavor, strength, &bounds));
            }
            let report = check_congruence(&pairs, &g.defs, &cfg, &bounds, flavor, strength);
            rejected += report.rejected;
            results.extend(report.results);
        }
    }
    if rejected > 0 {
        return Err(format!("{rejected} sampled pairs were not equivalent"));
    }
    verdict(&results)
}

fn over_terms(n: usize, keyed: bool, check: fn(&rctc::term::Process, &Definitions) -> Vec<String>) -> Outcome {
    let mut g = Gen::new(GenConfig { include_tau: true, include_keys: keyed, ..gen_config(4) });
    let (mut bad, mut states) = (Vec::new(), 0);
    for _ in 0..n {
        let p = if keyed { g.process() } else { g.standard() };
        states += reachable(&p, &g.defs, 8, 60).len();
        bad.extend(check(&p, &g.defs));
    }
    match bad.first() {
        None => Ok(format!("{n} terms, {states} states")),
        Some(b) => Err(format!("{} violations, e.g. {b}", bad.len())),
    }
}

fn oracles() -> Outcome {
    let mut parts = Vec::new();
    for (f, n) in [(Flavor::Step, 300), (Flavor::Hp, 200), (Flavor::Hhp, 200)] {
        let (compared, related) = oracle_agreement(SEED, n, f)?;
        parts.push(format!("{f:?} {compared} pairs ({related} related)"));
    }
    Ok(parts.join(", "))
}

fn ladder() -> Outcome {
    let (mut checked, mut skipped) = (0, 0);
    for inst in ladder_pairs(SEED, 300) {
        match verdicts(&inst) {
            Some(v) if !ladder_holds(&v) => return Err(format!("{v:?} on {}  vs  {}", inst.lhs, inst.rhs)),
            Some(_) => checked += 1,
            None => skipped += 1,
        }
    }
    Ok(format!("{checked} pairs, {skipped} truncated"))
}

fn round_trip() -> Outcome {
    let mut g = Gen::new(GenConfig { include_tau: true, include_keys: true, ..gen_config(4) });
    for i in 0..1000 {
        let p = if i % 2 == 0 { g.process() } else { g.standard() };
        let text = p.to_string();
        match parse(&text) {
            Ok(q) if q == p => {}
            other => return Err(format!("{text} -> {other:?}")),
        }
    }
    Ok("1000 terms".into())
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 11] = [
        ("Milner counterexample", 1, milner),
        ("monoid laws", 120, monoid),
        ("static laws", 300, statics),
        ("new expansion law", 120, expansion),
        ("tau laws", 180, tau),
        ("congruence", 180, congruence),
        ("loop property", 60, || over_terms(500, false, loop_violations)),
        ("sort propositions", 60, || over_terms(500, true, sort_violations)),
        ("oracle agreement", 120, oracles),
        ("inclusion ladder", 180, ladder),
        ("parser round trip", 10, round_trip),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let late = elapsed > Duration::from_secs(*limit);
        let (status, detail) = match (&outcome, late) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over the time limit; {d}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {:<22} {status}  {:>6.1}s / {limit}s  {detail}", i + 1, name, elapsed.as_secs_f64());
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
