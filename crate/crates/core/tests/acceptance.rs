//! The acceptance suite: one pass/fail line per criterion.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;

use viewnet::checker::{check_network, write_bundle, ConsistencyReport, Strategy, VerdictKind};
use viewnet::interaction::{matches, sd_to_nfa, Term};
use viewnet::kernel::check_satisfaction_condition;
use viewnet::netlang::{parse_dol, resolve_file};
use viewnet::structural::{enumerate_snapshots, Bounds};

use support::*;

type Outcome = Result<String, String>;

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn within(started: Instant, limit: Duration) -> Result<String, String> {
    let t = started.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(format!("{t:.2?}"))
}

fn check(rel: &str, net: &str, strategy: Strategy) -> ConsistencyReport {
    check_network(&graph(rel), net, strategy, &Bounds::default(), None).unwrap_or_else(|e| panic!("{rel} {net}: {e}"))
}

const LISTINGS: &[&str] = &[
    "model ATM_Bank_Interaction_cd =\n  ATM_Bank_Interaction hide along sd2cd\nend",
    "refinement r1 =\n  { User_Interface reveal ATM_Bank_Interaction_cd }\n  refined to ATM_Bank_Interaction_cd\nend",
    "model ATM_stm =\n  User_Interface with translation cd2stm\nthen\n  ATM_stm_definition\nend",
    "model Bank_stm =\n  User_Interface with translation cd2stm\nthen\n  Bank_stm_definition\nend",
    "model System =\n  ATM_stm with translation stm2cmp with cid |-> atm\nand\n  Bank_stm with translation stm2cmp with cid |-> bank\nthen\n  cmp\nend",
    "refinement r2 =\n  ATM_Bank_Interaction refined to { System hide along cmp2sd }\nend",
    "network N = %consistent\n  User_Interface, ATM_stm, Bank_stm, System,\n  ATM_Bank_Interaction, r1, r2\nend",
];

fn listings_parse() -> Outcome {
    let started = Instant::now();
    let text = std::fs::read_to_string(corpus("atm/atm.dol")).map_err(|e| e.to_string())?;
    for l in LISTINGS {
        ensure(text.contains(l), || format!("listing missing from the corpus: {}", l.lines().next().unwrap_or("")))?;
        parse_dol(l).map_err(|e| format!("{e}"))?;
    }
    let g = resolve_file(&corpus("atm/atm.dol")).map_err(|e| e.to_string())?;
    ensure(g.network("N").is_ok() && g.links.len() == 2, || "network N or its links missing".into())?;
    within(started, Duration::from_secs(1))
}

fn atm_consistent() -> Outcome {
    let started = Instant::now();
    let r = check("atm/atm.dol", "N", Strategy::Incremental);
    ensure(r.verdict == VerdictKind::Consistent, || format!("verdict {}", r.verdict))?;
    let w = r.verdict_full.as_ref().and_then(|v| v.witness()).ok_or("no witness")?;
    let messages: Vec<&str> = w.filmstrip.iter().map(|(e, _)| e.message.as_str()).collect();
    let wanted = ["insertCard", "enterPIN", "verify", "verified", "ejectCard"];
    let mut it = messages.iter();
    ensure(wanted.iter().all(|m| it.any(|x| x == m)), || format!("filmstrip {messages:?}"))?;
    within(started, Duration::from_secs(30))
}

fn inconsistent_and_exhausted(rel: &str) -> Outcome {
    let started = Instant::now();
    let r = check(rel, "N", Strategy::Incremental);
    ensure(r.verdict == VerdictKind::Inconsistent, || format!("verdict {}", r.verdict))?;
    ensure(r.stats.explored_completely, || "search was cut short".into())?;
    within(started, Duration::from_secs(60))
}

fn satisfaction_condition() -> Outcome {
    let started = Instant::now();
    for seed in 0..200 {
        let (sigma, r, phi) = satisfaction_triple(seed);
        let ok = check_satisfaction_condition(&sigma, &r, &phi).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(ok, || format!("seed {seed} violates the condition for {}", phi.label()))?;
    }
    within(started, Duration::from_secs(10))
}

fn strategies_agree() -> Outcome {
    let (mut yes, mut no) = (0, 0);
    for (rel, net, expected) in NETWORKS {
        let a = check(rel, net, Strategy::Incremental).verdict;
        let b = check(rel, net, Strategy::Monolithic).verdict;
        ensure(a == b, || format!("{rel} {net}: incremental {a}, monolithic {b}"))?;
        ensure((a == VerdictKind::Consistent) == *expected, || format!("{rel} {net}: {a}"))?;
        if *expected {
            yes += 1
        } else {
            no += 1
        }
    }
    ensure(yes + no >= 5 && yes > 0 && no > 0, || "too few networks".into())?;
    Ok(format!("{} networks, {yes} consistent, {no} inconsistent", yes + no))
}

fn more_than_pairwise() -> Outcome {
    let started = Instant::now();
    for net in ["P1", "P2", "P3"] {
        let v = check("pairwise/pairwise.dol", net, Strategy::Incremental).verdict;
        ensure(v == VerdictKind::Consistent, || format!("{net}: {v}"))?;
    }
    let v = check("pairwise/pairwise.dol", "All", Strategy::Incremental).verdict;
    ensure(v == VerdictKind::Inconsistent, || format!("All: {v}"))?;
    within(started, Duration::from_secs(5))
}

fn compilation_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let words = all_words(6);
    for k in 0..50 {
        let t = random_term(&mut rng, 3);
        let a = sd_to_nfa(&interaction(t.clone()));
        for w in &words {
            let evs: Vec<_> = w.iter().map(|m| event(m)).collect();
            ensure(matches(&evs, &a) == brute_accepts(&t, w), || format!("term {k} disagrees on {w:?}"))?;
        }
    }
    let a = sd_to_nfa(&interaction(Term::Loop(0, 3, Box::new(msg("a")))));
    let accepted = words
        .iter()
        .filter(|w| matches(&w.iter().map(|m| event(m)).collect::<Vec<_>>(), &a))
        .count();
    ensure(accepted == 4, || format!("Loop(0,3,m) accepts {accepted} words"))?;
    Ok(format!("50 terms, {} words each", words.len()))
}

fn witness_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut n = 0;
    for (rel, net, _) in NETWORKS {
        for strategy in [Strategy::Incremental, Strategy::Monolithic] {
            let r = check(rel, net, strategy);
            let Some(w) = r.verdict_full.as_ref().and_then(|v| v.witness()) else { continue };
            let target = dir.path().join(format!("w{n}"));
            write_bundle(&target, w, "context").map_err(|e| e.to_string())?;
            let back = check_network(&graph(rel), net, Strategy::Decentralized, &Bounds::default(), Some(&target))
                .map_err(|e| format!("{rel} {net}: {e}"))?;
            ensure(back.verdict == VerdictKind::Consistent, || {
                format!("{rel} {net}: {} {}", back.verdict, back.detail.unwrap_or_default())
            })?;
            n += 1;
        }
    }
    Ok(format!("{n} witnesses"))
}

fn enumeration_oracle() -> Outcome {
    let two = Bounds {
        max_objects_per_class: 2,
        ..Bounds::default()
    };
    let count = enumerate_snapshots(&one_bool_class(), &two).map_err(|e| e.to_string())?.len();
    ensure(count == 6, || format!("one Bool class at two objects gives {count}"))?;
    let mut rng = StdRng::seed_from_u64(10);
    for k in 0..30 {
        let th = random_small_cd(&mut rng);
        for max in 1..=2 {
            ensure(enumeration_is_canonical(&th, max), || format!("diagram {k} at {max} objects"))?;
        }
    }
    Ok("6 for one Bool class; 30 random diagrams agree".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("listings parse and resolve", listings_parse),
        ("ATM network is consistent", atm_consistent),
        ("rejecting bank is inconsistent", || inconsistent_and_exhausted("atm_mutated/atm.dol")),
        ("fourth PIN entry is inconsistent", || inconsistent_and_exhausted("atm_fourth/atm.dol")),
        ("satisfaction condition on 200 triples", satisfaction_condition),
        ("strategies agree", strategies_agree),
        ("more than pairwise consistency", more_than_pairwise),
        ("interaction compilation oracle", compilation_oracle),
        ("witness round trip", witness_round_trip),
        ("snapshot enumeration oracle", enumeration_oracle),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({detail})", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
