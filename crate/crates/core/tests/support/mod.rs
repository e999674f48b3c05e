//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use viewnet::expr::{BinOp, Expr, Value};
use viewnet::interaction::{ArgPat, Interaction, MsgPattern, Term};
use viewnet::kernel::{End, InstitutionId, Realization, Sentence, Signature, SignatureMorphism, Theory};
use viewnet::netlang::{resolve_file, Graph};
use viewnet::structural::{conforms, enumerate_snapshots, parse_cd, Bounds, EventLabel, Multiplicity, Snapshot, SnapshotTs, TsState};

pub fn corpus(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(rel)
}

pub fn graph(rel: &str) -> Graph {
    resolve_file(&corpus(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Corpus files and the networks they declare, with the expected verdict.
pub const NETWORKS: &[(&str, &str, bool)] = &[
    ("atm/atm.dol", "N", true),
    ("atm_mutated/atm.dol", "N", false),
    ("atm_fourth/atm.dol", "N", false),
    ("pairwise/pairwise.dol", "P1", true),
    ("pairwise/pairwise.dol", "P2", true),
    ("pairwise/pairwise.dol", "P3", true),
    ("pairwise/pairwise.dol", "All", false),
];

// ---------------------------------------------------------------------------
// interactions

pub const MESSAGES: [&str; 3] = ["a", "b", "c"];

pub fn msg(m: &str) -> Term {
    Term::Msg(MsgPattern {
        sender: "env".into(),
        receiver: "x".into(),
        message: m.into(),
        args: Vec::<ArgPat>::new(),
    })
}

pub fn event(m: &str) -> EventLabel {
    EventLabel::new("env", "x", m, vec![])
}

pub fn interaction(body: Term) -> Interaction {
    Interaction {
        name: "I".into(),
        lifelines: vec![("x".into(), "X".into())],
        vars: Vec::new(),
        body,
    }
}

/// A random term over [`MESSAGES`] of nesting depth at most `depth`.
pub fn random_term(rng: &mut StdRng, depth: u32) -> Term {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return msg(MESSAGES[rng.gen_range(0..3)]);
    }
    let kids = |rng: &mut StdRng| (0..rng.gen_range(0..=3)).map(|_| random_term(rng, depth - 1)).collect();
    match rng.gen_range(0..4) {
        0 => Term::Seq(kids(rng)),
        1 => {
            let mut ts: Vec<Term> = kids(rng);
            if ts.is_empty() {
                ts.push(random_term(rng, depth - 1));
            }
            Term::Alt(ts)
        }
        2 => Term::Opt(Box::new(random_term(rng, depth - 1))),
        _ => {
            let lo = rng.gen_range(0..=2);
            let hi = rng.gen_range(lo..=3);
            Term::Loop(lo, hi, Box::new(random_term(rng, depth - 1)))
        }
    }
}

/// End positions `j` such that `t` derives `w[i..j]`; argument-free terms.
fn ends(t: &Term, w: &[&str], i: usize) -> BTreeSet<usize> {
    match t {
        Term::Msg(m) => {
            if i < w.len() && w[i] == m.message {
                BTreeSet::from([i + 1])
            } else {
                BTreeSet::new()
            }
        }
        Term::Seq(ts) => {
            let mut cur = BTreeSet::from([i]);
            for x in ts {
                cur = cur.iter().flat_map(|&k| ends(x, w, k)).collect();
            }
            cur
        }
        Term::Alt(ts) => ts.iter().flat_map(|x| ends(x, w, i)).collect(),
        Term::Opt(x) => {
            let mut out = ends(x, w, i);
            out.insert(i);
            out
        }
        Term::Loop(lo, hi, x) => {
            let mut out = BTreeSet::new();
            let mut cur = BTreeSet::from([i]);
            for k in 0..=*hi {
                if k >= *lo {
                    out.extend(&cur);
                }
                if k == *hi {
                    break;
                }
                cur = cur.iter().flat_map(|&p| ends(x, w, p)).collect();
            }
            out
        }
    }
}

/// Recursive-descent membership of `w` in the language of `t`.
pub fn brute_accepts(t: &Term, w: &[&str]) -> bool {
    ends(t, w, 0).contains(&w.len())
}

/// Every word over [`MESSAGES`] of length at most `n`.
pub fn all_words(n: usize) -> Vec<Vec<&'static str>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..n {
        layer = layer
            .iter()
            .flat_map(|w: &Vec<&str>| {
                MESSAGES.iter().map(move |m| {
                    let mut v = w.clone();
                    v.push(*m);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

// ---------------------------------------------------------------------------
// satisfaction condition

fn mult(rng: &mut StdRng) -> (u32, Option<u32>) {
    let lo = rng.gen_range(0..=1);
    let hi = if rng.gen_bool(0.3) { None } else { Some(rng.gen_range(lo.max(1)..=2)) };
    (lo, hi)
}

fn mult_text((lo, hi): (u32, Option<u32>)) -> String {
    match hi {
        Some(h) => format!("{lo}..{h}"),
        None => format!("{lo}..*"),
    }
}

/// A random two-class signature, optionally with an association.
pub fn random_cd_signature(rng: &mut StdRng) -> Signature {
    let mut text = String::from("classdiagram S\nclass A {\n  attr x: Bool\n  attr n: Int 0..2\n}\n");
    if rng.gen_bool(0.7) {
        text.push_str("class B {\n  attr y: Bool\n}\n");
        text.push_str(&format!(
            "assoc R : A [{}] a -- b [{}] B\n",
            mult_text(mult(rng)),
            mult_text(mult(rng))
        ));
    }
    parse_cd(&text).unwrap().signature()
}

fn attr(a: &str) -> Box<Expr> {
    Box::new(Expr::Attr(a.into()))
}

fn int(v: i64) -> Box<Expr> {
    Box::new(Expr::Lit(Value::Int(v)))
}

/// A random invariant over class `A`, or a multiplicity of `R`.
pub fn random_cd_sentence(rng: &mut StdRng, sig: &Signature) -> Sentence {
    if sig.assocs.contains_key("R") && rng.gen_bool(0.3) {
        let (lo, hi) = mult(rng);
        return Sentence::Multiplicity {
            assoc: "R".into(),
            end: if rng.gen_bool(0.5) { End::A } else { End::B },
            mult: Multiplicity { lo, hi },
        };
    }
    let ops = [BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge];
    let cmp = Expr::Bin(ops[rng.gen_range(0..ops.len())], attr("n"), int(rng.gen_range(0..=2)));
    let flag = Expr::Bin(BinOp::Eq, attr("x"), Box::new(Expr::Lit(Value::Bool(rng.gen_bool(0.5)))));
    let expr = match rng.gen_range(0..4) {
        0 => cmp,
        1 => flag,
        2 => Expr::Bin(BinOp::Or, Box::new(Expr::Not(Box::new(flag))), Box::new(cmp)),
        _ => Expr::Bin(BinOp::Le, Box::new(Expr::Bin(BinOp::Add, attr("n"), int(1))), int(rng.gen_range(1..=3))),
    };
    Sentence::Invariant { class: "A".into(), expr }
}

/// A random injective renaming of `sig` into a larger signature.
pub fn random_morphism(rng: &mut StdRng, sig: &Signature) -> SignatureMorphism {
    let pick = |rng: &mut StdRng, old: &str, new: &str| if rng.gen_bool(0.5) { new.to_string() } else { old.to_string() };
    let mut classes = BTreeMap::new();
    classes.insert("A".to_string(), pick(rng, "A", "P"));
    let mut attrs = BTreeMap::new();
    attrs.insert(("A".to_string(), "x".to_string()), pick(rng, "x", "flag"));
    attrs.insert(("A".to_string(), "n".to_string()), pick(rng, "n", "count"));
    let mut assocs = BTreeMap::new();
    if sig.classes.contains_key("B") {
        classes.insert("B".to_string(), pick(rng, "B", "Q"));
        attrs.insert(("B".to_string(), "y".to_string()), pick(rng, "y", "mark"));
        assocs.insert("R".to_string(), pick(rng, "R", "Link"));
    }
    let renaming = SignatureMorphism::renaming(sig, &classes, &attrs, &BTreeMap::new(), &assocs).unwrap();
    // the target gains a class and an attribute the source cannot see
    let extra = parse_cd(&format!(
        "classdiagram T\nclass Extra {{\n  attr z: Bool\n}}\nclass {} {{\n  attr extra: Bool\n}}\n",
        classes["A"]
    ))
    .unwrap()
    .signature();
    let target = renaming.target.union(&extra).unwrap();
    SignatureMorphism::new(
        sig.clone(),
        target,
        renaming.classes.clone(),
        renaming.attrs.clone(),
        renaming.messages.clone(),
        renaming.assocs.clone(),
    )
    .unwrap()
}

/// A random transition system over typed snapshots of `sig`.
pub fn random_realization(rng: &mut StdRng, sig: &Signature) -> Realization {
    let bounds = Bounds {
        max_objects_per_class: 1,
        ..Bounds::default()
    };
    let pool = enumerate_snapshots(&Theory::new(InstitutionId::Cd, sig.clone()), &bounds).unwrap();
    let n = rng.gen_range(1..=4);
    let states: Vec<TsState> = (0..n).map(|_| TsState::of(pool[rng.gen_range(0..pool.len())].clone())).collect();
    let transitions = (0..rng.gen_range(0..=4))
        .map(|_| (rng.gen_range(0..n), None, rng.gen_range(0..n)))
        .collect();
    let ts = SnapshotTs::new(states, vec![0], transitions, true).unwrap();
    Realization::ts(InstitutionId::Cd, sig.clone(), ts).unwrap()
}

pub fn satisfaction_triple(seed: u64) -> (SignatureMorphism, Realization, Sentence) {
    let mut rng = StdRng::seed_from_u64(seed);
    let sig = random_cd_signature(&mut rng);
    let sigma = random_morphism(&mut rng, &sig);
    let r = random_realization(&mut rng, &sigma.target);
    let phi = random_cd_sentence(&mut rng, &sig);
    (sigma, r, phi)
}

// ---------------------------------------------------------------------------
// snapshot enumeration

/// A random class diagram with at most two Boolean attributes in total.
pub fn random_small_cd(rng: &mut StdRng) -> Theory {
    let mut attrs_left = rng.gen_range(0..=2);
    let classes = rng.gen_range(1..=2);
    let mut text = String::from("classdiagram E\n");
    for c in ["A", "B"].iter().take(classes) {
        text.push_str(&format!("class {c} {{\n"));
        let here = if *c == "B" { attrs_left } else { rng.gen_range(0..=attrs_left) };
        for k in 0..here {
            text.push_str(&format!("  attr f{k}: Bool\n"));
        }
        attrs_left -= here;
        text.push_str("}\n");
    }
    if classes == 2 && rng.gen_bool(0.5) {
        text.push_str(&format!(
            "assoc R : A [{}] a -- b [{}] B\n",
            mult_text(mult(rng)),
            mult_text(mult(rng))
        ));
    }
    parse_cd(&text).unwrap().theory().unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

/// The least relabelling of `s` under per-class permutations of ids.
fn canonical(s: &Snapshot) -> String {
    let mut by_class: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, o) in &s.objects {
        by_class.entry(o.class.as_str()).or_default().push(id);
    }
    let groups: Vec<(&str, Vec<&str>)> = by_class.into_iter().collect();
    let perms: Vec<Vec<Vec<usize>>> = groups.iter().map(|(_, ids)| permutations(ids.len())).collect();
    let mut best: Option<String> = None;
    let mut choice = vec![0usize; groups.len()];
    loop {
        let mut map = BTreeMap::new();
        for (g, (class, ids)) in groups.iter().enumerate() {
            for (k, id) in ids.iter().enumerate() {
                map.insert(id.to_string(), format!("{class}#{}", perms[g][choice[g]][k]));
            }
        }
        let text = format!("{:?}", s.rename_objects(&map));
        if best.as_ref().is_none_or(|b| text < *b) {
            best = Some(text);
        }
        let mut g = 0;
        loop {
            if g == groups.len() {
                return best.unwrap_or_default();
            }
            choice[g] += 1;
            if choice[g] < perms[g].len() {
                break;
            }
            choice[g] = 0;
            g += 1;
        }
    }
}

/// Every labelled conformant snapshot with at most `k` objects per class,
/// counted up to isomorphism.
pub fn labelled_iso_count(th: &Theory, k: usize) -> usize {
    let sig = &th.signature;
    let mut partial: Vec<Snapshot> = vec![Snapshot::default()];
    for c in sig.classes.keys() {
        let attrs = sig.all_attrs(c);
        let mut next = Vec::new();
        for s in &partial {
            for n in 0..=k {
                // every valuation of n objects
                let mut acc = vec![s.clone()];
                for i in 0..n {
                    let id = format!("{c}_{i}");
                    let mut grown = Vec::new();
                    for base in &acc {
                        let mut vals: Vec<Vec<(String, Value)>> = vec![Vec::new()];
                        for (_, a, t) in &attrs {
                            vals = vals
                                .iter()
                                .flat_map(|p| {
                                    t.values().into_iter().map(move |v| {
                                        let mut q = p.clone();
                                        q.push((a.clone(), v));
                                        q
                                    })
                                })
                                .collect();
                        }
                        for v in vals {
                            let mut s2 = base.clone();
                            let pairs: Vec<(&str, Value)> = v.iter().map(|(a, x)| (a.as_str(), x.clone())).collect();
                            s2.add_object(id.clone(), c.clone(), &pairs);
                            grown.push(s2);
                        }
                    }
                    acc = grown;
                }
                next.extend(acc);
            }
        }
        partial = next;
    }
    // every subset of possible links per association
    for (name, a) in &sig.assocs {
        let mut next = Vec::new();
        for s in &partial {
            let ends = |class: &str| -> Vec<String> {
                s.objects
                    .iter()
                    .filter(|(_, o)| sig.is_subclass(&o.class, class))
                    .map(|(id, _)| id.clone())
                    .collect()
            };
            let pairs: Vec<(String, String)> = ends(&a.a.class)
                .into_iter()
                .flat_map(|x| ends(&a.b.class).into_iter().map(move |y| (x.clone(), y)))
                .collect();
            for mask in 0u32..(1 << pairs.len()) {
                let mut s2 = s.clone();
                for (bit, (x, y)) in pairs.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        s2.add_link(name.clone(), x.clone(), y.clone());
                    }
                }
                next.push(s2);
            }
        }
        partial = next;
    }
    partial
        .iter()
        .filter(|s| conforms(s, th).unwrap())
        .map(canonical)
        .collect::<BTreeSet<_>>()
        .len()
}

pub fn enumeration_is_canonical(th: &Theory, k: usize) -> bool {
    let b = Bounds {
        max_objects_per_class: k,
        ..Bounds::default()
    };
    let snaps = enumerate_snapshots(th, &b).unwrap();
    let classes: BTreeSet<String> = snaps.iter().map(canonical).collect();
    classes.len() == snaps.len() && snaps.iter().all(|s| conforms(s, th).unwrap()) && snaps.len() == labelled_iso_count(th, k)
}

pub fn one_bool_class() -> Theory {
    parse_cd("classdiagram O\nclass A {\n  attr f: Bool\n}\n").unwrap().theory().unwrap()
}
