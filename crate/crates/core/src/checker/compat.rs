//! Agreement of two realizations on a shared signature.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interaction::TraceSet;
use crate::kernel::{reduct, Realization, RealizationBody, Signature, SignatureMorphism};
use crate::structural::{EventLabel, SnapshotTs};

const MAX_PAIRS: usize = 200_000;

/// A labelled graph read as a language of observable words.
struct Lang {
    adj: Vec<Vec<(Option<EventLabel>, usize)>>,
    initial: Vec<usize>,
}

impl Lang {
    fn of_ts(ts: &SnapshotTs) -> Lang {
        Lang {
            adj: ts
                .adjacency()
                .into_iter()
                .map(|row| row.into_iter().map(|(l, j)| (l.cloned(), j)).collect())
                .collect(),
            initial: ts.initial.clone(),
        }
    }

    fn of_traces(t: &TraceSet) -> Lang {
        match t {
            TraceSet::System { ts, .. } => Lang::of_ts(ts),
            TraceSet::Explicit { traces, .. } => {
                let mut index: BTreeMap<&[EventLabel], usize> = BTreeMap::new();
                index.insert(&[], 0);
                let mut adj = vec![Vec::new()];
                for w in traces {
                    for k in 1..=w.len() {
                        if index.contains_key(&w[..k]) {
                            continue;
                        }
                        let j = adj.len();
                        adj.push(Vec::new());
                        adj[index[&w[..k - 1]]].push((Some(w[k - 1].clone()), j));
                        index.insert(&w[..k], j);
                    }
                }
                Lang { adj, initial: vec![0] }
            }
        }
    }

    fn close(&self, mut set: BTreeSet<usize>) -> BTreeSet<usize> {
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for (l, t) in &self.adj[s] {
                if l.is_none() && set.insert(*t) {
                    stack.push(*t);
                }
            }
        }
        set
    }

    fn step(&self, set: &BTreeSet<usize>, e: &EventLabel) -> BTreeSet<usize> {
        let next = set
            .iter()
            .flat_map(|&s| &self.adj[s])
            .filter(|(l, _)| l.as_ref() == Some(e))
            .map(|(_, t)| *t)
            .collect();
        self.close(next)
    }

    fn enabled(&self, set: &BTreeSet<usize>) -> BTreeSet<EventLabel> {
        set.iter()
            .flat_map(|&s| &self.adj[s])
            .filter_map(|(l, _)| l.clone())
            .collect()
    }
}

/// Every word of `small` up to `depth` is a word of `big`.
fn included(small: &Lang, big: &Lang, depth: usize) -> Result<bool> {
    let start = (
        small.close(small.initial.iter().copied().collect()),
        big.close(big.initial.iter().copied().collect()),
    );
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back((start, 0));
    while let Some(((a, b), level)) = queue.pop_front() {
        if level == depth {
            continue;
        }
        for e in small.enabled(&a) {
            let b2 = big.step(&b, &e);
            if b2.is_empty() {
                return Ok(false);
            }
            let pair = (small.step(&a, &e), b2);
            if seen.insert(pair.clone()) {
                if seen.len() > MAX_PAIRS {
                    return Err(Error::Eval(format!("language comparison exceeded {MAX_PAIRS} state pairs")));
                }
                queue.push_back((pair, level + 1));
            }
        }
    }
    Ok(true)
}

fn onto(r: &Realization, shared: &Signature) -> Result<Realization> {
    r.signature
        .check_includes(shared)
        .map_err(|why| Error::Typing(format!("shared signature is not part of a realization: {why}")))?;
    reduct(r, &SignatureMorphism::inclusion(shared, &r.signature)?)
}

fn as_traces(r: &Realization, depth: usize) -> Result<Realization> {
    match &r.body {
        RealizationBody::Ts(ts) => Ok(Realization::traces(r.signature.clone(), TraceSet::system(Arc::clone(ts), depth))),
        RealizationBody::Traces(_) => Ok(r.clone()),
    }
}

/// Whether `a` and `b` agree on `shared`. Transition systems must have equal
/// reachable parts once control is erased; trace sets must be equal up to
/// the smaller depth; a trace set meets a transition system when each of its
/// words is a run of that system.
pub fn check_decentralized_compat(a: &Realization, b: &Realization, shared: &Signature, depth: usize) -> Result<bool> {
    let (ra, rb) = (onto(a, shared)?, onto(b, shared)?);
    match (&ra.body, &rb.body) {
        (RealizationBody::Ts(x), RealizationBody::Ts(y)) => {
            let (x, y) = (x.erase_control().reachable_part(), y.erase_control().reachable_part());
            Ok(x.canonical() == y.canonical())
        }
        (RealizationBody::Traces(x), RealizationBody::Traces(y)) => {
            let d = x.depth().min(y.depth());
            let (lx, ly) = (Lang::of_traces(x), Lang::of_traces(y));
            Ok(included(&lx, &ly, d)? && included(&ly, &lx, d)?)
        }
        (RealizationBody::Ts(_), RealizationBody::Traces(t)) | (RealizationBody::Traces(t), RealizationBody::Ts(_)) => {
            let ts_side = if matches!(ra.body, RealizationBody::Ts(_)) { a } else { b };
            let sys = onto(&as_traces(ts_side, depth)?, shared)?;
            let sys = sys.as_traces().expect("converted above");
            Ok(included(&Lang::of_traces(t), &Lang::of_traces(sys), t.depth().min(depth))?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::InstitutionId;
    use crate::structural::{Snapshot, TsState};

    fn sig() -> Signature {
        let cd = crate::structural::parse_cd("classdiagram D\nclass A {\n  reception m()\n  reception n()\n}\n").unwrap();
        cd.signature()
    }

    fn ev(m: &str) -> EventLabel {
        EventLabel::new("env", "a", m, vec![])
    }

    fn word_ts(words: &[&[&str]]) -> SnapshotTs {
        let mut s = Snapshot::default();
        s.add_object("a", "A", &[]);
        let mut states = vec![TsState::of(s.clone())];
        let mut tr = Vec::new();
        for w in words {
            let mut at = 0;
            for m in *w {
                states.push(TsState::of(s.clone()));
                tr.push((at, Some(ev(m)), states.len() - 1));
                at = states.len() - 1;
            }
        }
        SnapshotTs::new(states, vec![0], tr, true).unwrap()
    }

    #[test]
    fn equal_languages_agree() {
        let sig = sig();
        let t = Realization::traces(sig.clone(), TraceSet::explicit(vec![vec![ev("m"), ev("n")]], 5));
        let ts = Realization::ts(InstitutionId::Cd, sig.clone(), word_ts(&[&["m", "n"]])).unwrap();
        assert!(check_decentralized_compat(&t, &ts, &sig, 5).unwrap());
        let u = Realization::traces(sig.clone(), TraceSet::explicit(vec![vec![ev("n")]], 5));
        assert!(!check_decentralized_compat(&u, &ts, &sig, 5).unwrap());
        assert!(!check_decentralized_compat(&t, &u, &sig, 5).unwrap());
    }

    #[test]
    fn branching_differs_for_systems() {
        let sig = sig();
        let a = Realization::ts(InstitutionId::Cd, sig.clone(), word_ts(&[&["m"]])).unwrap();
        let b = Realization::ts(InstitutionId::Cd, sig.clone(), word_ts(&[&["m"], &["n"]])).unwrap();
        assert!(check_decentralized_compat(&a, &a, &sig, 5).unwrap());
        assert!(!check_decentralized_compat(&a, &b, &sig, 5).unwrap());
    }

    #[test]
    fn foreign_shared_signature_is_rejected() {
        let sig = sig();
        let other = crate::structural::parse_cd("classdiagram E\nclass B {\n}\n").unwrap().signature();
        let a = Realization::ts(InstitutionId::Cd, sig.clone(), word_ts(&[&["m"]])).unwrap();
        assert!(matches!(check_decentralized_compat(&a, &a, &other, 5), Err(Error::Typing(_))));
    }
}
