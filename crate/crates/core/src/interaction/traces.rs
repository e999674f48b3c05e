//! Trace sets and the satisfaction of interactions by them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::behavioral::{ExplicitLts, Lts};
use crate::kernel::Truth;
use crate::structural::{Bounds, EventLabel, SnapshotTs};

use super::nfa::{matches, project, sd_to_nfa, Config, Env, TraceAutomaton};
use super::sd::Interaction;

/// A finite set of traces cut at `depth` events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceSet {
    /// Listed traces.
    Explicit {
        traces: BTreeSet<Vec<EventLabel>>,
        depth: usize,
    },
    /// The observable traces of a transition system, kept symbolic.
    System { ts: Arc<SnapshotTs>, depth: usize },
}

impl TraceSet {
    pub fn explicit(traces: impl IntoIterator<Item = Vec<EventLabel>>, depth: usize) -> TraceSet {
        TraceSet::Explicit {
            traces: traces.into_iter().collect(),
            depth,
        }
    }

    pub fn system(ts: Arc<SnapshotTs>, depth: usize) -> TraceSet {
        TraceSet::System { ts, depth }
    }

    pub fn depth(&self) -> usize {
        match self {
            TraceSet::Explicit { depth, .. } | TraceSet::System { depth, .. } => *depth,
        }
    }

    /// Relabels every event; `None` removes it.
    pub fn map_events(&self, f: &dyn Fn(&EventLabel) -> Option<EventLabel>) -> TraceSet {
        match self {
            TraceSet::Explicit { traces, depth } => TraceSet::Explicit {
                traces: traces.iter().map(|t| t.iter().filter_map(f).collect()).collect(),
                depth: *depth,
            },
            TraceSet::System { ts, depth } => {
                let mut relabeled = (**ts).clone();
                for (_, l, _) in relabeled.transitions.iter_mut() {
                    *l = l.as_ref().and_then(f);
                }
                relabeled.transitions.sort();
                relabeled.transitions.dedup();
                TraceSet::System {
                    ts: Arc::new(relabeled),
                    depth: *depth,
                }
            }
        }
    }

    /// Lists the traces, or `None` if there are more than `limit`.
    pub fn enumerate(&self, limit: usize) -> Option<BTreeSet<Vec<EventLabel>>> {
        match self {
            TraceSet::Explicit { traces, .. } => (traces.len() <= limit).then(|| traces.clone()),
            TraceSet::System { ts, depth } => traces_limited(ts, *depth, limit),
        }
    }
}

/// All observable-label sequences of length at most `depth` from the
/// initial states.
pub fn traces(ts: &SnapshotTs, depth: usize) -> BTreeSet<Vec<EventLabel>> {
    traces_limited(ts, depth, usize::MAX).expect("unlimited")
}

fn tau_closure(adj: &[Vec<(Option<&EventLabel>, usize)>], set: BTreeSet<usize>) -> BTreeSet<usize> {
    let mut out = set.clone();
    let mut stack: Vec<usize> = set.into_iter().collect();
    while let Some(s) = stack.pop() {
        for (l, t) in &adj[s] {
            if l.is_none() && out.insert(*t) {
                stack.push(*t);
            }
        }
    }
    out
}

fn traces_limited(ts: &SnapshotTs, depth: usize, limit: usize) -> Option<BTreeSet<Vec<EventLabel>>> {
    let adj = ts.adjacency();
    let mut out = BTreeSet::new();
    let start = tau_closure(&adj, ts.initial.iter().copied().collect());
    if ts.initial.is_empty() {
        return Some(out);
    }
    let mut stack = vec![(start, Vec::<EventLabel>::new())];
    while let Some((set, trace)) = stack.pop() {
        out.insert(trace.clone());
        if out.len() > limit {
            return None;
        }
        if trace.len() == depth {
            continue;
        }
        let mut next: BTreeMap<&EventLabel, BTreeSet<usize>> = BTreeMap::new();
        for &s in &set {
            for (l, t) in &adj[s] {
                if let Some(l) = l {
                    next.entry(l).or_default().insert(*t);
                }
            }
        }
        for (l, targets) in next {
            let mut t = trace.clone();
            t.push(l.clone());
            stack.push((tau_closure(&adj, targets), t));
        }
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatMode {
    /// Some trace is accepted.
    Exists,
    /// Every maximal trace is accepted.
    All,
}

/// Result of a product search for an accepted trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    /// A shortest accepted trace, unprojected.
    pub witness: Option<Vec<EventLabel>>,
    /// Whether the product was explored without hitting a cap.
    pub exhaustive: bool,
    pub product_states: usize,
}

/// Searches the product of `lts` with `a` for an accepting configuration,
/// in order of the number of observable events. Events outside the
/// automaton's alphabet are skipped by the automaton but still counted.
pub fn exists_search<L: Lts>(lts: &mut L, a: &TraceAutomaton, depth: Option<usize>, max_states: usize) -> SearchOutcome
where
    L::State: Ord,
{
    type Node<S> = (S, usize, Env);
    let mut index: HashMap<Node<L::State>, usize> = HashMap::new();
    let mut nodes: Vec<Node<L::State>> = Vec::new();
    let mut cost: Vec<usize> = Vec::new();
    let mut parent: Vec<Option<(usize, Option<EventLabel>)>> = Vec::new();
    let mut exhaustive = true;
    let mut layer: Vec<usize> = Vec::new();

    let witness = |nodes_parent: &[Option<(usize, Option<EventLabel>)>], mut i: usize| {
        let mut t = Vec::new();
        while let Some((p, l)) = &nodes_parent[i] {
            if let Some(l) = l {
                t.push(l.clone());
            }
            i = *p;
        }
        t.reverse();
        t
    };

    for s in lts.initial() {
        for (q, env) in a.start() {
            let key = (s.clone(), q, env);
            if index.contains_key(&key) {
                continue;
            }
            index.insert(key.clone(), nodes.len());
            layer.push(nodes.len());
            nodes.push(key);
            cost.push(0);
            parent.push(None);
        }
    }
    let mut k = 0;
    while !layer.is_empty() {
        if let Some(&i) = layer.iter().find(|&&i| nodes[i].1 == a.accepting && cost[i] == k) {
            return SearchOutcome {
                witness: Some(witness(&parent, i)),
                exhaustive,
                product_states: nodes.len(),
            };
        }
        let mut stack = std::mem::take(&mut layer);
        let mut next: Vec<usize> = Vec::new();
        let mut done: BTreeSet<usize> = BTreeSet::new();
        while let Some(i) = stack.pop() {
            if cost[i] != k || !done.insert(i) {
                continue;
            }
            if nodes[i].1 == a.accepting {
                return SearchOutcome {
                    witness: Some(witness(&parent, i)),
                    exhaustive,
                    product_states: nodes.len(),
                };
            }
            let (s, q, env) = nodes[i].clone();
            for (label, t) in lts.successors(&s) {
                let (c, targets): (usize, Vec<Config>) = match &label {
                    None => (k, vec![(q, env.clone())]),
                    Some(e) => {
                        if depth.is_some_and(|d| k + 1 > d) {
                            exhaustive = false;
                            continue;
                        }
                        if a.in_alphabet(e) {
                            (k + 1, a.step_one(&(q, env.clone()), e).into_iter().collect())
                        } else {
                            (k + 1, vec![(q, env.clone())])
                        }
                    }
                };
                for (q2, env2) in targets {
                    let key = (t.clone(), q2, env2);
                    match index.get(&key) {
                        Some(&j) => {
                            if c < cost[j] {
                                cost[j] = c;
                                parent[j] = Some((i, label.clone()));
                                stack.push(j);
                            }
                        }
                        None => {
                            if nodes.len() >= max_states {
                                exhaustive = false;
                                continue;
                            }
                            let j = nodes.len();
                            index.insert(key.clone(), j);
                            nodes.push(key);
                            cost.push(c);
                            parent.push(Some((i, label.clone())));
                            if c == k {
                                stack.push(j);
                            } else {
                                next.push(j);
                            }
                        }
                    }
                }
            }
        }
        layer = next.into_iter().filter(|&j| cost[j] == k + 1).collect();
        k += 1;
    }
    SearchOutcome {
        witness: None,
        exhaustive,
        product_states: nodes.len(),
    }
}

fn maximal(traces: &BTreeSet<Vec<EventLabel>>) -> Vec<&Vec<EventLabel>> {
    traces
        .iter()
        .filter(|t| {
            !traces
                .range::<Vec<EventLabel>, _>((std::ops::Bound::Excluded(*t), std::ops::Bound::Unbounded))
                .next()
                .is_some_and(|u| u.len() > t.len() && u.starts_with(t))
        })
        .collect()
}

fn all_on_system(ts: &SnapshotTs, a: &TraceAutomaton, depth: usize) -> bool {
    let adj = ts.adjacency();
    let mut memo: HashMap<(BTreeSet<usize>, BTreeSet<Config>, usize), bool> = HashMap::new();
    fn go(
        adj: &[Vec<(Option<&EventLabel>, usize)>],
        a: &TraceAutomaton,
        set: BTreeSet<usize>,
        cs: BTreeSet<Config>,
        left: usize,
        memo: &mut HashMap<(BTreeSet<usize>, BTreeSet<Config>, usize), bool>,
    ) -> bool {
        let key = (set, cs, left);
        if let Some(r) = memo.get(&key) {
            return *r;
        }
        let (set, cs, _) = &key;
        let mut next: BTreeMap<&EventLabel, BTreeSet<usize>> = BTreeMap::new();
        if left > 0 {
            for &s in set {
                for (l, t) in &adj[s] {
                    if let Some(l) = l {
                        next.entry(l).or_default().insert(*t);
                    }
                }
            }
        }
        let r = if next.is_empty() {
            a.accepts(cs)
        } else {
            next.into_iter().all(|(l, targets)| {
                let cs2 = if a.in_alphabet(l) { a.step(cs, l) } else { cs.clone() };
                !cs2.is_empty() && go(adj, a, tau_closure(adj, targets), cs2, left - 1, memo)
            })
        };
        memo.insert(key, r);
        r
    }
    let start = tau_closure(&adj, ts.initial.iter().copied().collect());
    go(&adj, a, start, a.start(), depth, &mut memo)
}

/// Three-valued satisfaction of an interaction by a trace set. Traces are
/// projected onto the interaction's alphabet before matching.
pub fn sd_satisfaction(t: &TraceSet, i: &Interaction, mode: SatMode, bounds: &Bounds) -> Truth {
    let a = sd_to_nfa(i);
    match (t, mode) {
        (TraceSet::Explicit { traces, .. }, SatMode::Exists) => {
            Truth::from_bool(traces.iter().any(|tr| matches(&project(tr, &a), &a)))
        }
        (TraceSet::Explicit { traces, .. }, SatMode::All) => {
            Truth::from_bool(maximal(traces).into_iter().all(|tr| matches(&project(tr, &a), &a)))
        }
        (TraceSet::System { ts, depth }, SatMode::Exists) => {
            let mut lts = ExplicitLts::new(ts);
            let out = exists_search(&mut lts, &a, None, bounds.max_states.saturating_mul(64));
            match out.witness {
                Some(w) if w.len() <= *depth => Truth::True,
                Some(_) => Truth::Unknown,
                None if out.exhaustive && ts.explored_completely => Truth::False,
                None => Truth::Unknown,
            }
        }
        (TraceSet::System { ts, depth }, SatMode::All) => {
            if !all_on_system(ts, &a, *depth) {
                Truth::False
            } else if ts.explored_completely {
                Truth::True
            } else {
                Truth::Unknown
            }
        }
    }
}

/// Two-valued satisfaction under default bounds; `Unknown` counts as false.
pub fn sd_satisfies(t: &TraceSet, i: &Interaction, mode: SatMode) -> bool {
    sd_satisfaction(t, i, mode, &Bounds::default()) == Truth::True
}
