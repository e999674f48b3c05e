//! Realization families: one behaviour source per initial snapshot, reduced
//! onto every node of a network.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use crate::behavioral::{Assembly, Component, ExplicitLts, Gate, Lts, Part, StateMachine};
use crate::error::{Error, Result};
use crate::interaction::{exists_search, sd_to_nfa, shortest_word, Interaction, SatMode, TraceSet};
use crate::kernel::{reduct, satisfaction, InstitutionId, Realization, Sentence, Signature, SignatureMorphism, Theory, Truth};
use crate::morphisms::CMP2SD;
use crate::netlang::{Graph, Link, Node};
use crate::structural::{embeds, enumerate_snapshots, Bounds, EventLabel, Snapshot, SnapshotTs, TsState};

use super::compat::check_decentralized_compat;
use super::verdict::{Certificate, Outcome, Stats, Witness};

/// Where the behaviour of a family comes from.
#[derive(Debug)]
pub(crate) enum Source {
    Assembly(Assembly),
    /// Shortest accepted words of the interactions, as a prefix tree.
    Words(Vec<Vec<EventLabel>>),
    Static,
}

pub(crate) struct Setup<'g> {
    pub graph: &'g Graph,
    pub subject: String,
    /// Nodes that receive a realization: members, then link endpoints.
    pub nodes: Vec<&'g Node>,
    pub links: Vec<&'g Link>,
    pub data: Theory,
    pub sd_sig: Signature,
    pub source: Source,
    pub ods: std::result::Result<Option<Snapshot>, Certificate>,
    pub bounds: Bounds,
}

/// Outcome for one initial snapshot.
pub(crate) struct Candidate {
    pub outcome: Outcome,
    /// How far evaluation got: object diagrams, binding, then behaviour.
    pub stage: u8,
    pub witness: Option<Witness>,
    pub stats: Stats,
}

impl Candidate {
    fn rejected(outcome: Outcome, stage: u8) -> Candidate {
        Candidate {
            outcome,
            stage,
            witness: None,
            stats: Stats::default(),
        }
    }
}

fn node<'g>(g: &'g Graph, name: &str) -> Result<&'g Node> {
    g.node(name).ok_or_else(|| Error::Unresolved(format!("no node named {name}")))
}

/// `nodes` and everything they are defined from, in first-visit order.
fn closure<'g>(g: &'g Graph, nodes: &[&'g Node]) -> Result<Vec<&'g Node>> {
    let mut out: Vec<&Node> = Vec::new();
    let mut stack: Vec<&Node> = nodes.iter().rev().copied().collect();
    while let Some(n) = stack.pop() {
        if out.iter().any(|m| m.name == n.name) {
            continue;
        }
        out.push(n);
        for op in n.def.operands().into_iter().rev() {
            stack.push(node(g, op)?);
        }
    }
    Ok(out)
}

/// Object diagrams merged by object id; ids denote the same object in every
/// diagram of a network.
fn merge_ods(nodes: &[&Node]) -> std::result::Result<Option<Snapshot>, Certificate> {
    let mut merged: Option<Snapshot> = None;
    let mut origin: BTreeMap<String, &str> = BTreeMap::new();
    for n in nodes {
        let Some(od) = &n.object_diagram else { continue };
        let m = merged.get_or_insert_with(Snapshot::default);
        for (id, o) in &od.snapshot.objects {
            let clash = |why: String| Certificate {
                subject: format!("{}, {}", origin[id], n.name),
                reason: why,
            };
            match m.objects.get_mut(id) {
                None => {
                    m.objects.insert(id.clone(), o.clone());
                    origin.insert(id.clone(), &n.name);
                }
                Some(prev) if prev.class != o.class => {
                    return Err(clash(format!("object {id} is a {} and a {}", prev.class, o.class)))
                }
                Some(prev) => {
                    for (a, v) in &o.attrs {
                        match prev.attrs.get(a) {
                            Some(w) if w != v => return Err(clash(format!("{id}.{a} is both {w} and {v}"))),
                            _ => {
                                prev.attrs.insert(a.clone(), v.clone());
                            }
                        }
                    }
                }
            }
        }
        for (a, set) in &od.snapshot.links {
            for (x, y) in set {
                m.add_link(a.clone(), x.clone(), y.clone());
            }
        }
    }
    Ok(merged)
}

/// One part per machine, each open to all of its receptions.
fn machines_component(machines: &[StateMachine]) -> Component {
    Component {
        name: "machines".into(),
        parts: machines
            .iter()
            .map(|m| Part {
                name: m.name.clone(),
                class: m.class.clone(),
                machine: m.name.clone(),
            })
            .collect(),
        connectors: Vec::new(),
        gates: machines
            .iter()
            .map(|m| Gate {
                name: format!("env_{}", m.name),
                part: m.name.clone(),
                messages: None,
            })
            .collect(),
    }
}

fn prefix_tree(s: &Snapshot, words: &[Vec<EventLabel>]) -> Result<SnapshotTs> {
    let mut index: BTreeMap<&[EventLabel], usize> = BTreeMap::new();
    index.insert(&[], 0);
    let mut transitions = Vec::new();
    for w in words {
        for k in 1..=w.len() {
            if index.contains_key(&w[..k]) {
                continue;
            }
            let j = index.len();
            transitions.push((index[&w[..k - 1]], Some(w[k - 1].clone()), j));
            index.insert(&w[..k], j);
        }
    }
    SnapshotTs::new(vec![TsState::of(s.clone()); index.len()], vec![0], transitions, true)
}

/// Labelled steps of `ts` that produce exactly `labels`, with the states
/// reached.
pub(crate) fn replay(ts: &SnapshotTs, labels: &[EventLabel]) -> Option<Vec<(EventLabel, TsState)>> {
    let adj = ts.adjacency();
    let mut parent: BTreeMap<(usize, usize), Option<(usize, usize)>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for &i in &ts.initial {
        parent.insert((i, 0), None);
        queue.push_back((i, 0));
    }
    while let Some((s, k)) = queue.pop_front() {
        if k == labels.len() {
            let mut path = Vec::new();
            let mut cur = (s, k);
            while let Some(Some(prev)) = parent.get(&cur) {
                if prev.1 < cur.1 {
                    path.push((labels[prev.1].clone(), ts.states[cur.0].clone()));
                }
                cur = *prev;
            }
            path.reverse();
            return Some(path);
        }
        for (l, t) in &adj[s] {
            let next = match l {
                None => (*t, k),
                Some(e) if **e == labels[k] => (*t, k + 1),
                Some(_) => continue,
            };
            if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(next) {
                e.insert(Some((s, k)));
                queue.push_back(next);
            }
        }
    }
    None
}

impl<'g> Setup<'g> {
    pub fn new(graph: &'g Graph, subject: &str, node_names: &[String], link_names: &[String], bounds: &Bounds) -> Result<Setup<'g>> {
        let mut nodes: Vec<&Node> = Vec::new();
        let add = |n: &'g Node, nodes: &mut Vec<&'g Node>| {
            if !nodes.iter().any(|m| m.name == n.name) {
                nodes.push(n);
            }
        };
        for n in node_names {
            add(node(graph, n)?, &mut nodes);
        }
        let mut links = Vec::new();
        for l in link_names {
            let link = graph
                .link(l)
                .ok_or_else(|| Error::Unresolved(format!("no refinement named {l}")))?;
            add(node(graph, &link.abstract_node)?, &mut nodes);
            add(node(graph, &link.concrete_node)?, &mut nodes);
            links.push(link);
        }
        let all = closure(graph, &nodes)?;

        let mut data = Theory::new(InstitutionId::Cd, Signature::default());
        for n in all.iter().filter(|n| n.institution().uses_snapshots()) {
            data.signature = data.signature.union(&n.theory.signature)?;
            for s in n.theory.data_theory().sentences {
                data.push(s);
            }
        }
        let mut sd_sig = (CMP2SD.sig_project)(&Theory::new(InstitutionId::Cmp, data.signature.clone()))?.signature;
        for n in all.iter().filter(|n| n.institution() == InstitutionId::Sd) {
            sd_sig = sd_sig.union(&n.theory.signature)?;
        }

        let source = if let Some(n) = all
            .iter()
            .find(|n| n.institution() == InstitutionId::Cmp && n.theory.components().next().is_some())
        {
            let comp = n.theory.components().last().cloned().expect("checked above");
            let machines: Vec<StateMachine> = n.theory.machines().cloned().collect();
            Source::Assembly(Assembly::new(comp, &machines, data.clone())?)
        } else {
            let mut machines: Vec<StateMachine> = Vec::new();
            for m in all.iter().flat_map(|n| n.theory.machines()) {
                if !machines.iter().any(|x| x.name == m.name) {
                    machines.push(m.clone());
                }
            }
            if !machines.is_empty() {
                Source::Assembly(Assembly::new(machines_component(&machines), &machines, data.clone())?)
            } else {
                let words: Vec<Vec<EventLabel>> = all
                    .iter()
                    .flat_map(|n| n.theory.interactions().map(move |i| (n, i)))
                    .filter_map(|(n, i)| shortest_word(i, &n.theory.signature))
                    .collect();
                if words.is_empty() {
                    Source::Static
                } else {
                    Source::Words(words)
                }
            }
        };
        Ok(Setup {
            graph,
            subject: subject.to_string(),
            ods: merge_ods(&nodes),
            nodes,
            links,
            data,
            sd_sig,
            source,
            bounds: *bounds,
        })
    }

    pub fn snapshots(&self) -> Result<Vec<Snapshot>> {
        enumerate_snapshots(&self.data, &self.bounds)
    }

    fn od_outcome(&self, s: &Snapshot) -> Outcome {
        match &self.ods {
            Err(c) => Outcome::Fails(c.clone()),
            Ok(Some(m)) if !embeds(m, s) => Outcome::fails(&self.subject, "the object diagrams do not embed in the initial snapshot"),
            Ok(_) => Outcome::Holds,
        }
    }

    /// The behaviour source run from `s`; `None` when no part binding exists.
    pub fn system(&self, s: &Snapshot) -> Result<Option<(SnapshotTs, Stats)>> {
        let (ts, pruned) = match &self.source {
            Source::Assembly(a) => match a.generate_ts(s, &self.bounds)? {
                None => return Ok(None),
                Some((ts, st)) => (ts, st.pruned_overflows),
            },
            Source::Words(ws) => (prefix_tree(s, ws)?, 0),
            Source::Static => (SnapshotTs::single(s.clone()), 0),
        };
        let stats = Stats {
            snapshots: 1,
            explored_completely: ts.explored_completely,
            states_explored: ts.states.len(),
            pruned_overflows: pruned,
            ..Stats::default()
        };
        Ok(Some((ts, stats)))
    }

    fn unbound(&self) -> Outcome {
        let comp = match &self.source {
            Source::Assembly(a) => a.component.name.as_str(),
            _ => "",
        };
        Outcome::fails(&self.subject, format!("no objects can be bound to the parts of {comp}"))
    }

    /// The realization of `n` derived from the source system `g`.
    pub fn realize(&self, n: &Node, g: &Arc<SnapshotTs>) -> Result<Realization> {
        if n.institution().uses_snapshots() {
            let full = Realization::ts(n.institution(), self.data.signature.clone(), (**g).clone())?;
            reduct(&full, &SignatureMorphism::inclusion(&n.theory.signature, &self.data.signature)?)
        } else {
            let full = Realization::traces(self.sd_sig.clone(), TraceSet::system(Arc::clone(g), self.bounds.depth));
            reduct(&full, &SignatureMorphism::inclusion(&n.theory.signature, &self.sd_sig)?)
        }
    }

    pub fn family(&self, g: &Arc<SnapshotTs>) -> Result<BTreeMap<String, Realization>> {
        self.nodes
            .iter()
            .map(|n| Ok((n.name.clone(), self.realize(n, g)?)))
            .collect()
    }

    fn sentence_outcome(&self, subject: &str, r: &Realization, phi: &Sentence, matched: &mut usize) -> Result<Outcome> {
        let t = satisfaction(r, phi, SatMode::Exists, &self.bounds)?;
        if t == Truth::True && matches!(phi, Sentence::Interaction(_)) {
            *matched += 1;
        }
        Ok(Outcome::of(t, subject, || format!("{} does not hold", phi.label())))
    }

    /// Sentences and object diagrams of one node on its realization.
    pub fn node_outcome(&self, n: &Node, r: &Realization, matched: &mut usize) -> Result<Outcome> {
        let mut out = Outcome::Holds;
        for phi in &n.theory.sentences {
            out = out.and(self.sentence_outcome(&n.name, r, phi, matched)?);
            if matches!(out, Outcome::Fails(_)) {
                return Ok(out);
            }
        }
        if let Some(od) = &n.object_diagram {
            let ts = r
                .as_ts()
                .ok_or_else(|| Error::Typing(format!("{} needs a transition system", n.name)))?;
            if !ts.initial.iter().any(|&i| embeds(&od.snapshot, &ts.states[i].snapshot)) {
                return Ok(Outcome::fails(&n.name, "the object diagram is not embedded in an initial state"));
            }
        }
        Ok(out)
    }

    /// Inclusion along one link: the concrete realization, reduced to the
    /// abstract signature, satisfies every abstract sentence.
    pub fn link_outcome(&self, l: &Link, family: &BTreeMap<String, Realization>, matched: &mut usize) -> Result<Outcome> {
        let abs = node(self.graph, &l.abstract_node)?;
        let conc = &family[&l.concrete_node];
        let r = reduct(conc, &SignatureMorphism::inclusion(&abs.theory.signature, &conc.signature)?)?;
        let mut out = Outcome::Holds;
        for phi in &abs.theory.sentences {
            out = out.and(self.sentence_outcome(&l.name, &r, phi, matched)?);
            if matches!(out, Outcome::Fails(_)) {
                break;
            }
        }
        Ok(out)
    }

    /// Every node and link obligation on a given family.
    pub fn evaluate(&self, family: &BTreeMap<String, Realization>, matched: &mut usize) -> Result<Outcome> {
        let mut out = Outcome::Holds;
        for n in &self.nodes {
            out = out.and(self.node_outcome(n, &family[&n.name], matched)?);
            if matches!(out, Outcome::Fails(_)) {
                return Ok(out);
            }
        }
        for l in &self.links {
            out = out.and(self.link_outcome(l, family, matched)?);
            if matches!(out, Outcome::Fails(_)) {
                return Ok(out);
            }
        }
        Ok(out)
    }

    /// Shared-symbol agreement of every pair of nodes and joint embedding
    /// of the object diagrams.
    pub fn compatibility(&self, family: &BTreeMap<String, Realization>) -> Result<Outcome> {
        if let Ok(Some(m)) = &self.ods {
            let first = self.nodes.iter().find(|n| n.object_diagram.is_some()).expect("merged from some node");
            let ts = family[&first.name]
                .as_ts()
                .ok_or_else(|| Error::Typing(format!("{} needs a transition system", first.name)))?;
            if !ts.initial.iter().any(|&i| embeds(m, &ts.states[i].snapshot)) {
                return Ok(Outcome::fails(&self.subject, "the object diagrams do not embed jointly in an initial state"));
            }
        }
        if let Err(c) = &self.ods {
            return Ok(Outcome::Fails(c.clone()));
        }
        for (i, a) in self.nodes.iter().enumerate() {
            for b in &self.nodes[i + 1..] {
                let common: BTreeSet<String> = a
                    .theory
                    .signature
                    .names()
                    .intersection(&b.theory.signature.names())
                    .cloned()
                    .collect();
                if common.is_empty() {
                    continue;
                }
                let shared = a.theory.signature.restrict(&common);
                if !check_decentralized_compat(&family[&a.name], &family[&b.name], &shared, self.bounds.depth)? {
                    return Ok(Outcome::fails(
                        &format!("{}, {}", a.name, b.name),
                        "the realizations differ on the shared signature",
                    ));
                }
            }
        }
        Ok(Outcome::Holds)
    }

    /// The interaction that drives the filmstrip, if any.
    fn lead_interaction(&self) -> Option<&Interaction> {
        let from_nodes = self.nodes.iter().flat_map(|n| n.theory.interactions());
        let from_links = self
            .links
            .iter()
            .filter_map(|l| self.graph.node(&l.abstract_node))
            .flat_map(|n| n.theory.interactions());
        from_nodes.chain(from_links).next()
    }

    pub fn witness(&self, g: &Arc<SnapshotTs>, family: BTreeMap<String, Realization>) -> Witness {
        let mut filmstrip = Vec::new();
        if let Some(i) = self.lead_interaction() {
            let out = exists_search(&mut ExplicitLts::new(g), &sd_to_nfa(i), None, self.bounds.max_states.saturating_mul(64));
            if let Some(labels) = out.witness {
                filmstrip = replay(g, &labels).unwrap_or_default();
            }
        }
        let realizations = self
            .nodes
            .iter()
            .map(|n| (n.name.clone(), family[&n.name].clone()))
            .collect();
        Witness {
            initial: g.states[g.initial[0]].snapshot.clone(),
            filmstrip,
            realizations,
        }
    }

    /// Static stage, behaviour generation, then every sentence and link on
    /// the derived family.
    pub fn incremental(&self, s: &Snapshot) -> Result<Candidate> {
        let od = self.od_outcome(s);
        if matches!(od, Outcome::Fails(_)) {
            return Ok(Candidate::rejected(od, 0));
        }
        let Some((ts, mut stats)) = self.system(s)? else {
            return Ok(Candidate::rejected(self.unbound(), 1));
        };
        let g = Arc::new(ts);
        let family = self.family(&g)?;
        let outcome = self.evaluate(&family, &mut stats.traces_matched)?;
        let witness = (outcome == Outcome::Holds).then(|| self.witness(&g, family));
        Ok(Candidate {
            outcome,
            stage: 2,
            witness,
            stats,
        })
    }

    /// Whether the assembly's own construction guarantees `phi`.
    fn by_construction(&self, a: &Assembly, phi: &Sentence) -> bool {
        match phi {
            Sentence::Invariant { .. } | Sentence::Multiplicity { .. } => true,
            Sentence::Machine(m) => a.machines.iter().any(|x| x.name == m.name && x.class == m.class),
            Sentence::Component(c) => {
                *c == a.component
                    || matches!(c.parts.as_slice(), [p] if a.component.parts.iter().any(|q| q.name == p.name && q.class == p.class)
                        && c.gates.iter().any(|g| g.part == p.name && g.messages.is_none()))
            }
            Sentence::Interaction(_) => false,
        }
    }

    /// Interaction obligations decided by on-the-fly product search: the
    /// subject and the interaction, from nodes and from links.
    fn product_obligations(&self) -> Vec<(String, &Interaction)> {
        let mut out = Vec::new();
        for n in &self.nodes {
            out.extend(n.theory.interactions().map(|i| (n.name.clone(), i)));
        }
        for l in &self.links {
            if let Some(a) = self.graph.node(&l.abstract_node) {
                out.extend(a.theory.interactions().map(|i| (l.name.clone(), i)));
            }
        }
        out
    }

    fn search_product<L: Lts>(&self, lts: &mut L, stats: &mut Stats) -> Outcome
    where
        L::State: Ord,
    {
        let mut out = Outcome::Holds;
        for (subject, i) in self.product_obligations() {
            let r = exists_search(lts, &sd_to_nfa(i), None, self.bounds.max_states.saturating_mul(64));
            stats.product_states += r.product_states;
            stats.explored_completely &= r.exhaustive;
            let o = match r.witness {
                Some(w) if w.len() <= self.bounds.depth => {
                    stats.traces_matched += 1;
                    Outcome::Holds
                }
                Some(_) => Outcome::Open(format!("{subject}: the shortest run of {} exceeds the depth bound", i.name)),
                None if r.exhaustive => Outcome::fails(&subject, format!("no run of the system matches {}", i.name)),
                None => Outcome::Open(format!("{subject}: search for {} hit the state cap", i.name)),
            };
            out = out.and(o);
            if matches!(out, Outcome::Fails(_)) {
                break;
            }
        }
        out
    }

    /// One product state space per initial snapshot: the system explored on
    /// the fly against each interaction automaton.
    pub fn monolithic(&self, s: &Snapshot) -> Result<Candidate> {
        let od = self.od_outcome(s);
        if matches!(od, Outcome::Fails(_)) {
            return Ok(Candidate::rejected(od, 0));
        }
        let mut stats = Stats {
            snapshots: 1,
            ..Stats::default()
        };
        let outcome = match &self.source {
            Source::Assembly(a) => {
                let constructive = self.nodes.iter().all(|n| {
                    !n.institution().uses_snapshots() || n.theory.sentences.iter().all(|phi| self.by_construction(a, phi))
                }) && self.nodes.iter().all(|n| n.object_diagram.is_none());
                let links_static = self.links.iter().all(|l| {
                    self.graph
                        .node(&l.abstract_node)
                        .is_some_and(|n| !n.institution().uses_snapshots() || n.theory.sentences.iter().all(|phi| self.by_construction(a, phi)))
                });
                if !constructive || !links_static {
                    return self.incremental(s);
                }
                let Some(mut inst) = a.instantiate(s, &self.bounds)? else {
                    return Ok(Candidate::rejected(self.unbound(), 1));
                };
                let o = self.search_product(&mut inst, &mut stats);
                stats.states_explored = stats.product_states;
                stats.pruned_overflows = inst.pruned_overflows;
                o
            }
            Source::Words(_) | Source::Static => {
                let Some((ts, _)) = self.system(s)? else {
                    return Ok(Candidate::rejected(self.unbound(), 1));
                };
                let o = self.search_product(&mut ExplicitLts::new(&ts), &mut stats);
                stats.states_explored = ts.states.len();
                o
            }
        };
        if outcome != Outcome::Holds {
            return Ok(Candidate {
                outcome,
                stage: 2,
                witness: None,
                stats,
            });
        }
        // the witness family is materialized once, for the chosen snapshot
        let Some((ts, _)) = self.system(s)? else {
            return Ok(Candidate::rejected(self.unbound(), 1));
        };
        let g = Arc::new(ts);
        let family = self.family(&g)?;
        Ok(Candidate {
            outcome,
            stage: 2,
            witness: Some(self.witness(&g, family)),
            stats,
        })
    }
}
