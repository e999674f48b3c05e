//! Network, model, and refinement checks.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Aspect, Error, Level, Result, Scope, Taxonomy};
use crate::kernel::{InstitutionId, RealizationBody};
use crate::netlang::{Graph, Node};
use crate::structural::{Bounds, Snapshot};

use super::family::{Candidate, Setup};
use super::verdict::{digest, Certificate, ConsistencyReport, Entry, Outcome, Stats, Verdict, VerdictKind, Witness, COMPATIBILITY};
use super::witness::read_bundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Static stage first, then behaviour per surviving snapshot.
    #[default]
    Incremental,
    /// One product search per snapshot, systems explored on the fly.
    Monolithic,
    /// Re-checks a stored witness family without search.
    Decentralized,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Strategy> {
        match s {
            "incremental" => Ok(Strategy::Incremental),
            "monolithic" => Ok(Strategy::Monolithic),
            "decentralized" => Ok(Strategy::Decentralized),
            _ => Err(Error::Typing(format!("unknown strategy {s}"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Incremental => "incremental",
            Strategy::Monolithic => "monolithic",
            Strategy::Decentralized => "decentralized",
        })
    }
}

/// Evaluates `f` on snapshots in order, a batch at a time, stopping after
/// the first batch that contains a result satisfying `stop`.
fn scan<T: Send>(snaps: &[Snapshot], f: impl Fn(&Snapshot) -> Result<T> + Sync, stop: impl Fn(&T) -> bool) -> Result<Vec<T>> {
    let batch = rayon::current_num_threads().max(1) * 2;
    let mut out = Vec::new();
    for chunk in snaps.chunks(batch) {
        let part: Vec<T> = chunk.par_iter().map(&f).collect::<Result<_>>()?;
        let done = part.iter().any(&stop);
        out.extend(part);
        if done {
            break;
        }
    }
    Ok(out)
}

fn search(setup: &Setup, strategy: Strategy) -> Result<(Verdict, Stats)> {
    let snaps = setup.snapshots()?;
    let run = |s: &Snapshot| match strategy {
        Strategy::Monolithic => setup.monolithic(s),
        _ => setup.incremental(s),
    };
    let results: Vec<Candidate> = scan(&snaps, run, |c| c.outcome == Outcome::Holds)?;
    let mut stats = Stats::default();
    for c in &results {
        stats.add(&c.stats);
    }
    stats.snapshots = results.len();
    if let Some(c) = results.iter().find(|c| c.outcome == Outcome::Holds) {
        let w = c.witness.clone().expect("held candidates carry a witness");
        return Ok((Verdict::Consistent(Box::new(w)), stats));
    }
    if let Some(why) = results.iter().find_map(|c| match &c.outcome {
        Outcome::Open(why) => Some(why.clone()),
        _ => None,
    }) {
        return Ok((Verdict::Unknown(why), stats));
    }
    // the failure that got furthest explains the most
    let cert = results
        .iter()
        .filter_map(|c| match &c.outcome {
            Outcome::Fails(cert) => Some((c.stage, cert)),
            _ => None,
        })
        .rev()
        .max_by_key(|(stage, _)| *stage)
        .map(|(_, cert)| cert.clone())
        .unwrap_or_else(|| Certificate {
            subject: setup.subject.clone(),
            reason: "no snapshot within bounds conforms to the data theory".into(),
        });
    Ok((Verdict::Inconsistent(cert), stats))
}

fn verdict_of(outcome: Outcome, witness: impl FnOnce() -> Witness) -> Verdict {
    match outcome {
        Outcome::Holds => Verdict::Consistent(Box::new(witness())),
        Outcome::Fails(c) => Verdict::Inconsistent(c),
        Outcome::Open(why) => Verdict::Unknown(why),
    }
}

fn kind_of(o: &Outcome) -> (VerdictKind, Option<String>) {
    match o {
        Outcome::Holds => (VerdictKind::Consistent, None),
        Outcome::Fails(c) => (VerdictKind::Inconsistent, Some(c.reason.clone())),
        Outcome::Open(why) => (VerdictKind::Unknown, Some(why.clone())),
    }
}

fn aspect(inst: InstitutionId) -> Aspect {
    if inst == InstitutionId::Cd {
        Aspect::Structural
    } else {
        Aspect::Behavioural
    }
}

/// Whether a node has a realization with every sentence satisfied.
pub fn check_model(g: &Graph, node: &str, bounds: &Bounds) -> Result<(Verdict, Stats)> {
    bounds.validate()?;
    let setup = Setup::new(g, node, &[node.to_string()], &[], bounds)?;
    search(&setup, Strategy::Incremental)
}

/// Whether every realization of the concrete end of a link, reduced to the
/// abstract signature, satisfies the abstract theory.
pub fn check_refinement(g: &Graph, link: &str, bounds: &Bounds) -> Result<(Verdict, Stats)> {
    bounds.validate()?;
    let l = g
        .link(link)
        .ok_or_else(|| Error::Unresolved(format!("no refinement named {link}")))?;
    let setup = Setup::new(g, link, std::slice::from_ref(&l.concrete_node), &[], bounds)?;
    let snaps = setup.snapshots()?;
    // `None`: the candidate is not a realization of the concrete node
    let check = |s: &Snapshot| -> Result<(Option<Outcome>, Option<Witness>, Stats)> {
        let Some((ts, mut stats)) = setup.system(s)? else {
            return Ok((None, None, Stats::default()));
        };
        let ts = Arc::new(ts);
        let family = setup.family(&ts)?;
        match setup.evaluate(&family, &mut stats.traces_matched)? {
            Outcome::Fails(_) => Ok((None, None, stats)),
            Outcome::Open(why) => Ok((Some(Outcome::Open(why)), None, stats)),
            Outcome::Holds => {
                let o = setup.link_outcome(l, &family, &mut stats.traces_matched)?;
                let w = (o == Outcome::Holds).then(|| setup.witness(&ts, family));
                Ok((Some(o), w, stats))
            }
        }
    };
    let results = scan(&snaps, check, |r| matches!(r.0, Some(Outcome::Fails(_))))?;
    let mut stats = Stats::default();
    for r in &results {
        stats.add(&r.2);
    }
    stats.snapshots = results.len();
    let outcomes: Vec<&Outcome> = results.iter().filter_map(|r| r.0.as_ref()).collect();
    if let Some(Outcome::Fails(c)) = outcomes.iter().find(|o| matches!(o, Outcome::Fails(_))) {
        return Ok((Verdict::Inconsistent(c.clone()), stats));
    }
    if let Some(Outcome::Open(why)) = outcomes.iter().find(|o| matches!(o, Outcome::Open(_))) {
        return Ok((Verdict::Unknown(why.clone()), stats));
    }
    let w = results.into_iter().find_map(|r| r.1).unwrap_or_else(|| Witness {
        initial: Snapshot::default(),
        filmstrip: Vec::new(),
        realizations: Vec::new(),
    });
    Ok((Verdict::Consistent(Box::new(w)), stats))
}

/// Re-checks a stored family: node sentences, links, and pairwise
/// agreement on shared symbols.
fn decentralized(setup: &Setup, dir: &Path) -> Result<(Verdict, Vec<Outcome>, Vec<Outcome>, Stats)> {
    let family = read_bundle(dir, &setup.nodes, setup.bounds.depth)?;
    let mut stats = Stats::default();
    for r in family.values() {
        if let RealizationBody::Ts(ts) = &r.body {
            stats.states_explored += ts.states.len();
        }
    }
    let mut nodes = Vec::new();
    for n in &setup.nodes {
        nodes.push(setup.node_outcome(n, &family[&n.name], &mut stats.traces_matched)?);
    }
    let mut links = Vec::new();
    for l in &setup.links {
        links.push(setup.link_outcome(l, &family, &mut stats.traces_matched)?);
    }
    let compat = setup.compatibility(&family)?;
    let overall = nodes.iter().chain(&links).cloned().fold(compat, Outcome::and);
    let witness = || {
        let initial = family
            .values()
            .find_map(|r| r.as_ts().map(|ts| ts.states[ts.initial[0]].snapshot.clone()))
            .unwrap_or_default();
        Witness {
            initial,
            filmstrip: Vec::new(),
            realizations: setup
                .nodes
                .iter()
                .map(|n| (n.name.clone(), family[&n.name].clone()))
                .collect(),
        }
    };
    Ok((verdict_of(overall, witness), nodes, links, stats))
}

fn member<'g>(g: &'g Graph, name: &str) -> Result<&'g Node> {
    g.node(name).ok_or_else(|| Error::Unresolved(format!("no node named {name}")))
}

/// Checks one network. `witnesses` is the bundle directory read by the
/// decentralized strategy.
pub fn check_network(g: &Graph, name: &str, strategy: Strategy, bounds: &Bounds, witnesses: Option<&Path>) -> Result<ConsistencyReport> {
    bounds.validate()?;
    let net = g.network(name)?;
    let setup = Setup::new(g, name, &net.nodes, &net.links, bounds)?;

    let (verdict, node_outcomes, link_outcomes, stats) = match strategy {
        Strategy::Decentralized => {
            let dir = witnesses.ok_or_else(|| Error::Witness("the decentralized strategy needs a witness directory".into()))?;
            let (v, nodes, links, stats) = decentralized(&setup, dir)?;
            let by_name: BTreeMap<&str, &Outcome> = setup.nodes.iter().map(|n| n.name.as_str()).zip(&nodes).collect();
            let models = net.nodes.iter().map(|n| kind_of(by_name[n.as_str()])).collect();
            (v, models, links.iter().map(kind_of).collect::<Vec<_>>(), stats)
        }
        _ => {
            let (v, stats) = search(&setup, strategy)?;
            let (models, links) = if v.kind() == VerdictKind::Consistent {
                (
                    vec![(VerdictKind::Consistent, None); net.nodes.len()],
                    vec![(VerdictKind::Consistent, None); net.links.len()],
                )
            } else {
                let standalone = |r: Result<(Verdict, Stats)>| r.map(|(v, _)| (v.kind(), v.detail()));
                let models = net
                    .nodes
                    .par_iter()
                    .map(|n| standalone(check_model(g, n, bounds)))
                    .collect::<Result<Vec<_>>>()?;
                let links = net
                    .links
                    .par_iter()
                    .map(|l| standalone(check_refinement(g, l, bounds)))
                    .collect::<Result<Vec<_>>>()?;
                (models, links)
            };
            (v, models, links, stats)
        }
    };

    let mut taxonomy: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut models = Vec::new();
    for (n, (kind, detail)) in net.nodes.iter().zip(node_outcomes) {
        let inst = member(g, n)?.institution();
        let tag = Taxonomy::new(Level::Semantic, aspect(inst), Scope::Horizontal);
        taxonomy.entry(tag.to_string()).or_default().push(format!("model {n}"));
        models.push(Entry {
            name: n.clone(),
            kind: inst.to_string(),
            verdict: kind,
            tag,
            detail,
        });
    }
    let mut links = Vec::new();
    for (l, (kind, detail)) in net.links.iter().zip(link_outcomes) {
        let abs = g.link(l).map(|l| l.abstract_node.clone()).unwrap_or_default();
        let inst = member(g, &abs)?.institution();
        let tag = Taxonomy::new(Level::Semantic, aspect(inst), Scope::Vertical);
        taxonomy.entry(tag.to_string()).or_default().push(format!("link {l}"));
        links.push(Entry {
            name: l.clone(),
            kind: format!("{} refinement", inst),
            verdict: kind,
            tag,
            detail,
        });
    }
    let behavioural = setup.nodes.iter().any(|n| n.institution() != InstitutionId::Cd);
    let tag = Taxonomy::new(
        Level::Semantic,
        if behavioural { Aspect::Behavioural } else { Aspect::Structural },
        Scope::Horizontal,
    );
    taxonomy.entry(tag.to_string()).or_default().push(format!("network {name}"));

    let witness = verdict
        .witness()
        .map(|w| w.realizations.iter().map(|(n, r)| digest(n, r)).collect())
        .unwrap_or_default();
    Ok(ConsistencyReport {
        network: name.to_string(),
        strategy: strategy.to_string(),
        compatibility: COMPATIBILITY,
        verdict: verdict.kind(),
        detail: verdict.detail(),
        models,
        links,
        bounds: *bounds,
        stats,
        taxonomy,
        witness,
        verdict_full: Some(verdict),
    })
}

/// Checks every network of the graph in declaration order.
pub fn check_all(g: &Graph, strategy: Strategy, bounds: &Bounds, witnesses: Option<&Path>) -> Result<Vec<ConsistencyReport>> {
    g.networks
        .iter()
        .map(|n| {
            let dir = witnesses.map(|d| d.join(&n.name));
            check_network(g, &n.name, strategy, bounds, dir.as_deref())
        })
        .collect()
}
