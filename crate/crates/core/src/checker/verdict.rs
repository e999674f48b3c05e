//! Verdicts, witnesses, and reports.

use std::collections::BTreeMap;
use std::fmt::{self, Write};

use serde::Serialize;
use sha2::{Digest as _, Sha256};

use crate::error::Taxonomy;
use crate::interaction::TraceSet;
use crate::kernel::{Realization, RealizationBody, Truth};
use crate::structural::{Bounds, EventLabel, Snapshot, TsState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictKind {
    Consistent,
    Inconsistent,
    Unknown,
}

impl VerdictKind {
    /// Process exit status for this verdict.
    pub fn exit_code(self) -> i32 {
        match self {
            VerdictKind::Consistent => 0,
            VerdictKind::Inconsistent => 1,
            VerdictKind::Unknown => 2,
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Consistent => "CONSISTENT",
            VerdictKind::Inconsistent => "INCONSISTENT",
            VerdictKind::Unknown => "UNKNOWN",
        })
    }
}

/// What failed, and why; only issued after exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub subject: String,
    pub reason: String,
}

/// A realization family together with its presentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub initial: Snapshot,
    /// Labelled steps with the state each one reaches.
    pub filmstrip: Vec<(EventLabel, TsState)>,
    /// One realization per node, in node order.
    pub realizations: Vec<(String, Realization)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Consistent(Box<Witness>),
    Inconsistent(Certificate),
    /// Names the cap that was hit.
    Unknown(String),
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::Consistent(_) => VerdictKind::Consistent,
            Verdict::Inconsistent(_) => VerdictKind::Inconsistent,
            Verdict::Unknown(_) => VerdictKind::Unknown,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Consistent(w) => Some(w),
            _ => None,
        }
    }

    pub fn detail(&self) -> Option<String> {
        match self {
            Verdict::Consistent(_) => None,
            Verdict::Inconsistent(c) => Some(format!("{}: {}", c.subject, c.reason)),
            Verdict::Unknown(why) => Some(why.clone()),
        }
    }
}

/// Result of evaluating one obligation on one candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Holds,
    Fails(Certificate),
    Open(String),
}

impl Outcome {
    pub fn of(t: Truth, subject: &str, what: impl FnOnce() -> String) -> Outcome {
        match t {
            Truth::True => Outcome::Holds,
            Truth::False => Outcome::Fails(Certificate {
                subject: subject.to_string(),
                reason: what(),
            }),
            Truth::Unknown => Outcome::Open(format!("{subject}: {} undecided within bounds", what())),
        }
    }

    pub fn fails(subject: &str, reason: impl Into<String>) -> Outcome {
        Outcome::Fails(Certificate {
            subject: subject.to_string(),
            reason: reason.into(),
        })
    }

    /// Definite failure dominates, then openness.
    pub fn and(self, other: Outcome) -> Outcome {
        match (self, other) {
            (f @ Outcome::Fails(_), _) => f,
            (_, f @ Outcome::Fails(_)) => f,
            (o @ Outcome::Open(_), _) => o,
            (_, o) => o,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RealizationDigest {
    pub node: String,
    pub institution: String,
    pub states: usize,
    pub transitions: usize,
    pub hash: String,
}

/// States/transitions and a content hash; explicit trace sets count traces
/// and events instead.
pub fn digest(node: &str, r: &Realization) -> RealizationDigest {
    let (states, transitions, hash) = match &r.body {
        RealizationBody::Ts(ts) | RealizationBody::Traces(TraceSet::System { ts, .. }) => ts.digest(),
        RealizationBody::Traces(TraceSet::Explicit { traces, .. }) => {
            let mut text = String::new();
            for t in traces {
                let evs: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                let _ = writeln!(text, "{}", evs.join(" ; "));
            }
            let hash: String = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
            (traces.len(), traces.iter().map(Vec::len).sum(), hash)
        }
    };
    RealizationDigest {
        node: node.to_string(),
        institution: r.institution.to_string(),
        states,
        transitions,
        hash,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Entry {
    pub name: String,
    pub kind: String,
    pub verdict: VerdictKind,
    pub tag: Taxonomy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub snapshots: usize,
    /// No cap cut short any generation or search.
    #[serde(rename = "exploredCompletely")]
    pub explored_completely: bool,
    pub states_explored: usize,
    pub traces_matched: usize,
    pub pruned_overflows: usize,
    pub product_states: usize,
}

impl Default for Stats {
    fn default() -> Self {
        Stats {
            snapshots: 0,
            explored_completely: true,
            states_explored: 0,
            traces_matched: 0,
            pruned_overflows: 0,
            product_states: 0,
        }
    }
}

impl Stats {
    pub fn add(&mut self, o: &Stats) {
        self.snapshots += o.snapshots;
        self.explored_completely &= o.explored_completely;
        self.states_explored += o.states_explored;
        self.traces_matched += o.traces_matched;
        self.pruned_overflows += o.pruned_overflows;
        self.product_states += o.product_states;
    }
}

/// The definition of compatibility the verdicts are relative to.
pub const COMPATIBILITY: &str = "every refinement link holds as inclusion of realizations, and realizations of \
nodes sharing symbols have equal reducts on the shared signature";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub network: String,
    pub strategy: String,
    pub compatibility: &'static str,
    pub verdict: VerdictKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub models: Vec<Entry>,
    pub links: Vec<Entry>,
    pub bounds: Bounds,
    pub stats: Stats,
    /// Check names grouped by taxonomy tag.
    pub taxonomy: BTreeMap<String, Vec<String>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<RealizationDigest>,
    #[serde(skip)]
    pub verdict_full: Option<Verdict>,
}

impl ConsistencyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "network {} [{}]: {}", self.network, self.strategy, self.verdict);
        if let Some(d) = &self.detail {
            let _ = writeln!(out, "  {d}");
        }
        let _ = writeln!(out, "compatibility: {}", self.compatibility);
        let b = &self.bounds;
        let _ = writeln!(
            out,
            "bounds: max-objects {} depth {} queue-depth {} max-states {}",
            b.max_objects_per_class, b.depth, b.queue_depth, b.max_states
        );
        for (title, entries) in [("models", &self.models), ("links", &self.links)] {
            if entries.is_empty() {
                continue;
            }
            let _ = writeln!(out, "{title}:");
            for e in entries {
                let _ = write!(out, "  {} ({}): {} [{}]", e.name, e.kind, e.verdict, e.tag);
                if let Some(d) = &e.detail {
                    let _ = write!(out, " {d}");
                }
                out.push('\n');
            }
        }
        let s = &self.stats;
        let _ = writeln!(
            out,
            "stats: snapshots {} explored completely {} states {} traces matched {} pruned overflows {} product states {}",
            s.snapshots, s.explored_completely, s.states_explored, s.traces_matched, s.pruned_overflows, s.product_states
        );
        if let Some(w) = self.verdict_full.as_ref().and_then(Verdict::witness) {
            if !w.filmstrip.is_empty() {
                let _ = writeln!(out, "witness trace:");
                for (e, _) in &w.filmstrip {
                    let _ = writeln!(out, "  {e}");
                }
            }
        }
        out
    }
}
