//! Institution framework: signatures, sentences, realizations, satisfaction,
//! and the operational shape of institution (co)morphisms.

mod morphism;
mod signature;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

pub use morphism::{check_satisfaction_condition, reduct, translate_sentence, SignatureMorphism};
pub use signature::{same_param_types, AssocEnd, AssocSig, ClassSig, End, Param, Signature, Symbol};

use crate::behavioral::{component_admits, machine_admits, Component, StateMachine};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::interaction::{sd_satisfaction, Interaction, SatMode, TraceSet};
use crate::structural::{invariant_holds, multiplicity_holds, Bounds, Multiplicity, SnapshotTs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum InstitutionId {
    #[serde(rename = "CD")]
    Cd,
    #[serde(rename = "STM")]
    Stm,
    #[serde(rename = "SD")]
    Sd,
    #[serde(rename = "CMP")]
    Cmp,
}

impl fmt::Display for InstitutionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstitutionId::Cd => "CD",
            InstitutionId::Stm => "STM",
            InstitutionId::Sd => "SD",
            InstitutionId::Cmp => "CMP",
        })
    }
}

impl InstitutionId {
    /// Whether realizations of this institution are snapshot transition systems.
    pub fn uses_snapshots(self) -> bool {
        !matches!(self, InstitutionId::Sd)
    }
}

/// Three-valued outcome of a bounded check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Truth {
    True,
    False,
    /// A bound was hit before the question could be settled.
    Unknown,
}

impl Truth {
    pub fn from_bool(b: bool) -> Truth {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }

    pub fn and(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::Unknown, _) | (_, Truth::Unknown) => Truth::Unknown,
            _ => Truth::True,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sentence {
    /// `forall self: class . expr`
    Invariant { class: String, expr: Expr },
    /// The multiplicity at `end` of `assoc`: how many objects at that end
    /// each object at the opposite end is linked to.
    Multiplicity {
        assoc: String,
        end: End,
        mult: Multiplicity,
    },
    Machine(StateMachine),
    Component(Component),
    Interaction(Interaction),
}

impl Sentence {
    /// The least institution in which the sentence is expressible.
    pub fn institution(&self) -> InstitutionId {
        match self {
            Sentence::Invariant { .. } | Sentence::Multiplicity { .. } => InstitutionId::Cd,
            Sentence::Machine(_) => InstitutionId::Stm,
            Sentence::Component(_) => InstitutionId::Cmp,
            Sentence::Interaction(_) => InstitutionId::Sd,
        }
    }

    /// Whether the sentence can be evaluated on realizations of `inst`.
    pub fn evaluable_in(&self, inst: InstitutionId) -> bool {
        match self.institution() {
            InstitutionId::Cd => inst.uses_snapshots(),
            InstitutionId::Stm => matches!(inst, InstitutionId::Stm | InstitutionId::Cmp),
            InstitutionId::Cmp => inst == InstitutionId::Cmp,
            InstitutionId::Sd => inst == InstitutionId::Sd,
        }
    }

    /// Signature symbols the sentence mentions.
    pub fn symbols(&self, sig: &Signature) -> Vec<Symbol> {
        match self {
            Sentence::Invariant { class, expr } => {
                let mut out = vec![Symbol::Class(class.clone())];
                let mut attrs = Default::default();
                expr.attrs(&mut attrs);
                for a in attrs {
                    let owner = sig.attr_owner(class, &a).unwrap_or_else(|| class.clone());
                    out.push(Symbol::Attr(owner, a));
                }
                out
            }
            Sentence::Multiplicity { assoc, .. } => vec![Symbol::Assoc(assoc.clone())],
            Sentence::Machine(m) => m.symbols(sig),
            Sentence::Component(c) => c.symbols(),
            Sentence::Interaction(i) => i.symbols(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Sentence::Invariant { class, expr } => format!("inv {class} : {expr}"),
            Sentence::Multiplicity { assoc, end, mult } => {
                format!("multiplicity {assoc}.{end:?} = {mult}")
            }
            Sentence::Machine(m) => format!("statemachine {}", m.name),
            Sentence::Component(c) => format!("component {}", c.name),
            Sentence::Interaction(i) => format!("interaction {}", i.name),
        }
    }
}

/// One parsed view (or derived model) in its institution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theory {
    pub institution: InstitutionId,
    pub signature: Signature,
    pub sentences: Vec<Sentence>,
}

impl Theory {
    pub fn new(institution: InstitutionId, signature: Signature) -> Self {
        Theory {
            institution,
            signature,
            sentences: Vec::new(),
        }
    }

    /// Adds a sentence unless an equal one is already present.
    pub fn push(&mut self, s: Sentence) {
        if !self.sentences.contains(&s) {
            self.sentences.push(s);
        }
    }

    pub fn machines(&self) -> impl Iterator<Item = &StateMachine> {
        self.sentences.iter().filter_map(|s| match s {
            Sentence::Machine(m) => Some(m),
            _ => None,
        })
    }

    pub fn components(&self) -> impl Iterator<Item = &Component> {
        self.sentences.iter().filter_map(|s| match s {
            Sentence::Component(c) => Some(c),
            _ => None,
        })
    }

    pub fn interactions(&self) -> impl Iterator<Item = &Interaction> {
        self.sentences.iter().filter_map(|s| match s {
            Sentence::Interaction(i) => Some(i),
            _ => None,
        })
    }

    /// The class-diagram part: same signature, only static sentences.
    pub fn data_theory(&self) -> Theory {
        Theory {
            institution: InstitutionId::Cd,
            signature: self.signature.clone(),
            sentences: self
                .sentences
                .iter()
                .filter(|s| s.institution() == InstitutionId::Cd)
                .cloned()
                .collect(),
        }
    }

    /// Checks that every symbol used by a sentence is declared.
    pub fn check_symbols(&self) -> Result<()> {
        let declared = self.signature.symbols();
        for s in &self.sentences {
            for sym in s.symbols(&self.signature) {
                if !declared.contains(&sym) {
                    return Err(Error::Unresolved(format!("{sym} used by '{}'", s.label())));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RealizationBody {
    Ts(Arc<SnapshotTs>),
    Traces(TraceSet),
}

/// A semantic witness of a theory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    pub institution: InstitutionId,
    pub signature: Signature,
    pub body: RealizationBody,
}

impl Realization {
    pub fn ts(institution: InstitutionId, signature: Signature, ts: SnapshotTs) -> Result<Self> {
        Realization::new(institution, signature, RealizationBody::Ts(Arc::new(ts)))
    }

    pub fn traces(signature: Signature, traces: TraceSet) -> Self {
        Realization {
            institution: InstitutionId::Sd,
            signature,
            body: RealizationBody::Traces(traces),
        }
    }

    pub fn new(institution: InstitutionId, signature: Signature, body: RealizationBody) -> Result<Self> {
        let ok = match &body {
            RealizationBody::Ts(_) => institution.uses_snapshots(),
            RealizationBody::Traces(_) => !institution.uses_snapshots(),
        };
        if !ok {
            return Err(Error::Typing(format!(
                "realization body does not match institution {institution}"
            )));
        }
        Ok(Realization {
            institution,
            signature,
            body,
        })
    }

    pub fn as_ts(&self) -> Option<&Arc<SnapshotTs>> {
        match &self.body {
            RealizationBody::Ts(t) => Some(t),
            RealizationBody::Traces(_) => None,
        }
    }

    pub fn as_traces(&self) -> Option<&TraceSet> {
        match &self.body {
            RealizationBody::Traces(t) => Some(t),
            RealizationBody::Ts(_) => None,
        }
    }
}

/// Bounded three-valued satisfaction. Interaction sentences use `mode`.
pub fn satisfaction(r: &Realization, phi: &Sentence, mode: SatMode, bounds: &Bounds) -> Result<Truth> {
    if !phi.evaluable_in(r.institution) {
        return Err(Error::Typing(format!(
            "sentence '{}' of institution {} evaluated on a {} realization",
            phi.label(),
            phi.institution(),
            r.institution
        )));
    }
    let declared = r.signature.symbols();
    for sym in phi.symbols(&r.signature) {
        if !declared.contains(&sym) {
            return Err(Error::Unresolved(format!("{sym} is not in the realization's signature")));
        }
    }
    match (phi, &r.body) {
        (Sentence::Invariant { class, expr }, RealizationBody::Ts(ts)) => {
            for st in &ts.states {
                if !invariant_holds(&st.snapshot, &r.signature, class, expr)? {
                    return Ok(Truth::False);
                }
            }
            Ok(Truth::True)
        }
        (Sentence::Multiplicity { assoc, end, mult }, RealizationBody::Ts(ts)) => {
            for st in &ts.states {
                if !multiplicity_holds(&st.snapshot, &r.signature, assoc, *end, mult)? {
                    return Ok(Truth::False);
                }
            }
            Ok(Truth::True)
        }
        (Sentence::Machine(m), RealizationBody::Ts(ts)) => machine_admits(ts, m, &r.signature),
        (Sentence::Component(c), RealizationBody::Ts(ts)) => component_admits(ts, c, &r.signature),
        (Sentence::Interaction(i), RealizationBody::Traces(t)) => Ok(sd_satisfaction(t, i, mode, bounds)),
        _ => Err(Error::Typing("sentence and realization kinds differ".into())),
    }
}

/// Two-valued satisfaction (`Unknown` counts as not satisfied), with the
/// default existential reading of interactions.
pub fn satisfies(r: &Realization, phi: &Sentence) -> Result<bool> {
    Ok(satisfaction(r, phi, SatMode::Exists, &Bounds::default())? == Truth::True)
}

/// An institution morphism: projects a richer institution onto a poorer one.
pub struct InstitutionMorphism {
    pub name: &'static str,
    pub source: InstitutionId,
    pub target: InstitutionId,
    pub sig_project: fn(&Theory) -> Result<Theory>,
    /// Translates a realization of the given source theory.
    pub real_translate: fn(&Theory, &Realization, &Bounds) -> Result<Realization>,
}

/// An institution comorphism: encodes one institution into another.
pub struct Comorphism {
    pub name: &'static str,
    pub source: InstitutionId,
    pub target: InstitutionId,
    pub theory_embed: fn(&Theory) -> Result<Theory>,
    pub real_reduce: fn(&Realization) -> Result<Realization>,
}

impl fmt::Debug for InstitutionMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "morphism {}: {} -> {}", self.name, self.source, self.target)
    }
}

impl fmt::Debug for Comorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "comorphism {}: {} -> {}", self.name, self.source, self.target)
    }
}
