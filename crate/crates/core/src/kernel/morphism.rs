use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::structural::{EventLabel, Object, Snapshot, TsState};

use super::signature::{AssocEnd, AssocSig, ClassSig, Signature};
use super::{satisfies, Realization, RealizationBody, Sentence};

/// A kind-preserving, injective renaming of one signature into another.
/// Attributes are keyed by (declaring class, name); messages are global.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureMorphism {
    pub source: Signature,
    pub target: Signature,
    pub classes: BTreeMap<String, String>,
    pub attrs: BTreeMap<(String, String), String>,
    pub messages: BTreeMap<String, String>,
    pub assocs: BTreeMap<String, String>,
}

fn identity_maps(
    sig: &Signature,
) -> (
    BTreeMap<String, String>,
    BTreeMap<(String, String), String>,
    BTreeMap<String, String>,
    BTreeMap<String, String>,
) {
    let classes = sig.classes.keys().map(|c| (c.clone(), c.clone())).collect();
    let attrs = sig
        .classes
        .iter()
        .flat_map(|(c, cs)| cs.attrs.keys().map(move |a| ((c.clone(), a.clone()), a.clone())))
        .collect();
    let messages = sig.messages().into_iter().map(|m| (m.clone(), m)).collect();
    let assocs = sig.assocs.keys().map(|a| (a.clone(), a.clone())).collect();
    (classes, attrs, messages, assocs)
}

fn injective<K, V: Ord>(m: &BTreeMap<K, V>) -> bool {
    m.values().collect::<BTreeSet<_>>().len() == m.len()
}

impl SignatureMorphism {
    pub fn identity(sig: &Signature) -> Self {
        SignatureMorphism::inclusion(sig, sig).expect("identity is an inclusion")
    }

    /// The inclusion of `sub` into `sup`.
    pub fn inclusion(sub: &Signature, sup: &Signature) -> Result<Self> {
        let (classes, attrs, messages, assocs) = identity_maps(sub);
        SignatureMorphism::new(sub.clone(), sup.clone(), classes, attrs, messages, assocs)
    }

    /// Renames `source` by the given partial maps (missing entries are kept)
    /// and uses the renamed signature as target.
    pub fn renaming(
        source: &Signature,
        classes: &BTreeMap<String, String>,
        attrs: &BTreeMap<(String, String), String>,
        messages: &BTreeMap<String, String>,
        assocs: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let (mut c0, mut a0, mut m0, mut s0) = identity_maps(source);
        for (k, v) in c0.iter_mut() {
            if let Some(n) = classes.get(k) {
                *v = n.clone();
            }
        }
        for (k, v) in a0.iter_mut() {
            if let Some(n) = attrs.get(k) {
                *v = n.clone();
            }
        }
        for (k, v) in m0.iter_mut() {
            if let Some(n) = messages.get(k) {
                *v = n.clone();
            }
        }
        for (k, v) in s0.iter_mut() {
            if let Some(n) = assocs.get(k) {
                *v = n.clone();
            }
        }
        let mut m = SignatureMorphism {
            source: source.clone(),
            target: Signature::default(),
            classes: c0,
            attrs: a0,
            messages: m0,
            assocs: s0,
        };
        m.target = m.apply(source)?;
        m.validate()?;
        Ok(m)
    }

    pub fn new(
        source: Signature,
        target: Signature,
        classes: BTreeMap<String, String>,
        attrs: BTreeMap<(String, String), String>,
        messages: BTreeMap<String, String>,
        assocs: BTreeMap<String, String>,
    ) -> Result<Self> {
        let m = SignatureMorphism {
            source,
            target,
            classes,
            attrs,
            messages,
            assocs,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let (c, a, m, s) = identity_maps(&self.source);
        let total = c.keys().all(|k| self.classes.contains_key(k))
            && a.keys().all(|k| self.attrs.contains_key(k))
            && m.keys().all(|k| self.messages.contains_key(k))
            && s.keys().all(|k| self.assocs.contains_key(k));
        if !total {
            return Err(Error::Unresolved("signature morphism is not total on its source".into()));
        }
        if !(injective(&self.classes) && injective(&self.messages) && injective(&self.assocs)) {
            return Err(Error::Typing("signature morphism is not injective".into()));
        }
        // attributes must stay apart within each target class
        let mut per_class: BTreeSet<(String, String)> = BTreeSet::new();
        for ((c, _), t) in &self.attrs {
            if !per_class.insert((self.classes[c].clone(), t.clone())) {
                return Err(Error::Typing("signature morphism is not injective on attributes".into()));
            }
        }
        let image = self.apply(&self.source)?;
        self.target
            .check_includes(&image)
            .map_err(|e| Error::SignatureMismatch(format!("translated source not in target: {e}")))
    }

    /// The image of `sig` (which must be the source or a part of it).
    pub fn apply(&self, sig: &Signature) -> Result<Signature> {
        let cls = |c: &str| {
            self.classes
                .get(c)
                .cloned()
                .ok_or_else(|| Error::Unresolved(format!("class {c}")))
        };
        let mut out = Signature::default();
        for (c, cs) in &sig.classes {
            let mut attrs = BTreeMap::new();
            for (a, t) in &cs.attrs {
                let n = self
                    .attrs
                    .get(&(c.clone(), a.clone()))
                    .ok_or_else(|| Error::Unresolved(format!("attribute {c}.{a}")))?;
                attrs.insert(n.clone(), t.clone());
            }
            let mut receptions = BTreeMap::new();
            for (m, ps) in &cs.receptions {
                let n = self
                    .messages
                    .get(m)
                    .ok_or_else(|| Error::Unresolved(format!("message {m}")))?;
                receptions.insert(n.clone(), ps.clone());
            }
            out.classes.insert(
                cls(c)?,
                ClassSig {
                    parent: cs.parent.as_deref().map(cls).transpose()?,
                    attrs,
                    receptions,
                },
            );
        }
        for (n, a) in &sig.assocs {
            let t = self
                .assocs
                .get(n)
                .ok_or_else(|| Error::Unresolved(format!("association {n}")))?;
            out.assocs.insert(
                t.clone(),
                AssocSig {
                    a: AssocEnd {
                        class: cls(&a.a.class)?,
                        role: a.a.role.clone(),
                    },
                    b: AssocEnd {
                        class: cls(&a.b.class)?,
                        role: a.b.role.clone(),
                    },
                },
            );
        }
        Ok(out)
    }

    /// `then ∘ self`: first `self`, then `then`.
    pub fn compose(&self, then: &SignatureMorphism) -> Result<SignatureMorphism> {
        if self.target != then.source {
            return Err(Error::Typing("composed morphisms do not meet".into()));
        }
        let mid = &self.target;
        let classes = self
            .classes
            .iter()
            .map(|(k, v)| (k.clone(), then.classes[v].clone()))
            .collect();
        let mut attrs = BTreeMap::new();
        for ((c, a), v) in &self.attrs {
            let mc = &self.classes[c];
            let owner = mid
                .attr_owner(mc, v)
                .ok_or_else(|| Error::Unresolved(format!("attribute {mc}.{v}")))?;
            attrs.insert((c.clone(), a.clone()), then.attrs[&(owner, v.clone())].clone());
        }
        let messages = self
            .messages
            .iter()
            .map(|(k, v)| (k.clone(), then.messages[v].clone()))
            .collect();
        let assocs = self
            .assocs
            .iter()
            .map(|(k, v)| (k.clone(), then.assocs[v].clone()))
            .collect();
        SignatureMorphism::new(self.source.clone(), then.target.clone(), classes, attrs, messages, assocs)
    }

    fn class_preimage(&self) -> BTreeMap<&str, &str> {
        self.classes.iter().map(|(k, v)| (v.as_str(), k.as_str())).collect()
    }

    fn preimage(&self) -> Preimage<'_> {
        let attrs = self
            .classes
            .keys()
            .map(|sc| {
                let kept = self
                    .source
                    .all_attrs(sc)
                    .into_iter()
                    .filter_map(|(decl, a, _)| self.attrs.get(&(decl, a.clone())).map(|t| (a, t.as_str())))
                    .collect();
                (sc.as_str(), kept)
            })
            .collect();
        Preimage {
            sigma: self,
            classes: self.class_preimage(),
            messages: self.messages.iter().map(|(k, v)| (v.as_str(), k.as_str())).collect(),
            attrs,
        }
    }

    /// Whether reducts along this morphism change nothing.
    fn is_identity(&self) -> bool {
        self.source == self.target
            && self.classes.iter().all(|(k, v)| k == v)
            && self.attrs.iter().all(|((_, k), v)| k == v)
            && self.messages.iter().all(|(k, v)| k == v)
            && self.assocs.iter().all(|(k, v)| k == v)
    }

    /// Reduct of one snapshot: keeps objects of image classes, attributes
    /// and links of image symbols, all under their source names.
    pub fn reduct_snapshot(&self, s: &Snapshot) -> Snapshot {
        self.preimage().snapshot(s)
    }
}

/// Inverse maps of a morphism, built once per reduct.
struct Preimage<'a> {
    sigma: &'a SignatureMorphism,
    classes: BTreeMap<&'a str, &'a str>,
    messages: BTreeMap<&'a str, &'a str>,
    /// Per source class: source attribute and its target name.
    attrs: BTreeMap<&'a str, Vec<(String, &'a str)>>,
}

impl Preimage<'_> {
    fn snapshot(&self, s: &Snapshot) -> Snapshot {
        let mut out = Snapshot::default();
        for (id, o) in &s.objects {
            let Some(sc) = self.classes.get(o.class.as_str()) else {
                continue;
            };
            let attrs = self.attrs[sc]
                .iter()
                .filter_map(|(a, t)| o.attrs.get(*t).map(|v| (a.clone(), v.clone())))
                .collect();
            out.objects.insert(
                id.clone(),
                Object {
                    class: sc.to_string(),
                    attrs,
                },
            );
        }
        for (sa, ta) in &self.sigma.assocs {
            if let Some(set) = s.links.get(ta) {
                let kept: BTreeSet<(String, String)> = set
                    .iter()
                    .filter(|(a, b)| out.objects.contains_key(a) && out.objects.contains_key(b))
                    .cloned()
                    .collect();
                if !kept.is_empty() {
                    out.links.insert(sa.clone(), kept);
                }
            }
        }
        out
    }

    fn label(&self, e: &EventLabel, kept: Option<&Snapshot>) -> Option<EventLabel> {
        let m = *self.messages.get(e.message.as_str())?;
        if let Some(s) = kept {
            if !s.objects.contains_key(&e.receiver) {
                return None;
            }
        }
        Some(EventLabel {
            message: m.to_string(),
            ..e.clone()
        })
    }

    fn state(&self, st: &TsState, snapshots: &RefCell<HashMap<Snapshot, Snapshot>>) -> TsState {
        let snapshot = snapshots
            .borrow_mut()
            .entry(st.snapshot.clone())
            .or_insert_with(|| self.snapshot(&st.snapshot))
            .clone();
        let control = st
            .control
            .iter()
            .filter(|(o, _)| snapshot.objects.contains_key(*o))
            .map(|(o, c)| (o.clone(), c.clone()))
            .collect();
        let queues = st
            .queues
            .iter()
            .filter(|(o, _)| snapshot.objects.contains_key(*o))
            .map(|(o, q)| {
                let q: Vec<EventLabel> = q.iter().filter_map(|e| self.label(e, Some(&snapshot))).collect();
                (o.clone(), q)
            })
            .filter(|(_, q)| !q.is_empty())
            .collect();
        TsState {
            snapshot,
            control,
            queues,
        }
    }
}

/// Reduct of a realization along `sigma`: hidden objects, attributes, links
/// and events disappear; states that become equal are merged.
pub fn reduct(r: &Realization, sigma: &SignatureMorphism) -> Result<Realization> {
    if sigma.target != r.signature {
        return Err(Error::Typing("reduct: morphism target differs from the realization's signature".into()));
    }
    if sigma.is_identity() {
        return Ok(r.clone());
    }
    let pre = sigma.preimage();
    let body = match &r.body {
        RealizationBody::Ts(ts) => {
            let kept_receiver = |st: &TsState, e: &EventLabel| {
                st.snapshot
                    .objects
                    .get(&e.receiver)
                    .is_some_and(|o| pre.classes.contains_key(o.class.as_str()))
            };
            // labels are filtered against the source state of each transition
            let mut relabeled = (**ts).clone();
            for (a, l, _) in relabeled.transitions.iter_mut() {
                if let Some(e) = l {
                    *l = if kept_receiver(&ts.states[*a], e) { pre.label(e, None) } else { None };
                }
            }
            let memo = RefCell::new(HashMap::new());
            let q = relabeled.quotient(&|s| pre.state(s, &memo), &|e| Some(e.clone()));
            RealizationBody::Ts(Arc::new(q))
        }
        RealizationBody::Traces(t) => RealizationBody::Traces(t.map_events(&|e| pre.label(e, None))),
    };
    Realization::new(r.institution, sigma.source.clone(), body)
}

/// Renames every symbol of `phi` along `sigma`.
pub fn translate_sentence(phi: &Sentence, sigma: &SignatureMorphism) -> Result<Sentence> {
    let class = |c: &str| {
        sigma
            .classes
            .get(c)
            .cloned()
            .ok_or_else(|| Error::Unresolved(format!("class {c}")))
    };
    match phi {
        Sentence::Invariant { class: c, expr } => {
            let src = &sigma.source;
            let renamed = expr.rename_attrs(&|a| {
                let owner = src.attr_owner(c, a)?;
                sigma.attrs.get(&(owner, a.to_string())).cloned()
            })?;
            Ok(Sentence::Invariant {
                class: class(c)?,
                expr: renamed,
            })
        }
        Sentence::Multiplicity { assoc, end, mult } => Ok(Sentence::Multiplicity {
            assoc: sigma
                .assocs
                .get(assoc)
                .cloned()
                .ok_or_else(|| Error::Unresolved(format!("association {assoc}")))?,
            end: *end,
            mult: *mult,
        }),
        Sentence::Interaction(i) => Ok(Sentence::Interaction(i.renamed(&sigma.classes, &sigma.messages)?)),
        Sentence::Machine(m) => Ok(Sentence::Machine(m.renamed(sigma)?)),
        Sentence::Component(c) => Err(Error::Typing(format!(
            "component {} cannot be translated along a signature morphism",
            c.name
        ))),
    }
}

/// The satisfaction condition for one instance.
pub fn check_satisfaction_condition(sigma: &SignatureMorphism, r: &Realization, phi: &Sentence) -> Result<bool> {
    let left = satisfies(&reduct(r, sigma)?, phi)?;
    let right = satisfies(r, &translate_sentence(phi, sigma)?)?;
    Ok(left == right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Expr, Type, Value};
    use crate::kernel::{InstitutionId, Symbol};
    use crate::interaction::TraceSet;
    use crate::structural::{SnapshotTs, TsState};

    fn sig_ab() -> Signature {
        let mut s = Signature::default();
        s.classes.insert(
            "A".into(),
            ClassSig {
                attrs: [("x".to_string(), Type::Bool)].into(),
                receptions: [("a".to_string(), vec![])].into(),
                ..Default::default()
            },
        );
        s.classes.insert(
            "B".into(),
            ClassSig {
                receptions: [("b".to_string(), vec![])].into(),
                ..Default::default()
            },
        );
        s
    }

    fn ts_ab() -> SnapshotTs {
        let mut s0 = Snapshot::default();
        s0.add_object("a1", "A", &[("x", Value::Bool(false))]);
        s0.add_object("b1", "B", &[]);
        let mut s1 = s0.clone();
        s1.objects.get_mut("a1").unwrap().attrs.insert("x".into(), Value::Bool(true));
        SnapshotTs::new(
            vec![TsState::of(s0), TsState::of(s1)],
            vec![0],
            vec![
                (0, Some(EventLabel::new("env", "a1", "a", vec![])), 1),
                (1, Some(EventLabel::new("env", "b1", "b", vec![])), 1),
            ],
            true,
        )
        .unwrap()
    }

    #[test]
    fn identity_reduct_is_identity() {
        let r = Realization::ts(InstitutionId::Cd, sig_ab(), ts_ab()).unwrap();
        let id = SignatureMorphism::identity(&sig_ab());
        assert_eq!(reduct(&r, &id).unwrap(), r);
    }

    #[test]
    fn reduct_to_one_class_drops_objects_and_events() {
        let full = sig_ab();
        let sub = full.restrict(&["A".to_string(), "x".to_string(), "a".to_string()].into());
        let inc = SignatureMorphism::inclusion(&sub, &full).unwrap();
        let r = Realization::ts(InstitutionId::Cd, full, ts_ab()).unwrap();
        let red = reduct(&r, &inc).unwrap();
        let ts = red.as_ts().unwrap();
        assert_eq!(ts.states.len(), 2);
        for st in &ts.states {
            assert!(!st.snapshot.objects.contains_key("b1"));
        }
        // the b-event became hidden, the hidden self-loop vanished
        assert_eq!(ts.transitions.len(), 1);
        assert_eq!(ts.transitions[0].1.as_ref().unwrap().message, "a");
    }

    #[test]
    fn renaming_translates_invariants() {
        let sig = sig_ab();
        let sigma = SignatureMorphism::renaming(
            &sig,
            &BTreeMap::new(),
            &[(("A".to_string(), "x".to_string()), "y".to_string())].into(),
            &BTreeMap::new(),
            &BTreeMap::new(),
        )
        .unwrap();
        assert!(sigma.target.symbols().contains(&Symbol::Attr("A".into(), "y".into())));
        let phi = Sentence::Invariant {
            class: "A".into(),
            expr: Expr::Attr("x".into()),
        };
        let t = translate_sentence(&phi, &sigma).unwrap();
        assert_eq!(
            t,
            Sentence::Invariant {
                class: "A".into(),
                expr: Expr::Attr("y".into())
            }
        );
    }

    #[test]
    fn non_injective_maps_are_rejected() {
        let sig = sig_ab();
        let r = SignatureMorphism::renaming(
            &sig,
            &[("B".to_string(), "A".to_string())].into(),
            &BTreeMap::new(),
            &BTreeMap::new(),
            &BTreeMap::new(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn trace_reduct_filters_messages() {
        let mut s = Signature::default();
        s.classes.insert(
            "C".into(),
            ClassSig {
                receptions: [("a".to_string(), vec![]), ("b".to_string(), vec![])].into(),
                ..Default::default()
            },
        );
        let sub = s.restrict(&["C".to_string(), "a".to_string()].into());
        let t = TraceSet::explicit(
            [vec![EventLabel::new("env", "c", "a", vec![]), EventLabel::new("env", "c", "b", vec![])]],
            2,
        );
        let r = Realization::traces(s.clone(), t);
        let red = reduct(&r, &SignatureMorphism::inclusion(&sub, &s).unwrap()).unwrap();
        let want = TraceSet::explicit([vec![EventLabel::new("env", "c", "a", vec![])]], 2);
        assert_eq!(red.as_traces().unwrap(), &want);
    }
}
