//! The built-in translations between institutions and the evaluators for
//! derived models (hide along, reveal, with translation).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::behavioral::{Component, Connector, Gate, Part};
use crate::error::{Error, Result};
use crate::expr::{Type, Value};
use crate::interaction::{ArgPat, Interaction, TraceSet};
use crate::kernel::{
    reduct, translate_sentence, ClassSig, Comorphism, InstitutionId, InstitutionMorphism, Param, Realization,
    RealizationBody, Sentence, Signature, SignatureMorphism, Theory,
};
use crate::structural::{Bounds, Snapshot, SnapshotTs, TsState};

/// Generic part name given to a wrapped machine.
pub const GENERIC_PART: &str = "cid";

pub static SD2CD: InstitutionMorphism = InstitutionMorphism {
    name: "sd2cd",
    source: InstitutionId::Sd,
    target: InstitutionId::Cd,
    sig_project: sd2cd_theory,
    real_translate: sd2cd_realization,
};

pub static CMP2SD: InstitutionMorphism = InstitutionMorphism {
    name: "cmp2sd",
    source: InstitutionId::Cmp,
    target: InstitutionId::Sd,
    sig_project: cmp2sd_theory,
    real_translate: cmp2sd_realization,
};

pub static CD2STM: Comorphism = Comorphism {
    name: "cd2stm",
    source: InstitutionId::Cd,
    target: InstitutionId::Stm,
    theory_embed: cd2stm_embed,
    real_reduce: cd2stm_reduce,
};

pub static STM2CMP: Comorphism = Comorphism {
    name: "stm2cmp",
    source: InstitutionId::Stm,
    target: InstitutionId::Cmp,
    theory_embed: stm2cmp_embed,
    real_reduce: stm2cmp_reduce,
};

#[derive(Debug, Clone, Copy)]
pub enum Translation {
    Morphism(&'static InstitutionMorphism),
    Comorphism(&'static Comorphism),
}

impl Translation {
    pub fn name(&self) -> &'static str {
        match self {
            Translation::Morphism(m) => m.name,
            Translation::Comorphism(c) => c.name,
        }
    }

    pub fn endpoints(&self) -> (InstitutionId, InstitutionId) {
        match self {
            Translation::Morphism(m) => (m.source, m.target),
            Translation::Comorphism(c) => (c.source, c.target),
        }
    }
}

/// The closed registry of translations, by name.
pub fn registry() -> [Translation; 4] {
    [
        Translation::Morphism(&SD2CD),
        Translation::Morphism(&CMP2SD),
        Translation::Comorphism(&CD2STM),
        Translation::Comorphism(&STM2CMP),
    ]
}

pub fn lookup(name: &str) -> Option<Translation> {
    registry().into_iter().find(|t| t.name() == name)
}

fn merge_type(a: Type, b: Type) -> Result<Type> {
    match (a, b) {
        (Type::Bool, Type::Bool) => Ok(Type::Bool),
        (Type::Int { lo, hi }, Type::Int { lo: l2, hi: h2 }) => Ok(Type::Int {
            lo: lo.min(l2),
            hi: hi.max(h2),
        }),
        (Type::Enum(mut xs), Type::Enum(ys)) => {
            for y in ys {
                if !xs.contains(&y) {
                    xs.push(y);
                }
            }
            Ok(Type::Enum(xs))
        }
        (a, b) => Err(Error::Typing(format!("argument typed both {a} and {b}"))),
    }
}

/// The class diagram underlying some interactions: the lifeline classes,
/// and the messages as receptions of the receiving classes. Parameter types
/// come from declared variables and literal arguments.
pub fn sd2cd_project(interactions: &[&Interaction]) -> Result<Signature> {
    type Slot = (Option<String>, Option<Type>);
    let mut sig = Signature::default();
    let mut recs: BTreeMap<(String, String), Vec<Slot>> = BTreeMap::new();
    for i in interactions {
        for (_, c) in &i.lifelines {
            sig.classes.entry(c.clone()).or_default();
        }
        let declared: BTreeMap<&str, &Type> = i.vars.iter().map(|(n, t)| (n.as_str(), t)).collect();
        for m in i.messages() {
            let class = i
                .lifeline_class(&m.receiver)
                .ok_or_else(|| Error::Unresolved(format!("lifeline {}", m.receiver)))?
                .to_string();
            let slots = recs
                .entry((class, m.message.clone()))
                .or_insert_with(|| vec![(None, None); m.args.len()]);
            if slots.len() != m.args.len() {
                return Err(Error::Typing(format!("{} used with different arities", m.message)));
            }
            for (slot, a) in slots.iter_mut().zip(&m.args) {
                let (name, ty) = match a {
                    ArgPat::Any => (None, None),
                    ArgPat::Var(x) => (Some(x.clone()), declared.get(x.as_str()).map(|t| (*t).clone())),
                    ArgPat::Lit(Value::Bool(_)) => (None, Some(Type::Bool)),
                    ArgPat::Lit(Value::Int(v)) => (None, Some(Type::Int { lo: *v, hi: *v })),
                    ArgPat::Lit(Value::Enum(l)) => (None, Some(Type::Enum(vec![l.clone()]))),
                };
                if slot.0.is_none() {
                    slot.0 = name;
                }
                slot.1 = match (slot.1.take(), ty) {
                    (Some(a), Some(b)) => Some(merge_type(a, b)?),
                    (a, b) => a.or(b),
                };
            }
        }
    }
    for ((class, msg), slots) in recs {
        let mut params = Vec::new();
        for (k, (name, ty)) in slots.into_iter().enumerate() {
            let ty = ty.ok_or_else(|| Error::Typing(format!("argument {} of {msg} cannot be typed", k + 1)))?;
            params.push(Param {
                name: name.unwrap_or_else(|| format!("p{}", k + 1)),
                ty,
            });
        }
        let cs = sig.classes.get_mut(&class).expect("lifeline class");
        cs.receptions.insert(msg, params);
    }
    Ok(sig)
}

/// The theory of an interaction over its own projected signature.
pub fn interaction_theory(i: &Interaction) -> Result<Theory> {
    let sig = sd2cd_project(&[i])?;
    let checked = i.check(&sig)?;
    let mut th = Theory::new(InstitutionId::Sd, sig);
    th.push(Sentence::Interaction(checked));
    Ok(th)
}

fn expect_institution(th: &Theory, inst: InstitutionId, what: &str) -> Result<()> {
    if th.institution != inst {
        return Err(Error::SignatureMismatch(format!(
            "{what} expects a {inst} theory, got {}",
            th.institution
        )));
    }
    Ok(())
}

fn sd2cd_theory(th: &Theory) -> Result<Theory> {
    expect_institution(th, InstitutionId::Sd, "sd2cd")?;
    let is: Vec<&Interaction> = th.interactions().collect();
    let projected = sd2cd_project(&is)?;
    // interactions inherit their signature; keep whatever it declares
    let sig = th.signature.union(&projected)?;
    Ok(Theory::new(InstitutionId::Cd, sig))
}

/// One attribute-free object per lifeline.
fn typing_snapshot(th: &Theory) -> Snapshot {
    let mut s = Snapshot::default();
    for i in th.interactions() {
        for (l, c) in &i.lifelines {
            if !s.objects.contains_key(l) {
                s.add_object(l.clone(), c.clone(), &[]);
            }
        }
    }
    s
}

fn sd2cd_realization(th: &Theory, r: &Realization, _b: &Bounds) -> Result<Realization> {
    let snap = TsState::of(typing_snapshot(th));
    let sig = sd2cd_theory(th)?.signature;
    let Some(traces) = r.as_traces() else {
        return Err(Error::Typing("sd2cd translates trace sets".into()));
    };
    let ts = match traces {
        TraceSet::Explicit { traces, .. } => {
            // prefix tree
            let mut nodes: BTreeMap<Vec<_>, usize> = BTreeMap::new();
            nodes.insert(Vec::new(), 0);
            let mut transitions = Vec::new();
            for t in traces {
                for k in 1..=t.len() {
                    let prefix = t[..k].to_vec();
                    if nodes.contains_key(&prefix) {
                        continue;
                    }
                    let j = nodes.len();
                    let parent = nodes[&t[..k - 1].to_vec()];
                    nodes.insert(prefix, j);
                    transitions.push((parent, Some(t[k - 1].clone()), j));
                }
            }
            SnapshotTs::new(vec![snap; nodes.len()], vec![0], transitions, true)?
        }
        TraceSet::System { ts, .. } => ts.quotient(&|_| snap.clone(), &|e| Some(e.clone())),
    };
    Realization::ts(InstitutionId::Cd, sig, ts)
}

fn cmp2sd_theory(th: &Theory) -> Result<Theory> {
    expect_institution(th, InstitutionId::Cmp, "cmp2sd")?;
    let names: BTreeSet<String> = th
        .signature
        .classes
        .iter()
        .flat_map(|(c, cs)| std::iter::once(c.clone()).chain(cs.receptions.keys().cloned()))
        .collect();
    let mut sig = th.signature.restrict(&names);
    // inherited receptions become the class's own
    for (c, cs) in sig.classes.iter_mut() {
        let all = th.signature.all_receptions(c);
        *cs = ClassSig {
            parent: None,
            attrs: BTreeMap::new(),
            receptions: all,
        };
    }
    Ok(Theory::new(InstitutionId::Sd, sig))
}

fn cmp2sd_realization(th: &Theory, r: &Realization, b: &Bounds) -> Result<Realization> {
    let Some(ts) = r.as_ts() else {
        return Err(Error::Typing("cmp2sd translates transition systems".into()));
    };
    let sig = cmp2sd_theory(th)?.signature;
    Ok(Realization::traces(sig, TraceSet::system(Arc::clone(ts), b.depth)))
}

fn cd2stm_embed(th: &Theory) -> Result<Theory> {
    expect_institution(th, InstitutionId::Cd, "cd2stm")?;
    Ok(Theory {
        institution: InstitutionId::Stm,
        ..th.clone()
    })
}

fn cd2stm_reduce(r: &Realization) -> Result<Realization> {
    let Some(ts) = r.as_ts() else {
        return Err(Error::Typing("cd2stm reduces transition systems".into()));
    };
    Realization::ts(InstitutionId::Cd, r.signature.clone(), ts.erase_control())
}

fn stm2cmp_embed(th: &Theory) -> Result<Theory> {
    expect_institution(th, InstitutionId::Stm, "stm2cmp")?;
    let mut out = Theory {
        institution: InstitutionId::Cmp,
        ..th.clone()
    };
    for m in th.machines() {
        out.push(Sentence::Component(Component {
            name: m.name.clone(),
            parts: vec![Part {
                name: GENERIC_PART.into(),
                class: m.class.clone(),
                machine: m.name.clone(),
            }],
            connectors: Vec::new(),
            // a lone machine is open to all of its receptions
            gates: vec![Gate {
                name: "env".into(),
                part: GENERIC_PART.into(),
                messages: None,
            }],
        }));
    }
    Ok(out)
}

fn stm2cmp_reduce(r: &Realization) -> Result<Realization> {
    Realization::new(InstitutionId::Stm, r.signature.clone(), r.body.clone())
}

/// `th hide along mu`.
pub fn hide_along(th: &Theory, mu: &InstitutionMorphism) -> Result<Theory> {
    (mu.sig_project)(th)
}

/// Realizations of `th hide along mu` from realizations of `th`.
pub fn hide_along_real(th: &Theory, r: &Realization, mu: &InstitutionMorphism, b: &Bounds) -> Result<Realization> {
    (mu.real_translate)(th, r, b)
}

/// `th reveal names`: the sub-signature generated by `names` and the
/// sentences that only use it.
pub fn reveal(th: &Theory, names: &BTreeSet<String>) -> Result<Theory> {
    let known = th.signature.names();
    if let Some(n) = names.iter().find(|n| !known.contains(*n)) {
        return Err(Error::Unresolved(format!("{n} is not in the revealed model's signature")));
    }
    let sig = th.signature.restrict(names);
    let declared = sig.symbols();
    let mut out = Theory::new(th.institution, sig);
    for s in &th.sentences {
        if s.symbols(&th.signature).iter().all(|x| declared.contains(x)) {
            out.push(s.clone());
        }
    }
    Ok(out)
}

/// Like [`reveal`], but names the base may lack are ignored: revealing by
/// another model's signature keeps what the two share.
pub fn reveal_shared(th: &Theory, names: &BTreeSet<String>) -> Result<Theory> {
    let known = th.signature.names();
    let shared: BTreeSet<String> = names.intersection(&known).cloned().collect();
    reveal(th, &shared)
}

/// Realizations of a revealed theory: reducts along the inclusion.
pub fn reveal_real(revealed: &Theory, r: &Realization) -> Result<Realization> {
    let sigma = SignatureMorphism::inclusion(&revealed.signature, &r.signature)?;
    reduct(r, &sigma)
}

fn rename_component(c: &Component, parts: &BTreeMap<String, String>, sigma: &SignatureMorphism) -> Component {
    let p = |n: &String| parts.get(n).cloned().unwrap_or_else(|| n.clone());
    let cl = |n: &String| sigma.classes.get(n).cloned().unwrap_or_else(|| n.clone());
    let msgs = |ms: &Option<Vec<String>>| {
        ms.as_ref()
            .map(|v| v.iter().map(|m| sigma.messages.get(m).cloned().unwrap_or_else(|| m.clone())).collect())
    };
    Component {
        name: c.name.clone(),
        parts: c
            .parts
            .iter()
            .map(|x| Part {
                name: p(&x.name),
                class: cl(&x.class),
                machine: x.machine.clone(),
            })
            .collect(),
        connectors: c
            .connectors
            .iter()
            .map(|x| Connector {
                a: p(&x.a),
                b: p(&x.b),
                messages: msgs(&x.messages),
            })
            .collect(),
        gates: c
            .gates
            .iter()
            .map(|g| Gate {
                name: g.name.clone(),
                part: p(&g.part),
                messages: msgs(&g.messages),
            })
            .collect(),
    }
}

/// `th with translation rho with map`: embeds along the comorphism, then
/// renames. Map entries naming a component part rename that part; all
/// others rename signature symbols.
pub fn with_translation(th: &Theory, rho: &Comorphism, map: &[(String, String)]) -> Result<Theory> {
    let embedded = (rho.theory_embed)(th)?;
    if map.is_empty() {
        return Ok(embedded);
    }
    let part_names: BTreeSet<&String> = embedded.components().flat_map(|c| c.parts.iter().map(|p| &p.name)).collect();
    let mut parts = BTreeMap::new();
    let (mut classes, mut messages, mut assocs, mut attrs) =
        (BTreeMap::new(), BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
    let sig = &embedded.signature;
    for (from, to) in map {
        if part_names.contains(from) {
            parts.insert(from.clone(), to.clone());
        } else if sig.classes.contains_key(from) {
            classes.insert(from.clone(), to.clone());
        } else if sig.assocs.contains_key(from) {
            assocs.insert(from.clone(), to.clone());
        } else if sig.messages().contains(from) {
            messages.insert(from.clone(), to.clone());
        } else {
            let owners: Vec<&String> = sig.classes.iter().filter(|(_, cs)| cs.attrs.contains_key(from)).map(|(c, _)| c).collect();
            if owners.is_empty() {
                return Err(Error::Unresolved(format!("{from} in symbol map")));
            }
            for c in owners {
                attrs.insert((c.clone(), from.clone()), to.clone());
            }
        }
    }
    let sigma = SignatureMorphism::renaming(sig, &classes, &attrs, &messages, &assocs)?;
    let mut out = Theory::new(embedded.institution, sigma.target.clone());
    for s in &embedded.sentences {
        let t = match s {
            Sentence::Component(c) => Sentence::Component(rename_component(c, &parts, &sigma)),
            other => translate_sentence(other, &sigma)?,
        };
        out.push(t);
    }
    Ok(out)
}

/// Realizations of a translated theory, reduced back to the source.
pub fn with_translation_real(rho: &Comorphism, r: &Realization) -> Result<Realization> {
    (rho.real_reduce)(r)
}

/// `a and b`: amalgamation by agreement on shared symbols.
pub fn union(a: &Theory, b: &Theory) -> Result<Theory> {
    if a.institution != b.institution {
        return Err(Error::SignatureMismatch(format!(
            "cannot combine a {} theory with a {} theory",
            a.institution, b.institution
        )));
    }
    let generic = |t: &Theory| t.components().any(|c| c.parts.iter().any(|p| p.name == GENERIC_PART));
    if generic(a) && generic(b) {
        return Err(Error::Ambiguity(format!(
            "part name {GENERIC_PART} is left generic in both operands"
        )));
    }
    let mut out = Theory::new(a.institution, a.signature.union(&b.signature)?);
    for s in a.sentences.iter().chain(&b.sentences) {
        out.push(s.clone());
    }
    Ok(out)
}

/// Whether a realization body is a transition system.
pub fn is_ts(r: &Realization) -> bool {
    matches!(r.body, RealizationBody::Ts(_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::parse_sd;
    use crate::structural::EventLabel;

    #[test]
    fn registry_endpoints() {
        let names: Vec<&str> = registry().iter().map(|t| t.name()).collect();
        assert_eq!(names, ["sd2cd", "cmp2sd", "cd2stm", "stm2cmp"]);
        assert_eq!(lookup("sd2cd").unwrap().endpoints(), (InstitutionId::Sd, InstitutionId::Cd));
        assert!(lookup("cd2sd").is_none());
    }

    #[test]
    fn empty_interaction_projects_to_empty_diagram() {
        let i = parse_sd("interaction I { }").unwrap();
        assert!(sd2cd_project(&[&i]).unwrap().is_empty());
    }

    #[test]
    fn one_lifeline_one_reception() {
        let i = parse_sd("interaction I { lifeline a: C ; msg env -> a : m }").unwrap();
        let sig = sd2cd_project(&[&i]).unwrap();
        assert_eq!(sig.classes.len(), 1);
        assert!(sig.reception("C", "m").is_some());
    }

    #[test]
    fn untypable_argument() {
        let i = parse_sd("interaction I { lifeline a: C ; msg env -> a : m(_) }").unwrap();
        assert!(sd2cd_project(&[&i]).is_err());
    }

    fn sd_real(th: &Theory, traces: Vec<Vec<EventLabel>>) -> Realization {
        Realization::traces(th.signature.clone(), TraceSet::explicit(traces, 4))
    }

    #[test]
    fn prefix_trees() {
        let th = interaction_theory(
            &parse_sd("interaction I { lifeline a: C ; msg env -> a : x ; msg env -> a : y }").unwrap(),
        )
        .unwrap();
        let r = sd2cd_realization(&th, &sd_real(&th, vec![vec![]]), &Bounds::default()).unwrap();
        assert_eq!(r.as_ts().unwrap().states.len(), 1);
        let a = EventLabel::new("env", "a", "x", vec![]);
        let b = EventLabel::new("env", "a", "y", vec![]);
        let r = sd2cd_realization(&th, &sd_real(&th, vec![vec![a.clone()], vec![a, b]]), &Bounds::default()).unwrap();
        assert_eq!(r.as_ts().unwrap().states.len(), 3);
        assert_eq!(r.institution, InstitutionId::Cd);
    }

    #[test]
    fn generic_part_clash() {
        let cd = crate::structural::parse_cd("classdiagram D class C { reception e }")
            .unwrap()
            .theory()
            .unwrap();
        let mut stm = cd2stm_embed(&cd).unwrap();
        stm.push(Sentence::Machine(
            crate::behavioral::parse_stm("statemachine M for C { init A }").unwrap(),
        ));
        let c = with_translation(&stm, &STM2CMP, &[]).unwrap();
        assert!(matches!(union(&c, &c), Err(Error::Ambiguity(_))));
        let named = with_translation(&stm, &STM2CMP, &[("cid".into(), "atm".into())]).unwrap();
        let comp = named.components().next().unwrap();
        assert_eq!(comp.parts[0].name, "atm");
    }

    #[test]
    fn reveal_everything_is_identity() {
        let cd = crate::structural::parse_cd(
            "classdiagram D class C { attr b: Bool } class E inv C : self.b",
        )
        .unwrap()
        .theory()
        .unwrap();
        let all = cd.signature.names();
        assert_eq!(reveal(&cd, &all).unwrap(), cd);
        let only_e = reveal(&cd, &["E".to_string()].into()).unwrap();
        assert!(only_e.sentences.is_empty());
        assert!(reveal(&cd, &["Z".to_string()].into()).is_err());
    }
}
