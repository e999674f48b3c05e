//! Satisfaction of machine and component sentences by transition systems.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::expr::{Scope, Value};
use crate::kernel::{Signature, Truth};
use crate::structural::{EventLabel, Object, SnapshotTs, TsState};

use super::cmp::Component;
use super::stm::{Effect, StateMachine};

struct ObjScope<'a> {
    attrs: &'a BTreeMap<String, Value>,
    bindings: &'a [(String, Value)],
}

impl Scope for ObjScope<'_> {
    fn attr(&self, name: &str) -> Option<Value> {
        self.attrs.get(name).cloned()
    }
    fn var(&self, name: &str) -> Option<Value> {
        self.bindings.iter().find(|(n, _)| n == name).map(|(_, v)| v.clone())
    }
}

/// The reaction of `m` in `state` to `ev`: target state and new attributes.
fn react(
    m: &StateMachine,
    sig: &Signature,
    obj: &Object,
    state: &str,
    ev: &EventLabel,
) -> Option<(String, BTreeMap<String, Value>)> {
    'next: for t in m.transitions.iter().filter(|t| t.source == state && t.trigger == ev.message) {
        if t.params.len() != ev.args.len() {
            continue;
        }
        let bindings: Vec<(String, Value)> = t.params.iter().cloned().zip(ev.args.iter().cloned()).collect();
        let mut attrs = obj.attrs.clone();
        if let Some(g) = &t.guard {
            let scope = ObjScope {
                attrs: &attrs,
                bindings: &bindings,
            };
            if g.eval(&scope).ok() != Some(Value::Bool(true)) {
                continue;
            }
        }
        for e in &t.effects {
            if let Effect::Assign { attr, expr } = e {
                let scope = ObjScope {
                    attrs: &attrs,
                    bindings: &bindings,
                };
                let Ok(v) = expr.eval(&scope) else { continue 'next };
                if !sig.attr_type(&obj.class, attr).is_some_and(|ty| ty.contains(&v)) {
                    continue 'next;
                }
                attrs.insert(attr.clone(), v);
            }
        }
        return Some((t.target.clone(), attrs));
    }
    None
}

fn controlled<'a>(st: &'a TsState, m: &StateMachine, sig: &Signature) -> Vec<(&'a String, &'a Object, &'a String)> {
    st.snapshot
        .objects
        .iter()
        .filter(|(_, o)| sig.is_subclass(&o.class, &m.class))
        .filter_map(|(id, o)| {
            let c = st.control.get(id)?;
            m.states.contains(c).then_some((id, o, c))
        })
        .collect()
}

/// Whether every object governed by `m` starts in its initial state and
/// moves exactly as `m` prescribes.
pub fn machine_admits(ts: &SnapshotTs, m: &StateMachine, sig: &Signature) -> Result<Truth> {
    let m = m.check(sig)?;
    for &i in &ts.initial {
        if controlled(&ts.states[i], &m, sig).iter().any(|(_, _, c)| **c != m.initial) {
            return Ok(Truth::False);
        }
    }
    for (i, label, j) in &ts.transitions {
        let (from, to) = (&ts.states[*i], &ts.states[*j]);
        for (id, obj, ctrl) in controlled(from, &m, sig) {
            let after = to.snapshot.objects.get(id);
            let after_ctrl = to.control.get(id);
            let expected = match label {
                Some(ev) if &ev.receiver == id => match react(&m, sig, obj, ctrl, ev) {
                    Some(r) => r,
                    None => return Ok(Truth::False),
                },
                _ => (ctrl.clone(), obj.attrs.clone()),
            };
            if after.map(|o| &o.attrs) != Some(&expected.1) || after_ctrl != Some(&expected.0) {
                return Ok(Truth::False);
            }
        }
    }
    Ok(if ts.explored_completely {
        Truth::True
    } else {
        Truth::Unknown
    })
}

/// Whether the part objects exist and every event a part receives comes
/// from itself, along a connector, or through a gate.
pub fn component_admits(ts: &SnapshotTs, c: &Component, sig: &Signature) -> Result<Truth> {
    for st in &ts.states {
        for p in &c.parts {
            match st.snapshot.objects.get(&p.name) {
                Some(o) if sig.is_subclass(&o.class, &p.class) => {}
                _ => return Ok(Truth::False),
            }
        }
    }
    for (_, label, _) in &ts.transitions {
        let Some(ev) = label else { continue };
        if c.part(&ev.receiver).is_none() {
            continue;
        }
        // senders outside the component are its environment
        let ok = if ev.sender == "env" || c.part(&ev.sender).is_none() {
            c.gate_messages(sig, &ev.receiver).contains(&ev.message)
        } else if ev.sender == ev.receiver {
            c.part(&ev.receiver)
                .is_some_and(|p| sig.reception(&p.class, &ev.message).is_some())
        } else {
            c.carries(sig, &ev.sender, &ev.receiver, &ev.message)
        };
        if !ok {
            return Ok(Truth::False);
        }
    }
    Ok(if ts.explored_completely {
        Truth::True
    } else {
        Truth::Unknown
    })
}
