//! Run-to-completion execution of a component over an initial snapshot.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::hash::Hash;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Scope, Type, Value};
use crate::kernel::{Sentence, Theory};
use crate::structural::{Bounds, EventLabel, Snapshot, SnapshotTs, TsState};

use super::cmp::Component;
use super::stm::{Effect, SendTarget, StateMachine};

/// The global state of the operational semantics, in readable form.
pub type Configuration = TsState;

/// A labelled transition system explored on demand.
pub trait Lts {
    type State: Clone + Eq + Hash;
    fn initial(&mut self) -> Vec<Self::State>;
    fn successors(&mut self, s: &Self::State) -> Vec<(Option<EventLabel>, Self::State)>;
}

/// An explicit system seen as an [`Lts`] over state indices.
pub struct ExplicitLts<'a> {
    ts: &'a SnapshotTs,
    adj: Vec<Vec<(Option<&'a EventLabel>, usize)>>,
}

impl<'a> ExplicitLts<'a> {
    pub fn new(ts: &'a SnapshotTs) -> Self {
        ExplicitLts { ts, adj: ts.adjacency() }
    }
}

impl Lts for ExplicitLts<'_> {
    type State = usize;
    fn initial(&mut self) -> Vec<usize> {
        self.ts.initial.clone()
    }
    fn successors(&mut self, s: &usize) -> Vec<(Option<EventLabel>, usize)> {
        self.adj[*s].iter().map(|(l, j)| (l.cloned(), *j)).collect()
    }
}

/// A component together with its machines and data theory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assembly {
    pub component: Component,
    /// One checked machine per part, in part order.
    pub machines: Vec<StateMachine>,
    pub data: Theory,
}

impl Assembly {
    pub fn new(component: Component, machines: &[StateMachine], data: Theory) -> Result<Assembly> {
        let sig = &data.signature;
        let refs: Vec<&StateMachine> = machines.iter().collect();
        let diags = component.check(sig, &refs);
        if !diags.is_empty() {
            return Err(Error::Diagnostics(diags));
        }
        let mut per_part = Vec::new();
        for p in &component.parts {
            let m = machines.iter().find(|m| m.name == p.machine).expect("checked above");
            per_part.push(m.check(sig)?);
        }
        Ok(Assembly {
            component,
            machines: per_part,
            data,
        })
    }

    /// Uses the last component of the theory and the machines it declares.
    pub fn from_theory(th: &Theory) -> Result<Assembly> {
        let comp = th
            .components()
            .last()
            .cloned()
            .ok_or_else(|| Error::Typing("theory declares no component".into()))?;
        let machines: Vec<StateMachine> = th.machines().cloned().collect();
        Assembly::new(comp, &machines, th.data_theory())
    }

    /// Objects bound to the parts: in part order, the first injective choice
    /// of objects of the exact part class (in id order) such that connected
    /// parts are linked whenever an association between their classes exists.
    pub fn bind(&self, init: &Snapshot) -> Option<Vec<String>> {
        let mut chosen: Vec<String> = Vec::new();
        fn go(a: &Assembly, init: &Snapshot, i: usize, chosen: &mut Vec<String>) -> bool {
            let parts = &a.component.parts;
            if i == parts.len() {
                return true;
            }
            let sig = &a.data.signature;
            for (id, o) in &init.objects {
                if o.class != parts[i].class || chosen.contains(id) {
                    continue;
                }
                let ok = a.component.connectors.iter().all(|c| {
                    let other = if c.a == parts[i].name {
                        &c.b
                    } else if c.b == parts[i].name {
                        &c.a
                    } else {
                        return true;
                    };
                    let Some(j) = parts.iter().position(|p| &p.name == other) else {
                        return true;
                    };
                    if j >= i {
                        return true;
                    }
                    let between: Vec<&String> = sig
                        .assocs
                        .iter()
                        .filter(|(_, s)| {
                            (sig.is_subclass(&parts[i].class, &s.a.class) && sig.is_subclass(&parts[j].class, &s.b.class))
                                || (sig.is_subclass(&parts[j].class, &s.a.class)
                                    && sig.is_subclass(&parts[i].class, &s.b.class))
                        })
                        .map(|(n, _)| n)
                        .collect();
                    between.is_empty()
                        || between.iter().any(|n| {
                            init.links.get(*n).is_some_and(|set| {
                                set.contains(&(id.clone(), chosen[j].clone()))
                                    || set.contains(&(chosen[j].clone(), id.clone()))
                            })
                        })
                });
                if !ok {
                    continue;
                }
                chosen.push(id.clone());
                if go(a, init, i + 1, chosen) {
                    return true;
                }
                chosen.pop();
            }
            false
        }
        go(self, init, 0, &mut chosen).then_some(chosen)
    }

    /// Prepares execution from `init`; `None` when no part binding exists.
    pub fn instantiate(&self, init: &Snapshot, bounds: &Bounds) -> Result<Option<Instance<'_>>> {
        let Some(bound) = self.bind(init) else {
            return Ok(None);
        };
        Instance::new(self, init, &bound, bounds).map(Some)
    }

    /// All successor moves of a configuration.
    pub fn step(&self, c: &Configuration, bounds: &Bounds) -> Result<Vec<(Option<EventLabel>, Configuration)>> {
        let snapshot = &c.snapshot;
        for p in &self.component.parts {
            if !snapshot.objects.contains_key(&p.name) {
                return Err(Error::Typing(format!("configuration lacks part object {}", p.name)));
            }
        }
        // parts are already bound to objects named after them
        let ids: Vec<String> = self.component.parts.iter().map(|p| p.name.clone()).collect();
        let mut inst = Instance::new(self, snapshot, &ids, bounds)?;
        let packed = inst.pack(c)?;
        let moves = inst.successors(&packed);
        Ok(moves.into_iter().map(|(l, s)| (l, inst.unpack(&s))).collect())
    }

    /// Breadth-first state space from `init`; `None` when no part binding exists.
    pub fn generate_ts(&self, init: &Snapshot, bounds: &Bounds) -> Result<Option<(SnapshotTs, GenStats)>> {
        match self.instantiate(init, bounds)? {
            None => Ok(None),
            Some(mut inst) => Ok(Some(inst.explore())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GenStats {
    pub states: usize,
    pub transitions: usize,
    pub pruned_overflows: usize,
    pub explored_completely: bool,
}

/// Packed machine-level state: part attributes, control indices, queue slots.
pub type Packed = Box<[i64]>;

struct PartRt {
    name: String,
    attrs: Vec<(String, Type)>,
    attr_off: usize,
    /// (state index, message) -> transition indices in declaration order
    triggers: HashMap<(usize, String), Vec<usize>>,
    roles: BTreeMap<String, Option<usize>>,
    /// (message, parameter types) for environment injection
    gate: Vec<(String, Vec<Vec<Value>>)>,
    invariants: Vec<Expr>,
    param_types: BTreeMap<String, Vec<Type>>,
}

/// One execution context: an assembly bound to an initial snapshot.
pub struct Instance<'a> {
    asm: &'a Assembly,
    base: Snapshot,
    parts: Vec<PartRt>,
    ctrl_off: usize,
    queue_off: usize,
    queue_depth: usize,
    bounds: Bounds,
    events: Vec<EventLabel>,
    event_ids: HashMap<EventLabel, i64>,
    init: Packed,
    pub pruned_overflows: usize,
}

fn encode(t: &Type, v: &Value) -> i64 {
    match (t, v) {
        (_, Value::Bool(b)) => *b as i64,
        (_, Value::Int(x)) => *x,
        (Type::Enum(lits), Value::Enum(l)) => lits.iter().position(|x| x == l).unwrap_or(0) as i64,
        _ => 0,
    }
}

fn decode(t: &Type, x: i64) -> Value {
    match t {
        Type::Bool => Value::Bool(x != 0),
        Type::Int { .. } => Value::Int(x),
        Type::Enum(lits) => Value::Enum(lits[x as usize].clone()),
    }
}

fn cartesian(types: &[Type]) -> Vec<Vec<Value>> {
    let mut acc: Vec<Vec<Value>> = vec![Vec::new()];
    for t in types {
        let mut next = Vec::new();
        for p in &acc {
            for v in t.values() {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        acc = next;
    }
    acc
}

struct PartScope<'a> {
    part: &'a PartRt,
    vals: &'a [i64],
    bindings: &'a [(String, Value)],
}

impl Scope for PartScope<'_> {
    fn attr(&self, name: &str) -> Option<Value> {
        let i = self.part.attrs.iter().position(|(a, _)| a == name)?;
        Some(decode(&self.part.attrs[i].1, self.vals[self.part.attr_off + i]))
    }
    fn var(&self, name: &str) -> Option<Value> {
        self.bindings.iter().find(|(n, _)| n == name).map(|(_, v)| v.clone())
    }
}

impl<'a> Instance<'a> {
    fn new(asm: &'a Assembly, init: &Snapshot, bound: &[String], bounds: &Bounds) -> Result<Instance<'a>> {
        let sig = &asm.data.signature;
        let comp = &asm.component;
        let rename: BTreeMap<String, String> = bound
            .iter()
            .zip(&comp.parts)
            .map(|(id, p)| (id.clone(), p.name.clone()))
            .collect();
        for id in init.objects.keys() {
            if !rename.contains_key(id) && comp.part(id).is_some() {
                return Err(Error::Ambiguity(format!("object id {id} clashes with a part name")));
            }
        }
        let base = init.rename_objects(&rename);
        let mut parts = Vec::new();
        let mut off = 0;
        for (pi, p) in comp.parts.iter().enumerate() {
            let m = &asm.machines[pi];
            let attrs: Vec<(String, Type)> = sig.all_attrs(&p.class).into_iter().map(|(_, a, t)| (a, t)).collect();
            let mut triggers: HashMap<(usize, String), Vec<usize>> = HashMap::new();
            for (ti, t) in m.transitions.iter().enumerate() {
                let s = m.states.iter().position(|x| *x == t.source).expect("checked machine");
                triggers.entry((s, t.trigger.clone())).or_default().push(ti);
            }
            let mut roles = BTreeMap::new();
            for t in &m.transitions {
                for e in &t.effects {
                    if let Effect::Send {
                        target: SendTarget::Role(r),
                        ..
                    } = e
                    {
                        let mut linked = Vec::new();
                        for (assoc, end) in sig.navigate(&p.class, r) {
                            linked.extend(base.linked(&assoc, end, &p.name).into_iter().map(str::to_string));
                        }
                        let target = match linked.as_slice() {
                            [one] => comp.parts.iter().position(|q| &q.name == one),
                            _ => None,
                        };
                        roles.insert(r.clone(), target);
                    }
                }
            }
            let gate = comp
                .gate_messages(sig, &p.name)
                .into_iter()
                .map(|msg| {
                    let types: Vec<Type> = sig
                        .reception(&p.class, &msg)
                        .map(|ps| ps.iter().map(|x| x.ty.clone()).collect())
                        .unwrap_or_default();
                    let tuples = cartesian(&types);
                    (msg, tuples)
                })
                .collect();
            let invariants = asm
                .data
                .sentences
                .iter()
                .filter_map(|s| match s {
                    Sentence::Invariant { class, expr } if sig.is_subclass(&p.class, class) => Some(expr.clone()),
                    _ => None,
                })
                .collect();
            let param_types = sig
                .all_receptions(&p.class)
                .into_iter()
                .map(|(m, ps)| (m, ps.into_iter().map(|x| x.ty).collect()))
                .collect();
            let n = attrs.len();
            parts.push(PartRt {
                name: p.name.clone(),
                attrs,
                attr_off: off,
                triggers,
                roles,
                gate,
                invariants,
                param_types,
            });
            off += n;
        }
        let ctrl_off = off;
        let queue_off = ctrl_off + parts.len();
        let len = queue_off + parts.len() * bounds.queue_depth;
        let mut init_vals = vec![-1i64; len];
        for (pi, p) in parts.iter().enumerate() {
            let o = &base.objects[&p.name];
            for (i, (a, t)) in p.attrs.iter().enumerate() {
                let v = o
                    .attrs
                    .get(a)
                    .ok_or_else(|| Error::Typing(format!("attribute {a} of {} has no value", p.name)))?;
                init_vals[p.attr_off + i] = encode(t, v);
            }
            let m = &asm.machines[pi];
            init_vals[ctrl_off + pi] = m.states.iter().position(|s| *s == m.initial).expect("checked machine") as i64;
        }
        Ok(Instance {
            asm,
            base,
            parts,
            ctrl_off,
            queue_off,
            queue_depth: bounds.queue_depth,
            bounds: *bounds,
            events: Vec::new(),
            event_ids: HashMap::new(),
            init: init_vals.into_boxed_slice(),
            pruned_overflows: 0,
        })
    }

    fn intern(&mut self, e: EventLabel) -> i64 {
        if let Some(i) = self.event_ids.get(&e) {
            return *i;
        }
        let i = self.events.len() as i64;
        self.events.push(e.clone());
        self.event_ids.insert(e, i);
        i
    }

    fn qslot(&self, part: usize) -> usize {
        self.queue_off + part * self.queue_depth
    }

    fn qlen(&self, st: &[i64], part: usize) -> usize {
        let q = &st[self.qslot(part)..self.qslot(part) + self.queue_depth];
        q.iter().take_while(|x| **x >= 0).count()
    }

    /// Appends an event; false on overflow.
    fn enqueue(&self, st: &mut [i64], part: usize, ev: i64) -> bool {
        let n = self.qlen(st, part);
        if n >= self.queue_depth {
            return false;
        }
        st[self.qslot(part) + n] = ev;
        true
    }

    fn pack(&mut self, c: &Configuration) -> Result<Packed> {
        let mut st = self.init.to_vec();
        for (pi, p) in self.parts.iter().enumerate() {
            let o = c
                .snapshot
                .objects
                .get(&p.name)
                .ok_or_else(|| Error::Typing(format!("missing part object {}", p.name)))?;
            for (i, (a, t)) in p.attrs.iter().enumerate() {
                if let Some(v) = o.attrs.get(a) {
                    st[p.attr_off + i] = encode(t, v);
                }
            }
            let m = &self.asm.machines[pi];
            if let Some(cs) = c.control.get(&p.name) {
                st[self.ctrl_off + pi] = m
                    .states
                    .iter()
                    .position(|s| s == cs)
                    .ok_or_else(|| Error::Typing(format!("{cs} is not a state of {}", m.name)))?
                    as i64;
            }
        }
        let names: Vec<String> = self.parts.iter().map(|p| p.name.clone()).collect();
        for (pi, name) in names.iter().enumerate() {
            let q = c.queues.get(name).cloned().unwrap_or_default();
            if q.len() > self.queue_depth {
                return Err(Error::Typing(format!("queue of {name} exceeds the queue bound")));
            }
            for (k, e) in q.into_iter().enumerate() {
                let id = self.intern(e);
                st[self.qslot(pi) + k] = id;
            }
        }
        Ok(st.into_boxed_slice())
    }

    pub fn unpack(&self, st: &[i64]) -> Configuration {
        let mut snapshot = self.base.clone();
        let mut control = BTreeMap::new();
        let mut queues = BTreeMap::new();
        for (pi, p) in self.parts.iter().enumerate() {
            let o = snapshot.objects.get_mut(&p.name).expect("part object");
            for (i, (a, t)) in p.attrs.iter().enumerate() {
                o.attrs.insert(a.clone(), decode(t, st[p.attr_off + i]));
            }
            let m = &self.asm.machines[pi];
            control.insert(p.name.clone(), m.states[st[self.ctrl_off + pi] as usize].clone());
            let q: Vec<EventLabel> = (0..self.qlen(st, pi))
                .map(|k| self.events[st[self.qslot(pi) + k] as usize].clone())
                .collect();
            if !q.is_empty() {
                queues.insert(p.name.clone(), q);
            }
        }
        TsState {
            snapshot,
            control,
            queues,
        }
    }

    /// Tries transition `ti` of part `pi` on event `ev` in `work` (whose
    /// queue already had the event removed). `Ok(None)`: disabled;
    /// `Err(())`: a send overflowed.
    fn try_fire(&mut self, work: &[i64], pi: usize, ti: usize, ev: &EventLabel) -> Result<Option<Vec<i64>>, ()> {
        let asm = self.asm;
        let m = &asm.machines[pi];
        let t = &m.transitions[ti];
        let bindings: Vec<(String, Value)> = t.params.iter().cloned().zip(ev.args.iter().cloned()).collect();
        let part = &self.parts[pi];
        let mut vals = work.to_vec();
        if let Some(g) = &t.guard {
            let scope = PartScope {
                part,
                vals: &vals,
                bindings: &bindings,
            };
            if g.eval(&scope).ok() != Some(Value::Bool(true)) {
                return Ok(None);
            }
        }
        let mut sends: Vec<(usize, EventLabel)> = Vec::new();
        for e in &t.effects {
            let part = &self.parts[pi];
            let scope = PartScope {
                part,
                vals: &vals,
                bindings: &bindings,
            };
            match e {
                Effect::Assign { attr, expr } => {
                    let Some(i) = part.attrs.iter().position(|(a, _)| a == attr) else {
                        return Ok(None);
                    };
                    let Ok(v) = expr.eval(&scope) else {
                        return Ok(None);
                    };
                    if !part.attrs[i].1.contains(&v) {
                        return Ok(None);
                    }
                    vals[part.attr_off + i] = encode(&part.attrs[i].1, &v);
                }
                Effect::Send { target, message, args } => {
                    let mut argv = Vec::new();
                    for a in args {
                        let Ok(v) = a.eval(&scope) else {
                            return Ok(None);
                        };
                        argv.push(v);
                    }
                    let to = match target {
                        SendTarget::Env => continue,
                        SendTarget::SelfObject => pi,
                        SendTarget::Role(r) => match part.roles.get(r).copied().flatten() {
                            Some(q) => q,
                            None => return Ok(None),
                        },
                    };
                    let rp = &self.parts[to];
                    if to != pi && !asm.component.carries(&asm.data.signature, &part.name, &rp.name, message) {
                        return Ok(None);
                    }
                    let Some(types) = rp.param_types.get(message) else {
                        return Ok(None);
                    };
                    if types.len() != argv.len() || !types.iter().zip(&argv).all(|(t, v)| t.contains(v)) {
                        return Ok(None);
                    }
                    sends.push((to, EventLabel::new(&part.name, &rp.name, message, argv)));
                }
            }
        }
        let target = m.states.iter().position(|s| *s == t.target).expect("checked machine");
        vals[self.ctrl_off + pi] = target as i64;
        {
            let part = &self.parts[pi];
            let scope = PartScope {
                part,
                vals: &vals,
                bindings: &[],
            };
            for inv in &part.invariants {
                if inv.eval(&scope).ok() != Some(Value::Bool(true)) {
                    return Ok(None);
                }
            }
        }
        for (to, e) in sends {
            let id = self.intern(e);
            if !self.enqueue(&mut vals, to, id) {
                return Err(());
            }
        }
        Ok(Some(vals))
    }

    fn explore(&mut self) -> (SnapshotTs, GenStats) {
        let mut index: HashMap<Packed, usize> = HashMap::new();
        let mut packed: Vec<Packed> = Vec::new();
        let mut level: Vec<usize> = Vec::new();
        let mut transitions: Vec<(usize, Option<EventLabel>, usize)> = Vec::new();
        let mut complete = true;
        let init = self.init.clone();
        index.insert(init.clone(), 0);
        packed.push(init);
        level.push(0);
        let mut frontier = VecDeque::from([0usize]);
        while let Some(i) = frontier.pop_front() {
            let cur = packed[i].clone();
            let at_cap = level[i] >= self.bounds.depth;
            for (label, next) in self.successors(&cur) {
                let j = match index.get(&next) {
                    Some(j) => *j,
                    None => {
                        if at_cap || packed.len() >= self.bounds.max_states {
                            complete = false;
                            continue;
                        }
                        let j = packed.len();
                        index.insert(next.clone(), j);
                        packed.push(next);
                        level.push(level[i] + 1);
                        frontier.push_back(j);
                        j
                    }
                };
                transitions.push((i, label, j));
            }
        }
        let states: Vec<TsState> = packed.iter().map(|p| self.unpack(p)).collect();
        let ts = SnapshotTs::new(states, vec![0], transitions, complete).expect("indices are valid");
        let stats = GenStats {
            states: ts.states.len(),
            transitions: ts.transitions.len(),
            pruned_overflows: self.pruned_overflows,
            explored_completely: complete,
        };
        (ts, stats)
    }

    /// The initial packed state.
    pub fn initial_state(&self) -> Packed {
        self.init.clone()
    }

    /// Every dispatch and environment-injection move, in a fixed order.
    pub fn successors(&mut self, st: &Packed) -> Vec<(Option<EventLabel>, Packed)> {
        let mut out = Vec::new();
        for pi in 0..self.parts.len() {
            let slot = self.qslot(pi);
            let head = st[slot];
            if head < 0 {
                continue;
            }
            let ev = self.events[head as usize].clone();
            let mut work = st.to_vec();
            work.copy_within(slot + 1..slot + self.queue_depth, slot);
            work[slot + self.queue_depth - 1] = -1;
            let ctrl = st[self.ctrl_off + pi] as usize;
            let cands = self.parts[pi]
                .triggers
                .get(&(ctrl, ev.message.clone()))
                .cloned()
                .unwrap_or_default();
            let mut fired = false;
            for ti in cands {
                if self.asm.machines[pi].transitions[ti].params.len() != ev.args.len() {
                    continue;
                }
                match self.try_fire(&work, pi, ti, &ev) {
                    Ok(Some(next)) => {
                        out.push((Some(ev.clone()), next.into_boxed_slice()));
                        fired = true;
                        break;
                    }
                    Ok(None) => {}
                    Err(()) => {
                        self.pruned_overflows += 1;
                        fired = true;
                        break;
                    }
                }
            }
            if !fired {
                out.push((None, work.into_boxed_slice()));
            }
        }
        for pi in 0..self.parts.len() {
            let gate = std::mem::take(&mut self.parts[pi].gate);
            for (msg, tuples) in &gate {
                for args in tuples {
                    let e = EventLabel::new("env", &self.parts[pi].name, msg, args.clone());
                    let id = self.intern(e);
                    let mut work = st.to_vec();
                    if self.enqueue(&mut work, pi, id) {
                        out.push((None, work.into_boxed_slice()));
                    } else {
                        self.pruned_overflows += 1;
                    }
                }
            }
            self.parts[pi].gate = gate;
        }
        out
    }
}

impl Lts for Instance<'_> {
    type State = Packed;
    fn initial(&mut self) -> Vec<Packed> {
        vec![self.init.clone()]
    }
    fn successors(&mut self, s: &Packed) -> Vec<(Option<EventLabel>, Packed)> {
        Instance::successors(self, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavioral::{parse_cmp, parse_stm};
    use crate::structural::parse_cd;

    fn single(machine: &str, cmp: &str) -> Assembly {
        let cd = parse_cd("classdiagram D class C { attr n: Int 0..3 reception e reception f }")
            .unwrap()
            .theory()
            .unwrap();
        Assembly::new(parse_cmp(cmp).unwrap(), &[parse_stm(machine).unwrap()], cd).unwrap()
    }

    fn init() -> Snapshot {
        let mut s = Snapshot::default();
        s.add_object("c1", "C", &[("n", Value::Int(0))]);
        s
    }

    fn config(asm: &Assembly, control: &str, queue: &[&str]) -> Configuration {
        let inst = asm.instantiate(&init(), &Bounds::default()).unwrap().unwrap();
        let mut c = inst.unpack(&inst.initial_state());
        c.control.insert("o".into(), control.into());
        if !queue.is_empty() {
            c.queues.insert("o".into(), queue.iter().map(|m| EventLabel::new("env", "o", m, vec![])).collect());
        }
        c
    }

    #[test]
    fn single_enabled_transition() {
        let asm = single(
            "statemachine M for C { init Idle ; state Idle, Done ; Idle -> Done on e }",
            "component S { part o: C machine M }",
        );
        let moves = asm.step(&config(&asm, "Idle", &["e"]), &Bounds::default()).unwrap();
        assert_eq!(moves.len(), 1);
        assert_eq!(moves[0].0.as_ref().unwrap().message, "e");
        assert_eq!(moves[0].1.control["o"], "Done");
        assert!(moves[0].1.queues.is_empty());
    }

    #[test]
    fn unmatched_event_is_discarded() {
        let asm = single(
            "statemachine M for C { init Idle ; state Idle, Done ; Idle -> Done on e }",
            "component S { part o: C machine M }",
        );
        let moves = asm.step(&config(&asm, "Idle", &["f"]), &Bounds::default()).unwrap();
        assert_eq!(moves.len(), 1);
        assert!(moves[0].0.is_none());
        assert_eq!(moves[0].1.control["o"], "Idle");
        assert!(moves[0].1.queues.is_empty());
    }

    #[test]
    fn out_of_range_assignment_disables() {
        let asm = single(
            "statemachine M for C { init A ; state A ; A -> A on e / n := self.n + 4 }",
            "component S { part o: C machine M }",
        );
        let moves = asm.step(&config(&asm, "A", &["e"]), &Bounds::default()).unwrap();
        assert!(moves[0].0.is_none());
    }

    #[test]
    fn zero_parts_give_one_state() {
        let cd = parse_cd("classdiagram D class C").unwrap().theory().unwrap();
        let asm = Assembly::new(parse_cmp("component E { }").unwrap(), &[], cd).unwrap();
        let (ts, stats) = asm.generate_ts(&Snapshot::default(), &Bounds::default()).unwrap().unwrap();
        assert_eq!(ts.states.len(), 1);
        assert!(stats.explored_completely);
    }

    #[test]
    fn depth_cap_marks_incomplete() {
        let asm = single(
            "statemachine M for C { init A ; state A ; A -> A on e }",
            "component S { part o: C machine M ; gate g -> o : e }",
        );
        let b = Bounds {
            depth: 2,
            queue_depth: 3,
            ..Bounds::default()
        };
        let (ts, stats) = asm.generate_ts(&init(), &b).unwrap().unwrap();
        // empty queue, one pending, two pending
        assert_eq!(ts.states.len(), 3);
        assert!(!stats.explored_completely);
        let b = Bounds {
            depth: 2,
            queue_depth: 2,
            ..Bounds::default()
        };
        let (ts, stats) = asm.generate_ts(&init(), &b).unwrap().unwrap();
        assert_eq!(ts.states.len(), 3);
        assert!(stats.explored_completely);
        assert!(stats.pruned_overflows > 0);
    }
}
