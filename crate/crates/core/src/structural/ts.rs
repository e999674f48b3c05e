//! Snapshot transition systems, bounds, event labels and the explicit text
//! format used for witnesses.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expr::Value;
use crate::syntax::{Cursor, Tok};

use super::snapshot::Snapshot;

/// Caps for every bounded search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Bounds {
    pub max_objects_per_class: usize,
    pub depth: usize,
    pub queue_depth: usize,
    pub max_states: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_objects_per_class: 2,
            depth: 60,
            queue_depth: 2,
            max_states: 100_000,
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("max-objects", self.max_objects_per_class),
            ("depth", self.depth),
            ("queue-depth", self.queue_depth),
            ("max-states", self.max_states),
        ] {
            if v == 0 {
                return Err(Error::Typing(format!("bound {name} must be positive")));
            }
        }
        Ok(())
    }
}

/// One observable event: `sender -> receiver : message(args)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EventLabel {
    pub sender: String,
    pub receiver: String,
    pub message: String,
    pub args: Vec<Value>,
}

impl EventLabel {
    pub fn new(sender: &str, receiver: &str, message: &str, args: Vec<Value>) -> Self {
        EventLabel {
            sender: sender.into(),
            receiver: receiver.into(),
            message: message.into(),
            args,
        }
    }

    pub fn parse(c: &mut Cursor) -> Result<EventLabel> {
        let sender = c.expect_ident()?;
        c.expect_punct("->")?;
        let receiver = c.expect_ident()?;
        c.expect_punct(":")?;
        let message = c.expect_ident()?;
        let mut args = Vec::new();
        if c.eat_punct("(") && !c.eat_punct(")") {
            loop {
                args.push(Value::parse(c)?);
                if c.eat_punct(")") {
                    break;
                }
                c.expect_punct(",")?;
            }
        }
        Ok(EventLabel {
            sender,
            receiver,
            message,
            args,
        })
    }

    pub fn parse_str(s: &str) -> Result<EventLabel> {
        let mut c = Cursor::new(s)?;
        let e = EventLabel::parse(&mut c)?;
        c.expect_end()?;
        Ok(e)
    }
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} : {}", self.sender, self.receiver, self.message)?;
        if !self.args.is_empty() {
            let a: Vec<String> = self.args.iter().map(|v| v.to_string()).collect();
            write!(f, "({})", a.join(", "))?;
        }
        Ok(())
    }
}

/// A state: snapshot plus, at machine level, control states and queues.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TsState {
    pub snapshot: Snapshot,
    pub control: BTreeMap<String, String>,
    /// Pending events per object; empty queues are not stored.
    pub queues: BTreeMap<String, Vec<EventLabel>>,
}

impl TsState {
    pub fn of(snapshot: Snapshot) -> Self {
        TsState {
            snapshot,
            ..Default::default()
        }
    }

    pub fn write_body(&self, f: &mut dyn fmt::Write, indent: &str) -> fmt::Result {
        self.snapshot.write_body(f, indent)?;
        for (o, s) in &self.control {
            writeln!(f, "{indent}control {o} = {s}")?;
        }
        for (o, q) in &self.queues {
            for e in q {
                writeln!(f, "{indent}queue {o} <- {e}")?;
            }
        }
        Ok(())
    }

    /// Parses body items until `}`, a `step` keyword, or end of input.
    pub fn parse_body(c: &mut Cursor) -> Result<TsState> {
        let mut st = TsState::default();
        loop {
            c.skip_semis();
            if c.is_punct("}") || c.at_end() {
                return Ok(st);
            }
            let item_kw = |c: &Cursor, kw: &str| c.is_kw(kw) && matches!(c.peek_at(1), Some(Tok::Ident(_)));
            if item_kw(c, "control") {
                c.bump();
                let o = c.expect_ident()?;
                c.expect_punct("=")?;
                let s = c.expect_ident()?;
                st.control.insert(o, s);
            } else if item_kw(c, "queue") {
                c.bump();
                let o = c.expect_ident()?;
                c.expect_punct("<")?;
                c.expect_punct("-")?;
                st.queues.entry(o).or_default().push(EventLabel::parse(c)?);
            } else {
                st.snapshot.parse_item(c)?;
            }
        }
    }
}

pub type Transition = (usize, Option<EventLabel>, usize);

/// A finite transition system whose states carry snapshots. `None` labels
/// are hidden steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SnapshotTs {
    pub states: Vec<TsState>,
    pub initial: Vec<usize>,
    /// Sorted and free of duplicates.
    pub transitions: Vec<Transition>,
    pub explored_completely: bool,
}

impl SnapshotTs {
    /// A one-state system with no transitions.
    pub fn single(s: Snapshot) -> Self {
        SnapshotTs {
            states: vec![TsState::of(s)],
            initial: vec![0],
            transitions: Vec::new(),
            explored_completely: true,
        }
    }

    pub fn new(states: Vec<TsState>, initial: Vec<usize>, mut transitions: Vec<Transition>, complete: bool) -> Result<Self> {
        if initial.is_empty() {
            return Err(Error::Typing("transition system without initial state".into()));
        }
        let n = states.len();
        if initial.iter().any(|&i| i >= n) || transitions.iter().any(|(a, _, b)| *a >= n || *b >= n) {
            return Err(Error::Typing("transition refers to a missing state".into()));
        }
        transitions.sort();
        transitions.dedup();
        let mut initial = initial;
        initial.sort();
        initial.dedup();
        Ok(SnapshotTs {
            states,
            initial,
            transitions,
            explored_completely: complete,
        })
    }

    /// Outgoing transitions per state.
    pub fn adjacency(&self) -> Vec<Vec<(Option<&EventLabel>, usize)>> {
        let mut adj = vec![Vec::new(); self.states.len()];
        for (a, l, b) in &self.transitions {
            adj[*a].push((l.as_ref(), *b));
        }
        adj
    }

    /// Maps every state through `f`, merging states that become equal (in
    /// first-occurrence order) and dropping labels `g` rejects.
    pub fn quotient(
        &self,
        f: &dyn Fn(&TsState) -> TsState,
        g: &dyn Fn(&EventLabel) -> Option<EventLabel>,
    ) -> SnapshotTs {
        let mut index: BTreeMap<TsState, usize> = BTreeMap::new();
        let mut states = Vec::new();
        let mut map = Vec::with_capacity(self.states.len());
        for s in &self.states {
            let t = f(s);
            let i = *index.entry(t.clone()).or_insert_with(|| {
                states.push(t);
                states.len() - 1
            });
            map.push(i);
        }
        let mut transitions: Vec<Transition> = self
            .transitions
            .iter()
            .map(|(a, l, b)| (map[*a], l.as_ref().and_then(g), map[*b]))
            .filter(|(a, l, b)| !(l.is_none() && a == b))
            .collect();
        transitions.sort();
        transitions.dedup();
        let mut initial: Vec<usize> = self.initial.iter().map(|i| map[*i]).collect();
        initial.sort();
        initial.dedup();
        SnapshotTs {
            states,
            initial,
            transitions,
            explored_completely: self.explored_completely,
        }
    }

    /// Drops control states and queues.
    pub fn erase_control(&self) -> SnapshotTs {
        self.quotient(&|s| TsState::of(s.snapshot.clone()), &|e| Some(e.clone()))
    }

    /// Content-based form: equal iff the systems are equal up to renaming of
    /// state indices.
    pub fn canonical(&self) -> (BTreeSet<&TsState>, BTreeSet<(&TsState, Option<&EventLabel>, &TsState)>) {
        let init = self.initial.iter().map(|i| &self.states[*i]).collect();
        let trans = self
            .transitions
            .iter()
            .map(|(a, l, b)| (&self.states[*a], l.as_ref(), &self.states[*b]))
            .collect();
        (init, trans)
    }

    /// States reachable from the initial ones, with unreachable ones removed.
    pub fn reachable_part(&self) -> SnapshotTs {
        let adj = self.adjacency();
        let mut seen = vec![false; self.states.len()];
        let mut stack: Vec<usize> = self.initial.clone();
        for &i in &stack {
            seen[i] = true;
        }
        while let Some(i) = stack.pop() {
            for (_, j) in &adj[i] {
                if !seen[*j] {
                    seen[*j] = true;
                    stack.push(*j);
                }
            }
        }
        let mut map = vec![usize::MAX; self.states.len()];
        let mut states = Vec::new();
        for (i, s) in self.states.iter().enumerate() {
            if seen[i] {
                map[i] = states.len();
                states.push(s.clone());
            }
        }
        SnapshotTs {
            states,
            initial: self.initial.iter().map(|i| map[*i]).collect(),
            transitions: self
                .transitions
                .iter()
                .filter(|(a, _, _)| seen[*a])
                .map(|(a, l, b)| (map[*a], l.clone(), map[*b]))
                .collect(),
            explored_completely: self.explored_completely,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let flag = if self.explored_completely { "complete" } else { "incomplete" };
        let _ = writeln!(out, "transitionsystem {flag}");
        for (i, s) in self.states.iter().enumerate() {
            let init = if self.initial.contains(&i) { " initial" } else { "" };
            let _ = writeln!(out, "state {i}{init} {{");
            let _ = s.write_body(&mut out, "  ");
            let _ = writeln!(out, "}}");
        }
        for (a, l, b) in &self.transitions {
            match l {
                Some(e) => {
                    let _ = writeln!(out, "transition {a} {b} : {e}");
                }
                None => {
                    let _ = writeln!(out, "transition {a} {b} tau");
                }
            }
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<SnapshotTs> {
        let mut c = Cursor::new(text)?;
        c.expect_kw("transitionsystem")?;
        let complete = if c.eat_kw("complete") {
            true
        } else {
            c.expect_kw("incomplete")?;
            false
        };
        let mut states = Vec::new();
        let mut initial = Vec::new();
        let mut transitions = Vec::new();
        loop {
            if c.at_end() {
                break;
            }
            if c.eat_kw("state") {
                let i = c.expect_int()? as usize;
                if i != states.len() {
                    return Err(c.error(format!("state {i} out of order")));
                }
                if c.eat_kw("initial") {
                    initial.push(i);
                }
                c.expect_punct("{")?;
                states.push(TsState::parse_body(&mut c)?);
                c.expect_punct("}")?;
            } else if c.eat_kw("transition") {
                let a = c.expect_int()? as usize;
                let b = c.expect_int()? as usize;
                let l = if c.eat_kw("tau") {
                    None
                } else {
                    c.expect_punct(":")?;
                    Some(EventLabel::parse(&mut c)?)
                };
                transitions.push((a, l, b));
            } else {
                return Err(c.unexpected());
            }
        }
        SnapshotTs::new(states, initial, transitions, complete)
    }

    /// `(states, transitions, sha256 of the text form)`.
    pub fn digest(&self) -> (usize, usize, String) {
        let hash = Sha256::digest(self.to_text().as_bytes());
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        (self.states.len(), self.transitions.len(), hex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> SnapshotTs {
        let mut s0 = Snapshot::default();
        s0.add_object("a", "A", &[("x", Value::Int(0))]);
        let mut s1 = s0.clone();
        s1.objects.get_mut("a").unwrap().attrs.insert("x".into(), Value::Int(1));
        let mut st1 = TsState::of(s1);
        st1.control.insert("a".into(), "Done".into());
        st1.queues.insert("a".into(), vec![EventLabel::new("env", "a", "m", vec![Value::Int(3), Value::Bool(true)])]);
        SnapshotTs::new(
            vec![TsState::of(s0), st1],
            vec![0],
            vec![(0, Some(EventLabel::new("env", "a", "e", vec![])), 1), (1, None, 1)],
            false,
        )
        .unwrap()
    }

    #[test]
    fn text_round_trip() {
        let ts = two_state();
        let back = SnapshotTs::parse_text(&ts.to_text()).unwrap();
        assert_eq!(back, ts);
    }

    #[test]
    fn label_round_trip() {
        let e = EventLabel::new("atm", "bank", "verify", vec![Value::Int(4)]);
        assert_eq!(e.to_string(), "atm -> bank : verify(4)");
        assert_eq!(EventLabel::parse_str(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn erase_control_merges_equal_states() {
        let mut ts = two_state();
        ts.states[1].snapshot = ts.states[0].snapshot.clone();
        let e = ts.erase_control();
        assert_eq!(e.states.len(), 1);
        assert_eq!(e.transitions.len(), 1);
    }

    #[test]
    fn zero_bounds_are_rejected() {
        let b = Bounds {
            depth: 0,
            ..Bounds::default()
        };
        assert!(b.validate().is_err());
        assert!(Bounds::default().validate().is_ok());
    }
}
