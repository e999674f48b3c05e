//! Compilation of interaction terms to trace automata, and matching.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::expr::{Type, Value};
use crate::kernel::Signature;
use crate::structural::EventLabel;

use super::sd::{ArgPat, Interaction, MsgPattern, Term};

/// Variable bindings carried by an automaton run.
pub type Env = BTreeMap<String, Value>;

/// A nondeterministic automaton whose edges are message patterns or ε.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceAutomaton {
    pub states: usize,
    pub initial: usize,
    pub accepting: usize,
    pub edges: Vec<(usize, Option<MsgPattern>, usize)>,
    pub alphabet: BTreeSet<String>,
    out: Vec<Vec<usize>>,
}

struct Builder {
    n: usize,
    edges: Vec<(usize, Option<MsgPattern>, usize)>,
}

impl Builder {
    fn fresh(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    /// Wires `t` between `from` and `to`.
    fn term(&mut self, t: &Term, from: usize, to: usize) {
        match t {
            Term::Msg(m) => self.edges.push((from, Some(m.clone()), to)),
            Term::Seq(ts) => {
                let mut cur = from;
                for (i, x) in ts.iter().enumerate() {
                    let next = if i + 1 == ts.len() { to } else { self.fresh() };
                    self.term(x, cur, next);
                    cur = next;
                }
                if ts.is_empty() {
                    self.edges.push((from, None, to));
                }
            }
            Term::Alt(ts) => {
                for x in ts {
                    let (a, b) = (self.fresh(), self.fresh());
                    self.edges.push((from, None, a));
                    self.term(x, a, b);
                    self.edges.push((b, None, to));
                }
            }
            Term::Opt(x) => {
                self.edges.push((from, None, to));
                self.term(x, from, to);
            }
            Term::Loop(lo, hi, x) => {
                let mut cur = from;
                for _ in 0..*lo {
                    let next = self.fresh();
                    self.term(x, cur, next);
                    cur = next;
                }
                for _ in *lo..*hi {
                    let next = self.fresh();
                    self.edges.push((cur, None, to));
                    self.term(x, cur, next);
                    cur = next;
                }
                self.edges.push((cur, None, to));
            }
        }
    }
}

pub fn sd_to_nfa(i: &Interaction) -> TraceAutomaton {
    let mut b = Builder { n: 2, edges: Vec::new() };
    b.term(&i.body, 0, 1);
    let mut out = vec![Vec::new(); b.n];
    for (k, (s, _, _)) in b.edges.iter().enumerate() {
        out[*s].push(k);
    }
    TraceAutomaton {
        states: b.n,
        initial: 0,
        accepting: 1,
        edges: b.edges,
        alphabet: i.alphabet(),
        out,
    }
}

/// A run position: automaton state and bindings.
pub type Config = (usize, Env);

impl TraceAutomaton {
    /// Configurations reachable through ε edges, including `c`.
    pub fn closure(&self, c: Config) -> BTreeSet<Config> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![c];
        while let Some((s, env)) = stack.pop() {
            if seen.contains(&(s, env.clone())) {
                continue;
            }
            for &k in &self.out[s] {
                if let (_, None, t) = &self.edges[k] {
                    stack.push((*t, env.clone()));
                }
            }
            seen.insert((s, env));
        }
        seen
    }

    pub fn start(&self) -> BTreeSet<Config> {
        self.closure((self.initial, Env::new()))
    }

    /// Successors of one configuration on `e`, ε-closed.
    pub fn step_one(&self, c: &Config, e: &EventLabel) -> BTreeSet<Config> {
        let mut out = BTreeSet::new();
        for &k in &self.out[c.0] {
            if let (_, Some(p), t) = &self.edges[k] {
                if let Some(env) = p.bind(e, &c.1) {
                    out.extend(self.closure((*t, env)));
                }
            }
        }
        out
    }

    pub fn step(&self, cs: &BTreeSet<Config>, e: &EventLabel) -> BTreeSet<Config> {
        cs.iter().flat_map(|c| self.step_one(c, e)).collect()
    }

    pub fn accepts(&self, cs: &BTreeSet<Config>) -> bool {
        cs.iter().any(|(s, _)| *s == self.accepting)
    }

    pub fn in_alphabet(&self, e: &EventLabel) -> bool {
        self.alphabet.contains(&e.message)
    }
}

/// Alphabet-strict acceptance: an event outside the alphabet rejects.
pub fn matches(t: &[EventLabel], a: &TraceAutomaton) -> bool {
    let mut cs = a.start();
    for e in t {
        if !a.in_alphabet(e) {
            return false;
        }
        cs = a.step(&cs, e);
        if cs.is_empty() {
            return false;
        }
    }
    a.accepts(&cs)
}

/// The trace restricted to the automaton's alphabet.
pub fn project(t: &[EventLabel], a: &TraceAutomaton) -> Vec<EventLabel> {
    t.iter().filter(|e| a.in_alphabet(e)).cloned().collect()
}

/// Concrete argument tuples for `p` under `env`; free positions range over
/// the declared variable type or the reception's parameter type.
fn instances(p: &MsgPattern, i: &Interaction, sig: &Signature, env: &Env) -> Vec<Vec<Value>> {
    let params = i
        .lifeline_class(&p.receiver)
        .and_then(|c| sig.reception(c, &p.message))
        .cloned()
        .unwrap_or_default();
    let mut out: Vec<Vec<Value>> = vec![Vec::new()];
    for (k, a) in p.args.iter().enumerate() {
        let declared = |x: &str| i.vars.iter().find(|(v, _)| v == x).map(|(_, t)| t.clone());
        let ty: Option<Type> = match a {
            ArgPat::Var(x) => declared(x).or_else(|| params.get(k).map(|q| q.ty.clone())),
            _ => params.get(k).map(|q| q.ty.clone()),
        };
        let choices = match a {
            ArgPat::Lit(v) => vec![v.clone()],
            ArgPat::Var(x) if env.contains_key(x) => vec![env[x].clone()],
            _ => ty.map(|t| t.values()).unwrap_or_default(),
        };
        out = out
            .into_iter()
            .flat_map(|pre| {
                choices.iter().map(move |v| {
                    let mut t = pre.clone();
                    t.push(v.clone());
                    t
                })
            })
            .collect();
    }
    out
}

/// A shortest accepted trace, by breadth-first search over configurations.
pub fn shortest_word(i: &Interaction, sig: &Signature) -> Option<Vec<EventLabel>> {
    let a = sd_to_nfa(i);
    let mut parent: BTreeMap<Config, Option<(Config, EventLabel)>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for c in a.start() {
        parent.insert(c.clone(), None);
        queue.push_back(c);
    }
    while let Some(c) = queue.pop_front() {
        if c.0 == a.accepting {
            let mut word = Vec::new();
            let mut cur = c;
            while let Some(Some((prev, e))) = parent.get(&cur) {
                word.push(e.clone());
                cur = prev.clone();
            }
            word.reverse();
            return Some(word);
        }
        for &k in &a.out[c.0] {
            let (_, Some(p), _) = &a.edges[k] else { continue };
            for args in instances(p, i, sig, &c.1) {
                let e = EventLabel::new(&p.sender, &p.receiver, &p.message, args);
                for n in a.step_one(&c, &e) {
                    if !parent.contains_key(&n) {
                        parent.insert(n.clone(), Some((c.clone(), e.clone())));
                        queue.push_back(n);
                    }
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::parse_sd;

    fn ev(m: &str) -> EventLabel {
        EventLabel::new("env", "a", m, vec![])
    }

    fn nfa(body: &str) -> TraceAutomaton {
        sd_to_nfa(&parse_sd(&format!("interaction I {{ lifeline a: C ; {body} }}")).unwrap())
    }

    #[test]
    fn empty_sequence_accepts_empty_trace() {
        assert!(matches(&[], &nfa("")));
    }

    #[test]
    fn bounded_loop() {
        let a = nfa("loop(0,3) { msg env -> a : m }");
        for n in 0..=3 {
            assert!(matches(&vec![ev("m"); n], &a));
        }
        assert!(!matches(&vec![ev("m"); 4], &a));
    }

    #[test]
    fn alternative() {
        let a = nfa("alt { msg env -> a : x } else { msg env -> a : y }");
        assert!(matches(&[ev("x")], &a));
        assert!(matches(&[ev("y")], &a));
        assert!(!matches(&[], &a));
        assert!(!matches(&[ev("x"), ev("y")], &a));
    }

    #[test]
    fn variables_bind_once() {
        let a = nfa("msg env -> a : pin(p) ; msg env -> a : check(p)");
        let e = |m: &str, v| EventLabel::new("env", "a", m, vec![Value::Int(v)]);
        assert!(matches(&[e("pin", 4), e("check", 4)], &a));
        assert!(!matches(&[e("pin", 4), e("check", 5)], &a));
    }

    #[test]
    fn foreign_events_reject() {
        let a = nfa("msg env -> a : x");
        assert!(!matches(&[ev("x"), ev("z")], &a));
        assert!(matches(&project(&[ev("z"), ev("x")], &a), &a));
    }

    #[test]
    fn shortest_word_takes_the_short_branch() {
        let i = parse_sd("interaction I { lifeline a: C ; var p: Int 1..2
            alt { msg env -> a : x(p) ; msg env -> a : x(p) } else { msg env -> a : y } }")
        .unwrap();
        let w = shortest_word(&i, &Signature::default()).unwrap();
        assert_eq!(w, vec![ev("y")]);
        let i = parse_sd("interaction I { lifeline a: C ; var p: Int 1..2 ; msg env -> a : x(p) ; msg env -> a : x(p) }").unwrap();
        let w = shortest_word(&i, &Signature::default()).unwrap();
        assert_eq!(w[0].args, w[1].args);
        assert!(matches(&w, &sd_to_nfa(&i)));
    }
}
