//! Flat state machines (`.stm`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Diagnostic, Error, Result, Taxonomy};
use crate::expr::{Expr, Kind, Type};
use crate::kernel::{Signature, SignatureMorphism, Symbol};
use crate::syntax::{Cursor, Tok};

/// Where a `send` goes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SendTarget {
    SelfObject,
    Env,
    Role(String),
}

impl fmt::Display for SendTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SendTarget::SelfObject => f.write_str("self"),
            SendTarget::Env => f.write_str("env"),
            SendTarget::Role(r) => f.write_str(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Effect {
    Assign { attr: String, expr: Expr },
    Send { target: SendTarget, message: String, args: Vec<Expr> },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MachineTransition {
    pub source: String,
    pub target: String,
    pub trigger: String,
    pub params: Vec<String>,
    pub guard: Option<Expr>,
    pub effects: Vec<Effect>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateMachine {
    pub name: String,
    pub class: String,
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<MachineTransition>,
}

pub fn parse_stm(text: &str) -> Result<StateMachine> {
    let mut c = Cursor::new(text)?;
    c.expect_kw("statemachine")?;
    let name = c.expect_ident()?;
    c.expect_kw("for")?;
    let class = c.expect_ident()?;
    c.expect_punct("{")?;
    let mut states: Vec<String> = Vec::new();
    let mut initial: Option<(String, usize, usize)> = None;
    let mut transitions = Vec::new();
    let mut locs = Vec::new();
    let mut diags = Vec::new();
    loop {
        c.skip_semis();
        if c.eat_punct("}") {
            break;
        }
        let (line, col) = c.loc();
        if c.eat_kw("init") {
            let s = c.expect_ident()?;
            if initial.is_some() {
                diags.push(Diagnostic::new(line, col, "second initial state"));
            }
            initial = Some((s, line, col));
        } else if c.eat_kw("state") {
            loop {
                let (l, cl) = c.loc();
                let s = c.expect_ident()?;
                if states.contains(&s) {
                    diags.push(Diagnostic::new(l, cl, format!("duplicate state {s}")));
                } else {
                    states.push(s);
                }
                if !c.eat_punct(",") {
                    break;
                }
            }
        } else if matches!(c.peek(), Some(Tok::Ident(_))) && matches!(c.peek_at(1), Some(Tok::Punct("->"))) {
            transitions.push(parse_transition(&mut c)?);
            locs.push((line, col));
        } else {
            return Err(c.unexpected());
        }
    }
    c.skip_semis();
    c.expect_end()?;
    let Some((initial, il, ic)) = initial else {
        return Err(Error::Diagnostics(vec![Diagnostic::new(1, 1, format!("machine {name} has no initial state"))
            .tagged(Taxonomy::SYNTACTIC_BEHAVIOURAL)]));
    };
    if !states.contains(&initial) {
        if states.is_empty() {
            states.push(initial.clone());
        } else {
            diags.push(Diagnostic::new(il, ic, format!("initial state {initial} is not declared")));
        }
    }
    for (t, (l, cl)) in transitions.iter().zip(&locs) {
        for s in [&t.source, &t.target] {
            if !states.contains(s) {
                diags.push(Diagnostic::new(*l, *cl, format!("transition uses undeclared state {s}")));
            }
        }
        let mut seen = BTreeSet::new();
        for p in &t.params {
            if !seen.insert(p) {
                diags.push(Diagnostic::new(*l, *cl, format!("parameter {p} bound twice")));
            }
        }
    }
    if !diags.is_empty() {
        return Err(Error::Diagnostics(
            diags.into_iter().map(|d| d.tagged(Taxonomy::SYNTACTIC_BEHAVIOURAL)).collect(),
        ));
    }
    Ok(StateMachine {
        name,
        class,
        states,
        initial,
        transitions,
    })
}

fn parse_transition(c: &mut Cursor) -> Result<MachineTransition> {
    let source = c.expect_ident()?;
    c.expect_punct("->")?;
    let target = c.expect_ident()?;
    c.expect_kw("on")?;
    let trigger = c.expect_ident()?;
    let mut params = Vec::new();
    if c.eat_punct("(") && !c.eat_punct(")") {
        loop {
            params.push(c.expect_ident()?);
            if c.eat_punct(")") {
                break;
            }
            c.expect_punct(",")?;
        }
    }
    let guard = if c.eat_punct("[") {
        let g = Expr::parse(c)?;
        c.expect_punct("]")?;
        Some(g)
    } else {
        None
    };
    let mut effects = Vec::new();
    if c.eat_punct("/") {
        loop {
            if c.eat_kw("send") {
                let target = if c.eat_kw("self") {
                    SendTarget::SelfObject
                } else if c.eat_kw("env") {
                    SendTarget::Env
                } else {
                    SendTarget::Role(c.expect_ident()?)
                };
                c.expect_punct(".")?;
                let message = c.expect_ident()?;
                let mut args = Vec::new();
                if c.eat_punct("(") && !c.eat_punct(")") {
                    loop {
                        args.push(Expr::parse(c)?);
                        if c.eat_punct(")") {
                            break;
                        }
                        c.expect_punct(",")?;
                    }
                }
                effects.push(Effect::Send { target, message, args });
            } else if matches!(c.peek(), Some(Tok::Ident(_))) && matches!(c.peek_at(1), Some(Tok::Punct(":="))) {
                let attr = c.expect_ident()?;
                c.expect_punct(":=")?;
                effects.push(Effect::Assign {
                    attr,
                    expr: Expr::parse(c)?,
                });
            } else {
                return Err(c.error("expected an effect ('send' or 'attr := expr')"));
            }
            // another effect follows only after `;` and a recognisable start
            let more = c.is_punct(";")
                && (c.is_kw_at(1, "send") || matches!(c.peek_at(2), Some(Tok::Punct(":="))));
            if !more {
                break;
            }
            c.bump();
        }
    }
    Ok(MachineTransition {
        source,
        target,
        trigger,
        params,
        guard,
        effects,
    })
}

impl StateMachine {
    /// Type-checks the machine against the data signature and resolves
    /// enumeration literals. Returns the resolved machine.
    pub fn check(&self, sig: &Signature) -> Result<StateMachine> {
        let tag = Taxonomy::SYNTACTIC_BEHAVIOURAL;
        let diag = |m: String| Diagnostic::unlocated(format!("machine {}: {m}", self.name)).tagged(tag);
        if !sig.classes.contains_key(&self.class) {
            return Err(Error::Diagnostics(vec![diag(format!("unknown context class {}", self.class))]));
        }
        let literals: BTreeSet<String> = sig
            .classes
            .keys()
            .flat_map(|c| sig.all_attrs(c))
            .filter_map(|(_, _, t)| match t {
                Type::Enum(l) => Some(l),
                _ => None,
            })
            .flatten()
            .collect();
        let mut diags = Vec::new();
        let mut out = self.clone();
        for t in out.transitions.iter_mut() {
            let Some(ps) = sig.reception(&self.class, &t.trigger).cloned() else {
                diags.push(diag(format!("{} is not a reception of {}", t.trigger, self.class)));
                continue;
            };
            if ps.len() != t.params.len() {
                diags.push(diag(format!(
                    "trigger {} binds {} parameters, reception has {}",
                    t.trigger,
                    t.params.len(),
                    ps.len()
                )));
                continue;
            }
            let vars: BTreeMap<String, Type> =
                t.params.iter().cloned().zip(ps.iter().map(|p| p.ty.clone())).collect();
            let is_var = |n: &str| vars.contains_key(n);
            let attr_ty = |a: &str| sig.attr_type(&self.class, a).cloned();
            let var_ty = |v: &str| vars.get(v).cloned();
            let check_expr = |e: &mut Expr, want: Option<Kind>, what: &str| -> Option<String> {
                match e.clone().resolve_names(&is_var, &literals) {
                    Ok(r) => {
                        let res = match r.kind_of(&attr_ty, &var_ty) {
                            Ok(k) if want.is_none_or(|w| w == k) => None,
                            Ok(k) => Some(format!("{what} has type {k:?}")),
                            Err(err) => Some(format!("{what}: {err}")),
                        };
                        *e = r;
                        res
                    }
                    Err(err) => Some(format!("{what}: {err}")),
                }
            };
            if let Some(g) = t.guard.as_mut() {
                if let Some(m) = check_expr(g, Some(Kind::Bool), "guard") {
                    diags.push(diag(m));
                }
            }
            for eff in t.effects.iter_mut() {
                match eff {
                    Effect::Assign { attr, expr } => match sig.attr_type(&self.class, attr) {
                        None => diags.push(diag(format!("assignment to unknown attribute {attr}"))),
                        Some(ty) => {
                            if let Some(m) = check_expr(expr, Some(ty.kind()), "assignment") {
                                diags.push(diag(m));
                            }
                        }
                    },
                    Effect::Send { target, message, args } => {
                        let recv_class = match target {
                            SendTarget::SelfObject => Some(self.class.clone()),
                            SendTarget::Env => None,
                            SendTarget::Role(r) => {
                                let nav = sig.navigate(&self.class, r);
                                match nav.as_slice() {
                                    [(assoc, end)] => {
                                        let a = &sig.assocs[assoc];
                                        Some(match end {
                                            crate::kernel::End::A => a.a.class.clone(),
                                            crate::kernel::End::B => a.b.class.clone(),
                                        })
                                    }
                                    [] => {
                                        diags.push(diag(format!("role {r} is not navigable from {}", self.class)));
                                        continue;
                                    }
                                    _ => {
                                        diags.push(diag(format!("role {r} is ambiguous from {}", self.class)));
                                        continue;
                                    }
                                }
                            }
                        };
                        let params = match &recv_class {
                            Some(rc) => match sig.reception(rc, message) {
                                Some(ps) => Some(ps.clone()),
                                None => {
                                    diags.push(diag(format!("{message} is not a reception of {rc}")));
                                    continue;
                                }
                            },
                            None => None,
                        };
                        if let Some(ps) = &params {
                            if ps.len() != args.len() {
                                diags.push(diag(format!("send {message} passes {} arguments", args.len())));
                                continue;
                            }
                        }
                        for (i, a) in args.iter_mut().enumerate() {
                            let want = params.as_ref().map(|ps| ps[i].ty.kind());
                            if let Some(m) = check_expr(a, want, "argument") {
                                diags.push(diag(m));
                            }
                        }
                    }
                }
            }
        }
        if diags.is_empty() {
            Ok(out)
        } else {
            Err(Error::Diagnostics(diags))
        }
    }

    /// Symbols read or written by the machine.
    pub fn symbols(&self, sig: &Signature) -> Vec<Symbol> {
        let mut out = BTreeSet::new();
        out.insert(Symbol::Class(self.class.clone()));
        let attr = |a: &str| Symbol::Attr(sig.attr_owner(&self.class, a).unwrap_or_else(|| self.class.clone()), a.to_string());
        for t in &self.transitions {
            out.insert(Symbol::Message(t.trigger.clone()));
            let mut attrs = BTreeSet::new();
            if let Some(g) = &t.guard {
                g.attrs(&mut attrs);
            }
            for e in &t.effects {
                match e {
                    Effect::Assign { attr: a, expr } => {
                        attrs.insert(a.clone());
                        expr.attrs(&mut attrs);
                    }
                    Effect::Send { target, message, args } => {
                        out.insert(Symbol::Message(message.clone()));
                        for a in args {
                            a.attrs(&mut attrs);
                        }
                        if let SendTarget::Role(r) = target {
                            for (assoc, _) in sig.navigate(&self.class, r) {
                                out.insert(Symbol::Assoc(assoc));
                            }
                        }
                    }
                }
            }
            for a in attrs {
                out.insert(attr(&a));
            }
        }
        out.into_iter().collect()
    }

    /// The machine with class, message, and attribute names translated.
    pub fn renamed(&self, sigma: &SignatureMorphism) -> Result<StateMachine> {
        let class = sigma
            .classes
            .get(&self.class)
            .cloned()
            .ok_or_else(|| Error::Unresolved(format!("class {}", self.class)))?;
        let msg = |m: &str| {
            sigma
                .messages
                .get(m)
                .cloned()
                .ok_or_else(|| Error::Unresolved(format!("message {m}")))
        };
        let src = &sigma.source;
        let attr = |a: &str| -> Option<String> {
            let owner = src.attr_owner(&self.class, a)?;
            sigma.attrs.get(&(owner, a.to_string())).cloned()
        };
        let mut out = self.clone();
        out.class = class;
        for t in out.transitions.iter_mut() {
            t.trigger = msg(&t.trigger)?;
            if let Some(g) = &t.guard {
                t.guard = Some(g.rename_attrs(&attr)?);
            }
            for e in t.effects.iter_mut() {
                match e {
                    Effect::Assign { attr: a, expr } => {
                        *a = attr(a).ok_or_else(|| Error::Unresolved(format!("attribute {a}")))?;
                        *expr = expr.rename_attrs(&attr)?;
                    }
                    Effect::Send { message, args, .. } => {
                        *message = msg(message)?;
                        for x in args.iter_mut() {
                            *x = x.rename_attrs(&attr)?;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for StateMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "statemachine {} for {} {{", self.name, self.class)?;
        writeln!(f, "  init {}", self.initial)?;
        writeln!(f, "  state {}", self.states.join(", "))?;
        for t in &self.transitions {
            write!(f, "  {} -> {} on {}", t.source, t.target, t.trigger)?;
            if !t.params.is_empty() {
                write!(f, "({})", t.params.join(", "))?;
            }
            if let Some(g) = &t.guard {
                write!(f, " [{g}]")?;
            }
            if !t.effects.is_empty() {
                let effs: Vec<String> = t
                    .effects
                    .iter()
                    .map(|e| match e {
                        Effect::Assign { attr, expr } => format!("{attr} := {expr}"),
                        Effect::Send { target, message, args } => {
                            let a: Vec<String> = args.iter().map(|x| x.to_string()).collect();
                            format!("send {target}.{message}({})", a.join(", "))
                        }
                    })
                    .collect();
                write!(f, " / {}", effs.join("; "))?;
            }
            writeln!(f)?;
        }
        writeln!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_state_machine() {
        let m = parse_stm("statemachine M for C { init S }").unwrap();
        assert_eq!(m.states, vec!["S"]);
        assert!(m.transitions.is_empty());
    }

    #[test]
    fn effects_and_guards() {
        let m = parse_stm(
            "statemachine M for ATM { init A ; state A, B ;
             A -> B on enterPIN(p) [self.trials < 3] / trials := self.trials + 1; send bank.verify(p) ;
             B -> A on verified / send self.ejectCard() }",
        )
        .unwrap();
        assert_eq!(m.transitions.len(), 2);
        assert_eq!(m.transitions[0].params, vec!["p"]);
        assert_eq!(m.transitions[0].effects.len(), 2);
        assert!(matches!(
            &m.transitions[0].effects[1],
            Effect::Send { target: SendTarget::Role(r), message, .. } if r == "bank" && message == "verify"
        ));
        assert_eq!(parse_stm(&m.to_string()).unwrap(), m);
    }

    #[test]
    fn undeclared_state_is_diagnosed() {
        let err = parse_stm("statemachine M for C { init S ; state S ; X -> S on e }").unwrap_err();
        assert!(err.to_string().contains("undeclared state X"));
    }
}
