//! Interactions (`.sd`): lifelines and message terms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Diagnostic, Error, Result, Taxonomy};
use crate::expr::{Type, Value};
use crate::kernel::{Signature, Symbol};
use crate::structural::EventLabel;
use crate::syntax::{Cursor, Tok};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArgPat {
    Lit(Value),
    Any,
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MsgPattern {
    pub sender: String,
    pub receiver: String,
    pub message: String,
    pub args: Vec<ArgPat>,
}

impl MsgPattern {
    /// Matches `e` under `env`, returning the extended environment.
    pub fn bind(&self, e: &EventLabel, env: &BTreeMap<String, Value>) -> Option<BTreeMap<String, Value>> {
        if self.sender != e.sender
            || self.receiver != e.receiver
            || self.message != e.message
            || self.args.len() != e.args.len()
        {
            return None;
        }
        let mut out = env.clone();
        for (p, v) in self.args.iter().zip(&e.args) {
            match p {
                ArgPat::Any => {}
                ArgPat::Lit(l) if l == v => {}
                ArgPat::Lit(_) => return None,
                ArgPat::Var(x) => match out.get(x) {
                    Some(bound) if bound != v => return None,
                    Some(_) => {}
                    None => {
                        out.insert(x.clone(), v.clone());
                    }
                },
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Msg(MsgPattern),
    Seq(Vec<Term>),
    Alt(Vec<Term>),
    Opt(Box<Term>),
    Loop(u32, u32, Box<Term>),
}

impl Term {
    pub fn messages(&self, out: &mut Vec<MsgPattern>) {
        match self {
            Term::Msg(m) => out.push(m.clone()),
            Term::Seq(ts) | Term::Alt(ts) => ts.iter().for_each(|t| t.messages(out)),
            Term::Opt(t) | Term::Loop(_, _, t) => t.messages(out),
        }
    }

    fn map_msgs(&self, f: &dyn Fn(&MsgPattern) -> Result<MsgPattern>) -> Result<Term> {
        Ok(match self {
            Term::Msg(m) => Term::Msg(f(m)?),
            Term::Seq(ts) => Term::Seq(ts.iter().map(|t| t.map_msgs(f)).collect::<Result<_>>()?),
            Term::Alt(ts) => Term::Alt(ts.iter().map(|t| t.map_msgs(f)).collect::<Result<_>>()?),
            Term::Opt(t) => Term::Opt(Box::new(t.map_msgs(f)?)),
            Term::Loop(lo, hi, t) => Term::Loop(*lo, *hi, Box::new(t.map_msgs(f)?)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interaction {
    pub name: String,
    pub lifelines: Vec<(String, String)>,
    /// Declared argument variables with their types.
    pub vars: Vec<(String, Type)>,
    pub body: Term,
}

fn parse_arg(c: &mut Cursor) -> Result<ArgPat> {
    if c.eat_punct("_") {
        return Ok(ArgPat::Any);
    }
    match c.peek() {
        Some(Tok::Ident(s)) if s != "true" && s != "false" => Ok(ArgPat::Var(c.expect_ident()?)),
        _ => Ok(ArgPat::Lit(Value::parse(c)?)),
    }
}

struct Parser<'a> {
    c: &'a mut Cursor,
    lifelines: Vec<(String, String)>,
    vars: Vec<(String, Type)>,
    diags: Vec<Diagnostic>,
}

impl Parser<'_> {
    /// Items up to the closing brace.
    fn block(&mut self) -> Result<Vec<Term>> {
        let mut items = Vec::new();
        loop {
            self.c.skip_semis();
            if self.c.eat_punct("}") {
                return Ok(items);
            }
            if let Some(t) = self.item()? {
                items.push(t);
            }
        }
    }

    fn braced(&mut self) -> Result<Term> {
        self.c.expect_punct("{")?;
        let items = self.block()?;
        Ok(if items.len() == 1 {
            items.into_iter().next().expect("one item")
        } else {
            Term::Seq(items)
        })
    }

    fn item(&mut self) -> Result<Option<Term>> {
        let (line, col) = self.c.loc();
        if self.c.eat_kw("lifeline") {
            let n = self.c.expect_ident()?;
            self.c.expect_punct(":")?;
            let class = self.c.expect_ident()?;
            if n == "env" || self.lifelines.iter().any(|(x, _)| *x == n) {
                self.diags.push(Diagnostic::new(line, col, format!("duplicate lifeline {n}")));
            }
            self.lifelines.push((n, class));
            return Ok(None);
        }
        if self.c.eat_kw("var") {
            let n = self.c.expect_ident()?;
            self.c.expect_punct(":")?;
            let ty = Type::parse(self.c)?;
            if self.vars.iter().any(|(x, _)| *x == n) {
                self.diags.push(Diagnostic::new(line, col, format!("duplicate variable {n}")));
            }
            self.vars.push((n, ty));
            return Ok(None);
        }
        if self.c.eat_kw("msg") {
            let sender = self.c.expect_ident()?;
            self.c.expect_punct("->")?;
            let receiver = self.c.expect_ident()?;
            self.c.expect_punct(":")?;
            let message = self.c.expect_ident()?;
            let mut args = Vec::new();
            if self.c.eat_punct("(") && !self.c.eat_punct(")") {
                loop {
                    args.push(parse_arg(self.c)?);
                    if self.c.eat_punct(")") {
                        break;
                    }
                    self.c.expect_punct(",")?;
                }
            }
            for (end, who) in [("sender", &sender), ("receiver", &receiver)] {
                let known = self.lifelines.iter().any(|(x, _)| x == who);
                if !(known || (who == "env" && end == "sender")) {
                    self.diags.push(Diagnostic::new(line, col, format!("unknown {end} lifeline {who}")));
                }
            }
            return Ok(Some(Term::Msg(MsgPattern {
                sender,
                receiver,
                message,
                args,
            })));
        }
        if self.c.eat_kw("alt") {
            let mut alts = vec![self.braced()?];
            while self.c.eat_kw("else") {
                alts.push(self.braced()?);
            }
            return Ok(Some(Term::Alt(alts)));
        }
        if self.c.eat_kw("opt") {
            return Ok(Some(Term::Opt(Box::new(self.braced()?))));
        }
        if self.c.eat_kw("loop") {
            self.c.expect_punct("(")?;
            let lo = self.c.expect_int()?;
            self.c.expect_punct(",")?;
            let hi = self.c.expect_int()?;
            self.c.expect_punct(")")?;
            if lo < 0 || lo > hi {
                self.diags
                    .push(Diagnostic::new(line, col, format!("loop bounds {lo}..{hi} out of order")));
            }
            let body = self.braced()?;
            return Ok(Some(Term::Loop(lo.max(0) as u32, hi.max(0) as u32, Box::new(body))));
        }
        Err(self.c.unexpected())
    }
}

pub fn parse_sd(text: &str) -> Result<Interaction> {
    let mut c = Cursor::new(text)?;
    c.expect_kw("interaction")?;
    let name = c.expect_ident()?;
    c.expect_punct("{")?;
    let mut p = Parser {
        c: &mut c,
        lifelines: Vec::new(),
        vars: Vec::new(),
        diags: Vec::new(),
    };
    let items = p.block()?;
    let (lifelines, vars, diags) = (p.lifelines, p.vars, p.diags);
    c.skip_semis();
    c.expect_end()?;
    if !diags.is_empty() {
        return Err(Error::Diagnostics(
            diags.into_iter().map(|d| d.tagged(Taxonomy::SYNTACTIC_BEHAVIOURAL)).collect(),
        ));
    }
    Ok(Interaction {
        name,
        lifelines,
        vars,
        body: Term::Seq(items),
    })
}

impl Interaction {
    pub fn lifeline_class(&self, name: &str) -> Option<&str> {
        self.lifelines.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn messages(&self) -> Vec<MsgPattern> {
        let mut out = Vec::new();
        self.body.messages(&mut out);
        out
    }

    /// The message names the interaction mentions.
    pub fn alphabet(&self) -> BTreeSet<String> {
        self.messages().into_iter().map(|m| m.message).collect()
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        let mut out: BTreeSet<Symbol> = self.lifelines.iter().map(|(_, c)| Symbol::Class(c.clone())).collect();
        out.extend(self.alphabet().into_iter().map(Symbol::Message));
        out.into_iter().collect()
    }

    /// Checks the interaction against a signature and resolves enumeration
    /// literals written as bare names.
    pub fn check(&self, sig: &Signature) -> Result<Interaction> {
        let mut diags = Vec::new();
        let d = |m: String| Diagnostic::unlocated(format!("interaction {}: {m}", self.name)).tagged(Taxonomy::SYNTACTIC_BEHAVIOURAL);
        for (l, c) in &self.lifelines {
            if !sig.classes.contains_key(c) {
                diags.push(d(format!("lifeline {l} has unknown class {c}")));
            }
        }
        let declared: BTreeMap<&str, &Type> = self.vars.iter().map(|(n, t)| (n.as_str(), t)).collect();
        let body = self.body.map_msgs(&|m| {
            let Some(class) = self.lifeline_class(&m.receiver) else {
                return Ok(m.clone());
            };
            let Some(params) = sig.reception(class, &m.message) else {
                return Err(Error::Unresolved(format!("{} is not a reception of {class}", m.message)));
            };
            if params.len() != m.args.len() {
                return Err(Error::Typing(format!(
                    "{} takes {} arguments, {} given",
                    m.message,
                    params.len(),
                    m.args.len()
                )));
            }
            let mut args = Vec::new();
            for (a, p) in m.args.iter().zip(params) {
                let a = match a {
                    ArgPat::Var(x) if !declared.contains_key(x.as_str()) && p.ty.contains(&Value::Enum(x.clone())) => {
                        ArgPat::Lit(Value::Enum(x.clone()))
                    }
                    other => other.clone(),
                };
                match &a {
                    ArgPat::Lit(v) if !p.ty.contains(v) => {
                        return Err(Error::Typing(format!("{v} is not a value of {} in {}", p.ty, m.message)))
                    }
                    ArgPat::Var(x) => {
                        if let Some(t) = declared.get(x.as_str()) {
                            if t.kind() != p.ty.kind() {
                                return Err(Error::Typing(format!("variable {x} of type {t} passed as {}", p.ty)));
                            }
                        }
                    }
                    _ => {}
                }
                args.push(a);
            }
            Ok(MsgPattern { args, ..m.clone() })
        });
        let body = match body {
            Ok(b) => b,
            Err(e) => {
                diags.push(d(e.to_string()));
                self.body.clone()
            }
        };
        if !diags.is_empty() {
            return Err(Error::Diagnostics(diags));
        }
        Ok(Interaction {
            body,
            ..self.clone()
        })
    }

    /// Renames lifeline classes and messages; unmapped names are kept.
    pub fn renamed(&self, classes: &BTreeMap<String, String>, messages: &BTreeMap<String, String>) -> Result<Interaction> {
        let body = self.body.map_msgs(&|m| {
            Ok(MsgPattern {
                message: messages.get(&m.message).cloned().unwrap_or_else(|| m.message.clone()),
                ..m.clone()
            })
        })?;
        Ok(Interaction {
            name: self.name.clone(),
            lifelines: self
                .lifelines
                .iter()
                .map(|(l, c)| (l.clone(), classes.get(c).cloned().unwrap_or_else(|| c.clone())))
                .collect(),
            vars: self.vars.clone(),
            body,
        })
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, indent: usize) -> fmt::Result {
    let pad = "  ".repeat(indent);
    let block = |f: &mut fmt::Formatter<'_>, t: &Term| -> fmt::Result {
        writeln!(f, "{{")?;
        match t {
            Term::Seq(ts) => {
                for x in ts {
                    write_term(f, x, indent + 1)?;
                }
            }
            other => write_term(f, other, indent + 1)?,
        }
        write!(f, "{pad}}}")
    };
    match t {
        Term::Msg(m) => {
            write!(f, "{pad}msg {} -> {} : {}", m.sender, m.receiver, m.message)?;
            if !m.args.is_empty() {
                let args: Vec<String> = m
                    .args
                    .iter()
                    .map(|a| match a {
                        ArgPat::Lit(v) => v.to_string(),
                        ArgPat::Any => "_".into(),
                        ArgPat::Var(x) => x.clone(),
                    })
                    .collect();
                write!(f, "({})", args.join(", "))?;
            }
            writeln!(f)
        }
        Term::Seq(ts) => {
            // a nested sequence prints as an always-taken single alternative
            write!(f, "{pad}alt ")?;
            block(f, &Term::Seq(ts.clone()))?;
            writeln!(f)
        }
        Term::Alt(ts) => {
            write!(f, "{pad}alt ")?;
            for (i, x) in ts.iter().enumerate() {
                if i > 0 {
                    write!(f, " else ")?;
                }
                block(f, x)?;
            }
            writeln!(f)
        }
        Term::Opt(x) => {
            write!(f, "{pad}opt ")?;
            block(f, x)?;
            writeln!(f)
        }
        Term::Loop(lo, hi, x) => {
            write!(f, "{pad}loop({lo},{hi}) ")?;
            block(f, x)?;
            writeln!(f)
        }
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "interaction {} {{", self.name)?;
        for (l, c) in &self.lifelines {
            writeln!(f, "  lifeline {l}: {c}")?;
        }
        for (v, t) in &self.vars {
            writeln!(f, "  var {v}: {t}")?;
        }
        match &self.body {
            Term::Seq(ts) => {
                for t in ts {
                    write_term(f, t, 1)?;
                }
            }
            other => write_term(f, other, 1)?,
        }
        writeln!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_message() {
        let i = parse_sd("interaction I { lifeline a: C ; msg env -> a : e }").unwrap();
        assert_eq!(i.messages().len(), 1);
        assert_eq!(parse_sd(&i.to_string()).unwrap(), i);
    }

    #[test]
    fn loop_bounds_out_of_order() {
        let e = parse_sd("interaction I { lifeline a: C ; loop(3,1) { msg env -> a : e } }").unwrap_err();
        assert!(e.to_string().contains("out of order"));
    }

    #[test]
    fn unknown_lifeline() {
        assert!(parse_sd("interaction I { lifeline a: C ; msg a -> b : e }").is_err());
    }

    #[test]
    fn nested_round_trip() {
        let src = "interaction I { lifeline a: C ; var p: Int 1..4
            msg env -> a : go
            loop(1,3) { msg env -> a : pin(p) ; alt { msg a -> a : ok } else { msg a -> a : bad(_) } }
            opt { msg a -> a : e(2, true) } }";
        let i = parse_sd(src).unwrap();
        assert_eq!(parse_sd(&i.to_string()).unwrap(), i);
    }
}
