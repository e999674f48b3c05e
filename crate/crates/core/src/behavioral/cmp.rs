//! Composite structures (`.cmp`): parts running machines, connectors, and
//! environment gates.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Diagnostic, Error, Result, Taxonomy};
use crate::kernel::{Signature, Symbol};
use crate::syntax::Cursor;

use super::stm::StateMachine;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Part {
    pub name: String,
    pub class: String,
    pub machine: String,
}

/// A bidirectional connector. `None` carries every reception of the
/// receiving part.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Connector {
    pub a: String,
    pub b: String,
    pub messages: Option<Vec<String>>,
}

/// Environment injection point. `None` injects every reception of the part.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gate {
    pub name: String,
    pub part: String,
    pub messages: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Component {
    pub name: String,
    pub parts: Vec<Part>,
    pub connectors: Vec<Connector>,
    pub gates: Vec<Gate>,
}

fn parse_msg_list(c: &mut Cursor) -> Result<Option<Vec<String>>> {
    if !c.eat_punct(":") {
        return Ok(None);
    }
    let mut out = vec![c.expect_ident()?];
    while c.eat_punct(",") {
        out.push(c.expect_ident()?);
    }
    Ok(Some(out))
}

pub fn parse_cmp(text: &str) -> Result<Component> {
    let mut c = Cursor::new(text)?;
    c.expect_kw("component")?;
    let name = c.expect_ident()?;
    c.expect_punct("{")?;
    let mut comp = Component {
        name,
        parts: Vec::new(),
        connectors: Vec::new(),
        gates: Vec::new(),
    };
    let mut diags = Vec::new();
    loop {
        c.skip_semis();
        if c.eat_punct("}") {
            break;
        }
        let (line, col) = c.loc();
        if c.eat_kw("part") {
            let n = c.expect_ident()?;
            c.expect_punct(":")?;
            let class = c.expect_ident()?;
            c.expect_kw("machine")?;
            let machine = c.expect_ident()?;
            if comp.parts.iter().any(|p| p.name == n) {
                diags.push(Diagnostic::new(line, col, format!("duplicate part {n}")));
            }
            comp.parts.push(Part { name: n, class, machine });
        } else if c.eat_kw("connector") {
            let a = c.expect_ident()?;
            c.expect_punct("--")?;
            let b = c.expect_ident()?;
            let messages = parse_msg_list(&mut c)?;
            for p in [&a, &b] {
                if !comp.parts.iter().any(|x| &x.name == p) {
                    diags.push(Diagnostic::new(line, col, format!("connector end {p} is not a part")));
                }
            }
            comp.connectors.push(Connector { a, b, messages });
        } else if c.eat_kw("gate") {
            let g = c.expect_ident()?;
            c.expect_punct("->")?;
            let part = c.expect_ident()?;
            let messages = parse_msg_list(&mut c)?;
            if !comp.parts.iter().any(|x| x.name == part) {
                diags.push(Diagnostic::new(line, col, format!("gate {g} targets unknown part {part}")));
            }
            comp.gates.push(Gate { name: g, part, messages });
        } else {
            return Err(c.unexpected());
        }
    }
    c.skip_semis();
    c.expect_end()?;
    if !diags.is_empty() {
        return Err(Error::Diagnostics(
            diags.into_iter().map(|d| d.tagged(Taxonomy::SYNTACTIC_BEHAVIOURAL)).collect(),
        ));
    }
    Ok(comp)
}

impl Component {
    pub fn part(&self, name: &str) -> Option<&Part> {
        self.parts.iter().find(|p| p.name == name)
    }

    /// Checks part classes, machine contexts, and message lists.
    pub fn check(&self, sig: &Signature, machines: &[&StateMachine]) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let d = |m: String| Diagnostic::unlocated(format!("component {}: {m}", self.name)).tagged(Taxonomy::SYNTACTIC_BEHAVIOURAL);
        for p in &self.parts {
            if !sig.classes.contains_key(&p.class) {
                diags.push(d(format!("part {} has unknown class {}", p.name, p.class)));
            }
            match machines.iter().find(|m| m.name == p.machine) {
                None => diags.push(d(format!("part {} runs unknown machine {}", p.name, p.machine))),
                Some(m) if m.class != p.class => diags.push(d(format!(
                    "part {} of class {} runs machine {} for class {}",
                    p.name, p.class, m.name, m.class
                ))),
                _ => {}
            }
        }
        for cn in &self.connectors {
            if let Some(ms) = &cn.messages {
                let classes: Vec<&str> = [&cn.a, &cn.b]
                    .iter()
                    .filter_map(|p| self.part(p))
                    .map(|p| p.class.as_str())
                    .collect();
                for m in ms {
                    if !classes.iter().any(|c| sig.reception(c, m).is_some()) {
                        diags.push(d(format!("connector {} -- {} carries {m}, received by neither end", cn.a, cn.b)));
                    }
                }
            }
        }
        for g in &self.gates {
            if let (Some(ms), Some(p)) = (&g.messages, self.part(&g.part)) {
                for m in ms {
                    if sig.reception(&p.class, m).is_none() {
                        diags.push(d(format!("gate {} injects {m}, not a reception of {}", g.name, p.class)));
                    }
                }
            }
        }
        diags
    }

    /// Whether a connector between `from` and `to` carries `msg` (which must
    /// be a reception of `to`'s class).
    pub fn carries(&self, sig: &Signature, from: &str, to: &str, msg: &str) -> bool {
        let Some(tp) = self.part(to) else {
            return false;
        };
        if sig.reception(&tp.class, msg).is_none() {
            return false;
        }
        self.connectors.iter().any(|c| {
            ((c.a == from && c.b == to) || (c.a == to && c.b == from))
                && c.messages.as_ref().is_none_or(|ms| ms.iter().any(|m| m == msg))
        })
    }

    /// Messages the environment may inject into `part`.
    pub fn gate_messages(&self, sig: &Signature, part: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let Some(p) = self.part(part) else {
            return out;
        };
        for g in self.gates.iter().filter(|g| g.part == part) {
            match &g.messages {
                Some(ms) => out.extend(ms.iter().filter(|m| sig.reception(&p.class, m).is_some()).cloned()),
                None => out.extend(sig.all_receptions(&p.class).into_keys()),
            }
        }
        out
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        let mut out = BTreeSet::new();
        for p in &self.parts {
            out.insert(Symbol::Class(p.class.clone()));
        }
        for ms in self
            .connectors
            .iter()
            .filter_map(|c| c.messages.as_ref())
            .chain(self.gates.iter().filter_map(|g| g.messages.as_ref()))
        {
            out.extend(ms.iter().map(|m| Symbol::Message(m.clone())));
        }
        out.into_iter().collect()
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "component {} {{", self.name)?;
        for p in &self.parts {
            writeln!(f, "  part {}: {} machine {}", p.name, p.class, p.machine)?;
        }
        for c in &self.connectors {
            write!(f, "  connector {} -- {}", c.a, c.b)?;
            if let Some(ms) = &c.messages {
                write!(f, " : {}", ms.join(", "))?;
            }
            writeln!(f)?;
        }
        for g in &self.gates {
            write!(f, "  gate {} -> {}", g.name, g.part)?;
            if let Some(ms) = &g.messages {
                write!(f, " : {}", ms.join(", "))?;
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
    fn corpus_shape() {
        let c = parse_cmp(
            "component System { part atm: ATM machine ATM_stm ; part bank: Bank machine Bank_stm ; connector atm -- bank ; gate user -> atm }",
        )
        .unwrap();
        assert_eq!(c.parts.len(), 2);
        assert_eq!(c.connectors.len(), 1);
        assert_eq!(c.gates.len(), 1);
        assert_eq!(parse_cmp(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn zero_parts() {
        let c = parse_cmp("component Empty { }").unwrap();
        assert!(c.parts.is_empty());
    }

    #[test]
    fn dangling_connector() {
        let err = parse_cmp("component S { part a: A machine M ; connector a -- b }").unwrap_err();
        assert!(err.to_string().contains("connector end b is not a part"));
    }
}
