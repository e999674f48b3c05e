use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Diagnostic, Error, Result};
use crate::expr::Type;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct ClassSig {
    pub parent: Option<String>,
    /// Attributes declared on this class only.
    pub attrs: BTreeMap<String, Type>,
    /// Receptions declared on this class only.
    pub receptions: BTreeMap<String, Vec<Param>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AssocEnd {
    pub class: String,
    pub role: String,
}

/// A binary association. Links are stored as `(a-object, b-object)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AssocSig {
    pub a: AssocEnd,
    pub b: AssocEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum End {
    A,
    B,
}

/// The data vocabulary shared by every institution: classes with attributes
/// and receptions, and associations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Signature {
    pub classes: BTreeMap<String, ClassSig>,
    pub assocs: BTreeMap<String, AssocSig>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Symbol {
    Class(String),
    /// (declaring class, attribute)
    Attr(String, String),
    /// Message names are global: one symbol per name.
    Message(String),
    Assoc(String),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Class(c) => write!(f, "class {c}"),
            Symbol::Attr(c, a) => write!(f, "attribute {c}.{a}"),
            Symbol::Message(m) => write!(f, "message {m}"),
            Symbol::Assoc(a) => write!(f, "association {a}"),
        }
    }
}

impl Signature {
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.assocs.is_empty()
    }

    /// The class followed by its ancestors. Stops on cycles.
    pub fn chain<'a>(&'a self, class: &'a str) -> Vec<&'a str> {
        let mut out = vec![class];
        let mut cur = class;
        while let Some(p) = self.classes.get(cur).and_then(|c| c.parent.as_deref()) {
            if out.contains(&p) {
                break;
            }
            out.push(p);
            cur = p;
        }
        out
    }

    pub fn is_subclass(&self, class: &str, of: &str) -> bool {
        self.chain(class).contains(&of)
    }

    /// All attributes visible on `class`, as (declaring class, name, type), in
    /// name order.
    pub fn all_attrs(&self, class: &str) -> Vec<(String, String, Type)> {
        let mut out: BTreeMap<String, (String, Type)> = BTreeMap::new();
        for c in self.chain(class).into_iter().rev() {
            if let Some(cs) = self.classes.get(c) {
                for (a, t) in &cs.attrs {
                    out.insert(a.clone(), (c.to_string(), t.clone()));
                }
            }
        }
        out.into_iter().map(|(a, (c, t))| (c, a, t)).collect()
    }

    pub fn attr_type(&self, class: &str, attr: &str) -> Option<&Type> {
        self.chain(class)
            .into_iter()
            .find_map(|c| self.classes.get(c).and_then(|cs| cs.attrs.get(attr)))
    }

    pub fn attr_owner(&self, class: &str, attr: &str) -> Option<String> {
        self.chain(class)
            .into_iter()
            .find(|c| self.classes.get(*c).is_some_and(|cs| cs.attrs.contains_key(attr)))
            .map(str::to_string)
    }

    pub fn reception(&self, class: &str, msg: &str) -> Option<&Vec<Param>> {
        self.chain(class)
            .into_iter()
            .find_map(|c| self.classes.get(c).and_then(|cs| cs.receptions.get(msg)))
    }

    /// Receptions visible on `class` (own and inherited), by name.
    pub fn all_receptions(&self, class: &str) -> BTreeMap<String, Vec<Param>> {
        let mut out = BTreeMap::new();
        for c in self.chain(class).into_iter().rev() {
            if let Some(cs) = self.classes.get(c) {
                for (m, ps) in &cs.receptions {
                    out.insert(m.clone(), ps.clone());
                }
            }
        }
        out
    }

    pub fn messages(&self) -> BTreeSet<String> {
        self.classes
            .values()
            .flat_map(|c| c.receptions.keys().cloned())
            .collect()
    }

    /// Associations navigable from `class` through the far-end role `role`,
    /// returned as (association, end the role names).
    pub fn navigate(&self, class: &str, role: &str) -> Vec<(String, End)> {
        let mut out = Vec::new();
        for (name, a) in &self.assocs {
            if a.b.role == role && self.is_subclass(class, &a.a.class) {
                out.push((name.clone(), End::B));
            }
            if a.a.role == role && self.is_subclass(class, &a.b.class) {
                out.push((name.clone(), End::A));
            }
        }
        out
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for (c, cs) in &self.classes {
            out.insert(Symbol::Class(c.clone()));
            for a in cs.attrs.keys() {
                out.insert(Symbol::Attr(c.clone(), a.clone()));
            }
            for m in cs.receptions.keys() {
                out.insert(Symbol::Message(m.clone()));
            }
        }
        for a in self.assocs.keys() {
            out.insert(Symbol::Assoc(a.clone()));
        }
        out
    }

    /// Amalgamation: union with agreement on shared symbols.
    pub fn union(&self, other: &Signature) -> Result<Signature> {
        let mut out = self.clone();
        for (name, cs) in &other.classes {
            match out.classes.get_mut(name) {
                None => {
                    out.classes.insert(name.clone(), cs.clone());
                }
                Some(mine) => {
                    if mine.parent != cs.parent {
                        return Err(Error::SignatureMismatch(format!(
                            "class {name} has different parents in the two operands"
                        )));
                    }
                    for (a, t) in &cs.attrs {
                        match mine.attrs.get(a) {
                            Some(t0) if t0 != t => {
                                return Err(Error::SignatureMismatch(format!(
                                    "attribute {name}.{a} typed {t0} and {t}"
                                )))
                            }
                            Some(_) => {}
                            None => {
                                mine.attrs.insert(a.clone(), t.clone());
                            }
                        }
                    }
                    for (m, ps) in &cs.receptions {
                        match mine.receptions.get(m) {
                            Some(p0) if !same_param_types(p0, ps) => {
                                return Err(Error::SignatureMismatch(format!(
                                    "reception {name}.{m} declared with different parameters"
                                )))
                            }
                            Some(_) => {}
                            None => {
                                mine.receptions.insert(m.clone(), ps.clone());
                            }
                        }
                    }
                }
            }
        }
        for (name, a) in &other.assocs {
            match out.assocs.get(name) {
                Some(a0) if a0 != a => {
                    return Err(Error::SignatureMismatch(format!(
                        "association {name} declared with different ends"
                    )))
                }
                Some(_) => {}
                None => {
                    out.assocs.insert(name.clone(), a.clone());
                }
            }
        }
        Ok(out)
    }

    /// Checks that `sub` is included in `self`; explains the first difference.
    pub fn check_includes(&self, sub: &Signature) -> Result<(), String> {
        for (name, cs) in &sub.classes {
            let Some(mine) = self.classes.get(name) else {
                return Err(format!("class {name} missing"));
            };
            if cs.parent.is_some() && mine.parent != cs.parent {
                return Err(format!("class {name} has a different parent"));
            }
            for (a, t) in &cs.attrs {
                match self.attr_type(name, a) {
                    Some(t0) if t0 == t => {}
                    Some(t0) => return Err(format!("attribute {name}.{a} typed {t0}, expected {t}")),
                    None => return Err(format!("attribute {name}.{a} missing")),
                }
            }
            for (m, ps) in &cs.receptions {
                match self.reception(name, m) {
                    Some(p0) if same_param_types(p0, ps) => {}
                    Some(_) => return Err(format!("reception {name}.{m} has different parameter types")),
                    None => return Err(format!("reception {name}.{m} missing")),
                }
            }
        }
        for (name, a) in &sub.assocs {
            match self.assocs.get(name) {
                Some(a0) if a0 == a => {}
                _ => return Err(format!("association {name} missing or different")),
            }
        }
        Ok(())
    }

    /// Sub-signature generated by the given names: a name keeps every class,
    /// attribute, message, or association it denotes. Associations survive
    /// only when both end classes do; parents are dropped when hidden.
    pub fn restrict(&self, names: &BTreeSet<String>) -> Signature {
        let mut out = Signature::default();
        for (c, cs) in &self.classes {
            if !names.contains(c) {
                continue;
            }
            let parent = cs.parent.clone().filter(|p| names.contains(p));
            out.classes.insert(
                c.clone(),
                ClassSig {
                    parent,
                    attrs: cs
                        .attrs
                        .iter()
                        .filter(|(a, _)| names.contains(*a))
                        .map(|(a, t)| (a.clone(), t.clone()))
                        .collect(),
                    receptions: cs
                        .receptions
                        .iter()
                        .filter(|(m, _)| names.contains(*m))
                        .map(|(m, p)| (m.clone(), p.clone()))
                        .collect(),
                },
            );
        }
        for (n, a) in &self.assocs {
            if names.contains(n) && out.classes.contains_key(&a.a.class) && out.classes.contains_key(&a.b.class) {
                out.assocs.insert(n.clone(), a.clone());
            }
        }
        out
    }

    /// Every plain name occurring in the signature.
    pub fn names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (c, cs) in &self.classes {
            out.insert(c.clone());
            out.extend(cs.attrs.keys().cloned());
            out.extend(cs.receptions.keys().cloned());
        }
        out.extend(self.assocs.keys().cloned());
        out
    }

    /// Type-level well-formedness of the vocabulary itself.
    pub fn wellformed(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        for (c, cs) in &self.classes {
            if let Some(p) = &cs.parent {
                if !self.classes.contains_key(p) {
                    diags.push(Diagnostic::unlocated(format!("class {c} extends unknown class {p}")));
                }
            }
        }
        for c in self.classes.keys() {
            let mut seen = vec![c.as_str()];
            let mut cur = c.as_str();
            while let Some(p) = self.classes.get(cur).and_then(|x| x.parent.as_deref()) {
                if p == c {
                    diags.push(Diagnostic::unlocated(format!("cyclic generalization through class {c}")));
                    break;
                }
                if seen.contains(&p) {
                    break;
                }
                seen.push(p);
                cur = p;
            }
        }
        for (n, a) in &self.assocs {
            for end in [&a.a, &a.b] {
                if !self.classes.contains_key(&end.class) {
                    diags.push(Diagnostic::unlocated(format!(
                        "association {n} refers to unknown class {}",
                        end.class
                    )));
                }
            }
            if a.a.role == a.b.role {
                diags.push(Diagnostic::unlocated(format!("association {n} uses role {} twice", a.a.role)));
            }
        }
        diags
    }
}

pub fn same_param_types(a: &[Param], b: &[Param]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.ty == y.ty)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        let mut s = Signature::default();
        s.classes.insert(
            "A".into(),
            ClassSig {
                attrs: [("x".to_string(), Type::Bool)].into(),
                ..Default::default()
            },
        );
        s.classes.insert(
            "B".into(),
            ClassSig {
                parent: Some("A".into()),
                attrs: [("y".to_string(), Type::Int { lo: 0, hi: 1 })].into(),
                ..Default::default()
            },
        );
        s
    }

    #[test]
    fn inherited_attributes_are_visible() {
        let s = sig();
        let attrs: Vec<_> = s.all_attrs("B").into_iter().map(|(_, a, _)| a).collect();
        assert_eq!(attrs, vec!["x", "y"]);
        assert_eq!(s.attr_owner("B", "x").as_deref(), Some("A"));
    }

    #[test]
    fn detects_cycles() {
        let mut s = sig();
        s.classes.get_mut("A").unwrap().parent = Some("B".into());
        let diags = s.wellformed();
        assert!(diags.iter().any(|d| d.message.contains("cyclic")));
    }

    #[test]
    fn union_rejects_conflicting_types() {
        let s = sig();
        let mut t = sig();
        t.classes.get_mut("A").unwrap().attrs.insert("x".into(), Type::Int { lo: 0, hi: 2 });
        assert!(s.union(&t).is_err());
        assert_eq!(s.union(&sig()).unwrap(), s);
    }

    #[test]
    fn restrict_drops_hidden_parents() {
        let s = sig();
        let r = s.restrict(&["B".to_string(), "y".to_string()].into());
        assert_eq!(r.classes["B"].parent, None);
        assert!(r.classes["B"].attrs.contains_key("y"));
        assert!(s.check_includes(&r).is_ok());
    }
}
