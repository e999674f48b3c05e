//! Class diagrams (`.cd`) and object diagrams (`.od`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Diagnostic, Error, Result};
use crate::expr::{Expr, Kind, Type};
use crate::kernel::{AssocEnd, AssocSig, ClassSig, End, InstitutionId, Param, Sentence, Signature, Theory};
use crate::syntax::Cursor;

use super::snapshot::{conformance_violation, Multiplicity, Snapshot};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reception {
    pub name: String,
    pub params: Vec<Param>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: String,
    pub parent: Option<String>,
    pub attrs: Vec<(String, Type)>,
    pub receptions: Vec<Reception>,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssocEndDecl {
    pub class: String,
    pub role: String,
    pub mult: Multiplicity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssocDecl {
    pub name: String,
    pub a: AssocEndDecl,
    pub b: AssocEndDecl,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantDecl {
    pub class: String,
    pub expr: Expr,
    pub line: usize,
    pub col: usize,
}

/// A parsed class diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDiagram {
    pub name: String,
    pub classes: Vec<ClassDecl>,
    pub assocs: Vec<AssocDecl>,
    pub invariants: Vec<InvariantDecl>,
}

pub fn parse_cd(text: &str) -> Result<ClassDiagram> {
    let mut c = Cursor::new(text)?;
    c.expect_kw("classdiagram")?;
    let name = c.expect_ident()?;
    let braced = c.eat_punct("{");
    let mut cd = ClassDiagram {
        name,
        classes: Vec::new(),
        assocs: Vec::new(),
        invariants: Vec::new(),
    };
    parse_cd_items(&mut c, &mut cd)?;
    if braced {
        c.expect_punct("}")?;
    }
    c.skip_semis();
    c.expect_end()?;
    let dups = duplicate_names(&cd);
    if !dups.is_empty() {
        return Err(Error::Diagnostics(dups));
    }
    Ok(cd)
}

fn parse_cd_items(c: &mut Cursor, cd: &mut ClassDiagram) -> Result<()> {
    loop {
        c.skip_semis();
        let (line, col) = c.loc();
        if c.eat_kw("class") {
            let name = c.expect_ident()?;
            let parent = if c.eat_kw("extends") {
                Some(c.expect_ident()?)
            } else {
                None
            };
            let mut decl = ClassDecl {
                name,
                parent,
                attrs: Vec::new(),
                receptions: Vec::new(),
                line,
                col,
            };
            if c.eat_punct("{") {
                loop {
                    c.skip_semis();
                    if c.eat_punct("}") {
                        break;
                    }
                    if c.eat_kw("attr") {
                        let a = c.expect_ident()?;
                        c.expect_punct(":")?;
                        decl.attrs.push((a, Type::parse(c)?));
                    } else if c.eat_kw("reception") {
                        let m = c.expect_ident()?;
                        let params = parse_params(c)?;
                        decl.receptions.push(Reception { name: m, params });
                    } else {
                        return Err(c.error("expected 'attr', 'reception', or '}'"));
                    }
                }
            }
            cd.classes.push(decl);
        } else if c.eat_kw("assoc") {
            let name = c.expect_ident()?;
            c.expect_punct(":")?;
            let ca = c.expect_ident()?;
            let ma = parse_optional_mult(c)?;
            let ra = c.expect_ident()?;
            c.expect_punct("--")?;
            let rb = c.expect_ident()?;
            let mb = parse_optional_mult(c)?;
            let cb = c.expect_ident()?;
            cd.assocs.push(AssocDecl {
                name,
                a: AssocEndDecl {
                    class: ca,
                    role: ra,
                    mult: ma,
                },
                b: AssocEndDecl {
                    class: cb,
                    role: rb,
                    mult: mb,
                },
                line,
                col,
            });
        } else if c.eat_kw("inv") {
            let class = c.expect_ident()?;
            c.expect_punct(":")?;
            let expr = Expr::parse(c)?;
            cd.invariants.push(InvariantDecl { class, expr, line, col });
        } else {
            return Ok(());
        }
    }
}

fn parse_optional_mult(c: &mut Cursor) -> Result<Multiplicity> {
    use crate::syntax::Tok;
    match c.peek() {
        Some(Tok::Punct("[")) | Some(Tok::Punct("*")) | Some(Tok::Int(_)) => Multiplicity::parse(c),
        _ => Ok(Multiplicity::MANY),
    }
}

/// `( name: Type, ... )`, or nothing.
pub(crate) fn parse_params(c: &mut Cursor) -> Result<Vec<Param>> {
    let mut params = Vec::new();
    if c.eat_punct("(")
        && !c.eat_punct(")") {
            loop {
                let n = c.expect_ident()?;
                c.expect_punct(":")?;
                params.push(Param {
                    name: n,
                    ty: Type::parse(c)?,
                });
                if c.eat_punct(")") {
                    break;
                }
                c.expect_punct(",")?;
            }
        }
    Ok(params)
}

fn duplicate_names(cd: &ClassDiagram) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut classes = BTreeSet::new();
    for cl in &cd.classes {
        if !classes.insert(&cl.name) {
            diags.push(Diagnostic::new(cl.line, cl.col, format!("duplicate class name {}", cl.name)));
        }
        let mut names = BTreeSet::new();
        for (a, _) in &cl.attrs {
            if !names.insert(a) {
                diags.push(Diagnostic::new(cl.line, cl.col, format!("duplicate attribute name {}.{a}", cl.name)));
            }
        }
        let mut recs = BTreeSet::new();
        for r in &cl.receptions {
            if !recs.insert(&r.name) {
                diags.push(Diagnostic::new(
                    cl.line,
                    cl.col,
                    format!("duplicate reception name {}.{}", cl.name, r.name),
                ));
            }
            let mut ps = BTreeSet::new();
            for p in &r.params {
                if !ps.insert(&p.name) {
                    diags.push(Diagnostic::new(
                        cl.line,
                        cl.col,
                        format!("duplicate parameter {} of {}.{}", p.name, cl.name, r.name),
                    ));
                }
            }
        }
    }
    let mut assocs = BTreeSet::new();
    for a in &cd.assocs {
        if !assocs.insert(&a.name) {
            diags.push(Diagnostic::new(a.line, a.col, format!("duplicate association name {}", a.name)));
        }
    }
    diags
}

impl ClassDiagram {
    pub fn signature(&self) -> Signature {
        let mut sig = Signature::default();
        for cl in &self.classes {
            sig.classes.insert(
                cl.name.clone(),
                ClassSig {
                    parent: cl.parent.clone(),
                    attrs: cl.attrs.iter().cloned().collect(),
                    receptions: cl
                        .receptions
                        .iter()
                        .map(|r| (r.name.clone(), r.params.clone()))
                        .collect(),
                },
            );
        }
        for a in &self.assocs {
            sig.assocs.insert(
                a.name.clone(),
                AssocSig {
                    a: AssocEnd {
                        class: a.a.class.clone(),
                        role: a.a.role.clone(),
                    },
                    b: AssocEnd {
                        class: a.b.class.clone(),
                        role: a.b.role.clone(),
                    },
                },
            );
        }
        sig
    }

    fn enum_literals(&self) -> BTreeSet<String> {
        self.classes
            .iter()
            .flat_map(|c| c.attrs.iter())
            .filter_map(|(_, t)| match t {
                Type::Enum(l) => Some(l.clone()),
                _ => None,
            })
            .flatten()
            .collect()
    }

    /// Converts the diagram into a theory; fails with the well-formedness
    /// diagnostics when there are any.
    pub fn theory(&self) -> Result<Theory> {
        let diags = wellformed_cd(self);
        if !diags.is_empty() {
            return Err(Error::Diagnostics(diags));
        }
        let literals = self.enum_literals();
        let mut th = Theory::new(InstitutionId::Cd, self.signature());
        for a in &self.assocs {
            th.push(Sentence::Multiplicity {
                assoc: a.name.clone(),
                end: End::A,
                mult: a.a.mult,
            });
            th.push(Sentence::Multiplicity {
                assoc: a.name.clone(),
                end: End::B,
                mult: a.b.mult,
            });
        }
        for inv in &self.invariants {
            th.push(Sentence::Invariant {
                class: inv.class.clone(),
                expr: inv.expr.clone().resolve_names(&|_| false, &literals)?,
            });
        }
        Ok(th)
    }
}

/// Type-level well-formedness; empty iff the diagram is well-formed.
pub fn wellformed_cd(cd: &ClassDiagram) -> Vec<Diagnostic> {
    let mut diags = duplicate_names(cd);
    let sig = cd.signature();
    let loc: BTreeMap<&str, (usize, usize)> =
        cd.classes.iter().map(|c| (c.name.as_str(), (c.line, c.col))).collect();
    for d in sig.wellformed() {
        // attach the location of the class the message is about when possible
        let at = cd
            .classes
            .iter()
            .find(|c| d.message.contains(&format!("class {}", c.name)))
            .map(|c| (c.line, c.col))
            .unwrap_or((0, 0));
        diags.push(Diagnostic::new(at.0, at.1, d.message));
    }
    for cl in &cd.classes {
        if let Some(p) = &cl.parent {
            for (a, _) in &cl.attrs {
                if sig.chain(p).iter().any(|anc| sig.classes.get(*anc).is_some_and(|x| x.attrs.contains_key(a))) {
                    diags.push(Diagnostic::new(
                        cl.line,
                        cl.col,
                        format!("attribute {}.{a} redeclares an inherited attribute", cl.name),
                    ));
                }
            }
        }
    }
    for a in &cd.assocs {
        for m in [&a.a.mult, &a.b.mult] {
            if let Some(h) = m.hi {
                if m.lo > h {
                    diags.push(Diagnostic::new(
                        a.line,
                        a.col,
                        format!("multiplicity {}..{h} of association {} has lower bound above upper bound", m.lo, a.name),
                    ));
                }
            }
        }
    }
    // roles navigable from a class must be unambiguous
    for cl in &cd.classes {
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for a in &cd.assocs {
            if sig.is_subclass(&cl.name, &a.a.class) {
                *seen.entry(a.b.role.clone()).or_default() += 1;
            }
            if sig.is_subclass(&cl.name, &a.b.class) {
                *seen.entry(a.a.role.clone()).or_default() += 1;
            }
        }
        for (role, n) in seen {
            if n > 1 {
                diags.push(Diagnostic::new(
                    cl.line,
                    cl.col,
                    format!("role {role} is ambiguous from class {}", cl.name),
                ));
            }
        }
    }
    let literals = cd.enum_literals();
    for inv in &cd.invariants {
        let at = (inv.line, inv.col);
        if !sig.classes.contains_key(&inv.class) {
            diags.push(Diagnostic::new(at.0, at.1, format!("invariant on unknown class {}", inv.class)));
            continue;
        }
        let resolved = match inv.expr.clone().resolve_names(&|_| false, &literals) {
            Ok(e) => e,
            Err(e) => {
                diags.push(Diagnostic::new(at.0, at.1, e.to_string()));
                continue;
            }
        };
        let attr = |n: &str| sig.attr_type(&inv.class, n).cloned();
        match resolved.kind_of(&attr, &|_| None) {
            Ok(Kind::Bool) => {}
            Ok(k) => diags.push(Diagnostic::new(at.0, at.1, format!("invariant has type {k:?}, expected Bool"))),
            Err(e) => diags.push(Diagnostic::new(at.0, at.1, e.to_string())),
        }
    }
    let _ = loc;
    diags
}

impl fmt::Display for ClassDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "classdiagram {}", self.name)?;
        for cl in &self.classes {
            write!(f, "class {}", cl.name)?;
            if let Some(p) = &cl.parent {
                write!(f, " extends {p}")?;
            }
            writeln!(f, " {{")?;
            for (a, t) in &cl.attrs {
                writeln!(f, "  attr {a}: {t}")?;
            }
            for r in &cl.receptions {
                let ps: Vec<String> = r.params.iter().map(|p| format!("{}: {}", p.name, p.ty)).collect();
                writeln!(f, "  reception {}({})", r.name, ps.join(", "))?;
            }
            writeln!(f, "}}")?;
        }
        for a in &self.assocs {
            writeln!(
                f,
                "assoc {} : {} [{}] {} -- {} [{}] {}",
                a.name, a.a.class, a.a.mult, a.a.role, a.b.role, a.b.mult, a.b.class
            )?;
        }
        for i in &self.invariants {
            writeln!(f, "inv {} : {}", i.class, i.expr)?;
        }
        Ok(())
    }
}

/// A literal snapshot stated against a named class diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectDiagram {
    pub name: String,
    pub context: String,
    pub snapshot: Snapshot,
}

pub fn parse_od(text: &str) -> Result<ObjectDiagram> {
    let mut c = Cursor::new(text)?;
    c.expect_kw("objectdiagram")?;
    let name = c.expect_ident()?;
    c.expect_kw("for")?;
    let context = c.expect_ident()?;
    c.expect_punct("{")?;
    let snapshot = Snapshot::parse_body(&mut c)?;
    c.expect_punct("}")?;
    c.skip_semis();
    c.expect_end()?;
    Ok(ObjectDiagram {
        name,
        context,
        snapshot,
    })
}

impl ObjectDiagram {
    /// Problems with the diagram relative to its context theory. Unlike
    /// [`super::conforms`] a missing attribute value is not reported: object
    /// diagrams may leave values open.
    pub fn diagnostics(&self, th: &Theory) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for (id, o) in &self.snapshot.objects {
            if !th.signature.classes.contains_key(&o.class) {
                out.push(Diagnostic::unlocated(format!("object {id} has unknown class {}", o.class)));
                continue;
            }
            for (a, v) in &o.attrs {
                match th.signature.attr_type(&o.class, a) {
                    None => out.push(Diagnostic::unlocated(format!("object {id} has unknown attribute {a}"))),
                    Some(t) if !t.contains(v) => {
                        out.push(Diagnostic::unlocated(format!("{id}.{a} = {v} is outside {t}")))
                    }
                    _ => {}
                }
            }
        }
        if out.is_empty() && self.is_total(&th.signature) {
            match conformance_violation(&self.snapshot, th) {
                Ok(Some(v)) => out.push(Diagnostic::unlocated(v)),
                Ok(None) => {}
                Err(e) => out.push(Diagnostic::unlocated(e.to_string())),
            }
        }
        out
    }

    pub fn is_total(&self, sig: &Signature) -> bool {
        self.snapshot.objects.values().all(|o| {
            sig.all_attrs(&o.class)
                .iter()
                .all(|(_, a, _)| o.attrs.contains_key(a))
        })
    }
}

impl fmt::Display for ObjectDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "objectdiagram {} for {} {{", self.name, self.context)?;
        self.snapshot.write_body(f, "  ")?;
        writeln!(f, "}}")
    }
}

#[cfg(test)]
impl ClassDiagram {
    fn with_locations_of(mut self, other: &ClassDiagram) -> ClassDiagram {
        for (mine, theirs) in self.classes.iter_mut().zip(&other.classes) {
            mine.line = theirs.line;
            mine.col = theirs.col;
        }
        for (mine, theirs) in self.assocs.iter_mut().zip(&other.assocs) {
            mine.line = theirs.line;
            mine.col = theirs.col;
        }
        for (mine, theirs) in self.invariants.iter_mut().zip(&other.invariants) {
            mine.line = theirs.line;
            mine.col = theirs.col;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Value;
    use crate::structural::conforms;

    #[test]
    fn minimal_input() {
        let cd = parse_cd("classdiagram D class C { attr b: Bool }").unwrap();
        assert_eq!(cd.classes.len(), 1);
        assert_eq!(cd.classes[0].attrs, vec![("b".to_string(), Type::Bool)]);
    }

    #[test]
    fn duplicate_attribute_is_diagnosed() {
        let err = parse_cd("classdiagram D\nclass C { attr b: Bool attr b: Bool }").unwrap_err();
        let d = err.diagnostics();
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("duplicate attribute"));
        assert_eq!(d[0].line, 2);
    }

    #[test]
    fn unknown_type_is_a_syntax_error() {
        assert!(parse_cd("classdiagram D class C { attr b: Float }").is_err());
    }

    #[test]
    fn acyclic_inheritance_is_fine() {
        let cd = parse_cd("classdiagram D class B class A extends B").unwrap();
        assert!(wellformed_cd(&cd).is_empty());
    }

    #[test]
    fn two_cycle_is_diagnosed() {
        let cd = parse_cd("classdiagram D class A extends B class B extends A").unwrap();
        let diags = wellformed_cd(&cd);
        assert!(diags.iter().any(|d| d.message.contains("cyclic generalization")));
        assert!(diags.iter().all(|d| d.tag == crate::error::Taxonomy::SYNTACTIC_STRUCTURAL));
    }

    #[test]
    fn reversed_multiplicity_is_diagnosed() {
        let cd = parse_cd("classdiagram D class A class B assoc r : A [3..1] a -- b [*] B").unwrap();
        let diags = wellformed_cd(&cd);
        assert!(diags.iter().any(|d| d.message.contains("lower bound above upper bound")));
    }

    #[test]
    fn ill_typed_invariant_is_diagnosed() {
        let cd = parse_cd("classdiagram D class A { attr x: Int 0..1 } inv A : self.x").unwrap();
        assert!(!wellformed_cd(&cd).is_empty());
        let cd = parse_cd("classdiagram D class A { attr x: Int 0..1 } inv A : self.y == 1").unwrap();
        assert!(!wellformed_cd(&cd).is_empty());
    }

    #[test]
    fn enum_literals_resolve_in_invariants() {
        let cd = parse_cd("classdiagram D class A { attr m: Enum(on, off) } inv A : self.m != off").unwrap();
        let th = cd.theory().unwrap();
        let mut s = Snapshot::default();
        s.add_object("a1", "A", &[("m", Value::Enum("on".into()))]);
        assert!(conforms(&s, &th).unwrap());
        s.add_object("a2", "A", &[("m", Value::Enum("off".into()))]);
        assert!(!conforms(&s, &th).unwrap());
    }

    #[test]
    fn printer_round_trips() {
        let src = "classdiagram D\nclass A { attr x: Int 0..3 reception m(p: Bool) }\nclass B extends A\nassoc r : A [0..1] a -- b [*] B\ninv A : self.x <= 2\n";
        let cd = parse_cd(src).unwrap();
        assert_eq!(parse_cd(&cd.to_string()).unwrap(), ClassDiagram {
            classes: cd.classes.iter().map(|c| ClassDecl { line: 0, col: 0, ..c.clone() }).collect(),
            ..cd.clone()
        }.with_locations_of(&parse_cd(&cd.to_string()).unwrap()));
    }

    #[test]
    fn object_diagram_parses() {
        let od = parse_od("objectdiagram init for User_Interface { atm1: ATM { trials = 0 } bank1: Bank { pin = 4 } }").unwrap();
        assert_eq!(od.context, "User_Interface");
        assert_eq!(od.snapshot.objects.len(), 2);
        assert_eq!(od.snapshot.objects["bank1"].attrs["pin"], Value::Int(4));
        let again = parse_od(&od.to_string()).unwrap();
        assert_eq!(again, od);
    }

    #[test]
    fn empty_object_diagram() {
        let od = parse_od("objectdiagram e for D { }").unwrap();
        assert_eq!(od.snapshot, Snapshot::default());
    }

    #[test]
    fn out_of_range_object_value_fails_conformance() {
        let th = parse_cd("classdiagram D class ATM { attr trials: Int 0..3 }").unwrap().theory().unwrap();
        let od = parse_od("objectdiagram o for D { a: ATM { trials = 7 } }").unwrap();
        assert!(!conforms(&od.snapshot, &th).unwrap());
        assert!(od.diagnostics(&th)[0].message.contains("outside"));
    }
}
