use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Scope, Value};
use crate::kernel::{End, Sentence, Signature, Theory};
use crate::syntax::Cursor;

/// `lo..hi`, with `hi = None` for `*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Multiplicity {
    pub lo: u32,
    pub hi: Option<u32>,
}

impl Multiplicity {
    pub const MANY: Multiplicity = Multiplicity { lo: 0, hi: None };

    pub fn admits(&self, n: usize) -> bool {
        n >= self.lo as usize && self.hi.is_none_or(|h| n <= h as usize)
    }

    pub fn parse(c: &mut Cursor) -> Result<Multiplicity> {
        let bracket = c.eat_punct("[");
        let m = if c.eat_punct("*") {
            Multiplicity::MANY
        } else {
            let lo = c.expect_int()?;
            if lo < 0 {
                return Err(c.error("negative multiplicity"));
            }
            if c.eat_punct("..") {
                if c.eat_punct("*") {
                    Multiplicity {
                        lo: lo as u32,
                        hi: None,
                    }
                } else {
                    let hi = c.expect_int()?;
                    if hi < 0 {
                        return Err(c.error("negative multiplicity"));
                    }
                    Multiplicity {
                        lo: lo as u32,
                        hi: Some(hi as u32),
                    }
                }
            } else {
                Multiplicity {
                    lo: lo as u32,
                    hi: Some(lo as u32),
                }
            }
        };
        if bracket {
            c.expect_punct("]")?;
        }
        Ok(m)
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            None if self.lo == 0 => f.write_str("*"),
            None => write!(f, "{}..*", self.lo),
            Some(h) => write!(f, "{}..{}", self.lo, h),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Object {
    pub class: String,
    pub attrs: BTreeMap<String, Value>,
}

/// A system state: objects with attribute values, and links per association.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Snapshot {
    pub objects: BTreeMap<String, Object>,
    /// Only non-empty link sets are stored.
    pub links: BTreeMap<String, BTreeSet<(String, String)>>,
}

impl Snapshot {
    pub fn add_object(&mut self, id: impl Into<String>, class: impl Into<String>, attrs: &[(&str, Value)]) {
        self.objects.insert(
            id.into(),
            Object {
                class: class.into(),
                attrs: attrs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            },
        );
    }

    pub fn add_link(&mut self, assoc: impl Into<String>, a: impl Into<String>, b: impl Into<String>) {
        self.links.entry(assoc.into()).or_default().insert((a.into(), b.into()));
    }

    /// Objects linked to `obj` through the given end of `assoc`.
    pub fn linked(&self, assoc: &str, far: End, obj: &str) -> Vec<&str> {
        let Some(set) = self.links.get(assoc) else {
            return Vec::new();
        };
        set.iter()
            .filter_map(|(a, b)| match far {
                End::B if a == obj => Some(b.as_str()),
                End::A if b == obj => Some(a.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Renames objects; ids missing from `map` are kept.
    pub fn rename_objects(&self, map: &BTreeMap<String, String>) -> Snapshot {
        let r = |id: &String| map.get(id).cloned().unwrap_or_else(|| id.clone());
        Snapshot {
            objects: self.objects.iter().map(|(k, o)| (r(k), o.clone())).collect(),
            links: self
                .links
                .iter()
                .map(|(n, set)| (n.clone(), set.iter().map(|(a, b)| (r(a), r(b))).collect()))
                .collect(),
        }
    }

    /// Writes the object-diagram body (objects then links), one item per line.
    pub fn write_body(&self, f: &mut dyn fmt::Write, indent: &str) -> fmt::Result {
        for (id, o) in &self.objects {
            write!(f, "{indent}{id}: {} {{", o.class)?;
            let attrs: Vec<String> = o.attrs.iter().map(|(a, v)| format!("{a} = {v}")).collect();
            if attrs.is_empty() {
                writeln!(f, " }}")?;
            } else {
                writeln!(f, " {} }}", attrs.join(", "))?;
            }
        }
        for (n, set) in &self.links {
            for (a, b) in set {
                writeln!(f, "{indent}link {n} ({a}, {b})")?;
            }
        }
        Ok(())
    }

    /// Parses object and link items until a closing `}` (not consumed).
    pub fn parse_body(c: &mut Cursor) -> Result<Snapshot> {
        let mut s = Snapshot::default();
        loop {
            c.skip_semis();
            if c.is_punct("}") || c.at_end() {
                return Ok(s);
            }
            s.parse_item(c)?;
        }
    }

    /// Parses one `id: Class { a = v, ... }` or `link A (x, y)` item into `self`.
    pub fn parse_item(&mut self, c: &mut Cursor) -> Result<()> {
        if c.is_kw("link") && !matches!(c.peek_at(1), Some(crate::syntax::Tok::Punct(":"))) {
            c.bump();
            let assoc = c.expect_ident()?;
            c.expect_punct("(")?;
            let a = c.expect_ident()?;
            c.expect_punct(",")?;
            let b = c.expect_ident()?;
            c.expect_punct(")")?;
            self.add_link(assoc, a, b);
            return Ok(());
        }
        let (line, col) = c.loc();
        let id = c.expect_ident()?;
        c.expect_punct(":")?;
        let class = c.expect_ident()?;
        let mut attrs = BTreeMap::new();
        if c.eat_punct("{") {
            loop {
                while c.eat_punct(",") || c.eat_punct(";") {}
                if c.eat_punct("}") {
                    break;
                }
                let (al, ac) = c.loc();
                let a = c.expect_ident()?;
                c.expect_punct("=")?;
                let v = Value::parse(c)?;
                if attrs.insert(a.clone(), v).is_some() {
                    return Err(Error::at(al, ac, format!("attribute {a} given twice")));
                }
            }
        }
        if self.objects.contains_key(&id) {
            return Err(Error::at(line, col, format!("duplicate object id {id}")));
        }
        self.objects.insert(id, Object { class, attrs });
        Ok(())
    }
}

impl fmt::Display for Snapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_body(f, "")
    }
}

struct ObjectScope<'a> {
    obj: &'a Object,
    vars: &'a BTreeMap<String, Value>,
}

impl Scope for ObjectScope<'_> {
    fn attr(&self, name: &str) -> Option<Value> {
        self.obj.attrs.get(name).cloned()
    }
    fn var(&self, name: &str) -> Option<Value> {
        self.vars.get(name).cloned()
    }
}

/// Evaluates `e` with `self` bound to object `self_id` of `s`.
pub fn eval_expr(e: &Expr, s: &Snapshot, self_id: Option<&str>, bindings: &BTreeMap<String, Value>) -> Result<Value> {
    static EMPTY: Object = Object {
        class: String::new(),
        attrs: BTreeMap::new(),
    };
    let obj = match self_id {
        Some(id) => s
            .objects
            .get(id)
            .ok_or_else(|| Error::Unresolved(format!("object {id}")))?,
        None => &EMPTY,
    };
    e.eval(&ObjectScope { obj, vars: bindings })
}

/// Typing: declared classes, total well-typed valuations, well-typed links.
pub fn typing_violation(s: &Snapshot, sig: &Signature) -> Result<Option<String>> {
    for (id, o) in &s.objects {
        if !sig.classes.contains_key(&o.class) {
            return Err(Error::Unresolved(format!("class {} of object {id}", o.class)));
        }
        let declared = sig.all_attrs(&o.class);
        for a in o.attrs.keys() {
            if !declared.iter().any(|(_, n, _)| n == a) {
                return Err(Error::Unresolved(format!("attribute {a} of object {id}")));
            }
        }
        for (_, a, t) in &declared {
            match o.attrs.get(a) {
                None => return Ok(Some(format!("attribute {a} of {id} has no value"))),
                Some(v) if !t.contains(v) => {
                    return Ok(Some(format!("{id}.{a} = {v} is outside {t}")));
                }
                _ => {}
            }
        }
    }
    for (n, set) in &s.links {
        let assoc = sig
            .assocs
            .get(n)
            .ok_or_else(|| Error::Unresolved(format!("association {n}")))?;
        for (a, b) in set {
            for (id, cls) in [(a, &assoc.a.class), (b, &assoc.b.class)] {
                match s.objects.get(id) {
                    None => return Ok(Some(format!("link {n} ({a}, {b}) refers to missing object {id}"))),
                    Some(o) if !sig.is_subclass(&o.class, cls) => {
                        return Ok(Some(format!("link {n}: {id} is not a {cls}")));
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(None)
}

pub fn invariant_holds(s: &Snapshot, sig: &Signature, class: &str, expr: &Expr) -> Result<bool> {
    let empty = BTreeMap::new();
    for o in s.objects.values() {
        if !sig.is_subclass(&o.class, class) {
            continue;
        }
        match expr.eval(&ObjectScope { obj: o, vars: &empty })? {
            Value::Bool(true) => {}
            Value::Bool(false) => return Ok(false),
            other => return Err(Error::Typing(format!("invariant evaluated to {other}"))),
        }
    }
    Ok(true)
}

pub fn multiplicity_holds(s: &Snapshot, sig: &Signature, assoc: &str, end: End, mult: &Multiplicity) -> Result<bool> {
    let a = sig
        .assocs
        .get(assoc)
        .ok_or_else(|| Error::Unresolved(format!("association {assoc}")))?;
    // objects at the opposite end each need a number of partners within `mult`
    let opposite = match end {
        End::A => &a.b.class,
        End::B => &a.a.class,
    };
    for (id, o) in &s.objects {
        if sig.is_subclass(&o.class, opposite) && !mult.admits(s.linked(assoc, end, id).len()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Why `s` fails to conform to the static part of `th`, if it does.
pub fn conformance_violation(s: &Snapshot, th: &Theory) -> Result<Option<String>> {
    if let Some(v) = typing_violation(s, &th.signature)? {
        return Ok(Some(v));
    }
    for phi in &th.sentences {
        match phi {
            Sentence::Multiplicity { assoc, end, mult } => {
                if !multiplicity_holds(s, &th.signature, assoc, *end, mult)? {
                    return Ok(Some(format!("multiplicity {mult} at {end:?} end of {assoc} violated")));
                }
            }
            Sentence::Invariant { class, expr }
                if !invariant_holds(s, &th.signature, class, expr)? => {
                    return Ok(Some(format!("invariant '{class} : {expr}' violated")));
                }
            _ => {}
        }
    }
    Ok(None)
}

/// Typing, ranges, multiplicities, and invariants all hold in `s`.
pub fn conforms(s: &Snapshot, th: &Theory) -> Result<bool> {
    Ok(conformance_violation(s, th)?.is_none())
}

/// Whether the partial snapshot `part` embeds into `full`: an injective,
/// class-preserving object map under which every given attribute value and
/// every link of `part` is present in `full`.
pub fn embeds(part: &Snapshot, full: &Snapshot) -> bool {
    let ids: Vec<&String> = part.objects.keys().collect();
    let mut map: BTreeMap<&str, &str> = BTreeMap::new();
    fn go<'a>(
        i: usize,
        ids: &[&'a String],
        part: &'a Snapshot,
        full: &'a Snapshot,
        map: &mut BTreeMap<&'a str, &'a str>,
    ) -> bool {
        if i == ids.len() {
            return part.links.iter().all(|(n, set)| {
                set.iter().all(|(a, b)| {
                    full.links
                        .get(n)
                        .is_some_and(|fs| fs.contains(&(map[a.as_str()].to_string(), map[b.as_str()].to_string())))
                })
            });
        }
        let po = &part.objects[ids[i]];
        for (fid, fo) in &full.objects {
            if fo.class != po.class || map.values().any(|v| *v == fid.as_str()) {
                continue;
            }
            if po.attrs.iter().any(|(a, v)| fo.attrs.get(a) != Some(v)) {
                continue;
            }
            map.insert(ids[i].as_str(), fid.as_str());
            if go(i + 1, ids, part, full, map) {
                return true;
            }
            map.remove(ids[i].as_str());
        }
        false
    }
    go(0, &ids, part, full, &mut map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{AssocEnd, AssocSig, ClassSig, InstitutionId};
    use crate::expr::Type;

    fn theory() -> Theory {
        let mut sig = Signature::default();
        sig.classes.insert(
            "C".into(),
            ClassSig {
                attrs: [("b".to_string(), Type::Bool)].into(),
                ..Default::default()
            },
        );
        sig.classes.insert("D".into(), ClassSig::default());
        sig.assocs.insert(
            "r".into(),
            AssocSig {
                a: AssocEnd {
                    class: "C".into(),
                    role: "c".into(),
                },
                b: AssocEnd {
                    class: "D".into(),
                    role: "d".into(),
                },
            },
        );
        let mut th = Theory::new(InstitutionId::Cd, sig);
        th.push(Sentence::Multiplicity {
            assoc: "r".into(),
            end: End::B,
            mult: Multiplicity { lo: 1, hi: Some(1) },
        });
        th
    }

    #[test]
    fn empty_snapshot_conforms_vacuously() {
        assert!(conforms(&Snapshot::default(), &theory()).unwrap());
    }

    #[test]
    fn missing_mandatory_link_violates_multiplicity() {
        // one endA object (C) with zero links, endB requires exactly one partner
        let mut s = Snapshot::default();
        s.add_object("c1", "C", &[("b", Value::Bool(true))]);
        assert!(!conforms(&s, &theory()).unwrap());
        s.add_object("d1", "D", &[]);
        s.add_link("r", "c1", "d1");
        assert!(conforms(&s, &theory()).unwrap());
    }

    #[test]
    fn undeclared_class_is_an_error() {
        let mut s = Snapshot::default();
        s.add_object("x1", "X", &[]);
        assert!(matches!(conforms(&s, &theory()), Err(Error::Unresolved(_))));
    }

    #[test]
    fn embedding_respects_attributes_and_links() {
        let mut full = Snapshot::default();
        full.add_object("c1", "C", &[("b", Value::Bool(true))]);
        full.add_object("d1", "D", &[]);
        full.add_link("r", "c1", "d1");
        let mut part = Snapshot::default();
        part.add_object("x", "C", &[]);
        part.add_object("y", "D", &[]);
        part.add_link("r", "x", "y");
        assert!(embeds(&part, &full));
        part.objects.get_mut("x").unwrap().attrs.insert("b".into(), Value::Bool(false));
        assert!(!embeds(&part, &full));
    }

    #[test]
    fn multiplicity_parse_forms() {
        for (src, want) in [
            ("[0..1]", Multiplicity { lo: 0, hi: Some(1) }),
            ("*", Multiplicity::MANY),
            ("[2]", Multiplicity { lo: 2, hi: Some(2) }),
            ("1..*", Multiplicity { lo: 1, hi: None }),
        ] {
            let mut c = Cursor::new(src).unwrap();
            assert_eq!(Multiplicity::parse(&mut c).unwrap(), want, "{src}");
        }
    }
}
