//! Resolution of a network specification into a development graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::behavioral::{parse_cmp, parse_stm, StateMachine};
use crate::error::{Diagnostic, Error, Result};
use crate::interaction::parse_sd;
use crate::kernel::{InstitutionId, Sentence, Theory};
use crate::morphisms::{self, interaction_theory, Translation};
use crate::structural::{parse_cd, parse_od, ObjectDiagram};

use super::ast::{Decl, ModelExpr, NetSpec};
use super::parse::parse_dol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViewKind {
    Cd,
    Od,
    Stm,
    Sd,
    Cmp,
}

impl ViewKind {
    pub const ALL: [ViewKind; 5] = [ViewKind::Cd, ViewKind::Od, ViewKind::Stm, ViewKind::Sd, ViewKind::Cmp];

    pub fn extension(self) -> &'static str {
        match self {
            ViewKind::Cd => "cd",
            ViewKind::Od => "od",
            ViewKind::Stm => "stm",
            ViewKind::Sd => "sd",
            ViewKind::Cmp => "cmp",
        }
    }

    pub fn from_path(p: &Path) -> Option<ViewKind> {
        let ext = p.extension()?.to_str()?;
        ViewKind::ALL.into_iter().find(|k| k.extension() == ext)
    }
}

/// How a node's theory arises.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeDef {
    View { kind: ViewKind, path: PathBuf },
    Alias(String),
    And(String, String),
    Then { base: String, native: String, path: PathBuf },
    Translate { base: String, comorphism: String, map: Vec<(String, String)> },
    Hide { base: String, morphism: String },
    Reveal { base: String, symbols: BTreeSet<String>, by_model: Option<String> },
}

impl NodeDef {
    /// Nodes this one is defined from.
    pub fn operands(&self) -> Vec<&str> {
        match self {
            NodeDef::View { .. } => vec![],
            NodeDef::Alias(b) => vec![b],
            NodeDef::And(a, b) => vec![a, b],
            NodeDef::Then { base, .. } | NodeDef::Translate { base, .. } | NodeDef::Hide { base, .. } => vec![base],
            NodeDef::Reveal { base, by_model, .. } => {
                let mut v = vec![base.as_str()];
                v.extend(by_model.as_deref());
                v
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NodeDef::View { .. } => "view",
            NodeDef::Alias(_) => "alias",
            NodeDef::And(..) => "and",
            NodeDef::Then { .. } => "then",
            NodeDef::Translate { .. } => "with translation",
            NodeDef::Hide { .. } => "hide along",
            NodeDef::Reveal { .. } => "reveal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub theory: Theory,
    pub def: NodeDef,
    /// Set for object-diagram views.
    pub object_diagram: Option<ObjectDiagram>,
}

impl Node {
    pub fn institution(&self) -> InstitutionId {
        self.theory.institution
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub name: String,
    pub abstract_node: String,
    pub concrete_node: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    pub name: String,
    pub annotations: Vec<String>,
    pub nodes: Vec<String>,
    pub links: Vec<String>,
}

/// The resolved development graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    /// Nodes in creation order; operands always precede their uses.
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub networks: Vec<Network>,
}

impl Graph {
    pub fn node(&self, name: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn link(&self, name: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.name == name)
    }

    pub fn network(&self, name: &str) -> Result<&Network> {
        self.networks
            .iter()
            .find(|n| n.name == name)
            .ok_or_else(|| Error::UnknownNetwork(name.to_string()))
    }
}

/// View files addressed by name.
#[derive(Debug, Clone)]
pub struct Library {
    root: PathBuf,
    entries: BTreeMap<String, PathBuf>,
}

impl Library {
    pub fn new(root: impl Into<PathBuf>) -> Library {
        Library {
            root: root.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn with_entry(mut self, name: impl Into<String>, path: impl AsRef<Path>) -> Library {
        let p = path.as_ref();
        let full = if p.is_absolute() { p.to_path_buf() } else { self.root.join(p) };
        self.entries.insert(name.into(), full);
        self
    }

    /// The view file called `name`, if any.
    pub fn locate(&self, name: &str) -> Result<Option<(ViewKind, PathBuf)>> {
        if let Some(p) = self.entries.get(name) {
            let kind = ViewKind::from_path(p)
                .ok_or_else(|| Error::Unresolved(format!("{}: unknown view file extension", p.display())))?;
            return Ok(Some((kind, p.clone())));
        }
        let found: Vec<(ViewKind, PathBuf)> = ViewKind::ALL
            .into_iter()
            .map(|k| (k, self.root.join(format!("{name}.{}", k.extension()))))
            .filter(|(_, p)| p.is_file())
            .collect();
        match found.len() {
            0 => Ok(None),
            1 => Ok(found.into_iter().next()),
            _ => Err(Error::Ambiguity(format!("several view files are named {name}"))),
        }
    }
}

pub(crate) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Prefixes located diagnostics with the file they come from.
pub(crate) fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Diagnostics(ds) => Error::Diagnostics(
            ds.into_iter()
                .map(|d| Diagnostic {
                    message: format!("{}: {}", path.display(), d.message),
                    ..d
                })
                .collect(),
        ),
        other => other,
    }
}

struct Resolver<'a> {
    lib: Library,
    models: BTreeMap<&'a str, &'a ModelExpr>,
    graph: Graph,
    visiting: Vec<String>,
}

impl Resolver<'_> {
    fn has(&self, name: &str) -> bool {
        self.graph.node(name).is_some()
    }

    fn theory(&self, name: &str) -> &Theory {
        &self.graph.node(name).expect("resolved node").theory
    }

    fn add(&mut self, name: String, theory: Theory, def: NodeDef, od: Option<ObjectDiagram>) -> String {
        self.graph.nodes.push(Node {
            name: name.clone(),
            theory,
            def,
            object_diagram: od,
        });
        name
    }

    fn load_view(&mut self, name: &str, kind: ViewKind, path: PathBuf) -> Result<String> {
        let text = read(&path)?;
        let wrap = |e| in_file(&path, e);
        let (theory, od) = match kind {
            ViewKind::Cd => (parse_cd(&text).and_then(|cd| cd.theory()).map_err(wrap)?, None),
            ViewKind::Sd => (
                parse_sd(&text).and_then(|i| interaction_theory(&i)).map_err(wrap)?,
                None,
            ),
            ViewKind::Od => {
                let od = parse_od(&text).map_err(wrap)?;
                let ctx = self.node_for_ref(&od.context)?;
                let cd = self.theory(&ctx);
                if cd.institution != InstitutionId::Cd {
                    return Err(Error::SignatureMismatch(format!(
                        "object diagram {name} is stated for {}, which is not a class diagram",
                        od.context
                    )));
                }
                let th = Theory::new(InstitutionId::Cd, cd.signature.clone());
                let diags = od.diagnostics(&th);
                if !diags.is_empty() {
                    return Err(wrap(Error::Diagnostics(diags)));
                }
                (th, Some(od))
            }
            ViewKind::Stm | ViewKind::Cmp => {
                return Err(Error::Typing(format!(
                    "{} has no class-diagram context; derive it with `with translation cd2stm then {name}`",
                    path.display()
                )))
            }
        };
        Ok(self.add(name.to_string(), theory, NodeDef::View { kind, path }, od))
    }

    fn node_for_ref(&mut self, name: &str) -> Result<String> {
        if self.has(name) {
            return Ok(name.to_string());
        }
        if self.visiting.iter().any(|v| v == name) {
            let mut chain = self.visiting.clone();
            chain.push(name.to_string());
            return Err(Error::Cycle(chain.join(" -> ")));
        }
        if let Some(e) = self.models.get(name).copied() {
            self.visiting.push(name.to_string());
            let r = self.node_for_expr(e, Some(name));
            self.visiting.pop();
            return r;
        }
        match self.lib.locate(name)? {
            Some((kind, path)) => self.load_view(name, kind, path),
            None => Err(Error::Unresolved(format!("no model or view named {name}"))),
        }
    }

    fn extend(&mut self, base: &Theory, native: &str) -> Result<(Theory, PathBuf)> {
        let (kind, path) = self
            .lib
            .locate(native)?
            .ok_or_else(|| Error::Unresolved(format!("no view named {native}")))?;
        let text = read(&path)?;
        let wrap = |e| in_file(&path, e);
        let mut th = base.clone();
        match (kind, base.institution) {
            (ViewKind::Stm, InstitutionId::Stm | InstitutionId::Cmp) => {
                let m = parse_stm(&text).and_then(|m| m.check(&th.signature)).map_err(wrap)?;
                th.push(Sentence::Machine(m));
            }
            (ViewKind::Cmp, InstitutionId::Cmp) => {
                let c = parse_cmp(&text).map_err(wrap)?;
                let machines: Vec<&StateMachine> = th.machines().collect();
                let diags = c.check(&th.signature, &machines);
                if !diags.is_empty() {
                    return Err(wrap(Error::Diagnostics(diags)));
                }
                th.push(Sentence::Component(c));
            }
            (ViewKind::Cd, InstitutionId::Cd | InstitutionId::Stm | InstitutionId::Cmp) => {
                let cd = parse_cd(&text).and_then(|cd| cd.theory()).map_err(wrap)?;
                let inst = th.institution;
                th = morphisms::union(&Theory { institution: inst, ..cd }, &th)?;
            }
            (ViewKind::Sd, InstitutionId::Sd) => {
                let i = parse_sd(&text).map_err(wrap)?;
                th = morphisms::union(&th, &interaction_theory(&i).map_err(wrap)?)?;
            }
            (k, inst) => {
                return Err(Error::SignatureMismatch(format!(
                    "a .{} view cannot extend a {inst} theory",
                    k.extension()
                )))
            }
        }
        Ok((th, path))
    }

    fn node_for_expr(&mut self, e: &ModelExpr, name: Option<&str>) -> Result<String> {
        let node_name = match name {
            Some(n) => n.to_string(),
            None => e.to_string(),
        };
        if self.has(&node_name) {
            return Ok(node_name);
        }
        match e {
            ModelExpr::Group(inner) => self.node_for_expr(inner, name),
            ModelExpr::Ref(r) => {
                let target = self.node_for_ref(r)?;
                if name.is_none() {
                    return Ok(target);
                }
                let th = self.theory(&target).clone();
                let od = self.graph.node(&target).and_then(|n| n.object_diagram.clone());
                Ok(self.add(node_name, th, NodeDef::Alias(target), od))
            }
            ModelExpr::And(a, b) => {
                let (na, nb) = (self.node_for_expr(a, None)?, self.node_for_expr(b, None)?);
                let th = morphisms::union(self.theory(&na), self.theory(&nb))?;
                Ok(self.add(node_name, th, NodeDef::And(na, nb), None))
            }
            ModelExpr::Then(a, native) => {
                let na = self.node_for_expr(a, None)?;
                let base = self.theory(&na).clone();
                let (th, path) = self.extend(&base, native)?;
                let def = NodeDef::Then {
                    base: na,
                    native: native.clone(),
                    path,
                };
                Ok(self.add(node_name, th, def, None))
            }
            ModelExpr::Translate { base, comorphism, map } => {
                let nb = self.node_for_expr(base, None)?;
                let rho = match morphisms::lookup(comorphism) {
                    Some(Translation::Comorphism(c)) => c,
                    Some(Translation::Morphism(_)) => {
                        return Err(Error::Typing(format!("{comorphism} is a morphism; use hide along")))
                    }
                    None => return Err(Error::Unresolved(format!("no translation named {comorphism}"))),
                };
                let th = morphisms::with_translation(self.theory(&nb), rho, map)?;
                let def = NodeDef::Translate {
                    base: nb,
                    comorphism: comorphism.clone(),
                    map: map.clone(),
                };
                Ok(self.add(node_name, th, def, None))
            }
            ModelExpr::Hide { base, morphism } => {
                let nb = self.node_for_expr(base, None)?;
                let mu = match morphisms::lookup(morphism) {
                    Some(Translation::Morphism(m)) => m,
                    Some(Translation::Comorphism(_)) => {
                        return Err(Error::Typing(format!("{morphism} is a comorphism; use with translation")))
                    }
                    None => return Err(Error::Unresolved(format!("no translation named {morphism}"))),
                };
                let th = morphisms::hide_along(self.theory(&nb), mu)?;
                let def = NodeDef::Hide {
                    base: nb,
                    morphism: morphism.clone(),
                };
                Ok(self.add(node_name, th, def, None))
            }
            ModelExpr::Reveal { base, symbols } => {
                let nb = self.node_for_expr(base, None)?;
                let base_names = self.theory(&nb).signature.names();
                let by_model = match symbols.as_slice() {
                    [one] if !base_names.contains(one) => Some(self.node_for_ref(one)?),
                    _ => None,
                };
                let names: BTreeSet<String> = match &by_model {
                    Some(m) => self.theory(m).signature.names(),
                    None => symbols.iter().cloned().collect(),
                };
                let th = morphisms::reveal(self.theory(&nb), &names)?;
                let def = NodeDef::Reveal {
                    base: nb,
                    symbols: names,
                    by_model,
                };
                Ok(self.add(node_name, th, def, None))
            }
        }
    }
}

/// Resolves a parsed specification against a library of view files.
pub fn resolve(spec: &NetSpec, lib: Library) -> Result<Graph> {
    let mut lib = lib;
    for d in &spec.decls {
        if let Decl::Library { entries } = d {
            for (n, p) in entries {
                lib = lib.with_entry(n.clone(), p);
            }
        }
    }
    let mut models = BTreeMap::new();
    for d in &spec.decls {
        if let Decl::Model { name, expr, .. } = d {
            models.insert(name.as_str(), expr);
        }
    }
    let mut r = Resolver {
        lib,
        models,
        graph: Graph::default(),
        visiting: Vec::new(),
    };
    let refinements: BTreeSet<&str> = spec
        .decls
        .iter()
        .filter_map(|d| match d {
            Decl::Refinement { name, .. } => Some(name.as_str()),
            _ => None,
        })
        .collect();
    for d in &spec.decls {
        match d {
            Decl::Model { name, .. } => {
                r.node_for_ref(name)?;
            }
            Decl::Refinement {
                name,
                abstract_side,
                concrete_side,
                ..
            } => {
                let a = r.node_for_expr(abstract_side, None)?;
                let c = r.node_for_expr(concrete_side, None)?;
                let (ta, tc) = (r.theory(&a), r.theory(&c));
                if ta.institution != tc.institution {
                    return Err(Error::SignatureMismatch(format!(
                        "refinement {name} relates a {} model to a {} model",
                        ta.institution, tc.institution
                    )));
                }
                tc.signature
                    .check_includes(&ta.signature)
                    .map_err(|m| Error::SignatureMismatch(format!("refinement {name}: {m}")))?;
                r.graph.links.push(Link {
                    name: name.clone(),
                    abstract_node: a,
                    concrete_node: c,
                });
            }
            Decl::Network {
                name,
                annotations,
                elements,
            } => {
                let mut net = Network {
                    name: name.clone(),
                    annotations: annotations.clone(),
                    nodes: Vec::new(),
                    links: Vec::new(),
                };
                for el in elements {
                    if refinements.contains(el.as_str()) {
                        if !r.graph.links.iter().any(|l| &l.name == el) {
                            return Err(Error::Unresolved(format!(
                                "network {name} uses refinement {el} before its declaration"
                            )));
                        }
                        net.links.push(el.clone());
                    } else {
                        net.nodes.push(r.node_for_ref(el)?);
                    }
                }
                r.graph.networks.push(net);
            }
            Decl::Library { .. } => {}
        }
    }
    Ok(r.graph)
}

/// Reads, parses, and resolves a specification file; view files are looked
/// up next to it.
pub fn resolve_file(path: &Path) -> Result<Graph> {
    let text = read(path)?;
    let spec = parse_dol(&text).map_err(|e| in_file(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    resolve(&spec, Library::new(root))
}
