//! Abstract syntax of network specifications, and its printer.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelExpr {
    /// A declared model or a view file.
    Ref(String),
    And(Box<ModelExpr>, Box<ModelExpr>),
    /// Extension by a native view found by name.
    Then(Box<ModelExpr>, String),
    Translate {
        base: Box<ModelExpr>,
        comorphism: String,
        map: Vec<(String, String)>,
    },
    Hide {
        base: Box<ModelExpr>,
        morphism: String,
    },
    /// A single name may denote a model whose signature is revealed.
    Reveal {
        base: Box<ModelExpr>,
        symbols: Vec<String>,
    },
    Group(Box<ModelExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Model {
        name: String,
        annotations: Vec<String>,
        expr: ModelExpr,
    },
    Refinement {
        name: String,
        annotations: Vec<String>,
        abstract_side: ModelExpr,
        concrete_side: ModelExpr,
    },
    Network {
        name: String,
        annotations: Vec<String>,
        elements: Vec<String>,
    },
    Library {
        entries: Vec<(String, String)>,
    },
}

impl Decl {
    pub fn name(&self) -> Option<&str> {
        match self {
            Decl::Model { name, .. } | Decl::Refinement { name, .. } | Decl::Network { name, .. } => Some(name),
            Decl::Library { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NetSpec {
    pub decls: Vec<Decl>,
}

impl fmt::Display for ModelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelExpr::Ref(n) => f.write_str(n),
            ModelExpr::And(a, b) => write!(f, "{a} and {b}"),
            ModelExpr::Then(a, n) => write!(f, "{a} then {n}"),
            ModelExpr::Translate { base, comorphism, map } => {
                write!(f, "{base} with translation {comorphism}")?;
                if !map.is_empty() {
                    let items: Vec<String> = map.iter().map(|(a, b)| format!("{a} |-> {b}")).collect();
                    write!(f, " with {}", items.join(", "))?;
                }
                Ok(())
            }
            ModelExpr::Hide { base, morphism } => write!(f, "{base} hide along {morphism}"),
            ModelExpr::Reveal { base, symbols } => write!(f, "{base} reveal {}", symbols.join(", ")),
            ModelExpr::Group(e) => write!(f, "{{ {e} }}"),
        }
    }
}

fn annotations(f: &mut fmt::Formatter<'_>, anns: &[String]) -> fmt::Result {
    for a in anns {
        write!(f, " %{a}")?;
    }
    Ok(())
}

impl fmt::Display for Decl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decl::Model {
                name,
                annotations: anns,
                expr,
            } => {
                write!(f, "model {name} =")?;
                annotations(f, anns)?;
                write!(f, "\n  {expr}\nend\n")
            }
            Decl::Refinement {
                name,
                annotations: anns,
                abstract_side,
                concrete_side,
            } => {
                write!(f, "refinement {name} =")?;
                annotations(f, anns)?;
                write!(f, "\n  {abstract_side}\n  refined to {concrete_side}\nend\n")
            }
            Decl::Network {
                name,
                annotations: anns,
                elements,
            } => {
                write!(f, "network {name} =")?;
                annotations(f, anns)?;
                write!(f, "\n  {}\nend\n", elements.join(", "))
            }
            Decl::Library { entries } => {
                writeln!(f, "library {{")?;
                for (n, p) in entries {
                    writeln!(f, "  {n} = \"{p}\"")?;
                }
                writeln!(f, "}}")
            }
        }
    }
}

impl fmt::Display for NetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.decls.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}
