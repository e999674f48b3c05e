use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

/// Consistency-taxonomy dimension: what is inspected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Syntactic,
    Semantic,
}

/// Consistency-taxonomy dimension: which aspect is inspected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Structural,
    Behavioural,
}

/// Consistency-taxonomy dimension: within one view or across views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Taxonomy {
    pub level: Level,
    pub aspect: Aspect,
    pub scope: Scope,
}

impl Taxonomy {
    pub const fn new(level: Level, aspect: Aspect, scope: Scope) -> Self {
        Taxonomy {
            level,
            aspect,
            scope,
        }
    }

    pub const SYNTACTIC_STRUCTURAL: Taxonomy =
        Taxonomy::new(Level::Syntactic, Aspect::Structural, Scope::Horizontal);
    pub const SYNTACTIC_BEHAVIOURAL: Taxonomy =
        Taxonomy::new(Level::Syntactic, Aspect::Behavioural, Scope::Horizontal);
}

impl fmt::Display for Taxonomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.level {
            Level::Syntactic => "syntactic",
            Level::Semantic => "semantic",
        };
        let aspect = match self.aspect {
            Aspect::Structural => "structural",
            Aspect::Behavioural => "behavioural",
        };
        let scope = match self.scope {
            Scope::Horizontal => "horizontal",
            Scope::Vertical => "vertical",
        };
        write!(f, "{level}/{aspect}/{scope}")
    }
}

/// A located problem found while parsing or validating a view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
    pub tag: Taxonomy,
}

impl Diagnostic {
    pub fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            line,
            col,
            message: message.into(),
            tag: Taxonomy::SYNTACTIC_STRUCTURAL,
        }
    }

    pub fn unlocated(message: impl Into<String>) -> Self {
        Diagnostic::new(0, 0, message)
    }

    pub fn tagged(mut self, tag: Taxonomy) -> Self {
        self.tag = tag;
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "{}:{}: {} [{}]", self.line, self.col, self.message, self.tag)
        } else {
            write!(f, "{} [{}]", self.message, self.tag)
        }
    }
}

fn join_diags(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}", join_diags(.0))]
    Diagnostics(Vec<Diagnostic>),

    #[error("typing error: {0}")]
    Typing(String),

    #[error("unresolved symbol: {0}")]
    Unresolved(String),

    #[error("ambiguous symbol: {0}")]
    Ambiguity(String),

    #[error("cyclic definition: {0}")]
    Cycle(String),

    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("witness error: {0}")]
    Witness(String),

    #[error("unknown network '{0}'")]
    UnknownNetwork(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn at(line: usize, col: usize, message: impl Into<String>) -> Self {
        Error::Diagnostics(vec![Diagnostic::new(line, col, message)])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Diagnostics carried by this error, if it is a located one.
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            Error::Diagnostics(d) => d,
            _ => &[],
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
