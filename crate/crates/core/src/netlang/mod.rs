//! Network specifications: syntax, resolution, and export.

mod ast;
mod dot;
mod parse;
mod resolve;

pub use ast::{Decl, ModelExpr, NetSpec};
pub use dot::export_dot;
pub use parse::parse_dol;
pub use resolve::{resolve, resolve_file, Graph, Library, Link, Network, Node, NodeDef, ViewKind};
