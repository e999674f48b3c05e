//! Graphviz export of development graphs.

use std::fmt::Write;

use super::resolve::Graph;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Nodes labelled `name:INST`; definitional edges solid, refinements dashed.
pub fn export_dot(g: &Graph) -> String {
    let mut out = String::from("digraph development {\n");
    for n in &g.nodes {
        let label = format!("{}:{}", n.name, n.institution());
        writeln!(out, "  {} [label={}];", quote(&n.name), quote(&label)).unwrap();
    }
    for n in &g.nodes {
        for op in n.def.operands() {
            writeln!(out, "  {} -> {} [label={}];", quote(op), quote(&n.name), quote(n.def.label())).unwrap();
        }
    }
    for l in &g.links {
        writeln!(
            out,
            "  {} -> {} [style=dashed, label={}];",
            quote(&l.abstract_node),
            quote(&l.concrete_node),
            quote(&l.name)
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
