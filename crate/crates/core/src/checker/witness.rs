//! Witness bundles on disk.
//!
//! A bundle directory holds `init.od`, `trace.txt` (the filmstrip),
//! `ts.txt` (one digest line per node), `realizations.txt` (file and node
//! name per line) and the realizations themselves under `nodes/`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interaction::TraceSet;
use crate::kernel::{Realization, RealizationBody};
use crate::netlang::Node;
use crate::structural::{EventLabel, SnapshotTs};

use super::verdict::{digest, Witness};

fn file_stem(k: usize, name: &str) -> String {
    let clean: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    let clean = clean.trim_matches('_');
    format!("{k:02}_{}", &clean[..clean.len().min(40)])
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn traces_text(traces: &std::collections::BTreeSet<Vec<EventLabel>>, depth: usize) -> String {
    let mut out = format!("depth {depth}\n");
    for t in traces {
        out.push_str("trace\n");
        for e in t {
            let _ = writeln!(out, "  {e}");
        }
        out.push_str("end\n");
    }
    out
}

fn parse_traces(text: &str) -> Result<TraceSet> {
    let bad = |line: usize, what: &str| Error::Witness(format!("line {line}: {what}"));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let depth = match lines.next() {
        Some((n, l)) => l
            .strip_prefix("depth ")
            .and_then(|d| d.trim().parse().ok())
            .ok_or_else(|| bad(n, "expected `depth N`"))?,
        None => return Err(bad(1, "empty trace file")),
    };
    let mut traces = Vec::new();
    let mut current: Option<Vec<EventLabel>> = None;
    for (n, l) in lines {
        match (l, current.as_mut()) {
            ("trace", None) => current = Some(Vec::new()),
            ("end", Some(_)) => traces.push(current.take().expect("open trace")),
            (_, Some(t)) => t.push(EventLabel::parse_str(l).map_err(|e| bad(n, &e.to_string()))?),
            _ => return Err(bad(n, "expected `trace`")),
        }
    }
    if current.is_some() {
        return Err(Error::Witness("unterminated trace".into()));
    }
    Ok(TraceSet::explicit(traces, depth))
}

/// The filmstrip as text: the initial state, then each step and the state
/// it reaches.
pub fn filmstrip_text(w: &Witness) -> String {
    let mut out = String::from("initial {\n");
    let _ = w.initial.write_body(&mut out, "  ");
    out.push_str("}\n");
    for (e, st) in &w.filmstrip {
        let _ = writeln!(out, "step {e} {{");
        let _ = st.write_body(&mut out, "  ");
        out.push_str("}\n");
    }
    out
}

/// Writes `w` under `dir`, creating it. `context` names the class diagram
/// the initial object diagram is stated against.
pub fn write_bundle(dir: &Path, w: &Witness, context: &str) -> Result<()> {
    let nodes_dir = dir.join("nodes");
    fs::create_dir_all(&nodes_dir).map_err(|e| Error::io(&nodes_dir, e))?;
    let mut od = format!("objectdiagram init for {context} {{\n");
    let _ = w.initial.write_body(&mut od, "  ");
    od.push_str("}\n");
    write(&dir.join("init.od"), &od)?;
    write(&dir.join("trace.txt"), &filmstrip_text(w))?;

    let mut digests = String::new();
    let mut manifest = String::new();
    for (k, (name, r)) in w.realizations.iter().enumerate() {
        let d = digest(name, r);
        let _ = writeln!(digests, "{}\t{}\t{}\t{}\t{}", d.node, d.institution, d.states, d.transitions, d.hash);
        let (file, text) = match &r.body {
            RealizationBody::Ts(ts) | RealizationBody::Traces(TraceSet::System { ts, .. }) => {
                (format!("{}.ts", file_stem(k, name)), ts.to_text())
            }
            RealizationBody::Traces(TraceSet::Explicit { traces, depth }) => {
                (format!("{}.traces", file_stem(k, name)), traces_text(traces, *depth))
            }
        };
        write(&nodes_dir.join(&file), &text)?;
        let _ = writeln!(manifest, "{file}\t{name}");
    }
    write(&dir.join("ts.txt"), &digests)?;
    write(&dir.join("realizations.txt"), &manifest)
}

/// Loads one realization per node from a bundle and checks each against
/// its recorded digest.
pub fn read_bundle(dir: &Path, nodes: &[&Node], depth: usize) -> Result<BTreeMap<String, Realization>> {
    let manifest = read(&dir.join("realizations.txt"))?;
    let files: BTreeMap<&str, &str> = manifest
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(f, n)| (n, f))
        .collect();
    let digests = read(&dir.join("ts.txt"))?;
    let hashes: BTreeMap<&str, &str> = digests
        .lines()
        .filter_map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            (cols.len() == 5).then(|| (cols[0], cols[4]))
        })
        .collect();

    let mut out = BTreeMap::new();
    for n in nodes {
        let file = files
            .get(n.name.as_str())
            .ok_or_else(|| Error::Witness(format!("no realization for node {}", n.name)))?;
        let path = dir.join("nodes").join(file);
        let text = read(&path)?;
        let inst = n.institution();
        let sig = n.theory.signature.clone();
        let r = if file.ends_with(".traces") {
            Realization::new(inst, sig, RealizationBody::Traces(parse_traces(&text)?))?
        } else {
            let ts = SnapshotTs::parse_text(&text).map_err(|e| Error::Witness(format!("{}: {e}", path.display())))?;
            if inst.uses_snapshots() {
                Realization::ts(inst, sig, ts)?
            } else {
                Realization::traces(sig, TraceSet::system(Arc::new(ts), depth))
            }
        };
        if let Some(h) = hashes.get(n.name.as_str()) {
            if *h != digest(&n.name, &r).hash {
                return Err(Error::Witness(format!("realization of {} does not match its digest", n.name)));
            }
        }
        out.insert(n.name.clone(), r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_files_round_trip() {
        let e = EventLabel::parse_str("env -> a : m(1, true)").unwrap();
        let set = [vec![], vec![e.clone()], vec![e.clone(), e]].into_iter().collect();
        let text = traces_text(&set, 7);
        match parse_traces(&text).unwrap() {
            TraceSet::Explicit { traces, depth } => {
                assert_eq!(depth, 7);
                assert_eq!(traces, set);
            }
            _ => unreachable!(),
        }
        assert!(parse_traces("depth 3\ntrace\n").is_err());
        assert!(parse_traces("trace\nend\n").is_err());
    }

    #[test]
    fn stems_are_file_safe() {
        assert_eq!(file_stem(3, "{ A hide along cmp2sd }"), "03_A_hide_along_cmp2sd");
    }
}
