use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use super::StateGraph;
use crate::error::{Error, Result};
use crate::model::State;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    GraphMl,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "graphml" => Ok(ExportFormat::GraphMl),
            other => Err(format!("unknown export format `{other}`")),
        }
    }
}

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f",
];

/// Colour per time label, assigned in label order.
fn colours(labels: &BTreeMap<State, BTreeSet<String>>) -> BTreeMap<String, &'static str> {
    let all: BTreeSet<&String> = labels.values().flatten().collect();
    all.into_iter()
        .enumerate()
        .map(|(k, l)| (l.clone(), PALETTE[k % PALETTE.len()]))
        .collect()
}

fn node_labels<'a>(
    labels: &'a BTreeMap<State, BTreeSet<String>>,
    s: State,
) -> Vec<&'a str> {
    labels
        .get(&s)
        .map(|ls| ls.iter().map(String::as_str).collect())
        .unwrap_or_default()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Graphviz DOT. Nodes carry the state in hex, its bit string, time labels
/// and component id; nodes are filled by their first time label.
pub fn export_dot(g: &StateGraph, labels: &BTreeMap<State, BTreeSet<String>>) -> String {
    let palette = colours(labels);
    let comp = g.component_ids();
    let mut out = String::from("graph states {\n  node [style=filled];\n");
    for (v, s) in g.nodes().iter().enumerate() {
        let ls = node_labels(labels, *s);
        let fill = ls.first().map_or("#ffffff", |l| palette[*l]);
        let _ = writeln!(
            out,
            "  n{v} [label=\"{}\", bits=\"{}\", time=\"{}\", component={}, fillcolor=\"{fill}\"];",
            s.to_hex(),
            s.to_bit_string(g.genes().len()),
            ls.join(";"),
            comp[v]
        );
    }
    for e in g.edges() {
        let _ = writeln!(
            out,
            "  n{} -- n{} [label=\"{}\"];",
            e.a,
            e.b,
            g.genes().name(e.gene).replace('"', "\\\"")
        );
    }
    out.push_str("}\n");
    out
}

pub fn export_graphml(g: &StateGraph, labels: &BTreeMap<State, BTreeSet<String>>) -> String {
    let palette = colours(labels);
    let comp = g.component_ids();
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n\
         \x20 <key id=\"state\" for=\"node\" attr.name=\"state\" attr.type=\"string\"/>\n\
         \x20 <key id=\"bits\" for=\"node\" attr.name=\"bits\" attr.type=\"string\"/>\n\
         \x20 <key id=\"time\" for=\"node\" attr.name=\"time\" attr.type=\"string\"/>\n\
         \x20 <key id=\"component\" for=\"node\" attr.name=\"component\" attr.type=\"int\"/>\n\
         \x20 <key id=\"color\" for=\"node\" attr.name=\"color\" attr.type=\"string\"/>\n\
         \x20 <key id=\"gene\" for=\"edge\" attr.name=\"gene\" attr.type=\"string\"/>\n\
         \x20 <graph id=\"states\" edgedefault=\"undirected\">\n",
    );
    for (v, s) in g.nodes().iter().enumerate() {
        let ls = node_labels(labels, *s);
        let fill = ls.first().map_or("#ffffff", |l| palette[*l]);
        let _ = write!(
            out,
            "    <node id=\"n{v}\">\
             <data key=\"state\">{}</data>\
             <data key=\"bits\">{}</data>\
             <data key=\"time\">{}</data>\
             <data key=\"component\">{}</data>\
             <data key=\"color\">{fill}</data></node>\n",
            s.to_hex(),
            s.to_bit_string(g.genes().len()),
            escape(&ls.join(";")),
            comp[v]
        );
    }
    for (k, e) in g.edges().iter().enumerate() {
        let _ = writeln!(
            out,
            "    <edge id=\"e{k}\" source=\"n{}\" target=\"n{}\"><data key=\"gene\">{}</data></edge>",
            e.a,
            e.b,
            escape(g.genes().name(e.gene))
        );
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

pub fn write_export(
    g: &StateGraph,
    labels: &BTreeMap<State, BTreeSet<String>>,
    format: ExportFormat,
    path: &Path,
) -> Result<()> {
    let text = match format {
        ExportFormat::Dot => export_dot(g, labels),
        ExportFormat::GraphMl => export_graphml(g, labels),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
