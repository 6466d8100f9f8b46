//! Graphviz export. Places are circles, transitions boxes carrying their
//! label; generated elements are dashed and silent transitions filled.

use std::fmt::Write;

use crate::net::{Arc, LabelledNet, Node};
use crate::transform::{AsyncNet, AsyncOrigin, TccNet, TccOrigin};

/// Which elements of a net were produced by a construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    places: Vec<bool>,
    transitions: Vec<bool>,
}

impl Generated {
    pub fn none(net: &LabelledNet) -> Self {
        Generated {
            places: vec![false; net.place_count()],
            transitions: vec![false; net.transition_count()],
        }
    }

    pub fn of_async(imp: &AsyncNet) -> Self {
        let gen = |o: &AsyncOrigin| *o != AsyncOrigin::Original;
        Generated {
            places: imp.place_origin.iter().map(gen).collect(),
            transitions: imp.trans_origin.iter().map(gen).collect(),
        }
    }

    pub fn of_tcc(tcc: &TccNet) -> Self {
        let gen = |o: &TccOrigin| *o != TccOrigin::Original;
        Generated {
            places: tcc.place_origin.iter().map(gen).collect(),
            transitions: tcc.trans_origin.iter().map(gen).collect(),
        }
    }

    /// Reads a provenance sidecar as written by the transform commands:
    /// `{places: {name: {kind, ..}}, transitions: {..}}`. Elements missing
    /// from the sidecar count as original.
    pub fn from_provenance(net: &LabelledNet, value: &serde_json::Value) -> Self {
        let gen = |section: &str, name: &str| {
            value
                .get(section)
                .and_then(|s| s.get(name))
                .and_then(|o| o.get("kind"))
                .and_then(|k| k.as_str())
                .is_some_and(|k| k != "original")
        };
        Generated {
            places: net.places().map(|p| gen("places", net.place_name(p))).collect(),
            transitions: net.transitions().map(|t| gen("transitions", net.trans_name(t))).collect(),
        }
    }

    pub fn contains(&self, n: Node) -> bool {
        match n {
            Node::Place(p) => self.places.get(p.index()).copied().unwrap_or(false),
            Node::Trans(t) => self.transitions.get(t.index()).copied().unwrap_or(false),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn quote(s: &str) -> String {
    format!("\"{}\"", escape(s))
}

/// Two-line node label.
fn label(first: &str, second: &str) -> String {
    format!("\"{}\\n{}\"", escape(first), escape(second))
}

pub fn to_dot(net: &LabelledNet, generated: &Generated) -> String {
    let mut out = String::new();
    let name = net.name().unwrap_or("net");
    writeln!(out, "digraph {} {{", quote(name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    for p in net.places() {
        let mut style = Vec::new();
        if generated.contains(Node::Place(p)) {
            style.push("dashed");
        }
        let text = if net.is_marked_initially(p) {
            label(net.place_name(p), "\u{25CF}")
        } else {
            quote(net.place_name(p))
        };
        write!(out, "  {} [shape=circle, label={}", quote(&format!("p:{}", net.place_name(p))), text).unwrap();
        if !style.is_empty() {
            write!(out, ", style={}", quote(&style.join(","))).unwrap();
        }
        writeln!(out, "];").unwrap();
    }
    for t in net.transitions() {
        let mut style = Vec::new();
        if generated.contains(Node::Trans(t)) {
            style.push("dashed");
        }
        let shown = match net.label(t).action() {
            Some(a) => a.to_string(),
            None => {
                style.push("filled");
                "\u{03C4}".to_string()
            }
        };
        let text = label(net.trans_name(t), &shown);
        write!(out, "  {} [shape=box, label={}", quote(&format!("t:{}", net.trans_name(t))), text).unwrap();
        if !style.is_empty() {
            write!(out, ", style={}, fillcolor=gray85", quote(&style.join(","))).unwrap();
        }
        writeln!(out, "];").unwrap();
    }
    for arc in net.arcs() {
        let (from, to, dashed) = match *arc {
            Arc::Input(p, t) => (
                format!("p:{}", net.place_name(p)),
                format!("t:{}", net.trans_name(t)),
                generated.contains(Node::Place(p)) || generated.contains(Node::Trans(t)),
            ),
            Arc::Output(t, p) => (
                format!("t:{}", net.trans_name(t)),
                format!("p:{}", net.place_name(p)),
                generated.contains(Node::Place(p)) || generated.contains(Node::Trans(t)),
            ),
        };
        write!(out, "  {} -> {}", quote(&from), quote(&to)).unwrap();
        if dashed {
            write!(out, " [style=dashed]").unwrap();
        }
        writeln!(out, ";").unwrap();
    }
    out.push_str("}\n");
    out
}
