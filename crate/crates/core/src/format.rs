//! The line-oriented text format for nets.
//!
//! ```text
//! # comment
//! net <name>
//! place <id> [marked]
//! trans <id> label <action|tau>
//! arc <id> -> <id>
//! ```

use std::fmt::Write as _;
use thiserror::Error;

use crate::net::{Arc, BuildError, Label, LabelledNet, NetBuilder};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: duplicate element {name:?}")]
    DuplicateElement {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("line {line}, column {column}: unknown endpoint {name:?}")]
    UnknownEndpoint {
        line: usize,
        column: usize,
        name: String,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::DuplicateElement { line, .. }
            | ParseError::UnknownEndpoint { line, .. } => *line,
        }
    }
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(s, tok)| (line[..s].chars().count() + 1, tok))
        .collect()
}

pub fn parse_net(text: &str) -> Result<LabelledNet, ParseError> {
    let mut b = NetBuilder::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks = tokens(content);
        let Some(&(col0, kw)) = toks.first() else {
            continue;
        };
        let syntax = |column: usize, message: String| ParseError::Syntax {
            line: line_no,
            column,
            message,
        };
        let build_err = |column: usize, e: BuildError| match e {
            BuildError::DuplicateElement(name) | BuildError::DuplicateArc(name, _) => {
                ParseError::DuplicateElement {
                    line: line_no,
                    column,
                    name,
                }
            }
            BuildError::UnknownEndpoint(name) => ParseError::UnknownEndpoint {
                line: line_no,
                column,
                name,
            },
            other => syntax(column, other.to_string()),
        };
        let end_col = content.chars().count() + 1;
        match kw {
            "net" => {
                if seen_header {
                    return Err(syntax(col0, "repeated net header".into()));
                }
                match toks.as_slice() {
                    [_, (_, name)] => b.set_name(Some(name.to_string())),
                    [_] => return Err(syntax(end_col, "expected net name".into())),
                    [_, _, (c, _), ..] => return Err(syntax(*c, "unexpected token".into())),
                    [] => unreachable!(),
                }
                seen_header = true;
            }
            "place" => match toks.as_slice() {
                [_, (c, id)] => {
                    b.add_place(id, false).map_err(|e| build_err(*c, e))?;
                }
                [_, (c, id), (c2, flag)] => {
                    if *flag != "marked" {
                        return Err(syntax(*c2, format!("expected `marked`, found {flag:?}")));
                    }
                    b.add_place(id, true).map_err(|e| build_err(*c, e))?;
                }
                [_] => return Err(syntax(end_col, "expected place identifier".into())),
                [_, _, _, (c, _), ..] => return Err(syntax(*c, "unexpected token".into())),
                [] => unreachable!(),
            },
            "trans" => match toks.as_slice() {
                [_, (c, id), (c2, kw2), (c3, label)] => {
                    if *kw2 != "label" {
                        return Err(syntax(*c2, format!("expected `label`, found {kw2:?}")));
                    }
                    let _ = c3;
                    b.add_transition(id, Label::parse(label))
                        .map_err(|e| build_err(*c, e))?;
                }
                [_, (_, _), (_, _), (_, _), (c, _), ..] => {
                    return Err(syntax(*c, "unexpected token".into()))
                }
                _ => {
                    return Err(syntax(
                        end_col,
                        "expected `trans <id> label <action|tau>`".into(),
                    ))
                }
            },
            "arc" => match toks.as_slice() {
                [_, (c1, from), (c2, arrow), (c3, to)] => {
                    if *arrow != "->" {
                        return Err(syntax(*c2, format!("expected `->`, found {arrow:?}")));
                    }
                    b.add_arc(from, to).map_err(|e| match e {
                        BuildError::UnknownEndpoint(ref n) if n == from => build_err(*c1, e),
                        BuildError::DuplicateArc(..) => build_err(*c1, e),
                        _ => build_err(*c3, e),
                    })?;
                }
                [_, _, _, _, (c, _), ..] => return Err(syntax(*c, "unexpected token".into())),
                _ => return Err(syntax(end_col, "expected `arc <id> -> <id>`".into())),
            },
            other => return Err(syntax(col0, format!("unknown declaration {other:?}"))),
        }
    }
    Ok(b.build())
}

/// Canonical text: header, places, transitions, then arcs in declaration
/// order. `parse_net(&emit_net(n)) == n`.
pub fn emit_net(net: &LabelledNet) -> String {
    let mut out = String::new();
    if let Some(name) = net.name() {
        let _ = writeln!(out, "net {name}");
    }
    for p in net.places() {
        let _ = write!(out, "place {}", net.place_name(p));
        if net.is_marked_initially(p) {
            out.push_str(" marked");
        }
        out.push('\n');
    }
    for t in net.transitions() {
        let _ = writeln!(out, "trans {} label {}", net.trans_name(t), net.label(t));
    }
    for arc in net.arcs() {
        let (from, to) = match *arc {
            Arc::Input(p, t) => (net.place_name(p), net.trans_name(t)),
            Arc::Output(t, p) => (net.trans_name(t), net.place_name(p)),
        };
        let _ = writeln!(out, "arc {from} -> {to}");
    }
    out
}
