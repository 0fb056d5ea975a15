//! Line-oriented text format for structures.
//!
//! ```text
//! deepwl-structure v1
//! rel 0
//! n 2
//! edge 0 0 1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::structure::{Relation, Structure};
use crate::symbol::Symbol;

pub const HEADER: &str = "deepwl-structure v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("missing header `{HEADER}`")]
    MissingHeader,
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("wrong number of fields for `{0}`")]
    Arity(&'static str),
    #[error("invalid symbol `{0}`")]
    BadSymbol(String),
    #[error("invalid integer `{0}`")]
    BadInteger(String),
    #[error("duplicate relation symbol {0}")]
    DuplicateSymbol(Symbol),
    #[error("universe size declared twice")]
    DuplicateSize,
    #[error("edge before universe size")]
    SizeMissing,
    #[error("edge under undeclared symbol {0}")]
    UndeclaredSymbol(Symbol),
    #[error("vertex {vertex} out of range for universe of size {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
}

pub fn load_structure(text: &str) -> Result<Structure, ParseError> {
    let err = |line: usize, kind| ParseError { line, kind };
    let mut relations: BTreeMap<Symbol, Relation> = BTreeMap::new();
    let mut n: Option<usize> = None;
    let mut saw_header = false;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if !saw_header {
            if tokens.join(" ") != HEADER {
                return Err(err(line, ParseErrorKind::MissingHeader));
            }
            saw_header = true;
            continue;
        }
        let Some((&head, args)) = tokens.split_first() else {
            continue;
        };
        match head {
            "rel" => {
                let [s] = args else {
                    return Err(err(line, ParseErrorKind::Arity("rel")));
                };
                let sym: Symbol = s
                    .parse()
                    .map_err(|_| err(line, ParseErrorKind::BadSymbol(s.to_string())))?;
                if relations.contains_key(&sym) {
                    return Err(err(line, ParseErrorKind::DuplicateSymbol(sym)));
                }
                relations.insert(sym, Relation::new());
            }
            "n" => {
                let [c] = args else {
                    return Err(err(line, ParseErrorKind::Arity("n")));
                };
                if n.is_some() {
                    return Err(err(line, ParseErrorKind::DuplicateSize));
                }
                n = Some(
                    c.parse()
                        .map_err(|_| err(line, ParseErrorKind::BadInteger(c.to_string())))?,
                );
            }
            "edge" => {
                let [s, u, v] = args else {
                    return Err(err(line, ParseErrorKind::Arity("edge")));
                };
                let size = n.ok_or_else(|| err(line, ParseErrorKind::SizeMissing))?;
                let sym: Symbol = s
                    .parse()
                    .map_err(|_| err(line, ParseErrorKind::BadSymbol(s.to_string())))?;
                let mut ends = [0usize; 2];
                for (slot, tok) in ends.iter_mut().zip([u, v]) {
                    *slot = tok
                        .parse()
                        .map_err(|_| err(line, ParseErrorKind::BadInteger(tok.to_string())))?;
                    if *slot >= size {
                        return Err(err(
                            line,
                            ParseErrorKind::VertexOutOfRange {
                                vertex: *slot,
                                n: size,
                            },
                        ));
                    }
                }
                let rel = relations
                    .get_mut(&sym)
                    .ok_or_else(|| err(line, ParseErrorKind::UndeclaredSymbol(sym.clone())))?;
                rel.insert((ends[0], ends[1]));
            }
            other => {
                return Err(err(
                    line,
                    ParseErrorKind::UnknownDirective(other.to_string()),
                ))
            }
        }
    }
    if !saw_header {
        return Err(err(last_line.max(1), ParseErrorKind::MissingHeader));
    }
    Ok(Structure::from_parts(n.unwrap_or(0), relations))
}

pub fn save_structure(a: &Structure) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for s in a.symbols() {
        writeln!(out, "rel {s}").unwrap();
    }
    writeln!(out, "n {}", a.n()).unwrap();
    for (s, rel) in a.relations() {
        for (u, v) in rel {
            writeln!(out, "edge {s} {u} {v}").unwrap();
        }
    }
    out
}
