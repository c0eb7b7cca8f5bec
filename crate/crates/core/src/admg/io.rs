//! Plain-text graph format.
//!
//! ```text
//! # comment
//! node Z
//! A -> B
//! A <-> C
//! ```
//!
//! Serialization is canonical: `node` lines for isolated vertices, then
//! directed edges, then bidirected edges, each block sorted.

use std::fmt;
use std::str::FromStr;

use super::{Admg, AdmgBuilder, GraphError, Result};

impl Admg {
    pub fn parse(text: &str) -> Result<Admg> {
        let mut b = AdmgBuilder::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let line_no = lineno + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| GraphError::Parse { line: line_no, message };
            if let Some(rest) = line.strip_prefix("node ") {
                let name = rest.trim();
                check_name(name).map_err(err)?;
                b.add_node(name);
            } else if let Some((l, r)) = line.split_once("<->") {
                let (l, r) = (l.trim(), r.trim());
                check_name(l).map_err(err)?;
                check_name(r).map_err(err)?;
                b.add_bidirected(l, r);
            } else if let Some((l, r)) = line.split_once("->") {
                let (l, r) = (l.trim(), r.trim());
                check_name(l).map_err(err)?;
                check_name(r).map_err(err)?;
                b.add_directed(l, r);
            } else {
                return Err(err(format!("unrecognized line `{line}`")));
            }
        }
        b.build()
    }

    /// Canonical text form; `Admg::parse(&g.to_text()) == g`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

fn check_name(name: &str) -> std::result::Result<(), String> {
    if name.is_empty() {
        return Err("missing vertex name".into());
    }
    if name.chars().any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '#')) {
        return Err(format!("invalid vertex name `{name}`"));
    }
    Ok(())
}

impl FromStr for Admg {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self> {
        Admg::parse(s)
    }
}

impl fmt::Display for Admg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, name) in self.names.iter().enumerate() {
            if self.parents[i].is_empty() && self.children[i].is_empty() && self.siblings[i].is_empty() {
                writeln!(f, "node {name}")?;
            }
        }
        for (t, h) in self.directed_edges() {
            writeln!(f, "{t} -> {h}")?;
        }
        for (a, b) in self.bidirected_edges() {
            writeln!(f, "{a} <-> {b}")?;
        }
        Ok(())
    }
}
