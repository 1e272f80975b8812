//! Edge-list text format: a header line `n m` followed by `m` lines `u v`.
//! Blank lines and lines starting with `#` are ignored. The writer emits
//! the canonical form (`u < v`, lexicographic order).

use std::fmt::Write as _;

use super::{Graph, GraphError, NodeId};

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize), GraphError> {
    let err = |reason: String| GraphError::Parse { line: lineno, reason };
    let mut fields = line.split_whitespace();
    let mut next = |what: &str| -> Result<usize, GraphError> {
        let tok = fields.next().ok_or_else(|| err(format!("missing {what}")))?;
        tok.parse().map_err(|_| err(format!("invalid integer {tok:?}")))
    };
    let a = next("first field")?;
    let b = next("second field")?;
    if let Some(extra) = fields.next() {
        return Err(err(format!("unexpected trailing field {extra:?}")));
    }
    Ok((a, b))
}

pub fn read_graph(text: &str) -> Result<Graph, GraphError> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) =
        lines.next().ok_or(GraphError::Parse { line: 1, reason: "missing header \"n m\"".into() })?;
    let (n, m) = parse_pair(header, header_line)?;

    let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::with_capacity(m);
    for (lineno, line) in lines {
        let err = |reason: String| GraphError::Parse { line: lineno, reason };
        if edges.len() == m {
            return Err(err(format!("more than the declared {m} edges")));
        }
        let (u, v) = parse_pair(line, lineno)?;
        if u >= n || v >= n {
            return Err(err(format!("node id {} out of range 0..{n}", u.max(v))));
        }
        if u == v {
            return Err(err(format!("self-loop on node {u}")));
        }
        let e = (u.min(v), u.max(v));
        if !seen.insert(e) {
            return Err(err(format!("duplicate edge {}-{}", e.0, e.1)));
        }
        edges.push(e);
    }
    if edges.len() != m {
        return Err(GraphError::Parse {
            line: text.lines().count().max(1),
            reason: format!("expected {m} edges, found {}", edges.len()),
        });
    }
    Graph::from_edges(n, edges)
}

pub fn write_graph(g: &Graph) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", g.node_count(), g.edge_count()).unwrap();
    for &(u, v) in g.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}
