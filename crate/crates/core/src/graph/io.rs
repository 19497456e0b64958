//! Plain-text edge lists.
//!
//! ```text
//! # comments and blank lines are ignored
//! n m
//! u v          (m lines, edge i on the i-th line)
//! coords d     (optional; then n lines of d integers, or "-" for unlabeled)
//! sink v       (optional)
//! ```

use std::fmt::Write as _;

use super::{Graph, GraphError, Labels};

pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", g.vertex_count(), g.edge_count()).unwrap();
    for &(u, v) in g.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    if let Some(labels) = g.labels() {
        writeln!(out, "coords {}", labels.dim()).unwrap();
        for v in 0..g.vertex_count() {
            match labels.get(v) {
                Some(x) => {
                    let parts: Vec<String> = x.iter().map(i32::to_string).collect();
                    writeln!(out, "{}", parts.join(" ")).unwrap();
                }
                None => writeln!(out, "-").unwrap(),
            }
        }
    }
    if let Some(s) = g.sink() {
        writeln!(out, "sink {s}").unwrap();
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize, GraphError> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what}")))
}

pub fn read_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing `n m` header"))?;
    let mut toks = header.split_whitespace();
    let n = parse_usize(toks.next(), hl, "vertex count")?;
    let m = parse_usize(toks.next(), hl, "edge count")?;
    if toks.next().is_some() {
        return Err(parse_err(hl, "trailing tokens in header"));
    }

    let mut edges = Vec::with_capacity(m);
    for i in 0..m {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(hl, format!("expected {m} edges, found {i}")))?;
        let mut toks = l.split_whitespace();
        let u = parse_usize(toks.next(), ln, "endpoint")?;
        let v = parse_usize(toks.next(), ln, "endpoint")?;
        if toks.next().is_some() {
            return Err(parse_err(ln, "trailing tokens in edge line"));
        }
        if u >= n || v >= n {
            return Err(parse_err(ln, format!("endpoint out of range for {n} vertices")));
        }
        edges.push((u, v));
    }
    let mut graph = Graph::from_edges(n, edges)?;

    while let Some((ln, l)) = lines.next() {
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("coords") => {
                let dim = parse_usize(toks.next(), ln, "coordinate dimension")?;
                let mut labels = Labels::new(dim, n);
                for v in 0..n {
                    let (cl, row) = lines
                        .next()
                        .ok_or_else(|| parse_err(ln, format!("expected {n} coordinate rows")))?;
                    if row == "-" {
                        continue;
                    }
                    let x: Vec<i32> = row
                        .split_whitespace()
                        .map(|t| t.parse().map_err(|_| parse_err(cl, "invalid coordinate")))
                        .collect::<Result<_, _>>()?;
                    if x.len() != dim {
                        return Err(parse_err(cl, format!("expected {dim} coordinates")));
                    }
                    labels.set(v, &x);
                }
                graph = graph.with_labels(labels);
            }
            Some("sink") => {
                let s = parse_usize(toks.next(), ln, "sink vertex")?;
                if s >= n {
                    return Err(parse_err(ln, "sink out of range"));
                }
                graph = graph.with_sink(Some(s));
            }
            _ => return Err(parse_err(ln, format!("unexpected line `{l}`"))),
        }
    }
    Ok(graph)
}
