use std::fmt::Write as _;
use std::path::Path;

use super::IngestError;
use crate::graph::{build_graph, WeightedGraph};

/// Parses the whitespace edge-list format.
///
/// One edge per line as `i j w` with 0-based indices; `#` starts a comment.
/// An optional leading `n m` header fixes the node count and is checked
/// against the number of edges; without it `n = 1 + max index`.
pub fn parse_edge_list(text: &str) -> Result<WeightedGraph, IngestError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut seen_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.len() {
            2 if !seen_data => {
                let n = parse_index(tokens[0], line_no)?;
                let m = parse_index(tokens[1], line_no)?;
                header = Some((n, m));
            }
            3 => {
                let i = parse_index(tokens[0], line_no)?;
                let j = parse_index(tokens[1], line_no)?;
                let w: f64 = tokens[2]
                    .parse()
                    .map_err(|_| IngestError::parse(line_no, format!("invalid weight `{}`", tokens[2])))?;
                edges.push((i, j, w));
            }
            k => {
                return Err(IngestError::parse(
                    line_no,
                    format!("expected `i j w`, found {k} fields"),
                ))
            }
        }
        seen_data = true;
    }
    let inferred = edges.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    let n = match header {
        Some((n, m)) => {
            if m != edges.len() {
                return Err(IngestError::parse(
                    1,
                    format!("header declares {m} edges, file has {}", edges.len()),
                ));
            }
            n
        }
        None => inferred,
    };
    Ok(build_graph(n, edges)?)
}

fn parse_index(tok: &str, line: usize) -> Result<usize, IngestError> {
    tok.parse()
        .map_err(|_| IngestError::parse(line, format!("invalid node index `{tok}`")))
}

/// Parses a Matrix Market coordinate file (`real`, `integer` or `pattern`;
/// `symmetric` or `general`). Indices are 1-based. A `general` file must list
/// every off-diagonal entry together with its mirror of equal value.
pub fn parse_matrix_market(text: &str) -> Result<WeightedGraph, IngestError> {
    let mut lines = text.lines().enumerate();
    let (_, banner) = lines
        .next()
        .ok_or_else(|| IngestError::parse(1, "empty Matrix Market file"))?;
    let fields: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(IngestError::parse(1, "expected `%%MatrixMarket matrix coordinate <field> <symmetry>`"));
    }
    let pattern = match fields[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => return Err(IngestError::parse(1, format!("unsupported field `{other}`"))),
    };
    let symmetric = match fields[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(IngestError::parse(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if size.is_none() {
            if tokens.len() != 3 {
                return Err(IngestError::parse(line_no, "expected `rows cols entries`"));
            }
            let rows = parse_index(tokens[0], line_no)?;
            let cols = parse_index(tokens[1], line_no)?;
            let nnz = parse_index(tokens[2], line_no)?;
            if rows != cols {
                return Err(IngestError::parse(line_no, "adjacency matrix must be square"));
            }
            size = Some((rows, nnz));
            continue;
        }
        let want = if pattern { 2 } else { 3 };
        if tokens.len() != want {
            return Err(IngestError::parse(line_no, format!("expected {want} fields")));
        }
        let i = parse_index(tokens[0], line_no)?;
        let j = parse_index(tokens[1], line_no)?;
        if i == 0 || j == 0 {
            return Err(IngestError::parse(line_no, "Matrix Market indices are 1-based"));
        }
        let w = if pattern {
            1.0
        } else {
            tokens[2]
                .parse()
                .map_err(|_| IngestError::parse(line_no, format!("invalid value `{}`", tokens[2])))?
        };
        entries.push((i - 1, j - 1, w));
    }
    let (n, nnz) = size.ok_or_else(|| IngestError::parse(1, "missing size line"))?;
    if entries.len() != nnz {
        return Err(IngestError::parse(
            1,
            format!("size line declares {nnz} entries, file has {}", entries.len()),
        ));
    }
    if symmetric {
        return Ok(build_graph(n, entries)?);
    }
    // general: fold mirrored entries
    let mut canon: Vec<(usize, usize, f64, bool)> = entries
        .into_iter()
        .map(|(i, j, w)| if i <= j { (i, j, w, true) } else { (j, i, w, false) })
        .collect();
    canon.sort_by(|a, b| (a.0, a.1, a.3).cmp(&(b.0, b.1, b.3)));
    let mut folded = Vec::with_capacity(canon.len() / 2);
    let mut it = canon.chunk_by(|a, b| a.0 == b.0 && a.1 == b.1);
    for group in &mut it {
        match group {
            [(i, j, _, _)] if i == j => folded.push((*i, *j, group[0].2)),
            [lo, up] if lo.3 != up.3 && lo.2 == up.2 => folded.push((lo.0, lo.1, lo.2)),
            _ => {
                return Err(IngestError::parse(
                    1,
                    format!("entry ({}, {}) lacks an equal mirrored entry", group[0].0 + 1, group[0].1 + 1),
                ))
            }
        }
    }
    Ok(build_graph(n, folded)?)
}

/// Canonical edge-list text: `n m` header, then `i j w` with `i < j` in sorted order.
pub fn write_edge_list(g: &WeightedGraph) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", g.n(), g.m()).unwrap();
    for e in g.edges() {
        writeln!(out, "{} {} {}", e.i, e.j, e.w).unwrap();
    }
    out
}

/// Reads an edge-list file.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<WeightedGraph, IngestError> {
    parse_edge_list(&std::fs::read_to_string(path)?)
}
