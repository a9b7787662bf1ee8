//! Line-oriented graph text format.
//!
//! ```text
//! kind n m
//! u v        (m edge lines)
//! u x y      (optional coordinate lines)
//! ```

use std::fmt::Write;

use super::{BaseGraph, BaseKind, Csr, Graph};
use crate::{Error, Result};

/// Parsed contents of a graph file.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphText {
    pub kind: String,
    pub csr: Csr,
    pub coords: Option<Vec<[i64; 2]>>,
}

pub fn write_graph<G: Graph + ?Sized>(g: &G, kind: &str, coords: Option<&dyn Fn(usize) -> [i64; 2]>) -> String {
    let n = g.vertex_count();
    let mut out = String::new();
    let edges: Vec<(usize, usize)> =
        (0..n).flat_map(|u| g.neighbors(u).filter(move |&v| u < v).map(move |v| (u, v))).collect();
    writeln!(out, "{kind} {n} {}", edges.len()).unwrap();
    for (u, v) in edges {
        writeln!(out, "{u} {v}").unwrap();
    }
    if let Some(coords) = coords {
        for u in 0..n {
            let [x, y] = coords(u);
            writeln!(out, "{u} {x} {y}").unwrap();
        }
    }
    out
}

pub fn read_graph(text: &str) -> Result<GraphText> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [kind, n, m] = fields[..] else {
        return Err(Error::Parse { line: 1, message: "header must be `kind n m`".into() });
    };
    let n: usize = parse_num(n, 1)?;
    let m: usize = parse_num(m, 1)?;
    let mut edges = Vec::with_capacity(m);
    let mut coords: Vec<Option<[i64; 2]>> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.len() {
            2 if coords.is_empty() => {
                edges.push((parse_num::<usize>(f[0], line_no)?, parse_num::<usize>(f[1], line_no)?))
            }
            3 => {
                if edges.len() != m {
                    return Err(Error::Parse { line: line_no, message: format!("expected {m} edge lines") });
                }
                if coords.is_empty() {
                    coords = vec![None; n];
                }
                let u: usize = parse_num(f[0], line_no)?;
                if u >= n {
                    return Err(Error::Parse { line: line_no, message: format!("vertex {u} out of range") });
                }
                coords[u] = Some([parse_num(f[1], line_no)?, parse_num(f[2], line_no)?]);
            }
            _ => return Err(Error::Parse { line: line_no, message: "unexpected line".into() }),
        }
    }
    if edges.len() != m {
        return Err(Error::Parse { line: 1, message: format!("header announces {m} edges, found {}", edges.len()) });
    }
    let coords = if coords.is_empty() {
        None
    } else {
        Some(
            coords
                .into_iter()
                .enumerate()
                .map(|(u, c)| c.ok_or(Error::Parse { line: 0, message: format!("no coordinates for vertex {u}") }))
                .collect::<Result<Vec<_>>>()?,
        )
    };
    Ok(GraphText { kind: kind.to_string(), csr: Csr::from_edges(n, &edges)?, coords })
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, message: format!("bad number `{s}`") })
}

impl BaseGraph {
    pub fn to_text(&self) -> String {
        let coords = |v: usize| self.coords(v).expect("has coords");
        write_graph(self, self.kind().as_str(), self.has_coords().then_some(&coords as &dyn Fn(usize) -> [i64; 2]))
    }

    /// Reads a base graph. The result has no truncation boundary; its origin
    /// is the vertex at `(0, 0)` when coordinates are present, else vertex 0.
    pub fn from_text(text: &str) -> Result<Self> {
        let parsed = read_graph(text)?;
        let kind = BaseKind::parse(&parsed.kind).unwrap_or(BaseKind::Custom);
        let origin = parsed
            .coords
            .as_ref()
            .and_then(|c| c.iter().position(|&p| p == [0, 0]))
            .unwrap_or(0);
        let n = parsed.csr.vertex_count();
        BaseGraph::from_parts(kind, parsed.csr, parsed.coords, origin, vec![false; n])
    }
}
