//! Simple undirected graphs, SNAP edge-list ingestion and exact subgraph counts.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use rand::Rng;

use crate::error::{Error, Result};

/// Counted subgraph shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubgraphKind {
    Triangle,
    Quadrangle,
    /// Ordered pairs of distinct edges sharing a center: `Σ d(d-1)`.
    TwoStar,
}

impl SubgraphKind {
    pub const ALL: [SubgraphKind; 3] = [Self::Triangle, Self::Quadrangle, Self::TwoStar];

    pub fn name(self) -> &'static str {
        match self {
            Self::Triangle => "triangle",
            Self::Quadrangle => "quadrangle",
            Self::TwoStar => "two-star",
        }
    }
}

impl fmt::Display for SubgraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubgraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "triangle" | "triangles" | "tri" => Ok(Self::Triangle),
            "quadrangle" | "quadrangles" | "c4" | "qua" => Ok(Self::Quadrangle),
            "two-star" | "twostar" | "2star" | "2-star" => Ok(Self::TwoStar),
            other => Err(Error::InvalidParameter(format!("unknown subgraph kind `{other}`"))),
        }
    }
}

/// Immutable simple undirected graph on nodes `0..n`.
///
/// Adjacency is kept twice: as bitset rows (what a user "holds") and as
/// sorted neighbor lists for iteration.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    rows: Vec<FixedBitSet>,
    neighbors: Vec<Vec<u32>>,
    edge_count: usize,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edge_count)
            .finish()
    }
}

impl Graph {
    /// Builds a graph from undirected pairs. Duplicates and reversed pairs
    /// collapse; self-loops and out-of-range endpoints are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::InvalidParameter("graph needs at least one node".into()));
        }
        let mut rows = vec![FixedBitSet::with_capacity(n); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop on node {u}")));
            }
            rows[u].insert(v);
            rows[v].insert(u);
        }
        Ok(Self::from_rows(rows))
    }

    fn from_rows(rows: Vec<FixedBitSet>) -> Self {
        let n = rows.len();
        let neighbors: Vec<Vec<u32>> = rows
            .iter()
            .map(|r| r.ones().map(|j| j as u32).collect())
            .collect();
        let edge_count = neighbors.iter().map(Vec::len).sum::<usize>() / 2;
        Self {
            n,
            rows,
            neighbors,
            edge_count,
        }
    }

    /// G(n, p) sample; test and experiment helper.
    pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut rows = vec![FixedBitSet::with_capacity(n); n];
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random::<f64>() < p {
                    rows[u].insert(v);
                    rows[v].insert(u);
                }
            }
        }
        Self::from_rows(rows)
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v)));
        Self::from_edges(n, edges).expect("complete graph is valid")
    }

    pub fn cycle(n: usize) -> Self {
        Self::from_edges(n, (0..n).map(|u| (u, (u + 1) % n))).expect("cycle needs n >= 3")
    }

    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|u| (u - 1, u))).expect("path is valid")
    }

    /// Star with center 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        Self::from_edges(leaves + 1, (1..=leaves).map(|v| (0, v))).expect("star is valid")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn row(&self, u: usize) -> &FixedBitSet {
        &self.rows[u]
    }

    pub fn rows(&self) -> &[FixedBitSet] {
        &self.rows
    }

    /// Sorted neighbor ids of `u`.
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.neighbors[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u].contains(v)
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn average_degree(&self) -> f64 {
        2.0 * self.edge_count as f64 / self.n as f64
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(u, ns)| {
            ns.iter()
                .map(|&v| v as usize)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// SNAP-style serialization, one `u v` line per edge with `u < v`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edge_count * 12);
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Row `i` of `A²` written into `out` (length `n`); `out[i]` becomes `d_i`.
    pub fn two_step_row(&self, i: usize, out: &mut [i64]) {
        out.fill(0);
        for &k in &self.neighbors[i] {
            for &j in &self.neighbors[k as usize] {
                out[j as usize] += 1;
            }
        }
    }
}

/// Outcome of [`parse_edge_list`].
#[derive(Debug, Clone)]
pub struct ParsedGraph {
    pub graph: Graph,
    /// `original_ids[new_id]` is the id as it appeared in the input.
    pub original_ids: Vec<u64>,
    pub self_loops_dropped: usize,
    pub duplicate_edges: usize,
}

impl ParsedGraph {
    /// Sidecar map in `new_id original_id` lines.
    pub fn id_map_text(&self) -> String {
        self.original_ids
            .iter()
            .enumerate()
            .map(|(new, orig)| format!("{new} {orig}\n"))
            .collect()
    }
}

/// Parses a SNAP edge list: two whitespace-separated integer ids per line,
/// `#` starts a comment line, blank lines are skipped. Extra columns are
/// rejected. Ids are renumbered in first-appearance order.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<ParsedGraph> {
    let mut ids: HashMap<u64, usize> = HashMap::new();
    let mut original_ids = Vec::new();
    let mut pairs = Vec::new();
    let mut self_loops = 0;

    let mut intern = |raw: u64| -> usize {
        *ids.entry(raw).or_insert_with(|| {
            original_ids.push(raw);
            original_ids.len() - 1
        })
    };

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let next_id = |tokens: &mut std::str::SplitWhitespace<'_>| -> Result<u64> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: lineno,
                reason: "expected two node ids".into(),
            })?;
            tok.parse::<u64>().map_err(|_| Error::Parse {
                line: lineno,
                reason: format!("invalid node id `{tok}`"),
            })
        };
        let a = next_id(&mut tokens)?;
        let b = next_id(&mut tokens)?;
        if let Some(extra) = tokens.next() {
            return Err(Error::Parse {
                line: lineno,
                reason: format!("unexpected token `{extra}`"),
            });
        }
        let u = intern(a);
        let v = intern(b);
        if u == v {
            self_loops += 1;
        } else {
            pairs.push((u.min(v), u.max(v)));
        }
    }

    if pairs.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let raw_pairs = pairs.len();
    pairs.sort_unstable();
    pairs.dedup();
    let duplicate_edges = raw_pairs - pairs.len();
    let graph = Graph::from_edges(original_ids.len(), pairs)?;
    Ok(ParsedGraph {
        graph,
        original_ids,
        self_loops_dropped: self_loops,
        duplicate_edges,
    })
}

pub fn parse_edge_list_str(text: &str) -> Result<ParsedGraph> {
    parse_edge_list(text.as_bytes())
}

/// Reads an edge-list file from disk.
pub fn read_edge_list(path: impl AsRef<std::path::Path>) -> Result<ParsedGraph> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_edge_list(std::io::BufReader::new(file))
}

/// Exact subgraph count.
///
/// Triangles are counted by forward neighbor intersection, quadrangles from
/// `(tr(A⁴) - 2|E| - 4 Σ C(d,2)) / 8` with `tr(A⁴) = Σ b_ij²` streamed one
/// row of `A²` at a time, and 2-stars as `Σ d(d-1)`.
pub fn exact_count(g: &Graph, kind: SubgraphKind) -> u64 {
    match kind {
        SubgraphKind::Triangle => triangle_count(g),
        SubgraphKind::Quadrangle => quadrangle_count(g),
        SubgraphKind::TwoStar => g
            .degrees()
            .iter()
            .map(|&d| (d as u64) * (d as u64).saturating_sub(1))
            .sum(),
    }
}

fn triangle_count(g: &Graph) -> u64 {
    let mut total = 0u64;
    for (u, v) in g.edges() {
        // w > v > u, so every triangle is seen once
        let (a, b) = (g.neighbors(u), g.neighbors(v));
        let (mut i, mut j) = (a.partition_point(|&w| w as usize <= v), b.partition_point(|&w| w as usize <= v));
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    total += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    total
}

/// `tr(A⁴) = Σ_ij b_ij²`.
pub fn trace_a4(g: &Graph) -> i64 {
    let mut row = vec![0i64; g.node_count()];
    let mut total = 0i64;
    for i in 0..g.node_count() {
        g.two_step_row(i, &mut row);
        total += row.iter().map(|b| b * b).sum::<i64>();
    }
    total
}

/// `tr(A³) = Σ_ij b_ij a_ij`.
pub fn trace_a3(g: &Graph) -> i64 {
    let mut row = vec![0i64; g.node_count()];
    let mut total = 0i64;
    for i in 0..g.node_count() {
        g.two_step_row(i, &mut row);
        total += g.neighbors(i).iter().map(|&j| row[j as usize]).sum::<i64>();
    }
    total
}

fn quadrangle_count(g: &Graph) -> u64 {
    let wedges: i64 = g
        .degrees()
        .iter()
        .map(|&d| (d as i64) * (d as i64 - 1) / 2)
        .sum();
    let closed = trace_a4(g) - 2 * g.edge_count() as i64 - 4 * wedges;
    debug_assert!(closed >= 0 && closed % 8 == 0);
    (closed / 8) as u64
}

/// Limit for [`exact_count_bruteforce`].
pub const BRUTEFORCE_MAX_NODES: usize = 64;

/// Direct enumeration over vertex triples, vertex quadruples and 2-star
/// centers. Independent of the walk-counting identities used by
/// [`exact_count`].
pub fn exact_count_bruteforce(g: &Graph, kind: SubgraphKind) -> Result<u64> {
    let n = g.node_count();
    if n > BRUTEFORCE_MAX_NODES {
        return Err(Error::TooLarge {
            what: "brute-force enumeration",
            n,
            limit: BRUTEFORCE_MAX_NODES,
        });
    }
    let e = |a: usize, b: usize| g.has_edge(a, b);
    let mut count = 0u64;
    match kind {
        SubgraphKind::Triangle => {
            for a in 0..n {
                for b in (a + 1)..n {
                    for c in (b + 1)..n {
                        if e(a, b) && e(b, c) && e(a, c) {
                            count += 1;
                        }
                    }
                }
            }
        }
        SubgraphKind::Quadrangle => {
            for a in 0..n {
                for b in (a + 1)..n {
                    for c in (b + 1)..n {
                        for d in (c + 1)..n {
                            // the three distinct cyclic orders on {a,b,c,d}
                            if e(a, b) && e(b, c) && e(c, d) && e(d, a) {
                                count += 1;
                            }
                            if e(a, b) && e(b, d) && e(d, c) && e(c, a) {
                                count += 1;
                            }
                            if e(a, c) && e(c, b) && e(b, d) && e(d, a) {
                                count += 1;
                            }
                        }
                    }
                }
            }
        }
        SubgraphKind::TwoStar => {
            for center in 0..n {
                for x in 0..n {
                    for y in 0..n {
                        if x != y && x != center && y != center && e(center, x) && e(center, y) {
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(count)
}

/// Dense integer matrix used for walk counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    n: usize,
    data: Vec<i64>,
}

impl CountMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn trace(&self) -> i64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `self · A` using the sparse adjacency of `g`.
    pub fn times_adjacency(&self, g: &Graph) -> CountMatrix {
        let n = self.n;
        let mut data = vec![0i64; n * n];
        for i in 0..n {
            let out = &mut data[i * n..(i + 1) * n];
            for (k, &bik) in self.row(i).iter().enumerate() {
                if bik != 0 {
                    for &j in g.neighbors(k) {
                        out[j as usize] += bik;
                    }
                }
            }
        }
        CountMatrix { n, data }
    }
}

/// Dense `B = A²`; `b_ij` is the number of length-2 walks from `i` to `j`.
pub fn two_step_counts(g: &Graph) -> CountMatrix {
    let n = g.node_count();
    let mut data = vec![0i64; n * n];
    for (i, chunk) in data.chunks_mut(n).enumerate() {
        g.two_step_row(i, chunk);
    }
    CountMatrix { n, data }
}

/// Dense `C = A³`.
pub fn three_step_counts(g: &Graph) -> CountMatrix {
    two_step_counts(g).times_adjacency(g)
}

/// Ground-truth counts for a dataset, stored as `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountFixture {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub triangles: Option<u64>,
    pub quadrangles: Option<u64>,
    pub two_stars: Option<u64>,
}

impl CountFixture {
    pub fn compute(name: &str, g: &Graph) -> Self {
        Self {
            name: name.to_string(),
            nodes: g.node_count(),
            edges: g.edge_count(),
            triangles: Some(exact_count(g, SubgraphKind::Triangle)),
            quadrangles: Some(exact_count(g, SubgraphKind::Quadrangle)),
            two_stars: Some(exact_count(g, SubgraphKind::TwoStar)),
        }
    }

    pub fn count(&self, kind: SubgraphKind) -> Option<u64> {
        match kind {
            SubgraphKind::Triangle => self.triangles,
            SubgraphKind::Quadrangle => self.quadrangles,
            SubgraphKind::TwoStar => self.two_stars,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut fx = CountFixture::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                reason: "expected key=value".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| {
                v.parse::<u64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    reason: format!("invalid integer `{v}` for `{key}`"),
                })
            };
            match key {
                "name" => fx.name = value.to_string(),
                "nodes" => fx.nodes = num(value)? as usize,
                "edges" => fx.edges = num(value)? as usize,
                "triangles" => fx.triangles = Some(num(value)?),
                "quadrangles" => fx.quadrangles = Some(num(value)?),
                "two_stars" => fx.two_stars = Some(num(value)?),
                _ => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        reason: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        Ok(fx)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("name={}\nnodes={}\nedges={}\n", self.name, self.nodes, self.edges);
        for (key, v) in [
            ("triangles", self.triangles),
            ("quadrangles", self.quadrangles),
            ("two_stars", self.two_stars),
        ] {
            if let Some(v) = v {
                s.push_str(&format!("{key}={v}\n"));
            }
        }
        s
    }
}
