//! Measurement graphs: an undirected edge list carrying circular offsets.
//!
//! The edge list is the single source of truth. For an edge stored as
//! `(i, j, Θ)` with `i < j`, the reverse measurement is `Θ_ji = (−Θ) mod 2π`.
//!
//! Text format:
//!
//! ```text
//! n m k
//! i j theta label      (m lines, 1-based node ids)
//! ```
//!
//! `label` is the 1-based group, `0` for an outlier and `-1` when unknown.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::angles::wrap_angle;
use crate::error::{invalid, Result, SyncError};

/// Ground-truth provenance of an edge measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeLabel {
    /// Zero-based group index.
    Group(usize),
    Outlier,
    Unknown,
}

impl EdgeLabel {
    pub fn to_code(self) -> i64 {
        match self {
            EdgeLabel::Group(l) => l as i64 + 1,
            EdgeLabel::Outlier => 0,
            EdgeLabel::Unknown => -1,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            -1 => Some(EdgeLabel::Unknown),
            0 => Some(EdgeLabel::Outlier),
            c if c > 0 => Some(EdgeLabel::Group(c as usize - 1)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
    pub label: EdgeLabel,
}

impl Edge {
    /// Offset measured from `from` to the other endpoint.
    pub fn offset_from(&self, from: usize) -> f64 {
        if from == self.i {
            self.theta
        } else {
            wrap_angle(-self.theta)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGraph {
    n: usize,
    k: usize,
    edges: Vec<Edge>,
}

impl MeasurementGraph {
    /// Validates and stores the edges. Edges given with `i > j` are flipped
    /// (and their offset negated) so that storage always has `i < j`.
    pub fn new(n: usize, k: usize, edges: Vec<Edge>) -> Result<Self> {
        if n == 0 {
            return invalid("graph needs at least one node");
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut out = Vec::with_capacity(edges.len());
        for e in edges {
            if e.i == e.j {
                return invalid(format!("self-loop at node {}", e.i));
            }
            if e.i >= n || e.j >= n {
                return invalid(format!("edge ({}, {}) out of range for n = {n}", e.i, e.j));
            }
            if !e.theta.is_finite() {
                return invalid(format!("non-finite offset on edge ({}, {})", e.i, e.j));
            }
            if let EdgeLabel::Group(l) = e.label {
                if l >= k {
                    return invalid(format!("edge label {} exceeds k = {k}", l + 1));
                }
            }
            let e = if e.i < e.j {
                Edge {
                    theta: wrap_angle(e.theta),
                    ..e
                }
            } else {
                Edge {
                    i: e.j,
                    j: e.i,
                    theta: wrap_angle(-e.theta),
                    label: e.label,
                }
            };
            debug_assert!((0.0..TAU).contains(&e.theta));
            if !seen.insert((e.i, e.j)) {
                return invalid(format!("duplicate edge ({}, {})", e.i, e.j));
            }
            out.push(e);
        }
        Ok(Self { n, k, edges: out })
    }

    pub fn empty(n: usize, k: usize) -> Result<Self> {
        Self::new(n, k, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of groups the labels refer to.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for e in &self.edges {
            d[e.i] += 1;
            d[e.j] += 1;
        }
        d
    }

    /// Graph restricted to the edges at the given indices, same node set.
    pub fn with_edges(&self, indices: impl IntoIterator<Item = usize>) -> Self {
        Self {
            n: self.n,
            k: self.k,
            edges: indices.into_iter().map(|x| self.edges[x]).collect(),
        }
    }

    /// Same graph with every label replaced by `label`.
    pub fn relabeled(&self, label: EdgeLabel) -> Self {
        Self {
            n: self.n,
            k: self.k,
            edges: self.edges.iter().map(|e| Edge { label, ..*e }).collect(),
        }
    }

    /// Connected components (node lists), largest first; ties by smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.n];
        for v in 0..self.n {
            let r = find(&mut parent, v);
            if slot[r] == usize::MAX {
                slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[r]].push(v);
        }
        groups.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        groups
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = String::new();
        writeln!(buf, "{} {} {}", self.n, self.edges.len(), self.k).unwrap();
        for e in &self.edges {
            writeln!(
                buf,
                "{} {} {} {}",
                e.i + 1,
                e.j + 1,
                e.theta,
                e.label.to_code()
            )
            .unwrap();
        }
        w.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .map(|(no, l)| (no + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let parse_err = |line: usize, message: String| SyncError::Parse { line, message };
        let (hline, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header".into()))?;
        let header = header?;
        let nums: Vec<&str> = header.split_whitespace().collect();
        if nums.len() != 3 {
            return Err(parse_err(hline, "header must be \"n m k\"".into()));
        }
        let parse_usize = |s: &str, line: usize| {
            s.parse::<usize>()
                .map_err(|e| parse_err(line, format!("{s:?}: {e}")))
        };
        let n = parse_usize(nums[0], hline)?;
        let m = parse_usize(nums[1], hline)?;
        let k = parse_usize(nums[2], hline)?;
        let mut edges = Vec::with_capacity(m);
        for (line, text) in lines.by_ref().take(m) {
            let text = text?;
            let f: Vec<&str> = text.split_whitespace().collect();
            if f.len() != 4 {
                return Err(parse_err(line, "expected \"i j theta label\"".into()));
            }
            let i = parse_usize(f[0], line)?;
            let j = parse_usize(f[1], line)?;
            if i == 0 || j == 0 {
                return Err(parse_err(line, "node ids are 1-based".into()));
            }
            let theta: f64 = f[2]
                .parse()
                .map_err(|e| parse_err(line, format!("{:?}: {e}", f[2])))?;
            let code: i64 = f[3]
                .parse()
                .map_err(|e| parse_err(line, format!("{:?}: {e}", f[3])))?;
            let label = EdgeLabel::from_code(code)
                .ok_or_else(|| parse_err(line, format!("invalid label {code}")))?;
            if !(0.0..TAU).contains(&theta) {
                return Err(parse_err(line, format!("theta {theta} outside [0, 2π)")));
            }
            edges.push(Edge {
                i: i - 1,
                j: j - 1,
                theta,
                label,
            });
        }
        if edges.len() != m {
            return Err(parse_err(
                hline,
                format!("header announces {m} edges, found {}", edges.len()),
            ));
        }
        if let Some((line, _)) = lines.next() {
            return Err(parse_err(line, "trailing content after edge list".into()));
        }
        Self::new(n, k, edges)
    }
}
