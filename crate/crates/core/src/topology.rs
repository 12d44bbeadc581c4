//! Static network shapes and breadth-first hop distances.

use std::collections::VecDeque;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::ConfigError;
use crate::protocol::NodeId;

/// How to build a [`Topology`]. Parses from and prints as the config syntax
/// `ring:4`, `grid:4x4`, `grid_center:4x4` or `custom:<path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologySpec {
    Ring(usize),
    Grid(usize, usize),
    /// A grid plus one extra node linked to the four central grid nodes.
    GridCenter(usize, usize),
    /// Edge list file, one `i j` pair per line.
    Custom(PathBuf),
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::Ring(n) => write!(f, "ring:{n}"),
            TopologySpec::Grid(w, h) => write!(f, "grid:{w}x{h}"),
            TopologySpec::GridCenter(w, h) => write!(f, "grid_center:{w}x{h}"),
            TopologySpec::Custom(p) => write!(f, "custom:{}", p.display()),
        }
    }
}

fn parse_dims(s: &str) -> Result<(usize, usize), ConfigError> {
    let (w, h) = s
        .split_once('x')
        .ok_or_else(|| ConfigError::Topology(format!("expected WxH, got `{s}`")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| ConfigError::Topology(format!("bad grid dimension `{v}`")))
    };
    Ok((parse(w)?, parse(h)?))
}

impl FromStr for TopologySpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, arg) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| ConfigError::Topology(format!("expected <kind>:<arg>, got `{s}`")))?;
        match kind {
            "ring" => arg
                .trim()
                .parse()
                .map(TopologySpec::Ring)
                .map_err(|_| ConfigError::Topology(format!("bad ring size `{arg}`"))),
            "grid" => parse_dims(arg).map(|(w, h)| TopologySpec::Grid(w, h)),
            "grid_center" => parse_dims(arg).map(|(w, h)| TopologySpec::GridCenter(w, h)),
            "custom" => Ok(TopologySpec::Custom(PathBuf::from(arg.trim()))),
            other => Err(ConfigError::Topology(format!("unknown kind `{other}`"))),
        }
    }
}

/// Marker for node pairs with no path between them.
pub const UNREACHABLE: u32 = u32::MAX;

/// Symmetric adjacency plus all-pairs hop counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    adjacency: Vec<bool>,
    neighbors: Vec<Vec<NodeId>>,
    dist: Vec<u32>,
}

impl Topology {
    pub fn build(spec: &TopologySpec) -> Result<Self, ConfigError> {
        match *spec {
            TopologySpec::Ring(n) => Self::ring(n),
            TopologySpec::Grid(w, h) => Self::grid(w, h),
            TopologySpec::GridCenter(w, h) => Self::grid_center(w, h),
            TopologySpec::Custom(ref path) => Self::load_edge_list(path),
        }
    }

    pub fn ring(n: usize) -> Result<Self, ConfigError> {
        if n < 3 {
            return Err(ConfigError::Topology(format!("ring needs at least 3 nodes, got {n}")));
        }
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn grid(w: usize, h: usize) -> Result<Self, ConfigError> {
        Self::from_edges(w * h, Self::grid_edges(w, h)?)
    }

    /// `w × h` grid in row-major order plus node `w*h` joined to the four
    /// central grid nodes (rounded towards the top-left on odd sides).
    pub fn grid_center(w: usize, h: usize) -> Result<Self, ConfigError> {
        let mut edges = Self::grid_edges(w, h)?;
        let center = w * h;
        let (r0, c0) = ((h - 1) / 2, (w - 1) / 2);
        for (r, c) in [(r0, c0), (r0, c0 + 1), (r0 + 1, c0), (r0 + 1, c0 + 1)] {
            edges.push((center, r * w + c));
        }
        Self::from_edges(w * h + 1, edges)
    }

    fn grid_edges(w: usize, h: usize) -> Result<Vec<(usize, usize)>, ConfigError> {
        if w < 2 || h < 2 {
            return Err(ConfigError::Topology(format!("grid must be at least 2x2, got {w}x{h}")));
        }
        let mut edges = Vec::new();
        for r in 0..h {
            for c in 0..w {
                let id = r * w + c;
                if c + 1 < w {
                    edges.push((id, id + 1));
                }
                if r + 1 < h {
                    edges.push((id, id + w));
                }
            }
        }
        Ok(edges)
    }

    /// Reads a whitespace-separated `i j` edge list; `#` starts a comment.
    /// The node count is one more than the largest id mentioned.
    pub fn load_edge_list(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Topology(format!("{}: {e}", path.display())))?;
        Self::parse_edge_list(&text)
    }

    pub fn parse_edge_list(text: &str) -> Result<Self, ConfigError> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ids: Vec<&str> = line.split_whitespace().collect();
            let [a, b] = ids[..] else {
                return Err(ConfigError::Topology(format!(
                    "line {}: expected two node ids, got `{line}`",
                    lineno + 1
                )));
            };
            let parse = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| ConfigError::Topology(format!("line {}: bad node id `{v}`", lineno + 1)))
            };
            edges.push((parse(a)?, parse(b)?));
        }
        let n = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
        Self::from_edges(n, edges)
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, ConfigError> {
        if n == 0 {
            return Err(ConfigError::Topology("network has no nodes".into()));
        }
        let mut adjacency = vec![false; n * n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(ConfigError::Topology(format!("edge ({a}, {b}) references a node >= {n}")));
            }
            if a == b {
                return Err(ConfigError::Topology(format!("self loop on node {a}")));
            }
            adjacency[a * n + b] = true;
            adjacency[b * n + a] = true;
        }
        let neighbors = (0..n).map(|i| (0..n).filter(|&j| adjacency[i * n + j]).collect()).collect();
        let mut t = Topology {
            n,
            adjacency,
            neighbors,
            dist: Vec::new(),
        };
        t.dist = t.all_pairs_distance();
        Ok(t)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a * self.n + b]
    }

    #[inline]
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.neighbors[id]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.neighbors[id].len()
    }

    /// Hop count between `a` and `b`, or [`UNREACHABLE`].
    #[inline]
    pub fn dist(&self, a: NodeId, b: NodeId) -> u32 {
        self.dist[a * self.n + b]
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.n).flat_map(move |a| self.neighbors[a].iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    pub fn diameter(&self) -> u32 {
        self.dist.iter().copied().filter(|&d| d != UNREACHABLE).max().unwrap_or(0)
    }

    /// Breadth-first hop counts from every node, row-major `n × n`.
    pub fn all_pairs_distance(&self) -> Vec<u32> {
        let n = self.n;
        let mut dist = vec![UNREACHABLE; n * n];
        let mut queue = VecDeque::new();
        for src in 0..n {
            let row = &mut dist[src * n..(src + 1) * n];
            row[src] = 0;
            queue.push_back(src);
            while let Some(v) = queue.pop_front() {
                for &u in &self.neighbors[v] {
                    if row[u] == UNREACHABLE {
                        row[u] = row[v] + 1;
                        queue.push_back(u);
                    }
                }
            }
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Repeated min-plus squaring of the one-hop matrix.
    fn min_plus_closure(t: &Topology) -> Vec<u32> {
        let n = t.len();
        let mut d: Vec<u32> = (0..n * n)
            .map(|i| {
                let (a, b) = (i / n, i % n);
                if a == b {
                    0
                } else if t.adjacent(a, b) {
                    1
                } else {
                    UNREACHABLE
                }
            })
            .collect();
        for _ in 0..n {
            let mut next = d.clone();
            for a in 0..n {
                for b in 0..n {
                    for k in 0..n {
                        let (x, y) = (d[a * n + k], d[k * n + b]);
                        if x != UNREACHABLE && y != UNREACHABLE {
                            next[a * n + b] = next[a * n + b].min(x + y);
                        }
                    }
                }
            }
            d = next;
        }
        d
    }

    #[test]
    fn ring_degrees() {
        let t = Topology::ring(4).unwrap();
        assert!((0..4).all(|i| t.degree(i) == 2));
        assert_eq!(t.dist(0, 2), 2);
        assert!(Topology::ring(2).is_err());
    }

    #[test]
    fn grid_corner_to_corner() {
        let t = Topology::grid(4, 4).unwrap();
        assert_eq!(t.dist(0, 15), 6);
        assert_eq!(t.diameter(), 6);
        assert_eq!(t.degree(0), 2);
        assert_eq!(t.degree(5), 4);
    }

    #[test]
    fn grid_center_shape() {
        let t = Topology::grid_center(4, 4).unwrap();
        assert_eq!(t.len(), 17);
        assert_eq!(t.neighbors(16), &[5, 6, 9, 10]);
        for corner in [0, 3, 12, 15] {
            assert_eq!(t.degree(corner), 2);
        }
        assert_eq!(t.degree(5), 5);
        assert_eq!(t.dist(0, 15), 6);
        assert_eq!(t.dist(5, 10), 2);
    }

    #[test]
    fn bfs_matches_min_plus() {
        let shapes = [
            Topology::ring(3).unwrap(),
            Topology::ring(7).unwrap(),
            Topology::grid(4, 4).unwrap(),
            Topology::grid(2, 5).unwrap(),
            Topology::grid_center(4, 4).unwrap(),
            Topology::from_edges(6, [(0, 1), (1, 2), (3, 4)]).unwrap(),
        ];
        for t in &shapes {
            assert_eq!(t.all_pairs_distance(), min_plus_closure(t));
            for a in 0..t.len() {
                for b in 0..t.len() {
                    assert_eq!(t.dist(a, b), t.dist(b, a));
                    assert_eq!(t.dist(a, b) == 1, t.adjacent(a, b));
                }
            }
        }
    }

    #[test]
    fn edge_list_parsing() {
        let t = Topology::parse_edge_list("# line\n0 1\n1 2  \n\n2 3 # tail\n").unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.dist(0, 3), 3);
        assert!(Topology::parse_edge_list("0 1 2\n").is_err());
        assert!(Topology::parse_edge_list("0 x\n").is_err());
        assert!(Topology::parse_edge_list("1 1\n").is_err());
        assert!(Topology::parse_edge_list("").is_err());
    }

    #[test]
    fn spec_round_trips_through_text() {
        for s in ["ring:4", "grid:4x4", "grid_center:4x4", "custom:net/edges.txt"] {
            let spec: TopologySpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("grid:4".parse::<TopologySpec>().is_err());
        assert!("torus:4x4".parse::<TopologySpec>().is_err());
    }
}
