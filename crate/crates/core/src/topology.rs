//! Interaction graphs. The complete graph is implicit (every node, itself
//! included, is a neighbor of every node); all other graphs are stored as
//! compressed sorted adjacency lists without self-loops.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_pcg::Pcg64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Adjacency {
    Complete,
    Lists { offsets: Vec<usize>, targets: Vec<u32> },
}

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    adjacency: Adjacency,
    id: String,
}

pub enum Neighbors<'a> {
    All(std::ops::Range<usize>),
    List(std::slice::Iter<'a, u32>),
}

impl Iterator for Neighbors<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        match self {
            Neighbors::All(r) => r.next(),
            Neighbors::List(it) => it.next().map(|&v| v as usize),
        }
    }
}

impl Graph {
    /// Complete graph with self-loops.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("complete graph needs n >= 2, got {n}")));
        }
        Ok(Graph {
            n,
            adjacency: Adjacency::Complete,
            id: format!("complete(n={n})"),
        })
    }

    /// G(n, p). Nodes left isolated are linked to one uniformly chosen other node.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!("edge probability must be in (0, 1], got {p}")));
        }
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 nodes, got {n}")));
        }
        let mut rng = Pcg64::seed_from_u64(seed);
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for u in 0..n {
            for v in (u + 1)..n {
                if p >= 1.0 || rng.gen::<f64>() < p {
                    lists[u].push(v as u32);
                    lists[v].push(u as u32);
                }
            }
        }
        let mut rewired = 0;
        for u in 0..n {
            if lists[u].is_empty() {
                let mut v = rng.gen_range(0..n - 1);
                if v >= u {
                    v += 1;
                }
                lists[u].push(v as u32);
                lists[v].push(u as u32);
                rewired += 1;
            }
        }
        if rewired > 0 {
            log::info!("erdos-renyi(n={n}, p={p}, seed={seed}): rewired {rewired} isolated nodes");
        }
        Self::from_lists(lists, format!("er(n={n},p={p},seed={seed})"), true)
    }

    /// `side x side` grid with 4-neighborhoods. Periodic lattices keep
    /// repeated neighbors when `side == 2`, so every degree is exactly 4.
    pub fn square_lattice(side: usize, periodic: bool) -> Result<Self> {
        if side < 2 {
            return Err(Error::InvalidArgument(format!("lattice side must be >= 2, got {side}")));
        }
        let n = side * side;
        let idx = |r: usize, c: usize| (r * side + c) as u32;
        let mut lists: Vec<Vec<u32>> = vec![Vec::with_capacity(4); n];
        for r in 0..side {
            for c in 0..side {
                let list = &mut lists[r * side + c];
                if periodic {
                    list.push(idx((r + side - 1) % side, c));
                    list.push(idx((r + 1) % side, c));
                    list.push(idx(r, (c + side - 1) % side));
                    list.push(idx(r, (c + 1) % side));
                } else {
                    if r > 0 {
                        list.push(idx(r - 1, c));
                    }
                    if r + 1 < side {
                        list.push(idx(r + 1, c));
                    }
                    if c > 0 {
                        list.push(idx(r, c - 1));
                    }
                    if c + 1 < side {
                        list.push(idx(r, c + 1));
                    }
                }
            }
        }
        let kind = if periodic { "torus" } else { "grid" };
        Self::from_lists(lists, format!("lattice({kind},side={side})"), !periodic)
    }

    /// Undirected graph from an edge list. Duplicates and reversed copies
    /// collapse; self-loops are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if u != v {
                lists[u].push(v as u32);
                lists[v].push(u as u32);
            }
        }
        Self::from_lists(lists, format!("edges(n={n},m={})", edges.len()), true)
    }

    /// Reads whitespace-separated `u v` pairs (0-based), one per line; blank
    /// lines and `#` comments are skipped. Without `n`, the node count is
    /// one past the largest id.
    pub fn from_edge_list(path: impl AsRef<Path>, n: Option<usize>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let mut edges = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize> {
                let tok = parts.next().ok_or_else(|| Error::EdgeListParse {
                    line: k + 1,
                    msg: "expected two node ids".into(),
                })?;
                tok.parse().map_err(|_| Error::EdgeListParse {
                    line: k + 1,
                    msg: format!("`{tok}` is not a node id"),
                })
            };
            let (u, v) = (next()?, next()?);
            if parts.next().is_some() {
                return Err(Error::EdgeListParse {
                    line: k + 1,
                    msg: "trailing tokens".into(),
                });
            }
            edges.push((u, v));
        }
        let n = match n {
            Some(n) => n,
            None => edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0),
        };
        if n < 2 {
            return Err(Error::InvalidArgument("edge list describes fewer than 2 nodes".into()));
        }
        let mut g = Self::from_edges(n, &edges)?;
        g.id = format!("file({})", path.as_ref().display());
        Ok(g)
    }

    fn from_lists(mut lists: Vec<Vec<u32>>, id: String, dedup: bool) -> Result<Self> {
        let n = lists.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for (u, list) in lists.iter_mut().enumerate() {
            list.sort_unstable();
            if dedup {
                list.dedup();
            }
            if list.is_empty() {
                return Err(Error::IsolatedNode(u));
            }
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        Ok(Graph {
            n,
            adjacency: Adjacency::Lists { offsets, targets },
            id,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn has_self_loops(&self) -> bool {
        matches!(self.adjacency, Adjacency::Complete)
    }

    pub fn is_complete(&self) -> bool {
        self.has_self_loops()
    }

    pub fn degree(&self, u: usize) -> usize {
        match &self.adjacency {
            Adjacency::Complete => self.n,
            Adjacency::Lists { offsets, .. } => offsets[u + 1] - offsets[u],
        }
    }

    pub fn neighbors(&self, u: usize) -> Neighbors<'_> {
        match &self.adjacency {
            Adjacency::Complete => Neighbors::All(0..self.n),
            Adjacency::Lists { offsets, targets } => {
                Neighbors::List(targets[offsets[u]..offsets[u + 1]].iter())
            }
        }
    }

    /// Uniformly random neighbor of `u`.
    #[inline]
    pub fn sample_neighbor<R: Rng + ?Sized>(&self, u: usize, rng: &mut R) -> usize {
        match &self.adjacency {
            Adjacency::Complete => rng.gen_range(0..self.n),
            Adjacency::Lists { offsets, targets } => {
                let lo = offsets[u];
                targets[rng.gen_range(lo..offsets[u + 1])] as usize
            }
        }
    }

    /// Number of undirected links, self-loops excluded.
    pub fn edge_count(&self) -> usize {
        match &self.adjacency {
            Adjacency::Complete => self.n * (self.n - 1) / 2,
            Adjacency::Lists { targets, .. } => targets.len() / 2,
        }
    }

    pub fn mean_degree(&self) -> f64 {
        (0..self.n).map(|u| self.degree(u)).sum::<usize>() as f64 / self.n as f64
    }

    /// Checks that `v` lists `u` as often as `u` lists `v`.
    pub fn is_symmetric(&self) -> bool {
        match &self.adjacency {
            Adjacency::Complete => true,
            Adjacency::Lists { offsets, targets } => (0..self.n).all(|u| {
                let list = &targets[offsets[u]..offsets[u + 1]];
                list.iter().all(|&v| {
                    let back = &targets[offsets[v as usize]..offsets[v as usize + 1]];
                    let fwd = list.iter().filter(|&&w| w == v).count();
                    back.iter().filter(|&&w| w as usize == u).count() == fwd
                })
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn complete_graph_is_implicit() {
        let g = Graph::complete(2).unwrap();
        assert_eq!(g.neighbors(0).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(g.neighbors(1).collect::<Vec<_>>(), vec![0, 1]);
        let g = Graph::complete(3).unwrap();
        assert!((0..3).all(|u| g.degree(u) == 3));
        let g = Graph::complete(5000).unwrap();
        assert!(g.has_self_loops());
        assert_eq!(g.degree(4999), 5000);
        assert!(Graph::complete(1).is_err());
    }

    #[test]
    fn er_with_p_one_is_complete_without_loops() {
        let g = Graph::erdos_renyi(30, 1.0, 9).unwrap();
        assert!(!g.has_self_loops());
        for u in 0..30 {
            assert_eq!(g.degree(u), 29);
            assert!(g.neighbors(u).all(|v| v != u));
        }
    }

    #[test]
    fn er_is_reproducible_and_symmetric() {
        let a = Graph::erdos_renyi(300, 0.05, 42).unwrap();
        let b = Graph::erdos_renyi(300, 0.05, 42).unwrap();
        let c = Graph::erdos_renyi(300, 0.05, 43).unwrap();
        let lists = |g: &Graph| (0..g.n()).map(|u| g.neighbors(u).collect::<Vec<_>>()).collect::<Vec<_>>();
        assert_eq!(lists(&a), lists(&b));
        assert_ne!(lists(&a), lists(&c));
        assert!(a.is_symmetric());
        assert!(Graph::erdos_renyi(10, 0.0, 1).is_err());
        assert!(Graph::erdos_renyi(10, 1.5, 1).is_err());
    }

    #[test]
    fn sparse_er_has_no_isolated_nodes() {
        // p far below the connectivity threshold: many rewires
        let g = Graph::erdos_renyi(500, 0.001, 5).unwrap();
        assert!((0..500).all(|u| g.degree(u) >= 1));
        assert!(g.is_symmetric());
    }

    #[test]
    fn er_mean_degree_at_n_5000() {
        let g = Graph::erdos_renyi(5000, 0.02, 1).unwrap();
        // binomial(4999, 0.02): mean 99.98, sd of the mean degree ~ 0.14
        assert!((g.mean_degree() - 99.98).abs() < 3.0 * 0.2, "{}", g.mean_degree());
    }

    #[test]
    fn lattice_shapes() {
        let g = Graph::square_lattice(71, true).unwrap();
        assert_eq!(g.n(), 5041);
        assert!((0..g.n()).all(|u| g.degree(u) == 4));
        for side in [2, 3, 5] {
            let g = Graph::square_lattice(side, true).unwrap();
            assert!((0..g.n()).all(|u| g.degree(u) == 4));
            assert!(g.is_symmetric());
        }
        let g = Graph::square_lattice(2, false).unwrap();
        assert!((0..4).all(|u| g.degree(u) == 2));
        let g = Graph::square_lattice(3, false).unwrap();
        assert_eq!(g.degree(4), 4);
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.degree(1), 3);
        assert!(Graph::square_lattice(1, true).is_err());
    }

    #[test]
    fn edge_list_handling() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(g.neighbors(0).collect::<Vec<_>>(), vec![1]);
        let g = Graph::from_edges(3, &[(0, 1), (1, 0), (1, 2), (1, 2)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degree(1), 2);
        assert!(matches!(Graph::from_edges(3, &[(0, 1)]), Err(Error::IsolatedNode(2))));
        assert!(matches!(
            Graph::from_edges(2, &[(0, 5)]),
            Err(Error::NodeOutOfRange { node: 5, n: 2 })
        ));
    }

    #[test]
    fn edge_list_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# triangle\n0 1\n1 2\n\n2 0\n0 1").unwrap();
        let g = Graph::from_edge_list(f.path(), None).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 3);
        assert!(matches!(
            Graph::from_edge_list(f.path(), Some(4)),
            Err(Error::IsolatedNode(3))
        ));
        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "0 1\n1 x").unwrap();
        assert!(matches!(
            Graph::from_edge_list(bad.path(), None),
            Err(Error::EdgeListParse { line: 2, .. })
        ));
    }

    #[test]
    fn sampled_neighbors_are_neighbors() {
        let g = Graph::erdos_renyi(100, 0.05, 3).unwrap();
        let mut rng = Pcg64::seed_from_u64(0);
        for u in 0..100 {
            let v = g.sample_neighbor(u, &mut rng);
            assert!(g.neighbors(u).any(|w| w == v));
        }
    }
}
