//! Compact undirected simple graphs.
//!
//! Nodes are contiguous indices in `[0, n)`. Every adjacency list is kept
//! sorted and free of duplicates, so edge queries are a binary search and the
//! canonical edge-list serialization falls out of a plain scan.

mod dk2;
pub mod generate;
mod io;
mod metrics;

pub use dk2::{dk2_distance, dk2_series, Dk2Series};
pub use io::{load_edge_list, parse_edge_list, write_edge_list, IdRemap};
pub use metrics::{assortativity, average_clustering, metrics, sampled_paths, GraphMetrics};

pub type NodeId = u32;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl Graph {
    /// A graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        assert!(n <= NodeId::MAX as usize, "node count {n} exceeds id space");
        Graph {
            adj: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge iterator. Self-loops and repeated edges are
    /// dropped; `(u, v)` and `(v, u)` name the same edge.
    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut g = Graph::empty(n);
        for (u, v) in edges {
            assert!(
                (u as usize) < n && (v as usize) < n,
                "edge ({u}, {v}) out of range for {n} nodes"
            );
            if u != v {
                g.adj[u as usize].push(v);
                g.adj[v as usize].push(u);
            }
        }
        let mut twice = 0;
        for list in &mut g.adj {
            list.sort_unstable();
            list.dedup();
            list.shrink_to_fit();
            twice += list.len();
        }
        g.edge_count = twice / 2;
        g
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.adj.iter().map(|l| l.len() as u32).collect()
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v as usize]
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        0..self.adj.len() as NodeId
    }

    fn check(&self, v: NodeId) {
        assert!(
            (v as usize) < self.adj.len(),
            "node {v} out of range for {} nodes",
            self.adj.len()
        );
    }

    /// True iff `{u, v}` is an edge. `edge_exists(u, u)` is always false.
    pub fn edge_exists(&self, u: NodeId, v: NodeId) -> bool {
        self.check(u);
        self.check(v);
        let (a, b) = if self.adj[u as usize].len() <= self.adj[v as usize].len() {
            (u, v)
        } else {
            (v, u)
        };
        self.adj[a as usize].binary_search(&b).is_ok()
    }

    /// Inserts `{u, v}`; returns false if it was already present.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        self.check(u);
        self.check(v);
        assert_ne!(u, v, "self-loops are not allowed");
        match self.adj[u as usize].binary_search(&v) {
            Ok(_) => false,
            Err(pos) => {
                self.adj[u as usize].insert(pos, v);
                let pos = self.adj[v as usize].binary_search(&u).unwrap_err();
                self.adj[v as usize].insert(pos, u);
                self.edge_count += 1;
                true
            }
        }
    }

    /// Removes `{u, v}`; returns false if it was absent.
    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        self.check(u);
        self.check(v);
        match self.adj[u as usize].binary_search(&v) {
            Err(_) => false,
            Ok(pos) => {
                self.adj[u as usize].remove(pos);
                let pos = self.adj[v as usize].binary_search(&u).unwrap();
                self.adj[v as usize].remove(pos);
                self.edge_count -= 1;
                true
            }
        }
    }

    /// Toggles `{u, v}` and returns whether the edge is present afterwards.
    ///
    /// # Panics
    ///
    /// If `u == v` or either id is out of range.
    pub fn flip_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        assert_ne!(u, v, "cannot flip a self-loop");
        if self.remove_edge(u, v) {
            false
        } else {
            self.add_edge(u, v);
            true
        }
    }

    /// Sets `{u, v}` to `present`; returns true if anything changed.
    pub fn set_edge(&mut self, u: NodeId, v: NodeId, present: bool) -> bool {
        if present {
            self.add_edge(u, v)
        } else {
            self.remove_edge(u, v)
        }
    }

    /// All edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            let u = u as NodeId;
            let start = list.partition_point(|&v| v <= u);
            list[start..].iter().map(move |&v| (u, v))
        })
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn average_degree(&self) -> f64 {
        if self.adj.is_empty() {
            0.0
        } else {
            2.0 * self.edge_count as f64 / self.adj.len() as f64
        }
    }

    /// Relabels every node `v` as `new_id[v]`. `new_id` must be a permutation
    /// of `0..n`.
    pub fn permute(&self, new_id: &[NodeId]) -> Graph {
        assert_eq!(new_id.len(), self.node_count(), "permutation length");
        let mut adj = vec![Vec::new(); self.node_count()];
        for (v, list) in self.adj.iter().enumerate() {
            let mut mapped: Vec<NodeId> = list.iter().map(|&w| new_id[w as usize]).collect();
            mapped.sort_unstable();
            adj[new_id[v] as usize] = mapped;
        }
        Graph {
            adj,
            edge_count: self.edge_count,
        }
    }

    /// Number of edges with both endpoints in `nodes`.
    pub fn internal_edges(&self, nodes: &[NodeId]) -> usize {
        let mut count = 0;
        for (i, &u) in nodes.iter().enumerate() {
            for &v in &nodes[i + 1..] {
                if self.edge_exists(u, v) {
                    count += 1;
                }
            }
        }
        count
    }
}
