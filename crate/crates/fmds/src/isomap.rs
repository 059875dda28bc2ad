//! Isomap: classical scaling of graph geodesics.
//!
//! A neighborhood graph connects densities whose dissimilarity is small
//! (radius rule) or locally ranked (k-nearest rule, union-symmetrized);
//! edge weights are the dissimilarities themselves. Shortest-path lengths
//! through the graph approximate the intrinsic metric of the family, and
//! classical scaling of those geodesics recovers a parametrization-like
//! embedding even when the raw metric curves through function space.
//!
//! Geodesics across different connected components are infinite. Classical
//! scaling cannot digest infinities, so by default a disconnected graph is
//! an error carrying the component sizes; the caller may opt into keeping
//! the largest component instead. [`smallest_connected_radius`] reports the
//! minimax bottleneck (the largest minimum-spanning-tree edge), the exact
//! threshold at which the radius graph becomes connected.
//!
//! Production shortest paths are per-source Dijkstra runs (parallel over
//! sources, each run independent, so results never depend on the thread
//! count). [`floyd_warshall`] is an independent all-pairs oracle used by
//! tests.

use crate::error::{Error, Result};
use crate::mds::{classical_scaling, Embedding};
use crate::metrics::{DissimilarityMatrix, MetricCheck};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

// ---------------------------------------------------------------------------
// Neighborhood graphs

/// Undirected weighted graph stored as sorted adjacency lists.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    pub n: usize,
    /// adj[i] = (j, weight), sorted by j, no self-loops, symmetric.
    pub adj: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    /// Component id per node (ids are 0.. in order of first appearance).
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0usize;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Connect every pair with a finite dissimilarity at most `radius`.
/// Infinite entries (e.g. divergences across disjoint supports) never
/// produce edges.
pub fn radius_graph(delta: &DissimilarityMatrix, radius: f64) -> Result<Graph> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!(
            "neighborhood radius must be positive, got {radius}"
        )));
    }
    let n = delta.n();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = delta.get(i, j);
            if d.is_finite() && d <= radius {
                adj[i].push((j, d));
                adj[j].push((i, d));
            }
        }
    }
    Ok(Graph { n, adj })
}

/// Connect each point to its k nearest neighbors (ties broken by index),
/// then symmetrize by union: an edge survives if either endpoint selected
/// the other.
pub fn knn_graph(delta: &DissimilarityMatrix, k: usize) -> Result<Graph> {
    let n = delta.n();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "k must be in 1..{} (number of points minus one), got {k}",
            n - 1
        )));
    }
    let mut chosen = vec![false; n * n];
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.retain(|&j| delta.get(i, j).is_finite());
        order.sort_by(|&a, &b| {
            delta
                .get(i, a)
                .partial_cmp(&delta.get(i, b))
                .unwrap()
                .then(a.cmp(&b))
        });
        for &j in order.iter().take(k) {
            chosen[i * n + j] = true;
        }
    }
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if chosen[i * n + j] || chosen[j * n + i] {
                let d = delta.get(i, j);
                adj[i].push((j, d));
                adj[j].push((i, d));
            }
        }
    }
    Ok(Graph { n, adj })
}

// ---------------------------------------------------------------------------
// Shortest paths

#[derive(Copy, Clone, PartialEq)]
struct HeapKey(f64);

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Single-source Dijkstra. Returns (distances, hop counts); both are
/// infinite / `u32::MAX` for unreachable nodes.
pub fn dijkstra(graph: &Graph, source: usize) -> (Vec<f64>, Vec<u32>) {
    let n = graph.n;
    let mut dist = vec![f64::INFINITY; n];
    let mut hops = vec![u32::MAX; n];
    let mut done = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(HeapKey, usize)>> = BinaryHeap::new();
    dist[source] = 0.0;
    hops[source] = 0;
    heap.push(Reverse((HeapKey(0.0), source)));
    while let Some(Reverse((HeapKey(d), u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in &graph.adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                hops[v] = hops[u] + 1;
                heap.push(Reverse((HeapKey(nd), v)));
            }
        }
    }
    (dist, hops)
}

/// All-pairs geodesic distances and hop counts, one Dijkstra per source.
/// The forward and reverse runs over the same path may round their sums
/// differently (float addition is not associative), so the matrix is
/// symmetrized by taking the smaller of the two directions.
pub fn all_pairs_shortest_paths(graph: &Graph) -> (DMatrix<f64>, DMatrix<u32>) {
    let n = graph.n;
    let rows: Vec<(Vec<f64>, Vec<u32>)> =
        (0..n).into_par_iter().map(|s| dijkstra(graph, s)).collect();
    let mut dist = DMatrix::zeros(n, n);
    let mut hops = DMatrix::from_element(n, n, 0u32);
    for (i, (dr, hr)) in rows.iter().enumerate() {
        for j in 0..n {
            dist[(i, j)] = dr[j];
            hops[(i, j)] = hr[j];
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let v = dist[(i, j)].min(dist[(j, i)]);
            dist[(i, j)] = v;
            dist[(j, i)] = v;
        }
    }
    (dist, hops)
}

/// Floyd-Warshall all-pairs shortest paths: an independent O(n^3) oracle
/// for cross-checking Dijkstra in tests.
pub fn floyd_warshall(graph: &Graph) -> DMatrix<f64> {
    let n = graph.n;
    let mut d = DMatrix::from_element(n, n, f64::INFINITY);
    for i in 0..n {
        d[(i, i)] = 0.0;
    }
    for i in 0..n {
        for &(j, w) in &graph.adj[i] {
            if w < d[(i, j)] {
                d[(i, j)] = w;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[(i, k)] + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    d
}

// ---------------------------------------------------------------------------
// Diagnostics

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDiagnostics {
    pub n: usize,
    pub edges: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    pub component_count: usize,
    /// Component sizes, descending.
    pub component_sizes: Vec<usize>,
    /// Fraction of connected ordered pairs (i != j) whose shortest path
    /// uses more than 3 edges: a coarse "how much does the graph actually
    /// propagate" indicator. Zero when every pair is near-adjacent.
    pub frac_pairs_over_3_hops: f64,
}

/// Structural statistics come from the full graph; hop statistics from the
/// shortest-path runs, which may cover only the retained component.
fn diagnostics(graph: &Graph, hops: &DMatrix<u32>) -> GraphDiagnostics {
    let n = graph.n;
    let comp = graph.components();
    let count = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; count];
    for &c in &comp {
        sizes[c] += 1;
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let degrees: Vec<usize> = (0..n).map(|i| graph.degree(i)).collect();
    let mut connected_pairs = 0usize;
    let mut far_pairs = 0usize;
    for i in 0..hops.nrows() {
        for j in 0..hops.ncols() {
            if i != j && hops[(i, j)] != u32::MAX {
                connected_pairs += 1;
                if hops[(i, j)] > 3 {
                    far_pairs += 1;
                }
            }
        }
    }
    GraphDiagnostics {
        n,
        edges: graph.edge_count(),
        min_degree: degrees.iter().copied().min().unwrap_or(0),
        max_degree: degrees.iter().copied().max().unwrap_or(0),
        component_count: count,
        component_sizes: sizes,
        frac_pairs_over_3_hops: if connected_pairs == 0 {
            0.0
        } else {
            far_pairs as f64 / connected_pairs as f64
        },
    }
}

// ---------------------------------------------------------------------------
// Isomap

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborRule {
    Radius(f64),
    KNearest(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisconnectedPolicy {
    /// Refuse to embed a disconnected graph (default).
    #[default]
    Fail,
    /// Keep the largest component (lowest-index component on ties) and
    /// embed only it; dropped points are reported, never silently lost.
    LargestComponent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsomapConfig {
    pub rule: NeighborRule,
    pub dim: usize,
    #[serde(default)]
    pub policy: DisconnectedPolicy,
}

#[derive(Clone, Debug)]
pub struct IsomapOutput {
    pub embedding: Embedding,
    /// Geodesic distances among the retained points.
    pub geodesics: DissimilarityMatrix,
    pub diagnostics: GraphDiagnostics,
    /// Original indices of retained points (everything when connected).
    pub retained: Vec<usize>,
}

pub fn isomap(delta: &DissimilarityMatrix, config: &IsomapConfig) -> Result<IsomapOutput> {
    let graph = match config.rule {
        NeighborRule::Radius(r) => radius_graph(delta, r)?,
        NeighborRule::KNearest(k) => knn_graph(delta, k)?,
    };
    isomap_on_graph(delta, &graph, config)
}

fn isomap_on_graph(
    delta: &DissimilarityMatrix,
    graph: &Graph,
    config: &IsomapConfig,
) -> Result<IsomapOutput> {
    let n = graph.n;
    let comp = graph.components();
    let count = comp.iter().copied().max().map_or(0, |m| m + 1);
    let retained: Vec<usize> = if count <= 1 {
        (0..n).collect()
    } else {
        let mut sizes = vec![0usize; count];
        for &c in &comp {
            sizes[c] += 1;
        }
        match config.policy {
            DisconnectedPolicy::Fail => {
                let mut sorted = sizes.clone();
                sorted.sort_unstable_by(|a, b| b.cmp(a));
                let radius = match config.rule {
                    NeighborRule::Radius(r) => r,
                    NeighborRule::KNearest(_) => f64::NAN,
                };
                return Err(Error::Disconnected {
                    radius,
                    component_sizes: sorted,
                });
            }
            DisconnectedPolicy::LargestComponent => {
                let best = (0..count).max_by_key(|&c| (sizes[c], usize::MAX - c)).unwrap();
                (0..n).filter(|&i| comp[i] == best).collect()
            }
        }
    };

    // Restrict the graph to the retained points (indices remapped).
    let sub = if retained.len() == n {
        graph.clone()
    } else {
        let mut map = vec![usize::MAX; n];
        for (new, &old) in retained.iter().enumerate() {
            map[old] = new;
        }
        let adj = retained
            .iter()
            .map(|&old| {
                graph.adj[old]
                    .iter()
                    .filter(|&&(v, _)| map[v] != usize::MAX)
                    .map(|&(v, w)| (map[v], w))
                    .collect()
            })
            .collect();
        Graph {
            n: retained.len(),
            adj,
        }
    };

    let (dist, hops) = all_pairs_shortest_paths(&sub);
    let diag = diagnostics(graph, &hops);
    let labels: Vec<String> = retained.iter().map(|&i| delta.labels[i].clone()).collect();
    let mut geodesics = DissimilarityMatrix::new(labels, dist)?;
    // Shortest-path lengths of a nonnegative graph satisfy the triangle
    // inequality by construction.
    geodesics.metric_check = MetricCheck::Satisfied;
    let embedding = classical_scaling(&geodesics, config.dim)?;
    Ok(IsomapOutput {
        embedding,
        geodesics,
        diagnostics: diag,
        retained,
    })
}

/// The exact connectivity threshold of the radius rule: the largest edge of
/// a minimum spanning tree over finite dissimilarities (Prim's algorithm).
/// A radius graph is connected iff its radius is at least this value.
/// Returns infinity when no finite-weight spanning tree exists.
pub fn smallest_connected_radius(delta: &DissimilarityMatrix) -> Result<f64> {
    let n = delta.n();
    if n < 2 {
        return Ok(0.0);
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    in_tree[0] = true;
    for (j, b) in best.iter_mut().enumerate().skip(1) {
        *b = delta.get(0, j);
    }
    let mut max_edge = 0.0f64;
    for _ in 1..n {
        let mut pick = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (pick == usize::MAX || best[j] < best[pick]) {
                pick = j;
            }
        }
        if best[pick].is_infinite() {
            return Ok(f64::INFINITY);
        }
        max_edge = max_edge.max(best[pick]);
        in_tree[pick] = true;
        for j in 0..n {
            if !in_tree[j] {
                let d = delta.get(pick, j);
                if d < best[j] {
                    best[j] = d;
                }
            }
        }
    }
    Ok(max_edge)
}

// ---------------------------------------------------------------------------
