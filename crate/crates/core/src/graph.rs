//! The discretized surveillance environment.
//!
//! Vertices are grid subregions, edges join adjacent subregions and carry
//! the travel distance between them. Every distance in the crate is taken
//! on an induced subgraph `G(S)`: only vertices of `S` and edges with both
//! endpoints in `S` may be used.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vertex_set::VertexSet;

pub type VertexId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid grid dimensions {rows}x{cols}")]
    InvalidDimensions { rows: usize, cols: usize },
    #[error("graph must have at least one vertex")]
    NoVertices,
    #[error("edge ({0}, {1}) references a vertex outside 0..{2}")]
    EdgeOutOfRange(VertexId, VertexId, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(VertexId, VertexId),
    #[error("edge ({0}, {1}) has non-positive or non-finite weight {2}")]
    BadWeight(VertexId, VertexId, f64),
    #[error("cell size must be positive, got {0}")]
    BadCellSize(f64),
    #[error("grid geometry {rows}x{cols} does not match vertex count {vertex_count}")]
    GridMismatch {
        rows: usize,
        cols: usize,
        vertex_count: usize,
    },
    #[error("vertex {0} is not in the subset")]
    SourceOutsideSubset(VertexId),
    #[error("vertex {0} does not exist")]
    UnknownVertex(VertexId),
    #[error("connectivity of the empty set is undefined")]
    EmptySubset,
    #[error("no path from {start} to the target set within the subset")]
    NoPath { start: VertexId },
    #[error("speeds must be positive, got {0}")]
    BadSpeed(f64),
}

/// A subgraph distance: either a finite length or unreachable.
///
/// `Finite` orders before `Infinite`, so `min` and comparisons behave like
/// the extended reals.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Distance {
    Finite(f64),
    Infinite,
}

impl Distance {
    pub fn from_raw(d: f64) -> Self {
        if d.is_finite() {
            Distance::Finite(d)
        } else {
            Distance::Infinite
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Every edge has length 1.
    #[default]
    Unit,
    /// Every edge has the cell side length.
    CellSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub rows: usize,
    pub cols: usize,
    pub cell_size: f64,
}

impl GridGeometry {
    /// Planar center of a cell. Row 0 is the bottom row, column 0 the left column.
    pub fn cell_center(&self, v: VertexId) -> (f64, f64) {
        let row = v / self.cols;
        let col = v % self.cols;
        (
            (col as f64 + 0.5) * self.cell_size,
            (row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn vertex_at(&self, row: usize, col: usize) -> VertexId {
        row * self.cols + col
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: VertexId,
    pub b: VertexId,
    pub weight: f64,
}

/// Weighted undirected environment graph `G(Q)`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct EnvironmentGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(VertexId, f64)>>,
    grid: Option<GridGeometry>,
}

/// JSON form: `{vertex_count, edges: [[u, v, w], ..], grid: {rows, cols, cell_size}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub vertex_count: usize,
    pub edges: Vec<(VertexId, VertexId, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridGeometry>,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    vertex: VertexId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, vertex)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-priority queue used by every Dijkstra-style search in the crate.
#[derive(Default)]
pub(crate) struct DistQueue {
    heap: BinaryHeap<HeapEntry>,
}

impl DistQueue {
    pub(crate) fn push(&mut self, dist: f64, vertex: VertexId) {
        self.heap.push(HeapEntry { dist, vertex });
    }

    pub(crate) fn pop(&mut self) -> Option<(f64, VertexId)> {
        self.heap.pop().map(|e| (e.dist, e.vertex))
    }
}

impl EnvironmentGraph {
    pub fn new(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (VertexId, VertexId, f64)>,
        grid: Option<GridGeometry>,
    ) -> Result<Self, GraphError> {
        if vertex_count == 0 {
            return Err(GraphError::NoVertices);
        }
        if let Some(g) = grid {
            if g.rows * g.cols != vertex_count {
                return Err(GraphError::GridMismatch {
                    rows: g.rows,
                    cols: g.cols,
                    vertex_count,
                });
            }
            if !(g.cell_size > 0.0 && g.cell_size.is_finite()) {
                return Err(GraphError::BadCellSize(g.cell_size));
            }
        }
        let mut adjacency: Vec<Vec<(VertexId, f64)>> = vec![Vec::new(); vertex_count];
        let mut list = Vec::new();
        for (a, b, weight) in edges {
            if a >= vertex_count || b >= vertex_count {
                return Err(GraphError::EdgeOutOfRange(a, b, vertex_count));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(GraphError::BadWeight(a, b, weight));
            }
            if adjacency[a].iter().any(|&(n, _)| n == b) {
                return Err(GraphError::DuplicateEdge(a.min(b), a.max(b)));
            }
            adjacency[a].push((b, weight));
            adjacency[b].push((a, weight));
            list.push(Edge {
                a: a.min(b),
                b: a.max(b),
                weight,
            });
        }
        for neighbors in &mut adjacency {
            neighbors.sort_by_key(|&(n, _)| n);
        }
        Ok(Self {
            vertex_count,
            edges: list,
            adjacency,
            grid,
        })
    }

    /// 4-neighbour grid; vertex `row * cols + col`.
    pub fn build_grid(
        rows: usize,
        cols: usize,
        cell_size: f64,
        weight_mode: WeightMode,
    ) -> Result<Self, GraphError> {
        if rows == 0 || cols == 0 {
            return Err(GraphError::InvalidDimensions { rows, cols });
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(GraphError::BadCellSize(cell_size));
        }
        let weight = match weight_mode {
            WeightMode::Unit => 1.0,
            WeightMode::CellSize => cell_size,
        };
        let mut edges = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1, weight));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols, weight));
                }
            }
        }
        Self::new(
            rows * cols,
            edges,
            Some(GridGeometry {
                rows,
                cols,
                cell_size,
            }),
        )
    }

    pub fn from_document(doc: &GraphDocument) -> Result<Self, GraphError> {
        Self::new(doc.vertex_count, doc.edges.iter().copied(), doc.grid)
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            vertex_count: self.vertex_count,
            edges: self.edges.iter().map(|e| (e.a, e.b, e.weight)).collect(),
            grid: self.grid,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn grid(&self) -> Option<&GridGeometry> {
        self.grid.as_ref()
    }

    /// Neighbours of `v` sorted by vertex id, with edge weights.
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.adjacency[v]
    }

    pub fn edge_weight(&self, a: VertexId, b: VertexId) -> Option<f64> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, w)| w)
    }

    pub fn max_edge_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).fold(0.0, f64::max)
    }

    pub fn all_vertices(&self) -> VertexSet {
        VertexSet::full(self.vertex_count)
    }

    fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if v < self.vertex_count {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(v))
        }
    }

    /// Shortest distances from every vertex of `sources` to all vertices of
    /// `G(subset)`; `f64::INFINITY` for vertices outside or unreachable.
    /// Sources outside `subset` are ignored.
    pub(crate) fn raw_distances_within(
        &self,
        subset: &VertexSet,
        sources: &[VertexId],
    ) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.vertex_count];
        let mut queue = DistQueue::default();
        for &s in sources {
            if subset.contains(s) && dist[s] > 0.0 {
                dist[s] = 0.0;
                queue.push(0.0, s);
            }
        }
        while let Some((d, v)) = queue.pop() {
            if d > dist[v] {
                continue;
            }
            for &(n, w) in &self.adjacency[v] {
                if !subset.contains(n) {
                    continue;
                }
                let nd = d + w;
                if nd < dist[n] {
                    dist[n] = nd;
                    queue.push(nd, n);
                }
            }
        }
        dist
    }

    /// Distances from `source` to every vertex within `G(subset)`.
    pub fn distances_within(
        &self,
        subset: &VertexSet,
        source: VertexId,
    ) -> Result<Vec<Distance>, GraphError> {
        self.check_vertex(source)?;
        if !subset.contains(source) {
            return Err(GraphError::SourceOutsideSubset(source));
        }
        Ok(self
            .raw_distances_within(subset, &[source])
            .into_iter()
            .map(Distance::from_raw)
            .collect())
    }

    /// `d_S(source, targets)`: the shortest weighted path length within
    /// `G(subset)` from `source` to any vertex of `targets`.
    ///
    /// Targets outside `subset` cannot be reached inside `G(subset)` and are
    /// ignored. An empty target set yields 0 (`min ∅ = 0`).
    pub fn subgraph_distance(
        &self,
        subset: &VertexSet,
        source: VertexId,
        targets: &VertexSet,
    ) -> Result<Distance, GraphError> {
        self.check_vertex(source)?;
        if !subset.contains(source) {
            return Err(GraphError::SourceOutsideSubset(source));
        }
        if targets.is_empty() {
            return Ok(Distance::Finite(0.0));
        }
        let mut dist = vec![f64::INFINITY; self.vertex_count];
        let mut queue = DistQueue::default();
        dist[source] = 0.0;
        queue.push(0.0, source);
        while let Some((d, v)) = queue.pop() {
            if d > dist[v] {
                continue;
            }
            if targets.contains(v) {
                return Ok(Distance::Finite(d));
            }
            for &(n, w) in &self.adjacency[v] {
                if subset.contains(n) && d + w < dist[n] {
                    dist[n] = d + w;
                    queue.push(d + w, n);
                }
            }
        }
        Ok(Distance::Infinite)
    }

    /// A minimum-length path within `G(subset)` from `source` into `targets`.
    ///
    /// Among equal-length paths the lexicographically smallest vertex
    /// sequence is returned. The path stops at the first target vertex.
    pub fn shortest_path_in_subset(
        &self,
        subset: &VertexSet,
        source: VertexId,
        targets: &VertexSet,
    ) -> Result<Vec<VertexId>, GraphError> {
        self.check_vertex(source)?;
        if !subset.contains(source) {
            return Err(GraphError::SourceOutsideSubset(source));
        }
        let reachable_targets: Vec<VertexId> =
            targets.iter().filter(|&t| subset.contains(t)).collect();
        // distance-to-target field, then a greedy smallest-id descent
        let to_target = self.raw_distances_within(subset, &reachable_targets);
        if !to_target[source].is_finite() {
            return Err(GraphError::NoPath { start: source });
        }
        let mut path = vec![source];
        let mut v = source;
        while !targets.contains(v) {
            let here = to_target[v];
            let tol = 1e-12 * here.max(1.0);
            let next = self.adjacency[v]
                .iter()
                .find(|&&(n, w)| {
                    subset.contains(n)
                        && (to_target[n] + w - here).abs() <= tol
                        && to_target[n] < here
                })
                .map(|&(n, _)| n)
                .ok_or(GraphError::NoPath { start: source })?;
            path.push(next);
            v = next;
        }
        Ok(path)
    }

    /// Total weight of a vertex sequence; `None` if a consecutive pair is not an edge.
    pub fn path_length(&self, path: &[VertexId]) -> Option<f64> {
        path.windows(2).try_fold(0.0, |acc, pair| {
            Some(acc + self.edge_weight(pair[0], pair[1])?)
        })
    }

    /// Whether `G(subset)` is connected. The empty set is rejected.
    pub fn is_connected(&self, subset: &VertexSet) -> Result<bool, GraphError> {
        let start = subset.first().ok_or(GraphError::EmptySubset)?;
        let mut seen = VertexSet::empty(self.vertex_count);
        let mut stack = vec![start];
        seen.insert(start);
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(n, _) in &self.adjacency[v] {
                if subset.contains(n) && seen.insert(n) {
                    count += 1;
                    stack.push(n);
                }
            }
        }
        Ok(count == subset.len())
    }

    /// `max_i (1/s_i) Σ_{edges} d_Q(a, b)`: a bound on any subgraph distance
    /// in time units, used for the uncovered-time bound.
    pub fn diameter_bound(&self, speeds: &[f64]) -> Result<f64, GraphError> {
        if let Some(&bad) = speeds.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(GraphError::BadSpeed(bad));
        }
        let all = self.all_vertices();
        let mut cache: Vec<Option<Vec<f64>>> = vec![None; self.vertex_count];
        let mut total = 0.0;
        for e in &self.edges {
            let row = cache[e.a].get_or_insert_with(|| self.raw_distances_within(&all, &[e.a]));
            total += row[e.b];
        }
        let slowest = speeds.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(if speeds.is_empty() {
            0.0
        } else {
            total / slowest
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> EnvironmentGraph {
        EnvironmentGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)], None).unwrap()
    }

    #[test]
    fn grid_sizes() {
        let g = EnvironmentGraph::build_grid(2, 2, 1.0, WeightMode::Unit).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edges().len(), 4);
        assert!(g.edges().iter().all(|e| e.weight == 1.0));

        let g = EnvironmentGraph::build_grid(20, 20, 5.0, WeightMode::Unit).unwrap();
        assert_eq!(g.vertex_count(), 400);
        assert_eq!(g.edges().len(), 760);

        let g = EnvironmentGraph::build_grid(1, 5, 1.0, WeightMode::Unit).unwrap();
        assert_eq!(g.edges().len(), 4);
        assert!(g.is_connected(&g.all_vertices()).unwrap());

        let g = EnvironmentGraph::build_grid(3, 3, 5.0, WeightMode::CellSize).unwrap();
        assert!(g.edges().iter().all(|e| e.weight == 5.0));
    }

    #[test]
    fn grid_rejects_zero_dimensions() {
        assert_eq!(
            EnvironmentGraph::build_grid(0, 3, 1.0, WeightMode::Unit).unwrap_err(),
            GraphError::InvalidDimensions { rows: 0, cols: 3 }
        );
    }

    #[test]
    fn construction_validates_edges() {
        assert!(matches!(
            EnvironmentGraph::new(2, [(0, 0, 1.0)], None),
            Err(GraphError::SelfLoop(0))
        ));
        assert!(matches!(
            EnvironmentGraph::new(2, [(0, 1, 1.0), (1, 0, 2.0)], None),
            Err(GraphError::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            EnvironmentGraph::new(2, [(0, 1, 0.0)], None),
            Err(GraphError::BadWeight(..))
        ));
        assert!(matches!(
            EnvironmentGraph::new(2, [(0, 5, 1.0)], None),
            Err(GraphError::EdgeOutOfRange(..))
        ));
    }

    #[test]
    fn subgraph_distance_examples() {
        let g = path3();
        let all = g.all_vertices();
        let c = VertexSet::singleton(3, 2);
        assert_eq!(
            g.subgraph_distance(&all, 0, &c).unwrap(),
            Distance::Finite(2.0)
        );
        let split = VertexSet::from_vertices(3, [0, 2]);
        assert_eq!(
            g.subgraph_distance(&split, 0, &c).unwrap(),
            Distance::Infinite
        );
        assert_eq!(
            g.subgraph_distance(&all, 0, &VertexSet::empty(3)).unwrap(),
            Distance::Finite(0.0)
        );
        assert_eq!(
            g.subgraph_distance(&split, 1, &c).unwrap_err(),
            GraphError::SourceOutsideSubset(1)
        );
    }

    #[test]
    fn shortest_path_examples() {
        let g = path3();
        let all = g.all_vertices();
        assert_eq!(
            g.shortest_path_in_subset(&all, 0, &VertexSet::singleton(3, 0))
                .unwrap(),
            vec![0]
        );
        assert_eq!(
            g.shortest_path_in_subset(&all, 0, &VertexSet::singleton(3, 2))
                .unwrap(),
            vec![0, 1, 2]
        );
        let split = VertexSet::from_vertices(3, [0, 2]);
        assert!(matches!(
            g.shortest_path_in_subset(&split, 0, &VertexSet::singleton(3, 2)),
            Err(GraphError::NoPath { .. })
        ));
    }

    #[test]
    fn shortest_path_tie_break_is_lexicographic() {
        // square 0-1-3, 0-2-3: both length 2, prefer via 1
        let g = EnvironmentGraph::new(
            4,
            [(0, 2, 1.0), (2, 3, 1.0), (0, 1, 1.0), (1, 3, 1.0)],
            None,
        )
        .unwrap();
        let p = g
            .shortest_path_in_subset(&g.all_vertices(), 0, &VertexSet::singleton(4, 3))
            .unwrap();
        assert_eq!(p, vec![0, 1, 3]);
    }

    #[test]
    fn connectivity_examples() {
        let g = path3();
        assert!(g.is_connected(&VertexSet::singleton(3, 1)).unwrap());
        assert!(!g
            .is_connected(&VertexSet::from_vertices(3, [0, 2]))
            .unwrap());
        assert_eq!(
            g.is_connected(&VertexSet::empty(3)).unwrap_err(),
            GraphError::EmptySubset
        );
    }

    #[test]
    fn diameter_bound_examples() {
        let g = EnvironmentGraph::build_grid(2, 2, 1.0, WeightMode::Unit).unwrap();
        assert_eq!(g.diameter_bound(&[1.0]).unwrap(), 4.0);
        let g = EnvironmentGraph::build_grid(20, 20, 5.0, WeightMode::Unit).unwrap();
        assert_eq!(g.diameter_bound(&[1.0; 4]).unwrap(), 760.0);
        let h = EnvironmentGraph::new(3, [(0, 1, 2.5), (1, 2, 1.5), (0, 2, 7.0)], None).unwrap();
        assert_eq!(
            h.diameter_bound(&[2.0]).unwrap() * 2.0,
            h.diameter_bound(&[1.0]).unwrap()
        );
        // the long edge is shortcut: 2.5 + 1.5 + 4.0
        assert_eq!(h.diameter_bound(&[1.0]).unwrap(), 8.0);
        assert!(h.diameter_bound(&[0.0]).is_err());
    }

    #[test]
    fn document_round_trip() {
        let g = EnvironmentGraph::build_grid(2, 3, 5.0, WeightMode::CellSize).unwrap();
        let json = serde_json::to_string(&g.to_document()).unwrap();
        let back = EnvironmentGraph::from_document(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.grid(), g.grid());
    }
}
