//! Undirected market graph with dual edge weights.

use std::fmt;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GraphKind {
    Mst,
    Threshold,
    Pmfg,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphKind::Mst => "MST",
            GraphKind::Threshold => "THRESHOLD",
            GraphKind::Pmfg => "PMFG",
        })
    }
}

/// An edge `u < v` carrying strength `|C_uv|` and distance `D_uv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub u: usize,
    pub v: usize,
    pub strength: T,
    pub distance: T,
}

impl<T> Edge<T> {
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRef {
    pub end_date: NaiveDate,
    pub tau: usize,
    pub theta: Option<f64>,
}

/// Simple undirected graph on vertices `0..n`. Edges are kept sorted by
/// `(u, v)`; `adjacency[x]` lists `(neighbour, edge index)` sorted by
/// neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketGraph<T> {
    pub labels: Arc<[String]>,
    pub kind: GraphKind,
    pub frame: FrameRef,
    edges: Vec<Edge<T>>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl<T: Scalar> MarketGraph<T> {
    /// Builds a graph from an edge list. Panics on self-loops, out-of-range
    /// endpoints or parallel edges; construction code never produces them.
    pub fn new(labels: Arc<[String]>, kind: GraphKind, frame: FrameRef, mut edges: Vec<Edge<T>>) -> Self {
        let n = labels.len();
        for e in edges.iter_mut() {
            assert!(e.u != e.v, "self-loop on vertex {}", e.u);
            assert!(e.u < n && e.v < n, "edge endpoint out of range");
            if e.u > e.v {
                std::mem::swap(&mut e.u, &mut e.v);
            }
        }
        edges.sort_by_key(|e| (e.u, e.v));
        assert!(
            edges.windows(2).all(|w| (w[0].u, w[0].v) != (w[1].u, w[1].v)),
            "parallel edges"
        );
        let mut adjacency = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.u].push((e.v, k));
            adjacency[e.v].push((e.u, k));
        }
        for a in adjacency.iter_mut() {
            a.sort_unstable();
        }
        MarketGraph {
            labels,
            kind,
            frame,
            edges,
            adjacency,
        }
    }

    /// Unlabelled graph with unit strength and distance on every edge.
    pub fn unit(n: usize, pairs: &[(usize, usize)]) -> Self {
        Self::weighted(n, &pairs.iter().map(|&(u, v)| (u, v, T::one(), T::one())).collect::<Vec<_>>())
    }

    /// Unlabelled graph from `(u, v, strength, distance)` tuples.
    pub fn weighted(n: usize, edges: &[(usize, usize, T, T)]) -> Self {
        let labels: Arc<[String]> = (0..n).map(|i| format!("V{i}")).collect::<Vec<_>>().into();
        let edges = edges
            .iter()
            .map(|&(u, v, strength, distance)| Edge { u, v, strength, distance })
            .collect();
        Self::new(
            labels,
            GraphKind::Threshold,
            FrameRef {
                end_date: NaiveDate::default(),
                tau: 0,
                theta: None,
            },
            edges,
        )
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn neighbours(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[x].iter().map(|&(y, _)| y)
    }

    /// `(neighbour, edge index)` pairs of `x`.
    pub fn incident(&self, x: usize) -> &[(usize, usize)] {
        &self.adjacency[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.adjacency[u]
            .binary_search_by_key(&v, |&(y, _)| y)
            .ok()
            .map(|k| self.adjacency[u][k].1)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_index(u, v).is_some()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for y in self.neighbours(x) {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == n
    }

    /// Same vertices and metadata, subset of edges.
    pub fn with_edges(&self, kind: GraphKind, edges: Vec<Edge<T>>) -> Self {
        Self::new(self.labels.clone(), kind, self.frame.clone(), edges)
    }
}

/// Fixed-width bitset over vertex ids, used by the clique and path counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct VertexSet {
    words: Vec<u64>,
}

impl VertexSet {
    pub fn new(n: usize) -> Self {
        VertexSet {
            words: vec![0; n.div_ceil(64).max(1)],
        }
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersect(&self, other: &Self) -> Self {
        VertexSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    /// `|self & a & !b|`
    pub fn count_and_not(&self, a: &Self, b: &Self) -> usize {
        self.words
            .iter()
            .zip(&a.words)
            .zip(&b.words)
            .map(|((x, y), z)| (x & y & !z).count_ones() as usize)
            .sum()
    }

    pub fn difference(&self, other: &Self) -> Self {
        VertexSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * 64 + b)
                }
            })
        })
    }
}

impl<T: Scalar> MarketGraph<T> {
    pub(crate) fn neighbour_sets(&self) -> Vec<VertexSet> {
        let n = self.num_vertices();
        (0..n)
            .map(|x| {
                let mut s = VertexSet::new(n);
                for y in self.neighbours(x) {
                    s.insert(y);
                }
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_normalised_and_indexed() {
        let g = MarketGraph::<f64>::unit(4, &[(2, 1), (0, 1), (3, 2)]);
        assert_eq!(g.edges()[0].u, 0);
        assert_eq!((g.edges()[1].u, g.edges()[1].v), (1, 2));
        assert_eq!(g.degree(2), 2);
        assert_eq!(g.edge_index(2, 1), Some(1));
        assert!(g.has_edge(3, 2));
        assert!(!g.has_edge(0, 3));
        assert!(g.is_connected());
        assert!(!MarketGraph::<f64>::unit(3, &[(0, 1)]).is_connected());
    }

    #[test]
    #[should_panic(expected = "parallel")]
    fn parallel_edges_rejected() {
        MarketGraph::<f64>::unit(3, &[(0, 1), (1, 0)]);
    }

    #[test]
    fn vertex_set_ops() {
        let mut a = VertexSet::new(130);
        let mut b = VertexSet::new(130);
        for i in [1, 64, 65, 129] {
            a.insert(i);
        }
        for i in [64, 129, 3] {
            b.insert(i);
        }
        assert_eq!(a.intersect(&b).iter().collect::<Vec<_>>(), vec![64, 129]);
        assert_eq!(a.difference(&b).iter().collect::<Vec<_>>(), vec![1, 65]);
        assert_eq!(a.len(), 4);
        let none = VertexSet::new(130);
        assert_eq!(a.count_and_not(&a, &b), 2);
        assert_eq!(a.count_and_not(&b, &none), 2);
        a.remove(1);
        assert!(!a.contains(1));
    }
}
