//! Graph-level indicators of a market network.
//!
//! Strength `|C_ij|` is the edge weight for weighted degree, clustering,
//! modularity, assortativity and eigenvector centrality; distance `D_ij` is
//! the weight for shortest paths and everything derived from them.
//! Logarithms are natural.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{MarketGraph, VertexSet};
use crate::linalg::sym_eigen;
use crate::scalar::{xlnx, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeStats<T> {
    pub num_edges: usize,
    pub edge_density: T,
    pub avg_degree: T,
    pub avg_weighted_degree: T,
}

pub fn degree_stats<T: Scalar>(g: &MarketGraph<T>) -> DegreeStats<T> {
    let n = T::from_usize_lossy(g.num_vertices());
    let m = T::from_usize_lossy(g.num_edges());
    let mw: T = g.edges().iter().map(|e| e.strength).sum();
    let two = T::lit(2.0);
    DegreeStats {
        num_edges: g.num_edges(),
        edge_density: if g.num_vertices() > 1 { two * m / (n * (n - T::one())) } else { T::zero() },
        avg_degree: two * m / n,
        avg_weighted_degree: two * mw / n,
    }
}

/// All-pairs shortest-path lengths over edge distances (Floyd–Warshall).
/// Unreachable pairs are `+inf`.
pub fn shortest_paths<T: Scalar>(g: &MarketGraph<T>) -> Array2<T> {
    let n = g.num_vertices();
    let mut d = Array2::from_elem((n, n), T::infinity());
    for i in 0..n {
        d[[i, i]] = T::zero();
    }
    for e in g.edges() {
        if e.distance < d[[e.u, e.v]] {
            d[[e.u, e.v]] = e.distance;
            d[[e.v, e.u]] = e.distance;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[[i, k]];
            if dik == T::infinity() {
                continue;
            }
            for j in 0..n {
                let via = dik + d[[k, j]];
                if via < d[[i, j]] {
                    d[[i, j]] = via;
                }
            }
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStats<T> {
    pub avg_path_length: T,
    pub diameter: T,
    pub efficiency: T,
    pub grc: T,
}

pub fn path_stats<T: Scalar>(g: &MarketGraph<T>) -> PathStats<T> {
    path_stats_from(&shortest_paths(g))
}

/// Path statistics from a precomputed distance matrix.
pub fn path_stats_from<T: Scalar>(d: &Array2<T>) -> PathStats<T> {
    let n = d.nrows();
    if n < 2 {
        return PathStats {
            avg_path_length: T::zero(),
            diameter: T::zero(),
            efficiency: T::zero(),
            grc: T::zero(),
        };
    }
    let pairs = T::from_usize_lossy(n * (n - 1));
    let mut total = T::zero();
    let mut diameter = T::zero();
    let mut inv_total = T::zero();
    let mut reach = vec![T::zero(); n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dij = d[[i, j]];
            total = total + dij;
            diameter = diameter.max(dij);
            let inv = if dij > T::zero() { T::one() / dij } else { T::infinity() };
            inv_total = inv_total + inv;
            reach[i] = reach[i] + inv;
        }
    }
    let nm1 = T::from_usize_lossy(n - 1);
    let reach: Vec<T> = reach.into_iter().map(|r| r / nm1).collect();
    let cmax = reach.iter().fold(T::neg_infinity(), |m, &r| m.max(r));
    let grc = reach.iter().map(|&r| cmax - r).sum::<T>() / nm1;
    PathStats {
        avg_path_length: total / pairs,
        diameter,
        efficiency: inv_total / pairs,
        grc,
    }
}

/// Onnela weighted clustering with raw strengths, averaged over vertices.
pub fn clustering_avg<T: Scalar>(g: &MarketGraph<T>) -> T {
    let n = g.num_vertices();
    if n == 0 {
        return T::zero();
    }
    let third = T::one() / T::lit(3.0);
    let edges = g.edges();
    let mut acc = T::zero();
    for i in 0..n {
        let inc = g.incident(i);
        let k = inc.len();
        if k < 2 {
            continue;
        }
        let mut s = T::zero();
        for a in 0..k {
            for b in (a + 1)..k {
                let (j, eij) = inc[a];
                let (h, eih) = inc[b];
                if let Some(ejh) = g.edge_index(j, h) {
                    let prod = edges[eij].strength * edges[eih].strength * edges[ejh].strength;
                    s = s + prod.powf(third);
                }
            }
        }
        acc = acc + T::lit(2.0) * s / T::from_usize_lossy(k * (k - 1));
    }
    acc / T::from_usize_lossy(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityPartition<T> {
    /// Community id per vertex, contiguous from 0 in order of first vertex.
    pub assignment: Vec<usize>,
    pub modularity: T,
    pub pass_count: usize,
}

impl<T> CommunityPartition<T> {
    pub fn num_communities(&self) -> usize {
        self.assignment.iter().copied().max().map_or(0, |m| m + 1)
    }
}

/// Newman modularity with strength weights, including the `i = j` terms.
pub fn modularity<T: Scalar>(g: &MarketGraph<T>, assignment: &[usize]) -> T {
    let two_m: T = T::lit(2.0) * g.edges().iter().map(|e| e.strength).sum::<T>();
    if !(two_m > T::zero()) {
        return T::zero();
    }
    let mut internal: BTreeMap<usize, T> = BTreeMap::new();
    let mut tot: BTreeMap<usize, T> = BTreeMap::new();
    for e in g.edges() {
        let (cu, cv) = (assignment[e.u], assignment[e.v]);
        for c in [cu, cv] {
            let t = tot.entry(c).or_insert(T::zero());
            *t = *t + e.strength;
        }
        if cu == cv {
            let w = internal.entry(cu).or_insert(T::zero());
            *w = *w + T::lit(2.0) * e.strength;
        }
    }
    tot.iter()
        .map(|(c, &t)| internal.get(c).copied().unwrap_or(T::zero()) / two_m - (t / two_m) * (t / two_m))
        .sum()
}

/// One level of the Louvain hierarchy.
struct Level<T> {
    adj: Vec<Vec<(usize, T)>>,
    self_loop: Vec<T>,
    degree: Vec<T>,
}

impl<T: Scalar> Level<T> {
    fn from_graph(g: &MarketGraph<T>) -> Self {
        let n = g.num_vertices();
        let mut adj = vec![Vec::new(); n];
        for e in g.edges() {
            adj[e.u].push((e.v, e.strength));
            adj[e.v].push((e.u, e.strength));
        }
        for a in adj.iter_mut() {
            a.sort_by_key(|&(j, _)| j);
        }
        let degree = adj.iter().map(|a| a.iter().map(|&(_, w)| w).sum()).collect();
        Level {
            adj,
            self_loop: vec![T::zero(); n],
            degree,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Sequential local moves in vertex order. Returns whether any vertex
    /// changed community.
    fn local_moves(&self, comm: &mut [usize], two_m: T) -> bool {
        let n = self.len();
        let mut tot = vec![T::zero(); n];
        for i in 0..n {
            tot[comm[i]] = tot[comm[i]] + self.degree[i];
        }
        let eps = T::lit(1e-12) * two_m.max(T::one());
        let mut any = false;
        let mut weight_to = vec![T::zero(); n];
        let mut touched: Vec<usize> = Vec::new();
        for _sweep in 0..1000 {
            let mut moved = false;
            for i in 0..n {
                let ci = comm[i];
                let ki = self.degree[i];
                touched.clear();
                for &(j, w) in &self.adj[i] {
                    if j == i {
                        continue;
                    }
                    let c = comm[j];
                    if weight_to[c] == T::zero() && !touched.contains(&c) {
                        touched.push(c);
                    }
                    weight_to[c] = weight_to[c] + w;
                }
                tot[ci] = tot[ci] - ki;
                let mut best = ci;
                let mut best_gain = weight_to[ci] - tot[ci] * ki / two_m;
                for &c in &touched {
                    let gain = weight_to[c] - tot[c] * ki / two_m;
                    if gain > best_gain + eps {
                        best = c;
                        best_gain = gain;
                    }
                }
                tot[best] = tot[best] + ki;
                comm[i] = best;
                for &c in &touched {
                    weight_to[c] = T::zero();
                }
                weight_to[ci] = T::zero();
                if best != ci {
                    moved = true;
                    any = true;
                }
            }
            if !moved {
                break;
            }
        }
        any
    }

    fn aggregate(&self, comm: &[usize], k: usize) -> Self {
        let mut self_loop = vec![T::zero(); k];
        let mut degree = vec![T::zero(); k];
        let mut links: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); k];
        for i in 0..self.len() {
            let ci = comm[i];
            degree[ci] = degree[ci] + self.degree[i];
            self_loop[ci] = self_loop[ci] + self.self_loop[i];
            for &(j, w) in &self.adj[i] {
                let cj = comm[j];
                if ci == cj {
                    if i < j {
                        self_loop[ci] = self_loop[ci] + w;
                    }
                } else {
                    let cur = links[ci].get(&cj).copied().unwrap_or(T::zero());
                    links[ci].insert(cj, cur + w);
                }
            }
        }
        Level {
            adj: links.into_iter().map(|m| m.into_iter().collect()).collect(),
            self_loop,
            degree,
        }
    }
}

fn renumber(comm: &mut [usize]) -> usize {
    let mut map = BTreeMap::new();
    let mut next = 0;
    for c in comm.iter_mut() {
        let id = *map.entry(*c).or_insert_with(|| {
            next += 1;
            next - 1
        });
        *c = id;
    }
    next
}

/// Deterministic Louvain: vertices swept in index order, each moved to the
/// neighbouring community with the largest modularity gain (first one on
/// ties), no randomisation.
pub fn louvain_partition<T: Scalar>(g: &MarketGraph<T>) -> CommunityPartition<T> {
    let n = g.num_vertices();
    let mut assignment: Vec<usize> = (0..n).collect();
    let two_m: T = T::lit(2.0) * g.edges().iter().map(|e| e.strength).sum::<T>();
    if !(two_m > T::zero()) {
        let modularity = modularity(g, &assignment);
        return CommunityPartition {
            assignment,
            modularity,
            pass_count: 0,
        };
    }
    let mut level = Level::from_graph(g);
    let mut pass_count = 0;
    loop {
        let mut comm: Vec<usize> = (0..level.len()).collect();
        let moved = level.local_moves(&mut comm, two_m);
        pass_count += 1;
        if !moved {
            break;
        }
        let k = renumber(&mut comm);
        for a in assignment.iter_mut() {
            *a = comm[*a];
        }
        level = level.aggregate(&comm, k);
        if k == 1 {
            break;
        }
    }
    renumber(&mut assignment);
    let modularity = modularity(g, &assignment);
    CommunityPartition {
        assignment,
        modularity,
        pass_count,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assortativity<T> {
    pub value: T,
    /// Set when the denominator vanishes (e.g. regular graphs); `value` is 0.
    pub degenerate: bool,
}

/// Strength-weighted degree assortativity.
pub fn assortativity<T: Scalar>(g: &MarketGraph<T>) -> Assortativity<T> {
    let mw: T = g.edges().iter().map(|e| e.strength).sum();
    if !(mw > T::zero()) {
        return Assortativity {
            value: T::zero(),
            degenerate: true,
        };
    }
    let two_mw = T::lit(2.0) * mw;
    let mut prod = T::zero();
    let mut sum = T::zero();
    let mut sq = T::zero();
    for e in g.edges() {
        let ki = T::from_usize_lossy(g.degree(e.u));
        let kj = T::from_usize_lossy(g.degree(e.v));
        prod = prod + e.strength * ki * kj;
        sum = sum + e.strength * (ki + kj);
        sq = sq + e.strength * (ki * ki + kj * kj);
    }
    let mean = sum / two_mw;
    let num = prod / mw - mean * mean;
    let den = sq / two_mw - mean * mean;
    let scale = (sq / two_mw).max(T::one());
    if den.abs() <= T::lit(1e3) * T::epsilon() * scale {
        return Assortativity {
            value: T::zero(),
            degenerate: true,
        };
    }
    Assortativity {
        value: (num / den).max(-T::one()).min(T::one()),
        degenerate: false,
    }
}

/// Entropy (nats) of the remaining-degree distribution `q_k`.
pub fn network_entropy<T: Scalar>(g: &MarketGraph<T>) -> T {
    let n = g.num_vertices();
    if n == 0 || g.num_edges() == 0 {
        return T::zero();
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for v in 0..n {
        *counts.entry(g.degree(v)).or_default() += 1;
    }
    let nn = T::from_usize_lossy(n);
    let mean_k = T::lit(2.0) * T::from_usize_lossy(g.num_edges()) / nn;
    let h: T = counts
        .iter()
        .filter(|(&k, _)| k >= 1)
        .map(|(&k, &c)| {
            // q_{k-1} = k p_k / <k>
            let q = T::from_usize_lossy(k) * T::from_usize_lossy(c) / nn / mean_k;
            xlnx(q)
        })
        .sum();
    (-h).max(T::zero())
}

/// Size of the largest clique (Bron–Kerbosch with Tomita pivoting and a
/// size bound).
pub fn clique_number<T: Scalar>(g: &MarketGraph<T>) -> usize {
    let n = g.num_vertices();
    if n == 0 {
        return 0;
    }
    let nbrs = g.neighbour_sets();
    let mut best = 1;
    let mut p = VertexSet::new(n);
    for v in 0..n {
        p.insert(v);
    }
    expand(&nbrs, 0, p, VertexSet::new(n), &mut best);
    best
}

fn expand(nbrs: &[VertexSet], r: usize, mut p: VertexSet, mut x: VertexSet, best: &mut usize) {
    if p.is_empty() {
        if x.is_empty() {
            *best = (*best).max(r);
        }
        return;
    }
    if r + p.len() <= *best {
        return;
    }
    let pivot = p
        .iter()
        .chain(x.iter())
        .max_by_key(|&u| (p.intersect(&nbrs[u]).len(), std::cmp::Reverse(u)))
        .expect("p non-empty");
    let candidates: Vec<usize> = p.difference(&nbrs[pivot]).iter().collect();
    for v in candidates {
        expand(nbrs, r + 1, p.intersect(&nbrs[v]), x.intersect(&nbrs[v]), best);
        p.remove(v);
        x.insert(v);
        if r + p.len() <= *best {
            return;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVector<T> {
    pub values: Vec<T>,
    pub eigenvalue: T,
    /// `||A x - λ x||_inf`
    pub residual: T,
}

/// Principal eigenvector of the strength-weighted adjacency matrix,
/// non-negative with unit Euclidean norm.
pub fn eigenvector_centrality<T: Scalar>(g: &MarketGraph<T>) -> Result<CentralityVector<T>> {
    let n = g.num_vertices();
    let mut a = Array2::<T>::zeros((n, n));
    for e in g.edges() {
        a[[e.u, e.v]] = e.strength;
        a[[e.v, e.u]] = e.strength;
    }
    let eig = sym_eigen(&a)?;
    let lambda = eig.values[0];
    let mut x = eig.vector(0);
    if x.iter().copied().sum::<T>() < T::zero() {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    x.iter_mut().for_each(|v| *v = v.abs());
    let norm = x.iter().map(|&v| v * v).sum::<T>().sqrt();
    x.iter_mut().for_each(|v| *v = *v / norm);
    let mut residual = T::zero();
    for i in 0..n {
        let ax: T = (0..n).map(|j| a[[i, j]] * x[j]).sum();
        residual = residual.max((ax - lambda * x[i]).abs());
    }
    let tol = T::lit(T::EIGEN_TOL.sqrt()) * lambda.abs().max(T::one());
    if residual > tol {
        return Err(Error::NoConvergence("eigenvector centrality", 0));
    }
    Ok(CentralityVector {
        values: x,
        eigenvalue: lambda,
        residual,
    })
}

/// Every graph-level scalar, in export column order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphScalarReport<T> {
    pub num_edges: usize,
    pub edge_density: T,
    pub avg_degree: T,
    pub avg_weighted_degree: T,
    pub avg_path_length: T,
    pub diameter: T,
    pub efficiency: T,
    pub avg_clustering: T,
    pub modularity: T,
    pub assortativity: T,
    pub network_entropy: T,
    pub grc: T,
    pub clique_number: usize,
}

impl<T: Scalar> GraphScalarReport<T> {
    pub const COLUMNS: [&'static str; 13] = [
        "num_edges",
        "edge_density",
        "avg_degree",
        "avg_weighted_degree",
        "avg_path_length",
        "diameter",
        "efficiency",
        "avg_clustering",
        "modularity",
        "assortativity",
        "network_entropy",
        "grc",
        "clique_number",
    ];

    pub fn values(&self) -> [T; 13] {
        [
            T::from_usize_lossy(self.num_edges),
            self.edge_density,
            self.avg_degree,
            self.avg_weighted_degree,
            self.avg_path_length,
            self.diameter,
            self.efficiency,
            self.avg_clustering,
            self.modularity,
            self.assortativity,
            self.network_entropy,
            self.grc,
            T::from_usize_lossy(self.clique_number),
        ]
    }
}

/// Everything `measure_graph` derives from one graph.
#[derive(Debug, Clone)]
pub struct GraphMeasures<T> {
    pub report: GraphScalarReport<T>,
    pub partition: CommunityPartition<T>,
    pub assortativity_degenerate: bool,
    pub distances: Array2<T>,
}

pub fn measure_graph<T: Scalar>(g: &MarketGraph<T>) -> GraphMeasures<T> {
    let deg = degree_stats(g);
    let distances = shortest_paths(g);
    let paths = path_stats_from(&distances);
    let partition = louvain_partition(g);
    let assort = assortativity(g);
    let report = GraphScalarReport {
        num_edges: deg.num_edges,
        edge_density: deg.edge_density,
        avg_degree: deg.avg_degree,
        avg_weighted_degree: deg.avg_weighted_degree,
        avg_path_length: paths.avg_path_length,
        diameter: paths.diameter,
        efficiency: paths.efficiency,
        avg_clustering: clustering_avg(g),
        modularity: partition.modularity,
        assortativity: assort.value,
        network_entropy: network_entropy(g),
        grc: paths.grc,
        clique_number: clique_number(g),
    };
    GraphMeasures {
        report,
        partition,
        assortativity_degenerate: assort.degenerate,
        distances,
    }
}
