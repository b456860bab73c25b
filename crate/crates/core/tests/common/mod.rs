//! Independent reference implementations used by the integration and
//! acceptance tests. None of these call into the crate's algorithms.

#![allow(dead_code)]

use chrono::NaiveDate;
use fragnet::corrwin::{correlation_frame, distance_frame, WindowSpec};
use fragnet::{CorrelationFrame, DistanceFrame, MarketGraph, ReturnPanel};
use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Correlation and distance frames from random factor returns with a random
/// common loading, so the frame has varied, mostly positive correlations.
pub fn random_frames(rng: &mut ChaCha8Rng, n: usize) -> (CorrelationFrame<f64>, DistanceFrame<f64>) {
    let days = 3 * n + 10;
    let k = 3;
    let loadings: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.random_range(-0.3..1.0)).collect()).collect();
    let mut r = Array2::zeros((n, days));
    for t in 0..days {
        let f: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        for i in 0..n {
            let e: f64 = StandardNormal.sample(rng);
            r[[i, t]] = loadings[i].iter().zip(&f).map(|(a, b)| a * b).sum::<f64>() + e;
        }
    }
    let dates = (0..days)
        .map(|d| NaiveDate::from_ymd_opt(2001, 1, 1).unwrap() + chrono::Days::new(d as u64))
        .collect::<Vec<_>>();
    let labels = (0..n).map(|i| format!("X{i}")).collect();
    let panel = ReturnPanel::new(dates.clone(), labels, r).unwrap();
    let w = WindowSpec {
        start_index: 0,
        length: days,
        end_date: dates[days - 1],
    };
    let c = correlation_frame(&panel, &w);
    let d = distance_frame(&c);
    (c, d)
}

pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        self.0[x] = r;
        r
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

/// Minimum total weight over every spanning tree of the complete graph,
/// by exhaustive enumeration of (n-1)-edge subsets.
pub fn brute_force_mst_weight(d: &Array2<f64>) -> f64 {
    let n = d.nrows();
    let edges = pairs(n);
    let mut best = f64::INFINITY;
    let mut chosen = Vec::new();
    fn rec(edges: &[(usize, usize)], d: &Array2<f64>, n: usize, start: usize, chosen: &mut Vec<usize>, best: &mut f64) {
        if chosen.len() == n - 1 {
            let mut uf = UnionFind::new(n);
            if chosen.iter().all(|&k| uf.union(edges[k].0, edges[k].1)) {
                let w: f64 = chosen.iter().map(|&k| d[[edges[k].0, edges[k].1]]).sum();
                *best = best.min(w);
            }
            return;
        }
        let need = n - 1 - chosen.len();
        for k in start..=(edges.len() - need) {
            chosen.push(k);
            rec(edges, d, n, k + 1, chosen, best);
            chosen.pop();
        }
    }
    rec(&edges, d, n, 0, &mut chosen, &mut best);
    best
}

pub fn reference_is_planar(n: usize, edges: &[(usize, usize)]) -> bool {
    use rustworkx_core::petgraph::graph::UnGraph;
    let mut g = UnGraph::<(), ()>::new_undirected();
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for &(u, v) in edges {
        g.add_edge(nodes[u], nodes[v], ());
    }
    rustworkx_core::planar::is_planar(&g)
}

/// Exact W1 by enumerating every basis (spanning tree of the bipartite
/// support graph) of the transportation polytope and keeping the cheapest
/// feasible basic solution.
pub fn brute_force_w1(mu: &[(usize, f64)], nu: &[(usize, f64)], ground: &Array2<f64>) -> f64 {
    let p = mu.len();
    let q = nu.len();
    let cells: Vec<(usize, usize)> = (0..p).flat_map(|a| (0..q).map(move |b| (a, b))).collect();
    let size = p + q - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::new();

    let evaluate = |chosen: &[usize]| -> Option<f64> {
        let mut uf = UnionFind::new(p + q);
        for &k in chosen {
            if !uf.union(cells[k].0, p + cells[k].1) {
                return None;
            }
        }
        // leaf peeling
        let mut residual: Vec<f64> = mu.iter().map(|x| x.1).chain(nu.iter().map(|x| x.1)).collect();
        let mut alive: Vec<bool> = vec![true; chosen.len()];
        let mut cost = 0.0;
        for _ in 0..chosen.len() {
            let mut deg = vec![0usize; p + q];
            for (k, &c) in chosen.iter().enumerate() {
                if alive[k] {
                    deg[cells[c].0] += 1;
                    deg[p + cells[c].1] += 1;
                }
            }
            let (k, leaf) = chosen
                .iter()
                .enumerate()
                .filter(|(k, _)| alive[*k])
                .find_map(|(k, &c)| {
                    let (a, b) = (cells[c].0, p + cells[c].1);
                    if deg[a] == 1 {
                        Some((k, a))
                    } else if deg[b] == 1 {
                        Some((k, b))
                    } else {
                        None
                    }
                })?;
            let (a, b) = (cells[chosen[k]].0, p + cells[chosen[k]].1);
            let other = if leaf == a { b } else { a };
            let f = residual[leaf];
            if f < -1e-12 {
                return None;
            }
            residual[leaf] = 0.0;
            residual[other] -= f;
            cost += f * ground[[mu[cells[chosen[k]].0].0, nu[cells[chosen[k]].1].0]];
            alive[k] = false;
        }
        residual.iter().all(|r| r.abs() < 1e-9).then_some(cost)
    };

    fn rec(
        cells: usize,
        size: usize,
        start: usize,
        chosen: &mut Vec<usize>,
        eval: &dyn Fn(&[usize]) -> Option<f64>,
        best: &mut f64,
    ) {
        if chosen.len() == size {
            if let Some(c) = eval(chosen) {
                *best = best.min(c);
            }
            return;
        }
        let need = size - chosen.len();
        for k in start..=(cells - need) {
            chosen.push(k);
            rec(cells, size, k + 1, chosen, eval, best);
            chosen.pop();
        }
    }
    rec(cells.len(), size, 0, &mut chosen, &evaluate, &mut best);
    best
}

/// Dense adjacency lists from a graph.
pub fn adjacency(g: &MarketGraph<f64>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); g.num_vertices()];
    for e in g.edges() {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    adj
}

/// `sum sqrt(len - 1)` over simple i-j paths of 2..=max edges, by plain DFS.
pub fn dfs_haantjes(adj: &[Vec<usize>], i: usize, j: usize, max_len: usize) -> f64 {
    fn go(adj: &[Vec<usize>], x: usize, target: usize, len: usize, max_len: usize, seen: &mut Vec<bool>, acc: &mut f64) {
        for &y in &adj[x] {
            if y == target {
                if len + 1 >= 2 {
                    *acc += (len as f64).sqrt();
                }
                continue;
            }
            if seen[y] || len + 1 >= max_len {
                continue;
            }
            seen[y] = true;
            go(adj, y, target, len + 1, max_len, seen, acc);
            seen[y] = false;
        }
    }
    let mut seen = vec![false; adj.len()];
    seen[i] = true;
    let mut acc = 0.0;
    go(adj, i, j, 0, max_len, &mut seen, &mut acc);
    acc
}

pub fn triangle_count(adj: &[Vec<usize>], i: usize, j: usize) -> usize {
    (0..adj.len()).filter(|&k| k != i && k != j && adj[i].contains(&k) && adj[j].contains(&k)).count()
}

/// Minimum of `w' S w` over the simplex by enumerating supports and solving
/// each equality-constrained KKT system.
pub fn active_set_min_risk(s: &Array2<f64>) -> f64 {
    let n = s.nrows();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let k = idx.len();
        let mut m = DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut rhs = DVector::<f64>::zeros(k + 1);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(a, b)] = 2.0 * s[[i, j]];
            }
            m[(a, k)] = 1.0;
            m[(k, a)] = 1.0;
        }
        rhs[k] = 1.0;
        let Ok(sol) = m.svd(true, true).solve(&rhs, 1e-13) else {
            continue;
        };
        let w: Vec<f64> = (0..k).map(|a| sol[a]).collect();
        if w.iter().any(|&x| x < -1e-12) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            continue;
        }
        let mut risk = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                risk += w[a] * s[[i, j]] * w[b];
            }
        }
        best = best.min(risk);
    }
    best
}

/// Unweighted BFS distances (usize::MAX when unreachable).
pub fn bfs_distances(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    (0..n)
        .map(|s| {
            let mut d = vec![usize::MAX; n];
            d[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if d[y] == usize::MAX {
                        d[y] = d[x] + 1;
                        queue.push_back(y);
                    }
                }
            }
            d
        })
        .collect()
}

pub fn brute_force_clique(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    let mut best = 0;
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        if members.len() <= best {
            continue;
        }
        let ok = members
            .iter()
            .enumerate()
            .all(|(a, &x)| members[a + 1..].iter().all(|y| adj[x].contains(y)));
        if ok {
            best = members.len();
        }
    }
    best
}

/// Newman modularity from the dense strength matrix.
pub fn dense_modularity(g: &MarketGraph<f64>, assignment: &[usize]) -> f64 {
    let n = g.num_vertices();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for e in g.edges() {
        a[(e.u, e.v)] = e.strength;
        a[(e.v, e.u)] = e.strength;
    }
    let k: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if assignment[i] == assignment[j] {
                q += a[(i, j)] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Max abs deviation after optimal orthogonal alignment of centred
/// configurations (Procrustes without scaling).
pub fn procrustes_error(x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let (n, k) = x.dim();
    let centre = |m: &Array2<f64>| {
        let mut c = DMatrix::<f64>::from_fn(n, k, |i, j| m[[i, j]]);
        for j in 0..k {
            let mu = c.column(j).mean();
            c.column_mut(j).add_scalar_mut(-mu);
        }
        c
    };
    let (a, b) = (centre(x), centre(y));
    let svd = (a.transpose() * &b).svd(true, true);
    let r = svd.u.unwrap() * svd.v_t.unwrap();
    (a * r - b).amax()
}

/// Random connected graph: random spanning tree plus extra edges.
pub fn random_connected_pairs(rng: &mut ChaCha8Rng, n: usize, p_extra: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for v in 1..n {
        out.push((rng.random_range(0..v), v));
    }
    for (u, v) in pairs(n) {
        if !out.contains(&(u, v)) && rng.random_bool(p_extra) {
            out.push((u, v));
        }
    }
    out
}

/// Every connected simple graph on `n` labelled vertices (edge bitmask
/// enumeration, so only sensible for n <= 5).
pub fn all_connected_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let all = pairs(n);
    let mut out = Vec::new();
    for mask in 0u32..(1 << all.len()) {
        let chosen: Vec<(usize, usize)> = all
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, &e)| e)
            .collect();
        let mut uf = UnionFind::new(n);
        let mut comps = n;
        for &(u, v) in &chosen {
            if uf.union(u, v) {
                comps -= 1;
            }
        }
        if comps == 1 {
            out.push(chosen);
        }
    }
    out
}

/// Random symmetric PSD matrix `A A'` with `rank` columns.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> Array2<f64> {
    let a = Array2::from_shape_fn((n, rank), |_| StandardNormal.sample(rng));
    a.dot(&a.t())
}
