//! Edge-based discrete Ricci curvatures: Ollivier (optimal transport),
//! Forman (weighted combinatorial), Menger (triangles) and Haantjes (short
//! detours), with vertex aggregates and frame averages.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::MarketGraph;
use crate::scalar::{mean, Scalar};

/// Edge distance floor applied where a curvature divides by a distance.
pub const DISTANCE_FLOOR: f64 = 1e-9;
pub const DEFAULT_HR_MAX_PATH: usize = 5;

/// Sparse probability measure on vertex ids.
pub type Measure<T> = Vec<(usize, T)>;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<T> {
    pub cost: T,
    /// `(from vertex, to vertex, mass)` with positive mass.
    pub flows: Vec<(usize, usize, T)>,
}

fn compact<T: Scalar>(m: &[(usize, T)]) -> Result<Vec<(usize, T)>> {
    let mut v: Vec<(usize, T)> = Vec::with_capacity(m.len());
    let mut sorted = m.to_vec();
    sorted.sort_by_key(|&(x, _)| x);
    for (x, w) in sorted {
        if !(w >= T::zero()) {
            return Err(Error::param("negative or NaN mass in transport input"));
        }
        match v.last_mut() {
            Some((y, acc)) if *y == x => *acc = *acc + w,
            _ => v.push((x, w)),
        }
    }
    v.retain(|&(_, w)| w > T::zero());
    Ok(v)
}

/// Exact transport between two discrete measures by successive shortest
/// augmenting paths with Dijkstra potentials.
pub fn transport_plan<T: Scalar>(mu: &[(usize, T)], nu: &[(usize, T)], ground: &Array2<T>) -> Result<TransportPlan<T>> {
    let mu = compact(mu)?;
    let nu = compact(nu)?;
    let total_mu: T = mu.iter().map(|&(_, w)| w).sum();
    let total_nu: T = nu.iter().map(|&(_, w)| w).sum();
    let scale = total_mu.max(total_nu).max(T::min_positive_value());
    if (total_mu - total_nu).abs() > T::lit(1e-12).max(T::lit(T::MASS_TOL)) * scale {
        return Err(Error::UnbalancedMass(total_mu.to_f64_lossy(), total_nu.to_f64_lossy()));
    }
    if mu.is_empty() || nu.is_empty() {
        return Ok(TransportPlan {
            cost: T::zero(),
            flows: Vec::new(),
        });
    }
    let p = mu.len();
    let q = nu.len();
    let cost = |a: usize, b: usize| ground[[mu[a].0, nu[b].0]];
    for a in 0..p {
        for b in 0..q {
            if !(cost(a, b) >= T::zero()) || cost(a, b) == T::infinity() {
                return Err(Error::Infeasible);
            }
        }
    }

    let tol = T::lit(T::MASS_TOL) * scale;
    let mut supply: Vec<T> = mu.iter().map(|&(_, w)| w).collect();
    let mut demand: Vec<T> = nu.iter().map(|&(_, w)| w).collect();
    let mut flow = Array2::<T>::zeros((p, q));

    // nodes: 0 = source, 1..=p sources, p+1..=p+q sinks, p+q+1 = sink
    let nodes = p + q + 2;
    let s = 0;
    let t = p + q + 1;
    let src = |a: usize| 1 + a;
    let snk = |b: usize| 1 + p + b;
    let mut pot = vec![T::zero(); nodes];
    let mut remaining: T = supply.iter().copied().sum();
    let max_rounds = 4 * (p + q) * (p + q) + 16;
    let mut rounds = 0;

    while remaining > tol {
        rounds += 1;
        if rounds > max_rounds {
            return Err(Error::NoConvergence("transport solver", max_rounds));
        }
        let mut dist = vec![T::infinity(); nodes];
        let mut prev = vec![usize::MAX; nodes];
        let mut done = vec![false; nodes];
        dist[s] = T::zero();
        loop {
            let mut u = usize::MAX;
            for v in 0..nodes {
                if !done[v] && dist[v] < T::infinity() && (u == usize::MAX || dist[v] < dist[u]) {
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            let relax = |v: usize, c: T, dist: &mut Vec<T>, prev: &mut Vec<usize>| {
                let rc = (c + pot[u] - pot[v]).max(T::zero());
                let nd = dist[u] + rc;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                }
            };
            if u == s {
                for a in 0..p {
                    if supply[a] > T::zero() {
                        relax(src(a), T::zero(), &mut dist, &mut prev);
                    }
                }
            } else if u <= p {
                let a = u - 1;
                for b in 0..q {
                    relax(snk(b), cost(a, b), &mut dist, &mut prev);
                }
            } else if u < t {
                let b = u - 1 - p;
                for a in 0..p {
                    if flow[[a, b]] > T::zero() {
                        relax(src(a), -cost(a, b), &mut dist, &mut prev);
                    }
                }
                if demand[b] > T::zero() {
                    relax(t, T::zero(), &mut dist, &mut prev);
                }
            }
        }
        if dist[t] == T::infinity() {
            return Err(Error::Infeasible);
        }
        for v in 0..nodes {
            pot[v] = pot[v] + dist[v].min(dist[t]);
        }

        // bottleneck along the path
        let mut push = T::infinity();
        let mut v = t;
        while v != s {
            let u = prev[v];
            let cap = if u == s {
                supply[v - 1]
            } else if v == t {
                demand[u - 1 - p]
            } else if u <= p {
                T::infinity()
            } else {
                flow[[v - 1, u - 1 - p]]
            };
            push = push.min(cap);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = prev[v];
            if u == s {
                supply[v - 1] = supply[v - 1] - push;
                if supply[v - 1] <= tol {
                    supply[v - 1] = T::zero();
                }
            } else if v == t {
                let b = u - 1 - p;
                demand[b] = demand[b] - push;
                if demand[b] <= tol {
                    demand[b] = T::zero();
                }
            } else if u <= p {
                flow[[u - 1, v - 1 - p]] = flow[[u - 1, v - 1 - p]] + push;
            } else {
                let (a, b) = (v - 1, u - 1 - p);
                flow[[a, b]] = flow[[a, b]] - push;
                if flow[[a, b]] <= tol {
                    flow[[a, b]] = T::zero();
                }
            }
            v = u;
        }
        remaining = supply.iter().copied().sum();
        if demand.iter().all(|&d| d == T::zero()) {
            break;
        }
    }

    let mut flows = Vec::new();
    let mut total = T::zero();
    for a in 0..p {
        for b in 0..q {
            let f = flow[[a, b]];
            if f > T::zero() {
                flows.push((mu[a].0, nu[b].0, f));
                total = total + f * cost(a, b);
            }
        }
    }
    // marginal feasibility
    let resid_tol = T::lit(1e-9).max(T::lit(T::MASS_TOL) * T::lit(1e3)) * scale;
    for (a, &(x, w)) in mu.iter().enumerate() {
        let out: T = (0..q).map(|b| flow[[a, b]]).sum();
        if (out - w).abs() > resid_tol {
            log::debug!("transport marginal at source {x} off by {}", (out - w).to_f64_lossy());
            return Err(Error::Infeasible);
        }
    }
    for (b, &(_, w)) in nu.iter().enumerate() {
        let inn: T = (0..p).map(|a| flow[[a, b]]).sum();
        if (inn - w).abs() > resid_tol {
            return Err(Error::Infeasible);
        }
    }
    Ok(TransportPlan { cost: total, flows })
}

/// Wasserstein-1 distance between `mu` and `nu` under the ground metric.
pub fn wasserstein_w1<T: Scalar>(mu: &[(usize, T)], nu: &[(usize, T)], ground: &Array2<T>) -> Result<T> {
    transport_plan(mu, nu, ground).map(|p| p.cost)
}

/// Uniform measure on the neighbours of `x` (no mass on `x`).
pub fn neighbour_measure<T: Scalar>(g: &MarketGraph<T>, x: usize) -> Measure<T> {
    let k = g.degree(x);
    let w = T::one() / T::from_usize_lossy(k.max(1));
    g.neighbours(x).map(|y| (y, w)).collect()
}

/// `1 - W1(m_i, m_j) / d(i, j)` per edge; `shortest` is the all-pairs
/// shortest-path matrix over edge distances.
pub fn ollivier_ricci_edges<T: Scalar>(g: &MarketGraph<T>, shortest: &Array2<T>) -> Result<Vec<T>> {
    let measures: Vec<Measure<T>> = (0..g.num_vertices()).map(|x| neighbour_measure(g, x)).collect();
    let floor = T::lit(DISTANCE_FLOOR);
    g.edges()
        .iter()
        .map(|e| {
            let w1 = wasserstein_w1(&measures[e.u], &measures[e.v], shortest)?;
            let d = shortest[[e.u, e.v]].max(floor);
            Ok(T::one() - w1 / d)
        })
        .collect()
}

/// Forman curvature with unit vertex weights and edge weight = distance
/// (floored at [`DISTANCE_FLOOR`]).
pub fn forman_ricci_edges<T: Scalar>(g: &MarketGraph<T>) -> Vec<T> {
    let floor = T::lit(DISTANCE_FLOOR);
    let w = |k: usize| g.edges()[k].distance.max(floor);
    g.edges()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let we = w(k);
            let side = |x: usize| -> T {
                g.incident(x)
                    .iter()
                    .filter(|&&(_, other)| other != k)
                    .map(|&(_, other)| (we / w(other)).sqrt())
                    .sum()
            };
            T::lit(2.0) - side(e.u) - side(e.v)
        })
        .collect()
}

/// `(sqrt(3)/2) * #triangles` per edge.
pub fn menger_ricci_edges<T: Scalar>(g: &MarketGraph<T>) -> Vec<T> {
    let nbrs = g.neighbour_sets();
    let unit = T::lit(3.0).sqrt() / T::lit(2.0);
    g.edges()
        .iter()
        .map(|e| unit * T::from_usize_lossy(nbrs[e.u].intersect(&nbrs[e.v]).len()))
        .collect()
}

/// Number of simple `u`–`v` paths of each length `2..=max_len` (index = length).
pub(crate) fn detour_counts(nbrs: &[crate::graph::VertexSet], u: usize, v: usize, max_len: usize) -> Vec<u64> {
    let n = nbrs.len();
    let mut counts = vec![0u64; max_len + 1];
    let mut on_path = crate::graph::VertexSet::new(n);
    on_path.insert(u);
    on_path.insert(v);
    walk(nbrs, u, v, 0, max_len, &mut on_path, &mut counts);
    counts
}

fn walk(
    nbrs: &[crate::graph::VertexSet],
    x: usize,
    target: usize,
    len: usize,
    max_len: usize,
    on_path: &mut crate::graph::VertexSet,
    counts: &mut [u64],
) {
    if len >= 1 && nbrs[x].contains(target) {
        counts[len + 1] += 1;
    }
    if len + 2 > max_len {
        return;
    }
    if len + 2 == max_len {
        // last two hops: x -> y -> target with y fresh
        counts[max_len] += nbrs[x].count_and_not(&nbrs[target], on_path) as u64;
        return;
    }
    let next: Vec<usize> = nbrs[x].difference(on_path).iter().collect();
    for y in next {
        on_path.insert(y);
        walk(nbrs, y, target, len + 1, max_len, on_path, counts);
        on_path.remove(y);
    }
}

/// Sum of `sqrt(len - 1)` over simple detours of `2..=max_path_len` edges
/// between the endpoints of each edge; unweighted.
pub fn haantjes_ricci_edges<T: Scalar>(g: &MarketGraph<T>, max_path_len: usize) -> Result<Vec<T>> {
    if max_path_len < 2 {
        return Err(Error::param("Haantjes path budget must be at least 2"));
    }
    let nbrs = g.neighbour_sets();
    Ok(g.edges()
        .iter()
        .map(|e| {
            detour_counts(&nbrs, e.u, e.v, max_path_len)
                .iter()
                .enumerate()
                .skip(2)
                .map(|(len, &c)| T::from_usize_lossy(len - 1).sqrt() * T::from_u64(c).expect("count"))
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCurvature<T> {
    pub or: T,
    pub fr: T,
    pub mr: T,
    pub hr: T,
}

/// Curvatures aligned with `g.edges()`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCurvatures<T> {
    pub edges: Vec<EdgeCurvature<T>>,
    /// Edges whose distance was floored (perfectly correlated pairs).
    pub floored_edges: Vec<usize>,
}

pub fn edge_curvatures<T: Scalar>(g: &MarketGraph<T>, shortest: &Array2<T>, hr_max_path: usize) -> Result<EdgeCurvatures<T>> {
    let or = ollivier_ricci_edges(g, shortest)?;
    let fr = forman_ricci_edges(g);
    let mr = menger_ricci_edges(g);
    let hr = haantjes_ricci_edges(g, hr_max_path)?;
    let floor = T::lit(DISTANCE_FLOOR);
    let floored_edges = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.distance < floor)
        .map(|(k, _)| k)
        .collect();
    let edges = (0..g.num_edges())
        .map(|k| EdgeCurvature {
            or: or[k],
            fr: fr[k],
            mr: mr[k],
            hr: hr[k],
        })
        .collect();
    Ok(EdgeCurvatures { edges, floored_edges })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeCurvatures<T> {
    pub or_node: Vec<T>,
    pub fr_node: Vec<T>,
}

/// Vertex curvature as the sum over incident edges.
pub fn node_curvature_aggregate<T: Scalar>(g: &MarketGraph<T>, curv: &EdgeCurvatures<T>) -> NodeCurvatures<T> {
    let n = g.num_vertices();
    let mut or_node = vec![T::zero(); n];
    let mut fr_node = vec![T::zero(); n];
    for (e, c) in g.edges().iter().zip(&curv.edges) {
        for x in [e.u, e.v] {
            or_node[x] = or_node[x] + c.or;
            fr_node[x] = fr_node[x] + c.fr;
        }
    }
    NodeCurvatures { or_node, fr_node }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureAverages<T> {
    pub avg_or: T,
    pub avg_fr: T,
    pub avg_mr: T,
    pub avg_hr: T,
}

pub fn curvature_frame_averages<T: Scalar>(curv: &EdgeCurvatures<T>) -> Result<CurvatureAverages<T>> {
    let e = &curv.edges;
    if e.is_empty() {
        return Err(Error::param("curvature averages need at least one edge"));
    }
    Ok(CurvatureAverages {
        avg_or: mean(e.iter().map(|c| c.or)).expect("non-empty"),
        avg_fr: mean(e.iter().map(|c| c.fr)).expect("non-empty"),
        avg_mr: mean(e.iter().map(|c| c.mr)).expect("non-empty"),
        avg_hr: mean(e.iter().map(|c| c.hr)).expect("non-empty"),
    })
}
