//! Filtered networks built from one correlation frame: the minimum spanning
//! tree, the MST superposed with a correlation threshold, and the planar
//! maximally filtered graph.
//!
//! Ties are broken by lexicographic vertex pair after the primary key, so
//! every construction is reproducible bit for bit.

use std::cmp::Ordering;

use crate::corrwin::{ultrametric, CorrelationFrame, DistanceFrame};
use crate::error::{Error, Result};
use crate::graph::{Edge, FrameRef, GraphKind, MarketGraph};
use crate::planarity::is_planar;
use crate::scalar::Scalar;

pub const DEFAULT_THRESHOLD: f64 = 0.65;

fn edge_from<T: Scalar>(corr: &CorrelationFrame<T>, dist: &DistanceFrame<T>, u: usize, v: usize) -> Edge<T> {
    let (u, v) = if u < v { (u, v) } else { (v, u) };
    Edge {
        u,
        v,
        strength: corr.get(u, v).abs(),
        distance: dist.get(u, v),
    }
}

fn check_frames<T: Scalar>(corr: &CorrelationFrame<T>, dist: &DistanceFrame<T>, min_n: usize) -> Result<()> {
    let n = corr.size();
    if dist.matrix.nrows() != n {
        return Err(Error::param("correlation and distance frames differ in size"));
    }
    if n < min_n {
        return Err(Error::param(format!("need at least {min_n} vertices, got {n}")));
    }
    Ok(())
}

/// MST edge order: distance ascending, then correlation descending, then
/// `(u, v)`. The secondary key only matters when two different
/// correlations round to the same distance; it keeps MST order consistent
/// with the PMFG order.
fn mst_key_cmp<T: Scalar>(a: (T, T, usize, usize), b: (T, T, usize, usize)) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal))
        .then_with(|| (a.2, a.3).cmp(&(b.2, b.3)))
}

/// Dense Prim's algorithm over the complete distance graph.
pub fn build_mst<T: Scalar>(dist: &DistanceFrame<T>, corr: &CorrelationFrame<T>) -> Result<MarketGraph<T>> {
    check_frames(corr, dist, 2)?;
    let n = corr.size();
    let mut in_tree = vec![false; n];
    let mut best: Vec<Option<(T, T, usize, usize)>> = vec![None; n];
    in_tree[0] = true;
    for v in 1..n {
        best[v] = Some((dist.get(0, v), corr.get(0, v), 0, v));
    }
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| mst_key_cmp(best[a].expect("candidate"), best[b].expect("candidate")))
            .expect("remaining vertex");
        let (_, _, u, v) = best[next].expect("candidate");
        edges.push(edge_from(corr, dist, u, v));
        in_tree[next] = true;
        for w in 0..n {
            if in_tree[w] {
                continue;
            }
            let (a, b) = if next < w { (next, w) } else { (w, next) };
            let cand = (dist.get(next, w), corr.get(next, w), a, b);
            if best[w].is_none_or(|cur| mst_key_cmp(cand, cur) == Ordering::Less) {
                best[w] = Some(cand);
            }
        }
    }
    let frame = FrameRef {
        end_date: corr.end_date,
        tau: corr.tau,
        theta: None,
    };
    Ok(MarketGraph::new(corr.labels.clone(), GraphKind::Mst, frame, edges))
}

/// MST plus every pair with signed correlation `C_ij >= theta`.
/// Non-MST edges take their distance from the ultrametric map of `C_ij`.
pub fn build_threshold_network<T: Scalar>(mst: &MarketGraph<T>, corr: &CorrelationFrame<T>, theta: f64) -> Result<MarketGraph<T>> {
    if !(theta > -1.0 && theta <= 1.0) {
        return Err(Error::param(format!("threshold {theta} outside (-1, 1]")));
    }
    let n = corr.size();
    if mst.num_vertices() != n {
        return Err(Error::param("MST and frame differ in size"));
    }
    let th = T::lit(theta);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if let Some(k) = mst.edge_index(u, v) {
                edges.push(mst.edges()[k]);
            } else if corr.get(u, v) >= th {
                let c = corr.get(u, v);
                edges.push(Edge {
                    u,
                    v,
                    strength: c.abs(),
                    distance: ultrametric(c),
                });
            }
        }
    }
    let mut g = MarketGraph::new(corr.labels.clone(), GraphKind::Threshold, mst.frame.clone(), edges);
    g.frame.theta = Some(theta);
    Ok(g)
}

/// Greedy planar filtering: pairs in decreasing correlation order, each kept
/// iff the graph stays planar, until the graph is maximal planar (`3N - 6`
/// edges).
pub fn build_pmfg<T: Scalar>(corr: &CorrelationFrame<T>, dist: &DistanceFrame<T>) -> Result<MarketGraph<T>> {
    check_frames(corr, dist, 3)?;
    let n = corr.size();
    let mut order: Vec<(usize, usize)> = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
    order.sort_by(|&(a, b), &(c, d)| {
        corr.get(c, d)
            .partial_cmp(&corr.get(a, b))
            .unwrap_or(Ordering::Equal)
            .then_with(|| (a, b).cmp(&(c, d)))
    });
    let target = 3 * n - 6;
    let mut kept: Vec<(usize, usize)> = Vec::with_capacity(target);
    for (u, v) in order {
        if kept.len() == target {
            break;
        }
        kept.push((u, v));
        if !is_planar(n, &kept) {
            kept.pop();
        }
    }
    let edges = kept.into_iter().map(|(u, v)| edge_from(corr, dist, u, v)).collect();
    let frame = FrameRef {
        end_date: corr.end_date,
        tau: corr.tau,
        theta: None,
    };
    Ok(MarketGraph::new(corr.labels.clone(), GraphKind::Pmfg, frame, edges))
}
