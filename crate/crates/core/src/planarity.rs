//! Left-right planarity test (de Fraysseix–Rosenstiehl criterion, in the
//! formulation of Brandes' "The Left-Right Planarity Test").
//!
//! Only the testing phase is implemented; no embedding is produced.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Interval {
    low: Option<usize>,
    high: Option<usize>,
}

impl Interval {
    fn is_empty(&self) -> bool {
        self.low.is_none() && self.high.is_none()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct ConflictPair {
    left: Interval,
    right: Interval,
}

impl ConflictPair {
    fn swap(&mut self) {
        std::mem::swap(&mut self.left, &mut self.right);
    }
}

struct LrState {
    adj: Vec<Vec<(usize, usize)>>,
    height: Vec<Option<usize>>,
    parent_edge: Vec<Option<usize>>,
    oriented: Vec<bool>,
    src: Vec<usize>,
    dst: Vec<usize>,
    lowpt: Vec<usize>,
    lowpt2: Vec<usize>,
    nesting_depth: Vec<usize>,
    out_edges: Vec<Vec<usize>>,
    reference: Vec<Option<usize>>,
    lowpt_edge: Vec<usize>,
    stack_bottom: Vec<usize>,
    stack: Vec<ConflictPair>,
}

impl LrState {
    fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let m = edges.len();
        let mut adj = vec![Vec::new(); n];
        for (k, &(u, v)) in edges.iter().enumerate() {
            adj[u].push((v, k));
            adj[v].push((u, k));
        }
        LrState {
            adj,
            height: vec![None; n],
            parent_edge: vec![None; n],
            oriented: vec![false; m],
            src: vec![0; m],
            dst: vec![0; m],
            lowpt: vec![0; m],
            lowpt2: vec![0; m],
            nesting_depth: vec![0; m],
            out_edges: vec![Vec::new(); n],
            reference: vec![None; m],
            lowpt_edge: vec![0; m],
            stack_bottom: vec![0; m],
            stack: Vec::new(),
        }
    }

    fn conflicting(&self, iv: &Interval, b: usize) -> bool {
        !iv.is_empty() && iv.high.is_some_and(|h| self.lowpt[h] > self.lowpt[b])
    }

    fn lowest(&self, p: &ConflictPair) -> usize {
        match (p.left.low, p.right.low) {
            (None, Some(r)) => self.lowpt[r],
            (Some(l), None) => self.lowpt[l],
            (Some(l), Some(r)) => self.lowpt[l].min(self.lowpt[r]),
            (None, None) => usize::MAX,
        }
    }

    fn orient(&mut self, v: usize) {
        let parent = self.parent_edge[v];
        let hv = self.height[v].expect("visited");
        for idx in 0..self.adj[v].len() {
            let (w, k) = self.adj[v][idx];
            if self.oriented[k] {
                continue;
            }
            self.oriented[k] = true;
            self.src[k] = v;
            self.dst[k] = w;
            self.out_edges[v].push(k);
            self.lowpt[k] = hv;
            self.lowpt2[k] = hv;
            match self.height[w] {
                None => {
                    self.parent_edge[w] = Some(k);
                    self.height[w] = Some(hv + 1);
                    self.orient(w);
                }
                Some(hw) => self.lowpt[k] = hw,
            }
            self.nesting_depth[k] = 2 * self.lowpt[k] + usize::from(self.lowpt2[k] < hv);
            if let Some(e) = parent {
                let (lk, l2k) = (self.lowpt[k], self.lowpt2[k]);
                if lk < self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt[e].min(l2k);
                    self.lowpt[e] = lk;
                } else if lk > self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt2[e].min(lk);
                } else {
                    self.lowpt2[e] = self.lowpt2[e].min(l2k);
                }
            }
        }
    }

    fn test(&mut self, v: usize) -> bool {
        let parent = self.parent_edge[v];
        let hv = self.height[v].expect("visited");
        let out = self.out_edges[v].clone();
        for (pos, &ei) in out.iter().enumerate() {
            let w = self.dst[ei];
            self.stack_bottom[ei] = self.stack.len();
            if self.parent_edge[w] == Some(ei) {
                if !self.test(w) {
                    return false;
                }
            } else {
                self.lowpt_edge[ei] = ei;
                self.stack.push(ConflictPair {
                    left: Interval::default(),
                    right: Interval {
                        low: Some(ei),
                        high: Some(ei),
                    },
                });
            }
            if self.lowpt[ei] < hv {
                let e = parent.expect("return edges never leave the root");
                if pos == 0 {
                    self.lowpt_edge[e] = self.lowpt_edge[ei];
                } else if !self.add_constraints(ei, e) {
                    return false;
                }
            }
        }
        if let Some(e) = parent {
            self.remove_back_edges(e);
        }
        true
    }

    fn add_constraints(&mut self, ei: usize, e: usize) -> bool {
        let mut p = ConflictPair::default();
        while let Some(mut q) = self.stack.pop() {
            if !q.left.is_empty() {
                q.swap();
            }
            if !q.left.is_empty() {
                return false;
            }
            let qlow = q.right.low.expect("non-empty right interval");
            if self.lowpt[qlow] > self.lowpt[e] {
                if p.right.is_empty() {
                    p.right = q.right;
                } else if let Some(pl) = p.right.low {
                    self.reference[pl] = q.right.high;
                }
                p.right.low = q.right.low;
            } else {
                self.reference[qlow] = Some(self.lowpt_edge[e]);
            }
            if self.stack.len() == self.stack_bottom[ei] {
                break;
            }
        }
        while let Some(top) = self.stack.last() {
            if !(self.conflicting(&top.left, ei) || self.conflicting(&top.right, ei)) {
                break;
            }
            let mut q = self.stack.pop().expect("non-empty");
            if self.conflicting(&q.right, ei) {
                q.swap();
            }
            if self.conflicting(&q.right, ei) {
                return false;
            }
            if let Some(pl) = p.right.low {
                self.reference[pl] = q.right.high;
            }
            if q.right.low.is_some() {
                p.right.low = q.right.low;
            }
            if p.left.is_empty() {
                p.left = q.left;
            } else if let Some(pl) = p.left.low {
                self.reference[pl] = q.left.high;
            }
            p.left.low = q.left.low;
        }
        if !(p.left.is_empty() && p.right.is_empty()) {
            self.stack.push(p);
        }
        true
    }

    fn remove_back_edges(&mut self, e: usize) {
        let u = self.src[e];
        let hu = self.height[u].expect("visited");
        while self.stack.last().is_some_and(|top| self.lowest(top) == hu) {
            self.stack.pop();
        }
        if let Some(mut p) = self.stack.pop() {
            while let Some(h) = p.left.high.filter(|&h| self.dst[h] == u) {
                p.left.high = self.reference[h];
            }
            if p.left.high.is_none() {
                if let Some(l) = p.left.low {
                    self.reference[l] = p.right.low;
                    p.left.low = None;
                }
            }
            while let Some(h) = p.right.high.filter(|&h| self.dst[h] == u) {
                p.right.high = self.reference[h];
            }
            if p.right.high.is_none() {
                if let Some(r) = p.right.low {
                    self.reference[r] = p.left.low;
                    p.right.low = None;
                }
            }
            self.stack.push(p);
        }
        if self.lowpt[e] < hu {
            if let Some(top) = self.stack.last() {
                let hl = top.left.high;
                let hr = top.right.high;
                self.reference[e] = match (hl, hr) {
                    (Some(l), None) => Some(l),
                    (Some(l), Some(r)) if self.lowpt[l] > self.lowpt[r] => Some(l),
                    _ => hr,
                };
            }
        }
    }
}

/// Exact planarity test for a simple undirected graph on `0..n`.
pub fn is_planar(n: usize, edges: &[(usize, usize)]) -> bool {
    if n > 2 && edges.len() > 3 * n - 6 {
        return false;
    }
    let mut st = LrState::new(n, edges);
    let mut roots = Vec::new();
    for v in 0..n {
        if st.height[v].is_none() {
            st.height[v] = Some(0);
            roots.push(v);
            st.orient(v);
        }
    }
    for v in 0..n {
        let nd = &st.nesting_depth;
        st.out_edges[v].sort_by_key(|&k| nd[k]);
    }
    roots.into_iter().all(|r| st.test(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                e.push((i, j));
            }
        }
        e
    }

    #[test]
    fn small_complete_graphs() {
        assert!(is_planar(4, &complete(4)));
        assert!(!is_planar(5, &complete(5)));
        let mut k5_minus = complete(5);
        k5_minus.pop();
        assert!(is_planar(5, &k5_minus));
    }

    #[test]
    fn k33_and_petersen() {
        let k33: Vec<_> = (0..3).flat_map(|a| (3..6).map(move |b| (a, b))).collect();
        assert!(!is_planar(6, &k33));
        let mut k33_minus = k33.clone();
        k33_minus.remove(4);
        assert!(is_planar(6, &k33_minus));
        let petersen = [
            (0, 1), (1, 2), (2, 3), (3, 4), (4, 0),
            (0, 5), (1, 6), (2, 7), (3, 8), (4, 9),
            (5, 7), (7, 9), (9, 6), (6, 8), (8, 5),
        ];
        assert!(!is_planar(10, &petersen));
    }

    #[test]
    fn grid_and_forest() {
        let mut grid = Vec::new();
        for r in 0..5 {
            for c in 0..5 {
                let v = r * 5 + c;
                if c < 4 {
                    grid.push((v, v + 1));
                }
                if r < 4 {
                    grid.push((v, v + 5));
                }
            }
        }
        assert!(is_planar(25, &grid));
        assert!(is_planar(6, &[(0, 1), (2, 3)]));
        assert!(is_planar(1, &[]));
    }

    #[test]
    fn subdivided_k5_is_not_planar() {
        // K5 with every edge subdivided once
        let mut edges = Vec::new();
        let mut next = 5;
        for (a, b) in complete(5) {
            edges.push((a, next));
            edges.push((next, b));
            next += 1;
        }
        assert!(!is_planar(next, &edges));
    }
}
