//! Primal network simplex for the complete bipartite transportation problem.
//!
//! Sources `0..m` supply integer amounts, sinks `m..m+n` demand integer
//! amounts, every source–sink arc is uncapacitated. The spanning tree is kept
//! in parent/thread form with an artificial root, and entering arcs are picked
//! by block search over the arc list. Leaving arcs follow the strongly feasible
//! tree rule (last blocking arc on the cycle), which rules out cycling.
//!
//! Only tree arcs carry flow, so flow is stored per node on its parent arc.

use crate::error::{Error, Result};

/// Cost of arc `e = i * n + j`.
pub(crate) trait ArcCost {
    fn cost(&self, e: usize, i: usize, j: usize) -> f64;
}

pub(crate) struct DenseCost<'a> {
    pub values: &'a [f64],
}

impl ArcCost for DenseCost<'_> {
    #[inline(always)]
    fn cost(&self, e: usize, _i: usize, _j: usize) -> f64 {
        self.values[e]
    }
}

impl<F: Fn(usize, usize) -> f64> ArcCost for F {
    #[inline(always)]
    fn cost(&self, _e: usize, i: usize, j: usize) -> f64 {
        self(i, j)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    /// `(source, sink, flow)` for every positive tree flow.
    pub flows: Vec<(usize, usize, i64)>,
    /// Σ flow · cost (unnormalized).
    pub total_cost: f64,
    /// Node potentials `pi`; reduced cost of `(i, j)` is `c_ij + pi_i - pi_{m+j}`.
    pub source_potentials: Vec<f64>,
    pub sink_potentials: Vec<f64>,
    pub pivots: usize,
}

const UP: i8 = 1;
const DOWN: i8 = -1;
const LOWER: u8 = 1;
const TREE: u8 = 0;

struct Simplex<'c, C: ArcCost> {
    m: usize,
    n: usize,
    arc_num: usize,
    root: usize,
    cost: &'c C,
    art_cost: f64,
    art_up: Vec<bool>,
    eps: f64,

    state: Vec<u8>,
    pi: Vec<f64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    pred_flow: Vec<i64>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    dirty_revs: Vec<usize>,

    block_size: usize,
    next_arc: usize,
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: i64,
}

const NONE: usize = usize::MAX;

impl<'c, C: ArcCost> Simplex<'c, C> {
    fn new(supply: &[i64], demand: &[i64], cost: &'c C, max_cost: f64) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let node_num = m + n;
        let arc_num = m * n;
        let root = node_num;
        let art_cost = (max_cost + 1.0) * node_num as f64;
        let eps = 64.0 * f64::EPSILON * (art_cost + max_cost);

        let mut s = Simplex {
            m,
            n,
            arc_num,
            root,
            cost,
            art_cost,
            art_up: vec![true; node_num],
            eps,
            state: vec![LOWER; arc_num],
            pi: vec![0.0; node_num + 1],
            parent: vec![root; node_num + 1],
            pred: vec![NONE; node_num + 1],
            pred_dir: vec![UP; node_num + 1],
            pred_flow: vec![0; node_num + 1],
            thread: vec![0; node_num + 1],
            rev_thread: vec![0; node_num + 1],
            succ_num: vec![1; node_num + 1],
            last_succ: vec![0; node_num + 1],
            dirty_revs: Vec::new(),
            block_size: ((arc_num as f64).sqrt().ceil() as usize).max(10),
            next_arc: 0,
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0,
        };

        s.parent[root] = NONE;
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = node_num + 1;
        s.last_succ[root] = root - 1;
        for u in 0..node_num {
            let b = if u < m { supply[u] } else { -demand[u - m] };
            s.parent[u] = root;
            s.pred[u] = arc_num + u;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            if b >= 0 {
                s.pred_dir[u] = UP;
                s.pi[u] = 0.0;
                s.pred_flow[u] = b;
                s.art_up[u] = true;
            } else {
                s.pred_dir[u] = DOWN;
                s.pi[u] = art_cost;
                s.pred_flow[u] = -b;
                s.art_up[u] = false;
            }
        }
        s
    }

    #[inline]
    fn source(&self, e: usize) -> usize {
        if e < self.arc_num {
            e / self.n
        } else if self.art_up[e - self.arc_num] {
            e - self.arc_num
        } else {
            self.root
        }
    }

    #[inline]
    fn target(&self, e: usize) -> usize {
        if e < self.arc_num {
            self.m + e % self.n
        } else if self.art_up[e - self.arc_num] {
            self.root
        } else {
            e - self.arc_num
        }
    }

    #[inline]
    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.arc_num {
            self.cost.cost(e, e / self.n, e % self.n)
        } else if self.art_up[e - self.arc_num] {
            0.0
        } else {
            self.art_cost
        }
    }

    fn find_entering_arc(&mut self) -> bool {
        let (m, n) = (self.m, self.n);
        let (src_pi, sink_pi) = self.pi[..m + n].split_at(m);
        let mut e = self.next_arc;
        let mut scanned = 0;
        let mut block_left = self.block_size;
        let mut best = -self.eps;
        let mut found = NONE;
        while scanned < self.arc_num {
            let (i, j0) = (e / n, e % n);
            let len = (n - j0).min(block_left).min(self.arc_num - scanned);
            let pi_i = src_pi[i];
            let base = e - j0;
            for j in j0..j0 + len {
                let c = self.cost.cost(base + j, i, j) + pi_i - sink_pi[j];
                if c < best && self.state[base + j] == LOWER {
                    best = c;
                    found = base + j;
                }
            }
            scanned += len;
            block_left -= len;
            e += len;
            if e == self.arc_num {
                e = 0;
            }
            if block_left == 0 {
                if found != NONE {
                    break;
                }
                block_left = self.block_size;
            }
        }
        if found == NONE {
            return false;
        }
        self.in_arc = found;
        self.next_arc = found;
        true
    }

    fn find_join_node(&mut self) {
        let mut u = self.source(self.in_arc);
        let mut v = self.target(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    /// Returns false when the cycle is unbounded, which cannot happen for a
    /// balanced problem.
    fn find_leaving_arc(&mut self) -> bool {
        let first = self.source(self.in_arc);
        let second = self.target(self.in_arc);
        self.delta = i64::MAX;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == UP && self.pred_flow[u] < self.delta {
                self.delta = self.pred_flow[u];
                self.u_out = u;
                result = 1;
            }
            u = self.parent[u];
        }
        u = second;
        while u != self.join {
            if self.pred_dir[u] == DOWN && self.pred_flow[u] <= self.delta {
                self.delta = self.pred_flow[u];
                self.u_out = u;
                result = 2;
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        let val = self.delta;
        if val > 0 {
            let mut u = self.source(self.in_arc);
            while u != self.join {
                self.pred_flow[u] -= i64::from(self.pred_dir[u]) * val;
                u = self.parent[u];
            }
            u = self.target(self.in_arc);
            while u != self.join {
                self.pred_flow[u] += i64::from(self.pred_dir[u]) * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = TREE;
        let out = self.pred[self.u_out];
        if out < self.arc_num {
            self.state[out] = LOWER;
        }
    }

    fn update_tree_structure(&mut self) {
        let in_arc = self.in_arc;
        let in_flow = self.delta;
        let (u_in, v_in, u_out, join) = (self.u_in, self.v_in, self.u_out, self.join);
        let in_dir = if u_in == self.source(in_arc) { UP } else { DOWN };

        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = in_dir;
            self.pred_flow[u_in] = in_flow;

            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };

            // Re-hang the stem u_in .. u_out, splicing each stem node's
            // remaining subtree into the thread after its new parent.
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);

                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;

                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;

                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;

            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }

            for k in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[k];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }

            // Shift pred arcs down the reversed stem.
            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                self.pred_flow[u] = self.pred_flow[p];
                tmp_sc += self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = in_dir;
            self.pred_flow[u_in] = in_flow;
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }

        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }

        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let u_in = self.u_in;
        let sigma = self.pi[self.v_in]
            - self.pi[u_in]
            - f64::from(self.pred_dir[u_in]) * self.arc_cost(self.in_arc);
        let end = self.thread[self.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    /// Rebuild all potentials from the tree, removing accumulated rounding.
    fn recompute_potentials(&mut self) {
        self.pi[self.root] = 0.0;
        let mut u = self.thread[self.root];
        while u != self.root {
            let p = self.parent[u];
            self.pi[u] = self.pi[p] - f64::from(self.pred_dir[u]) * self.arc_cost(self.pred[u]);
            u = self.thread[u];
        }
    }

    fn run(&mut self, max_pivots: usize) -> Result<usize> {
        let mut pivots = 0;
        let mut since_refresh = 0;
        loop {
            if !self.find_entering_arc() {
                self.recompute_potentials();
                if !self.find_entering_arc() {
                    break;
                }
            }
            self.find_join_node();
            if !self.find_leaving_arc() {
                return Err(Error::SolverNonConvergence(pivots));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
            #[cfg(test)]
            self.check_tree();
            pivots += 1;
            since_refresh += 1;
            if since_refresh >= 4 * (self.m + self.n) {
                self.recompute_potentials();
                since_refresh = 0;
            }
            if pivots >= max_pivots {
                return Err(Error::SolverNonConvergence(pivots));
            }
        }
        for u in 0..self.root {
            if self.pred[u] >= self.arc_num && self.pred_flow[u] != 0 {
                return Err(Error::SolverNonConvergence(pivots));
            }
        }
        Ok(pivots)
    }

    /// Verify the thread/parent/subtree bookkeeping (test builds only).
    #[cfg(test)]
    fn check_tree(&self) {
        let total = self.root + 1;
        let mut order = Vec::with_capacity(total);
        let mut u = self.root;
        for _ in 0..total {
            order.push(u);
            u = self.thread[u];
        }
        assert_eq!(u, self.root, "thread is not a single cycle");
        let mut pos = vec![0; total];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
            assert_eq!(self.rev_thread[self.thread[v]], v);
        }
        for &v in &order {
            let sub = self.succ_num[v];
            let last = order[pos[v] + sub - 1];
            assert_eq!(self.last_succ[v], last, "last_succ of {v}");
            if v != self.root {
                let p = self.parent[v];
                assert!(pos[p] < pos[v] && pos[v] + sub <= pos[p] + self.succ_num[p]);
                let e = self.pred[v];
                let (s, t) = (self.source(e), self.target(e));
                if self.pred_dir[v] == UP {
                    assert_eq!((s, t), (v, p));
                } else {
                    assert_eq!((s, t), (p, v));
                }
                assert!(self.pred_flow[v] >= 0);
                if e < self.arc_num {
                    assert_eq!(self.state[e], TREE);
                }
            }
        }
        assert_eq!(self.succ_num[self.root], total);
    }
}

/// Solve `min Σ c_ij f_ij` with row sums `supply` and column sums `demand`.
pub(crate) fn solve<C: ArcCost>(
    supply: &[i64],
    demand: &[i64],
    cost: &C,
    max_cost: f64,
    max_pivots: usize,
) -> Result<Solution> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 || supply.iter().sum::<i64>() != demand.iter().sum::<i64>() {
        return Err(Error::InvalidArgument("transport problem is empty or unbalanced".into()));
    }
    let mut s = Simplex::new(supply, demand, cost, max_cost);
    let pivots = s.run(max_pivots)?;
    let mut flows = Vec::new();
    let mut total_cost = 0.0;
    for u in 0..s.root {
        let e = s.pred[u];
        if e < s.arc_num && s.pred_flow[u] > 0 {
            let (i, j) = (e / n, e % n);
            flows.push((i, j, s.pred_flow[u]));
            total_cost += s.pred_flow[u] as f64 * cost.cost(e, i, j);
        }
    }
    flows.sort_unstable();
    Ok(Solution {
        flows,
        total_cost,
        source_potentials: s.pi[..m].to_vec(),
        sink_potentials: s.pi[m..m + n].to_vec(),
        pivots,
    })
}
