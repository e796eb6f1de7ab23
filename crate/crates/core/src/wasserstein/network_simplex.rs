//! Primal network simplex for dense transportation problems.
//!
//! Spanning-tree data layout (parent, thread, successor counts) follows the
//! LEMON implementation: supply nodes `0..m`, demand nodes `m..m+n`, and an
//! artificial root joined to every node by an arc of large cost. Original
//! arcs `i -> m + j` are implicit, indexed `i * n + j`; the block-search
//! pivot scans them cyclically.

use crate::error::{Error, Result};

const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;
const DIR_UP: i8 = 1;
const DIR_DOWN: i8 = -1;
const NONE: usize = usize::MAX;

/// Optimal flow with dual potentials, usable as an optimality certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowCertificate {
    /// `(source, sink, mass)` for every arc carrying positive flow.
    pub flows: Vec<(usize, usize, f64)>,
    /// Dual potentials with `u_i + v_j <= c_ij`.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub cost: f64,
}

/// Residuals of a certificate against the problem it claims to solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateAudit {
    /// Largest violation of a marginal constraint.
    pub primal_residual: f64,
    /// Largest `max(0, u_i + v_j - c_ij)` over all arcs.
    pub dual_violation: f64,
    /// Largest `|c_ij - u_i - v_j|` over arcs with positive flow.
    pub slackness: f64,
    /// Smallest flow value (negative flows are infeasible).
    pub min_flow: f64,
}

impl FlowCertificate {
    pub fn audit(&self, supply: &[f64], demand: &[f64], cost: impl Fn(usize, usize) -> f64) -> CertificateAudit {
        let mut out_mass = vec![0.0; supply.len()];
        let mut in_mass = vec![0.0; demand.len()];
        let mut slackness: f64 = 0.0;
        let mut min_flow = f64::INFINITY;
        for &(i, j, f) in &self.flows {
            out_mass[i] += f;
            in_mass[j] += f;
            min_flow = min_flow.min(f);
            slackness = slackness.max((cost(i, j) - self.u[i] - self.v[j]).abs());
        }
        let primal_residual = out_mass
            .iter()
            .zip(supply)
            .chain(in_mass.iter().zip(demand))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let mut dual_violation: f64 = 0.0;
        for (i, ui) in self.u.iter().enumerate() {
            for (j, vj) in self.v.iter().enumerate() {
                dual_violation = dual_violation.max(ui + vj - cost(i, j));
            }
        }
        CertificateAudit {
            primal_residual,
            dual_violation,
            slackness,
            min_flow: if min_flow.is_finite() { min_flow } else { 0.0 },
        }
    }
}

struct Simplex<'c> {
    m: usize,
    n: usize,
    cost: &'c [f64],
    // arcs: 0..m*n original, then one artificial arc per node
    flow: Vec<f64>,
    state: Vec<i8>,
    art_source: Vec<usize>,
    art_target: Vec<usize>,
    art_cost: f64,
    // nodes: 0..m+n, root = m+n
    parent: Vec<usize>,
    pred: Vec<usize>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    pred_dir: Vec<i8>,
    pi: Vec<f64>,
    dirty_revs: Vec<usize>,
    // pivot bookkeeping
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,
    next_arc: usize,
    block: usize,
    tol: f64,
}

impl<'c> Simplex<'c> {
    fn new(supply: &[f64], demand: &[f64], cost: &'c [f64]) -> Self {
        let m = supply.len();
        let n = demand.len();
        let nodes = m + n;
        let arcs = m * n;
        let max_cost = cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        let art_cost = (max_cost + 1.0) * nodes as f64;
        let root = nodes;
        let mut s = Simplex {
            m,
            n,
            cost,
            flow: vec![0.0; arcs + nodes],
            state: vec![STATE_LOWER; arcs + nodes],
            art_source: vec![0; nodes],
            art_target: vec![0; nodes],
            art_cost,
            parent: vec![NONE; nodes + 1],
            pred: vec![NONE; nodes + 1],
            thread: vec![0; nodes + 1],
            rev_thread: vec![0; nodes + 1],
            succ_num: vec![1; nodes + 1],
            last_succ: vec![0; nodes + 1],
            pred_dir: vec![DIR_UP; nodes + 1],
            pi: vec![0.0; nodes + 1],
            dirty_revs: Vec::new(),
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0.0,
            next_arc: 0,
            block: ((arcs as f64).sqrt().ceil() as usize).max(10).min(arcs.max(1)),
            tol: 64.0 * f64::EPSILON * art_cost,
        };
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = nodes + 1;
        s.last_succ[root] = root - 1;
        for u in 0..nodes {
            let e = arcs + u;
            s.parent[u] = root;
            s.pred[u] = e;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            s.state[e] = STATE_TREE;
            let b = if u < m { supply[u] } else { -demand[u - m] };
            if b >= 0.0 {
                s.pred_dir[u] = DIR_UP;
                s.pi[u] = 0.0;
                s.art_source[u] = u;
                s.art_target[u] = root;
                s.flow[e] = b;
            } else {
                s.pred_dir[u] = DIR_DOWN;
                s.pi[u] = art_cost;
                s.art_source[u] = root;
                s.art_target[u] = u;
                s.flow[e] = -b;
            }
        }
        s
    }

    #[inline]
    fn source(&self, e: usize) -> usize {
        let arcs = self.m * self.n;
        if e < arcs {
            e / self.n
        } else {
            self.art_source[e - arcs]
        }
    }

    #[inline]
    fn target(&self, e: usize) -> usize {
        let arcs = self.m * self.n;
        if e < arcs {
            self.m + e % self.n
        } else {
            self.art_target[e - arcs]
        }
    }

    #[inline]
    fn arc_cost(&self, e: usize) -> f64 {
        let arcs = self.m * self.n;
        if e < arcs {
            self.cost[e]
        } else if self.art_source[e - arcs] == self.m + self.n {
            self.art_cost
        } else {
            0.0
        }
    }

    fn find_entering_arc(&mut self) -> bool {
        let arcs = self.m * self.n;
        if arcs == 0 {
            return false;
        }
        let mut min = 0.0;
        let mut cnt = self.block;
        let mut e = self.next_arc;
        for _ in 0..arcs {
            let st = self.state[e];
            if st != STATE_TREE {
                let i = e / self.n;
                let j = self.m + e % self.n;
                let c = st as f64 * (self.cost[e] + self.pi[i] - self.pi[j]);
                if c < min {
                    min = c;
                    self.in_arc = e;
                }
            }
            cnt -= 1;
            e += 1;
            if e == arcs {
                e = 0;
            }
            if cnt == 0 {
                if min < -self.tol {
                    self.next_arc = e;
                    return true;
                }
                cnt = self.block;
            }
        }
        if min < -self.tol {
            self.next_arc = e;
            return true;
        }
        false
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

    /// Uncapacitated arcs: only arcs oriented against the cycle can block.
    fn find_leaving_arc(&mut self) -> bool {
        let (first, second) = if self.state[self.in_arc] == STATE_LOWER {
            (self.source(self.in_arc), self.target(self.in_arc))
        } else {
            (self.target(self.in_arc), self.source(self.in_arc))
        };
        self.delta = f64::INFINITY;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == DIR_UP {
                let d = self.flow[self.pred[u]];
                if d < self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        u = second;
        while u != self.join {
            if self.pred_dir[u] == DIR_DOWN {
                let d = self.flow[self.pred[u]];
                if d <= self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 2;
                }
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
        if self.delta > 0.0 {
            let val = self.state[self.in_arc] as f64 * self.delta;
            self.flow[self.in_arc] += val;
            let mut u = self.source(self.in_arc);
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] -= self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
            u = self.target(self.in_arc);
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] += self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        let out = self.pred[self.u_out];
        self.flow[out] = 0.0;
        self.state[out] = STATE_LOWER;
    }

    fn update_tree_structure(&mut self) {
        let u_in = self.u_in;
        let v_in = self.v_in;
        let u_out = self.u_out;
        let in_arc = self.in_arc;
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = if u_in == self.source(in_arc) { DIR_UP } else { DIR_DOWN };
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

            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc = tmp_sc + self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = if u_in == self.source(in_arc) { DIR_UP } else { DIR_DOWN };
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[self.join] == v_in { self.join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }

        if self.join != old_rev_thread && v_in != old_rev_thread {
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
        while u != self.join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != self.join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let sigma = self.pi[self.v_in] - self.pi[self.u_in] - self.pred_dir[self.u_in] as f64 * self.arc_cost(self.in_arc);
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    fn run(&mut self, max_iter: usize) -> Result<usize> {
        let mut iter = 0;
        while self.find_entering_arc() {
            self.find_join_node();
            if !self.find_leaving_arc() {
                return Err(Error::Solver("unbounded transport problem".into()));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
            iter += 1;
            if iter >= max_iter {
                return Err(Error::Solver(format!("no convergence after {max_iter} pivots")));
            }
        }
        Ok(iter)
    }
}

/// Minimizes `Σ c_ij π_ij` over couplings of `supply` (length m) and
/// `demand` (length n); `cost` is row-major `m × n`.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<FlowCertificate> {
    let m = supply.len();
    let n = demand.len();
    if m == 0 || n == 0 || cost.len() != m * n {
        return Err(Error::InvalidArgument("transport problem shape mismatch".into()));
    }
    let ts: f64 = supply.iter().sum();
    let td: f64 = demand.iter().sum();
    if (ts - td).abs() > 1e-9 * ts.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!("unbalanced masses {ts} vs {td}")));
    }
    let mut s = Simplex::new(supply, demand, cost);
    let max_iter = 1000 * (m + n) * (m + n).max(100);
    s.run(max_iter)?;
    let mut flows = Vec::new();
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            let f = s.flow[i * n + j];
            if f > 0.0 {
                flows.push((i, j, f));
                total += f * cost[i * n + j];
            }
        }
    }
    let u = (0..m).map(|i| -s.pi[i]).collect();
    let v = (0..n).map(|j| s.pi[m + j]).collect();
    Ok(FlowCertificate { flows, u, v, cost: total })
}
