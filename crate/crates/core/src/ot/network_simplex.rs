//! Primal network simplex for the dense bipartite transportation problem.
//!
//! The simplex works on an explicit, growable list of arcs. Large problems
//! start from a sparse candidate set; after each optimal solve over the
//! current arcs every one of the `m * n` arcs is priced, violating arcs are
//! appended and pivoting resumes from the current tree. The returned
//! solution is therefore optimal over the full dense problem.
//!
//! The spanning tree is kept strongly feasible (zero-flow arcs point away
//! from the root), which rules out cycling under degeneracy. Pricing is
//! block search.

use std::ops::Range;

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;
/// Violating arcs appended per source row in each dense pricing round.
const ADDED_PER_ROW: usize = 4;

/// Arc costs of a dense `m x n` bipartite problem.
pub(crate) trait ArcCosts {
    fn cost(&self, i: usize, j: usize) -> f64;

    /// Writes `cost(i, j)` for `j` in `cols` into `out`.
    fn row(&self, i: usize, cols: Range<usize>, out: &mut [f64]) {
        for (o, j) in out.iter_mut().zip(cols) {
            *o = self.cost(i, j);
        }
    }
}

impl<F: Fn(usize, usize) -> f64> ArcCosts for F {
    fn cost(&self, i: usize, j: usize) -> f64 {
        self(i, j)
    }
}

/// `cost(i, j) = -x_i . y_j`, with the sink coordinates stored per axis so
/// row evaluation vectorizes.
pub(crate) struct NegInnerProduct {
    dim: usize,
    sources: Vec<f64>,
    sink_axes: Vec<Vec<f64>>,
}

impl NegInnerProduct {
    pub fn new(dim: usize, sources: &[f64], sinks: &[f64]) -> Self {
        let n = sinks.len() / dim;
        let sink_axes = (0..dim)
            .map(|k| (0..n).map(|j| sinks[j * dim + k]).collect())
            .collect();
        Self {
            dim,
            sources: sources.to_vec(),
            sink_axes,
        }
    }
}

impl ArcCosts for NegInnerProduct {
    fn cost(&self, i: usize, j: usize) -> f64 {
        let x = &self.sources[i * self.dim..(i + 1) * self.dim];
        -x.iter().zip(&self.sink_axes).map(|(xk, ys)| xk * ys[j]).sum::<f64>()
    }

    fn row(&self, i: usize, cols: Range<usize>, out: &mut [f64]) {
        let x = &self.sources[i * self.dim..(i + 1) * self.dim];
        out.iter_mut().for_each(|o| *o = 0.0);
        for (xk, ys) in x.iter().zip(&self.sink_axes) {
            for (o, y) in out.iter_mut().zip(&ys[cols.clone()]) {
                *o -= xk * y;
            }
        }
    }
}

pub(crate) struct TransportSolution {
    /// Basic arcs with positive flow, `(source, sink, flow)`.
    pub flows: Vec<(usize, usize, f64)>,
    /// Node potentials with `cost(i, j) + source_pot[i] - sink_pot[j] >= 0`.
    pub source_pot: Vec<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub sink_pot: Vec<f64>,
    pub pivots: usize,
}

struct Tree {
    parent: Vec<usize>,
    pred_arc: Vec<usize>,
    /// true when the pred arc points from the node to its parent
    pred_up: Vec<bool>,
    flow: Vec<f64>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    first_child: Vec<usize>,
    next_sibling: Vec<usize>,
    prev_sibling: Vec<usize>,
}

impl Tree {
    fn unlink(&mut self, u: usize) {
        let p = self.parent[u];
        let (prev, next) = (self.prev_sibling[u], self.next_sibling[u]);
        if prev != NONE {
            self.next_sibling[prev] = next;
        } else if p != NONE {
            self.first_child[p] = next;
        }
        if next != NONE {
            self.prev_sibling[next] = prev;
        }
        self.prev_sibling[u] = NONE;
        self.next_sibling[u] = NONE;
    }

    fn link(&mut self, u: usize, p: usize) {
        self.parent[u] = p;
        let head = self.first_child[p];
        self.next_sibling[u] = head;
        self.prev_sibling[u] = NONE;
        if head != NONE {
            self.prev_sibling[head] = u;
        }
        self.first_child[p] = u;
    }
}

/// Arcs `0..m+n` join each node to the root and carry the big-M cost;
/// real arcs follow.
struct Simplex {
    artificial: usize,
    root: usize,
    tail: Vec<u32>,
    head: Vec<u32>,
    cost: Vec<f64>,
    in_tree: Vec<bool>,
    tree: Tree,
    next_arc: usize,
    eps: f64,
    stack: Vec<usize>,
    stem: Vec<usize>,
    saved: Vec<(usize, bool, f64)>,
    pivots: usize,
}

impl Simplex {
    fn new(supply: &[f64], demand: &[f64], art_cost: f64, eps: f64) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let nodes = m + n + 1;
        let root = m + n;
        let mut tree = Tree {
            parent: vec![NONE; nodes],
            pred_arc: vec![NONE; nodes],
            pred_up: vec![false; nodes],
            flow: vec![0.0; nodes],
            depth: vec![0; nodes],
            pi: vec![0.0; nodes],
            first_child: vec![NONE; nodes],
            next_sibling: vec![NONE; nodes],
            prev_sibling: vec![NONE; nodes],
        };
        let mut tail = Vec::with_capacity(m + n);
        let mut head = Vec::with_capacity(m + n);
        for u in 0..m + n {
            tree.pred_arc[u] = u;
            tree.depth[u] = 1;
            if u < m {
                tree.pred_up[u] = true;
                tree.flow[u] = supply[u];
                tree.pi[u] = -art_cost;
                tail.push(u as u32);
                head.push(root as u32);
            } else {
                tree.flow[u] = demand[u - m];
                tree.pi[u] = art_cost;
                tail.push(root as u32);
                head.push(u as u32);
            }
        }
        for u in (0..m + n).rev() {
            tree.link(u, root);
        }
        Self {
            artificial: m + n,
            root,
            tail,
            head,
            cost: vec![art_cost; m + n],
            in_tree: vec![true; m + n],
            tree,
            next_arc: m + n,
            eps,
            stack: Vec::with_capacity(nodes),
            stem: Vec::new(),
            saved: Vec::new(),
            pivots: 0,
        }
    }

    fn add_arc(&mut self, source: usize, sink_node: usize, cost: f64) {
        self.tail.push(source as u32);
        self.head.push(sink_node as u32);
        self.cost.push(cost);
        self.in_tree.push(false);
    }

    fn reduced_cost(&self, arc: usize) -> f64 {
        self.cost[arc] + self.tree.pi[self.tail[arc] as usize] - self.tree.pi[self.head[arc] as usize]
    }

    fn find_entering(&mut self) -> Option<usize> {
        let first = self.artificial;
        let total = self.cost.len() - first;
        if total == 0 {
            return None;
        }
        let block = ((total as f64).sqrt().ceil() as usize).max(10).min(total);
        let mut best = NONE;
        let mut best_rc = -self.eps;
        let mut arc = self.next_arc;
        if arc < first || arc >= self.cost.len() {
            arc = first;
        }
        let mut in_block = 0;
        for _ in 0..total {
            if !self.in_tree[arc] {
                let rc = self.reduced_cost(arc);
                if rc < best_rc {
                    best_rc = rc;
                    best = arc;
                }
            }
            arc += 1;
            if arc == self.cost.len() {
                arc = first;
            }
            in_block += 1;
            if in_block == block {
                in_block = 0;
                if best != NONE {
                    break;
                }
            }
        }
        self.next_arc = arc;
        (best != NONE).then_some(best)
    }

    fn find_join(&self, mut a: usize, mut b: usize) -> usize {
        let t = &self.tree;
        while a != b {
            if t.depth[a] >= t.depth[b] {
                a = t.parent[a];
            } else {
                b = t.parent[b];
            }
        }
        a
    }

    fn pivot(&mut self, entering: usize) -> Result<()> {
        let first = self.tail[entering] as usize;
        let second = self.head[entering] as usize;
        let join = self.find_join(first, second);

        // Leaving arc: the last blocking arc met when walking the cycle in
        // the direction of the pushed flow, starting from the join node.
        let mut delta = f64::INFINITY;
        let mut u_out = NONE;
        let mut leaving_on_first = false;
        let mut u = first;
        while u != join {
            if self.tree.pred_up[u] && self.tree.flow[u] < delta {
                delta = self.tree.flow[u];
                u_out = u;
                leaving_on_first = true;
            }
            u = self.tree.parent[u];
        }
        u = second;
        while u != join {
            if !self.tree.pred_up[u] && self.tree.flow[u] <= delta {
                delta = self.tree.flow[u];
                u_out = u;
                leaving_on_first = false;
            }
            u = self.tree.parent[u];
        }
        if u_out == NONE {
            return Err(Error::SolverFailure("unbounded pivot cycle".into()));
        }

        if delta > 0.0 {
            let mut u = first;
            while u != join {
                if self.tree.pred_up[u] {
                    self.tree.flow[u] -= delta;
                } else {
                    self.tree.flow[u] += delta;
                }
                u = self.tree.parent[u];
            }
            u = second;
            while u != join {
                if self.tree.pred_up[u] {
                    self.tree.flow[u] += delta;
                } else {
                    self.tree.flow[u] -= delta;
                }
                u = self.tree.parent[u];
            }
        }

        let (u_in, v_in, entering_up) = if leaving_on_first {
            (first, second, true)
        } else {
            (second, first, false)
        };

        self.in_tree[self.tree.pred_arc[u_out]] = false;
        self.in_tree[entering] = true;

        // Re-hang the stem u_in .. u_out below v_in, reversing its arcs.
        self.stem.clear();
        self.stem.push(u_in);
        let mut s = u_in;
        while s != u_out {
            s = self.tree.parent[s];
            self.stem.push(s);
        }
        self.saved.clear();
        for &s in &self.stem {
            self.saved
                .push((self.tree.pred_arc[s], self.tree.pred_up[s], self.tree.flow[s]));
        }
        for &s in &self.stem {
            self.tree.unlink(s);
        }
        self.tree.pred_arc[u_in] = entering;
        self.tree.pred_up[u_in] = entering_up;
        self.tree.flow[u_in] = delta;
        self.tree.link(u_in, v_in);
        for k in 1..self.stem.len() {
            let (arc, up, flow) = self.saved[k - 1];
            let s = self.stem[k];
            self.tree.pred_arc[s] = arc;
            self.tree.pred_up[s] = !up;
            self.tree.flow[s] = flow;
            self.tree.link(s, self.stem[k - 1]);
        }

        // Shift potentials of the moved subtree so the entering arc is tight.
        let c = self.cost[entering];
        let target = if entering_up {
            self.tree.pi[v_in] - c
        } else {
            self.tree.pi[v_in] + c
        };
        let sigma = target - self.tree.pi[u_in];
        self.stack.clear();
        self.stack.push(u_in);
        while let Some(u) = self.stack.pop() {
            self.tree.pi[u] += sigma;
            self.tree.depth[u] = self.tree.depth[self.tree.parent[u]] + 1;
            let mut c = self.tree.first_child[u];
            while c != NONE {
                self.stack.push(c);
                c = self.tree.next_sibling[c];
            }
        }
        self.pivots += 1;
        Ok(())
    }

    /// Recompute all potentials from the tree to shed accumulated rounding.
    fn refresh_potentials(&mut self) {
        self.stack.clear();
        self.stack.push(self.root);
        self.tree.pi[self.root] = 0.0;
        while let Some(u) = self.stack.pop() {
            let mut c = self.tree.first_child[u];
            while c != NONE {
                let arc_cost = self.cost[self.tree.pred_arc[c]];
                self.tree.pi[c] = if self.tree.pred_up[c] {
                    self.tree.pi[u] - arc_cost
                } else {
                    self.tree.pi[u] + arc_cost
                };
                self.stack.push(c);
                c = self.tree.next_sibling[c];
            }
        }
    }

    /// Pivot until no arc in the current list prices out.
    fn run(&mut self, max_pivots: usize) -> Result<()> {
        loop {
            match self.find_entering() {
                Some(arc) => {
                    self.pivot(arc)?;
                    if self.pivots % 256 == 0 {
                        self.refresh_potentials();
                    }
                    if self.pivots > max_pivots {
                        return Err(Error::SolverFailure(format!(
                            "no convergence after {} pivots",
                            self.pivots
                        )));
                    }
                }
                None => {
                    self.refresh_potentials();
                    if self.find_entering().is_none() {
                        return Ok(());
                    }
                }
            }
        }
    }
}

/// Minimize `sum cost(i, j) f_ij` subject to `sum_j f_ij = supply[i]`,
/// `sum_i f_ij = demand[j]`, `f >= 0`. Supplies and demands must be positive
/// and balanced. `candidates`, when given, seeds the arc list; optimality is
/// always certified against all `m * n` arcs.
pub(crate) fn solve_transport<C: ArcCosts>(
    supply: &[f64],
    demand: &[f64],
    cost: &C,
    candidates: Option<&[(usize, usize)]>,
) -> Result<TransportSolution> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::EmptySupport);
    }
    let nodes = m + n + 1;

    let mut row = vec![0.0; n];
    let mut max_cost: f64 = 0.0;
    for i in 0..m {
        cost.row(i, 0..n, &mut row);
        for (j, c) in row.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::SolverFailure(format!("non-finite cost at ({i}, {j})")));
            }
            max_cost = max_cost.max(c.abs());
        }
    }
    let art_cost = (max_cost + 1.0) * nodes as f64;
    let eps = 1e-12 * max_cost.max(1e-300);

    let mut simplex = Simplex::new(supply, demand, art_cost, eps);
    match candidates {
        Some(list) => {
            for &(i, j) in list {
                simplex.add_arc(i, m + j, cost.cost(i, j));
            }
        }
        None => {
            for i in 0..m {
                cost.row(i, 0..n, &mut row);
                for (j, &c) in row.iter().enumerate() {
                    simplex.add_arc(i, m + j, c);
                }
            }
        }
    }

    let max_pivots = 200 * (m * n) + 100 * nodes + 1000;
    loop {
        simplex.run(max_pivots)?;
        if candidates.is_none() {
            break;
        }
        // Price every dense arc against the current potentials and add the
        // worst few per row. Zero-flow artificial arcs left in the tree can
        // offset whole components by the big-M cost; adding everything that
        // prices out would then add nearly every arc.
        let before = simplex.cost.len();
        let mut worst: Vec<(f64, usize)> = Vec::with_capacity(ADDED_PER_ROW + 1);
        for i in 0..m {
            cost.row(i, 0..n, &mut row);
            let pi_i = simplex.tree.pi[i];
            worst.clear();
            for (j, &c) in row.iter().enumerate() {
                let rc = c + pi_i - simplex.tree.pi[m + j];
                if rc < -eps && (worst.len() < ADDED_PER_ROW || rc < worst[worst.len() - 1].0) {
                    let at = worst.partition_point(|w| w.0 <= rc);
                    worst.insert(at, (rc, j));
                    worst.truncate(ADDED_PER_ROW);
                }
            }
            for &(_, j) in &worst {
                simplex.add_arc(i, m + j, row[j]);
            }
        }
        if simplex.cost.len() == before {
            break;
        }
    }

    let total: f64 = supply.iter().sum::<f64>().max(demand.iter().sum());
    let mut flows = Vec::with_capacity(nodes);
    for u in 0..m + n {
        let arc = simplex.tree.pred_arc[u];
        let f = simplex.tree.flow[u];
        if arc < simplex.artificial {
            if f > 1e-9 * total {
                return Err(Error::SolverFailure(format!(
                    "artificial flow {f:e} left at node {u}; problem infeasible"
                )));
            }
        } else if f > 0.0 {
            flows.push((simplex.tail[arc] as usize, simplex.head[arc] as usize - m, f));
        }
    }
    flows.sort_by_key(|&(i, j, _)| (i, j));
    let pi = &simplex.tree.pi;
    Ok(TransportSolution {
        flows,
        source_pot: pi[..m].to_vec(),
        sink_pot: pi[m..m + n].to_vec(),
        pivots: simplex.pivots,
    })
}
