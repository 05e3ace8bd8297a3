//! Combinatorial solvers behind the transport module: dense linear
//! assignment, geometric bottleneck matching, a small transportation-LP
//! solver, and log-domain entropic regularization.

use crate::celllist::CellList;
use crate::{Error, Result};

/// Dense linear assignment by shortest augmenting paths with potentials
/// (O(n^3)). Returns the row-to-column assignment and the total cost.
///
/// The classic 1-indexed formulation with a virtual zero column keeps the
/// invariants simple; rows are introduced one at a time and each
/// augmentation maintains dual feasibility.
pub fn min_sum_assignment<C>(n: usize, cost: C) -> (Vec<usize>, f64)
where
    C: Fn(usize, usize) -> f64,
{
    assert!(n > 0, "assignment needs at least one row");
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // p[j] = row matched to column j (0 = none yet); p[0] is the row
    // currently seeking a column.
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        // Augment along the alternating path back to the virtual column.
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| cost(i, assignment[i])).sum();
    (assignment, total)
}

/// Bipartite matching state for threshold (bottleneck) searches; kept
/// across threshold changes so most of the matching survives each probe.
struct ThresholdMatching<'a> {
    dim: usize,
    src: &'a [f64],
    tgt: &'a [f64],
    cl: CellList,
    /// Cell size of `cl`; queries beyond it require a rebuild.
    cell_size: f64,
    /// Lower bound on the cell size so tiny query radii cannot blow up
    /// the cell count (roughly one point per cell).
    floor: f64,
    match_src: Vec<Option<usize>>,
    match_tgt: Vec<Option<usize>>,
}

impl<'a> ThresholdMatching<'a> {
    fn new(dim: usize, src: &'a [f64], tgt: &'a [f64], radius: f64) -> Result<Self> {
        let n = (tgt.len() / dim).max(1);
        let floor = bounding_radius(dim, src, tgt) / (n as f64).powf(1.0 / dim as f64).max(1.0);
        let cell_size = radius.max(floor);
        let cl = CellList::build(dim, tgt, cell_size)?;
        Ok(ThresholdMatching {
            dim,
            src,
            tgt,
            cl,
            cell_size,
            floor,
            match_src: vec![None; src.len() / dim],
            match_tgt: vec![None; tgt.len() / dim],
        })
    }

    fn ensure_radius(&mut self, radius: f64) -> Result<()> {
        if radius > self.cell_size {
            self.cell_size = radius.max(self.floor);
            self.cl = CellList::build(self.dim, self.tgt, self.cell_size)?;
        }
        Ok(())
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for a in 0..d {
            let dv = self.src[i * d + a] - self.tgt[j * d + a];
            acc += dv * dv;
        }
        acc.sqrt()
    }

    /// Drops matched edges longer than `lambda`.
    fn retain_within(&mut self, lambda: f64) {
        for i in 0..self.match_src.len() {
            if let Some(j) = self.match_src[i] {
                if self.dist(i, j) > lambda {
                    self.match_src[i] = None;
                    self.match_tgt[j] = None;
                }
            }
        }
    }

    /// Greedily matches free sources to free targets within `lambda`
    /// (nearest free candidate first); cheap warm start for augmentation.
    fn greedy_fill(&mut self, lambda: f64) {
        let n = self.match_src.len();
        for i in 0..n {
            if self.match_src[i].is_some() {
                continue;
            }
            let p = &self.src[i * self.dim..(i + 1) * self.dim];
            let mut hits = self.cl.within(p, lambda);
            hits.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            for (j, _) in hits {
                if self.match_tgt[j].is_none() {
                    self.match_src[i] = Some(j);
                    self.match_tgt[j] = Some(i);
                    break;
                }
            }
        }
    }

    /// Augments every free source via BFS over alternating paths with
    /// edges of length <= `lambda`. Returns the matched count.
    fn augment_all(&mut self, lambda: f64) -> usize {
        let n = self.match_src.len();
        let mut parent = vec![usize::MAX; self.match_tgt.len()];
        let mut stamp = vec![u32::MAX; self.match_tgt.len()];
        let mut round = 0u32;
        let mut queue: Vec<usize> = Vec::new();
        for start in 0..n {
            if self.match_src[start].is_some() {
                continue;
            }
            // BFS from the free source over (source -edge-> target
            // -matched-> source) transitions.
            queue.clear();
            queue.push(start);
            let mut head = 0;
            let mut found: Option<usize> = None;
            'bfs: while head < queue.len() {
                let i = queue[head];
                head += 1;
                let p = &self.src[i * self.dim..(i + 1) * self.dim];
                let mut free_hit: Option<usize> = None;
                self.cl.for_each_within(p, lambda, |j, _| {
                    if stamp[j] == round {
                        return;
                    }
                    stamp[j] = round;
                    parent[j] = i;
                    if self.match_tgt[j].is_none() {
                        if free_hit.is_none() {
                            free_hit = Some(j);
                        }
                    } else {
                        queue.push(self.match_tgt[j].unwrap());
                    }
                });
                if let Some(j) = free_hit {
                    found = Some(j);
                    break 'bfs;
                }
            }
            if let Some(mut j) = found {
                // Flip the alternating path.
                loop {
                    let i = parent[j];
                    let prev = self.match_src[i];
                    self.match_src[i] = Some(j);
                    self.match_tgt[j] = Some(i);
                    match prev {
                        Some(pj) => j = pj,
                        None => break,
                    }
                }
            }
            round = round.wrapping_add(1);
            if round == u32::MAX {
                stamp.fill(u32::MAX);
                round = 0;
            }
        }
        self.match_src.iter().filter(|m| m.is_some()).count()
    }

    fn snapshot(&self) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
        (self.match_src.clone(), self.match_tgt.clone())
    }

    fn restore(&mut self, snap: &(Vec<Option<usize>>, Vec<Option<usize>>)) {
        self.match_src.clone_from(&snap.0);
        self.match_tgt.clone_from(&snap.1);
    }
}

/// Bottleneck assignment between equal-size point sets: a perfect
/// matching minimizing the longest matched edge. Returns the assignment
/// and the bottleneck distance (an exact pairwise distance).
pub fn min_sup_assignment(dim: usize, src: &[f64], tgt: &[f64]) -> Result<(Vec<usize>, f64)> {
    if src.len() != tgt.len() || src.is_empty() || !src.len().is_multiple_of(dim) {
        return Err(Error::InvalidArgument(
            "bottleneck assignment needs equal-size nonempty point sets".into(),
        ));
    }
    let n = src.len() / dim;

    // Lower bound: every source needs some target within the bottleneck
    // radius and vice versa, so the max nearest-neighbor distance (either
    // direction) is a valid starting radius.
    let nn_bound = {
        // Cell size ~ one point per cell keeps nearest-neighbor queries
        // cheap without risking an oversized grid.
        let probe = bounding_radius(dim, src, tgt) / (n as f64).powf(1.0 / dim as f64).max(1.0);
        let cl_t = CellList::build(dim, tgt, probe)?;
        let cl_s = CellList::build(dim, src, probe)?;
        let mut bound = 0.0f64;
        for i in 0..n {
            let (_, d) = cl_t
                .nearest(&src[i * dim..(i + 1) * dim])
                .expect("nonempty targets");
            bound = bound.max(d);
            let (_, d) = cl_s
                .nearest(&tgt[i * dim..(i + 1) * dim])
                .expect("nonempty sources");
            bound = bound.max(d);
        }
        bound
    };

    let start = nn_bound.max(f64::MIN_POSITIVE);
    let mut matcher = ThresholdMatching::new(dim, src, tgt, start)?;
    let mut lambda = start;
    loop {
        matcher.ensure_radius(lambda)?;
        matcher.greedy_fill(lambda);
        if matcher.augment_all(lambda) == n {
            break;
        }
        lambda *= 1.5;
    }

    // Candidate bottleneck values: actual pair distances within the
    // feasible radius, at or above the lower bound.
    let mut candidates: Vec<f64> = Vec::new();
    for i in 0..n {
        for (_, d) in matcher.cl.within(&src[i * dim..(i + 1) * dim], lambda) {
            if d >= nn_bound {
                candidates.push(d);
            }
        }
    }
    candidates.push(nn_bound);
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    // Binary search for the smallest feasible candidate, warm-starting
    // each probe from the best feasible matching found so far.
    let mut feasible_snap = matcher.snapshot();
    let mut lo = 0usize;
    let mut hi = candidates.len() - 1; // feasible by construction
    while lo < hi {
        let mid = (lo + hi) / 2;
        let trial = candidates[mid];
        matcher.restore(&feasible_snap);
        matcher.retain_within(trial);
        if matcher.augment_all(trial) == n {
            feasible_snap = matcher.snapshot();
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let bottleneck = candidates[hi];
    matcher.restore(&feasible_snap);
    matcher.retain_within(bottleneck);
    let matched = matcher.augment_all(bottleneck);
    debug_assert_eq!(matched, n);
    let assignment: Vec<usize> = matcher
        .match_src
        .iter()
        .map(|m| m.expect("perfect matching"))
        .collect();
    let realized = (0..n)
        .map(|i| matcher.dist(i, assignment[i]))
        .fold(0.0f64, f64::max);
    Ok((assignment, realized))
}

fn bounding_radius(dim: usize, a: &[f64], b: &[f64]) -> f64 {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for chunk in a.chunks_exact(dim).chain(b.chunks_exact(dim)) {
        for (x, (l, h)) in chunk.iter().zip(lo.iter_mut().zip(hi.iter_mut())) {
            *l = l.min(*x);
            *h = h.max(*x);
        }
    }
    lo.iter()
        .zip(&hi)
        .map(|(l, h)| h - l)
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE)
}

/// Sparse flow triples `(source index, target index, integer mass units)`.
pub type FlowTriples = Vec<(usize, usize, u64)>;

/// Exact transportation LP between uniform marginals (`1/m` per source
/// atom, `1/n` per target atom) by successive shortest paths with
/// potentials. Returns sparse flows in units of `1/(m n)` together with
/// the optimal cost.
pub fn transportation_lp<C>(m: usize, n: usize, cost: C) -> Result<(FlowTriples, f64)>
where
    C: Fn(usize, usize) -> f64,
{
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "transportation needs nonempty marginals".into(),
        ));
    }
    if m.saturating_mul(n) > 4_000_000 {
        return Err(Error::InvalidArgument(format!(
            "transportation instance {m} x {n} too large for the dense LP solver"
        )));
    }
    // Integer mass units: each source atom supplies n units, each target
    // atom absorbs m units, so total flow is m*n units of size 1/(m*n).
    let mut supply: Vec<u64> = vec![n as u64; m];
    let mut demand: Vec<u64> = vec![m as u64; n];
    let mut flow: Vec<u64> = vec![0; m * n];
    // Node potentials with reduced costs rc(i->j) = c + pot_s[i] - pot_t[j]
    // (zero on every edge carrying flow, nonnegative elsewhere).
    let mut pot_s = vec![0.0f64; m];
    let mut pot_t = vec![0.0f64; n];
    // Seeding pot_t[j] with the column minimum makes every forward edge
    // reduced-cost feasible before the first Dijkstra.
    for (j, p) in pot_t.iter_mut().enumerate() {
        let mut best = f64::INFINITY;
        for i in 0..m {
            best = best.min(cost(i, j));
        }
        *p = best;
    }

    let mut remaining: u64 = (m as u64) * (n as u64);
    while remaining > 0 {
        // Dijkstra from all sources with remaining supply over the
        // bipartite graph; forward edges i->j always exist, backward
        // j->i exists when flow[i][j] > 0.
        let inf = f64::INFINITY;
        let mut dist_s = vec![inf; m];
        let mut dist_t = vec![inf; n];
        let mut done_s = vec![false; m];
        let mut done_t = vec![false; n];
        let mut prev_t: Vec<usize> = vec![usize::MAX; n]; // source feeding j
        let mut prev_s: Vec<usize> = vec![usize::MAX; m]; // target feeding i (backward)
        for i in 0..m {
            if supply[i] > 0 {
                dist_s[i] = 0.0;
            }
        }
        // Dense Dijkstra alternating between the two sides.
        loop {
            // Pick the unfinished node (either side) with smallest label.
            let mut best = inf;
            let mut pick: Option<(bool, usize)> = None; // (is_source, idx)
            for i in 0..m {
                if !done_s[i] && dist_s[i] < best {
                    best = dist_s[i];
                    pick = Some((true, i));
                }
            }
            for j in 0..n {
                if !done_t[j] && dist_t[j] < best {
                    best = dist_t[j];
                    pick = Some((false, j));
                }
            }
            let Some((is_source, idx)) = pick else { break };
            if is_source {
                let i = idx;
                done_s[i] = true;
                for j in 0..n {
                    if done_t[j] {
                        continue;
                    }
                    let rc = cost(i, j) + pot_s[i] - pot_t[j];
                    let cand = dist_s[i] + rc.max(0.0);
                    if cand < dist_t[j] {
                        dist_t[j] = cand;
                        prev_t[j] = i;
                    }
                }
            } else {
                let j = idx;
                done_t[j] = true;
                for i in 0..m {
                    if done_s[i] || flow[i * n + j] == 0 {
                        continue;
                    }
                    let rc = pot_t[j] - pot_s[i] - cost(i, j);
                    let cand = dist_t[j] + rc.max(0.0);
                    if cand < dist_s[i] {
                        dist_s[i] = cand;
                        prev_s[i] = j;
                    }
                }
            }
        }
        // Cheapest reachable target with unmet demand.
        let mut target: Option<usize> = None;
        let mut best = inf;
        for j in 0..n {
            if demand[j] > 0 && dist_t[j] < best {
                best = dist_t[j];
                target = Some(j);
            }
        }
        let Some(tj) = target else {
            return Err(Error::Convergence {
                context: "transportation LP".into(),
                residual: remaining as f64,
                iterations: 0,
            });
        };
        // Standard potential update: shift every labeled node by its
        // (capped) distance so shortest-path edges become reduced-cost 0.
        for i in 0..m {
            if dist_s[i] < inf {
                pot_s[i] += dist_s[i].min(best);
            }
        }
        for j in 0..n {
            if dist_t[j] < inf {
                pot_t[j] += dist_t[j].min(best);
            }
        }
        // Trace the augmenting path back, finding its bottleneck.
        let mut path: Vec<(usize, usize, bool)> = Vec::new(); // (i, j, forward)
        let mut cur_t = tj;
        let mut push = demand[tj];
        loop {
            let i = prev_t[cur_t];
            path.push((i, cur_t, true));
            if dist_s[i] == 0.0 && supply[i] > 0 {
                push = push.min(supply[i]);
                break;
            }
            let back_j = prev_s[i];
            path.push((i, back_j, false));
            push = push.min(flow[i * n + back_j]);
            cur_t = back_j;
        }
        debug_assert!(push > 0);
        for &(i, j, forward) in &path {
            if forward {
                flow[i * n + j] += push;
            } else {
                flow[i * n + j] -= push;
            }
        }
        let (first_i, _, _) = *path.last().expect("path is nonempty");
        supply[first_i] -= push;
        demand[tj] -= push;
        remaining -= push;
    }

    let mut entries = Vec::new();
    let mut total = 0.0;
    let unit = 1.0 / (m as f64 * n as f64);
    for i in 0..m {
        for j in 0..n {
            let f = flow[i * n + j];
            if f > 0 {
                entries.push((i, j, f));
                total += f as f64 * unit * cost(i, j);
            }
        }
    }
    Ok((entries, total))
}

/// Entropically regularized coupling via log-domain Sinkhorn iterations,
/// rounded to an exactly feasible plan. Returns the dense plan, its cost
/// (an upper bound on the unregularized optimum), and the duality gap
/// against the c-transformed dual lower bound.
#[derive(Debug)]
pub struct SinkhornOutcome {
    /// Row-major `m x n` coupling with exact uniform marginals.
    pub plan: Vec<f64>,
    pub cost: f64,
    pub duality_gap: f64,
}

pub fn sinkhorn_coupling<C>(
    m: usize,
    n: usize,
    cost: C,
    reg: f64,
    max_iters: usize,
    marginal_tol: f64,
) -> Result<SinkhornOutcome>
where
    C: Fn(usize, usize) -> f64,
{
    if !(reg > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "entropic regularization must be positive (got {reg})"
        )));
    }
    if m == 0 || n == 0 || m.saturating_mul(n) > 4_000_000 {
        return Err(Error::InvalidArgument(
            "instance empty or too large for the dense solver".into(),
        ));
    }
    let a = 1.0 / m as f64;
    let b = 1.0 / n as f64;
    let c: Vec<f64> = (0..m * n).map(|k| cost(k / n, k % n)).collect();
    let mut f = vec![0.0f64; m];
    let mut g = vec![0.0f64; n];
    let log_a = a.ln();
    let log_b = b.ln();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < max_iters {
        iterations += 1;
        // f-update: f_i = reg*log a_i - reg*LSE_j((g_j - c_ij)/reg)
        for i in 0..m {
            let mut mx = f64::NEG_INFINITY;
            for j in 0..n {
                mx = mx.max((g[j] - c[i * n + j]) / reg);
            }
            let mut s = 0.0;
            for j in 0..n {
                s += ((g[j] - c[i * n + j]) / reg - mx).exp();
            }
            f[i] = reg * (log_a - (mx + s.ln()));
        }
        for j in 0..n {
            let mut mx = f64::NEG_INFINITY;
            for i in 0..m {
                mx = mx.max((f[i] - c[i * n + j]) / reg);
            }
            let mut s = 0.0;
            for i in 0..m {
                s += ((f[i] - c[i * n + j]) / reg - mx).exp();
            }
            g[j] = reg * (log_b - (mx + s.ln()));
        }
        // Row-marginal violation (columns are exact right after the
        // g-update).
        residual = 0.0;
        for i in 0..m {
            let mut row = 0.0;
            for j in 0..n {
                row += ((f[i] + g[j] - c[i * n + j]) / reg).exp();
            }
            residual += (row - a).abs();
        }
        if residual < marginal_tol {
            break;
        }
    }
    let mut plan: Vec<f64> = (0..m * n)
        .map(|k| ((f[k / n] + g[k % n] - c[k]) / reg).exp())
        .collect();
    round_to_feasible(&mut plan, m, n, a, b);
    let cost_val: f64 = plan.iter().zip(&c).map(|(p, c)| p * c).sum();
    // Dual lower bound with the c-transform of f.
    let mut dual = 0.0;
    for fi in &f {
        dual += a * fi;
    }
    for j in 0..n {
        let mut best = f64::INFINITY;
        for i in 0..m {
            best = best.min(c[i * n + j] - f[i]);
        }
        dual += b * best;
    }
    let duality_gap = (cost_val - dual).max(0.0);
    if residual >= marginal_tol {
        return Err(Error::Convergence {
            context: format!(
                "entropic coupling at regularization {reg}: marginal residual {residual:.3e}, \
                 duality gap {duality_gap:.3e} at the iteration cap"
            ),
            residual,
            iterations,
        });
    }
    Ok(SinkhornOutcome {
        plan,
        cost: cost_val,
        duality_gap,
    })
}

/// Rounds a nearly feasible nonnegative matrix onto the transportation
/// polytope with uniform marginals: scale rows down to their budgets,
/// then columns, then spread the leftover mass rank-one.
fn round_to_feasible(plan: &mut [f64], m: usize, n: usize, a: f64, b: f64) {
    for i in 0..m {
        let row: f64 = plan[i * n..(i + 1) * n].iter().sum();
        if row > a && row > 0.0 {
            let s = a / row;
            for v in &mut plan[i * n..(i + 1) * n] {
                *v *= s;
            }
        }
    }
    for j in 0..n {
        let col: f64 = (0..m).map(|i| plan[i * n + j]).sum();
        if col > b && col > 0.0 {
            let s = b / col;
            for i in 0..m {
                plan[i * n + j] *= s;
            }
        }
    }
    let mut row_err = vec![0.0f64; m];
    let mut col_err = vec![0.0f64; n];
    let mut total_err = 0.0;
    for i in 0..m {
        let row: f64 = plan[i * n..(i + 1) * n].iter().sum();
        row_err[i] = (a - row).max(0.0);
        total_err += row_err[i];
    }
    for j in 0..n {
        let col: f64 = (0..m).map(|i| plan[i * n + j]).sum();
        col_err[j] = (b - col).max(0.0);
    }
    if total_err > 0.0 {
        for i in 0..m {
            for j in 0..n {
                plan[i * n + j] += row_err[i] * col_err[j] / total_err;
            }
        }
    }
}
