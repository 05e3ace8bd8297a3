//! Couplings between function-measure pairs: the metric that mixes
//! ground distance with value discrepancy, assignment-based transport
//! maps from a quantized reference measure onto sampled clouds, and the
//! scaling diagnostics derived from those maps.

mod solvers;

use crate::domain_sampling::EmpiricalMeasure;
use crate::graph_energy::NodeField;
use crate::{Error, Result};

/// Marginal tolerance every coupling must satisfy.
const PLAN_MARGINAL_TOL: f64 = 1e-9;
/// Largest instance the dense exact assignment solver accepts.
const EXACT_ASSIGNMENT_CAP: usize = 4096;
const SINKHORN_MAX_ITERS: usize = 200_000;
/// Stopping residual for the entropic iterations. Looser than the plan
/// tolerance on purpose: the iterate is rounded to an exactly feasible
/// coupling afterwards, so this only affects how tight the reported
/// duality gap is, never the validity of the upper bound.
const SINKHORN_MARGINAL_TOL: f64 = 1e-5;

/// Solver choice for the coupling distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tl1Solver {
    /// Exact minimum over permutations; requires equal atom counts.
    ExactAssignment,
    /// Exact minimum over all couplings via the transportation LP.
    Lp,
    /// Entropically regularized upper bound with a reported duality gap.
    Sinkhorn {
        /// Regularization strength; smaller values tighten the bound.
        reg: f64,
    },
}

/// A sparse coupling between two empirical measures with uniform
/// weights. Row sums equal the source weights and column sums the
/// target weights, within [`TransportPlan::marginal_tolerance`].
#[derive(Debug, Clone)]
pub struct TransportPlan {
    source: EmpiricalMeasure,
    target: EmpiricalMeasure,
    /// (source index, target index, mass).
    entries: Vec<(usize, usize, f64)>,
}

impl TransportPlan {
    fn new(
        source: EmpiricalMeasure,
        target: EmpiricalMeasure,
        entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        let plan = TransportPlan {
            source,
            target,
            entries,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn marginal_tolerance() -> f64 {
        PLAN_MARGINAL_TOL
    }

    pub fn source(&self) -> &EmpiricalMeasure {
        &self.source
    }

    pub fn target(&self) -> &EmpiricalMeasure {
        &self.target
    }

    /// Sparse entries as (source index, target index, mass).
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|&(_, _, w)| w).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut rows = vec![0.0; self.source.len()];
        for &(i, _, w) in &self.entries {
            rows[i] += w;
        }
        rows
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut cols = vec![0.0; self.target.len()];
        for &(_, j, w) in &self.entries {
            cols[j] += w;
        }
        cols
    }

    /// Checks nonnegativity, the uniform marginals, and unit total mass.
    pub fn validate(&self) -> Result<()> {
        if self
            .entries
            .iter()
            .any(|&(i, j, w)| i >= self.source.len() || j >= self.target.len() || w < 0.0)
        {
            return Err(Error::InvalidArgument(
                "coupling entry out of range or negative".into(),
            ));
        }
        let wa = self.source.weight();
        let wb = self.target.weight();
        for (i, r) in self.row_sums().iter().enumerate() {
            if (r - wa).abs() > PLAN_MARGINAL_TOL {
                return Err(Error::InvalidArgument(format!(
                    "coupling row {i} sums to {r}, expected {wa}"
                )));
            }
        }
        for (j, c) in self.col_sums().iter().enumerate() {
            if (c - wb).abs() > PLAN_MARGINAL_TOL {
                return Err(Error::InvalidArgument(format!(
                    "coupling column {j} sums to {c}, expected {wb}"
                )));
            }
        }
        let mass = self.total_mass();
        if (mass - 1.0).abs() > PLAN_MARGINAL_TOL * (self.source.len() + self.target.len()) as f64 {
            return Err(Error::InvalidArgument(format!(
                "coupling mass {mass} differs from 1"
            )));
        }
        Ok(())
    }
}

/// Outcome of a coupling-distance solve: the value, the coupling that
/// attains (or upper-bounds) it, and the duality gap when the solver is
/// approximate.
#[derive(Debug, Clone)]
pub struct Tl1Solution {
    pub value: f64,
    pub plan: TransportPlan,
    /// `Some` for the entropic solver: `value` exceeds the exact optimum
    /// by at most this much.
    pub duality_gap: Option<f64>,
}

fn pair_dims(field: &NodeField, measure: &EmpiricalMeasure) -> Result<(usize, usize)> {
    if field.len() != measure.len() {
        return Err(Error::MisalignedField(format!(
            "field has {} values for {} atoms",
            field.len(),
            measure.len()
        )));
    }
    Ok((measure.dim(), field.dim()))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Distance between two function-measure pairs: the infimum over
/// couplings of the transported sum of ground distance and value
/// discrepancy. See [`tl1_solve`] for the coupling itself.
pub fn tl1_distance(
    a: (&NodeField, &EmpiricalMeasure),
    b: (&NodeField, &EmpiricalMeasure),
    solver: Tl1Solver,
) -> Result<f64> {
    tl1_solve(a, b, solver).map(|s| s.value)
}

/// Solves the coupling problem behind [`tl1_distance`] and returns the
/// full solution.
pub fn tl1_solve(
    a: (&NodeField, &EmpiricalMeasure),
    b: (&NodeField, &EmpiricalMeasure),
    solver: Tl1Solver,
) -> Result<Tl1Solution> {
    let (dim_a, val_a) = pair_dims(a.0, a.1)?;
    let (dim_b, val_b) = pair_dims(b.0, b.1)?;
    if dim_a != dim_b {
        return Err(Error::InvalidArgument(format!(
            "ambient dimensions differ: {dim_a} vs {dim_b}"
        )));
    }
    if val_a != val_b {
        return Err(Error::MisalignedField(format!(
            "value dimensions differ: {val_a} vs {val_b}"
        )));
    }
    let m = a.1.len();
    let n = b.1.len();
    let cost = |i: usize, j: usize| {
        euclid(a.1.point(i), b.1.point(j)) + euclid(a.0.value(i), b.0.value(j))
    };
    match solver {
        Tl1Solver::ExactAssignment => {
            if m != n {
                return Err(Error::InvalidArgument(format!(
                    "exact assignment needs equal atom counts (got {m} and {n}); \
                     use the LP or entropic solver"
                )));
            }
            if n > EXACT_ASSIGNMENT_CAP {
                return Err(Error::InvalidArgument(format!(
                    "exact assignment capped at {EXACT_ASSIGNMENT_CAP} atoms (got {n})"
                )));
            }
            let (assignment, total) = solvers::min_sum_assignment(n, cost);
            let w = 1.0 / n as f64;
            let entries = assignment
                .iter()
                .enumerate()
                .map(|(i, &j)| (i, j, w))
                .collect();
            Ok(Tl1Solution {
                value: total / n as f64,
                plan: TransportPlan::new(a.1.clone(), b.1.clone(), entries)?,
                duality_gap: None,
            })
        }
        Tl1Solver::Lp => {
            let (units, total) = solvers::transportation_lp(m, n, cost)?;
            let unit = 1.0 / (m as f64 * n as f64);
            let entries = units
                .into_iter()
                .map(|(i, j, f)| (i, j, f as f64 * unit))
                .collect();
            Ok(Tl1Solution {
                value: total,
                plan: TransportPlan::new(a.1.clone(), b.1.clone(), entries)?,
                duality_gap: None,
            })
        }
        Tl1Solver::Sinkhorn { reg } => {
            let out = solvers::sinkhorn_coupling(
                m,
                n,
                cost,
                reg,
                SINKHORN_MAX_ITERS,
                SINKHORN_MARGINAL_TOL,
            )?;
            let entries = out
                .plan
                .iter()
                .enumerate()
                .filter(|&(_, &w)| w > 0.0)
                .map(|(k, &w)| (k / n, k % n, w))
                .collect();
            Ok(Tl1Solution {
                value: out.cost,
                plan: TransportPlan::new(a.1.clone(), b.1.clone(), entries)?,
                duality_gap: Some(out.duality_gap),
            })
        }
    }
}

/// Objective for [`build_transport_map`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapObjective {
    /// Minimize the largest displacement (bottleneck assignment); the
    /// right notion for sup-norm scaling diagnostics.
    MinSup,
    /// Minimize the summed displacement (linear assignment).
    MinSum,
}

/// An equal-size assignment pushing the source measure exactly onto the
/// target: atom `k` of the source is matched to atom `assignment[k]` of
/// the target, and `assignment` is a permutation.
#[derive(Debug, Clone)]
pub struct TransportMap {
    source: EmpiricalMeasure,
    target: EmpiricalMeasure,
    assignment: Vec<usize>,
    sup_displacement: f64,
}

impl TransportMap {
    pub fn source(&self) -> &EmpiricalMeasure {
        &self.source
    }

    pub fn target(&self) -> &EmpiricalMeasure {
        &self.target
    }

    /// Source index -> target index permutation.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Largest Euclidean displacement over source atoms.
    pub fn sup_displacement(&self) -> f64 {
        self.sup_displacement
    }

    /// Coordinates the `k`-th source atom is mapped to.
    pub fn mapped_point(&self, k: usize) -> &[f64] {
        self.target.point(self.assignment[k])
    }

    /// Displacement vector of the `k`-th source atom.
    pub fn displacement(&self, k: usize) -> Vec<f64> {
        self.mapped_point(k)
            .iter()
            .zip(self.source.point(k))
            .map(|(y, x)| y - x)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

/// Builds an equal-size transport map from a reference quantization onto
/// a sampled cloud under the requested objective.
pub fn build_transport_map(
    reference: &EmpiricalMeasure,
    cloud: &EmpiricalMeasure,
    objective: MapObjective,
) -> Result<TransportMap> {
    if reference.dim() != cloud.dim() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {} vs {}",
            reference.dim(),
            cloud.dim()
        )));
    }
    if reference.len() != cloud.len() || reference.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "transport maps need equal nonzero atom counts (got {} and {})",
            reference.len(),
            cloud.len()
        )));
    }
    let n = reference.len();
    let assignment = if reference.dim() == 1 {
        // On the line the monotone matching is optimal for both
        // objectives: uncrossing a crossed pair never increases either
        // the sum or the max of displacements.
        monotone_assignment_1d(reference.coords(), cloud.coords())
    } else {
        match objective {
            MapObjective::MinSum => {
                if n > EXACT_ASSIGNMENT_CAP {
                    return Err(Error::InvalidArgument(format!(
                        "summed-displacement assignment capped at {EXACT_ASSIGNMENT_CAP} atoms \
                         (got {n}); use the bottleneck objective at this size"
                    )));
                }
                let cost = |i: usize, j: usize| euclid(reference.point(i), cloud.point(j));
                solvers::min_sum_assignment(n, cost).0
            }
            MapObjective::MinSup => {
                solvers::min_sup_assignment(reference.dim(), reference.coords(), cloud.coords())?.0
            }
        }
    };
    let sup_displacement = (0..n)
        .map(|k| euclid(reference.point(k), cloud.point(assignment[k])))
        .fold(0.0f64, f64::max);
    Ok(TransportMap {
        source: reference.clone(),
        target: cloud.clone(),
        assignment,
        sup_displacement,
    })
}

/// Matches the k-th smallest source coordinate to the k-th smallest
/// target coordinate (ties broken by index).
fn monotone_assignment_1d(src: &[f64], tgt: &[f64]) -> Vec<usize> {
    let order = |coords: &[f64]| {
        let mut idx: Vec<usize> = (0..coords.len()).collect();
        idx.sort_by(|&a, &b| coords[a].partial_cmp(&coords[b]).unwrap().then(a.cmp(&b)));
        idx
    };
    let src_order = order(src);
    let tgt_order = order(tgt);
    let mut assignment = vec![0usize; src.len()];
    for (s, t) in src_order.into_iter().zip(tgt_order) {
        assignment[s] = t;
    }
    assignment
}

/// The three transport scaling ratios of a map at a given interaction
/// radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingDiagnostics {
    pub n: usize,
    pub eps: f64,
    /// n^{1/d} * sup-displacement / (log n)^{1/d}.
    pub sup_norm_ratio: f64,
    /// sup-displacement / eps.
    pub first_diff_ratio: f64,
    /// Largest centered second difference of the displacement field over
    /// the probe set, divided by eps^2.
    pub second_diff_ratio: f64,
}

/// Probe directions used by default for second differences: both signs
/// of every coordinate axis plus two unit diagonals (deduplicated, so
/// one dimension yields just the two signs).
pub fn default_probe_dirs(dim: usize) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for axis in 0..dim {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[axis] = sign;
            dirs.push(v);
        }
    }
    if dim > 1 {
        let s = 1.0 / (dim as f64).sqrt();
        dirs.push(vec![s; dim]);
        let mut alt = vec![s; dim];
        for (a, v) in alt.iter_mut().enumerate() {
            if a % 2 == 1 {
                *v = -s;
            }
        }
        dirs.push(alt);
    }
    dirs
}

/// Computes the scaling ratios of a transport map whose source is a grid
/// quantization. Second differences displace each interior source atom
/// by `±eps` along every probe direction, evaluate the displacement
/// field at the nearest grid atoms, and skip probes whose shifted points
/// leave the source's bounding box.
pub fn scaling_diagnostics(
    map: &TransportMap,
    eps: f64,
    probe_dirs: &[Vec<f64>],
) -> Result<ScalingDiagnostics> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "interaction radius must be positive and finite (got {eps})"
        )));
    }
    let n = map.len();
    let d = map.source().dim();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "scaling diagnostics need at least two atoms".into(),
        ));
    }
    for dir in probe_dirs {
        if dir.len() != d {
            return Err(Error::InvalidArgument(format!(
                "probe direction has {} components in dimension {d}",
                dir.len()
            )));
        }
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "probe direction must be a unit vector (norm {norm})"
            )));
        }
    }
    let spacing = map
        .source()
        .max_nearest_neighbor_spacing()
        .expect("n >= 2 atoms have a nearest-neighbor spacing");
    if eps < 2.0 * spacing {
        return Err(Error::Resolution(format!(
            "interaction radius {eps} is below twice the grid spacing {spacing}; \
             second differences are unresolved on this grid"
        )));
    }

    let nf = n as f64;
    let sup = map.sup_displacement();
    let sup_norm_ratio = nf.powf(1.0 / d as f64) * sup / nf.ln().powf(1.0 / d as f64);
    let first_diff_ratio = sup / eps;

    // Displacement field on the source atoms.
    let disp: Vec<f64> = (0..n).flat_map(|k| map.displacement(k)).collect();
    let lookup = crate::celllist::CellList::build(d, map.source().coords(), spacing.max(eps / 8.0))?;
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in map.source().iter_points() {
        for (x, (l, h)) in p.iter().zip(lo.iter_mut().zip(hi.iter_mut())) {
            *l = l.min(*x);
            *h = h.max(*x);
        }
    }
    let inside = |p: &[f64]| {
        p.iter()
            .zip(lo.iter().zip(&hi))
            .all(|(x, (l, h))| *x >= *l && *x <= *h)
    };

    let mut second = 0.0f64;
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    for k in 0..n {
        let x = map.source().point(k);
        for dir in probe_dirs {
            for a in 0..d {
                plus[a] = x[a] + eps * dir[a];
                minus[a] = x[a] - eps * dir[a];
            }
            if !inside(&plus) || !inside(&minus) {
                continue;
            }
            let (kp, _) = lookup.nearest(&plus).expect("nonempty grid");
            let (km, _) = lookup.nearest(&minus).expect("nonempty grid");
            let mut acc = 0.0;
            for a in 0..d {
                let dd = disp[kp * d + a] - 2.0 * disp[k * d + a] + disp[km * d + a];
                acc += dd * dd;
            }
            second = second.max(acc.sqrt() / (eps * eps));
        }
    }

    Ok(ScalingDiagnostics {
        n,
        eps,
        sup_norm_ratio,
        first_diff_ratio,
        second_diff_ratio: second,
    })
}

/// One size in a converging-pair trend check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePairRow {
    pub n: usize,
    /// Mean ground distance moved by the map.
    pub transport_cost: f64,
    /// Mean discrepancy between the field at a source atom and at its
    /// image.
    pub value_discrepancy: f64,
}

/// Report of [`tl1_converging_pair_check`].
#[derive(Debug, Clone)]
pub struct ConvergencePairReport {
    pub rows: Vec<ConvergencePairRow>,
    /// True when both sequences decrease by at least 2x from the first
    /// to the last size (a zero start requires a zero end).
    pub passed: bool,
}

/// Checks that vanishing transport cost drags the value discrepancy of a
/// fixed displacement field to zero along a sequence of maps from grid
/// quantizations onto sampled clouds.
pub fn tl1_converging_pair_check(
    u: &crate::continuum_tv::DisplacementField,
    clouds: &[EmpiricalMeasure],
    maps: &[TransportMap],
) -> Result<ConvergencePairReport> {
    if clouds.len() != maps.len() || clouds.is_empty() {
        return Err(Error::InvalidArgument(
            "need one map per cloud and at least one pair".into(),
        ));
    }
    let mut rows = Vec::with_capacity(maps.len());
    for (cloud, map) in clouds.iter().zip(maps) {
        if u.dim() != cloud.dim() {
            return Err(Error::MisalignedField(format!(
                "field dimension {} vs cloud dimension {}",
                u.dim(),
                cloud.dim()
            )));
        }
        if map.target().coords() != cloud.coords() {
            return Err(Error::InvalidArgument(
                "map target does not match its cloud".into(),
            ));
        }
        let n = map.len();
        let mut cost = 0.0;
        let mut discrepancy = 0.0;
        let mut ux = vec![0.0; u.dim()];
        let mut uy = vec![0.0; u.dim()];
        for k in 0..n {
            let x = map.source().point(k);
            let y = map.mapped_point(k);
            cost += euclid(x, y);
            u.evaluate_into(x, &mut ux);
            u.evaluate_into(y, &mut uy);
            discrepancy += euclid(&ux, &uy);
        }
        rows.push(ConvergencePairRow {
            n,
            transport_cost: cost / n as f64,
            value_discrepancy: discrepancy / n as f64,
        });
    }
    let halved = |first: f64, last: f64| {
        if first == 0.0 {
            last == 0.0
        } else {
            last <= first / 2.0
        }
    };
    let first = rows.first().expect("nonempty rows");
    let last = rows.last().expect("nonempty rows");
    let passed = rows.len() >= 2
        && halved(first.transport_cost, last.transport_cost)
        && halved(first.value_discrepancy, last.value_discrepancy);
    Ok(ConvergencePairReport { rows, passed })
}
