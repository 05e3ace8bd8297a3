//! Bounded domains, probability densities on them, and point clouds.
//!
//! Densities carry explicit bounds `0 < alpha <= rho <= beta`; bounds are
//! checked at construction (on every quadrature node of the mass integral)
//! and on every evaluation, never silently clamped. Continuity of the
//! evaluator is a caller obligation that cannot be machine-checked.
//!
//! Random clouds are drawn i.i.d. by rejection against `beta * Uniform(D)`
//! and are bit-for-bit reproducible from their seed. `grid_reference`
//! provides the deterministic counterpart: an equal-mass stratified
//! quantization of the density used as the continuum proxy by the
//! transport module.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::celllist::CellList;
use crate::kernels::sample_in_ball;
use crate::quad::{gauss_legendre_on, shard_rng, sphere_rule, tensor_box_integral, QuadratureSpec};
use crate::{Error, Result};

/// Tolerance for accepting a density as a probability density.
const MASS_TOLERANCE: f64 = 1e-3;

/// Acceptance-rate floor for rejection sampling.
const ACCEPTANCE_FLOOR: f64 = 1e-4;

/// Proposals drawn before the acceptance rate is first inspected.
const ACCEPTANCE_WARMUP: usize = 200_000;

/// A bounded open domain in `R^d`, `d <= 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Domain {
    /// Axis-aligned open box `(lo_1, hi_1) x ... x (lo_d, hi_d)`.
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::UnsupportedDomain(
                "box corners must be nonempty and of equal dimension".into(),
            ));
        }
        if lo.len() > 3 {
            return Err(Error::UnsupportedDomain(format!(
                "dimension {} unsupported (1 through 3)",
                lo.len()
            )));
        }
        for (a, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !l.is_finite() || !h.is_finite() || !(l < h) {
                return Err(Error::UnsupportedDomain(format!(
                    "box needs lo < hi componentwise; axis {a} has [{l}, {h}]"
                )));
            }
        }
        Ok(Domain::Box { lo, hi })
    }

    /// The unit box `(0,1)^d`.
    pub fn unit_box(dim: usize) -> Self {
        Domain::new_box(vec![0.0; dim], vec![1.0; dim]).expect("unit box is valid")
    }

    /// Open ball of the given center and radius.
    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || center.len() > 3 {
            return Err(Error::UnsupportedDomain(format!(
                "dimension {} unsupported (1 through 3)",
                center.len()
            )));
        }
        if !(radius > 0.0) || !radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::UnsupportedDomain(
                "ball needs a finite center and positive radius".into(),
            ));
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lo, .. } => lo.len(),
            Domain::Ball { center, .. } => center.len(),
        }
    }

    /// Strict membership in the open set.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| l < v && v < h),
            Domain::Ball { center, radius } => {
                x.iter()
                    .zip(center)
                    .map(|(v, c)| (v - c) * (v - c))
                    .sum::<f64>()
                    < radius * radius
            }
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Box { lo, hi } => (lo.clone(), hi.clone()),
            Domain::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).product(),
            Domain::Ball { center, radius } => crate::quad::ball_volume(center.len(), *radius),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| (h - l) * (h - l))
                .sum::<f64>()
                .sqrt(),
            Domain::Ball { radius, .. } => 2.0 * radius,
        }
    }
}

/// Deterministic quadrature of `f` over the domain.
pub fn integrate_over<F: FnMut(&[f64]) -> f64>(
    dom: &Domain,
    spec: &QuadratureSpec,
    mut f: F,
) -> f64 {
    match dom {
        Domain::Box { lo, hi } => tensor_box_integral(lo, hi, spec.volume_nodes_per_axis, f),
        Domain::Ball { center, radius } => {
            let d = center.len();
            let (dirs, wts) = sphere_rule(d, spec).expect("domain dimension is 1..=3");
            let (rs, rws) = gauss_legendre_on(spec.polar_nodes, 0.0, *radius);
            let mut total = 0.0;
            let mut x = vec![0.0; d];
            for (r, rw) in rs.iter().zip(&rws) {
                let mut shell = 0.0;
                for (dir, w) in dirs.iter().zip(&wts) {
                    for a in 0..d {
                        x[a] = center[a] + r * dir[a];
                    }
                    shell += w * f(&x);
                }
                total += rw * r.powi(d as i32 - 1) * shell;
            }
            total
        }
    }
}

/// Shared, thread-safe pointwise evaluator backing a [`Density`].
type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A probability density on a domain with explicit bounds.
#[derive(Clone)]
pub struct Density {
    evaluator: DensityFn,
    alpha: f64,
    beta: f64,
    /// Mass of the raw evaluator over the domain, as estimated at
    /// construction.
    mass: f64,
    /// Multiplier applied to the raw evaluator; `1/mass` for probability
    /// densities, `1` in unnormalized mode.
    scale: f64,
}

impl std::fmt::Debug for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Density")
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("mass", &self.mass)
            .field("scale", &self.scale)
            .finish()
    }
}

impl Density {
    /// The uniform probability density `1/|D|`, exact (no quadrature).
    pub fn uniform(dom: &Domain) -> Density {
        let v = dom.volume();
        let inv = 1.0 / v;
        Density {
            evaluator: Arc::new(move |_| inv),
            alpha: inv,
            beta: inv,
            mass: 1.0,
            scale: 1.0,
        }
    }

    /// Probability density from an evaluator with declared bounds
    /// `0 < alpha <= rho <= beta`. The mass must come out within
    /// `1e-3` of 1; it is then rescaled to exactly 1. Bounds are
    /// checked at every quadrature node.
    pub fn new<F>(dom: &Domain, f: F, alpha: f64, beta: f64, spec: &QuadratureSpec) -> Result<Density>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let d = Self::build(dom, f, alpha, beta, spec)?;
        if (d.mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "density mass {} is further than {MASS_TOLERANCE} from 1; \
                 adjust the evaluator or use Density::unnormalized",
                d.mass
            )));
        }
        Ok(Density {
            scale: 1.0 / d.mass,
            ..d
        })
    }

    /// Density kept at its raw scale (mass may differ from 1); used for
    /// weight functions rather than probability sampling.
    pub fn unnormalized<F>(
        dom: &Domain,
        f: F,
        alpha: f64,
        beta: f64,
        spec: &QuadratureSpec,
    ) -> Result<Density>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::build(dom, f, alpha, beta, spec)
    }

    fn build<F>(dom: &Domain, f: F, alpha: f64, beta: f64, spec: &QuadratureSpec) -> Result<Density>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        spec.validate()?;
        if !(alpha > 0.0) || !(beta >= alpha) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "density bounds need 0 < alpha <= beta < inf (got alpha={alpha}, beta={beta})"
            )));
        }
        let mut violation: Option<(Vec<f64>, f64)> = None;
        let mass = integrate_over(dom, spec, |x| {
            let v = f(x);
            if (!(v >= alpha) || !(v <= beta)) && violation.is_none() {
                violation = Some((x.to_vec(), v));
            }
            v
        });
        if let Some((x, v)) = violation {
            return Err(Error::InvalidArgument(format!(
                "density value {v} at {x:?} violates declared bounds [{alpha}, {beta}]"
            )));
        }
        Ok(Density {
            evaluator: Arc::new(f),
            alpha,
            beta,
            mass,
            scale: 1.0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Mass of the raw evaluator as estimated at construction.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Raw evaluator value with the bound assertion, before rescaling.
    fn raw_checked(&self, x: &[f64]) -> Result<f64> {
        let v = (self.evaluator)(x);
        if !(v >= self.alpha) || !(v <= self.beta) {
            return Err(Error::InvalidArgument(format!(
                "density value {v} at {x:?} violates declared bounds [{}, {}]",
                self.alpha, self.beta
            )));
        }
        Ok(v)
    }

    /// Density value at `x` (normalized scale), with the bound assertion.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok(self.scale * self.raw_checked(x)?)
    }

    /// Effective bounds after normalization.
    pub fn scaled_bounds(&self) -> (f64, f64) {
        (self.scale * self.alpha, self.scale * self.beta)
    }
}

/// A uniformly weighted point cloud `(1/n) sum_i delta_{X_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    dim: usize,
    coords: Vec<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SidecarMeta {
    seed: Option<u64>,
    n: usize,
    dim: usize,
}

impl EmpiricalMeasure {
    pub fn from_points(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(
                "point buffer must hold at least one point and be a multiple of the dimension"
                    .into(),
            ));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "points must have finite coordinates".into(),
            ));
        }
        Ok(EmpiricalMeasure {
            dim,
            coords,
            seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Per-atom weight, `1/n`.
    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Largest nearest-neighbor distance over the atoms; a measure of the
    /// coarsest local spacing of the cloud. `None` for a single atom.
    pub fn max_nearest_neighbor_spacing(&self) -> Option<f64> {
        let n = self.len();
        if n < 2 {
            return None;
        }
        // Cell size ~ a few typical spacings so ring search stays local.
        let (lo, hi) = self.coord_bounds();
        let extent = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| h - l)
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let cell = 4.0 * extent / (n as f64).powf(1.0 / self.dim as f64).max(2.0);
        let cl = CellList::build(self.dim, &self.coords, cell).ok()?;
        let mut worst = 0.0f64;
        for i in 0..n {
            let p = self.point(i);
            // Nearest excluding self: look for the best among hits at
            // nonzero distance, falling back to a full scan when the atom
            // is isolated within its cell block.
            let mut best = f64::INFINITY;
            cl.for_each_within(p, cell, |j, d| {
                if j != i && d < best {
                    best = d;
                }
            });
            if !best.is_finite() {
                for j in 0..n {
                    if j != i {
                        let d = dist(self.point(j), p);
                        if d < best {
                            best = d;
                        }
                    }
                }
            }
            worst = worst.max(best);
        }
        Some(worst)
    }

    fn coord_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.iter_points() {
            for a in 0..self.dim {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }

    /// Writes the cloud as CSV (`x0,...,x{d-1}` header) plus a JSON
    /// sidecar `<path>.meta.json` recording seed, count, and dimension.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let header: Vec<String> = (0..self.dim).map(|a| format!("x{a}")).collect();
        let _ = writeln!(out, "{}", header.join(","));
        for p in self.iter_points() {
            let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        std::fs::write(path, out)?;
        let meta = SidecarMeta {
            seed: self.seed,
            n: self.len(),
            dim: self.dim,
        };
        let meta_path = sidecar_path(path);
        std::fs::write(
            meta_path,
            serde_json::to_string_pretty(&meta).expect("metadata serializes"),
        )?;
        Ok(())
    }

    /// Reads a cloud written by [`EmpiricalMeasure::write_csv`]; the seed
    /// is restored from the sidecar when present.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty point-cloud file".into()))?;
        let dim = header.split(',').count();
        let mut coords = Vec::new();
        for (row, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "row {row} has {} fields, expected {dim}",
                    fields.len()
                )));
            }
            for f in fields {
                coords.push(f.trim().parse::<f64>().map_err(|e| {
                    Error::InvalidArgument(format!("row {row}: bad number {f:?}: {e}"))
                })?);
            }
        }
        let mut m = EmpiricalMeasure::from_points(dim, coords)?;
        if let Ok(meta_text) = std::fs::read_to_string(sidecar_path(path)) {
            if let Ok(meta) = serde_json::from_str::<SidecarMeta>(&meta_text) {
                m.seed = meta.seed;
            }
        }
        Ok(m)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".meta.json");
    std::path::PathBuf::from(s)
}

/// Draws `n` i.i.d. points from the density by rejection sampling;
/// bit-for-bit reproducible from the seed.
pub fn sample(dom: &Domain, rho: &Density, n: usize, seed: u64) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    let d = dom.dim();
    let mut rng = shard_rng(seed, 0);
    let mut coords = Vec::with_capacity(n * d);
    let mut proposal = vec![0.0; d];
    let mut accepted = 0usize;
    let mut proposals = 0usize;
    let (lo, hi) = dom.bounding_box();
    while accepted < n {
        match dom {
            Domain::Box { .. } => {
                for a in 0..d {
                    proposal[a] = rng.gen_range(lo[a]..hi[a]);
                }
            }
            Domain::Ball { center, radius } => {
                sample_in_ball(&mut rng, *radius, &mut proposal);
                for a in 0..d {
                    proposal[a] += center[a];
                }
            }
        }
        proposals += 1;
        let accept: f64 = rng.gen_range(0.0..1.0);
        let v = rho.raw_checked(&proposal)?;
        if accept * rho.beta() < v {
            coords.extend_from_slice(&proposal);
            accepted += 1;
        }
        if proposals >= ACCEPTANCE_WARMUP && proposals.is_multiple_of(65_536) {
            let rate = accepted as f64 / proposals as f64;
            if rate < ACCEPTANCE_FLOOR {
                return Err(Error::PathologicalDensity {
                    rate,
                    floor: ACCEPTANCE_FLOOR,
                    proposals: proposals as u64,
                });
            }
        }
    }
    Ok(EmpiricalMeasure {
        dim: d,
        coords,
        seed: Some(seed),
    })
}

/// Draws one point from the density into `buf` by rejection sampling with
/// the caller's RNG; used by Monte Carlo loops that manage their own
/// seeding. Gives up (pathological-density error) after a hard cap of
/// proposals.
pub(crate) fn rejection_draw<R: Rng>(
    dom: &Domain,
    rho: &Density,
    rng: &mut R,
    buf: &mut [f64],
) -> Result<()> {
    let d = dom.dim();
    let (lo, hi) = dom.bounding_box();
    const CAP: usize = 10_000_000;
    for attempt in 1..=CAP {
        match dom {
            Domain::Box { .. } => {
                for a in 0..d {
                    buf[a] = rng.gen_range(lo[a]..hi[a]);
                }
            }
            Domain::Ball { center, radius } => {
                sample_in_ball(rng, *radius, buf);
                for a in 0..d {
                    buf[a] += center[a];
                }
            }
        }
        let accept: f64 = rng.gen_range(0.0..1.0);
        let v = rho.raw_checked(buf)?;
        if accept * rho.beta() < v {
            return Ok(());
        }
        if attempt == CAP {
            break;
        }
    }
    Err(Error::PathologicalDensity {
        rate: 0.0,
        floor: ACCEPTANCE_FLOOR,
        proposals: CAP as u64,
    })
}

/// One cell of the equal-mass stratification behind [`grid_reference`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl GridCell {
    pub fn max_extent(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max)
    }
}

/// Deterministic `n`-point quantization of the density on a box domain:
/// recursive equal-mass bisection along the longest axis, one point per
/// cell at the density-weighted centroid.
pub fn grid_reference(dom: &Domain, rho: &Density, n: usize) -> Result<EmpiricalMeasure> {
    grid_reference_with_cells(dom, rho, n).map(|(m, _)| m)
}

/// [`grid_reference`] plus the cells of the stratification (in the same
/// order as the points).
pub fn grid_reference_with_cells(
    dom: &Domain,
    rho: &Density,
    n: usize,
) -> Result<(EmpiricalMeasure, Vec<GridCell>)> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "quantization size must be >= 1".into(),
        ));
    }
    let (lo, hi) = match dom {
        Domain::Box { lo, hi } => (lo.clone(), hi.clone()),
        Domain::Ball { .. } => {
            return Err(Error::UnsupportedDomain(
                "grid_reference supports box domains only".into(),
            ))
        }
    };
    let d = dom.dim();
    // Constant densities (the common large-n case) admit analytic splits
    // and centroids; general densities go through quadrature + bisection.
    let constant = rho.alpha() == rho.beta();
    let spec = QuadratureSpec {
        volume_nodes_per_axis: 24,
        ..QuadratureSpec::default()
    };
    let mut points = Vec::with_capacity(n * d);
    let mut cells = Vec::with_capacity(n);
    // Depth-first, left-before-right, so leaves come out in a canonical
    // order (ascending along each split axis).
    let mut stack = vec![(lo, hi, n)];
    while let Some((clo, chi, count)) = stack.pop() {
        if count == 1 {
            let mut centroid = vec![0.0; d];
            if constant {
                for a in 0..d {
                    centroid[a] = 0.5 * (clo[a] + chi[a]);
                }
            } else {
                let mass = tensor_box_integral(&clo, &chi, spec.volume_nodes_per_axis, |x| {
                    rho.evaluate(x).unwrap_or(f64::NAN)
                });
                if !mass.is_finite() {
                    return Err(Error::InvalidArgument(
                        "density evaluation failed inside a quantization cell".into(),
                    ));
                }
                for a in 0..d {
                    let first =
                        tensor_box_integral(&clo, &chi, spec.volume_nodes_per_axis, |x| {
                            x[a] * rho.evaluate(x).unwrap_or(f64::NAN)
                        });
                    centroid[a] = first / mass;
                }
            }
            points.extend_from_slice(&centroid);
            cells.push(GridCell { lo: clo, hi: chi });
            continue;
        }
        let axis = (0..d)
            .max_by(|&a, &b| {
                (chi[a] - clo[a])
                    .partial_cmp(&(chi[b] - clo[b]))
                    .expect("finite extents")
            })
            .expect("dimension >= 1");
        let left_count = count / 2;
        let frac = left_count as f64 / count as f64;
        let split = if constant {
            clo[axis] + frac * (chi[axis] - clo[axis])
        } else {
            split_coordinate(&clo, &chi, axis, frac, rho, &spec)?
        };
        let mut left_hi = chi.clone();
        left_hi[axis] = split;
        let mut right_lo = clo.clone();
        right_lo[axis] = split;
        // Push right first so the left child is processed first (LIFO).
        stack.push((right_lo, chi, count - left_count));
        stack.push((clo, left_hi, left_count));
    }
    let measure = EmpiricalMeasure {
        dim: d,
        coords: points,
        seed: None,
    };
    Ok((measure, cells))
}

/// Coordinate `s` on `axis` where the sub-box `{x_axis < s}` holds the
/// fraction `frac` of the cell's density mass; bisection on the monotone
/// mass function.
fn split_coordinate(
    lo: &[f64],
    hi: &[f64],
    axis: usize,
    frac: f64,
    rho: &Density,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let total = tensor_box_integral(lo, hi, spec.volume_nodes_per_axis, |x| {
        rho.evaluate(x).unwrap_or(f64::NAN)
    });
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cell mass {total} is not positive; cannot split"
        )));
    }
    let target = frac * total;
    let mut a = lo[axis];
    let mut b = hi[axis];
    let mass_left = |s: f64| -> f64 {
        let mut sub_hi = hi.to_vec();
        sub_hi[axis] = s;
        tensor_box_integral(lo, &sub_hi, spec.volume_nodes_per_axis, |x| {
            rho.evaluate(x).unwrap_or(f64::NAN)
        })
    };
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        if mass_left(mid) < target {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-14 * (hi[axis] - lo[axis]) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
