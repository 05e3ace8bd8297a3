//! One-dimensional sections of the nonlocal energy: slice geometry over
//! a domain, section energies along lines, a Monte Carlo check of the
//! direction-offset decomposition of the full energy, and a numerical
//! probe of the one-dimensional lower-bound inequality.

use rayon::prelude::*;

use crate::continuum_tv::DisplacementField;
use crate::domain_sampling::{Density, Domain};
use crate::graph_energy::gtv_expectation_oracle;
use crate::kernels::{sample_in_ball, Kernel};
use crate::quad::{ball_volume, shard_rng, McEstimate};
use crate::{Error, Result};

/// Composite midpoint nodes per section integral.
const SLICE_NODES: usize = 1024;
/// Offsets must be orthogonal to the direction within this tolerance
/// (scaled by the magnitudes involved).
const OFFSET_ORTHOGONALITY_TOL: f64 = 1e-12;
/// Shard count for the decomposition check's line sampling.
const SLICING_SHARDS: u64 = 128;
/// Budget split for the decomposition check, balancing the two standard
/// errors at matched cost: one sampled line costs about [`SLICE_NODES`]
/// integrand evaluations, so lines are drawn at `mc_nodes / 16`, while
/// pair samples are cheap and concentrated fields (a jump crossed by few
/// pairs) make the pair side the noisier one, so it draws `16 * mc_nodes`.
const NODES_PER_LINE: usize = 16;
/// Pair-sample oversampling factor for the direct side of the check.
const PAIR_OVERSAMPLE: usize = 16;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Geometry of one line `t -> offset + t * direction` through a domain:
/// the direction, an offset in the hyperplane orthogonal to it, and the
/// parameter interval where the line lies inside the domain (`None`
/// when the line misses it — the empty-slice sentinel).
#[derive(Debug, Clone)]
pub struct SliceSpec {
    dim: usize,
    direction: Vec<f64>,
    offset: Vec<f64>,
    interval: Option<(f64, f64)>,
}

impl SliceSpec {
    /// Builds the slice geometry for a line through `dom`. The offset
    /// must be orthogonal to the (nonzero) direction. Sections are
    /// computed analytically; for the supported convex domains they are
    /// single intervals.
    pub fn new(dom: &Domain, direction: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        let d = dom.dim();
        if direction.len() != d || offset.len() != d {
            return Err(Error::InvalidArgument(format!(
                "direction/offset have lengths {}/{} in dimension {d}",
                direction.len(),
                offset.len()
            )));
        }
        if direction.iter().chain(&offset).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "slice direction and offset must be finite".into(),
            ));
        }
        let xi_norm = norm(&direction);
        if xi_norm == 0.0 {
            return Err(Error::InvalidArgument(
                "slice direction must be nonzero".into(),
            ));
        }
        let residual = dot(&direction, &offset).abs();
        if residual > OFFSET_ORTHOGONALITY_TOL * (norm(&offset) * xi_norm).max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "offset is not orthogonal to the direction (inner product {residual:.3e})"
            )));
        }
        let interval = section_interval(dom, &offset, &direction);
        Ok(SliceSpec {
            dim: d,
            direction,
            offset,
            interval,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Parameter interval of the section, or `None` when the line
    /// misses the domain.
    pub fn interval(&self) -> Option<(f64, f64)> {
        self.interval
    }

    /// Writes `offset + t * direction` into `out`.
    pub fn point_at(&self, t: f64, out: &mut [f64]) {
        for ((o, xi), p) in self.offset.iter().zip(&self.direction).zip(out.iter_mut()) {
            *p = o + t * xi;
        }
    }

    /// The section with its right end pulled in by `eps`, so that both
    /// `t` and `t + eps` stay inside the domain; `None` when nothing
    /// remains.
    pub fn integration_interval(&self, eps: f64) -> Option<(f64, f64)> {
        let (a, b) = self.interval?;
        let b = b - eps;
        (b > a).then_some((a, b))
    }
}

/// The section of `dom` along `t -> y + t xi` as an open parameter
/// interval.
pub(crate) fn section_interval(dom: &Domain, y: &[f64], xi: &[f64]) -> Option<(f64, f64)> {
    match dom {
        Domain::Box { lo, hi } => {
            let mut t_lo = f64::NEG_INFINITY;
            let mut t_hi = f64::INFINITY;
            for a in 0..lo.len() {
                if xi[a] == 0.0 {
                    if y[a] <= lo[a] || y[a] >= hi[a] {
                        return None;
                    }
                    continue;
                }
                let (first, second) = ((lo[a] - y[a]) / xi[a], (hi[a] - y[a]) / xi[a]);
                let (first, second) = if first <= second {
                    (first, second)
                } else {
                    (second, first)
                };
                t_lo = t_lo.max(first);
                t_hi = t_hi.min(second);
            }
            (t_lo < t_hi).then_some((t_lo, t_hi))
        }
        Domain::Ball { center, radius } => {
            // |y - c + t xi|^2 < r^2 is a quadratic in t.
            let diff: Vec<f64> = y.iter().zip(center).map(|(yv, c)| yv - c).collect();
            let a = dot(xi, xi);
            let b = dot(&diff, xi);
            let c = dot(&diff, &diff) - radius * radius;
            let disc = b * b - a * c;
            if disc <= 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            Some(((-b - sq) / a, (-b + sq) / a))
        }
    }
}

/// A displacement field restricted to a line: `t -> u(y + t xi)`.
#[derive(Clone, Copy)]
pub struct SliceField<'a> {
    u: &'a DisplacementField,
    spec: &'a SliceSpec,
}

impl<'a> SliceField<'a> {
    pub fn value_dim(&self) -> usize {
        self.u.dim()
    }

    /// True when the underlying line misses the domain.
    pub fn is_empty(&self) -> bool {
        self.spec.interval().is_none()
    }

    /// Evaluates the field at parameter `t` into `out`.
    pub fn evaluate_into(&self, t: f64, out: &mut [f64]) {
        let mut p = [0.0f64; 3];
        let d = self.spec.dim();
        self.spec.point_at(t, &mut p[..d]);
        self.u.evaluate_into(&p[..d], out);
    }
}

/// Restricts a displacement field to a slice. An empty section is not
/// an error: the returned field reports it via [`SliceField::is_empty`].
pub fn slice_field<'a>(u: &'a DisplacementField, spec: &'a SliceSpec) -> Result<SliceField<'a>> {
    if u.dim() != spec.dim() {
        return Err(Error::MisalignedField(format!(
            "field dimension {} vs slice dimension {}",
            u.dim(),
            spec.dim()
        )));
    }
    Ok(SliceField { u, spec })
}

/// One-dimensional section energy
/// `(1/eps^2) * Int_I |(v(t+eps)-v(t)) . (T(t+eps)-T(t))| rho(t+eps) rho(t) dt`
/// by composite midpoint quadrature. An empty or reversed interval is
/// degenerate and contributes zero (the valid range is empty).
pub fn slice_energy_1d<V, T, R>(
    dim: usize,
    v: V,
    transport: T,
    rho_slice: R,
    interval: (f64, f64),
    eps: f64,
) -> Result<f64>
where
    V: Fn(f64, &mut [f64]),
    T: Fn(f64, &mut [f64]),
    R: Fn(f64) -> f64,
{
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "interaction radius must be positive and finite (got {eps})"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "slice values must have at least one component".into(),
        ));
    }
    let (a, b) = interval;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(
            "slice interval must be finite".into(),
        ));
    }
    if b <= a {
        return Ok(0.0);
    }
    let h = (b - a) / SLICE_NODES as f64;
    let mut v_lo = vec![0.0; dim];
    let mut v_hi = vec![0.0; dim];
    let mut t_lo = vec![0.0; dim];
    let mut t_hi = vec![0.0; dim];
    let mut acc = 0.0;
    for k in 0..SLICE_NODES {
        let t = a + (k as f64 + 0.5) * h;
        v(t, &mut v_lo);
        v(t + eps, &mut v_hi);
        transport(t, &mut t_lo);
        transport(t + eps, &mut t_hi);
        let mut inner = 0.0;
        for c in 0..dim {
            inner += (v_hi[c] - v_lo[c]) * (t_hi[c] - t_lo[c]);
        }
        acc += inner.abs() * rho_slice(t + eps) * rho_slice(t);
    }
    Ok(acc * h / (eps * eps))
}

/// Outcome of [`verify_slicing_identity`]: the pair-sampled energy
/// estimate, the line-sampled decomposition estimate, and their
/// relative disagreement.
#[derive(Debug, Clone, Copy)]
pub struct SlicingReport {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    pub lhs_std_error: f64,
    pub rhs_std_error: f64,
    /// Number of sampled lines behind `rhs`.
    pub lines: usize,
}

/// Checks the decomposition of the nonlocal energy into line sections:
/// the expectation of the graph energy (estimated by pair sampling)
/// must agree with the double integral over directions `xi` and offsets
/// `y` of the section energy weighted by `|xi| eta(xi)`, with the
/// identity transport along each line. The direction integral runs over
/// the kernel support ball, the offset integral over a hyperplane disk
/// large enough to cover every line meeting the domain; both use the
/// same master seed with disjoint shard streams.
pub fn verify_slicing_identity(
    u: &DisplacementField,
    dom: &Domain,
    rho: &Density,
    k: &Kernel,
    eps: f64,
    mc_nodes: usize,
    seed: u64,
) -> Result<SlicingReport> {
    let d = dom.dim();
    if u.dim() != d || k.dim() != d {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: domain {d}, field {}, kernel {}",
            u.dim(),
            k.dim()
        )));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "interaction radius must be positive and finite (got {eps})"
        )));
    }
    if mc_nodes == 0 {
        return Err(Error::InvalidArgument(
            "the check needs at least one sample node".into(),
        ));
    }

    let lhs = gtv_expectation_oracle(
        dom,
        rho,
        u,
        k,
        eps,
        mc_nodes.saturating_mul(PAIR_OVERSAMPLE),
        seed,
    )?;

    let lines = (mc_nodes / NODES_PER_LINE).max(1000);
    let radius = k.truncation_radius();
    let vol = ball_volume(d, radius);
    let (lo, hi) = dom.bounding_box();
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let half_diag = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| 0.5 * (h - l))
        .map(|e| e * e)
        .sum::<f64>()
        .sqrt();

    let per_shard = lines / SLICING_SHARDS as usize;
    let remainder = lines % SLICING_SHARDS as usize;
    let shard_sums: Vec<Result<(f64, f64, usize)>> = (0..SLICING_SHARDS)
        .into_par_iter()
        .map(|shard| {
            // Offset the shard index past the pair-sampling oracle's
            // streams so the two sides use independent randomness from
            // the same master seed.
            let mut rng = shard_rng(seed, 1_000 + shard);
            let count = per_shard + usize::from((shard as usize) < remainder);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut xi = vec![0.0; d];
            for _ in 0..count {
                let f = sample_line_energy(
                    u, dom, rho, k, eps, radius, vol, &center, half_diag, &mut rng, &mut xi,
                )?;
                sum += f;
                sum_sq += f * f;
            }
            Ok((sum, sum_sq, count))
        })
        .collect();
    let mut parts = Vec::with_capacity(SLICING_SHARDS as usize);
    for s in shard_sums {
        parts.push(s?);
    }
    let rhs = McEstimate::combine(&parts);

    let denom = lhs.value.abs().max(rhs.mean.abs()).max(1e-15);
    Ok(SlicingReport {
        lhs: lhs.value,
        rhs: rhs.mean,
        rel_err: (lhs.value - rhs.mean).abs() / denom,
        lhs_std_error: lhs.std_error,
        rhs_std_error: rhs.std_error,
        lines,
    })
}

/// One Monte Carlo sample of the line decomposition: draws a direction
/// in the kernel ball and an offset in the orthogonal disk, then
/// returns the importance-weighted section energy.
#[allow(clippy::too_many_arguments)]
fn sample_line_energy<Rng: rand::Rng>(
    u: &DisplacementField,
    dom: &Domain,
    rho: &Density,
    k: &Kernel,
    eps: f64,
    radius: f64,
    vol: f64,
    center: &[f64],
    half_diag: f64,
    rng: &mut Rng,
    xi: &mut [f64],
) -> Result<f64> {
    let d = xi.len();
    sample_in_ball(rng, radius, xi);
    let xi_norm = norm(xi);
    if xi_norm == 0.0 {
        return Ok(0.0);
    }
    let weight_kernel = k.evaluate(xi);
    if weight_kernel <= 0.0 {
        return Ok(0.0);
    }

    // Offset in the hyperplane orthogonal to xi, uniform over a disk
    // that covers the projection of the domain.
    let unit: Vec<f64> = xi.iter().map(|c| c / xi_norm).collect();
    let along = dot(center, &unit);
    let mut y: Vec<f64> = center
        .iter()
        .zip(&unit)
        .map(|(c, e)| c - along * e)
        .collect();
    let hyper_weight = match d {
        1 => 1.0,
        2 => {
            let e = [-unit[1], unit[0]];
            let s = rng.gen_range(-half_diag..half_diag);
            for a in 0..2 {
                y[a] += s * e[a];
            }
            2.0 * half_diag
        }
        3 => {
            // Orthonormal basis of the plane via the most-orthogonal
            // coordinate axis.
            let pivot = (0..3).min_by(|&i, &j| unit[i].abs().total_cmp(&unit[j].abs())).expect("d = 3");
            let mut e1 = [0.0; 3];
            e1[pivot] = 1.0;
            let proj = dot(&e1, &unit);
            for a in 0..3 {
                e1[a] -= proj * unit[a];
            }
            let n1 = norm(&e1);
            for v in &mut e1 {
                *v /= n1;
            }
            let e2 = [
                unit[1] * e1[2] - unit[2] * e1[1],
                unit[2] * e1[0] - unit[0] * e1[2],
                unit[0] * e1[1] - unit[1] * e1[0],
            ];
            let (s1, s2) = loop {
                let s1 = rng.gen_range(-half_diag..half_diag);
                let s2 = rng.gen_range(-half_diag..half_diag);
                if s1 * s1 + s2 * s2 <= half_diag * half_diag {
                    break (s1, s2);
                }
            };
            for a in 0..3 {
                y[a] += s1 * e1[a] + s2 * e2[a];
            }
            std::f64::consts::PI * half_diag * half_diag
        }
        _ => {
            return Err(Error::UnsupportedDomain(format!(
                "line sampling supports dimensions 1-3 (got {d})"
            )))
        }
    };

    let spec = SliceSpec::new(dom, xi.to_vec(), y)?;
    let Some(interval) = spec.integration_interval(eps) else {
        return Ok(0.0);
    };
    let sliced = slice_field(u, &spec)?;
    let mut rho_failure: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
    let rho_slice = |t: f64| {
        let mut p = [0.0f64; 3];
        spec.point_at(t, &mut p[..d]);
        match rho.evaluate(&p[..d]) {
            Ok(v) => v,
            Err(e) => {
                rho_failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let energy = slice_energy_1d(
        d,
        |t, out| sliced.evaluate_into(t, out),
        |t, out| spec.point_at(t, out),
        rho_slice,
        interval,
        eps,
    )?;
    if let Some(e) = rho_failure.get_mut().take() {
        return Err(e);
    }
    Ok(vol * hyper_weight * xi_norm * weight_kernel * energy)
}

/// One row of a lower-bound probe: the schedule index, the interaction
/// radius used, and the section energy of that sequence element.
#[derive(Debug, Clone, Copy)]
pub struct LiminfProbeRow {
    pub index: usize,
    pub eps: f64,
    pub value: f64,
}

/// Report of [`liminf_probe_1d`].
#[derive(Debug, Clone)]
pub struct LiminfProbeReport {
    pub rows: Vec<LiminfProbeRow>,
    /// `|(v(b) - v(a)) . xi|` for the limit function.
    pub lower_bound: f64,
    /// Minimum section energy over the second half of the schedule.
    pub tail_min: f64,
    pub passed: bool,
}

/// Probes the one-dimensional lower bound: along a schedule of sequence
/// elements and shrinking interaction radii, the section energies (with
/// identity transport and unit weight) must eventually dominate the
/// endpoint gap `|(v(b) - v(a)) . xi|` of the limit function, up to the
/// given tolerance. Report-only: `passed` summarizes the tail check.
pub fn liminf_probe_1d<G, L>(
    dim: usize,
    v_sequence: G,
    v_limit: L,
    xi: &[f64],
    interval: (f64, f64),
    eps_schedule: &[f64],
    tolerance: f64,
) -> Result<LiminfProbeReport>
where
    G: Fn(usize, f64, &mut [f64]),
    L: Fn(f64, &mut [f64]),
{
    if xi.len() != dim || dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "direction has {} components for value dimension {dim}",
            xi.len()
        )));
    }
    let xi_norm = norm(xi);
    if xi_norm == 0.0 || !xi_norm.is_finite() {
        return Err(Error::InvalidArgument(
            "probe direction must be nonzero and finite".into(),
        ));
    }
    let (a, b) = interval;
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "probe interval ({a}, {b}) is not a nonempty finite interval"
        )));
    }
    if eps_schedule.is_empty() || eps_schedule.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidArgument(
            "the radius schedule must be nonempty with positive entries".into(),
        ));
    }
    let unit: Vec<f64> = xi.iter().map(|c| c / xi_norm).collect();

    let mut va = vec![0.0; dim];
    let mut vb = vec![0.0; dim];
    v_limit(a, &mut va);
    v_limit(b, &mut vb);
    let lower_bound = (0..dim)
        .map(|c| (vb[c] - va[c]) * unit[c])
        .sum::<f64>()
        .abs();

    let mut rows = Vec::with_capacity(eps_schedule.len());
    for (index, &eps) in eps_schedule.iter().enumerate() {
        let value = slice_energy_1d(
            dim,
            |t, out| v_sequence(index, t, out),
            |t, out| {
                for (o, e) in out.iter_mut().zip(&unit) {
                    *o = t * e;
                }
            },
            |_| 1.0,
            (a, b - eps),
            eps,
        )?;
        rows.push(LiminfProbeRow { index, eps, value });
    }
    let tail = &rows[rows.len() / 2..];
    let tail_min = tail
        .iter()
        .map(|r| r.value)
        .fold(f64::INFINITY, f64::min);
    let passed = tail_min >= lower_bound - tolerance;
    Ok(LiminfProbeReport {
        rows,
        lower_bound,
        tail_min,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum_tv::{AffineMotion, HyperplaneSegment};

    fn unit_box(d: usize) -> Domain {
        Domain::unit_box(d)
    }

    #[test]
    fn axis_slice_evaluates_the_field_on_the_line() {
        let dom = unit_box(2);
        let spec = SliceSpec::new(&dom, vec![1.0, 0.0], vec![0.0, 0.5]).unwrap();
        assert_eq!(spec.interval(), Some((0.0, 1.0)));
        let u = DisplacementField::linear(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let sliced = slice_field(&u, &spec).unwrap();
        let mut out = [0.0; 2];
        sliced.evaluate_into(0.3, &mut out);
        assert_eq!(out, [0.3, 0.5]);
    }

    #[test]
    fn scaled_direction_rescales_the_section() {
        let dom = unit_box(2);
        let spec = SliceSpec::new(&dom, vec![2.0, 0.0], vec![0.0, 0.5]).unwrap();
        assert_eq!(spec.interval(), Some((0.0, 0.5)));
    }

    #[test]
    fn missing_lines_give_the_empty_sentinel() {
        let dom = unit_box(2);
        let spec = SliceSpec::new(&dom, vec![1.0, 0.0], vec![0.0, 1.5]).unwrap();
        assert!(spec.interval().is_none());
        let u = DisplacementField::linear(2, vec![0.0; 4]).unwrap();
        assert!(slice_field(&u, &spec).unwrap().is_empty());
    }

    #[test]
    fn ball_sections_come_from_the_quadratic() {
        let dom = Domain::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let spec = SliceSpec::new(&dom, vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let (a, b) = spec.interval().unwrap();
        assert!((a + 1.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
        let off = SliceSpec::new(&dom, vec![1.0, 0.0], vec![0.0, 0.6]).unwrap();
        let (a, b) = off.interval().unwrap();
        assert!((a + 0.8).abs() < 1e-12 && (b - 0.8).abs() < 1e-12);
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        let dom = unit_box(2);
        assert!(matches!(
            SliceSpec::new(&dom, vec![0.0, 0.0], vec![0.0, 0.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            SliceSpec::new(&dom, vec![1.0, 0.0], vec![0.1, 0.0]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn constant_slices_have_zero_energy() {
        let v = |_t: f64, out: &mut [f64]| out.copy_from_slice(&[0.7, -0.2]);
        let t_map = |t: f64, out: &mut [f64]| out.copy_from_slice(&[t, 0.0]);
        let e = slice_energy_1d(2, v, t_map, |_| 1.0, (0.0, 0.9), 0.1).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn linear_slices_integrate_the_slope() {
        for a in [1.0, -1.7, 3.0] {
            let v = move |t: f64, out: &mut [f64]| out.copy_from_slice(&[a * t, 0.0]);
            let t_map = |t: f64, out: &mut [f64]| out.copy_from_slice(&[t, 0.3]);
            let e = slice_energy_1d(2, v, t_map, |_| 1.0, (0.0, 0.9), 0.1).unwrap();
            assert!(
                (e - a.abs() * 0.9).abs() < 1e-12,
                "slope {a}: {e} vs {}",
                a.abs() * 0.9
            );
        }
        // 1-homogeneity in the amplitude.
        let energy = |a: f64| {
            let v = move |t: f64, out: &mut [f64]| out.copy_from_slice(&[a * t, 0.0]);
            let t_map = |t: f64, out: &mut [f64]| out.copy_from_slice(&[t, 0.3]);
            slice_energy_1d(2, v, t_map, |_| 1.0, (0.0, 0.9), 0.1).unwrap()
        };
        assert!((energy(3.0) - 3.0 * energy(1.0)).abs() < 1e-6);
    }

    #[test]
    fn unit_jump_energy_is_one() {
        let v = |t: f64, out: &mut [f64]| out[0] = if t < 0.5 { 0.0 } else { 1.0 };
        let t_map = |t: f64, out: &mut [f64]| out[0] = t;
        let e = slice_energy_1d(1, v, t_map, |_| 1.0, (0.0, 0.9), 0.1).unwrap();
        // Integrand is eps / eps^2 exactly on the straddling interval of
        // length eps, zero elsewhere; midpoint quadrature resolves the
        // window to one cell on each side.
        assert!((e - 1.0).abs() < 0.02, "got {e}");
    }

    #[test]
    fn degenerate_intervals_contribute_zero() {
        let v = |t: f64, out: &mut [f64]| out[0] = t;
        let t_map = |t: f64, out: &mut [f64]| out[0] = t;
        let e = slice_energy_1d(1, v, t_map, |_| 1.0, (0.5, 0.4), 0.2).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn lines_missing_a_jump_carry_zero_energy_exactly() {
        let seg = HyperplaneSegment::segment_2d(vec![0.5, 0.0], vec![1.0, 0.0], 0.0, 1.0).unwrap();
        let u = DisplacementField::piecewise_rigid(
            AffineMotion::new(vec![0.0, 0.0], vec![0.0; 4]).unwrap(),
            AffineMotion::new(vec![1.0, 0.0], vec![0.0; 4]).unwrap(),
            seg,
        )
        .unwrap();
        let dom = unit_box(2);
        // Vertical line at x = 0.25: parallel to the jump, never crosses.
        let spec = SliceSpec::new(&dom, vec![0.0, 1.0], vec![0.25, 0.0]).unwrap();
        let sliced = slice_field(&u, &spec).unwrap();
        let e = slice_energy_1d(
            2,
            |t, out| sliced.evaluate_into(t, out),
            |t, out| spec.point_at(t, out),
            |_| 1.0,
            spec.integration_interval(0.1).unwrap(),
            0.1,
        )
        .unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn zero_and_rigid_fields_balance_trivially() {
        let dom = unit_box(2);
        let rho = Density::uniform(&dom);
        let k = Kernel::indicator(2, 1.0, 1.0).unwrap();
        let zero = DisplacementField::linear(2, vec![0.0; 4]).unwrap();
        let report = verify_slicing_identity(&zero, &dom, &rho, &k, 0.1, 50_000, 7).unwrap();
        assert_eq!(report.lhs, 0.0);
        assert_eq!(report.rhs, 0.0);
        assert_eq!(report.rel_err, 0.0);

        // A pure rotation cancels exactly in floating point on the pair
        // side (each projection term pairs identical computed coordinate
        // differences with opposite signs); the line quadrature hits
        // arbitrary points, so its side is only near zero.
        let rotation = DisplacementField::rigid(vec![0.0, 0.0], vec![0.0, 1.0, -1.0, 0.0]).unwrap();
        let report = verify_slicing_identity(&rotation, &dom, &rho, &k, 0.1, 50_000, 7).unwrap();
        assert_eq!(report.lhs, 0.0);
        assert!(report.rhs.abs() < 1e-10, "rhs {}", report.rhs);

        // With a translation added, field evaluations round and both
        // sides sit at rounding level rather than exactly zero.
        let rigid =
            DisplacementField::rigid(vec![0.25, -0.5], vec![0.0, 1.0, -1.0, 0.0]).unwrap();
        let report = verify_slicing_identity(&rigid, &dom, &rho, &k, 0.1, 50_000, 7).unwrap();
        assert!(report.lhs.abs() < 1e-12, "lhs {}", report.lhs);
        assert!(report.rhs.abs() < 1e-10, "rhs {}", report.rhs);
    }

    #[test]
    fn decomposition_matches_for_a_linear_field() {
        let dom = unit_box(2);
        let rho = Density::uniform(&dom);
        let k = Kernel::indicator(2, 1.0, 1.0).unwrap();
        let u = DisplacementField::linear(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let report = verify_slicing_identity(&u, &dom, &rho, &k, 0.05, 200_000, 11).unwrap();
        assert!(
            report.rel_err <= 0.02,
            "lhs {} rhs {} rel_err {}",
            report.lhs,
            report.rhs,
            report.rel_err
        );
    }

    #[test]
    fn decomposition_matches_across_a_jump() {
        let dom = unit_box(2);
        let rho = Density::uniform(&dom);
        let k = Kernel::indicator(2, 1.0, 1.0).unwrap();
        let seg = HyperplaneSegment::segment_2d(vec![0.5, 0.0], vec![1.0, 0.0], 0.0, 1.0).unwrap();
        let u = DisplacementField::piecewise_rigid(
            AffineMotion::new(vec![0.0, 0.0], vec![0.0; 4]).unwrap(),
            AffineMotion::new(vec![1.0, 0.0], vec![0.0; 4]).unwrap(),
            seg,
        )
        .unwrap();
        let report = verify_slicing_identity(&u, &dom, &rho, &k, 0.1, 400_000, 5).unwrap();
        assert!(
            report.rel_err <= 0.02,
            "lhs {} rhs {} rel_err {}",
            report.lhs,
            report.rhs,
            report.rel_err
        );
    }

    #[test]
    fn decomposition_is_deterministic() {
        let dom = unit_box(2);
        let rho = Density::uniform(&dom);
        let k = Kernel::indicator(2, 1.0, 1.0).unwrap();
        let u = DisplacementField::linear(2, vec![1.0, 0.5, 0.0, 1.0]).unwrap();
        let a = verify_slicing_identity(&u, &dom, &rho, &k, 0.1, 30_000, 3).unwrap();
        let b = verify_slicing_identity(&u, &dom, &rho, &k, 0.1, 30_000, 3).unwrap();
        assert_eq!(a.lhs, b.lhs);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn liminf_probe_constant_sequence_is_trivial() {
        let report = liminf_probe_1d(
            1,
            |_n, _t, out: &mut [f64]| out[0] = 0.4,
            |_t, out: &mut [f64]| out[0] = 0.4,
            &[1.0],
            (0.0, 1.0),
            &[0.2, 0.1, 0.05],
            0.05,
        )
        .unwrap();
        assert_eq!(report.lower_bound, 0.0);
        assert_eq!(report.tail_min, 0.0);
        assert!(report.passed);
    }

    #[test]
    fn liminf_probe_oscillating_linear_sequence() {
        // v_n(t) = t + sin(2 pi n t)/n with n doubling along the
        // schedule; the sequence converges to t in L1 while the radii
        // shrink, and the tail must stay above the endpoint gap 1.
        let freq = |index: usize| (1u64 << (index + 3)) as f64;
        let report = liminf_probe_1d(
            1,
            move |index, t, out: &mut [f64]| {
                let n = freq(index);
                out[0] = t + (std::f64::consts::TAU * n * t).sin() / n;
            },
            |t, out: &mut [f64]| out[0] = t,
            &[1.0],
            (0.0, 1.0),
            &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0, 1.0 / 512.0],
            0.05,
        )
        .unwrap();
        assert!((report.lower_bound - 1.0).abs() < 1e-12);
        assert!(
            report.passed,
            "tail min {} vs bound {}",
            report.tail_min, report.lower_bound
        );
    }

    #[test]
    fn liminf_probe_step_sequence() {
        let report = liminf_probe_1d(
            1,
            |_n, t, out: &mut [f64]| out[0] = if t < 0.5 { 0.0 } else { 1.0 },
            |t, out: &mut [f64]| out[0] = if t < 0.5 { 0.0 } else { 1.0 },
            &[1.0],
            (0.0, 1.0),
            &[0.2, 0.1, 0.05, 0.025],
            0.05,
        )
        .unwrap();
        assert!((report.lower_bound - 1.0).abs() < 1e-15);
        assert!(
            report.passed,
            "tail min {} vs bound {}",
            report.tail_min, report.lower_bound
        );
    }
}
