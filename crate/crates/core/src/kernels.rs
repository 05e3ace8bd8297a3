//! Radial interaction kernels and the matrix norm they induce.
//!
//! A kernel is a radial profile `eta(t)` with `eta(0) > 0`, non-increasing,
//! and with finite second moment `int eta(x) |x|^2 dx`. Rescaling at scale
//! `eps` is `eta_eps(x) = eps^{-d} eta(|x|/eps)`. The induced norm on
//! symmetric matrices is
//!
//! ```text
//! phi_eta(A) = int_{R^d} eta(xi) |A xi . xi| dxi
//!            = (int_0^R eta(r) r^{d+1} dr) * (int_{S^{d-1}} |A w . w| dsigma(w)),
//! ```
//!
//! where the factorization uses `|A (r w) . (r w)| = r^2 |A w . w|`. Product
//! quadrature exploits it directly; the Monte Carlo path integrates over the
//! support ball and is used for d > 3 or on request.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::quad::{
    ball_volume, gauss_legendre_on, shard_rng, sphere_rule, sphere_surface, McEstimate,
    QuadResult, QuadratureSpec,
};
use crate::{Error, Result};

/// Relative tail mass below which a heavy-tailed profile is truncated.
const TAIL_TRUNCATION_REL: f64 = 1e-8;

/// Number of radii at which monotonicity of the profile is checked.
const MONOTONICITY_SAMPLES: usize = 1024;

/// A symmetric `d x d` matrix stored as its lower triangle.
///
/// Construction from a general matrix symmetrizes, so stored entries always
/// satisfy `a[i][j] == a[j][i]` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    // Row-major lower triangle: entry (i, j) with j <= i at i*(i+1)/2 + j.
    lower: Vec<f64>,
}

impl SymMatrix {
    pub fn zero(dim: usize) -> Self {
        SymMatrix {
            dim,
            lower: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            *m.entry_mut(i, i) = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zero(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            *m.entry_mut(i, i) = v;
        }
        m
    }

    /// Symmetric part of a general row-major `dim x dim` matrix.
    pub fn symmetric_part(rows: &[f64], dim: usize) -> Self {
        assert_eq!(rows.len(), dim * dim);
        let mut m = Self::zero(dim);
        for i in 0..dim {
            for j in 0..=i {
                *m.entry_mut(i, j) = 0.5 * (rows[i * dim + j] + rows[j * dim + i]);
            }
        }
        m
    }

    /// Symmetrized outer product `(a b^T + b a^T) / 2`.
    pub fn sym_outer(a: &[f64], b: &[f64]) -> Self {
        assert_eq!(a.len(), b.len());
        let dim = a.len();
        let mut m = Self::zero(dim);
        for i in 0..dim {
            for j in 0..=i {
                *m.entry_mut(i, j) = 0.5 * (a[i] * b[j] + a[j] * b[i]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.lower[r * (r + 1) / 2 + c]
    }

    fn entry_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        &mut self.lower[r * (r + 1) / 2 + c]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        *self.entry_mut(i, j) = v;
    }

    pub fn scaled(&self, t: f64) -> Self {
        SymMatrix {
            dim: self.dim,
            lower: self.lower.iter().map(|v| v * t).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            lower: self
                .lower
                .iter()
                .zip(&other.lower)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Quadratic form `A xi . xi`.
    ///
    /// Off-diagonal coefficients enter as `2 a_ij`, which equals the sum of
    /// the two mirror entries of any matrix that symmetrizes to `A`; the
    /// evaluation therefore agrees bit-for-bit with
    /// [`quadratic_form_general`] on the pre-symmetrized matrix.
    pub fn quadratic_form(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.dim);
        let mut acc = 0.0;
        for i in 0..self.dim {
            acc += self.get(i, i) * (xi[i] * xi[i]);
            for j in 0..i {
                acc += (2.0 * self.get(i, j)) * (xi[i] * xi[j]);
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.get(i, j);
                acc += v * v;
            }
        }
        acc.sqrt()
    }

    /// Largest absolute row sum (infinity norm); an alternative matrix norm
    /// used to check that the continuum energy does not depend on the norm
    /// chosen for the polar decomposition.
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Quadratic form `M xi . xi` for a general row-major matrix, evaluated
/// through the mirror-sum coefficients `m_ij + m_ji` so that it matches
/// [`SymMatrix::quadratic_form`] on the symmetric part exactly.
pub fn quadratic_form_general(rows: &[f64], dim: usize, xi: &[f64]) -> f64 {
    assert_eq!(rows.len(), dim * dim);
    let mut acc = 0.0;
    for i in 0..dim {
        acc += rows[i * dim + i] * (xi[i] * xi[i]);
        for j in 0..i {
            acc += (rows[i * dim + j] + rows[j * dim + i]) * (xi[i] * xi[j]);
        }
    }
    acc
}

/// Kernel shape tag.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelKind {
    /// `eta(t) = c` for `t < b`, `0` for `t >= b` (strict cutoff at `b`).
    Indicator { c: f64, b: f64 },
    /// Non-increasing step profile: value `steps[k].1` on
    /// `[steps[k-1].0, steps[k].0)`, zero beyond the last radius.
    PiecewiseConstant { steps: Vec<(f64, f64)> },
    Custom,
}

/// A radial interaction kernel on `R^d`.
#[derive(Clone)]
pub struct Kernel {
    dim: usize,
    kind: KernelKind,
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Declared support radius; `f64::INFINITY` for heavy tails.
    radius: f64,
    /// Radius actually used by integrals; differs from `radius` only for
    /// heavy-tailed profiles, where the tail beyond it carries less than
    /// `TAIL_TRUNCATION_REL` of the second moment.
    truncation_radius: f64,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("radius", &self.radius)
            .field("truncation_radius", &self.truncation_radius)
            .finish()
    }
}

impl Kernel {
    /// Constant-on-a-ball kernel: `eta(t) = c` for `t < b`, else 0.
    pub fn indicator(dim: usize, c: f64, b: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(c > 0.0) || !(b > 0.0) {
            return Err(Error::KernelConstraint(format!(
                "indicator kernel needs c > 0 and b > 0 (got c={c}, b={b})"
            )));
        }
        Ok(Kernel {
            dim,
            kind: KernelKind::Indicator { c, b },
            profile: Arc::new(move |t| if t < b { c } else { 0.0 }),
            radius: b,
            truncation_radius: b,
        })
    }

    /// Non-increasing step profile; `steps[k] = (radius_k, value_k)` means
    /// the profile takes `value_k` on `[radius_{k-1}, radius_k)`.
    pub fn piecewise_constant(dim: usize, steps: Vec<(f64, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if steps.is_empty() {
            return Err(Error::KernelConstraint("empty step list".into()));
        }
        let mut prev_r = 0.0;
        let mut prev_v = f64::INFINITY;
        for &(r, v) in &steps {
            if !(r > prev_r) {
                return Err(Error::KernelConstraint(format!(
                    "step radii must be strictly increasing and positive (got {r} after {prev_r})"
                )));
            }
            if !(v >= 0.0) || v > prev_v {
                return Err(Error::KernelConstraint(
                    "step values must be non-negative and non-increasing".into(),
                ));
            }
            prev_r = r;
            prev_v = v;
        }
        if !(steps[0].1 > 0.0) {
            return Err(Error::KernelConstraint(
                "profile must be positive at the origin".into(),
            ));
        }
        let radius = steps.last().unwrap().0;
        let table = steps.clone();
        Ok(Kernel {
            dim,
            kind: KernelKind::PiecewiseConstant { steps },
            profile: Arc::new(move |t| {
                for &(r, v) in &table {
                    if t < r {
                        return v;
                    }
                }
                0.0
            }),
            radius,
            truncation_radius: radius,
        })
    }

    /// Kernel from an arbitrary profile.
    ///
    /// The profile is validated numerically: positive and continuous at the
    /// origin, non-increasing on a sampled radius grid, and with a finite
    /// second moment. Heavy tails (`radius = f64::INFINITY`) are truncated
    /// where the remaining tail carries a negligible share of the second
    /// moment; the resulting truncation radius is recorded on the kernel.
    pub fn custom<F>(dim: usize, profile: F, radius: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::KernelConstraint(
                "support radius must be positive".into(),
            ));
        }
        let at_zero = profile(0.0);
        if !(at_zero > 0.0) || !at_zero.is_finite() {
            return Err(Error::KernelConstraint(format!(
                "profile must be positive and finite at the origin (got {at_zero})"
            )));
        }
        let near_scale = if radius.is_finite() { radius } else { 1.0 };
        for k in 4..=12 {
            let t = near_scale * 10f64.powi(-k);
            if (profile(t) - at_zero).abs() > 1e-6 * at_zero.max(1.0) && k >= 10 {
                return Err(Error::KernelConstraint(
                    "profile is not continuous at the origin".into(),
                ));
            }
        }

        let truncation_radius = if radius.is_finite() {
            radius
        } else {
            truncate_heavy_tail(dim, &profile)?
        };

        // Monotonicity on a sampled grid.
        let mut prev = at_zero;
        for k in 1..=MONOTONICITY_SAMPLES {
            let t = truncation_radius * k as f64 / MONOTONICITY_SAMPLES as f64;
            let v = profile(t);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::KernelConstraint(format!(
                    "profile must be finite and non-negative (got {v} at t={t})"
                )));
            }
            if v > prev * (1.0 + 1e-12) + 1e-12 {
                return Err(Error::KernelConstraint(format!(
                    "profile increases near t={t:.6}: {prev} -> {v}"
                )));
            }
            prev = v;
        }

        Ok(Kernel {
            dim,
            kind: KernelKind::Custom,
            profile: Arc::new(profile),
            radius,
            truncation_radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    /// Profile value at radius `t`.
    pub fn profile(&self, t: f64) -> f64 {
        (self.profile)(t)
    }

    /// Kernel value at a point: `eta(x) = profile(|x|)`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.profile)(norm(x))
    }

    /// Declared support radius (may be infinite).
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Radius used by integrals and neighbor searches; equals `radius` for
    /// compactly supported kernels.
    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    /// The rescaled kernel `eta_eps(x) = eps^{-d} eta(x/eps)`.
    pub fn rescale(&self, eps: f64) -> Result<ScaledKernel<'_>> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rescale needs eps > 0 (got {eps})"
            )));
        }
        Ok(ScaledKernel {
            kernel: self,
            eps,
            inv_scale: eps.powi(-(self.dim as i32)),
        })
    }

    /// `int_0^R eta(r) r^{d+1} dr`, the radial factor shared by the second
    /// moment and by `phi_eta`. Exact for indicator and step profiles.
    pub fn radial_moment_factor(&self, spec: &QuadratureSpec) -> QuadResult {
        let p = self.dim as i32 + 2;
        match &self.kind {
            KernelKind::Indicator { c, b } => QuadResult {
                value: c * b.powi(p) / p as f64,
                error_estimate: 0.0,
                nodes: 1,
            },
            KernelKind::PiecewiseConstant { steps } => {
                let mut total = 0.0;
                let mut prev = 0.0f64;
                for &(r, v) in steps {
                    total += v * (r.powi(p) - prev.powi(p)) / p as f64;
                    prev = r;
                }
                QuadResult {
                    value: total,
                    error_estimate: 0.0,
                    nodes: steps.len(),
                }
            }
            KernelKind::Custom => {
                let coarse = self.radial_gl(spec.radial_nodes / 2);
                let fine = self.radial_gl(spec.radial_nodes);
                QuadResult {
                    value: fine,
                    error_estimate: (fine - coarse).abs(),
                    nodes: spec.radial_nodes,
                }
            }
        }
    }

    fn radial_gl(&self, nodes: usize) -> f64 {
        let nodes = nodes.max(1);
        let (rs, ws) = gauss_legendre_on(nodes, 0.0, self.truncation_radius);
        let p = self.dim as i32 + 1;
        rs.iter()
            .zip(&ws)
            .map(|(r, w)| w * (self.profile)(*r) * r.powi(p))
            .sum()
    }
}

/// Evaluator for `eta_eps`; borrows the kernel it rescales.
#[derive(Debug, Clone, Copy)]
pub struct ScaledKernel<'a> {
    kernel: &'a Kernel,
    eps: f64,
    inv_scale: f64,
}

impl ScaledKernel<'_> {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `eta_eps(x)`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.evaluate_radius(norm(x))
    }

    /// `eta_eps` as a function of `|x|`.
    pub fn evaluate_radius(&self, r: f64) -> f64 {
        self.inv_scale * self.kernel.profile(r / self.eps)
    }

    /// Radius beyond which the rescaled kernel vanishes (or is truncated).
    pub fn support_radius(&self) -> f64 {
        self.kernel.truncation_radius * self.eps
    }
}

/// Precomputed product rule for `phi_eta`: radial factor plus sphere nodes.
///
/// Building the rule once and applying it to many matrices keeps volume
/// integrals of the continuum energy cheap, and guarantees that comparisons
/// between matrices share quadrature nodes exactly.
#[derive(Debug, Clone)]
pub struct PhiEtaRule {
    radial: QuadResult,
    dirs: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl PhiEtaRule {
    pub fn new(kernel: &Kernel, spec: &QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        if kernel.dim > 3 {
            return Err(Error::InvalidArgument(format!(
                "product rule for phi_eta requires d <= 3 (got d={}); use the Monte Carlo path",
                kernel.dim
            )));
        }
        let radial = kernel.radial_moment_factor(spec);
        let (dirs, weights) = sphere_rule(kernel.dim, spec)?;
        Ok(PhiEtaRule {
            radial,
            dirs,
            weights,
        })
    }

    pub fn node_count(&self) -> usize {
        self.dirs.len()
    }

    /// `phi_eta(A)` under this rule.
    pub fn apply(&self, a: &SymMatrix) -> f64 {
        self.radial.value * self.angular(a)
    }

    fn angular(&self, a: &SymMatrix) -> f64 {
        self.dirs
            .iter()
            .zip(&self.weights)
            .map(|(w, wt)| wt * a.quadratic_form(w).abs())
            .sum()
    }
}

/// `phi_eta(A) = int eta(xi) |A xi . xi| dxi` with an error estimate.
///
/// Product quadrature for `d <= 3`; deterministic-seed Monte Carlo over the
/// support ball otherwise or when forced. The integrand is Lipschitz but
/// kinked across the cone `{A xi . xi = 0}`, which both paths tolerate.
pub fn phi_eta_detailed(kernel: &Kernel, a: &SymMatrix, spec: &QuadratureSpec) -> Result<QuadResult> {
    spec.validate()?;
    if a.dim() != kernel.dim() {
        return Err(Error::InvalidArgument(format!(
            "matrix dimension {} does not match kernel dimension {}",
            a.dim(),
            kernel.dim()
        )));
    }
    if kernel.dim() <= 3 && !spec.force_monte_carlo {
        let fine = PhiEtaRule::new(kernel, spec)?;
        let coarse = PhiEtaRule::new(kernel, &spec.halved())?;
        let value = fine.apply(a);
        let error = (value - coarse.apply(a)).abs()
            + fine.radial.error_estimate * if fine.radial.value != 0.0 {
                value / fine.radial.value
            } else {
                0.0
            };
        Ok(QuadResult {
            value,
            error_estimate: error,
            nodes: fine.node_count(),
        })
    } else {
        phi_eta_monte_carlo(kernel, a, spec)
    }
}

/// `phi_eta(A)`; see [`phi_eta_detailed`] for the error estimate.
pub fn phi_eta(kernel: &Kernel, a: &SymMatrix, spec: &QuadratureSpec) -> Result<f64> {
    phi_eta_detailed(kernel, a, spec).map(|r| r.value)
}

/// Monte Carlo estimate of `phi_eta(A)` over the (possibly truncated)
/// support ball, deterministic given `spec.seed`. The reported error
/// estimate is three standard errors.
pub fn phi_eta_monte_carlo(
    kernel: &Kernel,
    a: &SymMatrix,
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    spec.validate()?;
    let d = kernel.dim();
    if a.dim() != d {
        return Err(Error::InvalidArgument(
            "matrix and kernel dimensions differ".into(),
        ));
    }
    let radius = kernel.truncation_radius();
    if !radius.is_finite() {
        return Err(Error::InfeasibleIntegral(
            "kernel support could not be truncated to a finite radius".into(),
        ));
    }
    let vol = ball_volume(d, radius);
    let mut rng = shard_rng(spec.seed, 0);
    let mut xi = vec![0.0; d];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..spec.mc_nodes {
        sample_in_ball(&mut rng, radius, &mut xi);
        let f = kernel.evaluate(&xi) * a.quadratic_form(&xi).abs();
        sum += f;
        sum_sq += f * f;
    }
    let est = McEstimate::from_sums(sum, sum_sq, spec.mc_nodes);
    Ok(QuadResult {
        value: vol * est.mean,
        error_estimate: 3.0 * vol * est.std_error,
        nodes: spec.mc_nodes,
    })
}

/// Uniform sample in the ball of the given radius, written into `out`.
pub(crate) fn sample_in_ball<R: Rng>(rng: &mut R, radius: f64, out: &mut [f64]) {
    let d = out.len();
    loop {
        // Gaussian direction, then a radius with the correct density.
        let mut norm_sq = 0.0;
        for v in out.iter_mut() {
            // Box-Muller from two uniforms.
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            *v = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            norm_sq += *v * *v;
        }
        if norm_sq > 0.0 {
            let u: f64 = rng.gen_range(0.0..1.0f64);
            let r = radius * u.powf(1.0 / d as f64) / norm_sq.sqrt();
            for v in out.iter_mut() {
                *v *= r;
            }
            return;
        }
    }
}

/// Second moment `int eta(x) |x|^2 dx`, or a divergence report when the
/// tail estimate fails to settle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentEstimate {
    Finite(QuadResult),
    Diverging { partial: f64, scanned_radius: f64 },
}

/// Second moment of the kernel: `|S^{d-1}| int_0^R eta(r) r^{d+1} dr`.
pub fn second_moment(kernel: &Kernel, spec: &QuadratureSpec) -> Result<MomentEstimate> {
    spec.validate()?;
    let radial = kernel.radial_moment_factor(spec);
    let s = sphere_surface(kernel.dim());
    Ok(MomentEstimate::Finite(QuadResult {
        value: s * radial.value,
        error_estimate: s * radial.error_estimate,
        nodes: radial.nodes,
    }))
}

/// Dyadic tail scan for heavy-tailed profiles. Returns the radius beyond
/// which the remaining second-moment mass is negligible, or a constraint
/// error when the scan keeps accumulating (second moment infinite).
fn truncate_heavy_tail<F>(dim: usize, profile: &F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let p = dim as i32 + 1;
    let seg = |a: f64, b: f64| -> f64 {
        let (rs, ws) = gauss_legendre_on(32, a, b);
        rs.iter()
            .zip(&ws)
            .map(|(r, w)| w * profile(*r) * r.powi(p))
            .sum()
    };
    let mut total = seg(0.0, 1.0);
    let mut hi = 1.0f64;
    for _ in 0..200 {
        let inc = seg(hi, 2.0 * hi);
        hi *= 2.0;
        if !inc.is_finite() || !total.is_finite() {
            return Err(Error::KernelConstraint(
                "second-moment integrand is not finite".into(),
            ));
        }
        if inc < TAIL_TRUNCATION_REL * total.max(f64::MIN_POSITIVE) {
            return Ok(hi);
        }
        total += inc;
    }
    Err(Error::KernelConstraint(format!(
        "second moment did not converge: partial {total:.6e} after scanning to radius {hi:.3e}"
    )))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
