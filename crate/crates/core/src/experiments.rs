//! Convergence-study orchestration: validated experiment
//! configurations, study execution over an (n, seed) grid comparing the
//! graph energy of sampled clouds against its continuum target, rate
//! fitting, and report files (CSV tables and a static SVG plot).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::continuum_tv::{
    tv_eta, AffineMotion, ContinuumTVResult, DisplacementField, HyperplaneSegment,
};
use crate::domain_sampling::{sample, Density, Domain};
use crate::graph_energy::{gtv_celllist, gtv_celllist_restricted, NodeField};
use crate::kernels::Kernel;
use crate::quad::QuadratureSpec;
use crate::slicing::section_interval;
use crate::transport::ScalingDiagnostics;
use crate::{Error, Result};

/// Bound on max/min of the locality ratio over a schedule; growth past
/// this spread marks an interaction scale shrinking too fast for the
/// graph energy to see enough neighbors.
const RATIO_SPREAD_CAP: f64 = 10.0;
/// Power-law rules are validated on the schedule extended dyadically by
/// this many doublings past the largest n, so that asymptotic blow-up
/// is caught even when the configured range is short.
const RATIO_EXTENSION_DOUBLINGS: u32 = 20;
/// Slack factor for the monotone-ratio test (absorbs rounding in the
/// ratio evaluations).
const RATIO_MONOTONE_SLACK: f64 = 1e-9;
/// Continuum values at or below this floor switch the relative error to
/// the absolute convention.
const REL_ERR_FLOOR: f64 = 1e-15;
/// Environment variable capping the study worker pool size.
pub const THREADS_ENV: &str = "BDGRAPHTV_THREADS";

/// Rule producing the interaction radius for each sample size.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsRule {
    /// `eps(n) = c * ((ln n) / n)^exponent`.
    PowerLaw { c: f64, exponent: f64 },
    /// One radius per schedule entry, in order.
    Explicit(Vec<f64>),
}

impl EpsRule {
    fn eps_at(&self, index: usize, n: u64) -> f64 {
        match self {
            EpsRule::PowerLaw { c, exponent } => {
                let nf = n as f64;
                c * (nf.ln() / nf).powf(*exponent)
            }
            EpsRule::Explicit(values) => values[index],
        }
    }
}

/// `(ln n)^(1/d) n^(-1/d) eps^(-2)`: the quantity that must stay
/// bounded along an admissible schedule. It compares the interaction
/// volume to the scale on which empirical and continuum measures agree.
fn locality_ratio(dim: usize, n: f64, eps: f64) -> f64 {
    let inv_d = 1.0 / dim as f64;
    n.ln().powf(inv_d) * n.powf(-inv_d) / (eps * eps)
}

/// A fully validated study description. Construction checks dimensional
/// consistency, the dyadic sample schedule, and the admissibility of
/// the interaction-radius rule.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    domain: Domain,
    density: Density,
    kernel: Kernel,
    field: DisplacementField,
    n_schedule: Vec<usize>,
    eps_rule: EpsRule,
    seeds: Vec<u64>,
    outputs: PathBuf,
}

impl ExperimentConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        domain: Domain,
        density: Density,
        kernel: Kernel,
        field: DisplacementField,
        n_schedule: Vec<usize>,
        eps_rule: EpsRule,
        seeds: Vec<u64>,
        outputs: PathBuf,
    ) -> Result<Self> {
        let d = domain.dim();
        if kernel.dim() != d || field.dim() != d {
            return Err(Error::Config(format!(
                "dimension mismatch: domain {d}, kernel {}, field {}",
                kernel.dim(),
                field.dim()
            )));
        }
        if n_schedule.is_empty() {
            return Err(Error::Config("the sample schedule is empty".into()));
        }
        for &n in &n_schedule {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::Config(format!(
                    "sample sizes must be dyadic (powers of two, at least 2); got {n}"
                )));
            }
        }
        if !n_schedule.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "the sample schedule must be strictly increasing".into(),
            ));
        }
        if seeds.is_empty() {
            return Err(Error::Config("the seed list is empty".into()));
        }
        match &eps_rule {
            EpsRule::PowerLaw { c, exponent } => {
                if !(*c > 0.0) || !c.is_finite() || !exponent.is_finite() {
                    return Err(Error::Config(format!(
                        "power-law radius rule needs a positive finite prefactor and a \
                         finite exponent (got c = {c}, exponent = {exponent})"
                    )));
                }
            }
            EpsRule::Explicit(values) => {
                if values.len() != n_schedule.len() {
                    return Err(Error::Config(format!(
                        "explicit radius list has {} entries for {} sample sizes",
                        values.len(),
                        n_schedule.len()
                    )));
                }
                if values.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
                    return Err(Error::Config(
                        "explicit radii must be positive and finite".into(),
                    ));
                }
            }
        }
        validate_locality(d, &n_schedule, &eps_rule)?;
        Ok(ExperimentConfig {
            domain,
            density,
            kernel,
            field,
            n_schedule,
            eps_rule,
            seeds,
            outputs,
        })
    }

    /// Parses and validates a TOML study description (see the README
    /// for the schema).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        raw.build()
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn field(&self) -> &DisplacementField {
        &self.field
    }

    pub fn n_schedule(&self) -> &[usize] {
        &self.n_schedule
    }

    pub fn eps_rule(&self) -> &EpsRule {
        &self.eps_rule
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn outputs(&self) -> &Path {
        &self.outputs
    }

    /// The `(n, eps)` pairs of the study, in schedule order.
    pub fn eps_schedule(&self) -> Vec<(usize, f64)> {
        self.n_schedule
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, self.eps_rule.eps_at(i, n as u64)))
            .collect()
    }
}

/// Rejects radius rules whose locality ratio blows up along the
/// schedule. The ratio may decrease freely (larger radii only smooth
/// more); growth is capped at [`RATIO_SPREAD_CAP`]. Power laws are
/// probed beyond the configured range since their ratio trend is
/// determined by the rule, not the range.
fn validate_locality(dim: usize, n_schedule: &[usize], rule: &EpsRule) -> Result<()> {
    let mut points: Vec<(u64, f64)> = n_schedule
        .iter()
        .enumerate()
        .map(|(i, &n)| (n as u64, rule.eps_at(i, n as u64)))
        .collect();
    if let EpsRule::PowerLaw { .. } = rule {
        let n_max = *n_schedule.last().expect("schedule checked nonempty") as u64;
        for k in 1..=RATIO_EXTENSION_DOUBLINGS {
            let n = n_max << k;
            points.push((n, rule.eps_at(usize::MAX, n)));
        }
    }
    let ratios: Vec<f64> = points
        .iter()
        .map(|&(n, eps)| locality_ratio(dim, n as f64, eps))
        .collect();
    if ratios.iter().any(|r| !r.is_finite() || !(*r > 0.0)) {
        return Err(Error::Config(
            "locality ratio is not finite and positive over the schedule".into(),
        ));
    }
    let non_increasing = ratios
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + RATIO_MONOTONE_SLACK));
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max / min;
    if non_increasing || spread <= RATIO_SPREAD_CAP {
        return Ok(());
    }
    let (n_first, _) = points[0];
    let (n_last, _) = *points.last().expect("nonempty");
    Err(Error::Config(format!(
        "interaction-radius rule shrinks too fast: the locality ratio \
         (ln n)^(1/d) n^(-1/d) eps^(-2) must stay bounded, but it rises from \
         {:.4} at n = {n_first} to {:.4} at n = {n_last} \
         (spread {spread:.2} exceeds the cap {RATIO_SPREAD_CAP})",
        ratios[0],
        ratios[ratios.len() - 1],
    )))
}

// ---------------------------------------------------------------------------
// Raw (serde) layer for the TOML schema.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: RawDomain,
    density: RawDensity,
    kernel: RawKernel,
    field: RawField,
    n_schedule: Vec<u64>,
    eps_rule: RawEpsRule,
    seeds: Vec<u64>,
    outputs: PathBuf,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawDomain {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawDensity {
    Uniform,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawKernel {
    Indicator { c: f64, b: f64 },
    PiecewiseConstant { steps: Vec<(f64, f64)> },
}

#[derive(Deserialize)]
struct RawMotion {
    translation: Vec<f64>,
    matrix: Vec<f64>,
}

#[derive(Deserialize)]
struct RawJump {
    point: Vec<f64>,
    normal: Vec<f64>,
    t_range: Option<(f64, f64)>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawField {
    Linear {
        matrix: Vec<f64>,
    },
    Affine {
        translation: Vec<f64>,
        matrix: Vec<f64>,
    },
    Rigid {
        translation: Vec<f64>,
        skew: Vec<f64>,
    },
    PiecewiseRigid {
        minus: RawMotion,
        plus: RawMotion,
        jump: RawJump,
    },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawEpsRule {
    PowerLaw { c: f64, exponent: f64 },
    Explicit { values: Vec<f64> },
}

impl RawConfig {
    fn build(self) -> Result<ExperimentConfig> {
        let domain = match self.domain {
            RawDomain::Box { lo, hi } => Domain::new_box(lo, hi)?,
            RawDomain::Ball { center, radius } => Domain::new_ball(center, radius)?,
        };
        let d = domain.dim();
        let density = match self.density {
            RawDensity::Uniform => Density::uniform(&domain),
        };
        let kernel = match self.kernel {
            RawKernel::Indicator { c, b } => Kernel::indicator(d, c, b)?,
            RawKernel::PiecewiseConstant { steps } => Kernel::piecewise_constant(d, steps)?,
        };
        let field = match self.field {
            RawField::Linear { matrix } => DisplacementField::linear(d, matrix)?,
            RawField::Affine {
                translation,
                matrix,
            } => DisplacementField::affine(translation, matrix)?,
            RawField::Rigid { translation, skew } => DisplacementField::rigid(translation, skew)?,
            RawField::PiecewiseRigid { minus, plus, jump } => {
                let surface = match jump.point.len() {
                    1 => HyperplaneSegment::point_1d(jump.point[0]),
                    2 => {
                        let (t_lo, t_hi) = jump.t_range.ok_or_else(|| {
                            Error::Config(
                                "two-dimensional jump surfaces need a t_range".into(),
                            )
                        })?;
                        HyperplaneSegment::segment_2d(jump.point, jump.normal, t_lo, t_hi)?
                    }
                    other => {
                        return Err(Error::Config(format!(
                            "jump surfaces are supported in 1 and 2 dimensions (got {other})"
                        )))
                    }
                };
                DisplacementField::piecewise_rigid(
                    AffineMotion::new(minus.translation, minus.matrix)?,
                    AffineMotion::new(plus.translation, plus.matrix)?,
                    surface,
                )?
            }
        };
        let n_schedule = self
            .n_schedule
            .iter()
            .map(|&n| {
                usize::try_from(n)
                    .map_err(|_| Error::Config(format!("sample size {n} does not fit usize")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let eps_rule = match self.eps_rule {
            RawEpsRule::PowerLaw { c, exponent } => EpsRule::PowerLaw { c, exponent },
            RawEpsRule::Explicit { values } => EpsRule::Explicit(values),
        };
        ExperimentConfig::new(
            domain,
            density,
            kernel,
            field,
            n_schedule,
            eps_rule,
            self.seeds,
            self.outputs,
        )
    }
}

// ---------------------------------------------------------------------------
// Study execution.

/// One evaluated (n, seed) cell of the study grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub gtv_value: f64,
    pub tv_eta_value: f64,
    /// `|gtv - tv| / tv` when the continuum value is positive; the
    /// absolute energy when it vanishes (see `absolute_convention`).
    pub rel_err: f64,
    /// True when the continuum target was at the zero floor and
    /// `rel_err` is the absolute energy instead of a quotient.
    pub absolute_convention: bool,
    pub wallclock_ms: u64,
}

/// A grid cell whose evaluation failed; the study records it and moves
/// on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowFailure {
    pub n: usize,
    pub seed: u64,
    pub message: String,
}

/// Study output: rows comparing the full-domain graph energy against the
/// full-domain continuum target; interior rows comparing the
/// interior-restricted graph energy (outer node in the shrunken domain,
/// so its kernel support is never clipped) against the shrunken-domain
/// target, which separates boundary bias from stochastic error; and any
/// failures. Both row vectors are in (schedule, seed) order.
#[derive(Debug, Clone, Default)]
pub struct StudyTable {
    pub rows: Vec<ConvergenceRow>,
    pub interior_rows: Vec<ConvergenceRow>,
    pub failures: Vec<RowFailure>,
}

fn relative_error(gtv: f64, tv: f64) -> (f64, bool) {
    if tv > REL_ERR_FLOOR {
        ((gtv - tv).abs() / tv, false)
    } else {
        (gtv.abs(), true)
    }
}

/// Builds the worker pool honoring the `BDGRAPHTV_THREADS` cap.
fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let threads: usize = raw.trim().parse().map_err(|_| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer (got {raw:?})"
            ))
        })?;
        if threads == 0 {
            return Err(Error::Config(format!(
                "{THREADS_ENV} must be a positive integer (got 0)"
            )));
        }
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// The continuum target over the domain shrunk by the kernel
/// interaction range (`truncation radius * eps`), with the jump surface
/// (if any) trimmed to the shrunken domain. The density stays the
/// full-domain one: only the integration region is restricted.
pub fn interior_continuum_target(
    field: &DisplacementField,
    domain: &Domain,
    density: &Density,
    kernel: &Kernel,
    eps: f64,
    spec: &QuadratureSpec,
) -> Result<ContinuumTVResult> {
    let delta = kernel.truncation_radius() * eps;
    let small = shrink_domain(domain, delta)?;
    match field.jump_surface() {
        None => tv_eta(field, &small, density, kernel, spec),
        Some(seg) if domain.dim() == 1 => {
            if !small.contains(seg.point()) {
                return Err(Error::Config(format!(
                    "interior restriction by {delta} removed the jump point"
                )));
            }
            tv_eta(field, &small, density, kernel, spec)
        }
        Some(seg) => {
            let normal = seg.normal();
            let tangent = [-normal[1], normal[0]];
            let section = section_interval(&small, seg.point(), &tangent).ok_or_else(|| {
                Error::Config(format!(
                    "interior restriction by {delta} removed the jump surface"
                ))
            })?;
            let (t_lo, t_hi) = seg.t_range();
            let (t_lo, t_hi) = (t_lo.max(section.0), t_hi.min(section.1));
            if !(t_lo < t_hi) {
                return Err(Error::Config(format!(
                    "interior restriction by {delta} removed the jump surface"
                )));
            }
            let trimmed = field.with_jump_range(t_lo, t_hi)?;
            tv_eta(&trimmed, &small, density, kernel, spec)
        }
    }
}

fn shrink_domain(dom: &Domain, delta: f64) -> Result<Domain> {
    match dom {
        Domain::Box { lo, hi } => Domain::new_box(
            lo.iter().map(|v| v + delta).collect(),
            hi.iter().map(|v| v - delta).collect(),
        ),
        Domain::Ball { center, radius } => Domain::new_ball(center.clone(), radius - delta),
    }
}

/// One study cell: full-domain energy, interior-restricted energy (outer
/// node inside the domain shrunk by the interaction range, so its kernel
/// support is never clipped by the boundary), and the cell wallclock.
fn evaluate_cell(
    cfg: &ExperimentConfig,
    n: usize,
    eps: f64,
    seed: u64,
) -> Result<(f64, f64, u64)> {
    let start = Instant::now();
    let cloud = sample(cfg.domain(), cfg.density(), n, seed)?;
    let nodes = NodeField::from_displacement(&cloud, cfg.field())?;
    let energy = gtv_celllist(&cloud, &nodes, cfg.kernel(), eps)?;
    let delta = cfg.kernel().truncation_radius() * eps;
    let small = shrink_domain(cfg.domain(), delta)?;
    let restricted = gtv_celllist_restricted(&cloud, &nodes, cfg.kernel(), eps, |p| {
        small.contains(p)
    })?;
    Ok((
        energy.value,
        restricted.value,
        start.elapsed().as_millis() as u64,
    ))
}

/// Runs the full study grid. Each cell samples a cloud at its seed,
/// restricts the field to the nodes, and evaluates the graph energy two
/// ways: the full-domain sum against the full-domain continuum target,
/// and the interior-restricted sum against the shrunken-domain target.
/// Cells run on a worker pool but rows come out in (schedule, seed)
/// order; failures are recorded per cell and do not stop the run.
pub fn run_convergence_study(cfg: &ExperimentConfig) -> Result<StudyTable> {
    let quad = QuadratureSpec::default();
    let full = tv_eta(cfg.field(), cfg.domain(), cfg.density(), cfg.kernel(), &quad)?;
    let schedule = cfg.eps_schedule();
    let mut interior = Vec::with_capacity(schedule.len());
    for &(_, eps) in &schedule {
        interior.push(interior_continuum_target(
            cfg.field(),
            cfg.domain(),
            cfg.density(),
            cfg.kernel(),
            eps,
            &quad,
        )?);
    }

    let jobs: Vec<(usize, usize, f64, u64)> = schedule
        .iter()
        .enumerate()
        .flat_map(|(idx, &(n, eps))| cfg.seeds().iter().map(move |&seed| (idx, n, eps, seed)))
        .collect();
    let pool = worker_pool()?;
    let outcomes: Vec<Result<(f64, f64, u64)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(_, n, eps, seed)| evaluate_cell(cfg, n, eps, seed))
            .collect()
    });

    let mut table = StudyTable::default();
    for (&(idx, n, eps, seed), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok((gtv, gtv_interior, wallclock_ms)) => {
                let (rel_err, absolute_convention) = relative_error(gtv, full.value);
                table.rows.push(ConvergenceRow {
                    n,
                    eps,
                    seed,
                    gtv_value: gtv,
                    tv_eta_value: full.value,
                    rel_err,
                    absolute_convention,
                    wallclock_ms,
                });
                let tv_interior = interior[idx].value;
                let (rel_err, absolute_convention) = relative_error(gtv_interior, tv_interior);
                table.interior_rows.push(ConvergenceRow {
                    n,
                    eps,
                    seed,
                    gtv_value: gtv_interior,
                    tv_eta_value: tv_interior,
                    rel_err,
                    absolute_convention,
                    wallclock_ms,
                });
            }
            Err(e) => table.failures.push(RowFailure {
                n,
                seed,
                message: e.to_string(),
            }),
        }
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// Rate fitting.

/// Least-squares fit of `ln(median rel_err)` against `ln n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Sample sizes skipped because their median error was zero (a log
    /// fit cannot use them).
    pub skipped: Vec<usize>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Medians of `rel_err` per sample size, in increasing n.
pub fn median_errors(rows: &[ConvergenceRow]) -> Vec<(usize, f64)> {
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r.rel_err);
    }
    by_n
        .into_iter()
        .map(|(n, mut errs)| (n, median(&mut errs)))
        .collect()
}

/// Fits the convergence rate. Needs at least 3 distinct sample sizes
/// with at least 3 seeds each; zero medians are skipped (recorded in
/// the fit) and at least two usable points must remain.
pub fn fit_rate(rows: &[ConvergenceRow]) -> Result<RateFit> {
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r.rel_err);
    }
    if by_n.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate fitting needs at least 3 distinct sample sizes (got {})",
            by_n.len()
        )));
    }
    if let Some((n, errs)) = by_n.iter().find(|(_, errs)| errs.len() < 3) {
        return Err(Error::InvalidArgument(format!(
            "rate fitting needs at least 3 seeds per sample size (n = {n} has {})",
            errs.len()
        )));
    }
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (n, mut errs) in by_n {
        let m = median(&mut errs);
        if m > 0.0 && m.is_finite() {
            points.push(((n as f64).ln(), m.ln()));
        } else {
            skipped.push(n);
        }
    }
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "rate fitting has {} usable points after skipping zero medians",
            points.len()
        )));
    }
    let k = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        skipped,
    })
}

// ---------------------------------------------------------------------------
// Reports.

/// Files written by [`emit_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub results: PathBuf,
    pub interior_results: PathBuf,
    pub diagnostics: PathBuf,
    /// Absent when no positive medians exist to plot.
    pub plot: Option<PathBuf>,
}

/// Verifies the output directory exists (creating it if needed) and is
/// writable, before any computation is spent.
pub fn preflight_outputs(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"ok")?;
    fs::remove_file(&probe)?;
    Ok(())
}

const RESULTS_HEADER: &str = "n,eps,seed,gtv,tv_eta,rel_err,wallclock_ms";
const DIAGNOSTICS_HEADER: &str = "n,eps,sup_norm_ratio,first_diff_ratio,second_diff_ratio";

fn render_rows_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n, r.eps, r.seed, r.gtv_value, r.tv_eta_value, r.rel_err, r.wallclock_ms
        ));
    }
    out
}

fn render_diagnostics_csv(diags: &[ScalingDiagnostics]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for d in diags {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            d.n, d.eps, d.sup_norm_ratio, d.first_diff_ratio, d.second_diff_ratio
        ));
    }
    out
}

/// Writes `results.csv`, `results_interior.csv`, `diagnostics.csv`, and
/// (when the study produced positive medians) a log-log SVG plot of
/// median relative error against sample size, with a fitted rate line
/// when enough points support one. Empty inputs produce header-only
/// CSV files and no plot.
pub fn emit_report(
    table: &StudyTable,
    diagnostics: &[ScalingDiagnostics],
    dir: &Path,
) -> Result<ReportPaths> {
    preflight_outputs(dir)?;
    let results = dir.join("results.csv");
    fs::write(&results, render_rows_csv(&table.rows))?;
    let interior_results = dir.join("results_interior.csv");
    fs::write(&interior_results, render_rows_csv(&table.interior_rows))?;
    let diag_path = dir.join("diagnostics.csv");
    fs::write(&diag_path, render_diagnostics_csv(diagnostics))?;

    let medians: Vec<(usize, f64)> = median_errors(&table.rows)
        .into_iter()
        .filter(|&(_, m)| m > 0.0 && m.is_finite())
        .collect();
    let plot = if medians.is_empty() {
        None
    } else {
        let fit = fit_rate(&table.rows).ok();
        let path = dir.join("rel_err_vs_n.svg");
        fs::write(&path, render_plot(&medians, fit.as_ref()))?;
        Some(path)
    };
    Ok(ReportPaths {
        results,
        interior_results,
        diagnostics: diag_path,
        plot,
    })
}

/// Hand-rolled log-log scatter plot (no timestamps: output bytes depend
/// only on the data).
fn render_plot(medians: &[(usize, f64)], fit: Option<&RateFit>) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const LEFT: f64 = 90.0;
    const RIGHT: f64 = 30.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 70.0;

    let xs: Vec<f64> = medians.iter().map(|&(n, _)| (n as f64).log10()).collect();
    let ys: Vec<f64> = medians.iter().map(|&(_, m)| m.log10()).collect();
    let pad = |lo: f64, hi: f64| {
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x_lo, x_hi) = pad(
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let (y_lo, y_hi) = pad(
        ys.iter().copied().fold(f64::INFINITY, f64::min),
        ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let to_x = |lx: f64| LEFT + (lx - x_lo) / (x_hi - x_lo) * (W - LEFT - RIGHT);
    let to_y = |ly: f64| H - BOTTOM - (ly - y_lo) / (y_hi - y_lo) * (H - TOP - BOTTOM);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"black\"/>\n",
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"15\">median relative error vs sample size (log-log)</text>\n",
        W / 2.0
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\">sample size n</text>\n",
        W / 2.0,
        H - 18.0
    ));
    svg.push_str(&format!(
        "<text x=\"22\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\" transform=\"rotate(-90 22 {})\">median relative error</text>\n",
        H / 2.0,
        H / 2.0
    ));

    if let Some(f) = fit {
        let ly = |lx: f64| f.intercept / std::f64::consts::LN_10 + f.slope * lx;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"gray\" \
             stroke-dasharray=\"6,4\"/>\n",
            to_x(x_lo),
            to_y(ly(x_lo)),
            to_x(x_hi),
            to_y(ly(x_hi))
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"gray\">fit slope {:.3}</text>\n",
            LEFT + 10.0,
            TOP + 18.0,
            f.slope
        ));
    }

    if medians.len() > 1 {
        let path: Vec<String> = medians
            .iter()
            .zip(xs.iter().zip(&ys))
            .map(|(_, (&lx, &ly))| format!("{:.2},{:.2}", to_x(lx), to_y(ly)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
    }
    for ((&(n, m), &lx), &ly) in medians.iter().zip(&xs).zip(&ys) {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"steelblue\"/>\n",
            to_x(lx),
            to_y(ly)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"11\">{n}</text>\n",
            to_x(lx),
            H - BOTTOM + 18.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{m:.2e}</text>\n",
            LEFT - 6.0,
            to_y(ly) + 4.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
