//! Shared quadrature machinery: Gauss-Legendre rules, product rules on
//! spheres and boxes, and deterministically seeded Monte Carlo streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Knobs for the numerical integration paths.
///
/// Product rules factor radial integrals (Gauss-Legendre) from angular ones
/// (uniform on the circle, Gauss-Legendre in the polar angle on the sphere).
/// The Monte Carlo path is used for dimensions above 3, for custom kernels,
/// or when `force_monte_carlo` is set; it is deterministic given `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss-Legendre nodes for radial integrals of custom profiles.
    pub radial_nodes: usize,
    /// Uniform nodes on the circle (d=2) or azimuthal nodes (d=3).
    pub angular_nodes: usize,
    /// Gauss-Legendre nodes in the polar cosine (d=3 only).
    pub polar_nodes: usize,
    /// Tensor Gauss-Legendre nodes per axis for volume integrals.
    pub volume_nodes_per_axis: usize,
    /// Sample count for Monte Carlo integration.
    pub mc_nodes: usize,
    /// Master seed for Monte Carlo paths.
    pub seed: u64,
    /// Use Monte Carlo even where a product rule is available.
    pub force_monte_carlo: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radial_nodes: 64,
            angular_nodes: 2048,
            polar_nodes: 64,
            volume_nodes_per_axis: 64,
            mc_nodes: 1_000_000,
            seed: 0,
            force_monte_carlo: false,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.radial_nodes,
            self.angular_nodes,
            self.polar_nodes,
            self.volume_nodes_per_axis,
            self.mc_nodes,
        ];
        if counts.contains(&0) {
            return Err(Error::InvalidArgument(
                "quadrature spec requires at least one node in every rule".into(),
            ));
        }
        Ok(())
    }

    /// Copy with every deterministic rule at half resolution; used to attach
    /// a crude error estimate to product-rule results.
    pub(crate) fn halved(&self) -> Self {
        QuadratureSpec {
            radial_nodes: (self.radial_nodes / 2).max(1),
            angular_nodes: (self.angular_nodes / 2).max(1),
            polar_nodes: (self.polar_nodes / 2).max(1),
            volume_nodes_per_axis: (self.volume_nodes_per_axis / 2).max(1),
            ..*self
        }
    }
}

/// Numerical integral together with an error estimate and the node count
/// that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub nodes: usize,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; accurate to machine
/// precision for the node counts used here (<= a few thousand).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' at x via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let nodes = xs.iter().map(|x| mid + half * x).collect();
    let weights = ws.iter().map(|w| w * half).collect();
    (nodes, weights)
}

/// Unit vectors and weights integrating over the sphere `S^{d-1}` with its
/// surface measure: `sum_k w_k f(omega_k) ~ int f dsigma`.
pub fn sphere_rule(d: usize, spec: &QuadratureSpec) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    match d {
        1 => Ok((vec![vec![-1.0], vec![1.0]], vec![1.0, 1.0])),
        2 => {
            let n = spec.angular_nodes;
            let mut dirs = Vec::with_capacity(n);
            let mut ws = Vec::with_capacity(n);
            let h = 2.0 * std::f64::consts::PI / n as f64;
            for k in 0..n {
                let theta = (k as f64 + 0.5) * h;
                dirs.push(vec![theta.cos(), theta.sin()]);
                ws.push(h);
            }
            Ok((dirs, ws))
        }
        3 => {
            let (zs, zws) = gauss_legendre(spec.polar_nodes);
            let p = spec.angular_nodes.clamp(4, 512);
            let h = 2.0 * std::f64::consts::PI / p as f64;
            let mut dirs = Vec::with_capacity(zs.len() * p);
            let mut ws = Vec::with_capacity(zs.len() * p);
            for (z, zw) in zs.iter().zip(&zws) {
                let s = (1.0 - z * z).sqrt();
                for k in 0..p {
                    let phi = (k as f64 + 0.5) * h;
                    dirs.push(vec![s * phi.cos(), s * phi.sin(), *z]);
                    ws.push(zw * h);
                }
            }
            Ok((dirs, ws))
        }
        _ => Err(Error::InvalidArgument(format!(
            "sphere rule only available for d <= 3 (got d={d}); use Monte Carlo"
        ))),
    }
}

/// Surface measure of the unit sphere `S^{d-1}`.
pub fn sphere_surface(d: usize) -> f64 {
    // |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2)
    match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => {
            let half = d as f64 / 2.0;
            2.0 * std::f64::consts::PI.powf(half) / gamma(half)
        }
    }
}

/// Volume of the ball of radius `r` in `R^d`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    sphere_surface(d) * r.powi(d as i32) / d as f64
}

fn gamma(x: f64) -> f64 {
    // Lanczos approximation; only used for d > 3 sphere constants.
    const G: f64 = 7.0;
    // Coefficients are kept at their published precision even where the
    // trailing digits exceed f64 resolution.
    #[allow(clippy::excessive_precision)]
    const C: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + G + 0.5;
        for (i, &c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Tensor-product Gauss-Legendre integral of `f` over the box `[lo, hi]`.
pub fn tensor_box_integral<F>(lo: &[f64], hi: &[f64], nodes_per_axis: usize, mut f: F) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let d = lo.len();
    assert_eq!(d, hi.len());
    let mut axes = Vec::with_capacity(d);
    for k in 0..d {
        axes.push(gauss_legendre_on(nodes_per_axis, lo[k], hi[k]));
    }
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..d {
            x[k] = axes[k].0[idx[k]];
            w *= axes[k].1[idx[k]];
        }
        total += w * f(&x);
        // Odometer increment over the multi-index.
        let mut k = 0;
        loop {
            if k == d {
                return total;
            }
            idx[k] += 1;
            if idx[k] < nodes_per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Deterministic per-shard RNG derived from a master seed.
///
/// Shards are independent streams; the same (seed, shard) pair always yields
/// the same stream regardless of how many shards run or in what order.
pub fn shard_rng(master_seed: u64, shard: u64) -> ChaCha8Rng {
    // SplitMix64 finalizer over the combined key.
    let mut z = master_seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(shard)
        .wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

/// Mean and standard error of a Monte Carlo sample sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = ((sum_sq / nf) - mean * mean).max(0.0);
        let std_error = if n > 1 { (var / (nf - 1.0)).sqrt() } else { f64::INFINITY };
        McEstimate {
            mean,
            std_error,
            samples: n,
        }
    }

    /// Combine shard-wise partial sums into one estimate.
    pub fn combine(parts: &[(f64, f64, usize)]) -> Self {
        let sum: f64 = parts.iter().map(|p| p.0).sum();
        let sum_sq: f64 = parts.iter().map(|p| p.1).sum();
        let n: usize = parts.iter().map(|p| p.2).sum();
        Self::from_sums(sum, sum_sq, n)
    }
}
