//! Displacement fields on a domain and their anisotropic total variation
//!
//! ```text
//! TV(u) = int_D rho(x)^2 phi_eta(e(u)(x)) dx
//!       + int_J rho(x)^2 phi_eta([u] (.) nu) dH^{d-1},
//! ```
//!
//! where `e(u) = (grad u + grad u^T)/2`, `[u]` is the jump across the
//! surface `J` with unit normal `nu`, and `(.)` the symmetrized tensor
//! product. The polar form `phi_eta(Eu/|Eu|) d|Eu|` collapses to the two
//! terms above by absolute 1-homogeneity of `phi_eta`, which also removes
//! the 0/0 issue where the symmetric gradient vanishes.

use std::sync::Arc;

use crate::domain_sampling::{integrate_over, Density, Domain};
use crate::kernels::{Kernel, PhiEtaRule, SymMatrix};
use crate::quad::{gauss_legendre_on, shard_rng, QuadratureSpec};
use crate::{Error, Result};

/// An affine motion `x -> translation + matrix * x` (row-major matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMotion {
    pub translation: Vec<f64>,
    pub matrix: Vec<f64>,
}

impl AffineMotion {
    pub fn new(translation: Vec<f64>, matrix: Vec<f64>) -> Result<Self> {
        let d = translation.len();
        if matrix.len() != d * d {
            return Err(Error::UnsupportedField(format!(
                "affine motion needs a {d}x{d} matrix to match its translation"
            )));
        }
        if translation.iter().chain(&matrix).any(|v| !v.is_finite()) {
            return Err(Error::UnsupportedField(
                "affine motion entries must be finite".into(),
            ));
        }
        Ok(AffineMotion {
            translation,
            matrix,
        })
    }

    pub fn evaluate_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.translation.len();
        for (i, o) in out.iter_mut().enumerate().take(d) {
            let mut acc = self.translation[i];
            for (&m, &xv) in self.matrix[i * d..(i + 1) * d].iter().zip(x) {
                acc += m * xv;
            }
            *o = acc;
        }
    }

    fn scaled(&self, t: f64) -> AffineMotion {
        AffineMotion {
            translation: self.translation.iter().map(|v| t * v).collect(),
            matrix: self.matrix.iter().map(|v| t * v).collect(),
        }
    }
}

/// A flat oriented jump surface: a point on the hyperplane, the unit
/// normal, and (for `d = 2`) the tangential extent of the segment
/// relative to that point. In `d = 1` the surface is the point itself.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneSegment {
    point: Vec<f64>,
    normal: Vec<f64>,
    t_range: (f64, f64),
}

impl HyperplaneSegment {
    /// `d = 1`: a jump located at `x0`, oriented toward positive `x`.
    pub fn point_1d(x0: f64) -> Self {
        HyperplaneSegment {
            point: vec![x0],
            normal: vec![1.0],
            t_range: (0.0, 0.0),
        }
    }

    /// `d = 2`: segment `{ point + t * tangent : t in [t_lo, t_hi] }`,
    /// where `tangent` is `normal` rotated by +90 degrees. The normal is
    /// normalized to unit length.
    pub fn segment_2d(point: Vec<f64>, normal: Vec<f64>, t_lo: f64, t_hi: f64) -> Result<Self> {
        if point.len() != 2 || normal.len() != 2 {
            return Err(Error::UnsupportedField(
                "segment_2d needs 2-dimensional data".into(),
            ));
        }
        let len = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::UnsupportedField("jump normal must be nonzero".into()));
        }
        if !(t_lo < t_hi) {
            return Err(Error::UnsupportedField(format!(
                "segment needs t_lo < t_hi (got {t_lo}, {t_hi})"
            )));
        }
        Ok(HyperplaneSegment {
            point,
            normal: vec![normal[0] / len, normal[1] / len],
            t_range: (t_lo, t_hi),
        })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn t_range(&self) -> (f64, f64) {
        self.t_range
    }

    /// Restricts the tangential extent (used for interior-shrunk targets).
    pub fn with_t_range(&self, t_lo: f64, t_hi: f64) -> Result<Self> {
        if self.point.len() == 1 {
            return Ok(self.clone());
        }
        Self::segment_2d(self.point.clone(), self.normal.clone(), t_lo, t_hi)
    }

    /// Signed distance of `x` from the hyperplane (positive on the side
    /// the normal points into).
    pub fn side(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.point)
            .zip(&self.normal)
            .map(|((v, p), n)| (v - p) * n)
            .sum()
    }

    /// Point at tangential parameter `t` (d = 2) or the jump point (d = 1).
    fn at(&self, t: f64) -> Vec<f64> {
        match self.point.len() {
            1 => self.point.clone(),
            2 => {
                let tangent = [-self.normal[1], self.normal[0]];
                vec![
                    self.point[0] + t * tangent[0],
                    self.point[1] + t * tangent[1],
                ]
            }
            _ => unreachable!("segments exist only in d = 1, 2"),
        }
    }
}

type VecField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum FieldKind {
    /// `u(x) = translation + matrix * x`; covers linear and rigid fields.
    Affine(AffineMotion),
    /// Analytic field with caller-supplied gradient (`grad[i*d+j]` is
    /// `du_i/dx_j`).
    Smooth { u: VecField, grad: VecField },
    /// Two affine pieces separated by a flat jump surface: `minus` where
    /// the signed side is negative, `plus` where it is `>= 0`.
    PiecewiseRigid {
        minus: AffineMotion,
        plus: AffineMotion,
        jump: HyperplaneSegment,
    },
}

/// A displacement field `u : D -> R^d`.
#[derive(Clone)]
pub struct DisplacementField {
    dim: usize,
    kind: FieldKind,
}

impl std::fmt::Debug for DisplacementField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.kind {
            FieldKind::Affine(_) => "Affine",
            FieldKind::Smooth { .. } => "Smooth",
            FieldKind::PiecewiseRigid { .. } => "PiecewiseRigid",
        };
        f.debug_struct("DisplacementField")
            .field("dim", &self.dim)
            .field("kind", &kind)
            .finish()
    }
}

impl DisplacementField {
    /// `u(x) = A x` for a row-major `d x d` matrix.
    pub fn linear(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        Ok(DisplacementField {
            dim,
            kind: FieldKind::Affine(AffineMotion::new(vec![0.0; dim], matrix)?),
        })
    }

    /// `u(x) = c + A x`.
    pub fn affine(translation: Vec<f64>, matrix: Vec<f64>) -> Result<Self> {
        let dim = translation.len();
        Ok(DisplacementField {
            dim,
            kind: FieldKind::Affine(AffineMotion::new(translation, matrix)?),
        })
    }

    /// A rigid motion `c + W x`; rejects matrices that are not
    /// skew-symmetric.
    pub fn rigid(translation: Vec<f64>, skew: Vec<f64>) -> Result<Self> {
        let d = translation.len();
        if skew.len() != d * d {
            return Err(Error::UnsupportedField("skew matrix size mismatch".into()));
        }
        let scale = skew.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..d {
            for j in 0..d {
                if (skew[i * d + j] + skew[j * d + i]).abs() > 1e-12 * scale {
                    return Err(Error::UnsupportedField(format!(
                        "matrix is not skew-symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Self::affine(translation, skew)
    }

    /// Analytic field with its gradient. Consistency of `grad` with `u`
    /// is spot-checked by central differences at 100 interior probe
    /// points of `dom` (tolerance 1e-5).
    pub fn smooth<U, G>(dom: &Domain, u: U, grad: G) -> Result<Self>
    where
        U: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        let dim = dom.dim();
        let (lo, hi) = dom.bounding_box();
        let mut rng = shard_rng(0xF1E1D, 0);
        let h = 1e-6;
        let mut x = vec![0.0; dim];
        use rand::Rng;
        let mut checked = 0usize;
        while checked < 100 {
            for a in 0..dim {
                let margin = 1e-3 * (hi[a] - lo[a]);
                x[a] = rng.gen_range(lo[a] + margin..hi[a] - margin);
            }
            if !dom.contains(&x) {
                continue;
            }
            checked += 1;
            let g = grad(&x);
            if g.len() != dim * dim {
                return Err(Error::UnsupportedField(
                    "gradient evaluator must return a d*d row-major matrix".into(),
                ));
            }
            for j in 0..dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let up = u(&xp);
                let um = u(&xm);
                if up.len() != dim || um.len() != dim {
                    return Err(Error::UnsupportedField(
                        "field evaluator must return a d-vector".into(),
                    ));
                }
                for i in 0..dim {
                    let fd = (up[i] - um[i]) / (2.0 * h);
                    if (fd - g[i * dim + j]).abs() > 1e-5 * (1.0 + g[i * dim + j].abs()) {
                        return Err(Error::UnsupportedField(format!(
                            "gradient inconsistent with the field at {x:?}: \
                             finite difference {fd} vs declared {}",
                            g[i * dim + j]
                        )));
                    }
                }
            }
        }
        Ok(DisplacementField {
            dim,
            kind: FieldKind::Smooth {
                u: Arc::new(u),
                grad: Arc::new(grad),
            },
        })
    }

    /// Two affine pieces separated by a flat jump surface (d = 1 or 2).
    pub fn piecewise_rigid(
        minus: AffineMotion,
        plus: AffineMotion,
        jump: HyperplaneSegment,
    ) -> Result<Self> {
        let dim = minus.translation.len();
        if plus.translation.len() != dim || jump.point.len() != dim {
            return Err(Error::UnsupportedField(
                "piece and jump dimensions disagree".into(),
            ));
        }
        if dim > 2 {
            return Err(Error::UnsupportedField(
                "flat jump surfaces are supported in d = 1 and 2 only".into(),
            ));
        }
        Ok(DisplacementField {
            dim,
            kind: FieldKind::PiecewiseRigid { minus, plus, jump },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jump_surface(&self) -> Option<&HyperplaneSegment> {
        match &self.kind {
            FieldKind::PiecewiseRigid { jump, .. } => Some(jump),
            _ => None,
        }
    }

    /// A copy of a piecewise-rigid field whose jump surface is trimmed to
    /// the tangential range `[t_lo, t_hi]` (used for interior-restricted
    /// continuum targets). Errors for fields without a jump surface.
    pub fn with_jump_range(&self, t_lo: f64, t_hi: f64) -> Result<Self> {
        match &self.kind {
            FieldKind::PiecewiseRigid { minus, plus, jump } => Ok(DisplacementField {
                dim: self.dim,
                kind: FieldKind::PiecewiseRigid {
                    minus: minus.clone(),
                    plus: plus.clone(),
                    jump: jump.with_t_range(t_lo, t_hi)?,
                },
            }),
            _ => Err(Error::UnsupportedField(
                "only fields with a jump surface can restrict its range".into(),
            )),
        }
    }

    /// Field value at `x`, written into `out`.
    pub fn evaluate_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            FieldKind::Affine(m) => m.evaluate_into(x, out),
            FieldKind::Smooth { u, .. } => {
                let v = u(x);
                out.copy_from_slice(&v);
            }
            FieldKind::PiecewiseRigid { minus, plus, jump } => {
                // The surface itself is assigned to the plus side.
                if jump.side(x) < 0.0 {
                    minus.evaluate_into(x, out)
                } else {
                    plus.evaluate_into(x, out)
                }
            }
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.evaluate_into(x, &mut out);
        out
    }

    /// The symmetric gradient `e(u)(x)`; errors on the jump surface,
    /// where it is undefined.
    pub fn sym_gradient(&self, x: &[f64]) -> Result<SymMatrix> {
        match &self.kind {
            FieldKind::PiecewiseRigid { jump, .. } if jump.side(x) == 0.0 => {
                Err(Error::UndefinedPoint(format!(
                    "symmetric gradient undefined on the jump surface at {x:?}"
                )))
            }
            _ => Ok(self.sym_gradient_ae(x)),
        }
    }

    /// Symmetric gradient with the jump surface assigned to the plus
    /// side; agrees with `sym_gradient` almost everywhere and never
    /// fails, which is what volume quadrature needs.
    fn sym_gradient_ae(&self, x: &[f64]) -> SymMatrix {
        let d = self.dim;
        match &self.kind {
            FieldKind::Affine(m) => SymMatrix::symmetric_part(&m.matrix, d),
            FieldKind::Smooth { grad, .. } => SymMatrix::symmetric_part(&grad(x), d),
            FieldKind::PiecewiseRigid { minus, plus, jump } => {
                let m = if jump.side(x) < 0.0 { minus } else { plus };
                SymMatrix::symmetric_part(&m.matrix, d)
            }
        }
    }

    /// Jump `[u](x) = u_plus(x) - u_minus(x)` at a point of the surface;
    /// zero vector for fields without a jump.
    pub fn jump_at(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            FieldKind::PiecewiseRigid { minus, plus, .. } => {
                let mut p = vec![0.0; self.dim];
                let mut m = vec![0.0; self.dim];
                plus.evaluate_into(x, &mut p);
                minus.evaluate_into(x, &mut m);
                p.iter().zip(&m).map(|(a, b)| a - b).collect()
            }
            _ => vec![0.0; self.dim],
        }
    }

    /// The field `t * u`.
    pub fn scaled(&self, t: f64) -> DisplacementField {
        let kind = match &self.kind {
            FieldKind::Affine(m) => FieldKind::Affine(m.scaled(t)),
            FieldKind::Smooth { u, grad } => {
                let (u, grad) = (u.clone(), grad.clone());
                FieldKind::Smooth {
                    u: Arc::new(move |x: &[f64]| u(x).into_iter().map(|v| t * v).collect()),
                    grad: Arc::new(move |x: &[f64]| grad(x).into_iter().map(|v| t * v).collect()),
                }
            }
            FieldKind::PiecewiseRigid { minus, plus, jump } => FieldKind::PiecewiseRigid {
                minus: minus.scaled(t),
                plus: plus.scaled(t),
                jump: jump.clone(),
            },
        };
        DisplacementField {
            dim: self.dim,
            kind,
        }
    }

    /// The field `u + c + W x` (rigid perturbation).
    pub fn plus_rigid(&self, translation: &[f64], skew: &[f64]) -> Result<DisplacementField> {
        let d = self.dim;
        // Validates that (translation, skew) really is a rigid motion.
        DisplacementField::rigid(translation.to_vec(), skew.to_vec())?;
        let add = |m: &AffineMotion| -> AffineMotion {
            AffineMotion {
                translation: m
                    .translation
                    .iter()
                    .zip(translation)
                    .map(|(a, b)| a + b)
                    .collect(),
                matrix: m.matrix.iter().zip(skew).map(|(a, b)| a + b).collect(),
            }
        };
        let kind = match &self.kind {
            FieldKind::Affine(m) => FieldKind::Affine(add(m)),
            FieldKind::Smooth { u, grad } => {
                let (u, grad) = (u.clone(), grad.clone());
                let c = translation.to_vec();
                let w = skew.to_vec();
                let wg = w.clone();
                FieldKind::Smooth {
                    u: Arc::new(move |x: &[f64]| {
                        let mut v = u(x);
                        for i in 0..d {
                            v[i] += c[i];
                            for j in 0..d {
                                v[i] += w[i * d + j] * x[j];
                            }
                        }
                        v
                    }),
                    grad: Arc::new(move |x: &[f64]| {
                        let mut g = grad(x);
                        for (gi, wi) in g.iter_mut().zip(&wg) {
                            *gi += wi;
                        }
                        g
                    }),
                }
            }
            FieldKind::PiecewiseRigid { minus, plus, jump } => FieldKind::PiecewiseRigid {
                minus: add(minus),
                plus: add(plus),
                jump: jump.clone(),
            },
        };
        Ok(DisplacementField {
            dim: self.dim,
            kind,
        })
    }
}

/// Decomposition of the continuum energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumTVResult {
    /// `volume_part + jump_part`.
    pub value: f64,
    pub volume_part: f64,
    pub jump_part: f64,
    /// Propagated quadrature error estimate.
    pub quad_error: f64,
}

/// The weighted anisotropic total variation of the field (see the module
/// docs for the formula).
pub fn tv_eta(
    u: &DisplacementField,
    dom: &Domain,
    rho: &Density,
    kernel: &Kernel,
    spec: &QuadratureSpec,
) -> Result<ContinuumTVResult> {
    spec.validate()?;
    let d = dom.dim();
    if u.dim() != d || kernel.dim() != d {
        return Err(Error::UnsupportedField(format!(
            "field ({}), kernel ({}) and domain ({d}) dimensions must agree",
            u.dim(),
            kernel.dim()
        )));
    }
    let rule = PhiEtaRule::new(kernel, spec)?;
    let rule_coarse = PhiEtaRule::new(kernel, &spec.halved())?;

    let volume_with = |s: &QuadratureSpec, r: &PhiEtaRule| -> Result<f64> {
        let mut failure: Option<Error> = None;
        let v = integrate_over(dom, s, |x| {
            let w = match rho.evaluate(x) {
                Ok(w) => w,
                Err(e) => {
                    if failure.is_none() {
                        failure = Some(e);
                    }
                    return f64::NAN;
                }
            };
            w * w * r.apply(&u.sym_gradient_ae(x))
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(v),
        }
    };
    let volume_part = volume_with(spec, &rule)?;
    let volume_coarse = volume_with(&spec.halved(), &rule_coarse)?;

    let (jump_part, jump_coarse) = match u.jump_surface() {
        None => (0.0, 0.0),
        Some(jump) => (
            jump_integral(u, jump, rho, &rule, spec.volume_nodes_per_axis)?,
            jump_integral(u, jump, rho, &rule_coarse, spec.volume_nodes_per_axis / 2)?,
        ),
    };

    let quad_error = (volume_part - volume_coarse).abs() + (jump_part - jump_coarse).abs();
    Ok(ContinuumTVResult {
        value: volume_part + jump_part,
        volume_part,
        jump_part,
        quad_error,
    })
}

/// `int_J rho^2 phi_eta([u] (.) nu) dH^{d-1}` over the flat surface.
fn jump_integral(
    u: &DisplacementField,
    jump: &HyperplaneSegment,
    rho: &Density,
    rule: &PhiEtaRule,
    nodes: usize,
) -> Result<f64> {
    match jump.point.len() {
        1 => {
            let x = jump.at(0.0);
            let w = rho.evaluate(&x)?;
            let j = u.jump_at(&x);
            let m = SymMatrix::sym_outer(&j, jump.normal());
            Ok(w * w * rule.apply(&m))
        }
        2 => {
            let (t_lo, t_hi) = jump.t_range;
            let (ts, ws) = gauss_legendre_on(nodes.max(8), t_lo, t_hi);
            let mut acc = 0.0;
            for (t, wt) in ts.iter().zip(&ws) {
                let x = jump.at(*t);
                let w = rho.evaluate(&x)?;
                let j = u.jump_at(&x);
                let m = SymMatrix::sym_outer(&j, jump.normal());
                acc += wt * w * w * rule.apply(&m);
            }
            Ok(acc)
        }
        _ => Err(Error::UnsupportedField(
            "jump surfaces are supported in d = 1 and 2 only".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn setup_2d() -> (Domain, Density, Kernel, QuadratureSpec) {
        let dom = Domain::unit_box(2);
        let rho = Density::uniform(&dom);
        let k = Kernel::indicator(2, 1.0, 1.0).unwrap();
        (dom, rho, k, QuadratureSpec::default())
    }

    #[test]
    fn sym_gradient_of_linear_field() {
        let u = DisplacementField::linear(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let e = u.sym_gradient(&[0.3, 0.7]).unwrap();
        assert_eq!(e.get(0, 0), 1.0);
        assert_eq!(e.get(0, 1), 2.5);
        assert_eq!(e.get(1, 1), 4.0);
    }

    #[test]
    fn sym_gradient_of_rigid_motion_is_zero() {
        let u = DisplacementField::rigid(vec![1.0, -2.0], vec![0.0, 0.7, -0.7, 0.0]).unwrap();
        let e = u.sym_gradient(&[0.2, 0.9]).unwrap();
        assert_eq!(e.frobenius_norm(), 0.0);
    }

    #[test]
    fn sym_gradient_of_smooth_field_by_hand() {
        // u(x, y) = (x y, 0): grad = [[y, x], [0, 0]], e at (1, 2) is
        // [[2, 0.5], [0.5, 0]].
        let dom = Domain::new_box(vec![0.0, 0.0], vec![2.0, 3.0]).unwrap();
        let u = DisplacementField::smooth(
            &dom,
            |x: &[f64]| vec![x[0] * x[1], 0.0],
            |x: &[f64]| vec![x[1], x[0], 0.0, 0.0],
        )
        .unwrap();
        let e = u.sym_gradient(&[1.0, 2.0]).unwrap();
        assert!((e.get(0, 0) - 2.0).abs() < 1e-12);
        assert!((e.get(0, 1) - 0.5).abs() < 1e-12);
        assert!((e.get(1, 1) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_constructor_rejects_wrong_gradients() {
        let dom = Domain::unit_box(1);
        let err = DisplacementField::smooth(
            &dom,
            |x: &[f64]| vec![x[0] * x[0]],
            |_: &[f64]| vec![1.0],
        );
        assert!(matches!(err, Err(Error::UnsupportedField(_))));
    }

    #[test]
    fn sym_gradient_errors_on_the_jump_surface() {
        let jump = HyperplaneSegment::segment_2d(vec![0.5, 0.0], vec![1.0, 0.0], 0.0, 1.0).unwrap();
        let zero = AffineMotion::new(vec![0.0, 0.0], vec![0.0; 4]).unwrap();
        let shift = AffineMotion::new(vec![1.0, 0.0], vec![0.0; 4]).unwrap();
        let u = DisplacementField::piecewise_rigid(zero, shift, jump).unwrap();
        assert!(matches!(
            u.sym_gradient(&[0.5, 0.3]),
            Err(Error::UndefinedPoint(_))
        ));
        assert!(u.sym_gradient(&[0.4, 0.3]).is_ok());
    }

    #[test]
    fn tv_of_identity_field_is_half_pi() {
        let (dom, rho, k, spec) = setup_2d();
        let u = DisplacementField::linear(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let r = tv_eta(&u, &dom, &rho, &k, &spec).unwrap();
        assert!(
            (r.value - FRAC_PI_2).abs() < 1e-6,
            "value {} (err {})",
            r.value,
            r.quad_error
        );
        assert_eq!(r.jump_part, 0.0);
    }

    #[test]
    fn tv_of_rigid_field_is_zero() {
        let (dom, rho, k, spec) = setup_2d();
        let u = DisplacementField::rigid(vec![0.3, -1.0], vec![0.0, -2.0, 2.0, 0.0]).unwrap();
        let r = tv_eta(&u, &dom, &rho, &k, &spec).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn tv_of_planar_jump_is_quarter_pi() {
        let (dom, rho, k, spec) = setup_2d();
        let jump = HyperplaneSegment::segment_2d(vec![0.5, 0.0], vec![1.0, 0.0], 0.0, 1.0).unwrap();
        let zero = AffineMotion::new(vec![0.0, 0.0], vec![0.0; 4]).unwrap();
        let e1 = AffineMotion::new(vec![1.0, 0.0], vec![0.0; 4]).unwrap();
        let u = DisplacementField::piecewise_rigid(zero, e1, jump).unwrap();
        let r = tv_eta(&u, &dom, &rho, &k, &spec).unwrap();
        assert_eq!(r.volume_part, 0.0);
        assert!(
            (r.jump_part - FRAC_PI_4).abs() < 1e-6,
            "jump part {}",
            r.jump_part
        );
    }

    #[test]
    fn tv_is_invariant_under_rigid_perturbation() {
        let (dom, rho, k, spec) = setup_2d();
        let u = DisplacementField::linear(2, vec![1.0, 0.3, 0.0, -0.5]).unwrap();
        let base = tv_eta(&u, &dom, &rho, &k, &spec).unwrap().value;
        let shifted = u
            .plus_rigid(&[10.0, -3.0], &[0.0, 1.5, -1.5, 0.0])
            .unwrap();
        let v = tv_eta(&shifted, &dom, &rho, &k, &spec).unwrap().value;
        assert!((v - base).abs() < 1e-10 * base.max(1.0), "{v} vs {base}");
    }

    #[test]
    fn tv_is_absolutely_one_homogeneous() {
        let (dom, rho, k, spec) = setup_2d();
        let u = DisplacementField::linear(2, vec![0.4, 1.0, -0.2, 0.9]).unwrap();
        let base = tv_eta(&u, &dom, &rho, &k, &spec).unwrap().value;
        for t in [2.0, -1.5, 0.25] {
            let v = tv_eta(&u.scaled(t), &dom, &rho, &k, &spec).unwrap().value;
            assert!(
                (v - t.abs() * base).abs() < 1e-8 * base.max(1.0),
                "t={t}: {v} vs {}",
                t.abs() * base
            );
        }
    }

    #[test]
    fn linear_field_value_factorizes() {
        // tv == phi_eta(sym(A)) * int rho^2 as a product of module outputs.
        let (dom, rho, k, spec) = setup_2d();
        let a = vec![0.7, -0.1, 0.4, 1.2];
        let u = DisplacementField::linear(2, a.clone()).unwrap();
        let tv = tv_eta(&u, &dom, &rho, &k, &spec).unwrap().value;
        let phi = crate::kernels::phi_eta(&k, &SymMatrix::symmetric_part(&a, 2), &spec).unwrap();
        let mass = integrate_over(&dom, &spec, |x| {
            let w = rho.evaluate(x).unwrap();
            w * w
        });
        assert!(
            (tv - phi * mass).abs() < 1e-10 * tv.max(1.0),
            "{tv} vs {}",
            phi * mass
        );
    }

    #[test]
    fn density_scale_enters_quadratically() {
        let dom = Domain::unit_box(2);
        let k = Kernel::indicator(2, 1.0, 1.0).unwrap();
        let spec = QuadratureSpec::default();
        let u = DisplacementField::linear(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let rho1 =
            Density::unnormalized(&dom, |_: &[f64]| 1.0, 0.5, 2.0, &spec).unwrap();
        let rho3 =
            Density::unnormalized(&dom, |_: &[f64]| 3.0, 0.5, 4.0, &spec).unwrap();
        let v1 = tv_eta(&u, &dom, &rho1, &k, &spec).unwrap().value;
        let v3 = tv_eta(&u, &dom, &rho3, &k, &spec).unwrap().value;
        assert!((v3 - 9.0 * v1).abs() < 1e-9 * v3, "{v3} vs {}", 9.0 * v1);
    }

    #[test]
    fn polar_decomposition_is_norm_independent() {
        // phi(E/|E|_F) |E|_F == phi(E/|E|_inf) |E|_inf by 1-homogeneity.
        let k = Kernel::indicator(2, 1.0, 1.0).unwrap();
        let spec = QuadratureSpec::default();
        let rule = PhiEtaRule::new(&k, &spec).unwrap();
        let mut e = SymMatrix::zero(2);
        e.set(0, 0, 1.1);
        e.set(1, 0, -0.4);
        e.set(1, 1, 0.6);
        let fro = e.frobenius_norm();
        let inf = e.inf_norm();
        let via_fro = rule.apply(&e.scaled(1.0 / fro)) * fro;
        let via_inf = rule.apply(&e.scaled(1.0 / inf)) * inf;
        assert!(
            (via_fro - via_inf).abs() < 1e-12 * via_fro,
            "{via_fro} vs {via_inf}"
        );
    }

    #[test]
    fn jump_in_one_dimension() {
        // Unit jump at 1/2 on (0,1), rho = 1: phi_eta([u] (.) nu) with
        // [u] = 1, nu = 1 gives 2/3 by the scalar formula.
        let dom = Domain::unit_box(1);
        let rho = Density::uniform(&dom);
        let k = Kernel::indicator(1, 1.0, 1.0).unwrap();
        let spec = QuadratureSpec::default();
        let zero = AffineMotion::new(vec![0.0], vec![0.0]).unwrap();
        let one = AffineMotion::new(vec![1.0], vec![0.0]).unwrap();
        let u = DisplacementField::piecewise_rigid(zero, one, HyperplaneSegment::point_1d(0.5))
            .unwrap();
        let r = tv_eta(&u, &dom, &rho, &k, &spec).unwrap();
        assert_eq!(r.volume_part, 0.0);
        assert!((r.jump_part - 2.0 / 3.0).abs() < 1e-12, "{}", r.jump_part);
    }
}
