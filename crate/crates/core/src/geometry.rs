//! Gauges, support functions and sampled strong-convexity certificates.

use nalgebra::Cholesky;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::par::{unit_direction, Sampling};
use crate::{Error, Matrix, Result, Vector};

const BISECTION_REL_TOL: f64 = 1e-12;

/// The unit body `Q` whose Minkowski functional defines a gauge.
#[derive(Clone, Debug)]
pub enum GaugeBody {
    /// `{x : ‖x‖ ≤ radius}`.
    NormBall { radius: f64 },
    /// `{x : xᵀ A x ≤ 1}` for a symmetric positive definite `A`.
    Ellipsoid { shape: Matrix },
    /// `{x : ‖x − center‖ ≤ radius}` with `‖center‖ < radius`, so the origin is interior.
    ShiftedBall { center: Vector, radius: f64 },
}

/// Minkowski functional `ω(x) = min{τ ≥ 0 : x ∈ τQ}` of a compact convex body
/// containing the origin in its interior.
#[derive(Clone, Debug)]
pub struct Gauge {
    body: GaugeBody,
    dim: usize,
    chol: Option<Cholesky<f64, nalgebra::Dyn>>,
}

impl Gauge {
    /// Plain Euclidean norm.
    pub fn euclidean(dim: usize) -> Self {
        Self::norm_ball(dim, 1.0).expect("unit radius is valid")
    }

    pub fn norm_ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("gauge dimension must be positive".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("gauge radius must be positive, got {radius}")));
        }
        Ok(Self { body: GaugeBody::NormBall { radius }, dim, chol: None })
    }

    pub fn ellipsoid(shape: Matrix) -> Result<Self> {
        let dim = shape.nrows();
        if dim == 0 || shape.ncols() != dim {
            return Err(Error::InvalidInput("ellipsoid shape must be a non-empty square matrix".into()));
        }
        if (&shape - shape.transpose()).amax() > 1e-12 * (1.0 + shape.amax()) {
            return Err(Error::InvalidInput("ellipsoid shape must be symmetric".into()));
        }
        let chol = Cholesky::new(shape.clone())
            .ok_or_else(|| Error::InvalidInput("ellipsoid shape must be positive definite".into()))?;
        Ok(Self { body: GaugeBody::Ellipsoid { shape }, dim, chol: Some(chol) })
    }

    pub fn shifted_ball(center: Vector, radius: f64) -> Result<Self> {
        let dim = center.len();
        if dim == 0 {
            return Err(Error::InvalidInput("gauge dimension must be positive".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) || center.norm() >= radius {
            return Err(Error::InvalidInput(
                "shifted ball needs a positive radius larger than the center's norm".into(),
            ));
        }
        Ok(Self { body: GaugeBody::ShiftedBall { center, radius }, dim, chol: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn body(&self) -> &GaugeBody {
        &self.body
    }

    pub fn label(&self) -> String {
        match &self.body {
            GaugeBody::NormBall { radius } if *radius == 1.0 => "l2".into(),
            GaugeBody::NormBall { radius } => format!("l2/{radius}"),
            GaugeBody::Ellipsoid { .. } => "ellipsoid".into(),
            GaugeBody::ShiftedBall { center, radius } => {
                format!("shifted(|c|={:.3},r={radius})", center.norm())
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self.body, GaugeBody::ShiftedBall { .. })
    }

    /// `ω(x)`.
    pub fn eval(&self, x: &Vector) -> Result<f64> {
        Error::check_dim(self.dim, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    /// `ω_*(v) = max_{ω(x) ≤ 1} ⟨v, x⟩`, the support function of the unit body.
    pub fn dual(&self, v: &Vector) -> Result<f64> {
        Error::check_dim(self.dim, v.len())?;
        Ok(self.dual_unchecked(v))
    }

    pub(crate) fn eval_unchecked(&self, x: &Vector) -> f64 {
        match &self.body {
            GaugeBody::NormBall { radius } => x.norm() / radius,
            GaugeBody::Ellipsoid { shape } => x.dot(&(shape * x)).max(0.0).sqrt(),
            GaugeBody::ShiftedBall { center, radius } => shifted_ball_gauge(x, center, *radius),
        }
    }

    pub(crate) fn dual_unchecked(&self, v: &Vector) -> f64 {
        match &self.body {
            GaugeBody::NormBall { radius } => radius * v.norm(),
            GaugeBody::Ellipsoid { .. } => {
                let chol = self.chol.as_ref().expect("ellipsoid gauges carry a factorization");
                v.dot(&chol.solve(v)).max(0.0).sqrt()
            }
            GaugeBody::ShiftedBall { center, radius } => v.dot(center) + radius * v.norm(),
        }
    }

    /// A point of `{ω ≤ 1}` maximizing `⟨v, z⟩`, so that `⟨v, z⟩ = ω_*(v)`.
    pub fn dual_argmax(&self, v: &Vector) -> Vector {
        let n = v.norm();
        if n == 0.0 {
            return Vector::zeros(self.dim);
        }
        match &self.body {
            GaugeBody::NormBall { radius } => v * (radius / n),
            GaugeBody::Ellipsoid { .. } => {
                let chol = self.chol.as_ref().expect("ellipsoid gauges carry a factorization");
                let w = chol.solve(v);
                let d = v.dot(&w).max(f64::MIN_POSITIVE).sqrt();
                w / d
            }
            GaugeBody::ShiftedBall { center, radius } => center + v * (radius / n),
        }
    }

    /// The point of `{ω = 1}` on the ray through `u`.
    pub fn unit_point(&self, u: &Vector) -> Vector {
        u / self.eval_unchecked(u)
    }

    /// Closed-form `sup_x ω(x)/ω(−x)`.
    pub fn analytic_asymmetry(&self) -> f64 {
        match &self.body {
            GaugeBody::ShiftedBall { center, radius } => {
                let c = center.norm();
                (radius + c) / (radius - c)
            }
            _ => 1.0,
        }
    }
}

/// Smallest `τ` with `‖x − τc‖ ≤ τr`, by doubling then bisection.
fn shifted_ball_gauge(x: &Vector, center: &Vector, radius: f64) -> f64 {
    let norm = x.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let inside = |t: f64| {
        let dist2: f64 = x.iter().zip(center.iter()).map(|(a, c)| (a - t * c).powi(2)).sum();
        dist2.sqrt() <= t * radius
    };
    // ‖x‖ ≤ ‖x − τc‖ + τ‖c‖ ≤ τ(r + ‖c‖), so nothing below this bound is a member.
    let mut lo = norm / (radius + center.norm());
    if inside(lo) {
        return lo;
    }
    let mut hi = 2.0 * lo;
    while !inside(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > BISECTION_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Analytic and sampled asymmetry constant of a gauge.
#[derive(Clone, Copy, Debug)]
pub struct AsymmetryReport {
    pub analytic: f64,
    pub sampled: f64,
    pub samples: usize,
}

impl AsymmetryReport {
    /// The sampled maximum may not exceed the analytic supremum.
    pub fn consistent(&self) -> bool {
        self.sampled <= self.analytic + 1e-9
    }
}

/// Analytic `κ_ω` together with the largest `ω(u)/ω(−u)` over random directions.
pub fn asymmetry_constant(gauge: &Gauge, sampling: Sampling) -> AsymmetryReport {
    let dim = gauge.dim();
    let ratios = sampling.map(|rng| {
        let u = unit_direction(rng, dim);
        gauge.eval_unchecked(&u) / gauge.eval_unchecked(&-&u)
    });
    let sampled = ratios.into_iter().fold(f64::NEG_INFINITY, f64::max);
    AsymmetryReport { analytic: gauge.analytic_asymmetry(), sampled, samples: sampling.count }
}

/// A compact convex set that can be probed by the certification routines.
pub trait ConvexBody: Sync {
    fn dim(&self) -> usize;

    /// Membership, up to the body's tolerance.
    fn contains(&self, x: &Vector) -> bool;

    /// A point strictly inside the body from which boundary rays are cast.
    fn reference_point(&self) -> Vector;

    /// Boundary point on the ray from the reference point in direction `u`.
    fn boundary_point(&self, u: &Vector) -> Vector;

    /// Largest `t ≥ 0` with `p + t·z` in the body, for `p` in the body.
    fn exit_distance(&self, p: &Vector, z: &Vector) -> f64;

    /// A maximizer of `⟨φ, v⟩` over the body.
    fn support_point(&self, phi: &Vector) -> Result<Vector>;

    /// Member drawn uniformly in "radius" along a uniformly random ray.
    fn random_member(&self, rng: &mut ChaCha8Rng) -> Vector {
        let center = self.reference_point();
        let u = unit_direction(rng, self.dim());
        let edge = self.boundary_point(&u);
        let s: f64 = rng.random::<f64>().powf(1.0 / self.dim() as f64);
        &center + (edge - &center) * s
    }
}

/// Axis-aligned box `{x : |x_i − c_i| ≤ w_i}`; convex but not strongly convex.
#[derive(Clone, Debug)]
pub struct AxisBox {
    center: Vector,
    half_widths: Vector,
}

impl AxisBox {
    pub fn new(center: Vector, half_widths: Vector) -> Result<Self> {
        Error::check_dim(center.len(), half_widths.len())?;
        if center.is_empty() || half_widths.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidInput("box half-widths must be positive".into()));
        }
        Ok(Self { center, half_widths })
    }

    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(Vector::zeros(dim), Vector::from_element(dim, half_width))
    }
}

impl ConvexBody for AxisBox {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.center.iter().zip(self.half_widths.iter()))
                .all(|(xi, (ci, wi))| (xi - ci).abs() <= wi + 1e-9)
    }

    fn reference_point(&self) -> Vector {
        self.center.clone()
    }

    fn boundary_point(&self, u: &Vector) -> Vector {
        let scale = u.iter().zip(self.half_widths.iter()).map(|(ui, wi)| ui.abs() / wi).fold(0.0, f64::max);
        &self.center + u / scale
    }

    fn exit_distance(&self, p: &Vector, z: &Vector) -> f64 {
        let mut t = f64::INFINITY;
        for i in 0..self.dim() {
            let room = if z[i] > 0.0 {
                (self.center[i] + self.half_widths[i] - p[i]) / z[i]
            } else if z[i] < 0.0 {
                (self.center[i] - self.half_widths[i] - p[i]) / z[i]
            } else {
                continue;
            };
            t = t.min(room);
        }
        t.max(0.0)
    }

    fn support_point(&self, phi: &Vector) -> Result<Vector> {
        Error::check_dim(self.dim(), phi.len())?;
        Ok(Vector::from_fn(self.dim(), |i, _| {
            let w = self.half_widths[i];
            self.center[i] + if phi[i] >= 0.0 { w } else { -w }
        }))
    }
}

/// Which inset a strong-convexity certificate requires around chord points.
///
/// For a chord `x, y`, `γ ∈ (0, 1)` and `z_γ = γx + (1 − γ)y`, the body must
/// contain `z_γ + α·w(γ)·z` for every `z` with `ω(z) = 1`, where `w(γ)` is
///
/// - `Full`: `γ(1 − γ)·(γ ω²(x − y) + (1 − γ) ω²(y − x))`
/// - `Halved`: `γ(1 − γ)·((1 − γ) ω²(x − y) + γ ω²(y − x)) / 2`
///
/// For symmetric gauges `Full` is twice `Halved`, so the same set certifies
/// with half the `α` under `Full`. `Full` is the form for which the scaling
/// inequality `⟨φ, v − x⟩ ≥ α ω_*(φ) ω²(v − x)` follows, so it is the one fed
/// into smoothness bounds; `Halved` reproduces the level-set constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChordInset {
    Full,
    Halved,
}

impl ChordInset {
    pub fn name(self) -> &'static str {
        match self {
            ChordInset::Full => "full",
            ChordInset::Halved => "halved",
        }
    }

    /// Inset weight `w(γ)` given `ω(x − y)` and `ω(y − x)`.
    pub fn weight(self, gamma: f64, forward: f64, backward: f64) -> f64 {
        let g = gamma * (1.0 - gamma);
        match self {
            ChordInset::Full => g * (gamma * forward * forward + (1.0 - gamma) * backward * backward),
            ChordInset::Halved => 0.5 * g * ((1.0 - gamma) * forward * forward + gamma * backward * backward),
        }
    }
}

impl std::str::FromStr for ChordInset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ChordInset::Full),
            "halved" => Ok(ChordInset::Halved),
            other => Err(Error::InvalidInput(format!("unknown inset variant '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateStatus {
    Analytic,
    Sampled,
}

#[derive(Clone, Debug)]
pub struct StrongConvexityCertificate {
    pub alpha: f64,
    pub gauge: String,
    pub variant: ChordInset,
    pub sample_budget: usize,
    pub seed: Option<u64>,
    pub status: CertificateStatus,
}

/// Strong-convexity constant of a Euclidean ball of radius `radius` under the
/// Euclidean gauge.
pub fn analytic_ball_certificate(radius: f64, variant: ChordInset) -> Result<StrongConvexityCertificate> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
    }
    let alpha = match variant {
        ChordInset::Full => 0.5 / radius,
        ChordInset::Halved => 1.0 / radius,
    };
    Ok(StrongConvexityCertificate {
        alpha,
        gauge: "l2".into(),
        variant,
        sample_budget: 0,
        seed: None,
        status: CertificateStatus::Analytic,
    })
}

struct ChordSample {
    point: Vector,
    direction: Vector,
    weight: f64,
}

fn draw_chord(set: &dyn ConvexBody, gauge: &Gauge, variant: ChordInset, rng: &mut ChaCha8Rng) -> ChordSample {
    let dim = set.dim();
    let (x, y, gamma, direction) = if rng.random::<bool>() {
        let x = set.boundary_point(&unit_direction(rng, dim));
        let y = set.boundary_point(&unit_direction(rng, dim));
        let gamma = loop {
            let g: f64 = rng.random();
            if g > 0.0 {
                break g;
            }
        };
        (x, y, gamma, gauge.unit_point(&unit_direction(rng, dim)))
    } else {
        // Near-tangent chord: one end at a support point, the chord point close
        // to it and the inset pushed along the normal as far as the gauge allows.
        let phi = unit_direction(rng, dim);
        let support = set.support_point(&phi).unwrap_or_else(|_| set.boundary_point(&phi));
        let other = set.boundary_point(&unit_direction(rng, dim));
        let small = 10f64.powf(-6.0 * rng.random::<f64>());
        let direction = gauge.dual_argmax(&phi);
        if rng.random::<bool>() {
            (other, support, small, direction)
        } else {
            (support, other, 1.0 - small, direction)
        }
    };
    let diff = &x - &y;
    let weight = variant.weight(gamma, gauge.eval_unchecked(&diff), gauge.eval_unchecked(&-&diff));
    let point = &x * gamma + &y * (1.0 - gamma);
    ChordSample { point, direction, weight }
}

/// Largest `α` for which every sampled chord inset lies in the body.
///
/// Each sample `(x, y, γ, z)` admits exactly the `α` up to
/// `t_exit / w(γ)`, where `t_exit` is how far the body extends from the chord
/// point along `z`. The certificate is the minimum of those ceilings, i.e. the
/// limit a bisection over `α` against the same samples converges to. It is
/// an upper estimate of the true constant and is marked as sampled.
///
/// Half the samples are uniform (boundary endpoints, `γ` uniform in `(0, 1)`,
/// `z` uniform on the gauge sphere); the other half are near-tangent chords
/// ending at a support point with `γ` log-uniform down to `1e-6`.
pub fn strong_convexity_oracle(
    set: &dyn ConvexBody,
    gauge: &Gauge,
    variant: ChordInset,
    sampling: Sampling,
) -> Result<StrongConvexityCertificate> {
    Error::check_dim(set.dim(), gauge.dim())?;
    if sampling.count < 100 {
        return Err(Error::InvalidInput(format!(
            "strong-convexity oracle needs at least 100 samples, got {}",
            sampling.count
        )));
    }
    let ceilings = sampling.map(|rng| -> Result<f64> {
        let s = draw_chord(set, gauge, variant, rng);
        if !set.contains(&s.point) {
            return Err(Error::Data("sampled chord point lies outside the set; the set is not convex".into()));
        }
        if s.weight <= f64::MIN_POSITIVE {
            return Ok(f64::INFINITY);
        }
        let exit = set.exit_distance(&s.point, &s.direction);
        // Chord points within rounding of the boundary carry no information.
        if exit <= 1e-6 * (1.0 + s.point.norm()) {
            return Ok(f64::INFINITY);
        }
        Ok(exit / s.weight)
    });
    let mut alpha = f64::INFINITY;
    for c in ceilings {
        alpha = alpha.min(c?);
    }
    if !alpha.is_finite() {
        return Err(Error::Estimation("no informative chord was sampled".into()));
    }
    Ok(StrongConvexityCertificate {
        alpha,
        gauge: gauge.label(),
        variant,
        sample_budget: sampling.count,
        seed: Some(sampling.seed),
        status: CertificateStatus::Sampled,
    })
}

/// Fraction of sampled chord insets that stay inside the body at a fixed `α`.
pub fn containment_rate(
    set: &dyn ConvexBody,
    gauge: &Gauge,
    variant: ChordInset,
    alpha: f64,
    sampling: Sampling,
) -> Result<f64> {
    Error::check_dim(set.dim(), gauge.dim())?;
    let hits = sampling.map(|rng| {
        let s = draw_chord(set, gauge, variant, rng);
        set.contains(&(&s.point + &s.direction * (alpha * s.weight)))
    });
    Ok(hits.iter().filter(|h| **h).count() as f64 / sampling.count.max(1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingCheck {
    pub holds: bool,
    pub slack: f64,
}

/// Evaluates `⟨φ, v − x⟩ − α ω_*(φ) ω²(v − x)` with `v = argmax_{v ∈ C} ⟨φ, v⟩`.
pub fn scaling_inequality_check(
    set: &dyn ConvexBody,
    gauge: &Gauge,
    alpha: f64,
    x: &Vector,
    phi: &Vector,
) -> Result<ScalingCheck> {
    Error::check_dim(set.dim(), x.len())?;
    Error::check_dim(set.dim(), gauge.dim())?;
    if !set.contains(x) {
        return Err(Error::InvalidInput("scaling inequality point lies outside the set".into()));
    }
    let v = set.support_point(phi)?;
    let delta = &v - x;
    let lhs = phi.dot(&delta);
    let rhs = alpha * gauge.dual(phi)? * gauge.eval(&delta)?.powi(2);
    let slack = lhs - rhs;
    Ok(ScalingCheck { holds: slack >= -1e-12 * (1.0 + lhs.abs()), slack })
}

/// Strong-convexity constant `μ / (κ √(2 L R))` of the level set `{f ≤ R}` of an
/// `L`-smooth, `μ`-strongly convex function with minimum value zero.
pub fn level_set_alpha(l: f64, mu: f64, level: f64, kappa: f64) -> Result<f64> {
    if !(l > 0.0 && mu > 0.0 && level > 0.0 && kappa > 0.0) {
        return Err(Error::InvalidInput("level-set constants must be positive".into()));
    }
    if l < mu {
        return Err(Error::InvalidInput(format!("smoothness {l} is below strong convexity {mu}")));
    }
    if kappa < 1.0 {
        return Err(Error::InvalidInput(format!("asymmetry constant must be at least 1, got {kappa}")));
    }
    Ok(mu / (kappa * (2.0 * l * level).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn gauge_examples() {
        let g = Gauge::euclidean(2);
        assert_relative_eq!(g.eval(&dvector![3.0, 4.0]).unwrap(), 5.0);
        assert_relative_eq!(g.dual(&dvector![3.0, 4.0]).unwrap(), 5.0);

        let e = Gauge::ellipsoid(Matrix::from_diagonal(&dvector![0.25, 1.0])).unwrap();
        assert_relative_eq!(e.eval(&dvector![2.0, 0.0]).unwrap(), 1.0);
        assert_relative_eq!(e.dual(&dvector![1.0, 0.0]).unwrap(), 2.0, epsilon = 1e-14);

        let s = Gauge::shifted_ball(dvector![0.5, 0.0], 1.0).unwrap();
        assert_relative_eq!(s.eval(&dvector![-1.5, 0.0]).unwrap(), 3.0, max_relative = 1e-11);
        assert_relative_eq!(s.dual(&dvector![1.0, 0.0]).unwrap(), 1.5);
        assert_relative_eq!(s.analytic_asymmetry(), 3.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = Gauge::euclidean(3);
        assert!(matches!(g.eval(&dvector![1.0]), Err(Error::DimensionMismatch { expected: 3, found: 1 })));
        assert!(g.dual(&dvector![1.0, 2.0]).is_err());
    }

    #[test]
    fn invalid_bodies_are_rejected() {
        assert!(Gauge::shifted_ball(dvector![1.0, 0.0], 1.0).is_err());
        assert!(Gauge::norm_ball(2, 0.0).is_err());
        assert!(Gauge::ellipsoid(Matrix::from_diagonal(&dvector![1.0, -1.0])).is_err());
    }

    #[test]
    fn level_set_alpha_examples() {
        assert_relative_eq!(level_set_alpha(1.0, 1.0, 1.0, 1.0).unwrap(), 1.0 / 2f64.sqrt());
        assert_relative_eq!(level_set_alpha(2.0, 1.0, 1.0, 1.0).unwrap(), 0.5);
        assert_relative_eq!(level_set_alpha(1.0, 1.0, 1.0, 3.0).unwrap(), 1.0 / (3.0 * 2f64.sqrt()));
        assert!(level_set_alpha(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(level_set_alpha(0.5, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn inset_weights_relate_for_symmetric_gauges() {
        for &g in &[0.1, 0.5, 0.9] {
            let full = ChordInset::Full.weight(g, 2.0, 2.0);
            let half = ChordInset::Halved.weight(g, 2.0, 2.0);
            assert_relative_eq!(full, 2.0 * half);
        }
    }

    #[test]
    fn box_exit_distance_and_support() {
        let b = AxisBox::cube(2, 1.0).unwrap();
        assert_relative_eq!(b.exit_distance(&dvector![0.0, 0.0], &dvector![1.0, 0.5]), 1.0);
        assert_eq!(b.support_point(&dvector![1.0, -2.0]).unwrap(), dvector![1.0, -1.0]);
        assert_eq!(b.boundary_point(&dvector![0.5, 0.25]), dvector![1.0, 0.5]);
    }
}
