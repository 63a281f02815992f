use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::linalg::LU;
use nalgebra::{Cholesky, Dyn};

use super::affine::AffineMap;
use crate::geometry::{analytic_ball_certificate, ChordInset, ConvexBody, StrongConvexityCertificate};
use crate::{Error, Matrix, Result, Vector};

/// Default relative membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// `argmin_{‖v − c‖ ≤ r} ⟨g, v⟩ = c − r g/‖g‖`.
pub fn lmo_ball(radius: f64, center: &Vector, g: &Vector) -> Result<Vector> {
    Error::check_dim(center.len(), g.len())?;
    let n = g.norm();
    if n == 0.0 {
        return Err(Error::DegenerateGradient);
    }
    if !n.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(center - g * (radius / n))
}

/// `argmin_{vᵀAv ≤ r²} ⟨g, v⟩ = −r A⁻¹g / √(gᵀA⁻¹g)`.
pub fn lmo_ellipsoid(shape: &Matrix, level: f64, g: &Vector) -> Result<Vector> {
    Error::check_dim(shape.nrows(), g.len())?;
    let chol = Cholesky::new(shape.clone())
        .ok_or_else(|| Error::InvalidInput("ellipsoid shape must be symmetric positive definite".into()))?;
    if g.norm() == 0.0 {
        return Err(Error::DegenerateGradient);
    }
    let u = chol.solve(g);
    let q = g.dot(&u);
    Ok(u * (-level.sqrt() / q.sqrt()))
}

/// `{x : ‖M(x − c)‖ ≤ r}`; a ball when `M` is the identity.
pub struct FeasibleSet {
    factor: Matrix,
    center: Vector,
    radius: f64,
    is_ball: bool,
    factor_lu: LU<f64, Dyn, Dyn>,
    factor_t_lu: LU<f64, Dyn, Dyn>,
    tolerance: f64,
    lmo_calls: AtomicU64,
}

impl std::fmt::Debug for FeasibleSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeasibleSet")
            .field("kind", &self.kind_name())
            .field("dim", &self.dim())
            .field("radius", &self.radius)
            .field("center", &self.center)
            .finish()
    }
}

impl Clone for FeasibleSet {
    fn clone(&self) -> Self {
        Self {
            factor: self.factor.clone(),
            center: self.center.clone(),
            radius: self.radius,
            is_ball: self.is_ball,
            factor_lu: self.factor_lu.clone(),
            factor_t_lu: self.factor_t_lu.clone(),
            tolerance: self.tolerance,
            lmo_calls: AtomicU64::new(self.lmo_calls.load(Ordering::Relaxed)),
        }
    }
}

impl FeasibleSet {
    fn from_parts(factor: Matrix, center: Vector, radius: f64, is_ball: bool) -> Result<Self> {
        let d = center.len();
        if d == 0 || factor.nrows() != d || factor.ncols() != d {
            return Err(Error::InvalidInput("set factor must be a square matrix matching the center".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("set radius must be positive, got {radius}")));
        }
        let factor_lu = factor.clone().lu();
        if !factor_lu.is_invertible() {
            return Err(Error::InvalidInput("set shape is singular".into()));
        }
        let factor_t_lu = factor.transpose().lu();
        Ok(Self {
            factor,
            center,
            radius,
            is_ball,
            factor_lu,
            factor_t_lu,
            tolerance: MEMBERSHIP_TOL,
            lmo_calls: AtomicU64::new(0),
        })
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        let d = center.len();
        Self::from_parts(Matrix::identity(d, d), center, radius, true)
    }

    pub fn centered_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::ball(Vector::zeros(dim), radius)
    }

    /// `{x : (x − c)ᵀA(x − c) ≤ level}` for symmetric positive definite `A`.
    pub fn ellipsoid(shape: Matrix, level: f64, center: Vector) -> Result<Self> {
        Error::check_dim(center.len(), shape.nrows())?;
        if !(level > 0.0) {
            return Err(Error::InvalidInput(format!("ellipsoid level must be positive, got {level}")));
        }
        let chol = Cholesky::new(shape)
            .ok_or_else(|| Error::InvalidInput("ellipsoid shape must be symmetric positive definite".into()))?;
        Self::from_parts(chol.l().transpose(), center, level.sqrt(), false)
    }

    /// `{x : ‖M(x − c)‖ ≤ r}` for invertible `M`.
    pub fn from_factor(factor: Matrix, center: Vector, radius: f64) -> Result<Self> {
        Self::from_parts(factor, center, radius, false)
    }

    /// Closed-form Euclidean strong-convexity constant: the set is an
    /// intersection of balls of its largest radius of curvature
    /// `a_max² / a_min` (semi-axes `a`), and no larger constant fits at the
    /// flattest boundary point.
    pub fn euclidean_certificate(&self, variant: ChordInset) -> Result<StrongConvexityCertificate> {
        let sv = self.factor.singular_values();
        let a_max = self.radius / sv.min();
        let a_min = self.radius / sv.max();
        let mut cert = analytic_ball_certificate(a_max * a_max / a_min, variant)?;
        cert.gauge = "l2".into();
        Ok(cert)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn is_ball(&self) -> bool {
        self.is_ball
    }

    pub fn kind_name(&self) -> &'static str {
        if self.is_ball {
            "ball"
        } else {
            "ellipsoid"
        }
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    /// Radius `r` in `‖M(x − c)‖ ≤ r`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Level `r²` paired with [`FeasibleSet::shape`].
    pub fn level(&self) -> f64 {
        self.radius * self.radius
    }

    /// Shape matrix `A = MᵀM`.
    pub fn shape(&self) -> Matrix {
        self.factor.tr_mul(&self.factor)
    }

    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `‖M(x − c)‖ / r`; at most one for members.
    pub fn normalized_radius(&self, x: &Vector) -> f64 {
        (&self.factor * (x - &self.center)).norm() / self.radius
    }

    /// Membership up to the relative tolerance.
    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim() && self.normalized_radius(x) <= 1.0 + self.tolerance
    }

    /// Counted linear minimization oracle `argmin_{v ∈ C} ⟨g, v⟩`.
    pub fn lmo(&self, g: &Vector) -> Result<Vector> {
        self.lmo_calls.fetch_add(1, Ordering::Relaxed);
        self.lmo_uncounted(g)
    }

    pub fn lmo_uncounted(&self, g: &Vector) -> Result<Vector> {
        if self.is_ball {
            return lmo_ball(self.radius, &self.center, g);
        }
        Error::check_dim(self.dim(), g.len())?;
        if g.norm() == 0.0 {
            return Err(Error::DegenerateGradient);
        }
        let w = self.factor_t_lu.solve(g).ok_or(Error::NonFinite)?;
        let wn = w.norm();
        if !wn.is_finite() {
            return Err(Error::NonFinite);
        }
        let u = self.factor_lu.solve(&w).ok_or(Error::NonFinite)?;
        Ok(&self.center - u * (self.radius / wn))
    }

    pub fn lmo_calls(&self) -> u64 {
        self.lmo_calls.load(Ordering::Relaxed)
    }

    pub fn reset_counters(&self) {
        self.lmo_calls.store(0, Ordering::Relaxed);
    }

    /// `{y : By + b ∈ C}`: factor `MB`, center `B⁻¹(c − b)`.
    pub fn pull_back(&self, map: &AffineMap) -> Result<Self> {
        Error::check_dim(self.dim(), map.dim())?;
        let factor = &self.factor * map.matrix();
        let center = map.invert(&self.center);
        Self::from_parts(factor, center, self.radius, false).map(|s| s.with_tolerance(self.tolerance))
    }
}

impl ConvexBody for FeasibleSet {
    fn dim(&self) -> usize {
        FeasibleSet::dim(self)
    }

    fn contains(&self, x: &Vector) -> bool {
        FeasibleSet::contains(self, x)
    }

    fn reference_point(&self) -> Vector {
        self.center.clone()
    }

    fn boundary_point(&self, u: &Vector) -> Vector {
        &self.center + u * (self.radius / (&self.factor * u).norm())
    }

    fn exit_distance(&self, p: &Vector, z: &Vector) -> f64 {
        let mp = &self.factor * (p - &self.center);
        let mz = &self.factor * z;
        let a = mz.norm_squared();
        let b = mp.dot(&mz);
        let c = mp.norm_squared() - self.radius * self.radius;
        let disc = b * b - a * c;
        if a == 0.0 || disc < 0.0 {
            return 0.0;
        }
        let root = disc.sqrt();
        // Larger root of a t² + 2b t + c, written to avoid cancellation.
        let t = if b > 0.0 { -c / (b + root) } else { (root - b) / a };
        t.max(0.0)
    }

    fn support_point(&self, phi: &Vector) -> Result<Vector> {
        self.lmo_uncounted(&-phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn ball_lmo_examples() {
        let z = dvector![0.0, 0.0];
        assert_relative_eq!(lmo_ball(1.0, &z, &dvector![3.0, 4.0]).unwrap(), dvector![-0.6, -0.8]);
        assert_relative_eq!(lmo_ball(2.0, &z, &dvector![1.0, 0.0]).unwrap(), dvector![-2.0, 0.0]);
        assert_relative_eq!(lmo_ball(1.0, &dvector![1.0, 0.0], &dvector![0.0, 1.0]).unwrap(), dvector![1.0, -1.0]);
        assert!(matches!(lmo_ball(1.0, &z, &z), Err(Error::DegenerateGradient)));
    }

    #[test]
    fn ellipsoid_lmo_examples() {
        let i = Matrix::identity(2, 2);
        assert_relative_eq!(lmo_ellipsoid(&i, 1.0, &dvector![3.0, 4.0]).unwrap(), dvector![-0.6, -0.8]);
        let a = dmatrix![1.0, 0.0; 0.0, 4.0];
        assert_relative_eq!(lmo_ellipsoid(&a, 1.0, &dvector![0.0, 1.0]).unwrap(), dvector![0.0, -0.5]);
        let b = dmatrix![4.0, 0.0; 0.0, 1.0];
        assert_relative_eq!(lmo_ellipsoid(&b, 1.0, &dvector![1.0, 0.0]).unwrap(), dvector![-0.5, 0.0]);
        assert!(lmo_ellipsoid(&dmatrix![1.0, 0.0; 0.0, 0.0], 1.0, &dvector![1.0, 0.0]).is_err());
    }

    #[test]
    fn set_lmo_matches_free_function() {
        let a = dmatrix![2.0, 0.5; 0.5, 1.0];
        let set = FeasibleSet::ellipsoid(a.clone(), 3.0, Vector::zeros(2)).unwrap();
        let g = dvector![0.3, -1.7];
        assert_relative_eq!(set.lmo(&g).unwrap(), lmo_ellipsoid(&a, 3.0, &g).unwrap(), epsilon = 1e-12);
        assert_eq!(set.lmo_calls(), 1);
        assert_relative_eq!(set.shape(), a, epsilon = 1e-12);
    }

    #[test]
    fn pull_back_of_unit_ball_is_scaled_ellipsoid() {
        let set = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let map = AffineMap::linear(dmatrix![2.0, 0.0; 0.0, 1.0]).unwrap();
        let pulled = set.pull_back(&map).unwrap();
        assert_relative_eq!(pulled.shape(), dmatrix![4.0, 0.0; 0.0, 1.0]);
        assert!(pulled.contains(&dvector![0.5, 0.0]));
        assert!(!pulled.contains(&dvector![0.51, 0.0]));
        assert!(pulled.contains(&dvector![0.0, 1.0]));
    }

    #[test]
    fn exit_distance_from_center_and_near_boundary() {
        let set = FeasibleSet::centered_ball(2, 2.0).unwrap();
        assert_relative_eq!(set.exit_distance(&dvector![0.0, 0.0], &dvector![0.0, 1.0]), 2.0);
        assert_relative_eq!(set.exit_distance(&dvector![1.0, 0.0], &dvector![1.0, 0.0]), 1.0);
        assert_relative_eq!(set.exit_distance(&dvector![2.0, 0.0], &dvector![-1.0, 0.0]), 4.0);
        assert_eq!(set.exit_distance(&dvector![2.0, 0.0], &dvector![1.0, 0.0]), 0.0);
    }
}
