use nalgebra::linalg::LU;
use nalgebra::Dyn;

use crate::par::{gaussian_vector, seeded_rng};
use crate::{Error, Matrix, Result, Vector};

/// Invertible affine map `y ↦ By + b`.
#[derive(Clone, Debug)]
pub struct AffineMap {
    matrix: Matrix,
    offset: Vector,
    lu: LU<f64, Dyn, Dyn>,
    sigma_min: f64,
    sigma_max: f64,
}

impl AffineMap {
    pub fn new(matrix: Matrix, offset: Vector) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || matrix.ncols() != d {
            return Err(Error::InvalidInput("affine map needs a non-empty square matrix".into()));
        }
        Error::check_dim(d, offset.len())?;
        let sv = matrix.clone().svd(false, false).singular_values;
        let (sigma_min, sigma_max) = (sv.min(), sv.max());
        if !(sigma_min > 0.0) || sigma_max / sigma_min > 1e15 {
            return Err(Error::InvalidInput("affine map matrix is singular".into()));
        }
        let lu = matrix.clone().lu();
        Ok(Self { matrix, offset, lu, sigma_min, sigma_max })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(Matrix::identity(dim, dim), Vector::zeros(dim)).expect("identity is invertible")
    }

    pub fn linear(matrix: Matrix) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(matrix, Vector::zeros(d))
    }

    /// `B = U diag(s) Vᵀ` with Haar-like orthogonal factors, singular values
    /// log-spaced over `[κ^{-1/2}, κ^{1/2}]`, and a small Gaussian offset.
    pub fn random(dim: usize, condition_number: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("affine map dimension must be positive".into()));
        }
        if !(condition_number >= 1.0 && condition_number.is_finite()) {
            return Err(Error::InvalidInput(format!("condition number must be at least 1, got {condition_number}")));
        }
        if dim == 1 && condition_number != 1.0 {
            return Err(Error::InvalidInput("a one-dimensional map has condition number 1".into()));
        }
        let mut rng = seeded_rng(seed);
        let mut orthogonal = || {
            let g = Matrix::from_fn(dim, dim, |_, _| {
                rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
            });
            g.qr().q()
        };
        let u = orthogonal();
        let v = orthogonal();
        let log_k = condition_number.ln();
        let s = Vector::from_fn(dim, |i, _| {
            let t = if dim == 1 { 0.5 } else { i as f64 / (dim - 1) as f64 };
            ((t - 0.5) * log_k).exp()
        });
        let matrix = u * Matrix::from_diagonal(&s) * v.transpose();
        let offset = gaussian_vector(&mut rng, dim) * 0.1;
        Self::new(matrix, offset)
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn condition_number(&self) -> f64 {
        self.sigma_max / self.sigma_min
    }

    /// `By + b`.
    pub fn apply(&self, y: &Vector) -> Vector {
        &self.matrix * y + &self.offset
    }

    /// `B⁻¹(x − b)`.
    pub fn invert(&self, x: &Vector) -> Vector {
        self.lu.solve(&(x - &self.offset)).expect("matrix was checked to be invertible")
    }

    /// `B⁻¹ v` for a direction (no offset).
    pub fn solve_linear(&self, v: &Vector) -> Vector {
        self.lu.solve(v).expect("matrix was checked to be invertible")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn random_map_hits_condition_number() {
        for &k in &[1.0, 1e2, 1e6] {
            let m = AffineMap::random(6, k, 5).unwrap();
            assert_relative_eq!(m.condition_number(), k, max_relative = 1e-8);
        }
    }

    #[test]
    fn singular_map_is_rejected() {
        let mut b = Matrix::identity(3, 3);
        b[(2, 2)] = 0.0;
        assert!(AffineMap::linear(b).is_err());
        assert!(AffineMap::random(3, 0.5, 1).is_err());
    }

    #[test]
    fn round_trip() {
        let m = AffineMap::random(8, 1e6, 9).unwrap();
        let mut rng = seeded_rng(1);
        for _ in 0..20 {
            let x = gaussian_vector(&mut rng, 8);
            let back = m.apply(&m.invert(&x));
            assert!((&x - back).norm() <= 1e-8 * m.condition_number() * x.norm());
        }
    }
}
