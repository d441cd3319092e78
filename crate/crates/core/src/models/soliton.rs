use serde::Serialize;

use super::{unit_ball_volume, unit_sphere_area};

/// Underlying manifold of a catalog gradient shrinking soliton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitonBase {
    /// Flat `ℝⁿ` with `f = |x|²/4λ`.
    Gaussian { n: usize },
    /// Unit round `Sⁿ`, Einstein with `λ = 1/(2(n−1))`.
    Sphere { n: usize },
    /// `Sᵐ × ℝ` with the unit round factor.
    Cylinder { m: usize },
}

/// `(M, g, f)` with `Ric + Hess f = g/(2λ)`. Points are a radial coordinate
/// (Gaussian), a polar angle (sphere), or `(angle, x)` (cylinder).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolitonModel {
    pub base: SolitonBase,
    pub lambda: f64,
    /// Additive constant on top of the normalized potential.
    pub shift: f64,
}

impl SolitonModel {
    pub fn gaussian(n: usize, lambda: f64) -> Self {
        Self {
            base: SolitonBase::Gaussian { n },
            lambda,
            shift: 0.0,
        }
    }

    pub fn sphere(n: usize) -> Self {
        assert!(n >= 2);
        Self {
            base: SolitonBase::Sphere { n },
            lambda: 0.5 / (n - 1) as f64,
            shift: 0.0,
        }
    }

    pub fn cylinder(m: usize) -> Self {
        assert!(m >= 2);
        Self {
            base: SolitonBase::Cylinder { m },
            lambda: 0.5 / (m - 1) as f64,
            shift: 0.0,
        }
    }

    /// The same soliton with `f` moved by a constant.
    pub fn shifted(mut self, by: f64) -> Self {
        self.shift += by;
        self
    }

    pub fn dimension(&self) -> usize {
        match self.base {
            SolitonBase::Gaussian { n } | SolitonBase::Sphere { n } => n,
            SolitonBase::Cylinder { m } => m + 1,
        }
    }

    /// Einstein solitons have constant potential.
    pub fn is_einstein(&self) -> bool {
        matches!(self.base, SolitonBase::Sphere { .. })
    }

    pub fn potential(&self, q: [f64; 2]) -> f64 {
        let l = self.lambda;
        self.shift
            + match self.base {
                SolitonBase::Gaussian { .. } => q[0] * q[0] / (4.0 * l),
                SolitonBase::Sphere { n } => n as f64 / 2.0,
                SolitonBase::Cylinder { m } => q[1] * q[1] / (4.0 * l) + m as f64 / 2.0,
            }
    }

    pub fn grad_potential_sq(&self, q: [f64; 2]) -> f64 {
        let l = self.lambda;
        match self.base {
            SolitonBase::Gaussian { .. } => q[0] * q[0] / (4.0 * l * l),
            SolitonBase::Sphere { .. } => 0.0,
            SolitonBase::Cylinder { .. } => q[1] * q[1] / (4.0 * l * l),
        }
    }

    pub fn scalar_curvature(&self) -> f64 {
        match self.base {
            SolitonBase::Gaussian { .. } => 0.0,
            SolitonBase::Sphere { n } => (n * (n - 1)) as f64,
            SolitonBase::Cylinder { m } => (m * (m - 1)) as f64,
        }
    }

    /// `λ(|∇f|² + R) − f` at `q`.
    pub fn normalization_residual(&self, q: [f64; 2]) -> f64 {
        self.lambda * (self.grad_potential_sq(q) + self.scalar_curvature()) - self.potential(q)
    }

    /// Largest |residual| over a default set of sample points.
    pub fn max_normalization_residual(&self) -> f64 {
        (0..24)
            .map(|i| {
                let t = i as f64 * 0.37;
                self.normalization_residual([t, t - 3.0]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Density of `dμ` in the reduced coordinates (radius, polar angle, or
    /// angle × line).
    pub fn reduced_measure(&self, u: f64) -> f64 {
        match self.base {
            SolitonBase::Gaussian { n } => n as f64 * unit_ball_volume(n) * u.powi(n as i32 - 1),
            SolitonBase::Sphere { n } => unit_sphere_area(n - 1) * u.sin().powi(n as i32 - 1),
            SolitonBase::Cylinder { m } => unit_sphere_area(m - 1) * u.sin().powi(m as i32 - 1),
        }
    }

    /// Total volume of the compact factor (the whole manifold for spheres).
    pub fn compact_volume(&self) -> Option<f64> {
        match self.base {
            SolitonBase::Gaussian { .. } => None,
            SolitonBase::Sphere { n } => Some(unit_sphere_area(n)),
            SolitonBase::Cylinder { m } => Some(unit_sphere_area(m)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_solitons_are_normalized() {
        for s in [
            SolitonModel::gaussian(3, 1.0),
            SolitonModel::gaussian(2, 0.25),
            SolitonModel::sphere(2),
            SolitonModel::sphere(4),
            SolitonModel::cylinder(2),
        ] {
            assert!(s.max_normalization_residual() < 1e-12, "{s:?}");
        }
        let s = SolitonModel::sphere(3);
        assert_eq!(s.potential([0.1, 0.0]), 1.5);
        assert!(SolitonModel::sphere(2).shifted(0.3).max_normalization_residual() > 0.29);
    }
}
