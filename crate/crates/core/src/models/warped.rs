//! Rotationally symmetric static surfaces `dρ² + φ(ρ)² dθ²`.
//!
//! Geodesic balls centered at the pole are handled in closed form. Balls
//! centered off the pole are measured by shooting geodesics from the center
//! (Clairaut integral plus Jacobi field) and stopping each ray where it
//! crosses the meridian opposite the center, which is where the cut locus of a
//! surface with curvature decreasing away from the pole lives.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::quadrature::{cumulative_trapezoid, interp_linear};

/// Warp function `φ(ρ) = cρ + (1 − c)(1 − e^{−ρ})` with asymptotic slope
/// `c ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeWarp {
    pub slope: f64,
}

impl ConeWarp {
    pub fn phi(&self, rho: f64) -> f64 {
        self.slope * rho - (1.0 - self.slope) * (-rho).exp_m1()
    }

    pub fn dphi(&self, rho: f64) -> f64 {
        self.slope + (1.0 - self.slope) * (-rho).exp()
    }

    pub fn d2phi(&self, rho: f64) -> f64 {
        -(1.0 - self.slope) * (-rho).exp()
    }

    /// Gauss curvature `−φ''/φ`; unbounded like `(1 − c)/ρ` at the pole.
    pub fn curvature(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return if self.slope < 1.0 { f64::INFINITY } else { 0.0 };
        }
        -self.d2phi(rho) / self.phi(rho)
    }

    /// Area of the pole-centered ball, `2π ∫₀ˢ φ`.
    pub fn pole_ball_area(&self, s: f64) -> f64 {
        2.0 * PI * (0.5 * self.slope * s * s + (1.0 - self.slope) * (s + (-s).exp_m1()))
    }

    /// Length of the pole-centered circle of radius `s`.
    pub fn pole_circle_length(&self, s: f64) -> f64 {
        2.0 * PI * self.phi(s)
    }
}

/// Circle lengths `A(s)` and ball areas `V(s)` of geodesic balls around an
/// off-pole center, tabulated by geodesic shooting.
#[derive(Debug, Clone)]
pub struct AreaTable {
    pub radii: Vec<f64>,
    pub circle: Vec<f64>,
    pub ball: Vec<f64>,
    pub rays: usize,
}

/// Radius grid: fine near the center, coarser where the surface is nearly a cone.
fn radius_grid(s_max: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut s = 0.0;
    while s < s_max {
        let ds = if s < 60.0 { 0.025 } else { 0.25 };
        s = (s + ds).min(s_max);
        out.push(s);
    }
    out
}

#[derive(Clone, Copy)]
struct RayState {
    rho: f64,
    drho: f64,
    theta: f64,
    jac: f64,
    djac: f64,
}

impl AreaTable {
    /// Shoot `rays` geodesics over the upper half of the tangent circle at
    /// `(base_rho, 0)` and accumulate circle lengths up to radius `s_max`.
    pub fn shoot(warp: ConeWarp, base_rho: f64, s_max: f64, rays: usize) -> Self {
        let radii = radius_grid(s_max);
        let chunk = 32;
        let d_alpha = PI / rays as f64;
        let partials: Vec<Vec<f64>> = (0..rays.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                let mut acc = vec![0.0; radii.len()];
                for k in (c * chunk)..((c + 1) * chunk).min(rays) {
                    let alpha = (k as f64 + 0.5) * d_alpha;
                    shoot_ray(warp, base_rho, alpha, &radii, &mut acc);
                }
                acc
            })
            .collect();
        let mut circle = vec![0.0; radii.len()];
        for part in &partials {
            for (c, p) in circle.iter_mut().zip(part) {
                *c += p;
            }
        }
        for c in circle.iter_mut() {
            *c *= 2.0 * d_alpha;
        }
        let ball = cumulative_trapezoid(&radii, &circle);
        Self {
            radii,
            circle,
            ball,
            rays,
        }
    }

    pub fn s_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn circle_length(&self, s: f64) -> f64 {
        interp_linear(&self.radii, &self.circle, s)
    }

    pub fn ball_area(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let i = self.radii.partition_point(|&r| r <= s).min(self.radii.len() - 1);
        let i = i.max(1);
        let (s0, a0, v0) = (self.radii[i - 1], self.circle[i - 1], self.ball[i - 1]);
        let a1 = self.circle_length(s);
        v0 + 0.5 * (s - s0) * (a0 + a1)
    }
}

fn shoot_ray(warp: ConeWarp, base_rho: f64, alpha: f64, radii: &[f64], acc: &mut [f64]) {
    let clairaut = warp.phi(base_rho) * alpha.sin();
    let rhs = |y: &RayState| -> RayState {
        let phi = warp.phi(y.rho.max(1e-300));
        let dtheta = clairaut / (phi * phi);
        RayState {
            rho: y.drho,
            drho: clairaut * clairaut * warp.dphi(y.rho) / (phi * phi * phi),
            theta: dtheta,
            jac: y.djac,
            djac: -warp.curvature(y.rho.max(1e-300)) * y.jac,
        }
    };
    let mut y = RayState {
        rho: base_rho,
        drho: alpha.cos(),
        theta: 0.0,
        jac: 0.0,
        djac: 1.0,
    };
    let mut t = 0.0;
    for (i, &target) in radii.iter().enumerate().skip(1) {
        while t < target {
            let phi = warp.phi(y.rho.max(0.0)).max(1e-12);
            let h_local = 0.05 * phi.min(phi * phi / clairaut.max(1e-300));
            let h = (target - t).min(h_local.max(1e-7));
            y = rk4(&rhs, y, h);
            if y.rho < 0.0 {
                // passed through the pole: continue on the opposite meridian
                y.rho = -y.rho;
                y.drho = -y.drho;
                y.theta += PI;
            }
            t += h;
            if y.theta >= PI {
                return;
            }
        }
        acc[i] += y.jac.max(0.0);
    }
}

fn rk4<F: Fn(&RayState) -> RayState>(f: &F, y: RayState, h: f64) -> RayState {
    let add = |a: &RayState, b: &RayState, s: f64| RayState {
        rho: a.rho + s * b.rho,
        drho: a.drho + s * b.drho,
        theta: a.theta + s * b.theta,
        jac: a.jac + s * b.jac,
        djac: a.djac + s * b.djac,
    };
    let k1 = f(&y);
    let k2 = f(&add(&y, &k1, 0.5 * h));
    let k3 = f(&add(&y, &k2, 0.5 * h));
    let k4 = f(&add(&y, &k3, h));
    RayState {
        rho: y.rho + h / 6.0 * (k1.rho + 2.0 * k2.rho + 2.0 * k3.rho + k4.rho),
        drho: y.drho + h / 6.0 * (k1.drho + 2.0 * k2.drho + 2.0 * k3.drho + k4.drho),
        theta: y.theta + h / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta),
        jac: y.jac + h / 6.0 * (k1.jac + 2.0 * k2.jac + 2.0 * k3.jac + k4.jac),
        djac: y.djac + h / 6.0 * (k1.djac + 2.0 * k2.djac + 2.0 * k3.djac + k4.djac),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn warp_pole_conditions() {
        let w = ConeWarp { slope: 0.5 };
        assert_eq!(w.phi(0.0), 0.0);
        assert_relative_eq!(w.dphi(0.0), 1.0);
        for i in 0..100 {
            assert!(w.d2phi(i as f64 * 0.3) <= 0.0);
        }
    }

    #[test]
    fn pole_ball_matches_quadrature() {
        let w = ConeWarp { slope: 0.5 };
        let direct = crate::quadrature::simpson(|u| 2.0 * PI * w.phi(u), 0.0, 7.0, 2000);
        assert_relative_eq!(w.pole_ball_area(7.0), direct, max_relative = 1e-12);
    }

    #[test]
    fn flat_plane_shooting_recovers_disc_area() {
        let w = ConeWarp { slope: 1.0 };
        let table = AreaTable::shoot(w, 2.0, 30.0, 256);
        for s in [0.5, 3.0, 10.0, 30.0] {
            assert_relative_eq!(table.circle_length(s), 2.0 * PI * s, max_relative = 1e-6);
            assert_relative_eq!(table.ball_area(s), PI * s * s, max_relative = 1e-4);
        }
    }

    #[test]
    fn off_pole_ball_is_bounded_by_euclidean_and_tends_to_cone() {
        let w = ConeWarp { slope: 0.5 };
        let table = AreaTable::shoot(w, 2.0, 400.0, 1024);
        for s in [0.5, 2.0, 5.0, 20.0] {
            let v = table.ball_area(s);
            assert!(v <= PI * s * s * (1.0 + 1e-6), "s = {s}: {v}");
        }
        let ratio = table.ball_area(400.0) / (PI * 400.0 * 400.0);
        assert!((ratio - 0.5).abs() < 0.01, "ratio {ratio}");
        // small balls are nearly Euclidean
        assert_relative_eq!(table.ball_area(0.1), PI * 0.01, max_relative = 2e-3);
    }
}
