//! L-length, reduced distance `ℓ` and tabulated `ℓ` fields.
//!
//! Three routes compute `ℓ(q, τ̄)`:
//!
//! | route | models |
//! |---|---|
//! | closed form `d²/4τ̄` | gaussian, cone |
//! | conformal reduction | gaussian (`a ≡ 1`), sphere, scaled_super |
//! | variational (discrete L-length minimization) | all |
//!
//! Products `Sᵐ × ℝ` add the sphere and line values.

mod field;
mod path;

pub use field::{
    check_gradient_bound, check_lower_bound, FieldSpec, GradientBoundReport, LowerBoundReport,
    ReducedDistanceField,
};
pub use path::{
    l_length, minimize, warped_distance, Chart, DescentOptions, DescentReport, PathDiscretization,
    PathProblem,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{FlowModel, ModelKind, Point};
use crate::quadrature::adaptive;

/// Which computation produced an `ℓ` value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ClosedForm,
    Conformal,
    Variational,
    Interpolated,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::ClosedForm => "closed_form",
            Route::Conformal => "conformal",
            Route::Variational => "variational",
            Route::Interpolated => "interpolated",
        }
    }
}

fn check_tau(m: &FlowModel, tau: f64) -> Result<()> {
    if tau > 0.0 && m.in_tau_domain(tau) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "tau",
            value: tau,
            lo: 0.0,
            hi: m.tau_max().unwrap_or(f64::INFINITY),
        })
    }
}

/// `ℓ = d(p, q)²/4τ̄` on static models.
pub fn reduced_distance_closed_form(m: &FlowModel, q: Point, tau_bar: f64) -> Result<f64> {
    if !m.kind().is_static() {
        return Err(Error::Unsupported {
            op: "reduced_distance_closed_form",
            kind: m.kind().as_str().into(),
        });
    }
    check_tau(m, tau_bar)?;
    let d = m.distance(m.basepoint(), q, 0.0)?;
    Ok(d * d / (4.0 * tau_bar))
}

/// Time profile of `ℓ = α(τ)·d₀² + β(τ)` on a conformally scaled flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalSlice {
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    pub dalpha: f64,
    pub dbeta: f64,
}

impl ConformalSlice {
    /// `a ≡ 1`, `H ≡ 0`.
    pub fn flat(tau: f64) -> Self {
        Self {
            tau,
            alpha: 0.25 / tau,
            beta: 0.0,
            dalpha: -0.25 / (tau * tau),
            dbeta: 0.0,
        }
    }

    /// Coefficients for `a(τ) = 1 + 2Cτ` and `H(τ) = nC/a(τ)`.
    pub fn round(n: usize, c: f64, tau: f64) -> Self {
        if c == 0.0 {
            return Self::flat(tau);
        }
        let st = tau.sqrt();
        let a = |s: f64| 1.0 + 2.0 * c * s;
        let tol = 1e-14;
        // s = t²: ∫₀^τ ds/(√s a) = 2∫₀^√τ dt/a(t²), ∫₀^τ √s H ds = 2∫₀^√τ t² H(t²) dt
        let b = 2.0 * adaptive(|t| 1.0 / a(t * t), 0.0, st, 0.0, tol).value;
        let big_c = 2.0 * adaptive(|t| t * t * n as f64 * c / a(t * t), 0.0, st, 0.0, tol).value;
        let alpha = 1.0 / (2.0 * st * b);
        let beta = big_c / (2.0 * st);
        let db = 1.0 / (st * a(tau));
        Self {
            tau,
            alpha,
            beta,
            dalpha: -alpha / (2.0 * tau) - alpha * db / b,
            dbeta: -beta / (2.0 * tau) + 0.5 * n as f64 * c / a(tau),
        }
    }

    pub fn ell(&self, d0: f64) -> f64 {
        self.alpha * d0 * d0 + self.beta
    }
}

fn conformal_slice(m: &FlowModel, tau: f64) -> Result<ConformalSlice> {
    match m.kind() {
        ModelKind::Gaussian => Ok(ConformalSlice::flat(tau)),
        ModelKind::ConformalRound | ModelKind::ScaledSuper => Ok(ConformalSlice::round(
            m.sphere_dim().unwrap(),
            m.round_constant().unwrap(),
            tau,
        )),
        other => Err(Error::Unsupported {
            op: "reduced_distance_conformal",
            kind: other.as_str().into(),
        }),
    }
}

/// `ℓ` on `g(τ) = a(τ)g₀` from the two scalar integrals of `a` and `H`.
pub fn reduced_distance_conformal(m: &FlowModel, q: Point, tau_bar: f64) -> Result<f64> {
    let slice = conformal_slice(m, tau_bar)?;
    check_tau(m, tau_bar)?;
    let d0 = m.distance(m.basepoint(), q, 0.0)?;
    Ok(slice.ell(d0))
}

/// `ℓ` by the cheapest exact route; products add their factors.
pub fn reduced_distance(m: &FlowModel, q: Point, tau_bar: f64) -> Result<f64> {
    match m.kind() {
        ModelKind::StaticWarped => reduced_distance_closed_form(m, q, tau_bar),
        ModelKind::Product => {
            check_tau(m, tau_bar)?;
            let s = ConformalSlice::round(m.sphere_dim().unwrap(), m.round_constant().unwrap(), tau_bar);
            let theta = m.distance(m.basepoint(), Point::new(q.0[0], 0.0), 0.0)?;
            Ok(s.ell(theta) + q.0[1] * q.0[1] / (4.0 * tau_bar))
        }
        _ => reduced_distance_conformal(m, q, tau_bar),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationalValue {
    pub ell: f64,
    pub converged: bool,
    /// The minimizer went below the lower bound and was clamped to it.
    pub clamped: bool,
    pub iterations: usize,
}

/// Chart and chart-coordinate endpoints for the `g(0)`-geodesic from `p` to `q`.
fn geodesic_chart(m: &FlowModel, q: Point) -> (Chart, [f64; 2], [f64; 2]) {
    match m.kind() {
        ModelKind::Gaussian => (Chart::Line, [0.0; 2], [(q.0[0] - m.basepoint().0[0]).abs(), 0.0]),
        ModelKind::StaticWarped => {
            let warp = m.warp().unwrap();
            if m.off_pole_base() {
                let p = m.basepoint().0;
                let end = [q.0[0] * q.0[1].cos(), q.0[0] * q.0[1].sin()];
                (Chart::Warped(warp), [p[0], 0.0], end)
            } else {
                (Chart::Line, [0.0; 2], [q.0[0], 0.0])
            }
        }
        ModelKind::ConformalRound | ModelKind::ScaledSuper => {
            let theta = m.distance(m.basepoint(), Point::new(q.0[0], 0.0), 0.0).unwrap();
            (Chart::Circle, [0.0; 2], [theta, 0.0])
        }
        ModelKind::Product => {
            let theta = m.distance(m.basepoint(), Point::new(q.0[0], 0.0), 0.0).unwrap();
            (Chart::CircleLine, [0.0; 2], [theta, q.0[1]])
        }
    }
}

/// `g(0)`-distance from `p` used by the lower bound.
fn initial_distance(m: &FlowModel, q: Point) -> Result<f64> {
    m.distance(m.basepoint(), q, 0.0)
}

/// `ℓ` from the minimal discrete L-length over paths with `segments` pieces,
/// started from the constant-speed `g(0)`-geodesic.
pub fn reduced_distance_variational(
    m: &FlowModel,
    q: Point,
    tau_bar: f64,
    segments: usize,
) -> Result<VariationalValue> {
    if segments < 16 {
        return Err(crate::error::param("segments", format!("{segments} < 16")));
    }
    check_tau(m, tau_bar)?;
    let (chart, start, end) = geodesic_chart(m, q);
    let problem = PathProblem { model: Some(m), chart };
    let mut path = PathDiscretization::straight(tau_bar, start, end, segments);
    let rep = minimize(&problem, &mut path, DescentOptions::default());
    let ell = rep.length / (2.0 * tau_bar.sqrt());
    let d0 = initial_distance(m, q)?;
    let bound = d0 * d0 / (4.0 * tau_bar);
    let clamped = ell < bound - 1e-10 * (1.0 + bound);
    Ok(VariationalValue {
        ell: if clamped { bound } else { ell },
        converged: rep.converged,
        clamped,
        iterations: rep.iterations,
    })
}

/// `ℓ` and its derivatives at a fixed `τ`, in reduced coordinates: `u` is the
/// `g(0)`-distance from `p` (or polar angle) and `x` the line coordinate of
/// products.
pub trait EllSlice: Sync {
    fn tau(&self) -> f64;
    fn ell(&self, u: f64, x: f64) -> f64;
    fn ell_du(&self, u: f64, x: f64) -> f64;
    fn ell_dx(&self, u: f64, x: f64) -> f64;
    fn ell_dtau(&self, u: f64, x: f64) -> f64;
    /// `g(∂u, ∂u)` at this time.
    fn radial_metric(&self) -> f64;

    fn grad_sq(&self, u: f64, x: f64) -> f64 {
        let lu = self.ell_du(u, x);
        let lx = self.ell_dx(u, x);
        lu * lu / self.radial_metric() + lx * lx
    }
}

/// A source of `ℓ` on a model, sliced by `τ`.
pub trait ReducedDistance: Send + Sync {
    fn model(&self) -> &FlowModel;
    fn route(&self) -> Route;
    /// Times at which slices are available.
    fn tau_range(&self) -> (f64, f64) {
        (0.0, self.model().tau_max().unwrap_or(f64::INFINITY))
    }
    fn slice(&self, tau: f64) -> Result<Box<dyn EllSlice + '_>>;
}

/// Exact `ℓ` for every catalog model except off-pole bases, which use the
/// tabulated radial reduction (`ℓ = u²/4τ` with `u` the distance from `p`).
#[derive(Debug, Clone)]
pub struct ExactEll {
    model: FlowModel,
}

impl ExactEll {
    pub fn new(model: &FlowModel) -> Self {
        Self { model: model.clone() }
    }
}

struct ExactSlice {
    c: ConformalSlice,
    line: bool,
    metric: f64,
}

impl EllSlice for ExactSlice {
    fn tau(&self) -> f64 {
        self.c.tau
    }
    fn ell(&self, u: f64, x: f64) -> f64 {
        let line = if self.line { x * x / (4.0 * self.c.tau) } else { 0.0 };
        self.c.ell(u) + line
    }
    fn ell_du(&self, u: f64, _x: f64) -> f64 {
        2.0 * self.c.alpha * u
    }
    fn ell_dx(&self, _u: f64, x: f64) -> f64 {
        if self.line {
            x / (2.0 * self.c.tau)
        } else {
            0.0
        }
    }
    fn ell_dtau(&self, u: f64, x: f64) -> f64 {
        let line = if self.line {
            -x * x / (4.0 * self.c.tau * self.c.tau)
        } else {
            0.0
        };
        self.c.dalpha * u * u + self.c.dbeta + line
    }
    fn radial_metric(&self) -> f64 {
        self.metric
    }
}

impl ReducedDistance for ExactEll {
    fn model(&self) -> &FlowModel {
        &self.model
    }

    fn route(&self) -> Route {
        match self.model.kind() {
            ModelKind::Gaussian | ModelKind::StaticWarped => Route::ClosedForm,
            _ => Route::Conformal,
        }
    }

    fn slice(&self, tau: f64) -> Result<Box<dyn EllSlice + '_>> {
        check_tau(&self.model, tau)?;
        let c = match self.model.kind() {
            ModelKind::Gaussian | ModelKind::StaticWarped => ConformalSlice::flat(tau),
            _ => ConformalSlice::round(
                self.model.sphere_dim().unwrap(),
                self.model.round_constant().unwrap(),
                tau,
            ),
        };
        Ok(Box::new(ExactSlice {
            c,
            line: self.model.has_line(),
            metric: self.model.radial_metric(tau),
        }))
    }
}

/// `ℓ` solved on demand by path minimization; derivatives by finite
/// differences of solves.
#[derive(Debug, Clone)]
pub struct VariationalEll {
    model: FlowModel,
    pub segments: usize,
}

impl VariationalEll {
    pub fn new(model: &FlowModel, segments: usize) -> Self {
        Self {
            model: model.clone(),
            segments,
        }
    }

    /// Model point at reduced coordinates `(u, x)`.
    fn point(&self, u: f64, x: f64) -> Point {
        match self.model.kind() {
            ModelKind::StaticWarped if self.model.off_pole_base() => {
                // along the meridian through p, outward
                Point::new(self.model.basepoint().0[0] + u, 0.0)
            }
            ModelKind::Product => Point::new(u, x),
            _ => Point::new(u, 0.0),
        }
    }

    fn solve(&self, u: f64, x: f64, tau: f64) -> f64 {
        reduced_distance_variational(&self.model, self.point(u, x), tau, self.segments)
            .map(|v| v.ell)
            .unwrap_or(f64::NAN)
    }
}

struct VariationalSlice<'a> {
    owner: &'a VariationalEll,
    tau: f64,
    metric: f64,
}

impl VariationalSlice<'_> {
    fn fd(&self, f: impl Fn(f64) -> f64, at: f64, lo: f64, hi: f64) -> f64 {
        let h = 1e-4 * (1.0 + at.abs());
        let (a, b) = ((at - h).max(lo), (at + h).min(hi));
        (f(b) - f(a)) / (b - a)
    }
}

impl EllSlice for VariationalSlice<'_> {
    fn tau(&self) -> f64 {
        self.tau
    }
    fn ell(&self, u: f64, x: f64) -> f64 {
        self.owner.solve(u, x, self.tau)
    }
    fn ell_du(&self, u: f64, x: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let hi = self.owner.model.radial_max();
        self.fd(|v| self.owner.solve(v, x, self.tau), u, 0.0, hi)
    }
    fn ell_dx(&self, u: f64, x: f64) -> f64 {
        if !self.owner.model.has_line() {
            return 0.0;
        }
        self.fd(|v| self.owner.solve(u, v, self.tau), x, f64::NEG_INFINITY, f64::INFINITY)
    }
    fn ell_dtau(&self, u: f64, x: f64) -> f64 {
        let h = 1e-4 * self.tau;
        (self.owner.solve(u, x, self.tau + h) - self.owner.solve(u, x, self.tau - h)) / (2.0 * h)
    }
    fn radial_metric(&self) -> f64 {
        self.metric
    }
}

impl ReducedDistance for VariationalEll {
    fn model(&self) -> &FlowModel {
        &self.model
    }

    fn route(&self) -> Route {
        Route::Variational
    }

    fn slice(&self, tau: f64) -> Result<Box<dyn EllSlice + '_>> {
        check_tau(&self.model, tau)?;
        Ok(Box::new(VariationalSlice {
            owner: self,
            tau,
            metric: self.model.radial_metric(tau),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_model, ModelSpec};
    use approx::assert_relative_eq;

    fn model(spec: ModelSpec) -> FlowModel {
        make_model(&spec).unwrap()
    }

    // independent oracle for the n = 2 sphere: closed-form antiderivatives
    fn sphere2_oracle(d0: f64, tau: f64) -> f64 {
        let r2 = 2f64.sqrt();
        let b = r2 * (r2 * tau.sqrt()).atan();
        let c = 2.0 * (tau.sqrt() - (2.0 * tau).sqrt().atan() / r2);
        (d0 * d0 / b + c) / (2.0 * tau.sqrt())
    }

    #[test]
    fn closed_form_examples() {
        let g = model(ModelSpec::gaussian(2));
        assert_eq!(reduced_distance_closed_form(&g, Point::on_axis(2.0), 1.0).unwrap(), 1.0);
        let c = model(ModelSpec::cone(0.5));
        assert_eq!(reduced_distance_closed_form(&c, Point::new(3.0, 0.7), 0.5).unwrap(), 4.5);
        assert_eq!(reduced_distance_closed_form(&c, c.basepoint(), 0.5).unwrap(), 0.0);
        let s = model(ModelSpec::sphere(2));
        assert!(reduced_distance_closed_form(&s, Point::on_axis(1.0), 1.0).is_err());
    }

    #[test]
    fn conformal_matches_antiderivative_oracle() {
        let s = model(ModelSpec::sphere(2));
        let v = reduced_distance_conformal(&s, Point::on_axis(std::f64::consts::FRAC_PI_2), 1.0).unwrap();
        assert_relative_eq!(v, sphere2_oracle(std::f64::consts::FRAC_PI_2, 1.0), max_relative = 1e-12);
        assert!((v - 1.2377).abs() < 1e-3);
        for tau in [1e-3, 0.3, 7.0, 1e4] {
            let v = reduced_distance_conformal(&s, Point::on_axis(0.8), tau).unwrap();
            assert_relative_eq!(v, sphere2_oracle(0.8, tau), max_relative = 1e-11);
        }
        let far = reduced_distance_conformal(&s, s.basepoint(), 1e8).unwrap();
        assert!((far - 1.0).abs() < 1e-3);
        let g = model(ModelSpec::gaussian(3));
        assert_relative_eq!(reduced_distance_conformal(&g, Point::on_axis(2.0), 1.0).unwrap(), 1.0);
        assert!(reduced_distance_conformal(&model(ModelSpec::cone(0.5)), Point::on_axis(1.0), 1.0).is_err());
    }

    #[test]
    fn conformal_tau_derivatives() {
        for (n, c) in [(2, 1.0), (3, 2.0), (2, 0.5)] {
            let tau = 0.7;
            let h = 1e-5;
            let s = ConformalSlice::round(n, c, tau);
            let (p, m) = (ConformalSlice::round(n, c, tau + h), ConformalSlice::round(n, c, tau - h));
            assert_relative_eq!(s.dalpha, (p.alpha - m.alpha) / (2.0 * h), max_relative = 1e-7);
            assert_relative_eq!(s.dbeta, (p.beta - m.beta) / (2.0 * h), max_relative = 1e-7);
        }
    }

    #[test]
    fn variational_examples() {
        let g = model(ModelSpec::gaussian(2));
        let v = reduced_distance_variational(&g, Point::on_axis(2.0), 1.0, 64).unwrap();
        assert!((v.ell - 1.0).abs() < 1e-4 && v.converged && !v.clamped);

        let s = model(ModelSpec::sphere(2));
        let v = reduced_distance_variational(&s, Point::on_axis(std::f64::consts::FRAC_PI_2), 1.0, 64).unwrap();
        assert!((v.ell - 1.2377).abs() < 1e-3, "{v:?}");

        let p = model(ModelSpec::product(2));
        let v = reduced_distance_variational(&p, Point::new(std::f64::consts::FRAC_PI_2, 1.0), 1.0, 64).unwrap();
        assert!((v.ell - 1.4877).abs() < 2e-3, "{v:?}");
        assert!(reduced_distance_variational(&g, Point::on_axis(1.0), 1.0, 8).is_err());
    }

    #[test]
    fn product_is_sum_of_factors() {
        let p = model(ModelSpec::product(2));
        let s = model(ModelSpec::sphere(2));
        let q = Point::new(1.1, -0.6);
        let sum = reduced_distance(&s, Point::on_axis(1.1), 2.0).unwrap() + 0.36 / 8.0;
        assert_relative_eq!(reduced_distance(&p, q, 2.0).unwrap(), sum, max_relative = 1e-13);
    }

    #[test]
    fn exact_slice_derivatives() {
        let p = model(ModelSpec::product(2));
        let e = ExactEll::new(&p);
        let tau = 1.3;
        let s = e.slice(tau).unwrap();
        let (u, x, h) = (0.9, 0.4, 1e-6);
        assert_relative_eq!(s.ell_du(u, x), (s.ell(u + h, x) - s.ell(u - h, x)) / (2.0 * h), max_relative = 1e-7);
        assert_relative_eq!(s.ell_dx(u, x), (s.ell(u, x + h) - s.ell(u, x - h)) / (2.0 * h), max_relative = 1e-7);
        let (sp, sm) = (e.slice(tau + h).unwrap(), e.slice(tau - h).unwrap());
        assert_relative_eq!(s.ell_dtau(u, x), (sp.ell(u, x) - sm.ell(u, x)) / (2.0 * h), max_relative = 1e-6);
    }

    #[test]
    fn off_pole_variational_is_static_closed_form() {
        let c = model(ModelSpec::cone_at(0.5, 2.0));
        let q = Point::new(3.0, 1.0);
        let exact = reduced_distance_closed_form(&c, q, 0.8).unwrap();
        let v = reduced_distance_variational(&c, q, 0.8, 64).unwrap();
        assert!((v.ell - exact).abs() < 1e-3 * (1.0 + exact), "{} vs {exact}", v.ell);
    }

    #[test]
    fn variational_refinement_order_on_sphere() {
        let s = model(ModelSpec::sphere(2));
        let q = Point::on_axis(1.3);
        let exact = reduced_distance_conformal(&s, q, 2.0).unwrap();
        let errs: Vec<f64> = [16, 32, 64, 128]
            .iter()
            .map(|&n| (reduced_distance_variational(&s, q, 2.0, n).unwrap().ell - exact).abs())
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.8, "{errs:?}");
        }
    }
}
