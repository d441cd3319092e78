//! Catalog of exact ancient super Ricci flows, reduced to one spatial
//! coordinate (plus a line factor for products).
//!
//! Points are stored as two coordinates whose meaning depends on the model:
//!
//! | kind            | `c[0]`                         | `c[1]`              |
//! |-----------------|--------------------------------|---------------------|
//! | gaussian        | position on a line through `p` | unused              |
//! | static_warped   | radius `ρ`                     | angle `θ`           |
//! | conformal/super | angle along a great circle     | unused              |
//! | product         | angle along a great circle     | line coordinate `x` |

mod soliton;
mod static_geom;
pub mod warped;

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

pub use soliton::{SolitonBase, SolitonModel};
pub use static_geom::{StaticGeometry, VolumeRatio};
pub use warped::{AreaTable, ConeWarp};

/// Radius up to which off-pole geodesic balls are tabulated.
pub const AREA_TABLE_RADIUS: f64 = 2500.0;
const AREA_TABLE_RAYS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gaussian,
    StaticWarped,
    ConformalRound,
    Product,
    ScaledSuper,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Gaussian => "gaussian",
            ModelKind::StaticWarped => "static_warped",
            ModelKind::ConformalRound => "conformal_round",
            ModelKind::Product => "product",
            ModelKind::ScaledSuper => "scaled_super",
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self, ModelKind::Gaussian | ModelKind::StaticWarped)
    }
}

/// A catalog descriptor: a name plus the numeric parameters it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    /// Dimension (gaussian) or sphere dimension (sphere, scaled_super, product).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Asymptotic slope `c` of the cone warp.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    /// Constant `C` of the scaled super Ricci flow `(1 + 2Cτ) g₀`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    /// Radius of the base point on the cone (0 = pole).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
}

impl ModelSpec {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            n: None,
            slope: None,
            curvature: None,
            base: None,
        }
    }

    pub fn gaussian(n: usize) -> Self {
        Self { n: Some(n), ..Self::new("gaussian") }
    }

    pub fn cone(slope: f64) -> Self {
        Self { slope: Some(slope), ..Self::new("cone") }
    }

    pub fn cone_at(slope: f64, base: f64) -> Self {
        Self { base: Some(base), ..Self::cone(slope) }
    }

    pub fn sphere(n: usize) -> Self {
        Self { n: Some(n), ..Self::new("sphere") }
    }

    pub fn scaled_super(n: usize, curvature: f64) -> Self {
        Self {
            n: Some(n),
            curvature: Some(curvature),
            ..Self::new("scaled_super")
        }
    }

    pub fn product(sphere_dim: usize) -> Self {
        Self { n: Some(sphere_dim), ..Self::new("product") }
    }

    /// Short label used in file names and reports.
    pub fn label(&self) -> String {
        let mut s = self.name.clone();
        if let Some(n) = self.n {
            s.push_str(&format!("-n{n}"));
        }
        if let Some(c) = self.slope {
            s.push_str(&format!("-c{c}"));
        }
        if let Some(c) = self.curvature {
            s.push_str(&format!("-C{c}"));
        }
        if let Some(b) = self.base {
            s.push_str(&format!("-p{b}"));
        }
        s
    }
}

/// Names accepted by [`make_model`], with their parameters.
pub const CATALOG: &[(&str, &str)] = &[
    ("gaussian", "flat R^n, static; n ≥ 1"),
    ("cone", "static warped surface dρ² + φ(ρ)²dθ², φ = cρ + (1−c)(1−e^{−ρ}); slope c ∈ (0,1], base ρ₀ ≥ 0"),
    ("sphere", "Ricci flow of the unit round S^n, g = (1 + 2(n−1)τ) g₀; n ≥ 2"),
    ("scaled_super", "super Ricci flow (1 + 2Cτ) g₀ on the unit S^n; C ≤ n − 1"),
    ("product", "S^n Ricci flow × static line; n ≥ 2"),
];

/// A spatial point in model coordinates (see the module table).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point(pub [f64; 2]);

impl Point {
    pub fn new(a: f64, b: f64) -> Self {
        Point([a, b])
    }

    pub fn on_axis(a: f64) -> Self {
        Point([a, 0.0])
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Euclidean,
    Warped {
        warp: ConeWarp,
        base_rho: f64,
        table: Arc<OnceLock<AreaTable>>,
    },
    /// `(1 + 2Cτ) g₀` on the unit round sphere, optionally times a static line.
    Round {
        sphere_dim: usize,
        c_const: f64,
        line: bool,
    },
}

/// A symmetry-reduced space-time `(M, g(τ))` together with its base point.
#[derive(Debug, Clone)]
pub struct FlowModel {
    spec: ModelSpec,
    kind: ModelKind,
    dim: usize,
    shape: Shape,
}

/// Build a catalog model from its descriptor.
pub fn make_model(spec: &ModelSpec) -> Result<FlowModel> {
    let (kind, dim, shape) = match spec.name.as_str() {
        "gaussian" => {
            let n = spec.n.unwrap_or(2);
            if n == 0 {
                return Err(param("n", "gaussian dimension must be ≥ 1"));
            }
            (ModelKind::Gaussian, n, Shape::Euclidean)
        }
        "cone" => {
            let c = spec.slope.unwrap_or(0.5);
            if !(c > 0.0 && c <= 1.0) {
                return Err(param("slope", format!("cone slope {c} not in (0, 1]")));
            }
            let base = spec.base.unwrap_or(0.0);
            if !(base >= 0.0 && base.is_finite()) {
                return Err(param("base", format!("base radius {base} must be ≥ 0")));
            }
            (
                ModelKind::StaticWarped,
                2,
                Shape::Warped {
                    warp: ConeWarp { slope: c },
                    base_rho: base,
                    table: Arc::new(OnceLock::new()),
                },
            )
        }
        "sphere" => {
            let n = spec.n.unwrap_or(2);
            if n < 2 {
                return Err(param("n", "sphere dimension must be ≥ 2"));
            }
            (
                ModelKind::ConformalRound,
                n,
                Shape::Round {
                    sphere_dim: n,
                    c_const: (n - 1) as f64,
                    line: false,
                },
            )
        }
        "scaled_super" => {
            let n = spec.n.unwrap_or(2);
            if n < 2 {
                return Err(param("n", "sphere dimension must be ≥ 2"));
            }
            let c = spec.curvature.unwrap_or(0.5);
            let ric = (n - 1) as f64;
            if !c.is_finite() || c > ric {
                return Err(param(
                    "curvature",
                    format!("C = {c} violates Ric(g₀) = {ric} g₀ ≥ C g₀"),
                ));
            }
            if c < 0.0 {
                return Err(param(
                    "curvature",
                    format!("C = {c} < 0 gives a flow ending at τ = 1/(2|C|); the catalog is ancient only"),
                ));
            }
            (
                ModelKind::ScaledSuper,
                n,
                Shape::Round {
                    sphere_dim: n,
                    c_const: c,
                    line: false,
                },
            )
        }
        "product" => {
            let m = spec.n.unwrap_or(2);
            if m < 2 {
                return Err(param("n", "sphere factor dimension must be ≥ 2"));
            }
            (
                ModelKind::Product,
                m + 1,
                Shape::Round {
                    sphere_dim: m,
                    c_const: (m - 1) as f64,
                    line: true,
                },
            )
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    Ok(FlowModel {
        spec: spec.clone(),
        kind,
        dim,
        shape,
    })
}

/// `Γ(k/2)` for a positive integer `k`.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k > 0);
    let (mut x, mut g) = if k.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while x < k as f64 / 2.0 - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the Euclidean unit ball in `ℝⁿ`.
pub fn unit_ball_volume(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / gamma_half(n + 2)
}

/// Area of the unit sphere `Sᵏ ⊂ ℝᵏ⁺¹`.
pub fn unit_sphere_area(k: usize) -> f64 {
    2.0 * PI.powf((k + 1) as f64 / 2.0) / gamma_half(k + 1)
}

impl FlowModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn name(&self) -> String {
        self.spec.label()
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// End of the backward-time domain; `None` for ancient flows.
    pub fn tau_max(&self) -> Option<f64> {
        match self.shape {
            Shape::Round { c_const, .. } if c_const < 0.0 => Some(1.0 / (-2.0 * c_const)),
            _ => None,
        }
    }

    pub fn is_ancient(&self) -> bool {
        self.tau_max().is_none()
    }

    pub fn in_tau_domain(&self, tau: f64) -> bool {
        tau >= 0.0 && self.tau_max().is_none_or(|t| tau < t)
    }

    /// Scale `a(τ)` multiplying the round metric; 1 for static models.
    pub fn conformal_factor(&self, tau: f64) -> f64 {
        match self.shape {
            Shape::Round { c_const, .. } => 1.0 + 2.0 * c_const * tau,
            _ => 1.0,
        }
    }

    pub fn warp(&self) -> Option<ConeWarp> {
        match self.shape {
            Shape::Warped { warp, .. } => Some(warp),
            _ => None,
        }
    }

    /// The constant `C` of `(1 + 2Cτ) g₀` for round models.
    pub fn round_constant(&self) -> Option<f64> {
        match self.shape {
            Shape::Round { c_const, .. } => Some(c_const),
            _ => None,
        }
    }

    /// Dimension of the round factor.
    pub fn sphere_dim(&self) -> Option<usize> {
        match self.shape {
            Shape::Round { sphere_dim, .. } => Some(sphere_dim),
            _ => None,
        }
    }

    pub fn basepoint(&self) -> Point {
        match self.shape {
            Shape::Warped { base_rho, .. } => Point::new(base_rho, 0.0),
            _ => Point::new(0.0, 0.0),
        }
    }

    /// Whether the base point of a warped surface sits off the pole.
    pub fn off_pole_base(&self) -> bool {
        matches!(self.shape, Shape::Warped { base_rho, .. } if base_rho > 0.0)
    }

    /// `H = tr h` with `h = ½ ∂g/∂τ`.
    pub fn trace_h(&self, _q: Point, tau: f64) -> f64 {
        match self.shape {
            Shape::Round { sphere_dim, c_const, .. } => {
                sphere_dim as f64 * c_const / self.conformal_factor(tau)
            }
            _ => 0.0,
        }
    }

    /// `|h|` in the metric `g(τ)`.
    pub fn h_norm(&self, _q: Point, tau: f64) -> f64 {
        match self.shape {
            Shape::Round { sphere_dim, c_const, .. } => {
                (sphere_dim as f64).sqrt() * c_const.abs() / self.conformal_factor(tau)
            }
            _ => 0.0,
        }
    }

    /// A bound for `sup{|h| + |∇H|²}` over `M × [0, τ]`.
    pub fn c1_control(&self, tau: f64) -> f64 {
        match self.shape {
            Shape::Round { sphere_dim, c_const, .. } => {
                let a_min = self.conformal_factor(tau).min(1.0);
                ((sphere_dim as f64).sqrt() * c_const.abs() / a_min).max(f64::MIN_POSITIVE)
            }
            _ => f64::MIN_POSITIVE,
        }
    }

    /// `κ ≥ 0` with `∂g/∂τ ≥ −κ g`; every catalog model has `∂g/∂τ ≥ 0`.
    pub fn ric_lower_bound(&self) -> f64 {
        0.0
    }

    /// Diagonal metric coefficients in the model's coordinate frame, one per
    /// symmetry block.
    pub fn metric_diag(&self, q: Point, tau: f64) -> Vec<f64> {
        match &self.shape {
            Shape::Euclidean => vec![1.0],
            Shape::Warped { warp, .. } => {
                let phi = warp.phi(q.0[0].abs());
                vec![1.0, phi * phi]
            }
            Shape::Round { line, .. } => {
                let a = self.conformal_factor(tau);
                if *line {
                    vec![a, 1.0]
                } else {
                    vec![a]
                }
            }
        }
    }

    /// Ricci eigenvalues relative to `g(τ)`, matched to [`Self::metric_diag`].
    pub fn ricci_diag(&self, q: Point, tau: f64) -> Vec<f64> {
        match &self.shape {
            Shape::Euclidean => vec![0.0],
            Shape::Warped { warp, .. } => {
                let k = warp.curvature(q.0[0].abs());
                vec![k, k]
            }
            Shape::Round { sphere_dim, line, .. } => {
                let r = (*sphere_dim as f64 - 1.0) / self.conformal_factor(tau);
                if *line {
                    vec![r, 0.0]
                } else {
                    vec![r]
                }
            }
        }
    }

    /// `|h|²` in `g(τ)`.
    pub fn h_norm_sq(&self, q: Point, tau: f64) -> f64 {
        let v = self.h_norm(q, tau);
        v * v
    }

    /// Geodesic distance in `g(τ)`.
    pub fn distance(&self, q1: Point, q2: Point, tau: f64) -> Result<f64> {
        if !self.in_tau_domain(tau) {
            return Err(Error::OutOfRange {
                what: "tau",
                value: tau,
                lo: 0.0,
                hi: self.tau_max().unwrap_or(f64::INFINITY),
            });
        }
        match &self.shape {
            Shape::Euclidean => Ok((q1.0[0] - q2.0[0]).abs()),
            Shape::Warped { warp, .. } => Ok(crate::lgeo::warped_distance(*warp, q1, q2)),
            Shape::Round { line, .. } => {
                let d = angle_gap(q1.0[0], q2.0[0]) * self.conformal_factor(tau).sqrt();
                if *line {
                    let dx = q1.0[1] - q2.0[1];
                    Ok((d * d + dx * dx).sqrt())
                } else {
                    Ok(d)
                }
            }
        }
    }

    // ---- radial reduction about the base point -------------------------

    /// Upper end of the radial coordinate `u` (distance from `p` in `g(0)`).
    pub fn radial_max(&self) -> f64 {
        match self.shape {
            Shape::Round { .. } => PI,
            _ => f64::INFINITY,
        }
    }

    /// Whether the reduction carries an extra line coordinate.
    pub fn has_line(&self) -> bool {
        matches!(self.shape, Shape::Round { line: true, .. })
    }

    /// `g(∂u, ∂u)` at time `τ`.
    pub fn radial_metric(&self, tau: f64) -> f64 {
        match self.shape {
            Shape::Round { .. } => self.conformal_factor(tau),
            _ => 1.0,
        }
    }

    /// Density of `dμ_{g(τ)}` with respect to `du` (times `dx` for products),
    /// after integrating out the directions fixed by the symmetry about `p`.
    pub fn radial_measure(&self, u: f64, tau: f64) -> f64 {
        match &self.shape {
            Shape::Euclidean => self.dim as f64 * unit_ball_volume(self.dim) * u.powi(self.dim as i32 - 1),
            Shape::Warped { warp, base_rho, .. } => {
                if *base_rho == 0.0 {
                    warp.pole_circle_length(u)
                } else {
                    self.area_table().circle_length(u)
                }
            }
            Shape::Round { sphere_dim, .. } => {
                let a = self.conformal_factor(tau);
                a.powf(*sphere_dim as f64 / 2.0)
                    * unit_sphere_area(sphere_dim - 1)
                    * u.sin().max(0.0).powi(*sphere_dim as i32 - 1)
            }
        }
    }

    /// Largest radius at which [`Self::radial_measure`] is available.
    pub fn radial_extent(&self) -> f64 {
        if self.off_pole_base() {
            AREA_TABLE_RADIUS
        } else {
            self.radial_max()
        }
    }

    pub(crate) fn area_table(&self) -> &AreaTable {
        match &self.shape {
            Shape::Warped { warp, base_rho, table } => {
                table.get_or_init(|| AreaTable::shoot(*warp, *base_rho, AREA_TABLE_RADIUS, AREA_TABLE_RAYS))
            }
            _ => panic!("area table requested for a non-warped model"),
        }
    }

    /// Static geometry `g(0)` for static models.
    pub fn static_geometry(&self) -> Result<StaticGeometry> {
        StaticGeometry::from_model(self)
    }
}

/// Great-circle angle between two angles on the same circle.
fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

// ---- structural checks -------------------------------------------------

/// Space-time samples for the structural checks; `fd_step` is the
/// finite-difference step used for the derivatives of the callbacks.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    pub points: Vec<Point>,
    pub taus: Vec<f64>,
    pub fd_step: f64,
}

impl SampleGrid {
    /// `points × taus` with τ geometric on `[tau_min, tau_max]`.
    pub fn geometric(points: Vec<Point>, tau_min: f64, tau_max: f64, count: usize) -> Self {
        let taus = geometric_grid(tau_min, tau_max, count);
        Self {
            points,
            taus,
            fd_step: 1e-4,
        }
    }

    /// Default spatial samples for a model.
    pub fn default_points(model: &FlowModel) -> Vec<Point> {
        match model.kind() {
            ModelKind::Gaussian => (0..9).map(|i| Point::on_axis(i as f64 * 0.75)).collect(),
            ModelKind::StaticWarped => (1..10)
                .flat_map(|i| [0.0, 1.3].map(|t| Point::new(i as f64 * 0.7, t)))
                .collect(),
            ModelKind::Product => (0..8)
                .flat_map(|i| [-1.0, 0.5].map(|x| Point::new(0.1 + i as f64 * 0.38, x)))
                .collect(),
            _ => (0..8).map(|i| Point::on_axis(0.1 + i as f64 * 0.38)).collect(),
        }
    }
}

/// `count` points geometrically spaced on `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (r * i as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperRicciReport {
    /// Largest eigenvalue of `∂g/∂τ − 2Ric` over the samples (in `g(τ)`).
    pub max_eigenvalue: f64,
    pub at: Option<(Point, f64)>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Largest eigenvalue of `∂g/∂τ − 2Ric`, with `∂g/∂τ` from centered
/// differences of the metric coefficients.
pub fn check_super_ricci(m: &FlowModel, samples: &SampleGrid) -> SuperRicciReport {
    let tol = 1e-8;
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for &tau in &samples.taus {
        let dt = samples.fd_step * tau.max(1.0);
        let lo = (tau - dt).max(0.0);
        let hi = tau + dt;
        for &q in &samples.points {
            let g = m.metric_diag(q, tau);
            let gl = m.metric_diag(q, lo);
            let gh = m.metric_diag(q, hi);
            let ric = m.ricci_diag(q, tau);
            for i in 0..g.len() {
                let dg = (gh[i] - gl[i]) / (hi - lo);
                let eig = dg / g[i] - 2.0 * ric[i];
                if eig > worst {
                    worst = eig;
                    at = Some((q, tau));
                }
            }
        }
    }
    SuperRicciReport {
        max_eigenvalue: worst,
        at,
        tolerance: tol,
        pass: worst <= tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// max |2 div h − ∇H|
    pub bianchi: f64,
    /// max [∂H/∂τ + ΔH + 2|h|²]₊
    pub heat_like: f64,
    /// max of the signed heat-like expression (negative means slack)
    pub heat_like_signed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Residuals of the Bianchi-type identity and the heat-like inequality for
/// `H`, with derivatives by centered differences of step `fd_step`.
pub fn check_assumption(m: &FlowModel, samples: &SampleGrid) -> Result<AssumptionReport> {
    let step = samples.fd_step;
    if samples.taus.is_empty() || samples.points.is_empty() {
        return Err(Error::GridTooCoarse("empty sample grid".into()));
    }
    if step <= 0.0 {
        return Err(Error::GridTooCoarse("finite-difference step must be positive".into()));
    }
    let tol = 1e-6;
    let mut bianchi: f64 = 0.0;
    let mut heat: f64 = f64::NEG_INFINITY;
    for &tau in &samples.taus {
        if tau - step <= 0.0 || !m.in_tau_domain(tau + step) {
            return Err(Error::GridTooCoarse(format!(
                "τ-stencil of width {step} at τ = {tau} leaves the time domain"
            )));
        }
        for &q in &samples.points {
            let hq = |p: Point, t: f64| m.trace_h(p, t);
            let u = q.0[0];
            // radial stencil in the first coordinate
            let qp = Point::new(u + step, q.0[1]);
            let qm = Point::new(u - step, q.0[1]);
            let g_uu = m.metric_diag(q, tau)[0];
            let d_h = (hq(qp, tau) - hq(qm, tau)) / (2.0 * step);
            let grad_h = d_h / g_uu.sqrt();
            // h = (h/g)·g blockwise; div h = ∇(h/g) when the ratio is blockwise constant
            let ratio = |p: Point| {
                let t1 = tau + step;
                let t0 = tau - step;
                let g = m.metric_diag(p, tau)[0];
                0.5 * (m.metric_diag(p, t1)[0] - m.metric_diag(p, t0)[0]) / (t1 - t0) / g
            };
            let div_h = (ratio(qp) - ratio(qm)) / (2.0 * step) / g_uu.sqrt();
            bianchi = bianchi.max((2.0 * div_h - grad_h).abs());

            let dtau_h = (hq(q, tau + step) - hq(q, tau - step)) / (2.0 * step);
            let lap_h = (hq(qp, tau) - 2.0 * hq(q, tau) + hq(qm, tau)) / (step * step) / g_uu;
            let expr = dtau_h + lap_h + 2.0 * m.h_norm_sq(q, tau);
            heat = heat.max(expr);
        }
    }
    let heat_pos = heat.max(0.0);
    Ok(AssumptionReport {
        bianchi,
        heat_like: heat_pos,
        heat_like_signed: heat,
        tolerance: tol,
        pass: bianchi <= tol && heat_pos <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_and_ball_constants() {
        assert_relative_eq!(unit_ball_volume(1), 2.0);
        assert_relative_eq!(unit_ball_volume(2), PI, max_relative = 1e-15);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-15);
        assert_relative_eq!(unit_sphere_area(1), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(unit_sphere_area(2), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(unit_sphere_area(3), 2.0 * PI * PI, max_relative = 1e-15);
    }

    #[test]
    fn gaussian_is_flat_and_static() {
        let m = make_model(&ModelSpec::gaussian(2)).unwrap();
        for tau in [0.0, 0.3, 50.0] {
            for x in [0.0, 1.0, -4.0] {
                assert_eq!(m.trace_h(Point::on_axis(x), tau), 0.0);
            }
            assert_eq!(m.conformal_factor(tau), 1.0);
        }
    }

    #[test]
    fn sphere_flow_coefficients() {
        let m = make_model(&ModelSpec::sphere(2)).unwrap();
        for tau in [0.0, 0.25, 3.0] {
            assert_relative_eq!(m.conformal_factor(tau), 1.0 + 2.0 * tau);
            assert_relative_eq!(m.trace_h(Point::on_axis(0.3), tau), 2.0 / (1.0 + 2.0 * tau));
        }
    }

    #[test]
    fn scaled_super_coefficients() {
        let m = make_model(&ModelSpec::scaled_super(2, 0.5)).unwrap();
        for tau in [0.0, 1.0, 9.0] {
            assert_relative_eq!(m.conformal_factor(tau), 1.0 + tau);
            assert_relative_eq!(m.trace_h(Point::on_axis(1.0), tau), 1.0 / (1.0 + tau));
        }
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(make_model(&ModelSpec::new("torus")), Err(Error::UnknownModel(_))));
        assert!(make_model(&ModelSpec::cone(0.0)).is_err());
        assert!(make_model(&ModelSpec::cone(1.5)).is_err());
        assert!(make_model(&ModelSpec::sphere(1)).is_err());
        assert!(make_model(&ModelSpec::gaussian(0)).is_err());
        let err = make_model(&ModelSpec::scaled_super(2, 1.5)).unwrap_err();
        assert!(matches!(err, Error::Parameter { name: "curvature", .. }));
    }

    #[test]
    fn super_ricci_residuals() {
        let pts = |m: &FlowModel| SampleGrid::geometric(SampleGrid::default_points(m), 0.01, 100.0, 33);
        let g = make_model(&ModelSpec::gaussian(2)).unwrap();
        let r = check_super_ricci(&g, &pts(&g));
        assert!(r.max_eigenvalue.abs() < 1e-12 && r.pass);
        let s = make_model(&ModelSpec::sphere(2)).unwrap();
        let r = check_super_ricci(&s, &pts(&s));
        assert!(r.max_eigenvalue.abs() < 1e-9 && r.pass);
        let sc = make_model(&ModelSpec::scaled_super(2, 0.5)).unwrap();
        let grid = pts(&sc);
        let r = check_super_ricci(&sc, &grid);
        // margin 2(C − 1)/(1 + 2Cτ) is largest (least negative) at the latest τ
        let tau_last = *grid.taus.last().unwrap();
        assert_relative_eq!(r.max_eigenvalue, -1.0 / (1.0 + tau_last), max_relative = 1e-6);
        assert!(r.pass);
        let cone = make_model(&ModelSpec::cone(0.5)).unwrap();
        assert!(check_super_ricci(&cone, &pts(&cone)).pass);
        let p = make_model(&ModelSpec::product(2)).unwrap();
        assert!(check_super_ricci(&p, &pts(&p)).pass);
    }

    #[test]
    fn assumption_residuals() {
        let s = make_model(&ModelSpec::sphere(2)).unwrap();
        let grid = SampleGrid::geometric(SampleGrid::default_points(&s), 0.01, 100.0, 64);
        let rep = check_assumption(&s, &grid).unwrap();
        assert!(rep.bianchi <= 1e-6 && rep.heat_like <= 1e-6, "{rep:?}");
        let cone = make_model(&ModelSpec::cone(0.5)).unwrap();
        let rep = check_assumption(&cone, &SampleGrid::geometric(SampleGrid::default_points(&cone), 0.01, 100.0, 8)).unwrap();
        assert_eq!(rep.bianchi, 0.0);
        assert_eq!(rep.heat_like, 0.0);
    }

    #[test]
    fn assumption_rejects_stencil_outside_domain() {
        let s = make_model(&ModelSpec::sphere(2)).unwrap();
        let grid = SampleGrid {
            points: vec![Point::on_axis(0.5)],
            taus: vec![0.0, 1.0],
            fd_step: 1e-3,
        };
        assert!(matches!(check_assumption(&s, &grid), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn heat_like_residual_is_second_order_in_step() {
        let s = make_model(&ModelSpec::sphere(3)).unwrap();
        let mk = |h: f64| SampleGrid {
            points: vec![Point::on_axis(0.4)],
            taus: vec![0.2, 0.5],
            fd_step: h,
        };
        let e1 = check_assumption(&s, &mk(1e-2)).unwrap().heat_like_signed.abs();
        let e2 = check_assumption(&s, &mk(5e-3)).unwrap().heat_like_signed.abs();
        let order = (e1 / e2).log2();
        assert!(order > 1.8, "order {order}");
    }

    #[test]
    fn distances() {
        let g = make_model(&ModelSpec::gaussian(2)).unwrap();
        assert_eq!(g.distance(Point::on_axis(0.0), Point::on_axis(3.0), 7.0).unwrap(), 3.0);
        let s = make_model(&ModelSpec::sphere(2)).unwrap();
        let d = s.distance(Point::on_axis(0.0), Point::on_axis(PI), 1.5).unwrap();
        assert_relative_eq!(d, 2.0 * PI, max_relative = 1e-14);
        let c = make_model(&ModelSpec::cone(0.5)).unwrap();
        let d = c.distance(Point::new(0.0, 0.0), Point::new(2.5, 1.0), 0.0).unwrap();
        assert_relative_eq!(d, 2.5, max_relative = 1e-12);
        let p = make_model(&ModelSpec::product(2)).unwrap();
        let d = p.distance(Point::new(0.0, 0.0), Point::new(0.3, 0.4), 0.0).unwrap();
        assert_relative_eq!(d, 0.5, max_relative = 1e-14);
    }
}
