//! Weights `φ ≥ 0` for the weighted functionals and their weak-form
//! certification as heat subsolutions `(∂τ + Δ)φ ≤ 0`.
//!
//! Functionals only see weights through their average over geodesic spheres
//! around the base point, so every weight is evaluated in the reduced
//! coordinates `(u, x)` of [`crate::lgeo::EllSlice`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::lgeo::{EllSlice, ReducedDistance};
use crate::models::{geometric_grid, FlowModel, ModelKind};
use crate::quadrature::{bisect, simpson_samples};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertStatus {
    CertifiedAnalytic,
    CertifiedNumeric,
    Flagged,
    Unknown,
}

impl CertStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertStatus::CertifiedAnalytic => "certified_analytic",
            CertStatus::CertifiedNumeric => "certified_numeric",
            CertStatus::Flagged => "flagged",
            CertStatus::Unknown => "unknown",
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, CertStatus::CertifiedAnalytic | CertStatus::CertifiedNumeric)
    }
}

#[derive(Clone)]
enum Kind {
    Constant(f64),
    HeatKernel { n: usize, offset: f64, tau0: f64 },
    Localization { ell: Arc<dyn ReducedDistance>, n: usize, rho: f64 },
    Min(Box<Weight>, Box<Weight>),
    Quadratic { n: usize },
}

/// A weight with its certification status.
#[derive(Clone)]
pub struct Weight {
    id: String,
    kind: Kind,
    status: CertStatus,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight")
            .field("id", &self.id)
            .field("status", &self.status)
            .finish()
    }
}

/// `φ ≡ c`.
pub fn weight_constant(c: f64) -> Result<Weight> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(param("c", format!("constant weight {c} must be ≥ 0")));
    }
    Ok(Weight {
        id: format!("constant({c})"),
        kind: Kind::Constant(c),
        status: CertStatus::CertifiedAnalytic,
    })
}

/// Backward heat kernel `(4π(τ₀−τ))^{−n/2} e^{−|x−x₀|²/4(τ₀−τ)}` on the
/// Gaussian model with `|x₀| = offset`; defined for `τ < τ₀`.
pub fn weight_shifted_heat_kernel(m: &FlowModel, offset: f64, tau0: f64) -> Result<Weight> {
    if m.kind() != ModelKind::Gaussian {
        return Err(Error::Unsupported {
            op: "weight_shifted_heat_kernel",
            kind: m.kind().as_str().into(),
        });
    }
    let n = m.dimension();
    if n > 3 {
        return Err(param("n", "shifted heat kernel supports n ≤ 3"));
    }
    if !(tau0 > 0.0) || !(offset >= 0.0) {
        return Err(param("tau0", "need tau0 > 0 and offset ≥ 0"));
    }
    Ok(Weight {
        id: format!("heat_kernel(offset={offset},tau0={tau0})"),
        kind: Kind::HeatKernel { n, offset, tau0 },
        status: CertStatus::CertifiedAnalytic,
    })
}

/// `max{0, (L̄ − 2nτ)/ρ²}` with `L̄ = 4τℓ` taken from `ell`.
pub fn weight_localization(ell: Arc<dyn ReducedDistance>, rho: f64) -> Result<Weight> {
    if !(rho > 0.0) {
        return Err(param("rho", "localization radius must be > 0"));
    }
    let n = ell.model().dimension();
    Ok(Weight {
        id: format!("localization(rho={rho})"),
        kind: Kind::Localization { ell, n, rho },
        status: CertStatus::Unknown,
    })
}

/// Pointwise minimum; pending certification.
pub fn weight_min(a: Weight, b: Weight) -> Weight {
    Weight {
        id: format!("min({},{})", a.id, b.id),
        kind: Kind::Min(Box::new(a), Box::new(b)),
        status: CertStatus::Unknown,
    }
}

/// `d₀² + 2nτ`, which has `(∂τ + Δ)φ = 4n` on the Gaussian model.
pub fn weight_quadratic_control(m: &FlowModel) -> Weight {
    Weight {
        id: "quadratic_control".into(),
        kind: Kind::Quadratic { n: m.dimension() },
        status: CertStatus::Unknown,
    }
}

impl Weight {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn status(&self) -> CertStatus {
        self.status
    }

    pub fn with_status(mut self, status: CertStatus) -> Self {
        self.status = status;
        self
    }

    /// Error unless certified, or `allow_flagged` is set.
    pub fn require_admissible(&self, allow_flagged: bool) -> Result<()> {
        if self.status.is_certified() || allow_flagged {
            Ok(())
        } else {
            Err(Error::InadmissibleWeight {
                id: self.id.clone(),
                status: self.status.as_str().into(),
            })
        }
    }

    /// `φ(p, 0)`.
    pub fn base_value(&self) -> f64 {
        match &self.kind {
            Kind::Constant(c) => *c,
            Kind::HeatKernel { n, offset, tau0 } => {
                (4.0 * PI * tau0).powf(-(*n as f64) / 2.0) * (-offset * offset / (4.0 * tau0)).exp()
            }
            Kind::Localization { .. } | Kind::Quadratic { .. } => 0.0,
            Kind::Min(a, b) => a.base_value().min(b.base_value()),
        }
    }

    /// Largest `τ` at which the weight is defined (exclusive).
    pub fn tau_limit(&self) -> f64 {
        match &self.kind {
            Kind::HeatKernel { tau0, .. } => *tau0,
            Kind::Min(a, b) => a.tau_limit().min(b.tau_limit()),
            _ => f64::INFINITY,
        }
    }

    pub fn slice(&self, tau: f64) -> Result<WeightSlice<'_>> {
        let inner = match &self.kind {
            Kind::Constant(c) => SliceKind::Constant(*c),
            Kind::HeatKernel { n, offset, tau0 } => {
                if tau >= *tau0 {
                    return Err(Error::OutOfRange {
                        what: "tau",
                        value: tau,
                        lo: 0.0,
                        hi: *tau0,
                    });
                }
                SliceKind::Heat {
                    n: *n,
                    a: *offset,
                    s: tau0 - tau,
                }
            }
            Kind::Localization { ell, n, rho } => SliceKind::Loc {
                ell: ell.slice(tau)?,
                n: *n,
                rho2: rho * rho,
            },
            Kind::Min(a, b) => SliceKind::Min(Box::new(a.slice(tau)?), Box::new(b.slice(tau)?)),
            Kind::Quadratic { n } => SliceKind::Quad { n: *n },
        };
        Ok(WeightSlice { tau, inner })
    }

    /// `C_g = max{φ, |∇φ|², |∂τφ|}/(1 + d²)` over the sample nodes.
    pub fn growth_constant(&self, m: &FlowModel, taus: &[f64], us: &[f64]) -> Result<f64> {
        let mut c = 0.0f64;
        for &tau in taus {
            let s = self.slice(tau)?;
            let a = m.radial_metric(tau);
            for &u in us {
                let (du, dx) = s.grad(u, 0.0);
                let g = du * du / a + dx * dx;
                let v = s.value(u, 0.0).max(g).max(s.dtau(u, 0.0).abs());
                c = c.max(v / (1.0 + a * u * u));
            }
        }
        Ok(c)
    }
}

enum SliceKind<'a> {
    Constant(f64),
    Heat { n: usize, a: f64, s: f64 },
    Loc { ell: Box<dyn EllSlice + 'a>, n: usize, rho2: f64 },
    Min(Box<WeightSlice<'a>>, Box<WeightSlice<'a>>),
    Quad { n: usize },
}

/// A weight frozen at one `τ`.
pub struct WeightSlice<'a> {
    tau: f64,
    inner: SliceKind<'a>,
}

/// Average of the heat kernel with variance parameter `s` centered at
/// distance `a` from the origin over the sphere of radius `u`.
fn heat_average(n: usize, a: f64, u: f64, s: f64) -> f64 {
    let norm = (4.0 * PI * s).powf(-(n as f64) / 2.0);
    let near = (-(u - a) * (u - a) / (4.0 * s)).exp();
    let z = u * a / (2.0 * s);
    let shape = match n {
        1 => 0.5 * (1.0 + (-2.0 * z).exp()),
        2 => {
            // (1/2π)∫ e^{−z(1−cos θ)} dθ by the periodic trapezoid rule
            let k = 32 + 16 * z.sqrt().ceil() as usize;
            (0..k)
                .map(|i| (-z * (1.0 - (2.0 * PI * i as f64 / k as f64).cos())).exp())
                .sum::<f64>()
                / k as f64
        }
        _ => {
            if z < 1e-8 {
                1.0 - z
            } else {
                -(-2.0 * z).exp_m1() / (2.0 * z)
            }
        }
    };
    norm * near * shape
}

impl WeightSlice<'_> {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn value(&self, u: f64, x: f64) -> f64 {
        match &self.inner {
            SliceKind::Constant(c) => *c,
            SliceKind::Heat { n, a, s } => heat_average(*n, *a, u, *s),
            SliceKind::Loc { ell, n, rho2 } => {
                (4.0 * self.tau * ell.ell(u, x) - 2.0 * *n as f64 * self.tau).max(0.0) / rho2
            }
            SliceKind::Min(a, b) => a.value(u, x).min(b.value(u, x)),
            SliceKind::Quad { n } => u * u + x * x + 2.0 * *n as f64 * self.tau,
        }
    }

    /// `(∂uφ, ∂xφ)`.
    pub fn grad(&self, u: f64, x: f64) -> (f64, f64) {
        match &self.inner {
            SliceKind::Constant(_) => (0.0, 0.0),
            SliceKind::Heat { n, a, s } => {
                if u == 0.0 {
                    return (0.0, 0.0);
                }
                let h = 1e-5 * (u + s.sqrt());
                let lo = (u - h).max(0.0);
                (
                    (heat_average(*n, *a, u + h, *s) - heat_average(*n, *a, lo, *s)) / (u + h - lo),
                    0.0,
                )
            }
            SliceKind::Loc { ell, n, rho2 } => {
                if 4.0 * ell.ell(u, x) - 2.0 * *n as f64 <= 0.0 {
                    (0.0, 0.0)
                } else {
                    let k = 4.0 * self.tau / rho2;
                    (k * ell.ell_du(u, x), k * ell.ell_dx(u, x))
                }
            }
            SliceKind::Min(a, b) => {
                if a.value(u, x) <= b.value(u, x) {
                    a.grad(u, x)
                } else {
                    b.grad(u, x)
                }
            }
            SliceKind::Quad { .. } => (2.0 * u, 2.0 * x),
        }
    }

    /// `∂τφ` at fixed `(u, x)`.
    pub fn dtau(&self, u: f64, x: f64) -> f64 {
        match &self.inner {
            SliceKind::Constant(_) => 0.0,
            SliceKind::Heat { n, a, s } => {
                let h = 1e-5 * s;
                -(heat_average(*n, *a, u, s + h) - heat_average(*n, *a, u, s - h)) / (2.0 * h)
            }
            SliceKind::Loc { ell, n, rho2 } => {
                let l = ell.ell(u, x);
                if 4.0 * l - 2.0 * *n as f64 <= 0.0 {
                    0.0
                } else {
                    (4.0 * l + 4.0 * self.tau * ell.ell_dtau(u, x) - 2.0 * *n as f64) / rho2
                }
            }
            SliceKind::Min(a, b) => {
                if a.value(u, x) <= b.value(u, x) {
                    a.dtau(u, x)
                } else {
                    b.dtau(u, x)
                }
            }
            SliceKind::Quad { n } => 2.0 * *n as f64,
        }
    }

    /// Radii in `[lo, hi]` (at `x = 0`) where the weight has a kink.
    pub fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = match &self.inner {
            SliceKind::Loc { ell, n, .. } => {
                let f = |u: f64| ell.ell(u, 0.0) - 0.5 * *n as f64;
                sign_changes(&f, lo, hi)
            }
            SliceKind::Min(a, b) => {
                let f = |u: f64| a.value(u, 0.0) - b.value(u, 0.0);
                let mut k = sign_changes(&f, lo, hi);
                k.extend(a.kinks(lo, hi));
                k.extend(b.kinks(lo, hi));
                k
            }
            _ => Vec::new(),
        };
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        out
    }
}

fn sign_changes(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<f64> {
    let steps = 512;
    let mut out = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=steps {
        let b = lo + (hi - lo) * i as f64 / steps as f64;
        let fb = f(b);
        if fa == 0.0 {
            out.push(a);
        } else if (fa < 0.0) != (fb < 0.0) && fb != 0.0 {
            out.push(bisect(f, a, b, 1e-13));
        }
        a = b;
        fa = fb;
    }
    out
}

/// Smooth non-negative bumps `(1 − ((u − c)/w)²)³` at sampled times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFamily {
    pub taus: Vec<f64>,
    pub centers: Vec<f64>,
    pub scales: Vec<f64>,
    /// Add bumps centered on each detected kink of the weight.
    pub include_kinks: bool,
    /// Simpson intervals per smooth piece of the support.
    pub intervals: usize,
}

impl TestFamily {
    /// Bumps covering `u ≤ 4√τ_max` (or the whole sphere) on `[τ_min, τ_max]`.
    pub fn covering(m: &FlowModel, tau_min: f64, tau_max: f64) -> Self {
        let u_top = (4.0 * tau_max.sqrt()).max(1.0).min(m.radial_max());
        Self {
            taus: geometric_grid(tau_min, tau_max, 6),
            centers: (0..=12).map(|i| u_top * i as f64 / 12.0).collect(),
            scales: vec![0.1 * u_top, 0.25 * u_top, 0.5 * u_top],
            include_kinks: true,
            intervals: 256,
        }
    }

    pub fn len(&self) -> usize {
        self.taus.len() * self.centers.len() * self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub weight_id: String,
    pub status: CertStatus,
    /// Largest weak-form integral divided by `∫ξ dμ`.
    pub worst_residual: f64,
    pub witness_center: f64,
    pub witness_scale: f64,
    pub witness_tau: f64,
    pub tests: usize,
    pub failures: usize,
    pub growth_constant: f64,
}

struct BumpResult {
    residual: f64,
    mass: f64,
    tolerance: f64,
    tau: f64,
    center: f64,
    scale: f64,
}

fn bump(t: f64) -> (f64, f64) {
    // value and derivative of (1 − t²)³ in t
    if t.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - t * t;
    (q * q * q, -6.0 * t * q * q)
}

fn test_bump(m: &FlowModel, w: &WeightSlice, center: f64, scale: f64, kinks: &[f64], intervals: usize) -> BumpResult {
    let tau = w.tau();
    let g_uu = m.radial_metric(tau);
    let lo = (center - scale).max(0.0);
    let hi = (center + scale).min(m.radial_max());
    let mut cuts = vec![lo];
    cuts.extend(kinks.iter().copied().filter(|&k| k > lo && k < hi));
    cuts.push(hi);
    let line = m.has_line();
    let xs: Vec<f64> = if line {
        (0..=64).map(|j| -scale + 2.0 * scale * j as f64 / 64.0).collect()
    } else {
        vec![0.0]
    };
    let hx = if line { 2.0 * scale / 64.0 } else { 1.0 };
    let n = intervals + intervals % 2;
    let (mut residual, mut mass, mut sup, mut h_max) = (0.0, 0.0, 0.0f64, 0.0f64);
    for piece in cuts.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        if b <= a {
            continue;
        }
        let h = (b - a) / n as f64;
        h_max = h_max.max(h);
        let mut res_u = Vec::with_capacity(n + 1);
        let mut mass_u = Vec::with_capacity(n + 1);
        for i in 0..=n {
            // stay inside the piece so one-sided derivatives at kinks are used
            let u = if i == 0 {
                a + 1e-9 * h
            } else if i == n {
                b - 1e-9 * h
            } else {
                a + h * i as f64
            };
            let (bu, dbu) = bump((u - center) / scale);
            let meas = m.radial_measure(u, tau);
            let mut r_row = Vec::with_capacity(xs.len());
            let mut m_row = Vec::with_capacity(xs.len());
            for &x in &xs {
                let (bx, dbx) = if line { bump(x / scale) } else { (1.0, 0.0) };
                let xi = bu * bx;
                let (pu, px) = w.grad(u, x);
                let r = xi * w.dtau(u, x) - (dbu / scale) * bx * pu / g_uu - bu * (dbx / scale) * px;
                if xi > 0.0 {
                    sup = sup.max(w.value(u, x).abs());
                }
                r_row.push(r * meas);
                m_row.push(xi * meas);
            }
            if line {
                res_u.push(simpson_samples(&r_row, hx));
                mass_u.push(simpson_samples(&m_row, hx));
            } else {
                res_u.push(r_row[0]);
                mass_u.push(m_row[0]);
            }
        }
        residual += simpson_samples(&res_u, h);
        mass += simpson_samples(&mass_u, h);
    }
    BumpResult {
        residual,
        mass,
        tolerance: (1e-8 + h_max * h_max) * mass * (1.0 + sup),
        tau,
        center,
        scale,
    }
}

/// Weak-form residuals `∫[ξ∂τφ − ⟨∇ξ, ∇φ⟩]dμ` over the family. Passing
/// upgrades the status to certified (keeping an analytic certificate);
/// any residual above tolerance flags the weight and records the witness.
pub fn certify_subsolution(w: &mut Weight, m: &FlowModel, family: &TestFamily) -> Result<CertificationReport> {
    if family.is_empty() {
        return Err(Error::EmptyTestFamily);
    }
    let mut jobs = Vec::new();
    for &tau in &family.taus {
        if tau >= w.tau_limit() {
            continue;
        }
        let s = w.slice(tau)?;
        let top = m.radial_max().min(family.centers.iter().cloned().fold(0.0, f64::max) + family.scales.iter().cloned().fold(0.0, f64::max));
        let kinks = s.kinks(0.0, top);
        for &scale in &family.scales {
            for &c in &family.centers {
                jobs.push((tau, c, scale));
            }
            if family.include_kinks {
                for &k in &kinks {
                    jobs.push((tau, k, scale));
                }
            }
        }
    }
    if jobs.is_empty() {
        return Err(Error::EmptyTestFamily);
    }
    let results: Vec<BumpResult> = jobs
        .par_iter()
        .map(|&(tau, c, scale)| {
            let s = w.slice(tau)?;
            let kinks = s.kinks((c - scale).max(0.0), (c + scale).min(m.radial_max()));
            Ok(test_bump(m, &s, c, scale, &kinks, family.intervals))
        })
        .collect::<Result<_>>()?;
    let mut worst = f64::NEG_INFINITY;
    let mut witness = &results[0];
    let mut failures = 0;
    for r in &results {
        if r.mass <= 0.0 {
            continue;
        }
        let norm = r.residual / r.mass;
        if norm > worst {
            worst = norm;
            witness = r;
        }
        if r.residual > r.tolerance {
            failures += 1;
        }
    }
    w.status = if failures > 0 {
        CertStatus::Flagged
    } else if w.status == CertStatus::CertifiedAnalytic {
        CertStatus::CertifiedAnalytic
    } else {
        CertStatus::CertifiedNumeric
    };
    let taus: Vec<f64> = family.taus.iter().copied().filter(|&t| t < w.tau_limit()).collect();
    let growth = w.growth_constant(m, &taus, &family.centers)?;
    Ok(CertificationReport {
        weight_id: w.id.clone(),
        status: w.status,
        worst_residual: worst,
        witness_center: witness.center,
        witness_scale: witness.scale,
        witness_tau: witness.tau,
        tests: results.len(),
        failures,
        growth_constant: growth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lgeo::ExactEll;
    use crate::models::{make_model, ModelSpec};
    use approx::assert_relative_eq;

    fn gaussian(n: usize) -> FlowModel {
        make_model(&ModelSpec::gaussian(n)).unwrap()
    }

    #[test]
    fn constant_weights() {
        assert!(weight_constant(-1.0).is_err());
        let w = weight_constant(2.0).unwrap();
        assert_eq!(w.slice(3.0).unwrap().value(1.0, 0.0), 2.0);
        assert_eq!(w.base_value(), 2.0);
        let mut w = weight_constant(1.0).unwrap();
        let m = make_model(&ModelSpec::sphere(2)).unwrap();
        let rep = certify_subsolution(&mut w, &m, &TestFamily::covering(&m, 0.1, 10.0)).unwrap();
        assert_eq!(rep.status, CertStatus::CertifiedAnalytic);
        assert_eq!(rep.worst_residual, 0.0);
    }

    #[test]
    fn heat_kernel_average_matches_direct_quadrature() {
        // oracle: 2-D average by brute-force midpoint rule on the circle
        let (a, u, s) = (0.7, 1.3, 0.4);
        let k = 20000;
        let direct: f64 = (0..k)
            .map(|i| {
                let th = 2.0 * PI * (i as f64 + 0.5) / k as f64;
                let d2 = u * u + a * a - 2.0 * u * a * th.cos();
                (-d2 / (4.0 * s)).exp() / (4.0 * PI * s)
            })
            .sum::<f64>()
            / k as f64;
        assert_relative_eq!(heat_average(2, a, u, s), direct, max_relative = 1e-10);
        // n = 3 average: (1/2)∫ e^{−(u²+a²−2uat)/4s} dt / (4πs)^{3/2}
        let direct3 = crate::quadrature::simpson(
            |t| 0.5 * (-(u * u + a * a - 2.0 * u * a * t) / (4.0 * s)).exp(),
            -1.0,
            1.0,
            2000,
        ) * (4.0 * PI * s).powf(-1.5);
        assert_relative_eq!(heat_average(3, a, u, s), direct3, max_relative = 1e-10);
    }

    #[test]
    fn heat_kernel_base_value_and_domain() {
        let m = gaussian(2);
        let w = weight_shifted_heat_kernel(&m, 0.0, 2.0).unwrap();
        assert_relative_eq!(w.base_value(), 1.0 / (8.0 * PI), max_relative = 1e-15);
        assert_relative_eq!(w.slice(0.0).unwrap().value(0.0, 0.0), w.base_value(), max_relative = 1e-14);
        assert!(w.slice(2.0).is_err());
        assert!(weight_shifted_heat_kernel(&make_model(&ModelSpec::sphere(2)).unwrap(), 0.0, 1.0).is_err());
    }

    #[test]
    fn heat_kernel_certifies() {
        for n in [1, 2, 3] {
            let m = gaussian(n);
            let mut w = weight_shifted_heat_kernel(&m, 0.5, 3.0).unwrap();
            let rep = certify_subsolution(&mut w, &m, &TestFamily::covering(&m, 0.1, 2.0)).unwrap();
            assert_eq!(rep.failures, 0, "n = {n}: {rep:?}");
        }
    }

    #[test]
    fn negative_control_is_flagged_with_residual_4n() {
        for n in [1, 2, 3] {
            let m = gaussian(n);
            let mut w = weight_quadratic_control(&m);
            let rep = certify_subsolution(&mut w, &m, &TestFamily::covering(&m, 0.1, 10.0)).unwrap();
            assert_eq!(rep.status, CertStatus::Flagged);
            assert_relative_eq!(rep.worst_residual, 4.0 * n as f64, max_relative = 1e-6);
            assert!(w.require_admissible(false).is_err());
            assert!(w.require_admissible(true).is_ok());
        }
    }

    #[test]
    fn min_with_heat_kernel_passes() {
        let m = gaussian(2);
        let hk = weight_shifted_heat_kernel(&m, 0.0, 1.0).unwrap();
        let cap = weight_constant(0.05).unwrap();
        let mut w = weight_min(cap, hk);
        assert_eq!(w.status(), CertStatus::Unknown);
        let s = w.slice(0.2).unwrap();
        assert!(s.value(0.0, 0.0) <= 0.05);
        assert!(!s.kinks(0.0, 3.0).is_empty());
        drop(s);
        let rep = certify_subsolution(&mut w, &m, &TestFamily::covering(&m, 0.05, 0.8)).unwrap();
        assert_eq!(rep.status, CertStatus::CertifiedNumeric, "{rep:?}");
        assert_eq!(weight_min(weight_constant(1.0).unwrap(), weight_constant(1.0).unwrap()).slice(1.0).unwrap().value(2.0, 0.0), 1.0);
    }

    #[test]
    fn localization_on_gaussian() {
        let m = gaussian(2);
        let ell: Arc<dyn ReducedDistance> = Arc::new(ExactEll::new(&m));
        let mut w = weight_localization(ell, 2.0).unwrap();
        let s = w.slice(0.5).unwrap();
        // φ = max(0, (u² − 2nτ)/ρ²)
        assert_relative_eq!(s.value(3.0, 0.0), (9.0 - 2.0) / 4.0, max_relative = 1e-14);
        assert_eq!(s.value(0.0, 0.0), 0.0);
        let k = s.kinks(0.0, 5.0);
        assert_eq!(k.len(), 1);
        assert_relative_eq!(k[0], 2f64.sqrt(), max_relative = 1e-10);
        drop(s);
        let rep = certify_subsolution(&mut w, &m, &TestFamily::covering(&m, 0.1, 10.0)).unwrap();
        // the convex truncation kink makes Δφ a positive measure
        assert_eq!(rep.status, CertStatus::Flagged);
        assert!(rep.worst_residual > 0.0);
    }
}
