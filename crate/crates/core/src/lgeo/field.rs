//! Tabulated `ℓ` on a `(τ, u[, x])` grid.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{reduced_distance_variational, EllSlice, ExactEll, ReducedDistance, Route, VariationalEll};
use crate::error::{Error, Result};
use crate::models::{geometric_grid, FlowModel};

/// Grid layout for [`ReducedDistanceField::build`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    /// τ nodes per decade (geometric spacing).
    pub per_decade: usize,
    /// Radial nodes on `[0, u_max]`.
    pub u_points: usize,
    pub u_max: Option<f64>,
    /// Line nodes on `[−x_max, x_max]` (products only).
    pub x_points: usize,
    pub x_max: Option<f64>,
    /// Largest heat-ball radius the field must serve; sets `ℓ_cut`.
    pub r_max: Option<f64>,
    /// Use the variational route with this many segments.
    pub segments: Option<usize>,
}

impl FieldSpec {
    pub fn new(tau_min: f64, tau_max: f64) -> Self {
        Self {
            tau_min,
            tau_max,
            per_decade: 64,
            u_points: 201,
            u_max: None,
            x_points: 41,
            x_max: None,
            r_max: None,
            segments: None,
        }
    }

    /// `n·log(r_max/√(4πτ_min)) + 10`.
    pub fn ell_cut(&self, n: usize) -> f64 {
        let r_max = self
            .r_max
            .unwrap_or_else(|| (4.0 * std::f64::consts::PI * self.tau_max).sqrt());
        let v = n as f64 * (r_max / (4.0 * std::f64::consts::PI * self.tau_min).sqrt()).ln() + 10.0;
        v.max(10.0)
    }
}

const NOT_CONVERGED: u8 = 1;
const CLAMPED: u8 = 2;

/// `ℓ`, `|∇ℓ|`, `∂ℓ/∂τ` and `K = (4πτ)^{−n/2}e^{−ℓ}` on a tensor grid.
#[derive(Debug, Clone)]
pub struct ReducedDistanceField {
    model: FlowModel,
    route: Route,
    pub taus: Vec<f64>,
    pub us: Vec<f64>,
    /// `[0.0]` unless the model has a line factor.
    pub xs: Vec<f64>,
    ell: Vec<f64>,
    du: Vec<f64>,
    dx: Vec<f64>,
    dtau: Vec<f64>,
    flags: Vec<u8>,
}

fn diff_uniform(v: &[f64], h: f64, i: usize, symmetric_zero: bool) -> f64 {
    let n = v.len();
    if n < 3 {
        return if n == 2 { (v[1] - v[0]) / h } else { 0.0 };
    }
    if i == 0 {
        if symmetric_zero {
            0.0
        } else {
            (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
        }
    } else if i == n - 1 {
        (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
    } else {
        (v[i + 1] - v[i - 1]) / (2.0 * h)
    }
}

impl ReducedDistanceField {
    pub fn build(model: &FlowModel, spec: &FieldSpec) -> Result<Self> {
        if !(spec.tau_min > 0.0 && spec.tau_max > spec.tau_min) {
            return Err(crate::error::param("tau", "need 0 < tau_min < tau_max"));
        }
        if !model.in_tau_domain(spec.tau_max) {
            return Err(Error::OutOfRange {
                what: "tau_max",
                value: spec.tau_max,
                lo: 0.0,
                hi: model.tau_max().unwrap_or(f64::INFINITY),
            });
        }
        if spec.per_decade < 2 || spec.u_points < 3 {
            return Err(Error::GridTooCoarse(format!(
                "{} τ nodes per decade, {} radial nodes",
                spec.per_decade, spec.u_points
            )));
        }
        let decades = (spec.tau_max / spec.tau_min).log10();
        let count = ((decades * spec.per_decade as f64).ceil() as usize + 1).max(3);
        let taus = geometric_grid(spec.tau_min, spec.tau_max, count);
        let n = model.dimension();
        let reach = (4.0 * spec.tau_max * spec.ell_cut(n)).sqrt();
        let u_max = spec.u_max.unwrap_or(reach).min(model.radial_extent());
        let us: Vec<f64> = (0..spec.u_points)
            .map(|i| u_max * i as f64 / (spec.u_points - 1) as f64)
            .collect();
        let xs: Vec<f64> = if model.has_line() {
            let xm = spec.x_max.unwrap_or(reach);
            let k = spec.x_points.max(3) | 1;
            (0..k).map(|j| -xm + 2.0 * xm * j as f64 / (k - 1) as f64).collect()
        } else {
            vec![0.0]
        };

        let exact = ExactEll::new(model);
        let variational = spec.segments.map(|s| VariationalEll::new(model, s));
        let per_slice = us.len() * xs.len();
        let slices: Vec<Result<(Vec<f64>, Vec<u8>)>> = taus
            .par_iter()
            .map(|&tau| {
                let mut vals = Vec::with_capacity(per_slice);
                let mut flags = Vec::with_capacity(per_slice);
                match &variational {
                    Some(v) => {
                        for &u in &us {
                            for &x in &xs {
                                let r = reduced_distance_variational(model, v.point(u, x), tau, v.segments)?;
                                vals.push(r.ell);
                                flags.push(
                                    if r.converged { 0 } else { NOT_CONVERGED } | if r.clamped { CLAMPED } else { 0 },
                                );
                            }
                        }
                    }
                    None => {
                        let s = exact.slice(tau)?;
                        for &u in &us {
                            for &x in &xs {
                                vals.push(s.ell(u, x));
                                flags.push(0);
                            }
                        }
                    }
                }
                Ok((vals, flags))
            })
            .collect();
        let mut ell = Vec::with_capacity(taus.len() * per_slice);
        let mut flags = Vec::with_capacity(ell.capacity());
        for s in slices {
            let (v, f) = s?;
            ell.extend(v);
            flags.extend(f);
        }
        let route = match spec.segments {
            Some(_) => Route::Variational,
            None => exact.route(),
        };
        let mut field = Self {
            model: model.clone(),
            route,
            taus,
            us,
            xs,
            ell,
            du: Vec::new(),
            dx: Vec::new(),
            dtau: Vec::new(),
            flags,
        };
        field.differentiate();
        Ok(field)
    }

    fn index(&self, t: usize, i: usize, j: usize) -> usize {
        (t * self.us.len() + i) * self.xs.len() + j
    }

    fn differentiate(&mut self) {
        let (nt, nu, nx) = (self.taus.len(), self.us.len(), self.xs.len());
        let hu = self.us[1] - self.us[0];
        let hx = if nx > 1 { self.xs[1] - self.xs[0] } else { 1.0 };
        let hlog = (self.taus[1] / self.taus[0]).ln();
        let total = self.ell.len();
        let (mut du, mut dx, mut dtau) = (vec![0.0; total], vec![0.0; total], vec![0.0; total]);
        let mut row = Vec::new();
        for t in 0..nt {
            for j in 0..nx {
                row.clear();
                row.extend((0..nu).map(|i| self.ell[self.index(t, i, j)]));
                for i in 0..nu {
                    du[self.index(t, i, j)] = diff_uniform(&row, hu, i, true);
                }
            }
            if nx > 1 {
                for i in 0..nu {
                    row.clear();
                    row.extend((0..nx).map(|j| self.ell[self.index(t, i, j)]));
                    for j in 0..nx {
                        dx[self.index(t, i, j)] = diff_uniform(&row, hx, j, false);
                    }
                }
            }
        }
        for i in 0..nu {
            for j in 0..nx {
                row.clear();
                row.extend((0..nt).map(|t| self.ell[self.index(t, i, j)]));
                for t in 0..nt {
                    dtau[self.index(t, i, j)] = diff_uniform(&row, hlog, t, false) / self.taus[t];
                }
            }
        }
        self.du = du;
        self.dx = dx;
        self.dtau = dtau;
    }

    pub fn route_used(&self) -> Route {
        self.route
    }

    pub fn ell_at(&self, t: usize, i: usize, j: usize) -> f64 {
        self.ell[self.index(t, i, j)]
    }

    pub fn grad_sq_at(&self, t: usize, i: usize, j: usize) -> f64 {
        let k = self.index(t, i, j);
        self.du[k] * self.du[k] / self.model.radial_metric(self.taus[t]) + self.dx[k] * self.dx[k]
    }

    pub fn dtau_at(&self, t: usize, i: usize, j: usize) -> f64 {
        self.dtau[self.index(t, i, j)]
    }

    /// `K = (4πτ)^{−n/2} e^{−ℓ}`.
    pub fn kernel_at(&self, t: usize, i: usize, j: usize) -> f64 {
        let n = self.model.dimension() as f64;
        (-0.5 * n * (4.0 * std::f64::consts::PI * self.taus[t]).ln() - self.ell_at(t, i, j)).exp()
    }

    /// `ψ = log K`.
    pub fn psi_at(&self, t: usize, i: usize, j: usize) -> f64 {
        let n = self.model.dimension() as f64;
        -0.5 * n * (4.0 * std::f64::consts::PI * self.taus[t]).ln() - self.ell_at(t, i, j)
    }

    /// `L̄ = 4τℓ`.
    pub fn lbar_at(&self, t: usize, i: usize, j: usize) -> f64 {
        4.0 * self.taus[t] * self.ell_at(t, i, j)
    }

    pub fn unconverged_nodes(&self) -> usize {
        self.flags.iter().filter(|&&f| f & NOT_CONVERGED != 0).count()
    }

    pub fn clamped_nodes(&self) -> usize {
        self.flags.iter().filter(|&&f| f & CLAMPED != 0).count()
    }

    /// CSV with columns `tau,coord,ell,grad_ell,dtau_ell,K`, plus `x` for
    /// models with a line factor.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let line = self.xs.len() > 1;
        writeln!(out, "tau,coord,ell,grad_ell,dtau_ell,K{}", if line { ",x" } else { "" })?;
        for t in 0..self.taus.len() {
            for i in 0..self.us.len() {
                for j in 0..self.xs.len() {
                    write!(
                        out,
                        "{:e},{:e},{:e},{:e},{:e},{:e}",
                        self.taus[t],
                        self.us[i],
                        self.ell_at(t, i, j),
                        self.grad_sq_at(t, i, j).sqrt(),
                        self.dtau_at(t, i, j),
                        self.kernel_at(t, i, j)
                    )?;
                    if line {
                        write!(out, ",{:e}", self.xs[j])?;
                    }
                    writeln!(out)?;
                }
            }
        }
        Ok(())
    }

    fn bracket(grid: &[f64], v: f64) -> (usize, f64) {
        let k = grid.partition_point(|&g| g <= v).clamp(1, grid.len() - 1) - 1;
        let w = ((v - grid[k]) / (grid[k + 1] - grid[k])).clamp(0.0, 1.0);
        (k, w)
    }
}

struct FieldSlice<'a> {
    field: &'a ReducedDistanceField,
    tau: f64,
    t: usize,
    wt: f64,
    metric: f64,
}

impl FieldSlice<'_> {
    /// Hermite in `u` on row `(t, ·, j)`.
    fn hermite(&self, t: usize, j: usize, u: f64, values: &[f64], slopes: &[f64]) -> (f64, f64) {
        let f = self.field;
        let (i, w) = ReducedDistanceField::bracket(&f.us, u);
        let h = f.us[i + 1] - f.us[i];
        let (a, b) = (f.index(t, i, j), f.index(t, i + 1, j));
        let (y0, y1, m0, m1) = (values[a], values[b], slopes[a] * h, slopes[b] * h);
        let w2 = w * w;
        let w3 = w2 * w;
        let val = (2.0 * w3 - 3.0 * w2 + 1.0) * y0
            + (w3 - 2.0 * w2 + w) * m0
            + (-2.0 * w3 + 3.0 * w2) * y1
            + (w3 - w2) * m1;
        let der = ((6.0 * w2 - 6.0 * w) * y0
            + (3.0 * w2 - 4.0 * w + 1.0) * m0
            + (-6.0 * w2 + 6.0 * w) * y1
            + (3.0 * w2 - 2.0 * w) * m1)
            / h;
        (val, der)
    }

    /// Interpolate `(value, ∂u, ∂x)` at one τ node.
    fn at_node(&self, t: usize, u: f64, x: f64) -> (f64, f64, f64) {
        let f = self.field;
        if f.xs.len() == 1 {
            let (v, d) = self.hermite(t, 0, u, &f.ell, &f.du);
            return (v, d, 0.0);
        }
        let (j, w) = ReducedDistanceField::bracket(&f.xs, x);
        let (v0, d0) = self.hermite(t, j, u, &f.ell, &f.du);
        let (v1, d1) = self.hermite(t, j + 1, u, &f.ell, &f.du);
        let hx = f.xs[j + 1] - f.xs[j];
        ((1.0 - w) * v0 + w * v1, (1.0 - w) * d0 + w * d1, (v1 - v0) / hx)
    }

    fn blend(&self, u: f64, x: f64) -> (f64, f64, f64) {
        let a = self.at_node(self.t, u, x);
        if self.wt == 0.0 {
            return a;
        }
        let b = self.at_node(self.t + 1, u, x);
        let w = self.wt;
        (
            (1.0 - w) * a.0 + w * b.0,
            (1.0 - w) * a.1 + w * b.1,
            (1.0 - w) * a.2 + w * b.2,
        )
    }
}

impl EllSlice for FieldSlice<'_> {
    fn tau(&self) -> f64 {
        self.tau
    }
    fn ell(&self, u: f64, x: f64) -> f64 {
        self.blend(u, x).0
    }
    fn ell_du(&self, u: f64, x: f64) -> f64 {
        self.blend(u, x).1
    }
    fn ell_dx(&self, u: f64, x: f64) -> f64 {
        self.blend(u, x).2
    }
    fn ell_dtau(&self, u: f64, x: f64) -> f64 {
        let f = self.field;
        // linear in log τ between the two bracketing slices
        let (lo, hi) = (self.at_node(self.t, u, x).0, self.at_node(self.t + 1, u, x).0);
        (hi - lo) / (f.taus[self.t + 1].ln() - f.taus[self.t].ln()) / self.tau
    }
    fn radial_metric(&self) -> f64 {
        self.metric
    }
}

impl ReducedDistance for ReducedDistanceField {
    fn model(&self) -> &FlowModel {
        &self.model
    }

    fn route(&self) -> Route {
        Route::Interpolated
    }

    fn tau_range(&self) -> (f64, f64) {
        (self.taus[0], *self.taus.last().unwrap())
    }

    fn slice(&self, tau: f64) -> Result<Box<dyn EllSlice + '_>> {
        let (lo, hi) = self.tau_range();
        if !(tau >= lo && tau <= hi) {
            return Err(Error::OutOfRange {
                what: "tau",
                value: tau,
                lo,
                hi,
            });
        }
        let logs: Vec<f64> = self.taus.iter().map(|t| t.ln()).collect();
        let (t, wt) = Self::bracket(&logs, tau.ln());
        Ok(Box::new(FieldSlice {
            field: self,
            tau,
            t,
            wt,
            metric: self.model.radial_metric(tau),
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    /// `max [bound − ℓ]₊` over all nodes.
    pub max_violation: f64,
    /// `max |ℓ − bound|`; zero when the bound is attained everywhere.
    pub max_gap: f64,
    /// `min (ℓ − bound)` over nodes with `q ≠ p`.
    pub min_slack: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compare every node with `e^{−κτ}d₀²/4τ − nκτ/3`.
pub fn check_lower_bound(field: &ReducedDistanceField, m: &FlowModel) -> LowerBoundReport {
    let kappa = m.ric_lower_bound();
    let n = m.dimension() as f64;
    let tolerance = 1e-10;
    let (mut violation, mut gap, mut slack) = (0.0f64, 0.0f64, f64::INFINITY);
    for (t, &tau) in field.taus.iter().enumerate() {
        for (i, &u) in field.us.iter().enumerate() {
            for (j, &x) in field.xs.iter().enumerate() {
                let d2 = u * u + x * x;
                let bound = (-kappa * tau).exp() * d2 / (4.0 * tau) - n * kappa * tau / 3.0;
                let ell = field.ell_at(t, i, j);
                let scale = 1.0 + ell.abs();
                violation = violation.max((bound - ell) / scale);
                gap = gap.max((ell - bound).abs() / scale);
                if d2 > 0.0 {
                    slack = slack.min(ell - bound);
                }
            }
        }
    }
    LowerBoundReport {
        max_violation: violation.max(0.0),
        max_gap: gap,
        min_slack: slack,
        tolerance,
        pass: violation <= tolerance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientBoundReport {
    /// `(τ, K*(τ))` on interior τ nodes.
    pub per_tau: Vec<(f64, f64)>,
    pub max: f64,
    pub pass: bool,
}

/// Empirical `K*(τ) = max τ·max{|∇ℓ|², |∂ℓ/∂τ|}/(ℓ + 1)` over interior nodes.
pub fn check_gradient_bound(field: &ReducedDistanceField, _m: &FlowModel) -> GradientBoundReport {
    let (nt, nu, nx) = (field.taus.len(), field.us.len(), field.xs.len());
    let x_range = if nx > 1 { 1..nx - 1 } else { 0..1 };
    let per_tau: Vec<(f64, f64)> = (1..nt - 1)
        .map(|t| {
            let tau = field.taus[t];
            let mut k = 0.0f64;
            for i in 0..nu - 1 {
                for j in x_range.clone() {
                    let g = field.grad_sq_at(t, i, j).max(field.dtau_at(t, i, j).abs());
                    k = k.max(tau * g / (field.ell_at(t, i, j) + 1.0));
                }
            }
            (tau, k)
        })
        .collect();
    let max = per_tau.iter().map(|p| p.1).fold(0.0, f64::max);
    GradientBoundReport {
        pass: per_tau.iter().all(|p| p.1.is_finite()),
        per_tau,
        max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_model, ModelSpec};
    use approx::assert_relative_eq;

    fn small(tau_min: f64, tau_max: f64) -> FieldSpec {
        FieldSpec {
            per_decade: 16,
            u_points: 81,
            ..FieldSpec::new(tau_min, tau_max)
        }
    }

    #[test]
    fn gaussian_field_node() {
        let m = make_model(&ModelSpec::gaussian(2)).unwrap();
        let spec = FieldSpec {
            u_max: Some(4.0),
            ..small(0.1, 10.0)
        };
        let f = ReducedDistanceField::build(&m, &spec).unwrap();
        let t = f.taus.iter().position(|&t| (t - 1.0).abs() < 1e-12).unwrap();
        let i = f.us.iter().position(|&u| (u - 2.0).abs() < 1e-12).unwrap();
        assert_relative_eq!(f.ell_at(t, i, 0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            f.kernel_at(t, i, 0),
            (-1.0f64).exp() / (4.0 * std::f64::consts::PI),
            max_relative = 1e-13
        );
        assert_eq!(f.route_used(), Route::ClosedForm);
    }

    #[test]
    fn static_cone_scaling_and_sphere_symmetry() {
        let c = make_model(&ModelSpec::cone(0.5)).unwrap();
        let f = ReducedDistanceField::build(&c, &small(0.1, 10.0)).unwrap();
        for t in 1..f.taus.len() - 1 {
            for i in [5, 40, 70] {
                let ell = f.ell_at(t, i, 0);
                // centered differences in log τ of 1/τ: relative error ~ h²/6
                assert_relative_eq!(f.dtau_at(t, i, 0), -ell / f.taus[t], max_relative = 1e-2);
            }
        }
        let s = make_model(&ModelSpec::sphere(2)).unwrap();
        let f = ReducedDistanceField::build(&s, &small(0.1, 100.0)).unwrap();
        for t in 0..f.taus.len() {
            assert_eq!(f.grad_sq_at(t, 0, 0), 0.0);
            assert!(f.psi_at(t, 0, 0).is_finite() && f.kernel_at(t, 0, 0) > 0.0);
        }
        assert!((f.us.last().unwrap() - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn bound_checks() {
        let g = make_model(&ModelSpec::gaussian(2)).unwrap();
        let f = ReducedDistanceField::build(&g, &small(0.1, 100.0)).unwrap();
        let lb = check_lower_bound(&f, &g);
        assert!(lb.pass && lb.max_gap < 1e-14);
        let gb = check_gradient_bound(&f, &g);
        assert!(gb.pass && gb.max <= 1.0 + 1e-2, "{gb:?}");

        let s = make_model(&ModelSpec::sphere(2)).unwrap();
        let f = ReducedDistanceField::build(&s, &small(0.1, 100.0)).unwrap();
        let lb = check_lower_bound(&f, &s);
        assert!(lb.pass && lb.min_slack > 0.0, "{lb:?}");
        assert!(check_gradient_bound(&f, &s).pass);
    }

    #[test]
    fn interpolated_slice_tracks_exact() {
        let s = make_model(&ModelSpec::sphere(2)).unwrap();
        let spec = FieldSpec {
            per_decade: 64,
            ..small(0.5, 5.0)
        };
        let f = ReducedDistanceField::build(&s, &spec).unwrap();
        let exact = ExactEll::new(&s);
        let (a, b) = (f.slice(1.7).unwrap(), exact.slice(1.7).unwrap());
        for u in [0.1, 1.0, 2.3] {
            assert!((a.ell(u, 0.0) - b.ell(u, 0.0)).abs() < 1e-3);
            assert!((a.ell_du(u, 0.0) - b.ell_du(u, 0.0)).abs() < 1e-3);
        }
        assert!(f.slice(10.0).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let p = make_model(&ModelSpec::product(2)).unwrap();
        let spec = FieldSpec {
            per_decade: 2,
            u_points: 5,
            x_points: 3,
            ..FieldSpec::new(1.0, 10.0)
        };
        let f = ReducedDistanceField::build(&p, &spec).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "tau,coord,ell,grad_ell,dtau_ell,K,x");
        assert_eq!(lines.count(), f.taus.len() * 5 * 3);
    }
}
