//! Pseudo heat balls `E_r = {K > r^{−n}}` and the local quantities on them.
//!
//! Time integrals use `τ = R e^{−t}` with `R = r²/4π`, so the slice threshold
//! `n·log(r/√(4πτ))` is `nt/2`. The `t` axis is cut where slices appear or
//! swallow a compact factor, and each piece is mapped through
//! `t = a + (b − a)(3s² − 2s³)` to tame the `(t − a)^{n/2}` edge behavior.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{round4, Options, Value};
use crate::error::{Error, Result};
use crate::lgeo::{EllSlice, ReducedDistance};
use crate::models::{FlowModel, Point};
use crate::quadrature::{bisect, simpson_samples, simpson_samples_checked};
use crate::weights::{Weight, WeightSlice};

/// One time slice of `E_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallSlice {
    pub tau: f64,
    /// `n·log(r/√(4πτ))`
    pub threshold: f64,
    /// Radius `u` of the slice boundary (at `x = 0` for products).
    pub boundary: f64,
    /// The slice contains the whole compact factor.
    pub whole: bool,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoHeatBall {
    pub r: f64,
    pub dimension: usize,
    /// Slices are empty from `r²/4π` on.
    pub tau_top: f64,
    pub slices: Vec<BallSlice>,
}

fn threshold(n: usize, r: f64, tau: f64) -> f64 {
    n as f64 * (r / (4.0 * PI * tau).sqrt()).ln()
}

fn slice_at(ell: &dyn ReducedDistance, tau: f64) -> Result<Box<dyn EllSlice + '_>> {
    let (lo, hi) = ell.tau_range();
    if !(tau >= lo && tau <= hi) {
        return Err(Error::MissingField(format!(
            "reduced distance needed at τ = {tau:e}, available on [{lo:e}, {hi:e}]"
        )));
    }
    ell.slice(tau)
}

/// Boundary radius of `{ℓ(·, 0) < thr}`.
fn boundary(m: &FlowModel, s: &dyn EllSlice, thr: f64) -> Result<BallSlice> {
    let tau = s.tau();
    let mut out = BallSlice {
        tau,
        threshold: thr,
        boundary: 0.0,
        whole: false,
        empty: true,
    };
    if thr <= 0.0 || s.ell(0.0, 0.0) >= thr {
        return Ok(out);
    }
    out.empty = false;
    let top = m.radial_max();
    if top.is_finite() && s.ell(top, 0.0) < thr {
        out.boundary = top;
        out.whole = true;
        return Ok(out);
    }
    // ℓ ≥ u²/4τ places the boundary inside √(4τ·thr)
    let mut hi = ((4.0 * tau * thr).sqrt() * (1.0 + 1e-9)).min(top);
    let mut grow = 0;
    while s.ell(hi, 0.0) < thr && grow < 60 {
        hi = (2.0 * hi).min(top);
        grow += 1;
    }
    if hi > m.radial_extent() {
        return Err(Error::MissingField(format!(
            "slice at τ = {tau:e} reaches radius {hi:e} beyond the tabulated {:e}",
            m.radial_extent()
        )));
    }
    out.boundary = bisect(|u| s.ell(u, 0.0) - thr, 0.0, hi, 1e-10);
    Ok(out)
}

/// Slices of `E_r` at the given times.
pub fn pseudo_heat_ball(ell: &dyn ReducedDistance, r: f64, taus: &[f64]) -> Result<PseudoHeatBall> {
    if !(r > 0.0) {
        return Err(crate::error::param("r", "radius must be > 0"));
    }
    let m = ell.model();
    let n = m.dimension();
    let slices = taus
        .iter()
        .map(|&tau| {
            let s = slice_at(ell, tau)?;
            boundary(m, s.as_ref(), threshold(n, r, tau))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PseudoHeatBall {
        r,
        dimension: n,
        tau_top: r * r / (4.0 * PI),
        slices,
    })
}

/// Integrands gathered over one slice: `I` primary, `I` alternative,
/// `J` surface, `J` bulk (each before the `r^{−n}` factor).
type Quad = [f64; 4];

struct Engine<'a> {
    ell: &'a dyn ReducedDistance,
    w: &'a Weight,
    m: &'a FlowModel,
    n: usize,
    opts: &'a Options,
}

impl Engine<'_> {
    fn slice_integrals(&self, tau: f64, thr: f64) -> Result<Quad> {
        let s = slice_at(self.ell, tau)?;
        let ws = self.w.slice(tau)?;
        let b = boundary(self.m, s.as_ref(), thr)?;
        if b.empty {
            return Ok([0.0; 4]);
        }
        let h_trace = self.m.trace_h(Point::new(0.0, 0.0), tau);
        let g_uu = s.radial_metric();
        let nf = self.n as f64;
        let density = |u: f64, x: f64, ws: &WeightSlice| -> [f64; 3] {
            let l = s.ell(u, x);
            let grad = s.grad_sq(u, x);
            let phi = ws.value(u, x);
            [
                (grad + h_trace * (thr - l)) * phi,
                (grad + nf / (2.0 * tau) + s.ell_dtau(u, x)) * phi,
                h_trace * phi,
            ]
        };
        let nu = round4(self.opts.u_intervals.min(400));
        if !self.m.has_line() {
            let h = b.boundary / nu as f64;
            let mut cols = [Vec::with_capacity(nu + 1), Vec::with_capacity(nu + 1), Vec::with_capacity(nu + 1)];
            for i in 0..=nu {
                let u = h * i as f64;
                let meas = self.m.radial_measure(u, tau);
                let d = density(u, 0.0, &ws);
                for k in 0..3 {
                    cols[k].push(d[k] * meas);
                }
            }
            let surface = if b.whole {
                0.0
            } else {
                let u = b.boundary;
                s.ell_du(u, 0.0).abs() * self.m.radial_measure(u, tau) / g_uu * ws.value(u, 0.0)
            };
            return Ok([
                simpson_samples(&cols[0], h),
                simpson_samples(&cols[1], h),
                surface,
                simpson_samples(&cols[2], h),
            ]);
        }
        // products: u = u_b(1 − v²) absorbs the √ edge of the x-extent
        let nx = round4(self.opts.x_intervals.min(128));
        let hv = 1.0 / nu as f64;
        let x_cap = (4.0 * tau * thr).sqrt() * (1.0 + 1e-9);
        let mut cols = [
            Vec::with_capacity(nu + 1),
            Vec::with_capacity(nu + 1),
            Vec::with_capacity(nu + 1),
            Vec::with_capacity(nu + 1),
        ];
        for i in 0..=nu {
            let v = hv * i as f64;
            let u = b.boundary * (1.0 - v * v);
            let jac = 2.0 * b.boundary * v;
            let meas = self.m.radial_measure(u, tau) * jac;
            let x_edge = if s.ell(u, 0.0) >= thr {
                0.0
            } else {
                bisect(|x| s.ell(u, x) - thr, 0.0, x_cap, 1e-10)
            };
            if x_edge == 0.0 || meas == 0.0 {
                for c in cols.iter_mut() {
                    c.push(0.0);
                }
                continue;
            }
            let hx = x_edge / nx as f64;
            let mut rows = [Vec::with_capacity(nx + 1), Vec::with_capacity(nx + 1), Vec::with_capacity(nx + 1)];
            for j in 0..=nx {
                let d = density(u, hx * j as f64, &ws);
                for k in 0..3 {
                    rows[k].push(d[k]);
                }
            }
            let lx = s.ell_dx(u, x_edge).abs();
            let surface = if lx > 0.0 {
                2.0 * s.grad_sq(u, x_edge) / lx * ws.value(u, x_edge)
            } else {
                0.0
            };
            cols[0].push(2.0 * simpson_samples(&rows[0], hx) * meas);
            cols[1].push(2.0 * simpson_samples(&rows[1], hx) * meas);
            cols[2].push(surface * meas);
            cols[3].push(2.0 * simpson_samples(&rows[2], hx) * meas);
        }
        Ok([
            simpson_samples(&cols[0], hv),
            simpson_samples(&cols[1], hv),
            simpson_samples(&cols[2], hv),
            simpson_samples(&cols[3], hv),
        ])
    }

    /// Breakpoints in `t` where slices appear, vanish or fill the compact factor.
    fn breakpoints(&self, big_r: f64, t_max: f64) -> Result<Vec<f64>> {
        let nf = self.n as f64;
        let top = self.m.radial_max();
        let probes: Vec<(bool, f64)> = if top.is_finite() {
            vec![(false, 0.0), (true, top)]
        } else {
            vec![(false, 0.0)]
        };
        let g = |t: f64, u: f64| -> Result<f64> {
            let s = slice_at(self.ell, big_r * (-t).exp())?;
            Ok(s.ell(u, 0.0) - 0.5 * nf * t)
        };
        let k = 400;
        let ts: Vec<f64> = (0..=k).map(|i| t_max * i as f64 / k as f64).collect();
        let mut cuts = vec![0.0, t_max];
        for &(_, u) in &probes {
            let vals = ts.iter().map(|&t| g(t, u)).collect::<Result<Vec<_>>>()?;
            for i in 0..k {
                if (vals[i] < 0.0) != (vals[i + 1] < 0.0) && vals[i] != 0.0 {
                    let root = bisect(|t| g(t, u).unwrap_or(f64::NAN), ts[i], ts[i + 1], 1e-13);
                    cuts.push(root);
                }
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        Ok(cuts)
    }

    fn run(&self, r: f64) -> Result<([f64; 4], [f64; 4])> {
        if !(r > 0.0) {
            return Err(crate::error::param("r", "radius must be > 0"));
        }
        self.w.require_admissible(self.opts.allow_flagged)?;
        let big_r = r * r / (4.0 * PI);
        if big_r >= self.w.tau_limit() {
            return Err(Error::OutOfRange {
                what: "r",
                value: r,
                lo: 0.0,
                hi: (4.0 * PI * self.w.tau_limit()).sqrt(),
            });
        }
        if big_r > self.m.tau_max().unwrap_or(f64::INFINITY) {
            return Err(Error::OutOfRange {
                what: "r",
                value: r,
                lo: 0.0,
                hi: super::max_radius(self.m),
            });
        }
        let nf = self.n as f64;
        let t_max = 80.0 / nf;
        let cuts = self.breakpoints(big_r, t_max)?;
        let ns = round4(self.opts.t_intervals);
        let mut total = [0.0; 4];
        let mut err = [0.0; 4];
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if b - a <= 0.0 {
                continue;
            }
            let nodes: Vec<Quad> = (0..=ns)
                .into_par_iter()
                .map(|i| {
                    let s = i as f64 / ns as f64;
                    let t = a + (b - a) * s * s * (3.0 - 2.0 * s);
                    let dt = 6.0 * (b - a) * s * (1.0 - s);
                    if dt == 0.0 {
                        return Ok([0.0; 4]);
                    }
                    let tau = big_r * (-t).exp();
                    let q = self.slice_integrals(tau, 0.5 * nf * t)?;
                    Ok(q.map(|v| v * tau * dt))
                })
                .collect::<Result<_>>()?;
            for k in 0..4 {
                let col: Vec<f64> = nodes.iter().map(|q| q[k]).collect();
                let e = simpson_samples_checked(&col, 1.0 / ns as f64);
                total[k] += e.value;
                err[k] += e.error.abs();
            }
        }
        let scale = r.powi(-(self.n as i32));
        Ok((total.map(|v| v * scale), err.map(|v| v * scale)))
    }
}

/// `I` in both integrand forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalI {
    pub primary: Value,
    pub alternative: Value,
}

fn engine<'a>(ell: &'a dyn ReducedDistance, w: &'a Weight, opts: &'a Options) -> Engine<'a> {
    let m = ell.model();
    Engine {
        ell,
        w,
        m,
        n: m.dimension(),
        opts,
    }
}

/// `I^φ(r)` with the integrands `|∇ℓ|² + H(n·log(r/√(4πτ)) − ℓ)` and
/// `|∇ψ|² − ∂τψ`, `ψ = log K`.
///
/// The forms agree for constant `φ`. In general the alternative exceeds the
/// primary by `r^{−n}∬_{E_r}(n·log(r/√(4πτ)) − ℓ)∂τφ dμ dτ`.
pub fn local_i(ell: &dyn ReducedDistance, w: &Weight, r: f64, opts: &Options) -> Result<LocalI> {
    let (v, e) = engine(ell, w, opts).run(r)?;
    let flagged = !w.status().is_certified();
    Ok(LocalI {
        primary: Value {
            value: v[0],
            error: e[0],
            flagged,
        },
        alternative: Value {
            value: v[1],
            error: e[1],
            flagged,
        },
    })
}

pub fn local_i_primary(ell: &dyn ReducedDistance, w: &Weight, r: f64, opts: &Options) -> Result<Value> {
    Ok(local_i(ell, w, r, opts)?.primary)
}

pub fn local_i_alternative(ell: &dyn ReducedDistance, w: &Weight, r: f64, opts: &Options) -> Result<Value> {
    Ok(local_i(ell, w, r, opts)?.alternative)
}

/// `J^φ(r)`: the boundary term via co-area slicing plus `r^{−n}∬_{E_r} Hφ`.
pub fn local_j(ell: &dyn ReducedDistance, w: &Weight, r: f64, opts: &Options) -> Result<Value> {
    let (v, e) = engine(ell, w, opts).run(r)?;
    Ok(Value {
        value: v[2] + v[3],
        error: e[2] + e[3],
        flagged: !w.status().is_certified(),
    })
}

/// `I(r)` on a static model from ball volumes alone:
/// `(n/2) r^{−n} ∫₀^∞ Vol B(p, √(2nτt)) dt` with `τ = R e^{−t}`.
pub fn static_identity_i(m: &FlowModel, r: f64) -> Result<f64> {
    let geom = m.static_geometry()?;
    let n = m.dimension() as f64;
    let big_r = r * r / (4.0 * PI);
    let w_max = (80.0 / n).sqrt();
    let k = 4000;
    let h = w_max / k as f64;
    let vals: Vec<f64> = (0..=k)
        .map(|i| {
            // t = w², dt = 2w dw
            let w = h * i as f64;
            let t = w * w;
            let radius = (2.0 * n * big_r * (-t).exp() * t).sqrt();
            geom.ball_volume(radius) * 2.0 * w
        })
        .collect();
    Ok(0.5 * n * r.powf(-n) * simpson_samples(&vals, h))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IJReport {
    /// `(r, |I − n r^{−n}∫η^{n−1}J| / |I|)`
    pub per_r: Vec<(f64, f64)>,
    pub max_relative: f64,
}

/// Compare `I(r)` with `n r^{−n}∫₀^r η^{n−1}J(η)dη` on a log-uniform `η`
/// grid; below the grid `J` is replaced by its limit `j0`.
pub fn check_ij_relation(
    n: usize,
    etas: &[f64],
    j: &[f64],
    j0: f64,
    rs: &[f64],
    i_values: &[f64],
) -> Result<IJReport> {
    if etas.len() < 3 || etas.len() != j.len() || rs.len() != i_values.len() {
        return Err(Error::InsufficientSamples("η grid or sample lengths".into()));
    }
    let h = (etas[1] / etas[0]).ln();
    if h > std::f64::consts::LN_10 / 32.0 * (1.0 + 1e-9) {
        return Err(Error::InsufficientSamples(format!(
            "{:.1} η samples per decade, need 32",
            std::f64::consts::LN_10 / h
        )));
    }
    let nf = n as f64;
    // ∫ η^{n−1} J dη = ∫ η^n J d(log η)
    let g: Vec<f64> = etas.iter().zip(j).map(|(e, v)| e.powf(nf) * v).collect();
    let mut cum = vec![0.0; g.len()];
    for k in 1..g.len() {
        cum[k] = if k % 2 == 0 {
            cum[k - 2] + h / 3.0 * (g[k - 2] + 4.0 * g[k - 1] + g[k])
        } else if k == 1 {
            h / 12.0 * (5.0 * g[0] + 8.0 * g[1] - g[2])
        } else {
            cum[k - 1] + h / 12.0 * (-g[k - 2] + 8.0 * g[k - 1] + 5.0 * g[k])
        };
    }
    let head = j0 * etas[0].powf(nf) / nf;
    let mut per_r = Vec::with_capacity(rs.len());
    for (&r, &iv) in rs.iter().zip(i_values) {
        let k = etas
            .iter()
            .position(|&e| ((e - r) / r).abs() < 1e-9)
            .ok_or_else(|| Error::InsufficientSamples(format!("r = {r} is not on the η grid")))?;
        let predicted = nf * r.powf(-nf) * (head + cum[k]);
        per_r.push((r, ((iv - predicted) / iv).abs()));
    }
    let max_relative = per_r.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(IJReport { per_r, max_relative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lgeo::ExactEll;
    use crate::models::{make_model, ModelSpec};
    use crate::weights::weight_constant;
    use approx::assert_relative_eq;

    fn one() -> Weight {
        weight_constant(1.0).unwrap()
    }

    #[test]
    fn gaussian_slices_and_nesting() {
        let m = make_model(&ModelSpec::gaussian(2)).unwrap();
        let e = ExactEll::new(&m);
        let taus = [0.01, 0.05, 0.07];
        let b1 = pseudo_heat_ball(&e, 1.0, &taus).unwrap();
        let b2 = pseudo_heat_ball(&e, 2.0, &taus).unwrap();
        for (s1, s2) in b1.slices.iter().zip(&b2.slices) {
            // |x|²/4τ = n log(r/√(4πτ))
            assert_relative_eq!(s1.boundary * s1.boundary / (4.0 * s1.tau), s1.threshold, max_relative = 1e-9);
            assert!(s1.boundary <= s2.boundary);
        }
        let top = pseudo_heat_ball(&e, 1.0, &[1.0 / (4.0 * PI)]).unwrap();
        assert!(top.slices[0].empty);
    }

    #[test]
    fn watson_gaussian() {
        for n in [1, 2, 3] {
            let m = make_model(&ModelSpec::gaussian(n)).unwrap();
            let e = ExactEll::new(&m);
            for r in [0.5, 5.0] {
                let i = local_i(&e, &one(), r, &Options::default()).unwrap();
                assert_relative_eq!(i.primary.value, 1.0, max_relative = 1e-6);
                assert_relative_eq!(i.alternative.value, 1.0, max_relative = 1e-5);
                let j = local_j(&e, &one(), r, &Options::default()).unwrap();
                assert_relative_eq!(j.value, 1.0, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn static_identity_flat_plane() {
        let m = make_model(&ModelSpec::gaussian(2)).unwrap();
        for r in [0.1, 1.0, 30.0] {
            assert_relative_eq!(static_identity_i(&m, r).unwrap(), 1.0, max_relative = 1e-8);
        }
    }

    #[test]
    fn cone_matches_static_identity() {
        let m = make_model(&ModelSpec::cone(0.5)).unwrap();
        let e = ExactEll::new(&m);
        let r = 20.0;
        let direct = local_i_primary(&e, &one(), r, &Options::default()).unwrap();
        let oracle = static_identity_i(&m, r).unwrap();
        assert_relative_eq!(direct.value, oracle, max_relative = 1e-5);
    }

    #[test]
    fn sphere_forms_agree_and_i_averages_j() {
        let m = make_model(&ModelSpec::sphere(2)).unwrap();
        let e = ExactEll::new(&m);
        let i = local_i(&e, &one(), 10.0, &Options::default()).unwrap();
        assert_relative_eq!(i.primary.value, i.alternative.value, max_relative = 1e-2);
        let j = local_j(&e, &one(), 10.0, &Options::default()).unwrap();
        // I is a weighted average of the non-increasing J over (0, r]
        assert!(j.value <= i.primary.value + 1e-3, "{j:?} {i:?}");
    }

    #[test]
    fn ij_relation_on_exact_power() {
        // J(η) = 1 + η gives I(r) = 1 + n r/(n+1)
        let n = 2;
        let etas = crate::models::geometric_grid(1e-3, 10.0, 4 * 64 + 1);
        let j: Vec<f64> = etas.iter().map(|e| 1.0 + e).collect();
        let rs = vec![etas[128], etas[200], etas[256]];
        let i: Vec<f64> = rs.iter().map(|r| 1.0 + 2.0 * r / 3.0).collect();
        let rep = check_ij_relation(n, &etas, &j, 1.0, &rs, &i).unwrap();
        assert!(rep.max_relative < 1e-5, "{rep:?}");
        let sparse = crate::models::geometric_grid(1e-3, 10.0, 20);
        assert!(check_ij_relation(n, &sparse, &[1.0; 20], 1.0, &[], &[]).is_err());
    }
}
