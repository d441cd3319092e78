//! Reduced volume, pseudo heat balls, the local quantities `I` and `J`,
//! Gaussian densities and limit extrapolation.

mod heat_ball;
pub mod series;

pub use heat_ball::{
    check_ij_relation, local_i, local_i_alternative, local_i_primary, local_j, pseudo_heat_ball, static_identity_i,
    BallSlice, IJReport, LocalI, PseudoHeatBall,
};
pub use series::{estimate_limit, fit_power_tail, LimitEstimate, MonotoneSeries, PowerTailFit};

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lgeo::ReducedDistance;
use crate::models::{unit_ball_volume, SolitonBase, SolitonModel};
use crate::quadrature::simpson_samples_checked;
use crate::weights::Weight;

/// Quadrature resolution and admissibility override shared by the functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Options {
    /// Simpson intervals in the radial direction (multiple of 4).
    pub u_intervals: usize,
    /// Simpson intervals in the line direction of products (multiple of 4).
    pub x_intervals: usize,
    /// Simpson intervals per smooth piece of a time integral (multiple of 4).
    pub t_intervals: usize,
    /// Tail cut: spatial integrals stop where the lower bound on `ℓ` exceeds this.
    pub ell_tail: f64,
    pub allow_flagged: bool,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            u_intervals: 1200,
            x_intervals: 400,
            t_intervals: 256,
            ell_tail: 40.0,
            allow_flagged: false,
        }
    }
}

impl Options {
    /// Resolution suitable for the on-demand variational route.
    pub fn coarse() -> Self {
        Self {
            u_intervals: 160,
            x_intervals: 64,
            t_intervals: 64,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Value {
    pub value: f64,
    /// Richardson estimate of the quadrature error.
    pub error: f64,
    /// The weight was not certified and was admitted by override.
    pub flagged: bool,
}

fn round4(n: usize) -> usize {
    n.div_ceil(4).max(1) * 4
}

fn check_range(ell: &dyn ReducedDistance, tau: f64) -> Result<()> {
    let (lo, hi) = ell.tau_range();
    if tau > 0.0 && tau >= lo && tau <= hi {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "tau",
            value: tau,
            lo,
            hi,
        })
    }
}

/// `Ṽ^φ(τ) = ∫ (4πτ)^{−n/2} e^{−ℓ} φ dμ_{g(τ)}`.
///
/// The domain is truncated where `d₀²/4τ` (a lower bound for `ℓ`) reaches
/// `opts.ell_tail`, which bounds the omitted mass by `e^{−ell_tail}` times a
/// polynomial factor.
pub fn reduced_volume(ell: &dyn ReducedDistance, w: &Weight, tau: f64, opts: &Options) -> Result<Value> {
    w.require_admissible(opts.allow_flagged)?;
    check_range(ell, tau)?;
    let m = ell.model();
    let n = m.dimension();
    let reach = (4.0 * tau * opts.ell_tail).sqrt();
    let u_top = reach.min(m.radial_max());
    if u_top > m.radial_extent() {
        return Err(Error::OutOfRange {
            what: "radius",
            value: u_top,
            lo: 0.0,
            hi: m.radial_extent(),
        });
    }
    let s = ell.slice(tau)?;
    let ws = w.slice(tau)?;
    let norm = (4.0 * PI * tau).powf(-(n as f64) / 2.0);
    let nu = round4(opts.u_intervals);
    let hu = u_top / nu as f64;
    let line = m.has_line();
    let nx = round4(opts.x_intervals);
    let hx = reach / nx as f64;
    let mut radial = Vec::with_capacity(nu + 1);
    let mut radial_err = 0.0;
    for i in 0..=nu {
        let u = hu * i as f64;
        let meas = m.radial_measure(u, tau);
        let inner = if line {
            let row: Vec<f64> = (0..=nx)
                .map(|j| {
                    let x = hx * j as f64;
                    (-s.ell(u, x)).exp() * ws.value(u, x)
                })
                .collect();
            let e = simpson_samples_checked(&row, hx);
            radial_err += 2.0 * e.error.abs() * meas * hu;
            2.0 * e.value
        } else {
            (-s.ell(u, 0.0)).exp() * ws.value(u, 0.0)
        };
        radial.push(inner * meas);
    }
    let e = simpson_samples_checked(&radial, hu);
    Ok(Value {
        value: norm * e.value,
        error: norm * (e.error.abs() + radial_err),
        flagged: !w.status().is_certified(),
    })
}

/// `Θ = ∫ (4πλ)^{−n/2} e^{−f} dμ` for a normalized soliton.
pub fn gaussian_density(s: &SolitonModel) -> Result<f64> {
    let residual = s.max_normalization_residual();
    if residual > 1e-8 {
        return Err(Error::NotNormalized { residual });
    }
    let l = s.lambda;
    let n = s.dimension() as f64;
    let pref = (4.0 * PI * l).powf(-n / 2.0);
    Ok(match s.base {
        SolitonBase::Sphere { .. } => pref * (-s.potential([0.0, 0.0])).exp() * s.compact_volume().unwrap(),
        SolitonBase::Gaussian { n } => {
            let top = (4.0 * l * 60.0).sqrt();
            let k = 4000;
            let h = top / k as f64;
            let vals: Vec<f64> = (0..=k)
                .map(|i| {
                    let u = h * i as f64;
                    (-s.potential([u, 0.0])).exp() * n as f64 * unit_ball_volume(n) * u.powi(n as i32 - 1)
                })
                .collect();
            pref * simpson_samples_checked(&vals, h).value
        }
        SolitonBase::Cylinder { .. } => {
            let top = (4.0 * l * 60.0).sqrt();
            let k = 4000;
            let h = 2.0 * top / k as f64;
            let vals: Vec<f64> = (0..=k)
                .map(|i| (-s.potential([0.0, -top + h * i as f64])).exp())
                .collect();
            pref * s.compact_volume().unwrap() * simpson_samples_checked(&vals, h).value
        }
    })
}

/// Largest radius for which `E_r` stays inside the time domain; infinite on
/// ancient flows.
pub fn max_radius(m: &crate::models::FlowModel) -> f64 {
    m.tau_max().map_or(f64::INFINITY, |t| (4.0 * PI * t).sqrt())
}
