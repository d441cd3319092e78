//! Sampled curves expected to be non-increasing, and their `x → ∞` limits.

use serde::Serialize;

use crate::error::{Error, Result};

/// An increase beyond tolerance between consecutive samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub arg: f64,
    /// `(y[i+1] − y[i]) / |y[i]|`
    pub relative_increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneSeries {
    pub args: Vec<f64>,
    pub values: Vec<f64>,
    /// Per-sample quality flag (quadrature or route warnings).
    pub flagged: Vec<bool>,
    pub tolerance: f64,
    pub violations: Vec<Violation>,
}

impl MonotoneSeries {
    /// Record `values` against `args` and every step that increases by more
    /// than `tolerance` relative.
    pub fn new(args: Vec<f64>, values: Vec<f64>, tolerance: f64) -> Self {
        let violations = values
            .windows(2)
            .enumerate()
            .filter_map(|(i, w)| {
                let rel = (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE);
                (rel > tolerance).then(|| Violation {
                    index: i,
                    arg: args[i + 1],
                    relative_increase: rel,
                })
            })
            .collect();
        let flagged = vec![false; values.len()];
        Self {
            args,
            values,
            flagged,
            tolerance,
            violations,
        }
    }

    pub fn with_flags(mut self, flagged: Vec<bool>) -> Self {
        assert_eq!(flagged.len(), self.values.len());
        self.flagged = flagged;
        self
    }

    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }

    /// Largest relative step increase (negative if strictly decreasing).
    pub fn worst_step(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Least-squares fit `y ≈ limit + amplitude·x^{−exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerTailFit {
    pub limit: f64,
    pub amplitude: f64,
    pub exponent: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

fn linear_fit(z: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = z.len() as f64;
    let zm = z.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let szz: f64 = z.iter().map(|v| (v - zm) * (v - zm)).sum();
    let szy: f64 = z.iter().zip(y).map(|(a, b)| (a - zm) * (b - ym)).sum();
    let slope = if szz > 0.0 { szy / szz } else { 0.0 };
    let icpt = ym - slope * zm;
    let rss: f64 = z.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    (icpt, slope, (rss / n).sqrt())
}

/// Grid search over the exponent with a linear solve for the other two
/// parameters; `None` with fewer than three points.
pub fn fit_power_tail(x: &[f64], y: &[f64]) -> Option<PowerTailFit> {
    if x.len() < 3 || x.len() != y.len() {
        return None;
    }
    let x0 = x[0];
    let scaled: Vec<f64> = x.iter().map(|v| v / x0).collect();
    let mut best: Option<PowerTailFit> = None;
    let mut z = vec![0.0; x.len()];
    let mut consider = |b: f64, best: &mut Option<PowerTailFit>| {
        for (zi, s) in z.iter_mut().zip(&scaled) {
            *zi = s.powf(-b);
        }
        let (limit, amp, residual) = linear_fit(&z, y);
        if best.is_none_or(|f| residual < f.residual) {
            *best = Some(PowerTailFit {
                limit,
                amplitude: amp * x0.powf(b),
                exponent: b,
                residual,
            });
        }
    };
    for k in 0..=400 {
        let b = 0.01 * (400f64).powf(k as f64 / 400.0);
        consider(b, &mut best);
    }
    let coarse = best?.exponent;
    for k in 0..=200 {
        let b = coarse * (1.0 + 0.03 * (k as f64 / 100.0 - 1.0));
        consider(b, &mut best);
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub limit: f64,
    /// Half-width of the uncertainty interval.
    pub error: f64,
    pub exponent: f64,
    pub converged: bool,
    pub last: f64,
}

impl LimitEstimate {
    /// Whether two estimates agree within their combined error bars.
    pub fn agrees_with(&self, other: &LimitEstimate) -> bool {
        (self.limit - other.limit).abs() <= self.error + other.error
    }
}

/// Extrapolate a series to `x → ∞` from its last decade.
///
/// The error bar always covers the last sample, so the interval
/// `limit ± error` meets the range of the final samples.
pub fn estimate_limit(series: &MonotoneSeries) -> Result<LimitEstimate> {
    let (x, y) = (&series.args, &series.values);
    if x.len() < 6 {
        return Err(Error::InsufficientSamples(format!("{} samples, need 6", x.len())));
    }
    let span = x[x.len() - 1] / x[0];
    if !(span >= 100.0 * (1.0 - 1e-9)) {
        return Err(Error::InsufficientSamples(format!(
            "samples span {:.3} decades, need 2",
            span.log10()
        )));
    }
    let last = y[y.len() - 1];
    let tail_start = x.partition_point(|&v| v < x[x.len() - 1] / 10.0 * (1.0 - 1e-12));
    let tail_start = tail_start.min(x.len() - 3);
    let (tx, ty) = (&x[tail_start..], &y[tail_start..]);

    let scale = ty.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let spread = ty.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v))
        - ty.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if spread <= 1e-14 * scale {
        return Ok(LimitEstimate {
            limit: last,
            error: spread,
            exponent: f64::INFINITY,
            converged: true,
            last,
        });
    }
    let fit = fit_power_tail(tx, ty).ok_or_else(|| Error::InsufficientSamples("tail fit".into()))?;
    let converged = fit.exponent > 0.05;
    let limit = fit.limit;
    let error = (fit.limit - last).abs().max(fit.residual);
    Ok(LimitEstimate {
        limit,
        error,
        exponent: fit.exponent,
        converged,
        last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::geometric_grid;
    use approx::assert_relative_eq;

    #[test]
    fn violations_are_recorded() {
        let s = MonotoneSeries::new(vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 0.9, 0.95, 0.8], 1e-3);
        assert_eq!(s.violations.len(), 1);
        assert_eq!(s.violations[0].index, 1);
        assert!(!s.is_monotone());
        assert!(s.worst_step() > 0.05);
    }

    #[test]
    fn constant_series_limit() {
        let x = geometric_grid(1.0, 1000.0, 12);
        let s = MonotoneSeries::new(x, vec![1.0; 12], 1e-3);
        let e = estimate_limit(&s).unwrap();
        assert_eq!(e.limit, 1.0);
        assert_eq!(e.error, 0.0);
        assert!(e.converged);
    }

    #[test]
    fn recovers_power_tail() {
        let x = geometric_grid(1.0, 1e4, 30);
        let y: Vec<f64> = x.iter().map(|v| 0.5 + 2.0 * v.powf(-0.7)).collect();
        let f = fit_power_tail(&x[20..], &y[20..]).unwrap();
        assert_relative_eq!(f.exponent, 0.7, max_relative = 1e-2);
        assert_relative_eq!(f.limit, 0.5, max_relative = 1e-3);
        let e = estimate_limit(&MonotoneSeries::new(x, y, 1e-3)).unwrap();
        assert!(e.converged);
        assert!((e.limit - 0.5).abs() <= e.error + 1e-12);
        assert!(e.error < 0.01);
    }

    #[test]
    fn rejects_short_series() {
        let s = MonotoneSeries::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![1.0; 6], 1e-3);
        assert!(matches!(estimate_limit(&s), Err(Error::InsufficientSamples(_))));
        let s = MonotoneSeries::new(vec![1.0, 2.0], vec![1.0; 2], 1e-3);
        assert!(estimate_limit(&s).is_err());
    }

    #[test]
    fn logarithmic_drift_is_not_converged() {
        let x = geometric_grid(1.0, 1e4, 30);
        let y: Vec<f64> = x.iter().map(|v| 1.0 / (1.0 + v.ln())).collect();
        let e = estimate_limit(&MonotoneSeries::new(x, y, 1e-3)).unwrap();
        assert!(e.error > 0.01 || !e.converged, "{e:?}");
    }
}
