//! One-dimensional quadrature rules.
//!
//! Composite Simpson on fixed grids is the workhorse for the space-time
//! integrals; every call has a half-resolution companion so callers get an
//! internal error estimate. An adaptive Gauss-Kronrod (7, 15) rule handles the
//! scalar integrals of the conformal reduced distance, which need near machine
//! precision.

/// A quadrature value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;

    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

/// Composite Simpson rule over `[a, b]` with `intervals` subintervals
/// (rounded up to the next even number).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = even(intervals);
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even_sum = 0.0;
    for i in 1..n {
        let x = a + h * i as f64;
        if i % 2 == 1 {
            odd += f(x);
        } else {
            even_sum += f(x);
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even_sum)
}

/// Simpson over equally spaced samples; `values.len()` must be odd and ≥ 3.
pub fn simpson_samples(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "simpson_samples needs an odd count ≥ 3");
    let mut acc = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

/// Simpson on samples at full and half resolution. The error is the
/// Richardson estimate `|S_h − S_2h| / 15`.
pub fn simpson_samples_checked(values: &[f64], h: f64) -> Estimate {
    let fine = simpson_samples(values, h);
    let n = values.len();
    if !(n - 1).is_multiple_of(4) {
        return Estimate {
            value: fine,
            error: f64::NAN,
        };
    }
    let coarse: Vec<f64> = values.iter().step_by(2).copied().collect();
    let coarse = simpson_samples(&coarse, 2.0 * h);
    Estimate {
        value: fine,
        error: (fine - coarse).abs() / 15.0,
    }
}

/// Simpson with a Richardson error estimate from the half-resolution rule.
pub fn simpson_checked<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> Estimate {
    let n = intervals.div_ceil(4) * 4;
    let h = (b - a) / n as f64;
    let values: Vec<f64> = (0..=n).map(|i| f(a + h * i as f64)).collect();
    simpson_samples_checked(&values, h)
}

fn even(n: usize) -> usize {
    let n = n.max(2);
    n + n % 2
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod (7, 15) integration to the requested absolute or
/// relative tolerance, bisecting the worst interval first.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Estimate {
    if a == b {
        return Estimate::exact(0.0);
    }
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    for _ in 0..2000 {
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, pv, pe) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
    }
    // fixed-order resummation keeps the result independent of the split history
    parts.sort_by(|x, y| x.0.total_cmp(&y.0));
    Estimate {
        value: parts.iter().map(|p| p.2).sum(),
        error: parts.iter().map(|p| p.3).sum(),
    }
}

/// Cumulative trapezoid integral of samples `y` over abscissae `x`.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
        out.push(acc);
    }
    out
}

/// Linear interpolation on a sorted abscissa table, clamped at the ends.
pub fn interp_linear(x: &[f64], y: &[f64], at: f64) -> f64 {
    if at <= x[0] {
        return y[0];
    }
    let last = x.len() - 1;
    if at >= x[last] {
        return y[last];
    }
    let i = x.partition_point(|&v| v <= at) - 1;
    let w = (at - x[i]) / (x[i + 1] - x[i]);
    y[i] + w * (y[i + 1] - y[i])
}

/// Bisection for a sign change of `f` on `[lo, hi]` to the given relative
/// tolerance. The caller guarantees `f(lo)` and `f(hi)` have opposite signs.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) {
            return mid;
        }
        let fm = f(mid);
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 4);
        assert_relative_eq!(v, 4.0 - 4.0 + 2.0, epsilon = 1e-14);
    }

    #[test]
    fn checked_simpson_error_tracks_truth() {
        let est = simpson_checked(f64::exp, 0.0, 1.0, 16);
        let truth = std::f64::consts::E - 1.0;
        assert!((est.value - truth).abs() <= 2.0 * est.error);
        assert!(est.error < 1e-6);
    }

    #[test]
    fn gauss_kronrod_smooth_and_endpoint_singular() {
        let est = adaptive(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-14, 1e-14);
        assert_relative_eq!(est.value, 2.0, epsilon = 1e-13);
        let est = adaptive(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12, 1e-12);
        assert_relative_eq!(est.value, 2.0, epsilon = 1e-9);
        let est = adaptive(|x: f64| x.powi(14), -1.0, 1.0, 0.0, 1e-15);
        assert_relative_eq!(est.value, 2.0 / 15.0, epsilon = 1e-15);
    }

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert_relative_eq!(r, std::f64::consts::SQRT_2, epsilon = 1e-13);
    }

    #[test]
    fn interp_and_cumulative() {
        let x = [0.0, 1.0, 2.0];
        let y = [0.0, 2.0, 4.0];
        assert_eq!(interp_linear(&x, &y, 1.5), 3.0);
        assert_eq!(cumulative_trapezoid(&x, &y), vec![0.0, 1.0, 4.0]);
    }
}
