//! Discretized space-time paths and the minimization of their L-length.
//!
//! Paths are parametrized by `s = √τ`, for which the L-length becomes
//! `∫₀^{√τ̄} [½‖dγ/ds‖²_{g(s²)} + 2s²H(γ, s²)] ds`. The discrete functional
//! uses the midpoint rule on each segment.

use crate::models::{ConeWarp, FlowModel};

/// Coordinate chart a path lives in. Every chart has diagonal or
/// position-dependent metric coefficients with respect to `g₀`, scaled by
/// `a(τ)` on round factors.
#[derive(Debug, Clone, Copy)]
pub enum Chart {
    /// A line (flat factor or radial geodesic from a pole), metric 1.
    Line,
    /// Great-circle angle on the round factor, metric `a(τ)`.
    Circle,
    /// Great-circle angle times a static line, metric `diag(a(τ), 1)`.
    CircleLine,
    /// Polar-to-Cartesian chart of a warped surface centered at its pole.
    Warped(ConeWarp),
}

impl Chart {
    pub fn dims(&self) -> usize {
        match self {
            Chart::Line | Chart::Circle => 1,
            Chart::CircleLine | Chart::Warped(_) => 2,
        }
    }

    fn position_dependent(&self) -> bool {
        matches!(self, Chart::Warped(_))
    }

    /// Metric matrix `[g00, g01, g11]` at `x` for conformal factor `a`.
    fn metric(&self, x: [f64; 2], a: f64) -> [f64; 3] {
        match self {
            Chart::Line => [1.0, 0.0, 0.0],
            Chart::Circle => [a, 0.0, 0.0],
            Chart::CircleLine => [a, 0.0, 1.0],
            Chart::Warped(w) => {
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if rho < 1e-300 {
                    return [1.0, 0.0, 1.0];
                }
                let q = w.phi(rho) / rho;
                let q2 = q * q;
                let (c, s) = (x[0] / rho, x[1] / rho);
                // P + q²(I − P) with P = x̂x̂ᵀ
                [c * c + q2 * s * s, (1.0 - q2) * c * s, s * s + q2 * c * c]
            }
        }
    }
}

/// Spatial part of the path problem: a chart plus the flow's `a(τ)` and `H`.
#[derive(Debug, Clone)]
pub struct PathProblem<'a> {
    pub model: Option<&'a FlowModel>,
    pub chart: Chart,
}

impl PathProblem<'_> {
    fn conformal(&self, tau: f64) -> f64 {
        self.model.map_or(1.0, |m| m.conformal_factor(tau))
    }

    fn trace_h(&self, x: [f64; 2], tau: f64) -> f64 {
        self.model
            .map_or(0.0, |m| m.trace_h(crate::models::Point(x), tau))
    }

    fn segment(&self, a: [f64; 2], b: [f64; 2], s_mid: f64, h: f64) -> f64 {
        let tau = s_mid * s_mid;
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let g = self.chart.metric(mid, self.conformal(tau));
        let d = [b[0] - a[0], b[1] - a[1]];
        let kinetic = g[0] * d[0] * d[0] + 2.0 * g[1] * d[0] * d[1] + g[2] * d[1] * d[1];
        0.5 * kinetic / h + 2.0 * tau * self.trace_h(mid, tau) * h
    }
}

/// `N + 1` nodes of a path on `s ∈ [0, √τ̄]` with pinned endpoints.
#[derive(Debug, Clone)]
pub struct PathDiscretization {
    pub tau_bar: f64,
    pub nodes: Vec<[f64; 2]>,
    length: Option<f64>,
}

impl PathDiscretization {
    /// Constant-speed straight segment in chart coordinates from `start` to `end`.
    pub fn straight(tau_bar: f64, start: [f64; 2], end: [f64; 2], segments: usize) -> Self {
        let nodes = (0..=segments)
            .map(|i| {
                let t = i as f64 / segments as f64;
                [start[0] + t * (end[0] - start[0]), start[1] + t * (end[1] - start[1])]
            })
            .collect();
        Self {
            tau_bar,
            nodes,
            length: None,
        }
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn step(&self) -> f64 {
        self.tau_bar.sqrt() / self.segments() as f64
    }

    /// Cached discrete L-length, if computed.
    pub fn cached_length(&self) -> Option<f64> {
        self.length
    }
}

/// Discrete L-length of `path` for `problem`; second-order accurate in `1/N`.
pub fn l_length(problem: &PathProblem, path: &PathDiscretization) -> f64 {
    let h = path.step();
    path.nodes
        .windows(2)
        .enumerate()
        .map(|(i, w)| problem.segment(w[0], w[1], (i as f64 + 0.5) * h, h))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentReport {
    pub length: f64,
    pub iterations: usize,
    pub converged: bool,
    /// L-length after each accepted step; non-increasing.
    pub history: Vec<f64>,
}

/// Stopping rule for the descent.
#[derive(Debug, Clone, Copy)]
pub struct DescentOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-15,
            max_iter: 4000,
        }
    }
}

fn gradient(problem: &PathProblem, path: &PathDiscretization, out: &mut [[f64; 2]]) {
    let h = path.step();
    let n = path.segments();
    let dims = problem.chart.dims();
    out[0] = [0.0, 0.0];
    out[n] = [0.0, 0.0];
    if problem.chart.position_dependent() {
        for j in 1..n {
            let local = |x: [f64; 2]| {
                problem.segment(path.nodes[j - 1], x, (j as f64 - 0.5) * h, h)
                    + problem.segment(x, path.nodes[j + 1], (j as f64 + 0.5) * h, h)
            };
            let x = path.nodes[j];
            let mut g = [0.0; 2];
            for (k, gk) in g.iter_mut().enumerate().take(dims) {
                let eps = 1e-6 * (1.0 + x[k].abs());
                let mut xp = x;
                let mut xm = x;
                xp[k] += eps;
                xm[k] -= eps;
                *gk = (local(xp) - local(xm)) / (2.0 * eps);
            }
            out[j] = g;
        }
        return;
    }
    // constant-in-space metric and H: only the kinetic term depends on nodes
    for j in 1..n {
        let mut g = [0.0; 2];
        for (side, i) in [(1.0, j - 1), (-1.0, j)] {
            let s_mid = (i as f64 + 0.5) * h;
            let m = problem.chart.metric([0.0, 0.0], problem.conformal(s_mid * s_mid));
            let a = path.nodes[i];
            let b = path.nodes[i + 1];
            let d = [b[0] - a[0], b[1] - a[1]];
            g[0] += side * (m[0] * d[0] + m[1] * d[1]) / h;
            g[1] += side * (m[1] * d[0] + m[2] * d[1]) / h;
        }
        out[j] = g;
    }
}

fn dot(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x[0] * y[0] + x[1] * y[1]).sum()
}

/// Minimize the discrete L-length over interior nodes by nonlinear conjugate
/// gradients (Polak-Ribière+) with a safeguarded quadratic line search. Only
/// strictly decreasing steps are accepted.
pub fn minimize(problem: &PathProblem, path: &mut PathDiscretization, opts: DescentOptions) -> DescentReport {
    let n = path.segments();
    let mut f = l_length(problem, path);
    let mut history = vec![f];
    if n < 2 {
        path.length = Some(f);
        return DescentReport {
            length: f,
            iterations: 0,
            converged: true,
            history,
        };
    }
    let mut g = vec![[0.0; 2]; n + 1];
    gradient(problem, path, &mut g);
    let mut dir: Vec<[f64; 2]> = g.iter().map(|v| [-v[0], -v[1]]).collect();
    let g0_norm = dot(&g, &g).sqrt();
    let mut step = 1.0 / (1.0 + g0_norm);
    let mut converged = g0_norm == 0.0;
    let mut iterations = 0;
    let mut small_steps = 0;
    let mut trial = path.clone();
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            for (d, v) in dir.iter_mut().zip(&g) {
                *d = [-v[0], -v[1]];
            }
            slope = dot(&g, &dir);
            if slope >= 0.0 {
                converged = true;
                break;
            }
        }
        let eval = |alpha: f64, trial: &mut PathDiscretization| {
            for ((t, x), d) in trial.nodes.iter_mut().zip(&path.nodes).zip(&dir) {
                *t = [x[0] + alpha * d[0], x[1] + alpha * d[1]];
            }
            l_length(problem, trial)
        };
        let f1 = eval(step, &mut trial);
        let curvature = f1 - f - slope * step;
        let mut alpha = if curvature > 0.0 {
            -slope * step * step / (2.0 * curvature)
        } else {
            2.0 * step
        };
        let mut f_new = eval(alpha, &mut trial);
        let mut tries = 0;
        while !(f_new < f + 1e-4 * alpha * slope) && tries < 60 {
            alpha *= 0.5;
            f_new = eval(alpha, &mut trial);
            tries += 1;
        }
        if !(f_new < f) {
            // no decrease representable at this precision
            converged = true;
            break;
        }
        std::mem::swap(path, &mut trial);
        let decrease = f - f_new;
        f = f_new;
        history.push(f);
        step = alpha;

        let mut g_new = vec![[0.0; 2]; n + 1];
        gradient(problem, path, &mut g_new);
        let gg = dot(&g, &g);
        let beta = if iterations % (n * 2) == 0 {
            0.0
        } else {
            let diff: Vec<[f64; 2]> = g_new.iter().zip(&g).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
            (dot(&g_new, &diff) / gg).max(0.0)
        };
        for (d, v) in dir.iter_mut().zip(&g_new) {
            *d = [-v[0] + beta * d[0], -v[1] + beta * d[1]];
        }
        g = g_new;
        let gnorm = dot(&g, &g).sqrt();
        if decrease <= opts.rel_tol * f.abs().max(1e-300) {
            small_steps += 1;
        } else {
            small_steps = 0;
        }
        if gnorm <= 1e-13 * (1.0 + g0_norm) || small_steps >= 3 {
            converged = true;
        }
    }
    path.length = Some(f);
    DescentReport {
        length: f,
        iterations,
        converged,
        history,
    }
}

/// Distance between two points of a static warped surface given in `(ρ, θ)`,
/// from the minimal discrete energy of paths in the pole-centered Cartesian
/// chart.
pub fn warped_distance(warp: ConeWarp, q1: crate::models::Point, q2: crate::models::Point) -> f64 {
    let (r1, t1) = (q1.0[0], q1.0[1]);
    let (r2, t2) = (q2.0[0], q2.0[1]);
    if r1 == 0.0 || r2 == 0.0 {
        return r1.max(r2);
    }
    let gap = (t1 - t2).rem_euclid(2.0 * std::f64::consts::PI);
    if gap == 0.0 {
        return (r1 - r2).abs();
    }
    let a = [r1 * t1.cos(), r1 * t1.sin()];
    let b = [r2 * t2.cos(), r2 * t2.sin()];
    let problem = PathProblem {
        model: None,
        chart: Chart::Warped(warp),
    };
    let segments = 96;
    let normal = [-(b[1] - a[1]), b[0] - a[0]];
    let mut best = f64::INFINITY;
    for bend in [0.0, 0.35, -0.35] {
        // energy on s ∈ [0, 1]: τ̄ = 1, midpoint times are irrelevant for static charts
        let mut path = PathDiscretization::straight(1.0, a, b, segments);
        for (i, x) in path.nodes.iter_mut().enumerate() {
            let t = i as f64 / segments as f64;
            let w = bend * 4.0 * t * (1.0 - t);
            x[0] += w * normal[0];
            x[1] += w * normal[1];
        }
        let rep = minimize(&problem, &mut path, DescentOptions::default());
        // discrete L = ½ Σ|Δ|²/h ≥ d²/2 on s ∈ [0, 1]
        best = best.min((2.0 * rep.length).sqrt());
    }
    // radial route through the pole is always available
    best.min(r1 + r2)
}
