//! Executes the quantity list of an [`ExperimentConfig`] and writes the
//! outputs under `out/<id>/`.
//!
//! | quantity | file | columns / shape |
//! |---|---|---|
//! | `rv_curve` | `rv.csv` | `tau,value,flag,config_hash` |
//! | `i_curve` | `i.csv` | `r,value_primary,value_alternative,flag,config_hash` |
//! | `j_curve` | `j.csv` | `r,value,flag,config_hash` |
//! | `ij_check` | `ij_check.json` | per-`r` residuals |
//! | `limits` | `limits.json` | limit records plus a `main_equality` record |
//! | `certify` | `certify.json` | certification report |
//! | `checks` | `checks.json` | structural and bound checks |
//! | `density` | `density.json` | Gaussian density of the matching soliton |
//!
//! Every run also writes `records.json`, one record per quantity.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use redgeo_core::functionals::{
    check_ij_relation, estimate_limit, gaussian_density, local_i, local_j, reduced_volume, LimitEstimate, LocalI,
    MonotoneSeries, Options, Value,
};
use redgeo_core::lgeo::{check_gradient_bound, check_lower_bound, ExactEll, FieldSpec, ReducedDistance, ReducedDistanceField};
use redgeo_core::models::{
    check_assumption, check_super_ricci, make_model, FlowModel, ModelKind, SampleGrid, SolitonModel,
};
use redgeo_core::weights::{certify_subsolution, CertStatus, CertificationReport, TestFamily, Weight};
use redgeo_core::Error as CoreError;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Quantity, RouteChoice};
use crate::{ConfigError, EXIT_FLAGGED, EXIT_OK};

/// Relative step tolerance for `Ṽ` and `I`.
pub const MONOTONE_TOL: f64 = 1e-3;
/// Relative step tolerance for `J`.
pub const MONOTONE_TOL_J: f64 = 1e-2;
/// Largest admissible relative gap between the two forms of `I`.
pub const FORM_TOL: f64 = 1e-2;
/// Largest admissible residual of the I–J relation.
pub const IJ_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub quantity: String,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub flags: Vec<String>,
    /// Seconds spent; kept out of the files so reruns are byte-identical.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub config_hash: String,
    pub dir: PathBuf,
    pub records: Vec<ResultRecord>,
    /// Human-readable description of each flagged invariant.
    pub violations: Vec<String>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.violations.is_empty() {
            EXIT_OK
        } else {
            EXIT_FLAGGED
        }
    }
}

/// Geometric grid from `lo` to `hi` with about `per_decade` points per decade.
pub fn decade_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let count = ((hi / lo).log10() * per_decade as f64).round().max(1.0) as usize + 1;
    let mut g = redgeo_core::models::geometric_grid(lo, hi, count);
    g[count - 1] = hi;
    g
}

/// Indices `i ≥ 1` where `v[i] > v[i−1] + tol·|v[i−1]|`.
fn increases(v: &[f64], tol: f64) -> Vec<usize> {
    (1..v.len()).filter(|&i| v[i] > v[i - 1] + tol * v[i - 1].abs()).collect()
}

fn row_flag(flags: &[&str]) -> String {
    if flags.is_empty() {
        "ok".into()
    } else {
        flags.join("|")
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
    dir: PathBuf,
    model: FlowModel,
    ell: Option<Arc<dyn ReducedDistance>>,
    weight: Weight,
    cert: Option<CertificationReport>,
    opts: Options,
    rv: Option<(Vec<f64>, Vec<Value>)>,
    i: Option<(Vec<f64>, Vec<LocalI>)>,
    j: Option<(Vec<f64>, Vec<Value>)>,
    records: Vec<ResultRecord>,
    violations: Vec<String>,
}

/// Run every requested quantity in dependency order.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary, ConfigError> {
    cfg.validate()?;
    let model = make_model(&cfg.model)?;
    let weight = cfg.weight.build(&model)?;
    let dir = cfg.out.join(&cfg.id);
    fs::create_dir_all(&dir)?;
    let g = &cfg.grid;
    let mut ctx = Ctx {
        cfg,
        hash: cfg.hash(),
        dir,
        model,
        ell: None,
        weight,
        cert: None,
        opts: Options {
            u_intervals: g.u_intervals,
            x_intervals: g.x_intervals,
            t_intervals: g.t_intervals,
            allow_flagged: cfg.allow_flagged,
            ..Options::default()
        },
        rv: None,
        i: None,
        j: None,
        records: Vec::new(),
        violations: Vec::new(),
    };

    let mut todo: Vec<Quantity> = Quantity::ALL
        .iter()
        .copied()
        .filter(|q| cfg.quantities.contains(q))
        .collect();
    let functional = todo
        .iter()
        .any(|q| matches!(q, Quantity::RvCurve | Quantity::ICurve | Quantity::JCurve | Quantity::IjCheck | Quantity::Limits));
    if functional && ctx.weight.status() == CertStatus::Unknown && !todo.contains(&Quantity::Certify) {
        todo.insert(0, Quantity::Certify);
    }
    // certification first, then the curves that later quantities reuse
    todo.sort_by_key(|q| match q {
        Quantity::Certify => 0,
        Quantity::Checks => 1,
        Quantity::Density => 2,
        Quantity::RvCurve => 3,
        Quantity::ICurve => 4,
        Quantity::JCurve => 5,
        Quantity::IjCheck => 6,
        Quantity::Limits => 7,
    });

    for q in todo {
        let start = Instant::now();
        let before = ctx.records.len();
        match q {
            Quantity::Certify => ctx.certify()?,
            Quantity::Checks => ctx.checks()?,
            Quantity::Density => ctx.density()?,
            Quantity::RvCurve => ctx.rv_curve()?,
            Quantity::ICurve => ctx.i_curve()?,
            Quantity::JCurve => ctx.j_curve()?,
            Quantity::IjCheck => ctx.ij_check()?,
            Quantity::Limits => ctx.limits()?,
        }
        let elapsed = start.elapsed().as_secs_f64();
        for r in &mut ctx.records[before..] {
            r.wall_time = elapsed;
        }
    }

    let text = serde_json::to_string_pretty(&ctx.records).expect("records serialize");
    fs::write(ctx.dir.join("records.json"), text + "\n")?;
    Ok(RunSummary {
        config_hash: ctx.hash,
        dir: ctx.dir,
        records: ctx.records,
        violations: ctx.violations,
    })
}

impl Ctx<'_> {
    fn record(&mut self, quantity: &str) -> ResultRecord {
        ResultRecord {
            experiment: self.cfg.id.clone(),
            quantity: quantity.into(),
            config_hash: self.hash.clone(),
            value: None,
            error: None,
            samples: None,
            file: None,
            flags: Vec::new(),
            wall_time: 0.0,
        }
    }

    fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<String, ConfigError> {
        let text = serde_json::to_string_pretty(value).expect("json serializes");
        fs::write(self.dir.join(name), text + "\n")?;
        Ok(name.to_string())
    }

    fn csv_writer(&self, name: &str) -> Result<csv::Writer<fs::File>, ConfigError> {
        csv::Writer::from_path(self.dir.join(name)).map_err(csv_error)
    }

    fn ell(&mut self) -> Result<Arc<dyn ReducedDistance>, ConfigError> {
        if let Some(e) = &self.ell {
            return Ok(e.clone());
        }
        let e: Arc<dyn ReducedDistance> = match self.cfg.route {
            RouteChoice::Exact => Arc::new(ExactEll::new(&self.model)),
            RouteChoice::Field => {
                let g = &self.cfg.grid;
                let tau_top = g.tau_max.max(g.r_max * g.r_max / (4.0 * PI));
                let mut spec = FieldSpec::new(g.tau_min.min(1e-3), tau_top);
                spec.per_decade = 4 * g.points_per_decade;
                spec.r_max = Some(g.r_max);
                spec.segments = Some(g.segments);
                Arc::new(ReducedDistanceField::build(&self.model, &spec)?)
            }
        };
        self.ell = Some(e.clone());
        Ok(e)
    }

    /// Largest `τ` usable by the functionals for this model and weight.
    fn tau_cap(&self) -> f64 {
        let model_cap = self.model.tau_max().unwrap_or(f64::INFINITY);
        model_cap.min(self.weight.tau_limit()) * (1.0 - 1e-9)
    }

    fn tau_grid(&self) -> Vec<f64> {
        let g = &self.cfg.grid;
        decade_grid(g.tau_min, g.tau_max.min(self.tau_cap()), g.points_per_decade)
    }

    fn r_grid(&self) -> Vec<f64> {
        let g = &self.cfg.grid;
        let cap = (4.0 * PI * self.tau_cap()).sqrt();
        decade_grid(g.r_min, g.r_max.min(cap), g.points_per_decade)
    }

    /// Turns an inadmissible weight into a violation; other errors abort.
    fn admissible(&mut self, quantity: &str) -> Result<bool, ConfigError> {
        match self.weight.require_admissible(self.opts.allow_flagged) {
            Ok(()) => Ok(true),
            Err(e @ CoreError::InadmissibleWeight { .. }) => {
                self.violations.push(format!("{quantity}: {e}"));
                let mut r = self.record(quantity);
                r.flags.push("inadmissible_weight".into());
                self.records.push(r);
                Ok(false)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn certify(&mut self) -> Result<(), ConfigError> {
        let g = &self.cfg.grid;
        let hi = g.tau_max.min(self.tau_cap()).min(100.0).max(g.tau_min * 10.0);
        let family = TestFamily::covering(&self.model, g.tau_min.max(1e-3), hi);
        let report = certify_subsolution(&mut self.weight, &self.model, &family)?;
        let mut r = self.record("certify");
        r.value = Some(report.worst_residual);
        r.samples = Some(report.tests);
        r.flags.push(report.status.as_str().into());
        if report.status == CertStatus::Flagged {
            self.violations.push(format!(
                "certify: weight `{}` flagged, worst residual {:.3e} at u={:.3}, scale {:.3}, τ={:.3}",
                report.weight_id, report.worst_residual, report.witness_center, report.witness_scale, report.witness_tau
            ));
        }
        r.file = Some(self.write_json("certify.json", &json!({ "config_hash": self.hash, "report": report }))?);
        self.cert = Some(report);
        self.records.push(r);
        Ok(())
    }

    fn checks(&mut self) -> Result<(), ConfigError> {
        let m = &self.model;
        let g = &self.cfg.grid;
        let lo = g.tau_min.max(0.1);
        let hi = g.tau_max.min(100.0).min(self.model.tau_max().unwrap_or(f64::INFINITY)).max(lo * 10.0);
        let samples = SampleGrid::geometric(SampleGrid::default_points(m), lo, hi, 9);
        let sr = check_super_ricci(m, &samples);
        let asm = check_assumption(m, &samples)?;
        let mut spec = FieldSpec::new(lo, hi);
        spec.per_decade = 16;
        spec.u_points = 101;
        spec.x_points = 21;
        let field = ReducedDistanceField::build(m, &spec)?;
        let lb = check_lower_bound(&field, m);
        let gb = check_gradient_bound(&field, m);
        let mut r = self.record("checks");
        for (name, pass) in [
            ("super_ricci", sr.pass),
            ("assumption", asm.pass),
            ("lower_bound", lb.pass),
            ("gradient_bound", gb.pass),
        ] {
            if !pass {
                r.flags.push(format!("{name}_failed"));
                self.violations.push(format!("checks: {name} failed"));
            }
        }
        if r.flags.is_empty() {
            r.flags.push("ok".into());
        }
        r.file = Some(self.write_json(
            "checks.json",
            &json!({
                "config_hash": self.hash,
                "model": self.model.name(),
                "super_ricci": sr,
                "assumption": asm,
                "lower_bound": lb,
                "gradient_bound": gb,
            }),
        )?);
        self.records.push(r);
        Ok(())
    }

    fn density(&mut self) -> Result<(), ConfigError> {
        let n = self.model.dimension();
        let soliton = match self.model.kind() {
            ModelKind::Gaussian => SolitonModel::gaussian(n, 1.0),
            ModelKind::ConformalRound => SolitonModel::sphere(n),
            ModelKind::Product if n >= 3 => SolitonModel::cylinder(n - 1),
            kind => {
                return Err(CoreError::Unsupported {
                    op: "density",
                    kind: kind.as_str().into(),
                }
                .into())
            }
        };
        let theta = gaussian_density(&soliton)?;
        let mut r = self.record("density");
        r.value = Some(theta);
        r.flags.push("ok".into());
        r.file = Some(self.write_json(
            "density.json",
            &json!({ "config_hash": self.hash, "model": self.model.name(), "density": theta }),
        )?);
        self.records.push(r);
        Ok(())
    }

    fn compute_rv(&mut self) -> Result<bool, ConfigError> {
        if self.rv.is_some() {
            return Ok(true);
        }
        if !self.admissible("rv_curve")? {
            return Ok(false);
        }
        let ell = self.ell()?;
        let taus = self.tau_grid();
        let (w, opts) = (&self.weight, &self.opts);
        let values = taus
            .par_iter()
            .map(|&t| reduced_volume(ell.as_ref(), w, t, opts))
            .collect::<Result<Vec<_>, _>>()?;
        self.rv = Some((taus, values));
        Ok(true)
    }

    fn compute_i(&mut self) -> Result<bool, ConfigError> {
        if self.i.is_some() {
            return Ok(true);
        }
        if !self.admissible("i_curve")? {
            return Ok(false);
        }
        let ell = self.ell()?;
        let rs = self.r_grid();
        let (w, opts) = (&self.weight, &self.opts);
        let values = rs
            .par_iter()
            .map(|&r| local_i(ell.as_ref(), w, r, opts))
            .collect::<Result<Vec<_>, _>>()?;
        self.i = Some((rs, values));
        Ok(true)
    }

    fn compute_j(&mut self) -> Result<bool, ConfigError> {
        if self.j.is_some() {
            return Ok(true);
        }
        if !self.admissible("j_curve")? {
            return Ok(false);
        }
        let ell = self.ell()?;
        let rs = self.r_grid();
        let (w, opts) = (&self.weight, &self.opts);
        let values = rs
            .par_iter()
            .map(|&r| local_j(ell.as_ref(), w, r, opts))
            .collect::<Result<Vec<_>, _>>()?;
        self.j = Some((rs, values));
        Ok(true)
    }

    fn rv_curve(&mut self) -> Result<(), ConfigError> {
        if !self.compute_rv()? {
            return Ok(());
        }
        let (taus, values) = self.rv.clone().unwrap();
        let v: Vec<f64> = values.iter().map(|x| x.value).collect();
        let bad = increases(&v, MONOTONE_TOL);
        let mut w = self.csv_writer("rv.csv")?;
        w.write_record(["tau", "value", "flag", "config_hash"]).map_err(csv_error)?;
        for (k, (t, val)) in taus.iter().zip(&values).enumerate() {
            let mut f = Vec::new();
            if val.flagged {
                f.push("flagged_weight");
            }
            if bad.contains(&k) {
                f.push("nonmonotone");
            }
            w.write_record([t.to_string(), val.value.to_string(), row_flag(&f), self.hash.clone()])
                .map_err(csv_error)?;
        }
        w.flush()?;
        let mut r = self.record("rv_curve");
        r.samples = Some(taus.len());
        r.file = Some("rv.csv".into());
        r.error = Some(values.iter().map(|x| x.error.abs()).fold(0.0, f64::max));
        self.series_flags(&mut r, "rv_curve", &bad, values.iter().any(|x| x.flagged));
        self.records.push(r);
        Ok(())
    }

    fn i_curve(&mut self) -> Result<(), ConfigError> {
        if !self.compute_i()? {
            return Ok(());
        }
        let (rs, values) = self.i.clone().unwrap();
        let v: Vec<f64> = values.iter().map(|x| x.primary.value).collect();
        let bad = increases(&v, MONOTONE_TOL);
        // the two forms coincide only for constant weights
        let constant = matches!(self.cfg.weight, crate::config::WeightSpec::Constant { .. });
        let mismatch: Vec<usize> = values
            .iter()
            .filter(|_| constant)
            .enumerate()
            .filter(|(_, x)| (x.primary.value - x.alternative.value).abs() > FORM_TOL * x.primary.value.abs().max(1e-300))
            .map(|(k, _)| k)
            .collect();
        let mut w = self.csv_writer("i.csv")?;
        w.write_record(["r", "value_primary", "value_alternative", "flag", "config_hash"])
            .map_err(csv_error)?;
        for (k, (r, val)) in rs.iter().zip(&values).enumerate() {
            let mut f = Vec::new();
            if val.primary.flagged {
                f.push("flagged_weight");
            }
            if bad.contains(&k) {
                f.push("nonmonotone");
            }
            if mismatch.contains(&k) {
                f.push("form_mismatch");
            }
            w.write_record([
                r.to_string(),
                val.primary.value.to_string(),
                val.alternative.value.to_string(),
                row_flag(&f),
                self.hash.clone(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        let mut rec = self.record("i_curve");
        rec.samples = Some(rs.len());
        rec.file = Some("i.csv".into());
        rec.error = Some(values.iter().map(|x| x.primary.error.abs()).fold(0.0, f64::max));
        if !mismatch.is_empty() {
            rec.flags.push("form_mismatch".into());
            self.violations
                .push(format!("i_curve: primary and alternative forms differ at {} radii", mismatch.len()));
        }
        self.series_flags(&mut rec, "i_curve", &bad, values.iter().any(|x| x.primary.flagged));
        self.records.push(rec);
        Ok(())
    }

    fn j_curve(&mut self) -> Result<(), ConfigError> {
        if !self.compute_j()? {
            return Ok(());
        }
        let (rs, values) = self.j.clone().unwrap();
        let v: Vec<f64> = values.iter().map(|x| x.value).collect();
        let bad = increases(&v, MONOTONE_TOL_J);
        let mut w = self.csv_writer("j.csv")?;
        w.write_record(["r", "value", "flag", "config_hash"]).map_err(csv_error)?;
        for (k, (r, val)) in rs.iter().zip(&values).enumerate() {
            let mut f = Vec::new();
            if val.flagged {
                f.push("flagged_weight");
            }
            if bad.contains(&k) {
                f.push("nonmonotone");
            }
            w.write_record([r.to_string(), val.value.to_string(), row_flag(&f), self.hash.clone()])
                .map_err(csv_error)?;
        }
        w.flush()?;
        let mut rec = self.record("j_curve");
        rec.samples = Some(rs.len());
        rec.file = Some("j.csv".into());
        rec.error = Some(values.iter().map(|x| x.error.abs()).fold(0.0, f64::max));
        self.series_flags(&mut rec, "j_curve", &bad, values.iter().any(|x| x.flagged));
        self.records.push(rec);
        Ok(())
    }

    fn series_flags(&mut self, r: &mut ResultRecord, quantity: &str, bad: &[usize], flagged: bool) {
        if flagged {
            r.flags.push("flagged_weight".into());
        }
        if !bad.is_empty() {
            r.flags.push("nonmonotone".into());
            self.violations
                .push(format!("{quantity}: {} increasing steps beyond tolerance", bad.len()));
        }
        if r.flags.is_empty() {
            r.flags.push("ok".into());
        }
    }

    fn ij_check(&mut self) -> Result<(), ConfigError> {
        if !self.admissible("ij_check")? {
            return Ok(());
        }
        let ell = self.ell()?;
        let g = &self.cfg.grid;
        let cap = (4.0 * PI * self.tau_cap()).sqrt();
        let r_hi = g.r_max.min(cap);
        // 32 η per decade from two decades below r_min; I on every fourth node
        let per = 32usize;
        let decades = (r_hi / g.r_min).log10().ceil().max(1.0) as usize;
        let eta_lo = g.r_min / 100.0;
        let etas: Vec<f64> = (0..=(decades + 2) * per)
            .map(|k| eta_lo * 10f64.powf(k as f64 / per as f64))
            .filter(|&e| e <= r_hi * (1.0 + 1e-12))
            .collect();
        let rs: Vec<f64> = etas
            .iter()
            .copied()
            .enumerate()
            .filter(|&(k, e)| k >= 2 * per && (k - 2 * per).is_multiple_of(4) && e >= g.r_min * (1.0 - 1e-12))
            .map(|(_, e)| e)
            .collect();
        let (w, opts) = (&self.weight, &self.opts);
        let j = etas
            .par_iter()
            .map(|&e| local_j(ell.as_ref(), w, e, opts).map(|v| v.value))
            .collect::<Result<Vec<_>, _>>()?;
        let iv = rs
            .par_iter()
            .map(|&r| local_i(ell.as_ref(), w, r, opts).map(|v| v.primary.value))
            .collect::<Result<Vec<_>, _>>()?;
        let report = check_ij_relation(self.model.dimension(), &etas, &j, self.weight.base_value(), &rs, &iv)?;
        let mut r = self.record("ij_check");
        r.value = Some(report.max_relative);
        r.samples = Some(etas.len());
        if report.max_relative > IJ_TOL {
            r.flags.push("ij_residual".into());
            self.violations
                .push(format!("ij_check: residual {:.3e} exceeds {IJ_TOL}", report.max_relative));
        } else {
            r.flags.push("ok".into());
        }
        r.file = Some(self.write_json(
            "ij_check.json",
            &json!({ "config_hash": self.hash, "tolerance": IJ_TOL, "report": report }),
        )?);
        self.records.push(r);
        Ok(())
    }

    fn limits(&mut self) -> Result<(), ConfigError> {
        if !self.compute_rv()? || !self.compute_i()? {
            return Ok(());
        }
        let (taus, rv) = self.rv.clone().unwrap();
        let (rs, iv) = self.i.clone().unwrap();
        let flagged = !self.weight.status().is_certified();
        let v = estimate_limit(&MonotoneSeries::new(taus, rv.iter().map(|x| x.value).collect(), MONOTONE_TOL))?;
        let i = estimate_limit(&MonotoneSeries::new(rs, iv.iter().map(|x| x.primary.value).collect(), MONOTONE_TOL))?;
        let difference = (v.limit - i.limit).abs();
        let combined = v.error + i.error;
        let pass = difference <= combined;
        let entry = |q: &str, e: &LimitEstimate| {
            json!({
                "model": self.model.name(),
                "weight": self.weight.id(),
                "quantity": q,
                "limit": e.limit,
                "error": e.error,
                "converged": e.converged,
                "config_hash": self.hash,
                "flagged": flagged,
            })
        };
        let records = json!([
            entry("rv_limit", &v),
            entry("i_limit", &i),
            {
                "model": self.model.name(),
                "weight": self.weight.id(),
                "quantity": "main_equality",
                "V_limit": v.limit,
                "V_error": v.error,
                "I_limit": i.limit,
                "I_error": i.error,
                "difference": difference,
                "combined_error": combined,
                "pass": pass,
                "config_hash": self.hash,
                "flagged": flagged,
            }
        ]);
        let mut r = self.record("limits");
        r.value = Some(difference);
        r.error = Some(combined);
        r.file = Some(self.write_json("limits.json", &records)?);
        if !v.converged || !i.converged {
            r.flags.push("not_converged".into());
        }
        if flagged {
            r.flags.push("flagged_weight".into());
        }
        if !pass {
            r.flags.push("main_equality_failed".into());
            self.violations.push(format!(
                "limits: |V − I| = {difference:.3e} exceeds the combined error {combined:.3e}"
            ));
        }
        if r.flags.is_empty() {
            r.flags.push("ok".into());
        }
        self.records.push(r);
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> ConfigError {
    ConfigError::Io(std::io::Error::other(e.to_string()))
}

/// Write the gridded `ℓ` field of `cfg.model` to `path` as CSV.
pub fn write_field(cfg: &ExperimentConfig, path: &Path) -> Result<ReducedDistanceField, ConfigError> {
    cfg.validate()?;
    let m = make_model(&cfg.model)?;
    let g = &cfg.grid;
    let mut spec = FieldSpec::new(g.tau_min, g.tau_max);
    spec.per_decade = g.points_per_decade;
    spec.r_max = Some(g.r_max);
    if cfg.route == RouteChoice::Field {
        spec.segments = Some(g.segments);
    }
    let field = ReducedDistanceField::build(&m, &spec)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    field.write_csv(&mut file)?;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decade_grid_spacing() {
        let g = decade_grid(0.01, 100.0, 8);
        assert_eq!(g.len(), 33);
        assert_eq!(g[32], 100.0);
        assert!((g[8] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn increase_detection() {
        assert!(increases(&[1.0, 0.9, 0.9005, 0.8], 1e-3).is_empty());
        assert_eq!(increases(&[1.0, 0.9, 0.92, 0.8], 1e-3), vec![2]);
    }
}
