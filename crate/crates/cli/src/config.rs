//! Experiment configuration: one JSON document, with short-form overrides
//! for the model and weight descriptors.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use redgeo_core::lgeo::{ExactEll, ReducedDistance};
use redgeo_core::models::{make_model, FlowModel, ModelSpec};
use redgeo_core::weights::{
    weight_constant, weight_localization, weight_min, weight_quadratic_control, weight_shifted_heat_kernel, Weight,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    RvCurve,
    ICurve,
    JCurve,
    IjCheck,
    Limits,
    Certify,
    Checks,
    Density,
}

impl Quantity {
    pub const ALL: [Quantity; 8] = [
        Quantity::RvCurve,
        Quantity::ICurve,
        Quantity::JCurve,
        Quantity::IjCheck,
        Quantity::Limits,
        Quantity::Certify,
        Quantity::Checks,
        Quantity::Density,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::RvCurve => "rv_curve",
            Quantity::ICurve => "i_curve",
            Quantity::JCurve => "j_curve",
            Quantity::IjCheck => "ij_check",
            Quantity::Limits => "limits",
            Quantity::Certify => "certify",
            Quantity::Checks => "checks",
            Quantity::Density => "density",
        }
    }
}

/// A weight descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant { c: f64 },
    ShiftedHeatKernel { offset: f64, tau0: f64 },
    QuadraticControl,
    Localization { rho: f64 },
    Min { a: Box<WeightSpec>, b: Box<WeightSpec> },
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Constant { c: 1.0 }
    }
}

impl WeightSpec {
    pub fn build(&self, m: &FlowModel) -> Result<Weight, ConfigError> {
        Ok(match self {
            WeightSpec::Constant { c } => weight_constant(*c)?,
            WeightSpec::ShiftedHeatKernel { offset, tau0 } => weight_shifted_heat_kernel(m, *offset, *tau0)?,
            WeightSpec::QuadraticControl => weight_quadratic_control(m),
            WeightSpec::Localization { rho } => {
                let ell: Arc<dyn ReducedDistance> = Arc::new(ExactEll::new(m));
                weight_localization(ell, *rho)?
            }
            WeightSpec::Min { a, b } => weight_min(a.build(m)?, b.build(m)?),
        })
    }
}

/// `constant=2`, `one`, `heat_kernel=OFFSET,TAU0`, `quadratic_control`,
/// `localization=RHO`, or a JSON object.
impl FromStr for WeightSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| ConfigError::Descriptor(format!("weight `{s}`: {e}")));
        }
        let (head, args) = s.split_once('=').unwrap_or((s, ""));
        let nums = parse_numbers(args).map_err(|e| ConfigError::Descriptor(format!("weight `{s}`: {e}")))?;
        let bad = || ConfigError::Descriptor(format!("weight `{s}`: wrong number of parameters"));
        match (head, nums.as_slice()) {
            ("one", []) => Ok(WeightSpec::Constant { c: 1.0 }),
            ("constant", [c]) => Ok(WeightSpec::Constant { c: *c }),
            ("heat_kernel", [offset, tau0]) => Ok(WeightSpec::ShiftedHeatKernel {
                offset: *offset,
                tau0: *tau0,
            }),
            ("quadratic_control", []) => Ok(WeightSpec::QuadraticControl),
            ("localization", [rho]) => Ok(WeightSpec::Localization { rho: *rho }),
            ("one" | "constant" | "heat_kernel" | "quadratic_control" | "localization", _) => Err(bad()),
            _ => Err(ConfigError::Descriptor(format!("unknown weight `{head}`"))),
        }
    }
}

fn parse_numbers(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

/// `sphere:n=2`, `cone:slope=0.5,base=2`, or a JSON object.
pub fn parse_model(s: &str) -> Result<ModelSpec, ConfigError> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| ConfigError::Descriptor(format!("model `{s}`: {e}")));
    }
    let (name, params) = s.split_once(':').unwrap_or((s, ""));
    let mut spec = ModelSpec::new(name);
    for kv in params.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ConfigError::Descriptor(format!("model `{s}`: expected key=value, got `{kv}`")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| ConfigError::Descriptor(format!("model `{s}`: `{v}`: {e}")))
        };
        match k.trim() {
            "n" => {
                spec.n = Some(
                    v.trim()
                        .parse()
                        .map_err(|e| ConfigError::Descriptor(format!("model `{s}`: `{v}`: {e}")))?,
                )
            }
            "slope" | "c" => spec.slope = Some(num(v)?),
            "curvature" | "C" => spec.curvature = Some(num(v)?),
            "base" | "rho0" => spec.base = Some(num(v)?),
            other => return Err(ConfigError::Descriptor(format!("model `{s}`: unknown parameter `{other}`"))),
        }
    }
    Ok(spec)
}

/// How `ℓ` is supplied to the functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteChoice {
    /// Closed-form or conformal `ℓ` wherever available.
    #[default]
    Exact,
    /// A gridded field built once from the variational route and reused.
    Field,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub tau_min: f64,
    pub tau_max: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub points_per_decade: usize,
    /// Path segments of the variational route.
    pub segments: usize,
    pub u_intervals: usize,
    pub x_intervals: usize,
    pub t_intervals: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            tau_min: 0.01,
            tau_max: 1e4,
            r_min: 0.3,
            r_max: 300.0,
            points_per_decade: 8,
            segments: 64,
            u_intervals: 1200,
            x_intervals: 400,
            t_intervals: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub model: ModelSpec,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default)]
    pub route: RouteChoice,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub quantities: Vec<Quantity>,
    #[serde(default)]
    pub allow_flagged: bool,
    /// Output directory; not part of the config hash.
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(id: &str, model: ModelSpec) -> Self {
        Self {
            id: id.to_string(),
            model,
            weight: WeightSpec::default(),
            route: RouteChoice::default(),
            grid: GridConfig::default(),
            quantities: Vec::new(),
            allow_flagged: false,
            out: default_out(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        let bad = |what: &str| Err(ConfigError::Invalid(what.to_string()));
        if !(g.tau_min > 0.0 && g.tau_min < g.tau_max) {
            return bad("need 0 < tau_min < tau_max");
        }
        if !(g.r_min > 0.0 && g.r_min < g.r_max) {
            return bad("need 0 < r_min < r_max");
        }
        if g.points_per_decade < 8 {
            return bad("points_per_decade must be ≥ 8");
        }
        if g.segments < 16 {
            return bad("segments must be ≥ 16");
        }
        if g.u_intervals < 8 || g.x_intervals < 8 || g.t_intervals < 8 {
            return bad("quadrature intervals must be ≥ 8");
        }
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return bad("experiment id must be a non-empty file name");
        }
        let m = make_model(&self.model)?;
        self.weight.build(&m)?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON of every field except `out`.
    pub fn hash(&self) -> String {
        let mut hashed = self.clone();
        hashed.out = PathBuf::new();
        let text = serde_json::to_string(&hashed).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_forms() {
        assert_eq!("one".parse::<WeightSpec>().unwrap(), WeightSpec::Constant { c: 1.0 });
        assert_eq!(
            "heat_kernel=0.5,30".parse::<WeightSpec>().unwrap(),
            WeightSpec::ShiftedHeatKernel { offset: 0.5, tau0: 30.0 }
        );
        assert!("heat_kernel=1".parse::<WeightSpec>().is_err());
        assert!("bogus".parse::<WeightSpec>().is_err());
        let m = parse_model("cone:slope=0.5,base=2").unwrap();
        assert_eq!(m, ModelSpec::cone_at(0.5, 2.0));
        assert_eq!(parse_model("sphere:n=3").unwrap(), ModelSpec::sphere(3));
        assert!(parse_model("sphere:q=3").is_err());
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let c = ExperimentConfig::from_json(r#"{"id":"a","model":{"name":"gaussian","n":2}}"#).unwrap();
        assert_eq!(c.weight, WeightSpec::Constant { c: 1.0 });
        assert_eq!(c.grid, GridConfig::default());
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(ExperimentConfig::from_json(r#"{"id":"a","model":{"name":"gaussian"},"extra":1}"#).is_err());
        let w: WeightSpec =
            r#"{"kind":"min","a":{"kind":"constant","c":0.05},"b":{"kind":"shifted_heat_kernel","offset":0.5,"tau0":30}}"#
                .parse()
                .unwrap();
        assert!(matches!(w, WeightSpec::Min { .. }));
    }

    #[test]
    fn hash_ignores_output_directory() {
        let mut a = ExperimentConfig::new("x", ModelSpec::sphere(2));
        let h = a.hash();
        assert_eq!(h.len(), 16);
        a.out = PathBuf::from("/elsewhere");
        assert_eq!(a.hash(), h);
        a.grid.tau_max = 10.0;
        assert_ne!(a.hash(), h);
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::new("x", ModelSpec::gaussian(2));
        assert!(c.validate().is_ok());
        c.grid.points_per_decade = 4;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new("x", ModelSpec::new("torus"));
        assert!(c.validate().is_err());
        c.model = ModelSpec::sphere(2);
        c.weight = WeightSpec::ShiftedHeatKernel { offset: 0.0, tau0: 1.0 };
        assert!(c.validate().is_err());
    }
}
