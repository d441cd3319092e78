use serde::Serialize;

use super::{unit_ball_volume, FlowModel, ModelKind};
use crate::error::{Error, Result};
use crate::functionals::series::fit_power_tail;
use crate::models::geometric_grid;

/// The fixed metric `g` of a static model, seen from its base point.
#[derive(Debug, Clone)]
pub struct StaticGeometry {
    model: FlowModel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeRatio {
    /// `Vol B(p, s_max) / (ω_n s_maxⁿ)`
    pub at_s_max: f64,
    /// Extrapolated `s → ∞` limit, clamped to `[0, 1]`.
    pub estimate: f64,
    /// Relative slope `|d log ratio / d log s|` at `s_max`.
    pub relative_slope: f64,
    pub converged: bool,
    /// The ball volumes came from geodesic shooting rather than a closed form.
    pub numeric_path: bool,
}

impl StaticGeometry {
    pub fn from_model(model: &FlowModel) -> Result<Self> {
        if !model.kind().is_static() {
            return Err(Error::Unsupported {
                op: "static_geometry",
                kind: model.kind().as_str().into(),
            });
        }
        Ok(Self { model: model.clone() })
    }

    pub fn dimension(&self) -> usize {
        self.model.dimension()
    }

    pub fn unit_ball_volume(&self) -> f64 {
        unit_ball_volume(self.dimension())
    }

    pub fn distance(&self, q1: super::Point, q2: super::Point) -> Result<f64> {
        self.model.distance(q1, q2, 0.0)
    }

    /// Whether balls about the base point use the shooting table.
    pub fn numeric_path(&self) -> bool {
        self.model.off_pole_base()
    }

    /// `Vol B(p, s)`.
    pub fn ball_volume(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self.model.kind() {
            ModelKind::Gaussian => self.unit_ball_volume() * s.powi(self.dimension() as i32),
            _ => {
                let warp = self.model.warp().expect("static warped model");
                if self.model.off_pole_base() {
                    self.model.area_table().ball_area(s)
                } else {
                    warp.pole_ball_area(s)
                }
            }
        }
    }

    /// `d/ds Vol B(p, s)`: the area of the geodesic sphere of radius `s`.
    pub fn sphere_area(&self, s: f64) -> f64 {
        self.model.radial_measure(s, 0.0)
    }

    pub fn bishop_gromov_ratio(&self, s: f64) -> f64 {
        self.ball_volume(s) / (self.unit_ball_volume() * s.powi(self.dimension() as i32))
    }

    /// Asymptotic volume ratio estimate from the ratio on `[s_max/10, s_max]`.
    pub fn asymptotic_volume_ratio(&self, s_max: f64) -> Result<VolumeRatio> {
        if self.numeric_path() && s_max > super::AREA_TABLE_RADIUS {
            return Err(Error::OutOfRange {
                what: "s_max",
                value: s_max,
                lo: 0.0,
                hi: super::AREA_TABLE_RADIUS,
            });
        }
        let radii = geometric_grid(s_max / 10.0, s_max, 17);
        let ratios: Vec<f64> = radii.iter().map(|&s| self.bishop_gromov_ratio(s)).collect();
        let at_s_max = *ratios.last().unwrap();
        let h = 1e-3 * s_max;
        let slope = ((self.bishop_gromov_ratio(s_max + h) / self.bishop_gromov_ratio(s_max - h)).ln()
            / ((s_max + h) / (s_max - h)).ln())
        .abs();
        let fit = fit_power_tail(&radii, &ratios);
        let estimate = match &fit {
            Some(f) if f.exponent > 0.05 => f.limit,
            _ => at_s_max,
        }
        .clamp(0.0, 1.0);
        Ok(VolumeRatio {
            at_s_max,
            estimate,
            relative_slope: slope,
            converged: slope < 1e-2,
            numeric_path: self.numeric_path(),
        })
    }
}
