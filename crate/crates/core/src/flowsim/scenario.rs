use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{presets, ForcingField};
use crate::error::{Error, Result};
use crate::netgeom::{standard_triod, validate, Network, Point2, TriodFrame};

/// Everything needed to integrate one flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub initial: Network,
    pub forcing: ForcingField,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub h_target: f64,
    pub eps_len: f64,
    pub eps_col: f64,
    /// Clamped ends are placed at `initial + clamp_velocity * (t - t_start)`.
    pub clamp_velocity: Point2,
}

impl Scenario {
    /// Scenario with zero forcing, start time 0 and the default event
    /// thresholds `5 h_target`.
    pub fn new(initial: Network, dt: f64, t_end: f64, h_target: f64) -> Self {
        Self {
            initial,
            forcing: ForcingField::zero(),
            dt,
            t_start: 0.0,
            t_end,
            snapshot_stride: 1,
            h_target,
            eps_len: 5.0 * h_target,
            eps_col: 5.0 * h_target,
            clamp_velocity: Point2::ZERO,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_forcing(mut self, forcing: ForcingField) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.h_target > 0.0) {
            return bad(format!("h_target must be positive, got {}", self.h_target));
        }
        if self.dt > 0.5 * self.h_target * self.h_target * (1.0 + 1e-12) {
            return bad(format!(
                "dt = {} exceeds h_target^2 / 2 = {}",
                self.dt,
                0.5 * self.h_target * self.h_target
            ));
        }
        if !self.t_start.is_finite() || !(self.t_end > self.t_start) || !self.t_end.is_finite() {
            return bad(format!(
                "need t_end > t_start, got [{}, {}]",
                self.t_start, self.t_end
            ));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be positive".into());
        }
        if !(self.eps_len > 0.0) || !(self.eps_col > 0.0) {
            return bad("event thresholds must be positive".into());
        }
        if !self.clamp_velocity.is_finite() {
            return bad("clamp velocity must be finite".into());
        }
        self.forcing.validate()?;
        if let Some(v) = validate(&self.initial).first() {
            return bad(format!("initial network invalid: {}", v.message));
        }
        Ok(())
    }
}

/// On-disk scenario description (TOML).
///
/// ```toml
/// preset = "circle"
/// dt = 1e-5
/// t_end = 0.3
/// h_target = 0.0245
/// snapshot_stride = 100
///
/// [params]
/// radius = 1.0
/// n = 256
///
/// [forcing]
/// kind = "zero"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub preset: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub forcing: ForcingField,
    pub dt: f64,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub h_target: f64,
    #[serde(default = "one")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub eps_len: Option<f64>,
    #[serde(default)]
    pub eps_col: Option<f64>,
    #[serde(default)]
    pub clamp_velocity: Option<[f64; 2]>,
}

fn one() -> usize {
    1
}

/// Preset names accepted in scenario files.
pub const PRESETS: [&str; 6] = [
    "triod",
    "perturbed_triod",
    "circle",
    "grim_reaper",
    "lens",
    "segment",
];

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn check_params(&self, allowed: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!(
                "unknown parameter '{k}' for preset '{}' (expected one of {allowed:?})",
                self.preset
            ))),
            None => Ok(()),
        }
    }

    fn initial(&self) -> Result<Network> {
        let h = self.h_target;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Config(format!(
                    "parameter '{name}' must be positive, got {v}"
                )))
            }
        };
        match self.preset.as_str() {
            "triod" => {
                self.check_params(&["extent", "theta", "x", "y"])?;
                let frame = TriodFrame::new(
                    self.param("theta", 0.0),
                    Point2::new(self.param("x", 0.0), self.param("y", 0.0)),
                );
                standard_triod(&frame, self.param("extent", 1.0), h)
            }
            "perturbed_triod" => {
                self.check_params(&["extent", "amplitude"])?;
                let extent = positive("extent", self.param("extent", 2.0))?;
                Ok(presets::perturbed_triod(
                    extent,
                    self.param("amplitude", 0.02),
                    h,
                ))
            }
            "circle" => {
                self.check_params(&["radius", "n", "x", "y"])?;
                let r = positive("radius", self.param("radius", 1.0))?;
                let n = self.param("n", (2.0 * PI * r / h).round());
                if !(n >= 3.0) {
                    return Err(Error::Config(format!("circle needs n >= 3, got {n}")));
                }
                let c = Point2::new(self.param("x", 0.0), self.param("y", 0.0));
                Ok(Network::from_curves(vec![presets::circle(
                    c, r, n as usize,
                )]))
            }
            "grim_reaper" => {
                self.check_params(&["half_width"])?;
                let w = self.param("half_width", 1.4);
                if !(w > 0.0 && w < 0.5 * PI) {
                    return Err(Error::Config(format!(
                        "half_width must lie in (0, pi/2), got {w}"
                    )));
                }
                Ok(presets::grim_reaper(w, h, self.t_start))
            }
            "lens" => {
                self.check_params(&["half_width", "half_height", "bridge"])?;
                Ok(presets::lens(
                    positive("half_width", self.param("half_width", 0.5))?,
                    positive("half_height", self.param("half_height", 1.5))?,
                    positive("bridge", self.param("bridge", 0.3))?,
                    h,
                ))
            }
            "segment" => {
                self.check_params(&["ax", "ay", "bx", "by"])?;
                let a = Point2::new(self.param("ax", 0.0), self.param("ay", 0.0));
                let b = Point2::new(self.param("bx", 1.0), self.param("by", 0.0));
                if a.dist(b) <= h {
                    return Err(Error::Config("segment must be longer than h_target".into()));
                }
                Ok(presets::segment(a, b, h))
            }
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected one of {PRESETS:?})"
            ))),
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        if !(self.h_target > 0.0) {
            return Err(Error::Config(format!(
                "h_target must be positive, got {}",
                self.h_target
            )));
        }
        let mut velocity = self
            .clamp_velocity
            .map(Point2::from)
            .unwrap_or(Point2::ZERO);
        if self.preset == "grim_reaper" && self.clamp_velocity.is_none() {
            velocity = Point2::new(0.0, 1.0);
        }
        let sc = Scenario {
            initial: self.initial()?,
            forcing: self.forcing.clone(),
            dt: self.dt,
            t_start: self.t_start,
            t_end: self.t_end,
            snapshot_stride: self.snapshot_stride,
            h_target: self.h_target,
            eps_len: self.eps_len.unwrap_or(5.0 * self.h_target),
            eps_col: self.eps_col.unwrap_or(5.0 * self.h_target),
            clamp_velocity: velocity,
        };
        sc.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(sc)
    }
}
