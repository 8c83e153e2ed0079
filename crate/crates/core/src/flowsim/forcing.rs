use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgeom::Point2;

/// Shape of the ambient vector field `u(x, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingKind {
    Zero,
    Constant {
        u: Point2,
    },
    /// Named analytic field. `rotation`: `omega * (-y, x)`;
    /// `radial`: `c * x`; `oscillating`: `(0, c * sin(omega * t))`.
    Preset {
        name: String,
        params: Vec<f64>,
    },
}

/// Parabolic change of variables applied to a field: the evaluated field is
/// `lambda * u(y + lambda * x, s + lambda^2 * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicMap {
    pub y: Point2,
    pub s: f64,
    pub lambda: f64,
}

impl ParabolicMap {
    pub const IDENTITY: ParabolicMap = ParabolicMap {
        y: Point2::ZERO,
        s: 0.0,
        lambda: 1.0,
    };

    /// The map equivalent to applying `self` first and then `inner`.
    pub fn then(&self, inner: &ParabolicMap) -> ParabolicMap {
        ParabolicMap {
            y: self.y + inner.y * self.lambda,
            s: self.s + inner.s * self.lambda * self.lambda,
            lambda: self.lambda * inner.lambda,
        }
    }
}

impl Default for ParabolicMap {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// The forcing descriptor of a flow, with its integrability exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingField {
    #[serde(flatten)]
    pub kind: ForcingKind,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default, skip_serializing_if = "is_identity")]
    pub map: ParabolicMap,
}

fn default_p() -> f64 {
    2.0
}

fn default_q() -> f64 {
    8.0
}

fn is_identity(m: &ParabolicMap) -> bool {
    *m == ParabolicMap::IDENTITY
}

impl Default for ForcingField {
    fn default() -> Self {
        Self::zero()
    }
}

impl ForcingField {
    pub fn zero() -> Self {
        Self {
            kind: ForcingKind::Zero,
            p: default_p(),
            q: default_q(),
            map: ParabolicMap::IDENTITY,
        }
    }

    pub fn constant(u: Point2) -> Self {
        Self {
            kind: ForcingKind::Constant { u },
            ..Self::zero()
        }
    }

    pub fn preset(name: &str, params: Vec<f64>) -> Result<Self> {
        let f = Self {
            kind: ForcingKind::Preset {
                name: name.to_string(),
                params,
            },
            ..Self::zero()
        };
        f.validate()?;
        Ok(f)
    }

    pub fn with_exponents(mut self, p: f64, q: f64) -> Result<Self> {
        self.p = p;
        self.q = q;
        self.validate()?;
        Ok(self)
    }

    /// `1 - 1/p - 2/q`.
    pub fn zeta(&self) -> f64 {
        1.0 - 1.0 / self.p - 2.0 / self.q
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ForcingKind::Zero)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 2.0) || !(self.q > 2.0) || !self.p.is_finite() || !self.q.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "forcing exponents need p >= 2 and q > 2 (p = {}, q = {})",
                self.p, self.q
            )));
        }
        if !(self.zeta() > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "1 - 1/p - 2/q must be positive (p = {}, q = {})",
                self.p, self.q
            )));
        }
        if !(self.map.lambda > 0.0) {
            return Err(Error::InvalidArgument(
                "forcing rescale factor must be positive".into(),
            ));
        }
        if let ForcingKind::Preset { name, params } = &self.kind {
            let need = match name.as_str() {
                "rotation" | "radial" => 1,
                "oscillating" => 2,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown forcing preset {name:?}"
                    )))
                }
            };
            if params.len() != need {
                return Err(Error::InvalidArgument(format!(
                    "forcing preset {name:?} takes {need} parameter(s), got {}",
                    params.len()
                )));
            }
        }
        Ok(())
    }

    /// Evaluates `u(x, t)`.
    pub fn eval(&self, x: Point2, t: f64) -> Point2 {
        let m = &self.map;
        let xo = m.y + x * m.lambda;
        let to = m.s + t * m.lambda * m.lambda;
        self.eval_raw(xo, to) * m.lambda
    }

    fn eval_raw(&self, x: Point2, t: f64) -> Point2 {
        match &self.kind {
            ForcingKind::Zero => Point2::ZERO,
            ForcingKind::Constant { u } => *u,
            ForcingKind::Preset { name, params } => match name.as_str() {
                "rotation" => x.perp() * params[0],
                "radial" => x * params[0],
                "oscillating" => Point2::new(0.0, params[0] * (params[1] * t).sin()),
                _ => Point2::ZERO,
            },
        }
    }

    /// The field seen by the flow rescaled by `map`.
    pub fn rescaled(&self, map: &ParabolicMap) -> ForcingField {
        ForcingField {
            map: self.map.then(map),
            ..self.clone()
        }
    }
}
