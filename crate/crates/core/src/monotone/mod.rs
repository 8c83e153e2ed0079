//! Backward heat kernels, Gaussian densities and tangent-flow classification.

mod classify;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowsim::{FlowTrajectory, ParabolicMap};
use crate::netgeom::Point2;
use crate::varifold::{to_varifold, Ball};

pub use classify::{
    classify_tangent, merge_adjacent, representatives, rescaled_hausdorff, stratify,
    ClassifyConfig, SpacetimeGrid, StratumPoint, TangentKind, TangentLabel,
};

/// Truncation radius in units of `sqrt(tau)`.
pub const TRUNCATION: f64 = 6.0;

/// `(4 pi (s - t))^{-1/2} exp(-|x - y|^2 / (4 (s - t)))` without argument checks.
#[inline]
pub(crate) fn heat_kernel(y: Point2, tau: f64, x: Point2) -> f64 {
    (-(x - y).norm_sq() / (4.0 * tau)).exp() / (4.0 * PI * tau).sqrt()
}

/// One-dimensional backward heat kernel centered at `(y, s)`.
pub fn rho(y: Point2, s: f64, x: Point2, t: f64) -> Result<f64> {
    if !(t < s) {
        return Err(Error::InvalidArgument(format!(
            "heat kernel needs t < s, got t = {t}, s = {s}"
        )));
    }
    Ok(heat_kernel(y, s - t, x))
}

/// `int rho_(y,s)(., s - tau) d||V_(s - tau)||` over `B_r_trunc(y)`.
pub fn gaussian_density(
    traj: &FlowTrajectory,
    y: Point2,
    s: f64,
    tau: f64,
    r_trunc: f64,
) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if r_trunc < TRUNCATION * tau.sqrt() * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "truncation radius {r_trunc} below {TRUNCATION} sqrt(tau) = {}",
            TRUNCATION * tau.sqrt()
        )));
    }
    let t = s - tau;
    let gap = traj.local_gap(t)?;
    if tau < 2.0 * gap * (1.0 - 1e-9) {
        return Err(Error::Resolution(format!(
            "tau = {tau} is below twice the snapshot spacing {gap} at t = {t}"
        )));
    }
    let net = traj.network_at(t)?;
    let v = to_varifold(&net, Some(&Ball::new(y, r_trunc)));
    Ok(v.weigh(|x| heat_kernel(y, tau, x)))
}

/// Gaussian integrals at a sequence of decreasing scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub y: Point2,
    pub s: f64,
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    /// Richardson extrapolation to `tau = 0` from the last two values.
    pub extrapolated: f64,
    /// Whether the values are non-increasing as `tau` decreases (within `1e-3`).
    pub monotone: bool,
}

/// Geometric scales `tau0, tau0 / 2, tau0 / 4`.
pub fn default_taus(tau0: f64) -> Vec<f64> {
    vec![tau0, 0.5 * tau0, 0.25 * tau0]
}

/// Samples the Gaussian density at `taus` and extrapolates to `tau = 0`
/// assuming an error linear in `tau`.
pub fn density_limit(
    traj: &FlowTrajectory,
    y: Point2,
    s: f64,
    taus: &[f64],
) -> Result<DensityProfile> {
    if taus.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 scales, got {}",
            taus.len()
        )));
    }
    let ratio = taus[1] / taus[0];
    let geometric = taus
        .windows(2)
        .all(|w| w[1] > 0.0 && w[1] < w[0] && (w[1] / w[0] - ratio).abs() <= 1e-9 * ratio);
    if !geometric {
        return Err(Error::InvalidArgument(format!(
            "scales must decrease geometrically: {taus:?}"
        )));
    }
    let values = taus
        .iter()
        .map(|&tau| gaussian_density(traj, y, s, tau, TRUNCATION * tau.sqrt()))
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len();
    let extrapolated = (values[n - 1] - ratio * values[n - 2]) / (1.0 - ratio);
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + 1e-3);
    Ok(DensityProfile {
        y,
        s,
        taus: taus.to_vec(),
        values,
        extrapolated,
        monotone,
    })
}

/// The flow seen at scale `lambda` about `(y, s)`.
pub fn parabolic_rescale(
    traj: &FlowTrajectory,
    y: Point2,
    s: f64,
    lambda: f64,
) -> Result<FlowTrajectory> {
    traj.rescaled(&ParabolicMap { y, s, lambda })
}
