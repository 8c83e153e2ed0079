//! Space-time L² excess to triple junctions and the quantitative diagnostics
//! built on it.
//!
//! Every diagnostic is evaluated in window-normalized coordinates
//! `x' = (x - center) / R`, `t' = (t - s) / R^2 + 2`, where the window becomes
//! `B_4 x [0, 4]`. Values are therefore unchanged by parabolic rescaling.

mod energy;
mod fit;
mod graph;
mod track;

#[cfg(test)]
mod tests;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowsim::{FlowTrajectory, ForcingField, ParabolicMap};
use crate::netgeom::{dist_to_triod, EndTag, Point2, TriodFrame};
use crate::varifold::{time_nodes, Ball, DiscreteVarifold, TestFunction};

pub use energy::{
    curvature_energy, shrinker_energy, weighted_noncon, CurvatureEnergy, NonConcentration,
};
pub use fit::{
    decay_profile, fit_frame, fit_frame_with, refine_frame, DecayEntry, DecayProfile, FitConfig,
    FrameFit, NOISE_FLOOR,
};
pub use graph::{
    graph_extract, heat_residual, junction_slopes, two_triod_gap, GraphFailure, GraphInterval,
    GraphOutcome, HeatResidual,
};
pub use track::{
    default_min_gap, holder_exponent, track_junctions, HolderFit, JunctionTrack, TrackConfig,
};

/// Parabolic cylinder `B_{4R}(center) x [s - 2R^2, s + 2R^2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: Point2,
    pub s: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

impl Window {
    pub fn new(center: Point2, s: f64, r: f64) -> Result<Self> {
        let w = Window { center, s, r };
        if !(r > 0.0) || !r.is_finite() || !s.is_finite() || !center.is_finite() {
            return Err(Error::InvalidWindow {
                window: w.to_string(),
                reason: "need finite center and time and R > 0".into(),
            });
        }
        Ok(w)
    }

    pub fn t_range(&self) -> (f64, f64) {
        (
            self.s - 2.0 * self.r * self.r,
            self.s + 2.0 * self.r * self.r,
        )
    }

    /// `[s - R^2, s + R^2]`.
    pub fn interior(&self) -> (f64, f64) {
        (self.s - self.r * self.r, self.s + self.r * self.r)
    }

    /// The map taking the window to `B_4 x [0, 4]`.
    pub fn normalizing_map(&self) -> ParabolicMap {
        ParabolicMap {
            y: self.center,
            s: self.s - 2.0 * self.r * self.r,
            lambda: self.r,
        }
    }

    pub fn to_local_time(&self, t: f64) -> f64 {
        (t - self.s) / (self.r * self.r) + 2.0
    }

    pub fn to_world_time(&self, t: f64) -> f64 {
        self.s + (t - 2.0) * self.r * self.r
    }

    pub fn frame_to_local(&self, frame: &TriodFrame) -> TriodFrame {
        TriodFrame::new(frame.theta(), (frame.xi - self.center) / self.r)
    }

    pub fn frame_to_world(&self, frame: &TriodFrame) -> TriodFrame {
        TriodFrame::new(frame.theta(), self.center + frame.xi * self.r)
    }

    /// The same window seen through the rescaling `map`.
    pub fn rescaled(&self, map: &ParabolicMap) -> Window {
        Window {
            center: (self.center - map.y) / map.lambda,
            s: (self.s - map.s) / (map.lambda * map.lambda),
            r: self.r / map.lambda,
        }
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidWindow {
            window: self.to_string(),
            reason: reason.into(),
        }
    }

    /// Fails when a clamped or free end enters `B_{4R}` during `[t1, t2]`.
    pub fn check_space(&self, traj: &FlowTrajectory, t1: f64, t2: f64) -> Result<()> {
        let ball = 4.0 * self.r;
        for snap in bracketing(traj, t1, t2) {
            for (ci, c) in snap.net.curves.iter().enumerate() {
                if c.is_closed() {
                    continue;
                }
                for (e, tag) in c.ends.iter().enumerate() {
                    if !matches!(tag, EndTag::Clamped | EndTag::Free) {
                        continue;
                    }
                    let p = if e == 0 { c.first() } else { c.last() };
                    if p.dist(self.center) < ball {
                        return Err(self.invalid(format!(
                            "boundary end of curve {ci} at ({}, {}) lies inside B_4R at t = {}",
                            p.x, p.y, snap.t
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Fails unless the whole cylinder lies inside the trajectory's domain.
    pub fn check(&self, traj: &FlowTrajectory) -> Result<()> {
        let (t1, t2) = self.t_range();
        if !traj.contains_time(t1) || !traj.contains_time(t2) {
            return Err(self.invalid(format!(
                "time range [{t1}, {t2}] exceeds trajectory range [{}, {}]",
                traj.t_start(),
                traj.t_end()
            )));
        }
        self.check_space(traj, t1, t2)
    }

    /// The part of `traj` covering `[t1, t2]`, in normalized coordinates.
    pub fn localize(&self, traj: &FlowTrajectory, t1: f64, t2: f64) -> Result<FlowTrajectory> {
        let snaps: Vec<_> = bracketing(traj, t1, t2).cloned().collect();
        if snaps.is_empty() {
            return Err(self.invalid(format!("no snapshots in [{t1}, {t2}]")));
        }
        FlowTrajectory::new(snaps, traj.forcing.clone())?.rescaled(&self.normalizing_map())
    }

    /// The whole valid window in normalized coordinates.
    fn localize_checked(&self, traj: &FlowTrajectory) -> Result<FlowTrajectory> {
        self.check(traj)?;
        let (t1, t2) = self.t_range();
        self.localize(traj, t1, t2)
    }
}

/// Snapshots in `[t1, t2]` together with their outer neighbors.
fn bracketing(
    traj: &FlowTrajectory,
    t1: f64,
    t2: f64,
) -> impl Iterator<Item = &crate::flowsim::Snapshot> {
    let snaps = traj.snapshots();
    let lo = snaps.partition_point(|s| s.t < t1).saturating_sub(1);
    let hi = (snaps.partition_point(|s| s.t <= t2) + 1).min(snaps.len());
    snaps[lo..hi.max(lo)].iter()
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.center.x, self.center.y, self.s, self.r
        )
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<f64> = text
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("window '{text}': {e}")))?;
        match parts[..] {
            [cx, cy, s, r] => Window::new(Point2::new(cx, cy), s, r),
            _ => Err(Error::InvalidArgument(format!(
                "window '{text}' must be 'cx,cy,s,R'"
            ))),
        }
    }
}

/// Midpoint samples of the window with trapezoid-in-time weights, in
/// normalized coordinates.
#[derive(Debug, Clone, Default)]
pub(crate) struct SpaceTimeSamples {
    pub x: Vec<Point2>,
    pub w: Vec<f64>,
}

impl SpaceTimeSamples {
    pub fn excess_sq(&self, frame: &TriodFrame) -> f64 {
        self.x
            .iter()
            .zip(&self.w)
            .map(|(&x, &w)| {
                let d = dist_to_triod(x, frame);
                d * d * w
            })
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// Trapezoid weights of the nodes `times`.
pub(crate) fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    (0..n)
        .map(|k| {
            let left = if k > 0 { times[k] - times[k - 1] } else { 0.0 };
            let right = if k + 1 < n {
                times[k + 1] - times[k]
            } else {
                0.0
            };
            0.5 * (left + right)
        })
        .collect()
}

fn window_samples(local: &FlowTrajectory) -> Result<(Vec<f64>, Vec<DiscreteVarifold>)> {
    let times = time_nodes(local, 0.0, 4.0)?;
    let ball = Ball::new(Point2::ZERO, 4.0);
    let slices = times
        .iter()
        .map(|&t| {
            Ok(DiscreteVarifold::from_network(
                &*local.network_at(t)?,
                Some(&ball),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((times, slices))
}

pub(crate) fn excess_samples(local: &FlowTrajectory) -> Result<SpaceTimeSamples> {
    let (times, slices) = window_samples(local)?;
    let mut out = SpaceTimeSamples::default();
    for (c, v) in trapezoid_weights(&times).into_iter().zip(&slices) {
        for a in &v.atoms {
            out.x.push(a.center);
            out.w.push(a.weight() * c);
        }
    }
    Ok(out)
}

/// `mu = (R^-5 int int_{B_4R} dist(x, J')^2 d||V_t|| dt)^(1/2)` over the window.
pub fn l2_excess(traj: &FlowTrajectory, w: &Window, frame: &TriodFrame) -> Result<f64> {
    let local = w.localize_checked(traj)?;
    let samples = excess_samples(&local)?;
    Ok(samples.excess_sq(&w.frame_to_local(frame)).sqrt())
}

/// `R^zeta (int (int_{B_4R} |u|^p d||V_t||)^(q/p) dt)^(1/q)` with the exponents of `forcing`.
pub fn u_norm(traj: &FlowTrajectory, w: &Window, forcing: &ForcingField) -> Result<f64> {
    let local = w.localize_checked(traj)?;
    forcing.validate()?;
    if forcing.is_zero() {
        return Ok(0.0);
    }
    let u = forcing.rescaled(&w.normalizing_map());
    let (p, q) = (u.p, u.q);
    let (times, slices) = window_samples(&local)?;
    let total: f64 = trapezoid_weights(&times)
        .into_iter()
        .zip(times.iter().zip(&slices))
        .map(|(c, (&t, v))| c * v.weigh(|x| u.eval(x, t).norm().powf(p)).powf(q / p))
        .sum();
    Ok(total.powf(1.0 / q))
}

/// `R^-1 ||V_t||(phi_{j,J,R})` for `j = 1, 2, 3` at the first and last
/// time of the window.
pub fn phi_j_masses(
    traj: &FlowTrajectory,
    w: &Window,
    frame: &TriodFrame,
) -> Result<[[f64; 3]; 2]> {
    let local = w.localize_checked(traj)?;
    let frame = w.frame_to_local(frame);
    let mut out = [[0.0; 3]; 2];
    for (row, t) in out.iter_mut().zip([0.0, 4.0]) {
        let v = DiscreteVarifold::from_network(&*local.network_at(t)?, None);
        for (j, m) in row.iter_mut().enumerate() {
            let phi = TestFunction::phi_j(j + 1, frame, 1.0);
            *m = v.weigh(|x| phi.eval(x));
        }
    }
    Ok(out)
}
