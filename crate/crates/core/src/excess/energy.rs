use serde::{Deserialize, Serialize};

use super::Window;
use crate::error::{Error, Result};
use crate::flowsim::{FlowTrajectory, Snapshot};
use crate::monotone::rho;
use crate::netgeom::{dist_to_triod, Point2, TriodFrame};
use crate::varifold::{trapezoid, vertex_curvatures, Ball, DiscreteVarifold, TestFunction, C_RAD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureEnergy {
    /// `sup_t |R^-1 ||V_t||(phi_rad^2) - c|` over the interior times.
    pub mass_defect_sup: f64,
    /// `int int |h|^2 phi_rad^2 d||V_t|| dt` over the interior times.
    pub energy: f64,
}

/// Normalized snapshots of `traj` whose times lie in `[t1, t2]` (world time).
fn interior_snapshots(
    traj: &FlowTrajectory,
    w: &Window,
    t1: f64,
    t2: f64,
) -> Result<Vec<Snapshot>> {
    let (t1, t2) = (t1.max(traj.t_start()), t2.min(traj.t_end()));
    if !(t1 < t2) {
        return Err(Error::InvalidWindow {
            window: w.to_string(),
            reason: format!(
                "no overlap with trajectory range [{}, {}]",
                traj.t_start(),
                traj.t_end()
            ),
        });
    }
    w.check_space(traj, t1, t2)?;
    let local = w.localize(traj, t1, t2)?;
    let (l1, l2) = (w.to_local_time(t1), w.to_local_time(t2));
    let snaps: Vec<Snapshot> = local.within(l1, l2).cloned().collect();
    if snaps.len() < 2 {
        return Err(Error::Resolution(format!(
            "window {w} sees {} snapshot(s) in [{t1}, {t2}], need at least 2",
            snaps.len()
        )));
    }
    Ok(snaps)
}

fn phi_rad_sq(x: Point2) -> f64 {
    TestFunction::PhiRad.eval(x).powi(2)
}

/// Mass defect and curvature energy against `phi_rad^2` on `[s - R^2, s + R^2]`,
/// restricted to the times the trajectory covers.
pub fn curvature_energy(traj: &FlowTrajectory, w: &Window) -> Result<CurvatureEnergy> {
    let (t1, t2) = w.interior();
    let snaps = interior_snapshots(traj, w, t1, t2)?;
    let mut defect: f64 = 0.0;
    let mut integrand = Vec::with_capacity(snaps.len());
    for snap in &snaps {
        let mass = DiscreteVarifold::from_network(&snap.net, None).weigh(phi_rad_sq);
        defect = defect.max((mass - C_RAD).abs());
        let mut e = 0.0;
        for v in vertex_curvatures(&snap.net) {
            let phi = phi_rad_sq(v.x);
            if phi == 0.0 {
                continue;
            }
            if v.boundary {
                return Err(Error::InvalidWindow {
                    window: w.to_string(),
                    reason: "boundary point inside the support of phi_rad".into(),
                });
            }
            e += v.h.norm_sq() * phi * v.weight;
        }
        integrand.push(e);
    }
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    Ok(CurvatureEnergy {
        mass_defect_sup: defect,
        energy: trapezoid(&times, &integrand),
    })
}

/// Snapshots in `[5/4, t0')` of the normalized window, dropping those closer
/// to `t0'` than the snapshot spacing.
fn backward_snapshots(traj: &FlowTrajectory, t0: f64, w: &Window) -> Result<(f64, Vec<Snapshot>)> {
    let t0_local = w.to_local_time(t0);
    if !(t0_local > 1.25) || t0_local > 4.0 + 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "t0 = {t0} must lie in ({}, {}] for window {w}",
            w.to_world_time(1.25),
            w.to_world_time(4.0)
        )));
    }
    let mut snaps = interior_snapshots(traj, w, w.to_world_time(1.25), t0)?;
    let mut gaps: Vec<f64> = snaps.windows(2).map(|p| p[1].t - p[0].t).collect();
    gaps.sort_by(f64::total_cmp);
    let guard = gaps[gaps.len() / 2];
    snaps.retain(|s| t0_local - s.t >= guard * (1.0 - 1e-9));
    if snaps.len() < 2 {
        return Err(Error::Resolution(format!(
            "fewer than 2 snapshots before t0 = {t0} in window {w}"
        )));
    }
    Ok((t0_local, snaps))
}

/// `int int_{B_1} |h + x^perp / (2 (t0 - t))|^2 rho_(0,t0) d||V_t|| dt` in
/// normalized coordinates, over `t in [5/4, t0)`.
pub fn shrinker_energy(traj: &FlowTrajectory, t0: f64, w: &Window) -> Result<f64> {
    let (t0, snaps) = backward_snapshots(traj, t0, w)?;
    let mut values = Vec::with_capacity(snaps.len());
    for snap in &snaps {
        let lag = t0 - snap.t;
        let mut e = 0.0;
        for v in vertex_curvatures(&snap.net) {
            if v.x.norm() > 1.0 {
                continue;
            }
            let perp = v.x - v.tangent * v.x.dot(v.tangent);
            let r = v.h + perp / (2.0 * lag);
            e += r.norm_sq() * rho(Point2::ZERO, t0, v.x, snap.t)? * v.weight;
        }
        values.push(e);
    }
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    Ok(trapezoid(&times, &values))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonConcentration {
    pub value: f64,
    /// Normalized `t0 - t` at the maximizing snapshot.
    pub lag: f64,
    /// World time of the maximizing snapshot.
    pub t_worst: f64,
}

/// `sup_t (t0 - t)^-kappa int_{B_3/4} rho_(0,t0) dist(x, J')^2 d||V_t||` in
/// normalized coordinates, over `t in [5/4, t0)`.
pub fn weighted_noncon(
    traj: &FlowTrajectory,
    t0: f64,
    w: &Window,
    kappa: f64,
    frame: &TriodFrame,
) -> Result<NonConcentration> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::InvalidArgument(format!(
            "kappa must lie in [0, 1), got {kappa}"
        )));
    }
    let (t0, snaps) = backward_snapshots(traj, t0, w)?;
    let frame = w.frame_to_local(frame);
    let ball = Ball::new(Point2::ZERO, 0.75);
    let mut best = NonConcentration {
        value: f64::NEG_INFINITY,
        lag: f64::NAN,
        t_worst: f64::NAN,
    };
    for snap in &snaps {
        let lag = t0 - snap.t;
        let v = DiscreteVarifold::from_network(&snap.net, Some(&ball));
        let mut sum = 0.0;
        for a in &v.atoms {
            let d = dist_to_triod(a.center, &frame);
            sum += rho(Point2::ZERO, t0, a.center, snap.t)? * d * d * a.weight();
        }
        let value = lag.powf(-kappa) * sum;
        if value > best.value {
            best = NonConcentration {
                value,
                lag,
                t_worst: w.to_world_time(snap.t),
            };
        }
    }
    Ok(best)
}
