//! Batch evaluation of the window diagnostics into a [`DiagnosticsReport`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excess::{
    curvature_energy, default_min_gap, fit_frame_with, heat_residual, holder_exponent,
    junction_slopes, phi_j_masses, shrinker_energy, track_junctions, u_norm, weighted_noncon,
    FitConfig, GraphInterval, TrackConfig, Window,
};
use crate::flowsim::FlowTrajectory;
use crate::io::{DiagnosticsReport, ReportValue};
use crate::monotone::{default_taus, density_limit};
use crate::netgeom::{EndTag, Point2};
use crate::varifold::{brakke_residual, Ball, DiscreteVarifold, ForcingTerm, Scaled, TestFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOptions {
    pub kappa: f64,
    /// Largest Gaussian scale; `None` picks [`default_tau0`].
    pub tau0: Option<f64>,
    pub fit: FitConfig,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            kappa: 0.5,
            tau0: None,
            fit: FitConfig::default(),
        }
    }
}

/// Window centered at the middle of the time range, on the lowest-numbered
/// junction (or the node nearest the centroid when there is none), with the
/// largest radius the trajectory supports.
pub fn default_window(traj: &FlowTrajectory) -> Result<Window> {
    let s = 0.5 * (traj.t_start() + traj.t_end());
    let net = traj.network_at(s)?;
    let center = match net.junctions.values().next() {
        Some(&p) => p,
        None => {
            let pts: Vec<Point2> = net.points().collect();
            if pts.is_empty() {
                return Err(Error::InvalidArgument(
                    "trajectory is empty at its midpoint".into(),
                ));
            }
            let c = pts.iter().fold(Point2::ZERO, |a, &p| a + p) / pts.len() as f64;
            pts.into_iter()
                .min_by(|a, b| a.dist(c).total_cmp(&b.dist(c)))
                .unwrap_or(c)
        }
    };
    let r_time = (0.25 * (traj.t_end() - traj.t_start())).sqrt();
    let mut r_space = f64::INFINITY;
    for snap in traj.snapshots() {
        for c in snap.net.curves.iter().filter(|c| !c.is_closed()) {
            for (e, tag) in c.ends.iter().enumerate() {
                if matches!(tag, EndTag::Clamped | EndTag::Free) {
                    let p = if e == 0 { c.first() } else { c.last() };
                    r_space = r_space.min(0.25 * p.dist(center));
                }
            }
        }
    }
    Window::new(center, s, (1.0 - 1e-6) * r_time.min(r_space))
}

/// `(R / 2)^2`, raised to eight snapshot spacings when that is larger and
/// capped at `2 R^2`.
pub fn default_tau0(traj: &FlowTrajectory, w: &Window) -> f64 {
    let mut gaps: Vec<f64> = traj
        .snapshots()
        .windows(2)
        .map(|p| p[1].t - p[0].t)
        .collect();
    gaps.sort_by(f64::total_cmp);
    let gap = gaps.get(gaps.len() / 2).copied().unwrap_or(0.0);
    (0.25 * w.r * w.r).max(8.0 * gap).min(2.0 * w.r * w.r)
}

/// Errors that mean "this quantity does not exist here" rather than "the
/// request is wrong".
fn soft<T>(r: Result<T>) -> Result<std::result::Result<T, ReportValue>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(Error::GraphExtraction(_)) => Ok(Err(ReportValue::Marker("not_a_graph".into()))),
        Err(Error::Resolution(_) | Error::Fit(_) | Error::EmptyWindow(_)) => Ok(Err(na())),
        Err(e) => Err(e),
    }
}

fn na() -> ReportValue {
    ReportValue::Marker("NA".into())
}

fn value<T>(r: &std::result::Result<T, ReportValue>, f: impl Fn(&T) -> f64) -> ReportValue {
    match r {
        Ok(v) => ReportValue::Number(f(v)),
        Err(m) => m.clone(),
    }
}

/// Every window quantity of the excess, varifold and monotone modules.
///
/// Rows come out in a fixed order, so equal inputs give equal reports.
pub fn diagnose(
    traj: &FlowTrajectory,
    w: &Window,
    opts: &DiagnoseOptions,
) -> Result<DiagnosticsReport> {
    if !(0.0..1.0).contains(&opts.kappa) {
        return Err(Error::InvalidArgument(format!(
            "kappa must lie in [0, 1), got {}",
            opts.kappa
        )));
    }
    w.check(traj)?;
    let mut rep = DiagnosticsReport::default();
    let win = Some(w);
    let (t1, t2) = w.t_range();

    let fit = soft(fit_frame_with(traj, w, &opts.fit))?;
    rep.push("l2_excess", win, "frame=fit", value(&fit, |f| f.mu));
    rep.push(
        "frame_theta",
        win,
        "frame=fit",
        value(&fit, |f| f.frame.theta()),
    );
    rep.push(
        "frame_xi_x",
        win,
        "frame=fit",
        value(&fit, |f| f.frame.xi.x),
    );
    rep.push(
        "frame_xi_y",
        win,
        "frame=fit",
        value(&fit, |f| f.frame.xi.y),
    );
    rep.push("forcing_norm", win, "", u_norm(traj, w, &traj.forcing)?);

    let frame = fit.as_ref().ok().map(|f| f.frame);
    let masses = match frame {
        Some(fr) => soft(phi_j_masses(traj, w, &fr))?,
        None => Err(na()),
    };
    for (k, at) in ["start", "end"].iter().enumerate() {
        for j in 0..3 {
            rep.push(
                "phi_j_mass",
                win,
                format!("j={};time={at}", j + 1),
                value(&masses, |m| m[k][j]),
            );
        }
    }

    let phi = Scaled {
        phi: TestFunction::PhiRad,
        center: w.center,
        scale: w.r,
    };
    let brakke = match soft(brakke_residual(traj, &phi, t1, t2))? {
        Ok(ForcingTerm::Finite(v)) => ReportValue::Number(v),
        Ok(ForcingTerm::NotIntegrable) => ReportValue::Marker("not_integrable".into()),
        Err(m) => m,
    };
    rep.push("brakke_residual", win, "phi=phi_rad", brakke);

    let ce = soft(curvature_energy(traj, w))?;
    rep.push(
        "mass_defect_sup",
        win,
        "",
        value(&ce, |c| c.mass_defect_sup),
    );
    rep.push("curvature_energy", win, "", value(&ce, |c| c.energy));
    rep.push(
        "shrinker_energy",
        win,
        "t0=s",
        value(&soft(shrinker_energy(traj, w.s, w))?, |v| *v),
    );
    let noncon = match frame {
        Some(fr) => soft(weighted_noncon(traj, w.s, w, opts.kappa, &fr))?,
        None => Err(na()),
    };
    rep.push(
        "weighted_noncon",
        win,
        format!("kappa={};t0=s", opts.kappa),
        value(&noncon, |n| n.value),
    );

    let tau0 = opts.tau0.unwrap_or_else(|| default_tau0(traj, w));
    let density = soft(density_limit(traj, w.center, w.s, &default_taus(tau0)))?;
    rep.push(
        "gaussian_density",
        win,
        format!("tau0={tau0}"),
        value(&density, |d| d.extrapolated),
    );

    let net = traj.network_at(w.s)?;
    let varifold = DiscreteVarifold::from_network(&net, None);
    let centers: Vec<Point2> = net
        .points()
        .filter(|p| p.dist(w.center) <= 2.0 * w.r)
        .collect();
    let radii = [0.25 * w.r, 0.5 * w.r, w.r];
    rep.push(
        "mass_ratio_sup",
        win,
        "t=s",
        varifold.mass_ratio_sup(&centers, &radii),
    );

    let inside = FlowTrajectory::new(traj.within(t1, t2).cloned().collect(), traj.forcing.clone());
    let holder = match inside {
        Ok(sub) => soft(
            track_junctions(&sub, &Ball::new(w.center, w.r), &TrackConfig::default()).and_then(
                |track| {
                    let gap = default_min_gap(&track);
                    holder_exponent(&track, gap)
                },
            ),
        )?,
        Err(_) => Err(na()),
    };
    rep.push(
        "holder_exponent",
        win,
        "",
        value(&holder, |h| h.exponent.unwrap_or(f64::INFINITY)),
    );

    let interval = GraphInterval::new(0.25 * w.r, w.r, 17)?;
    for j in 1..=3 {
        let heat = match frame {
            Some(fr) => soft(heat_residual(traj, &fr, j, &interval, w))?,
            None => Err(na()),
        };
        rep.push(
            "heat_residual_raw",
            win,
            format!("j={j}"),
            value(&heat, |h| h.raw),
        );
        let normalized = match &heat {
            Ok(h) => h.normalized.map_or_else(na, ReportValue::Number),
            Err(m) => m.clone(),
        };
        rep.push("heat_residual", win, format!("j={j}"), normalized);
    }

    let slopes = match frame {
        Some(fr) => {
            soft(junction_slopes(&net, &fr).map_err(|_| Error::Fit("no triple junction".into())))?
        }
        None => Err(na()),
    };
    rep.push(
        "junction_slope_spread",
        win,
        "t=s",
        value(&slopes, |s| {
            let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        }),
    );
    Ok(rep)
}
