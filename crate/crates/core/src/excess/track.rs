use serde::{Deserialize, Serialize};

use super::fit::least_squares;
use crate::error::{Error, Result};
use crate::flowsim::FlowTrajectory;
use crate::monotone::{gaussian_density, TRUNCATION};
use crate::netgeom::Point2;
use crate::varifold::Ball;

/// Junction positions over time. Gap entries carry NaN positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JunctionTrack {
    pub times: Vec<f64>,
    pub positions: Vec<Point2>,
    pub gaps: Vec<bool>,
}

impl JunctionTrack {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `(t, position)` of the identified samples.
    pub fn samples(&self) -> impl Iterator<Item = (f64, Point2)> + '_ {
        self.times
            .iter()
            .zip(&self.positions)
            .zip(&self.gaps)
            .filter(|(_, &g)| !g)
            .map(|((&t, &p), _)| (t, p))
    }
}

/// Density fallback used when snapshots carry no junction table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    /// Density scale; `None` picks `(radius / 8)^2`.
    pub tau: Option<f64>,
    /// Grid points per side of the argmax search.
    pub grid: usize,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            tau: None,
            grid: 21,
        }
    }
}

/// Density threshold separating junction points from regular ones.
const JUNCTION_DENSITY: f64 = 1.25;

/// The junction inside `region` at every snapshot.
///
/// Junction tables are used when present (the one nearest the region center
/// wins). Otherwise the point of largest Gaussian density is taken, and a
/// gap is recorded when that density stays below 1.25.
pub fn track_junctions(
    traj: &FlowTrajectory,
    region: &Ball,
    cfg: &TrackConfig,
) -> Result<JunctionTrack> {
    if !(region.radius > 0.0) || !region.center.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bad tracking region {region:?}"
        )));
    }
    if cfg.grid < 2 {
        return Err(Error::InvalidArgument(
            "tracking grid needs at least 2 points per side".into(),
        ));
    }
    let tau = cfg.tau.unwrap_or((region.radius / 8.0).powi(2));
    let mut track = JunctionTrack {
        times: Vec::new(),
        positions: Vec::new(),
        gaps: Vec::new(),
    };
    for snap in traj.snapshots() {
        let found = if snap.net.junctions.is_empty() {
            density_argmax(traj, region, snap.t, tau, cfg.grid)?
        } else {
            snap.net
                .junctions
                .values()
                .copied()
                .filter(|p| region.contains(*p))
                .min_by(|a, b| a.dist(region.center).total_cmp(&b.dist(region.center)))
        };
        track.times.push(snap.t);
        track
            .positions
            .push(found.unwrap_or(Point2::new(f64::NAN, f64::NAN)));
        track.gaps.push(found.is_none());
    }
    Ok(track)
}

fn density_argmax(
    traj: &FlowTrajectory,
    region: &Ball,
    s: f64,
    tau: f64,
    n: usize,
) -> Result<Option<Point2>> {
    if !traj.contains_time(s - tau) {
        return Ok(None);
    }
    let r_trunc = TRUNCATION * tau.sqrt();
    let density = |y: Point2| gaussian_density(traj, y, s, tau, r_trunc);
    let mut best = (f64::NEG_INFINITY, region.center);
    let search = |center: Point2, half: f64, best: &mut (f64, Point2)| -> Result<()> {
        for i in 0..n {
            for j in 0..n {
                let off = Point2::new(i as f64, j as f64) * (2.0 * half / (n - 1) as f64)
                    - Point2::new(half, half);
                let y = center + off;
                if !region.contains(y) {
                    continue;
                }
                let d = density(y)?;
                if d > best.0 {
                    *best = (d, y);
                }
            }
        }
        Ok(())
    };
    search(region.center, region.radius, &mut best)?;
    let cell = 2.0 * region.radius / (n - 1) as f64;
    let coarse = best.1;
    search(coarse, cell, &mut best)?;
    Ok((best.0 >= JUNCTION_DENSITY).then_some(best.1))
}

/// Least-squares Hölder fit `|a(t1) - a(t2)| ~ C |t1 - t2|^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    /// `None` when every pair moved less than the floor ("infinite regularity").
    pub exponent: Option<f64>,
    pub constant: Option<f64>,
    pub pairs_used: usize,
    pub pairs_below_floor: usize,
    pub pairs_too_close: usize,
}

/// Pairs whose displacement is below this are excluded from the fit.
const DISPLACEMENT_FLOOR: f64 = 1e-12;

/// Four times the median sample spacing of the track.
pub fn default_min_gap(track: &JunctionTrack) -> f64 {
    let mut gaps: Vec<f64> = track.times.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.is_empty() {
        return 0.0;
    }
    gaps.sort_by(f64::total_cmp);
    4.0 * gaps[gaps.len() / 2]
}

pub fn holder_exponent(track: &JunctionTrack, t_min_gap: f64) -> Result<HolderFit> {
    let pts: Vec<(f64, Point2)> = track.samples().collect();
    if pts.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "Hölder fit needs at least 10 identified junction samples, got {}",
            pts.len()
        )));
    }
    let mut logs = Vec::new();
    let (mut below, mut close) = (0, 0);
    for (i, &(ti, pi)) in pts.iter().enumerate() {
        for &(tj, pj) in &pts[i + 1..] {
            let dt = (tj - ti).abs();
            if dt < t_min_gap {
                close += 1;
                continue;
            }
            let da = pi.dist(pj);
            if da <= DISPLACEMENT_FLOOR {
                below += 1;
                continue;
            }
            logs.push((dt.ln(), da.ln()));
        }
    }
    if logs.is_empty() && below > 0 {
        return Ok(HolderFit {
            exponent: None,
            constant: None,
            pairs_used: 0,
            pairs_below_floor: below,
            pairs_too_close: close,
        });
    }
    let distinct = logs.iter().any(|&(x, _)| (x - logs[0].0).abs() > 1e-12);
    if logs.len() < 2 || !distinct {
        return Err(Error::Fit(format!(
            "too few valid pairs for a Hölder fit ({})",
            logs.len()
        )));
    }
    let (slope, intercept) = least_squares(&logs);
    Ok(HolderFit {
        exponent: Some(slope),
        constant: Some(intercept.exp()),
        pairs_used: logs.len(),
        pairs_below_floor: below,
        pairs_too_close: close,
    })
}
