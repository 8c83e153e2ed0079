use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{default_taus, density_limit, gaussian_density, DensityProfile, TRUNCATION};
use crate::error::{Error, Result};
use crate::flowsim::FlowTrajectory;
use crate::netgeom::{project_to_segment, Network, Point2};
use crate::varifold::{to_varifold, Ball};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TangentKind {
    Empty,
    StaticLine,
    StaticTripleJunction,
    StaticDensityGe2,
    QuasiStatic,
    Shrinking,
    Unresolved,
}

impl TangentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TangentKind::Empty => "empty",
            TangentKind::StaticLine => "static_line",
            TangentKind::StaticTripleJunction => "static_triple_junction",
            TangentKind::StaticDensityGe2 => "static_density_ge2",
            TangentKind::QuasiStatic => "quasi_static",
            TangentKind::Shrinking => "shrinking",
            TangentKind::Unresolved => "unresolved",
        }
    }

    pub fn is_static(self) -> bool {
        matches!(
            self,
            TangentKind::Empty
                | TangentKind::StaticLine
                | TangentKind::StaticTripleJunction
                | TangentKind::StaticDensityGe2
        )
    }
}

impl std::fmt::Display for TangentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// Largest Gaussian scale; the profile uses `tau0, tau0 / 2, tau0 / 4`
    /// and staticity is judged at `lambda = sqrt(tau0)`.
    pub tau0: f64,
    /// Hausdorff distance of the rescaled supports at or below which the
    /// flow counts as static.
    pub static_tol: f64,
    /// Slack on density comparisons: `2 - tol` threshold, stratification
    /// cutoff `1 + tol`, spine membership within `tol / 2` of the center.
    pub density_tol: f64,
    /// Density loss across `s` that marks a quasi-static tangent.
    pub drop_tol: f64,
    /// Maximum number of support points probed for the spine.
    pub spine_samples: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            tau0: 0.01,
            static_tol: 0.05,
            density_tol: 0.1,
            drop_tol: 0.25,
            spine_samples: 64,
        }
    }
}

impl ClassifyConfig {
    pub fn with_tau0(tau0: f64) -> Self {
        ClassifyConfig {
            tau0,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentLabel {
    pub kind: TangentKind,
    pub theta_star: f64,
    pub static_score: f64,
    pub spine_dim_estimate: u8,
    /// Hausdorff distance behind `static_score`.
    pub hausdorff: f64,
    pub profile: DensityProfile,
}

impl TangentLabel {
    /// Stratum index: `2 + spine dimension` for static tangents, the spine
    /// dimension otherwise.
    pub fn stratum_dim(&self) -> u8 {
        if self.kind.is_static() {
            2 + self.spine_dim_estimate
        } else {
            self.spine_dim_estimate
        }
    }
}

/// Points along every segment, at most `step` apart.
fn sample_segments(
    segs: &[(Point2, Point2)],
    step: f64,
    keep: impl Fn(Point2) -> bool,
) -> Vec<Point2> {
    let mut out = Vec::new();
    for &(a, b) in segs {
        let n = ((a.dist(b) / step).ceil() as usize).max(1);
        for k in 0..=n {
            let p = a.lerp(b, k as f64 / n as f64);
            if keep(p) {
                out.push(p);
            }
        }
    }
    out
}

fn dist_to_segments(p: Point2, segs: &[(Point2, Point2)]) -> f64 {
    segs.iter()
        .map(|&(a, b)| project_to_segment(p, a, b).1.dist(p))
        .fold(f64::INFINITY, f64::min)
}

/// Hausdorff distance, within the unit ball, between the flow at rescaled
/// times `-1` and `-1/4` about `(y, s)` at scale `lambda`.
///
/// Each support inside `B_1` is compared against the whole of the other; the
/// result is capped at 1.
pub fn rescaled_hausdorff(traj: &FlowTrajectory, y: Point2, s: f64, lambda: f64) -> Result<f64> {
    let nets = [
        traj.network_at(s - lambda * lambda)?,
        traj.network_at(s - 0.25 * lambda * lambda)?,
    ];
    let local = |net: &Network| -> Vec<(Point2, Point2)> {
        net.curves
            .iter()
            .flat_map(|c| c.segments())
            .map(|(a, b)| ((a - y) / lambda, (b - y) / lambda))
            .filter(|&(a, b)| project_to_segment(Point2::ZERO, a, b).1.norm() <= 3.0)
            .collect()
    };
    let segs = [local(&nets[0]), local(&nets[1])];
    let mut worst: f64 = 0.0;
    for (i, own) in segs.iter().enumerate() {
        let other = &segs[1 - i];
        let pts = sample_segments(own, 0.01, |p| p.norm() <= 1.0);
        if pts.is_empty() {
            continue;
        }
        if other.is_empty() {
            return Ok(1.0);
        }
        let d = pts
            .par_iter()
            .map(|&p| dist_to_segments(p, other))
            .reduce(|| 0.0, f64::max);
        worst = worst.max(d);
    }
    Ok(worst.min(1.0))
}

fn spine_dimension(
    traj: &FlowTrajectory,
    y: Point2,
    s: f64,
    lambda: f64,
    tau: f64,
    cfg: &ClassifyConfig,
) -> Result<u8> {
    let r = TRUNCATION * tau.sqrt();
    let reference = gaussian_density(traj, y, s, tau, r)?;
    if reference < 0.5 {
        return Ok(2);
    }
    let net = traj.network_at(s - tau)?;
    let support: Vec<Point2> = to_varifold(&net, Some(&Ball::new(y, lambda)))
        .atoms
        .iter()
        .map(|a| a.center)
        .collect();
    let stride = support.len().div_ceil(cfg.spine_samples.max(1)).max(1);
    let probes: Vec<Point2> = support.into_iter().step_by(stride).collect();
    let densities = probes
        .par_iter()
        .map(|&p| gaussian_density(traj, p, s, tau, r))
        .collect::<Result<Vec<f64>>>()?;
    let mut spine = vec![Point2::ZERO];
    spine.extend(
        probes
            .iter()
            .zip(&densities)
            .filter(|(_, &d)| d >= reference - 0.5 * cfg.density_tol)
            .map(|(&p, _)| (p - y) / lambda),
    );
    let reach = spine.iter().map(|p| p.norm()).fold(0.0, f64::max);
    if reach < 0.5 {
        return Ok(0);
    }
    let n = spine.len() as f64;
    let mean = spine.iter().fold(Point2::ZERO, |a, &p| a + p) / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &spine {
        let d = *p - mean;
        sxx += d.x * d.x / n;
        sxy += d.x * d.y / n;
        syy += d.y * d.y / n;
    }
    let half_trace = 0.5 * (sxx + syy);
    let minor = half_trace - (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
    Ok(if minor.max(0.0).sqrt() < 0.1 { 1 } else { 2 })
}

/// Labels the tangent flow at `(y, s)` from its density profile, the
/// staticity of the rescaled supports and an estimate of its spine.
pub fn classify_tangent(
    traj: &FlowTrajectory,
    y: Point2,
    s: f64,
    cfg: &ClassifyConfig,
) -> Result<TangentLabel> {
    if !(cfg.tau0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau0 must be positive, got {}",
            cfg.tau0
        )));
    }
    let taus = default_taus(cfg.tau0);
    let profile = density_limit(traj, y, s, &taus)?;
    let theta = profile.extrapolated;
    let lambda = cfg.tau0.sqrt();
    let hausdorff = rescaled_hausdorff(traj, y, s, lambda)?;
    let static_score = cfg.static_tol / (cfg.static_tol + hausdorff);
    let is_static = hausdorff <= cfg.static_tol;
    let tau_last = taus[taus.len() - 1];
    let spine = spine_dimension(traj, y, s, lambda, tau_last, cfg)?;

    let dropped = {
        let later = s + cfg.tau0;
        if traj.contains_time(later - tau_last) {
            let after = gaussian_density(traj, y, later, tau_last, TRUNCATION * tau_last.sqrt())?;
            profile.values[profile.values.len() - 1] - after > cfg.drop_tol
        } else {
            false
        }
    };

    let tol = cfg.density_tol;
    let kind = if theta < 0.5 {
        TangentKind::Empty
    } else if is_static && dropped {
        TangentKind::QuasiStatic
    } else if is_static {
        if theta < 1.25 {
            TangentKind::StaticLine
        } else if theta < 1.75 {
            if (1.4..=1.6).contains(&theta) {
                TangentKind::StaticTripleJunction
            } else {
                TangentKind::Unresolved
            }
        } else if theta >= 2.0 - tol {
            TangentKind::StaticDensityGe2
        } else {
            TangentKind::Unresolved
        }
    } else if theta > 1.0 + tol {
        TangentKind::Shrinking
    } else {
        TangentKind::Unresolved
    };
    Ok(TangentLabel {
        kind,
        theta_star: theta,
        static_score,
        spine_dim_estimate: spine,
        hausdorff,
        profile,
    })
}

/// Box `[x0, x1] x [y0, y1]` split into `nx * ny` cells, sampled at `nt`
/// evenly spaced times in `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeGrid {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub t: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
}

impl SpacetimeGrid {
    /// Square box of half-width `r` about `center`, times `[t0, t1]`.
    pub fn around(center: Point2, r: f64, t: (f64, f64), n: (usize, usize, usize)) -> Self {
        SpacetimeGrid {
            x: (center.x - r, center.x + r),
            y: (center.y - r, center.y + r),
            t,
            nx: n.0,
            ny: n.1,
            nt: n.2,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        if self.nt <= 1 {
            return vec![self.t.1];
        }
        (0..self.nt)
            .map(|k| self.t.0 + (self.t.1 - self.t.0) * k as f64 / (self.nt - 1) as f64)
            .collect()
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            (self.x.1 - self.x.0) / self.nx as f64,
            (self.y.1 - self.y.0) / self.ny as f64,
        )
    }

    pub fn time_step(&self) -> f64 {
        if self.nt <= 1 {
            0.0
        } else {
            (self.t.1 - self.t.0) / (self.nt - 1) as f64
        }
    }

    fn cell(&self, p: Point2) -> Option<(usize, usize)> {
        let (dx, dy) = self.cell_size();
        let i = ((p.x - self.x.0) / dx).floor();
        let j = ((p.y - self.y.0) / dy).floor();
        // Points on the far edge belong to the last cell.
        let i = if p.x == self.x.1 {
            self.nx as f64 - 1.0
        } else {
            i
        };
        let j = if p.y == self.y.1 {
            self.ny as f64 - 1.0
        } else {
            j
        };
        (i >= 0.0 && j >= 0.0 && i < self.nx as f64 && j < self.ny as f64)
            .then_some((i as usize, j as usize))
    }

    fn validate(&self) -> Result<()> {
        let ok = self.nx > 0
            && self.ny > 0
            && self.nt > 0
            && self.x.1 > self.x.0
            && self.y.1 > self.y.0
            && self.t.1 >= self.t.0
            && [self.x.0, self.x.1, self.y.0, self.y.1, self.t.0, self.t.1]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("malformed grid {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumPoint {
    pub y: Point2,
    pub s: f64,
    pub label: TangentLabel,
    pub d: u8,
}

/// Space-time points of the grid whose density exceeds `1 + tol`, each with
/// its tangent label.
///
/// Per grid time, the support point of highest density in each cell is a
/// candidate; candidates dominated by a neighboring cell are dropped before
/// classification.
pub fn stratify(
    traj: &FlowTrajectory,
    grid: &SpacetimeGrid,
    cfg: &ClassifyConfig,
) -> Result<Vec<StratumPoint>> {
    grid.validate()?;
    let tau = 0.25 * cfg.tau0;
    let r = TRUNCATION * tau.sqrt();
    let threshold = 1.0 + cfg.density_tol;
    let per_time = grid
        .times()
        .into_par_iter()
        .map(|s| -> Result<Vec<StratumPoint>> {
            let net = traj.network_at(s - tau)?;
            let mut pts: Vec<Point2> = net.points().collect();
            pts.extend(net.junctions.values().copied());
            let mut best: Vec<Option<(f64, Point2)>> = vec![None; grid.nx * grid.ny];
            for p in pts {
                let Some((i, j)) = grid.cell(p) else { continue };
                let d = gaussian_density(traj, p, s, tau, r)?;
                let slot = &mut best[j * grid.nx + i];
                if slot.map_or(true, |(b, _)| d > b) {
                    *slot = Some((d, p));
                }
            }
            let mut out = Vec::new();
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let Some((d, p)) = best[j * grid.nx + i] else {
                        continue;
                    };
                    if d < threshold {
                        continue;
                    }
                    let dominated = (j.saturating_sub(1)..=(j + 1).min(grid.ny - 1)).any(|jj| {
                        (i.saturating_sub(1)..=(i + 1).min(grid.nx - 1)).any(|ii| {
                            (ii, jj) != (i, j)
                                && best[jj * grid.nx + ii].is_some_and(|(o, _)| o > d)
                        })
                    });
                    if dominated {
                        continue;
                    }
                    let label = classify_tangent(traj, p, s, cfg)?;
                    if label.theta_star >= threshold {
                        out.push(StratumPoint {
                            y: p,
                            s,
                            d: label.stratum_dim(),
                            label,
                        });
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_time.into_iter().flatten().collect())
}

/// Groups points that are within one grid step of each other in space and
/// time (transitively); returns index groups in order of first appearance.
pub fn merge_adjacent(points: &[StratumPoint], dx: f64, dy: f64, dt: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let slack = 1.0 + 1e-9;
    for a in 0..n {
        for b in a + 1..n {
            let (p, q) = (&points[a], &points[b]);
            if (p.y.x - q.y.x).abs() <= dx * slack
                && (p.y.y - q.y.y).abs() <= dy * slack
                && (p.s - q.s).abs() <= dt * slack
            {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if index[r] == usize::MAX {
            index[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index[r]].push(i);
    }
    groups
}

/// One point per cluster of same-label points adjacent on `grid`: the one of
/// largest `theta_star`. Clusters are ordered by first appearance.
pub fn representatives(points: &[StratumPoint], grid: &SpacetimeGrid) -> Vec<StratumPoint> {
    let (dx, dy) = grid.cell_size();
    let dt = grid.time_step();
    let mut kinds: Vec<TangentKind> = Vec::new();
    for p in points {
        if !kinds.contains(&p.label.kind) {
            kinds.push(p.label.kind);
        }
    }
    let mut picked: Vec<(usize, usize)> = Vec::new();
    for kind in kinds {
        let idx: Vec<usize> = (0..points.len())
            .filter(|&i| points[i].label.kind == kind)
            .collect();
        let subset: Vec<StratumPoint> = idx.iter().map(|&i| points[i].clone()).collect();
        for group in merge_adjacent(&subset, dx, dy, dt) {
            let best = group
                .iter()
                .copied()
                .reduce(|a, b| {
                    if subset[b].label.theta_star > subset[a].label.theta_star {
                        b
                    } else {
                        a
                    }
                })
                .expect("groups are nonempty");
            picked.push((idx[group[0]], idx[best]));
        }
    }
    picked.sort_unstable();
    picked.into_iter().map(|(_, i)| points[i].clone()).collect()
}
