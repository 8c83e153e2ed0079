use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{l2_excess, Window, NOISE_FLOOR};
use crate::error::{Error, Result};
use crate::flowsim::FlowTrajectory;
use crate::netgeom::{dist_to_standard_triod, triod_directions, Network, Point2, TriodFrame};

/// Sampling interval `[a, b]` along a ray, with `samples` uniform points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphInterval {
    pub a: f64,
    pub b: f64,
    pub samples: usize,
}

impl GraphInterval {
    pub fn new(a: f64, b: f64, samples: usize) -> Result<Self> {
        if !(a > 0.0) || !(b > a) || !b.is_finite() || samples < 2 {
            return Err(Error::InvalidArgument(format!(
                "graph interval needs 0 < a < b and at least 2 samples, got [{a}, {b}] with {samples}"
            )));
        }
        Ok(GraphInterval { a, b, samples })
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.samples - 1) as f64
    }

    pub fn abscissae(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples).map(move |k| self.a + k as f64 * self.spacing())
    }

    fn scaled(&self, r: f64) -> Self {
        GraphInterval {
            a: self.a / r,
            b: self.b / r,
            samples: self.samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFailure {
    pub x: f64,
    pub reason: String,
}

/// Result of a graph extraction; failure is an expected outcome outside the
/// regular regime, not an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GraphOutcome {
    Graph(Vec<(f64, f64)>),
    Failed(GraphFailure),
}

impl GraphOutcome {
    pub fn into_samples(self) -> Result<Vec<(f64, f64)>> {
        match self {
            GraphOutcome::Graph(s) => Ok(s),
            GraphOutcome::Failed(f) => Err(Error::GraphExtraction(format!(
                "at x = {}: {}",
                f.x, f.reason
            ))),
        }
    }

    pub fn is_graph(&self) -> bool {
        matches!(self, GraphOutcome::Graph(_))
    }
}

/// Half-height of the strip in which the graph must be single valued.
const STRIP: f64 = 0.5;

/// Coordinates in which ray `j` (1, 2 or 3) of `frame` is the positive x-axis.
fn ray_coordinates(frame: &TriodFrame, j: usize) -> impl Fn(Point2) -> Point2 + '_ {
    let turn = -2.0 * PI * (j - 1) as f64 / 3.0;
    move |p| frame.to_local(p).rotate(turn)
}

/// Samples `f_j` over `interval`, where ray `j` of `frame` is the graph
/// `{(x, f_j(x))}` in the frame rotated by `-2 pi (j - 1) / 3`.
pub fn graph_extract(
    net: &Network,
    frame: &TriodFrame,
    j: usize,
    interval: &GraphInterval,
) -> Result<GraphOutcome> {
    if !(1..=3).contains(&j) {
        return Err(Error::InvalidArgument(format!(
            "ray index must be 1, 2 or 3, got {j}"
        )));
    }
    let to_ray = ray_coordinates(frame, j);
    let segments: Vec<(Point2, Point2)> = net
        .curves
        .iter()
        .flat_map(|c| c.segments())
        .map(|(p, q)| (to_ray(p), to_ray(q)))
        .collect();
    let mut out = Vec::with_capacity(interval.samples);
    for x in interval.abscissae() {
        let mut ys: Vec<f64> = Vec::new();
        for &(p, q) in &segments {
            if (p.x - x) * (q.x - x) > 0.0 {
                continue;
            }
            if p.x == q.x {
                if p.y.abs() <= STRIP || q.y.abs() <= STRIP {
                    return Ok(GraphOutcome::Failed(GraphFailure {
                        x,
                        reason: "vertical segment".into(),
                    }));
                }
                continue;
            }
            let y = p.y + (x - p.x) / (q.x - p.x) * (q.y - p.y);
            if y.abs() <= STRIP && !ys.iter().any(|&z| (z - y).abs() <= 1e-12 * (1.0 + y.abs())) {
                ys.push(y);
            }
        }
        match ys[..] {
            [y] => out.push((x, y)),
            [] => {
                return Ok(GraphOutcome::Failed(GraphFailure {
                    x,
                    reason: "no curve within the strip".into(),
                }))
            }
            _ => {
                return Ok(GraphOutcome::Failed(GraphFailure {
                    x,
                    reason: format!("{} crossings, not a graph", ys.len()),
                }))
            }
        }
    }
    Ok(GraphOutcome::Graph(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatResidual {
    /// Space-time L² norm of `f_t - f_xx` in normalized coordinates.
    pub raw: f64,
    /// Excess of the window against the given frame.
    pub mu: f64,
    /// `raw / mu`; `None` when `mu` is at the noise floor.
    pub normalized: Option<f64>,
}

/// Heat-equation defect of the graph `f_j` over the window, by centered
/// differences in time and space.
///
/// `frame` and `interval` are in world units; the residual itself is
/// measured in normalized coordinates.
pub fn heat_residual(
    traj: &FlowTrajectory,
    frame: &TriodFrame,
    j: usize,
    interval: &GraphInterval,
    w: &Window,
) -> Result<HeatResidual> {
    let mu = l2_excess(traj, w, frame)?;
    let (t1, t2) = w.t_range();
    let local = w.localize(traj, t1, t2)?;
    let lframe = w.frame_to_local(frame);
    let linterval = interval.scaled(w.r);
    let snaps: Vec<_> = local.within(0.0, 4.0).collect();
    if snaps.len() < 3 {
        return Err(Error::Resolution(format!(
            "window {w} holds {} snapshots, need 3",
            snaps.len()
        )));
    }
    let graphs = snaps
        .iter()
        .map(|s| {
            graph_extract(&s.net, &lframe, j, &linterval)?
                .into_samples()
                .map_err(|e| Error::GraphExtraction(format!("t = {}: {e}", w.to_world_time(s.t))))
        })
        .collect::<Result<Vec<_>>>()?;
    let dx = linterval.spacing();
    let mut sum = 0.0;
    for k in 1..snaps.len() - 1 {
        let span = snaps[k + 1].t - snaps[k - 1].t;
        for i in 1..linterval.samples - 1 {
            let ft = (graphs[k + 1][i].1 - graphs[k - 1][i].1) / span;
            let g = &graphs[k];
            let fxx = (g[i + 1].1 - 2.0 * g[i].1 + g[i - 1].1) / (dx * dx);
            sum += (ft - fxx).powi(2) * dx * 0.5 * span;
        }
    }
    let raw = sum.sqrt();
    Ok(HeatResidual {
        raw,
        mu,
        normalized: (mu > NOISE_FLOOR).then(|| raw / mu),
    })
}

/// Slopes `d f_j / dx` of the first segment of each arm at the junction
/// nearest `frame.xi`, indexed by ray.
pub fn junction_slopes(net: &Network, frame: &TriodFrame) -> Result<[f64; 3]> {
    let (&id, &p) = net
        .junctions
        .iter()
        .min_by(|a, b| a.1.dist(frame.xi).total_cmp(&b.1.dist(frame.xi)))
        .ok_or_else(|| Error::InvalidArgument("network has no junction".into()))?;
    let arms = net.junction_ends(id);
    if arms.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "junction {id} has {} arms",
            arms.len()
        )));
    }
    let dirs = triod_directions();
    let mut slopes = [f64::NAN; 3];
    for (ci, e) in arms {
        let c = &net.curves[ci];
        let nb = if e == 0 {
            c.nodes[1]
        } else {
            c.nodes[c.nodes.len() - 2]
        };
        let u = (nb - p).rotate(-frame.theta());
        let j = (0..3)
            .max_by(|&a, &b| u.dot(dirs[a]).total_cmp(&u.dot(dirs[b])))
            .unwrap_or(0);
        if !slopes[j].is_nan() {
            return Err(Error::InvalidArgument(format!(
                "two arms of junction {id} point along ray {}",
                j + 1
            )));
        }
        let v = u.rotate(-2.0 * PI * j as f64 / 3.0);
        slopes[j] = v.y / v.x;
    }
    Ok(slopes)
}

/// Grid points per unit of `|xi|` and extent of the sampled component.
const GAP_GRID: usize = 40;
const GAP_EXTENT: f64 = 8.0;

/// `min [dist(x, J) + dist(x, J + xi)] / |xi|` over a grid of the component of
/// `{dist(x, R_{pi/3} J) > |xi|}` on which the normal part of `xi` is largest.
pub fn two_triod_gap(frame1: &TriodFrame, frame2: &TriodFrame) -> Result<f64> {
    if (frame1.theta() - frame2.theta()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "frames must share their angle, got {} and {}",
            frame1.theta(),
            frame2.theta()
        )));
    }
    let xi = (frame2.xi - frame1.xi).rotate(-frame1.theta());
    let len = xi.norm();
    if !(len > 0.0) {
        return Err(Error::InvalidArgument("frames coincide".into()));
    }
    let dirs = triod_directions();
    let j = (0..3)
        .max_by(|&a, &b| {
            xi.dot(dirs[a].perp())
                .abs()
                .total_cmp(&xi.dot(dirs[b].perp()).abs())
        })
        .unwrap_or(0);
    let (d, n) = (dirs[j], dirs[j].perp());
    let bisectors = [PI / 3.0, PI, -PI / 3.0].map(Point2::from_angle);
    let dist_to_bisectors = |x: Point2| {
        bisectors
            .iter()
            .map(|&b| (x - b * x.dot(b).max(0.0)).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let steps = (GAP_GRID as f64 * GAP_EXTENT) as usize;
    let mut best = f64::INFINITY;
    for a in 0..=steps {
        for b in 0..=2 * steps {
            let x = (d * (a as f64) + n * (b as f64 - steps as f64)) * (len / GAP_GRID as f64);
            let nearest = (0..3)
                .max_by(|&p, &q| x.dot(dirs[p]).total_cmp(&x.dot(dirs[q])))
                .unwrap_or(0);
            if nearest != j || dist_to_bisectors(x) <= len {
                continue;
            }
            let ratio = (dist_to_standard_triod(x) + dist_to_standard_triod(x - xi)) / len;
            best = best.min(ratio);
        }
    }
    if best.is_infinite() {
        return Err(Error::Fit("sampled component is empty".into()));
    }
    Ok(best)
}
