use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{excess_samples, trapezoid_weights, SpaceTimeSamples, Window};
use crate::error::{Error, Result};
use crate::flowsim::FlowTrajectory;
use crate::netgeom::{d_metric, Network, Point2, TriodFrame};
use crate::varifold::{time_nodes, Ball};

/// Excess values at or below this are treated as quadrature noise.
pub const NOISE_FLOOR: f64 = 1e-5;

/// Search parameters of [`fit_frame_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Angle grid step is `pi / theta_div`.
    pub theta_div: usize,
    /// Center grid step is `R / xi_div`.
    pub xi_div: usize,
    /// Stopping tolerance of the local refinement, in units of `mu`.
    pub tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            theta_div: 60,
            xi_div: 20,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameFit {
    pub frame: TriodFrame,
    pub mu: f64,
    /// Best grid excess on the reduced sample set, before refinement.
    pub grid_mu: f64,
    pub evaluations: usize,
}

/// Minimizes `l2_excess` over frames with `xi` in `B_R(center)`.
pub fn fit_frame(traj: &FlowTrajectory, w: &Window) -> Result<FrameFit> {
    fit_frame_with(traj, w, &FitConfig::default())
}

pub fn fit_frame_with(traj: &FlowTrajectory, w: &Window, cfg: &FitConfig) -> Result<FrameFit> {
    if cfg.theta_div == 0 || cfg.xi_div == 0 || !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bad fit configuration {cfg:?}"
        )));
    }
    let local = w.localize_checked(traj)?;
    let samples = excess_samples(&local)?;
    if !(samples.mass() > 0.0) {
        return Err(Error::EmptyWindow(w.to_string()));
    }
    let coarse = coarse_samples(&local)?;
    let thetas: Vec<f64> = (1..=cfg.theta_div)
        .map(|k| -PI / 3.0 + k as f64 * PI / cfg.theta_div as f64)
        .filter(|&t| t <= PI / 3.0 + 1e-12)
        .collect();
    let n = cfg.xi_div as i64;
    let centers: Vec<Point2> = (-n..=n)
        .flat_map(|i| (-n..=n).map(move |j| (i, j)))
        .filter(|&(i, j)| i * i + j * j <= n * n)
        .map(|(i, j)| Point2::new(i as f64, j as f64) / cfg.xi_div as f64)
        .collect();
    let (grid_sq, grid_frame) = thetas
        .par_iter()
        .map(|&theta| {
            centers
                .iter()
                .map(|&xi| {
                    let f = TriodFrame::new(theta, xi);
                    (coarse.excess_sq(&f), f)
                })
                .fold((f64::INFINITY, TriodFrame::IDENTITY), |a, b| {
                    if b.0 < a.0 {
                        b
                    } else {
                        a
                    }
                })
        })
        .reduce(
            || (f64::INFINITY, TriodFrame::IDENTITY),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && b.1.theta() < a.1.theta()) {
                    b
                } else {
                    a
                }
            },
        );
    let evaluations = thetas.len() * centers.len();
    let (frame, mu, evals) = refine(&samples, grid_frame, cfg.tol, cfg.xi_div as f64);
    Ok(FrameFit {
        frame: w.frame_to_world(&frame),
        mu,
        grid_mu: grid_sq.max(0.0).sqrt(),
        evaluations: evaluations + evals,
    })
}

/// Local refinement only, started from `seed`.
pub fn refine_frame(
    traj: &FlowTrajectory,
    w: &Window,
    seed: &TriodFrame,
    tol: f64,
) -> Result<FrameFit> {
    let local = w.localize_checked(traj)?;
    let samples = excess_samples(&local)?;
    if !(samples.mass() > 0.0) {
        return Err(Error::EmptyWindow(w.to_string()));
    }
    let seed = w.frame_to_local(seed);
    let start = if seed.xi.norm() <= 1.0 {
        seed
    } else {
        TriodFrame::new(seed.theta(), seed.xi / seed.xi.norm())
    };
    let (frame, mu, evaluations) = refine(&samples, start, tol, 20.0);
    Ok(FrameFit {
        frame: w.frame_to_world(&frame),
        mu,
        grid_mu: samples.excess_sq(&start).sqrt(),
        evaluations,
    })
}

fn refine(
    samples: &SpaceTimeSamples,
    start: TriodFrame,
    tol: f64,
    xi_div: f64,
) -> (TriodFrame, f64, usize) {
    let objective = |v: &[f64; 3]| {
        let xi = Point2::new(v[1], v[2]);
        if xi.norm() > 1.0 {
            return f64::INFINITY;
        }
        samples
            .excess_sq(&TriodFrame::new(v[0], xi))
            .max(0.0)
            .sqrt()
    };
    let mut x = [start.theta(), start.xi.x, start.xi.y];
    let mut step = [PI / 120.0, 0.5 / xi_div, 0.5 / xi_div];
    let mut evaluations = 0;
    let mut best = objective(&x);
    // Restart from the incumbent until a fresh simplex no longer improves it.
    for _ in 0..4 {
        let (nx, fx, evals) = nelder_mead(&objective, x, step, 1e-3 * tol, 4000);
        evaluations += evals;
        let improved = fx < best - 1e-3 * tol;
        if fx <= best {
            x = nx;
            best = fx;
        }
        if !improved {
            break;
        }
        step = step.map(|s| 0.5 * s);
    }
    (
        TriodFrame::new(x[0], Point2::new(x[1], x[2])),
        best,
        evaluations,
    )
}

/// Downhill simplex minimization in three variables.
fn nelder_mead(
    f: &impl Fn(&[f64; 3]) -> f64,
    x0: [f64; 3],
    step: [f64; 3],
    ftol: f64,
    max_eval: usize,
) -> ([f64; 3], f64, usize) {
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((x0, f(&x0)));
    for i in 0..3 {
        let mut x = x0;
        x[i] += step[i];
        simplex.push((x, f(&x)));
    }
    let mut evals = 4;
    let lerp = |a: &[f64; 3], b: &[f64; 3], s: f64| -> [f64; 3] {
        std::array::from_fn(|i| a[i] + s * (b[i] - a[i]))
    };
    while evals < max_eval {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (lo, hi) = (simplex[0].1, simplex[3].1);
        let size = (1..4)
            .map(|k| {
                (0..3)
                    .map(|i| (simplex[k].0[i] - simplex[0].0[i]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if (hi - lo).abs() <= ftol && size <= 1e-8 || size <= 1e-14 {
            break;
        }
        let centroid: [f64; 3] =
            std::array::from_fn(|i| (simplex[0].0[i] + simplex[1].0[i] + simplex[2].0[i]) / 3.0);
        let worst = simplex[3].0;
        let xr = lerp(&centroid, &worst, -1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = lerp(&centroid, &worst, -2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[3].1 {
                let xc = lerp(&centroid, &xr, 0.5);
                (xc, f(&xc))
            } else {
                let xc = lerp(&centroid, &worst, 0.5);
                (xc, f(&xc))
            };
            evals += 1;
            if fc < simplex[3].1.min(fr) {
                simplex[3] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for k in 1..4 {
                    let x = lerp(&best, &simplex[k].0, 0.5);
                    simplex[k] = (x, f(&x));
                }
                evals += 3;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, simplex[0].1, evals)
}

/// A reduced sample set for the grid stage: at most nine time nodes and a
/// few hundred lumped atoms per node.
fn coarse_samples(local: &FlowTrajectory) -> Result<SpaceTimeSamples> {
    let all = time_nodes(local, 0.0, 4.0)?;
    let n = all.len();
    let picks = 9.min(n);
    let mut times: Vec<f64> = (0..picks)
        .map(|k| all[(k * (n - 1) + (picks - 1) / 2) / (picks - 1).max(1)])
        .collect();
    times.dedup();
    let mut out = SpaceTimeSamples::default();
    for (c, &t) in trapezoid_weights(&times).iter().zip(&times) {
        lump(&*local.network_at(t)?, *c, &mut out);
    }
    Ok(out)
}

fn lump(net: &Network, weight: f64, out: &mut SpaceTimeSamples) {
    let ball = Ball::new(Point2::ZERO, 4.0);
    let pieces: Vec<Vec<(Point2, f64)>> = net
        .curves
        .iter()
        .map(|c| {
            c.segments()
                .filter_map(|(a, b)| {
                    let (s0, s1) = ball.clip_segment(a, b)?;
                    let (p, q) = (a.lerp(b, s0), a.lerp(b, s1));
                    Some(((p + q) * 0.5, p.dist(q)))
                })
                .collect()
        })
        .collect();
    let total: usize = pieces.iter().map(Vec::len).sum();
    let group = total.div_ceil(300).max(1);
    for curve in pieces {
        for chunk in curve.chunks(group) {
            let len: f64 = chunk.iter().map(|&(_, l)| l).sum();
            if len > 0.0 {
                let c = chunk.iter().fold(Point2::ZERO, |acc, &(x, l)| acc + x * l) / len;
                out.x.push(c);
                out.w.push(len * weight);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEntry {
    pub scale: f64,
    pub frame: TriodFrame,
    pub mu: f64,
    /// `d_{s_k}(frame_k, frame_0)`.
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub center: Point2,
    pub s: f64,
    pub entries: Vec<DecayEntry>,
    /// Least-squares slope of `ln mu` against `ln scale`; `None` when every
    /// excess sits at the noise floor.
    pub exponent: Option<f64>,
    /// Smallest `C` with `drift_k <= C (s_k / s_0)^zeta mu_0` for all `k`.
    pub drift_constant: Option<f64>,
    pub zeta: f64,
}

/// Fitted frames and excesses on the windows `(center, s, s_k)`.
pub fn decay_profile(
    traj: &FlowTrajectory,
    center: Point2,
    s: f64,
    scales: &[f64],
) -> Result<DecayProfile> {
    if scales.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "decay profile needs at least 3 scales, got {}",
            scales.len()
        )));
    }
    if scales.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "scales must be positive, got {scales:?}"
        )));
    }
    if let Some(p) = scales
        .windows(2)
        .find(|p| p[1] > 0.5 * p[0] * (1.0 + 1e-12))
    {
        return Err(Error::InvalidArgument(format!(
            "consecutive scales must shrink by at least 1/2, got {} then {}",
            p[0], p[1]
        )));
    }
    let windows = scales
        .iter()
        .map(|&r| Window::new(center, s, r))
        .collect::<Result<Vec<_>>>()?;
    for w in &windows {
        w.check(traj)?;
    }
    let fits = windows
        .par_iter()
        .map(|w| fit_frame(traj, w))
        .collect::<Result<Vec<_>>>()?;
    let frame0 = fits[0].frame;
    let entries = scales
        .iter()
        .zip(&fits)
        .map(|(&scale, fit)| {
            Ok(DecayEntry {
                scale,
                frame: fit.frame,
                mu: fit.mu,
                drift: d_metric(&fit.frame, &frame0, scale)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let exponent = if entries.iter().all(|e| e.mu <= NOISE_FLOOR) {
        None
    } else {
        let pts: Vec<(f64, f64)> = entries
            .iter()
            .map(|e| (e.scale.ln(), e.mu.max(f64::MIN_POSITIVE).ln()))
            .collect();
        Some(least_squares(&pts).0)
    };
    let zeta = traj.forcing.zeta();
    let mu0 = entries[0].mu;
    let drift_constant = (mu0 > NOISE_FLOOR).then(|| {
        entries[1..]
            .iter()
            .map(|e| e.drift / ((e.scale / entries[0].scale).powf(zeta) * mu0))
            .fold(0.0, f64::max)
    });
    Ok(DecayProfile {
        center,
        s,
        entries,
        exponent,
        drift_constant,
        zeta,
    })
}

/// Slope and intercept of the least-squares line through `pts`.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
