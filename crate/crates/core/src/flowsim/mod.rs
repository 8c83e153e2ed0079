//! Front-tracking integrator for `v = h + u^perp` on networks with triple
//! junctions.
//!
//! Each step solves one tridiagonal system per curve (implicit in the
//! arclength Laplacian, explicit in the forcing and in the metric
//! coefficients) with curve ends held fixed, then moves every junction to
//! the Fermat point of its three neighboring nodes so that the three
//! discrete unit tangents balance.

mod events;
mod forcing;
pub mod presets;
mod regrid;
mod scenario;
mod trajectory;
mod tridiag;

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::netgeom::{validate, Curve, EndTag, JunctionId, Network, Point2};

pub use events::{detect_events, Event, EventRecord};
pub use forcing::{ForcingField, ForcingKind, ParabolicMap};
pub use regrid::{needs_regrid, regrid, spacing_bounds};
pub use scenario::{Scenario, ScenarioConfig};
pub use trajectory::{FlowTrajectory, Snapshot};

/// Gaps below this are treated as collapsed.
pub const MIN_GAP: f64 = 1e-14;

/// Node count above which curves are advanced in parallel.
const PARALLEL_NODES: usize = 4096;

/// Arclength second difference at `cur` given its neighbors.
#[inline]
fn second_difference(prev: Point2, cur: Point2, next: Point2) -> (Point2, f64, f64) {
    let a = cur.dist(prev);
    let b = next.dist(cur);
    let h = ((next - cur) / b - (cur - prev) / a) * (2.0 / (a + b));
    (h, a, b)
}

/// Curvature vectors at the interior nodes of `curve` (every node of a
/// closed curve).
pub fn discrete_curvature(curve: &Curve) -> Result<Vec<Point2>> {
    let n = curve.nodes.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "discrete curvature needs at least 3 nodes, got {n}"
        )));
    }
    let closed = curve.is_closed();
    let range = if closed { 0..n } else { 1..n - 1 };
    range
        .map(|i| {
            let prev = curve.nodes[(i + n - 1) % n];
            let next = curve.nodes[(i + 1) % n];
            let (h, a, b) = second_difference(prev, curve.nodes[i], next);
            if a < MIN_GAP || b < MIN_GAP {
                return Err(Error::DegenerateSpacing {
                    curve: 0,
                    node: i,
                    gap: a.min(b),
                });
            }
            Ok(h)
        })
        .collect()
}

/// Normal part of `u` with respect to the unit tangent `tau`.
#[inline]
fn normal_part(u: Point2, tau: Point2) -> Point2 {
    u - tau * u.dot(tau)
}

fn advance_curve(
    ci: usize,
    curve: &Curve,
    forcing: &ForcingField,
    t: f64,
    dt: f64,
) -> Result<Curve> {
    let n = curve.nodes.len();
    let closed = curve.is_closed();
    let nodes = &curve.nodes;
    let (first, count) = if closed {
        (0, n)
    } else {
        (1, n.saturating_sub(2))
    };
    if closed && n < 3 {
        return Err(Error::InvalidArgument(format!(
            "closed curve {ci} has fewer than 3 nodes"
        )));
    }
    if count == 0 {
        return Ok(curve.clone());
    }

    let mut lower = vec![0.0; count];
    let mut diag = vec![0.0; count];
    let mut upper = vec![0.0; count];
    let mut rhs = vec![Point2::ZERO; count];
    let forced = !forcing.is_zero();
    for k in 0..count {
        let i = first + k;
        let prev = nodes[(i + n - 1) % n];
        let cur = nodes[i];
        let next = nodes[(i + 1) % n];
        let a = cur.dist(prev);
        let b = next.dist(cur);
        if a < MIN_GAP || b < MIN_GAP {
            return Err(Error::DegenerateSpacing {
                curve: ci,
                node: i,
                gap: a.min(b),
            });
        }
        let l = -dt * 2.0 / (a * (a + b));
        let u = -dt * 2.0 / (b * (a + b));
        lower[k] = l;
        upper[k] = u;
        diag[k] = 1.0 - l - u;
        let mut r = cur;
        if forced {
            let tau = ((cur - prev) / a + (next - cur) / b)
                .normalized()
                .unwrap_or_default();
            r += normal_part(forcing.eval(cur, t), tau) * dt;
        }
        rhs[k] = r;
    }

    let solved = if closed {
        tridiag::solve_cyclic(&lower, &diag, &upper, &rhs)
    } else {
        rhs[0] -= nodes[0] * lower[0];
        rhs[count - 1] -= nodes[n - 1] * upper[count - 1];
        tridiag::solve(&lower, &diag, &upper, &rhs)
    }
    .ok_or_else(|| Error::SolveFailed {
        curve: ci,
        reason: "vanishing pivot".into(),
    })?;
    if solved.iter().any(|p| !p.is_finite()) {
        return Err(Error::SolveFailed {
            curve: ci,
            reason: "non-finite solution".into(),
        });
    }

    let mut out = curve.clone();
    if closed {
        out.nodes = solved;
        return Ok(out);
    }
    out.nodes[1..n - 1].copy_from_slice(&solved);
    for (e, tag) in curve.ends.iter().enumerate() {
        if *tag != EndTag::Free {
            continue;
        }
        let (end, nb) = if e == 0 { (0, 1) } else { (n - 1, n - 2) };
        if let Some(tau) = (nodes[nb] - nodes[end]).normalized() {
            let moved = out.nodes[nb] - nodes[nb];
            out.nodes[end] = nodes[end] + normal_part(moved, tau);
        }
    }
    Ok(out)
}

/// Point minimizing the summed distance to `pts`, iterated from `start`.
///
/// At the minimizer the three unit vectors toward `pts` sum to zero (when all
/// angles of the triangle are below 120 degrees).
pub fn fermat_point(pts: &[Point2; 3], start: Point2) -> Point2 {
    let cost = |p: Point2| pts.iter().map(|q| q.dist(p)).sum::<f64>();
    let mut p = start;
    if pts.iter().any(|q| q.dist(p) < MIN_GAP) {
        p = (pts[0] + pts[1] + pts[2]) / 3.0;
    }
    let mut f = cost(p);
    for _ in 0..100 {
        let mut g = Point2::ZERO;
        let (mut hxx, mut hxy, mut hyy) = (0.0, 0.0, 0.0);
        let mut degenerate = false;
        for q in pts {
            let d = q.dist(p);
            if d < MIN_GAP {
                degenerate = true;
                break;
            }
            let u = (*q - p) / d;
            g += u;
            hxx += (1.0 - u.x * u.x) / d;
            hxy += -u.x * u.y / d;
            hyy += (1.0 - u.y * u.y) / d;
        }
        if degenerate || g.norm() <= 1e-15 {
            break;
        }
        let det = hxx * hyy - hxy * hxy;
        let mut step = if det.abs() > 1e-300 {
            Point2::new((hyy * g.x - hxy * g.y) / det, (hxx * g.y - hxy * g.x) / det)
        } else {
            g * 1e-3
        };
        let mut accepted = false;
        for _ in 0..40 {
            let cand = p + step;
            let fc = cost(cand);
            if fc <= f {
                p = cand;
                f = fc;
                accepted = true;
                break;
            }
            step = step * 0.5;
        }
        if !accepted {
            break;
        }
    }
    p
}

/// Index of the node adjacent to end `e` of `curve`.
#[inline]
fn neighbor_index(curve: &Curve, e: usize) -> usize {
    if e == 0 {
        1
    } else {
        curve.nodes.len() - 2
    }
}

/// Moves every triple junction to the Fermat point of its neighbors.
pub fn relax_junctions(net: &mut Network) {
    let ids: Vec<JunctionId> = net.junctions.keys().copied().collect();
    for id in ids {
        let ends = net.junction_ends(id);
        if ends.len() != 3 || ends.iter().any(|&(c, _)| net.curves[c].nodes.len() < 2) {
            continue;
        }
        let nb = [0, 1, 2].map(|k| {
            let (c, e) = ends[k];
            net.curves[c].nodes[neighbor_index(&net.curves[c], e)]
        });
        let p = fermat_point(&nb, net.junctions[&id]);
        net.junctions.insert(id, p);
        for (c, e) in ends {
            let curve = &mut net.curves[c];
            let idx = if e == 0 { 0 } else { curve.nodes.len() - 1 };
            curve.nodes[idx] = p;
        }
    }
}

/// Norm of the sum of the three discrete unit tangents at each junction.
pub fn herring_residuals(net: &Network) -> BTreeMap<JunctionId, f64> {
    net.junctions
        .iter()
        .map(|(&id, &p)| {
            let sum = net
                .junction_ends(id)
                .into_iter()
                .filter_map(|(c, e)| {
                    let curve = &net.curves[c];
                    (curve.nodes[neighbor_index(curve, e)] - p).normalized()
                })
                .fold(Point2::ZERO, |acc, u| acc + u);
            (id, sum.norm())
        })
        .collect()
}

/// One time step from `t` to `t + dt`.
pub fn step(net: &Network, forcing: &ForcingField, t: f64, dt: f64) -> Result<Network> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let advance = |(ci, c): (usize, &Curve)| advance_curve(ci, c, forcing, t, dt);
    let curves = if net.node_count() > PARALLEL_NODES {
        net.curves
            .par_iter()
            .enumerate()
            .map(advance)
            .collect::<Result<Vec<_>>>()?
    } else {
        net.curves
            .iter()
            .enumerate()
            .map(advance)
            .collect::<Result<Vec<_>>>()?
    };
    let mut out = Network::new(curves, net.junctions.clone());
    relax_junctions(&mut out);
    Ok(out)
}

fn clamped_positions(net: &Network) -> Vec<(usize, usize, Point2)> {
    let mut out = Vec::new();
    for (ci, c) in net.curves.iter().enumerate() {
        for (e, tag) in c.ends.iter().enumerate() {
            if *tag == EndTag::Clamped {
                out.push((ci, e, if e == 0 { c.first() } else { c.last() }));
            }
        }
    }
    out
}

/// Integrates a scenario, recording snapshots and halting at the first event.
pub fn run(scenario: &Scenario) -> Result<FlowTrajectory> {
    scenario.validate()?;
    let dt = scenario.dt;
    let t0 = scenario.t_start;
    let nsteps = ((scenario.t_end - t0) / dt).round().max(1.0) as usize;

    let mut net = scenario.initial.clone();
    relax_junctions(&mut net);
    let clamps = clamped_positions(&net);
    let moving_clamps = scenario.clamp_velocity != Point2::ZERO;

    let mut snapshots = vec![Snapshot {
        t: t0,
        net: net.clone(),
    }];
    check_snapshot(&net, t0)?;
    let mut events: Vec<EventRecord> = detect_events(&net, scenario.eps_len, scenario.eps_col)
        .into_iter()
        .map(|event| EventRecord { t: t0, event })
        .collect();

    let mut history: VecDeque<(f64, Vec<f64>)> = VecDeque::with_capacity(21);
    history.push_back((t0, net.curves.iter().map(Curve::length).collect()));

    let mut k = 0;
    while events.is_empty() && k < nsteps {
        let t_prev = t0 + k as f64 * dt;
        k += 1;
        let t = t0 + k as f64 * dt;
        net = step(&net, &scenario.forcing, t_prev, dt).map_err(|e| Error::StepFailed {
            t: t_prev,
            source: Box::new(e),
        })?;
        if moving_clamps {
            let shift = scenario.clamp_velocity * (t - t0);
            for &(ci, e, p) in &clamps {
                let nodes = &mut net.curves[ci].nodes;
                let idx = if e == 0 { 0 } else { nodes.len() - 1 };
                nodes[idx] = p + shift;
            }
        }
        let mut touched = false;
        for c in net.curves.iter_mut() {
            if needs_regrid(c, scenario.h_target) {
                *c = regrid(c, scenario.h_target);
                touched = true;
            }
        }
        if touched {
            relax_junctions(&mut net);
        }

        let lengths: Vec<f64> = net.curves.iter().map(Curve::length).collect();
        let found = detect_events(&net, scenario.eps_len, scenario.eps_col);
        if !found.is_empty() {
            let (t_old, old) = history.front().expect("history is never empty");
            events = found
                .into_iter()
                .map(|mut event| {
                    if let Event::JunctionCollision {
                        curve,
                        length,
                        rate,
                        collision_time,
                        ..
                    } = &mut event
                    {
                        if t > *t_old {
                            *rate = (old[*curve] - *length) / (t - t_old);
                            if *rate > 0.0 {
                                *collision_time = Some(t + *length / *rate);
                            }
                        }
                    }
                    EventRecord { t, event }
                })
                .collect();
        }
        history.push_back((t, lengths));
        if history.len() > 20 {
            history.pop_front();
        }

        if k % scenario.snapshot_stride == 0 || k == nsteps || !events.is_empty() {
            check_snapshot(&net, t)?;
            snapshots.push(Snapshot {
                t,
                net: net.clone(),
            });
        }
    }

    FlowTrajectory::with_events(snapshots, scenario.forcing.clone(), events)
}

fn check_snapshot(net: &Network, t: f64) -> Result<()> {
    match validate(net).first() {
        None => Ok(()),
        Some(v) => Err(Error::StepFailed {
            t,
            source: Box::new(Error::InvalidArgument(format!(
                "invalid network: {}",
                v.message
            ))),
        }),
    }
}
