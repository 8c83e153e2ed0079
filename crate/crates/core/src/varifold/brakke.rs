use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DiscreteVarifold, SpaceTimeTest};
use crate::error::{Error, Result};
use crate::flowsim::FlowTrajectory;
use crate::netgeom::{EndTag, Network, Point2};

/// A node of the network seen as a quadrature point: its dual length
/// `weight`, unit `tangent` and curvature vector `h`.
///
/// Junctions contribute one sample per incident curve, all sharing the
/// junction's curvature (the unbalanced part of the three unit tangents
/// spread over the dual length). Free and clamped ends are `boundary`
/// samples without a curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexSample {
    pub x: Point2,
    pub weight: f64,
    pub tangent: Point2,
    pub h: Point2,
    pub boundary: bool,
}

/// Quadrature samples carrying the generalized curvature of `net`.
pub fn vertex_curvatures(net: &Network) -> Vec<VertexSample> {
    let mut out = Vec::with_capacity(net.node_count() + 3 * net.junctions.len());
    for c in &net.curves {
        let n = c.nodes.len();
        if n < 2 {
            continue;
        }
        let closed = c.is_closed();
        let interior = if closed { 0..n } else { 1..n - 1 };
        for i in interior {
            let prev = c.nodes[(i + n - 1) % n];
            let cur = c.nodes[i];
            let next = c.nodes[(i + 1) % n];
            let (a, b) = (cur.dist(prev), next.dist(cur));
            if a == 0.0 || b == 0.0 {
                continue;
            }
            let (ua, ub) = ((cur - prev) / a, (next - cur) / b);
            out.push(VertexSample {
                x: cur,
                weight: 0.5 * (a + b),
                tangent: (ua + ub).normalized().unwrap_or(ub),
                h: (ub - ua) * (2.0 / (a + b)),
                boundary: false,
            });
        }
        if closed {
            continue;
        }
        for (e, tag) in c.ends.iter().enumerate() {
            if matches!(tag, EndTag::Free | EndTag::Clamped) {
                let (end, nb) = if e == 0 {
                    (c.nodes[0], c.nodes[1])
                } else {
                    (c.nodes[n - 1], c.nodes[n - 2])
                };
                out.push(VertexSample {
                    x: end,
                    weight: 0.5 * end.dist(nb),
                    tangent: (nb - end).normalized().unwrap_or_default(),
                    h: Point2::ZERO,
                    boundary: true,
                });
            }
        }
    }
    for (&id, &p) in &net.junctions {
        let arms: Vec<(Point2, f64)> = net
            .junction_ends(id)
            .into_iter()
            .filter_map(|(ci, e)| {
                let c = &net.curves[ci];
                let nb = if e == 0 {
                    c.nodes[1]
                } else {
                    c.nodes[c.nodes.len() - 2]
                };
                let d = nb.dist(p);
                (d > 0.0).then(|| ((nb - p) / d, d))
            })
            .collect();
        let total: f64 = arms.iter().map(|&(_, d)| 0.5 * d).sum();
        if total == 0.0 {
            continue;
        }
        let h = arms.iter().fold(Point2::ZERO, |acc, &(u, _)| acc + u) / total;
        for (u, d) in arms {
            out.push(VertexSample {
                x: p,
                weight: 0.5 * d,
                tangent: u,
                h,
                boundary: false,
            });
        }
    }
    out
}

/// A space integral that may be undefined, `B(V, u, phi) = -infinity`
/// in the weak formulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingTerm {
    Finite(f64),
    NotIntegrable,
}

impl ForcingTerm {
    pub fn value(self) -> Option<f64> {
        match self {
            ForcingTerm::Finite(v) => Some(v),
            ForcingTerm::NotIntegrable => None,
        }
    }
}

/// `int (-phi h + grad phi) . (h + u^perp) d||V||` on the network.
///
/// Not integrable when `phi` or its gradient is nonzero at a free or clamped
/// end, where the first variation has a point mass.
pub fn forcing_term(
    net: &Network,
    u: impl Fn(Point2) -> Point2,
    phi: impl Fn(Point2) -> f64,
    grad_phi: impl Fn(Point2) -> Point2,
) -> ForcingTerm {
    let mut sum = 0.0;
    for s in vertex_curvatures(net) {
        let (f, g) = (phi(s.x), grad_phi(s.x));
        if s.boundary {
            if f != 0.0 || g != Point2::ZERO {
                return ForcingTerm::NotIntegrable;
            }
            continue;
        }
        let uu = u(s.x);
        let u_perp = uu - s.tangent * uu.dot(s.tangent);
        sum += (g - s.h * f).dot(s.h + u_perp) * s.weight;
    }
    ForcingTerm::Finite(sum)
}

/// Both sides of the integrated Brakke inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrakkeTerms {
    /// `||V_t2||(phi(., t2)) - ||V_t1||(phi(., t1))`.
    pub lhs: f64,
    /// `int_t1^t2 B(V_t, u, phi) + int d_t phi d||V_t|| dt`.
    pub rhs: ForcingTerm,
}

impl BrakkeTerms {
    /// `lhs - rhs`; `NotIntegrable` when the right side is `-infinity`.
    pub fn residual(&self) -> ForcingTerm {
        match self.rhs {
            ForcingTerm::Finite(r) => ForcingTerm::Finite(self.lhs - r),
            ForcingTerm::NotIntegrable => ForcingTerm::NotIntegrable,
        }
    }
}

fn median_gap(traj: &FlowTrajectory) -> f64 {
    let mut gaps: Vec<f64> = traj
        .snapshots()
        .windows(2)
        .map(|w| w[1].t - w[0].t)
        .collect();
    if gaps.is_empty() {
        return 0.0;
    }
    gaps.sort_by(f64::total_cmp);
    gaps[gaps.len() / 2]
}

/// Quadrature times for `[t1, t2]`: the endpoints and every snapshot between.
pub(crate) fn time_nodes(traj: &FlowTrajectory, t1: f64, t2: f64) -> Result<Vec<f64>> {
    if !(t1 < t2) {
        return Err(Error::InvalidArgument(format!(
            "need t1 < t2, got [{t1}, {t2}]"
        )));
    }
    for t in [t1, t2] {
        if !traj.contains_time(t) {
            return Err(Error::OutOfRange {
                t,
                start: traj.t_start(),
                end: traj.t_end(),
            });
        }
    }
    let tol = 1e-12 * (1.0 + t2.abs());
    let mut times = vec![t1];
    times.extend(
        traj.snapshots()
            .iter()
            .map(|s| s.t)
            .filter(|&t| t > t1 + tol && t < t2 - tol),
    );
    times.push(t2);
    let stride = median_gap(traj);
    if let Some(w) = times
        .windows(2)
        .find(|w| w[1] - w[0] > 2.0 * stride * (1.0 + 1e-9))
    {
        return Err(Error::Resolution(format!(
            "snapshot gap [{}, {}] exceeds twice the trajectory stride {stride}",
            w[0], w[1]
        )));
    }
    Ok(times)
}

pub(crate) fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Both sides of the Brakke inequality on `[t1, t2]` for the test function `phi`.
pub fn brakke_terms(
    traj: &FlowTrajectory,
    phi: &dyn SpaceTimeTest,
    t1: f64,
    t2: f64,
) -> Result<BrakkeTerms> {
    let times = time_nodes(traj, t1, t2)?;
    let mass_at = |t: f64| -> Result<f64> {
        let net = traj.network_at(t)?;
        Ok(DiscreteVarifold::from_network(&net, None).weigh(|x| phi.eval(x, t)))
    };
    let lhs = mass_at(t2)? - mass_at(t1)?;
    let integrand: Vec<Option<f64>> = times
        .par_iter()
        .map(|&t| -> Result<Option<f64>> {
            let net = traj.network_at(t)?;
            let b = forcing_term(
                &net,
                |x| traj.forcing.eval(x, t),
                |x| phi.eval(x, t),
                |x| phi.grad(x, t),
            );
            let dphi =
                DiscreteVarifold::from_network(&net, None).weigh(|x| phi.time_derivative(x, t));
            Ok(b.value().map(|b| b + dphi))
        })
        .collect::<Result<_>>()?;
    let rhs = match integrand.into_iter().collect::<Option<Vec<f64>>>() {
        Some(values) => ForcingTerm::Finite(trapezoid(&times, &values)),
        None => ForcingTerm::NotIntegrable,
    };
    Ok(BrakkeTerms { lhs, rhs })
}

/// `LHS - RHS` of the integrated Brakke inequality; nonpositive values
/// (up to discretization) certify it.
pub fn brakke_residual(
    traj: &FlowTrajectory,
    phi: &dyn SpaceTimeTest,
    t1: f64,
    t2: f64,
) -> Result<ForcingTerm> {
    Ok(brakke_terms(traj, phi, t1, t2)?.residual())
}
