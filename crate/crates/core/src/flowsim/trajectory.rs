use std::borrow::Cow;

use super::{EventRecord, ForcingField, ParabolicMap};
use crate::error::{Error, Result};
use crate::netgeom::{validate, Network, Violation};

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub net: Network,
}

/// Time-sorted snapshots of a network flow with its forcing descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    snapshots: Vec<Snapshot>,
    pub forcing: ForcingField,
    pub events: Vec<EventRecord>,
}

fn same_layout(a: &Network, b: &Network) -> bool {
    a.curves.len() == b.curves.len()
        && a.junctions.len() == b.junctions.len()
        && a.curves
            .iter()
            .zip(&b.curves)
            .all(|(x, y)| x.nodes.len() == y.nodes.len() && x.ends == y.ends)
        && a.junctions.keys().eq(b.junctions.keys())
}

impl FlowTrajectory {
    pub fn new(snapshots: Vec<Snapshot>, forcing: ForcingField) -> Result<Self> {
        Self::with_events(snapshots, forcing, Vec::new())
    }

    pub fn with_events(
        snapshots: Vec<Snapshot>,
        forcing: ForcingField,
        events: Vec<EventRecord>,
    ) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::InvalidArgument("trajectory has no snapshots".into()));
        }
        if let Some(w) = snapshots.windows(2).find(|w| !(w[1].t > w[0].t)) {
            return Err(Error::InvalidArgument(format!(
                "snapshot times must increase strictly ({} then {})",
                w[0].t, w[1].t
            )));
        }
        if snapshots.iter().any(|s| !s.t.is_finite()) {
            return Err(Error::InvalidArgument("non-finite snapshot time".into()));
        }
        Ok(Self {
            snapshots,
            forcing,
            events,
        })
    }

    /// A trajectory that holds `net` fixed at the given times.
    pub fn stationary(net: &Network, times: impl IntoIterator<Item = f64>) -> Result<Self> {
        let snapshots = times
            .into_iter()
            .map(|t| Snapshot {
                t,
                net: net.clone(),
            })
            .collect();
        Self::new(snapshots, ForcingField::zero())
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn into_snapshots(self) -> Vec<Snapshot> {
        self.snapshots
    }

    pub fn t_start(&self) -> f64 {
        self.snapshots[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.snapshots[self.snapshots.len() - 1].t
    }

    pub fn last(&self) -> &Snapshot {
        &self.snapshots[self.snapshots.len() - 1]
    }

    fn time_tol(&self) -> f64 {
        1e-12 * (1.0 + self.t_start().abs().max(self.t_end().abs()))
    }

    pub fn contains_time(&self, t: f64) -> bool {
        let tol = self.time_tol();
        t >= self.t_start() - tol && t <= self.t_end() + tol
    }

    /// Indices `(i, i + 1)` of the snapshots bracketing `t` and the
    /// interpolation weight of the later one.
    pub fn bracket(&self, t: f64) -> Result<(usize, usize, f64)> {
        if !self.contains_time(t) {
            return Err(Error::OutOfRange {
                t,
                start: self.t_start(),
                end: self.t_end(),
            });
        }
        let n = self.snapshots.len();
        if n == 1 {
            return Ok((0, 0, 0.0));
        }
        let i = self.snapshots.partition_point(|s| s.t <= t).clamp(1, n - 1) - 1;
        let (a, b) = (self.snapshots[i].t, self.snapshots[i + 1].t);
        Ok((i, i + 1, ((t - a) / (b - a)).clamp(0.0, 1.0)))
    }

    /// Spacing of the snapshots around `t`.
    pub fn local_gap(&self, t: f64) -> Result<f64> {
        let (i, j, _) = self.bracket(t)?;
        Ok(self.snapshots[j].t - self.snapshots[i].t)
    }

    /// The network at time `t`: linear interpolation of node positions between
    /// the bracketing snapshots when their layouts agree, otherwise the
    /// nearer snapshot.
    pub fn network_at(&self, t: f64) -> Result<Cow<'_, Network>> {
        let (i, j, w) = self.bracket(t)?;
        let (a, b) = (&self.snapshots[i].net, &self.snapshots[j].net);
        if w == 0.0 || i == j {
            return Ok(Cow::Borrowed(a));
        }
        if w == 1.0 {
            return Ok(Cow::Borrowed(b));
        }
        if !same_layout(a, b) {
            return Ok(Cow::Borrowed(if w < 0.5 { a } else { b }));
        }
        let mut net = a.clone();
        for (c, cb) in net.curves.iter_mut().zip(&b.curves) {
            for (p, q) in c.nodes.iter_mut().zip(&cb.nodes) {
                *p = p.lerp(*q, w);
            }
        }
        for (p, q) in net.junctions.values_mut().zip(b.junctions.values()) {
            *p = p.lerp(*q, w);
        }
        Ok(Cow::Owned(net))
    }

    /// Snapshots whose times lie in `[t1, t2]`.
    pub fn within(&self, t1: f64, t2: f64) -> impl Iterator<Item = &Snapshot> {
        let tol = self.time_tol();
        self.snapshots
            .iter()
            .filter(move |s| s.t >= t1 - tol && s.t <= t2 + tol)
    }

    /// Validation failures per snapshot index; empty when every snapshot is valid.
    pub fn validate(&self) -> Vec<(usize, Vec<Violation>)> {
        self.snapshots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                let v = validate(&s.net);
                (!v.is_empty()).then_some((i, v))
            })
            .collect()
    }

    /// The flow seen in the coordinates `((x - y) / lambda, (t - s) / lambda^2)`.
    pub fn rescaled(&self, map: &ParabolicMap) -> Result<FlowTrajectory> {
        if !(map.lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rescale factor must be positive, got {}",
                map.lambda
            )));
        }
        let lam = map.lambda;
        let to_time = |t: f64| (t - map.s) / (lam * lam);
        let snapshots = self
            .snapshots
            .iter()
            .map(|s| Snapshot {
                t: to_time(s.t),
                net: s.net.map_points(|p| (p - map.y) / lam),
            })
            .collect();
        let events = self
            .events
            .iter()
            .map(|e| {
                let mut e = e.clone();
                e.t = to_time(e.t);
                e
            })
            .collect();
        FlowTrajectory::with_events(snapshots, self.forcing.rescaled(map), events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowsim::presets;
    use crate::netgeom::Point2;

    fn two_triods() -> FlowTrajectory {
        let a = presets::triod(1.0, 0.1);
        let b = a.map_points(|p| p + Point2::new(0.5, 0.0));
        FlowTrajectory::new(
            vec![Snapshot { t: 0.0, net: a }, Snapshot { t: 1.0, net: b }],
            ForcingField::zero(),
        )
        .unwrap()
    }

    #[test]
    fn interpolates_between_matching_snapshots() {
        let traj = two_triods();
        let mid = traj.network_at(0.25).unwrap();
        let j = mid.junctions.values().next().unwrap();
        assert!((j.x - 0.125).abs() < 1e-15);
        assert!(traj.network_at(1.5).is_err());
    }

    #[test]
    fn rejects_unsorted_times() {
        let net = presets::triod(1.0, 0.1);
        assert!(FlowTrajectory::stationary(&net, [0.0, 0.0]).is_err());
        assert!(FlowTrajectory::stationary(&net, [1.0, 0.5]).is_err());
    }

    #[test]
    fn rescale_group_property() {
        let traj = two_triods();
        let a = ParabolicMap {
            y: Point2::new(0.25, 0.5),
            s: 0.5,
            lambda: 2.0,
        };
        let b = ParabolicMap {
            y: Point2::ZERO,
            s: 0.0,
            lambda: 0.25,
        };
        let twice = traj.rescaled(&a).unwrap().rescaled(&b).unwrap();
        let once = traj.rescaled(&ParabolicMap { lambda: 0.5, ..a }).unwrap();
        assert_eq!(twice, once);
    }
}
