//! Planar networks, the standard triple junction and its similarity class.

mod point;
mod validate;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use point::{project_to_segment, Point2};
pub use validate::{validate, Violation, ViolationKind};

/// Tolerance for a junction-tagged curve endpoint to coincide with its junction.
pub const JUNCTION_TOL: f64 = 1e-12;

const TWO_THIRDS_PI: f64 = 2.0 * PI / 3.0;

/// Unit directions of the three rays of the standard triod.
pub fn triod_directions() -> [Point2; 3] {
    let s = 3f64.sqrt() / 2.0;
    [
        Point2::new(1.0, 0.0),
        Point2::new(-0.5, s),
        Point2::new(-0.5, -s),
    ]
}

/// Maps any angle to the canonical representative in `(-pi/3, pi/3]`.
///
/// The triod is invariant under rotation by `2pi/3`, so fitted angles are
/// only meaningful modulo that symmetry.
pub fn canonical_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TWO_THIRDS_PI);
    if t > PI / 3.0 {
        t -= TWO_THIRDS_PI;
    }
    t
}

/// An element `R_theta(J) + xi` of the similarity class of the standard triod.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriodFrame {
    theta: f64,
    pub xi: Point2,
}

impl TriodFrame {
    pub const IDENTITY: TriodFrame = TriodFrame {
        theta: 0.0,
        xi: Point2::ZERO,
    };

    /// Builds a frame, reducing `theta` to `(-pi/3, pi/3]`.
    pub fn new(theta: f64, xi: Point2) -> Self {
        Self {
            theta: canonical_angle(theta),
            xi,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Direction of ray `j` (0-based).
    pub fn direction(&self, j: usize) -> Point2 {
        triod_directions()[j].rotate(self.theta)
    }

    /// Expresses `x` in the frame's coordinates, where the frame is the standard triod.
    #[inline]
    pub fn to_local(&self, x: Point2) -> Point2 {
        (x - self.xi).rotate(-self.theta)
    }

    #[inline]
    pub fn to_world(&self, local: Point2) -> Point2 {
        local.rotate(self.theta) + self.xi
    }
}

impl Default for TriodFrame {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Euclidean distance from `x` to the three-ray set `R_theta(J) + xi`.
///
/// Points equidistant from two rays return the common value.
pub fn dist_to_triod(x: Point2, frame: &TriodFrame) -> f64 {
    dist_to_standard_triod(frame.to_local(x))
}

/// Distance to the standard triod `J` itself.
#[inline]
pub fn dist_to_standard_triod(p: Point2) -> f64 {
    let mut best_sq = f64::INFINITY;
    for d in triod_directions() {
        let s = p.dot(d).max(0.0);
        best_sq = best_sq.min((p - d * s).norm_sq());
    }
    best_sq.sqrt()
}

/// The metric `max{|xi1 - xi2| / R, |theta1 - theta2|}` on triod frames.
pub fn d_metric(a: &TriodFrame, b: &TriodFrame, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "d_metric scale R must be > 0, got {r}"
        )));
    }
    Ok((a.xi.dist(b.xi) / r).max((a.theta - b.theta).abs()))
}

/// Junction identifier; serialized as a JSON object key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JunctionId(pub u32);

impl fmt::Display for JunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Boundary behavior of a curve end.
///
/// Closed curves carry `Closed` on both ends and do not repeat their first
/// node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndTag {
    /// Natural boundary: the end follows the normal motion of its neighbor.
    Free,
    /// Fixed in place by the integrator.
    Clamped,
    /// Attached to a triple junction.
    Junction(JunctionId),
    Closed,
}

impl EndTag {
    pub fn junction(self) -> Option<JunctionId> {
        match self {
            EndTag::Junction(id) => Some(id),
            _ => None,
        }
    }
}

impl fmt::Display for EndTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndTag::Free => f.write_str("free"),
            EndTag::Clamped => f.write_str("clamped"),
            EndTag::Closed => f.write_str("closed"),
            EndTag::Junction(id) => write!(f, "junction:{id}"),
        }
    }
}

impl std::str::FromStr for EndTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(EndTag::Free),
            "clamped" => Ok(EndTag::Clamped),
            "closed" => Ok(EndTag::Closed),
            _ => s
                .strip_prefix("junction:")
                .and_then(|id| id.parse().ok())
                .map(|id| EndTag::Junction(JunctionId(id)))
                .ok_or_else(|| Error::InvalidArgument(format!("unknown end tag {s:?}"))),
        }
    }
}

impl Serialize for EndTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EndTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A polyline with tagged ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub nodes: Vec<Point2>,
    pub ends: [EndTag; 2],
}

impl Curve {
    pub fn new(nodes: Vec<Point2>, ends: [EndTag; 2]) -> Self {
        Self { nodes, ends }
    }

    pub fn closed(nodes: Vec<Point2>) -> Self {
        Self::new(nodes, [EndTag::Closed, EndTag::Closed])
    }

    pub fn is_closed(&self) -> bool {
        self.ends[0] == EndTag::Closed
    }

    pub fn segment_count(&self) -> usize {
        let n = self.nodes.len();
        if self.is_closed() {
            n
        } else {
            n.saturating_sub(1)
        }
    }

    /// Segment endpoints, including the closing segment of a closed curve.
    pub fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.nodes.len();
        (0..self.segment_count()).map(move |i| (self.nodes[i], self.nodes[(i + 1) % n]))
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        self.segments().map(|(a, b)| a.dist(b)).collect()
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn first(&self) -> Point2 {
        self.nodes[0]
    }

    pub fn last(&self) -> Point2 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Straight polyline from `a` to `b` with at least `ceil(|b-a|/h)` segments.
    pub fn straight(a: Point2, b: Point2, h: f64, ends: [EndTag; 2]) -> Self {
        let n = ((a.dist(b) / h).ceil() as usize).max(1);
        let nodes = (0..=n).map(|k| a.lerp(b, k as f64 / n as f64)).collect();
        Self::new(nodes, ends)
    }
}

/// Curves plus a junction table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Network {
    pub curves: Vec<Curve>,
    pub junctions: BTreeMap<JunctionId, Point2>,
}

impl Network {
    pub fn new(curves: Vec<Curve>, junctions: BTreeMap<JunctionId, Point2>) -> Self {
        Self { curves, junctions }
    }

    pub fn from_curves(curves: Vec<Curve>) -> Self {
        Self::new(curves, BTreeMap::new())
    }

    pub fn total_length(&self) -> f64 {
        self.curves.iter().map(Curve::length).sum()
    }

    pub fn node_count(&self) -> usize {
        self.curves.iter().map(|c| c.nodes.len()).sum()
    }

    /// Curve ends attached to `id`, as `(curve index, end index)`.
    pub fn junction_ends(&self, id: JunctionId) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (ci, c) in self.curves.iter().enumerate() {
            for (e, tag) in c.ends.iter().enumerate() {
                if *tag == EndTag::Junction(id) {
                    out.push((ci, e));
                }
            }
        }
        out
    }

    /// Applies `f` to every node and junction position.
    pub fn map_points(&self, f: impl Fn(Point2) -> Point2) -> Network {
        Network {
            curves: self
                .curves
                .iter()
                .map(|c| Curve::new(c.nodes.iter().map(|&p| f(p)).collect(), c.ends))
                .collect(),
            junctions: self.junctions.iter().map(|(&k, &p)| (k, f(p))).collect(),
        }
    }

    /// Every node of every curve.
    pub fn points(&self) -> impl Iterator<Item = Point2> + '_ {
        self.curves.iter().flat_map(|c| c.nodes.iter().copied())
    }
}

/// Three straight rays of length `extent` from `frame.xi`, joined at junction 0
/// with clamped outer ends.
pub fn standard_triod(frame: &TriodFrame, extent: f64, h: f64) -> Result<Network> {
    if !(extent > 0.0) || !(h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "standard_triod needs extent > 0 and h > 0 (extent = {extent}, h = {h})"
        )));
    }
    if h >= extent {
        return Err(Error::InvalidArgument(format!(
            "node spacing {h} must be smaller than extent {extent}"
        )));
    }
    let id = JunctionId(0);
    let curves = (0..3)
        .map(|j| {
            let d = frame.direction(j);
            Curve::straight(
                frame.xi,
                frame.xi + d * extent,
                h,
                [EndTag::Junction(id), EndTag::Clamped],
            )
        })
        .collect();
    Ok(Network::new(curves, BTreeMap::from([(id, frame.xi)])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn triod_outer_endpoints() {
        let net = standard_triod(&TriodFrame::IDENTITY, 2.0, 0.01).unwrap();
        let s3 = 3f64.sqrt();
        let expect = [
            Point2::new(2.0, 0.0),
            Point2::new(-1.0, s3),
            Point2::new(-1.0, -s3),
        ];
        for (c, e) in net.curves.iter().zip(expect) {
            assert_abs_diff_eq!(c.last().x, e.x, epsilon = 1e-12);
            assert_abs_diff_eq!(c.last().y, e.y, epsilon = 1e-12);
            assert!(c.segment_lengths().iter().all(|&l| l <= 0.01 + 1e-12));
        }
        assert!(validate(&net).is_empty());
    }

    #[test]
    fn triod_translation() {
        let base = standard_triod(&TriodFrame::IDENTITY, 1.0, 0.01).unwrap();
        let moved =
            standard_triod(&TriodFrame::new(0.0, Point2::new(0.3, 0.0)), 1.0, 0.01).unwrap();
        for (a, b) in base.points().zip(moved.points()) {
            assert_abs_diff_eq!(a.x + 0.3, b.x, epsilon = 1e-12);
            assert_abs_diff_eq!(a.y, b.y, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotated_triod_angles() {
        let frame = TriodFrame::new(PI / 6.0, Point2::ZERO);
        let net = standard_triod(&frame, 1.0, 0.01).unwrap();
        let dirs: Vec<Point2> = net
            .curves
            .iter()
            .map(|c| (c.last() - c.first()).normalized().unwrap())
            .collect();
        assert_abs_diff_eq!(dirs[0].x, (PI / 6.0).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(dirs[0].y, (PI / 6.0).sin(), epsilon = 1e-12);
        for i in 0..3 {
            let a = dirs[i].dot(dirs[(i + 1) % 3]).clamp(-1.0, 1.0).acos();
            assert_abs_diff_eq!(a, 2.0 * PI / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn triod_rejects_bad_sizes() {
        assert!(standard_triod(&TriodFrame::IDENTITY, 0.0, 0.01).is_err());
        assert!(standard_triod(&TriodFrame::IDENTITY, 1.0, -1.0).is_err());
        assert!(standard_triod(&TriodFrame::IDENTITY, 1.0, 2.0).is_err());
    }

    #[test]
    fn dist_examples() {
        let id = TriodFrame::IDENTITY;
        assert_eq!(dist_to_triod(Point2::new(1.0, 0.0), &id), 0.0);
        assert_abs_diff_eq!(
            dist_to_triod(Point2::new(-1.0, 0.0), &id),
            3f64.sqrt() / 2.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            dist_to_triod(Point2::new(0.0, 0.2), &id),
            0.1,
            epsilon = 1e-15
        );
    }

    #[test]
    fn canonical_angles() {
        assert_abs_diff_eq!(canonical_angle(PI / 3.0), PI / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(canonical_angle(-PI / 3.0), PI / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(canonical_angle(2.0 * PI / 3.0 + 0.1), 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(canonical_angle(-0.2), -0.2, epsilon = 1e-15);
    }

    #[test]
    fn metric_examples() {
        let id = TriodFrame::IDENTITY;
        let j = TriodFrame::new(0.1, Point2::new(0.2, 0.0));
        assert_eq!(d_metric(&j, &j, 3.0).unwrap(), 0.0);
        assert_abs_diff_eq!(d_metric(&j, &id, 1.0).unwrap(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(d_metric(&j, &id, 2.0).unwrap(), 0.1, epsilon = 1e-15);
        assert!(d_metric(&j, &id, 0.0).is_err());
    }

    #[test]
    fn end_tag_text() {
        for tag in [
            EndTag::Free,
            EndTag::Clamped,
            EndTag::Closed,
            EndTag::Junction(JunctionId(7)),
        ] {
            assert_eq!(tag.to_string().parse::<EndTag>().unwrap(), tag);
        }
        assert!("junction:x".parse::<EndTag>().is_err());
    }
}
