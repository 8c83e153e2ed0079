use std::collections::BTreeMap;

use serde::Serialize;

use super::{EndTag, JunctionId, Network, Point2, JUNCTION_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonFinite,
    TooFewNodes,
    RepeatedNode,
    EndTags,
    UnknownJunction,
    Valence,
    JunctionMismatch,
    SelfIntersection,
    Embeddedness,
}

/// One broken network invariant, with enough context to locate it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub curves: Vec<usize>,
    pub junction: Option<JunctionId>,
    pub at: Vec<Point2>,
    pub message: String,
}

impl Violation {
    fn new(kind: ViolationKind, curves: Vec<usize>, at: Vec<Point2>, message: String) -> Self {
        Self {
            kind,
            curves,
            junction: None,
            at,
            message,
        }
    }
}

/// Checks every network invariant; an empty result means the network is valid.
pub fn validate(net: &Network) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut structurally_ok = true;

    for (ci, c) in net.curves.iter().enumerate() {
        let min_nodes = if c.is_closed() { 3 } else { 2 };
        if c.nodes.len() < min_nodes {
            out.push(Violation::new(
                ViolationKind::TooFewNodes,
                vec![ci],
                c.nodes.clone(),
                format!("curve {ci} has {} nodes, needs {min_nodes}", c.nodes.len()),
            ));
            structurally_ok = false;
            continue;
        }
        if let Some(p) = c.nodes.iter().find(|p| !p.is_finite()) {
            out.push(Violation::new(
                ViolationKind::NonFinite,
                vec![ci],
                vec![*p],
                format!("curve {ci} has a non-finite node"),
            ));
            structurally_ok = false;
            continue;
        }
        if (c.ends[0] == EndTag::Closed) != (c.ends[1] == EndTag::Closed) {
            out.push(Violation::new(
                ViolationKind::EndTags,
                vec![ci],
                vec![c.first(), c.last()],
                format!("curve {ci} is closed at one end only"),
            ));
        }
        for (i, (a, b)) in c.segments().enumerate() {
            if a == b {
                out.push(Violation::new(
                    ViolationKind::RepeatedNode,
                    vec![ci],
                    vec![a],
                    format!("curve {ci} repeats node {i}"),
                ));
                structurally_ok = false;
            }
        }
    }

    let mut valence: BTreeMap<JunctionId, usize> = net.junctions.keys().map(|&k| (k, 0)).collect();
    for (ci, c) in net.curves.iter().enumerate() {
        if c.nodes.is_empty() {
            continue;
        }
        for (e, tag) in c.ends.iter().enumerate() {
            let Some(id) = tag.junction() else { continue };
            let end = if e == 0 { c.first() } else { c.last() };
            match net.junctions.get(&id) {
                None => {
                    let mut v = Violation::new(
                        ViolationKind::UnknownJunction,
                        vec![ci],
                        vec![end],
                        format!("curve {ci} references missing junction {id}"),
                    );
                    v.junction = Some(id);
                    out.push(v);
                }
                Some(&p) => {
                    *valence.entry(id).or_default() += 1;
                    if end.dist(p) > JUNCTION_TOL {
                        let mut v = Violation::new(
                            ViolationKind::JunctionMismatch,
                            vec![ci],
                            vec![end, p],
                            format!("curve {ci} end {e} is {:e} from junction {id}", end.dist(p)),
                        );
                        v.junction = Some(id);
                        out.push(v);
                    }
                }
            }
        }
    }
    for (&id, &n) in &valence {
        if n != 3 {
            let mut v = Violation::new(
                ViolationKind::Valence,
                net.junction_ends(id).into_iter().map(|(c, _)| c).collect(),
                vec![net.junctions[&id]],
                format!("junction {id} has valence {n}"),
            );
            v.junction = Some(id);
            out.push(v);
        }
    }

    if structurally_ok {
        out.extend(intersections(net));
    }
    out
}

struct Seg {
    curve: usize,
    index: usize,
    a: Point2,
    b: Point2,
    min_x: f64,
    max_x: f64,
}

fn intersections(net: &Network) -> Vec<Violation> {
    let mut segs: Vec<Seg> = net
        .curves
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| {
            c.segments().enumerate().map(move |(i, (a, b))| Seg {
                curve: ci,
                index: i,
                a,
                b,
                min_x: a.x.min(b.x),
                max_x: a.x.max(b.x),
            })
        })
        .collect();
    segs.sort_by(|s, t| s.min_x.total_cmp(&t.min_x));

    let mut out = Vec::new();
    for i in 0..segs.len() {
        let s = &segs[i];
        for t in &segs[i + 1..] {
            if t.min_x > s.max_x {
                break;
            }
            if adjacent(net, s, t) {
                continue;
            }
            let Some(p) = segment_intersection(s.a, s.b, t.a, t.b) else {
                continue;
            };
            if s.curve == t.curve {
                out.push(Violation::new(
                    ViolationKind::SelfIntersection,
                    vec![s.curve],
                    vec![p],
                    format!(
                        "curve {} segments {} and {} intersect",
                        s.curve, s.index, t.index
                    ),
                ));
            } else if !at_shared_junction(net, s.curve, t.curve, p) {
                out.push(Violation::new(
                    ViolationKind::Embeddedness,
                    vec![s.curve.min(t.curve), s.curve.max(t.curve)],
                    vec![p],
                    format!(
                        "curves {} and {} meet away from a junction",
                        s.curve, t.curve
                    ),
                ));
            }
        }
    }
    out
}

fn adjacent(net: &Network, s: &Seg, t: &Seg) -> bool {
    if s.curve != t.curve {
        return false;
    }
    let c = &net.curves[s.curve];
    let m = c.segment_count();
    let (i, j) = (s.index.min(t.index), s.index.max(t.index));
    j == i + 1 || (c.is_closed() && i == 0 && j == m - 1)
}

fn at_shared_junction(net: &Network, c1: usize, c2: usize, p: Point2) -> bool {
    let ids = |c: usize| {
        net.curves[c]
            .ends
            .iter()
            .filter_map(|e| e.junction())
            .collect::<Vec<_>>()
    };
    let (a, b) = (ids(c1), ids(c2));
    a.iter()
        .filter(|id| b.contains(id))
        .filter_map(|id| net.junctions.get(id))
        .any(|&q| q.dist(p) <= 1e-9)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// A common point of the closed segments `[a, b]` and `[c, d]`, if any.
pub(crate) fn segment_intersection(a: Point2, b: Point2, c: Point2, d: Point2) -> Option<Point2> {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        let s = d1 / (d1 - d2);
        return Some(a.lerp(b, s));
    }
    if d1 == 0.0 && on_segment(c, d, a) {
        return Some(a);
    }
    if d2 == 0.0 && on_segment(c, d, b) {
        return Some(b);
    }
    if d3 == 0.0 && on_segment(a, b, c) {
        return Some(c);
    }
    if d4 == 0.0 && on_segment(a, b, d) {
        return Some(d);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgeom::{standard_triod, Curve, TriodFrame};

    #[test]
    fn triod_is_valid() {
        let net = standard_triod(&TriodFrame::IDENTITY, 1.0, 0.05).unwrap();
        assert_eq!(validate(&net), vec![]);
    }

    #[test]
    fn valence_two_junction() {
        let mut net = standard_triod(&TriodFrame::IDENTITY, 1.0, 0.05).unwrap();
        net.curves.pop();
        let v = validate(&net);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Valence);
        assert_eq!(v[0].junction, Some(JunctionId(0)));
    }

    #[test]
    fn crossing_curves() {
        let a = Curve::straight(
            Point2::new(-1.0, 0.0),
            Point2::new(1.0, 0.0),
            0.3,
            [EndTag::Clamped; 2],
        );
        let b = Curve::straight(
            Point2::new(0.05, -1.0),
            Point2::new(0.05, 1.0),
            0.3,
            [EndTag::Clamped; 2],
        );
        let v = validate(&Network::from_curves(vec![a, b]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Embeddedness);
        assert_eq!(v[0].curves, vec![0, 1]);
        assert!(v[0].at[0].dist(Point2::new(0.05, 0.0)) < 1e-12);
    }

    #[test]
    fn figure_eight_self_intersects() {
        let nodes = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        let v = validate(&Network::from_curves(vec![Curve::closed(nodes)]));
        assert!(v.iter().any(|v| v.kind == ViolationKind::SelfIntersection));
    }

    #[test]
    fn moved_junction_endpoint() {
        let mut net = standard_triod(&TriodFrame::IDENTITY, 1.0, 0.05).unwrap();
        net.curves[1].nodes[0].x += 1e-9;
        let v = validate(&net);
        assert!(v.iter().any(|v| v.kind == ViolationKind::JunctionMismatch));
    }
}
