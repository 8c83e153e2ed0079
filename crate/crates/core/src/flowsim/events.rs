use serde::{Deserialize, Serialize};

use crate::netgeom::{JunctionId, Network, Point2};

/// A singularity precursor detected on a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Event {
    /// A curve joining two junctions has become shorter than the length threshold.
    JunctionCollision {
        curve: usize,
        junctions: [JunctionId; 2],
        length: f64,
        midpoint: Point2,
        /// Shortening rate measured over the last steps (0 when unknown).
        #[serde(default)]
        rate: f64,
        /// Linear extrapolation of the time at which the length reaches zero.
        #[serde(default)]
        collision_time: Option<f64>,
    },
    JunctionProximity {
        junctions: [JunctionId; 2],
        distance: f64,
        midpoint: Point2,
    },
    VanishingLoop {
        curve: usize,
        length: f64,
        centroid: Point2,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::JunctionCollision { .. } => "junction_collision",
            Event::JunctionProximity { .. } => "junction_proximity",
            Event::VanishingLoop { .. } => "vanishing_loop",
        }
    }

    /// Where the event happens.
    pub fn location(&self) -> Point2 {
        match self {
            Event::JunctionCollision { midpoint, .. }
            | Event::JunctionProximity { midpoint, .. } => *midpoint,
            Event::VanishingLoop { centroid, .. } => *centroid,
        }
    }
}

/// Time-stamped event, serialized as `{"t": .., "kind": .., "data": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    #[serde(flatten)]
    pub event: Event,
}

/// Reports short junction-to-junction curves, close junction pairs and small
/// closed loops.
pub fn detect_events(net: &Network, eps_len: f64, eps_col: f64) -> Vec<Event> {
    let mut out = Vec::new();
    for (ci, c) in net.curves.iter().enumerate() {
        if c.nodes.len() < 2 {
            continue;
        }
        if c.is_closed() {
            let len = c.length();
            if len < eps_len {
                let centroid =
                    c.nodes.iter().fold(Point2::ZERO, |a, &p| a + p) / c.nodes.len() as f64;
                out.push(Event::VanishingLoop {
                    curve: ci,
                    length: len,
                    centroid,
                });
            }
            continue;
        }
        if let (Some(a), Some(b)) = (c.ends[0].junction(), c.ends[1].junction()) {
            let len = c.length();
            if len < eps_len {
                out.push(Event::JunctionCollision {
                    curve: ci,
                    junctions: [a, b],
                    length: len,
                    midpoint: (c.first() + c.last()) * 0.5,
                    rate: 0.0,
                    collision_time: None,
                });
            }
        }
    }
    let js: Vec<(JunctionId, Point2)> = net.junctions.iter().map(|(&k, &p)| (k, p)).collect();
    for i in 0..js.len() {
        for j in i + 1..js.len() {
            let d = js[i].1.dist(js[j].1);
            if d < eps_col {
                out.push(Event::JunctionProximity {
                    junctions: [js[i].0, js[j].0],
                    distance: d,
                    midpoint: (js[i].1 + js[j].1) * 0.5,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowsim::presets;
    use crate::netgeom::{standard_triod, TriodFrame};

    #[test]
    fn static_triod_has_no_events() {
        let net = standard_triod(&TriodFrame::IDENTITY, 1.0, 0.01).unwrap();
        assert!(detect_events(&net, 0.05, 0.05).is_empty());
    }

    #[test]
    fn short_bridge() {
        let net = presets::lens(0.5, 1.5, 1e-4, 0.01);
        let ev = detect_events(&net, 1e-3, 1e-5);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].kind(), "junction_collision");
    }

    #[test]
    fn tiny_loop() {
        let c = presets::circle(Point2::ZERO, 1e-4 / (2.0 * std::f64::consts::PI), 16);
        let net = Network::from_curves(vec![c]);
        let ev = detect_events(&net, 1e-3, 1e-3);
        assert_eq!(ev.len(), 1);
        assert!(matches!(ev[0], Event::VanishingLoop { curve: 0, .. }));
    }

    #[test]
    fn record_json_shape() {
        let rec = EventRecord {
            t: 0.5,
            event: Event::VanishingLoop {
                curve: 2,
                length: 0.001,
                centroid: Point2::new(1.0, 2.0),
            },
        };
        let s = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            s,
            r#"{"t":0.5,"kind":"vanishing_loop","data":{"curve":2,"length":0.001,"centroid":[1.0,2.0]}}"#
        );
        let back: EventRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rec);
    }
}
