//! Named initial networks.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::netgeom::{standard_triod, Curve, EndTag, JunctionId, Network, Point2, TriodFrame};

/// Regular `n`-gon inscribed in the circle of radius `r` about `center`.
pub fn circle(center: Point2, r: f64, n: usize) -> Curve {
    let nodes = (0..n)
        .map(|i| center + Point2::from_angle(2.0 * PI * i as f64 / n as f64) * r)
        .collect();
    Curve::closed(nodes)
}

/// Straight clamped segment.
pub fn segment(a: Point2, b: Point2, h: f64) -> Network {
    Network::from_curves(vec![Curve::straight(a, b, h, [EndTag::Clamped; 2])])
}

pub fn triod(extent: f64, h: f64) -> Network {
    standard_triod(&TriodFrame::IDENTITY, extent, h).expect("triod preset needs extent > h > 0")
}

/// Graph profiles over the three rays of a perturbed triod of length `extent`.
///
/// All three vanish at both ends and share the slope `2 pi a / extent` at the
/// junction, so the initial data satisfies the 120 degree condition; the
/// differing wave numbers make the junction move.
pub fn perturbed_triod_profile(j: usize, amplitude: f64, extent: f64, x: f64) -> f64 {
    let k = PI * x / extent;
    match j {
        0 => amplitude * (2.0 * k).sin(),
        1 => 2.0 * amplitude * k.sin(),
        _ => 0.5 * amplitude * (4.0 * k).sin(),
    }
}

/// Triod whose rays carry the graphs of [`perturbed_triod_profile`].
pub fn perturbed_triod(extent: f64, amplitude: f64, h: f64) -> Network {
    let id = JunctionId(0);
    let n = (extent / h).ceil() as usize;
    let frame = TriodFrame::IDENTITY;
    let curves = (0..3)
        .map(|j| {
            let d = frame.direction(j);
            let normal = d.perp();
            let nodes = (0..=n)
                .map(|i| {
                    let x = extent * i as f64 / n as f64;
                    d * x + normal * perturbed_triod_profile(j, amplitude, extent, x)
                })
                .collect();
            Curve::new(nodes, [EndTag::Junction(id), EndTag::Clamped])
        })
        .collect();
    Network::new(curves, BTreeMap::from([(id, Point2::ZERO)]))
}

/// The translating graph `y = t - ln cos x` on `[-half_width, half_width]` at
/// time `t`, with nodes equally spaced in arclength.
pub fn grim_reaper(half_width: f64, h: f64, t: f64) -> Network {
    let s_max = half_width.tan().asinh();
    let n = ((2.0 * s_max / h).ceil() as usize).max(2);
    let nodes = (0..=n)
        .map(|i| {
            let s = -s_max + 2.0 * s_max * i as f64 / n as f64;
            let x = s.sinh().atan();
            Point2::new(x, t - x.cos().ln())
        })
        .collect();
    Network::from_curves(vec![Curve::new(nodes, [EndTag::Clamped; 2])])
}

/// Two junctions joined by a horizontal bridge of length `bridge`, each tied to
/// two clamped corners of the rectangle `[-half_width, half_width] x
/// [-half_height, half_height]`.
///
/// For tall rectangles (`half_height > sqrt(3) * half_width`) no equilibrium
/// with a horizontal bridge exists and the bridge shrinks to zero.
pub fn lens(half_width: f64, half_height: f64, bridge: f64, h: f64) -> Network {
    let (a, b) = (JunctionId(0), JunctionId(1));
    let pa = Point2::new(-0.5 * bridge, 0.0);
    let pb = Point2::new(0.5 * bridge, 0.0);
    let corner = |sx: f64, sy: f64| Point2::new(sx * half_width, sy * half_height);
    let bridge_h = h.min(bridge / 2.0);
    let curves = vec![
        Curve::straight(pa, pb, bridge_h, [EndTag::Junction(a), EndTag::Junction(b)]),
        Curve::straight(
            pa,
            corner(-1.0, 1.0),
            h,
            [EndTag::Junction(a), EndTag::Clamped],
        ),
        Curve::straight(
            pa,
            corner(-1.0, -1.0),
            h,
            [EndTag::Junction(a), EndTag::Clamped],
        ),
        Curve::straight(
            pb,
            corner(1.0, 1.0),
            h,
            [EndTag::Junction(b), EndTag::Clamped],
        ),
        Curve::straight(
            pb,
            corner(1.0, -1.0),
            h,
            [EndTag::Junction(b), EndTag::Clamped],
        ),
    ];
    Network::new(curves, BTreeMap::from([(a, pa), (b, pb)]))
}
