use crate::netgeom::{Curve, Point2};

/// Allowed segment lengths `[h_target / 2, 2 h_target]`.
pub fn spacing_bounds(h_target: f64) -> (f64, f64) {
    (0.5 * h_target, 2.0 * h_target)
}

fn min_segments(curve: &Curve) -> usize {
    if curve.is_closed() {
        3
    } else {
        2
    }
}

/// True when some segment leaves the spacing bounds.
///
/// Curves already at their minimum segment count are left alone while their
/// spacing stays roughly uniform, since they cannot be coarsened further.
pub fn needs_regrid(curve: &Curve, h_target: f64) -> bool {
    let (h_min, h_max) = spacing_bounds(h_target);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (a, b) in curve.segments() {
        let l = a.dist(b);
        lo = lo.min(l);
        hi = hi.max(l);
    }
    if hi > h_max {
        return true;
    }
    if lo >= h_min {
        return false;
    }
    curve.segment_count() > min_segments(curve) || hi > 2.0 * lo
}

/// Unit-speed tangent at node `i` from the quadratic through its neighbors;
/// one-sided at open ends.
fn node_tangent(pts: &[Point2], i: usize, closed: bool) -> Point2 {
    let n = pts.len();
    let (prev, next) = if closed {
        // `pts` repeats the first node at the end.
        let m = n - 1;
        (pts[(i + m - 1) % m], pts[(i + 1) % m])
    } else if i == 0 {
        return chord_direction(pts[0], pts[1]);
    } else if i == n - 1 {
        return chord_direction(pts[n - 2], pts[n - 1]);
    } else {
        (pts[i - 1], pts[i + 1])
    };
    let p = pts[i];
    let (a, b) = (p - prev, next - p);
    let (d0, d1) = (a.norm(), b.norm());
    if d0 <= 1e-14 || d1 <= 1e-14 {
        return chord_direction(prev, next);
    }
    (a * (d1 * d1) + b * (d0 * d0)) / (d0 * d1 * (d0 + d1))
}

fn chord_direction(a: Point2, b: Point2) -> Point2 {
    (b - a).normalized().unwrap_or(Point2::ZERO)
}

/// Cubic Hermite point at fraction `w` of the segment `pts[i]..pts[i + 1]`.
fn hermite(pts: &[Point2], tangents: &[Point2], i: usize, w: f64) -> Point2 {
    let (p0, p1) = (pts[i], pts[i + 1]);
    let len = p0.dist(p1);
    let (m0, m1) = (tangents[i] * len, tangents[i + 1] * len);
    let (w2, w3) = (w * w, w * w * w);
    p0 * (2.0 * w3 - 3.0 * w2 + 1.0)
        + m0 * (w3 - 2.0 * w2 + w)
        + p1 * (-2.0 * w3 + 3.0 * w2)
        + m1 * (w3 - w2)
}

/// Redistributes nodes uniformly by arclength when the spacing bounds are
/// violated; endpoints are kept exactly. New nodes lie on the cubic Hermite
/// interpolant of the old ones, so the curve is not flattened.
pub fn regrid(curve: &Curve, h_target: f64) -> Curve {
    if !needs_regrid(curve, h_target) {
        return curve.clone();
    }
    let closed = curve.is_closed();
    let pts: Vec<Point2> = if closed {
        curve
            .nodes
            .iter()
            .copied()
            .chain(std::iter::once(curve.nodes[0]))
            .collect()
    } else {
        curve.nodes.clone()
    };
    let mut cum = Vec::with_capacity(pts.len());
    cum.push(0.0);
    for w in pts.windows(2) {
        cum.push(cum[cum.len() - 1] + w[0].dist(w[1]));
    }
    let total = cum[cum.len() - 1];
    let n = ((total / h_target).round() as usize).max(min_segments(curve));
    let tangents: Vec<Point2> = (0..pts.len())
        .map(|i| node_tangent(&pts, i, closed))
        .collect();

    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(pts[0]);
    let mut seg = 0;
    for k in 1..n {
        let s = total * k as f64 / n as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let w = if len > 0.0 {
            ((s - cum[seg]) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        nodes.push(hermite(&pts, &tangents, seg, w));
    }
    if !closed {
        nodes.push(pts[pts.len() - 1]);
    }
    Curve::new(nodes, curve.ends)
}
