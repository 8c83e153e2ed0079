use std::f64::consts::PI;

use super::*;
use crate::flowsim::{presets, run, FlowTrajectory, Scenario};
use crate::netgeom::{Curve, EndTag, JunctionId, Network, TriodFrame};

fn unit_circle(n: usize) -> Network {
    Network::from_curves(vec![presets::circle(Point2::ZERO, 1.0, n)])
}

fn circle_flow(n: usize, dt: f64, t_end: f64) -> FlowTrajectory {
    let h = 2.0 * PI / n as f64;
    let stride = (1e-3 / dt).round() as usize;
    run(&Scenario::new(unit_circle(n), dt, t_end, h).with_stride(stride)).unwrap()
}

#[test]
fn segment_varifold() {
    let net = presets::segment(Point2::ZERO, Point2::new(1.0, 0.0), 0.01);
    let v = to_varifold(&net, None);
    assert!((v.mass() - 1.0).abs() < 1e-12);
    assert!(v
        .atoms
        .iter()
        .all(|a| (a.tangent - Point2::new(1.0, 0.0)).norm() < 1e-12));
}

#[test]
fn clipped_triod_mass() {
    let h = 0.01;
    let v = to_varifold(&presets::triod(2.0, h), Some(&Ball::new(Point2::ZERO, 1.0)));
    assert!((v.mass() - 3.0).abs() < 2.0 * h);
    assert!((weigh(&v, |_| 1.0) - 3.0).abs() < 2.0 * h);
}

#[test]
fn polygon_perimeter() {
    let v = to_varifold(&unit_circle(256), None);
    let oracle = 2.0 * 256.0 * (PI / 256.0).sin();
    assert!((v.mass() - oracle).abs() < 1e-12);
    assert!((v.mass() - 2.0 * PI).abs() < 1e-3);
}

#[test]
fn exact_clip_matches_chord_geometry() {
    // Chord of the unit circle at height 0.6 has half-length 0.8.
    let ball = Ball::new(Point2::ZERO, 1.0);
    let (s0, s1) = ball
        .clip_segment(Point2::new(-3.0, 0.6), Point2::new(3.0, 0.6))
        .unwrap();
    assert!(((s1 - s0) * 6.0 - 1.6).abs() < 1e-14);
    assert!(ball
        .clip_segment(Point2::new(-3.0, 1.5), Point2::new(3.0, 1.5))
        .is_none());
    let (s0, s1) = ball
        .clip_segment(Point2::new(0.1, 0.0), Point2::new(0.2, 0.0))
        .unwrap();
    assert_eq!((s0, s1), (0.0, 1.0));
}

#[test]
fn c_rad_from_triod() {
    let v = to_varifold(
        &presets::triod(2.0, 0.001),
        Some(&Ball::new(Point2::ZERO, 1.5)),
    );
    let c = weigh(&v, |x| TestFunction::PhiRad.eval(x).powi(2));
    assert!((c - C_RAD).abs() < 1e-5, "{c}");
}

#[test]
fn triod_is_stationary() {
    let h = 0.01;
    let v = to_varifold(&presets::triod(2.0, h), None);
    // g = phi_hat(x) * (x2, x1^2), supported in B_1/2.
    let dg = |x: Point2| {
        let (f, g) = TestFunction::PhiHat.eval_grad(x);
        let w = [x.y, x.x * x.x];
        let dw = [[0.0, 1.0], [2.0 * x.x, 0.0]];
        let grad = [g.x, g.y];
        let mut m = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = dw[i][j] * f + w[i] * grad[j];
            }
        }
        m
    };
    let sup = 9.0;
    assert!(first_variation(&v, dg).abs() <= 10.0 * h * sup);
}

#[test]
fn circle_first_variation_of_position() {
    let v = to_varifold(&unit_circle(256), None);
    let fv = first_variation(&v, |_| [[1.0, 0.0], [0.0, 1.0]]);
    assert!((fv - 2.0 * PI).abs() < 1e-3);
}

#[test]
fn segment_first_variation_exact() {
    let net = presets::segment(Point2::ZERO, Point2::new(1.0, 0.0), 0.01);
    let fv = first_variation(&to_varifold(&net, None), |x| [[2.0 * x.x, 0.0], [0.0, 0.0]]);
    assert!((fv - 1.0).abs() < 1e-6);
}

#[test]
fn discrete_integration_by_parts() {
    let net = Network::from_curves(vec![presets::circle(Point2::new(0.2, 0.1), 0.8, 200)]);
    let v = to_varifold(&net, None);
    // g = (sin x2, x1 x2)
    let g = |x: Point2| Point2::new(x.y.sin(), x.x * x.y);
    let dg = |x: Point2| [[0.0, x.y.cos()], [x.y, x.x]];
    let lhs = first_variation(&v, dg);
    let curv: f64 = vertex_curvatures(&net)
        .iter()
        .map(|s| s.h.dot(g(s.x)) * s.weight)
        .sum();
    let h = net.curves[0].segment_lengths()[0];
    assert!((lhs + curv).abs() <= 10.0 * h, "{lhs} vs {curv}");
}

#[test]
fn static_triod_brakke_residual_vanishes() {
    let net = presets::triod(2.0, 0.01);
    let traj = FlowTrajectory::stationary(&net, (0..11).map(|k| k as f64 * 0.01)).unwrap();
    let phi = TestFunction::PhiRad;
    let r = brakke_residual(&traj, &phi, 0.0, 0.1)
        .unwrap()
        .value()
        .unwrap();
    assert!(r.abs() < 1e-6, "{r}");
}

#[test]
fn boundary_in_support_is_not_integrable() {
    let net = presets::triod(1.0, 0.01);
    let traj = FlowTrajectory::stationary(&net, [0.0, 0.1]).unwrap();
    let r = brakke_residual(&traj, &TestFunction::PhiRad, 0.0, 0.1).unwrap();
    assert_eq!(r, ForcingTerm::NotIntegrable);
}

#[test]
fn circle_brakke_residual() {
    let traj = circle_flow(256, 1e-5, 0.3);
    let phi = Scaled {
        phi: TestFunction::PhiRad,
        center: Point2::ZERO,
        scale: 2.0,
    };
    let terms = brakke_terms(&traj, &phi, 0.0, 0.3).unwrap();
    let exact_drop = 2.0 * PI * (0.4f64.sqrt() - 1.0);
    assert!((terms.lhs - exact_drop).abs() < 5e-3);
    let exact_rhs = -2.0 * PI * (1.0 - 0.4f64.sqrt());
    assert!((terms.rhs.value().unwrap() - exact_rhs).abs() < 5e-3);
    let r = terms.residual().value().unwrap();
    assert!(r.abs() <= 5e-3, "{r}");
}

#[test]
fn inflated_snapshot_is_flagged() {
    let traj = circle_flow(128, 4e-5, 0.1);
    let phi = Scaled {
        phi: TestFunction::PhiRad,
        center: Point2::ZERO,
        scale: 2.0,
    };
    let t2 = traj.t_end();
    let base = brakke_residual(&traj, &phi, 0.0, t2)
        .unwrap()
        .value()
        .unwrap();
    let mut snaps = traj.clone().into_snapshots();
    let last = snaps.last_mut().unwrap();
    let len = last.net.total_length();
    let s = (len + 0.1) / len;
    last.net = last.net.map_points(|p| p * s);
    let bad = FlowTrajectory::new(snaps, traj.forcing.clone()).unwrap();
    let r = brakke_residual(&bad, &phi, 0.0, t2 - 1e-9)
        .unwrap()
        .value()
        .unwrap();
    assert!((r - base - 0.1).abs() < 5e-3, "{r}");
}

#[test]
fn sparse_snapshots_are_rejected() {
    let net = presets::triod(2.0, 0.01);
    let traj = FlowTrajectory::stationary(&net, [0.0, 0.01, 0.02, 0.03, 0.2]).unwrap();
    let err = brakke_residual(&traj, &TestFunction::PhiRad, 0.0, 0.2).unwrap_err();
    assert!(matches!(err, crate::Error::Resolution(_)));
}

#[test]
fn exact_triod_has_no_length_defect() {
    let h = 0.01;
    let d = length_defect(&to_varifold(&presets::triod(3.0, h), None), 0.0, 1.0, 0.0);
    assert!(d.mass.abs() < 2.0 * h && d.phi_rad.abs() < 2.0 * h);
}

/// Length inside the unit disc of the segment from `p` to a far point `q`,
/// with `p` inside: solve `|p + s (q - p)| = 1` by bisection.
fn inside_length(p: Point2, q: Point2) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p.lerp(q, mid).norm() < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo * p.dist(q)
}

#[test]
fn moved_junction_length_defect() {
    let p = Point2::new(0.1, 0.0);
    let tips = [0, 1, 2].map(|j| TriodFrame::IDENTITY.direction(j) * 2.0);
    let id = JunctionId(0);
    let curves = tips
        .iter()
        .map(|&q| Curve::straight(p, q, 0.01, [EndTag::Junction(id), EndTag::Clamped]))
        .collect();
    let net = Network::new(curves, [(id, p)].into());
    let d = length_defect(&to_varifold(&net, None), 0.0, 1.0, 0.0);
    let oracle: f64 = tips.iter().map(|&q| inside_length(p, q)).sum::<f64>() - 3.0;
    assert!(oracle > 0.0);
    assert!((d.mass - oracle).abs() < 1e-12, "{} vs {oracle}", d.mass);
}

#[test]
fn graph_perturbation_length_defect() {
    let a = 0.05;
    let n = 4000;
    let id = JunctionId(0);
    let curves = (0..3)
        .map(|j| {
            let d = TriodFrame::IDENTITY.direction(j);
            let nodes = (0..=n)
                .map(|i| {
                    let x = 2.0 * i as f64 / n as f64;
                    d * x + d.perp() * (a * (PI * x).sin())
                })
                .collect();
            Curve::new(nodes, [EndTag::Junction(id), EndTag::Clamped])
        })
        .collect();
    let net = Network::new(curves, [(id, Point2::ZERO)].into());
    let d = length_defect(&to_varifold(&net, None), 0.0, 1.0, 0.0);
    // 3 int_0^1 (sqrt(1 + f'^2) - 1) by Simpson.
    let m = 20000;
    let f = |x: f64| (1.0 + (a * PI * (PI * x).cos()).powi(2)).sqrt() - 1.0;
    let mut s = f(0.0) + f(1.0);
    for i in 1..m {
        s += f(i as f64 / m as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let oracle = 3.0 * s / (3.0 * m as f64);
    assert!((d.mass - oracle).abs() < 1e-6, "{} vs {oracle}", d.mass);
    let quadratic = 1.5 * (a * PI).powi(2) / 2.0;
    assert!((d.mass / quadratic - 1.0).abs() < 1e-2);
}

#[test]
fn weigh_is_linear() {
    let v = to_varifold(&presets::perturbed_triod(2.0, 0.05, 0.01), None);
    let f = |x: Point2| x.x.sin();
    let g = |x: Point2| x.norm_sq();
    let lhs = weigh(&v, |x| 2.0 * f(x) - 3.0 * g(x));
    let rhs = 2.0 * weigh(&v, f) - 3.0 * weigh(&v, g);
    assert!((lhs - rhs).abs() < 1e-12);
}

#[test]
fn mass_ratio_of_line() {
    let net = presets::segment(Point2::new(-5.0, 0.0), Point2::new(5.0, 0.0), 0.01);
    let v = to_varifold(&net, None);
    let e1 = v.mass_ratio_sup(&[Point2::ZERO, Point2::new(1.0, 0.0)], &[0.1, 1.0]);
    assert!((e1 - 1.0).abs() < 1e-12);
}
