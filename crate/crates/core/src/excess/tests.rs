use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::flowsim::{
    presets, run, FlowTrajectory, ForcingField, ParabolicMap, Scenario, Snapshot,
};
use crate::netgeom::{standard_triod, Curve, EndTag, JunctionId, Network, Point2, TriodFrame};
use crate::varifold::{Ball, C_HAT, C_RAD};

fn times(t1: f64, t2: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| t1 + (t2 - t1) * k as f64 / n as f64)
        .collect()
}

fn static_triod(frame: &TriodFrame, extent: f64, h: f64) -> FlowTrajectory {
    let net = standard_triod(frame, extent, h).unwrap();
    FlowTrajectory::stationary(&net, times(0.0, 1.0, 100)).unwrap()
}

/// Triod whose first ray is the graph of `f`, sampled at the abscissae `k h`.
fn graph_triod(extent: f64, h: f64, f: impl Fn(f64) -> f64) -> Network {
    let id = JunctionId(0);
    let n = (extent / h).round() as usize;
    let dirs = crate::netgeom::triod_directions();
    let curves = (0..3)
        .map(|j| {
            let nodes = (0..=n)
                .map(|i| {
                    let x = i as f64 * h;
                    if j == 0 {
                        Point2::new(x, f(x))
                    } else {
                        dirs[j] * x
                    }
                })
                .collect();
            Curve::new(nodes, [EndTag::Junction(id), EndTag::Clamped])
        })
        .collect();
    Network::new(curves, BTreeMap::from([(id, Point2::ZERO)]))
}

#[test]
fn window_text_round_trip() {
    let w: Window = "0.5,-1,0.25,0.125".parse().unwrap();
    assert_eq!(w, Window::new(Point2::new(0.5, -1.0), 0.25, 0.125).unwrap());
    assert_eq!(w.to_string().parse::<Window>().unwrap(), w);
    assert!("1,2,3".parse::<Window>().is_err());
    assert!("1,2,3,0".parse::<Window>().is_err());
}

#[test]
fn window_validity() {
    let traj = static_triod(&TriodFrame::IDENTITY, 2.0, 0.02);
    assert!(Window::new(Point2::ZERO, 0.5, 0.25)
        .unwrap()
        .check(&traj)
        .is_ok());
    let wide = Window::new(Point2::ZERO, 0.5, 0.6).unwrap();
    assert!(matches!(
        wide.check(&traj),
        Err(Error::InvalidWindow { .. })
    ));
    let late = Window::new(Point2::ZERO, 0.9, 0.25).unwrap();
    let err = late.check(&traj).unwrap_err().to_string();
    assert!(err.contains("0,0,0.9,0.25"), "{err}");
}

#[test]
fn exact_triod_has_zero_excess() {
    let frame = TriodFrame::new(0.2, Point2::new(0.05, -0.03));
    let traj = static_triod(&frame, 3.0, 0.01);
    let w = Window::new(Point2::ZERO, 0.5, 0.3).unwrap();
    assert!(l2_excess(&traj, &w, &frame).unwrap() <= 1e-6);
}

#[test]
fn small_offset_excess_matches_closed_form() {
    let traj = static_triod(&TriodFrame::IDENTITY, 3.0, 0.01);
    let r = 0.5;
    let w = Window::new(Point2::ZERO, 0.5, r).unwrap();
    // Quadrature oracle: rays sampled densely, distance to the shifted rays
    // by segment projection.
    let oracle = |delta: f64| {
        let shifted = Point2::new(0.0, delta);
        let dirs = crate::netgeom::triod_directions();
        let n = 40000;
        let mut sum = 0.0;
        for d in dirs {
            for k in 0..n {
                let s = 4.0 * r * (k as f64 + 0.5) / n as f64;
                let x = d * s;
                let dist = dirs
                    .iter()
                    .map(|&e| {
                        crate::netgeom::project_to_segment(x, shifted, shifted + e * 10.0)
                            .1
                            .dist(x)
                    })
                    .fold(f64::INFINITY, f64::min);
                sum += dist * dist * 4.0 * r / n as f64;
            }
        }
        (r.powi(-5) * 4.0 * r * r * sum).sqrt()
    };
    for delta in [1e-3, 2e-3, 4e-3] {
        let frame = TriodFrame::new(0.0, Point2::new(0.0, delta));
        let mu = l2_excess(&traj, &w, &frame).unwrap();
        let closed = 24f64.sqrt() * delta / r;
        assert!((mu / closed - 1.0).abs() < 1e-2, "{mu} vs {closed}");
        assert!(
            (mu / oracle(delta) - 1.0).abs() < 1e-3,
            "{mu} vs quadrature {}",
            oracle(delta)
        );
    }
}

#[test]
fn excess_is_parabolically_covariant() {
    let net = presets::perturbed_triod(2.0, 0.05, 0.02);
    let traj = FlowTrajectory::stationary(&net, times(0.0, 1.0, 50)).unwrap();
    let w = Window::new(Point2::new(0.05, 0.0), 0.5, 0.3).unwrap();
    let frame = TriodFrame::new(0.1, Point2::new(0.02, 0.01));
    let map = ParabolicMap {
        y: Point2::new(0.3, -0.2),
        s: 0.1,
        lambda: 0.37,
    };
    let scaled = traj.rescaled(&map).unwrap();
    let sw = w.rescaled(&map);
    let sframe = TriodFrame::new(frame.theta(), (frame.xi - map.y) / map.lambda);
    let a = l2_excess(&traj, &w, &frame).unwrap();
    let b = l2_excess(&scaled, &sw, &sframe).unwrap();
    assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
}

#[test]
fn forcing_norm() {
    let traj = static_triod(&TriodFrame::IDENTITY, 3.0, 0.01);
    let r = 0.4;
    let w = Window::new(Point2::ZERO, 0.5, r).unwrap();
    assert_eq!(u_norm(&traj, &w, &ForcingField::zero()).unwrap(), 0.0);
    let c = 0.7;
    let u = ForcingField::constant(Point2::new(0.0, c));
    let closed = r.powf(0.25) * (4.0 * r * r).powf(0.125) * (c * c * 12.0 * r).sqrt();
    let got = u_norm(&traj, &w, &u).unwrap();
    assert!((got / closed - 1.0).abs() < 1e-9, "{got} vs {closed}");
    let doubled = u_norm(
        &traj,
        &w,
        &ForcingField::constant(Point2::new(0.0, 2.0 * c)),
    )
    .unwrap();
    assert!((doubled / got - 2.0).abs() < 1e-12);
}

#[test]
fn phi_j_masses_of_exact_triod() {
    let frame = TriodFrame::new(-0.4, Point2::new(0.1, 0.1));
    let traj = static_triod(&frame, 3.0, 0.005);
    let w = Window::new(Point2::new(0.1, 0.1), 0.5, 0.3).unwrap();
    for row in phi_j_masses(&traj, &w, &frame).unwrap() {
        for m in row {
            assert!((m - C_HAT).abs() < 1e-4, "{m}");
        }
    }
}

#[test]
fn fit_recovers_exact_frame() {
    let truth = TriodFrame::new(0.13, Point2::new(0.031, -0.017));
    let traj = static_triod(&truth, 3.0, 0.01);
    let w = Window::new(Point2::ZERO, 0.5, 0.25).unwrap();
    let fit = fit_frame(&traj, &w).unwrap();
    assert!(fit.mu <= 1e-5, "{}", fit.mu);
    assert!(fit.frame.xi.dist(truth.xi) <= 1e-4, "{:?}", fit.frame);
    assert!((fit.frame.theta() - truth.theta()).abs() <= 1e-4);
}

fn perturbed_static(frame: &TriodFrame, amplitude: f64) -> FlowTrajectory {
    let net = presets::perturbed_triod(2.0, amplitude, 0.01).map_points(|p| frame.to_world(p));
    FlowTrajectory::stationary(&net, times(0.0, 1.0, 20)).unwrap()
}

#[test]
fn fit_beats_true_frame_and_is_seed_independent() {
    let truth = TriodFrame::new(0.05, Point2::new(0.01, 0.02));
    let traj = perturbed_static(&truth, 0.05);
    let w = Window::new(Point2::ZERO, 0.5, 0.25).unwrap();
    let fit = fit_frame(&traj, &w).unwrap();
    let at_truth = l2_excess(&traj, &w, &truth).unwrap();
    assert!(fit.mu <= at_truth, "{} > {at_truth}", fit.mu);
    assert!((l2_excess(&traj, &w, &fit.frame).unwrap() - fit.mu).abs() < 1e-12);

    let seeds = [
        TriodFrame::new(0.0, Point2::ZERO),
        TriodFrame::new(0.2, Point2::new(-0.1, 0.1)),
        TriodFrame::new(-0.1, Point2::new(0.1, -0.05)),
    ];
    for seed in seeds {
        let other = refine_frame(&traj, &w, &seed, 1e-6).unwrap();
        assert!(
            (other.mu - fit.mu).abs() <= 1e-6,
            "seed {seed:?}: {} vs {}",
            other.mu,
            fit.mu
        );
    }
    // Exhaustive fine grid around the optimum never beats the fit.
    let mut best = f64::INFINITY;
    for a in -5..=5 {
        for i in -5..=5 {
            for k in -5..=5 {
                let f = TriodFrame::new(
                    fit.frame.theta() + a as f64 * 2e-4,
                    fit.frame.xi + Point2::new(i as f64, k as f64) * 2e-4,
                );
                best = best.min(l2_excess(&traj, &w, &f).unwrap());
            }
        }
    }
    assert!(fit.mu <= best + 1e-6, "{} vs grid {best}", fit.mu);
}

#[test]
fn finer_grid_never_raises_excess() {
    let traj = perturbed_static(&TriodFrame::new(-0.2, Point2::new(0.03, 0.0)), 0.08);
    let w = Window::new(Point2::ZERO, 0.5, 0.25).unwrap();
    let coarse = fit_frame_with(
        &traj,
        &w,
        &FitConfig {
            theta_div: 30,
            xi_div: 10,
            tol: 1e-6,
        },
    )
    .unwrap();
    let fine = fit_frame(&traj, &w).unwrap();
    assert!(fine.grid_mu <= coarse.grid_mu);
    assert!(fine.mu <= coarse.mu + 1e-6);
}

#[test]
fn decay_profile_of_exact_triod() {
    let traj = static_triod(&TriodFrame::IDENTITY, 3.0, 0.01);
    let p = decay_profile(&traj, Point2::ZERO, 0.5, &[0.4, 0.2, 0.1]).unwrap();
    assert_eq!(p.entries.len(), 3);
    assert!(p.entries.iter().all(|e| e.mu <= NOISE_FLOOR));
    assert!(p.exponent.is_none());
    assert!(decay_profile(&traj, Point2::ZERO, 0.5, &[0.4, 0.3, 0.1]).is_err());
    assert!(decay_profile(&traj, Point2::ZERO, 0.5, &[0.4, 0.2]).is_err());
    assert!(decay_profile(&traj, Point2::ZERO, 0.5, &[0.8, 0.4, 0.2]).is_err());
}

#[test]
fn track_of_static_triod_is_constant() {
    let xi = Point2::new(0.1, -0.05);
    let traj = static_triod(&TriodFrame::new(0.0, xi), 2.0, 0.02);
    let track = track_junctions(
        &traj,
        &Ball::new(Point2::ZERO, 0.5),
        &TrackConfig::default(),
    )
    .unwrap();
    assert_eq!(track.len(), traj.snapshots().len());
    assert!(track.samples().all(|(_, p)| p == xi));
    let fit = holder_exponent(&track, default_min_gap(&track)).unwrap();
    assert!(fit.exponent.is_none());
    assert!(fit.pairs_below_floor > 0);
}

#[test]
fn track_follows_translating_triod() {
    let v = Point2::new(0.3, -0.2);
    let mut sc = Scenario::new(presets::triod(2.0, 0.02), 1e-5, 0.2, 0.02)
        .with_stride(1000)
        .with_forcing(ForcingField::constant(v));
    sc.clamp_velocity = v;
    let traj = run(&sc).unwrap();
    let track = track_junctions(
        &traj,
        &Ball::new(Point2::ZERO, 1.0),
        &TrackConfig::default(),
    )
    .unwrap();
    let pts: Vec<(f64, Point2)> = track.samples().collect();
    assert_eq!(pts.len(), traj.snapshots().len());
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mp = pts.iter().fold(Point2::ZERO, |a, p| a + p.1) / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = pts
        .iter()
        .fold(Point2::ZERO, |a, p| a + (p.1 - mp) * (p.0 - mt))
        / stt;
    assert!((slope - v).norm() < 1e-3, "{slope:?}");
}

#[test]
fn smooth_curve_track_is_all_gaps() {
    let c = presets::circle(Point2::ZERO, 0.5, 200);
    let traj =
        FlowTrajectory::stationary(&Network::from_curves(vec![c]), times(0.0, 0.1, 100)).unwrap();
    let cfg = TrackConfig {
        tau: Some(0.004),
        grid: 21,
    };
    let track = track_junctions(&traj, &Ball::new(Point2::new(0.5, 0.0), 0.3), &cfg).unwrap();
    assert!(track.gaps.iter().all(|&g| g));
    assert!(holder_exponent(&track, 0.0).is_err());
}

#[test]
fn density_fallback_finds_untagged_vertex() {
    let mut net = presets::triod(2.0, 0.01);
    let xi = net.junctions[&JunctionId(0)];
    net.junctions.clear();
    for c in &mut net.curves {
        c.ends[0] = EndTag::Free;
    }
    let traj = FlowTrajectory::stationary(&net, times(0.0, 0.1, 100)).unwrap();
    let cfg = TrackConfig {
        tau: Some(0.004),
        grid: 21,
    };
    let track = track_junctions(&traj, &Ball::new(Point2::new(0.02, 0.01), 0.2), &cfg).unwrap();
    let found: Vec<_> = track.samples().collect();
    assert!(!found.is_empty());
    for (_, p) in found {
        assert!(p.dist(xi) <= 0.2 / 20.0 * 1.5, "{p:?}");
    }
}

#[test]
fn holder_exponent_of_lipschitz_path() {
    let ts = times(0.0, 1.0, 100);
    let track = JunctionTrack {
        positions: ts.iter().map(|&t| Point2::new(t, 0.0)).collect(),
        gaps: vec![false; ts.len()],
        times: ts,
    };
    let fit = holder_exponent(&track, default_min_gap(&track)).unwrap();
    assert!((fit.exponent.unwrap() - 1.0).abs() < 5e-2);
    assert!((fit.constant.unwrap() - 1.0).abs() < 1e-6);
    assert!(fit.pairs_too_close > 0);

    let short = JunctionTrack {
        times: track.times[..5].to_vec(),
        positions: track.positions[..5].to_vec(),
        gaps: vec![false; 5],
    };
    assert!(holder_exponent(&short, 0.0).is_err());
}

#[test]
fn curvature_energy_of_static_triod() {
    let h = 0.01;
    let traj = static_triod(&TriodFrame::new(0.3, Point2::ZERO), 3.0, h);
    let w = Window::new(Point2::ZERO, 0.5, 0.3).unwrap();
    let e = curvature_energy(&traj, &w).unwrap();
    assert!(e.mass_defect_sup <= 2.0 * h, "{e:?}");
    assert!(e.energy <= 1e-8, "{e:?}");
}

fn shrinking_circle() -> FlowTrajectory {
    let c = presets::circle(Point2::ZERO, 1.0, 256);
    let h = 2.0 * PI / 256.0;
    run(&Scenario::new(Network::from_curves(vec![c]), 1e-5, 0.3, h).with_stride(200)).unwrap()
}

#[test]
fn circle_curvature_energy_and_shrinker_identity() {
    let traj = shrinking_circle();
    let w = Window::new(Point2::ZERO, 0.1, 1.0).unwrap();
    let e = curvature_energy(&traj, &w).unwrap();
    let exact = 2.0 * PI * (1.0 - 0.4f64.sqrt());
    assert!(
        (e.energy / exact - 1.0).abs() < 1e-2,
        "{} vs {exact}",
        e.energy
    );

    let w = Window::new(Point2::ZERO, 0.5, 1.0).unwrap();
    let v = shrinker_energy(&traj, 0.5, &w).unwrap();
    assert!(v.abs() <= 1e-3, "{v}");
}

#[test]
fn shrinker_energy_of_static_triod() {
    let traj = static_triod(&TriodFrame::IDENTITY, 3.0, 0.01);
    let w = Window::new(Point2::ZERO, 0.5, 0.3).unwrap();
    assert!(shrinker_energy(&traj, 0.5, &w).unwrap() <= 1e-8);
    assert!(shrinker_energy(&traj, 0.5 - 0.09 * 0.8, &w).is_err());
}

#[test]
fn noncon_identities() {
    let frame = TriodFrame::new(0.1, Point2::new(0.02, 0.0));
    let traj = static_triod(&frame, 3.0, 0.01);
    let w = Window::new(Point2::ZERO, 0.5, 0.3).unwrap();
    assert!(weighted_noncon(&traj, 0.5, &w, 0.5, &frame).unwrap().value <= 1e-8);

    let traj = perturbed_static(&frame, 0.05);
    let half = weighted_noncon(&traj, 0.55, &w, 0.5, &frame).unwrap();
    let flat = weighted_noncon(&traj, 0.55, &w, 0.0, &frame).unwrap();
    assert!(half.value > 0.0);
    assert!(flat.value >= half.value * half.lag.sqrt() * (1.0 - 1e-12));
    assert!(weighted_noncon(&traj, 0.55, &w, 1.0, &frame).is_err());
}

#[test]
fn graph_extraction() {
    let interval = GraphInterval::new(0.1, 0.9, 81).unwrap();
    let net = presets::triod(2.0, 0.01);
    for j in 1..=3 {
        let g = graph_extract(&net, &TriodFrame::IDENTITY, j, &interval)
            .unwrap()
            .into_samples()
            .unwrap();
        assert!(g.iter().all(|&(_, y)| y.abs() < 1e-12));
    }
    let f = |x: f64| 0.05 * (PI * x).sin();
    let net = graph_triod(2.0, 0.01, f);
    let g = graph_extract(&net, &TriodFrame::IDENTITY, 1, &interval)
        .unwrap()
        .into_samples()
        .unwrap();
    for (x, y) in g {
        assert!((y - f(x)).abs() < 1e-6);
    }
    // A fold: the curve runs out to x = 0.6, back to 0.4 and out again.
    let fold = Curve::new(
        vec![
            Point2::new(0.2, 0.0),
            Point2::new(0.6, 0.0),
            Point2::new(0.4, 0.1),
            Point2::new(0.9, 0.1),
        ],
        [EndTag::Clamped; 2],
    );
    let net = Network::from_curves(vec![fold]);
    let out = graph_extract(
        &net,
        &TriodFrame::IDENTITY,
        1,
        &GraphInterval::new(0.3, 0.8, 11).unwrap(),
    )
    .unwrap();
    assert!(!out.is_graph());
    assert!(graph_extract(&net, &TriodFrame::IDENTITY, 4, &interval).is_err());
    assert!(GraphInterval::new(0.0, 1.0, 10).is_err());
}

#[test]
fn heat_residual_of_static_triod() {
    let traj = static_triod(&TriodFrame::IDENTITY, 3.0, 0.01);
    let w = Window::new(Point2::ZERO, 0.5, 0.3).unwrap();
    let r = heat_residual(
        &traj,
        &TriodFrame::IDENTITY,
        2,
        &GraphInterval::new(0.05, 0.3, 26).unwrap(),
        &w,
    )
    .unwrap();
    assert!(r.raw <= 1e-8);
    assert!(r.normalized.is_none());
}

/// Triod whose first ray carries `a exp(-pi^2 t) sin(pi x)` on `[0, 1]`.
pub(crate) fn heat_trajectory(a: f64) -> FlowTrajectory {
    let snaps = times(0.0, 4.0, 800)
        .into_iter()
        .map(|t| Snapshot {
            t,
            net: graph_triod(5.0, 0.01, |x| {
                if x <= 1.0 {
                    a * (-PI * PI * t).exp() * (PI * x).sin()
                } else {
                    0.0
                }
            }),
        })
        .collect();
    FlowTrajectory::new(snaps, ForcingField::zero()).unwrap()
}

#[test]
fn heat_equation_data_has_small_residual() {
    let traj = heat_trajectory(0.05);
    let w = Window::new(Point2::ZERO, 2.0, 1.0).unwrap();
    let interval = GraphInterval::new(0.01, 0.99, 99).unwrap();
    let r = heat_residual(&traj, &TriodFrame::IDENTITY, 1, &interval, &w).unwrap();
    assert!(r.raw <= 1e-3, "{r:?}");
    assert!(r.mu > 0.0);
}

#[test]
fn junction_slopes_of_rotated_triod() {
    let frame = TriodFrame::new(0.2, Point2::new(0.1, 0.0));
    let net = standard_triod(&TriodFrame::new(0.25, Point2::new(0.1, 0.0)), 1.0, 0.01).unwrap();
    let s = junction_slopes(&net, &frame).unwrap();
    for v in s {
        assert!((v - 0.05f64.tan()).abs() < 1e-12, "{s:?}");
    }
}

/// Distance to the three rays from `origin`, by dense sampling.
fn sampled_dist(x: Point2, origin: Point2) -> f64 {
    let mut best = x.dist(origin);
    for d in crate::netgeom::triod_directions() {
        let s = (x - origin).dot(d).max(0.0);
        best = best.min((x - origin - d * s).norm());
    }
    best
}

#[test]
fn two_triod_gap_against_dense_oracle() {
    let len = 0.1;
    let normal = Point2::new(0.0, 1.0);
    let f1 = TriodFrame::IDENTITY;
    let f2 = TriodFrame::new(0.0, normal * len);
    let gap = two_triod_gap(&f1, &f2).unwrap();
    assert!(gap >= 3f64.sqrt() / 2.0 - 1e-2, "{gap}");
    // Oracle: the component around the first ray, sampled on a polar grid.
    let mut best = f64::INFINITY;
    for i in 1..=400 {
        for k in 0..=200 {
            let r = i as f64 * 0.002;
            let a = -PI / 3.0 + 2.0 * PI / 3.0 * k as f64 / 200.0;
            let x = Point2::from_angle(a) * r;
            let away = [PI / 3.0, -PI / 3.0]
                .iter()
                .map(|&b| {
                    (x - Point2::from_angle(b) * x.dot(Point2::from_angle(b)).max(0.0)).norm()
                })
                .fold(f64::INFINITY, f64::min);
            if away > len {
                best =
                    best.min((sampled_dist(x, Point2::ZERO) + sampled_dist(x, normal * len)) / len);
            }
        }
    }
    assert!((gap - best).abs() < 2e-2, "{gap} vs oracle {best}");

    let rot = TriodFrame::new(0.0, (normal * len).rotate(2.0 * PI / 3.0));
    assert!((two_triod_gap(&f1, &rot).unwrap() - gap).abs() < 1e-9);
    let tiny = TriodFrame::new(0.0, normal * 1e-6);
    assert!((two_triod_gap(&f1, &tiny).unwrap() - gap).abs() < 1e-9);
    assert!(two_triod_gap(&f1, &f1).is_err());
    assert!(two_triod_gap(&f1, &TriodFrame::new(0.1, normal)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn two_triod_gap_is_bounded_below(angle in 0.0..2.0 * PI, len in 1e-3..1.0f64, theta in -1.0..1.0f64) {
        let f1 = TriodFrame::new(theta, Point2::new(0.3, -0.1));
        let f2 = TriodFrame::new(theta, f1.xi + Point2::from_angle(angle) * len);
        let gap = two_triod_gap(&f1, &f2).unwrap();
        prop_assert!(gap >= 3f64.sqrt() / 2.0 - 1e-2);
    }

    #[test]
    fn excess_scale_invariance(cx in -0.5..0.5f64, cy in -0.5..0.5f64, s0 in -1.0..1.0f64, lambda in 0.2..5.0f64) {
        let net = presets::perturbed_triod(2.0, 0.05, 0.02);
        let traj = FlowTrajectory::stationary(&net, times(0.0, 1.0, 20)).unwrap();
        let w = Window::new(Point2::new(0.02, 0.01), 0.5, 0.25).unwrap();
        let frame = TriodFrame::new(0.05, Point2::new(0.01, 0.0));
        let map = ParabolicMap { y: Point2::new(cx, cy), s: s0, lambda };
        let scaled = traj.rescaled(&map).unwrap();
        let sframe = TriodFrame::new(frame.theta(), (frame.xi - map.y) / lambda);
        let sw = w.rescaled(&map);
        let a = l2_excess(&traj, &w, &frame).unwrap();
        let b = l2_excess(&scaled, &sw, &sframe).unwrap();
        prop_assert!((a - b).abs() <= 1e-10);
        let a = curvature_energy(&traj, &w).unwrap();
        let b = curvature_energy(&scaled, &sw).unwrap();
        prop_assert!((a.energy - b.energy).abs() <= 1e-8 * (1.0 + a.energy));
        prop_assert!((a.mass_defect_sup - b.mass_defect_sup).abs() <= 1e-10);
    }

    #[test]
    fn mass_defect_vanishes_on_exact_triods(theta in -1.0..1.0f64) {
        let frame = TriodFrame::new(theta, Point2::ZERO);
        let traj = static_triod(&frame, 3.0, 0.005);
        let w = Window::new(Point2::ZERO, 0.5, 0.3).unwrap();
        let e = curvature_energy(&traj, &w).unwrap();
        prop_assert!(e.mass_defect_sup <= 0.01 * C_RAD);
    }
}
