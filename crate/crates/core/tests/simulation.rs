use std::f64::consts::FRAC_PI_2;

use imtrack::measurement::NoiseSpec;
use imtrack::scenarios::builtin;
use imtrack::sim::{
    generate_scans, generate_truth, run_rng, segment_windows, CountLaw, Kinematics, ScanSpec, SegmentKind, TargetShape,
    TrajectorySegment, TurnDirection,
};
use nalgebra::Vector2;

#[test]
fn poisson_counts_have_the_configured_mean() {
    let spec = ScanSpec {
        count: CountLaw::Poisson(10.0),
        noise: NoiseSpec::new(1.0, 1.0).unwrap(),
        period: 1.0,
    };
    let mut rng = run_rng(21, 0);
    let n = 20_000;
    let total: usize = (0..n).map(|_| spec.draw_count(&mut rng)).sum();
    let mean = total as f64 / n as f64;
    assert!((9.7..=10.3).contains(&mean), "mean count {mean}");
}

#[test]
fn truth_epochs_follow_the_segments() {
    let shape = TargetShape::Ellipse { a1: 2.0, a2: 1.0 };
    let init = Kinematics {
        pos: Vector2::zeros(),
        vel: Vector2::new(1.0, 0.0),
        orientation: 0.0,
    };
    let segments = [
        TrajectorySegment::cv(10.0),
        TrajectorySegment::ct(30.0, 3.0, TurnDirection::Left),
        TrajectorySegment::cv(10.0),
    ];
    let truth = generate_truth(&shape, &init, &segments, 1.0).unwrap();
    assert_eq!(truth.len(), 51);
    for (k, t) in truth.iter().enumerate() {
        assert_eq!(t.time, k as f64);
        assert!((t.state.vel.norm() - 1.0).abs() < 1e-12);
    }
    // A 90° left turn leaves the target heading along +y.
    let last = truth.last().unwrap();
    assert!((last.state.vel - Vector2::new(0.0, 1.0)).norm() < 1e-9);
    assert!((last.orientation - FRAC_PI_2).abs() < 1e-9);
    // Straight, quarter circle of radius 1/ω, straight.
    let r = 1.0 / 3f64.to_radians();
    assert!((last.state.pos - Vector2::new(10.0 + r, r + 10.0)).norm() < 1e-9);
    assert_eq!(truth[20].state.omega, 3f64.to_radians());
    assert_eq!(truth[45].state.omega, 0.0);
}

#[test]
fn segment_windows_tile_the_trajectory() {
    let cfg = builtin("slow-maneuver").unwrap();
    let segments = &cfg.truth.as_ref().unwrap().segments;
    let windows = segment_windows(segments);
    assert_eq!(windows.len(), segments.len());
    assert_eq!(windows[0].1, 0.0);
    for pair in windows.windows(2) {
        assert_eq!(pair[0].2, pair[1].1);
        assert_ne!(pair[0].0, pair[1].0);
    }
    assert_eq!(windows.iter().filter(|w| w.0 == SegmentKind::Ct).count(), 3);
    let end = windows.last().unwrap().2;
    assert_eq!(cfg.truth().unwrap().last().unwrap().time, end);
}

#[test]
fn scans_depend_only_on_seed_and_run() {
    let cfg = builtin("turn-ellipse").unwrap();
    let truth = cfg.truth().unwrap();
    let shape = cfg.shape().unwrap();
    let spec = cfg.scan_spec().unwrap();
    let a = generate_scans(&truth, &shape, &spec, &mut run_rng(5, 3));
    let b = generate_scans(&truth, &shape, &spec, &mut run_rng(5, 3));
    let c = generate_scans(&truth, &shape, &spec, &mut run_rng(5, 4));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.len(), truth.len());
    for (scan, t) in a.iter().zip(&truth) {
        assert_eq!(scan.time, t.time);
    }
}

#[test]
fn noise_free_points_lie_inside_the_target() {
    let shape = TargetShape::PlusSign {
        bar1: [3.0, 0.5],
        bar2: [0.5, 2.0],
    };
    let init = Kinematics {
        pos: Vector2::new(4.0, -1.0),
        vel: Vector2::new(0.5, 0.5),
        orientation: 0.7,
    };
    let truth = generate_truth(
        &shape,
        &init,
        &[TrajectorySegment::ct(20.0, 2.0, TurnDirection::Right)],
        1.0,
    )
    .unwrap();
    let spec = ScanSpec {
        count: CountLaw::Fixed(50),
        noise: NoiseSpec::new(0.0, 0.0).unwrap(),
        period: 1.0,
    };
    let scans = generate_scans(&truth, &shape, &spec, &mut run_rng(9, 0));
    for (scan, t) in scans.iter().zip(&truth) {
        assert_eq!(scan.points.len(), 50);
        let region = shape.region(&t.pose());
        for p in &scan.points {
            let pose = t.pose();
            let (s, c) = pose.orientation.sin_cos();
            let d = p - pose.centroid;
            let body = Vector2::new(c * d.x + s * d.y, -s * d.x + c * d.y);
            assert!(shape.contains_body(&body), "{p:?} outside at t = {}", t.time);
        }
        assert!((region.area() - shape.area()).abs() < 1e-9);
    }
}
