//! Whole-tick and whole-run checks on small scenes.

use costvalley_core::config::{RawScenario, ScenarioConfig};
use costvalley_core::geom::WorldPoint;
use costvalley_core::perception::{simulate_lidar_labeled, HitKind, LidarModel};
use costvalley_core::sim::{make_track, run_scenario, tick, ConeShape, TrackKind, TrackSpec};
use costvalley_core::VehicleState;

fn corridor(laps_offset: f64) -> ScenarioConfig {
    let mut raw = RawScenario::default();
    raw.track.kind = TrackKind::Corridor;
    raw.track.length = 40.0;
    raw.run.laps = 1;
    raw.run.start_offset = laps_offset;
    ScenarioConfig::from_raw(&raw).unwrap()
}

#[test]
fn horizontal_beam_stops_at_cone_surface() {
    let track = TrackSpec::from_parts(
        vec![WorldPoint::new(0.0, 0.0), WorldPoint::new(0.0, 10.0)],
        false,
        4.0,
        vec![WorldPoint::new(0.0, 5.0)],
        ConeShape::default(),
    )
    .unwrap();
    let model = LidarModel {
        beam_elevations: vec![0.0],
        azimuth_step: 1f64.to_radians(),
        max_range: 15.0,
        range_noise_sigma: 0.0,
        mount_height: 0.3,
    };
    // facing +y from the origin
    let pose = VehicleState::new(0.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0);
    let hits = simulate_lidar_labeled(&track, &pose, &model, 0);
    let ahead = hits
        .iter()
        .find(|(p, _)| p.x.abs() < 1e-12 && p.y > 0.0)
        .expect("beam straight ahead hits");
    assert_eq!(ahead.1, HitKind::Cone);
    assert!((ahead.0.y - (5.0 - 0.15)).abs() < 1e-9, "{:?}", ahead.0);
    assert_eq!(ahead.0.z, 0.0);

    // at azimuth a the ray misses unless its perpendicular offset from the
    // cone axis, 5·sin a, is below the radius
    for (p, kind) in &hits {
        if *kind == HitKind::Cone {
            let a = p.x.atan2(p.y).abs();
            assert!(5.0 * a.sin() <= 0.15 + 1e-9);
        }
    }
}

#[test]
fn centered_corridor_start_goes_straight() {
    let cfg = corridor(0.0);
    let track = cfg.build_track();
    let out = tick(&track, &track.start_pose(0.0), 0.0, &cfg, 0);
    assert!(out.trace.fault.is_none());
    assert!(out.trace.steer.abs() < 0.01, "steer {}", out.trace.steer);
    assert!(out.trace.goal.right.abs() <= cfg.grid.resolution());
}

#[test]
fn ticks_are_deterministic() {
    let cfg = corridor(0.5);
    let track = cfg.build_track();
    let pose = track.start_pose(0.5);
    let a = tick(&track, &pose, 0.0, &cfg, 17);
    let b = tick(&track, &pose, 0.0, &cfg, 17);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.grid, b.grid);
    let c = tick(&track, &pose, 0.0, &cfg, 18);
    assert_ne!(a.trace.grid_hash, c.trace.grid_hash);
}

#[test]
fn open_track_run_metrics_are_consistent() {
    let cfg = corridor(0.0);
    let run = run_scenario(&cfg);
    let m = &run.metrics;
    assert!(m.completed, "{m:?}");
    assert_eq!(m.lap_times.len(), 1);
    let total: f64 = m.lap_times.iter().sum();
    assert!((m.avg_speed * total - m.path_length).abs() < 1e-9);
    // nearly straight at the commanded speed
    assert!((m.avg_speed - cfg.vehicle.commanded_speed).abs() < 1e-6);
    assert!((m.path_length - 40.0).abs() < 0.05, "{}", m.path_length);

    let track = cfg.build_track();
    let observed = run
        .trajectory
        .iter()
        .map(|s| track.nearest_cone_distance(WorldPoint::new(s.x, s.y)))
        .fold(f64::INFINITY, f64::min);
    assert!(m.min_cone_clearance <= observed);
    assert!(m.min_cone_clearance >= cfg.run.strike_radius);
    let t: Vec<f64> = run.trajectory.iter().map(|s| s.t).collect();
    assert!(t.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn wall_ends_the_run() {
    let mut raw = RawScenario::default();
    raw.track.kind = TrackKind::PerpendicularWall;
    raw.track.length = 60.0;
    raw.track.wall_distance = 5.0;
    raw.run.laps = 1;
    let cfg = ScenarioConfig::from_raw(&raw).unwrap();
    let m = run_scenario(&cfg).metrics;
    assert!(!m.completed);
    assert!(m.failure.is_some());
    assert!(make_track(TrackKind::PerpendicularWall, &cfg.track)
        .unwrap()
        .barrier_at
        .is_some());
}
