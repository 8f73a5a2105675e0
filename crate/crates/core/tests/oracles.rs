//! Independent reference implementations checked against the production
//! code paths.

use costvalley_core::geom::VehiclePoint;
use costvalley_core::grid::{
    convolve, inflate, rasterize, GridConfig, InflationParams, OccupancyGrid, MAX_COST,
};
use costvalley_core::perception::{
    fit_plane_ransac, segment_ground, Point3, PointCloud, RansacParams,
};
use costvalley_core::planner::{
    goal_from_path, plan_path, PathResult, PlannerConfig, SelectionRule,
};
use costvalley_core::CellIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Full 2D kernel, full double loop over output cells and taps.
fn naive_convolve(cells: &[f64], size: usize, sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as i64;
    let n = size as i64;
    let mut norm = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            norm += (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
        }
    }
    let mut out = vec![0.0; cells.len()];
    for y in 0..n {
        for x in 0..n {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (sx, sy) = (x - dx, y - dy);
                    if (0..n).contains(&sx) && (0..n).contains(&sy) {
                        let w =
                            (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp() / norm;
                        acc += w * cells[(sy * n + sx) as usize];
                    }
                }
            }
            out[(y * n + x) as usize] = acc;
        }
    }
    out
}

/// Straight transcription of the two-step rule: cheapest cell, then the one
/// nearest the previous column, then the left one.
fn oracle_plan(grid: &OccupancyGrid, max_expansions: usize, half_width: usize) -> Vec<CellIndex> {
    let n = grid.size() as i64;
    let mut x = n / 2;
    let mut y = n / 2;
    let mut nodes = vec![CellIndex::new(x as usize, y as usize)];
    for _ in 0..max_expansions {
        y += 1;
        let candidates: Vec<i64> = (x - half_width as i64..=x + half_width as i64)
            .filter(|c| (0..n).contains(c))
            .collect();
        let cost = |c: i64| grid.get(c as usize, y as usize);
        let least = candidates
            .iter()
            .map(|&c| cost(c))
            .fold(f64::INFINITY, f64::min);
        let cheapest: Vec<i64> = candidates
            .into_iter()
            .filter(|&c| cost(c) == least)
            .collect();
        let least_dev = cheapest.iter().map(|c| (c - x).abs()).min().unwrap();
        x = *cheapest
            .iter()
            .find(|c| (*c - x).abs() == least_dev)
            .unwrap();
        nodes.push(CellIndex::new(x as usize, y as usize));
    }
    nodes
}

fn random_grid(rng: &mut ChaCha8Rng, size: usize, levels: u32) -> OccupancyGrid {
    let cfg = GridConfig::new(size, 0.1).unwrap();
    // few distinct levels make ties common
    let cells = (0..size * size)
        .map(|_| (rng.random_range(0..levels) as f64) * (MAX_COST / (levels - 1) as f64))
        .collect();
    OccupancyGrid::from_cells(cfg, cells).unwrap()
}

#[test]
fn separable_convolution_matches_naive_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &sigma in &[0.8, 1.0, 2.5] {
        let params = InflationParams::with_sigma(sigma).unwrap();
        let g = random_grid(&mut rng, 25, 7);
        let fast = convolve(g.cells(), 25, &params);
        let slow = naive_convolve(g.cells(), 25, sigma, params.kernel_radius());
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9, "sigma {sigma}: {a} vs {b}");
        }
    }
}

#[test]
fn rasterize_matches_per_point_transform() {
    let cfg = GridConfig::new(101, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let points: Vec<VehiclePoint> = (0..1000)
        .map(|_| VehiclePoint::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
        .collect();
    let grid = rasterize(&points, cfg);

    let mut expected = std::collections::BTreeSet::new();
    for p in &points {
        let x = 50 + (p.right / 0.1).round() as i64;
        let y = 50 + (p.forward / 0.1).round() as i64;
        if (0..101).contains(&x) && (0..101).contains(&y) {
            expected.insert((x as usize, y as usize));
        }
    }
    let mut occupied = std::collections::BTreeSet::new();
    for y in 0..101 {
        for x in 0..101 {
            match grid.get(x, y) {
                v if v == MAX_COST => {
                    occupied.insert((x, y));
                }
                v => assert_eq!(v, 0.0),
            }
        }
    }
    assert_eq!(occupied, expected);
    // each point lies within half a cell of the center of its cell
    for p in &points {
        if let Some(cell) = cfg.metric_to_cell(*p) {
            let c = cfg.cell_to_metric(cell);
            assert!((c.forward - p.forward).abs() <= 0.05 + 1e-12);
            assert!((c.right - p.right).abs() <= 0.05 + 1e-12);
        }
    }
}

#[test]
fn planner_matches_oracle_on_random_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let g = random_grid(&mut rng, 41, 4);
        let half_width = rng.random_range(1..=4);
        let max_expansions = rng.random_range(1..20);
        let cfg = PlannerConfig {
            max_expansions,
            half_width,
            selection_rule: SelectionRule::Lexicographic,
        };
        let path = plan_path(&g, &cfg).unwrap();
        assert_eq!(path.nodes, oracle_plan(&g, max_expansions, half_width));
    }
}

#[test]
fn literal_rule_never_moves_away_from_previous_column_for_equal_cost() {
    // a uniform row is a tie everywhere: both rules go straight
    let cfg = GridConfig::new(21, 0.1).unwrap();
    let g = OccupancyGrid::from_cells(cfg, vec![7.0; 441]).unwrap();
    for rule in [
        SelectionRule::Lexicographic,
        SelectionRule::LiteralPseudocode,
    ] {
        let path = plan_path(
            &g,
            &PlannerConfig {
                max_expansions: 9,
                half_width: 3,
                selection_rule: rule,
            },
        )
        .unwrap();
        assert!(path.nodes.iter().all(|n| n.x == 10));
    }
}

#[test]
fn corridor_valley_is_centered() {
    let cfg = GridConfig::new(101, 0.1).unwrap();
    let mut g = OccupancyGrid::empty(cfg);
    for y in 0..101 {
        g.set(30, y, MAX_COST);
        g.set(70, y, MAX_COST);
    }
    let out = inflate(&g, &InflationParams::new(8.0, 24).unwrap());
    let oracle = naive_convolve(g.cells(), 101, 8.0, 24);
    for y in 0..101 {
        let argmin = |row: &[f64]| (31..70).min_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        let a = argmin(out.row(y));
        assert!(a.abs_diff(50) <= 1);
        assert_eq!(a, argmin(&oracle[y * 101..(y + 1) * 101]));
    }
}

#[test]
fn ransac_rejects_known_outliers() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut points = Vec::new();
    for _ in 0..90 {
        points.push(Point3::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(0.0..10.0),
            -1.2,
        ));
    }
    for _ in 0..10 {
        points.push(Point3::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(0.0..10.0),
            -1.2 + rng.random_range(0.3..1.0),
        ));
    }
    let cloud = PointCloud::new(points.clone(), 1.2).unwrap();
    let (_, mask) = fit_plane_ransac(&cloud, &RansacParams::default()).unwrap();
    // residual against the true plane z = -1.2 decides the expected label
    let expected: Vec<bool> = points.iter().map(|p| (p.z + 1.2).abs() <= 0.05).collect();
    assert_eq!(mask, expected);
    assert_eq!(mask.iter().filter(|&&m| m).count(), 90);
    let obstacles = segment_ground(&cloud, &RansacParams::default()).unwrap();
    assert_eq!(obstacles.points, points[90..]);
}

#[test]
fn goal_round_trips_through_metric_to_cell() {
    let cfg = GridConfig::new(101, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let last = CellIndex::new(rng.random_range(0..101), rng.random_range(51..101));
        let path = PathResult {
            nodes: vec![cfg.center_cell(), last],
            goal_point: VehiclePoint::default(),
            goal_cost: 0.0,
        };
        let goal = goal_from_path(&path, &cfg);
        assert_eq!(cfg.metric_to_cell(goal), Some(last));
    }
    let path = PathResult {
        nodes: vec![CellIndex::new(60, 70)],
        goal_point: VehiclePoint::default(),
        goal_cost: 0.0,
    };
    let goal = goal_from_path(&path, &cfg);
    assert!((goal.forward - 2.0).abs() < 1e-12 && (goal.right - 1.0).abs() < 1e-12);
}
