//! Cone tracks, the closed-loop tick and lap bookkeeping.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::config::ScenarioConfig;
use crate::control::{pure_pursuit_steer, step_vehicle, ControlError, VehicleState};
use crate::geom::{point_segment_distance, segment_intersection, VehiclePoint, WorldPoint};
use crate::grid::{inflate, rasterize, CellIndex, OccupancyGrid};
use crate::perception::{segment_ground_report, simulate_lidar, PerceptionError};
use crate::planner::{plan_path, PlannerError};

/// Tracks narrower than this leave no room for the kart between the cones.
pub const MIN_TRACK_WIDTH: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrackError {
    #[error("invalid track geometry: {0}")]
    InvalidGeometry(&'static str),
}

/// Cones are upright cylinders standing on the ground.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConeShape {
    pub radius: f64,
    pub height: f64,
}

impl Default for ConeShape {
    fn default() -> Self {
        Self {
            radius: 0.15,
            height: 0.45,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TrackKind {
    Oval,
    Corridor,
    PerpendicularWall,
    InvertedU,
}

impl TrackKind {
    pub fn is_closed(self) -> bool {
        matches!(self, TrackKind::Oval)
    }
}

/// Generator parameters, meters. Each kind reads the subset it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackParams {
    pub width: f64,
    pub cone_spacing: f64,
    /// Oval: length of each straight.
    pub straight_length: f64,
    /// Oval: centerline radius of the two semicircles.
    pub radius: f64,
    /// Corridor kinds: length of the corridor.
    pub length: f64,
    /// Adversarial kinds: distance from the start to the blocking wall.
    pub wall_distance: f64,
    pub wall_spacing: f64,
    /// Inverted U: distance between the two legs.
    pub u_width: f64,
    /// Inverted U: how far the legs reach back toward the start.
    pub u_depth: f64,
    pub cone_shape: ConeShape,
}

impl Default for TrackParams {
    fn default() -> Self {
        // A 434.2 m oval.
        Self {
            width: 4.0,
            cone_spacing: 2.0,
            straight_length: 122.852_220_392_306_2,
            radius: 30.0,
            length: 40.0,
            wall_distance: 15.0,
            wall_spacing: 0.5,
            u_width: 2.0,
            u_depth: 3.0,
            cone_shape: ConeShape::default(),
        }
    }
}

/// A cone-bounded track in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSpec {
    /// Centerline vertices; closed tracks do not repeat the first vertex.
    pub centerline: Vec<WorldPoint>,
    pub closed: bool,
    pub width: f64,
    pub cones: Vec<WorldPoint>,
    pub cone_shape: ConeShape,
    /// Segment across the track at arc length 0.
    pub start_line: (WorldPoint, WorldPoint),
    /// Segment across the far end of an open track.
    pub finish_line: Option<(WorldPoint, WorldPoint)>,
    pub length: f64,
    /// Arc length of the blocking wall on adversarial tracks.
    pub barrier_at: Option<f64>,
}

impl TrackSpec {
    pub fn from_parts(
        centerline: Vec<WorldPoint>,
        closed: bool,
        width: f64,
        cones: Vec<WorldPoint>,
        cone_shape: ConeShape,
    ) -> Result<Self, TrackError> {
        if centerline.len() < 2 {
            return Err(TrackError::InvalidGeometry("centerline needs two points"));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(TrackError::InvalidGeometry("width must be positive"));
        }
        let mut length: f64 = centerline.windows(2).map(|w| w[0].distance(w[1])).sum();
        if closed {
            length += centerline[centerline.len() - 1].distance(centerline[0]);
        }
        let cross_at = |p: WorldPoint, dir: WorldPoint| {
            let n = dir.perp() * (width / 2.0 / dir.norm());
            (p + n, p - n)
        };
        let start_line = cross_at(centerline[0], centerline[1] - centerline[0]);
        let finish_line = (!closed).then(|| {
            let k = centerline.len();
            cross_at(centerline[k - 1], centerline[k - 1] - centerline[k - 2])
        });
        Ok(Self {
            centerline,
            closed,
            width,
            cones,
            cone_shape,
            start_line,
            finish_line,
            length,
            barrier_at: None,
        })
    }

    fn segments(&self) -> impl Iterator<Item = (WorldPoint, WorldPoint)> + '_ {
        let n = self.centerline.len();
        let count = if self.closed { n } else { n - 1 };
        (0..count).map(move |i| (self.centerline[i], self.centerline[(i + 1) % n]))
    }

    /// Arc length of the closest centerline point and the distance to it.
    pub fn project(&self, p: WorldPoint) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        let mut s0 = 0.0;
        for (a, b) in self.segments() {
            let len = a.distance(b);
            let (d, t) = point_segment_distance(p, a, b);
            if d < best.1 {
                best = (s0 + t * len, d);
            }
            s0 += len;
        }
        best
    }

    /// Unit tangent of the centerline at arc length 0.
    pub fn start_direction(&self) -> WorldPoint {
        let d = self.centerline[1] - self.centerline[0];
        d * (1.0 / d.norm())
    }

    /// Pose on the start line facing along the track, shifted `lateral`
    /// meters to the left of the centerline.
    pub fn start_pose(&self, lateral: f64) -> VehicleState {
        let dir = self.start_direction();
        let p = self.centerline[0] + dir.perp() * lateral;
        VehicleState::new(p.x, p.y, libm::atan2(dir.y, dir.x), 0.0)
    }

    pub fn nearest_cone_distance(&self, p: WorldPoint) -> f64 {
        self.cones
            .iter()
            .map(|c| c.distance(p))
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_common(p: &TrackParams) -> Result<(), TrackError> {
    if !(p.width >= MIN_TRACK_WIDTH) {
        return Err(TrackError::InvalidGeometry("width must be at least 3 m"));
    }
    if !(p.cone_spacing > 0.0 && p.cone_spacing.is_finite()) {
        return Err(TrackError::InvalidGeometry("cone spacing must be positive"));
    }
    if !(p.cone_shape.radius > 0.0 && p.cone_shape.height > 0.0) {
        return Err(TrackError::InvalidGeometry(
            "cone dimensions must be positive",
        ));
    }
    if p.cone_shape.radius * 2.0 >= p.width {
        return Err(TrackError::InvalidGeometry("cones wider than the track"));
    }
    Ok(())
}

/// `count + 1` points evenly dividing `[0, total]` with spacing as close to
/// `spacing` as an integer count allows.
fn even_stations(total: f64, spacing: f64) -> impl Iterator<Item = f64> {
    let count = libm::round(total / spacing).max(1.0) as usize;
    let step = total / count as f64;
    (0..=count).map(move |k| k as f64 * step)
}

/// Stadium-shaped loop traversed counterclockwise, starting mid-way along
/// the bottom straight.
struct Oval {
    straight: f64,
    radius: f64,
}

impl Oval {
    fn perimeter(&self) -> f64 {
        2.0 * self.straight + 2.0 * PI * self.radius
    }

    fn point(&self, s: f64) -> WorldPoint {
        let (l, r) = (self.straight, self.radius);
        let arc = PI * r;
        let mut s = libm::fmod(s, self.perimeter());
        if s < 0.0 {
            s += self.perimeter();
        }
        let half = l / 2.0;
        if s < half {
            return WorldPoint::new(s, -r);
        }
        s -= half;
        if s < arc {
            let a = -PI / 2.0 + s / r;
            return WorldPoint::new(half + r * libm::cos(a), r * libm::sin(a));
        }
        s -= arc;
        if s < l {
            return WorldPoint::new(half - s, r);
        }
        s -= l;
        if s < arc {
            let a = PI / 2.0 + s / r;
            return WorldPoint::new(-half + r * libm::cos(a), r * libm::sin(a));
        }
        s -= arc;
        WorldPoint::new(-half + s, -r)
    }

    fn ring(&self, spacing: f64) -> Vec<WorldPoint> {
        let stations: Vec<f64> = even_stations(self.perimeter(), spacing).collect();
        // drop the closing station, it repeats the first
        stations[..stations.len() - 1]
            .iter()
            .map(|&s| self.point(s))
            .collect()
    }
}

const CENTERLINE_STEP: f64 = 0.5;

/// Builds one of the track kinds from `params`.
pub fn make_track(kind: TrackKind, params: &TrackParams) -> Result<TrackSpec, TrackError> {
    check_common(params)?;
    let w = params.width;
    match kind {
        TrackKind::Oval => {
            if !(params.straight_length >= 0.0) {
                return Err(TrackError::InvalidGeometry(
                    "straights must be non-negative",
                ));
            }
            if !(params.radius - w / 2.0 > params.cone_shape.radius) {
                return Err(TrackError::InvalidGeometry(
                    "radius too tight for the width",
                ));
            }
            let center = Oval {
                straight: params.straight_length,
                radius: params.radius,
            };
            let inner = Oval {
                straight: params.straight_length,
                radius: params.radius - w / 2.0,
            };
            let outer = Oval {
                straight: params.straight_length,
                radius: params.radius + w / 2.0,
            };
            let mut cones = inner.ring(params.cone_spacing);
            cones.extend(outer.ring(params.cone_spacing));
            let mut track = TrackSpec::from_parts(
                center.ring(CENTERLINE_STEP),
                true,
                w,
                cones,
                params.cone_shape,
            )?;
            track.length = center.perimeter();
            Ok(track)
        }
        TrackKind::Corridor | TrackKind::PerpendicularWall | TrackKind::InvertedU => {
            let len = params.length;
            if !(len > 0.0 && len.is_finite()) {
                return Err(TrackError::InvalidGeometry(
                    "corridor length must be positive",
                ));
            }
            let centerline: Vec<WorldPoint> = even_stations(len, CENTERLINE_STEP)
                .map(|y| WorldPoint::new(0.0, y))
                .collect();
            let mut cones = Vec::new();
            for side in [-w / 2.0, w / 2.0] {
                cones.extend(
                    even_stations(len, params.cone_spacing).map(|y| WorldPoint::new(side, y)),
                );
            }
            let mut barrier_at = None;
            if kind != TrackKind::Corridor {
                let d = params.wall_distance;
                if !(d > 0.0 && d < len) {
                    return Err(TrackError::InvalidGeometry(
                        "wall must lie inside the corridor",
                    ));
                }
                if !(params.wall_spacing > 0.0) {
                    return Err(TrackError::InvalidGeometry("wall spacing must be positive"));
                }
                cones.extend(
                    even_stations(w, params.wall_spacing).map(|x| WorldPoint::new(x - w / 2.0, d)),
                );
                if kind == TrackKind::InvertedU {
                    let (uw, depth) = (params.u_width, params.u_depth);
                    if !(uw > 0.0 && uw < w) {
                        return Err(TrackError::InvalidGeometry(
                            "U must be narrower than the track",
                        ));
                    }
                    if !(depth > 0.0 && depth < d) {
                        return Err(TrackError::InvalidGeometry(
                            "U legs must end ahead of the start",
                        ));
                    }
                    for x in [-uw / 2.0, uw / 2.0] {
                        // legs hang back from the bar, which already holds y = d
                        cones.extend(
                            even_stations(depth, params.wall_spacing)
                                .skip(1)
                                .map(|k| WorldPoint::new(x, d - k)),
                        );
                    }
                }
                barrier_at = Some(d);
            }
            let mut track = TrackSpec::from_parts(centerline, false, w, cones, params.cone_shape)?;
            track.barrier_at = barrier_at;
            Ok(track)
        }
    }
}

/// Something that went wrong inside one tick.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TickFault {
    Perception(PerceptionErrorKind),
    Planner,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PerceptionErrorKind {
    FewerThanThreePoints,
    DegenerateSamples,
    NonFinitePoint,
}

impl From<&PerceptionError> for PerceptionErrorKind {
    fn from(e: &PerceptionError) -> Self {
        match e {
            PerceptionError::FewerThanThreePoints(_) => Self::FewerThanThreePoints,
            PerceptionError::DegenerateSamples(_) => Self::DegenerateSamples,
            PerceptionError::NonFinitePoint(_) => Self::NonFinitePoint,
        }
    }
}

impl From<PlannerError> for TickFault {
    fn from(_: PlannerError) -> Self {
        TickFault::Planner
    }
}

impl From<ControlError> for TickFault {
    fn from(_: ControlError) -> Self {
        TickFault::Control
    }
}

/// Everything one tick decided, for logs and replay.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TickTrace {
    pub tick: u64,
    pub time: f64,
    /// Pose the tick started from.
    pub state: VehicleState,
    pub grid_hash: u64,
    pub nodes: Vec<CellIndex>,
    pub goal: VehiclePoint,
    pub goal_cost: f64,
    pub steer: f64,
    /// The ground plane fit did not look like the ground.
    pub ground_suspect: bool,
    pub fault: Option<TickFault>,
}

/// A tick's trace together with the grid it planned on.
#[derive(Debug, Clone)]
pub struct TickOutput {
    pub next: VehicleState,
    pub trace: TickTrace,
    pub grid: OccupancyGrid,
}

/// splitmix64 finalizer; decorrelates per-tick seeds.
fn mix_seed(seed: u64, tick: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(tick.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(stream.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One pass of the pipeline: scan, remove ground, rasterize, inflate, plan,
/// steer, integrate. `prev_steer` is held when a stage faults.
pub fn tick(
    track: &TrackSpec,
    state: &VehicleState,
    prev_steer: f64,
    scenario: &ScenarioConfig,
    tick_index: u64,
) -> TickOutput {
    let time = tick_index as f64 * scenario.run.tick_dt;
    let cloud = simulate_lidar(
        track,
        state,
        &scenario.lidar,
        mix_seed(scenario.run.rng_seed, tick_index, 1),
    );
    let ransac = crate::perception::RansacParams {
        rng_seed: mix_seed(scenario.ransac.rng_seed, tick_index, 2),
        ..scenario.ransac
    };

    let mut fault = None;
    let mut ground_suspect = false;
    let footprint = match segment_ground_report(&cloud, &ransac) {
        Ok(seg) => {
            ground_suspect = seg.suspect;
            seg.obstacles.footprint(scenario.height_cutoff)
        }
        Err(e) => {
            fault = Some(TickFault::Perception((&e).into()));
            Vec::new()
        }
    };
    let raw = rasterize(&footprint, scenario.grid);
    let grid = inflate(&raw, &scenario.inflation);

    let mut steer = prev_steer;
    let mut nodes = Vec::new();
    let mut goal = VehiclePoint::default();
    let mut goal_cost = 0.0;
    if fault.is_none() {
        match plan_path(&grid, &scenario.planner) {
            Ok(path) => {
                match pure_pursuit_steer(path.goal_point, &scenario.vehicle) {
                    Ok(s) => steer = s,
                    Err(e) => fault = Some(e.into()),
                }
                nodes = path.nodes;
                goal = path.goal_point;
                goal_cost = path.goal_cost;
            }
            Err(e) => fault = Some(e.into()),
        }
    }

    let next = step_vehicle(state, steer, &scenario.vehicle, scenario.run.tick_dt);
    TickOutput {
        next,
        trace: TickTrace {
            tick: tick_index,
            time,
            state: *state,
            grid_hash: grid.fingerprint(),
            nodes,
            goal,
            goal_cost,
            steer,
            ground_suspect,
            fault,
        },
        grid,
    }
}

/// Why a run stopped before completing its laps.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum RunFailure {
    ConeStrike { time: f64, distance: f64 },
    Divergence { time: f64, offset: f64 },
    Timeout { time: f64 },
    Fault { time: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LapMetrics {
    pub lap_times: Vec<f64>,
    pub avg_speed: f64,
    pub path_length: f64,
    pub min_cone_clearance: f64,
    pub completed: bool,
    pub failure: Option<RunFailure>,
    pub faulted_ticks: u64,
    pub suspect_ground_ticks: u64,
}

/// One row of the trajectory log.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub steer: f64,
    pub goal_fwd: f64,
    pub goal_right: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: LapMetrics,
    pub trajectory: Vec<TrajectorySample>,
}

/// Runs the closed loop until the configured laps are done or the kart
/// fails, handing every tick to `observe`.
pub fn run_scenario_with(
    scenario: &ScenarioConfig,
    track: &TrackSpec,
    mut observe: impl FnMut(&TickOutput),
) -> RunOutput {
    let run = &scenario.run;
    let dt = run.tick_dt;
    let line = track.finish_line.unwrap_or(track.start_line);
    let line_dir = if track.closed {
        track.start_direction()
    } else {
        let k = track.centerline.len();
        track.centerline[k - 1] - track.centerline[k - 2]
    };
    let max_time = run.max_time.unwrap_or_else(|| {
        let nominal = track.length * run.laps as f64 / scenario.vehicle.commanded_speed;
        2.0 * nominal + 30.0
    });

    let mut state = track.start_pose(run.start_offset);
    state.speed = scenario.vehicle.commanded_speed;
    let mut steer = 0.0;
    let mut trajectory = Vec::new();
    let mut lap_times = Vec::new();
    let mut last_cross_time = 0.0;
    let mut since_cross = 0.0;
    let mut traveled = 0.0;
    let mut path_at_finish = 0.0;
    let mut min_clearance = track.nearest_cone_distance(state.position());
    let mut failure = None;
    let mut faulted_ticks = 0;
    let mut suspect_ticks = 0;

    let mut k: u64 = 0;
    loop {
        let t = k as f64 * dt;
        let out = tick(track, &state, steer, scenario, k);
        observe(&out);
        let trace = &out.trace;
        steer = trace.steer;
        trajectory.push(TrajectorySample {
            t,
            x: state.x,
            y: state.y,
            heading: state.heading,
            speed: state.speed,
            steer,
            goal_fwd: trace.goal.forward,
            goal_right: trace.goal.right,
        });
        if trace.ground_suspect {
            suspect_ticks += 1;
        }
        if trace.fault.is_some() {
            faulted_ticks += 1;
            if run.halt_on_fault {
                failure = Some(RunFailure::Fault { time: t });
                break;
            }
        }

        let next = out.next;
        let (p0, p1) = (state.position(), next.position());
        let step = p0.distance(p1);
        let motion = p1 - p0;
        let crossing = segment_intersection(p0, p1, line.0, line.1)
            .map(|(u, _)| u)
            .filter(|&u| {
                since_cross + u * step >= run.lap_hysteresis && motion.dot(line_dir) > 0.0
            });
        if let Some(u) = crossing {
            let crossed_at = t + u * dt;
            lap_times.push(crossed_at - last_cross_time);
            last_cross_time = crossed_at;
            path_at_finish = traveled + u * step;
            since_cross = (1.0 - u) * step;
        } else {
            since_cross += step;
        }
        traveled += step;
        state = next;
        let t_next = t + dt;

        let clearance = track.nearest_cone_distance(state.position());
        min_clearance = min_clearance.min(clearance);
        if lap_times.len() >= run.laps {
            break;
        }
        if clearance < run.strike_radius {
            failure = Some(RunFailure::ConeStrike {
                time: t_next,
                distance: clearance,
            });
            break;
        }
        let (_, offset) = track.project(state.position());
        if offset - track.width / 2.0 > track.width {
            failure = Some(RunFailure::Divergence {
                time: t_next,
                offset,
            });
            break;
        }
        if t_next > max_time {
            failure = Some(RunFailure::Timeout { time: t_next });
            break;
        }
        k += 1;
    }

    let completed = failure.is_none() && lap_times.len() >= run.laps;
    let total: f64 = lap_times.iter().sum();
    let (path_length, avg_speed) = if completed {
        (path_at_finish, path_at_finish / total)
    } else {
        let elapsed = (k + 1) as f64 * dt;
        (traveled, traveled / elapsed)
    };
    RunOutput {
        metrics: LapMetrics {
            lap_times,
            avg_speed,
            path_length,
            min_cone_clearance: min_clearance,
            completed,
            failure,
            faulted_ticks,
            suspect_ground_ticks: suspect_ticks,
        },
        trajectory,
    }
}

/// [`run_scenario_with`] on the scenario's own track, without an observer.
pub fn run_scenario(scenario: &ScenarioConfig) -> RunOutput {
    let track = scenario.build_track();
    run_scenario_with(scenario, &track, |_| {})
}

/// Per-tick goal points in world coordinates, for checking where the
/// planner aimed.
pub fn goal_in_world(trace: &TickTrace) -> WorldPoint {
    trace.state.to_world(trace.goal)
}
