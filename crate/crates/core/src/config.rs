//! Scenario configuration.
//!
//! [`RawScenario`] mirrors the sectioned config file field for field, with
//! every documented default filled in. [`ScenarioConfig::from_raw`] validates
//! it into the typed configuration, reporting every violation with the
//! dotted key it concerns.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::control::VehicleParams;
use crate::grid::{GridConfig, InflationParams};
use crate::perception::{LidarModel, RansacParams};
use crate::planner::{PlannerConfig, SelectionRule};
use crate::sim::{make_track, ConeShape, TrackKind, TrackParams, TrackSpec};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// One reason a configuration was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigViolation {
    /// `key` breaks `constraint`.
    Constraint { key: String, constraint: String },
    /// The planner would expand past the top row of the grid.
    ConfigExceedsGrid {
        max_expansions: usize,
        size_cells: usize,
    },
}

impl ConfigViolation {
    fn constraint(key: &str, constraint: impl Into<String>) -> Self {
        Self::Constraint {
            key: key.into(),
            constraint: constraint.into(),
        }
    }

    pub fn key(&self) -> &str {
        match self {
            Self::Constraint { key, .. } => key,
            Self::ConfigExceedsGrid { .. } => "planner.max_expansions",
        }
    }
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constraint { key, constraint } => write!(f, "{key}: requires {constraint}"),
            Self::ConfigExceedsGrid {
                max_expansions,
                size_cells,
            } => write!(
                f,
                "planner.max_expansions: {max_expansions} expansions exceed a \
                 {size_cells}-cell grid (requires max_expansions < {})",
                size_cells / 2
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RawGrid {
    pub size_cells: usize,
    /// Meters per cell.
    pub resolution: f64,
    /// Returns higher than this above the ground are not obstacles, meters.
    pub height_cutoff: f64,
}

impl Default for RawGrid {
    fn default() -> Self {
        Self {
            size_cells: 101,
            resolution: 0.2,
            height_cutoff: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RawInflation {
    /// Cells.
    pub sigma: f64,
    /// Cells; at least `ceil(2 * sigma)`.
    pub kernel_radius: usize,
}

impl Default for RawInflation {
    fn default() -> Self {
        Self {
            sigma: 5.0,
            kernel_radius: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RawPlanner {
    pub max_expansions: usize,
    pub half_width: usize,
    pub selection_rule: SelectionRuleName,
}

impl Default for RawPlanner {
    fn default() -> Self {
        let p = PlannerConfig::default();
        Self {
            max_expansions: p.max_expansions,
            half_width: p.half_width,
            selection_rule: SelectionRuleName::Lexicographic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SelectionRuleName {
    #[default]
    Lexicographic,
    LiteralPseudocode,
}

impl From<SelectionRuleName> for SelectionRule {
    fn from(n: SelectionRuleName) -> Self {
        match n {
            SelectionRuleName::Lexicographic => SelectionRule::Lexicographic,
            SelectionRuleName::LiteralPseudocode => SelectionRule::LiteralPseudocode,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RawVehicle {
    pub wheelbase: f64,
    /// Radians.
    pub max_steer: f64,
    pub commanded_speed: f64,
}

impl Default for RawVehicle {
    fn default() -> Self {
        let v = VehicleParams::default();
        Self {
            wheelbase: v.wheelbase,
            max_steer: v.max_steer,
            commanded_speed: v.commanded_speed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RawLidar {
    pub beams: usize,
    pub min_elevation_deg: f64,
    pub max_elevation_deg: f64,
    pub azimuth_step_deg: f64,
    pub max_range: f64,
    pub range_noise_sigma: f64,
    pub mount_height: f64,
}

impl Default for RawLidar {
    fn default() -> Self {
        let l = LidarModel::default();
        Self {
            beams: 16,
            min_elevation_deg: -15.0,
            max_elevation_deg: 15.0,
            azimuth_step_deg: l.azimuth_step.to_degrees(),
            max_range: l.max_range,
            range_noise_sigma: l.range_noise_sigma,
            mount_height: l.mount_height,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RawRansac {
    pub iterations: usize,
    pub inlier_threshold: f64,
    pub seed: u64,
}

impl Default for RawRansac {
    fn default() -> Self {
        let r = RansacParams::default();
        Self {
            iterations: r.iterations,
            inlier_threshold: r.inlier_threshold,
            seed: r.rng_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RawTrack {
    pub kind: TrackKind,
    pub width: f64,
    pub cone_spacing: f64,
    pub straight_length: f64,
    pub radius: f64,
    pub length: f64,
    pub wall_distance: f64,
    pub wall_spacing: f64,
    pub u_width: f64,
    pub u_depth: f64,
    pub cone_radius: f64,
    pub cone_height: f64,
}

impl Default for RawTrack {
    fn default() -> Self {
        let t = TrackParams::default();
        Self {
            kind: TrackKind::Oval,
            width: t.width,
            cone_spacing: t.cone_spacing,
            straight_length: t.straight_length,
            radius: t.radius,
            length: t.length,
            wall_distance: t.wall_distance,
            wall_spacing: t.wall_spacing,
            u_width: t.u_width,
            u_depth: t.u_depth,
            cone_radius: t.cone_shape.radius,
            cone_height: t.cone_shape.height,
        }
    }
}

impl RawTrack {
    fn params(&self) -> TrackParams {
        TrackParams {
            width: self.width,
            cone_spacing: self.cone_spacing,
            straight_length: self.straight_length,
            radius: self.radius,
            length: self.length,
            wall_distance: self.wall_distance,
            wall_spacing: self.wall_spacing,
            u_width: self.u_width,
            u_depth: self.u_depth,
            cone_shape: ConeShape {
                radius: self.cone_radius,
                height: self.cone_height,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RawRun {
    pub laps: usize,
    pub tick_dt: f64,
    pub seed: u64,
    /// Closer than this to a cone center counts as a strike, meters.
    pub strike_radius: f64,
    /// Travel required between two counted start-line crossings, meters.
    pub lap_hysteresis: f64,
    pub halt_on_fault: bool,
    /// Seconds; 0 picks twice the nominal race time plus 30 s.
    pub max_time: f64,
    /// Initial lateral offset from the centerline, meters, left positive.
    pub start_offset: f64,
    /// Dump every n-th inflated grid as PGM; 0 disables.
    pub dump_grids_every: u64,
}

impl Default for RawRun {
    fn default() -> Self {
        let r = RunConfig::default();
        Self {
            laps: r.laps,
            tick_dt: r.tick_dt,
            seed: r.rng_seed,
            strike_radius: r.strike_radius,
            lap_hysteresis: r.lap_hysteresis,
            halt_on_fault: r.halt_on_fault,
            max_time: 0.0,
            start_offset: r.start_offset,
            dump_grids_every: 0,
        }
    }
}

/// The whole config file, sections in file order.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RawScenario {
    pub grid: RawGrid,
    pub inflation: RawInflation,
    pub planner: RawPlanner,
    pub vehicle: RawVehicle,
    pub lidar: RawLidar,
    pub ransac: RawRansac,
    pub track: RawTrack,
    pub run: RawRun,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub laps: usize,
    pub tick_dt: f64,
    pub rng_seed: u64,
    pub strike_radius: f64,
    pub lap_hysteresis: f64,
    pub halt_on_fault: bool,
    pub max_time: Option<f64>,
    pub start_offset: f64,
    pub dump_grids_every: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            laps: 5,
            tick_dt: 0.02,
            rng_seed: 0,
            strike_radius: 0.3,
            lap_hysteresis: 10.0,
            halt_on_fault: false,
            max_time: None,
            start_offset: 0.0,
            dump_grids_every: 0,
        }
    }
}

/// Fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub track_kind: TrackKind,
    pub track: TrackParams,
    pub grid: GridConfig,
    pub height_cutoff: f64,
    pub inflation: InflationParams,
    pub planner: PlannerConfig,
    pub vehicle: VehicleParams,
    pub lidar: LidarModel,
    pub ransac: RansacParams,
    pub run: RunConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::from_raw(&RawScenario::default()).expect("defaults are valid")
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl ScenarioConfig {
    /// Validates `raw`, collecting every violation.
    pub fn from_raw(raw: &RawScenario) -> Result<Self, Vec<ConfigViolation>> {
        let mut errs = Vec::new();
        let mut need = |ok: bool, key: &str, constraint: &str| {
            if !ok {
                errs.push(ConfigViolation::constraint(key, constraint));
            }
        };

        let g = &raw.grid;
        need(
            g.size_cells % 2 == 1,
            "grid.size_cells",
            "size_cells odd and > 0",
        );
        need(positive(g.resolution), "grid.resolution", "resolution > 0");
        need(
            positive(g.height_cutoff),
            "grid.height_cutoff",
            "height_cutoff > 0",
        );

        let inf = &raw.inflation;
        need(positive(inf.sigma), "inflation.sigma", "sigma > 0");
        if positive(inf.sigma) {
            need(
                inf.kernel_radius >= InflationParams::min_radius(inf.sigma)
                    && inf.kernel_radius > 0,
                "inflation.kernel_radius",
                "kernel_radius ≥ ceil(2·sigma)",
            );
        }

        let p = &raw.planner;
        need(
            p.half_width >= 1,
            "planner.half_width",
            "planner.half_width ≥ 1",
        );
        need(
            p.max_expansions >= 1,
            "planner.max_expansions",
            "max_expansions ≥ 1",
        );

        let v = &raw.vehicle;
        need(positive(v.wheelbase), "vehicle.wheelbase", "wheelbase > 0");
        need(
            v.max_steer > 0.0 && v.max_steer < core::f64::consts::FRAC_PI_2,
            "vehicle.max_steer",
            "0 < max_steer < π/2",
        );
        need(
            positive(v.commanded_speed),
            "vehicle.commanded_speed",
            "commanded_speed > 0",
        );

        let l = &raw.lidar;
        need(l.beams >= 1, "lidar.beams", "beams ≥ 1");
        need(
            l.min_elevation_deg <= l.max_elevation_deg
                && l.min_elevation_deg > -90.0
                && l.max_elevation_deg < 90.0,
            "lidar.min_elevation_deg",
            "-90 < min_elevation_deg ≤ max_elevation_deg < 90",
        );
        need(
            positive(l.azimuth_step_deg) && l.azimuth_step_deg <= 360.0,
            "lidar.azimuth_step_deg",
            "0 < azimuth_step_deg ≤ 360",
        );
        need(positive(l.max_range), "lidar.max_range", "max_range > 0");
        need(
            l.range_noise_sigma.is_finite() && l.range_noise_sigma >= 0.0,
            "lidar.range_noise_sigma",
            "range_noise_sigma ≥ 0",
        );
        need(
            positive(l.mount_height),
            "lidar.mount_height",
            "mount_height > 0",
        );

        let r = &raw.ransac;
        need(r.iterations >= 1, "ransac.iterations", "iterations ≥ 1");
        need(
            positive(r.inlier_threshold),
            "ransac.inlier_threshold",
            "inlier_threshold > 0",
        );

        let run = &raw.run;
        need(run.laps >= 1, "run.laps", "laps ≥ 1");
        need(
            positive(run.tick_dt) && run.tick_dt <= 0.1,
            "run.tick_dt",
            "0 < tick_dt ≤ 0.1",
        );
        need(
            positive(run.strike_radius),
            "run.strike_radius",
            "strike_radius > 0",
        );
        need(
            run.lap_hysteresis.is_finite() && run.lap_hysteresis >= 0.0,
            "run.lap_hysteresis",
            "lap_hysteresis ≥ 0",
        );
        need(
            run.max_time.is_finite() && run.max_time >= 0.0,
            "run.max_time",
            "max_time ≥ 0",
        );
        need(
            run.start_offset.is_finite(),
            "run.start_offset",
            "finite start_offset",
        );
        need(
            raw.track.kind.is_closed() || run.laps == 1,
            "run.laps",
            "laps = 1 on open tracks",
        );

        if g.size_cells > 0 && p.max_expansions >= g.size_cells / 2 {
            errs.push(ConfigViolation::ConfigExceedsGrid {
                max_expansions: p.max_expansions,
                size_cells: g.size_cells,
            });
        }

        let track = raw.track.params();
        if let Err(crate::sim::TrackError::InvalidGeometry(why)) =
            make_track(raw.track.kind, &track)
        {
            errs.push(ConfigViolation::constraint(
                "track",
                format!("valid geometry ({why})"),
            ));
        }

        if !errs.is_empty() {
            return Err(errs);
        }

        let grid = GridConfig::new(g.size_cells, g.resolution).expect("checked above");
        let inflation = InflationParams::new(inf.sigma, inf.kernel_radius).expect("checked above");
        Ok(Self {
            track_kind: raw.track.kind,
            track,
            grid,
            height_cutoff: g.height_cutoff,
            inflation,
            planner: PlannerConfig {
                max_expansions: p.max_expansions,
                half_width: p.half_width,
                selection_rule: p.selection_rule.into(),
            },
            vehicle: VehicleParams {
                wheelbase: v.wheelbase,
                max_steer: v.max_steer,
                commanded_speed: v.commanded_speed,
            },
            lidar: LidarModel {
                beam_elevations: LidarModel::even_beams(
                    l.beams,
                    l.min_elevation_deg.to_radians(),
                    l.max_elevation_deg.to_radians(),
                ),
                azimuth_step: l.azimuth_step_deg.to_radians(),
                max_range: l.max_range,
                range_noise_sigma: l.range_noise_sigma,
                mount_height: l.mount_height,
            },
            ransac: RansacParams {
                iterations: r.iterations,
                inlier_threshold: r.inlier_threshold,
                rng_seed: r.seed,
            },
            run: RunConfig {
                laps: run.laps,
                tick_dt: run.tick_dt,
                rng_seed: run.seed,
                strike_radius: run.strike_radius,
                lap_hysteresis: run.lap_hysteresis,
                halt_on_fault: run.halt_on_fault,
                max_time: (run.max_time > 0.0).then_some(run.max_time),
                start_offset: run.start_offset,
                dump_grids_every: run.dump_grids_every,
            },
        })
    }

    pub fn build_track(&self) -> TrackSpec {
        make_track(self.track_kind, &self.track).expect("validated geometry")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn defaults_validate() {
        let cfg = ScenarioConfig::default();
        assert_eq!(cfg.grid.size_cells(), 101);
        assert_eq!(cfg.lidar.beam_elevations.len(), 16);
        assert!((cfg.lidar.beam_elevations[0] + 15f64.to_radians()).abs() < 1e-15);
        assert_eq!(cfg.ransac.iterations, 100);
        assert_eq!(cfg.run.laps, 5);
        assert!((cfg.build_track().length - 434.2).abs() < 1e-6);
    }

    #[test]
    fn half_width_zero_is_named() {
        let mut raw = RawScenario::default();
        raw.planner.half_width = 0;
        let errs = ScenarioConfig::from_raw(&raw).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].key(), "planner.half_width");
        assert!(errs[0].to_string().contains("planner.half_width ≥ 1"));
    }

    #[test]
    fn expansions_checked_against_grid() {
        let mut raw = RawScenario::default();
        raw.grid.size_cells = 64;
        raw.planner.max_expansions = 40;
        let errs = ScenarioConfig::from_raw(&raw).unwrap_err();
        assert!(errs.contains(&ConfigViolation::ConfigExceedsGrid {
            max_expansions: 40,
            size_cells: 64
        }));
        // the even size is reported too
        assert!(errs.iter().any(|e| e.key() == "grid.size_cells"));

        raw.grid.size_cells = 65;
        let errs = ScenarioConfig::from_raw(&raw).unwrap_err();
        assert_eq!(errs.len(), 1);
        raw.planner.max_expansions = 31;
        assert!(ScenarioConfig::from_raw(&raw).is_ok());
    }

    #[test]
    fn all_violations_collected() {
        let mut raw = RawScenario::default();
        raw.inflation.kernel_radius = 2;
        raw.run.tick_dt = 0.5;
        raw.track.width = 1.0;
        let keys: Vec<String> = ScenarioConfig::from_raw(&raw)
            .unwrap_err()
            .iter()
            .map(|e| e.key().into())
            .collect();
        assert_eq!(keys, ["inflation.kernel_radius", "run.tick_dt", "track"]);
    }

    #[test]
    fn open_tracks_run_one_lap() {
        let mut raw = RawScenario::default();
        raw.track.kind = TrackKind::Corridor;
        assert!(ScenarioConfig::from_raw(&raw).is_err());
        raw.run.laps = 1;
        assert!(ScenarioConfig::from_raw(&raw).is_ok());
    }
}
