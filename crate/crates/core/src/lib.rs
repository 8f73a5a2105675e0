//! Reactive occupancy-grid planning pipeline for cone-defined race tracks.
//!
//! The crate is `no_std` (with `alloc`) and purely computational: every stage
//! of the LiDAR-to-steering loop is a function over plain value types.
//!
//! - [`grid`]: vehicle-centered occupancy grids, rasterization and Gaussian
//!   inflation into a cost valley.
//! - [`perception`]: synthetic LiDAR over a cone scene and RANSAC ground
//!   removal.
//! - [`planner`]: the row-by-row greedy expansion that picks a goal point.
//! - [`control`]: pure pursuit steering and the kinematic bicycle model.
//! - [`sim`]: track generators, the closed-loop tick and lap metrics.
//! - [`config`]: the validated scenario configuration tying it together.
//!
//! File formats, the command-line front end and anything else touching the
//! operating system live in the `costvalley` companion crate.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod config;
pub mod control;
pub mod geom;
pub mod grid;
pub mod perception;
pub mod planner;
pub mod sim;

pub use config::{ConfigViolation, RunConfig, ScenarioConfig};
pub use control::{VehicleParams, VehicleState};
pub use geom::{VehiclePoint, WorldPoint};
pub use grid::{CellIndex, GridConfig, InflationParams, OccupancyGrid};
pub use perception::{LidarModel, PlaneModel, PointCloud, RansacParams};
pub use planner::{PathResult, PlannerConfig, SelectionRule};
pub use sim::{LapMetrics, TrackKind, TrackSpec};
