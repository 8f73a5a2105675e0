//! Greedy row-by-row expansion over the inflated grid.
//!
//! Starting at the vehicle cell, each expansion moves exactly one row forward
//! and picks the cheapest cell within `half_width` columns of the previous
//! node. The last node becomes the goal point.

use alloc::vec::Vec;

use crate::geom::VehiclePoint;
use crate::grid::{CellIndex, GridConfig, OccupancyGrid};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlannerError {
    #[error("{max_expansions} expansions would run past the top of a {size_cells}-cell grid")]
    ConfigExceedsGrid {
        max_expansions: usize,
        size_cells: usize,
    },
    #[error("half_width must be at least 1")]
    ZeroHalfWidth,
    #[error("max_expansions must be at least 1")]
    ZeroExpansions,
    #[error("window length {0} is not odd")]
    EvenWindow(usize),
}

/// How a window of costs is reduced to one offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SelectionRule {
    /// Minimal cost, then minimal deviation, then leftmost.
    #[default]
    Lexicographic,
    /// One left-to-right scan that accepts a cell only when its cost is no
    /// worse *and* its deviation strictly smaller than the incumbent's.
    LiteralPseudocode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlannerConfig {
    pub max_expansions: usize,
    pub half_width: usize,
    pub selection_rule: SelectionRule,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            max_expansions: 30,
            half_width: 2,
            selection_rule: SelectionRule::Lexicographic,
        }
    }
}

impl PlannerConfig {
    pub fn check_width(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Validates the config on its own and against a grid of `size_cells`.
    pub fn check(&self, size_cells: usize) -> Result<(), PlannerError> {
        if self.half_width == 0 {
            return Err(PlannerError::ZeroHalfWidth);
        }
        if self.max_expansions == 0 {
            return Err(PlannerError::ZeroExpansions);
        }
        if self.max_expansions >= size_cells / 2 {
            return Err(PlannerError::ConfigExceedsGrid {
                max_expansions: self.max_expansions,
                size_cells,
            });
        }
        Ok(())
    }
}

/// The node chain of one plan and the goal handed to the controller.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub nodes: Vec<CellIndex>,
    pub goal_point: VehiclePoint,
    pub goal_cost: f64,
}

/// Picks an offset from a full window of `2 * half_width + 1` costs centered
/// on the previous node.
pub fn select_next(window: &[f64], rule: SelectionRule) -> Result<isize, PlannerError> {
    if window.len() % 2 == 0 {
        return Err(PlannerError::EvenWindow(window.len()));
    }
    let half = (window.len() / 2) as isize;
    Ok(select_offset(window, -half, rule))
}

/// Core of the selection over a window whose first cell sits at offset
/// `first` from the previous node. Windows clipped by the grid edge are just
/// shorter slices.
fn select_offset(window: &[f64], first: isize, rule: SelectionRule) -> isize {
    let offsets = (first..).zip(window.iter().copied());
    match rule {
        SelectionRule::Lexicographic => {
            let mut best = (first, f64::INFINITY);
            for (c, cost) in offsets {
                let (bc, bcost) = best;
                if cost < bcost || (cost == bcost && c.unsigned_abs() < bc.unsigned_abs()) {
                    best = (c, cost);
                }
            }
            best.0
        }
        SelectionRule::LiteralPseudocode => {
            let mut chosen = first;
            let mut least_cost = f64::INFINITY;
            let mut least_dev = usize::MAX;
            for (c, cost) in offsets {
                if cost <= least_cost && c.unsigned_abs() < least_dev {
                    least_cost = cost;
                    least_dev = c.unsigned_abs();
                    chosen = c;
                }
            }
            chosen
        }
    }
}

/// Runs the fixed number of expansions from the grid center.
pub fn plan_path(grid: &OccupancyGrid, cfg: &PlannerConfig) -> Result<PathResult, PlannerError> {
    let n = grid.size();
    cfg.check(n)?;
    let half = cfg.half_width as isize;
    let mut node = grid.config().center_cell();
    let mut nodes = Vec::with_capacity(cfg.max_expansions + 1);
    nodes.push(node);
    for _ in 0..cfg.max_expansions {
        let y = node.y + 1;
        let x = node.x as isize;
        let lo = (x - half).max(0);
        let hi = (x + half).min(n as isize - 1);
        let row = grid.row(y);
        let offset = select_offset(&row[lo as usize..=hi as usize], lo - x, cfg.selection_rule);
        node = CellIndex::new((x + offset) as usize, y);
        nodes.push(node);
    }
    let goal_cost = grid.at(node);
    Ok(PathResult {
        goal_point: grid.config().cell_to_metric(node),
        nodes,
        goal_cost,
    })
}

/// Metric center of the last node.
pub fn goal_from_path(path: &PathResult, cfg: &GridConfig) -> VehiclePoint {
    let last = *path.nodes.last().expect("path has at least the start node");
    cfg.cell_to_metric(last)
}
