//! Vehicle-centered occupancy grids and Gaussian inflation.
//!
//! Cells are stored row-major and indexed `[y][x]`: `+y` points along the
//! vehicle's heading and `+x` to its right. The vehicle sits in the exact
//! center cell, which is why the side length must be odd.

use alloc::vec;
use alloc::vec::Vec;

use crate::geom::VehiclePoint;

/// Cost of a lethal (occupied) cell.
pub const MAX_COST: f64 = 255.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid size must be odd and positive, got {0}")]
    EvenOrZeroSize(usize),
    #[error("grid resolution must be finite and > 0, got {0}")]
    BadResolution(f64),
    #[error("expected {expected} cells, got {got}")]
    CellCount { expected: usize, got: usize },
    #[error("cell {index} has cost {value} outside [0, 255]")]
    CostOutOfRange { index: usize, value: f64 },
    #[error("inflation sigma must be finite and > 0, got {0}")]
    BadSigma(f64),
    #[error("kernel radius {radius} is below ceil(2 * sigma) = {min}")]
    KernelTooSmall { radius: usize, min: usize },
}

/// Geometry of a square grid: `size_cells` per side at `resolution` m/cell.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridConfig {
    size_cells: usize,
    resolution: f64,
}

/// Integer cell coordinates, `x` across and `y` forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CellIndex {
    pub x: usize,
    pub y: usize,
}

impl CellIndex {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

impl GridConfig {
    pub fn new(size_cells: usize, resolution: f64) -> Result<Self, GridError> {
        if size_cells == 0 || size_cells % 2 == 0 {
            return Err(GridError::EvenOrZeroSize(size_cells));
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(GridError::BadResolution(resolution));
        }
        Ok(Self {
            size_cells,
            resolution,
        })
    }

    pub fn size_cells(&self) -> usize {
        self.size_cells
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn cell_count(&self) -> usize {
        self.size_cells * self.size_cells
    }

    /// Index of the center row and column (the vehicle cell).
    pub fn center(&self) -> usize {
        self.size_cells / 2
    }

    pub fn center_cell(&self) -> CellIndex {
        CellIndex::new(self.center(), self.center())
    }

    /// Half-width of the square covered by the grid, measured to the outer
    /// cell edges.
    pub fn half_extent(&self) -> f64 {
        self.size_cells as f64 * self.resolution / 2.0
    }

    /// Cell containing `p`, or `None` outside the grid.
    pub fn metric_to_cell(&self, p: VehiclePoint) -> Option<CellIndex> {
        let x = self.axis_to_index(p.right)?;
        let y = self.axis_to_index(p.forward)?;
        Some(CellIndex::new(x, y))
    }

    fn axis_to_index(&self, meters: f64) -> Option<usize> {
        let offset = libm::round(meters / self.resolution);
        let index = self.center() as f64 + offset;
        if index.is_finite() && index >= 0.0 && index < self.size_cells as f64 {
            Some(index as usize)
        } else {
            None
        }
    }

    /// Metric position of the center of `cell`.
    pub fn cell_to_metric(&self, cell: CellIndex) -> VehiclePoint {
        let c = self.center() as f64;
        VehiclePoint::new(
            (cell.y as f64 - c) * self.resolution,
            (cell.x as f64 - c) * self.resolution,
        )
    }
}

/// A square cost field with values in `[0, MAX_COST]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    config: GridConfig,
    cells: Vec<f64>,
}

impl OccupancyGrid {
    pub fn empty(config: GridConfig) -> Self {
        Self {
            config,
            cells: vec![0.0; config.cell_count()],
        }
    }

    /// Wraps row-major `cells`, checking the count and the cost range.
    pub fn from_cells(config: GridConfig, cells: Vec<f64>) -> Result<Self, GridError> {
        if cells.len() != config.cell_count() {
            return Err(GridError::CellCount {
                expected: config.cell_count(),
                got: cells.len(),
            });
        }
        if let Some((index, &value)) = cells
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=MAX_COST).contains(*v))
        {
            return Err(GridError::CostOutOfRange { index, value });
        }
        Ok(Self { config, cells })
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn size(&self) -> usize {
        self.config.size_cells
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<f64> {
        self.cells
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.cells[y * self.size() + x]
    }

    pub fn at(&self, cell: CellIndex) -> f64 {
        self.get(cell.x, cell.y)
    }

    pub fn row(&self, y: usize) -> &[f64] {
        let n = self.size();
        &self.cells[y * n..(y + 1) * n]
    }

    /// Sets one cell, clamping into the valid cost range.
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        let n = self.size();
        self.cells[y * n + x] = value.clamp(0.0, MAX_COST);
    }

    pub fn is_occupied(&self, x: usize, y: usize) -> bool {
        self.get(x, y) >= MAX_COST
    }

    /// The grid reflected about its center column.
    pub fn mirrored(&self) -> Self {
        let n = self.size();
        let mut cells = Vec::with_capacity(self.cells.len());
        for row in self.cells.chunks_exact(n) {
            cells.extend(row.iter().rev());
        }
        Self {
            config: self.config,
            cells,
        }
    }

    /// FNV-1a over the bit patterns of every cell; a compact fingerprint for
    /// replay logs.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut hash = OFFSET;
        for v in &self.cells {
            for byte in v.to_bits().to_le_bytes() {
                hash ^= u64::from(byte);
                hash = hash.wrapping_mul(PRIME);
            }
        }
        hash
    }
}

/// Marks every cell hit by at least one point as lethal. Points outside the
/// grid are dropped.
pub fn rasterize(points: &[VehiclePoint], config: GridConfig) -> OccupancyGrid {
    let mut grid = OccupancyGrid::empty(config);
    let n = config.size_cells();
    for p in points {
        if let Some(cell) = config.metric_to_cell(*p) {
            grid.cells[cell.y * n + cell.x] = MAX_COST;
        }
    }
    grid
}

/// Gaussian blur parameters, in cells.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InflationParams {
    sigma: f64,
    kernel_radius: usize,
}

impl InflationParams {
    pub fn new(sigma: f64, kernel_radius: usize) -> Result<Self, GridError> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(GridError::BadSigma(sigma));
        }
        let min = Self::min_radius(sigma);
        if kernel_radius < min || kernel_radius == 0 {
            return Err(GridError::KernelTooSmall {
                radius: kernel_radius,
                min: min.max(1),
            });
        }
        Ok(Self {
            sigma,
            kernel_radius,
        })
    }

    /// Parameters with the kernel truncated at three standard deviations.
    pub fn with_sigma(sigma: f64) -> Result<Self, GridError> {
        let radius = (libm::ceil(3.0 * sigma) as usize).max(1);
        Self::new(sigma, radius)
    }

    /// Smallest admissible radius, `ceil(2 * sigma)`.
    pub fn min_radius(sigma: f64) -> usize {
        libm::ceil(2.0 * sigma) as usize
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn kernel_radius(&self) -> usize {
        self.kernel_radius
    }

    /// Number of taps along one axis.
    pub fn kernel_dim(&self) -> usize {
        2 * self.kernel_radius + 1
    }

    /// Sum-normalized one-dimensional kernel. The two-dimensional kernel is
    /// its outer product with itself, which is the normalized
    /// `exp(-(dx² + dy²) / 2σ²)` exactly.
    pub fn kernel_1d(&self) -> Vec<f64> {
        let r = self.kernel_radius as isize;
        let two_var = 2.0 * self.sigma * self.sigma;
        let mut taps: Vec<f64> = (-r..=r)
            .map(|d| libm::exp(-((d * d) as f64) / two_var))
            .collect();
        let sum: f64 = taps.iter().sum();
        for t in &mut taps {
            *t /= sum;
        }
        taps
    }
}

/// Zero-padded convolution of a raw `size`×`size` field with the normalized
/// Gaussian kernel, computed as two one-dimensional passes.
pub fn convolve(cells: &[f64], size: usize, params: &InflationParams) -> Vec<f64> {
    assert_eq!(cells.len(), size * size, "field is not {size}x{size}");
    let taps = params.kernel_1d();
    let r = params.kernel_radius;

    let mut horizontal = vec![0.0; cells.len()];
    for (src, dst) in cells
        .chunks_exact(size)
        .zip(horizontal.chunks_exact_mut(size))
    {
        for (x, out) in dst.iter_mut().enumerate() {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(size - 1);
            let first_tap = lo + r - x;
            *out = src[lo..=hi]
                .iter()
                .zip(&taps[first_tap..])
                .map(|(v, k)| v * k)
                .sum();
        }
    }

    let mut out = vec![0.0; cells.len()];
    for y in 0..size {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(size - 1);
        let dst = &mut out[y * size..(y + 1) * size];
        for yy in lo..=hi {
            let k = taps[yy + r - y];
            let src = &horizontal[yy * size..(yy + 1) * size];
            for (o, v) in dst.iter_mut().zip(src) {
                *o += k * v;
            }
        }
    }
    out
}

/// Blurs `grid` into a cost valley. Lethal input cells stay lethal and the
/// result is clamped into the cost range.
pub fn inflate(grid: &OccupancyGrid, params: &InflationParams) -> OccupancyGrid {
    let mut cells = convolve(&grid.cells, grid.size(), params);
    for (out, &orig) in cells.iter_mut().zip(&grid.cells) {
        *out = if orig >= MAX_COST {
            MAX_COST
        } else {
            out.clamp(0.0, MAX_COST)
        };
    }
    OccupancyGrid {
        config: grid.config,
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(size: usize, res: f64) -> GridConfig {
        GridConfig::new(size, res).unwrap()
    }

    /// Direct double loop over every output cell and kernel tap.
    fn naive_convolve(cells: &[f64], size: usize, sigma: f64, radius: usize) -> Vec<f64> {
        let r = radius as isize;
        let mut kernel = Vec::new();
        let mut sum = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                let w = libm::exp(-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma));
                kernel.push(w);
                sum += w;
            }
        }
        let dim = 2 * radius + 1;
        let n = size as isize;
        let mut out = vec![0.0; cells.len()];
        for y in 0..n {
            for x in 0..n {
                let mut acc = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (sx, sy) = (x + dx, y + dy);
                        if sx < 0 || sy < 0 || sx >= n || sy >= n {
                            continue;
                        }
                        let w = kernel[((dy + r) as usize) * dim + (dx + r) as usize] / sum;
                        acc += w * cells[(sy * n + sx) as usize];
                    }
                }
                out[(y * n + x) as usize] = acc;
            }
        }
        out
    }

    #[test]
    fn config_rejects_even_sizes() {
        assert_eq!(GridConfig::new(64, 0.1), Err(GridError::EvenOrZeroSize(64)));
        assert_eq!(GridConfig::new(0, 0.1), Err(GridError::EvenOrZeroSize(0)));
        assert!(matches!(
            GridConfig::new(11, 0.0),
            Err(GridError::BadResolution(_))
        ));
    }

    #[test]
    fn metric_to_cell_examples() {
        let c = cfg(101, 0.1);
        assert_eq!(
            c.metric_to_cell(VehiclePoint::new(0.0, 0.0)),
            Some(CellIndex::new(50, 50))
        );
        assert_eq!(
            c.metric_to_cell(VehiclePoint::new(2.0, 1.0)),
            Some(CellIndex::new(60, 70))
        );
        assert_eq!(c.metric_to_cell(VehiclePoint::new(10.0, 0.0)), None);
        assert_eq!(c.metric_to_cell(VehiclePoint::new(0.0, -5.06)), None);
        assert_eq!(
            c.metric_to_cell(VehiclePoint::new(0.0, -5.04)),
            Some(CellIndex::new(0, 50))
        );
        assert_eq!(c.metric_to_cell(VehiclePoint::new(f64::NAN, 0.0)), None);
    }

    #[test]
    fn rasterize_examples() {
        let c = cfg(101, 0.1);
        assert!(rasterize(&[], c).cells().iter().all(|&v| v == 0.0));
        let g = rasterize(&[VehiclePoint::new(0.0, 0.0)], c);
        let hot: Vec<usize> = (0..g.cells().len())
            .filter(|&i| g.cells()[i] > 0.0)
            .collect();
        assert_eq!(hot, [50 * 101 + 50]);
        assert_eq!(g.get(50, 50), MAX_COST);
        // Out-of-extent points are dropped silently.
        let g = rasterize(&[VehiclePoint::new(100.0, 0.0)], c);
        assert!(g.cells().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn from_cells_checks_range() {
        let c = cfg(3, 1.0);
        assert!(matches!(
            OccupancyGrid::from_cells(c, vec![0.0; 8]),
            Err(GridError::CellCount { .. })
        ));
        let mut cells = vec![0.0; 9];
        cells[4] = 256.0;
        assert!(matches!(
            OccupancyGrid::from_cells(c, cells),
            Err(GridError::CostOutOfRange { index: 4, .. })
        ));
    }

    #[test]
    fn inflation_params_enforce_radius() {
        assert!(InflationParams::new(1.0, 2).is_ok());
        assert_eq!(
            InflationParams::new(1.5, 2),
            Err(GridError::KernelTooSmall { radius: 2, min: 3 })
        );
        assert!(InflationParams::new(0.0, 3).is_err());
        let p = InflationParams::with_sigma(1.2).unwrap();
        assert_eq!(p.kernel_radius(), 4);
        assert_eq!(p.kernel_dim(), 9);
        let sum: f64 = p.kernel_1d().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inflate_zero_grid_is_zero() {
        let g = OccupancyGrid::empty(cfg(21, 0.1));
        let out = inflate(&g, &InflationParams::new(2.0, 6).unwrap());
        assert!(out.cells().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_cell_matches_naive_convolution() {
        let c = cfg(21, 0.1);
        let mut g = OccupancyGrid::empty(c);
        g.set(10, 10, MAX_COST);
        let params = InflationParams::new(1.0, 3).unwrap();
        let fast = convolve(g.cells(), 21, &params);
        let slow = naive_convolve(g.cells(), 21, 1.0, 3);
        let err = fast
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-9, "max error {err}");

        // inflate = the convolution with the lethal core re-asserted
        let inflated = inflate(&g, &params);
        for (i, (&v, &s)) in inflated.cells().iter().zip(&slow).enumerate() {
            let expected = if i == 10 * 21 + 10 { MAX_COST } else { s };
            assert!((v - expected).abs() <= 1e-9);
        }
    }

    #[test]
    fn border_cells_are_zero_padded() {
        let c = cfg(9, 1.0);
        let g = OccupancyGrid::from_cells(c, vec![100.0; 81]).unwrap();
        let params = InflationParams::new(1.0, 2).unwrap();
        let out = convolve(g.cells(), 9, &params);
        let slow = naive_convolve(g.cells(), 9, 1.0, 2);
        // the corner sees only a quarter-ish of the kernel mass
        assert!(out[0] < 50.0);
        assert!((out[4 * 9 + 4] - 100.0).abs() < 1e-9);
        for (a, b) in out.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn two_walls_make_a_centered_valley() {
        let c = cfg(101, 0.1);
        let mut g = OccupancyGrid::empty(c);
        for y in 0..101 {
            g.set(30, y, MAX_COST);
            g.set(70, y, MAX_COST);
        }
        let params = InflationParams::new(8.0, 24).unwrap();
        let slow = naive_convolve(g.cells(), 101, 8.0, 24);
        let out = inflate(&g, &params);
        for y in 0..101 {
            let row = out.row(y);
            let argmin = (31..70)
                .min_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap())
                .unwrap();
            assert!(argmin.abs_diff(50) <= 1, "row {y} argmin {argmin}");
            let oracle_row = &slow[y * 101..(y + 1) * 101];
            let oracle_argmin = (31..70)
                .min_by(|&a, &b| oracle_row[a].partial_cmp(&oracle_row[b]).unwrap())
                .unwrap();
            assert_eq!(argmin, oracle_argmin);
        }
    }

    #[test]
    fn mirror_and_fingerprint() {
        let c = cfg(5, 1.0);
        let cells: Vec<f64> = (0..25).map(|i| i as f64).collect();
        let g = OccupancyGrid::from_cells(c, cells).unwrap();
        let m = g.mirrored();
        assert_eq!(m.row(0), &[4.0, 3.0, 2.0, 1.0, 0.0]);
        assert_eq!(m.mirrored(), g);
        assert_ne!(g.fingerprint(), m.fingerprint());
        assert_eq!(g.fingerprint(), g.clone().fingerprint());
    }

    #[test]
    fn cell_center_round_trip() {
        let c = cfg(101, 0.1);
        let cell = CellIndex::new(60, 70);
        let p = c.cell_to_metric(cell);
        assert!((p.forward - 2.0).abs() < 1e-12);
        assert!((p.right - 1.0).abs() < 1e-12);
        assert_eq!(c.metric_to_cell(p), Some(cell));
    }
}
