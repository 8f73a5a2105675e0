//! Binary greymap (`P5`) import and export of occupancy grids.
//!
//! Row 0 of the image is the grid row farthest ahead of the vehicle, so the
//! picture reads like a map with forward pointing up. Costs are quantized to
//! bytes only here, rounding half up.

use costvalley_core::grid::{GridConfig, GridError, OccupancyGrid};

#[derive(Debug, thiserror::Error)]
pub enum PgmError {
    #[error("not a binary PGM (missing P5 magic)")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    BadHeader(&'static str),
    #[error("unsupported maxval {0}, expected 255")]
    UnsupportedMaxval(u32),
    #[error("pixel data holds {got} bytes, expected {expected}")]
    Truncated { expected: usize, got: usize },
    #[error("grid images must be square, got {width}x{height}")]
    NotSquare { width: usize, height: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Decoded greymap, rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Greymap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

pub fn quantize(cost: f64) -> u8 {
    (cost + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn encode(map: &Greymap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", map.width, map.height).into_bytes();
    out.extend_from_slice(&map.pixels);
    out
}

pub fn decode(bytes: &[u8]) -> Result<Greymap, PgmError> {
    if !bytes.starts_with(b"P5") {
        return Err(PgmError::BadMagic);
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        // whitespace and comments between header fields
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(PgmError::BadHeader("ends before all fields")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(PgmError::BadHeader("expected a number"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| PgmError::BadHeader("number out of range"))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(PgmError::BadHeader("missing whitespace after maxval")),
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(PgmError::UnsupportedMaxval(maxval));
    }
    let (width, height) = (width as usize, height as usize);
    let expected = width * height;
    let data = &bytes[pos..];
    if data.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            got: data.len(),
        });
    }
    Ok(Greymap {
        width,
        height,
        pixels: data[..expected].to_vec(),
    })
}

pub fn grid_to_greymap(grid: &OccupancyGrid) -> Greymap {
    let n = grid.size();
    let mut pixels = Vec::with_capacity(n * n);
    for y in (0..n).rev() {
        pixels.extend(grid.row(y).iter().map(|&c| quantize(c)));
    }
    Greymap {
        width: n,
        height: n,
        pixels,
    }
}

pub fn write_grid(grid: &OccupancyGrid) -> Vec<u8> {
    encode(&grid_to_greymap(grid))
}

/// Reads a grid image; the side length must be odd and the resolution comes
/// from the caller since PGM does not carry one.
pub fn read_grid(bytes: &[u8], resolution: f64) -> Result<OccupancyGrid, PgmError> {
    let map = decode(bytes)?;
    if map.width != map.height {
        return Err(PgmError::NotSquare {
            width: map.width,
            height: map.height,
        });
    }
    let n = map.width;
    let config = GridConfig::new(n, resolution)?;
    let mut cells = Vec::with_capacity(n * n);
    for row in map.pixels.chunks_exact(n).rev() {
        cells.extend(row.iter().map(|&b| f64::from(b)));
    }
    Ok(OccupancyGrid::from_cells(config, cells)?)
}
