//! Uniform planar sampling grids and the raw grid dump format.
//!
//! A dump is a single text header line `nx ny x0 y0 dx dy field-name`
//! followed by `nx*ny` little-endian `f64` values in row-major order
//! (x index fastest).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Grid2 {
    /// `n × n` nodes covering `[-half_width, half_width]²` including both ends.
    pub fn square_closed(n: usize, half_width: f64) -> Grid2 {
        let d = if n > 1 { 2.0 * half_width / (n - 1) as f64 } else { 0.0 };
        Grid2 { nx: n, ny: n, x0: -half_width, y0: -half_width, dx: d, dy: d }
    }

    /// `n × n` nodes of the periodic box `[-half_width, half_width)²`.
    pub fn square_periodic(n: usize, half_width: f64) -> Grid2 {
        let d = 2.0 * half_width / n as f64;
        Grid2 { nx: n, ny: n, x0: -half_width, y0: -half_width, dx: d, dy: d }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x0 + i as f64 * self.dx, self.y0 + j as f64 * self.dy]
    }

    /// Point of flat index `idx = j*nx + i`.
    pub fn point_at(&self, idx: usize) -> [f64; 2] {
        self.point(idx % self.nx, idx / self.nx)
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + (self.nx.saturating_sub(1)) as f64 * self.dx
    }

    pub fn y_max(&self) -> f64 {
        self.y0 + (self.ny.saturating_sub(1)) as f64 * self.dy
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridData {
    pub grid: Grid2,
    pub name: String,
    pub values: Vec<f64>,
}

impl GridData {
    pub fn new(grid: Grid2, name: impl Into<String>, values: Vec<f64>) -> Result<GridData> {
        if values.len() != grid.len() {
            return Err(Error::InvalidImport(format!(
                "grid {}x{} needs {} values, got {}",
                grid.nx,
                grid.ny,
                grid.len(),
                values.len()
            )));
        }
        let name = name.into();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::InvalidImport(format!("invalid field name {name:?}")));
        }
        Ok(GridData { grid, name, values })
    }

    pub fn from_fn(grid: Grid2, name: impl Into<String>, f: impl Fn([f64; 2]) -> f64) -> Result<GridData> {
        let values = (0..grid.len()).map(|k| f(grid.point_at(k))).collect();
        GridData::new(grid, name, values)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn header(&self) -> String {
        let g = &self.grid;
        format!("{} {} {} {} {} {} {}", g.nx, g.ny, g.x0, g.y0, g.dx, g.dy, self.name)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{}", self.header())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<GridData> {
        let bad = |reason: String| Error::GridFormat { path: path.to_path_buf(), reason };
        let mut r = BufReader::new(File::open(path)?);
        let mut header = String::new();
        r.read_line(&mut header)?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 7 {
            return Err(bad(format!("header has {} fields, expected 7", parts.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s}: {e}")));
        let float = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s}: {e}")));
        let grid = Grid2 {
            nx: int(parts[0])?,
            ny: int(parts[1])?,
            x0: float(parts[2])?,
            y0: float(parts[3])?,
            dx: float(parts[4])?,
            dy: float(parts[5])?,
        };
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != grid.len() * 8 {
            return Err(bad(format!("payload has {} bytes, expected {}", bytes.len(), grid.len() * 8)));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        GridData::new(grid, parts[6], values).map_err(|e| bad(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_layout_is_header_then_row_major_le() {
        let g = Grid2 { nx: 3, ny: 2, x0: -1.0, y0: 0.5, dx: 0.25, dy: 0.125 };
        let d = GridData::from_fn(g, "phi", |p| p[0] + 10.0 * p[1]).unwrap();
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        let nl = buf.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(std::str::from_utf8(&buf[..nl]).unwrap(), "3 2 -1 0.5 0.25 0.125 phi");
        let second = f64::from_le_bytes(buf[nl + 1 + 8..nl + 1 + 16].try_into().unwrap());
        assert_eq!(second, -0.75 + 5.0);
        let fourth = f64::from_le_bytes(buf[nl + 1 + 24..nl + 1 + 32].try_into().unwrap());
        assert_eq!(fourth, -1.0 + 6.25);
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2::square_closed(5, 2.0);
        let d = GridData::from_fn(g, "omega", |p| (p[0] * 1.37).sin() * p[1]).unwrap();
        let path = dir.path().join("w.grid");
        d.save(&path).unwrap();
        assert_eq!(GridData::load(&path).unwrap(), d);
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.grid");
        std::fs::write(&path, b"2 2 0 0 1 1 phi\n\0\0\0\0").unwrap();
        assert!(matches!(GridData::load(&path), Err(Error::GridFormat { .. })));
    }
}
