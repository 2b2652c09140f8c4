//! Grid writers: CSV, 16-bit binary PGM with a JSON sidecar.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::grid::RiskGrid;
use crate::math::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgmSidecar {
    pub max: f64,
    pub width: usize,
    pub height: usize,
    pub origin: Vec2,
    pub resolution: f64,
}

/// `x,y,value` rows for every cell center, row-major.
pub fn write_csv<W: Write>(grid: &RiskGrid, mut w: W) -> io::Result<()> {
    writeln!(w, "x,y,value")?;
    let spec = grid.spec;
    for j in 0..spec.height {
        for i in 0..spec.width {
            let c = spec.cell_center(i, j);
            writeln!(w, "{},{},{}", c.x, c.y, grid.get(i, j))?;
        }
    }
    w.flush()
}

/// Pixel value of `v` under the per-grid normalization.
pub fn pgm_level(v: f64, max: f64) -> u16 {
    let scaled = (v / max.max(1e-300) * 65535.0).round();
    scaled.clamp(0.0, 65535.0) as u16
}

/// Binary P5 with maxval 65535, big-endian samples. The top image row is the
/// largest `y`.
pub fn write_pgm<W: Write>(grid: &RiskGrid, mut w: W) -> io::Result<()> {
    let spec = grid.spec;
    let max = grid.max_value();
    write!(w, "P5\n{} {}\n65535\n", spec.width, spec.height)?;
    let mut row = Vec::with_capacity(spec.width * 2);
    for j in (0..spec.height).rev() {
        row.clear();
        for i in 0..spec.width {
            row.extend_from_slice(&pgm_level(grid.get(i, j), max).to_be_bytes());
        }
        w.write_all(&row)?;
    }
    w.flush()
}

pub fn sidecar(grid: &RiskGrid) -> PgmSidecar {
    PgmSidecar {
        max: grid.max_value(),
        width: grid.spec.width,
        height: grid.spec.height,
        origin: grid.spec.origin,
        resolution: grid.spec.resolution,
    }
}

pub fn write_sidecar<W: Write>(grid: &RiskGrid, mut w: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, &sidecar(grid))?;
    writeln!(w)?;
    w.flush()
}

pub fn write_grid_csv(grid: &RiskGrid, path: &Path) -> io::Result<()> {
    write_csv(grid, BufWriter::new(File::create(path)?))
}

/// Writes `path` and its sidecar `path.json`.
pub fn write_grid_pgm(grid: &RiskGrid, path: &Path) -> io::Result<()> {
    write_pgm(grid, BufWriter::new(File::create(path)?))?;
    write_sidecar(grid, BufWriter::new(File::create(sidecar_path(path))?))
}

pub fn sidecar_path(pgm: &Path) -> PathBuf {
    let mut name = pgm.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes `<stem>.csv`, `<stem>.pgm` and `<stem>.pgm.json` under `dir`.
pub fn write_grid_files(grid: &RiskGrid, dir: &Path, stem: &str) -> io::Result<()> {
    write_grid_csv(grid, &dir.join(format!("{stem}.csv")))?;
    write_grid_pgm(grid, &dir.join(format!("{stem}.pgm")))
}
