//! Spatial maps of the RIS-reflected signal strength.
//!
//! For each sample point the map evaluates the cascade source -> RIS ->
//! point under the given reflection weights and converts the magnitude to
//! dB, with a floor substituted for vanishing fields. The resulting images
//! show where a beam puts its main lobe (the hot spot) and how much of it
//! leaks elsewhere.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::codebook::DeskGrid;
use crate::fmt::sig12;
use crate::propagation::{path_channel, Point3, Scenario};
use crate::{Error, Result};

/// Reflected signal strength sampled over a planar grid, in dB.
#[derive(Debug, Clone)]
pub struct FieldMap {
    pub grid: DeskGrid,
    /// `values[i][j] = 20*log10(max(|field(i, j)|, 10^(floor_db/20)))`.
    pub values: Vec<Vec<f64>>,
    /// Substitute level for zero magnitude, in dB.
    pub floor_db: f64,
}

impl FieldMap {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Largest value and its grid indices; ties resolve row-major.
    pub fn peak(&self) -> (usize, usize, f64) {
        map_peak(self)
    }
}

/// Sample the RIS-reflected field over `grid` under reflection weights `u`.
///
/// With `include_direct` the source's own field at each sample point is
/// added on top of the cascade, for maps of the total illumination rather
/// than the reflected component alone.
pub fn reflected_field_map(
    s: &Scenario,
    weights: &[Complex64],
    grid: &DeskGrid,
    include_direct: bool,
    floor_db: f64,
) -> Result<FieldMap> {
    grid.validate()?;
    let cells = s.ris.cell_centers();
    if weights.len() != cells.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} cells",
            weights.len(),
            cells.len()
        )));
    }
    let mut h_s_ris = Vec::with_capacity(cells.len());
    for c in &cells {
        h_s_ris.push(path_channel(
            s.source_pos,
            *c,
            s.wavelength,
            s.amplitude_law,
        )?);
    }
    let floor_amp = 10f64.powf(floor_db / 20.0);

    let points = grid.locations();
    let values = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(grid.ny);
            for j in 0..grid.ny {
                let x = points[i * grid.ny + j];
                let field = sample_field(s, &cells, &h_s_ris, weights, x, include_direct)?;
                row.push(20.0 * field.norm().max(floor_amp).log10());
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldMap {
        grid: grid.clone(),
        values,
        floor_db,
    })
}

fn sample_field(
    s: &Scenario,
    cells: &[Point3],
    h_s_ris: &[Complex64],
    weights: &[Complex64],
    x: Point3,
    include_direct: bool,
) -> Result<Complex64> {
    let mut field = Complex64::new(0.0, 0.0);
    for (m, cell) in cells.iter().enumerate() {
        let hop = path_channel(*cell, x, s.wavelength, s.amplitude_law)?;
        field += h_s_ris[m] * weights[m] * hop;
    }
    if include_direct {
        field += path_channel(s.source_pos, x, s.wavelength, s.amplitude_law)?;
    }
    Ok(field)
}

/// Row-major argmax of the map: first occurrence of the maximum wins.
pub fn map_peak(fm: &FieldMap) -> (usize, usize, f64) {
    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for (i, row) in fm.values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > best.2 {
                best = (i, j, v);
            }
        }
    }
    best
}

/// Write the map as CSV: `i,j,x,y,z,db` rows in row-major order.
pub fn write_map_csv(fm: &FieldMap, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "i,j,x,y,z,db")?;
    let points = fm.grid.locations();
    for i in 0..fm.rows() {
        for j in 0..fm.cols() {
            let p = points[i * fm.grid.ny + j];
            writeln!(
                out,
                "{},{},{},{},{},{}",
                i,
                j,
                sig12(p.x),
                sig12(p.y),
                sig12(p.z),
                sig12(fm.values[i][j])
            )?;
        }
    }
    Ok(())
}

/// Largest map value, used as the top of the PGM scale.
fn map_max(fm: &FieldMap) -> f64 {
    fm.values
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Map a dB value onto the 16-bit PGM scale.
fn pgm_sample(db: f64, floor_db: f64, max_db: f64) -> u16 {
    if max_db <= floor_db {
        return 0;
    }
    let t = (db - floor_db) / (max_db - floor_db);
    (t.clamp(0.0, 1.0) * 65535.0).round() as u16
}

/// Write the map as a binary 16-bit PGM (P5, big-endian samples), with
/// values mapped affinely from `[floor_db, max]` onto `[0, 65535]`. Rows of
/// the raster are the grid's `i` axis, columns its `j` axis.
pub fn write_map_pgm(fm: &FieldMap, out: &mut dyn Write) -> std::io::Result<()> {
    let max_db = map_max(fm);
    write!(out, "P5\n{} {}\n65535\n", fm.cols(), fm.rows())?;
    for row in &fm.values {
        for &db in row {
            out.write_all(&pgm_sample(db, fm.floor_db, max_db).to_be_bytes())?;
        }
    }
    Ok(())
}

/// Sidecar describing how to read the PGM back into dB values.
pub fn write_map_sidecar(
    fm: &FieldMap,
    pgm_name: &str,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    let max_db = map_max(fm);
    writeln!(out, "pgm {pgm_name}")?;
    writeln!(out, "width {}", fm.cols())?;
    writeln!(out, "height {}", fm.rows())?;
    writeln!(out, "floor_db {}", sig12(fm.floor_db))?;
    writeln!(out, "max_db {}", sig12(max_db))?;
    writeln!(
        out,
        "mapping sample = round(65535 * (db - floor_db) / (max_db - floor_db)), clamped to [0, 65535]; all samples 0 when max_db <= floor_db"
    )?;
    writeln!(
        out,
        "order row-major: sample (i, j) = raster row i, column j; 16-bit big-endian"
    )?;
    Ok(())
}
