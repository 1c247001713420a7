//! RIS array geometry and focusing codebook synthesis.
//!
//! Each beam of the codebook focuses the source's spherical wave onto one
//! predefined desk location: cell `m` of beam `n` carries
//! `exp(-j*2*pi*(d_m_source + d_m_target)/lambda)` with the exact per-cell
//! distances, so the RIS cascade adds coherently at the target. A common
//! phase shift from a `P`-point grid is applied on top of the beam to rotate
//! the whole reflected signal against the non-controllable paths.

use std::io::Write;

use num_complex::Complex64;

use crate::metrics::wrap_2pi;
use crate::propagation::{Point3, Scenario};
use crate::{Error, Result};

const AXIS_TOL: f64 = 1e-12;

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn check_axes(field: &str, axis_u: [f64; 3], axis_v: [f64; 3]) -> Result<()> {
    let nu = dot(axis_u, axis_u).sqrt();
    let nv = dot(axis_v, axis_v).sqrt();
    if (nu - 1.0).abs() > AXIS_TOL || (nv - 1.0).abs() > AXIS_TOL {
        return Err(Error::invalid(field, "axes must have unit length"));
    }
    if dot(axis_u, axis_v).abs() > AXIS_TOL {
        return Err(Error::invalid(field, "axes must be orthogonal"));
    }
    Ok(())
}

/// Planar RIS array of `rows x cols` cells on an orthonormal lattice.
#[derive(Debug, Clone)]
pub struct RisGeometry {
    pub origin: Point3,
    pub axis_u: [f64; 3],
    pub axis_v: [f64; 3],
    pub rows: usize,
    pub cols: usize,
    /// Cell pitch in meters, > 0.
    pub spacing: f64,
}

impl RisGeometry {
    /// Total number of cells M.
    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::invalid("ris", "rows and cols must be >= 1"));
        }
        if !self.spacing.is_finite() || self.spacing <= 0.0 {
            return Err(Error::invalid("ris.spacing", "must be finite and > 0"));
        }
        if !self.origin.is_finite() {
            return Err(Error::invalid("ris.origin", "coordinates must be finite"));
        }
        check_axes("ris.axes", self.axis_u, self.axis_v)
    }

    /// Cell centers in row-major order: cell `(r, c)` sits at
    /// `origin + r*spacing*axis_u + c*spacing*axis_v` and has index
    /// `r*cols + c`.
    pub fn cell_centers(&self) -> Vec<Point3> {
        let mut centers = Vec::with_capacity(self.cells());
        for r in 0..self.rows {
            for c in 0..self.cols {
                let p = self
                    .origin
                    .offset(self.axis_u, r as f64 * self.spacing)
                    .offset(self.axis_v, c as f64 * self.spacing);
                centers.push(p);
            }
        }
        centers
    }
}

/// Grid of predefined target locations covering the desk area.
///
/// Locations are enumerated row-major; location `n` (1-based, as reported in
/// outputs) sits at vector index `n - 1 = i*ny + j`.
#[derive(Debug, Clone)]
pub struct DeskGrid {
    pub origin: Point3,
    pub axis_u: [f64; 3],
    pub axis_v: [f64; 3],
    pub nx: usize,
    pub ny: usize,
    /// Location pitch in meters, > 0.
    pub spacing: f64,
}

impl DeskGrid {
    /// Total number of locations N.
    pub fn locations_len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::invalid("desk", "nx and ny must be >= 1"));
        }
        if !self.spacing.is_finite() || self.spacing <= 0.0 {
            return Err(Error::invalid("desk.spacing", "must be finite and > 0"));
        }
        if !self.origin.is_finite() {
            return Err(Error::invalid("desk.origin", "coordinates must be finite"));
        }
        check_axes("desk.axes", self.axis_u, self.axis_v)
    }

    /// Locations in row-major order, `(i, j) -> origin + i*s*u + j*s*v`.
    pub fn locations(&self) -> Vec<Point3> {
        let mut locs = Vec::with_capacity(self.locations_len());
        for i in 0..self.nx {
            for j in 0..self.ny {
                let p = self
                    .origin
                    .offset(self.axis_u, i as f64 * self.spacing)
                    .offset(self.axis_v, j as f64 * self.spacing);
                locs.push(p);
            }
        }
        locs
    }
}

/// N focusing beams of M unit-modulus reflection coefficients each.
#[derive(Debug, Clone)]
pub struct Codebook {
    /// `beams[n - 1][m]` is the coefficient of cell `m` for beam `n`.
    pub beams: Vec<Vec<Complex64>>,
}

impl Codebook {
    pub fn beam_count(&self) -> usize {
        self.beams.len()
    }

    /// Cells per beam.
    pub fn cells(&self) -> usize {
        self.beams.first().map_or(0, Vec::len)
    }

    /// Beam for 1-based index `n`.
    pub fn beam(&self, n: usize) -> Result<&[Complex64]> {
        if n == 0 || n > self.beams.len() {
            return Err(Error::OutOfRange(format!(
                "beam index {n} not in 1..={}",
                self.beams.len()
            )));
        }
        Ok(&self.beams[n - 1])
    }

    /// Snap every cell phase to the nearest of `2^bits` uniform levels,
    /// modeling hardware with `bits`-bit phase control.
    pub fn quantize_phases(&self, bits: u32) -> Codebook {
        let levels = (1u64 << bits) as f64;
        let step = 2.0 * std::f64::consts::PI / levels;
        let beams = self
            .beams
            .iter()
            .map(|beam| {
                beam.iter()
                    .map(|b| {
                        let q = (wrap_2pi(b.arg()) / step).round() % levels;
                        Complex64::from_polar(1.0, q * step)
                    })
                    .collect()
            })
            .collect();
        Codebook { beams }
    }
}

/// Synthesize the focusing codebook for the scenario's desk grid.
///
/// Beam `n` compensates, cell by cell, the phase accumulated over the
/// source-to-cell and cell-to-location hops, using the exact spherical-wave
/// distances rather than a far-field phase ramp.
pub fn build_codebook(s: &Scenario) -> Result<Codebook> {
    let cells = s.ris.cell_centers();
    let targets = s.desk.locations();
    let mut beams = Vec::with_capacity(targets.len());
    for (n, target) in targets.iter().enumerate() {
        let mut beam = Vec::with_capacity(cells.len());
        for (m, cell) in cells.iter().enumerate() {
            let d_source = s.source_pos.distance(cell);
            let d_target = cell.distance(target);
            if d_source == 0.0 {
                return Err(Error::SingularDistance(format!(
                    "source coincides with ris cell {}",
                    m + 1
                )));
            }
            if d_target == 0.0 {
                return Err(Error::SingularDistance(format!(
                    "desk location {} coincides with ris cell {}",
                    n + 1,
                    m + 1
                )));
            }
            let phase = -2.0 * std::f64::consts::PI * (d_source + d_target) / s.wavelength;
            beam.push(Complex64::from_polar(1.0, phase));
        }
        beams.push(beam);
    }
    Ok(Codebook { beams })
}

/// Apply the common phase shift: `u[m] = b[m] * exp(j*delta)`.
pub fn compose_weights(beam: &[Complex64], delta: f64) -> Vec<Complex64> {
    let rot = Complex64::from_polar(1.0, delta);
    beam.iter().map(|b| b * rot).collect()
}

/// The `P` common phase shifts `{0, 2*pi/P, ..., 2*pi*(P-1)/P}`.
#[derive(Debug, Clone)]
pub struct PhaseGrid {
    /// Strictly increasing values in `[0, 2*pi)`, first value 0.
    pub values: Vec<f64>,
}

impl PhaseGrid {
    pub fn new(count: usize) -> Result<PhaseGrid> {
        if count == 0 {
            return Err(Error::invalid("phase_count", "must be >= 1"));
        }
        let values = (0..count)
            .map(|p| 2.0 * std::f64::consts::PI * p as f64 / count as f64)
            .collect();
        Ok(PhaseGrid { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Write the codebook as CSV: `beam_index,cell_index,phase_rad` with 1-based
/// indices and phases in `[0, 2*pi)`.
pub fn write_codebook_csv(cb: &Codebook, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "beam_index,cell_index,phase_rad")?;
    for (n, beam) in cb.beams.iter().enumerate() {
        for (m, b) in beam.iter().enumerate() {
            writeln!(
                out,
                "{},{},{}",
                n + 1,
                m + 1,
                crate::fmt::sig12(wrap_2pi(b.arg()))
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::{build_channel_set, path_channel, AmplitudeLaw};
    use crate::testutil::{line_scenario, oblique_scenario};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn cell_centers_single_cell() {
        let s = line_scenario();
        assert_eq!(s.ris.cell_centers(), vec![Point3::new(1.0, 0.0, 0.0)]);
    }

    #[test]
    fn cell_centers_one_by_two() {
        let g = RisGeometry {
            origin: Point3::new(0.0, 0.0, 0.0),
            axis_u: [1.0, 0.0, 0.0],
            axis_v: [0.0, 1.0, 0.0],
            rows: 1,
            cols: 2,
            spacing: 0.5,
        };
        assert_eq!(
            g.cell_centers(),
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(0.0, 0.5, 0.0)]
        );
    }

    #[test]
    fn cell_centers_two_by_two_form_a_square() {
        let g = RisGeometry {
            origin: Point3::new(1.0, 2.0, 3.0),
            axis_u: [0.0, 1.0, 0.0],
            axis_v: [0.0, 0.0, 1.0],
            rows: 2,
            cols: 2,
            spacing: 0.25,
        };
        let c = g.cell_centers();
        assert_eq!(c.len(), 4);
        // row-major: (0,0), (0,1), (1,0), (1,1)
        assert_eq!(c[0], Point3::new(1.0, 2.0, 3.0));
        assert_eq!(c[1], Point3::new(1.0, 2.0, 3.25));
        assert_eq!(c[2], Point3::new(1.0, 2.25, 3.0));
        assert_eq!(c[3], Point3::new(1.0, 2.25, 3.25));
        assert_eq!(c[0].distance(&c[1]), 0.25);
        assert_eq!(c[0].distance(&c[2]), 0.25);
        assert_eq!(c[1].distance(&c[3]), 0.25);
    }

    #[test]
    fn geometry_validation_rejects_bad_axes() {
        let mut g = line_scenario().ris;
        g.axis_v = [0.0, 1.0, 0.0]; // parallel to axis_u
        assert!(g.validate().is_err());
        g.axis_v = [0.0, 0.0, 2.0]; // not unit
        assert!(g.validate().is_err());
    }

    fn single_cell_beam(cell_x: f64, loc_x: f64) -> Complex64 {
        let mut s = line_scenario();
        s.ris.origin = Point3::new(cell_x, 0.0, 0.0);
        s.desk.origin = Point3::new(loc_x, 0.0, 0.0);
        s.desk.ny = 1;
        build_codebook(&s).unwrap().beams[0][0]
    }

    #[test]
    fn build_codebook_single_cell_phases() {
        // d_sum = 2 wavelengths: full turn
        assert!(close(
            single_cell_beam(1.0, 2.0),
            Complex64::new(1.0, 0.0),
            1e-12
        ));
        // d_sum = lambda/2: half turn
        assert!(close(
            single_cell_beam(0.25, 0.5),
            Complex64::new(-1.0, 0.0),
            1e-12
        ));
        // d_sum = lambda/4: -j
        assert!(close(
            single_cell_beam(0.125, 0.25),
            Complex64::new(0.0, -1.0),
            1e-12
        ));
    }

    #[test]
    fn build_codebook_rejects_coincident_source_and_cell() {
        let mut s = line_scenario();
        s.source_pos = Point3::new(1.0, 0.0, 0.0);
        assert!(matches!(
            build_codebook(&s).unwrap_err(),
            Error::SingularDistance(_)
        ));
    }

    #[test]
    fn compose_weights_examples() {
        let b = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        assert_eq!(compose_weights(&b, 0.0), b.to_vec());
        let negated = compose_weights(&b, PI);
        assert!(close(negated[0], Complex64::new(-1.0, 0.0), 1e-12));
        assert!(close(negated[1], Complex64::new(0.0, -1.0), 1e-12));
        let quarter = compose_weights(&[Complex64::new(1.0, 0.0)], PI / 2.0);
        assert!(close(quarter[0], Complex64::new(0.0, 1.0), 1e-12));
    }

    #[test]
    fn phase_grid_examples() {
        assert_eq!(PhaseGrid::new(1).unwrap().values, vec![0.0]);
        let p4 = PhaseGrid::new(4).unwrap();
        assert_eq!(p4.values, vec![0.0, PI / 2.0, PI, 3.0 * PI / 2.0]);
        assert_eq!(PhaseGrid::new(2).unwrap().values, vec![0.0, PI]);
        assert!(PhaseGrid::new(0).is_err());
        // strictly increasing within [0, 2*pi)
        let p16 = PhaseGrid::new(16).unwrap();
        assert!(p16.values.windows(2).all(|w| w[0] < w[1]));
        assert!(*p16.values.last().unwrap() < 2.0 * PI);
    }

    #[test]
    fn focusing_identity_against_amplitude_sum() {
        // Route 1: complex cascade with the beam aimed at each location.
        // Route 2: plain product-of-amplitudes sum. They must agree, and the
        // cascade must land on the positive real axis.
        for s in [oblique_scenario(), line_scenario()] {
            let cs = build_channel_set(&s).unwrap();
            let cb = build_codebook(&s).unwrap();
            let cells = s.ris.cell_centers();
            for (n, target) in s.desk.locations().iter().enumerate() {
                let mut cascade = Complex64::new(0.0, 0.0);
                let mut amp_sum = 0.0;
                for (m, cell) in cells.iter().enumerate() {
                    let hop = path_channel(*cell, *target, s.wavelength, s.amplitude_law).unwrap();
                    cascade += cs.h_s_ris[m] * cb.beams[n][m] * hop;
                    amp_sum += s
                        .amplitude_law
                        .amplitude(s.source_pos.distance(cell), s.wavelength)
                        * s.amplitude_law
                            .amplitude(cell.distance(target), s.wavelength);
                }
                assert!(
                    cascade.im.abs() <= 1e-9 * amp_sum,
                    "beam {} not real-positive: {cascade}",
                    n + 1
                );
                assert!(
                    (cascade.re - amp_sum).abs() <= 1e-9 * amp_sum,
                    "beam {}: {} vs {}",
                    n + 1,
                    cascade.re,
                    amp_sum
                );
                if s.amplitude_law == AmplitudeLaw::Unit {
                    assert_eq!(cascade.re, s.ris.cells() as f64);
                }
            }
        }
    }

    #[test]
    fn phase_convention_cancels_at_the_target() {
        let s = oblique_scenario();
        let cs = build_channel_set(&s).unwrap();
        let cb = build_codebook(&s).unwrap();
        let cells = s.ris.cell_centers();
        for (n, target) in s.desk.locations().iter().enumerate() {
            for (m, cell) in cells.iter().enumerate() {
                let hop = path_channel(*cell, *target, s.wavelength, s.amplitude_law).unwrap();
                let term = cs.h_s_ris[m] * cb.beams[n][m] * hop;
                let wrapped = wrap_2pi(term.arg());
                let dist = wrapped.min(2.0 * PI - wrapped);
                assert!(dist <= 1e-9, "cell {m} beam {n}: residual phase {dist}");
            }
        }
    }

    #[test]
    fn codebook_is_translation_invariant() {
        let s = oblique_scenario();
        let mut t = s.clone();
        let shift = Point3::new(0.5, -0.25, 2.0);
        for p in [&mut t.source_pos, &mut t.ris.origin, &mut t.desk.origin] {
            p.x += shift.x;
            p.y += shift.y;
            p.z += shift.z;
        }
        let cb_s = build_codebook(&s).unwrap();
        let cb_t = build_codebook(&t).unwrap();
        for (bs, bt) in cb_s.beams.iter().zip(&cb_t.beams) {
            for (a, b) in bs.iter().zip(bt) {
                assert!(close(*a, *b, 1e-12), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn quantized_phases_stay_unit_modulus_and_close() {
        let s = oblique_scenario();
        let cb = build_codebook(&s).unwrap();
        let q = cb.quantize_phases(4);
        let step = 2.0 * PI / 16.0;
        for (beam, qbeam) in cb.beams.iter().zip(&q.beams) {
            for (b, qb) in beam.iter().zip(qbeam) {
                assert!((qb.norm() - 1.0).abs() <= 1e-12);
                let diff = wrap_2pi(qb.arg() - b.arg());
                let dist = diff.min(2.0 * PI - diff);
                assert!(dist <= step / 2.0 + 1e-12, "quantization moved {dist}");
            }
        }
    }

    proptest! {
        #[test]
        fn composed_weights_keep_unit_modulus_and_compose_additively(
            phases in proptest::collection::vec(0.0f64..(2.0 * PI), 1..8),
            d1 in -10.0f64..10.0,
            d2 in -10.0f64..10.0,
        ) {
            let beam: Vec<Complex64> =
                phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
            let once = compose_weights(&beam, d1 + d2);
            let twice = compose_weights(&compose_weights(&beam, d1), d2);
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).norm() <= 1e-12);
                prop_assert!((a.norm() - 1.0).abs() <= 1e-12);
            }
        }
    }
}
