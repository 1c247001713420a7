//! Shared fixtures for unit tests.

use num_complex::Complex64;

use crate::codebook::{DeskGrid, RisGeometry};
use crate::propagation::{AmplitudeLaw, Point3, Scenario};

/// Source, single RIS cell, tag and reader on the x axis at integer spacing;
/// with the unit law every single-hop coefficient is exp(j*2*pi*d) = 1.
pub(crate) fn line_scenario() -> Scenario {
    Scenario {
        source_pos: Point3::new(0.0, 0.0, 0.0),
        tag_pos: Point3::new(2.0, 0.0, 0.0),
        reader_pos: Point3::new(3.0, 0.0, 0.0),
        wavelength: 1.0,
        ris: RisGeometry {
            origin: Point3::new(1.0, 0.0, 0.0),
            axis_u: [0.0, 1.0, 0.0],
            axis_v: [0.0, 0.0, 1.0],
            rows: 1,
            cols: 1,
            spacing: 0.5,
        },
        desk: DeskGrid {
            origin: Point3::new(2.0, 0.0, 0.0),
            axis_u: [0.0, 1.0, 0.0],
            axis_v: [1.0, 0.0, 0.0],
            nx: 1,
            ny: 2,
            spacing: 1.0,
        },
        noise_sigma: 1e-3,
        amplitude_law: AmplitudeLaw::Unit,
        tag_reflection: Complex64::new(1.0, 0.0),
    }
}

/// Small free-space scene with a 2x2 RIS, off-axis source, and a 2x2 desk
/// grid, for tests that want non-trivial phases and amplitudes.
pub(crate) fn oblique_scenario() -> Scenario {
    Scenario {
        source_pos: Point3::new(0.9, 1.1, 0.8),
        tag_pos: Point3::new(0.1, 0.05, 0.0),
        reader_pos: Point3::new(0.35, 0.2, 0.0),
        wavelength: 0.122,
        ris: RisGeometry {
            origin: Point3::new(-0.2, -0.4, 0.15),
            axis_u: [1.0, 0.0, 0.0],
            axis_v: [0.0, 0.0, 1.0],
            rows: 2,
            cols: 2,
            spacing: 0.061,
        },
        desk: DeskGrid {
            origin: Point3::new(0.0, 0.0, 0.0),
            axis_u: [1.0, 0.0, 0.0],
            axis_v: [0.0, 1.0, 0.0],
            nx: 2,
            ny: 2,
            spacing: 0.1,
        },
        noise_sigma: 1e-4,
        amplitude_law: AmplitudeLaw::FreeSpace,
        tag_reflection: Complex64::new(1.0, 0.0),
    }
}
