//! Scene geometry and complex channel coefficients.
//!
//! Every single-hop link is a line-of-sight path with coefficient
//! `h = a(d) * exp(j*2*pi*d/lambda)` where `d` is the Euclidean distance
//! between the endpoints and `a(d)` is set by the configured amplitude law.
//! Multi-hop paths are products of single-hop coefficients; the RIS
//! contributes a sum over its cells weighted by the unit-modulus reflection
//! coefficients applied to them. The end-to-end coefficient seen by the
//! reader is the four-path sum: direct, tag-modulated, RIS-reflected, and
//! RIS-reflected-then-tag-modulated.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codebook::{DeskGrid, RisGeometry};
use crate::{Error, Result};

/// A position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    /// Euclidean distance to `other`. Symmetric in its endpoints bit-for-bit.
    pub fn distance(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// `self + t * axis`, used to walk grid lattices.
    pub(crate) fn offset(&self, axis: [f64; 3], t: f64) -> Point3 {
        Point3 {
            x: self.x + t * axis[0],
            y: self.y + t * axis[1],
            z: self.z + t * axis[2],
        }
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

/// Amplitude of a single-hop coefficient as a function of distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeLaw {
    /// Free-space spherical spreading, `a(d) = lambda / (4*pi*d)`.
    FreeSpace,
    /// `a(d) = 1`. Keeps every coefficient on the unit circle, which makes
    /// focusing sums integer-valued and handy for exact tests.
    Unit,
}

impl AmplitudeLaw {
    /// `a(d)` for wavelength `lambda`. `FreeSpace` requires `d > 0`.
    pub fn amplitude(&self, distance: f64, wavelength: f64) -> f64 {
        match self {
            AmplitudeLaw::FreeSpace => wavelength / (4.0 * std::f64::consts::PI * distance),
            AmplitudeLaw::Unit => 1.0,
        }
    }
}

/// State of the tag switch: the `gamma` factor of the channel sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagState {
    /// Tag invisible to the ambient wave (`gamma = 0`).
    Transparent,
    /// Tag re-radiates the incident wave (`gamma = 1`).
    Backscattering,
}

/// Full scene description: positions, RIS array, desk grid, and link
/// parameters. Distances are meters; channel coefficients dimensionless.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub source_pos: Point3,
    pub tag_pos: Point3,
    pub reader_pos: Point3,
    /// Carrier wavelength in meters, > 0.
    pub wavelength: f64,
    pub ris: RisGeometry,
    pub desk: DeskGrid,
    /// Noise amplitude (square root of the average noise power), same units
    /// as the received coefficient magnitude, > 0.
    pub noise_sigma: f64,
    pub amplitude_law: AmplitudeLaw,
    /// Complex reflection coefficient applied by the tag in its
    /// backscattering state, `|.| <= 1`. Unity reproduces the ideal tag.
    pub tag_reflection: Complex64,
}

impl Scenario {
    /// Check every scenario invariant, naming the offending field on error.
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("source", self.source_pos),
            ("tag", self.tag_pos),
            ("reader", self.reader_pos),
        ] {
            if !p.is_finite() {
                return Err(Error::invalid(name, "coordinates must be finite"));
            }
        }
        if !self.wavelength.is_finite() || self.wavelength <= 0.0 {
            return Err(Error::invalid("wavelength", "must be finite and > 0"));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma <= 0.0 {
            return Err(Error::invalid("noise_sigma", "must be finite and > 0"));
        }
        if !self.tag_reflection.is_finite() || self.tag_reflection.norm() > 1.0 + 1e-12 {
            return Err(Error::invalid("tag_reflection", "magnitude must be <= 1"));
        }
        self.ris.validate()?;
        self.desk.validate()?;

        let mut points = vec![
            ("source".to_string(), self.source_pos),
            ("tag".to_string(), self.tag_pos),
            ("reader".to_string(), self.reader_pos),
        ];
        for (m, c) in self.ris.cell_centers().into_iter().enumerate() {
            points.push((format!("ris cell {}", m + 1), c));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i].1 == points[j].1 {
                    return Err(Error::invalid(
                        "positions",
                        format!(
                            "{} and {} coincide at ({}, {}, {})",
                            points[i].0, points[j].0, points[i].1.x, points[i].1.y, points[i].1.z
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// All single-hop coefficients of this scene.
    pub fn channel_set(&self) -> Result<ChannelSet> {
        build_channel_set(self)
    }
}

/// Every single-hop coefficient of a scene: the three point-to-point links
/// plus the per-cell vectors to and from the RIS.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub h_sr: Complex64,
    pub h_st: Complex64,
    pub h_tr: Complex64,
    /// Source -> cell m, length M.
    pub h_s_ris: Vec<Complex64>,
    /// Cell m -> reader, length M.
    pub h_ris_r: Vec<Complex64>,
    /// Cell m -> tag, length M.
    pub h_ris_t: Vec<Complex64>,
}

impl ChannelSet {
    /// Number of RIS cells.
    pub fn cells(&self) -> usize {
        self.h_s_ris.len()
    }

    /// Replace the three RIS single-hop vectors with zeros, the degenerate
    /// surface that contributes nothing to the received signal.
    pub fn zero_ris(&mut self) {
        for v in [&mut self.h_s_ris, &mut self.h_ris_r, &mut self.h_ris_t] {
            v.iter_mut().for_each(|h| *h = Complex64::new(0.0, 0.0));
        }
    }
}

/// Single-hop coefficient between two points: `a(d) * exp(j*2*pi*d/lambda)`.
///
/// The positive phase sign matches the focusing beam construction, which is
/// built to cancel it exactly at the target.
pub fn path_channel(a: Point3, b: Point3, wavelength: f64, law: AmplitudeLaw) -> Result<Complex64> {
    let d = a.distance(&b);
    if law == AmplitudeLaw::FreeSpace && d == 0.0 {
        return Err(Error::SingularDistance(format!(
            "coincident endpoints at ({}, {}, {})",
            a.x, a.y, a.z
        )));
    }
    let amp = law.amplitude(d, wavelength);
    let phase = 2.0 * std::f64::consts::PI * d / wavelength;
    Ok(Complex64::from_polar(amp, phase))
}

/// Compute all single-hop coefficients of the scene.
pub fn build_channel_set(s: &Scenario) -> Result<ChannelSet> {
    let law = s.amplitude_law;
    let lambda = s.wavelength;
    let cells = s.ris.cell_centers();
    let mut h_s_ris = Vec::with_capacity(cells.len());
    let mut h_ris_r = Vec::with_capacity(cells.len());
    let mut h_ris_t = Vec::with_capacity(cells.len());
    for c in &cells {
        h_s_ris.push(path_channel(s.source_pos, *c, lambda, law)?);
        h_ris_r.push(path_channel(*c, s.reader_pos, lambda, law)?);
        h_ris_t.push(path_channel(*c, s.tag_pos, lambda, law)?);
    }
    Ok(ChannelSet {
        h_sr: path_channel(s.source_pos, s.reader_pos, lambda, law)?,
        h_st: path_channel(s.source_pos, s.tag_pos, lambda, law)?,
        h_tr: path_channel(s.tag_pos, s.reader_pos, lambda, law)?,
        h_s_ris,
        h_ris_r,
        h_ris_t,
    })
}

/// Tag-modulated two-hop coefficient `tag_reflection * h_st * h_tr`.
pub fn cascade_tag(h_st: Complex64, h_tr: Complex64, tag_reflection: Complex64) -> Complex64 {
    tag_reflection * h_st * h_tr
}

/// RIS cascade `sum_m h_in[m] * u[m] * h_out[m]`.
///
/// The reflection coefficients form a diagonal matrix, stored as a vector.
/// Summation order is fixed (cell index ascending) so results do not depend
/// on the caller's threading.
pub fn ris_cascade(
    h_in: &[Complex64],
    weights: &[Complex64],
    h_out: &[Complex64],
) -> Result<Complex64> {
    if h_in.len() != weights.len() || h_in.len() != h_out.len() {
        return Err(Error::DimensionMismatch(format!(
            "ris_cascade expects equal lengths, got {}/{}/{}",
            h_in.len(),
            weights.len(),
            h_out.len()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..h_in.len() {
        acc += h_in[m] * weights[m] * h_out[m];
    }
    Ok(acc)
}

/// End-to-end coefficient received by the reader.
///
/// `weights` carries the RIS reflection coefficients; `None` means the
/// surface is absent and both RIS terms vanish. The four terms are the
/// direct path, the tag path, the RIS leakage path, and the RIS-assisted
/// tag path, with the latter two switched off when the tag is transparent.
pub fn total_g(
    cs: &ChannelSet,
    weights: Option<&[Complex64]>,
    tag: TagState,
    tag_reflection: Complex64,
) -> Result<Complex64> {
    let backscattering = tag == TagState::Backscattering;
    let mut g = cs.h_sr;
    if backscattering {
        g += cascade_tag(cs.h_st, cs.h_tr, tag_reflection);
    }
    if let Some(u) = weights {
        g += ris_cascade(&cs.h_s_ris, u, &cs.h_ris_r)?;
        if backscattering {
            g += tag_reflection * ris_cascade(&cs.h_s_ris, u, &cs.h_ris_t)? * cs.h_tr;
        }
    }
    Ok(g)
}
