//! Link quality metrics for the energy-detector reader.
//!
//! The reader distinguishes the two tag states by received amplitude alone,
//! so everything reduces to the contrast `|  |g_on| - |g_off|  |` and the
//! closed-form error rate `BER = 0.5 * erfc(contrast / sigma)`. This module
//! also provides the closed-form common phase shifts that align the
//! RIS-controlled signal with the rest of the field (the hot-spot and
//! coherent-spot regimes) and a classifier that tells the two regimes apart
//! from the channel coefficients.

use num_complex::Complex64;

use crate::propagation::{ris_cascade, total_g, ChannelSet, TagState};
use crate::{Error, Result};

/// Reduce an angle to `[0, 2*pi)`.
pub fn wrap_2pi(theta: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let r = theta.rem_euclid(tau);
    if r == tau {
        0.0
    } else {
        r
    }
}

/// Smallest absolute difference between two angles, in `[0, pi]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_2pi(a - b);
    d.min(2.0 * std::f64::consts::PI - d)
}

/// Complementary error function (machine precision, well below the 1e-7
/// absolute accuracy the BER model needs on [0, 10]).
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Inverse of [`erfc`] on (0, 2), by bisection. Monotone, accurate to about
/// 1e-13 in the argument.
pub fn erfc_inv(y: f64) -> Result<f64> {
    if !(y > 0.0 && y < 2.0) {
        return Err(Error::invalid("erfc_inv", "argument must be in (0, 2)"));
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    // erfc is decreasing: erfc(lo) ~ 2, erfc(hi) ~ 0
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if erfc(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Received magnitudes, contrast, and BER for one RIS configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkReport {
    /// `|g|` with the tag backscattering.
    pub g_abs_on: f64,
    /// `|g|` with the tag transparent.
    pub g_abs_off: f64,
    /// `| g_abs_on - g_abs_off |`.
    pub contrast: f64,
    /// `0.5 * erfc(contrast / sigma)`.
    pub ber: f64,
}

/// Evaluate both tag states and derive contrast and BER.
///
/// `weights` follows the [`total_g`] convention: `None` removes the RIS.
pub fn link_report(
    cs: &ChannelSet,
    weights: Option<&[Complex64]>,
    tag_reflection: Complex64,
    sigma: f64,
) -> Result<LinkReport> {
    let g_abs_on = total_g(cs, weights, TagState::Backscattering, tag_reflection)?.norm();
    let g_abs_off = total_g(cs, weights, TagState::Transparent, tag_reflection)?.norm();
    let contrast = (g_abs_on - g_abs_off).abs();
    Ok(LinkReport {
        g_abs_on,
        g_abs_off,
        contrast,
        ber: ber_from_contrast(contrast, sigma)?,
    })
}

/// Contrast without the RIS: `| |h_sr + tag path| - |h_sr| |`.
pub fn contrast_ref(cs: &ChannelSet, tag_reflection: Complex64) -> f64 {
    let on = total_g(cs, None, TagState::Backscattering, tag_reflection)
        .expect("no weights involved")
        .norm();
    let off = total_g(cs, None, TagState::Transparent, tag_reflection)
        .expect("no weights involved")
        .norm();
    (on - off).abs()
}

/// Contrast with the RIS applying reflection coefficients `weights`.
pub fn contrast_ris(
    cs: &ChannelSet,
    weights: &[Complex64],
    tag_reflection: Complex64,
) -> Result<f64> {
    let on = total_g(cs, Some(weights), TagState::Backscattering, tag_reflection)?.norm();
    let off = total_g(cs, Some(weights), TagState::Transparent, tag_reflection)?.norm();
    Ok((on - off).abs())
}

/// Energy-detector bit error rate `0.5 * erfc(contrast / sigma)`.
pub fn ber_from_contrast(contrast: f64, sigma: f64) -> Result<f64> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::invalid("sigma", "must be finite and > 0"));
    }
    if !contrast.is_finite() || contrast < 0.0 {
        return Err(Error::invalid("contrast", "must be finite and >= 0"));
    }
    Ok(0.5 * erfc(contrast / sigma))
}

fn direct_sum(cs: &ChannelSet, tag_reflection: Complex64) -> Complex64 {
    cs.h_sr + tag_reflection * cs.h_st * cs.h_tr
}

fn ris_leak_term(cs: &ChannelSet, weights: &[Complex64]) -> Result<Complex64> {
    ris_cascade(&cs.h_s_ris, weights, &cs.h_ris_r)
}

fn ris_tag_term(
    cs: &ChannelSet,
    weights: &[Complex64],
    tag_reflection: Complex64,
) -> Result<Complex64> {
    Ok(tag_reflection * ris_cascade(&cs.h_s_ris, weights, &cs.h_ris_t)? * cs.h_tr)
}

/// Common phase shift that aligns the RIS-assisted tag path with the
/// non-controllable two-path sum, for beams that leak nothing to the reader:
/// `delta = arg(direct sum) - arg(RIS tag path under the bare beam)`.
///
/// Optimal for the constructive regime (`|direct sum| >= |h_sr|`); in the
/// destructive regime the continuous optimum may be anti-aligned, which is
/// why the search module sweeps the phase grid instead of trusting this
/// closed form.
pub fn hotspot_delta(
    cs: &ChannelSet,
    beam: &[Complex64],
    tag_reflection: Complex64,
) -> Result<f64> {
    let tag_term = ris_tag_term(cs, beam, tag_reflection)?;
    if tag_term.norm() == 0.0 {
        return Err(Error::UndefinedArgument(
            "RIS tag-path term is zero".to_string(),
        ));
    }
    Ok(wrap_2pi(
        direct_sum(cs, tag_reflection).arg() - tag_term.arg(),
    ))
}

/// Common phase shift that aligns the whole RIS-controlled sum (leakage plus
/// assisted tag path) with the non-controllable two-path sum.
pub fn coherent_delta(
    cs: &ChannelSet,
    beam: &[Complex64],
    tag_reflection: Complex64,
) -> Result<f64> {
    let controlled = ris_leak_term(cs, beam)? + ris_tag_term(cs, beam, tag_reflection)?;
    if controlled.norm() == 0.0 {
        return Err(Error::UndefinedArgument(
            "RIS-controlled sum is zero".to_string(),
        ));
    }
    Ok(wrap_2pi(
        direct_sum(cs, tag_reflection).arg() - controlled.arg(),
    ))
}

/// True when the RIS-controlled sum arrives in phase with the rest of the
/// field, within `tol` radians (both evaluated under the full weights `u`).
pub fn check_coherence(
    cs: &ChannelSet,
    weights: &[Complex64],
    tag_reflection: Complex64,
    tol: f64,
) -> Result<bool> {
    let fixed = direct_sum(cs, tag_reflection);
    let controlled = ris_leak_term(cs, weights)? + ris_tag_term(cs, weights, tag_reflection)?;
    if fixed.norm() == 0.0 || controlled.norm() == 0.0 {
        return Err(Error::UndefinedArgument(
            "coherence condition needs both sums nonzero".to_string(),
        ));
    }
    Ok(angle_distance(fixed.arg(), controlled.arg()) <= tol)
}

/// Which regime a beam operates in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamKind {
    /// Boosts the tag while leaking almost nothing to the reader.
    HotSpot,
    /// Substantial controlled signal on both tag and reader paths.
    CoherentSpot,
    Other,
}

impl BeamKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BeamKind::HotSpot => "hot_spot",
            BeamKind::CoherentSpot => "coherent_spot",
            BeamKind::Other => "other",
        }
    }
}

/// Classification of a beam with its leakage-to-tag-path magnitude ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamClass {
    pub kind: BeamKind,
    /// `|RIS leakage| / |RIS tag path|` under the bare beam.
    pub leakage_ratio: f64,
}

/// Classify a beam from the magnitudes of its two controllable terms.
///
/// Hot spot when the leakage ratio stays below `eps_hot` (checked first);
/// coherent spot when both terms exceed `eps_dual` times the larger one.
/// Expects a nonzero RIS tag path; a zero tag path yields an infinite ratio
/// and falls through to `Other`.
pub fn classify_beam(
    cs: &ChannelSet,
    beam: &[Complex64],
    eps_hot: f64,
    eps_dual: f64,
) -> Result<BeamClass> {
    let leak = ris_leak_term(cs, beam)?.norm();
    let tag = ris_tag_term(cs, beam, Complex64::new(1.0, 0.0))?.norm();
    let leakage_ratio = leak / tag;
    let kind = if leakage_ratio <= eps_hot {
        BeamKind::HotSpot
    } else {
        let max = leak.max(tag);
        if leak >= eps_dual * max && tag >= eps_dual * max {
            BeamKind::CoherentSpot
        } else {
            BeamKind::Other
        }
    };
    Ok(BeamClass {
        kind,
        leakage_ratio,
    })
}
