//! Exhaustive (beam, phase-shift) evaluation and the feedback search
//! protocol between the RIS controller and the reader.
//!
//! [`evaluate_grid`] computes the true contrast for every pair and is the
//! reference the output tables are built from. [`feedback_search`] simulates the
//! over-the-air procedure instead: the controller announces one trial at a
//! time, the reader measures the contrast and answers with a quantized
//! level, and the controller keeps the best level it has heard. Trials run
//! in a fixed lexicographic order (beam-major, then phase) so runs are
//! reproducible; ties keep the first pair seen, which coincides with the
//! grid evaluator's smallest-index tie-break.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::codebook::{compose_weights, Codebook, PhaseGrid};
use crate::metrics::{ber_from_contrast, contrast_ref, contrast_ris};
use crate::propagation::{build_channel_set, ChannelSet, Scenario};
use crate::{Error, Result};

/// Uniform scalar quantizer for the reader's contrast feedback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    bits: u32,
    range_max: f64,
}

impl Quantizer {
    /// `bits` in 1..=32, levels uniform on `[0, range_max]`.
    pub fn new(bits: u32, range_max: f64) -> Result<Quantizer> {
        if bits == 0 || bits > 32 {
            return Err(Error::invalid("quantizer.bits", "must be in 1..=32"));
        }
        if !range_max.is_finite() || range_max <= 0.0 {
            return Err(Error::invalid(
                "quantizer.range_max",
                "must be finite and > 0",
            ));
        }
        Ok(Quantizer { bits, range_max })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> u64 {
        1u64 << self.bits
    }

    /// Quantize a nonnegative contrast to a level in `[0, 2^bits - 1]`.
    ///
    /// Values are clipped to the range first; exactly `range_max` lands on
    /// the top level rather than overflowing past it. Monotone.
    pub fn quantize(&self, contrast: f64) -> u64 {
        let clipped = contrast.clamp(0.0, self.range_max);
        let scaled = clipped / self.range_max * self.levels() as f64;
        (scaled.floor() as u64).min(self.levels() - 1)
    }

    /// Midpoint contrast of a level, the value reported in output matrices.
    pub fn level_midpoint(&self, level: u64) -> f64 {
        (level as f64 + 0.5) * self.range_max / self.levels() as f64
    }
}

/// Trial announcement from the controller. `beam_index` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialMsg {
    pub trial_id: u64,
    pub beam_index: usize,
    pub phase_index: usize,
}

/// Reader's answer to one trial, echoing its id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedbackMsg {
    pub trial_id: u64,
    pub level: u64,
}

/// One trial/feedback round of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exchange {
    pub trial: TrialMsg,
    pub feedback: FeedbackMsg,
}

/// Outcome of a full grid evaluation or a feedback search.
#[derive(Debug, Clone)]
pub struct SearchResult {
    /// `contrast_matrix[n][p]` for beam `n + 1` and phase index `p`.
    pub contrast_matrix: Vec<Vec<f64>>,
    /// `ber_matrix[n][p] = ber_from_contrast(contrast_matrix[n][p], sigma)`.
    pub ber_matrix: Vec<Vec<f64>>,
    /// 1-based index of the winning beam.
    pub best_beam: usize,
    /// 0-based index into the phase grid.
    pub best_phase: usize,
    /// Contrast without the RIS.
    pub ref_contrast: f64,
    /// BER without the RIS.
    pub ref_ber: f64,
}

impl SearchResult {
    pub fn beam_count(&self) -> usize {
        self.contrast_matrix.len()
    }

    pub fn phase_count(&self) -> usize {
        self.contrast_matrix.first().map_or(0, Vec::len)
    }

    pub fn best_contrast(&self) -> f64 {
        self.contrast_matrix[self.best_beam - 1][self.best_phase]
    }

    pub fn best_ber(&self) -> f64 {
        self.ber_matrix[self.best_beam - 1][self.best_phase]
    }
}

/// Result of [`feedback_search`]: what the controller ends up knowing, plus
/// the full message transcript.
#[derive(Debug, Clone)]
pub struct FeedbackOutcome {
    pub result: SearchResult,
    pub transcript: Vec<Exchange>,
}

/// First (row, column) attaining the maximum, scanning row-major, so ties
/// resolve to the smallest row index, then the smallest column index.
pub(crate) fn lexicographic_argmax(matrix: &[Vec<f64>]) -> (usize, usize) {
    let mut best = (0usize, 0usize);
    let mut best_value = f64::NEG_INFINITY;
    for (n, row) in matrix.iter().enumerate() {
        for (p, &value) in row.iter().enumerate() {
            if value > best_value {
                best_value = value;
                best = (n, p);
            }
        }
    }
    best
}

fn check_dims(cs: &ChannelSet, cb: &Codebook) -> Result<()> {
    if cb.beam_count() == 0 {
        return Err(Error::invalid("codebook", "must contain at least one beam"));
    }
    if cb.cells() != cs.cells() {
        return Err(Error::DimensionMismatch(format!(
            "codebook has {} cells per beam, channel set has {}",
            cb.cells(),
            cs.cells()
        )));
    }
    Ok(())
}

/// Evaluate the true contrast and BER for every (beam, phase) pair.
///
/// Rows may be computed on concurrent workers; each matrix cell is a pure
/// function of the inputs, so the output is bit-identical for any worker
/// count. The best pair maximizes the contrast with ties broken towards the
/// smallest beam index, then the smallest phase index.
pub fn evaluate_grid(s: &Scenario, cb: &Codebook, pg: &PhaseGrid) -> Result<SearchResult> {
    evaluate_grid_channels(
        &build_channel_set(s)?,
        s.tag_reflection,
        s.noise_sigma,
        cb,
        pg,
    )
}

/// [`evaluate_grid`] on an explicit channel set, which also admits
/// degenerate surfaces that no geometry produces (for example all-zero RIS
/// coefficients).
pub fn evaluate_grid_channels(
    cs: &ChannelSet,
    tag_reflection: Complex64,
    sigma: f64,
    cb: &Codebook,
    pg: &PhaseGrid,
) -> Result<SearchResult> {
    check_dims(cs, cb)?;
    let contrast_matrix: Vec<Vec<f64>> = cb
        .beams
        .par_iter()
        .map(|beam| {
            pg.values
                .iter()
                .map(|&delta| contrast_ris(cs, &compose_weights(beam, delta), tag_reflection))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    finish_result(cs, tag_reflection, sigma, contrast_matrix)
}

fn finish_result(
    cs: &ChannelSet,
    tag_reflection: Complex64,
    sigma: f64,
    contrast_matrix: Vec<Vec<f64>>,
) -> Result<SearchResult> {
    let ber_matrix = contrast_matrix
        .iter()
        .map(|row| {
            row.iter()
                .map(|&dg| ber_from_contrast(dg, sigma))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (n, p) = lexicographic_argmax(&contrast_matrix);
    let ref_contrast = contrast_ref(cs, tag_reflection);
    Ok(SearchResult {
        contrast_matrix,
        ber_matrix,
        best_beam: n + 1,
        best_phase: p,
        ref_contrast,
        ref_ber: ber_from_contrast(ref_contrast, sigma)?,
    })
}

/// Simulate the trial-by-trial feedback protocol.
///
/// The controller announces pairs in lexicographic order and stops after
/// `min(budget, N*P)` trials. The reader measures the true contrast and
/// reports `quantizer.quantize(contrast)`; the controller keeps the argmax
/// of the levels it hears, first seen winning ties. Reported matrices carry
/// the level midpoints (the controller's knowledge), not the true values;
/// pairs never tried stay at zero contrast. Strictly sequential by design:
/// it models a serial over-the-air exchange.
pub fn feedback_search(
    s: &Scenario,
    cb: &Codebook,
    pg: &PhaseGrid,
    quantizer: &Quantizer,
    budget: usize,
) -> Result<FeedbackOutcome> {
    feedback_search_channels(
        &build_channel_set(s)?,
        s.tag_reflection,
        s.noise_sigma,
        cb,
        pg,
        quantizer,
        budget,
    )
}

/// [`feedback_search`] on an explicit channel set.
pub fn feedback_search_channels(
    cs: &ChannelSet,
    tag_reflection: Complex64,
    sigma: f64,
    cb: &Codebook,
    pg: &PhaseGrid,
    quantizer: &Quantizer,
    budget: usize,
) -> Result<FeedbackOutcome> {
    check_dims(cs, cb)?;
    if budget == 0 {
        return Err(Error::invalid("budget", "must be >= 1"));
    }
    let beams = cb.beam_count();
    let phases = pg.len();
    let trials = budget.min(beams * phases);

    let mut contrast_matrix = vec![vec![0.0f64; phases]; beams];
    let mut transcript = Vec::with_capacity(trials);
    let mut best: Option<(u64, usize, usize)> = None;

    let mut trial_id = 0u64;
    #[allow(clippy::needless_range_loop)]
    'outer: for n in 0..beams {
        for p in 0..phases {
            if transcript.len() == trials {
                break 'outer;
            }
            trial_id += 1;
            let trial = TrialMsg {
                trial_id,
                beam_index: n + 1,
                phase_index: p,
            };
            // reader side: measure and quantize
            let u = compose_weights(&cb.beams[n], pg.values[p]);
            let measured = contrast_ris(cs, &u, tag_reflection)?;
            let feedback = FeedbackMsg {
                trial_id,
                level: quantizer.quantize(measured),
            };
            // controller side: remember the level midpoint, track the argmax
            contrast_matrix[n][p] = quantizer.level_midpoint(feedback.level);
            if best.is_none_or(|(level, _, _)| feedback.level > level) {
                best = Some((feedback.level, n, p));
            }
            transcript.push(Exchange { trial, feedback });
        }
    }

    let (_, n, p) = best.expect("at least one trial ran");
    let ref_contrast = contrast_ref(cs, tag_reflection);
    let ber_matrix = contrast_matrix
        .iter()
        .map(|row| {
            row.iter()
                .map(|&dg| ber_from_contrast(dg, sigma))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeedbackOutcome {
        result: SearchResult {
            contrast_matrix,
            ber_matrix,
            best_beam: n + 1,
            best_phase: p,
            ref_contrast,
            ref_ber: ber_from_contrast(ref_contrast, sigma)?,
        },
        transcript,
    })
}

/// Write a result as CSV: `beam_index,phase_index,contrast,ber` rows in
/// lexicographic order, then one `#`-prefixed summary line. With
/// `improvement`, each row gains the sign of `ref_ber - ber` (1 when the
/// pair beats the no-RIS reference, -1 when it is worse, 0 on a tie).
pub fn write_result_csv(
    res: &SearchResult,
    improvement: bool,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    use crate::fmt::sig12;
    if improvement {
        writeln!(out, "beam_index,phase_index,contrast,ber,improvement")?;
    } else {
        writeln!(out, "beam_index,phase_index,contrast,ber")?;
    }
    for (n, row) in res.contrast_matrix.iter().enumerate() {
        for (p, &dg) in row.iter().enumerate() {
            let ber = res.ber_matrix[n][p];
            if improvement {
                let sign = match res.ref_ber - ber {
                    d if d > 0.0 => 1,
                    d if d < 0.0 => -1,
                    _ => 0,
                };
                writeln!(out, "{},{},{},{},{}", n + 1, p, sig12(dg), sig12(ber), sign)?;
            } else {
                writeln!(out, "{},{},{},{}", n + 1, p, sig12(dg), sig12(ber))?;
            }
        }
    }
    writeln!(
        out,
        "# best_beam={} best_phase={} best_contrast={} best_ber={} ref_contrast={} ref_ber={}",
        res.best_beam,
        res.best_phase,
        sig12(res.best_contrast()),
        sig12(res.best_ber()),
        sig12(res.ref_contrast),
        sig12(res.ref_ber)
    )?;
    Ok(())
}

/// Write the protocol transcript, one line per message.
pub fn write_transcript(transcript: &[Exchange], out: &mut dyn Write) -> std::io::Result<()> {
    for ex in transcript {
        writeln!(
            out,
            "trial {} beam {} phase {}",
            ex.trial.trial_id, ex.trial.beam_index, ex.trial.phase_index
        )?;
        writeln!(
            out,
            "feedback {} level {}",
            ex.feedback.trial_id, ex.feedback.level
        )?;
    }
    Ok(())
}
