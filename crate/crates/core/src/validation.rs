//! Pass/fail checks over a finished decomposition.

use std::fmt;

use serde::Serialize;

use crate::analysis::{
    imf_condition_check, psd_welch, ChannelCondition, CorrelationReport, PsdEstimate, WelchParams,
};
use crate::decomposer::ImfStack;
use crate::error::Result;
use crate::synth::{alpha, GroundTruth};

/// Correlation a present component must reach.
pub const HIGH_CORRELATION: f64 = 0.90;
/// Largest |correlation| tolerated against a component the channel lacks.
pub const LOW_CORRELATION: f64 = 0.35;
pub const ALPHA_BAND: (f64, f64) = (8.0, 15.0);
/// Minimum active/inactive band power ratio for the burst IMF.
pub const MIN_BURST_RATIO: f64 = 3.0;

pub fn correlation_report(stack: &ImfStack<f64>, truths: &[GroundTruth]) -> Result<CorrelationReport> {
    let mut report = CorrelationReport::default();
    for truth in truths {
        let imf = &stack.imfs[truth.imf.min(stack.n_imfs() - 1)];
        report.add_row(truth.imf, truth.label.clone(), imf, &truth.waveform)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub imf: usize,
    pub channel: usize,
    pub value: Option<f64>,
    pub present: bool,
}

impl fmt::Display for CellFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let value = self.value.map_or("undefined".to_string(), |v| format!("{v:.3}"));
        let need = if self.present {
            format!(">= {HIGH_CORRELATION}")
        } else {
            format!("|c| <= {LOW_CORRELATION}")
        };
        write!(f, "IMF{} ch{}: {value}, need {need}", self.imf + 1, self.channel + 1)
    }
}

/// Cells outside the high/low bands. `report` rows must line up with `truths`.
pub fn correlation_failures(report: &CorrelationReport, truths: &[GroundTruth]) -> Vec<CellFailure> {
    let mut out = Vec::new();
    for (row, truth) in report.rows.iter().zip(truths) {
        for (channel, (&value, &present)) in row.values.iter().zip(&truth.present).enumerate() {
            let ok = match (value, present) {
                (Some(v), true) => v >= HIGH_CORRELATION,
                (Some(v), false) => v.abs() <= LOW_CORRELATION,
                (None, present) => !present,
            };
            if !ok {
                out.push(CellFailure {
                    imf: row.imf,
                    channel,
                    value,
                    present,
                });
            }
        }
    }
    out
}

/// Condition reports for the IMFs that were actually extracted.
pub fn condition_report(stack: &ImfStack<f64>) -> Vec<Vec<ChannelCondition>> {
    stack.imfs[..stack.extracted]
        .iter()
        .map(imf_condition_check)
        .collect()
}

pub fn format_conditions(conditions: &[Vec<ChannelCondition>]) -> String {
    let mut out = String::from("imf,channel,extrema,zero_crossings,difference,mean_envelope_deviation,ok\n");
    for (j, channels) in conditions.iter().enumerate() {
        for (c, cond) in channels.iter().enumerate() {
            let dev = cond
                .mean_envelope_deviation
                .map_or("nan".to_string(), |d| format!("{d:.4}"));
            out.push_str(&format!(
                "{},{},{},{},{},{dev},{}\n",
                j + 1,
                c + 1,
                cond.extrema,
                cond.zero_crossings,
                cond.difference,
                cond.satisfies_count_condition()
            ));
        }
    }
    out
}

fn mean_psd(channels: &[Vec<f64>], sample_rate: f64, params: &WelchParams) -> Result<PsdEstimate> {
    let mut acc: Option<PsdEstimate> = None;
    for ch in channels {
        let p = psd_welch(ch, sample_rate, params)?;
        match &mut acc {
            None => acc = Some(p),
            Some(a) => a.density.iter_mut().zip(&p.density).for_each(|(d, v)| *d += v),
        }
    }
    let mut acc = acc.expect("at least one channel");
    let n = channels.len() as f64;
    acc.density.iter_mut().for_each(|d| *d /= n);
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImfSpectrum {
    pub imf: usize,
    /// Peak of the channel-averaged Welch PSD.
    pub peak_hz: f64,
    /// Band power in the first `split` samples over that of the rest.
    pub burst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSummary {
    pub spectra: Vec<ImfSpectrum>,
    pub in_band: Vec<usize>,
}

impl AlphaSummary {
    pub fn passes(&self) -> bool {
        self.in_band.len() == 1 && self.spectra[self.in_band[0]].burst_ratio >= MIN_BURST_RATIO
    }
}

impl fmt::Display for AlphaSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.spectra {
            let mark = if self.in_band.contains(&s.imf) { "  <- alpha band" } else { "" };
            writeln!(
                f,
                "IMF{}: PSD peak {:.2} Hz, active/inactive band power {:.1}{mark}",
                s.imf + 1,
                s.peak_hz,
                s.burst_ratio
            )?;
        }
        Ok(())
    }
}

/// Peak frequency of every extracted IMF, and the burst contrast in the
/// alpha band between the halves split at `split`.
pub fn alpha_summary(stack: &ImfStack<f64>, split: usize, params: &WelchParams) -> Result<AlphaSummary> {
    let (lo, hi) = ALPHA_BAND;
    let mut spectra = Vec::new();
    for (j, imf) in stack.imfs[..stack.extracted].iter().enumerate() {
        let fs = imf.sample_rate();
        let full = mean_psd(imf.channels(), fs, params)?;
        let halves = |r: std::ops::Range<usize>| -> Vec<Vec<f64>> {
            imf.channels().iter().map(|c| c[r.clone()].to_vec()).collect()
        };
        let active = mean_psd(&halves(0..split), fs, params)?.band_power(lo, hi);
        let inactive = mean_psd(&halves(split..imf.len()), fs, params)?.band_power(lo, hi);
        spectra.push(ImfSpectrum {
            imf: j,
            peak_hz: full.peak_frequency(),
            burst_ratio: if inactive > 0.0 { active / inactive } else { f64::INFINITY },
        });
    }
    let in_band = spectra
        .iter()
        .filter(|s| (lo..=hi).contains(&s.peak_hz))
        .map(|s| s.imf)
        .collect();
    Ok(AlphaSummary { spectra, in_band })
}

/// [`alpha_summary`] with the preset's burst split.
pub fn alpha_preset_summary(stack: &ImfStack<f64>) -> Result<AlphaSummary> {
    alpha_summary(stack, alpha::BURST_END, &WelchParams::default())
}
