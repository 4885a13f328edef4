//! Validation metrics: correlation against ground truth, Welch spectra and
//! IMF condition checks.

use std::fmt;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{MemdError, Result};
use crate::extrema::{detect_extrema, Polarity, TiePolicy};
use crate::signal::{MultivariateSignal, Sample};
use crate::spline::{natural_spline_coeffs, Knot};

/// Sample Pearson correlation coefficient.
pub fn pearson_corr(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(MemdError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(MemdError::TooShort {
            needed: 2,
            got: a.len(),
        });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(MemdError::DegenerateInput("zero-variance sequence".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    /// Zero-based IMF index.
    pub imf: usize,
    pub label: String,
    /// One coefficient per channel; `None` where the IMF channel is flat.
    pub values: Vec<Option<f64>>,
}

/// IMF-versus-ground-truth correlations: one row per (IMF, reference) pair,
/// one column per channel.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rows: Vec<CorrelationRow>,
}

impl CorrelationReport {
    /// Correlates IMF `imf` channel by channel with the single reference
    /// waveform `truth`.
    pub fn add_row(
        &mut self,
        imf: usize,
        label: impl Into<String>,
        signal: &MultivariateSignal<f64>,
        truth: &[f64],
    ) -> Result<()> {
        let values = signal
            .channels()
            .iter()
            .map(|ch| match pearson_corr(ch, truth) {
                Ok(r) => Ok(Some(r)),
                Err(MemdError::DegenerateInput(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        self.rows.push(CorrelationRow {
            imf,
            label: label.into(),
            values,
        });
        Ok(())
    }

    pub fn get(&self, row: usize, channel: usize) -> Option<f64> {
        self.rows.get(row)?.values.get(channel).copied().flatten()
    }

    pub fn to_csv_string(&self) -> String {
        let n = self.rows.first().map_or(0, |r| r.values.len());
        let mut out = String::from("imf,reference");
        for c in 1..=n {
            out.push_str(&format!(",ch{c}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{},{}", row.imf + 1, row.label));
            for v in &row.values {
                match v {
                    Some(v) => out.push_str(&format!(",{v:.6}")),
                    None => out.push_str(",nan"),
                }
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for CorrelationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.rows.first().map_or(0, |r| r.values.len());
        write!(f, "{:<24}", "IMF & reference")?;
        for c in 1..=n {
            write!(f, "{:>9}", format!("ch{c}"))?;
        }
        writeln!(f)?;
        for row in &self.rows {
            write!(f, "{:<24}", format!("C{} & {}", row.imf + 1, row.label))?;
            for v in &row.values {
                match v {
                    Some(v) => write!(f, "{v:>9.3}")?,
                    None => write!(f, "{:>9}", "-")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchParams {
    pub segment: usize,
    pub overlap: usize,
    pub window: Window,
}

impl Default for WelchParams {
    fn default() -> Self {
        Self {
            segment: 256,
            overlap: 128,
            window: Window::Hann,
        }
    }
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub frequencies: Vec<f64>,
    pub density: Vec<f64>,
    pub params: WelchParams,
    pub segments: usize,
}

impl PsdEstimate {
    pub fn peak_frequency(&self) -> f64 {
        let (i, _) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
        self.frequencies[i]
    }

    /// Trapezoidal integral of the density over `[lo, hi]` Hz.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        self.frequencies
            .windows(2)
            .zip(self.density.windows(2))
            .filter(|(f, _)| f[0] >= lo && f[1] <= hi)
            .map(|(f, p)| 0.5 * (p[0] + p[1]) * (f[1] - f[0]))
            .sum()
    }

    pub fn total_power(&self) -> f64 {
        self.band_power(f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Welch's averaged, windowed periodogram with constant detrending.
pub fn psd_welch(x: &[f64], sample_rate: f64, params: &WelchParams) -> Result<PsdEstimate> {
    let n = params.segment;
    if n < 2 || params.overlap >= n {
        return Err(MemdError::Config(format!(
            "invalid Welch segment {n} / overlap {}",
            params.overlap
        )));
    }
    if x.len() < n {
        return Err(MemdError::TooShort {
            needed: n,
            got: x.len(),
        });
    }
    let window = params.window.coefficients(n);
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let step = n - params.overlap;
    let bins = n / 2 + 1;
    let mut density = vec![0.0; bins];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut segments = 0;
    for start in (0..=x.len() - n).step_by(step) {
        let seg = &x[start..start + n];
        let mean = seg.iter().sum::<f64>() / n as f64;
        for ((b, &v), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (d, b) in density.iter_mut().zip(&buf) {
            *d += b.norm_sqr();
        }
        segments += 1;
    }
    let scale = 1.0 / (sample_rate * win_power * segments as f64);
    for (k, d) in density.iter_mut().enumerate() {
        *d *= scale;
        let edge = k == 0 || (n % 2 == 0 && k == n / 2);
        if !edge {
            *d *= 2.0;
        }
    }
    let frequencies = (0..bins).map(|k| k as f64 * sample_rate / n as f64).collect();
    Ok(PsdEstimate {
        frequencies,
        density,
        params: *params,
        segments,
    })
}

/// Sign changes, ignoring samples that are exactly zero.
pub fn zero_crossings(x: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in x.iter().filter(|&&v| v != 0.0) {
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelCondition {
    pub extrema: usize,
    pub zero_crossings: usize,
    pub difference: usize,
    /// `max |(upper + lower) / 2| / max |x|`; `None` when either envelope is
    /// undefined.
    pub mean_envelope_deviation: Option<f64>,
}

impl ChannelCondition {
    /// Condition I: extrema and zero-crossing counts differ by at most one.
    pub fn satisfies_count_condition(&self) -> bool {
        self.difference <= 1
    }
}

fn strict_envelope(x: &[f64], polarity: Polarity) -> Option<Vec<f64>> {
    let records = detect_extrema(x, polarity, TiePolicy::StrictFirst).ok()?;
    if records.len() < 2 {
        return None;
    }
    let last = (x.len() - 1) as f64;
    let mut knots: Vec<Knot> = records[..2]
        .iter()
        .rev()
        .map(|r| Knot::new(-(r.index as f64), r.value))
        .collect();
    knots.extend(records.iter().map(|r| Knot::new(r.index as f64, r.value)));
    knots.extend(
        records[records.len() - 2..]
            .iter()
            .rev()
            .map(|r| Knot::new(2.0 * last - r.index as f64, r.value)),
    );
    let segs = natural_spline_coeffs(&knots).ok()?;
    let mut out = Vec::with_capacity(x.len());
    let mut j = 0;
    for t in 0..x.len() {
        let tf = t as f64;
        while j + 1 < segs.len() && segs[j].x1 <= tf {
            j += 1;
        }
        out.push(segs[j].eval(tf));
    }
    Some(out)
}

pub fn channel_condition(x: &[f64]) -> ChannelCondition {
    let count = |p| {
        detect_extrema(x, p, TiePolicy::StrictFirst)
            .map(|r| r.len())
            .unwrap_or(0)
    };
    let extrema = count(Polarity::Maxima) + count(Polarity::Minima);
    let zc = zero_crossings(x);
    let amplitude = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let deviation = match (
        strict_envelope(x, Polarity::Maxima),
        strict_envelope(x, Polarity::Minima),
    ) {
        (Some(up), Some(lo)) if amplitude > 0.0 => Some(
            up.iter()
                .zip(&lo)
                .fold(0.0f64, |m, (u, l)| m.max((0.5 * (u + l)).abs()))
                / amplitude,
        ),
        _ => None,
    };
    ChannelCondition {
        extrema,
        zero_crossings: zc,
        difference: extrema.abs_diff(zc),
        mean_envelope_deviation: deviation,
    }
}

/// Per-channel IMF condition report.
pub fn imf_condition_check<S: Sample>(imf: &MultivariateSignal<S>) -> Vec<ChannelCondition> {
    imf.channels()
        .iter()
        .map(|ch| {
            let x: Vec<f64> = ch.iter().map(|v| v.to_f64()).collect();
            channel_condition(&x)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sine(f: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|t| (2.0 * PI * f * t as f64 / fs).sin()).collect()
    }

    #[test]
    fn pearson_basics() {
        let s = sine(3.0, 100.0, 200);
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        assert!((pearson_corr(&s, &s).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_corr(&s, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(
            pearson_corr(&s, &vec![1.0; 200]),
            Err(MemdError::DegenerateInput(_))
        ));
        assert!(pearson_corr(&s, &s[..10]).is_err());
    }

    #[test]
    fn pearson_symmetric_and_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let r = pearson_corr(&a, &b).unwrap();
        assert!((r - pearson_corr(&b, &a).unwrap()).abs() < 1e-12);
        let a2: Vec<f64> = a.iter().map(|v| 3.5 * v - 2.0).collect();
        assert!((r - pearson_corr(&a2, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn welch_sine_peak_and_power() {
        let fs = 250.0;
        let x = sine(10.0, fs, 2500);
        let psd = psd_welch(&x, fs, &WelchParams::default()).unwrap();
        let bin = fs / 256.0;
        assert!((psd.peak_frequency() - 10.0).abs() <= bin);
        assert!((psd.total_power() - 0.5).abs() <= 0.05);
        assert!(psd.frequencies.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*psd.frequencies.last().unwrap(), fs / 2.0);
        assert!(psd.density.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn welch_white_noise_is_flat() {
        let params = WelchParams::default();
        let mut avg = vec![0.0; params.segment / 2 + 1];
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..4096).map(|_| rng.random::<f64>() - 0.5).collect();
            let psd = psd_welch(&x, 1.0, &params).unwrap();
            for (a, d) in avg.iter_mut().zip(&psd.density) {
                *a += d / 100.0;
            }
        }
        let interior = &avg[2..avg.len() - 1];
        let mean = interior.iter().sum::<f64>() / interior.len() as f64;
        for &p in interior {
            assert!((10.0 * (p / mean).log10()).abs() < 3.0);
        }
    }

    #[test]
    fn welch_too_short() {
        assert!(matches!(
            psd_welch(&[0.0; 100], 1.0, &WelchParams::default()),
            Err(MemdError::TooShort { .. })
        ));
    }

    #[test]
    fn condition_of_sine_and_constant() {
        let c = channel_condition(&sine(5.0, 1000.0, 1000));
        assert!(c.satisfies_count_condition(), "{c:?}");
        assert!(c.mean_envelope_deviation.unwrap() < 0.05);
        let flat = channel_condition(&[2.0; 50]);
        assert_eq!((flat.extrema, flat.zero_crossings, flat.difference), (0, 0, 0));
    }

    #[test]
    fn zero_crossing_counting() {
        assert_eq!(zero_crossings(&[1.0, -1.0, 1.0]), 2);
        assert_eq!(zero_crossings(&[1.0, 0.0, -1.0]), 1);
        assert_eq!(zero_crossings(&[1.0, 0.0, 1.0]), 0);
    }

    #[test]
    fn report_formats() {
        let x = MultivariateSignal::new(vec![sine(1.0, 50.0, 100), vec![0.0; 100]], 50.0).unwrap();
        let mut report = CorrelationReport::default();
        report.add_row(0, "f1", &x, &sine(1.0, 50.0, 100)).unwrap();
        assert!((report.get(0, 0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(report.get(0, 1), None);
        assert!(report.to_csv_string().starts_with("imf,reference,ch1,ch2\n1,f1,1.000000,nan"));
        assert!(report.to_string().contains("C1 & f1"));
    }
}
