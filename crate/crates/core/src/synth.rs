//! Synthetic test signals and the built-in presets.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{MemdError, Result};
use crate::signal::MultivariateSignal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub frequency: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Tone {
    pub fn new(frequency: f64, amplitude: f64) -> Self {
        Self {
            frequency,
            amplitude,
            phase: 0.0,
        }
    }

    pub fn sample(&self, t: usize, sample_rate: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency * t as f64 / sample_rate + self.phase).sin()
    }

    pub fn waveform(&self, len: usize, sample_rate: f64) -> Vec<f64> {
        (0..len).map(|t| self.sample(t, sample_rate)).collect()
    }
}

/// Sum of tones per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub channels: Vec<Vec<Tone>>,
    pub sample_rate: f64,
    pub len: usize,
}

pub fn synth_gen(spec: &SynthSpec) -> Result<MultivariateSignal<f64>> {
    let nyquist = spec.sample_rate / 2.0;
    for tone in spec.channels.iter().flatten() {
        if !(tone.frequency >= 0.0 && tone.frequency < nyquist) {
            return Err(MemdError::NyquistViolation {
                frequency: tone.frequency,
                nyquist,
            });
        }
    }
    let channels = spec
        .channels
        .iter()
        .map(|tones| {
            (0..spec.len)
                .map(|t| tones.iter().map(|tone| tone.sample(t, spec.sample_rate)).sum())
                .collect()
        })
        .collect();
    MultivariateSignal::new(channels, spec.sample_rate)
}

/// Reference waveform the IMF at `imf` is expected to recover.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub imf: usize,
    pub label: String,
    pub waveform: Vec<f64>,
    /// Whether each channel actually contains this component.
    pub present: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetSignal {
    pub signal: MultivariateSignal<f64>,
    pub truths: Vec<GroundTruth>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    PaperQuadtone,
    AlphaSurrogate,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::PaperQuadtone, Preset::AlphaSurrogate];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PaperQuadtone => "paper-quadtone",
            Preset::AlphaSurrogate => "alpha-surrogate",
        }
    }

    pub fn generate(self, seed: u64) -> Result<PresetSignal> {
        match self {
            Preset::PaperQuadtone => quadtone(),
            Preset::AlphaSurrogate => alpha_surrogate(seed),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = MemdError;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| MemdError::Config(format!("unknown preset {s:?}")))
    }
}

pub mod quadtone {
    //! Four-channel tone mixture with one tone common to every channel.
    //!
    //! The hardware sampled at 30 MHz. At that rate the lowest tone has
    //! 600-sample periods and its envelope windows need far more than the
    //! default lookahead cap, so the preset runs at 3.8 MHz. Tone ratios are
    //! unchanged.

    pub const AMPLITUDE: f64 = 150.0;
    pub const F1: f64 = 50e3;
    pub const F2: f64 = 150e3;
    pub const F3: f64 = 350e3;
    pub const F4: f64 = 800e3;
    pub const SAMPLE_RATE: f64 = 3.8e6;
    pub const LEN: usize = 4000;

    /// Tone frequencies per channel.
    pub const CHANNELS: [&[f64]; 4] = [&[F1, F3, F4], &[F1, F3], &[F2, F3, F4], &[F1, F2, F3]];

    /// `(IMF index, label, frequency)` in extraction order.
    pub const EXPECTED: [(usize, &str, f64); 4] = [
        (0, "f4 = 800 kHz", F4),
        (1, "f3 = 350 kHz", F3),
        (2, "f2 = 150 kHz", F2),
        (3, "f1 = 50 kHz", F1),
    ];
}

fn quadtone() -> Result<PresetSignal> {
    use quadtone::*;
    let spec = SynthSpec {
        channels: CHANNELS
            .iter()
            .map(|fs| fs.iter().map(|&f| Tone::new(f, AMPLITUDE)).collect())
            .collect(),
        sample_rate: SAMPLE_RATE,
        len: LEN,
    };
    let signal = synth_gen(&spec)?;
    let truths = EXPECTED
        .iter()
        .map(|&(imf, label, f)| GroundTruth {
            imf,
            label: label.into(),
            waveform: Tone::new(f, AMPLITUDE).waveform(LEN, SAMPLE_RATE),
            present: CHANNELS.iter().map(|fs| fs.contains(&f)).collect(),
        })
        .collect();
    Ok(PresetSignal { signal, truths })
}

pub mod alpha {
    //! Stand-in for a four-electrode EEG recording: a 10 Hz burst during the
    //! first half only, a 40 Hz component, slow drifts and white noise.

    pub const SAMPLE_RATE: f64 = 250.0;
    pub const LEN: usize = 2500;
    pub const ALPHA_HZ: f64 = 10.0;
    pub const ALPHA_AMPLITUDE: f64 = 20.0;
    pub const BETA_HZ: f64 = 40.0;
    pub const BETA_AMPLITUDE: f64 = 6.0;
    pub const SLOW_HZ: [f64; 2] = [2.5, 0.6];
    pub const SLOW_AMPLITUDE: [f64; 2] = [10.0, 15.0];
    pub const NOISE_SD: f64 = 1.5;
    /// The burst is active for `t < BURST_END`.
    pub const BURST_END: usize = LEN / 2;
    /// IMF expected to carry the burst.
    pub const ALPHA_IMF: usize = 1;
}

fn alpha_surrogate(seed: u64) -> Result<PresetSignal> {
    use alpha::*;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, NOISE_SD).expect("positive sd");
    let n = 4;
    let alpha_wave: Vec<f64> = (0..LEN)
        .map(|t| {
            if t < BURST_END {
                Tone::new(ALPHA_HZ, ALPHA_AMPLITUDE).sample(t, SAMPLE_RATE)
            } else {
                0.0
            }
        })
        .collect();
    let channels = (0..n)
        .map(|c| {
            let gain = 1.0 - 0.15 * c as f64;
            let phase = 0.4 * c as f64;
            (0..LEN)
                .map(|t| {
                    let tt = t as f64 / SAMPLE_RATE;
                    let alpha = if t < BURST_END {
                        gain * ALPHA_AMPLITUDE * (2.0 * PI * ALPHA_HZ * tt + phase).sin()
                    } else {
                        0.0
                    };
                    let beta = BETA_AMPLITUDE * (2.0 * PI * BETA_HZ * tt + 1.3 * c as f64).sin();
                    let slow: f64 = SLOW_HZ
                        .iter()
                        .zip(SLOW_AMPLITUDE)
                        .map(|(f, a)| a * (2.0 * PI * f * tt + 0.7 * c as f64).sin())
                        .sum();
                    alpha + beta + slow + noise.sample(&mut rng)
                })
                .collect()
        })
        .collect();
    let signal = MultivariateSignal::new(channels, SAMPLE_RATE)?;
    let truths = vec![GroundTruth {
        imf: ALPHA_IMF,
        label: "alpha 10 Hz".into(),
        waveform: alpha_wave,
        present: vec![true; n],
    }];
    Ok(PresetSignal { signal, truths })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadtone_channel_two_has_f1_and_f3() {
        let p = Preset::PaperQuadtone.generate(0).unwrap();
        let x = &p.signal;
        assert_eq!(x.n_channels(), 4);
        let fs = quadtone::SAMPLE_RATE;
        for t in 0..x.len() {
            let expected = Tone::new(quadtone::F1, 150.0).sample(t, fs)
                + Tone::new(quadtone::F3, 150.0).sample(t, fs);
            assert!((x.channel(1)[t] - expected).abs() < 1e-9);
        }
        assert_eq!(p.truths[1].present, vec![true; 4]);
        assert_eq!(p.truths[0].present, vec![true, false, true, false]);
    }

    #[test]
    fn empty_tone_list_gives_zero_channel() {
        let spec = SynthSpec {
            channels: vec![vec![], vec![Tone::new(1.0, 1.0)]],
            sample_rate: 10.0,
            len: 20,
        };
        let x = synth_gen(&spec).unwrap();
        assert!(x.channel(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quarter_rate_tone_has_period_four() {
        let spec = SynthSpec {
            channels: vec![vec![Tone {
                frequency: 25.0,
                amplitude: 1.0,
                phase: 0.3,
            }]],
            sample_rate: 100.0,
            len: 64,
        };
        let x = synth_gen(&spec).unwrap();
        let c = x.channel(0);
        for t in 0..60 {
            assert!((c[t] - c[t + 4]).abs() < 1e-12);
            assert!((c[t] + c[t + 2]).abs() < 1e-12);
        }
    }

    #[test]
    fn nyquist_is_enforced() {
        let spec = SynthSpec {
            channels: vec![vec![Tone::new(50.0, 1.0)]],
            sample_rate: 100.0,
            len: 8,
        };
        assert!(matches!(
            synth_gen(&spec),
            Err(MemdError::NyquistViolation { .. })
        ));
    }

    #[test]
    fn presets_parse_and_are_deterministic() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("nope".parse::<Preset>().is_err());
        let a = Preset::AlphaSurrogate.generate(7).unwrap();
        let b = Preset::AlphaSurrogate.generate(7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, Preset::AlphaSurrogate.generate(8).unwrap());
    }
}
