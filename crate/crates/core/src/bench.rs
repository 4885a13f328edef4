//! Throughput measurement for batch decomposition.

use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::arith::{ArithPath, FixedPath, PathKind, RealPath};
use crate::decomposer::decompose_profiled;
use crate::directions::DirectionSet;
use crate::error::{MemdError, Result};
use crate::sifting::SiftConfig;
use crate::signal::MultivariateSignal;

pub const MIN_REPETITIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchSettings {
    pub repetitions: usize,
    pub warmup: usize,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            repetitions: MIN_REPETITIONS,
            warmup: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub path: PathKind,
    pub n_channels: usize,
    pub len: usize,
    pub repetitions: usize,
    pub median_seconds: f64,
    pub min_seconds: f64,
    /// `len / median_seconds`.
    pub samples_per_second_per_channel: f64,
    /// Median wall time of each IMF generator.
    pub stage_seconds: Vec<f64>,
}

impl BenchReport {
    pub fn stage_samples_per_second(&self) -> Vec<f64> {
        self.stage_seconds
            .iter()
            .map(|s| self.len as f64 / s)
            .collect()
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "path {}: {} channels x {} samples, {} repetitions",
            self.path.as_str(),
            self.n_channels,
            self.len,
            self.repetitions
        )?;
        writeln!(
            f,
            "  median {:.3} ms, min {:.3} ms, {:.0} samples/s/channel",
            self.median_seconds * 1e3,
            self.min_seconds * 1e3,
            self.samples_per_second_per_channel
        )?;
        for (j, (s, rate)) in self
            .stage_seconds
            .iter()
            .zip(self.stage_samples_per_second())
            .enumerate()
        {
            writeln!(
                f,
                "  IMF stage {}: {:.3} ms, {rate:.0} samples/s/channel",
                j + 1,
                s * 1e3
            )?;
        }
        Ok(())
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn run_once<P: ArithPath>(
    path: &P,
    x: &MultivariateSignal<P::Scalar>,
    dirs: &DirectionSet,
    n_imfs: usize,
    cfg: &SiftConfig,
) -> Result<(Duration, Vec<Duration>)> {
    let start = Instant::now();
    let (_, stages) = decompose_profiled(path, x, dirs, n_imfs, cfg)?;
    Ok((start.elapsed(), stages))
}

/// Times `settings.repetitions` batch decompositions after
/// `settings.warmup` untimed ones.
pub fn bench_decompose(
    kind: PathKind,
    x: &MultivariateSignal<f64>,
    dirs: &DirectionSet,
    n_imfs: usize,
    cfg: &SiftConfig,
    settings: BenchSettings,
) -> Result<BenchReport> {
    if settings.repetitions < MIN_REPETITIONS {
        return Err(MemdError::Config(format!(
            "need at least {MIN_REPETITIONS} repetitions"
        )));
    }
    let fixed_input = FixedPath::new().quantize_signal(x);
    let mut totals = Vec::with_capacity(settings.repetitions);
    let mut stages: Vec<Vec<f64>> = vec![Vec::new(); n_imfs];
    for rep in 0..settings.warmup + settings.repetitions {
        let (total, per_stage) = match kind {
            PathKind::Real => run_once(&RealPath, x, dirs, n_imfs, cfg)?,
            PathKind::Fixed => run_once(&FixedPath::new(), &fixed_input, dirs, n_imfs, cfg)?,
        };
        if rep >= settings.warmup {
            totals.push(total.as_secs_f64());
            for (acc, d) in stages.iter_mut().zip(per_stage) {
                acc.push(d.as_secs_f64());
            }
        }
    }
    let median_seconds = median(totals.clone());
    Ok(BenchReport {
        path: kind,
        n_channels: x.n_channels(),
        len: x.len(),
        repetitions: settings.repetitions,
        median_seconds,
        min_seconds: totals.iter().copied().fold(f64::INFINITY, f64::min),
        samples_per_second_per_channel: x.len() as f64 / median_seconds,
        stage_seconds: stages.into_iter().map(median).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn too_few_repetitions() {
        let x = MultivariateSignal::<f64>::zeros(2, 32, 1.0);
        let dirs = DirectionSet::hammersley(2, 8).unwrap();
        let settings = BenchSettings {
            repetitions: 3,
            warmup: 0,
        };
        assert!(bench_decompose(PathKind::Real, &x, &dirs, 1, &SiftConfig::default(), settings)
            .is_err());
    }

    #[test]
    fn report_has_one_timing_per_stage() {
        let x = MultivariateSignal::new(
            vec![
                (0..200).map(|t| (t as f64 * 0.7).sin()).collect(),
                (0..200).map(|t| (t as f64 * 0.3).cos()).collect(),
            ],
            1.0,
        )
        .unwrap();
        let dirs = DirectionSet::hammersley(2, 8).unwrap();
        let r = bench_decompose(
            PathKind::Fixed,
            &x,
            &dirs,
            2,
            &SiftConfig::default(),
            BenchSettings::default(),
        )
        .unwrap();
        assert_eq!(r.stage_seconds.len(), 2);
        assert!(r.samples_per_second_per_channel > 0.0);
        assert!(r.to_string().contains("IMF stage 2"));
    }
}
