use std::fmt::Debug;

use crate::error::{MemdError, Result};
use crate::fixed_point::FixedQ16_8;

/// Scalar types a signal can hold.
pub trait Sample: Copy + PartialOrd + PartialEq + Default + Debug + Send + Sync + 'static {
    fn is_finite(self) -> bool;
    fn to_f64(self) -> f64;
}

impl Sample for f64 {
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl Sample for FixedQ16_8 {
    fn is_finite(self) -> bool {
        true
    }

    fn to_f64(self) -> f64 {
        self.to_real()
    }
}

/// An N-channel, T-sample signal stored channel by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSignal<S = f64> {
    channels: Vec<Vec<S>>,
    sample_rate: f64,
}

impl<S: Sample> MultivariateSignal<S> {
    pub fn new(channels: Vec<Vec<S>>, sample_rate: f64) -> Result<Self> {
        if channels.is_empty() {
            return Err(MemdError::Config("signal needs at least one channel".into()));
        }
        let len = channels[0].len();
        for (c, ch) in channels.iter().enumerate() {
            if ch.len() != len {
                return Err(MemdError::DimensionMismatch {
                    expected: len,
                    got: ch.len(),
                });
            }
            if let Some(index) = ch.iter().position(|v| !v.is_finite()) {
                return Err(MemdError::NonFinite { channel: c, index });
            }
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(MemdError::Config(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        Ok(Self {
            channels,
            sample_rate,
        })
    }

    pub fn zeros(n_channels: usize, len: usize, sample_rate: f64) -> Self {
        Self {
            channels: vec![vec![S::default(); len]; n_channels],
            sample_rate,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn channel(&self, i: usize) -> &[S] {
        &self.channels[i]
    }

    pub fn channel_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<S>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<S>> {
        self.channels
    }

    /// The N-vector at time `t`.
    pub fn sample(&self, t: usize) -> Vec<S> {
        self.channels.iter().map(|c| c[t]).collect()
    }

    pub fn map<T: Sample>(&self, mut f: impl FnMut(S) -> T) -> MultivariateSignal<T> {
        MultivariateSignal {
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|&v| f(v)).collect())
                .collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn to_f64(&self) -> MultivariateSignal<f64> {
        self.map(Sample::to_f64)
    }

    /// Samples `[start, end)` of every channel.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            channels: self.channels.iter().map(|c| c[start..end].to_vec()).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.channels
            .iter()
            .all(|c| c.iter().all(|&v| v == S::default()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(MultivariateSignal::new(vec![vec![0.0; 3], vec![0.0; 2]], 1.0).is_err());
        assert!(matches!(
            MultivariateSignal::new(vec![vec![0.0, f64::NAN]], 1.0),
            Err(MemdError::NonFinite {
                channel: 0,
                index: 1
            })
        ));
        assert!(MultivariateSignal::new(vec![vec![0.0; 4]], 0.0).is_err());
    }

    #[test]
    fn accessors() {
        let s = MultivariateSignal::new(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]], 10.0)
            .unwrap();
        assert_eq!(s.n_channels(), 2);
        assert_eq!(s.len(), 3);
        assert_eq!(s.sample(1), vec![2.0, 5.0]);
        assert_eq!(s.slice(1, 3).channel(1), &[5.0, 6.0]);
        assert!(!s.is_zero());
    }
}
