use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::arith::PathKind;
use crate::decomposer::{StreamConfig, DEFAULT_K_MAX};
use crate::directions::{DirectionSet, DEFAULT_DIRECTIONS};
use crate::error::{MemdError, Result};
use crate::extrema::TiePolicy;
use crate::sifting::{BoundaryPolicy, EnvelopeMode, MeanMode, SiftConfig, SplineWindow};
use crate::synth::Preset;

/// Everything needed to reproduce a run. Echoed into every output artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub n_channels: usize,
    pub n_directions: usize,
    pub n_siftings: usize,
    pub n_imfs: usize,
    pub path: PathKind,
    pub envelope: EnvelopeMode,
    pub window: SplineWindow,
    pub mean: MeanMode,
    pub tie: TiePolicy,
    pub boundary: BoundaryPolicy,
    pub k_max: usize,
    pub sample_rate: f64,
    pub seed: u64,
    /// Where the signal came from; at most one is set.
    pub preset: Option<Preset>,
    pub input: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sift = SiftConfig::default();
        Self {
            n_channels: 4,
            n_directions: DEFAULT_DIRECTIONS,
            n_siftings: sift.n_siftings,
            n_imfs: 4,
            path: PathKind::Real,
            envelope: sift.envelope,
            window: sift.window,
            mean: sift.mean,
            tie: sift.tie,
            boundary: sift.boundary,
            k_max: DEFAULT_K_MAX,
            sample_rate: 1.0,
            seed: 0,
            preset: None,
            input: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("channels", self.n_channels),
            ("directions", self.n_directions),
            ("siftings", self.n_siftings),
            ("imfs", self.n_imfs),
            ("k_max", self.k_max),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(MemdError::Config(format!("{name} must be positive")));
        }
        if self.n_channels < 2 {
            return Err(MemdError::Config("need at least two channels".into()));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(MemdError::Config(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if self.preset.is_some() && self.input.is_some() {
            return Err(MemdError::Config("give either a preset or an input file".into()));
        }
        self.sift_config().validate()
    }

    pub fn sift_config(&self) -> SiftConfig {
        SiftConfig {
            n_directions: self.n_directions,
            n_siftings: self.n_siftings,
            boundary: self.boundary,
            tie: self.tie,
            envelope: self.envelope,
            window: self.window,
            mean: self.mean,
        }
    }

    pub fn stream_config(&self) -> StreamConfig {
        StreamConfig {
            n_imfs: self.n_imfs,
            k_max: self.k_max,
        }
    }

    pub fn directions(&self) -> Result<DirectionSet> {
        DirectionSet::hammersley(self.n_channels, self.n_directions)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| MemdError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
