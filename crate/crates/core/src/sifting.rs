//! One sifting iteration and the fixed-count IMF generator.
//!
//! A sift projects the signal on every direction, finds the maxima and minima
//! of each projection, reads the channel values at those instants, interpolates
//! one envelope per (direction, polarity, channel) and subtracts the average of
//! the envelopes from the signal.

use serde::{Deserialize, Serialize};

use crate::arith::{ArithPath, IndexedKnot};
use crate::directions::DirectionSet;
use crate::error::{MemdError, Result};
use crate::extrema::{dedup_adjacent, detect_extrema, ExtremaRecord, Polarity, TiePolicy};
use crate::fixed_point::CsdConstant;
use crate::signal::{MultivariateSignal, Sample};
use crate::spline::MAX_WINDOW_KNOTS;

/// How envelopes are extended past the first and last extrema.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPolicy {
    /// Reflect the first two extrema about sample 0 and the last two about
    /// sample `T - 1`.
    #[default]
    Mirror,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeMode {
    /// Natural cubic spline over a sliding window of knots.
    #[default]
    Cubic,
    /// One natural cubic spline through every knot.
    CubicGlobal,
    /// Piecewise-linear (sawtooth) envelope.
    Linear,
}

/// Knots around interval `[k_j, k_j+1)` that enter its local spline:
/// `k_(j - before) ..= k_(j + 1 + after)`, clipped to the available knots.
///
/// `before = 0, after = 1` is the three-knot window that emits the leading
/// interval. Every extra knot after the interval adds one extremum of
/// lookahead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplineWindow {
    pub before: usize,
    pub after: usize,
}

impl SplineWindow {
    pub const THREE_KNOT: Self = Self {
        before: 0,
        after: 1,
    };

    /// Absolute knot range `[lo, hi]` for interval `j` of `n` knots.
    pub fn range(self, j: usize, n: usize) -> (usize, usize) {
        (j.saturating_sub(self.before), (j + 1 + self.after).min(n - 1))
    }

    pub fn len(self) -> usize {
        self.before + self.after + 2
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

impl Default for SplineWindow {
    fn default() -> Self {
        Self {
            before: 2,
            after: 2,
        }
    }
}

impl EnvelopeMode {
    /// Knots that must exist past the interval holding a sample before its
    /// envelope value is final; `None` when the whole record is needed.
    pub fn lookahead_knots(self, window: SplineWindow) -> Option<usize> {
        match self {
            EnvelopeMode::Cubic => Some(window.after),
            EnvelopeMode::Linear => Some(0),
            EnvelopeMode::CubicGlobal => None,
        }
    }
}

/// Envelope segments of local interval `j` for every channel (windowed
/// modes only). `xs` are the window's knot abscissae and
/// `ys[i * xs.len() + a]` is channel `i`'s ordinate at knot `a`.
pub fn window_segments<P: ArithPath>(
    path: &P,
    mode: EnvelopeMode,
    xs: &[i64],
    ys: &[P::Scalar],
    j: usize,
    out: &mut Vec<P::Segment>,
) -> Result<()> {
    match mode {
        EnvelopeMode::Linear => {
            out.clear();
            out.extend(ys.chunks(xs.len()).map(|c| {
                let knot = |a: usize| IndexedKnot {
                    index: xs[a],
                    value: c[a],
                };
                path.linear_segment(knot(j), knot(j + 1))
            }));
            Ok(())
        }
        EnvelopeMode::Cubic => path.window_segments(xs, ys, j, out),
        EnvelopeMode::CubicGlobal => Err(MemdError::Config(
            "the global spline has no local window".into(),
        )),
    }
}

/// Which envelopes enter the local mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanMode {
    /// Maxima and minima envelopes of every direction, averaged over 2K.
    #[default]
    #[serde(alias = "2k")]
    TwoK,
    /// Maxima envelopes only, averaged over K.
    K,
}

impl MeanMode {
    pub fn polarities(self) -> &'static [Polarity] {
        match self {
            MeanMode::TwoK => &Polarity::BOTH,
            MeanMode::K => &Polarity::BOTH[..1],
        }
    }

    pub fn envelope_count(self, n_directions: usize) -> usize {
        n_directions * self.polarities().len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiftConfig {
    pub n_directions: usize,
    pub n_siftings: usize,
    pub boundary: BoundaryPolicy,
    pub tie: TiePolicy,
    pub envelope: EnvelopeMode,
    #[serde(default)]
    pub window: SplineWindow,
    pub mean: MeanMode,
}

impl Default for SiftConfig {
    fn default() -> Self {
        Self {
            n_directions: 8,
            n_siftings: 4,
            boundary: BoundaryPolicy::Mirror,
            tie: TiePolicy::PaperFaithful,
            envelope: EnvelopeMode::Cubic,
            window: SplineWindow::default(),
            mean: MeanMode::TwoK,
        }
    }
}

impl SiftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_directions < 1 {
            return Err(MemdError::Config("need at least one direction".into()));
        }
        if self.n_siftings < 1 {
            return Err(MemdError::Config("need at least one sifting iteration".into()));
        }
        if self.window.len() > MAX_WINDOW_KNOTS {
            return Err(MemdError::Config(format!(
                "the spline window spans more than {MAX_WINDOW_KNOTS} knots"
            )));
        }
        if self.window.after < 1 {
            return Err(MemdError::Config(
                "the spline window needs at least one knot after the interval".into(),
            ));
        }
        Ok(())
    }

    /// `1 / (number of averaged envelopes)` as a signed-digit constant.
    pub fn mean_weight(&self) -> CsdConstant {
        CsdConstant::new(1.0 / self.mean.envelope_count(self.n_directions) as f64)
    }
}

/// Projection of every sample on one direction.
pub fn project_direction<P: ArithPath>(
    path: &P,
    x: &MultivariateSignal<P::Scalar>,
    real: &[f64],
    csd: &[CsdConstant],
    out: &mut Vec<P::Scalar>,
) {
    let n = x.n_channels();
    let mut sample = vec![P::Scalar::default(); n];
    out.clear();
    out.extend((0..x.len()).map(|t| {
        for (i, s) in sample.iter_mut().enumerate() {
            *s = x.channel(i)[t];
        }
        path.project_sample(real, csd, &sample)
    }));
}

/// `K` projected sequences, one per direction.
pub fn project<P: ArithPath>(
    path: &P,
    x: &MultivariateSignal<P::Scalar>,
    dirs: &DirectionSet,
) -> Result<Vec<Vec<P::Scalar>>> {
    check_dims(x, dirs)?;
    Ok((0..dirs.n_directions())
        .map(|k| {
            let mut y = Vec::with_capacity(x.len());
            project_direction(path, x, dirs.vector(k), dirs.quantized(k), &mut y);
            y
        })
        .collect())
}

fn check_dims<S: Sample>(x: &MultivariateSignal<S>, dirs: &DirectionSet) -> Result<()> {
    if dirs.n_channels() != x.n_channels() {
        return Err(MemdError::DimensionMismatch {
            expected: dirs.n_channels(),
            got: x.n_channels(),
        });
    }
    Ok(())
}

/// Extended knot abscissae for one projection and polarity, each paired with
/// the sample index whose channel value it carries.
pub fn knot_positions<T>(records: &[ExtremaRecord<T>], len: usize) -> Result<Vec<(i64, usize)>> {
    if records.len() < 2 {
        return Err(MemdError::TooFewExtrema(records.len()));
    }
    let last = len as i64 - 1;
    let first_two = &records[..2];
    let last_two = &records[records.len() - 2..];
    let mut out = Vec::with_capacity(records.len() + 4);
    out.extend(first_two.iter().rev().map(|r| (-(r.index as i64), r.index)));
    out.extend(records.iter().map(|r| (r.index as i64, r.index)));
    out.extend(last_two.iter().rev().map(|r| (2 * last - r.index as i64, r.index)));
    Ok(out)
}

/// Envelope knots on one channel: abscissae from the projection's extrema,
/// ordinates from the channel, extended at both ends.
pub fn envelope_knots<S: Sample>(
    channel: &[S],
    records: &[ExtremaRecord<S>],
    boundary: BoundaryPolicy,
) -> Result<Vec<IndexedKnot<S>>> {
    let BoundaryPolicy::Mirror = boundary;
    Ok(knot_positions(records, channel.len())?
        .into_iter()
        .map(|(index, src)| IndexedKnot {
            index,
            value: channel[src],
        })
        .collect())
}

fn add_segment<P: ArithPath>(path: &P, seg: &P::Segment, from: i64, to: i64, acc: &mut [P::Acc]) {
    for t in from.max(0)..to.min(acc.len() as i64) {
        let v = path.eval(seg, t);
        acc[t as usize] = path.accumulate(acc[t as usize], v);
    }
}

/// Adds the envelopes of every channel at every sample of `acc`. Knot
/// abscissae come from `positions`, ordinates from the channel sample each
/// position points at.
fn accumulate_envelopes<P: ArithPath>(
    path: &P,
    cfg: &SiftConfig,
    x: &MultivariateSignal<P::Scalar>,
    positions: &[(i64, usize)],
    acc: &mut [Vec<P::Acc>],
    scratch: &mut EnvelopeScratch<P>,
) -> Result<()> {
    let len = x.len() as i64;
    if cfg.envelope == EnvelopeMode::CubicGlobal {
        for (i, acc_i) in acc.iter_mut().enumerate() {
            let channel = x.channel(i);
            let knots: Vec<_> = positions
                .iter()
                .map(|&(index, src)| IndexedKnot {
                    index,
                    value: channel[src],
                })
                .collect();
            let segs = path.global_segments(&knots)?;
            for (j, seg) in segs.iter().enumerate() {
                add_segment(path, seg, knots[j].index, knots[j + 1].index, acc_i);
            }
        }
        return Ok(());
    }
    let EnvelopeScratch { xs, ys, segs } = scratch;
    for j in 0..positions.len() - 1 {
        let (from, to) = (positions[j].0, positions[j + 1].0);
        if to <= 0 || from >= len {
            continue;
        }
        let (lo, hi) = cfg.window.range(j, positions.len());
        let window = &positions[lo..=hi];
        xs.clear();
        xs.extend(window.iter().map(|p| p.0));
        ys.clear();
        for channel in x.channels() {
            ys.extend(window.iter().map(|p| channel[p.1]));
        }
        window_segments(path, cfg.envelope, xs, ys, j - lo, segs)?;
        for (seg, acc_i) in segs.iter().zip(acc.iter_mut()) {
            add_segment(path, seg, from, to, acc_i);
        }
    }
    Ok(())
}

/// Reusable buffers for [`accumulate_envelopes`].
struct EnvelopeScratch<P: ArithPath> {
    xs: Vec<i64>,
    ys: Vec<P::Scalar>,
    segs: Vec<P::Segment>,
}

/// Deduplicated extrema of one projection.
pub fn projection_extrema<S: Sample>(
    projection: &[S],
    polarity: Polarity,
    tie: TiePolicy,
) -> Result<Vec<ExtremaRecord<S>>> {
    let mut records = detect_extrema(projection, polarity, tie)?;
    dedup_adjacent(&mut records);
    Ok(records)
}

/// Average of all envelopes, per channel.
pub fn local_mean<P: ArithPath>(
    path: &P,
    x: &MultivariateSignal<P::Scalar>,
    dirs: &DirectionSet,
    cfg: &SiftConfig,
) -> Result<MultivariateSignal<P::Scalar>> {
    check_dims(x, dirs)?;
    cfg.validate()?;
    let (n, len) = (x.n_channels(), x.len());
    if len < 3 {
        return Err(MemdError::TooShort { needed: 3, got: len });
    }
    let mut acc = vec![vec![P::Acc::default(); len]; n];
    let mut projection = Vec::with_capacity(len);
    let mut scratch = EnvelopeScratch::<P> {
        xs: Vec::new(),
        ys: Vec::new(),
        segs: Vec::new(),
    };
    for k in 0..dirs.n_directions() {
        project_direction(path, x, dirs.vector(k), dirs.quantized(k), &mut projection);
        for &polarity in cfg.mean.polarities() {
            let records = projection_extrema(&projection, polarity, cfg.tie)?;
            let positions = match knot_positions(&records, len) {
                Ok(p) => p,
                Err(MemdError::TooFewExtrema(_)) => return Err(MemdError::ResidueReached),
                Err(e) => return Err(e),
            };
            accumulate_envelopes(path, cfg, x, &positions, &mut acc, &mut scratch)?;
        }
    }
    let weight = cfg.mean_weight();
    let channels = acc
        .into_iter()
        .map(|a| a.into_iter().map(|s| path.scale_sum(s, &weight)).collect())
        .collect();
    MultivariateSignal::new(channels, x.sample_rate())
}

/// Channel-wise `a - b`.
pub fn subtract<P: ArithPath>(
    path: &P,
    a: &MultivariateSignal<P::Scalar>,
    b: &MultivariateSignal<P::Scalar>,
) -> MultivariateSignal<P::Scalar> {
    let mut out = a.clone();
    for i in 0..a.n_channels() {
        for (o, &v) in out.channel_mut(i).iter_mut().zip(b.channel(i)) {
            *o = path.sub(*o, v);
        }
    }
    out
}

/// `x - local_mean(x)`.
pub fn sift_once<P: ArithPath>(
    path: &P,
    x: &MultivariateSignal<P::Scalar>,
    dirs: &DirectionSet,
    cfg: &SiftConfig,
) -> Result<MultivariateSignal<P::Scalar>> {
    let mean = local_mean(path, x, dirs, cfg)?;
    Ok(subtract(path, x, &mean))
}

/// Result of one IMF generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction<S> {
    pub imf: MultivariateSignal<S>,
    pub residue: MultivariateSignal<S>,
    /// No envelope could be built at some iteration; `imf` is zero and
    /// `residue` is the input.
    pub residue_reached: bool,
}

/// Applies `S` sifts; the IMF is the last sift output, the residue is the
/// input minus the IMF.
pub fn extract_imf<P: ArithPath>(
    path: &P,
    x: &MultivariateSignal<P::Scalar>,
    dirs: &DirectionSet,
    cfg: &SiftConfig,
) -> Result<Extraction<P::Scalar>> {
    cfg.validate()?;
    let mut h = x.clone();
    for _ in 0..cfg.n_siftings {
        match sift_once(path, &h, dirs, cfg) {
            Ok(next) => h = next,
            Err(MemdError::ResidueReached) => {
                return Ok(Extraction {
                    imf: MultivariateSignal::zeros(x.n_channels(), x.len(), x.sample_rate()),
                    residue: x.clone(),
                    residue_reached: true,
                })
            }
            Err(e) => return Err(e),
        }
    }
    let residue = subtract(path, x, &h);
    Ok(Extraction {
        imf: h,
        residue,
        residue_reached: false,
    })
}
