//! IMF cascade: batch decomposition and the online pipeline.
//!
//! The streaming engine is a chain of `M * S` sifting stages. Every stage
//! consumes its predecessor's emissions in time order and emits sample `t`
//! once the envelope windows around `t` are fixed on every projection, or
//! once `t` has waited `k_max` samples, in which case the missing end knots
//! are mirrored provisionally about the newest sample. Emissions are final.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::arith::ArithPath;
use crate::directions::DirectionSet;
use crate::error::{MemdError, Result};
use crate::extrema::{ExtremaStream, Polarity};
use crate::fixed_point::CsdConstant;
use crate::sifting::{extract_imf, window_segments, EnvelopeMode, SiftConfig, SplineWindow};
use crate::signal::{MultivariateSignal, Sample};

pub const MIN_SIGNAL_LEN: usize = 16;
pub const DEFAULT_K_MAX: usize = 256;

/// `M` IMFs and the final residue, all index-aligned with the input.
#[derive(Debug, Clone, PartialEq)]
pub struct ImfStack<S> {
    pub imfs: Vec<MultivariateSignal<S>>,
    pub residue: MultivariateSignal<S>,
    /// IMFs extracted before the residue condition was hit; the rest are
    /// zero padding.
    pub extracted: usize,
    pub config: SiftConfig,
}

impl<S: Sample> ImfStack<S> {
    pub fn n_imfs(&self) -> usize {
        self.imfs.len()
    }

    /// `sum(imfs) + residue`, summed in IMF order.
    pub fn reconstruct<P: ArithPath<Scalar = S>>(&self, path: &P) -> MultivariateSignal<S> {
        let mut out = self.residue.clone();
        for i in 0..out.n_channels() {
            for (t, o) in out.channel_mut(i).iter_mut().enumerate() {
                let mut sum = self.imfs.first().map_or(S::default(), |m| m.channel(i)[t]);
                for imf in self.imfs.iter().skip(1) {
                    sum = path.add(sum, imf.channel(i)[t]);
                }
                if !self.imfs.is_empty() {
                    *o = path.add(sum, *o);
                }
            }
        }
        out
    }

    pub fn to_f64(&self) -> ImfStack<f64> {
        ImfStack {
            imfs: self.imfs.iter().map(|m| m.to_f64()).collect(),
            residue: self.residue.to_f64(),
            extracted: self.extracted,
            config: self.config.clone(),
        }
    }
}

fn check_decompose_args<S: Sample>(
    x: &MultivariateSignal<S>,
    dirs: &DirectionSet,
    n_imfs: usize,
    cfg: &SiftConfig,
) -> Result<()> {
    cfg.validate()?;
    if n_imfs < 1 {
        return Err(MemdError::Config("need at least one IMF".into()));
    }
    if x.n_channels() < 2 {
        return Err(MemdError::Config("need at least two channels".into()));
    }
    if x.len() < MIN_SIGNAL_LEN {
        return Err(MemdError::TooShort {
            needed: MIN_SIGNAL_LEN,
            got: x.len(),
        });
    }
    if dirs.n_channels() != x.n_channels() {
        return Err(MemdError::DimensionMismatch {
            expected: dirs.n_channels(),
            got: x.n_channels(),
        });
    }
    if dirs.n_directions() != cfg.n_directions {
        return Err(MemdError::Config(format!(
            "direction set has {} vectors, config asks for {}",
            dirs.n_directions(),
            cfg.n_directions
        )));
    }
    Ok(())
}

/// Batch cascade of `n_imfs` IMF generators.
pub fn decompose<P: ArithPath>(
    path: &P,
    x: &MultivariateSignal<P::Scalar>,
    dirs: &DirectionSet,
    n_imfs: usize,
    cfg: &SiftConfig,
) -> Result<ImfStack<P::Scalar>> {
    decompose_profiled(path, x, dirs, n_imfs, cfg).map(|(stack, _)| stack)
}

/// [`decompose`] plus the wall time spent in each IMF generator.
pub fn decompose_profiled<P: ArithPath>(
    path: &P,
    x: &MultivariateSignal<P::Scalar>,
    dirs: &DirectionSet,
    n_imfs: usize,
    cfg: &SiftConfig,
) -> Result<(ImfStack<P::Scalar>, Vec<Duration>)> {
    check_decompose_args(x, dirs, n_imfs, cfg)?;
    let mut imfs = Vec::with_capacity(n_imfs);
    let mut timings = Vec::with_capacity(n_imfs);
    let mut residue = x.clone();
    let mut extracted = 0;
    let mut done = false;
    for _ in 0..n_imfs {
        let start = Instant::now();
        if done {
            imfs.push(MultivariateSignal::zeros(x.n_channels(), x.len(), x.sample_rate()));
        } else {
            let ex = extract_imf(path, &residue, dirs, cfg)?;
            if ex.residue_reached {
                done = true;
            } else {
                extracted += 1;
            }
            imfs.push(ex.imf);
            residue = ex.residue;
        }
        timings.push(start.elapsed());
    }
    Ok((
        ImfStack {
            imfs,
            residue,
            extracted,
            config: cfg.clone(),
        },
        timings,
    ))
}

/// One streamed sample: IMF index (`M` for the residue), time index and the
/// N channel values.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamOutput<S> {
    pub imf: usize,
    pub t: usize,
    pub values: Vec<S>,
}

/// Streaming parameters beyond the sifting configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub n_imfs: usize,
    pub k_max: usize,
}

#[derive(Debug, Clone)]
struct Entry<S> {
    h: Vec<S>,
    /// Input of the IMF generator this sample belongs to.
    carry: Vec<S>,
}

#[derive(Debug, Clone)]
struct StreamKnot<S> {
    index: i64,
    values: Vec<S>,
}

impl<S: Copy> StreamKnot<S> {
    fn mirrored(&self, about: i64) -> Self {
        Self {
            index: 2 * about - self.index,
            values: self.values.clone(),
        }
    }
}

#[derive(Debug, Clone)]
struct Track<S, Seg> {
    detector: ExtremaStream<S>,
    last_record: Option<(usize, S)>,
    records: usize,
    /// The two most recent kept records, oldest first.
    last_two: VecDeque<StreamKnot<S>>,
    /// Envelope knots from absolute knot number `base` on.
    knots: VecDeque<StreamKnot<S>>,
    base: usize,
    /// Absolute number of the knot opening the interval being emitted.
    interval: usize,
    cache: Option<(usize, Vec<Seg>)>,
}

impl<S: Sample, Seg: Copy> Track<S, Seg> {
    fn new(polarity: Polarity, cfg: &SiftConfig) -> Self {
        Self {
            detector: ExtremaStream::new(polarity, cfg.tie),
            last_record: None,
            records: 0,
            last_two: VecDeque::with_capacity(2),
            knots: VecDeque::new(),
            base: 0,
            interval: 0,
            cache: None,
        }
    }

    fn total(&self) -> usize {
        self.base + self.knots.len()
    }

    fn knot(&self, abs: usize) -> &StreamKnot<S> {
        &self.knots[abs - self.base]
    }

    fn add_record(&mut self, index: usize, value: S, values: Vec<S>) {
        let duplicate =
            matches!(self.last_record, Some((i, v)) if index == i + 1 && value == v);
        self.last_record = Some((index, value));
        if duplicate {
            return;
        }
        self.records += 1;
        let knot = StreamKnot {
            index: index as i64,
            values,
        };
        if self.last_two.len() == 2 {
            self.last_two.pop_front();
        }
        self.last_two.push_back(knot.clone());
        match self.records {
            1 => {}
            2 => {
                // Start mirror about sample 0, then both real knots.
                let (e1, e2) = (&self.last_two[0], &self.last_two[1]);
                let start = [e2.mirrored(0), e1.mirrored(0), e1.clone(), e2.clone()];
                self.knots.extend(start);
            }
            _ => self.knots.push_back(knot),
        }
    }

    fn end_knots(&self, about: i64) -> impl Iterator<Item = StreamKnot<S>> + '_ {
        self.last_two.iter().rev().map(move |k| k.mirrored(about))
    }

    /// Moves to the interval holding `t` and forgets knots no window needs.
    fn advance(&mut self, t: i64, window: SplineWindow) {
        while self.interval + 1 < self.total() && self.knot(self.interval + 1).index <= t {
            self.interval += 1;
        }
        while self.base + window.before < self.interval {
            self.knots.pop_front();
            self.base += 1;
        }
    }

    /// The window for `t` is complete: its right knot exists and, unless the
    /// record has ended, `lookahead` more knots past it.
    fn ready(&self, t: i64, lookahead: usize, finished: bool) -> bool {
        let extra = if finished { 0 } else { lookahead };
        self.total() > self.interval + 1 + extra && self.knot(self.interval + 1).index > t
    }
}

/// Channel segments for interval `j` (absolute) over `knots`, whose first
/// element is absolute knot `base`.
fn interval_segments<P: ArithPath>(
    path: &P,
    cfg: &SiftConfig,
    knots: &VecDeque<StreamKnot<P::Scalar>>,
    base: usize,
    j: usize,
    n_channels: usize,
) -> Vec<P::Segment> {
    let (lo, hi) = cfg.window.range(j, base + knots.len());
    let lo = lo.max(base);
    let window = || (lo..=hi).map(|a| &knots[a - base]);
    let xs: Vec<i64> = window().map(|k| k.index).collect();
    let ys: Vec<P::Scalar> = (0..n_channels)
        .flat_map(|i| window().map(move |k| k.values[i]))
        .collect();
    let mut out = Vec::with_capacity(n_channels);
    window_segments(path, cfg.envelope, &xs, &ys, j - lo, &mut out)
        .expect("ordered window with at least three knots");
    out
}

#[derive(Debug, Clone)]
struct Stage<S, Seg> {
    tracks: Vec<Track<S, Seg>>,
    buffer: VecDeque<Entry<S>>,
    buf_start: usize,
    head: usize,
    emitted: usize,
    finished: bool,
}

impl<S: Sample, Seg: Copy> Stage<S, Seg> {
    fn new(cfg: &SiftConfig) -> Self {
        let tracks = (0..cfg.n_directions)
            .flat_map(|_| cfg.mean.polarities().iter())
            .map(|&p| Track::new(p, cfg))
            .collect();
        Self {
            tracks,
            buffer: VecDeque::new(),
            buf_start: 0,
            head: 0,
            emitted: 0,
            finished: false,
        }
    }

    fn entry(&self, t: usize) -> &Entry<S> {
        &self.buffer[t - self.buf_start]
    }
}

/// Shared, read-only parameters of every stage.
struct Params<'a, P: ArithPath> {
    path: &'a P,
    dirs: &'a DirectionSet,
    cfg: &'a SiftConfig,
    weight: &'a CsdConstant,
    lookahead: usize,
    k_max: usize,
}

impl<P: ArithPath> Params<'_, P> {
    fn push(&self, stage: &mut Stage<P::Scalar, P::Segment>, entry: Entry<P::Scalar>) -> Result<()> {
        let t = stage.head;
        stage.buffer.push_back(entry);
        let polarities = self.cfg.mean.polarities();
        let n_pol = polarities.len();
        for k in 0..self.dirs.n_directions() {
            let y = self.path.project_sample(
                self.dirs.vector(k),
                self.dirs.quantized(k),
                &stage.buffer[t - stage.buf_start].h,
            );
            for p in 0..n_pol {
                let track = &mut stage.tracks[k * n_pol + p];
                if let Some(r) = track.detector.push(y, t)? {
                    let values = stage.buffer[r.index - stage.buf_start].h.clone();
                    track.add_record(r.index, r.value, values);
                }
            }
        }
        stage.head += 1;
        Ok(())
    }

    fn finish(&self, stage: &mut Stage<P::Scalar, P::Segment>) {
        if stage.finished {
            return;
        }
        stage.finished = true;
        let about = stage.head as i64 - 1;
        for track in &mut stage.tracks {
            if track.records >= 2 {
                let end: Vec<_> = track.end_knots(about).collect();
                track.knots.extend(end);
            }
        }
    }

    /// Emits every sample whose envelopes are final, in time order.
    fn drain(
        &self,
        stage: &mut Stage<P::Scalar, P::Segment>,
        forced: &mut usize,
        out: &mut Vec<(usize, Entry<P::Scalar>)>,
    ) {
        let path = self.path;
        while stage.emitted < stage.head {
            let t = stage.emitted;
            let ti = t as i64;
            for track in &mut stage.tracks {
                if track.records >= 2 {
                    track.advance(ti, self.cfg.window);
                }
            }
            let finished = stage.finished;
            let degenerate = stage.tracks.iter().any(|tr| tr.records < 2);
            let all_ready = !degenerate
                && stage
                    .tracks
                    .iter()
                    .all(|tr| tr.ready(ti, self.lookahead, finished));
            let due = finished || t + self.k_max < stage.head;
            if !all_ready && !due {
                break;
            }
            if !all_ready && !finished {
                *forced += 1;
            }
            let n = stage.entry(t).h.len();
            let h = if degenerate {
                vec![P::Scalar::default(); n]
            } else {
                let mut acc = vec![P::Acc::default(); n];
                let about = stage.head as i64 - 1;
                for track in &mut stage.tracks {
                    let provisional;
                    let segs: &[P::Segment] = if track.ready(ti, self.lookahead, finished) {
                        let j = track.interval;
                        if track.cache.as_ref().map(|c| c.0) != Some(j) {
                            let segs =
                                interval_segments(path, self.cfg, &track.knots, track.base, j, n);
                            track.cache = Some((j, segs));
                        }
                        &track.cache.as_ref().expect("cache filled").1
                    } else {
                        let mut knots = track.knots.clone();
                        knots.extend(track.end_knots(about));
                        let mut j = track.interval;
                        while j + 1 < track.base + knots.len()
                            && knots[j + 1 - track.base].index <= ti
                        {
                            j += 1;
                        }
                        provisional = interval_segments(path, self.cfg, &knots, track.base, j, n);
                        &provisional
                    };
                    for (a, seg) in acc.iter_mut().zip(segs) {
                        *a = path.accumulate(*a, path.eval(seg, ti));
                    }
                }
                let entry = stage.entry(t);
                entry
                    .h
                    .iter()
                    .zip(acc)
                    .map(|(&v, a)| path.sub(v, path.scale_sum(a, self.weight)))
                    .collect()
            };
            let carry = stage.entry(t).carry.clone();
            out.push((t, Entry { h, carry }));
            stage.emitted += 1;
        }
        let keep_from = stage
            .tracks
            .iter()
            .filter_map(|tr| tr.detector.pending_from())
            .fold(stage.emitted, usize::min);
        while stage.buf_start < keep_from && !stage.buffer.is_empty() {
            stage.buffer.pop_front();
            stage.buf_start += 1;
        }
    }
}

/// Online decomposition state. Owns its arithmetic path.
#[derive(Debug)]
pub struct StreamState<P: ArithPath> {
    path: P,
    dirs: DirectionSet,
    cfg: SiftConfig,
    stream: StreamConfig,
    weight: CsdConstant,
    stages: Vec<Stage<P::Scalar, P::Segment>>,
    n_channels: usize,
    pushed: usize,
    flushed: bool,
    forced: usize,
}

impl<P: ArithPath> StreamState<P> {
    pub fn new(path: P, dirs: DirectionSet, cfg: SiftConfig, stream: StreamConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.envelope == EnvelopeMode::CubicGlobal {
            return Err(MemdError::Config(
                "the global spline needs the whole record and cannot stream".into(),
            ));
        }
        if stream.n_imfs < 1 {
            return Err(MemdError::Config("need at least one IMF".into()));
        }
        if stream.k_max < 1 {
            return Err(MemdError::Config("k_max must be positive".into()));
        }
        if dirs.n_directions() != cfg.n_directions {
            return Err(MemdError::Config(format!(
                "direction set has {} vectors, config asks for {}",
                dirs.n_directions(),
                cfg.n_directions
            )));
        }
        let stages = (0..stream.n_imfs * cfg.n_siftings)
            .map(|_| Stage::new(&cfg))
            .collect();
        Ok(Self {
            path,
            n_channels: dirs.n_channels(),
            dirs,
            weight: cfg.mean_weight(),
            cfg,
            stream,
            stages,
            pushed: 0,
            flushed: false,
            forced: 0,
        })
    }

    pub fn path(&self) -> &P {
        &self.path
    }

    pub fn config(&self) -> &SiftConfig {
        &self.cfg
    }

    pub fn stream_config(&self) -> StreamConfig {
        self.stream
    }

    pub fn pushed(&self) -> usize {
        self.pushed
    }

    pub fn is_flushed(&self) -> bool {
        self.flushed
    }

    /// Samples emitted under a provisional end extension.
    pub fn provisional_emissions(&self) -> usize {
        self.forced
    }

    /// Sample vectors currently held across all stages.
    pub fn buffered(&self) -> usize {
        self.stages.iter().map(|s| s.buffer.len()).sum()
    }

    /// Upper bound on [`buffered`](Self::buffered).
    pub fn buffer_bound(&self) -> usize {
        self.stages.len() * (self.stream.k_max + 2)
    }

    pub fn push(&mut self, sample: &[P::Scalar]) -> Result<Vec<StreamOutput<P::Scalar>>> {
        if self.flushed {
            return Err(MemdError::Flushed);
        }
        if sample.len() != self.n_channels {
            return Err(MemdError::DimensionMismatch {
                expected: self.n_channels,
                got: sample.len(),
            });
        }
        if let Some(c) = sample.iter().position(|v| !v.is_finite()) {
            return Err(MemdError::NonFinite {
                channel: c,
                index: self.pushed,
            });
        }
        self.pushed += 1;
        let entry = Entry {
            h: sample.to_vec(),
            carry: sample.to_vec(),
        };
        let mut out = Vec::new();
        self.run(vec![(0, entry)], 0, false, &mut out)?;
        Ok(out)
    }

    /// Applies the end boundary and drains every stage.
    pub fn flush(&mut self) -> Result<Vec<StreamOutput<P::Scalar>>> {
        let mut out = Vec::new();
        if self.flushed {
            return Ok(out);
        }
        self.flushed = true;
        self.run(Vec::new(), 0, true, &mut out)?;
        Ok(out)
    }

    /// Feeds `input` to stage `from` and propagates emissions down the chain.
    fn run(
        &mut self,
        mut input: Vec<(usize, Entry<P::Scalar>)>,
        from: usize,
        finish: bool,
        out: &mut Vec<StreamOutput<P::Scalar>>,
    ) -> Result<()> {
        let params = Params {
            path: &self.path,
            dirs: &self.dirs,
            cfg: &self.cfg,
            weight: &self.weight,
            lookahead: self.cfg
                .envelope
                .lookahead_knots(self.cfg.window)
                .expect("checked at construction"),
            k_max: self.stream.k_max,
        };
        let s_per_imf = self.cfg.n_siftings;
        let n_stages = self.stages.len();
        for s in from..n_stages {
            let stage = &mut self.stages[s];
            for (_, entry) in input.drain(..) {
                params.push(stage, entry)?;
            }
            if finish {
                params.finish(stage);
            }
            let mut emitted = Vec::new();
            params.drain(stage, &mut self.forced, &mut emitted);
            if s % s_per_imf == s_per_imf - 1 {
                let imf = s / s_per_imf;
                for (t, entry) in emitted {
                    let residue: Vec<_> = entry
                        .carry
                        .iter()
                        .zip(&entry.h)
                        .map(|(&c, &h)| self.path.sub(c, h))
                        .collect();
                    out.push(StreamOutput {
                        imf,
                        t,
                        values: entry.h,
                    });
                    if s + 1 == n_stages {
                        out.push(StreamOutput {
                            imf: imf + 1,
                            t,
                            values: residue,
                        });
                    } else {
                        input.push((
                            t,
                            Entry {
                                h: residue.clone(),
                                carry: residue,
                            },
                        ));
                    }
                }
            } else {
                input = emitted;
            }
        }
        Ok(())
    }
}

/// Collects stream outputs into an [`ImfStack`]. Every `(imf, t)` for
/// `t < len` must be present exactly once.
pub fn assemble_stream<S: Sample>(
    outputs: &[StreamOutput<S>],
    n_channels: usize,
    n_imfs: usize,
    len: usize,
    sample_rate: f64,
    config: &SiftConfig,
) -> Result<ImfStack<S>> {
    let mut blocks: Vec<Vec<Vec<Option<S>>>> = vec![vec![vec![None; len]; n_channels]; n_imfs + 1];
    for o in outputs {
        if o.imf > n_imfs || o.t >= len || o.values.len() != n_channels {
            return Err(MemdError::Config(format!(
                "stream output (imf {}, t {}) outside a {n_imfs}-IMF, {len}-sample stack",
                o.imf, o.t
            )));
        }
        for (c, &v) in o.values.iter().enumerate() {
            if blocks[o.imf][c][o.t].replace(v).is_some() {
                return Err(MemdError::Config(format!(
                    "duplicate stream output (imf {}, t {})",
                    o.imf, o.t
                )));
            }
        }
    }
    let mut signals = Vec::with_capacity(n_imfs + 1);
    for (j, block) in blocks.into_iter().enumerate() {
        let channels = block
            .into_iter()
            .map(|ch| {
                ch.into_iter()
                    .enumerate()
                    .map(|(t, v)| {
                        v.ok_or_else(|| {
                            MemdError::Config(format!("missing stream output (imf {j}, t {t})"))
                        })
                    })
                    .collect::<Result<Vec<S>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        signals.push(MultivariateSignal::new(channels, sample_rate)?);
    }
    let residue = signals.pop().expect("residue block");
    let extracted = signals.iter().take_while(|m| !m.is_zero()).count();
    Ok(ImfStack {
        imfs: signals,
        residue,
        extracted,
        config: config.clone(),
    })
}

/// Result of replaying a whole signal through a [`StreamState`].
#[derive(Debug, Clone)]
pub struct StreamRun<S> {
    pub stack: ImfStack<S>,
    pub provisional_emissions: usize,
    pub max_buffered: usize,
    /// Largest gap between a sample's arrival and its final emission, in
    /// pushes, over all IMF outputs.
    pub max_latency: usize,
}

/// Pushes `x` sample by sample, flushes and assembles the result.
pub fn stream_decompose<P: ArithPath>(
    path: P,
    x: &MultivariateSignal<P::Scalar>,
    dirs: &DirectionSet,
    cfg: &SiftConfig,
    stream: StreamConfig,
) -> Result<(StreamRun<P::Scalar>, P)> {
    let mut state = StreamState::new(path, dirs.clone(), cfg.clone(), stream)?;
    let mut outputs = Vec::with_capacity(x.len() * (stream.n_imfs + 1));
    let mut max_buffered = 0;
    let mut max_latency = 0;
    for t in 0..x.len() {
        let batch = state.push(&x.sample(t))?;
        for o in &batch {
            max_latency = max_latency.max(t - o.t);
        }
        outputs.extend(batch);
        max_buffered = max_buffered.max(state.buffered());
    }
    outputs.extend(state.flush()?);
    let stack = assemble_stream(
        &outputs,
        x.n_channels(),
        stream.n_imfs,
        x.len(),
        x.sample_rate(),
        cfg,
    )?;
    let run = StreamRun {
        stack,
        provisional_emissions: state.provisional_emissions(),
        max_buffered,
        max_latency,
    };
    Ok((run, state.path))
}
