//! The two interchangeable arithmetic paths of the sifting pipeline.
//!
//! [`RealPath`] is the `f64` reference. [`FixedPath`] mirrors the hardware
//! datapath: Q16.8 samples, signed-digit constant multiplies, table-driven
//! division and a sticky overflow flag.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{MemdError, Result};
use crate::fixed_point::{round_shift, CsdConstant, FixedContext, FixedQ16_8, FixedStats};
use crate::signal::{MultivariateSignal, Sample};
use crate::spline::{
    fixed_linear_segments, fixed_natural_spline, natural_spline_coeffs, SplineFactor,
    MAX_WINDOW_KNOTS, FixedKnot, FixedSegment, Knot, SplineSegment,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    Fixed,
    #[default]
    Real,
}

impl PathKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PathKind::Fixed => "fixed",
            PathKind::Real => "real",
        }
    }
}

/// Knot of an envelope: integer sample abscissa, path-specific ordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexedKnot<S> {
    pub index: i64,
    pub value: S,
}

pub trait ArithPath {
    type Scalar: Sample;
    /// Accumulator for sums of envelope values.
    type Acc: Copy + Default + Debug;
    type Segment: Copy + Debug;

    fn kind(&self) -> PathKind;

    fn quantize(&self, v: f64) -> Self::Scalar;

    fn add(&self, a: Self::Scalar, b: Self::Scalar) -> Self::Scalar;

    fn sub(&self, a: Self::Scalar, b: Self::Scalar) -> Self::Scalar;

    /// Dot product of one sample vector with a direction.
    fn project_sample(&self, real: &[f64], csd: &[CsdConstant], x: &[Self::Scalar])
        -> Self::Scalar;

    fn accumulate(&self, acc: Self::Acc, v: Self::Scalar) -> Self::Acc;

    /// `acc * c`, rounded back to a sample.
    fn scale_sum(&self, acc: Self::Acc, c: &CsdConstant) -> Self::Scalar;

    fn linear_segment(
        &self,
        k0: IndexedKnot<Self::Scalar>,
        k1: IndexedKnot<Self::Scalar>,
    ) -> Self::Segment;

    fn global_segments(&self, knots: &[IndexedKnot<Self::Scalar>]) -> Result<Vec<Self::Segment>>;

    /// Segment `j` of the natural spline over abscissae `xs`, once per
    /// channel: `ys[i * xs.len() + a]` is channel `i`'s ordinate at knot `a`.
    fn window_segments(
        &self,
        xs: &[i64],
        ys: &[Self::Scalar],
        j: usize,
        out: &mut Vec<Self::Segment>,
    ) -> Result<()> {
        out.clear();
        for chunk in ys.chunks(xs.len()) {
            let knots: Vec<_> = xs
                .iter()
                .zip(chunk)
                .map(|(&index, &value)| IndexedKnot { index, value })
                .collect();
            out.push(self.global_segments(&knots)?[j]);
        }
        Ok(())
    }

    fn eval(&self, seg: &Self::Segment, x: i64) -> Self::Scalar;

    fn quantize_signal(&self, x: &MultivariateSignal<f64>) -> MultivariateSignal<Self::Scalar> {
        x.map(|v| self.quantize(v))
    }
}

/// Floating-point reference path.
#[derive(Debug, Clone, Copy, Default)]
pub struct RealPath;

fn real_knot(k: IndexedKnot<f64>) -> Knot {
    Knot::new(k.index as f64, k.value)
}

impl ArithPath for RealPath {
    type Scalar = f64;
    type Acc = f64;
    type Segment = SplineSegment;

    fn kind(&self) -> PathKind {
        PathKind::Real
    }

    fn quantize(&self, v: f64) -> f64 {
        v
    }

    fn add(&self, a: f64, b: f64) -> f64 {
        a + b
    }

    fn sub(&self, a: f64, b: f64) -> f64 {
        a - b
    }

    #[inline]
    fn project_sample(&self, real: &[f64], _csd: &[CsdConstant], x: &[f64]) -> f64 {
        real.iter().zip(x).fold(0.0, |acc, (a, v)| acc + a * v)
    }

    #[inline]
    fn accumulate(&self, acc: f64, v: f64) -> f64 {
        acc + v
    }

    fn scale_sum(&self, acc: f64, c: &CsdConstant) -> f64 {
        acc * c.value()
    }

    fn linear_segment(&self, k0: IndexedKnot<f64>, k1: IndexedKnot<f64>) -> SplineSegment {
        let h = (k1.index - k0.index) as f64;
        SplineSegment {
            x0: k0.index as f64,
            x1: k1.index as f64,
            a: k0.value,
            b: (k1.value - k0.value) / h,
            c: 0.0,
            d: 0.0,
        }
    }

    fn global_segments(&self, knots: &[IndexedKnot<f64>]) -> Result<Vec<SplineSegment>> {
        let knots: Vec<Knot> = knots.iter().copied().map(real_knot).collect();
        natural_spline_coeffs(&knots)
    }

    fn window_segments(
        &self,
        xs: &[i64],
        ys: &[f64],
        j: usize,
        out: &mut Vec<SplineSegment>,
    ) -> Result<()> {
        if xs.len() > MAX_WINDOW_KNOTS {
            return Err(MemdError::Config(format!(
                "spline window of {} knots exceeds {MAX_WINDOW_KNOTS}",
                xs.len()
            )));
        }
        let mut xf = [0.0; MAX_WINDOW_KNOTS];
        for (d, &x) in xf.iter_mut().zip(xs) {
            *d = x as f64;
        }
        let factor = SplineFactor::new(&xf[..xs.len()])?;
        out.clear();
        out.extend(ys.chunks(xs.len()).map(|c| factor.segment(c, j)));
        Ok(())
    }

    #[inline]
    fn eval(&self, seg: &SplineSegment, x: i64) -> f64 {
        seg.eval(x as f64)
    }
}

/// Bit-faithful Q16.8 path. Owns its arithmetic context, so one instance
/// belongs to one decomposition.
#[derive(Debug, Default)]
pub struct FixedPath {
    ctx: FixedContext,
}

impl FixedPath {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn context(&self) -> &FixedContext {
        &self.ctx
    }

    pub fn overflowed(&self) -> bool {
        self.ctx.overflowed()
    }

    pub fn stats(&self) -> FixedStats {
        self.ctx.stats()
    }
}

fn fixed_knot(k: IndexedKnot<FixedQ16_8>) -> FixedKnot {
    FixedKnot {
        x: k.index,
        y: k.value,
    }
}

impl ArithPath for FixedPath {
    type Scalar = FixedQ16_8;
    type Acc = i64;
    type Segment = FixedSegment;

    fn kind(&self) -> PathKind {
        PathKind::Fixed
    }

    fn quantize(&self, v: f64) -> FixedQ16_8 {
        self.ctx.from_real(v)
    }

    fn add(&self, a: FixedQ16_8, b: FixedQ16_8) -> FixedQ16_8 {
        self.ctx.add(a, b)
    }

    fn sub(&self, a: FixedQ16_8, b: FixedQ16_8) -> FixedQ16_8 {
        self.ctx.sub(a, b)
    }

    /// Shift-and-add products summed at full precision, rounded once.
    #[inline]
    fn project_sample(&self, _real: &[f64], csd: &[CsdConstant], x: &[FixedQ16_8]) -> FixedQ16_8 {
        let frac = csd.first().map(CsdConstant::frac_bits).unwrap_or(0);
        let sum = csd.iter().zip(x).fold(0i128, |acc, (c, v)| {
            debug_assert_eq!(c.frac_bits(), frac);
            acc + c.apply_scaled(v.raw() as i64)
        });
        self.ctx.saturate(round_shift(sum, frac))
    }

    #[inline]
    fn accumulate(&self, acc: i64, v: FixedQ16_8) -> i64 {
        acc + v.raw() as i64
    }

    fn scale_sum(&self, acc: i64, c: &CsdConstant) -> FixedQ16_8 {
        self.ctx.saturate(round_shift(c.apply_scaled(acc), c.frac_bits()))
    }

    fn linear_segment(
        &self,
        k0: IndexedKnot<FixedQ16_8>,
        k1: IndexedKnot<FixedQ16_8>,
    ) -> FixedSegment {
        fixed_linear_segments(&self.ctx, &[fixed_knot(k0), fixed_knot(k1)]).expect("ordered knots")
            [0]
    }

    fn global_segments(&self, knots: &[IndexedKnot<FixedQ16_8>]) -> Result<Vec<FixedSegment>> {
        let knots: Vec<FixedKnot> = knots.iter().copied().map(fixed_knot).collect();
        fixed_natural_spline(&self.ctx, &knots)
    }

    #[inline]
    fn eval(&self, seg: &FixedSegment, x: i64) -> FixedQ16_8 {
        seg.eval(&self.ctx, x)
    }
}
