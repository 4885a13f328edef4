//! Envelope interpolation.
//!
//! Natural cubic splines are built from the second-derivative system solved
//! with the Thomas algorithm. Besides the global spline over all knots there
//! is a three-knot window form used by the online pipeline: each interval
//! between consecutive knots is interpolated by the natural spline through
//! that interval's two knots and the next one. Piecewise-linear interpolation
//! is kept for comparison runs.
//!
//! The fixed-point variants take integer knot abscissae and Q16.8 ordinates.
//! Their coefficients live in the wide accumulator in a normalized form,
//! `q(u) = a + u (b + u (c + u d))` with `u = (x - x0) / h`, so every
//! coefficient stays on the amplitude scale regardless of the knot spacing.

use std::sync::OnceLock;

use crate::error::{MemdError, Result};
use crate::fixed_point::{wide, CsdConstant, FixedContext, FixedQ16_8};

/// Pivots smaller than this are treated as singular.
pub const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot {
    pub x: f64,
    pub y: f64,
}

impl Knot {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// `q(x) = a + b (x - x0) + c (x - x0)^2 + d (x - x0)^3` on `[x0, x1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineSegment {
    pub x0: f64,
    pub x1: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SplineSegment {
    /// Segment from its two end knots and the `c` (half second derivative)
    /// values at both ends.
    fn from_knots(left: Knot, right: Knot, c_left: f64, c_right: f64) -> Self {
        let h = right.x - left.x;
        Self {
            x0: left.x,
            x1: right.x,
            a: left.y,
            b: (right.y - left.y) / h - h * (2.0 * c_left + c_right) / 3.0,
            c: c_left,
            d: (c_right - c_left) / (3.0 * h),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let t = x - self.x0;
        self.a + t * (self.b + t * (self.c + t * self.d))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let t = x - self.x0;
        self.b + t * (2.0 * self.c + 3.0 * t * self.d)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        2.0 * self.c + 6.0 * self.d * (x - self.x0)
    }
}

/// A tridiagonal system `sub[i-1] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        let off = n.saturating_sub(1);
        for (len, expected) in [(sub.len(), off), (sup.len(), off), (rhs.len(), n)] {
            if len != expected {
                return Err(MemdError::DimensionMismatch { expected, got: len });
            }
        }
        Ok(Self {
            sub,
            diag,
            sup,
            rhs,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }
}

/// Forward elimination then back substitution.
pub fn thomas_solve(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    let n = sys.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    let mut pivot = sys.diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = sys.diag[i] - sys.sub[i - 1] * c_prime[i - 1];
        }
        if pivot.abs() < PIVOT_EPS || !pivot.is_finite() {
            return Err(MemdError::SingularSystem { row: i, pivot });
        }
        if i + 1 < n {
            c_prime[i] = sys.sup[i] / pivot;
        }
        d_prime[i] = if i == 0 {
            sys.rhs[0] / pivot
        } else {
            (sys.rhs[i] - sys.sub[i - 1] * d_prime[i - 1]) / pivot
        };
    }
    let mut x = d_prime;
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    Ok(x)
}

fn check_knots(knots: &[Knot], needed: usize) -> Result<()> {
    if knots.len() < needed {
        return Err(MemdError::TooFewKnots {
            needed,
            got: knots.len(),
        });
    }
    for (j, pair) in knots.windows(2).enumerate() {
        if !(pair[1].x > pair[0].x) {
            return Err(MemdError::NonMonotonicKnots(j + 1));
        }
    }
    Ok(())
}

/// Natural cubic spline through all knots.
pub fn natural_spline_coeffs(knots: &[Knot]) -> Result<Vec<SplineSegment>> {
    check_knots(knots, 3)?;
    let n = knots.len();
    let h: Vec<f64> = knots.windows(2).map(|p| p[1].x - p[0].x).collect();
    let slope: Vec<f64> = knots
        .windows(2)
        .zip(&h)
        .map(|(p, hj)| (p[1].y - p[0].y) / hj)
        .collect();

    // Interior unknowns c_1 .. c_{n-2}; natural ends fix c_0 = c_{n-1} = 0.
    let m = n - 2;
    let diag = (1..=m).map(|j| 2.0 * (h[j - 1] + h[j])).collect();
    let sub = (2..=m).map(|j| h[j - 1]).collect();
    let sup = (1..m).map(|j| h[j]).collect();
    let rhs = (1..=m).map(|j| 3.0 * (slope[j] - slope[j - 1])).collect();
    let interior = thomas_solve(&TridiagonalSystem::new(sub, diag, sup, rhs)?)?;

    let mut c = Vec::with_capacity(n);
    c.push(0.0);
    c.extend(interior);
    c.push(0.0);
    Ok((0..n - 1)
        .map(|j| SplineSegment::from_knots(knots[j], knots[j + 1], c[j], c[j + 1]))
        .collect())
}

/// Largest knot window a [`SplineFactor`] holds.
pub const MAX_WINDOW_KNOTS: usize = 16;

/// Elimination of the natural-spline system for one set of abscissae.
/// Ordinates are supplied per solve, so channels sharing knot positions
/// share the factorization. Arithmetic matches [`natural_spline_coeffs`]
/// operation for operation.
#[derive(Debug, Clone, Copy)]
pub struct SplineFactor {
    n: usize,
    x: [f64; MAX_WINDOW_KNOTS],
    h: [f64; MAX_WINDOW_KNOTS],
    pivot: [f64; MAX_WINDOW_KNOTS],
    c_prime: [f64; MAX_WINDOW_KNOTS],
}

impl SplineFactor {
    pub fn new(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 3 {
            return Err(MemdError::TooFewKnots { needed: 3, got: n });
        }
        if n > MAX_WINDOW_KNOTS {
            return Err(MemdError::Config(format!(
                "spline window of {n} knots exceeds {MAX_WINDOW_KNOTS}"
            )));
        }
        let mut f = Self {
            n,
            x: [0.0; MAX_WINDOW_KNOTS],
            h: [0.0; MAX_WINDOW_KNOTS],
            pivot: [0.0; MAX_WINDOW_KNOTS],
            c_prime: [0.0; MAX_WINDOW_KNOTS],
        };
        f.x[..n].copy_from_slice(xs);
        for i in 0..n - 1 {
            if !(xs[i + 1] > xs[i]) {
                return Err(MemdError::NonMonotonicKnots(i + 1));
            }
            f.h[i] = xs[i + 1] - xs[i];
        }
        let m = n - 2;
        for r in 0..m {
            let diag = 2.0 * (f.h[r] + f.h[r + 1]);
            let pivot = if r == 0 { diag } else { diag - f.h[r] * f.c_prime[r - 1] };
            if pivot.abs() < PIVOT_EPS || !pivot.is_finite() {
                return Err(MemdError::SingularSystem { row: r, pivot });
            }
            f.pivot[r] = pivot;
            if r + 1 < m {
                f.c_prime[r] = f.h[r + 1] / pivot;
            }
        }
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Segment `j` of the natural spline through `(x_a, ys[a])`.
    pub fn segment(&self, ys: &[f64], j: usize) -> SplineSegment {
        let (n, h) = (self.n, &self.h);
        let mut slope = [0.0; MAX_WINDOW_KNOTS];
        for i in 0..n - 1 {
            slope[i] = (ys[i + 1] - ys[i]) / h[i];
        }
        let m = n - 2;
        let mut c = [0.0; MAX_WINDOW_KNOTS];
        for r in 0..m {
            let rhs = 3.0 * (slope[r + 1] - slope[r]);
            c[r + 1] = if r == 0 {
                rhs / self.pivot[r]
            } else {
                (rhs - h[r] * c[r]) / self.pivot[r]
            };
        }
        for r in (0..m.saturating_sub(1)).rev() {
            c[r + 1] -= self.c_prime[r] * c[r + 2];
        }
        SplineSegment::from_knots(
            Knot::new(self.x[j], ys[j]),
            Knot::new(self.x[j + 1], ys[j + 1]),
            c[j],
            c[j + 1],
        )
    }
}

/// Closed-form natural spline through exactly three knots.
pub fn three_knot_segments(k0: Knot, k1: Knot, k2: Knot) -> [SplineSegment; 2] {
    let h0 = k1.x - k0.x;
    let h1 = k2.x - k1.x;
    let c1 = 3.0 * ((k2.y - k1.y) / h1 - (k1.y - k0.y) / h0) / (2.0 * (h0 + h1));
    [
        SplineSegment::from_knots(k0, k1, 0.0, c1),
        SplineSegment::from_knots(k1, k2, c1, 0.0),
    ]
}

fn locate<S>(segments: &[S], x: f64, bounds: impl Fn(&S) -> (f64, f64)) -> Result<&S> {
    let (lo, _) = bounds(segments.first().ok_or(MemdError::TooFewKnots { needed: 2, got: 0 })?);
    let (_, hi) = bounds(segments.last().expect("non-empty"));
    if !(x >= lo && x <= hi) {
        return Err(MemdError::OutOfRange { x, lo, hi });
    }
    let idx = segments.partition_point(|s| bounds(s).1 <= x);
    Ok(&segments[idx.min(segments.len() - 1)])
}

/// Evaluates a piecewise spline at `x` inside the knot range.
pub fn eval_spline(segments: &[SplineSegment], x: f64) -> Result<f64> {
    locate(segments, x, |s| (s.x0, s.x1)).map(|s| s.eval(x))
}

/// Online three-knot interpolation: the natural spline through the three
/// knots, evaluated at the integer samples of `[start, end)`.
pub fn interpolate_window(knots: &[Knot], start: i64, end: i64) -> Result<Vec<f64>> {
    if knots.len() != 3 {
        return Err(MemdError::TooFewKnots {
            needed: 3,
            got: knots.len(),
        });
    }
    check_knots(knots, 3)?;
    if (start as f64) < knots[0].x || (end as f64) > knots[2].x + 1.0 {
        return Err(MemdError::OutOfRange {
            x: if (start as f64) < knots[0].x {
                start as f64
            } else {
                end as f64 - 1.0
            },
            lo: knots[0].x,
            hi: knots[2].x,
        });
    }
    let segs = three_knot_segments(knots[0], knots[1], knots[2]);
    (start..end).map(|x| eval_spline(&segs, x as f64)).collect()
}

/// Piecewise-linear interpolation at the integer samples of `[start, end)`.
pub fn linear_interpolate(knots: &[Knot], start: i64, end: i64) -> Result<Vec<f64>> {
    check_knots(knots, 2)?;
    let segments: Vec<SplineSegment> = knots
        .windows(2)
        .map(|p| SplineSegment {
            x0: p[0].x,
            x1: p[1].x,
            a: p[0].y,
            b: (p[1].y - p[0].y) / (p[1].x - p[0].x),
            c: 0.0,
            d: 0.0,
        })
        .collect();
    (start..end).map(|x| eval_spline(&segments, x as f64)).collect()
}

/// Knot with an integer sample abscissa and a Q16.8 ordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedKnot {
    pub x: i64,
    pub y: FixedQ16_8,
}

/// Fixed-point cubic segment in normalized form on `[x0, x0 + h]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedSegment {
    pub x0: i64,
    pub h: i64,
    /// `1 / h` in Q.32.
    pub recip_h: i64,
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

fn one_third() -> &'static CsdConstant {
    static THIRD: OnceLock<CsdConstant> = OnceLock::new();
    THIRD.get_or_init(|| CsdConstant::with_precision(1.0 / 3.0, wide::FRAC))
}

impl FixedSegment {
    /// Segment from its end knots and the wide `c` values at both ends.
    fn from_knots(
        ctx: &FixedContext,
        left: FixedKnot,
        right: FixedKnot,
        c_left: i64,
        c_right: i64,
    ) -> Self {
        let h = right.x - left.x;
        let a = wide::from_fixed(left.y);
        let delta = wide::from_fixed(right.y) - a;
        let h2 = h * h;
        let p_left = c_left * h2;
        let p_right = c_right * h2;
        Self {
            x0: left.x,
            h,
            recip_h: wide::reciprocal_of_spacing(ctx, h),
            a,
            b: delta - wide::mul_csd(2 * p_left + p_right, one_third()),
            c: p_left,
            d: wide::mul_csd(p_right - p_left, one_third()),
        }
    }

    fn linear(ctx: &FixedContext, left: FixedKnot, right: FixedKnot) -> Self {
        let h = right.x - left.x;
        let a = wide::from_fixed(left.y);
        Self {
            x0: left.x,
            h,
            recip_h: wide::reciprocal_of_spacing(ctx, h),
            a,
            b: wide::from_fixed(right.y) - a,
            c: 0,
            d: 0,
        }
    }

    pub fn x1(&self) -> i64 {
        self.x0 + self.h
    }

    #[inline]
    pub fn eval(&self, ctx: &FixedContext, x: i64) -> FixedQ16_8 {
        // (x - x0) is an integer, so u is exact in Q.32.
        let u = (x - self.x0) * self.recip_h;
        let mut acc = self.d;
        acc = wide::mul(acc, u) + self.c;
        acc = wide::mul(acc, u) + self.b;
        acc = wide::mul(acc, u) + self.a;
        wide::to_fixed(ctx, acc)
    }
}

fn check_fixed_knots(knots: &[FixedKnot], needed: usize) -> Result<()> {
    if knots.len() < needed {
        return Err(MemdError::TooFewKnots {
            needed,
            got: knots.len(),
        });
    }
    for (j, pair) in knots.windows(2).enumerate() {
        if pair[1].x <= pair[0].x {
            return Err(MemdError::NonMonotonicKnots(j + 1));
        }
    }
    Ok(())
}

/// Fixed-point closed-form natural spline through three knots.
pub fn fixed_three_knot_segments(
    ctx: &FixedContext,
    k0: FixedKnot,
    k1: FixedKnot,
    k2: FixedKnot,
) -> [FixedSegment; 2] {
    let h0 = k1.x - k0.x;
    let h1 = k2.x - k1.x;
    let s0 = wide::mul(
        wide::from_fixed(k1.y) - wide::from_fixed(k0.y),
        wide::reciprocal_of_spacing(ctx, h0),
    );
    let s1 = wide::mul(
        wide::from_fixed(k2.y) - wide::from_fixed(k1.y),
        wide::reciprocal_of_spacing(ctx, h1),
    );
    let c1 = wide::mul(
        3 * (s1 - s0),
        wide::reciprocal_of_spacing(ctx, 2 * (h0 + h1)),
    );
    [
        FixedSegment::from_knots(ctx, k0, k1, 0, c1),
        FixedSegment::from_knots(ctx, k1, k2, c1, 0),
    ]
}

/// Fixed-point natural spline through all knots. The Thomas sweep runs in the
/// wide accumulator; its pivots are not sample spacings, so they use exact
/// division rather than the reciprocal table.
pub fn fixed_natural_spline(ctx: &FixedContext, knots: &[FixedKnot]) -> Result<Vec<FixedSegment>> {
    check_fixed_knots(knots, 3)?;
    let n = knots.len();
    let h: Vec<i64> = knots.windows(2).map(|p| p[1].x - p[0].x).collect();
    let slope: Vec<i64> = knots
        .windows(2)
        .zip(&h)
        .map(|(p, &hj)| {
            wide::mul(
                wide::from_fixed(p[1].y) - wide::from_fixed(p[0].y),
                wide::reciprocal_of_spacing(ctx, hj),
            )
        })
        .collect();

    let m = n - 2;
    let mut c_prime = vec![0i64; m];
    let mut d_prime = vec![0i64; m];
    for i in 0..m {
        let j = i + 1;
        let diag = wide::from_int(2 * (h[j - 1] + h[j]));
        let rhs = 3 * (slope[j] - slope[j - 1]);
        let sub = wide::from_int(h[j - 1]);
        let (pivot, num) = if i == 0 {
            (diag, rhs)
        } else {
            (
                diag - wide::mul(sub, c_prime[i - 1]),
                rhs - wide::mul(sub, d_prime[i - 1]),
            )
        };
        if pivot <= 0 {
            return Err(MemdError::SingularSystem {
                row: i,
                pivot: pivot as f64 / wide::ONE as f64,
            });
        }
        if i + 1 < m {
            c_prime[i] = wide::div(wide::from_int(h[j]), pivot);
        }
        d_prime[i] = wide::div(num, pivot);
    }
    let mut interior = d_prime;
    for i in (0..m.saturating_sub(1)).rev() {
        interior[i] -= wide::mul(c_prime[i], interior[i + 1]);
    }

    let mut c = Vec::with_capacity(n);
    c.push(0);
    c.extend(interior);
    c.push(0);
    Ok((0..n - 1)
        .map(|j| FixedSegment::from_knots(ctx, knots[j], knots[j + 1], c[j], c[j + 1]))
        .collect())
}

/// Fixed-point linear segments between consecutive knots.
pub fn fixed_linear_segments(ctx: &FixedContext, knots: &[FixedKnot]) -> Result<Vec<FixedSegment>> {
    check_fixed_knots(knots, 2)?;
    Ok(knots
        .windows(2)
        .map(|p| FixedSegment::linear(ctx, p[0], p[1]))
        .collect())
}

pub fn eval_spline_fixed(
    ctx: &FixedContext,
    segments: &[FixedSegment],
    x: i64,
) -> Result<FixedQ16_8> {
    locate(segments, x as f64, |s| (s.x0 as f64, s.x1() as f64)).map(|s| s.eval(ctx, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k(x: f64, y: f64) -> Knot {
        Knot::new(x, y)
    }

    /// Dense Gaussian elimination with partial pivoting.
    fn dense_solve(sys: &TridiagonalSystem) -> Vec<f64> {
        let n = sys.len();
        let mut a = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            a[i][i] = sys.diag[i];
            if i > 0 {
                a[i][i - 1] = sys.sub[i - 1];
            }
            if i + 1 < n {
                a[i][i + 1] = sys.sup[i];
            }
            a[i][n] = sys.rhs[i];
        }
        for col in 0..n {
            let p = (col..n)
                .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
                .unwrap();
            a.swap(col, p);
            for r in (col + 1)..n {
                let f = a[r][col] / a[col][col];
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (a[i][n] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn factored_segments_match_full_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 3..=MAX_WINDOW_KNOTS {
            let mut x = 0.0;
            let xs: Vec<f64> = (0..n)
                .map(|_| {
                    x += rng.random_range(1.0..20.0f64).round();
                    x
                })
                .collect();
            let factor = SplineFactor::new(&xs).unwrap();
            for _ in 0..3 {
                let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
                let knots: Vec<Knot> = xs.iter().zip(&ys).map(|(&x, &y)| Knot::new(x, y)).collect();
                let full = natural_spline_coeffs(&knots).unwrap();
                for (j, seg) in full.iter().enumerate() {
                    assert_eq!(factor.segment(&ys, j), *seg);
                }
            }
        }
        assert!(SplineFactor::new(&[0.0; MAX_WINDOW_KNOTS + 1]).is_err());
        assert!(matches!(
            SplineFactor::new(&[0.0, 2.0, 2.0]),
            Err(MemdError::NonMonotonicKnots(2))
        ));
    }

    #[test]
    fn thomas_small_example() {
        let sys = TridiagonalSystem::new(
            vec![1.0, 1.0],
            vec![2.0, 2.0, 2.0],
            vec![1.0, 1.0],
            vec![4.0, 8.0, 8.0],
        )
        .unwrap();
        let x = thomas_solve(&sys).unwrap();
        let expected = dense_solve(&sys);
        for (a, b) in x.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn thomas_identity() {
        let r = vec![3.5, -1.0, 0.25, 7.0];
        let sys = TridiagonalSystem::new(vec![0.0; 3], vec![1.0; 4], vec![0.0; 3], r.clone())
            .unwrap();
        assert_eq!(thomas_solve(&sys).unwrap(), r);
    }

    #[test]
    fn thomas_random_dominant_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(3..=64);
            let sub: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sup: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
            let diag = (0..n)
                .map(|i| {
                    let off = if i > 0 { sub[i - 1].abs() } else { 0.0 }
                        + if i + 1 < n { sup[i].abs() } else { 0.0 };
                    (off + rng.random_range(0.1..2.0)) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }
                })
                .collect();
            let rhs = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let sys = TridiagonalSystem::new(sub, diag, sup, rhs).unwrap();
            let x = thomas_solve(&sys).unwrap();
            let y = dense_solve(&sys);
            let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-9, "error {err}");
        }
    }

    #[test]
    fn thomas_singular() {
        let sys = TridiagonalSystem::new(vec![1.0], vec![0.0, 1.0], vec![1.0], vec![1.0, 1.0])
            .unwrap();
        assert!(matches!(
            thomas_solve(&sys),
            Err(MemdError::SingularSystem { row: 0, .. })
        ));
        assert!(TridiagonalSystem::new(vec![1.0], vec![1.0], vec![], vec![1.0]).is_err());
    }

    #[test]
    fn three_knot_examples() {
        let knots = [k(0.0, 0.0), k(1.0, 1.0), k(2.0, 0.0)];
        let segs = natural_spline_coeffs(&knots).unwrap();
        assert_eq!(eval_spline(&segs, 1.0).unwrap(), 1.0);
        // Closed form: c1 = -3/2, b0 = 3/2, d0 = -1/2, q(1/2) = 3/4 - 1/16.
        assert!((eval_spline(&segs, 0.5).unwrap() - 0.6875).abs() < 1e-15);
        let closed = three_knot_segments(knots[0], knots[1], knots[2]);
        assert!((closed[0].eval(0.5) - 0.6875).abs() < 1e-15);
        assert_eq!(closed[0].b, 1.5);
        assert_eq!(closed[0].d, -0.5);
    }

    #[test]
    fn linear_data_gives_linear_spline() {
        let knots: Vec<Knot> = [0.0, 1.5, 4.0, 5.0, 9.0].iter().map(|&x| k(x, 2.0 * x)).collect();
        for s in natural_spline_coeffs(&knots).unwrap() {
            assert!(s.c.abs() < 1e-12 && s.d.abs() < 1e-12);
            assert!((s.b - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_errors() {
        assert!(matches!(
            natural_spline_coeffs(&[k(0.0, 0.0), k(1.0, 1.0)]),
            Err(MemdError::TooFewKnots { .. })
        ));
        assert!(matches!(
            natural_spline_coeffs(&[k(0.0, 0.0), k(2.0, 1.0), k(2.0, 3.0)]),
            Err(MemdError::NonMonotonicKnots(2))
        ));
        let segs = natural_spline_coeffs(&[k(0.0, 0.0), k(1.0, 1.0), k(2.0, 0.0)]).unwrap();
        assert!(matches!(
            eval_spline(&segs, 2.5),
            Err(MemdError::OutOfRange { .. })
        ));
    }

    #[test]
    fn window_examples() {
        let vals = interpolate_window(&[k(0.0, 0.0), k(1.0, 1.0), k(2.0, 0.0)], 0, 1).unwrap();
        assert_eq!(vals, vec![0.0]);
        let vals = interpolate_window(&[k(0.0, 4.0), k(5.0, 4.0), k(9.0, 4.0)], 0, 10).unwrap();
        assert!(vals.iter().all(|&v| (v - 4.0).abs() < 1e-12));
        assert!(interpolate_window(&[k(0.0, 4.0), k(5.0, 4.0), k(9.0, 4.0)], -1, 3).is_err());
    }

    #[test]
    fn linear_examples() {
        assert_eq!(linear_interpolate(&[k(0.0, 0.0), k(2.0, 2.0)], 1, 2).unwrap(), vec![1.0]);
        let knots = [k(0.0, 3.0), k(4.0, -1.0), k(7.0, 5.0)];
        let v = linear_interpolate(&knots, 0, 8).unwrap();
        assert_eq!(v[0], 3.0);
        assert_eq!(v[4], -1.0);
        assert_eq!(v[7], 5.0);
        assert!(matches!(
            linear_interpolate(&knots[..1], 0, 1),
            Err(MemdError::TooFewKnots { .. })
        ));
    }

    #[test]
    fn fixed_three_knot_matches_real() {
        let ctx = FixedContext::new();
        let fk = |x: i64, y: f64| FixedKnot {
            x,
            y: ctx.from_real(y),
        };
        let segs = fixed_three_knot_segments(&ctx, fk(0, 0.0), fk(2, 1.0), fk(4, 0.0));
        // q(1) on the first interval: real value 0.6875.
        assert_eq!(segs[0].eval(&ctx, 1), ctx.from_real(0.6875));
        assert_eq!(segs[0].eval(&ctx, 2), ctx.from_real(1.0));
        assert_eq!(segs[1].eval(&ctx, 4), ctx.from_real(0.0));
    }

    #[test]
    fn fixed_spline_tracks_real_spline() {
        let ctx = FixedContext::new();
        let limit = FixedQ16_8::MAX.to_real();
        let (mut checked, mut out_of_range) = (0, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let n = rng.random_range(3..40);
            let mut x = rng.random_range(-100..0i64);
            let mut fixed = Vec::new();
            for _ in 0..n {
                fixed.push(FixedKnot {
                    x,
                    y: ctx.from_real(rng.random_range(-500.0..500.0)),
                });
                x += rng.random_range(1..300);
            }
            let real: Vec<Knot> = fixed.iter().map(|k| k_of(k)).collect();
            let rs = natural_spline_coeffs(&real).unwrap();
            let fs = fixed_natural_spline(&ctx, &fixed).unwrap();
            for q in fixed[0].x..=fixed[n - 1].x {
                let a = eval_spline(&rs, q as f64).unwrap();
                let b = eval_spline_fixed(&ctx, &fs, q).unwrap().to_real();
                // Wildly uneven spacing can overshoot past the Q16.8 range;
                // those samples saturate by design.
                if a.abs() >= limit {
                    out_of_range += 1;
                    continue;
                }
                checked += 1;
                assert!((a - b).abs() <= 4.0 * FixedQ16_8::LSB, "{a} vs {b}");
            }
        }
        assert!(checked >= 10_000 && out_of_range * 100 < checked);
    }

    fn k_of(k: &FixedKnot) -> Knot {
        Knot::new(k.x as f64, k.y.to_real())
    }
}
