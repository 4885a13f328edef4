use memd_core::spline::{
    eval_spline, eval_spline_fixed, fixed_natural_spline, natural_spline_coeffs, thomas_solve,
    FixedKnot, Knot, TridiagonalSystem,
};
use memd_core::{FixedContext, FixedQ16_8};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    x
}

fn dominant_system(rng: &mut ChaCha8Rng, n: usize) -> TridiagonalSystem {
    let sub: Vec<f64> = (1..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let sup: Vec<f64> = (1..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let diag = (0..n)
        .map(|i| {
            let off = if i > 0 { sub[i - 1].abs() } else { 0.0 } + sup.get(i).map_or(0.0, |v| v.abs());
            let d = off + rng.random_range(0.5..2.0);
            if rng.random_bool(0.5) { d } else { -d }
        })
        .collect();
    let rhs = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
    TridiagonalSystem::new(sub, diag, sup, rhs).unwrap()
}

#[test]
fn thomas_matches_dense_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let n = rng.random_range(3..=512);
        let sys = dominant_system(&mut rng, n);
        let fast = thomas_solve(&sys).unwrap();
        let slow = dense_solve(&sys);
        let dev = fast.iter().zip(&slow).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(dev <= 1e-9, "n={n}: {dev}");
    }
}

fn knots() -> impl Strategy<Value = Vec<Knot>> {
    prop::collection::vec((1u32..60, -1e3..1e3f64), 3..40).prop_map(|v| {
        let mut x = 0.0;
        v.into_iter()
            .map(|(gap, y)| {
                x += f64::from(gap);
                Knot::new(x, y)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn spline_interpolates_and_is_c2_and_natural(k in knots()) {
        let segs = natural_spline_coeffs(&k).unwrap();
        prop_assert_eq!(segs.len(), k.len() - 1);
        for (j, s) in segs.iter().enumerate() {
            prop_assert_eq!(s.eval(k[j].x), k[j].y);
            prop_assert!((s.eval(k[j + 1].x) - k[j + 1].y).abs() <= 1e-8);
        }
        for w in segs.windows(2) {
            let x = w[0].x1;
            prop_assert!((w[0].derivative(x) - w[1].derivative(x)).abs() <= 1e-8);
            prop_assert!((w[0].second_derivative(x) - w[1].second_derivative(x)).abs() <= 1e-8);
        }
        let last = segs.last().unwrap();
        prop_assert!(segs[0].second_derivative(segs[0].x0).abs() <= 1e-8);
        prop_assert!(last.second_derivative(last.x1).abs() <= 1e-8);
    }

    #[test]
    fn linear_data_gives_linear_spline(slope in -5.0..5.0f64, icpt in -50.0..50.0f64, k in knots()) {
        let k: Vec<Knot> = k.iter().map(|p| Knot::new(p.x, icpt + slope * p.x)).collect();
        let segs = natural_spline_coeffs(&k).unwrap();
        let (lo, hi) = (k[0].x as i64, k[k.len() - 1].x as i64);
        for x in lo..=hi {
            let v = eval_spline(&segs, x as f64).unwrap();
            prop_assert!((v - (icpt + slope * x as f64)).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }
}

#[test]
fn fixed_spline_within_four_lsb_at_random_points() {
    let ctx = FixedContext::new();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut checked = 0;
    while checked < 10_000 {
        let n = rng.random_range(3..30);
        let mut x = 0i64;
        let fixed: Vec<FixedKnot> = (0..n)
            .map(|_| {
                x += rng.random_range(1..=256);
                FixedKnot {
                    x,
                    y: ctx.from_real(rng.random_range(-500.0..500.0)),
                }
            })
            .collect();
        let real: Vec<Knot> = fixed.iter().map(|k| Knot::new(k.x as f64, k.y.to_real())).collect();
        let rs = natural_spline_coeffs(&real).unwrap();
        let fs = fixed_natural_spline(&ctx, &fixed).unwrap();
        for _ in 0..100 {
            let q = rng.random_range(fixed[0].x..=fixed[n - 1].x);
            let a = eval_spline(&rs, q as f64).unwrap();
            if a.abs() >= FixedQ16_8::MAX.to_real() {
                continue;
            }
            let b = eval_spline_fixed(&ctx, &fs, q).unwrap().to_real();
            assert!((a - b).abs() <= 4.0 * FixedQ16_8::LSB, "x={q}: {a} vs {b}");
            checked += 1;
        }
    }
}
