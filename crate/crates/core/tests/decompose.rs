use std::f64::consts::PI;

use memd_core::decomposer::{stream_decompose, DEFAULT_K_MAX};
use memd_core::{
    decompose, ArithPath, DirectionSet, FixedPath, MultivariateSignal, RealPath, SiftConfig,
    StreamConfig, StreamState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fuzz_signal(rng: &mut ChaCha8Rng) -> MultivariateSignal<f64> {
    let n = rng.random_range(2..=5);
    let len = rng.random_range(16..=600);
    let channels = (0..n)
        .map(|_| {
            let tones: Vec<(f64, f64, f64)> = (0..rng.random_range(0..4))
                .map(|_| {
                    (
                        rng.random_range(2.5..200.0),
                        rng.random_range(0.0..400.0),
                        rng.random_range(0.0..2.0 * PI),
                    )
                })
                .collect();
            let noise = rng.random_range(0.0..50.0);
            (0..len)
                .map(|t| {
                    tones
                        .iter()
                        .map(|(p, a, ph)| a * (2.0 * PI * t as f64 / p + ph).sin())
                        .sum::<f64>()
                        + noise * rng.random_range(-1.0..1.0)
                })
                .collect()
        })
        .collect();
    MultivariateSignal::new(channels, 1.0).unwrap()
}

fn cfg(k: usize, s: usize) -> SiftConfig {
    SiftConfig {
        n_directions: k,
        n_siftings: s,
        ..SiftConfig::default()
    }
}

#[test]
fn reconstruction_fuzz_both_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..100 {
        let x = fuzz_signal(&mut rng);
        let k = rng.random_range(2..=8);
        let m = rng.random_range(1..=4);
        let cfg = cfg(k, rng.random_range(1..=4));
        let dirs = DirectionSet::hammersley(x.n_channels(), k).unwrap();

        let stack = decompose(&RealPath, &x, &dirs, m, &cfg).unwrap();
        let back = stack.reconstruct(&RealPath);
        for (a, b) in back.channels().iter().zip(x.channels()) {
            for (p, q) in a.iter().zip(b) {
                assert!((p - q).abs() <= 1e-9, "case {case}: {p} vs {q}");
            }
        }

        let path = FixedPath::new();
        let xq = path.quantize_signal(&x);
        let stack = decompose(&path, &xq, &dirs, m, &cfg).unwrap();
        assert!(!path.overflowed(), "case {case}");
        assert_eq!(stack.reconstruct(&path), xq, "case {case}");
    }
}

#[test]
fn power_of_two_scaling_commutes_with_decomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let x = fuzz_signal(&mut rng);
        let dirs = DirectionSet::hammersley(x.n_channels(), 6).unwrap();
        let cfg = cfg(6, 3);
        let base = decompose(&RealPath, &x, &dirs, 3, &cfg).unwrap();
        for scale in [0.25, 2.0, 1024.0] {
            let scaled = decompose(&RealPath, &x.map(|v| v * scale), &dirs, 3, &cfg).unwrap();
            assert_eq!(scaled.extracted, base.extracted);
            for (a, b) in scaled.imfs.iter().zip(&base.imfs) {
                assert_eq!(*a, b.map(|v| v * scale));
            }
        }
        let scaled = decompose(&RealPath, &x.map(|v| v * 3.7), &dirs, 3, &cfg).unwrap();
        for (a, b) in scaled.imfs.iter().zip(&base.imfs) {
            for (p, q) in a.channels().iter().zip(b.channels()) {
                for (u, v) in p.iter().zip(q) {
                    assert!((u - 3.7 * v).abs() <= 1e-9 * (1.0 + u.abs()));
                }
            }
        }
    }
}

#[test]
fn constant_input_is_all_residue() {
    let x = MultivariateSignal::new(vec![vec![7.5; 64], vec![-2.0; 64]], 1.0).unwrap();
    let dirs = DirectionSet::hammersley(2, 8).unwrap();
    let stack = decompose(&RealPath, &x, &dirs, 4, &SiftConfig::default()).unwrap();
    assert_eq!(stack.extracted, 0);
    assert!(stack.imfs.iter().all(|m| m.is_zero()));
    assert_eq!(stack.residue, x);
}

fn stream_matches_batch<P: ArithPath>(path: P, x: &MultivariateSignal<P::Scalar>, k: usize, m: usize) {
    let dirs = DirectionSet::hammersley(x.n_channels(), k).unwrap();
    let cfg = cfg(k, 2);
    let batch = decompose(&path, x, &dirs, m, &cfg).unwrap();
    let stream = StreamConfig {
        n_imfs: m,
        k_max: 4096,
    };
    let (run, _) = stream_decompose(path, x, &dirs, &cfg, stream).unwrap();
    assert_eq!(run.provisional_emissions, 0);
    assert_eq!(run.stack.imfs, batch.imfs);
    assert_eq!(run.stack.residue, batch.residue);
}

#[test]
fn streaming_equals_batch_on_fuzz_signals() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..25 {
        let x = fuzz_signal(&mut rng);
        let k = rng.random_range(2..=6);
        let m = rng.random_range(1..=3);
        stream_matches_batch(RealPath, &x, k, m);
        let xq = FixedPath::new().quantize_signal(&x);
        stream_matches_batch(FixedPath::new(), &xq, k, m);
    }
}

/// Long run with a light configuration: the buffer never exceeds its bound
/// and no output is emitted provisionally.
#[test]
fn soak_buffer_stays_bounded() {
    let cfg = cfg(4, 2);
    let dirs = DirectionSet::hammersley(2, 4).unwrap();
    let stream = StreamConfig {
        n_imfs: 2,
        k_max: DEFAULT_K_MAX,
    };
    let mut state = StreamState::new(RealPath, dirs, cfg, stream).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut emitted = 0;
    let mut max_buffered = 0;
    for t in 0..200_000 {
        let tf = t as f64;
        let sample = [
            (tf * 0.9).sin() + 0.5 * (tf * 0.07).sin() + 0.1 * rng.random_range(-1.0..1.0),
            (tf * 0.6).cos() + 0.5 * (tf * 0.05).sin() + 0.1 * rng.random_range(-1.0..1.0),
        ];
        emitted += state.push(&sample).unwrap().len();
        max_buffered = max_buffered.max(state.buffered());
    }
    emitted += state.flush().unwrap().len();
    assert!(max_buffered <= state.buffer_bound(), "{max_buffered} > {}", state.buffer_bound());
    assert_eq!(state.provisional_emissions(), 0);
    assert_eq!(emitted, 200_000 * 3);
}
