use memd_core::extrema::{
    dedup_adjacent, detect_extrema, ExtremaRecord, ExtremaStream, Polarity, TiePolicy,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn better(p: Polarity, a: f64, b: f64) -> bool {
    match p {
        Polarity::Maxima => a > b,
        Polarity::Minima => a < b,
    }
}

/// Every interior triple whose middle sample is not beaten by either neighbour.
fn triple_scan(x: &[f64], p: Polarity) -> Vec<usize> {
    (1..x.len() - 1)
        .filter(|&t| !better(p, x[t - 1], x[t]) && !better(p, x[t + 1], x[t]))
        .collect()
}

/// First sample of every plateau entered and left in the turning direction.
fn plateau_scan(x: &[f64], p: Polarity) -> Vec<usize> {
    let mut out = Vec::new();
    let mut a = 0;
    while a < x.len() {
        let mut b = a;
        while b + 1 < x.len() && x[b + 1] == x[a] {
            b += 1;
        }
        if a > 0 && b + 1 < x.len() && better(p, x[a], x[a - 1]) && better(p, x[b], x[b + 1]) {
            out.push(a);
        }
        a = b + 1;
    }
    out
}

fn indices(r: &[ExtremaRecord<f64>]) -> Vec<usize> {
    r.iter().map(|r| r.index).collect()
}

fn coarse() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0..5i32).prop_map(f64::from), 3..200)
}

fn fine() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, 3..300)
}

#[test]
fn random_thousand_sample_signal_matches_triple_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
    for p in Polarity::BOTH {
        let got = detect_extrema(&x, p, TiePolicy::PaperFaithful).unwrap();
        assert_eq!(indices(&got), triple_scan(&x, p));
        assert!(got.iter().all(|r| r.value == x[r.index] && r.kind == p));
    }
}

proptest! {
    #[test]
    fn paper_faithful_matches_triple_scan(x in prop_oneof![coarse(), fine()]) {
        for p in Polarity::BOTH {
            let got = detect_extrema(&x, p, TiePolicy::PaperFaithful).unwrap();
            prop_assert_eq!(indices(&got), triple_scan(&x, p));
        }
    }

    #[test]
    fn strict_first_matches_plateau_scan(x in prop_oneof![coarse(), fine()]) {
        for p in Polarity::BOTH {
            let got = detect_extrema(&x, p, TiePolicy::StrictFirst).unwrap();
            prop_assert_eq!(indices(&got), plateau_scan(&x, p));
        }
    }

    #[test]
    fn strict_first_extrema_alternate(x in prop_oneof![coarse(), fine()]) {
        let mut all = detect_extrema(&x, Polarity::Maxima, TiePolicy::StrictFirst).unwrap();
        all.extend(detect_extrema(&x, Polarity::Minima, TiePolicy::StrictFirst).unwrap());
        all.sort_by_key(|r| r.index);
        for w in all.windows(2) {
            prop_assert!(w[0].index < w[1].index);
            prop_assert_ne!(w[0].kind, w[1].kind);
        }
    }

    /// Nothing is emitted before the index the stream declares pending.
    #[test]
    fn pending_bound_holds(x in prop_oneof![coarse(), fine()]) {
        for policy in [TiePolicy::PaperFaithful, TiePolicy::StrictFirst] {
            for p in Polarity::BOTH {
                let mut s = ExtremaStream::new(p, policy);
                let mut floor = 0;
                for (t, &v) in x.iter().enumerate() {
                    if let Some(r) = s.push(v, t).unwrap() {
                        prop_assert!(r.index >= floor);
                    }
                    floor = s.pending_from().unwrap_or(t + 1);
                    prop_assert!(floor <= t + 1);
                }
            }
        }
    }

    #[test]
    fn dedup_removes_only_adjacent_repeats(x in coarse()) {
        let raw = detect_extrema(&x, Polarity::Maxima, TiePolicy::PaperFaithful).unwrap();
        let mut kept = raw.clone();
        dedup_adjacent(&mut kept);
        for w in kept.windows(2) {
            prop_assert!(!(w[1].index == w[0].index + 1 && w[1].value == w[0].value));
        }
        for (i, r) in raw.iter().enumerate() {
            let dropped = !kept.contains(r);
            let repeat = i > 0 && raw[i - 1].index + 1 == r.index && raw[i - 1].value == r.value;
            prop_assert_eq!(dropped, repeat);
        }
    }
}

#[test]
fn index_gaps_are_rejected() {
    let mut s = ExtremaStream::new(Polarity::Maxima, TiePolicy::PaperFaithful);
    s.push(1.0, 0).unwrap();
    assert!(s.push(2.0, 2).is_err());
}
