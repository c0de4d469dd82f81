mod common;

use microstate_rqa::experiments::{sweep_epsilon_white_noise, SweepSettings};
use microstate_rqa::microstates::{
    encode_microstate, exhaustive_microstates, rr_oracle, total_variation, MicrostateSampler,
};
use microstate_rqa::recurrence::build_rp;
use microstate_rqa::rqa::{self, diagonal_dist, vertical_dist, RqaSummary};
use microstate_rqa::signals::gen_white_noise;
use microstate_rqa::{Norm, RecurrencePlot, TimeSeries};
use proptest::prelude::*;

fn from_dense(m: &common::Dense) -> RecurrencePlot {
    RecurrencePlot::from_fn(m.len(), 0.5, |i, j| m[i][j]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn packed_rp_matches_dense(
        values in prop::collection::vec(-100.0f64..100.0, 2..200),
        eps in 0.001f64..1.0,
    ) {
        let series = TimeSeries::new(values.clone(), "prop").unwrap();
        let rp = build_rp(&series, eps, Norm::Absolute).unwrap();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(hi - lo > 1e-9 * lo.abs().max(hi.abs()));
        prop_assert_eq!(rp.to_dense(), common::dense_rp(&values, eps));
    }

    #[test]
    fn line_quantifiers_match_dense(k in 1usize..150, density in 0.0f64..1.0, seed: u64) {
        let m = common::random_dense(k, density, seed);
        let rp = from_dense(&m);
        let diag = diagonal_dist(&rp);
        let vert = vertical_dist(&rp);
        prop_assert_eq!(&diag.counts, &common::diagonal_lines(&m));
        prop_assert_eq!(&vert.counts, &common::vertical_lines(&m));
        prop_assert_eq!(rqa::det(&diag, &rp, 2), common::det(&m, 2));
        prop_assert_eq!(rqa::lam(&vert, &rp, 2), common::lam(&m, 2));
        prop_assert_eq!(rqa::entr_diag(&diag, 2), common::entr(&m, 2));
        prop_assert_eq!(rqa::div(&diag), common::div(&m).unwrap_or(rqa::DIV_NO_LINES));
    }

    #[test]
    fn exhaustive_matches_block_scan(k in 5usize..40, density in 0.0f64..1.0, seed: u64, n in 2usize..=5) {
        let m = common::random_dense(k, density, seed);
        let rp = from_dense(&m);
        let h = exhaustive_microstates(&rp, n).unwrap();
        prop_assert_eq!(&h.counts, &common::block_histogram(&m, n));
        prop_assert_eq!(h.samples, ((k - n + 1) * (k - n + 1)) as u64);
        let code = encode_microstate(&rp, 0, k - n, n).unwrap();
        prop_assert!(h.counts.contains_key(&code));
    }

    #[test]
    fn quantifiers_in_unit_interval(values in prop::collection::vec(0.0f64..1.0, 3..120), eps in 0.01f64..1.0) {
        let series = TimeSeries::new(values, "prop").unwrap();
        let s = RqaSummary::compute(&build_rp(&series, eps, Norm::Absolute).unwrap(), 2, 2);
        for v in [s.rr, s.det, s.lam] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(s.entr >= 0.0);
        prop_assert!(s.div > 0.0);
    }
}

#[test]
fn sampler_converges_to_exhaustive() {
    let mut mean_tv = Vec::new();
    for samples in [1_000u64, 10_000, 100_000] {
        let mut total = 0.0;
        for seed in 0..10 {
            let rp = from_dense(&common::random_dense(64, 0.3, 500 + seed));
            let full = exhaustive_microstates(&rp, 3).unwrap();
            let h = MicrostateSampler::new(3, samples, seed)
                .sample(&rp)
                .unwrap();
            total += total_variation(&h, &full);
        }
        mean_tv.push(total / 10.0);
    }
    // Multinomial noise shrinks like 1/sqrt(N).
    assert!(
        mean_tv[0] > mean_tv[1] && mean_tv[1] > mean_tv[2],
        "{mean_tv:?}"
    );
    assert!(mean_tv[2] < 0.05, "{mean_tv:?}");
    let ratio = mean_tv[1] / mean_tv[2];
    assert!((2.0..4.5).contains(&ratio), "{mean_tv:?}");
}

#[test]
fn white_noise_rr_tracks_oracle_at_large_m() {
    let series = gen_white_noise(10_000, 77).unwrap();
    for eps in [0.02, 0.1, 0.2, 0.293, 0.4, 0.5, 0.7] {
        let rr = microstate_rqa::recurrence::recurrence_rate(
            &build_rp(&series, eps, Norm::Absolute).unwrap(),
        );
        assert!(
            (rr - rr_oracle(eps).unwrap()).abs() <= 0.02,
            "eps {eps}: {rr}"
        );
    }
}

#[test]
fn sweep_rr_column_tracks_oracle_column() {
    let settings = SweepSettings {
        n_list: vec![2],
        length: 2000,
        samples: 1000,
        seed: 4,
        ..SweepSettings::default()
    };
    let res = sweep_epsilon_white_noise(&[0.1, 0.3, 0.5], &settings).unwrap();
    let rr = res.column("rr").unwrap();
    let oracle = res.column("rr_oracle").unwrap();
    for (a, b) in rr.iter().zip(&oracle) {
        assert!((a - b).abs() < 0.03, "{a} vs {b}");
    }
}
