use microstate_rqa::experiments::{
    sweep_logistic, sweep_lorenz, sweep_sine_noise, Experiment, SweepSettings, DEFAULT_OMEGA,
    LORENZ_SAMPLES,
};
use microstate_rqa::microstates::max_entropy;
use microstate_rqa::LorenzParams;

fn settings(seed: u64) -> SweepSettings {
    SweepSettings {
        seed,
        ..SweepSettings::default()
    }
}

#[test]
fn sine_noise_minimum_saturation_and_bound() {
    let p = Experiment::SineNoise {
        omega: DEFAULT_OMEGA,
    }
    .default_grid();
    let res = sweep_sine_noise(&p, DEFAULT_OMEGA, &settings(11)).unwrap();
    for n in [2, 3, 4] {
        let s = res.column(&format!("s{n}")).unwrap();
        let max = s.iter().cloned().fold(f64::MIN, f64::max);
        let min = s.iter().cloned().fold(f64::MAX, f64::min);
        assert_eq!(s[0], min, "n={n}: p=0 is not the minimum");
        assert!(
            *s.last().unwrap() >= 0.9 * max,
            "n={n}: no saturation at p=2"
        );
        assert!(max <= max_entropy(n));
    }
}

#[test]
fn logistic_window_and_chaos() {
    let res = sweep_logistic(
        &[2.8, 3.5, 3.78, 3.83, 3.88, 3.99],
        0.0,
        100_000,
        &settings(2),
    )
    .unwrap();
    let s = |r| res.value_near(r, "s4").unwrap();
    assert!(s(3.99) > s(3.5));
    assert!(s(3.83) < s(3.78) && s(3.83) < s(3.88));
    assert!(s(2.8) < 1e-9);
}

#[test]
fn lorenz_chaos_and_fixed_point() {
    let s = SweepSettings {
        n_list: vec![4],
        samples: LORENZ_SAMPLES,
        ..settings(3)
    };
    let template = LorenzParams::default();
    let res = sweep_lorenz(&[0.5, 20.0, 28.0], template, &s).unwrap();
    let s4 = |r| res.value_near(r, "s4").unwrap();
    assert!(s4(28.0) - s4(20.0) >= 2.0, "{} {}", s4(28.0), s4(20.0));
    assert!(s4(28.0) < max_entropy(4));
    // The orbit decays exponentially towards the origin rather than becoming
    // constant, and normalization rescales that decay to full range. Its
    // plot is a smooth band, so S stays a few percent of the bound.
    assert!(
        s4(0.5) < 0.05 * max_entropy(4),
        "origin fixed point S4 = {}",
        s4(0.5)
    );
    // Below the chaotic threshold the orbit settles on a fixed point and has
    // no z maxima left after the transient; the chaotic orbit keeps them coming.
    let params: Vec<f64> = res.bifurcation.iter().map(|b| b.param).collect();
    assert_eq!(params, [28.0]);
    assert_eq!(res.bifurcation[0].values.len(), s.bifurcation_samples);
}
