mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tnngen_core::column::{
    infer, neuron_response, neuron_response_hybrid, simulate_column, stdp_update, train_unsupervised,
    train_unsupervised_with, wta_inhibit, ColumnConfig, ResponseKind, SimMode, StdpParams, TieBreak, WeightInit,
    WeightMatrix, WtaConfig,
};
use tnngen_core::tsdata::{synthetic_two_class, EncoderConfig, Polarity, SpikeVolley, TimeSeriesDataset};
use tnngen_core::Error;

fn kind() -> impl Strategy<Value = ResponseKind> {
    prop_oneof![
        Just(ResponseKind::RampNoLeak),
        Just(ResponseKind::StepNoLeak),
        Just(ResponseKind::Lif)
    ]
}

fn times(p: usize, window: u32) -> impl Strategy<Value = Vec<Option<u32>>> {
    prop::collection::vec(prop::option::weighted(0.8, 0..window + 3), p)
}

fn neuron_case() -> impl Strategy<Value = (ResponseKind, Vec<u32>, Vec<Option<u32>>, u32, u32, u32)> {
    (kind(), 1usize..10, 1u32..20, 0u32..5).prop_flat_map(|(k, p, window, shift)| {
        (
            Just(k),
            prop::collection::vec(0u32..12, p),
            times(p, window),
            1u32..60,
            Just(window),
            Just(shift),
        )
    })
}

proptest! {
    #[test]
    fn both_modes_match_register_model((k, w, t, theta, window, shift) in neuron_case()) {
        let input_window = window + 3;
        let v = SpikeVolley::new(t.clone(), input_window).unwrap();
        let expected = common::register_level_neuron(k, &w, &t, theta, window, shift);
        prop_assert_eq!(neuron_response(k, &w, &v, theta, window, shift).unwrap(), expected);
        prop_assert_eq!(neuron_response_hybrid(k, &w, &v, theta, window, shift).unwrap(), expected);
    }

    #[test]
    fn stdp_probability_one_matches_rule(
        (p, q, w_max, seed) in (1usize..8, 1usize..5, 1u32..16, any::<u64>()),
        window in 1u32..12,
        xs in prop::collection::vec(prop::option::of(0u32..12), 8),
        ys in prop::collection::vec(prop::option::of(0u32..12), 5),
    ) {
        let w = WeightMatrix::uniform(q, p, w_max, seed).unwrap();
        let x: Vec<Option<u32>> = xs[..p].iter().map(|t| t.map(|t| t % window)).collect();
        let y: Vec<Option<u32>> = ys[..q].iter().map(|t| t.map(|t| t % window)).collect();
        let xv = SpikeVolley::new(x.clone(), window).unwrap();
        let yv = SpikeVolley::new(y.clone(), window).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = stdp_update(&w, &xv, &yv, &StdpParams::deterministic(seed), &mut rng).unwrap();
        for (j, &yj) in y.iter().enumerate() {
            for (i, &xi) in x.iter().enumerate() {
                prop_assert_eq!(out.get(j, i), common::stdp_rule(w.get(j, i), w_max, xi, yj));
            }
        }
    }

    #[test]
    fn wta_keeps_earliest_k(
        t in prop::collection::vec(prop::option::of(0u32..6), 1..8),
        k_raw in 1usize..8,
        random in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let k = 1 + (k_raw - 1) % t.len();
        let v = SpikeVolley::new(t.clone(), 6).unwrap();
        let tie_break = if random { TieBreak::SeededRandom } else { TieBreak::LowestIndex };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = wta_inhibit(&v, &WtaConfig { k, tie_break }, &mut rng).unwrap();
        let kept: Vec<usize> = (0..t.len()).filter(|&j| out.get(j).is_some()).collect();
        prop_assert!(kept.len() <= k);
        prop_assert_eq!(kept.len(), k.min(t.iter().flatten().count()));
        for &j in &kept {
            prop_assert_eq!(out.get(j), t[j]);
        }
        let latest_kept = kept.iter().filter_map(|&j| t[j]).max();
        for (j, tj) in t.iter().enumerate() {
            if let (Some(tj), None, Some(latest)) = (tj, out.get(j), latest_kept) {
                prop_assert!(*tj >= latest, "suppressed {j} at {tj} before kept time {latest}");
            }
        }
        if !random {
            // Lowest index wins among equal times.
            for &j in &kept {
                for (i, ti) in t.iter().enumerate().take(j) {
                    if *ti == t[j] {
                        prop_assert!(out.get(i).is_some());
                    }
                }
            }
        }
    }
}

fn two_class() -> TimeSeriesDataset {
    synthetic_two_class(40, 16, 0.3, 9).unwrap()
}

fn cfg(p: usize) -> ColumnConfig {
    ColumnConfig {
        p,
        q: 2,
        theta: 8,
        w_max: 7,
        window: 12,
        response: ResponseKind::RampNoLeak,
        lif_leak_shift: 0,
    }
}

fn enc() -> EncoderConfig {
    EncoderConfig::new(8, false, Polarity::HighEarly).unwrap()
}

#[test]
fn zero_epochs_returns_initial_weights() {
    let ds = two_class();
    let init = WeightMatrix::uniform(2, 16, 7, 4).unwrap();
    let w = train_unsupervised(
        &ds,
        &enc(),
        &cfg(16),
        &WtaConfig::default(),
        &StdpParams::deterministic(1),
        0,
        &WeightInit::Matrix(init.clone()),
    )
    .unwrap();
    assert_eq!(w, init);
}

#[test]
fn training_is_reproducible() {
    let ds = two_class();
    let params = StdpParams {
        u_capture: 0.6,
        u_backoff: 0.4,
        u_search: 0.1,
        seed: 77,
    };
    let wta = WtaConfig {
        k: 1,
        tie_break: TieBreak::SeededRandom,
    };
    let run = || {
        train_unsupervised(
            &ds,
            &enc(),
            &cfg(16),
            &wta,
            &params,
            3,
            &WeightInit::Uniform { seed: 5 },
        )
        .unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn observer_sees_every_sample() {
    let ds = two_class();
    let mut steps = Vec::new();
    train_unsupervised_with(
        &ds,
        &enc(),
        &cfg(16),
        &WtaConfig::default(),
        &StdpParams::deterministic(0),
        2,
        &WeightInit::Constant(3),
        |step, w| {
            assert!(w.max_weight() <= 7);
            steps.push(step);
        },
    )
    .unwrap();
    assert_eq!(steps, (0..80).collect::<Vec<_>>());
}

#[test]
fn dominant_neuron_takes_every_sample() {
    let ds = two_class();
    let mut rows = vec![vec![0u32; 16]; 2];
    rows[1] = vec![7; 16];
    let w = WeightMatrix::from_rows(rows, 7).unwrap();
    let out = infer(&ds, &enc(), &cfg(16), &w, &WtaConfig::default()).unwrap();
    assert!(out.assignments.iter().all(|a| *a == Some(1)));
    assert_eq!(out.cycles_per_sample, 8 + 12);
}

#[test]
fn silent_column_assigns_nothing() {
    let ds = two_class();
    let w = WeightMatrix::constant(2, 16, 0, 7).unwrap();
    let out = infer(&ds, &enc(), &cfg(16), &w, &WtaConfig::default()).unwrap();
    assert!(out.assignments.iter().all(Option::is_none));
}

#[test]
fn series_length_must_match_p() {
    let ds = two_class();
    let w = WeightMatrix::constant(2, 15, 1, 7).unwrap();
    let err = infer(&ds, &enc(), &cfg(15), &w, &WtaConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Shape(_)));
}

#[test]
fn column_modes_agree_on_dataset() {
    let ds = two_class();
    let w = WeightMatrix::uniform(2, 16, 7, 3).unwrap();
    for kind in [ResponseKind::RampNoLeak, ResponseKind::StepNoLeak, ResponseKind::Lif] {
        let c = ColumnConfig {
            response: kind,
            theta: 20,
            lif_leak_shift: 2,
            ..cfg(16)
        };
        for s in ds.samples() {
            let v = tnngen_core::tsdata::encode(&s.values, &enc()).unwrap();
            assert_eq!(
                simulate_column(&c, &w, &v, SimMode::Hybrid).unwrap(),
                simulate_column(&c, &w, &v, SimMode::CycleAccurate).unwrap()
            );
        }
    }
}

fn no_leak() -> impl Strategy<Value = ResponseKind> {
    prop_oneof![Just(ResponseKind::RampNoLeak), Just(ResponseKind::StepNoLeak)]
}

proptest! {
    #[test]
    fn output_never_precedes_earliest_input((k, w, t, theta, window, shift) in neuron_case()) {
        let v = SpikeVolley::new(t.clone(), window + 3).unwrap();
        if let Some(out) = neuron_response(k, &w, &v, theta, window, shift).unwrap() {
            let earliest = t.iter().zip(&w).filter(|(_, w)| **w > 0).filter_map(|(t, _)| *t).min();
            prop_assert!(earliest.is_some_and(|e| out >= e));
        }
    }

    #[test]
    fn raising_a_weight_never_delays_output(
        (k, w, t, theta, window, _) in (no_leak(), 1usize..10, 1u32..20).prop_flat_map(|(k, p, window)| {
            (Just(k), prop::collection::vec(0u32..12, p), times(p, window), 1u32..60, Just(window), Just(0u32))
        }),
        pick in any::<prop::sample::Index>(),
        bump in 1u32..5,
    ) {
        let v = SpikeVolley::new(t, window + 3).unwrap();
        let before = neuron_response(k, &w, &v, theta, window, 0).unwrap();
        let mut raised = w.clone();
        raised[pick.index(w.len())] += bump;
        let after = neuron_response(k, &raised, &v, theta, window, 0).unwrap();
        match (before, after) {
            (Some(b), Some(a)) => prop_assert!(a <= b),
            (Some(_), None) => prop_assert!(false, "raising a weight silenced the neuron"),
            _ => {}
        }
    }

    #[test]
    fn weights_stay_in_range(
        (p, q, w_max, seed) in (1usize..8, 1usize..5, 1u32..10, any::<u64>()),
        u in (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0),
        steps in prop::collection::vec(
            (prop::collection::vec(prop::option::of(0u32..8), 8), prop::collection::vec(prop::option::of(0u32..8), 5)),
            1..20,
        ),
    ) {
        let params = StdpParams { u_capture: u.0, u_backoff: u.1, u_search: u.2, seed };
        let mut w = WeightMatrix::uniform(q, p, w_max, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (xs, ys) in steps {
            let x = SpikeVolley::new(xs[..p].to_vec(), 8).unwrap();
            let y = SpikeVolley::new(ys[..q].to_vec(), 8).unwrap();
            w = stdp_update(&w, &x, &y, &params, &mut rng).unwrap();
            prop_assert!(w.max_weight() <= w_max);
        }
    }
}

#[test]
fn single_column_network_matches_column_then_wta() {
    use tnngen_core::column::{simulate_network, NetworkConfig};
    let c = cfg(16);
    let w = WeightMatrix::uniform(2, 16, 7, 8).unwrap();
    let net = NetworkConfig::single(c, WtaConfig::default());
    for s in two_class().samples() {
        let v = tnngen_core::tsdata::encode(&s.values, &enc()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let direct = wta_inhibit(
            &simulate_column(&c, &w, &v, SimMode::CycleAccurate).unwrap(),
            &WtaConfig::default(),
            &mut rng,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            simulate_network(&net, &[vec![w.clone()]], &v, &mut rng).unwrap(),
            direct
        );
    }
}
