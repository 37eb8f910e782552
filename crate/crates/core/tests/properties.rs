use imputekit_core::dae::{self, corrupt, DaeArchitecture};
use imputekit_core::data::{self, ColumnSchema, Dataset, Value};
use imputekit_core::metrics::{error_ratio, rmse_sum, ScoreScope};
use imputekit_core::missingness::{induce, Mechanism, MissingnessSpec, Pattern};
use imputekit_core::nn::{gradient_check, Activation, DenseLayer, Network};
use imputekit_core::rng::{self, Stream};
use imputekit_core::Matrix;
use proptest::prelude::*;
use rand::Rng;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = rng::stream(seed, Stream::Train);
    let data = (0..rows * cols).map(|_| rng.gen::<f64>()).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

fn random_net(widths: &[usize], seed: u64) -> Network {
    let mut rng = rng::stream(seed, Stream::Init);
    let last = widths.len() - 2;
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let weights = imputekit_core::nn::uniform_weights(w[1], w[0], None, &mut rng);
            let bias = (0..w[1]).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let act = if i == last { Activation::Identity } else { Activation::Tanh };
            DenseLayer::new(weights, bias, act).unwrap()
        })
        .collect();
    Network::new(layers).unwrap()
}

fn mixed_table(n: usize, seed: u64) -> Dataset {
    let mut rng = rng::stream(seed, Stream::Train);
    let schema = vec![
        ColumnSchema::continuous("a"),
        ColumnSchema::categorical("b", ["p", "q", "r"]),
        ColumnSchema::ordinal("c", ["lo", "mid", "hi"]),
        ColumnSchema::continuous("d"),
    ];
    let rows = (0..n)
        .map(|_| {
            vec![
                Some(Value::Num(rng.gen_range(-50.0..50.0))),
                Some(Value::Level(rng.gen_range(0..3))),
                Some(Value::Level(rng.gen_range(0..3))),
                Some(Value::Num(rng.gen_range(0.0..1e4))),
            ]
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn analytic_gradients_match_central_differences(
        widths in prop::collection::vec(1usize..7, 2..6),
        rows in 1usize..9,
        seed in any::<u64>(),
    ) {
        let net = random_net(&widths, seed);
        let x = random_matrix(rows, widths[0], seed ^ 1);
        let y = random_matrix(rows, *widths.last().unwrap(), seed ^ 2);
        let report = gradient_check(&net, &x, &y, 1e-3).unwrap();
        prop_assert!(report.max_relative_error < 1e-6, "{report:?}");
    }

    #[test]
    fn dae_widths_are_symmetric(n in 1usize..40, theta in 0usize..12) {
        let w = DaeArchitecture::new(n, theta).widths();
        prop_assert_eq!(w.len(), 7);
        prop_assert_eq!(w.clone(), w.iter().rev().copied().collect::<Vec<_>>());
        prop_assert_eq!(w[3], n + 3 * theta);
    }

    #[test]
    fn encode_decode_round_trip(n in 2usize..60, seed in any::<u64>()) {
        let ds = mixed_table(n, seed);
        let enc = data::encode(&ds).unwrap();
        prop_assert!(enc.values.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        let back = data::decode(&enc.values, &enc).unwrap();
        for r in 0..n {
            for c in 0..ds.n_cols() {
                match (ds.get(r, c).unwrap(), back.get(r, c).unwrap()) {
                    (Value::Num(a), Value::Num(b)) => prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0)),
                    (a, b) => prop_assert_eq!(a, b),
                }
            }
        }
    }

    #[test]
    fn split_is_a_partition(n in 2usize..500, ratio in 0.05f64..0.95, seed in any::<u64>()) {
        let s = data::split_indices(n, ratio, seed).unwrap();
        prop_assert_eq!(s.train.len(), (ratio * n as f64).round() as usize);
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(s, data::split_indices(n, ratio, seed).unwrap());
    }

    #[test]
    fn corruption_rate_tracks_dropout(p in 0.0f64..=1.0, seed in any::<u64>()) {
        let x = Matrix::filled(100, 100, 1.0);
        let c = corrupt(&x, p, &mut rng::stream(seed, Stream::Train));
        let zeroed = c.as_slice().iter().filter(|&&v| v == 0.0).count() as f64 / 1e4;
        // 5 standard deviations of a binomial proportion
        prop_assert!((zeroed - p).abs() <= 5.0 * (p * (1.0 - p) / 1e4).sqrt() + 1e-12);
        prop_assert!(c.as_slice().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn mcar_mask_ignores_values(
        n in 4usize..80,
        t in 0.0f64..=1.0,
        random in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let pattern = if random { Pattern::Random } else { Pattern::Uniform };
        let spec = MissingnessSpec::new(Mechanism::Mcar, pattern, t, seed);
        let a = induce(&mixed_table(n, 1), &spec).unwrap();
        let b = induce(&mixed_table(n, 2), &spec).unwrap();
        prop_assert_eq!(a.induced_mask, b.induced_mask);
    }

    #[test]
    fn rmse_sum_is_symmetric_and_row_order_free(n in 2usize..40, seed in any::<u64>()) {
        let truth = mixed_table(n, seed);
        let other = mixed_table(n, seed ^ 7);
        let encoding = data::Encoding::fit(&truth).unwrap();
        let t = encoding.encode(&truth).unwrap().values;
        let o = encoding.encode(&other).unwrap().values;
        let mask: Vec<bool> = (0..n * 4).map(|i| i % 3 != 0).collect();
        let ab = rmse_sum(&o, &t, &encoding, &mask, ScoreScope::AllMissing).unwrap();
        let ba = rmse_sum(&t, &o, &encoding, &mask, ScoreScope::AllMissing).unwrap();
        prop_assert_eq!(ab.rmse_sum, ba.rmse_sum);

        let perm: Vec<usize> = (0..n).rev().collect();
        let pmask: Vec<bool> = perm.iter().flat_map(|&r| mask[r * 4..r * 4 + 4].to_vec()).collect();
        let p = rmse_sum(&o.select_rows(&perm), &t.select_rows(&perm), &encoding, &pmask, ScoreScope::AllMissing).unwrap();
        prop_assert!((p.rmse_sum - ab.rmse_sum).abs() < 1e-12);
        prop_assert!(ab.rmse_sum >= 0.0);
        let zero = rmse_sum(&t, &t, &encoding, &mask, ScoreScope::AllMissing).unwrap();
        prop_assert_eq!(zero.rmse_sum, 0.0);
    }

    #[test]
    fn error_ratio_is_scale_invariant(
        a in prop::collection::vec(0.01f64..10.0, 1..8),
        b in prop::collection::vec(0.01f64..10.0, 1..8),
        s in 0.01f64..100.0,
    ) {
        let r = error_ratio(&a, &b).unwrap();
        let sa: Vec<f64> = a.iter().map(|x| x * s).collect();
        let sb: Vec<f64> = b.iter().map(|x| x * s).collect();
        prop_assert!((error_ratio(&sa, &sb).unwrap() - r).abs() <= 1e-12 * r.max(1.0));
        prop_assert!((error_ratio(&a, &a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reconstruction_stays_in_unit_interval(n in 1usize..6, seed in any::<u64>()) {
        let net = dae::build_dae(n, 7, seed).unwrap();
        let x = random_matrix(5, n, seed).map(|v| v * 40.0 - 20.0);
        let out = dae::reconstruct(&net, &x).unwrap();
        prop_assert!(out.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
