//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Tolerances are fixed constants below.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use imputekit::io;
use imputekit::methods::{impute, Method, Settings};
use imputekit_core::dae::{self, corrupt, DaeArchitecture, StopReason, TrainConfig};
use imputekit_core::data::{self, ColumnKind, ColumnSchema, Dataset, Value};
use imputekit_core::downstream::{self, EvalConfig};
use imputekit_core::metrics::{self, ScoreScope};
use imputekit_core::missingness::{self, Mechanism, MissingnessSpec, Pattern};
use imputekit_core::nn::gradient_check;
use imputekit_core::rng::{self, Stream};
use imputekit_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn workers() -> usize {
    imputekit::parallel::default_workers()
}

/// Six continuous columns sharing one latent factor: `x_j = z + 0.4·e_j`,
/// population correlation 1 / 1.16 ≈ 0.86.
fn correlated(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = (0..6).map(|j| ColumnSchema::continuous(format!("x{j}"))).collect();
    let rows = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (0..6)
                .map(|_| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    Some(Value::Num(z + 0.4 * e))
                })
                .collect()
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

/// Five correlated continuous columns plus a binary class from the latent.
fn correlated_classes(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut schema: Vec<ColumnSchema> = (0..5).map(|j| ColumnSchema::continuous(format!("x{j}"))).collect();
    schema.push(ColumnSchema::categorical("class", ["neg", "pos"]));
    let rows = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut row: Vec<Option<Value>> = (0..5)
                .map(|_| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    Some(Value::Num(z + 0.4 * e))
                })
                .collect();
            row.push(Some(Value::Level(u32::from(z > 0.0))));
            row
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

fn min_pairwise_correlation(ds: &Dataset) -> f64 {
    let n = ds.n_rows() as f64;
    let col = |c: usize| (0..ds.n_rows()).map(|r| ds.get(r, c).unwrap().as_f64()).collect::<Vec<_>>();
    let cols: Vec<Vec<f64>> = (0..ds.n_cols()).map(col).collect();
    let stats: Vec<(f64, f64)> = cols
        .iter()
        .map(|x| {
            let m = x.iter().sum::<f64>() / n;
            (m, (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt())
        })
        .collect();
    let mut lo = f64::INFINITY;
    for a in 0..cols.len() {
        for b in a + 1..cols.len() {
            let cov = cols[a]
                .iter()
                .zip(&cols[b])
                .map(|(x, y)| (x - stats[a].0) * (y - stats[b].0))
                .sum::<f64>()
                / n;
            lo = lo.min(cov / (stats[a].1 * stats[b].1));
        }
    }
    lo
}

fn scores(ds: &Dataset, spec: &MissingnessSpec, method: Method, seed: u64) -> (Vec<f64>, Vec<Dataset>) {
    let ind = missingness::induce(ds, spec).unwrap();
    let result = impute(&ind.observed, &Settings::new(method, 5, seed), workers()).unwrap();
    let s = result
        .score(ds, &ind.induced_mask, ScoreScope::AllMissing)
        .unwrap()
        .iter()
        .map(|r| r.rmse_sum)
        .collect();
    (s, result.completions)
}

fn c1_gradients() -> Outcome {
    const TOL: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let shapes = 50;
    for s in 0..shapes {
        let n = rng.gen_range(1..=10);
        let theta = rng.gen_range(0..=7);
        let mut net = dae::build_dae(n, theta, s).unwrap();
        for layer in net.layers_mut() {
            for b in &mut layer.bias {
                *b = rng.gen_range(-0.3..0.3);
            }
        }
        let rows = rng.gen_range(1..=6);
        let x = Matrix::from_vec(rows, n, (0..rows * n).map(|_| rng.gen()).collect()).unwrap();
        let y = Matrix::from_vec(rows, n, (0..rows * n).map(|_| rng.gen()).collect()).unwrap();
        let report = gradient_check(&net, &x, &y, 1e-3).unwrap();
        worst = worst.max(report.max_relative_error);
    }
    check(worst < TOL, format!("{shapes} shapes, max relative error {worst:.3e} (< {TOL:e})"))
}

fn c2_architecture() -> Outcome {
    let reference_case = DaeArchitecture::new(14, 7).widths();
    let mut bad = Vec::new();
    for n in 1..=30 {
        for theta in 0..=12 {
            let got = dae::build_dae(n, theta, 0).unwrap().widths();
            let want = vec![n, n + theta, n + 2 * theta, n + 3 * theta, n + 2 * theta, n + theta, n];
            if got != want {
                bad.push((n, theta));
            }
        }
    }
    check(
        bad.is_empty() && reference_case == [14, 21, 28, 35, 28, 21, 14],
        format!("390 (n, theta) pairs, mismatches {bad:?}; (14,7) -> {reference_case:?}"),
    )
}

fn c3_corruption() -> Outcome {
    let x = Matrix::filled(1000, 20, 1.0);
    let fractions: Vec<f64> = (0..10)
        .map(|seed| {
            let c = corrupt(&x, 0.5, &mut rng::stream(seed, Stream::Train));
            c.as_slice().iter().filter(|&&v| v == 0.0).count() as f64 / 20_000.0
        })
        .collect();
    let ok = fractions.iter().all(|f| (f - 0.5).abs() <= 0.02);
    check(ok, format!("zeroed fractions over 10 seeds {fractions:.4?} (0.5 ± 0.02)"))
}

fn lower_median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[(xs.len() - 1) / 2]
}

fn c4_missingness() -> Outcome {
    let big = correlated(10_000, 4);
    let ind = missingness::induce(&big, &MissingnessSpec::new(Mechanism::Mcar, Pattern::Uniform, 0.2, 4)).unwrap();
    let overall = ind.achieved_proportion;
    let mut detail = format!("MCAR/uniform t=0.2 N=10000 masked {overall:.4} ([0.18, 0.22])");
    let mut ok = (0.18..=0.22).contains(&overall);

    let m = big.n_cols();
    for pattern in [Pattern::Uniform, Pattern::Random] {
        for seed in 0..5 {
            let ind = missingness::induce(&big, &MissingnessSpec::new(Mechanism::Mnar, pattern, 0.4, seed)).unwrap();
            let d = ind.drivers.unwrap();
            let col = |c: usize| (0..big.n_rows()).map(|r| big.get(r, c).unwrap().as_f64()).collect::<Vec<_>>();
            let (m1, m2) = (lower_median(col(d.x1)), lower_median(col(d.x2)));
            let (mut masked_rows, mut violations) = (0, 0);
            for r in 0..big.n_rows() {
                if ind.induced_mask[r * m..(r + 1) * m].iter().any(|&b| b) {
                    masked_rows += 1;
                    let (a, b) = (big.get(r, d.x1).unwrap().as_f64(), big.get(r, d.x2).unwrap().as_f64());
                    if !(a <= m1 || b >= m2) {
                        violations += 1;
                    }
                }
            }
            ok &= violations == 0 && masked_rows > 0 && (m1, m2) == (d.m1, d.m2);
            if seed == 0 {
                detail += &format!("; MNAR/{pattern}: {masked_rows} masked rows, {violations} predicate violations");
            }
        }
    }
    check(ok, detail + " (5 seeds each)")
}

fn c5_mi_contract() -> Outcome {
    let truth = correlated(400, 5);
    let ind = missingness::induce(&truth, &MissingnessSpec::new(Mechanism::Mcar, Pattern::Random, 0.3, 5)).unwrap();
    let obs = &ind.observed;
    let settings = Settings::new(Method::Dae, 5, 5);
    let a = impute(obs, &settings, workers()).unwrap();
    let b = impute(obs, &settings, 1).unwrap();
    let mut observed_equal = true;
    let (mut missing, mut varied) = (0usize, 0usize);
    for r in 0..obs.n_rows() {
        for c in 0..obs.n_cols() {
            let vals: Vec<Value> = a.completions.iter().map(|d| d.get(r, c).unwrap()).collect();
            if obs.is_missing(r, c) {
                missing += 1;
                let mut bits: Vec<u64> = vals.iter().map(|v| v.as_f64().to_bits()).collect();
                bits.sort_unstable();
                bits.dedup();
                varied += usize::from(bits.len() >= 2);
            } else {
                let o = obs.get(r, c).unwrap().as_f64().to_bits();
                observed_equal &= vals.iter().all(|v| v.as_f64().to_bits() == o);
            }
        }
    }
    let frac = varied as f64 / missing as f64;
    let reproducible = a == b;
    check(
        a.completions.len() == 5 && observed_equal && frac >= 0.5 && reproducible,
        format!(
            "5 completions; observed cells identical: {observed_equal}; {varied}/{missing} missing cells vary ({frac:.3} ≥ 0.5); bitwise reproducible: {reproducible}"
        ),
    )
}

fn c6_correlation() -> Outcome {
    let ds = correlated(1000, 6);
    let rho = min_pairwise_correlation(&ds);
    let spec = MissingnessSpec::new(Mechanism::Mcar, Pattern::Uniform, 0.2, 6);
    let (dae, _) = scores(&ds, &spec, Method::Dae, 6);
    let (mm, _) = scores(&ds, &spec, Method::Meanmode, 6);
    let (pd, pm) = (metrics::pool(&dae).unwrap(), metrics::pool(&mm).unwrap());
    let er = metrics::error_ratio(&dae, &mm).unwrap();
    // Diagnostic: uniform masking hides whole rows, so no imputer sees more
    // than the placeholder row. The best constant fill (true mean of the
    // masked cells per column) bounds what any method can reach.
    let ind = missingness::induce(&ds, &spec).unwrap();
    let mut oracle = ind.observed.clone();
    for c in 0..ds.n_cols() {
        let rows: Vec<usize> = (0..ds.n_rows()).filter(|&r| ind.observed.is_missing(r, c)).collect();
        let mean = rows.iter().map(|&r| ds.get(r, c).unwrap().as_f64()).sum::<f64>() / rows.len() as f64;
        rows.iter().for_each(|&r| oracle.set(r, c, Some(Value::Num(mean))));
    }
    let best = metrics::score_completion(&oracle, &ds, &ind.induced_mask, ScoreScope::AllMissing)
        .unwrap()
        .rmse_sum;
    check(
        rho >= 0.8 && pd.mean < pm.mean && er < 0.9,
        format!(
            "min pairwise corr {rho:.3}; dae {pd} (mean {:.4}) vs meanmode {pm} (mean {:.4}); E_R {er:.4} (< 0.9); \
             best constant fill {best:.4}, its E_R {:.4}",
            pd.mean,
            pm.mean,
            best / pm.mean
        ),
    )
}

fn c7_boston() -> Outcome {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/boston_housing.csv");
    let ds = io::read_csv(&path, None).map_err(|e| format!("{e:#}"))?;
    let spec = MissingnessSpec::new(Mechanism::Mcar, Pattern::Uniform, 0.2, 7);
    let (s, _) = scores(&ds, &spec, Method::Dae, 7);
    let p = metrics::pool(&s).unwrap();
    check(
        ds.n_rows() == 506 && ds.n_cols() == 14 && (2.0..=4.2).contains(&p.mean),
        format!("{}x{} table; dae RMSE_sum {p} (mean {:.4}, band [2.0, 4.2])", ds.n_rows(), ds.n_cols(), p.mean),
    )
}

fn c8_sweep() -> Outcome {
    let ds = correlated(1000, 6);
    let mut ok = true;
    let mut parts = Vec::new();
    for t in [0.2, 0.4, 0.6] {
        let spec = MissingnessSpec::new(Mechanism::Mnar, Pattern::Uniform, t, 8);
        let (dae, _) = scores(&ds, &spec, Method::Dae, 8);
        let (ce, _) = scores(&ds, &spec, Method::Cepmm, 8);
        let er = metrics::error_ratio(&dae, &ce).unwrap();
        ok &= er < 1.1;
        parts.push(format!("t={t}: E_R {er:.4}"));
    }
    check(ok, format!("MNAR/uniform dae vs cepmm: {} (< 1.1)", parts.join(", ")))
}

fn c9_downstream() -> Outcome {
    let ds = correlated_classes(1000, 9);
    let spec = MissingnessSpec::new(Mechanism::Mnar, Pattern::Uniform, 0.2, 9);
    let cfg = EvalConfig {
        seed: 9,
        ..EvalConfig::new("class")
    };
    let (_, dae) = scores(&ds, &spec, Method::Dae, 9);
    let (_, mm) = scores(&ds, &spec, Method::Meanmode, 9);
    let out = downstream::compare_methods(&[("dae", &dae), ("meanmode", &mm)], Some(&ds), &cfg).unwrap();
    let (a, b, t) = (out[0].score, out[1].score, out[2].score);
    check(
        a >= b - 0.02,
        format!("5x5-CV k-NN accuracy: dae {a:.4}, meanmode {b:.4} (dae ≥ meanmode − 0.02), truth {t:.4}"),
    )
}

fn random_schema(rng: &mut ChaCha8Rng) -> Dataset {
    let m = rng.gen_range(1..=6);
    let n = rng.gen_range(2..=40);
    let schema: Vec<ColumnSchema> = (0..m)
        .map(|j| match rng.gen_range(0..3) {
            0 => ColumnSchema::continuous(format!("c{j}")),
            1 => ColumnSchema::categorical(format!("c{j}"), (0..rng.gen_range(1..=5)).map(|l| format!("l{l}"))),
            _ => ColumnSchema::ordinal(format!("c{j}"), (0..rng.gen_range(1..=5)).map(|l| format!("o{l}"))),
        })
        .collect();
    let rows = (0..n)
        .map(|r| {
            schema
                .iter()
                .map(|col| {
                    // row 0 keeps every column encodable
                    if r > 0 && rng.gen_bool(0.2) {
                        return None;
                    }
                    Some(match col.kind {
                        ColumnKind::Continuous => Value::Num(rng.gen_range(-1e3..1e3)),
                        _ => Value::Level(rng.gen_range(0..col.categories.len() as u32)),
                    })
                })
                .collect()
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

fn c10_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut codec_fail, mut csv_fail, mut worst) = (0, 0, 0.0f64);
    for _ in 0..100 {
        let ds = random_schema(&mut rng);
        let enc = data::encode(&ds).unwrap();
        let back = data::decode(&enc.values, &enc).unwrap();
        for r in 0..ds.n_rows() {
            for c in 0..ds.n_cols() {
                match (ds.get(r, c), back.get(r, c)) {
                    (None, _) => {}
                    (Some(Value::Num(a)), Some(Value::Num(b))) => {
                        let rel = (a - b).abs() / a.abs().max(1.0);
                        worst = worst.max(rel);
                        codec_fail += usize::from(rel > 1e-12);
                    }
                    (a, b) => codec_fail += usize::from(a != b),
                }
            }
        }
        let bytes = io::csv_bytes(&ds).unwrap();
        let marks = String::from_utf8_lossy(&bytes).matches('?').count();
        let loaded = io::parse_csv(&bytes, Some(ds.schema().to_vec())).unwrap();
        csv_fail += usize::from(loaded != ds || marks != ds.missing_count());
    }
    check(
        codec_fail == 0 && csv_fail == 0,
        format!(
            "100 random schemas; decode∘encode mismatches {codec_fail} (worst relative {worst:.1e}); CSV write→load mismatches {csv_fail}"
        ),
    )
}

fn c11_early_stopping() -> Outcome {
    let constant = Matrix::filled(1000, 4, 0.6);
    let cfg = TrainConfig {
        input_dropout: 0.3,
        seed: 2,
        ..TrainConfig::default()
    };
    let net = dae::build_dae(4, 7, 2).unwrap();
    let (_, h) = dae::train_on_matrix(net, &constant, None, &cfg).unwrap();
    let stopped = h.epochs_run < 500 && matches!(h.stop_reason, StopReason::TargetMse | StopReason::SmaStall);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut within = true;
    for i in 0..20 {
        let budget = rng.gen_range(1..=40);
        let (rows, cols) = (rng.gen_range(1..=60), rng.gen_range(1..=5));
        let x = Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen()).collect()).unwrap();
        let cfg = TrainConfig {
            epochs: budget,
            seed: i,
            ..TrainConfig::default()
        };
        let (_, hist) = dae::train_on_matrix(dae::build_dae(cols, 3, i).unwrap(), &x, None, &cfg).unwrap();
        within &= hist.epochs_run <= budget && hist.losses.len() == hist.epochs_run;
    }
    check(
        stopped && within,
        format!(
            "constant data stopped at epoch {} with {:?}; 20 random inputs within budget: {within}",
            h.epochs_run, h.stop_reason
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 gradient correctness", c1_gradients),
        ("2 architecture widths", c2_architecture),
        ("3 corruption rate", c3_corruption),
        ("4 missingness proportions", c4_missingness),
        ("5 multiple-imputation contract", c5_mi_contract),
        ("6 correlation preservation", c6_correlation),
        ("7 Boston Housing scale", c7_boston),
        ("8 missingness sweep", c8_sweep),
        ("9 downstream preservation", c9_downstream),
        ("10 round trips", c10_round_trips),
        ("11 early stopping", c11_early_stopping),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
