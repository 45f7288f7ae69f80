//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ndarray::{array, Array2};
use ndeso::bundled;
use ndeso::dataset::{generate_synthetic, DEFAULT_NOISE_SCALE, DEFAULT_SYNTHETIC_COUNTS};
use ndeso::geometry::{DistanceMetric, NeighborIndex};
use ndeso::harness::{n_splits, run_experiment, run_grid, ClassifierSpec, RESULTS_HEADER};
use ndeso::metrics::{confusion_matrix, gmean, ConfusionMatrix};
use ndeso::nde::{count_noisy, displace, nde, DisplacementPlan, NdeConfig};
use ndeso::resample::{ndeso as run_ndeso, resample, ResamplerSpec};
use ndeso::rng::{DetRng, DEFAULT_SEED};
use ndeso::stats::{friedman, nemenyi_cd, Alpha, ScoreTable};
use ndeso::Dataset;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

fn synthetic(seed: u64) -> Dataset {
    generate_synthetic(seed, &DEFAULT_SYNTHETIC_COUNTS, DEFAULT_NOISE_SCALE).unwrap()
}

fn balance_exactness() -> Result<String, String> {
    let start = Instant::now();
    let mut runs = 0;
    for seed in 1..=10u64 {
        let ds = synthetic(seed);
        for k in [2, 5, 11, 15, 21, 25] {
            for metric in DistanceMetric::SWEEP {
                let out = run_ndeso(&ds, &NdeConfig::new(k, metric), &mut DetRng::seed_from(seed))
                    .map_err(|e| format!("seed {seed}, k {k}, {metric}: {e}"))?;
                ensure(out.class_counts() == [500, 500, 500], || {
                    format!("seed {seed}, k {k}, {metric}: counts {:?}", out.class_counts())
                })?;
                runs += 1;
            }
        }
    }
    within(start.elapsed(), 5.0)?;
    Ok(format!("{runs} runs balanced to 500/500/500 in {:.2}s", start.elapsed().as_secs_f64()))
}

fn random_dataset(rng: &mut DetRng) -> (Array2<f64>, Vec<usize>, usize, usize) {
    let n = 10 + rng.below(191);
    let d = 1 + rng.below(8);
    let classes = 2 + rng.below(3);
    let k = 1 + rng.below(10);
    let x = Array2::from_shape_fn((n, d), |_| rng.uniform() * 10.0 - 5.0);
    let labels = (0..n).map(|_| rng.below(classes)).collect();
    (x, labels, classes, k)
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|a| a * a).sum::<f64>().sqrt()
}

fn displacement_geometry() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = DetRng::seed_from(2);
    let mut moved = 0;
    let (mut worst_dist, mut worst_col) = (0.0f64, 0.0f64);
    for case in 0..100 {
        let (x, labels, classes, k) = random_dataset(&mut rng);
        let config = NdeConfig::new(k, DistanceMetric::Euclidean);
        let plan = DisplacementPlan::build(&x, &labels, classes, &config).map_err(|e| e.to_string())?;
        let out = displace(&x, &labels, classes, &config).map_err(|e| e.to_string())?;
        for i in 0..x.nrows() {
            let xi = x.row(i);
            let yi = out.row(i);
            let r = plan.centroids.row(labels[i]);
            let s = norm(xi.iter().zip(r.iter()).map(|(a, b)| a - b));
            if !plan.displaceable.contains(&i) || s == 0.0 {
                ensure(xi == yi, || format!("case {case}: row {i} moved without being flagged"))?;
                continue;
            }
            moved += 1;
            let phi = plan.phi[&i];
            let offset: Vec<f64> = yi.iter().zip(r.iter()).map(|(a, b)| a - b).collect();
            let original: Vec<f64> = xi.iter().zip(r.iter()).map(|(a, b)| a - b).collect();
            let dist = norm(offset.iter().copied());
            let rel = (dist - phi).abs() / phi;
            worst_dist = worst_dist.max(rel);
            ensure(rel < 1e-9, || format!("case {case}, row {i}: |x'-r| = {dist}, phi = {phi}"))?;
            // Component of the new offset orthogonal to the old one, relative
            // to the new offset's length; also require the same direction.
            let unit: Vec<f64> = original.iter().map(|v| v / s).collect();
            let along: f64 = offset.iter().zip(&unit).map(|(a, b)| a * b).sum();
            let residual = norm(offset.iter().zip(&unit).map(|(a, u)| a - along * u)) / dist;
            worst_col = worst_col.max(residual);
            ensure(along > 0.0 && residual < 1e-9, || {
                format!("case {case}, row {i}: collinearity residual {residual}, projection {along}")
            })?;
        }
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "{moved} displaced points; max relative distance error {worst_dist:.1e}, max collinearity residual {worst_col:.1e}"
    ))
}

fn hand_oracle() -> Result<String, String> {
    let x = array![[0.0, 0.0], [0.0, 1.0], [0.0, 0.5], [5.0, 0.0], [5.0, 1.0]];
    let ds = Dataset::from_labels(x, &["A", "A", "B", "B", "B"]).unwrap();
    let out = nde(&ds, &NdeConfig::new(2, DistanceMetric::Euclidean)).map_err(|e| e.to_string())?;
    let expected = [10.0 / 3.0 - 0.5, 0.5];
    let got = out.row(2);
    ensure((got[0] - expected[0]).abs() < 1e-12 && (got[1] - expected[1]).abs() < 1e-12, || {
        format!("p2' = {got}, expected {expected:?}")
    })?;
    for i in [0, 1, 3, 4] {
        ensure(out.row(i) == ds.row(i), || format!("row {i} moved"))?;
    }
    Ok(format!("p2' = ({}, {})", got[0], got[1]))
}

fn totality() -> Result<String, String> {
    let mut runs = 0;
    for (name, ds) in bundled::load_all() {
        let majority = *ds.class_counts().iter().max().unwrap();
        for k in 1..=64 {
            let out = run_ndeso(&ds, &NdeConfig::new(k, DistanceMetric::Euclidean), &mut DetRng::seed_from(k as u64))
                .map_err(|e| format!("{name}, k {k}: {e}"))?;
            ensure(out.class_counts().iter().all(|&c| c == majority), || {
                format!("{name}, k {k}: counts {:?}", out.class_counts())
            })?;
            runs += 1;
        }
    }
    let mut x = Vec::new();
    let mut labels = Vec::new();
    for i in 0..4 {
        x.extend([i as f64, 0.5]);
        labels.push("minority");
    }
    for i in 0..30 {
        x.extend([i as f64 * 0.3, 3.0]);
        labels.push("majority");
    }
    let crafted = Dataset::from_labels(Array2::from_shape_vec((34, 2), x).unwrap(), &labels).unwrap();
    let failure = resample(&crafted, &ResamplerSpec::Smote { k: 5 }, &mut DetRng::seed_from(1))
        .err()
        .ok_or("smote succeeded on a 4-member minority")?;
    ensure(failure.message.contains("Expected n_neighbors <= n_samples_fit"), || {
        format!("unexpected smote message: {failure}")
    })?;
    Ok(format!("ndeso ok in {runs} runs; smote: {failure}"))
}

fn binary_oracle(tp: u64, fn_: u64, tn: u64, fp: u64) -> f64 {
    let tpr = tp as f64 / (tp + fn_) as f64;
    let tnr = tn as f64 / (tn + fp) as f64;
    (tpr * tnr).sqrt()
}

fn gmean_correctness() -> Result<String, String> {
    let mut rng = DetRng::seed_from(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let tp = rng.below(200) as u64;
        let fn_ = rng.below(200) as u64 + u64::from(tp == 0);
        let tn = rng.below(200) as u64;
        let fp = rng.below(200) as u64 + u64::from(tn == 0);
        // Row = actual class (0 = positive), column = predicted.
        let cm = ConfusionMatrix::from_counts(array![[tp, fn_], [fp, tn]]).unwrap();
        let got = gmean(&cm).unwrap();
        let diff = (got - binary_oracle(tp, fn_, tn, fp)).abs();
        worst = worst.max(diff);
        ensure(diff < 1e-12, || format!("tp {tp} fn {fn_} tn {tn} fp {fp}: {got}"))?;
    }
    let worked = gmean(&ConfusionMatrix::from_counts(array![[40, 10], [5, 45]]).unwrap()).unwrap();
    ensure((worked - 0.848528137423857).abs() < 1e-9, || format!("binary worked value {worked}"))?;
    let actual: Vec<usize> = [0; 10].into_iter().chain([1; 10]).chain([2; 10]).collect();
    let mut predicted = actual.clone();
    predicted[10..15].fill(0);
    predicted[20..22].fill(1);
    let three = gmean(&confusion_matrix(&actual, &predicted, 3).unwrap()).unwrap();
    ensure((three - 0.736806299728077).abs() < 1e-9, || format!("3-class worked value {three}"))?;
    Ok(format!("1000 matrices, max deviation {worst:.1e}; worked values {worked:.9} and {three:.9}"))
}

fn friedman_nemenyi() -> Result<String, String> {
    let names = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let ordered = ScoreTable::from_dense(
        names("d", 3),
        names("m", 3),
        vec![vec![0.9, 0.8, 0.7], vec![0.6, 0.5, 0.4], vec![0.95, 0.9, 0.1]],
    )
    .unwrap();
    let (chi2, p) = friedman(&ordered).map_err(|e| e.to_string())?;
    ensure((chi2 - 6.0).abs() < 1e-6 && (p - 0.0498).abs() < 1e-4, || format!("chi2 {chi2}, p {p}"))?;
    let cd = nemenyi_cd(15, 20, Alpha::P05).map_err(|e| e.to_string())?;
    ensure((cd - 4.796).abs() < 0.01, || format!("CD {cd}"))?;
    let tied = ScoreTable::from_dense(names("d", 4), names("m", 5), vec![vec![0.5; 5]; 4]).unwrap();
    let (chi2_t, p_t) = friedman(&tied).map_err(|e| e.to_string())?;
    ensure(chi2_t == 0.0 && p_t == 1.0, || format!("full tie: chi2 {chi2_t}, p {p_t}"))?;
    Ok(format!("chi2 = {chi2}, p = {p:.6}, CD(15, 20) = {cd:.4}, full tie chi2 = {chi2_t}, p = {p_t}"))
}

fn protocol_fidelity() -> Result<String, String> {
    let mut labels = vec![0usize; 100];
    labels.extend([1; 3]);
    let splits = n_splits(&labels)?;
    ensure(splits == 3, || format!("n_splits = {splits}"))?;
    let ds = Dataset::from_labels(
        array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5], [9.0, 9.0]],
        &["A", "A", "A", "A", "A", "B"],
    )
    .unwrap();
    let record = run_experiment("one_member", &ds, &ResamplerSpec::RandomUnder, &ClassifierSpec::default(), 1, &Default::default());
    let message = record.status.message();
    ensure(message.contains("requires at least one train/test split"), || {
        format!("status {:?}", record.status)
    })?;
    Ok(format!("n_splits = {splits}; one-member class: {message}"))
}

fn compare_run(threads: Option<usize>, timing: bool, dir: &std::path::Path, tag: &str) -> Result<Vec<u8>, String> {
    let out = dir.join(format!("{tag}.csv"));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ndeso"));
    cmd.args([
        "compare",
        "--bundled",
        "synthetic",
        "--methods",
        "ndeso,random_over,random_under,smote",
        "--classifiers",
        "knn,tree",
        "--seed",
        "20240101",
        "--out",
    ])
    .arg(&out);
    if let Some(t) = threads {
        cmd.args(["--threads", &t.to_string()]);
    }
    if !timing {
        cmd.arg("--no-timing");
    }
    let status = cmd.output().map_err(|e| e.to_string())?;
    ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
    std::fs::read(&out).map_err(|e| e.to_string())
}

fn determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let serial = compare_run(Some(1), false, dir.path(), "serial")?;
    let parallel = compare_run(None, false, dir.path(), "parallel")?;
    ensure(serial == parallel, || "results differ between --threads 1 and default".into())?;
    let text = String::from_utf8(serial.clone()).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = text.lines().collect();
    ensure(lines.len() == 9, || format!("{} lines, expected header + 8", lines.len()))?;

    // With timing on, everything except the timing column still matches.
    let timed = compare_run(None, true, dir.path(), "timed")?;
    let time_col = RESULTS_HEADER.iter().position(|&h| h == "resample_time_s").unwrap();
    let strip = |bytes: &[u8]| -> Result<Vec<Vec<String>>, String> {
        let mut reader = csv::Reader::from_reader(bytes);
        reader
            .records()
            .map(|r| {
                r.map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|&(i, _)| i != time_col)
                        .map(|(_, v)| v.to_string())
                        .collect()
                })
                .map_err(|e| e.to_string())
            })
            .collect()
    };
    ensure(strip(&timed)? == strip(&serial)?, || "timed run differs outside resample_time_s".into())?;
    let mut reader = csv::Reader::from_reader(timed.as_slice());
    for r in reader.records() {
        let r = r.map_err(|e| e.to_string())?;
        ensure(r[time_col].parse::<f64>().is_ok(), || format!("resample_time_s not populated: {r:?}"))?;
    }
    Ok(format!("{} bytes identical across thread counts; timed run matches outside resample_time_s", serial.len()))
}

fn directional_quality() -> Result<String, String> {
    let start = Instant::now();
    let datasets = vec![("synthetic".to_string(), bundled::load("synthetic").unwrap())];
    let methods: Vec<ResamplerSpec> = ["ndeso", "random_over", "random_under"]
        .iter()
        .map(|m| ResamplerSpec::from_name(m, None, DistanceMetric::Euclidean).unwrap())
        .collect();
    let mut sums = [0.0; 3];
    for master in 1..=10u64 {
        let records = run_grid(&datasets, &methods, &[ClassifierSpec::default()], master, &Default::default(), None)
            .map_err(|e| e.to_string())?;
        for (j, r) in records.iter().enumerate() {
            sums[j] += r.gmean_mean().ok_or_else(|| format!("{} failed: {:?}", r.resampler, r.status))?;
        }
    }
    let [ndeso, over, under] = sums.map(|s| s / 10.0);
    within(start.elapsed(), 60.0)?;
    ensure(ndeso >= over - 0.01 && ndeso >= under - 0.01, || {
        format!("ndeso {ndeso:.4}, random_over {over:.4}, random_under {under:.4}")
    })?;
    Ok(format!(
        "mean G-mean ndeso {ndeso:.4}, random_over {over:.4}, random_under {under:.4} in {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn noise_reduction() -> Result<String, String> {
    let config = NdeConfig::default();
    let mut improved = 0;
    let mut pairs = Vec::new();
    for seed in 1..=10u64 {
        let ds = synthetic(seed);
        let noisy = |x: &Array2<f64>| {
            let nbrs = NeighborIndex::build(x, config.metric, config.k).unwrap();
            count_noisy(ds.labels(), &nbrs)
        };
        let before = noisy(ds.features());
        let after = noisy(nde(&ds, &config).map_err(|e| e.to_string())?.features());
        if after < before {
            improved += 1;
        }
        pairs.push(format!("{before}->{after}"));
    }
    ensure(improved >= 8, || format!("decreased in {improved}/10 seeds: {}", pairs.join(" ")))?;
    Ok(format!("decreased in {improved}/10 seeds ({})", pairs.join(" ")))
}

fn main() -> ExitCode {
    let checks: [(&str, &str, Check); 10] = [
        ("AC1", "balance exactness", balance_exactness),
        ("AC2", "displacement geometry", displacement_geometry),
        ("AC3", "displacement hand oracle", hand_oracle),
        ("AC4", "totality", totality),
        ("AC5", "G-mean correctness", gmean_correctness),
        ("AC6", "Friedman/Nemenyi", friedman_nemenyi),
        ("AC7", "protocol fidelity", protocol_fidelity),
        ("AC8", "determinism", determinism),
        ("AC9", "directional quality", directional_quality),
        ("AC10", "noise reduction", noise_reduction),
    ];
    assert_eq!(DEFAULT_SEED, 20_240_101);
    let mut failed = 0;
    for (id, name, check) in checks {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("[PASS] {id} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
