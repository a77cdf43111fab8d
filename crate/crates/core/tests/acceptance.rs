//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::FRAC_1_SQRT_2;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fuselab::asymptotics::{deflection, lambda_unquantized_laplace, noncentrality, noncentrality_optimized};
use fuselab::config::ExperimentConfig;
use fuselab::design::{objective_g, optimize_threshold, SearchParams};
use fuselab::fusion::{
    evaluate, fisher_information, log_likelihood, score, MlSolver, StatisticKind,
};
use fuselab::harness::{
    calibrate_threshold, estimate_roc, null_exceedance, pd_vs_k, resolve_scenario, RunOptions,
};
use fuselab::network::{derive_seed, ReceivedVector, Scenario, SensorSpec, TrialSampler, TrialStream};
use fuselab::NoiseModel;

const SEED: u64 = 20_240_901;
const TRIALS: usize = 100_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn opts(trials: usize) -> RunOptions {
    RunOptions { seed: SEED, trials, workers: 0 }
}

fn patterns(k: usize) -> impl Iterator<Item = ReceivedVector> {
    (0u32..1 << k).map(move |m| ReceivedVector::new((0..k).map(|i| ((m >> i) & 1) as u8).collect()).unwrap())
}

fn random_noise(rng: &mut ChaCha8Rng) -> NoiseModel {
    let scale = rng.random_range(0.3..2.0);
    match rng.random_range(0..4) {
        0 => NoiseModel::gaussian(scale),
        1 => NoiseModel::laplace(scale),
        2 => NoiseModel::cauchy(scale),
        _ => NoiseModel::generalized_gaussian(scale, rng.random_range(0.8..4.0)),
    }
    .unwrap()
}

/// Heterogeneous scenario; `pe = None` draws a rate per sensor, `zero_tau` pins thresholds.
fn random_scenario(rng: &mut ChaCha8Rng, k: usize, pe: Option<f64>, zero_tau: bool) -> Scenario {
    let sensors = (0..k)
        .map(|_| {
            let h = rng.random_range(0.2..2.0) * if rng.random_bool(0.2) { -1.0 } else { 1.0 };
            let tau = if zero_tau { 0.0 } else { rng.random_range(-1.0..1.0) };
            let pe = pe.unwrap_or_else(|| rng.random_range(0.0..0.4));
            SensorSpec::new(h, tau, pe, random_noise(rng)).unwrap()
        })
        .collect();
    Scenario::new(sensors).unwrap()
}

fn laplace_unit() -> NoiseModel {
    NoiseModel::laplace(FRAC_1_SQRT_2).unwrap()
}

fn c1_quantization_loss() -> Outcome {
    let sc = Scenario::new(vec![SensorSpec::new(1.0, 0.0, 0.0, laplace_unit()).unwrap()]).unwrap();
    let ratio = lambda_unquantized_laplace(&sc, 0.5).unwrap() / deflection(&sc, 0.5).unwrap();
    outcome((1.44..=1.46).contains(&ratio), format!("lambda_UQ/d_Q = {ratio:.7}"))
}

fn c2_bsc_scaling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for pe in [0.05, 0.1, 0.2, 0.3] {
        for _ in 0..100 {
            let k = rng.random_range(1..=20);
            let sc = random_scenario(&mut rng, k, Some(pe), true);
            let clean = Scenario::new(sc.sensors().iter().map(|s| SensorSpec { pe: 0.0, ..*s }).collect()).unwrap();
            let theta = rng.random_range(0.1..1.5);
            let factor = (1.0 - 2.0 * pe) * (1.0 - 2.0 * pe);
            for f in [noncentrality_optimized, noncentrality] {
                let noisy = f(&sc, theta).unwrap();
                let expect = factor * f(&clean, theta).unwrap();
                worst = worst.max((noisy - expect).abs() / expect);
            }
        }
    }
    outcome(worst <= 1e-12, format!("max relative error {worst:.2e} over 400 scenarios"))
}

/// Average ranks, ties sharing the mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            r[t] = mean;
        }
        i = j + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn c3_homogeneous_equivalence() -> Outcome {
    let solver = MlSolver::default();
    let noises = [
        (NoiseModel::gaussian(1.0).unwrap(), 0.0),
        (NoiseModel::gaussian(1.0).unwrap(), 0.2),
        (laplace_unit(), 0.1),
    ];
    let mut worst_rho: f64 = 1.0;
    for (noise, pe) in noises {
        let s = SensorSpec::new(1.0, 0.0, pe, noise).unwrap();
        for k in 1..=12 {
            let sc = Scenario::homogeneous(s, k).unwrap();
            // one value per |ρ̂ − ½| class; every pattern in a class must agree
            let mut glrt = vec![None; k / 2 + 1];
            let mut rao = vec![None; k / 2 + 1];
            for y in patterns(k) {
                let class = (2 * y.ones()).abs_diff(k) / 2;
                let g = evaluate(StatisticKind::Glrt, &y, &sc, solver).unwrap().value;
                let r = evaluate(StatisticKind::Rao, &y, &sc, solver).unwrap().value;
                for (slot, v) in [(&mut glrt[class], g), (&mut rao[class], r)] {
                    match slot {
                        None => *slot = Some(v),
                        Some(prev) if *prev == v => {}
                        Some(prev) => {
                            return outcome(false, format!("K={k}: class {class} not constant ({prev} vs {v})"))
                        }
                    }
                }
            }
            let g: Vec<f64> = glrt.into_iter().flatten().collect();
            let r: Vec<f64> = rao.into_iter().flatten().collect();
            let rho = if g.len() < 2 { 1.0 } else { spearman(&g, &r) };
            worst_rho = worst_rho.min(rho);
        }
    }

    let s = SensorSpec::new(1.0, 0.0, 0.1, NoiseModel::gaussian(1.0).unwrap()).unwrap();
    let sc = Scenario::homogeneous(s, 12).unwrap();
    let run = |theta: f64, tag: u64| {
        let sampler = TrialSampler::new(&sc, theta);
        let mut out = (Vec::with_capacity(TRIALS), Vec::with_capacity(TRIALS));
        for t in 0..TRIALS as u64 {
            let y = sampler.draw(&mut TrialStream::new(derive_seed(SEED, tag), t));
            out.0.push(evaluate(StatisticKind::Glrt, &y, &sc, solver).unwrap().value);
            out.1.push(evaluate(StatisticKind::Rao, &y, &sc, solver).unwrap().value);
        }
        out
    };
    let (g0, r0) = run(0.0, 31);
    let (g1, r1) = run(0.4, 32);
    let mut discrepancies = 0;
    for pfa in [0.01, 0.05, 0.1, 0.2, 0.5] {
        let gg = calibrate_threshold(&g0, pfa).unwrap();
        let gr = calibrate_threshold(&r0, pfa).unwrap();
        for (g, r) in g0.iter().zip(&r0).chain(g1.iter().zip(&r1)) {
            if (*g > gg) != (*r > gr) {
                discrepancies += 1;
            }
        }
    }
    outcome(
        worst_rho == 1.0 && discrepancies == 0,
        format!("min Spearman {worst_rho} over K=1..12; {discrepancies} decision discrepancies"),
    )
}

fn c4_fisher_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for k in 1..=10 {
        for _ in 0..3 {
            let sc = random_scenario(&mut rng, k, None, false);
            // probabilities and score built directly from the noise law
            let (mut m1, mut m2) = (0.0, 0.0);
            for y in patterns(k) {
                let mut p = 1.0;
                let mut s = 0.0;
                for (&b, sen) in y.bits.iter().zip(sc.sensors()) {
                    let f = sen.noise.ccdf(sen.tau).unwrap();
                    let c = 1.0 - 2.0 * sen.pe;
                    let p1 = sen.pe + c * f;
                    let d = c * sen.h * sen.noise.pdf(sen.tau).unwrap();
                    if b == 1 {
                        p *= p1;
                        s += d / p1;
                    } else {
                        p *= 1.0 - p1;
                        s -= d / (1.0 - p1);
                    }
                }
                m1 += p * s;
                m2 += p * s * s;
            }
            let var = m2 - m1 * m1;
            let fi = fisher_information(&sc, 0.0).unwrap();
            worst = worst.max((var - fi).abs() / fi);
        }
    }
    outcome(worst <= 1e-9, format!("max relative error {worst:.2e} over 30 scenarios"))
}

fn c5_score_differences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(1..=12);
        let sc = random_scenario(&mut rng, k, None, false);
        let y = ReceivedVector::new((0..k).map(|_| rng.random_range(0..=1u8)).collect()).unwrap();
        let theta = rng.random_range(-1.0..1.0);
        let a = score(&y, &sc, theta).unwrap();
        let fd = (log_likelihood(&y, &sc, theta + d).unwrap() - log_likelihood(&y, &sc, theta - d).unwrap()) / (2.0 * d);
        worst = worst.max((a - fd).abs() / a.abs());
    }
    outcome(worst <= 1e-5, format!("max relative gap {worst:.2e} over 100 triples"))
}

fn c6_threshold_design() -> Outcome {
    let search = SearchParams::default();
    let mut zero_models = vec![
        NoiseModel::gaussian(1.0).unwrap(),
        NoiseModel::laplace(1.0).unwrap(),
        NoiseModel::cauchy(1.0).unwrap(),
    ];
    for shape in [0.8, 1.0, 1.5, 2.0] {
        zero_models.push(NoiseModel::generalized_gaussian(1.0, shape).unwrap());
    }
    let mut worst_tau: f64 = 0.0;
    for m in &zero_models {
        for pe in [0.0, 0.1, 0.2] {
            worst_tau = worst_tau.max(optimize_threshold(m, pe, search).unwrap().tau_star.abs());
        }
    }
    let mut bimodal_ok = true;
    let mut smoothing_ok = true;
    let mut gains = Vec::new();
    for shape in [3.0, 4.0] {
        let m = NoiseModel::generalized_gaussian(1.0, shape).unwrap();
        let clean = optimize_threshold(&m, 0.0, search).unwrap();
        bimodal_ok &= clean.bimodal && clean.tau_star > 0.0;
        let noisy = optimize_threshold(&m, 0.2, search).unwrap();
        let g_clean = clean.g_at_star - objective_g(&m, 0.0, 0.0).unwrap();
        let g_noisy = noisy.g_at_star - objective_g(&m, 0.2, 0.0).unwrap();
        smoothing_ok &= g_noisy < g_clean;
        gains.push(format!("eps={shape}: {g_clean:.4} -> {g_noisy:.4}"));
    }
    outcome(
        worst_tau <= 1e-6 && bimodal_ok && smoothing_ok,
        format!("max |tau*| {worst_tau:.1e} on unimodal-objective laws; bimodal {bimodal_ok}; gain {}", gains.join(", ")),
    )
}

fn c7_null_calibration() -> Outcome {
    let s = SensorSpec::new(1.0, 0.0, 0.0, NoiseModel::gaussian(1.0).unwrap()).unwrap();
    let sc = Scenario::homogeneous(s, 100).unwrap();
    let rate = null_exceedance(&sc, StatisticKind::RaoOptimized, 2.7055, opts(TRIALS)).unwrap();
    outcome((rate - 0.10).abs() <= 0.015, format!("P(stat > 2.7055 | null) = {rate:.4}"))
}

fn c8_pd_vs_k() -> Outcome {
    let ks: Vec<usize> = (1..=10).map(|i| 10 * i).collect();
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, noise) in [("gaussian", NoiseModel::gaussian(1.0).unwrap()), ("laplace", laplace_unit())] {
        let t = SensorSpec::new(1.0, 0.0, 0.0, noise).unwrap();
        let r = pd_vs_k(&t, 0.5, &ks, &[0.0, 0.2], 0.1, opts(TRIALS)).unwrap();
        let (mut clt_dev, mut weak_dev, mut weak_max): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for row in &r.rows {
            for pd in [row.pd_rao, row.pd_glrt] {
                weak_max = weak_max.max((pd - row.pd_weak).abs());
                if row.k >= 30 {
                    clt_dev = clt_dev.max((pd - row.pd_clt).abs());
                    weak_dev = weak_dev.max((pd - row.pd_weak).abs());
                }
            }
        }
        if name == "gaussian" {
            pass &= clt_dev <= 0.02 && weak_dev <= 0.03;
        } else {
            pass &= clt_dev <= 0.02 && weak_max > 0.05;
        }
        notes.push(format!("{name}: |MC-clt| {clt_dev:.4}, |MC-weak| {weak_dev:.4} (K>=30), max |MC-weak| {weak_max:.4}"));
    }
    outcome(pass, notes.join("; "))
}

fn roc_config(noise: &str, pe: f64, db: f64) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"seed": {SEED}, "theta": 1.0, "replicate": 5,
            "sensors": [{{"tau": null, "pe": {pe}, "noise": {{"type": "{noise}", "scale": 1}}}}],
            "snr": {{"mean_snr_db": {db}, "h_law": "uniform", "unit_noise_power": true}},
            "trials": {TRIALS}}}"#
    ))
    .unwrap()
}

fn c9_roc_relations() -> Outcome {
    let kinds = [StatisticKind::Rao, StatisticKind::Glrt];
    let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
    let mut worst_gap: f64 = 0.0;
    let mut notes = Vec::new();
    let mut ordering_ok = true;
    for pe in [0.0, 0.2] {
        for db in [0.0, 10.0] {
            let mut at_01 = Vec::new();
            for noise in ["gaussian", "laplace"] {
                let cfg = roc_config(noise, pe, db);
                let sc = resolve_scenario(&cfg).unwrap();
                let roc = estimate_roc(&sc, cfg.theta, &kinds, &grid, opts(cfg.trials)).unwrap();
                let rao = &roc.get(StatisticKind::Rao).unwrap().points;
                let glrt = &roc.get(StatisticKind::Glrt).unwrap().points;
                let gap = rao
                    .iter()
                    .zip(glrt)
                    .map(|(a, b)| (a.pd_randomized - b.pd_randomized).abs())
                    .fold(0.0, f64::max);
                worst_gap = worst_gap.max(gap);
                notes.push(format!("{noise} pe={pe} {db}dB rao-glrt {gap:.4}"));
                at_01.push([rao[9].pd_randomized, glrt[9].pd_randomized]);
            }
            for j in 0..2 {
                let diff = at_01[1][j] - at_01[0][j];
                let ok = if db == 0.0 { diff > 0.02 } else { diff.abs() < 0.02 };
                ordering_ok &= ok;
                notes.push(format!("laplace-gaussian pe={pe} {db}dB {} {diff:+.4}", kinds[j]));
            }
        }
    }
    outcome(worst_gap <= 0.01 && ordering_ok, format!("max rao-glrt gap {worst_gap:.4}; {}", notes.join(", ")))
}

fn c10_likelihood_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for k in 1..=10 {
        for _ in 0..3 {
            let sc = random_scenario(&mut rng, k, None, false);
            for theta in [0.0, 0.5] {
                let total: f64 = patterns(k).map(|y| log_likelihood(&y, &sc, theta).unwrap().exp()).sum();
                worst = worst.max((total - 1.0).abs());
            }
        }
    }
    outcome(worst <= 1e-10, format!("max |sum - 1| = {worst:.2e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("1 quantization-loss ratio", c1_quantization_loss, Duration::from_millis(1)),
        ("2 BSC scaling law", c2_bsc_scaling, Duration::from_secs(1)),
        ("3 homogeneous GLRT/Rao equivalence", c3_homogeneous_equivalence, Duration::from_secs(30)),
        ("4 Fisher information oracle", c4_fisher_oracle, Duration::from_secs(10)),
        ("5 score vs finite differences", c5_score_differences, Duration::from_secs(1)),
        ("6 threshold design", c6_threshold_design, Duration::from_secs(5)),
        ("7 null calibration", c7_null_calibration, Duration::from_secs(30)),
        ("8 detection vs network size", c8_pd_vs_k, Duration::from_secs(300)),
        ("9 ROC relations, K=5", c9_roc_relations, Duration::from_secs(300)),
        ("10 likelihood normalization", c10_likelihood_normalization, Duration::from_secs(10)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (name, run, budget) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let status = if o.pass { "PASS" } else { "FAIL" };
        let over = if took > budget { format!(" (over {budget:?} budget)") } else { String::new() };
        println!("criterion {name}: {status} [{:.2?}{over}] {}", took, o.detail);
        if !o.pass {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        println!("{} criteria failed: {}", failed.len(), failed.join("; "));
        std::process::exit(1);
    }
}
