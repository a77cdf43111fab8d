//! Monte Carlo experiments: ROC estimation, empirical threshold calibration
//! and detection-vs-K sweeps.
//!
//! Trial `t` of a run draws from `TrialStream::new(derive_seed(seed, tag), t)`,
//! so results do not depend on the worker count. Trials are tallied into
//! integer counts before any floating-point work.
//!
//! When the statistic depends on the received bits only through a small key
//! (the number of ones in a homogeneous network, or the full bit pattern for
//! `K ≤ 16`) each distinct key is scored once.

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{
    clt_params, clt_pd, deflection, noncentrality, noncentrality_optimized, weak_signal_pd,
    weak_signal_threshold,
};
use crate::config::{ExperimentConfig, HLaw, SensorConfig};
use crate::design::{design_all, SearchParams};
use crate::error::{Error, Result};
use crate::fusion::{evaluate, MlSolver, StatisticKind};
use crate::network::{derive_seed, ReceivedVector, Scenario, TrialSampler, TrialStream};

pub const TAG_GAINS: u64 = 0x6761_696e;
pub const TAG_NULL: u64 = 0x6e75_6c6c;
pub const TAG_ALT: u64 = 0x616c_7431;

const CHUNK: u64 = 4096;
const MAX_PATTERN_K: usize = 16;

/// Run-level knobs that are not part of the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    pub trials: usize,
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
}

/// `a = √(3·Γ̄·E{w²}) / |θ|`, the upper end of the uniform gain law.
pub fn gain_bound(mean_snr_db: f64, second_moment: f64, theta: f64) -> f64 {
    let snr = 10f64.powf(mean_snr_db / 10.0);
    (3.0 * snr * second_moment).sqrt() / theta.abs()
}

/// Builds the scenario: applies the SNR block if present (rescaling noise to
/// unit power when asked and setting the gains), then designs unset thresholds.
pub fn resolve_scenario(cfg: &ExperimentConfig) -> Result<Scenario> {
    if cfg.snr.is_some() {
        build_scenario_from_snr(cfg, cfg.seed.unwrap_or(0))
    } else {
        design_all(&cfg.expanded_sensors(), SearchParams::default())
    }
}

/// Gains from the SNR block. Uniform gains come from a stream keyed by `seed`.
pub fn build_scenario_from_snr(cfg: &ExperimentConfig, seed: u64) -> Result<Scenario> {
    let snr = cfg
        .snr
        .ok_or_else(|| Error::Config("no snr block in config".into()))?;
    if cfg.theta == 0.0 {
        return Err(Error::Config("an SNR block needs theta != 0".into()));
    }
    let mut stream = TrialStream::new(derive_seed(seed, TAG_GAINS), 0);
    let sensors = cfg
        .expanded_sensors()
        .into_iter()
        .map(|s| {
            let noise = if snr.unit_noise_power {
                s.noise.with_unit_power()?
            } else {
                s.noise
            };
            let power = noise.second_moment().ok_or(Error::SnrUndefinedForCauchy)?;
            let a = gain_bound(snr.mean_snr_db, power, cfg.theta);
            let h = match snr.h_law {
                HLaw::Fixed => a / 3f64.sqrt(),
                HLaw::Uniform => a * stream.uniform(),
            };
            Ok(SensorConfig { h, noise, ..s })
        })
        .collect::<Result<Vec<_>>>()?;
    design_all(&sensors, SearchParams::default())
}

/// `Γ_k = h_k²θ²/E{w_k²}`; `None` for Cauchy.
pub fn sensor_snr(h: f64, theta: f64, noise: &crate::noise::NoiseModel) -> Option<f64> {
    noise.second_moment().map(|p| h * h * theta * theta / p)
}

/// Distinct statistic values with multiplicities, sorted ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedSample {
    values: Vec<(f64, u64)>,
    total: u64,
}

impl WeightedSample {
    pub fn from_values(values: &[f64]) -> Self {
        Self::from_pairs(values.iter().map(|&v| (v, 1)))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, u64)>) -> Self {
        let mut v: Vec<(f64, u64)> = pairs.into_iter().filter(|p| p.1 > 0).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<(f64, u64)> = Vec::with_capacity(v.len());
        for (x, c) in v {
            match values.last_mut() {
                Some(last) if last.0 == x => last.1 += c,
                _ => values.push((x, c)),
            }
        }
        let total = values.iter().map(|p| p.1).sum();
        Self { values, total }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> &[(f64, u64)] {
        &self.values
    }

    /// Number of values strictly above `gamma`.
    pub fn exceed(&self, gamma: f64) -> u64 {
        let i = self.values.partition_point(|p| p.0 <= gamma);
        self.values[i..].iter().map(|p| p.1).sum()
    }

    /// Number of values equal to `gamma`.
    pub fn ties(&self, gamma: f64) -> u64 {
        let i = self.values.partition_point(|p| p.0 < gamma);
        self.values
            .get(i)
            .filter(|p| p.0 == gamma)
            .map_or(0, |p| p.1)
    }
}

/// Empirical threshold at a target false-alarm rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub gamma: f64,
    /// Null exceedance rate `#{Λ > γ}/N`, never above the target.
    pub pfa_emp: f64,
    /// Probability of rejecting on `Λ = γ` that brings the null rejection
    /// rate to the target exactly.
    pub tie_prob: f64,
}

impl Threshold {
    /// Plain detection rate `#{Λ > γ}/N`.
    pub fn pd(&self, alt: &WeightedSample) -> f64 {
        alt.exceed(self.gamma) as f64 / alt.total() as f64
    }

    /// Detection rate of the test randomized on the atom at `γ`.
    pub fn pd_randomized(&self, alt: &WeightedSample) -> f64 {
        let n = alt.total() as f64;
        (alt.exceed(self.gamma) as f64 + self.tie_prob * alt.ties(self.gamma) as f64) / n
    }
}

/// `γ` is the `(N − ⌊pfa·N⌋)`-th order statistic, i.e. `⌈(1 − pfa)·N⌉` up
/// to rounding of `pfa·N`; exceedances are counted strictly so ties never
/// push the empirical rate above `pfa`.
pub fn calibrate_weighted(null: &WeightedSample, pfa: f64) -> Result<Threshold> {
    if null.total == 0 {
        return Err(Error::InvalidInput("empty null sample".into()));
    }
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::InvalidInput(format!("pfa must lie in (0, 1), got {pfa}")));
    }
    let n = null.total;
    let allowed = ((pfa * n as f64) + 1e-9).floor() as u64;
    let rank = (n - allowed).max(1);
    let mut cum = 0;
    let mut gamma = null.values[0].0;
    let mut ties = 0;
    for &(v, c) in &null.values {
        cum += c;
        if cum >= rank {
            gamma = v;
            ties = c;
            break;
        }
    }
    let exceed = n - cum;
    let target = pfa * n as f64;
    let tie_prob = if ties > 0 {
        ((target - exceed as f64) / ties as f64).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(Threshold {
        gamma,
        pfa_emp: exceed as f64 / n as f64,
        tie_prob,
    })
}

pub fn calibrate_threshold(null_values: &[f64], pfa: f64) -> Result<f64> {
    if null_values.is_empty() {
        return Err(Error::InvalidInput("empty null sample".into()));
    }
    Ok(calibrate_weighted(&WeightedSample::from_values(null_values), pfa)?.gamma)
}

enum KeyMode {
    Ones,
    Pattern,
    PerTrial,
}

fn key_mode(scenario: &Scenario) -> KeyMode {
    if scenario.is_homogeneous() {
        KeyMode::Ones
    } else if scenario.len() <= MAX_PATTERN_K {
        KeyMode::Pattern
    } else {
        KeyMode::PerTrial
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn score_all(
    kinds: &[StatisticKind],
    y: &ReceivedVector,
    scenario: &Scenario,
) -> Result<Vec<f64>> {
    kinds
        .iter()
        .map(|&k| evaluate(k, y, scenario, MlSolver::default()).map(|r| r.value))
        .collect()
}

/// Simulates `trials` received vectors at `theta` and returns one weighted
/// sample per statistic kind. All kinds see the same vectors.
pub fn simulate_statistics(
    scenario: &Scenario,
    theta: f64,
    kinds: &[StatisticKind],
    seed: u64,
    opts: RunOptions,
) -> Result<Vec<WeightedSample>> {
    let sampler = TrialSampler::new(scenario, theta);
    let trials = opts.trials as u64;
    let chunks = trials.div_ceil(CHUNK);
    let k = scenario.len();
    let range = move |c: u64| c * CHUNK..((c + 1) * CHUNK).min(trials);

    with_pool(opts.workers, || match key_mode(scenario) {
        KeyMode::Ones | KeyMode::Pattern => {
            let ones = matches!(key_mode(scenario), KeyMode::Ones);
            let slots = if ones { k + 1 } else { 1usize << k };
            let counts = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut tally = vec![0u64; slots];
                    for t in range(c) {
                        let y = sampler.draw(&mut TrialStream::new(seed, t));
                        let key = if ones {
                            y.ones()
                        } else {
                            y.bits.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum()
                        };
                        tally[key] += 1;
                    }
                    tally
                })
                .reduce(
                    || vec![0u64; slots],
                    |mut a, b| {
                        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        a
                    },
                );
            let scored = counts
                .par_iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(key, &c)| {
                    let bits = if ones {
                        (0..k).map(|i| u8::from(i < key)).collect()
                    } else {
                        (0..k).map(|i| ((key >> i) & 1) as u8).collect()
                    };
                    Ok((score_all(kinds, &ReceivedVector { bits }, scenario)?, c))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(kinds
                .iter()
                .enumerate()
                .map(|(j, _)| WeightedSample::from_pairs(scored.iter().map(|(v, c)| (v[j], *c))))
                .collect())
        }
        KeyMode::PerTrial => {
            let rows = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    range(c)
                        .map(|t| score_all(kinds, &sampler.draw(&mut TrialStream::new(seed, t)), scenario))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((0..kinds.len())
                .map(|j| WeightedSample::from_pairs(rows.iter().flatten().map(|r| (r[j], 1))))
                .collect())
        }
    })?
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub pfa_nominal: f64,
    pub gamma: f64,
    pub pfa_emp: f64,
    pub pd_emp: f64,
    /// Detection rate with randomization on the threshold atom, at which the
    /// null rejection rate equals `pfa_nominal`.
    pub pd_randomized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocSeries {
    pub kind: StatisticKind,
    pub points: Vec<RocPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    pub series: Vec<RocSeries>,
    pub trials: usize,
    pub seed: u64,
}

impl RocCurve {
    pub fn get(&self, kind: StatisticKind) -> Option<&RocSeries> {
        self.series.iter().find(|s| s.kind == kind)
    }
}

/// Null and alternative runs at `θ = 0` and `θ = theta1`, calibrated on the
/// pfa grid.
pub fn estimate_roc(
    scenario: &Scenario,
    theta1: f64,
    kinds: &[StatisticKind],
    pfa_grid: &[f64],
    opts: RunOptions,
) -> Result<RocCurve> {
    let null = simulate_statistics(scenario, scenario.theta0(), kinds, derive_seed(opts.seed, TAG_NULL), opts)?;
    let alt = simulate_statistics(scenario, theta1, kinds, derive_seed(opts.seed, TAG_ALT), opts)?;
    let series = kinds
        .iter()
        .zip(null.iter().zip(&alt))
        .map(|(&kind, (n, a))| {
            let points = pfa_grid
                .iter()
                .map(|&pfa| {
                    let th = calibrate_weighted(n, pfa)?;
                    Ok(RocPoint {
                        pfa_nominal: pfa,
                        gamma: th.gamma,
                        pfa_emp: th.pfa_emp,
                        pd_emp: th.pd(a),
                        pd_randomized: th.pd_randomized(a),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(RocSeries { kind, points })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RocCurve {
        series,
        trials: opts.trials,
        seed: opts.seed,
    })
}

/// One `(pe, K)` cell of a detection-vs-K sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub pe: f64,
    /// Monte Carlo detection rates of the size-exact (atom-randomized) tests.
    pub pd_rao: f64,
    pub pd_glrt: f64,
    /// Plain `#{Λ > γ}` detection rates and the matching false-alarm rates.
    pub pd_rao_plain: f64,
    pub pd_glrt_plain: f64,
    pub pfa_rao_plain: f64,
    pub pfa_glrt_plain: f64,
    pub pd_weak: f64,
    /// `NaN` when the CLT law does not apply (nonzero thresholds).
    pub pd_clt: f64,
    pub lambda: f64,
    pub deflection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub pfa: f64,
    pub rows: Vec<SweepRow>,
    pub trials: usize,
    pub seed: u64,
}

/// Seed tag for the `(pe index, K)` cell so that every cell has its own streams.
fn cell_tag(tag: u64, pe_index: usize, k: usize) -> u64 {
    tag ^ ((pe_index as u64) << 40) ^ ((k as u64) << 16)
}

/// Analytic columns for a homogeneous network of size `k`.
pub fn analytic_row(template: &crate::network::SensorSpec, k: usize, theta1: f64, pfa: f64) -> Result<(f64, f64, f64, f64)> {
    let scenario = Scenario::homogeneous(*template, k)?;
    let gamma = weak_signal_threshold(pfa)?;
    let lambda = if scenario.all_thresholds_zero() {
        noncentrality_optimized(&scenario, theta1)?
    } else {
        noncentrality(&scenario, theta1)?
    };
    let (pd_clt, d) = match clt_params(&scenario, theta1) {
        Ok(p) => (clt_pd(k, &p, gamma), deflection(&scenario, theta1)?),
        Err(Error::RequiresZeroThresholds(_)) => (f64::NAN, f64::NAN),
        Err(e) => return Err(e),
    };
    Ok((weak_signal_pd(lambda, gamma), pd_clt, lambda, d))
}

/// Detection probability against network size at a fixed false-alarm rate,
/// for the homogeneous network built from `template` (its `pe` replaced by
/// each entry of `pe_values`).
pub fn pd_vs_k(
    template: &crate::network::SensorSpec,
    theta1: f64,
    k_sweep: &[usize],
    pe_values: &[f64],
    pfa: f64,
    opts: RunOptions,
) -> Result<SweepResult> {
    let kinds = [StatisticKind::Rao, StatisticKind::Glrt];
    let mut rows = Vec::new();
    for (pi, &pe) in pe_values.iter().enumerate() {
        let sensor = crate::network::SensorSpec::new(template.h, template.tau, pe, template.noise)?;
        for &k in k_sweep {
            let scenario = Scenario::homogeneous(sensor, k)?;
            let null = simulate_statistics(&scenario, 0.0, &kinds, derive_seed(opts.seed, cell_tag(TAG_NULL, pi, k)), opts)?;
            let alt = simulate_statistics(&scenario, theta1, &kinds, derive_seed(opts.seed, cell_tag(TAG_ALT, pi, k)), opts)?;
            let rao = calibrate_weighted(&null[0], pfa)?;
            let glrt = calibrate_weighted(&null[1], pfa)?;
            let (pd_weak, pd_clt, lambda, d) = analytic_row(&sensor, k, theta1, pfa)?;
            rows.push(SweepRow {
                k,
                pe,
                pd_rao: rao.pd_randomized(&alt[0]),
                pd_glrt: glrt.pd_randomized(&alt[1]),
                pd_rao_plain: rao.pd(&alt[0]),
                pd_glrt_plain: glrt.pd(&alt[1]),
                pfa_rao_plain: rao.pfa_emp,
                pfa_glrt_plain: glrt.pfa_emp,
                pd_weak,
                pd_clt,
                lambda,
                deflection: d,
            });
        }
    }
    Ok(SweepResult {
        pfa,
        rows,
        trials: opts.trials,
        seed: opts.seed,
    })
}

/// Empirical null rejection rate of `kind` against a fixed threshold.
pub fn null_exceedance(
    scenario: &Scenario,
    kind: StatisticKind,
    gamma: f64,
    opts: RunOptions,
) -> Result<f64> {
    let s = simulate_statistics(scenario, 0.0, &[kind], derive_seed(opts.seed, TAG_NULL), opts)?;
    Ok(s[0].exceed(gamma) as f64 / s[0].total() as f64)
}
