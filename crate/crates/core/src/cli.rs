//! The `fuselab` command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::asymptotics::weak_signal_threshold;
use crate::checks::run_checks;
use crate::config::{ExperimentConfig, SensorConfig};
use crate::design::{optimize_threshold, SearchParams};
use crate::error::{Error, Result};
use crate::harness::{analytic_row, estimate_roc, pd_vs_k, resolve_scenario, RunOptions};
use crate::network::{Scenario, SensorSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

pub const SEED_ENV: &str = "FUSELAB_SEED";

#[derive(Debug, Parser)]
#[command(name = "fuselab", version, about = "One-bit decentralized detection experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fill in unset thresholds and write the completed scenario.
    Design {
        #[command(flatten)]
        common: Common,
        /// Also write the coarse (τ, g(τ)) search grid.
        #[arg(long)]
        trace: bool,
    },
    /// Monte Carlo ROC curves.
    Roc(Common),
    /// Detection probability against network size.
    Pdk(Common),
    /// Analytic predictions against network size.
    Asymptotic(Common),
    /// Threshold objective traces per sensor.
    Gtrace(Common),
    /// Run the self-check suite on the scenario.
    Validate(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "N")]
    pub trials: Option<usize>,
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub workers: usize,
}

/// Formats `x` with 9 significant digits, trailing zeros dropped.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_)
        | Error::ObjectiveEvaluation(_)
        | Error::MlNotConverged { .. }
        | Error::QuantileOutOfDomain(_)
        | Error::UninformativeScenario => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` (program name first) and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fuselab: {e}");
            exit_code(&e)
        }
    }
}

struct Prepared {
    cfg: ExperimentConfig,
    seed: u64,
    opts: RunOptions,
}

fn prepare(c: &Common) -> Result<Prepared> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    let seed = match c.seed.or(cfg.seed) {
        Some(s) => s,
        None => match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("{SEED_ENV} is not a u64: {v:?}")))?,
            Err(_) => 0,
        },
    };
    cfg.seed = Some(seed);
    if let Some(t) = c.trials {
        if t == 0 {
            return Err(Error::Config("--trials must be at least 1".into()));
        }
        cfg.trials = t;
    }
    fs::create_dir_all(&c.out).map_err(|e| Error::Config(format!("{}: {e}", c.out.display())))?;
    let opts = RunOptions {
        seed,
        trials: cfg.trials,
        workers: c.workers,
    };
    Ok(Prepared { cfg, seed, opts })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// The config with the resolved scenario (gains, designed thresholds, noise
/// scales) written back into the sensor list.
fn resolved_config(cfg: &ExperimentConfig, sc: &Scenario) -> ExperimentConfig {
    let mut out = cfg.clone();
    out.replicate = None;
    out.sensors = sc
        .sensors()
        .iter()
        .map(|s| SensorConfig {
            h: s.h,
            tau: Some(s.tau),
            pe: s.pe,
            noise: s.noise,
        })
        .collect();
    out
}

fn write_meta(dir: &Path, command: &str, p: &Prepared, sc: &Scenario, started: Instant) -> Result<()> {
    let meta = json!({
        "command": command,
        "seed": p.seed,
        "trials": p.opts.trials,
        "config": resolved_config(&p.cfg, sc),
        "runtime_s": started.elapsed().as_secs_f64(),
    });
    write(&dir.join("meta.json"), &serde_json::to_string_pretty(&meta).expect("json"))
}

fn execute(cmd: &Command) -> Result<i32> {
    let started = Instant::now();
    match cmd {
        Command::Design { common, trace } => {
            let p = prepare(common)?;
            let sc = resolve_scenario(&p.cfg)?;
            let resolved = resolved_config(&p.cfg, &sc);
            write(&common.out.join("scenario.json"), &resolved.to_json())?;
            if *trace {
                let mut csv = String::from("sensor,tau,g\n");
                for (i, s) in p.cfg.expanded_sensors().iter().enumerate() {
                    if s.tau.is_some() {
                        continue;
                    }
                    let r = optimize_threshold(&sc.sensors()[i].noise, s.pe, SearchParams::default())?;
                    for (t, g) in r.search_trace.unwrap_or_default() {
                        let _ = writeln!(csv, "{i},{},{}", fmt_sig(t), fmt_sig(g));
                    }
                }
                write(&common.out.join("design_trace.csv"), &csv)?;
            }
            println!("{}", resolved.to_json());
            Ok(EXIT_OK)
        }
        Command::Roc(common) => {
            let p = prepare(common)?;
            let sc = resolve_scenario(&p.cfg)?;
            let roc = estimate_roc(&sc, p.cfg.theta, &p.cfg.statistics, &p.cfg.pfa_grid(), p.opts)?;
            let mut csv = String::from("statistic,pfa_nominal,pfa_emp,pd_emp,pd_randomized\n");
            for s in &roc.series {
                for pt in &s.points {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{}",
                        s.kind,
                        fmt_sig(pt.pfa_nominal),
                        fmt_sig(pt.pfa_emp),
                        fmt_sig(pt.pd_emp),
                        fmt_sig(pt.pd_randomized)
                    );
                }
            }
            write(&common.out.join("roc.csv"), &csv)?;
            write_meta(&common.out, "roc", &p, &sc, started)?;
            Ok(EXIT_OK)
        }
        Command::Pdk(common) => {
            let p = prepare(common)?;
            let sc = resolve_scenario(&p.cfg)?;
            let template = sc.sensors()[0];
            let ks = k_sweep(&p.cfg, &sc);
            let pes = p.cfg.pe_sweep.clone().unwrap_or_else(|| vec![template.pe]);
            let r = pd_vs_k(&template, p.cfg.theta, &ks, &pes, p.cfg.pfa_target(), p.opts)?;
            let mut csv = String::from("K,pd_rao,pd_glrt,pd_weak,pd_clt,pe\n");
            for row in &r.rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    row.k,
                    fmt_sig(row.pd_rao),
                    fmt_sig(row.pd_glrt),
                    fmt_sig(row.pd_weak),
                    fmt_sig(row.pd_clt),
                    fmt_sig(row.pe)
                );
            }
            write(&common.out.join("pdk.csv"), &csv)?;
            write_meta(&common.out, "pdk", &p, &sc, started)?;
            Ok(EXIT_OK)
        }
        Command::Asymptotic(common) => {
            let p = prepare(common)?;
            let sc = resolve_scenario(&p.cfg)?;
            let template = sc.sensors()[0];
            let pfa = p.cfg.pfa_target();
            weak_signal_threshold(pfa)?;
            let pes = p.cfg.pe_sweep.clone().unwrap_or_else(|| vec![template.pe]);
            let mut csv = String::from("K,pfa,pd_weak,pd_clt,lambda,d_Q,pe\n");
            for pe in pes {
                let s = SensorSpec::new(template.h, template.tau, pe, template.noise)?;
                for k in k_sweep(&p.cfg, &sc) {
                    let (weak, clt, lambda, d) = analytic_row(&s, k, p.cfg.theta, pfa)?;
                    let _ = writeln!(
                        csv,
                        "{k},{},{},{},{},{},{}",
                        fmt_sig(pfa),
                        fmt_sig(weak),
                        fmt_sig(clt),
                        fmt_sig(lambda),
                        fmt_sig(d),
                        fmt_sig(pe)
                    );
                }
            }
            write(&common.out.join("asymptotic.csv"), &csv)?;
            print!("{csv}");
            Ok(EXIT_OK)
        }
        Command::Gtrace(common) => {
            let p = prepare(common)?;
            let mut csv = String::from("sensor,pe,tau,g\n");
            for (i, s) in p.cfg.sensors.iter().enumerate() {
                let pes = p.cfg.pe_sweep.clone().unwrap_or_else(|| vec![s.pe]);
                for pe in pes {
                    let r = optimize_threshold(&s.noise, pe, SearchParams::default())?;
                    for (t, g) in r.search_trace.unwrap_or_default() {
                        let _ = writeln!(csv, "{i},{},{},{}", fmt_sig(pe), fmt_sig(t), fmt_sig(g));
                    }
                }
            }
            write(&common.out.join("gtrace.csv"), &csv)?;
            Ok(EXIT_OK)
        }
        Command::Validate(common) => {
            let p = prepare(common)?;
            let sc = resolve_scenario(&p.cfg)?;
            let outcomes = run_checks(&sc, p.cfg.theta)?;
            let mut ok = true;
            for c in &outcomes {
                ok &= c.passed;
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if ok { EXIT_OK } else { EXIT_NUMERICAL })
        }
    }
}

/// `k_sweep` from the config, or the resolved network size.
fn k_sweep(cfg: &ExperimentConfig, sc: &Scenario) -> Vec<usize> {
    cfg.k_sweep.clone().unwrap_or_else(|| vec![sc.len()])
}
