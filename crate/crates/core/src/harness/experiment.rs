use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::derive_seed;

use super::checks::{
    check_inradius_bound, check_main_theorem, check_second_moment_bound, vol_root_growth, Quantiles,
};
use super::config::ExperimentConfig;
use super::emit::emit_records;
use super::trial::{run_trial_with, OracleDeltas, TrialOptions, TrialRecord};

pub const SUMMARY_FILE: &str = "summary.json";
pub const ORACLE_FILE: &str = "oracle.jsonl";

/// Seed of trial `trial` in cell (n, m).
pub fn trial_seed(master: u64, n: usize, m: usize, trial: usize) -> u64 {
    derive_seed(master, &[n as u64, m as u64, trial as u64])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub n: usize,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub n: usize,
    pub m: usize,
    pub trial: usize,
    #[serde(flatten)]
    pub deltas: OracleDeltas,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub m: usize,
    pub completed: usize,
    pub failed: usize,
    pub resampled: u64,
    pub l_k: Quantiles,
    pub vol_root: Quantiles,
    pub inradius: Quantiles,
    pub mean_square: Quantiles,
    pub max_facet_cross: Quantiles,
    pub facet_count: Quantiles,
    pub alpha: f64,
    pub inradius_violations: usize,
    pub c_emp: f64,
    pub facet_ratio: f64,
    pub vol_root_scaled_median: f64,
    /// Trials with l_k above c_star, when a threshold was supplied.
    pub l_k_exceedances: Option<usize>,
    pub bound_shape: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub config_hash: String,
    pub master_seed: u64,
    pub trials_per_cell: usize,
    pub c_star: Option<f64>,
    pub c_emp_spread: f64,
    pub cells: Vec<CellSummary>,
    pub failures: Vec<TrialFailure>,
}

#[derive(Clone, Debug)]
pub struct CampaignResult {
    /// Sorted by (n, m, trial).
    pub records: Vec<TrialRecord>,
    pub oracle: Vec<OracleEntry>,
    pub summary: SummaryStats,
}

/// Runs every trial of the grid and summarizes it, without touching disk.
///
/// Seeds are fixed before dispatch and results are sorted afterwards, so
/// the output does not depend on `exec` or on the thread count.
pub fn run_campaign(
    config: &ExperimentConfig,
    exec: Execution,
    c_star: Option<f64>,
) -> Result<CampaignResult> {
    config.validate()?;
    let tasks: Vec<(usize, usize, usize)> = config
        .cells()
        .into_iter()
        .flat_map(|(n, m)| (0..config.trials).map(move |t| (n, m, t)))
        .collect();
    let options = TrialOptions {
        record_timing: config.record_timings,
        oracle_exec: Execution::Sequential,
    };
    let outcomes = exec.map(&tasks, |&(n, m, t)| {
        let seed = trial_seed(config.master_seed, n, m, t);
        let out = run_trial_with(n, m, t, seed, config.oracle_samples, options)
            .and_then(|o| o.record.check_invariants().map(|_| o));
        (n, m, t, seed, out)
    });

    let mut records = Vec::with_capacity(tasks.len());
    let mut oracle = Vec::new();
    let mut failures = Vec::new();
    for (n, m, trial, seed, out) in outcomes {
        match out {
            Ok(o) => {
                if let Some(deltas) = o.oracle {
                    oracle.push(OracleEntry {
                        n,
                        m,
                        trial,
                        deltas,
                    });
                }
                records.push(o.record);
            }
            Err(e) => failures.push(TrialFailure {
                n,
                m,
                trial,
                seed,
                error: e.to_string(),
            }),
        }
    }
    records.sort_by_key(|r| (r.n, r.m, r.trial));
    oracle.sort_by_key(|o| (o.n, o.m, o.trial));
    failures.sort_by_key(|f| (f.n, f.m, f.trial));
    let summary = summarize(config, &records, failures, c_star)?;
    Ok(CampaignResult {
        records,
        oracle,
        summary,
    })
}

/// Runs the campaign and writes records, oracle deltas and the summary into
/// `config.output_dir`. Returns the result together with the files written.
pub fn run_experiment(
    config: &ExperimentConfig,
    exec: Execution,
    c_star: Option<f64>,
) -> Result<(CampaignResult, Vec<PathBuf>)> {
    let result = run_campaign(config, exec, c_star)?;
    let dir = &config.output_dir;
    let mut written = emit_records(&result.records, dir, config.emit)?;
    if !result.oracle.is_empty() {
        let path = dir.join(ORACLE_FILE);
        let mut text = String::new();
        for entry in &result.oracle {
            text.push_str(&serde_json::to_string(entry).expect("oracle entry serializes"));
            text.push('\n');
        }
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    let path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&result.summary).expect("summary serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok((result, written))
}

pub fn summarize(
    config: &ExperimentConfig,
    records: &[TrialRecord],
    failures: Vec<TrialFailure>,
    c_star: Option<f64>,
) -> Result<SummaryStats> {
    let inradius = check_inradius_bound(records, config.alpha_rule);
    let moments = check_second_moment_bound(records)?;
    let growth = vol_root_growth(records)?;
    let main = match c_star {
        Some(c) => Some(check_main_theorem(records, c)?),
        None => None,
    };
    let mut cells = Vec::new();
    for (i, ((n, m), rs)) in super::checks::by_cell(records).into_iter().enumerate() {
        let q = |f: fn(&TrialRecord) -> f64| {
            Quantiles::of(rs.iter().map(|r| f(r))).expect("non-empty cell")
        };
        let theorem = main.as_ref().map(|cells| &cells[i]);
        let log = (m as f64 / n as f64).ln();
        cells.push(CellSummary {
            n,
            m,
            completed: rs.len(),
            failed: failures.iter().filter(|f| (f.n, f.m) == (n, m)).count(),
            resampled: rs.iter().map(|r| r.resampled as u64).sum(),
            l_k: q(|r| r.l_k),
            vol_root: q(|r| r.vol_root),
            inradius: q(|r| r.inradius),
            mean_square: q(|r| r.mean_square),
            max_facet_cross: q(|r| r.max_facet_cross),
            facet_count: q(|r| r.facet_count as f64),
            alpha: inradius[i].alpha,
            inradius_violations: inradius[i].violations,
            c_emp: moments.cells[i].c_emp,
            facet_ratio: moments.cells[i].facet_ratio,
            vol_root_scaled_median: growth[i].scaled_median,
            l_k_exceedances: theorem.map(|t| t.trials - t.below),
            bound_shape: 1.0 - (-(n as f64) * log.min(1.0)).exp(),
        });
    }
    Ok(SummaryStats {
        config_hash: config.content_hash(),
        master_seed: config.master_seed,
        trials_per_cell: config.trials,
        c_star,
        c_emp_spread: moments.spread,
        cells,
        failures,
    })
}
