use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hull::{symmetric_hull, validate_complex};
use crate::isotropy::isotropy_constant;
use crate::moments::{max_facet_cross, moment_summary, MomentSummary};
use crate::oracle::{mc_moment_oracle, OracleReport};
use crate::rng::{derive_seed, RngStream};
use crate::sphere::sample_symmetric_cloud;

/// Maximum number of degeneracy re-draws before a trial is declared failed.
pub const MAX_REDRAWS: u32 = 8;

/// Label separating the oracle's random stream from the point-cloud stream.
const ORACLE_LABEL: u64 = 0x6f72_6163_6c65;

/// Largest dimension at which the oracle also estimates the volume.
const ORACLE_VOLUME_MAX_DIM: usize = 5;

/// Relative agreement required between the two mean-square paths.
pub const TRACE_TOL: f64 = 1e-10;

/// One sample of the random body and everything derived from it.
///
/// Field names double as the CSV header and the JSONL keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    pub l_k: f64,
    pub identity_bound: f64,
    pub vol_root: f64,
    pub inradius: f64,
    pub mean_square: f64,
    pub max_facet_cross: f64,
    pub facet_count: usize,
    pub resampled: u32,
    pub wall_time_ms: f64,
}

impl TrialRecord {
    /// Checks the ordering and positivity every record must satisfy.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n as f64;
        let ok = self.l_k > 0.0
            && self.l_k <= self.identity_bound * (1.0 + 1e-12)
            && self.vol_root > 0.0
            && self.inradius > 0.0
            && self.inradius <= 1.0 + 1e-12
            && self.mean_square > 0.0
            && self.mean_square <= 1.0
            && self.max_facet_cross >= -n - 1e-9
            && self.facet_count > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::ContractViolation(format!(
                "record invariants broken: {self:?}"
            )))
        }
    }
}

/// Monte Carlo cross-check of one trial, in standard-error units
/// (exact minus estimate, divided by the estimate's standard error).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleDeltas {
    pub samples: usize,
    pub volume: Option<f64>,
    pub mean_square: f64,
    /// Largest absolute z-score over the upper triangle of the covariance.
    pub covariance_max: f64,
}

impl OracleDeltas {
    pub fn max_abs(&self) -> f64 {
        self.volume
            .unwrap_or(0.0)
            .abs()
            .max(self.mean_square.abs())
            .max(self.covariance_max)
    }

    pub fn compare(summary: &MomentSummary, report: &OracleReport) -> Self {
        let n = summary.covariance.nrows();
        let mut covariance_max: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let se = report.covariance_se[(i, j)];
                let diff = summary.covariance[(i, j)] - report.covariance[(i, j)];
                let z = if se > 0.0 {
                    diff / se
                } else if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                covariance_max = covariance_max.max(z.abs());
            }
        }
        Self {
            samples: report.samples,
            volume: report.volume.map(|v| v.z_score(summary.volume)),
            mean_square: report.mean_square.z_score(summary.mean_square),
            covariance_max,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub oracle: Option<OracleDeltas>,
}

/// Knobs that do not change the numbers in a record.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrialOptions {
    pub record_timing: bool,
    /// Execution used for the oracle's sample chunks.
    pub oracle_exec: Execution,
}

/// Runs sample → hull → validate → moments → isotropy for one seed.
///
/// Only hull degeneracy triggers a re-draw. A complex that fails validation
/// or moments whose two mean-square paths disagree fail the trial outright.
///
/// `wall_time_ms` is left at zero so records are reproducible byte for byte;
/// see [`run_trial_with`] to fill it.
pub fn run_trial(n: usize, m: usize, seed: u64, oracle_samples: usize) -> Result<TrialOutcome> {
    run_trial_with(n, m, 0, seed, oracle_samples, TrialOptions::default())
}

pub fn run_trial_with(
    n: usize,
    m: usize,
    trial: usize,
    seed: u64,
    oracle_samples: usize,
    options: TrialOptions,
) -> Result<TrialOutcome> {
    if n < 2 || m <= n {
        return Err(Error::InvalidArgument(format!(
            "need m > n >= 2, got n = {n}, m = {m}"
        )));
    }
    let start = Instant::now();
    let mut last = String::new();
    for attempt in 0..=MAX_REDRAWS {
        let draw_seed = if attempt == 0 {
            seed
        } else {
            derive_seed(seed, &[attempt as u64])
        };
        let cloud = sample_symmetric_cloud(n, m, draw_seed)?;
        let fc = match symmetric_hull(&cloud) {
            Ok(fc) => fc,
            Err(e) if e.is_numerical() => {
                last = e.to_string();
                continue;
            }
            Err(e) => return Err(e),
        };
        // Past this point a failure is a defect, not bad luck: no re-draw.
        let report = validate_complex(&fc);
        if let Some(check) = report.failures().next() {
            return Err(Error::InvalidComplex(format!(
                "{:?} check failed on {} offenders",
                check.kind,
                check.offenders.len()
            )));
        }
        let summary = moment_summary(&fc)?;
        let trace = summary.covariance.trace();
        if (trace - summary.mean_square).abs() > TRACE_TOL * summary.mean_square {
            return Err(Error::ContractViolation(format!(
                "trace of covariance {trace} differs from mean square {}",
                summary.mean_square
            )));
        }
        let iso = isotropy_constant(summary.volume, &summary.covariance)?;
        let oracle = if oracle_samples > 0 {
            let stream = RngStream::new(draw_seed, &[ORACLE_LABEL]);
            let with_volume = n <= ORACLE_VOLUME_MAX_DIM;
            let report = mc_moment_oracle(
                &fc,
                oracle_samples,
                &stream,
                with_volume,
                options.oracle_exec,
            )?;
            Some(OracleDeltas::compare(&summary, &report))
        } else {
            None
        };
        let wall_time_ms = if options.record_timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        let record = TrialRecord {
            n,
            m,
            trial,
            seed,
            l_k: iso.l_k,
            identity_bound: iso.identity_bound,
            vol_root: iso.vol_root,
            inradius: summary.inradius,
            mean_square: summary.mean_square,
            max_facet_cross: max_facet_cross(&fc)?,
            facet_count: fc.facet_count(),
            resampled: attempt,
            wall_time_ms,
        };
        return Ok(TrialOutcome { record, oracle });
    }
    Err(Error::TrialFailed {
        attempts: MAX_REDRAWS,
        last,
    })
}

/// The seed actually used for the cloud after `resampled` re-draws.
pub fn draw_seed(seed: u64, resampled: u32) -> u64 {
    if resampled == 0 {
        seed
    } else {
        derive_seed(seed, &[resampled as u64])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = run_trial(3, 12, 7, 0).unwrap().record;
        let b = run_trial(3, 12, 7, 0).unwrap().record;
        assert_eq!(a, b);
        assert_eq!(a.wall_time_ms, 0.0);
        assert_eq!(a.resampled, 0);
    }

    #[test]
    fn planar_trial_invariants() {
        for seed in 0..20 {
            let r = run_trial(2, 3, seed, 0).unwrap().record;
            r.check_invariants().unwrap();
            assert!(r.l_k > 0.0 && r.l_k <= r.identity_bound);
        }
    }

    #[test]
    fn rejects_bad_shape() {
        assert!(matches!(
            run_trial(3, 3, 1, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            run_trial(1, 3, 1, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn oracle_attached_on_request() {
        let out = run_trial(3, 9, 11, 20_000).unwrap();
        let deltas = out.oracle.unwrap();
        assert_eq!(deltas.samples, 20_000);
        assert!(deltas.volume.is_some());
        assert!(deltas.max_abs() < 5.0, "{deltas:?}");
        assert_eq!(run_trial(3, 9, 11, 0).unwrap().record, out.record);
    }

    #[test]
    fn timing_only_touches_wall_time() {
        let opts = TrialOptions {
            record_timing: true,
            ..Default::default()
        };
        let timed = run_trial_with(3, 12, 0, 7, 0, opts).unwrap().record;
        let mut plain = run_trial(3, 12, 7, 0).unwrap().record;
        assert!(timed.wall_time_ms > 0.0);
        plain.wall_time_ms = timed.wall_time_ms;
        assert_eq!(plain, timed);
    }
}
