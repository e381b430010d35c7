use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::AlphaRule;
use super::trial::TrialRecord;

/// Order statistics of one scalar over a cell, with linearly interpolated
/// quantiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub max: f64,
}

impl Quantiles {
    /// `None` for an empty sample.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q05: quantile(&v, 0.05),
            q25: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q75: quantile(&v, 0.75),
            q95: quantile(&v, 0.95),
            max: v[v.len() - 1],
        })
    }
}

/// Quantile of sorted data with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Records grouped by (n, m), in canonical order.
pub fn by_cell(records: &[TrialRecord]) -> BTreeMap<(usize, usize), Vec<&TrialRecord>> {
    let mut cells: BTreeMap<_, Vec<_>> = BTreeMap::new();
    for r in records {
        cells.entry((r.n, r.m)).or_default().push(r);
    }
    cells
}

fn log_ratio(n: usize, m: usize) -> Result<f64> {
    if m <= n {
        return Err(Error::InvalidArgument(format!(
            "cell (n = {n}, m = {m}) has m ≤ n"
        )));
    }
    Ok((m as f64 / n as f64).ln())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InradiusCell {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub trials: usize,
    pub violations: usize,
    pub rate: f64,
    /// e^{-n}, the failure probability the bound is stated with.
    pub reference_rate: f64,
}

/// Counts trials whose inradius falls below α per cell.
pub fn check_inradius_bound(records: &[TrialRecord], rule: AlphaRule) -> Vec<InradiusCell> {
    by_cell(records)
        .into_iter()
        .map(|((n, m), rs)| {
            let alpha = rule.alpha(n, m);
            let violations = rs.iter().filter(|r| r.inradius < alpha).count();
            InradiusCell {
                n,
                m,
                alpha,
                trials: rs.len(),
                violations,
                rate: violations as f64 / rs.len() as f64,
                reference_rate: (-(n as f64)).exp(),
            }
        })
        .collect()
}

/// Cells on which C_emp is expected to be stable: m = 3n with 4 ≤ n ≤ 8.
/// Near m = n the ratio ln(m/n) vanishes and C_emp grows without bound, so
/// the whole grid is not a meaningful stability region.
pub fn in_stability_slice(n: usize, m: usize) -> bool {
    m == 3 * n && (4..=8).contains(&n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentCell {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    /// max over trials of mean_square·n/ln(m/n).
    pub c_emp: f64,
    /// max over trials of max_facet_cross/(n·ln(m/n)).
    pub facet_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentReport {
    pub cells: Vec<SecondMomentCell>,
    /// Largest over smallest C_emp across all reported cells.
    pub spread: f64,
    /// Largest over smallest C_emp across the stability slice, if present.
    pub slice_spread: Option<f64>,
}

impl SecondMomentReport {
    pub fn c_emp_range(&self) -> (f64, f64) {
        range(self.cells.iter())
    }

    /// C_emp range over the cells in the stability slice.
    pub fn slice_range(&self) -> Option<(f64, f64)> {
        let mut slice = self.slice_cells().peekable();
        slice.peek()?;
        Some(range(slice))
    }

    pub fn slice_cells(&self) -> impl Iterator<Item = &SecondMomentCell> {
        self.cells.iter().filter(|c| in_stability_slice(c.n, c.m))
    }
}

fn range<'a>(cells: impl Iterator<Item = &'a SecondMomentCell>) -> (f64, f64) {
    cells.fold((f64::INFINITY, 0.0), |(lo, hi), c| {
        (lo.min(c.c_emp), hi.max(c.c_emp))
    })
}

/// Fits C in mean_square ≤ C·ln(m/n)/n per cell.
pub fn check_second_moment_bound(records: &[TrialRecord]) -> Result<SecondMomentReport> {
    let mut cells = Vec::new();
    for ((n, m), rs) in by_cell(records) {
        let log = log_ratio(n, m)?;
        let nf = n as f64;
        cells.push(SecondMomentCell {
            n,
            m,
            trials: rs.len(),
            c_emp: rs
                .iter()
                .map(|r| r.mean_square * nf / log)
                .fold(f64::NEG_INFINITY, f64::max),
            facet_ratio: rs
                .iter()
                .map(|r| r.max_facet_cross / (nf * log))
                .fold(f64::NEG_INFINITY, f64::max),
        });
    }
    let mut report = SecondMomentReport {
        cells,
        spread: 1.0,
        slice_spread: None,
    };
    if !report.cells.is_empty() {
        let (lo, hi) = report.c_emp_range();
        report.spread = hi / lo;
    }
    report.slice_spread = report.slice_range().map(|(lo, hi)| hi / lo);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainTheoremCell {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub below: usize,
    pub fraction: f64,
    /// 1 − e^{−n·min(1, ln(m/n))}, the bound's shape with unit constants.
    pub bound_shape: f64,
}

/// Fraction of trials per cell with l_k ≤ c_star.
pub fn check_main_theorem(records: &[TrialRecord], c_star: f64) -> Result<Vec<MainTheoremCell>> {
    if !(c_star > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "c_star = {c_star} must be positive"
        )));
    }
    by_cell(records)
        .into_iter()
        .map(|((n, m), rs)| {
            let log = log_ratio(n, m)?;
            let below = rs.iter().filter(|r| r.l_k <= c_star).count();
            Ok(MainTheoremCell {
                n,
                m,
                trials: rs.len(),
                below,
                fraction: below as f64 / rs.len() as f64,
                bound_shape: 1.0 - (-(n as f64) * log.min(1.0)).exp(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolRootCell {
    pub n: usize,
    pub m: usize,
    /// median of vol_root·n/√ln(m/n).
    pub scaled_median: f64,
}

/// The lower-bound shape |K|^{1/n} ≳ √ln(m/n)/n, one fitted value per cell.
pub fn vol_root_growth(records: &[TrialRecord]) -> Result<Vec<VolRootCell>> {
    by_cell(records)
        .into_iter()
        .map(|((n, m), rs)| {
            let scale = n as f64 / log_ratio(n, m)?.sqrt();
            let q =
                Quantiles::of(rs.iter().map(|r| r.vol_root * scale)).expect("cell is non-empty");
            Ok(VolRootCell {
                n,
                m,
                scaled_median: q.median,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(
        n: usize,
        m: usize,
        trial: usize,
        l_k: f64,
        inradius: f64,
        mean_square: f64,
    ) -> TrialRecord {
        TrialRecord {
            n,
            m,
            trial,
            seed: trial as u64,
            l_k,
            identity_bound: l_k * 1.1,
            vol_root: 0.5,
            inradius,
            mean_square,
            max_facet_cross: 0.25,
            facet_count: 10,
            resampled: 0,
            wall_time_ms: 0.0,
        }
    }

    fn sample() -> Vec<TrialRecord> {
        vec![
            rec(4, 8, 0, 0.25, 0.10, 0.12),
            rec(4, 8, 1, 0.27, 0.30, 0.10),
            rec(3, 12, 0, 0.26, 0.40, 0.20),
        ]
    }

    #[test]
    fn quantiles_interpolate() {
        let q = Quantiles::of([4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((q.min, q.max), (1.0, 4.0));
        assert_eq!(q.median, 2.5);
        assert!((q.q25 - 1.75).abs() < 1e-15);
        assert!(Quantiles::of(std::iter::empty()).is_none());
    }

    #[test]
    fn inradius_counts() {
        let cells = check_inradius_bound(&sample(), AlphaRule::Fixed(0.2));
        assert_eq!(cells.len(), 2);
        assert_eq!((cells[0].n, cells[0].m, cells[0].violations), (3, 12, 0));
        assert_eq!((cells[1].n, cells[1].m, cells[1].violations), (4, 8, 1));
        let zero = check_inradius_bound(&sample(), AlphaRule::Fixed(0.0));
        assert!(zero.iter().all(|c| c.violations == 0));
    }

    #[test]
    fn second_moment_uses_natural_log_ratio() {
        let report = check_second_moment_bound(&sample()).unwrap();
        let cell = report.cells.iter().find(|c| (c.n, c.m) == (4, 8)).unwrap();
        assert!((cell.c_emp - 0.12 * 4.0 / 2f64.ln()).abs() < 1e-15);
        assert!((cell.facet_ratio - 0.25 / (4.0 * 2f64.ln())).abs() < 1e-15);
        assert!(report
            .cells
            .iter()
            .all(|c| c.c_emp.is_finite() && c.c_emp > 0.0));
        let bad = vec![rec(4, 4, 0, 0.2, 0.2, 0.2)];
        assert!(check_second_moment_bound(&bad).is_err());
        assert_eq!(report.slice_spread, None);
    }

    #[test]
    fn slice_range_ignores_other_cells() {
        let mut records = sample();
        records.push(rec(4, 12, 0, 0.2, 0.3, 0.2));
        records.push(rec(5, 15, 0, 0.2, 0.3, 0.3));
        let report = check_second_moment_bound(&records).unwrap();
        let (lo, hi) = report.slice_range().unwrap();
        assert!((lo - 0.8 / 3f64.ln()).abs() < 1e-15);
        assert!((hi - 1.5 / 3f64.ln()).abs() < 1e-15);
        assert!((report.slice_spread.unwrap() - 1.875).abs() < 1e-12);
        assert!(report.spread > report.slice_spread.unwrap());
        assert!(
            in_stability_slice(8, 24) && !in_stability_slice(2, 6) && !in_stability_slice(4, 8)
        );
    }

    #[test]
    fn main_theorem_extremes() {
        let all = check_main_theorem(&sample(), 1e300).unwrap();
        assert!(all.iter().all(|c| c.fraction == 1.0));
        let none = check_main_theorem(&sample(), 0.1).unwrap();
        assert!(none.iter().all(|c| c.fraction == 0.0));
        assert!(check_main_theorem(&sample(), 0.0).is_err());
        let shape = all.iter().find(|c| c.n == 4).unwrap().bound_shape;
        assert!((shape - (1.0 - (-4.0 * 2f64.ln()).exp())).abs() < 1e-15);
    }
}
