use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One grid entry: an explicit (n, m) pair or a ratio rule m = ⌈ratio·n⌉.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridCell {
    Pair { n: usize, m: usize },
    Ratio { n: usize, ratio: f64 },
}

impl GridCell {
    /// The concrete (n, m) this entry stands for.
    pub fn resolve(&self) -> (usize, usize) {
        match *self {
            GridCell::Pair { n, m } => (n, m),
            GridCell::Ratio { n, ratio } => (n, (ratio * n as f64 - 1e-9).ceil().max(0.0) as usize),
        }
    }
}

/// Radius below which a trial counts as an inradius violation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRule {
    /// α = (1/(2√2))·√(ln(m/n)/n).
    PaperDefault,
    Fixed(f64),
}

impl AlphaRule {
    pub fn alpha(&self, n: usize, m: usize) -> f64 {
        match *self {
            AlphaRule::PaperDefault => {
                let ratio = m as f64 / n as f64;
                (ratio.ln() / n as f64).sqrt() / (2.0 * 2f64.sqrt())
            }
            AlphaRule::Fixed(a) => a,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmitFlags {
    pub csv: bool,
    pub jsonl: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        Self {
            csv: true,
            jsonl: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: Vec<GridCell>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub oracle_samples: usize,
    #[serde(default = "default_alpha_rule")]
    pub alpha_rule: AlphaRule,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit: EmitFlags,
    /// Fill `wall_time_ms`; off by default so outputs stay byte-reproducible.
    #[serde(default)]
    pub record_timings: bool,
}

fn default_alpha_rule() -> AlphaRule {
    AlphaRule::PaperDefault
}

pub const DEFAULT_MASTER_SEED: u64 = 20_070_701;
pub const DEFAULT_DIMENSIONS: std::ops::RangeInclusive<usize> = 2..=8;
pub const DEFAULT_RATIOS: [f64; 4] = [1.5, 2.0, 3.0, 8.0];
pub const DEFAULT_TRIALS: usize = 200;

impl ExperimentConfig {
    /// n ∈ {2..8}, m/n ∈ {1.5, 2, 3, 8}, 200 trials per cell.
    pub fn default_grid(output_dir: impl Into<PathBuf>) -> Self {
        let grid = DEFAULT_DIMENSIONS
            .flat_map(|n| {
                DEFAULT_RATIOS
                    .iter()
                    .map(move |&ratio| GridCell::Ratio { n, ratio })
            })
            .collect();
        Self {
            grid,
            trials: DEFAULT_TRIALS,
            master_seed: DEFAULT_MASTER_SEED,
            oracle_samples: 0,
            alpha_rule: AlphaRule::PaperDefault,
            output_dir: output_dir.into(),
            emit: EmitFlags::default(),
            record_timings: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Resolved cells in canonical (n, m) order.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut cells: Vec<_> = self.grid.iter().map(GridCell::resolve).collect();
        cells.sort_unstable();
        cells
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials per cell must be at least 1".into()));
        }
        if let AlphaRule::Fixed(a) = self.alpha_rule {
            if !(a >= 0.0) {
                return Err(Error::Config(format!(
                    "fixed alpha {a} must be non-negative"
                )));
            }
        }
        if self.oracle_samples == 1 {
            return Err(Error::Config(
                "oracle_samples must be 0 or at least 2".into(),
            ));
        }
        for cell in &self.grid {
            if let GridCell::Ratio { ratio, .. } = cell {
                if !(ratio.is_finite() && *ratio > 1.0) {
                    return Err(Error::Config(format!("ratio {ratio} must exceed 1")));
                }
            }
            let (n, m) = cell.resolve();
            if n < 2 {
                return Err(Error::Config(format!(
                    "cell {cell:?}: dimension must be at least 2"
                )));
            }
            if m <= n {
                return Err(Error::Config(format!(
                    "cell {cell:?}: need m > n (resolved m = {m}, n = {n})"
                )));
            }
        }
        let cells = self.cells();
        if cells.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(
                "grid resolves to duplicate (n, m) cells".into(),
            ));
        }
        Ok(())
    }

    /// SHA-256 of the fields that determine campaign output (everything
    /// except where the files go).
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let text = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_resolves() {
        let cfg = ExperimentConfig::default_grid("out");
        cfg.validate().unwrap();
        let cells = cfg.cells();
        assert_eq!(cells.len(), 28);
        assert!(cells.contains(&(2, 3)));
        assert!(cells.contains(&(3, 5)));
        assert!(cells.contains(&(8, 64)));
        assert!(cells.iter().all(|&(n, m)| m > n));
    }

    #[test]
    fn rejects_zero_trials_and_small_m() {
        let mut cfg = ExperimentConfig::default_grid("out");
        cfg.trials = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = ExperimentConfig::default_grid("out");
        cfg.grid = vec![GridCell::Pair { n: 4, m: 4 }];
        assert!(cfg.validate().is_err());
        cfg.grid = vec![GridCell::Ratio { n: 4, ratio: 1.0 }];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_roundtrip_and_unknown_keys() {
        let text = r#"{
            "grid": [{"n": 3, "m": 12}, {"n": 4, "ratio": 2.0}],
            "trials": 5,
            "master_seed": 9,
            "oracle_samples": 0,
            "alpha_rule": {"fixed": 0.1},
            "output_dir": "runs/a",
            "emit": {"csv": true, "jsonl": false}
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.cells(), vec![(3, 12), (4, 8)]);
        assert_eq!(cfg.alpha_rule, AlphaRule::Fixed(0.1));
        let again = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert!(ExperimentConfig::from_json(r#"{"grid": [], "bogus": 1}"#).is_err());
        let paper = r#"{"grid": [{"n": 3, "m": 12}], "trials": 1, "master_seed": 1,
                        "alpha_rule": "paper_default", "output_dir": "x"}"#;
        assert_eq!(
            ExperimentConfig::from_json(paper).unwrap().alpha_rule,
            AlphaRule::PaperDefault
        );
    }

    #[test]
    fn paper_alpha_value() {
        let a = AlphaRule::PaperDefault.alpha(8, 64);
        assert!((a - (8f64.ln() / 8.0).sqrt() / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((a - 0.1803).abs() < 1e-4);
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::default_grid("x");
        let b = ExperimentConfig::default_grid("y");
        assert_eq!(a.content_hash(), b.content_hash());
        let mut c = a.clone();
        c.master_seed += 1;
        assert_ne!(a.content_hash(), c.content_hash());
    }
}
