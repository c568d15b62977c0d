use crate::error::{Error, Result};
use crate::formats::check_version;
use crate::pinning::{EstimatorChoice, TiConfig, ORACLE_MAX_SITES};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// One side length or several.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sizes {
    One(usize),
    Many(Vec<usize>),
}

impl Sizes {
    pub fn list(&self) -> Vec<usize> {
        match self {
            Sizes::One(n) => vec![*n],
            Sizes::Many(v) => v.clone(),
        }
    }
}

/// Phase-diagram scan settings. The JSON file uses exactly these field
/// names; `ti`, `epsilon` and `bound_mass` may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub d: usize,
    pub n: Sizes,
    pub a: f64,
    pub b_grid: Vec<f64>,
    pub h_grid: Vec<f64>,
    /// Environments per grid point.
    pub environments: usize,
    /// Importance samples per estimate.
    pub samples: usize,
    pub estimator: EstimatorChoice,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format_version: String,
    #[serde(default)]
    pub ti: TiConfig,
    /// Half-width of the `−b + h` range covered by the bound predicates.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Reference mass for the d = 2 constants.
    #[serde(default = "default_bound_mass")]
    pub bound_mass: f64,
}

fn default_epsilon() -> f64 {
    crate::bounds::DEFAULT_EPSILON
}

fn default_bound_mass() -> f64 {
    0.01
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            d: 2,
            n: Sizes::One(8),
            a: 1.0,
            b_grid: vec![0.0, 0.5, 1.0],
            h_grid: vec![-0.3, 0.0, 0.3],
            environments: 4,
            samples: 20_000,
            estimator: EstimatorChoice::Auto,
            seed: 0,
            workers: 0,
            out: None,
            format_version: crate::FORMAT_VERSION.to_string(),
            ti: TiConfig::default(),
            epsilon: default_epsilon(),
            bound_mass: default_bound_mass(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl ScanConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScanConfig =
            serde_json::from_str(text).map_err(|e| invalid(format!("scan config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Single-line form used in output headers.
    pub fn to_json_compact(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        check_version(&self.format_version)?;
        if self.d < 2 {
            return Err(invalid(format!("d must be ≥ 2, got {}", self.d)));
        }
        let sizes = self.n.list();
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(invalid("n must be a non-empty list of positive sizes"));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(invalid(format!(
                "a must be positive and finite, got {}",
                self.a
            )));
        }
        for (name, grid) in [("b_grid", &self.b_grid), ("h_grid", &self.h_grid)] {
            if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("{name} must be non-empty and finite")));
            }
        }
        if self.b_grid.iter().any(|&b| b < 0.0) {
            return Err(invalid("b_grid values must be ≥ 0"));
        }
        if self.environments == 0 {
            return Err(invalid("environments must be ≥ 1"));
        }
        if self.samples == 0 {
            return Err(invalid("samples must be ≥ 1"));
        }
        if matches!(self.estimator, EstimatorChoice::Is | EstimatorChoice::Auto)
            && self.samples < 100
        {
            return Err(invalid("importance sampling needs samples ≥ 100"));
        }
        if self.estimator == EstimatorChoice::Oracle {
            for &n in &sizes {
                let sites = n.checked_pow(self.d as u32).unwrap_or(usize::MAX);
                if sites > ORACLE_MAX_SITES {
                    return Err(invalid(format!(
                        "oracle estimator handles at most {ORACLE_MAX_SITES} sites, n = {n} gives {sites}"
                    )));
                }
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(invalid("epsilon must be positive"));
        }
        if !(self.bound_mass > 0.0 && self.bound_mass < 0.5) {
            return Err(invalid("bound_mass must lie in (0, 0.5)"));
        }
        self.ti.validate()
    }
}

/// Command-line values that replace fields of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct ScanOverrides {
    pub d: Option<usize>,
    pub n: Option<Vec<usize>>,
    pub a: Option<f64>,
    pub b_grid: Option<Vec<f64>>,
    pub h_grid: Option<Vec<f64>>,
    pub environments: Option<usize>,
    pub samples: Option<usize>,
    pub estimator: Option<EstimatorChoice>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub bound_mass: Option<f64>,
}

impl ScanOverrides {
    pub fn apply(self, mut cfg: ScanConfig) -> Result<ScanConfig> {
        if let Some(v) = self.d {
            cfg.d = v;
        }
        if let Some(v) = self.n {
            cfg.n = if v.len() == 1 {
                Sizes::One(v[0])
            } else {
                Sizes::Many(v)
            };
        }
        if let Some(v) = self.a {
            cfg.a = v;
        }
        if let Some(v) = self.b_grid {
            cfg.b_grid = v;
        }
        if let Some(v) = self.h_grid {
            cfg.h_grid = v;
        }
        if let Some(v) = self.environments {
            cfg.environments = v;
        }
        if let Some(v) = self.samples {
            cfg.samples = v;
        }
        if let Some(v) = self.estimator {
            cfg.estimator = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.out {
            cfg.out = Some(v);
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.bound_mass {
            cfg.bound_mass = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses a grid: either a comma list (`0,0.5,1`) or `lo:hi:count` for
/// `count` evenly spaced points including both ends.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| invalid(format!("bad number {s:?} in grid {spec:?}")))
    };
    let grid = if let [lo, hi, count] = spec.split(':').collect::<Vec<_>>()[..] {
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| invalid(format!("bad point count in grid {spec:?}")))?;
        match count {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    } else {
        spec.split(',').map(parse).collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
        return Err(invalid(format!(
            "grid {spec:?} must be non-empty and finite"
        )));
    }
    Ok(grid)
}

pub fn parse_sizes(spec: &str) -> Result<Vec<usize>> {
    let sizes = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| invalid(format!("bad size {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if sizes.is_empty() {
        return Err(invalid("empty size list"));
    }
    Ok(sizes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let cfg = ScanConfig::default();
        cfg.validate().unwrap();
        assert_eq!(ScanConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert_eq!(ScanConfig::from_json(&cfg.to_json_compact()).unwrap(), cfg);
    }

    #[test]
    fn optional_fields_take_defaults() {
        let text = r#"{"d":3,"n":[2,4],"a":0.5,"b_grid":[1],"h_grid":[0],
            "environments":2,"samples":500,"estimator":"ti","seed":7,"workers":2,
            "format_version":"1.0"}"#;
        let cfg = ScanConfig::from_json(text).unwrap();
        assert_eq!(cfg.n.list(), vec![2, 4]);
        assert_eq!(cfg.ti, TiConfig::default());
        assert_eq!(cfg.estimator, EstimatorChoice::Ti);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            ScanConfig {
                b_grid: vec![],
                ..Default::default()
            },
            ScanConfig {
                h_grid: vec![f64::NAN],
                ..Default::default()
            },
            ScanConfig {
                environments: 0,
                ..Default::default()
            },
            ScanConfig {
                samples: 0,
                ..Default::default()
            },
            ScanConfig {
                d: 1,
                ..Default::default()
            },
            ScanConfig {
                a: 0.0,
                ..Default::default()
            },
            ScanConfig {
                n: Sizes::Many(vec![]),
                ..Default::default()
            },
            ScanConfig {
                format_version: "2.0".into(),
                ..Default::default()
            },
            ScanConfig {
                estimator: EstimatorChoice::Oracle,
                n: Sizes::One(4),
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        let unknown = ScanConfig::default()
            .to_json()
            .replacen("{", "{\"extra\": 1,", 1);
        assert!(ScanConfig::from_json(&unknown).is_err());
    }

    #[test]
    fn overrides_win() {
        let o = ScanOverrides {
            n: Some(vec![4]),
            seed: Some(11),
            h_grid: Some(vec![0.1]),
            ..Default::default()
        };
        let cfg = o.apply(ScanConfig::default()).unwrap();
        assert_eq!(cfg.n, Sizes::One(4));
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.h_grid, vec![0.1]);
        let bad = ScanOverrides {
            a: Some(-1.0),
            ..Default::default()
        };
        assert!(bad.apply(ScanConfig::default()).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0,0.5, 1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(
            parse_grid("-1:1:5").unwrap(),
            vec![-1.0, -0.5, 0.0, 0.5, 1.0]
        );
        assert_eq!(parse_grid("2:3:1").unwrap(), vec![2.0]);
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("inf").is_err());
        assert_eq!(parse_sizes("4,8").unwrap(), vec![4, 8]);
        assert!(parse_sizes("4,x").is_err());
    }
}
