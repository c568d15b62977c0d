//! The disordered pinning model and its free-energy estimators.
//!
//! The interacting measure is the free field tilted by
//! `exp(Σ_x v_x 1{φ_x ∈ [−a, a]})`, `v_x = b·e_x + h`. All estimators target
//! the per-site log partition ratio
//!
//! ```text
//! f = |Λ|⁻¹ ln( Z^{e}_Λ / Z^{0}_Λ ) = |Λ|⁻¹ ln E_GFF[ exp(U(φ)) ],
//! U(φ) = Σ_x v_x 1{|φ_x| ≤ a}.
//! ```
//!
//! Three routes are provided: importance sampling from exact free-field
//! samples ([`estimate_quenched_is`]), thermodynamic integration with an exact
//! heat-bath chain ([`estimate_quenched_ti`]), and a deterministic
//! inclusion–exclusion oracle for boxes of at most 12 sites
//! ([`oracle_z_ratio`]).

mod importance;
mod oracle;
pub(crate) mod thermo;

pub use importance::estimate_quenched_is;
pub use oracle::{
    box_probability, oracle_estimate, oracle_z_ratio, OracleResult, ORACLE_MAX_SITES,
};
pub use thermo::{estimate_quenched_ti, sample_site_conditional, sweep_order, HeatBath, TiConfig};

use crate::bounds::annealed_strength;
use crate::error::{Error, Result};
use crate::formats::ResultRecord;
use crate::gaussfield::{self, GaussianModel};
use crate::lattice::{sample_environment, BoxSpec, Environment};
use crate::rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct PinningModel {
    env: Environment,
    a: f64,
    base: GaussianModel,
    potentials: Vec<f64>,
}

impl PinningModel {
    pub fn new(env: Environment, a: f64, base: GaussianModel) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("a must be > 0, got {a}")));
        }
        if env.bx != *base.box_spec() {
            return Err(Error::InvalidParameter(
                "environment and field live on different boxes".into(),
            ));
        }
        let potentials = env.potentials();
        if potentials.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite potential".into()));
        }
        Ok(PinningModel {
            env,
            a,
            base,
            potentials,
        })
    }

    /// Zero-boundary, massless free field under `env`.
    pub fn free(env: Environment, a: f64) -> Result<Self> {
        let base = gaussfield::build_model(&env.bx, 0.0, 0.0, 0.0)?;
        PinningModel::new(env, a, base)
    }

    /// Constant potential `v` at every site (homogeneous pinning).
    pub fn homogeneous(bx: &BoxSpec, v: f64, a: f64) -> Result<Self> {
        let env = Environment::from_signs(bx, 0.0, v, vec![1; bx.sites()])?;
        PinningModel::free(env, a)
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn half_width(&self) -> f64 {
        self.a
    }

    pub fn base(&self) -> &GaussianModel {
        &self.base
    }

    pub fn box_spec(&self) -> &BoxSpec {
        self.base.box_spec()
    }

    pub fn sites(&self) -> usize {
        self.potentials.len()
    }

    pub fn potentials(&self) -> &[f64] {
        &self.potentials
    }

    /// The same model at inverse temperature `beta`; the potential is left
    /// untouched.
    pub fn at_inverse_temperature(&self, beta: f64) -> Result<Self> {
        PinningModel::new(
            self.env.clone(),
            self.a,
            self.base.with_inverse_temperature(beta)?,
        )
    }

    /// Equivalent model at β = 1: `ψ = √β φ` turns the window into
    /// `[−a√β, a√β]` and scales boundary value and mass centre by `√β`. The
    /// partition ratio is unchanged.
    pub fn rescaled_to_unit_temperature(&self) -> Result<Self> {
        let s = self.base.beta().sqrt();
        let base = gaussfield::build_model(
            self.box_spec(),
            self.base.mass(),
            self.base.boundary_value() * s,
            self.base.mass_center() * s,
        )?;
        PinningModel::new(self.env.clone(), self.a * s, base)
    }

    #[inline]
    pub(crate) fn in_window(&self, phi: f64) -> bool {
        (-self.a..=self.a).contains(&phi)
    }

    /// Predicted variance of the importance log-weight, treating sites as
    /// independent: `Σ v_x² p_x (1 − p_x)` with `p_x` the free-field window
    /// probability.
    pub fn predicted_log_weight_variance(&self) -> f64 {
        let var = self.base.variances();
        let mean = self.base.mean();
        self.potentials
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let p = gaussfield::window_probability(mean[i], var[i], self.a, 0.0);
                v * v * p * (1.0 - p)
            })
            .sum()
    }
}

/// `Σ_x v_x 1{φ_x ∈ [−a, a]}`, window closed on both ends.
pub fn potential_energy(model: &PinningModel, phi: &[f64]) -> f64 {
    debug_assert_eq!(phi.len(), model.sites());
    model
        .potentials
        .iter()
        .zip(phi)
        .filter(|(_, &p)| model.in_window(p))
        .map(|(v, _)| v)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "IS")]
    Importance,
    #[serde(rename = "TI")]
    Thermodynamic,
    #[serde(rename = "ORACLE")]
    Oracle,
}

impl EstimatorKind {
    pub fn tag(self) -> &'static str {
        match self {
            EstimatorKind::Importance => "IS",
            EstimatorKind::Thermodynamic => "TI",
            EstimatorKind::Oracle => "ORACLE",
        }
    }
}

pub const FLAG_UNRELIABLE: &str = "unreliable";
pub const FLAG_NONSTATIONARY: &str = "nonstationary";
pub const FLAG_FAILED: &str = "failed";

#[derive(Debug, Clone, PartialEq)]
pub struct FreeEnergyEstimate {
    /// Per-site log partition ratio.
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub estimator: EstimatorKind,
    pub seed: u64,
    pub flags: Vec<String>,
    /// Estimator settings, e.g. `nodes=8 burn_in=200 sweeps=2000`.
    pub settings: String,
}

impl FreeEnergyEstimate {
    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }

    pub fn to_record(&self, model: &PinningModel) -> ResultRecord {
        let env = model.environment();
        ResultRecord {
            d: env.bx.dim(),
            n: env.bx.side(),
            a: model.half_width(),
            b: env.b,
            h: env.h,
            seed: self.seed,
            estimator: self.estimator.tag().to_string(),
            value: self.value,
            stderr: self.stderr,
            n_samples: self.n_samples,
            flags: self.flags.clone(),
            version: crate::FORMAT_VERSION.to_string(),
        }
    }
}

/// Which estimator to run. `Auto` picks importance sampling when the
/// predicted log-weight variance is at most [`AUTO_IS_MAX_VARIANCE`] and
/// thermodynamic integration otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    #[default]
    Auto,
    Is,
    Ti,
    Oracle,
}

pub const AUTO_IS_MAX_VARIANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub choice: EstimatorChoice,
    /// Importance samples.
    pub samples: usize,
    pub ti: TiConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            choice: EstimatorChoice::Auto,
            samples: 100_000,
            ti: TiConfig::default(),
        }
    }
}

/// Resolves `Auto` for a given model.
pub fn select_estimator(model: &PinningModel, choice: EstimatorChoice) -> EstimatorKind {
    match choice {
        EstimatorChoice::Is => EstimatorKind::Importance,
        EstimatorChoice::Ti => EstimatorKind::Thermodynamic,
        EstimatorChoice::Oracle => EstimatorKind::Oracle,
        EstimatorChoice::Auto => {
            if model.predicted_log_weight_variance() <= AUTO_IS_MAX_VARIANCE {
                EstimatorKind::Importance
            } else {
                EstimatorKind::Thermodynamic
            }
        }
    }
}

pub fn estimate_quenched(
    model: &PinningModel,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<FreeEnergyEstimate> {
    match select_estimator(model, config.choice) {
        EstimatorKind::Importance => estimate_quenched_is(model, config.samples, seed),
        EstimatorKind::Thermodynamic => estimate_quenched_ti(model, &config.ti, seed),
        EstimatorKind::Oracle => oracle_estimate(model),
    }
}

/// Annealed estimate: importance sampling on the homogeneous environment
/// `v ≡ ℓ(b, h) = h + ln cosh b`.
pub fn estimate_annealed(
    bx: &BoxSpec,
    b: f64,
    h: f64,
    a: f64,
    samples: usize,
    seed: u64,
) -> Result<FreeEnergyEstimate> {
    let config = EstimatorConfig {
        choice: EstimatorChoice::Is,
        samples,
        ..EstimatorConfig::default()
    };
    estimate_annealed_with(bx, b, h, a, &config, seed)
}

/// Annealed estimate with an explicit estimator choice.
pub fn estimate_annealed_with(
    bx: &BoxSpec,
    b: f64,
    h: f64,
    a: f64,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<FreeEnergyEstimate> {
    let l = annealed_strength(b, h);
    let mut env = Environment::from_signs(bx, 0.0, l, vec![1; bx.sites()])?;
    env.seed = seed;
    let model = PinningModel::free(env, a)?;
    estimate_quenched(&model, config, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisorderAverage {
    pub mean: f64,
    /// Standard error of `mean`: sample spread over environments, which
    /// includes estimator noise, divided by √K. With a single environment
    /// only the estimator error is available and is used instead.
    pub stderr: f64,
    /// Sample standard deviation of the per-environment values.
    pub between_env_sd: f64,
    /// Root mean square of the per-environment estimator stderrs.
    pub within_stderr: f64,
    pub values: Vec<FreeEnergyEstimate>,
    pub env_seeds: Vec<u64>,
    pub flags: Vec<String>,
}

/// Seed of environment `k` under master `seed`.
pub fn environment_seed(seed: u64, k: usize) -> u64 {
    rng::derive_seed(seed, &[rng::domain::DISORDER, k as u64, 0])
}

/// Estimator seed of environment `k` under master `seed`.
pub fn estimator_seed(seed: u64, k: usize) -> u64 {
    rng::derive_seed(seed, &[rng::domain::DISORDER, k as u64, 1])
}

/// Quenched estimates over `k` independently seeded environments.
pub fn disorder_average(
    bx: &BoxSpec,
    b: f64,
    h: f64,
    a: f64,
    k: usize,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<DisorderAverage> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "need at least 1 environment".into(),
        ));
    }
    let base = gaussfield::build_model(bx, 0.0, 0.0, 0.0)?;
    let env_seeds: Vec<u64> = (0..k).map(|i| environment_seed(seed, i)).collect();
    let values: Vec<FreeEnergyEstimate> = (0..k)
        .into_par_iter()
        .map(|i| {
            let env = sample_environment(bx, b, h, env_seeds[i]);
            let model = PinningModel::new(env, a, base.clone())?;
            estimate_quenched(&model, config, estimator_seed(seed, i))
        })
        .collect::<Result<_>>()?;
    let kf = k as f64;
    let mean = values.iter().map(|e| e.value).sum::<f64>() / kf;
    let var = if k > 1 {
        values.iter().map(|e| (e.value - mean).powi(2)).sum::<f64>() / (kf - 1.0)
    } else {
        0.0
    };
    let within = (values.iter().map(|e| e.stderr * e.stderr).sum::<f64>() / kf).sqrt();
    let mut flags: Vec<String> = values.iter().flat_map(|e| e.flags.clone()).collect();
    flags.sort();
    flags.dedup();
    Ok(DisorderAverage {
        mean,
        stderr: if k > 1 { (var / kf).sqrt() } else { within },
        between_env_sd: var.sqrt(),
        within_stderr: within,
        values,
        env_seeds,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_site(v: f64, a: f64) -> PinningModel {
        PinningModel::homogeneous(&BoxSpec::new(2, 1).unwrap(), v, a).unwrap()
    }

    #[test]
    fn potential_energy_window_is_closed() {
        let m = single_site(0.7, 1.0);
        assert_eq!(potential_energy(&m, &[0.0]), 0.7);
        assert_eq!(potential_energy(&m, &[1.0]), 0.7);
        assert_eq!(potential_energy(&m, &[-1.0]), 0.7);
        assert_eq!(potential_energy(&m, &[1.0 + 1e-12]), 0.0);
        let bx = BoxSpec::new(2, 2).unwrap();
        let env = sample_environment(&bx, 1.0, 0.2, 3);
        let m = PinningModel::free(env, 0.5).unwrap();
        assert_eq!(potential_energy(&m, &[0.6, -0.7, 3.0, -9.0]), 0.0);
    }

    #[test]
    fn model_validation() {
        let bx = BoxSpec::new(2, 2).unwrap();
        let env = sample_environment(&bx, 1.0, 0.0, 1);
        assert!(PinningModel::free(env.clone(), 0.0).is_err());
        let other = gaussfield::build_model(&BoxSpec::new(2, 3).unwrap(), 0.0, 0.0, 0.0).unwrap();
        assert!(PinningModel::new(env, 1.0, other).is_err());
    }

    #[test]
    fn auto_selection_follows_predicted_variance() {
        assert_eq!(
            select_estimator(&single_site(0.5, 1.0), EstimatorChoice::Auto),
            EstimatorKind::Importance
        );
        let bx = BoxSpec::new(2, 6).unwrap();
        let strong = PinningModel::homogeneous(&bx, 3.0, 1.0).unwrap();
        assert_eq!(
            select_estimator(&strong, EstimatorChoice::Auto),
            EstimatorKind::Thermodynamic
        );
        assert_eq!(
            select_estimator(&strong, EstimatorChoice::Is),
            EstimatorKind::Importance
        );
    }

    #[test]
    fn annealed_without_disorder_is_homogeneous() {
        let bx = BoxSpec::new(2, 2).unwrap();
        let a = estimate_annealed(&bx, 0.0, 0.3, 1.0, 2000, 5).unwrap();
        let cfg = EstimatorConfig {
            choice: EstimatorChoice::Is,
            samples: 2000,
            ..Default::default()
        };
        let h =
            estimate_quenched(&PinningModel::homogeneous(&bx, 0.3, 1.0).unwrap(), &cfg, 5).unwrap();
        assert_eq!(a.value, h.value);
    }

    #[test]
    fn disorder_average_without_disorder() {
        let bx = BoxSpec::new(2, 2).unwrap();
        let cfg = EstimatorConfig {
            choice: EstimatorChoice::Oracle,
            ..Default::default()
        };
        let avg = disorder_average(&bx, 0.0, 0.4, 1.0, 3, &cfg, 9).unwrap();
        let first = avg.values[0].value;
        assert!(avg.values.iter().all(|e| (e.value - first).abs() < 1e-12));
        assert!(avg.between_env_sd < 1e-12);
        let one = disorder_average(&bx, 0.0, 0.4, 1.0, 1, &cfg, 9).unwrap();
        assert_eq!(one.stderr, one.values[0].stderr);
        assert!(disorder_average(&bx, 0.0, 0.4, 1.0, 0, &cfg, 9).is_err());
    }

    #[test]
    fn record_carries_metadata() {
        let m = single_site(0.5, 1.0);
        let e = oracle_estimate(&m).unwrap();
        let r = e.to_record(&m);
        assert_eq!(r.estimator, "ORACLE");
        assert_eq!((r.d, r.n, r.a, r.h), (2, 1, 1.0, 0.5));
        assert_eq!(r.version, crate::FORMAT_VERSION);
    }

    #[test]
    fn rescaling_preserves_the_ratio() {
        let m = single_site(0.5, 1.0).at_inverse_temperature(4.0).unwrap();
        let r = m.rescaled_to_unit_temperature().unwrap();
        assert!((r.half_width() - 2.0).abs() < 1e-15);
        let direct = oracle_z_ratio(&m).unwrap().ratio;
        let unit = oracle_z_ratio(&r).unwrap().ratio;
        assert!((direct - unit).abs() < 1e-12);
    }
}
