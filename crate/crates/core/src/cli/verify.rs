use crate::error::{Error, Result};
use crate::gaussfield::{build_model, log_partition};
use crate::lattice::{sample_environment, BoxSpec};
use crate::normal;
use crate::pinning::{
    disorder_average, estimate_annealed_with, estimate_quenched_is, estimate_quenched_ti,
    oracle_estimate, oracle_z_ratio, EstimatorConfig, PinningModel, TiConfig,
};
use crate::rng;
use crate::walk::{self, WalkKernel};
use serde::Serialize;

pub const SUITES: [&str; 6] = [
    "walk-matrix",
    "lemma-massive",
    "stirling",
    "oracle",
    "jensen",
    "rescale",
];

/// One measured quantity and its acceptance window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Check {
    /// `|measured − reference| ≤ tolerance`.
    pub fn close(name: impl Into<String>, measured: f64, reference: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            reference: Some(reference),
            tolerance: Some(tolerance),
            lower: None,
            upper: None,
            passed: (measured - reference).abs() <= tolerance,
        }
    }

    /// `lower ≤ measured ≤ upper`, or `< upper` when `strict_upper`.
    pub fn range(
        name: impl Into<String>,
        measured: f64,
        lower: f64,
        upper: f64,
        strict_upper: bool,
    ) -> Self {
        let below = if strict_upper {
            measured < upper
        } else {
            measured <= upper
        };
        Check {
            name: name.into(),
            measured,
            reference: None,
            tolerance: None,
            lower: Some(lower),
            upper: Some(upper),
            passed: measured >= lower && below,
        }
    }

    /// `measured ≤ upper`.
    pub fn at_most(name: impl Into<String>, measured: f64, upper: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            reference: None,
            tolerance: None,
            lower: None,
            upper: Some(upper),
            passed: measured <= upper,
        }
    }

    /// `measured > lower`.
    pub fn above(name: impl Into<String>, measured: f64, lower: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            reference: None,
            tolerance: None,
            lower: Some(lower),
            upper: None,
            passed: measured > lower,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub passed: bool,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub format_version: String,
}

impl VerifyReport {
    fn new(suite: &str, seed: u64, checks: Vec<Check>) -> Self {
        VerifyReport {
            suite: suite.to_string(),
            passed: checks.iter().all(|c| c.passed),
            seed,
            checks,
            format_version: crate::FORMAT_VERSION.to_string(),
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn run_suite(name: &str, seed: u64) -> Result<VerifyReport> {
    let checks = match name {
        "walk-matrix" => walk_matrix()?,
        "lemma-massive" => massive_field_checks()?,
        "stirling" => stirling()?,
        "oracle" => oracle(seed)?,
        "jensen" => jensen(seed)?,
        "rescale" => rescale(seed)?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown suite {other:?}; expected one of {}",
                SUITES.join(", ")
            )))
        }
    };
    Ok(VerifyReport::new(name, seed, checks))
}

/// Largest `|G(x, x) − (Q⁻¹)_xx|` over the box, plus the centre column.
pub fn walk_matrix_error(d: usize, n: usize, m: f64) -> Result<f64> {
    let bx = BoxSpec::new(d, n)?;
    let kernel = WalkKernel::massive(&bx, m)?;
    let model = build_model(&bx, m, 0.0, 0.0)?;
    let diag = walk::green_diagonal(&kernel)?;
    let exact = model.variances();
    let c = bx.center();
    let (row, _, _) = walk::green_row(&kernel, c)?;
    let col = model.covariance_column(c);
    Ok(diag
        .iter()
        .zip(&exact)
        .chain(row.iter().zip(&col))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

fn walk_matrix() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for d in [2, 3] {
        for n in [2, 4, 8] {
            for m in [0.0, 0.1, 0.5] {
                let err = walk_matrix_error(d, n, m)?;
                checks.push(Check::at_most(
                    format!("d={d} n={n} m={m} max|G-Qinv|"),
                    err,
                    1e-10,
                ));
            }
        }
    }
    Ok(checks)
}

pub const MASSIVE_MASSES: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
pub const MASSIVE_BOX: usize = 64;

/// Centre variance / |log m| and `|Λ|⁻¹ ln(Z_m/Z_0)/(m²|log m|)` on the
/// `n × n` box; the partition ratio comes from the exact log-determinant.
pub fn massive_quantities(m: f64, n: usize) -> Result<(f64, f64)> {
    let v = walk::massive_variance_bound(m, n)?;
    let bx = BoxSpec::new(2, n)?;
    let per_site = log_partition(&build_model(&bx, m, 0.0, 0.0)?)? / bx.sites() as f64;
    Ok((v.ratio, per_site / (m * m * m.ln().abs())))
}

fn massive_field_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut prev = 0.0;
    for m in MASSIVE_MASSES {
        let (ratio, z) = massive_quantities(m, MASSIVE_BOX)?;
        checks.push(Check::range(
            format!("m={m} variance/|log m|"),
            ratio,
            0.1,
            3.0,
            false,
        ));
        checks.push(Check::range(
            format!("m={m} zratio/(m^2|log m|)"),
            z,
            -3.0,
            0.0,
            true,
        ));
        let var = ratio * m.ln().abs();
        checks.push(Check::above(
            format!("m={m} variance increase"),
            var - prev,
            0.0,
        ));
        prev = var;
        let series = walk::ratio_z_series(m, 16)?;
        let bx = BoxSpec::new(2, 16)?;
        let logdet = -log_partition(&build_model(&bx, m, 0.0, 0.0)?)? / bx.sites() as f64;
        checks.push(Check::close(
            format!("m={m} n=16 series vs logdet"),
            series.value,
            logdet,
            1e-8,
        ));
    }
    Ok(checks)
}

fn stirling() -> Result<Vec<Check>> {
    let mut checks = vec![
        Check::close(
            "l=100 pi*l*P(X_2l=0)",
            walk::stirling_check(100)?,
            1.0,
            5e-3,
        ),
        Check::close(
            "l=10000 pi*l*P(X_2l=0)",
            walk::stirling_check(10_000)?,
            1.0,
            1e-4,
        ),
    ];
    let ls = [1, 10, 100, 1000];
    for w in ls.windows(2) {
        let step = walk::stirling_check(w[1])? - walk::stirling_check(w[0])?;
        checks.push(Check::above(
            format!("increase l={}->{}", w[0], w[1]),
            step,
            0.0,
        ));
    }
    checks.push(Check::close(
        "P_0(X_3=0)",
        walk::return_probability(2, 3)?,
        0.0,
        0.0,
    ));
    Ok(checks)
}

/// Boxes with at most 9 sites.
pub const ORACLE_BOXES: [(usize, usize); 5] = [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)];
pub const ORACLE_B: [f64; 3] = [0.0, 0.5, 1.0];
pub const ORACLE_H: [f64; 3] = [-0.3, 0.0, 0.3];
pub const ORACLE_IS_SAMPLES: usize = 100_000;

/// IS and TI against the exact ratio at one point; returns
/// `(oracle, is, ti)` estimates.
pub fn oracle_comparison(
    d: usize,
    n: usize,
    b: f64,
    h: f64,
    seed: u64,
) -> Result<[crate::pinning::FreeEnergyEstimate; 3]> {
    let bx = BoxSpec::new(d, n)?;
    let env = sample_environment(&bx, b, h, seed);
    let model = PinningModel::free(env, 1.0)?;
    Ok([
        oracle_estimate(&model)?,
        estimate_quenched_is(&model, ORACLE_IS_SAMPLES, seed)?,
        estimate_quenched_ti(&model, &TiConfig::default(), seed)?,
    ])
}

fn oracle(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut idx = 0u64;
    for (d, n) in ORACLE_BOXES {
        for b in ORACLE_B {
            for h in ORACLE_H {
                let s = rng::derive_seed(seed, &[rng::domain::ORACLE, idx]);
                idx += 1;
                let [o, is, ti] = oracle_comparison(d, n, b, h, s)?;
                for (tag, e) in [("IS", &is), ("TI", &ti)] {
                    let tol = 3.0 * (e.stderr.powi(2) + o.stderr.powi(2)).sqrt();
                    checks.push(Check::close(
                        format!("d={d} n={n} b={b} h={h} {tag} vs oracle"),
                        e.value,
                        o.value,
                        tol,
                    ));
                }
            }
        }
    }
    Ok(checks)
}

fn jensen(seed: u64) -> Result<Vec<Check>> {
    let bx = BoxSpec::new(2, 4)?;
    let cfg = EstimatorConfig {
        samples: 20_000,
        ..Default::default()
    };
    let mut checks = Vec::new();
    let mut idx = 0u64;
    for b in [0.5, 1.0, 1.5] {
        for h in [-0.3, 0.0, 0.3] {
            let s = rng::derive_seed(seed, &[rng::domain::SCAN, idx]);
            idx += 1;
            let q = disorder_average(&bx, b, h, 1.0, 5, &cfg, s)?;
            let a = estimate_annealed_with(&bx, b, h, 1.0, &cfg, rng::derive_seed(s, &[1]))?;
            let slack = 3.0 * (q.stderr.powi(2) + a.stderr.powi(2)).sqrt();
            checks.push(Check::at_most(
                format!("b={b} h={h} quenched - annealed"),
                q.mean - a.value,
                slack,
            ));
        }
    }
    Ok(checks)
}

fn rescale(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for beta in [0.25, 4.0] {
        // Single site, zero boundary: 1 + (e^v − 1)(2Φ(a√β) − 1).
        let one = BoxSpec::new(2, 1)?;
        let m = PinningModel::homogeneous(&one, 0.5, 1.0)?.at_inverse_temperature(beta)?;
        let exact = 1.0 + (0.5f64.exp() - 1.0) * normal::interval(-beta.sqrt(), beta.sqrt());
        checks.push(Check::close(
            format!("beta={beta} single site closed form"),
            oracle_z_ratio(&m)?.ratio,
            exact,
            1e-10,
        ));
        for n in [2, 3] {
            let bx = BoxSpec::new(2, n)?;
            let env = sample_environment(&bx, 0.5, 0.2, rng::derive_seed(seed, &[n as u64]));
            let base = build_model(&bx, 0.2, 0.3, 0.1)?.with_inverse_temperature(beta)?;
            let model = PinningModel::new(env, 0.8, base)?;
            let unit = model.rescaled_to_unit_temperature()?;
            let (r1, r2) = (oracle_z_ratio(&model)?, oracle_z_ratio(&unit)?);
            checks.push(Check::close(
                format!("beta={beta} n={n} ratio at beta vs rescaled"),
                r1.ratio,
                r2.ratio,
                r1.abs_error + r2.abs_error + 1e-12,
            ));
        }
    }
    Ok(checks)
}
