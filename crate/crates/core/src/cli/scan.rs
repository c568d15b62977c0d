use super::config::ScanConfig;
use super::{fmt_f64, with_pool};
use crate::bounds::{self, BoundConstants};
use crate::error::Result;
use crate::lattice::BoxSpec;
use crate::pinning::{
    disorder_average, estimate_annealed_with, estimator_seed, EstimatorConfig, FLAG_FAILED,
};
use crate::rng;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

pub const SCAN_CSV_HEADER: &str = "d,n,a,b,h,environments,samples,estimator,quenched,quenched_stderr,between_env_sd,annealed_estimator,annealed,annealed_stderr,annealed_strength,h_annealed,bound_region,bound_margin,flags";

/// Outcome of the bound predicate at a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundRegion {
    Positive,
    NotPositive,
    NotCovered,
}

impl BoundRegion {
    pub fn tag(self) -> &'static str {
        match self {
            BoundRegion::Positive => "positive",
            BoundRegion::NotPositive => "not_positive",
            BoundRegion::NotCovered => "not_covered",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub n: usize,
    pub b: f64,
    pub h: f64,
    pub estimator: String,
    pub quenched: f64,
    pub quenched_stderr: f64,
    pub between_env_sd: f64,
    pub annealed_estimator: String,
    pub annealed: f64,
    pub annealed_stderr: f64,
    pub annealed_strength: f64,
    pub h_annealed: f64,
    pub bound_region: BoundRegion,
    pub bound_margin: f64,
    pub flags: Vec<String>,
}

impl ScanRow {
    pub fn to_csv(&self, cfg: &ScanConfig) -> String {
        [
            cfg.d.to_string(),
            self.n.to_string(),
            fmt_f64(cfg.a),
            fmt_f64(self.b),
            fmt_f64(self.h),
            cfg.environments.to_string(),
            cfg.samples.to_string(),
            self.estimator.clone(),
            fmt_f64(self.quenched),
            fmt_f64(self.quenched_stderr),
            fmt_f64(self.between_env_sd),
            self.annealed_estimator.clone(),
            fmt_f64(self.annealed),
            fmt_f64(self.annealed_stderr),
            fmt_f64(self.annealed_strength),
            fmt_f64(self.h_annealed),
            self.bound_region.tag().to_string(),
            fmt_f64(self.bound_margin),
            self.flags.join(";"),
        ]
        .join(",")
    }
}

/// Grid points in output order: `n` outermost, then `b`, then `h`.
pub fn scan_points(cfg: &ScanConfig) -> Vec<(usize, f64, f64)> {
    let mut points = Vec::new();
    for n in cfg.n.list() {
        for &b in &cfg.b_grid {
            for &h in &cfg.h_grid {
                points.push((n, b, h));
            }
        }
    }
    points
}

/// Constants used for the bound column: d = 2 at `bound_mass`, otherwise
/// the infinite-volume constants of dimension `d`.
pub fn scan_constants(cfg: &ScanConfig) -> Result<BoundConstants> {
    let m = (cfg.d == 2).then_some(cfg.bound_mass);
    bounds::estimate_constants(cfg.d, cfg.a, m)
}

pub fn bound_region(
    d: usize,
    b: f64,
    h: f64,
    c: &BoundConstants,
    epsilon: f64,
) -> Result<(BoundRegion, f64)> {
    let v = if d == 2 {
        bounds::region_positive_d2(b, h, c, epsilon)?
    } else {
        bounds::region_positive_d3(b, h, c, epsilon)
    };
    let region = match (v.covered, v.positive) {
        (false, _) => BoundRegion::NotCovered,
        (true, true) => BoundRegion::Positive,
        (true, false) => BoundRegion::NotPositive,
    };
    Ok((region, v.margin))
}

/// Seed of grid point `index`.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    rng::derive_seed(seed, &[rng::domain::SCAN, index as u64])
}

fn tags<'a>(it: impl Iterator<Item = &'a str>) -> String {
    let mut v: Vec<&str> = it.collect();
    v.sort();
    v.dedup();
    v.join("+")
}

fn scan_point(
    cfg: &ScanConfig,
    c: &BoundConstants,
    index: usize,
    n: usize,
    b: f64,
    h: f64,
) -> ScanRow {
    let strength = bounds::annealed_strength(b, h);
    let h_annealed = bounds::annealed_critical_h(b).unwrap_or(f64::NAN);
    let mut row = ScanRow {
        n,
        b,
        h,
        estimator: String::new(),
        quenched: f64::NAN,
        quenched_stderr: f64::NAN,
        between_env_sd: f64::NAN,
        annealed_estimator: String::new(),
        annealed: f64::NAN,
        annealed_stderr: f64::NAN,
        annealed_strength: strength,
        h_annealed,
        bound_region: BoundRegion::NotCovered,
        bound_margin: f64::NAN,
        flags: Vec::new(),
    };
    let fail = |row: &mut ScanRow, what: &str, e: crate::Error| {
        row.flags
            .push(format!("{FLAG_FAILED}:{what}:{}", sanitize(&e.to_string())));
    };
    match bound_region(cfg.d, b, h, c, cfg.epsilon) {
        Ok((region, margin)) => {
            row.bound_region = region;
            row.bound_margin = margin;
        }
        Err(e) => fail(&mut row, "bound", e),
    }
    let est = EstimatorConfig {
        choice: cfg.estimator,
        samples: cfg.samples,
        ti: cfg.ti,
    };
    let seed = point_seed(cfg.seed, index);
    let bx = match BoxSpec::new(cfg.d, n) {
        Ok(bx) => bx,
        Err(e) => {
            fail(&mut row, "box", e);
            return row;
        }
    };
    match disorder_average(&bx, b, h, cfg.a, cfg.environments, &est, seed) {
        Ok(avg) => {
            row.estimator = tags(avg.values.iter().map(|e| e.estimator.tag()));
            row.quenched = avg.mean;
            row.quenched_stderr = avg.stderr;
            row.between_env_sd = avg.between_env_sd;
            row.flags
                .extend(avg.flags.iter().map(|f| format!("quenched:{f}")));
        }
        Err(e) => fail(&mut row, "quenched", e),
    }
    // Same estimator seed as the first environment, so b = 0 reproduces
    // the quenched value of that environment exactly.
    match estimate_annealed_with(&bx, b, h, cfg.a, &est, estimator_seed(seed, 0)) {
        Ok(e) => {
            row.annealed_estimator = e.estimator.tag().to_string();
            row.annealed = e.value;
            row.annealed_stderr = e.stderr;
            row.flags
                .extend(e.flags.iter().map(|f| format!("annealed:{f}")));
        }
        Err(e) => fail(&mut row, "annealed", e),
    }
    row
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c == ',' || c == ';' || c == '\n' {
                ' '
            } else {
                c
            }
        })
        .collect()
}

/// Runs every grid point. Each point draws only from streams derived from
/// `(seed, index)`, so rows do not depend on the worker count. Failures are
/// recorded in the row's flags and the scan continues.
pub fn run_scan(cfg: &ScanConfig) -> Result<(BoundConstants, Vec<ScanRow>)> {
    cfg.validate()?;
    let c = scan_constants(cfg)?;
    let points = scan_points(cfg);
    let rows = with_pool(cfg.workers, || {
        points
            .par_iter()
            .enumerate()
            .map(|(i, &(n, b, h))| scan_point(cfg, &c, i, n, b, h))
            .collect::<Vec<_>>()
    })?;
    Ok((c, rows))
}

/// Header comments (effective config, generator, constants) followed by
/// the CSV body.
pub fn write_scan<W: Write>(
    cfg: &ScanConfig,
    c: &BoundConstants,
    rows: &[ScanRow],
    mut out: W,
) -> Result<()> {
    super::write_header(&mut out, "scan", &cfg.to_json_compact())?;
    writeln!(out, "# bound_constants={}", serde_json::to_string(c)?)?;
    write_scan_body(cfg, rows, out)
}

pub fn write_scan_body<W: Write>(cfg: &ScanConfig, rows: &[ScanRow], mut out: W) -> Result<()> {
    writeln!(out, "{SCAN_CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv(cfg))?;
    }
    Ok(())
}
