use super::{fmt_f64, fmt_opt, with_pool};
use crate::bounds::{self, BoundConstants};
use crate::error::{Error, Result};
use crate::formats::{write_field_binary, write_field_csv};
use crate::gaussfield::{build_model, log_partition, FieldConfig};
use crate::lattice::{sample_environment, BoxSpec, Environment};
use crate::pinning::thermo::batch_stats;
use crate::pinning::{sweep_order, HeatBath, PinningModel, FLAG_NONSTATIONARY};
use crate::rng;
use crate::walk;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// Constants and rows of the curve export.
///
/// - `d = 2`: the bound column is `h_quenched_bound_d2` (lowest `h` where the
///   d = 2 predicate holds), with constants at reference mass `mass`.
/// - `d ≥ 3`: the bound column is `h_quenched_bound_d3`, the root of
///   `h = −K(b − h)²`, kept only when `−b + h > −ε` there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsTable {
    pub d: usize,
    pub a: f64,
    pub epsilon: f64,
    pub constants: BoundConstants,
    pub rows: Vec<bounds::CurveRow>,
}

pub fn bounds_table(
    b_grid: &[f64],
    d: usize,
    a: f64,
    mass: f64,
    epsilon: f64,
) -> Result<BoundsTable> {
    if b_grid.is_empty() || b_grid.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
        return Err(Error::InvalidParameter(
            "b grid must be non-empty, finite and ≥ 0".into(),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let constants = bounds::estimate_constants(d, a, (d == 2).then_some(mass))?;
    let rows = b_grid
        .par_iter()
        .map(|&b| {
            let h_annealed = bounds::annealed_critical_h(b)?;
            let mut row = bounds::CurveRow {
                b,
                h_annealed,
                h_quenched_bound_d3: None,
                h_quenched_bound_d2: None,
                closed_form_d3: None,
                closed_form_8b_d3: None,
            };
            if d == 2 {
                row.h_quenched_bound_d2 = bounds::boundary_d2(b, &constants, epsilon)?;
            } else {
                let root = bounds::critical_curve_d3(b, &constants)?;
                row.h_quenched_bound_d3 = root.bisection.filter(|h| -b + h > -epsilon || b == 0.0);
                row.closed_form_d3 = root.closed_form;
                row.closed_form_8b_d3 = root.closed_form_8b;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsTable {
        d,
        a,
        epsilon,
        constants,
        rows,
    })
}

impl BoundsTable {
    /// Columns of [`bounds::CURVE_CSV_HEADER`]; columns that do not apply to
    /// this dimension are left empty.
    pub fn write_csv<W: Write>(&self, mut out: W, config_json: &str) -> Result<()> {
        super::write_header(&mut out, "bounds", config_json)?;
        let c = &self.constants;
        writeln!(out, "# bound_constants={}", serde_json::to_string(c)?)?;
        if self.d >= 3 {
            writeln!(
                out,
                "# K=C1^2/C2={} C1/C2={}",
                fmt_f64(c.k()),
                fmt_f64(c.k_unsquared())
            )?;
        }
        writeln!(out, "{}", bounds::CURVE_CSV_HEADER)?;
        let d3 = self.d >= 3;
        for r in &self.rows {
            let fields = [
                fmt_f64(r.b),
                fmt_f64(r.h_annealed),
                fmt_opt(r.h_quenched_bound_d3),
                fmt_opt(r.h_quenched_bound_d2),
                fmt_opt(d3.then(|| c.k())),
                fmt_f64(c.c1),
                fmt_f64(c.c2),
                fmt_opt(c.c1_tilde),
                fmt_opt(c.c_prime),
            ];
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

pub const WALK_CSV_HEADER: &str = "m,n,variance,ratio_to_log,zratio_series,zratio_logdet";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkRow {
    pub m: f64,
    pub n: usize,
    pub variance: f64,
    pub ratio_to_log: f64,
    /// `|Λ|⁻¹ ln(Z_Λ/Z_{Λ,m})` from the return-probability series.
    pub zratio_series: Option<f64>,
    /// The same quantity from the Cholesky log-determinant.
    pub zratio_logdet: f64,
}

/// d = 2 massive-walk tabulation over `masses × sizes`. The series column
/// costs `O(n⁴ · steps)` and can be skipped.
pub fn walk_table(
    masses: &[f64],
    sizes: &[usize],
    series: bool,
    workers: usize,
) -> Result<Vec<WalkRow>> {
    let points: Vec<(f64, usize)> = masses
        .iter()
        .flat_map(|&m| sizes.iter().map(move |&n| (m, n)))
        .collect();
    with_pool(workers, || {
        points
            .par_iter()
            .map(|&(m, n)| {
                let v = walk::massive_variance_bound(m, n)?;
                let bx = BoxSpec::new(2, n)?;
                let logdet = -log_partition(&build_model(&bx, m, 0.0, 0.0)?)? / bx.sites() as f64;
                let zs = if series {
                    Some(walk::ratio_z_series(m, n)?.value)
                } else {
                    None
                };
                Ok(WalkRow {
                    m,
                    n,
                    variance: v.variance,
                    ratio_to_log: v.ratio,
                    zratio_series: zs,
                    zratio_logdet: logdet,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?
}

pub fn write_walk_table<W: Write>(rows: &[WalkRow], mut out: W, config_json: &str) -> Result<()> {
    super::write_header(&mut out, "walk table", config_json)?;
    writeln!(out, "{WALK_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(r.m),
            r.n,
            fmt_f64(r.variance),
            fmt_f64(r.ratio_to_log),
            fmt_opt(r.zratio_series),
            fmt_f64(r.zratio_logdet)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FieldFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSpec {
    pub d: usize,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub seed: u64,
    pub count: usize,
    pub burn_in: usize,
    /// Sweeps between stored configurations.
    pub thin: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutput {
    pub environment: Environment,
    pub fields: Vec<FieldConfig>,
    /// Fraction of sites in `[−a, a]` over all stored configurations.
    pub window_fraction: f64,
    pub flags: Vec<String>,
}

/// Draws `count` configurations of the pinned field with the single-site
/// heat-bath chain (λ = 1), after `burn_in` sweeps and `thin` sweeps apart.
/// The environment is generated from `seed` exactly as `env gen` does; the
/// chain runs on the stream `(seed, SAMPLE)`.
///
/// When the burn-in has at least 100 sweeps, the energy trace of its second
/// half is split in two and compared; a gap above 5σ sets `nonstationary`.
pub fn sample_fields(spec: &SampleSpec, env: Option<Environment>) -> Result<SampleOutput> {
    if spec.count == 0 || spec.thin == 0 {
        return Err(Error::InvalidParameter("count and thin must be ≥ 1".into()));
    }
    let bx = BoxSpec::new(spec.d, spec.n)?;
    let env = match env {
        Some(e) if e.bx != bx => {
            return Err(Error::InvalidParameter(
                "environment box does not match d and n".into(),
            ))
        }
        Some(e) => e,
        None => sample_environment(&bx, spec.b, spec.h, spec.seed),
    };
    let model = PinningModel::free(env.clone(), spec.a)?;
    let order = sweep_order(spec.seed, bx.sites());
    let mut chain = HeatBath::new(
        &model,
        1.0,
        order,
        rng::stream(spec.seed, &[rng::domain::SAMPLE]),
    );
    let mut trace = Vec::with_capacity(spec.burn_in);
    for _ in 0..spec.burn_in {
        chain.sweep()?;
        trace.push(chain.energy());
    }
    let mut flags = Vec::new();
    if spec.burn_in >= 100 {
        let tail = &trace[spec.burn_in / 2..];
        let half = tail.len() / 2;
        let (m1, s1) = batch_stats(&tail[..half], 5);
        let (m2, s2) = batch_stats(&tail[half..2 * half], 5);
        if (m1 - m2).abs() > 5.0 * (s1 * s1 + s2 * s2).sqrt() {
            flags.push(FLAG_NONSTATIONARY.to_string());
        }
    }
    let mut fields = Vec::with_capacity(spec.count);
    let mut inside = 0usize;
    for _ in 0..spec.count {
        for _ in 0..spec.thin {
            chain.sweep()?;
        }
        inside += chain.field().iter().filter(|p| p.abs() <= spec.a).count();
        fields.push(FieldConfig {
            bx,
            values: chain.field().to_vec(),
        });
    }
    Ok(SampleOutput {
        environment: env,
        window_fraction: inside as f64 / (spec.count * bx.sites()) as f64,
        fields,
        flags,
    })
}

pub fn write_fields<W: Write>(fields: &[FieldConfig], format: FieldFormat, out: W) -> Result<()> {
    match format {
        FieldFormat::Binary => write_field_binary(fields, out),
        FieldFormat::Csv => match fields {
            [one] => write_field_csv(one, out),
            _ => Err(Error::InvalidParameter(
                "CSV holds a single configuration; use --format binary for --count > 1".into(),
            )),
        },
    }
}

pub fn env_gen(d: usize, n: usize, b: f64, h: f64, seed: u64) -> Result<Environment> {
    if !b.is_finite() || !h.is_finite() || b < 0.0 {
        return Err(Error::InvalidParameter(
            "need finite b ≥ 0 and finite h".into(),
        ));
    }
    Ok(sample_environment(&BoxSpec::new(d, n)?, b, h, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::read_field_binary;

    fn spec(b: f64, h: f64) -> SampleSpec {
        SampleSpec {
            d: 2,
            n: 6,
            a: 1.0,
            b,
            h,
            seed: 3,
            count: 4,
            burn_in: 200,
            thin: 5,
        }
    }

    #[test]
    fn bounds_rows_at_zero_and_sign() {
        let t = bounds_table(&[0.0, 0.05, 0.2], 3, 1.0, 0.01, 0.5).unwrap();
        assert_eq!(t.rows[0].h_annealed, 0.0);
        assert_eq!(t.rows[0].h_quenched_bound_d3, Some(0.0));
        for r in &t.rows[1..] {
            assert!(r.h_annealed < 0.0);
            let h = r.h_quenched_bound_d3.unwrap();
            assert!(h.is_finite() && h < 0.0);
            assert!(h > r.h_annealed);
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf, "{}").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], bounds::CURVE_CSV_HEADER);
        assert_eq!(body.len(), 4);
        assert!(bounds_table(&[], 3, 1.0, 0.01, 0.5).is_err());
    }

    #[test]
    fn bounds_d2_rows() {
        let t = bounds_table(&[0.0, 0.1], 2, 1.0, 0.01, 0.5).unwrap();
        assert_eq!(t.rows[0].h_quenched_bound_d2, Some(0.0));
        let h = t.rows[1].h_quenched_bound_d2.unwrap();
        assert!(h < 0.0 && h > -0.1);
        assert!(t.rows[1].h_quenched_bound_d3.is_none());
    }

    #[test]
    fn walk_rows_agree() {
        let rows = walk_table(&[0.2], &[6], true, 1).unwrap();
        let r = rows[0];
        assert!((r.zratio_series.unwrap() - r.zratio_logdet).abs() < 1e-10);
        assert!((r.ratio_to_log * 0.2f64.ln().abs() - r.variance).abs() < 1e-14);
    }

    #[test]
    fn free_sample_is_reproducible() {
        let a = sample_fields(&spec(0.0, 0.0), None).unwrap();
        let b = sample_fields(&spec(0.0, 0.0), None).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        write_fields(&a.fields, FieldFormat::Binary, &mut buf).unwrap();
        assert_eq!(read_field_binary(&buf[..]).unwrap(), a.fields);
        assert!(write_fields(&a.fields, FieldFormat::Csv, Vec::new()).is_err());
    }

    #[test]
    fn strong_attraction_fills_the_window() {
        let out = sample_fields(
            &SampleSpec {
                count: 20,
                ..spec(0.0, 5.0)
            },
            None,
        )
        .unwrap();
        assert!(out.window_fraction > 0.9, "{}", out.window_fraction);
    }

    #[test]
    fn env_gen_matches_sampler() {
        let e = env_gen(2, 5, 1.0, 0.1, 9).unwrap();
        assert_eq!(
            e,
            sample_environment(&BoxSpec::new(2, 5).unwrap(), 1.0, 0.1, 9)
        );
        assert!(env_gen(2, 5, -1.0, 0.0, 9).is_err());
    }
}
