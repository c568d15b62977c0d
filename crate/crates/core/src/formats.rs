//! Serialized artifacts: field dumps (CSV and binary), result records and
//! version checks. Every artifact carries a `major.minor` format version;
//! readers accept any minor of the current major and nothing else.

use crate::error::{Error, Result};
use crate::gaussfield::FieldConfig;
use crate::lattice::BoxSpec;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Read, Write};

/// Magic bytes opening a binary field dump.
pub const FIELD_MAGIC: [u8; 8] = *b"GFFPHI\0\0";
/// Version of the binary layout.
pub const FIELD_BINARY_VERSION: u32 = 1;

pub fn check_version(version: &str) -> Result<()> {
    let expected = crate::FORMAT_VERSION.split('.').next().unwrap_or("1");
    let major = version.split('.').next().unwrap_or("");
    if major == expected && version.split('.').all(|p| p.parse::<u32>().is_ok()) {
        Ok(())
    } else {
        Err(Error::Format(format!(
            "unsupported format_version {version:?} (this build reads {expected}.x)"
        )))
    }
}

/// `site_index,x1,…,xd,phi`, one row per site in index order. Values are
/// written with Rust's shortest round-trip formatting.
pub fn write_field_csv<W: Write>(field: &FieldConfig, mut out: W) -> Result<()> {
    let d = field.bx.dim();
    writeln!(out, "# format_version={}", crate::FORMAT_VERSION)?;
    writeln!(out, "# d={} n={}", d, field.bx.side())?;
    let coords: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
    writeln!(out, "site_index,{},phi", coords.join(","))?;
    for (i, phi) in field.values.iter().enumerate() {
        let c = field.bx.coords(i);
        let c: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{i},{},{phi:?}", c.join(","))?;
    }
    Ok(())
}

pub fn read_field_csv<R: BufRead>(input: R) -> Result<FieldConfig> {
    let mut version = None;
    let mut d = None;
    let mut n = None;
    let mut values = Vec::new();
    let mut header_seen = false;
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for token in comment.split_whitespace() {
                if let Some((k, v)) = token.split_once('=') {
                    match k {
                        "format_version" => version = Some(v.to_string()),
                        "d" => d = Some(parse_usize(v)?),
                        "n" => n = Some(parse_usize(v)?),
                        _ => {}
                    }
                }
            }
            continue;
        }
        if !header_seen {
            if !line.starts_with("site_index,") {
                return Err(Error::Format("missing field CSV header".into()));
            }
            header_seen = true;
            continue;
        }
        let phi = line
            .rsplit(',')
            .next()
            .ok_or_else(|| Error::Format("empty row".into()))?;
        values.push(
            phi.parse::<f64>()
                .map_err(|e| Error::Format(format!("phi {phi:?}: {e}")))?,
        );
    }
    check_version(version.as_deref().unwrap_or(""))?;
    let (Some(d), Some(n)) = (d, n) else {
        return Err(Error::Format("missing box header".into()));
    };
    let bx = BoxSpec::new(d, n)?;
    if values.len() != bx.sites() {
        return Err(Error::Format(format!(
            "expected {} rows, found {}",
            bx.sites(),
            values.len()
        )));
    }
    Ok(FieldConfig { bx, values })
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|e| Error::Format(format!("integer {s:?}: {e}")))
}

/// Binary dump, all integers and floats little-endian:
///
/// ```text
/// magic   [u8; 8]  "GFFPHI\0\0"
/// version u32      1
/// d       u32
/// n       u64
/// count   u64      number of configurations that follow
/// values  f64 × count·n^d, row-major sites, configurations back to back
/// ```
pub fn write_field_binary<W: Write>(fields: &[FieldConfig], mut out: W) -> Result<()> {
    let bx = fields
        .first()
        .map(|f| f.bx)
        .ok_or_else(|| Error::InvalidParameter("nothing to write".into()))?;
    if fields
        .iter()
        .any(|f| f.bx != bx || f.values.len() != bx.sites())
    {
        return Err(Error::InvalidParameter(
            "configurations on different boxes".into(),
        ));
    }
    out.write_all(&FIELD_MAGIC)?;
    out.write_all(&FIELD_BINARY_VERSION.to_le_bytes())?;
    out.write_all(&(bx.dim() as u32).to_le_bytes())?;
    out.write_all(&(bx.side() as u64).to_le_bytes())?;
    out.write_all(&(fields.len() as u64).to_le_bytes())?;
    for f in fields {
        for v in &f.values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_field_binary<R: Read>(mut input: R) -> Result<Vec<FieldConfig>> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if magic != FIELD_MAGIC {
        return Err(Error::Format("not a field dump".into()));
    }
    let mut u4 = [0u8; 4];
    let mut u8b = [0u8; 8];
    input.read_exact(&mut u4)?;
    let version = u32::from_le_bytes(u4);
    if version != FIELD_BINARY_VERSION {
        return Err(Error::Format(format!(
            "unsupported binary version {version}"
        )));
    }
    input.read_exact(&mut u4)?;
    let d = u32::from_le_bytes(u4) as usize;
    input.read_exact(&mut u8b)?;
    let n = u64::from_le_bytes(u8b) as usize;
    input.read_exact(&mut u8b)?;
    let count = u64::from_le_bytes(u8b) as usize;
    let bx = BoxSpec::new(d, n)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut values = Vec::with_capacity(bx.sites());
        for _ in 0..bx.sites() {
            input.read_exact(&mut u8b)?;
            values.push(f64::from_le_bytes(u8b));
        }
        out.push(FieldConfig { bx, values });
    }
    Ok(out)
}

/// One free-energy result as emitted by the estimators and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub d: usize,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub seed: u64,
    pub estimator: String,
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub flags: Vec<String>,
    pub version: String,
}

pub const RESULT_CSV_HEADER: &str = "d,n,a,b,h,seed,estimator,value,stderr,n_samples,flags,version";

impl ResultRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: ResultRecord = serde_json::from_str(text)?;
        check_version(&r.version)?;
        Ok(r)
    }

    /// CSV row matching [`RESULT_CSV_HEADER`]; flags are `;`-separated.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:?},{:?},{:?},{},{},{:?},{:?},{},{},{}",
            self.d,
            self.n,
            self.a,
            self.b,
            self.h,
            self.seed,
            self.estimator,
            self.value,
            self.stderr,
            self.n_samples,
            self.flags.join(";"),
            self.version
        )
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let f: Vec<&str> = row.trim().split(',').collect();
        if f.len() != 12 {
            return Err(Error::Format(format!(
                "expected 12 columns, got {}",
                f.len()
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("{s:?}: {e}")))
        };
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|e| Error::Format(format!("{s:?}: {e}")))
        };
        check_version(f[11])?;
        Ok(ResultRecord {
            d: int(f[0])? as usize,
            n: int(f[1])? as usize,
            a: num(f[2])?,
            b: num(f[3])?,
            h: num(f[4])?,
            seed: int(f[5])?,
            estimator: f[6].to_string(),
            value: num(f[7])?,
            stderr: num(f[8])?,
            n_samples: int(f[9])?,
            flags: if f[10].is_empty() {
                Vec::new()
            } else {
                f[10].split(';').map(str::to_string).collect()
            },
            version: f[11].to_string(),
        })
    }

    /// Appends a row to `path`, writing the header first when the file is new
    /// or empty.
    pub fn append_csv(&self, path: &std::path::Path) -> Result<()> {
        let fresh = std::fs::metadata(path)
            .map(|m| m.len() == 0)
            .unwrap_or(true);
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        if fresh {
            writeln!(f, "{RESULT_CSV_HEADER}")?;
        }
        writeln!(f, "{}", self.to_csv_row())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> FieldConfig {
        let bx = BoxSpec::new(2, 3).unwrap();
        FieldConfig {
            bx,
            values: (0..9).map(|i| (i as f64 * 0.7).sin() / 3.0).collect(),
        }
    }

    #[test]
    fn versions() {
        assert!(check_version("1.0").is_ok());
        assert!(check_version("1.7").is_ok());
        assert!(check_version("2.0").is_err());
        assert!(check_version("").is_err());
        assert!(check_version("1.x").is_err());
    }

    #[test]
    fn field_csv_round_trip() {
        let f = field();
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("site_index,x1,x2,phi"));
        assert!(text.contains("\n4,1,1,"));
        assert_eq!(read_field_csv(&buf[..]).unwrap(), f);
    }

    #[test]
    fn field_binary_round_trip() {
        let f = field();
        let mut g = f.clone();
        g.values.iter_mut().for_each(|v| *v = -*v);
        let mut buf = Vec::new();
        write_field_binary(&[f.clone(), g.clone()], &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 4 + 8 + 8 + 2 * 9 * 8);
        assert_eq!(&buf[..8], b"GFFPHI\0\0");
        assert_eq!(read_field_binary(&buf[..]).unwrap(), vec![f, g]);
        buf[8] = 9;
        assert!(read_field_binary(&buf[..]).is_err());
    }

    #[test]
    fn result_record_round_trips() {
        let r = ResultRecord {
            d: 2,
            n: 4,
            a: 1.0,
            b: 0.5,
            h: -0.3,
            seed: 7,
            estimator: "IS".into(),
            value: 0.012_345_678_9,
            stderr: 1e-4,
            n_samples: 100_000,
            flags: vec!["unreliable".into(), "x".into()],
            version: crate::FORMAT_VERSION.into(),
        };
        assert_eq!(ResultRecord::from_json(&r.to_json().unwrap()).unwrap(), r);
        assert_eq!(ResultRecord::from_csv_row(&r.to_csv_row()).unwrap(), r);
        let mut old = r.clone();
        old.version = "3.1".into();
        assert!(ResultRecord::from_json(&old.to_json().unwrap()).is_err());
    }
}
