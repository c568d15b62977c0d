//! Boxes `Λ_n = {0, …, n−1}^d`, their edges and reproducible ±1 environments.
//!
//! Sites are numbered in row-major order: the last coordinate varies
//! fastest, so site `i` has coordinates `(c_0, …, c_{d−1})` with
//! `i = Σ_k c_k n^{d−1−k}`.

use crate::error::{Error, Result};
use crate::rng;
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand::RngCore;
use serde::{Deserialize, Serialize};

pub type SiteIndex = usize;

/// Sentinel in neighbour tables for a neighbour outside the box.
pub const OUTSIDE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxSpec {
    d: usize,
    n: usize,
}

impl BoxSpec {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
        }
        if n < 1 {
            return Err(Error::InvalidParameter("side length must be ≥ 1".into()));
        }
        let sites = (n as u128).checked_pow(d as u32);
        match sites {
            Some(s) if s < u32::MAX as u128 => Ok(BoxSpec { d, n }),
            _ => Err(Error::InvalidParameter(format!("box {n}^{d} is too large"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Offset between neighbours along the slowest axis; the half-bandwidth
    /// of any nearest-neighbour operator in row-major order.
    pub fn bandwidth(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            self.n.pow(self.d as u32 - 1)
        }
    }

    pub fn coords(&self, mut i: SiteIndex) -> Vec<usize> {
        let mut c = vec![0; self.d];
        for k in (0..self.d).rev() {
            c[k] = i % self.n;
            i /= self.n;
        }
        c
    }

    pub fn index(&self, coords: &[usize]) -> SiteIndex {
        debug_assert_eq!(coords.len(), self.d);
        coords.iter().fold(0, |acc, &c| acc * self.n + c)
    }

    /// The site with every coordinate equal to `⌊n/2⌋`.
    pub fn center(&self) -> SiteIndex {
        self.index(&vec![self.n / 2; self.d])
    }

    /// Neighbour table: `2d` entries per site in the order
    /// `(axis 0, −), (axis 0, +), (axis 1, −), …`; [`OUTSIDE`] marks a
    /// neighbour in the complement.
    pub fn neighbor_table(&self) -> Vec<u32> {
        let d = self.d;
        let n = self.n;
        let mut table = Vec::with_capacity(self.sites() * 2 * d);
        for i in 0..self.sites() {
            let c = self.coords(i);
            for k in 0..d {
                let stride = n.pow((d - 1 - k) as u32);
                table.push(if c[k] > 0 {
                    (i - stride) as u32
                } else {
                    OUTSIDE
                });
                table.push(if c[k] + 1 < n {
                    (i + stride) as u32
                } else {
                    OUTSIDE
                });
            }
        }
        table
    }

    /// Number of neighbours of `i` lying outside the box.
    pub fn outside_neighbors(&self, i: SiteIndex) -> usize {
        self.coords(i)
            .iter()
            .map(|&c| usize::from(c == 0) + usize::from(c + 1 == self.n))
            .sum()
    }

    /// Graph distance from `i` to the complement of the box (≥ 1).
    pub fn distance_to_complement(&self, i: SiteIndex) -> usize {
        self.coords(i)
            .iter()
            .map(|&c| (c + 1).min(self.n - c))
            .min()
            .unwrap_or(0)
    }
}

/// Edges `{x, y}` with `x ∼ y` and `{x, y} ∩ Λ_n ≠ ∅`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSet {
    /// Both endpoints inside, stored once with `x < y`.
    pub interior: Vec<(SiteIndex, SiteIndex)>,
    /// Inside endpoint and the coordinates of the outside endpoint.
    pub boundary: Vec<(SiteIndex, Vec<isize>)>,
}

impl EdgeSet {
    pub fn len(&self) -> usize {
        self.interior.len() + self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn enumerate_edges(bx: &BoxSpec) -> EdgeSet {
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    let n = bx.side() as isize;
    for i in 0..bx.sites() {
        let c = bx.coords(i);
        for k in 0..bx.dim() {
            for step in [-1isize, 1] {
                let ck = c[k] as isize + step;
                if ck < 0 || ck >= n {
                    let mut out: Vec<isize> = c.iter().map(|&v| v as isize).collect();
                    out[k] = ck;
                    boundary.push((i, out));
                } else if step == 1 {
                    let mut nc = c.clone();
                    nc[k] = ck as usize;
                    interior.push((i, bx.index(&nc)));
                }
            }
        }
    }
    EdgeSet { interior, boundary }
}

/// Sites of the box with at least one neighbour in the complement.
pub fn inner_boundary(bx: &BoxSpec) -> Vec<SiteIndex> {
    (0..bx.sites())
        .filter(|&i| bx.outside_neighbors(i) > 0)
        .collect()
}

/// A realisation of the i.i.d. signs `e_x ∈ {−1, +1}` with intensity `b`
/// and mean `h`; the site potential is `v_x = b·e_x + h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub bx: BoxSpec,
    pub b: f64,
    pub h: f64,
    pub seed: u64,
    pub signs: Vec<i8>,
}

/// Sign of site `i` under `seed`: low bit of word `i` of the environment
/// stream. Random access, so generation order never matters.
pub fn sign_at(seed: u64, i: SiteIndex) -> i8 {
    let mut s = rng::stream(seed, &[rng::domain::ENVIRONMENT]);
    s.set_word_pos(i as u128);
    if s.next_u32() & 1 == 1 {
        1
    } else {
        -1
    }
}

pub fn sample_environment(bx: &BoxSpec, b: f64, h: f64, seed: u64) -> Environment {
    let mut s = rng::stream(seed, &[rng::domain::ENVIRONMENT]);
    let signs = (0..bx.sites())
        .map(|_| if s.next_u32() & 1 == 1 { 1 } else { -1 })
        .collect();
    Environment {
        bx: *bx,
        b,
        h,
        seed,
        signs,
    }
}

impl Environment {
    /// Environment with prescribed signs (used for tests and hand-built
    /// configurations); `seed` is recorded as 0.
    pub fn from_signs(bx: &BoxSpec, b: f64, h: f64, signs: Vec<i8>) -> Result<Self> {
        if signs.len() != bx.sites() || signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(
                "signs must be ±1, one per site".into(),
            ));
        }
        Ok(Environment {
            bx: *bx,
            b,
            h,
            seed: 0,
            signs,
        })
    }

    pub fn potential(&self, i: SiteIndex) -> f64 {
        self.b * f64::from(self.signs[i]) + self.h
    }

    pub fn potentials(&self) -> Vec<f64> {
        (0..self.signs.len()).map(|i| self.potential(i)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut bits = vec![0u8; self.signs.len().div_ceil(8)];
        for (i, &s) in self.signs.iter().enumerate() {
            if s == 1 {
                bits[i / 8] |= 1 << (i % 8);
            }
        }
        let wire = EnvironmentWire {
            d: self.bx.dim(),
            n: self.bx.side(),
            b: self.b,
            h: self.h,
            seed: self.seed,
            signs: B64.encode(bits),
            format_version: crate::FORMAT_VERSION.to_string(),
        };
        Ok(serde_json::to_string_pretty(&wire)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: EnvironmentWire = serde_json::from_str(text)?;
        crate::formats::check_version(&wire.format_version)?;
        let bx = BoxSpec::new(wire.d, wire.n)?;
        let bits = B64
            .decode(wire.signs.as_bytes())
            .map_err(|e| Error::Format(format!("signs bitmap: {e}")))?;
        if bits.len() != bx.sites().div_ceil(8) {
            return Err(Error::Format("signs bitmap has the wrong length".into()));
        }
        let signs = (0..bx.sites())
            .map(|i| {
                if bits[i / 8] >> (i % 8) & 1 == 1 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        Ok(Environment {
            bx,
            b: wire.b,
            h: wire.h,
            seed: wire.seed,
            signs,
        })
    }
}

/// Wire form: `signs` is a base64 bitmap, bit `i` (LSB first within each
/// byte) set when `e_i = +1`.
#[derive(Serialize, Deserialize)]
struct EnvironmentWire {
    d: usize,
    n: usize,
    b: f64,
    h: f64,
    seed: u64,
    signs: String,
    format_version: String,
}
