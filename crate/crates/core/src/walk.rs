//! Simple random walk engine: return probabilities, restricted and killed
//! Green functions, and the partition-ratio series of the massive field.
//!
//! The precision of the massive field factors as
//! `Q = (1 + 2m²)(I − ρP)` with `P` the walk kernel restricted to the box
//! and `ρ = 1/(1 + 2m²)`. Hence `Q⁻¹ = ρ Σ_ℓ ρ^ℓ P^ℓ`: a walk that survives
//! each step with probability `ρ`, weighted by the prefactor `ρ`. The
//! [`WalkKernel`] carries both numbers.

use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, SiteIndex, OUTSIDE};
use crate::quad::gauss_legendre_on;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Stop a Green-function series once the remaining tail is below this.
pub const SERIES_TOLERANCE: f64 = 1e-14;
const MAX_STEPS: usize = 50_000_000;

/// P₀(X_steps = 0) for the `d`-dimensional simple random walk.
///
/// `d = 1, 2` use the closed form `(C(2ℓ,ℓ) 2^{−2ℓ})^d` evaluated as a sum of
/// logarithms; `d ≥ 3` convolves the walk on the cube of radius `steps/2`.
pub fn return_probability(d: usize, steps: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
    }
    if steps % 2 == 1 {
        return Ok(0.0);
    }
    let l = steps / 2;
    match d {
        1 | 2 => Ok((d as f64 * ln_central_binomial_over_4l(l)).exp()),
        _ => return_probability_dp(d, steps),
    }
}

/// ln(C(2ℓ,ℓ)·4^{−ℓ}) = Σ_{k≤ℓ} ln(1 − 1/(2k)).
fn ln_central_binomial_over_4l(l: usize) -> f64 {
    (1..=l).map(|k| (-0.5 / k as f64).ln_1p()).sum()
}

fn return_probability_dp(d: usize, steps: usize) -> Result<f64> {
    let r = steps / 2;
    let side = 2 * r + 1;
    let cells = (side as u128).pow(d as u32);
    if cells > 200_000_000 {
        return Err(Error::InvalidParameter(format!(
            "return_probability DP for d = {d}, steps = {steps} needs {cells} cells"
        )));
    }
    let bx = BoxSpec::new(d, side)?;
    let table = bx.neighbor_table();
    let origin = bx.center();
    let mut cur = vec![0.0; bx.sites()];
    let mut next = vec![0.0; bx.sites()];
    cur[origin] = 1.0;
    let p = 1.0 / (2 * d) as f64;
    for _ in 0..steps {
        spread(&table, 2 * d, p, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur[origin])
}

/// next ← p·(adjacency restricted to the box)·cur
fn spread(table: &[u32], two_d: usize, p: f64, cur: &[f64], next: &mut [f64]) {
    next.iter_mut().for_each(|v| *v = 0.0);
    for (i, &m) in cur.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let w = p * m;
        for &j in &table[i * two_d..(i + 1) * two_d] {
            if j != OUTSIDE {
                next[j as usize] += w;
            }
        }
    }
}

/// P₀(X_{2ℓ} = 0)·πℓ in d = 2; tends to 1.
pub fn stirling_check(l: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidParameter("ℓ must be ≥ 1".into()));
    }
    Ok(return_probability(2, 2 * l)? * PI * l as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkKernel {
    d: usize,
    survival: f64,
    weight: f64,
    bx: Option<BoxSpec>,
}

impl WalkKernel {
    /// Walk surviving each step with probability `survival`, absorbed on
    /// leaving `bx` when given. Green values are unweighted series.
    pub fn new(d: usize, survival: f64, bx: Option<BoxSpec>) -> Result<Self> {
        if !(0.0..=1.0).contains(&survival) {
            return Err(Error::InvalidParameter(format!(
                "survival must lie in [0, 1], got {survival}"
            )));
        }
        if let Some(b) = bx {
            if b.dim() != d {
                return Err(Error::InvalidParameter("box dimension mismatch".into()));
            }
        }
        Ok(WalkKernel {
            d,
            survival,
            weight: 1.0,
            bx,
        })
    }

    /// Kernel whose Green function equals the covariance of the massive
    /// field with mass `m` on `bx`: survival and prefactor `1/(1 + 2m²)`.
    pub fn massive(bx: &BoxSpec, m: f64) -> Result<Self> {
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mass must be ≥ 0, got {m}"
            )));
        }
        let rho = survival_for_mass(m);
        Ok(WalkKernel {
            d: bx.dim(),
            survival: rho,
            weight: rho,
            bx: Some(*bx),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn survival(&self) -> f64 {
        self.survival
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn box_spec(&self) -> Option<&BoxSpec> {
        self.bx.as_ref()
    }

    /// Spectral radius of ρP on the box: ρ·cos(π/(n+1)).
    fn decay_rate(&self, bx: &BoxSpec) -> f64 {
        self.survival * (PI / (bx.side() as f64 + 1.0)).cos()
    }
}

/// ρ = 1/(1 + 2m²).
pub fn survival_for_mass(m: f64) -> f64 {
    1.0 / (1.0 + 2.0 * m * m)
}

/// One killed, absorbed walk evolved step by step. `mass()` is the
/// probability of being alive and inside the box.
pub struct KilledWalk {
    table: Vec<u32>,
    two_d: usize,
    survival: f64,
    cur: Vec<f64>,
    next: Vec<f64>,
    exited: f64,
    killed: f64,
    steps: usize,
}

impl KilledWalk {
    pub fn new(kernel: &WalkKernel, start: SiteIndex) -> Result<Self> {
        let bx = kernel
            .bx
            .ok_or_else(|| Error::InvalidParameter("killed walk needs a box".into()))?;
        if start >= bx.sites() {
            return Err(Error::InvalidParameter("start site outside the box".into()));
        }
        let mut cur = vec![0.0; bx.sites()];
        cur[start] = 1.0;
        Ok(KilledWalk {
            table: bx.neighbor_table(),
            two_d: 2 * bx.dim(),
            survival: kernel.survival,
            next: vec![0.0; cur.len()],
            cur,
            exited: 0.0,
            killed: 0.0,
            steps: 0,
        })
    }

    pub fn step(&mut self) {
        let alive: f64 = self.cur.iter().sum();
        self.killed += (1.0 - self.survival) * alive;
        let p = self.survival / self.two_d as f64;
        let mut exited = 0.0;
        self.next.iter_mut().for_each(|v| *v = 0.0);
        for (i, &m) in self.cur.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let w = p * m;
            for &j in &self.table[i * self.two_d..(i + 1) * self.two_d] {
                if j == OUTSIDE {
                    exited += w;
                } else {
                    self.next[j as usize] += w;
                }
            }
        }
        self.exited += exited;
        std::mem::swap(&mut self.cur, &mut self.next);
        self.steps += 1;
    }

    /// ρ^ℓ P_x(X_ℓ = ·, τ > ℓ)
    pub fn distribution(&self) -> &[f64] {
        &self.cur
    }

    pub fn mass(&self) -> f64 {
        self.cur.iter().sum()
    }

    pub fn exited(&self) -> f64 {
        self.exited
    }

    pub fn killed(&self) -> f64 {
        self.killed
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn norm2(&self) -> f64 {
        self.cur.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A truncated series with a rigorous bound on what was left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub steps: usize,
}

/// Row `G(x, ·) = weight · Σ_ℓ ρ^ℓ P_x(X_ℓ = ·, τ_Λ > ℓ)` with the tail bound
/// shared by every entry.
pub fn green_row(kernel: &WalkKernel, x: SiteIndex) -> Result<(Vec<f64>, f64, usize)> {
    let bx = match kernel.bx {
        Some(b) => b,
        None if kernel.d <= 2 && kernel.survival == 1.0 => {
            return Err(Error::InfiniteGreen(format!(
                "recurrent walk in d = {} without killing or absorption",
                kernel.d
            )))
        }
        None => {
            return Err(Error::InvalidParameter(
                "restricted Green function needs a box; use green_infinite".into(),
            ))
        }
    };
    let r = kernel.decay_rate(&bx);
    let factor = if r < 1.0 {
        r / (1.0 - r)
    } else {
        f64::INFINITY
    };
    let mut walk = KilledWalk::new(kernel, x)?;
    let mut row = walk.distribution().to_vec();
    loop {
        // entries of later terms are bounded by r^{k}‖v_ℓ‖₂
        let tail = kernel.weight * walk.norm2() * factor;
        if tail < SERIES_TOLERANCE {
            row.iter_mut().for_each(|v| *v *= kernel.weight);
            return Ok((row, tail, walk.steps()));
        }
        if walk.steps() >= MAX_STEPS {
            return Err(Error::NonConvergence {
                steps: walk.steps(),
                residual: tail,
            });
        }
        walk.step();
        for (g, v) in row.iter_mut().zip(walk.distribution()) {
            *g += v;
        }
    }
}

/// `weight · Σ_ℓ ρ^ℓ P_x(X_ℓ = y, τ_Λ > ℓ)`.
pub fn green_restricted(kernel: &WalkKernel, x: SiteIndex, y: SiteIndex) -> Result<SeriesValue> {
    let (row, tail, steps) = green_row(kernel, x)?;
    let value = *row
        .get(y)
        .ok_or_else(|| Error::InvalidParameter("target site outside the box".into()))?;
    Ok(SeriesValue {
        value,
        tail_bound: tail,
        steps,
    })
}

/// Diagonal `G(x, x)` for every site, parallel over starting points.
pub fn green_diagonal(kernel: &WalkKernel) -> Result<Vec<f64>> {
    let bx = kernel
        .bx
        .ok_or_else(|| Error::InvalidParameter("diagonal needs a box".into()))?;
    (0..bx.sites())
        .into_par_iter()
        .map(|x| green_restricted(kernel, x, x).map(|g| g.value))
        .collect()
}

/// g_d(0) = Σ_ℓ P₀(X_ℓ = 0) for d ≥ 3.
pub fn green_infinite(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::InfiniteGreen(format!(
            "the simple random walk is recurrent in d = {d}"
        )));
    }
    killed_green_infinite(d, 1.0)
}

/// Σ_ℓ ρ^ℓ P₀(X_ℓ = 0) on the whole lattice.
///
/// Poissonising the step count gives
/// `Σ_ℓ ρ^ℓ p_ℓ = ∫₀^∞ e^{−(1−ρ)t} [e^{−ρt/d} I₀(ρt/d)]^d dt`,
/// integrated with Gauss–Legendre on dyadic panels. Without killing the tail
/// beyond `t = T` is integrated term by term from the large-argument
/// expansion of `e^{−x} I₀(x)`. Absolute accuracy is well below 1e−9.
pub fn killed_green_infinite(d: usize, survival: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
    }
    if !(0.0..=1.0).contains(&survival) {
        return Err(Error::InvalidParameter(
            "survival must lie in [0, 1]".into(),
        ));
    }
    if survival == 1.0 && d <= 2 {
        return Err(Error::InfiniteGreen(format!(
            "the simple random walk is recurrent in d = {d}"
        )));
    }
    if survival == 0.0 {
        return Ok(1.0);
    }
    let rho = survival;
    let kappa = 1.0 - rho;
    let df = d as f64;
    let integrand = |t: f64| (-kappa * t).exp() * scaled_bessel_i0(rho * t / df).powi(d as i32);

    // Upper end of the numerical part.
    let mut upper = 1.0;
    let numeric_end = if kappa > 0.0 {
        (64.0 * df).max(60.0 / kappa)
    } else {
        64.0 * df
    };
    while upper < numeric_end {
        upper *= 2.0;
    }
    let mut total = panel(&integrand, 0.0, 1.0);
    let mut lo = 1.0;
    while lo < upper {
        total += panel(&integrand, lo, 2.0 * lo);
        lo *= 2.0;
    }
    if kappa == 0.0 {
        total += asymptotic_tail(d, upper);
    }
    Ok(total)
}

fn panel<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    const SUB: usize = 8;
    let h = (hi - lo) / SUB as f64;
    (0..SUB)
        .map(|k| {
            let (x, w) = gauss_legendre_on(20, lo + k as f64 * h, lo + (k + 1) as f64 * h);
            x.iter().zip(&w).map(|(t, w)| w * f(*t)).sum::<f64>()
        })
        .sum()
}

/// Coefficients of e^{−x} I₀(x) ≈ (2πx)^{−1/2} Σ_k c_k x^{−k}.
fn bessel_asymptotic_coefficients(terms: usize) -> Vec<f64> {
    let mut c = vec![1.0; terms];
    for k in 1..terms {
        let t = (2 * k - 1) as f64;
        c[k] = c[k - 1] * t * t / (8.0 * k as f64);
    }
    c
}

/// e^{−x} I₀(x) for x ≥ 0.
pub fn scaled_bessel_i0(x: f64) -> f64 {
    if x < 0.0 {
        return scaled_bessel_i0(-x);
    }
    if x < 50.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        let c = bessel_asymptotic_coefficients(14);
        let mut s = 0.0;
        let mut p = 1.0;
        for ck in &c {
            s += ck * p;
            p /= x;
        }
        s / (2.0 * PI * x).sqrt()
    }
}

/// ∫_T^∞ [e^{−t/d} I₀(t/d)]^d dt from the asymptotic expansion.
fn asymptotic_tail(d: usize, t0: f64) -> f64 {
    const TERMS: usize = 14;
    let c = bessel_asymptotic_coefficients(TERMS);
    // e_k: coefficients of (Σ c_k y^k)^d truncated at TERMS.
    let mut e = vec![0.0; TERMS];
    e[0] = 1.0;
    for _ in 0..d {
        let mut next = vec![0.0; TERMS];
        for (i, ei) in e.iter().enumerate() {
            for (j, cj) in c.iter().enumerate().take(TERMS - i) {
                next[i + j] += ei * cj;
            }
        }
        e = next;
    }
    let df = d as f64;
    let lead = (2.0 * PI / df).powf(-df / 2.0);
    e.iter()
        .enumerate()
        .map(|(k, ek)| {
            let p = df / 2.0 + k as f64;
            ek * lead * df.powi(k as i32) * t0.powf(1.0 - p) / (p - 1.0)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassiveVariance {
    pub variance: f64,
    /// variance / |log m|
    pub ratio: f64,
    pub tail_bound: f64,
}

/// Killed, absorbed Green value at the centre of the d = 2 box, i.e. the
/// variance of the massive field there.
pub fn massive_variance_bound(m: f64, n: usize) -> Result<MassiveVariance> {
    if !(m > 0.0 && m < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "m must lie in (0, 0.5), got {m}"
        )));
    }
    if n < 4 {
        return Err(Error::InvalidParameter("n must be ≥ 4".into()));
    }
    let bx = BoxSpec::new(2, n)?;
    let kernel = WalkKernel::massive(&bx, m)?;
    let c = bx.center();
    let g = green_restricted(&kernel, c, c)?;
    Ok(MassiveVariance {
        variance: g.value,
        ratio: g.value / m.ln().abs(),
        tail_bound: g.tail_bound,
    })
}

/// Per-site `ln(Z⁰⁰_Λ / Z⁰⁰_{Λ,m})` in d = 2 from return probabilities.
pub fn ratio_z_series(m: f64, n: usize) -> Result<SeriesValue> {
    if !(m > 0.0 && m < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "m must lie in (0, 0.5), got {m}"
        )));
    }
    ratio_z_series_in(&BoxSpec::new(2, n)?, m)
}

/// Any dimension:
///
/// ```text
/// |Λ|⁻¹ ln(Z_Λ / Z_{Λ,m}) = ½ ln(1 + 2m²)
///     + ½ |Λ|⁻¹ Σ_x Σ_{ℓ≥1} (1 − ρ^{2ℓ})/(2ℓ) · P_x(X_{2ℓ} = x, τ_Λ > 2ℓ)
/// ```
///
/// from `ln det(I − ρP) = −Σ_k ρ^k tr(P^k)/k`. Return probabilities are
/// computed once per symmetry class of the box (reflections and axis
/// permutations preserve them).
pub fn ratio_z_series_in(bx: &BoxSpec, m: f64) -> Result<SeriesValue> {
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "mass must be ≥ 0, got {m}"
        )));
    }
    if bx.sites() == 0 {
        return Err(Error::InvalidParameter("empty box".into()));
    }
    let rho = survival_for_mass(m);
    let walk = WalkKernel::new(bx.dim(), 1.0, Some(*bx))?;
    let r = walk.decay_rate(bx);
    let factor = r / (1.0 - r);
    let classes = symmetry_classes(bx);

    let per_class: Vec<Result<(f64, f64, usize, usize)>> = classes
        .par_iter()
        .map(|&(rep, count)| {
            let mut w = KilledWalk::new(&walk, rep)?;
            let mut sum = 0.0;
            let mut rho2l = 1.0;
            loop {
                w.step();
                w.step();
                let l2 = w.steps() as f64;
                rho2l *= rho * rho;
                sum += (1.0 - rho2l) / l2 * w.distribution()[rep];
                let tail = w.norm2() * factor / l2;
                if tail < SERIES_TOLERANCE * 0.1 {
                    return Ok((sum, tail, w.steps(), count));
                }
                if w.steps() >= MAX_STEPS {
                    return Err(Error::NonConvergence {
                        steps: w.steps(),
                        residual: tail,
                    });
                }
            }
        })
        .collect();
    let mut total = 0.0;
    let mut tail = 0.0;
    let mut steps = 0;
    for item in per_class {
        let (s, t, k, count) = item?;
        total += s * count as f64;
        tail += t * count as f64;
        steps = steps.max(k);
    }
    let nsites = bx.sites() as f64;
    Ok(SeriesValue {
        value: 0.5 * (2.0 * m * m).ln_1p() + 0.5 * total / nsites,
        tail_bound: 0.5 * tail / nsites,
        steps,
    })
}

/// Representatives of the hyperoctahedral orbits of the box with their
/// sizes, in a fixed order.
fn symmetry_classes(bx: &BoxSpec) -> Vec<(SiteIndex, usize)> {
    let n = bx.side();
    let mut classes: BTreeMap<Vec<usize>, (SiteIndex, usize)> = BTreeMap::new();
    for i in 0..bx.sites() {
        let mut key: Vec<usize> = bx.coords(i).iter().map(|&c| c.min(n - 1 - c)).collect();
        key.sort_unstable();
        classes.entry(key).or_insert((i, 0)).1 += 1;
    }
    classes.into_values().collect()
}
