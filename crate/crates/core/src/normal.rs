//! Standard normal helpers. `erfc` comes from `libm`; the inverse starts
//! from `statrs`' `erfc_inv` and is polished by Newton steps against it.
//!
//! Tail probabilities are always evaluated through `erfc` on the side where
//! the result is small, so relative accuracy is kept far into the tails.

use libm::erfc;
use rand::Rng;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

/// 1/√(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Density of `N(mean, variance)`.
pub fn pdf_with(x: f64, mean: f64, variance: f64) -> f64 {
    let z = (x - mean) / variance.sqrt();
    pdf(z) / variance.sqrt()
}

/// Φ(x).
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x), accurate for large positive `x`.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// P(l ≤ Z ≤ u) for a standard normal Z, evaluated on the side with less
/// cancellation.
pub fn interval(l: f64, u: f64) -> f64 {
    if u <= l {
        return 0.0;
    }
    if l >= 0.0 {
        sf(l) - sf(u)
    } else if u <= 0.0 {
        cdf(u) - cdf(l)
    } else {
        1.0 - cdf(l) - sf(u)
    }
}

/// ln P(l ≤ Z ≤ u); `-inf` when the probability underflows.
pub fn ln_interval(l: f64, u: f64) -> f64 {
    interval(l, u).ln()
}

/// Φ⁻¹(p).
pub fn quantile(p: f64) -> f64 {
    if p < 0.5 {
        -upper_quantile(p)
    } else {
        upper_quantile(1.0 - p)
    }
}

/// x such that 1 − Φ(x) = q; keeps precision for tiny `q`.
pub fn upper_quantile(q: f64) -> f64 {
    let mut x = SQRT_2 * erfc_inv(2.0 * q);
    if !x.is_finite() {
        return x;
    }
    for _ in 0..2 {
        let dens = pdf(x);
        if dens <= 0.0 {
            break;
        }
        x += (sf(x) - q) / dens;
    }
    x
}

/// Draws a standard normal restricted to `[l, u]` (either end may be
/// infinite) by inversion of the CDF on the better-conditioned side, with an
/// exponential rejection sampler for intervals beyond the reach of `erfc`.
pub fn truncated_standard<R: Rng + ?Sized>(l: f64, u: f64, rng: &mut R) -> f64 {
    debug_assert!(l < u);
    if u <= 0.0 {
        return -truncated_standard(-u, -l, rng);
    }
    if l < 0.0 {
        let pl = cdf(l);
        let pu = cdf(u);
        let p = pl + rng.random::<f64>() * (pu - pl);
        return quantile(p).clamp(l, u);
    }
    // Upper tail region [l, u] with l ≥ 0.
    let ql = sf(l);
    let qu = sf(u);
    if ql > 1e-300 && ql - qu > 0.0 {
        let q = qu + rng.random::<f64>() * (ql - qu);
        let x = upper_quantile(q);
        if x.is_finite() {
            return x.clamp(l, u);
        }
    }
    // Robert (1995) exponential proposal with the optimal rate.
    let rate = 0.5 * (l + (l * l + 4.0).sqrt());
    loop {
        let e: f64 = -(1.0 - rng.random::<f64>()).ln() / rate;
        let x = l + e;
        if x > u {
            continue;
        }
        let accept = (-0.5 * (x - rate) * (x - rate)).exp();
        if rng.random::<f64>() <= accept {
            return x;
        }
    }
}

/// 1/√(2π σ²), density peak of a centred normal.
pub fn peak_density(variance: f64) -> f64 {
    1.0 / (2.0 * PI * variance).sqrt()
}
