//! Analytic phase-diagram bounds in the `(b, h)` plane.
//!
//! Notation: `u = −b + h` (the potential on repulsive sites). In `d ≥ 3`
//! the tilting argument gives the lower bound
//!
//! ```text
//! f ≥ h·C₂ − (s·C₁/2)·u − s²/16,
//! ```
//!
//! maximised at `s* = −4C₁u` with value `h·C₂ + C₁²u²`, hence positivity for
//! `h > −K u²` with `K = C₁²/C₂`. In `d = 2` the massive-field version is
//!
//! ```text
//! f ≥ h·C̃₁/|log m| − s·C₁u/(2|log m|) − s²m²/2 − s²/16 − C′m²|log m|.
//! ```
//!
//! Constants are estimated numerically by [`estimate_constants`] and always
//! carry a provenance map.

use crate::error::{Error, Result};
use crate::gaussfield::{overlap_derivative, window_probability};
use crate::walk;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default half-width of the admissible range `u ∈ (−ε, 0)`.
pub const DEFAULT_EPSILON: f64 = 0.5;
/// Fraction of ε beyond which a result is marked as near the edge.
pub const EDGE_FRACTION: f64 = 0.9;

/// ℓ(b, h) = ln E e^{b·e + h} = h + ln cosh b for fair ±1 signs.
pub fn annealed_strength(b: f64, h: f64) -> f64 {
    h + ln_cosh(b)
}

/// ln cosh b without overflow: |b| + ln(1 + e^{−2|b|}) − ln 2.
fn ln_cosh(b: f64) -> f64 {
    let x = b.abs();
    x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
}

/// The annealed critical line ℓ = 0, i.e. `h = −ln cosh b`.
pub fn annealed_critical_h(b: f64) -> Result<f64> {
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("b must be ≥ 0, got {b}")));
    }
    Ok(0.0 - ln_cosh(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub d: usize,
    pub a: f64,
    /// Field variance the constants were evaluated at.
    pub variance: f64,
    /// Overlap slope C₁.
    pub c1: f64,
    /// Window mass lower bound C₂.
    pub c2: f64,
    /// d = 2 window-mass constant C̃₁.
    pub c1_tilde: Option<f64>,
    /// d = 2 mass-cost constant C′.
    pub c_prime: Option<f64>,
    /// Reference mass for the d = 2 constants.
    pub m_ref: Option<f64>,
    pub provenance: BTreeMap<String, String>,
}

impl BoundConstants {
    /// Hand-specified constants, recorded as such.
    pub fn manual(
        d: usize,
        c1: f64,
        c2: f64,
        c1_tilde: Option<f64>,
        c_prime: Option<f64>,
    ) -> Result<Self> {
        let values = [Some(c1), Some(c2), c1_tilde, c_prime];
        if values
            .iter()
            .flatten()
            .any(|v| !(*v > 0.0) || !v.is_finite())
        {
            return Err(Error::InvalidParameter(
                "constants must be positive and finite".into(),
            ));
        }
        let provenance = ["C1", "C2", "C1_tilde", "C_prime"]
            .iter()
            .zip(values)
            .filter(|(_, v)| v.is_some())
            .map(|(k, _)| (k.to_string(), "manual".to_string()))
            .collect();
        Ok(BoundConstants {
            d,
            a: f64::NAN,
            variance: f64::NAN,
            c1,
            c2,
            c1_tilde,
            c_prime,
            m_ref: None,
            provenance,
        })
    }

    /// K = C₁²/C₂, the coefficient produced by substituting `s*`.
    pub fn k(&self) -> f64 {
        self.c1 * self.c1 / self.c2
    }

    /// C₁/C₂, without the square on C₁.
    pub fn k_unsquared(&self) -> f64 {
        self.c1 / self.c2
    }

    fn d2(&self) -> Result<(f64, f64)> {
        match (self.c1_tilde, self.c_prime) {
            (Some(t), Some(p)) => Ok((t, p)),
            _ => Err(Error::InvalidParameter(
                "d = 2 bound needs C1_tilde and C_prime".into(),
            )),
        }
    }
}

/// Default mass grid and box size for fitting C′.
pub const C_PRIME_GRID: [f64; 6] = [0.3, 0.2, 0.1, 0.05, 0.02, 0.01];
pub const C_PRIME_BOX: usize = 16;

/// Numerically estimated constants.
///
/// - `d ≥ 3`: the variance is the infinite-volume Green value `g_d(0)`; C₂ is
///   the window mass of `N(a, g_d(0))` and C₁ its overlap slope.
/// - `d = 2` (needs `m`): the variance is the infinite-volume massive
///   variance at `m`. C₂ and C₁ are evaluated there, `C̃₁ = |log m|·C₂`,
///   `C₁(a) = |log m|·C₁`, and C′ is the largest value of
///   `ratio_z_series(m, 16)/(m²|log m|)` over [`C_PRIME_GRID`].
pub fn estimate_constants(d: usize, a: f64, m: Option<f64>) -> Result<BoundConstants> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("a must be > 0, got {a}")));
    }
    let mut provenance = BTreeMap::new();
    match d {
        0 | 1 => Err(Error::InvalidParameter("constants need d ≥ 2".into())),
        2 => {
            let m = m.ok_or_else(|| Error::InvalidParameter("d = 2 needs a mass".into()))?;
            if !(m > 0.0 && m < 0.5) {
                return Err(Error::InvalidParameter(format!(
                    "m must lie in (0, 0.5), got {m}"
                )));
            }
            let rho = walk::survival_for_mass(m);
            let variance = rho * walk::killed_green_infinite(2, rho)?;
            let l = m.ln().abs();
            let mass = window_probability(a, variance, a, 0.0);
            let slope = overlap_derivative(variance, a)?;
            let (c_prime, arg) = estimate_c_prime(C_PRIME_BOX, &C_PRIME_GRID)?;
            provenance.insert(
                "variance".into(),
                format!("infinite-volume massive variance ρ·G_ρ(0), m = {m}, ρ = 1/(1+2m²)"),
            );
            provenance.insert(
                "C2".into(),
                format!("window mass P(N(a, σ²) ∈ [−a, a]), σ² = {variance:.10}"),
            );
            provenance.insert(
                "C1".into(),
                format!(
                    "|log m| × overlap slope on (0, {:.6}] (raw slope {:.10})",
                    slope.s_max, slope.c1
                ),
            );
            provenance.insert("C1_tilde".into(), "|log m| × C2".into());
            provenance.insert(
                "C_prime".into(),
                format!(
                    "max over m ∈ {C_PRIME_GRID:?} of ratio_z_series(m, {C_PRIME_BOX})/(m²|log m|), attained at m = {arg}"
                ),
            );
            Ok(BoundConstants {
                d,
                a,
                variance,
                c1: l * slope.c1,
                c2: mass,
                c1_tilde: Some(l * mass),
                c_prime: Some(c_prime),
                m_ref: Some(m),
                provenance,
            })
        }
        _ => {
            let variance = walk::green_infinite(d)?;
            let mass = window_probability(a, variance, a, 0.0);
            let slope = overlap_derivative(variance, a)?;
            provenance.insert(
                "variance".into(),
                format!("g_{d}(0) from the Bessel integral"),
            );
            provenance.insert(
                "C2".into(),
                format!("window mass P(N(a, g_{d}(0)) ∈ [−a, a])"),
            );
            provenance.insert(
                "C1".into(),
                format!("overlap slope minimised on (0, {:.6}]", slope.s_max),
            );
            Ok(BoundConstants {
                d,
                a,
                variance,
                c1: slope.c1,
                c2: mass,
                c1_tilde: None,
                c_prime: None,
                m_ref: None,
                provenance,
            })
        }
    }
}

/// `max_m ratio_z_series(m, n)/(m²|log m|)` and the maximising `m`.
pub fn estimate_c_prime(n: usize, grid: &[f64]) -> Result<(f64, f64)> {
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for &m in grid {
        let r = walk::ratio_z_series(m, n)?.value / (m * m * m.ln().abs());
        if r > best.0 {
            best = (r, m);
        }
    }
    if !(best.0 > 0.0) {
        return Err(Error::Numerical("C′ estimate is not positive".into()));
    }
    Ok(best)
}

/// Checks the standing assumption `u < 0 < b + h`.
fn standing(b: f64, h: f64) -> Result<f64> {
    let u = -b + h;
    if !(u < 0.0 && b + h > 0.0) {
        return Err(Error::OutOfRegime(format!(
            "need −b + h < 0 < b + h, got b = {b}, h = {h}"
        )));
    }
    Ok(u)
}

/// `h·C₂ − (s·C₁/2)·u − s²/16`.
pub fn lower_bound_d3(b: f64, h: f64, s: f64, c: &BoundConstants) -> Result<f64> {
    let u = standing(b, h)?;
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!("s must be ≥ 0, got {s}")));
    }
    Ok(h * c.c2 - 0.5 * s * c.c1 * u - s * s / 16.0)
}

/// s* = −4C₁u.
pub fn optimal_shift_d3(b: f64, h: f64, c: &BoundConstants) -> f64 {
    -4.0 * c.c1 * (-b + h)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionVerdict {
    /// Inside `u ∈ (−ε, 0)` with `b + h > 0`.
    pub covered: bool,
    pub positive: bool,
    /// Optimised bound value (d ≥ 3) or bound at the witness (d = 2).
    pub margin: f64,
    /// `u` beyond 90% of ε.
    pub near_edge: bool,
    /// `(s, m)` realising `margin`; `m` is absent in d ≥ 3.
    pub witness: Option<(f64, Option<f64>)>,
}

impl RegionVerdict {
    fn uncovered() -> Self {
        RegionVerdict {
            covered: false,
            positive: false,
            margin: f64::NAN,
            near_edge: false,
            witness: None,
        }
    }
}

fn in_range(b: f64, h: f64, epsilon: f64) -> Option<f64> {
    let u = -b + h;
    (u < 0.0 && u > -epsilon && b + h > 0.0).then_some(u)
}

/// `h > −K u²`, evaluated as the sign of the optimised bound
/// `h·C₂ + C₁²u²`.
pub fn region_positive_d3(b: f64, h: f64, c: &BoundConstants, epsilon: f64) -> RegionVerdict {
    let Some(u) = in_range(b, h, epsilon) else {
        return RegionVerdict::uncovered();
    };
    let margin = h * c.c2 + c.c1 * c.c1 * u * u;
    RegionVerdict {
        covered: true,
        positive: margin > 0.0,
        margin,
        near_edge: u < -EDGE_FRACTION * epsilon,
        witness: Some((optimal_shift_d3(b, h, c), None)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRoot {
    pub b: f64,
    /// Root of `h = −K(b − h)²` by bisection; `None` when no real root.
    pub bisection: Option<f64>,
    /// `b − 1/(2K) + ½√(1/K² − 4b/K)`, the exact root of the same equation.
    pub closed_form: Option<f64>,
    /// `b − 1/(2K) + ½√(1/K² − 8b/K)`; not a root of that equation.
    pub closed_form_8b: Option<f64>,
}

/// Upper root of `h + K(b − h)² = 0` (the one tending to 0 with `b`).
pub fn critical_curve_d3(b: f64, c: &BoundConstants) -> Result<CurveRoot> {
    critical_curve_for_k(b, c.k())
}

pub fn critical_curve_for_k(b: f64, k: f64) -> Result<CurveRoot> {
    if !(b >= 0.0) || !(k > 0.0) {
        return Err(Error::InvalidParameter("need b ≥ 0 and K > 0".into()));
    }
    let radical = |c: f64| {
        let disc = 1.0 / (k * k) - c * b / k;
        (disc >= 0.0).then(|| b - 0.5 / k + 0.5 * disc.sqrt())
    };
    let bisection = if b == 0.0 {
        Some(0.0)
    } else if b > 0.25 / k {
        None
    } else {
        let g = |h: f64| h + k * (b - h) * (b - h);
        // g(0) = Kb² > 0 and g ≤ 0 at the vertex b − 1/(2K).
        let (mut lo, mut hi) = (b - 0.5 / k, 0.0);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(0.5 * (lo + hi))
    };
    Ok(CurveRoot {
        b,
        bisection,
        closed_form: radical(4.0),
        closed_form_8b: radical(8.0),
    })
}

/// The d = 2 bound at `(s, m)`.
pub fn lower_bound_d2(b: f64, h: f64, s: f64, m: f64, c: &BoundConstants) -> Result<f64> {
    let u = standing(b, h)?;
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!("s must be ≥ 0, got {s}")));
    }
    if !(m > 0.0 && m < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "m must lie in (0, 0.5), got {m}"
        )));
    }
    let (c1t, cp) = c.d2()?;
    let l = m.ln().abs();
    Ok(
        h * c1t / l
            - s * c.c1 * u / (2.0 * l)
            - s * s * m * m / 2.0
            - s * s / 16.0
            - cp * m * m * l,
    )
}

/// `s = −C₁u/((m² + ¼)|log m|)` for a given `m`.
pub fn vache_shift(b: f64, h: f64, m: f64, c: &BoundConstants) -> f64 {
    -c.c1 * (-b + h) / ((m * m + 0.25) * m.ln().abs())
}

/// `m² = −k/(log k)³` with `k = −h·C̃₁/C′`, then `s` from [`vache_shift`].
pub fn vache_parameters(b: f64, h: f64, c: &BoundConstants) -> Result<(f64, f64)> {
    let (c1t, cp) = c.d2()?;
    if !(h < 0.0 && -b + h < 0.0) {
        return Err(Error::OutOfRegime(format!(
            "parameter choice needs h < 0 and −b + h < 0, got b = {b}, h = {h}"
        )));
    }
    let k = -h * c1t / cp;
    if k >= 1.0 {
        return Err(Error::OutOfRegime(format!("k = {k} ≥ 1, so log k ≥ 0")));
    }
    let lk = k.ln();
    let m = (-k / (lk * lk * lk)).sqrt();
    if !(m > 0.0 && m < 0.5) {
        return Err(Error::OutOfRegime(format!(
            "chosen m = {m} outside (0, 0.5)"
        )));
    }
    Ok((vache_shift(b, h, m, c), m))
}

/// For `h < 0` the bound is evaluated at [`vache_parameters`]. For `h ≥ 0`
/// those are undefined; a log-spaced `m` grid with the matching shift is
/// searched instead and the best point returned as witness.
pub fn region_positive_d2(
    b: f64,
    h: f64,
    c: &BoundConstants,
    epsilon: f64,
) -> Result<RegionVerdict> {
    let Some(u) = in_range(b, h, epsilon) else {
        return Ok(RegionVerdict::uncovered());
    };
    let (s, m, value) = if h < 0.0 {
        match vache_parameters(b, h, c) {
            Ok((s, m)) => (s, m, lower_bound_d2(b, h, s, m, c)?),
            Err(Error::OutOfRegime(_)) => {
                let mut v = RegionVerdict::uncovered();
                v.covered = true;
                v.near_edge = u < -EDGE_FRACTION * epsilon;
                return Ok(v);
            }
            Err(e) => return Err(e),
        }
    } else {
        let mut best = (f64::NAN, f64::NAN, f64::NEG_INFINITY);
        for i in 0..=240 {
            let m = 0.49 * 10f64.powf(-(i as f64) / 20.0);
            let s = vache_shift(b, h, m, c);
            let v = lower_bound_d2(b, h, s, m, c)?;
            if v > best.2 {
                best = (s, m, v);
            }
        }
        best
    };
    Ok(RegionVerdict {
        covered: true,
        positive: value > 0.0,
        margin: value,
        near_edge: u < -EDGE_FRACTION * epsilon,
        witness: Some((s, Some(m))),
    })
}

/// Lowest `h` at which [`region_positive_d2`] holds for this `b`.
///
/// The d = 2 boundary sits extremely close to the axis (its distance decays
/// like `u²/|log|h||`), so `h ∈ (−b, 0)` is scanned on a grid logarithmic in
/// `|h|`, from `−b(1 − 10⁻³)` up to `−b·10⁻¹⁵`, and the last change from
/// false to true is refined by bisection. `None` if the predicate never
/// holds on the grid.
pub fn boundary_d2(b: f64, c: &BoundConstants, epsilon: f64) -> Result<Option<f64>> {
    if !(b > 0.0) {
        return Ok(if b == 0.0 { Some(0.0) } else { None });
    }
    let positive = |h: f64| region_positive_d2(b, h, c, epsilon).map(|v| v.positive);
    const STEPS_PER_DECADE: usize = 20;
    let grid: Vec<f64> = (0..=15 * STEPS_PER_DECADE)
        .map(|k| -b * (1.0 - 1e-3) * 10f64.powf(-(k as f64) / STEPS_PER_DECADE as f64))
        .collect();
    let mut prev = positive(grid[0])?;
    if prev && grid.iter().all(|&h| positive(h).unwrap_or(false)) {
        return Ok(Some(grid[0]));
    }
    let mut switch = None;
    for w in grid.windows(2) {
        let p = positive(w[1])?;
        if !prev && p {
            switch = Some((w[0], w[1]));
        }
        prev = p;
    }
    let Some((mut lo, mut hi)) = switch else {
        return Ok(None);
    };
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if positive(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Both curves at one `b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub b: f64,
    pub h_annealed: f64,
    pub h_quenched_bound_d3: Option<f64>,
    pub h_quenched_bound_d2: Option<f64>,
    pub closed_form_d3: Option<f64>,
    pub closed_form_8b_d3: Option<f64>,
}

pub const CURVE_CSV_HEADER: &str =
    "b,h_annealed,h_quenched_bound_d3,h_quenched_bound_d2,K,C1,C2,C1_tilde,C_prime";

pub fn curve_row(
    b: f64,
    c3: &BoundConstants,
    c2: &BoundConstants,
    epsilon: f64,
) -> Result<CurveRow> {
    let root = critical_curve_d3(b, c3)?;
    Ok(CurveRow {
        b,
        h_annealed: annealed_critical_h(b)?,
        h_quenched_bound_d3: root.bisection,
        h_quenched_bound_d2: boundary_d2(b, c2, epsilon)?,
        closed_form_d3: root.closed_form,
        closed_form_8b_d3: root.closed_form_8b,
    })
}

impl CurveRow {
    /// Row of [`CURVE_CSV_HEADER`]; missing values are empty fields.
    pub fn to_csv(&self, c3: &BoundConstants, c2: &BoundConstants) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        format!(
            "{:?},{:?},{},{},{:?},{:?},{:?},{},{}",
            self.b,
            self.h_annealed,
            opt(self.h_quenched_bound_d3),
            opt(self.h_quenched_bound_d2),
            c3.k(),
            c3.c1,
            c3.c2,
            opt(c2.c1_tilde),
            opt(c2.c_prime)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal;

    fn unit() -> BoundConstants {
        BoundConstants::manual(3, 1.0, 1.0, Some(1.0), Some(1.0)).unwrap()
    }

    #[test]
    fn annealed_line() {
        assert_eq!(annealed_strength(0.0, 0.3), 0.3);
        assert!((annealed_strength(1.0, 0.0) - 0.433_780_830_483_027).abs() < 1e-12);
        assert!(annealed_strength(1.0, -(1f64.cosh().ln())).abs() < 1e-15);
        assert_eq!(annealed_critical_h(0.0).unwrap(), 0.0);
        assert!((annealed_critical_h(1.0).unwrap() + 0.433_781).abs() < 1e-6);
        let h = annealed_critical_h(0.1).unwrap();
        assert!((h + 0.004_991_7).abs() < 1e-7);
        assert!((h + 0.005).abs() < 1e-5);
        assert!(annealed_critical_h(-1.0).is_err());
        assert!((annealed_strength(800.0, 0.0) - (800.0 - std::f64::consts::LN_2)).abs() < 1e-9);
    }

    #[test]
    fn parabola_bound() {
        let c = unit();
        assert_eq!(lower_bound_d3(1.0, -0.5, 0.0, &c).unwrap(), -0.5);
        let s = optimal_shift_d3(1.0, -0.5, &c);
        assert_eq!(s, 6.0);
        assert!((lower_bound_d3(1.0, -0.5, s, &c).unwrap() - 1.75).abs() < 1e-15);
        for ds in [-0.1, 0.1] {
            assert!(lower_bound_d3(1.0, -0.5, s + ds, &c).unwrap() < 1.75);
        }
        assert!(lower_bound_d3(0.2, 0.3, 1.0, &c).is_err());
        assert!(lower_bound_d3(1.0, -1.5, 1.0, &c).is_err());
    }

    #[test]
    fn region_d3_examples() {
        let c = unit();
        assert!(region_positive_d3(0.3, -0.05, &c, DEFAULT_EPSILON).positive);
        for b in [0.05, 0.2, 0.45] {
            let v = region_positive_d3(b, 0.0, &c, DEFAULT_EPSILON);
            assert!(v.covered && v.positive);
        }
        let far = region_positive_d3(2.0, -0.05, &c, DEFAULT_EPSILON);
        assert!(!far.covered && !far.positive);
        let wide = region_positive_d3(2.0, -0.05, &c, 2.5);
        assert!(wide.covered && wide.positive);
        assert!(region_positive_d3(0.48, 0.0, &c, DEFAULT_EPSILON).near_edge);
    }

    #[test]
    fn curve_roots() {
        let c = unit();
        assert_eq!(critical_curve_d3(0.0, &c).unwrap().bisection, Some(0.0));
        let r = critical_curve_d3(0.1, &c).unwrap();
        let h = r.bisection.unwrap();
        assert!((h + 0.012_701_665_379_258).abs() < 1e-10);
        assert!((r.closed_form.unwrap() - h).abs() < 1e-10);
        assert!((r.closed_form_8b.unwrap() - h).abs() > 1e-3);
        assert!(critical_curve_d3(0.3, &c).unwrap().bisection.is_none());
    }

    #[test]
    fn bisection_root_matches_predicate_sign_change() {
        let c = BoundConstants::manual(3, 0.4, 0.7, None, None).unwrap();
        for b in [0.01, 0.05, 0.2] {
            let h = critical_curve_d3(b, &c).unwrap().bisection.unwrap();
            let eps = 10.0;
            assert!(region_positive_d3(b, h + 1e-9, &c, eps).positive);
            assert!(!region_positive_d3(b, h - 1e-9, &c, eps).positive);
        }
    }

    #[test]
    fn small_b_scaling() {
        let c = BoundConstants::manual(3, 0.23, 0.45, None, None).unwrap();
        let k = c.k();
        let mut residual = Vec::new();
        for b in [0.01, 0.02, 0.05] {
            let h = critical_curve_d3(b, &c).unwrap().bisection.unwrap();
            assert!((h / (-b * b) / k - 1.0).abs() < 0.1);
            residual.push(((h + k * b * b) / (b * b * b)).abs());
        }
        // |root + Kb²| = O(b³) with a bounded constant.
        assert!(residual.iter().all(|&r| r < 3.0 * k * k));
    }

    #[test]
    fn d2_bound_arithmetic() {
        let c = unit();
        let v = lower_bound_d2(0.5, -0.01, 0.0, 0.1, &c).unwrap();
        assert!((v - (-0.004_342_944_8 - 0.023_025_850_9)).abs() < 1e-9);
        assert!(lower_bound_d2(0.5, -0.01, 0.1, 0.6, &c).is_err());
        let no_d2 = BoundConstants::manual(3, 1.0, 1.0, None, None).unwrap();
        assert!(lower_bound_d2(0.5, -0.01, 0.0, 0.1, &no_d2).is_err());
    }

    #[test]
    fn d2_bound_term_signs() {
        let c = unit();
        let (b, h, m) = (0.3, -0.01, 0.05);
        let base =
            lower_bound_d2(b, h, 0.0, m, &c).unwrap() + c.c_prime.unwrap() * m * m * m.ln().abs();
        assert!(base < 0.0);
        let s = 0.02;
        let l = m.ln().abs();
        let linear = -s * c.c1 * (-b + h) / (2.0 * l);
        assert!(linear > 0.0);
    }

    #[test]
    fn vache_examples() {
        // k = 0.001: m² = 0.001/(−ln 0.001)³
        let c = BoundConstants::manual(2, 1.0, 1.0, Some(1.0), Some(1.0)).unwrap();
        let (_, m) = vache_parameters(0.5, -0.001, &c).unwrap();
        assert!((m * m - 3.034e-6).abs() < 1e-9);
        let s = vache_shift(0.0, -0.01, 0.01, &c);
        assert!((s - 0.008_683).abs() < 1e-6);
        let (s1, m1) = vache_parameters(0.2, -1e-3, &c).unwrap();
        let (s2, m2) = vache_parameters(0.2, -1e-9, &c).unwrap();
        assert!(s2 < s1 && m2 < m1);
        assert!(vache_parameters(0.2, 0.01, &c).is_err());
        let big = BoundConstants::manual(2, 1.0, 1.0, Some(10.0), Some(1.0)).unwrap();
        assert!(matches!(
            vache_parameters(0.5, -0.2, &big),
            Err(Error::OutOfRegime(_))
        ));
    }

    #[test]
    fn region_d2_examples_and_witness() {
        let c = BoundConstants::manual(2, 0.5, 0.4, Some(0.6), Some(0.3)).unwrap();
        assert!(
            region_positive_d2(0.05, 1e-6, &c, DEFAULT_EPSILON)
                .unwrap()
                .positive
        );
        assert!(
            !region_positive_d2(0.1, -0.2, &c, DEFAULT_EPSILON)
                .unwrap()
                .covered
        );
        for b in [0.02, 0.05, 0.1, 0.2] {
            for i in 0..50 {
                let h = -b * i as f64 / 50.0;
                let v = region_positive_d2(b, h, &c, DEFAULT_EPSILON).unwrap();
                if v.positive {
                    let (s, m) = v.witness.unwrap();
                    assert!(lower_bound_d2(b, h, s, m.unwrap(), &c).unwrap() > 0.0);
                }
            }
        }
    }

    #[test]
    fn d2_boundary_is_a_sign_change_below_zero() {
        let c = BoundConstants::manual(2, 0.5, 0.4, Some(0.6), Some(0.3)).unwrap();
        let b = 0.1;
        let h = boundary_d2(b, &c, DEFAULT_EPSILON).unwrap().unwrap();
        assert!(h < 0.0 && h > -b);
        assert!(
            region_positive_d2(b, h + 1e-6, &c, DEFAULT_EPSILON)
                .unwrap()
                .positive
        );
        assert!(
            !region_positive_d2(b, h - 1e-4, &c, DEFAULT_EPSILON)
                .unwrap()
                .positive
        );
    }

    #[test]
    fn constants_d3() {
        let c = estimate_constants(3, 1.0, None).unwrap();
        let g3 = walk::green_infinite(3).unwrap();
        let expected = 0.5 - normal::cdf(-2.0 / g3.sqrt());
        assert!((c.c2 - expected).abs() < 1e-12);
        assert!((c.c2 - 0.4478).abs() < 5e-4);
        assert!(c.c1 > 0.0 && c.c1 < normal::pdf(0.0) / g3.sqrt());
        assert!(c.provenance.contains_key("C1") && c.provenance.contains_key("C2"));
        assert!((c.k() - c.c1 * c.c1 / c.c2).abs() < 1e-15);
        let small = estimate_constants(3, 1e-3, None).unwrap();
        assert!(small.c2 < 1e-3);
    }

    #[test]
    fn constants_d2() {
        let m = 0.1;
        let c = estimate_constants(2, 1.0, Some(m)).unwrap();
        let l = m.ln().abs();
        let finite = walk::massive_variance_bound(m, 64).unwrap().variance;
        let mass = window_probability(1.0, finite, 1.0, 0.0);
        let rel = (c.c1_tilde.unwrap() / l / mass - 1.0).abs();
        assert!(rel < 0.2, "relative difference {rel}");
        assert!(c.c_prime.unwrap() > 0.0);
        for key in ["C1", "C2", "C1_tilde", "C_prime", "variance"] {
            assert!(c.provenance.contains_key(key), "{key}");
        }
        assert!(estimate_constants(2, 1.0, None).is_err());
    }

    #[test]
    fn curve_row_formatting() {
        let c3 = unit();
        let c2 = BoundConstants::manual(2, 0.5, 0.4, Some(0.6), Some(0.3)).unwrap();
        let row = curve_row(0.0, &c3, &c2, DEFAULT_EPSILON).unwrap();
        assert_eq!(row.h_annealed, 0.0);
        assert_eq!(row.h_quenched_bound_d3, Some(0.0));
        assert_eq!(row.h_quenched_bound_d2, Some(0.0));
        let line = row.to_csv(&c3, &c2);
        assert_eq!(line.split(',').count(), CURVE_CSV_HEADER.split(',').count());
    }
}
