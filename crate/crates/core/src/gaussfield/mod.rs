//! Exact Gaussian machinery for the massless and massive lattice free field.
//!
//! With zero potential the field on `Λ_n` has density proportional to
//!
//! ```text
//! exp( −(1/4d) Σ_{x∼y, {x,y}∩Λ≠∅} (φ_x − φ_y)²  −  m² Σ_x (φ_x − ζ)² )
//! ```
//!
//! with `φ ≡ bc` outside the box. Writing it as `exp(−½ φᵀQφ + rᵀφ + c)`
//! gives `Q_xx = 1 + 2m²`, `Q_xy = −1/(2d)` for neighbours inside the box,
//! `r_x = bc·#{outside neighbours of x}/(2d) + 2m²ζ` and
//! `c = −bc²·|∂E|/(4d) − m²ζ²|Λ|`. Boundary values only ever enter through
//! `r` and `c`.
//!
//! `Q` is banded in row-major order (half-bandwidth `n^{d−1}`), so means,
//! log-determinants, exact samples and the whole diagonal of `Q⁻¹` come from
//! one banded Cholesky factor.

pub mod band;

use crate::error::{Error, Result};
use crate::lattice::{self, BoxSpec, SiteIndex, OUTSIDE};
use crate::normal;
use band::{BandCholesky, BandMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct GaussianModel {
    bx: BoxSpec,
    mass: f64,
    bc: f64,
    center: f64,
    beta: f64,
    precision: BandMatrix,
    linear: Vec<f64>,
    constant: f64,
    neighbors: Vec<u32>,
    factor: BandCholesky,
    mean: Vec<f64>,
}

/// One realisation of the heights over the box.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    pub bx: BoxSpec,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GaussianSummary {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// ln Z relative to the massless, zero-boundary field on the same box.
    pub log_partition: f64,
}

/// Assembles the model for mass `m ≥ 0`, boundary value `bc` and mass
/// centre `center`.
pub fn build_model(bx: &BoxSpec, m: f64, bc: f64, center: f64) -> Result<GaussianModel> {
    GaussianModel::new(bx, m, bc, center, 1.0)
}

impl GaussianModel {
    fn new(bx: &BoxSpec, m: f64, bc: f64, center: f64, beta: f64) -> Result<Self> {
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mass must be ≥ 0, got {m}"
            )));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "β must be > 0, got {beta}"
            )));
        }
        if !bc.is_finite() || !center.is_finite() {
            return Err(Error::InvalidParameter(
                "boundary values must be finite".into(),
            ));
        }
        let n_sites = bx.sites();
        if n_sites == 0 {
            return Err(Error::InvalidParameter("empty box".into()));
        }
        let d = bx.dim() as f64;
        let coupling = 1.0 / (2.0 * d);
        let neighbors = bx.neighbor_table();
        let two_d = 2 * bx.dim();
        let mut q = BandMatrix::zeros(n_sites, bx.bandwidth());
        let mut linear = vec![0.0; n_sites];
        let mut boundary_edges = 0usize;
        for i in 0..n_sites {
            q.set(i, i, beta * (1.0 + 2.0 * m * m));
            let mut outside = 0usize;
            for &j in &neighbors[i * two_d..(i + 1) * two_d] {
                if j == OUTSIDE {
                    outside += 1;
                } else if (j as usize) < i {
                    q.set(i, j as usize, -beta * coupling);
                }
            }
            boundary_edges += outside;
            linear[i] = beta * (bc * outside as f64 * coupling + 2.0 * m * m * center);
        }
        let constant = -beta
            * (bc * bc * boundary_edges as f64 / (4.0 * d)
                + m * m * center * center * n_sites as f64);
        let factor = BandCholesky::factor(&q)?;
        let mut mean = linear.clone();
        factor.solve(&mut mean);
        Ok(GaussianModel {
            bx: *bx,
            mass: m,
            bc,
            center,
            beta,
            precision: q,
            linear,
            constant,
            neighbors,
            factor,
            mean,
        })
    }

    /// The same field at inverse temperature `beta`: `Q`, `r` and `c` are
    /// multiplied by `beta`.
    pub fn with_inverse_temperature(&self, beta: f64) -> Result<Self> {
        GaussianModel::new(&self.bx, self.mass, self.bc, self.center, beta)
    }

    pub fn box_spec(&self) -> &BoxSpec {
        &self.bx
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn boundary_value(&self) -> f64 {
        self.bc
    }

    pub fn mass_center(&self) -> f64 {
        self.center
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn precision(&self) -> &BandMatrix {
        &self.precision
    }

    pub fn linear_term(&self) -> &[f64] {
        &self.linear
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Neighbour table shared with the lattice (`2d` entries per site).
    pub fn neighbors(&self) -> &[u32] {
        &self.neighbors
    }

    /// Magnitude of the off-diagonal precision entries, `β/(2d)`.
    pub fn coupling(&self) -> f64 {
        self.beta / (2.0 * self.bx.dim() as f64)
    }

    /// Diagonal precision entry, identical at every site.
    pub fn site_precision(&self) -> f64 {
        self.beta * (1.0 + 2.0 * self.mass * self.mass)
    }

    pub fn log_det_precision(&self) -> f64 {
        self.factor.log_det()
    }

    /// Column `j` of `Q⁻¹` by one banded solve.
    pub fn covariance_column(&self, j: SiteIndex) -> Vec<f64> {
        let mut e = vec![0.0; self.bx.sites()];
        e[j] = 1.0;
        self.factor.solve(&mut e);
        e
    }

    /// Diagonal of `Q⁻¹` by selected inversion of the banded factor.
    pub fn variances(&self) -> Vec<f64> {
        self.factor.selected_inverse().diagonal()
    }

    /// Conditional law of `φ_i` given all other sites: `(mean, variance)`.
    pub fn conditional(&self, i: SiteIndex, field: &[f64]) -> (f64, f64) {
        let two_d = 2 * self.bx.dim();
        let qii = self.site_precision();
        let mut s = self.linear[i];
        let c = self.coupling();
        for &j in &self.neighbors[i * two_d..(i + 1) * two_d] {
            if j != OUTSIDE {
                s += c * field[j as usize];
            }
        }
        (s / qii, 1.0 / qii)
    }

    /// ln of the unnormalised Gaussian integral ∫ exp(−½φᵀQφ + rᵀφ + c) dφ.
    fn log_integral(&self) -> f64 {
        let n = self.bx.sites() as f64;
        let quad: f64 = self.linear.iter().zip(&self.mean).map(|(r, m)| r * m).sum();
        0.5 * n * (2.0 * PI).ln() - 0.5 * self.log_det_precision() + 0.5 * quad + self.constant
    }
}

/// Exact means, marginal variances and the relative log-normaliser.
pub fn marginal_summary(model: &GaussianModel) -> Result<GaussianSummary> {
    Ok(GaussianSummary {
        mean: model.mean.clone(),
        variance: model.variances(),
        log_partition: log_partition(model)?,
    })
}

/// ln(Z_model / Z_ref) where the reference is the massless, zero-boundary
/// field at β = 1 on the same box.
pub fn log_partition(model: &GaussianModel) -> Result<f64> {
    let reference = build_model(&model.bx, 0.0, 0.0, 0.0)?;
    Ok(model.log_integral() - reference.log_integral())
}

/// φ = μ + L⁻ᵀ z with z standard normal, so Cov φ = (L Lᵀ)⁻¹ = Q⁻¹.
pub fn sample_exact<R: Rng + ?Sized>(model: &GaussianModel, rng: &mut R) -> FieldConfig {
    let mut z: Vec<f64> = (0..model.bx.sites())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    model.factor.solve_upper(&mut z);
    for (v, m) in z.iter_mut().zip(&model.mean) {
        *v += m;
    }
    FieldConfig {
        bx: model.bx,
        values: z,
    }
}

/// P(φ + s ∈ [−a, a]) for φ ~ N(mean, variance).
pub fn window_probability(mean: f64, variance: f64, a: f64, s: f64) -> f64 {
    let sd = variance.sqrt();
    normal::interval((-a - s - mean) / sd, (a - s - mean) / sd)
}

/// Lower bound on the loss of window mass when a field centred at `a` is
/// shifted up by `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapSlope {
    /// `C₁`: gap(s) ≥ C₁·s on `(0, s_max]`.
    pub c1: f64,
    pub s_max: f64,
    /// Where the minimum of gap(s)/s was found (0 means the s→0 limit).
    pub argmin: f64,
    /// The s→0 limit, pdf(0) − pdf(−2a) for the centred variable.
    pub slope_at_zero: f64,
}

/// `overlap_slope_on` with `s_max = min(a, σ)/4`.
pub fn overlap_derivative(variance: f64, a: f64) -> Result<OverlapSlope> {
    let s_max = a.min(variance.sqrt()) / 4.0;
    overlap_slope_on(variance, a, s_max)
}

/// Minimises gap(s)/s over `(0, s_max]`, where
/// gap(s) = P(φ ∈ [−a, a]) − P(φ + s ∈ [−a, a]) and φ ~ N(a, variance).
/// A 400-point grid locates the minimum and golden-section search refines
/// it.
pub fn overlap_slope_on(variance: f64, a: f64, s_max: f64) -> Result<OverlapSlope> {
    if !(variance > 0.0) || !(a > 0.0) || !(s_max > 0.0) {
        return Err(Error::InvalidParameter(
            "overlap slope needs variance > 0, a > 0, s_max > 0".into(),
        ));
    }
    let base = window_probability(a, variance, a, 0.0);
    let ratio = |s: f64| (base - window_probability(a, variance, a, s)) / s;
    let slope_at_zero =
        normal::pdf_with(0.0, 0.0, variance) - normal::pdf_with(-2.0 * a, 0.0, variance);

    const GRID: usize = 400;
    let mut best = (slope_at_zero, 0.0);
    let mut best_k = 0usize;
    for k in 1..=GRID {
        let s = s_max * k as f64 / GRID as f64;
        let r = ratio(s);
        if r < best.0 {
            best = (r, s);
            best_k = k;
        }
    }
    if best_k > 0 && best_k < GRID {
        let h = s_max / GRID as f64;
        let (mut lo, mut hi) = (best.1 - h, best.1 + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if ratio(x1) < ratio(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        let s = 0.5 * (lo + hi);
        let r = ratio(s);
        if r < best.0 {
            best = (r, s);
        }
    }
    Ok(OverlapSlope {
        c1: best.0,
        s_max,
        argmin: best.1,
        slope_at_zero,
    })
}

impl FieldConfig {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coords(&self, i: SiteIndex) -> Vec<usize> {
        self.bx.coords(i)
    }
}

/// Inner boundary of the model's box, re-exported for the boundary term.
pub fn boundary_sites(model: &GaussianModel) -> Vec<SiteIndex> {
    lattice::inner_boundary(&model.bx)
}
