use super::{EstimatorKind, FreeEnergyEstimate, PinningModel};
use crate::error::{Error, Result};
use crate::gaussfield::band::{BandCholesky, BandMatrix};
use crate::normal;
use crate::quad::gauss_legendre_on;
use crate::rng;
use rand::Rng;
use rayon::prelude::*;

pub const ORACLE_MAX_SITES: usize = 12;

/// Largest subset handled by tensor quadrature; larger ones use QMC.
const TENSOR_MAX_DIM: usize = 6;
const QMC_SHIFTS: usize = 16;
const QMC_POINTS: usize = 4096;
const KRONECKER_PRIMES: [f64; 11] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    /// Z^e / Z^0.
    pub ratio: f64,
    /// Accumulated error estimate of the orthant integrals, `Σ |w_S|·err_S`.
    pub abs_error: f64,
    pub subsets: usize,
}

/// P(lower ≤ X ≤ upper) for X ~ N(0, cov), `cov` row-major `k×k`, with an
/// error estimate.
///
/// Genz's separation of variables maps the probability to an integral over
/// the unit cube of dimension `k − 1`. Variables are ordered by increasing
/// marginal probability. Up to `k = 6` the integral is a tensor
/// Gauss–Legendre rule and the error is the change against a coarser rule;
/// beyond that it is a randomly shifted Kronecker lattice rule (16 shifts of
/// 4096 points, periodised) and the error is the standard error over shifts.
pub fn box_probability(
    cov: &[f64],
    lower: &[f64],
    upper: &[f64],
    shift_seed: u64,
) -> Result<(f64, f64)> {
    let k = lower.len();
    if upper.len() != k || cov.len() != k * k {
        return Err(Error::InvalidParameter(
            "box_probability: shape mismatch".into(),
        ));
    }
    if k == 0 {
        return Ok((1.0, 0.0));
    }
    let sd: Vec<f64> = (0..k).map(|i| cov[i * k + i].sqrt()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    let marginal: Vec<f64> = (0..k)
        .map(|i| normal::interval(lower[i] / sd[i], upper[i] / sd[i]))
        .collect();
    if k == 1 {
        return Ok((marginal[0], 0.0));
    }
    order.sort_by(|&x, &y| marginal[x].total_cmp(&marginal[y]).then(x.cmp(&y)));

    let mut sigma = BandMatrix::zeros(k, k - 1);
    for i in 0..k {
        for j in 0..=i {
            sigma.set(i, j, cov[order[i] * k + order[j]]);
        }
    }
    let chol = BandCholesky::factor(&sigma)?;
    let sov = Sov {
        l: (0..k)
            .map(|i| (0..=i).map(|j| chol.entry(i, j)).collect())
            .collect(),
        lo: order.iter().map(|&i| lower[i]).collect(),
        hi: order.iter().map(|&i| upper[i]).collect(),
    };

    if k <= TENSOR_MAX_DIM {
        let (fine, coarse) = match k - 1 {
            1 | 2 => (32, 24),
            3 => (24, 18),
            4 => (16, 12),
            _ => (12, 9),
        };
        let p = sov.tensor(fine);
        let q = sov.tensor(coarse);
        Ok((p, (p - q).abs()))
    } else {
        Ok(sov.lattice(shift_seed))
    }
}

/// ψ(t) = t³(10 − 15t + 6t²): flattens the logarithmic endpoint behaviour of
/// Φ⁻¹ before the product rule.
fn smooth(t: f64) -> f64 {
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

fn smooth_derivative(t: f64) -> f64 {
    30.0 * t * t * (1.0 - t) * (1.0 - t)
}

struct Sov {
    /// Rows of the lower Cholesky factor.
    l: Vec<Vec<f64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Sov {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    /// (d_i, e_i) for variable `i` given the earlier y's.
    fn limits(&self, i: usize, y: &[f64]) -> (f64, f64) {
        let row = &self.l[i];
        let t: f64 = row[..i].iter().zip(y).map(|(a, b)| a * b).sum();
        let lii = row[i];
        (
            normal::cdf((self.lo[i] - t) / lii),
            normal::cdf((self.hi[i] - t) / lii),
        )
    }

    fn draw(d: f64, e: f64, w: f64) -> f64 {
        let p = (d + w * (e - d)).clamp(1e-300, 1.0 - 1e-16);
        normal::quantile(p)
    }

    /// Integrand at a point of the unit cube.
    fn integrand(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let (mut d, mut e) = self.limits(0, y);
        let mut f = e - d;
        for i in 1..self.dim() {
            if f == 0.0 {
                return 0.0;
            }
            y[i - 1] = Sov::draw(d, e, w[i - 1]);
            (d, e) = self.limits(i, y);
            f *= e - d;
        }
        f
    }

    fn tensor(&self, q: usize) -> f64 {
        let (t, tw) = gauss_legendre_on(q, 0.0, 1.0);
        let nodes: Vec<f64> = t.iter().map(|&t| smooth(t)).collect();
        let weights: Vec<f64> = t
            .iter()
            .zip(&tw)
            .map(|(&t, &w)| w * smooth_derivative(t))
            .collect();
        let mut y = vec![0.0; self.dim()];
        let (d, e) = self.limits(0, &y);
        self.descend(0, d, e, e - d, &nodes, &weights, &mut y)
    }

    /// Depth-first product rule sharing prefixes: at depth `i` the limits of
    /// variable `i` are known and each node fixes `y_i`.
    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        i: usize,
        d: f64,
        e: f64,
        f: f64,
        nodes: &[f64],
        weights: &[f64],
        y: &mut [f64],
    ) -> f64 {
        if i + 1 == self.dim() {
            return f;
        }
        if f == 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        for (w, wt) in nodes.iter().zip(weights) {
            y[i] = Sov::draw(d, e, *w);
            let (d2, e2) = self.limits(i + 1, y);
            total += wt * self.descend(i + 1, d2, e2, f * (e2 - d2), nodes, weights, y);
        }
        total
    }

    fn lattice(&self, shift_seed: u64) -> (f64, f64) {
        let m = self.dim() - 1;
        let alpha: Vec<f64> = KRONECKER_PRIMES[..m]
            .iter()
            .map(|p| p.sqrt().fract())
            .collect();
        let mut s = rng::stream(shift_seed, &[rng::domain::ORACLE]);
        let mut y = vec![0.0; self.dim()];
        let mut w = vec![0.0; m];
        let means: Vec<f64> = (0..QMC_SHIFTS)
            .map(|_| {
                let shift: Vec<f64> = (0..m).map(|_| s.random::<f64>()).collect();
                let mut acc = 0.0;
                for i in 1..=QMC_POINTS {
                    for j in 0..m {
                        let u = (shift[j] + i as f64 * alpha[j]).fract();
                        w[j] = 1.0 - (2.0 * u - 1.0).abs();
                    }
                    acc += self.integrand(&w, &mut y);
                }
                acc / QMC_POINTS as f64
            })
            .collect();
        let n = QMC_SHIFTS as f64;
        let mean = means.iter().sum::<f64>() / n;
        let var = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }
}

/// `Z^e / Z^0` by inclusion–exclusion:
///
/// ```text
/// E[Π_x (1 + (e^{v_x} − 1) 1_x)] = Σ_{S} Π_{x∈S} (e^{v_x} − 1) · P(φ_x ∈ [−a, a] ∀x ∈ S)
/// ```
///
/// Sites with `v_x = 0` drop out. At most [`ORACLE_MAX_SITES`] sites.
pub fn oracle_z_ratio(model: &PinningModel) -> Result<OracleResult> {
    let n = model.sites();
    if n > ORACLE_MAX_SITES {
        return Err(Error::BoxTooLarge {
            sites: n,
            max: ORACLE_MAX_SITES,
        });
    }
    let base = model.base();
    let a = model.half_width();
    let mean = base.mean();
    let cov: Vec<Vec<f64>> = (0..n).map(|j| base.covariance_column(j)).collect();
    let active: Vec<usize> = (0..n).filter(|&i| model.potentials()[i] != 0.0).collect();
    let factor: Vec<f64> = active
        .iter()
        .map(|&i| model.potentials()[i].exp_m1())
        .collect();
    let subsets = 1usize << active.len();

    let terms: Vec<Result<(f64, f64)>> = (0..subsets)
        .into_par_iter()
        .map(|mask| {
            let members: Vec<usize> = (0..active.len()).filter(|b| mask >> b & 1 == 1).collect();
            let weight: f64 = members.iter().map(|&b| factor[b]).product();
            let sites: Vec<usize> = members.iter().map(|&b| active[b]).collect();
            let k = sites.len();
            let sub: Vec<f64> = (0..k * k)
                .map(|t| cov[sites[t / k]][sites[t % k]])
                .collect();
            let lo: Vec<f64> = sites.iter().map(|&i| -a - mean[i]).collect();
            let hi: Vec<f64> = sites.iter().map(|&i| a - mean[i]).collect();
            let (p, err) = box_probability(&sub, &lo, &hi, mask as u64)?;
            Ok((weight * p, weight.abs() * err))
        })
        .collect();
    let mut ratio = 0.0;
    let mut abs_error = 0.0;
    for t in terms {
        let (v, e) = t?;
        ratio += v;
        abs_error += e;
    }
    Ok(OracleResult {
        ratio,
        abs_error,
        subsets,
    })
}

/// Oracle ratio as a per-site free energy; `stderr` carries the propagated
/// integration error.
pub fn oracle_estimate(model: &PinningModel) -> Result<FreeEnergyEstimate> {
    let r = oracle_z_ratio(model)?;
    if !(r.ratio > 0.0) {
        return Err(Error::Numerical(format!(
            "oracle ratio {} is not positive (error {})",
            r.ratio, r.abs_error
        )));
    }
    let sites = model.sites() as f64;
    Ok(FreeEnergyEstimate {
        value: r.ratio.ln() / sites,
        stderr: r.abs_error / r.ratio / sites,
        n_samples: r.subsets as u64,
        estimator: EstimatorKind::Oracle,
        seed: 0,
        flags: Vec::new(),
        settings: format!("subsets={} abs_error={:e}", r.subsets, r.abs_error),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{sample_environment, BoxSpec, Environment};
    use rand::SeedableRng;

    #[test]
    fn trivial_ratios() {
        let bx = BoxSpec::new(2, 3).unwrap();
        let m = PinningModel::homogeneous(&bx, 0.0, 1.0).unwrap();
        let r = oracle_z_ratio(&m).unwrap();
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.subsets, 1);

        let one = PinningModel::homogeneous(&BoxSpec::new(2, 1).unwrap(), 0.5, 1.0).unwrap();
        let exact = 1.0 + 0.5f64.exp_m1() * normal::interval(-1.0, 1.0);
        assert!((oracle_z_ratio(&one).unwrap().ratio - exact).abs() < 1e-14);
        assert!((exact - 1.44286).abs() < 5e-5);
    }

    #[test]
    fn independent_coordinates_factorise() {
        let cov = [1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.5];
        let lo = [-1.0, -0.5, -2.0];
        let hi = [0.5, 1.5, 0.1];
        let (p, err) = box_probability(&cov, &lo, &hi, 0).unwrap();
        let exact: f64 = (0..3)
            .map(|i| {
                let s = cov[i * 3 + i].sqrt();
                normal::interval(lo[i] / s, hi[i] / s)
            })
            .product();
        assert!((p - exact).abs() < 1e-12 && err < 1e-10);
    }

    #[test]
    fn bivariate_orthant_closed_form() {
        // P(X>0, Y>0) = 1/4 + asin(ρ)/(2π)
        for rho in [-0.6f64, 0.0, 0.3, 0.9] {
            let cov = [1.0, rho, rho, 1.0];
            let (p, _) =
                box_probability(&cov, &[0.0, 0.0], &[f64::INFINITY, f64::INFINITY], 0).unwrap();
            let exact = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
            assert!((p - exact).abs() < 1e-6, "ρ = {rho}: {p} vs {exact}");
        }
    }

    #[test]
    fn equicorrelated_orthant_closed_forms() {
        // Equicorrelation 1/2: P(all > 0) = 1/(k+1).
        for k in [3usize, 5, 8] {
            let cov: Vec<f64> = (0..k * k)
                .map(|t| if t / k == t % k { 1.0 } else { 0.5 })
                .collect();
            let (p, err) =
                box_probability(&cov, &vec![0.0; k], &vec![f64::INFINITY; k], 3).unwrap();
            let exact = 1.0 / (k as f64 + 1.0);
            assert!((p - exact).abs() < 1e-4 * exact, "k = {k}: {p} vs {exact}");
            assert!(err < 2e-4 * exact, "k = {k}: err {err}");
        }
    }

    #[test]
    fn two_by_two_against_monte_carlo() {
        let bx = BoxSpec::new(2, 2).unwrap();
        let env = Environment::from_signs(&bx, 5.0, -5.0, vec![-1, 1, 1, 1]).unwrap();
        let m = PinningModel::free(env, 1.0).unwrap();
        assert_eq!(m.potentials(), &[-10.0, 0.0, 0.0, 0.0]);
        let oracle = oracle_z_ratio(&m).unwrap();
        // Only site 0 matters: ratio = 1 + (e^{-10} − 1) P(|φ₀| ≤ 1).
        let var = m.base().variances()[0];
        let exact = 1.0 + (-10f64).exp_m1() * normal::interval(-1.0 / var.sqrt(), 1.0 / var.sqrt());
        assert!((oracle.ratio - exact).abs() < 1e-12);

        let env = sample_environment(&bx, 1.0, -0.2, 7);
        let m = PinningModel::free(env, 1.0).unwrap();
        let oracle = oracle_z_ratio(&m).unwrap().ratio;
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let w: Vec<f64> = (0..n)
            .map(|_| {
                let phi = crate::gaussfield::sample_exact(m.base(), &mut r);
                super::super::potential_energy(&m, &phi.values).exp()
            })
            .collect();
        let mean = w.iter().sum::<f64>() / n as f64;
        let sd = (w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(
            (mean - oracle).abs() < 4.0 * sd / (n as f64).sqrt(),
            "{mean} vs {oracle}"
        );
    }

    #[test]
    fn monotone_in_h() {
        let bx = BoxSpec::new(2, 2).unwrap();
        let signs = sample_environment(&bx, 1.0, 0.0, 3).signs;
        let mut last = f64::NEG_INFINITY;
        for h in [-0.6, -0.3, 0.0, 0.3, 0.6] {
            let env = Environment::from_signs(&bx, 1.0, h, signs.clone()).unwrap();
            let r = oracle_z_ratio(&PinningModel::free(env, 1.0).unwrap())
                .unwrap()
                .ratio;
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn too_large_box() {
        let m = PinningModel::homogeneous(&BoxSpec::new(2, 4).unwrap(), 0.1, 1.0).unwrap();
        assert!(matches!(
            oracle_z_ratio(&m),
            Err(Error::BoxTooLarge { sites: 16, max: 12 })
        ));
    }
}
