use super::{potential_energy, EstimatorKind, FreeEnergyEstimate, PinningModel, FLAG_UNRELIABLE};
use crate::error::{Error, Result};
use crate::gaussfield::sample_exact;
use crate::rng;
use rayon::prelude::*;

const CHUNK: usize = 4096;

/// Relative standard error of the ratio above which a result is flagged.
pub const UNRELIABLE_RELATIVE_STDERR: f64 = 0.5;

/// `ln E[e^U]` from `samples` exact free-field draws, per site.
///
/// Draws come in chunks of 4096, chunk `k` from the stream
/// `(seed, IMPORTANCE, k)`, so the result does not depend on the thread
/// count. The mean weight is accumulated relative to the largest `U`; the
/// standard error is the delta-method value `sd(w) / (√N · mean(w))` divided
/// by the number of sites.
pub fn estimate_quenched_is(
    model: &PinningModel,
    samples: usize,
    seed: u64,
) -> Result<FreeEnergyEstimate> {
    if samples < 100 {
        return Err(Error::InvalidParameter(format!(
            "importance sampling needs N ≥ 100, got {samples}"
        )));
    }
    let chunks = samples.div_ceil(CHUNK);
    let energies: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut s = rng::stream(seed, &[rng::domain::IMPORTANCE, k as u64]);
            let count = CHUNK.min(samples - k * CHUNK);
            (0..count)
                .map(|_| potential_energy(model, &sample_exact(model.base(), &mut s).values))
                .collect::<Vec<_>>()
        })
        .collect();

    let top = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let nf = samples as f64;
    let w: Vec<f64> = energies.iter().map(|u| (u - top).exp()).collect();
    let mean = w.iter().sum::<f64>() / nf;
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::Numerical(format!(
            "importance weights average to {mean}"
        )));
    }
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let rel = (var / nf).sqrt() / mean;
    let sites = model.sites() as f64;
    let mut flags = Vec::new();
    if rel > UNRELIABLE_RELATIVE_STDERR {
        flags.push(FLAG_UNRELIABLE.to_string());
    }
    Ok(FreeEnergyEstimate {
        value: (top + mean.ln()) / sites,
        stderr: rel / sites,
        n_samples: samples as u64,
        estimator: EstimatorKind::Importance,
        seed,
        flags,
        settings: format!("samples={samples}"),
    })
}
