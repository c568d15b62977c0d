//! Exact moments, log-partition and samples of the lattice field.

use gffpin::gaussfield::{build_model, marginal_summary, sample_exact, window_probability};
use gffpin::lattice::BoxSpec;
use gffpin::walk::green_infinite;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> gffpin::Result<()> {
    let g3 = green_infinite(3)?;
    println!("d=3 centre variance against the infinite-volume value {g3:.6}");
    for n in [4, 8, 16] {
        let bx = BoxSpec::new(3, n)?;
        let model = build_model(&bx, 0.0, 0.0, 0.0)?;
        let v = model.variances()[bx.center()];
        println!("  n={n:>2}  var={v:.6}  gap={:.2e}", g3 - v);
    }

    let bx = BoxSpec::new(2, 16)?;
    println!("d=2, n=16: effect of the mass on the centre variance and ln Z");
    for m in [0.0, 0.01, 0.1, 0.5] {
        let s = marginal_summary(&build_model(&bx, m, 0.0, 0.0)?)?;
        println!(
            "  m={m:<5} var={:.5}  lnZ/N={:+.6}",
            s.variance[bx.center()],
            s.log_partition / bx.sites() as f64
        );
    }

    let model = build_model(&bx, 0.0, 1.0, 0.0)?;
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let phi = sample_exact(&model, &mut rng);
    let c = bx.center();
    println!(
        "boundary value 1: mean at centre {:.4}, one draw {:.4}",
        model.mean()[c],
        phi.values[c]
    );

    let var = model.variances()[c];
    for s in [0.0, 0.5, 1.0, 2.0] {
        println!(
            "  P(phi_c + {s} in [-1, 1]) = {:.5}",
            window_probability(model.mean()[c], var, 1.0, s)
        );
    }
    Ok(())
}
