//! Disorder-averaged quenched free energy against the annealed one along a
//! line of `h`, with the annealed critical point marked.

use gffpin::bounds::annealed_critical_h;
use gffpin::lattice::BoxSpec;
use gffpin::pinning::{disorder_average, estimate_annealed, EstimatorChoice, EstimatorConfig};

fn main() -> gffpin::Result<()> {
    let bx = BoxSpec::new(2, 6)?;
    let b = 1.0;
    let config = EstimatorConfig {
        choice: EstimatorChoice::Is,
        samples: 20_000,
        ..Default::default()
    };
    println!(
        "b={b}, annealed critical h = {:.5}",
        annealed_critical_h(b)?
    );
    println!("h,quenched,stderr,between_env_sd,annealed,annealed_stderr");
    for i in 0..9 {
        let h = -0.8 + 0.2 * i as f64;
        let q = disorder_average(&bx, b, h, 1.0, 8, &config, 100 + i)?;
        let a = estimate_annealed(&bx, b, h, 1.0, 20_000, 100 + i)?;
        println!(
            "{h:.2},{:.5},{:.5},{:.5},{:.5},{:.5}",
            q.mean, q.stderr, q.between_env_sd, a.value, a.stderr
        );
    }
    Ok(())
}
