//! Configurations of the pinned field from the single-site heat bath.

use gffpin::lattice::{sample_environment, BoxSpec};
use gffpin::pinning::{sweep_order, HeatBath, PinningModel};
use gffpin::rng;

fn main() -> gffpin::Result<()> {
    let bx = BoxSpec::new(2, 12)?;
    let a = 1.0;
    for (b, h) in [(0.0, -1.0), (0.0, 0.0), (0.0, 1.0), (1.5, 0.0)] {
        let model = PinningModel::free(sample_environment(&bx, b, h, 5), a)?;
        let stream = rng::stream(5, &[rng::domain::SAMPLE]);
        let mut chain = HeatBath::new(&model, 1.0, sweep_order(5, bx.sites()), stream);
        for _ in 0..200 {
            chain.sweep()?;
        }
        let (mut inside, mut rows) = (0usize, 0usize);
        for _ in 0..500 {
            chain.sweep()?;
            inside += chain.field().iter().filter(|p| p.abs() <= a).count();
            rows += bx.sites();
        }
        let c = chain.field()[bx.center()];
        println!(
            "b={b} h={h:+}: window fraction {:.4}, last centre height {c:+.4}",
            inside as f64 / rows as f64
        );
    }
    Ok(())
}
