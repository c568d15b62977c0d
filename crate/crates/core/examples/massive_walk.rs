//! Massive-field variance and partition-ratio series against the exact
//! log-determinant, over a small mass grid.

use gffpin::gaussfield::{build_model, log_partition};
use gffpin::lattice::BoxSpec;
use gffpin::walk::{massive_variance_bound, ratio_z_series};
use std::time::Instant;

fn main() -> gffpin::Result<()> {
    let n = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(32);
    println!("m,n,variance,ratio_to_log,zratio_series,zratio_logdet,seconds");
    for m in [1e-1, 3e-2, 1e-2, 3e-3, 1e-3] {
        let t = Instant::now();
        let v = massive_variance_bound(m, n)?;
        let series = ratio_z_series(m, n)?.value;
        let bx = BoxSpec::new(2, n)?;
        let logdet = -log_partition(&build_model(&bx, m, 0.0, 0.0)?)? / bx.sites() as f64;
        println!(
            "{m},{n},{:.8},{:.6},{:.10},{:.10},{:.2}",
            v.variance,
            v.ratio,
            series,
            logdet,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
