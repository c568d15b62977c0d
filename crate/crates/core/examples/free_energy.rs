//! One environment, three estimators: importance sampling, thermodynamic
//! integration and the exact inclusion-exclusion oracle.

use gffpin::lattice::{sample_environment, BoxSpec};
use gffpin::pinning::{
    estimate_quenched_is, estimate_quenched_ti, oracle_estimate, select_estimator, EstimatorChoice,
    PinningModel, TiConfig,
};

fn main() -> gffpin::Result<()> {
    let bx = BoxSpec::new(2, 3)?;
    for (b, h) in [(0.5, 0.2), (1.0, -0.2), (2.0, 0.0)] {
        let model = PinningModel::free(sample_environment(&bx, b, h, 11), 1.0)?;
        let is = estimate_quenched_is(&model, 50_000, 1)?;
        let ti = estimate_quenched_ti(&model, &TiConfig::default(), 1)?;
        let exact = oracle_estimate(&model)?;
        println!(
            "b={b} h={h:+}: IS {:.5}±{:.5}  TI {:.5}±{:.5}  oracle {:.5}±{:.1e}  (auto picks {:?})",
            is.value,
            is.stderr,
            ti.value,
            ti.stderr,
            exact.value,
            exact.stderr,
            select_estimator(&model, EstimatorChoice::Auto)
        );
    }
    Ok(())
}
