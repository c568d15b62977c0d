//! Random-walk return probabilities and Green functions, checked against the
//! inverse precision matrix.

use gffpin::gaussfield::build_model;
use gffpin::lattice::BoxSpec;
use gffpin::walk::{
    green_infinite, green_restricted, killed_green_infinite, return_probability, stirling_check,
    survival_for_mass, WalkKernel,
};

fn main() -> gffpin::Result<()> {
    println!("return probabilities P(X_2l = 0), d = 2 and 3");
    for l in [1, 2, 5, 10, 50] {
        println!(
            "  2l={:>3}  d2={:.6e}  d3={:.6e}",
            2 * l,
            return_probability(2, 2 * l)?,
            return_probability(3, 2 * l)?
        );
    }
    println!("d=1 Stirling ratio at l=1000: {:.6}", stirling_check(1000)?);

    println!(
        "G(0,0) for d=3..5: {:.6} {:.6} {:.6}",
        green_infinite(3)?,
        green_infinite(4)?,
        green_infinite(5)?
    );
    let rho = survival_for_mass(0.1);
    println!(
        "killed d=3 walk, m=0.1 (survival {rho:.5}): {:.6}",
        killed_green_infinite(3, rho)?
    );

    let bx = BoxSpec::new(2, 8)?;
    let m = 0.05;
    let kernel = WalkKernel::massive(&bx, m)?;
    let model = build_model(&bx, m, 0.0, 0.0)?;
    let x = bx.center();
    let column = model.covariance_column(x);
    let mut worst: f64 = 0.0;
    for (y, q) in column.iter().enumerate() {
        let g = green_restricted(&kernel, x, y)?;
        worst = worst.max((g.value - q).abs());
    }
    println!("d=2 n=8 m={m}: max |G(x, y) - Q^-1(x, y)| over y = {worst:.2e}");
    Ok(())
}
