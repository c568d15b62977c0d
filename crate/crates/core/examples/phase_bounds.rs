//! Bound constants, the annealed line and the quenched lower-bound curves in
//! the (b, h) plane.

use gffpin::bounds::{
    annealed_critical_h, boundary_d2, critical_curve_d3, estimate_constants, region_positive_d3,
    DEFAULT_EPSILON,
};

fn main() -> gffpin::Result<()> {
    let c3 = estimate_constants(3, 1.0, None)?;
    println!("d=3: C1={:.6} C2={:.6} K={:.6}", c3.c1, c3.c2, c3.k());
    let c2 = estimate_constants(2, 1.0, Some(0.01))?;
    println!(
        "d=2: C1={:.4} C2={:.4} C1~={:.4} C'={:.4}",
        c2.c1,
        c2.c2,
        c2.c1_tilde.unwrap_or(f64::NAN),
        c2.c_prime.unwrap_or(f64::NAN)
    );

    println!("b,h_annealed,h_bound_d3,closed_form_d3,h_bound_d2");
    for i in 0..10 {
        let b = 0.05 * i as f64;
        let root = critical_curve_d3(b, &c3)?;
        let d2 = boundary_d2(b, &c2, DEFAULT_EPSILON)?;
        println!(
            "{b:.2},{:.6},{:.6},{:.6},{:.3e}",
            annealed_critical_h(b)?,
            root.bisection.unwrap_or(f64::NAN),
            root.closed_form.unwrap_or(f64::NAN),
            d2.unwrap_or(f64::NAN)
        );
    }

    let (b, h) = (0.3, -0.005);
    let v = region_positive_d3(b, h, &c3, DEFAULT_EPSILON);
    println!(
        "d=3 at (b, h) = ({b}, {h}): positive={} margin={:.3e} witness s={:?}",
        v.positive, v.margin, v.witness
    );
    Ok(())
}
