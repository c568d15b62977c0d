//! Boxes, edges and reproducible ±1 environments.

use gffpin::lattice::{
    enumerate_edges, inner_boundary, sample_environment, sign_at, BoxSpec, Environment,
};

fn main() -> gffpin::Result<()> {
    for (d, n) in [(2, 4), (3, 3)] {
        let bx = BoxSpec::new(d, n)?;
        let edges = enumerate_edges(&bx);
        println!(
            "d={d} n={n}: {} sites, {} interior edges, {} boundary edges, {} inner-boundary sites",
            bx.sites(),
            edges.interior.len(),
            edges.boundary.len(),
            inner_boundary(&bx).len()
        );
    }

    let bx = BoxSpec::new(2, 6)?;
    let env = sample_environment(&bx, 0.8, -0.1, 2024);
    for row in env.signs.chunks(bx.side()) {
        let line: String = row.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect();
        println!("  {line}");
    }
    let mean: f64 = env.potentials().iter().sum::<f64>() / bx.sites() as f64;
    println!("mean potential {mean:.4} (h = {})", env.h);

    // Any single sign can be regenerated without the rest of the box.
    assert!((0..bx.sites()).all(|i| env.signs[i] == sign_at(2024, i)));

    let json = env.to_json()?;
    assert_eq!(Environment::from_json(&json)?, env);
    println!("{json}");
    Ok(())
}
