//! Dirichlet cube kinetic sums against the box bound, and the grand-canonical
//! stability constant by its two minimization routes.

use coulomb_lab::cli::stability_grid;
use coulomb_lab::lieb_thirring::{box_kinetic_lower_bound, dirichlet_cube_kinetic_sum, log_log_slope, stability_constant_descent, stability_constant_scan, LtParameters, StabilityObjective};

fn main() -> coulomb_lab::Result<()> {
    let p = LtParameters::semiclassical(1.0, 1)?;
    println!("C_LT = {:.10}", p.c_lt);
    let ns = [1000usize, 3000, 10_000, 30_000, 100_000];
    let mut sums = Vec::new();
    for &n in &ns {
        let sum = dirichlet_cube_kinetic_sum(n, 1.0, 1.0)?;
        let bound = box_kinetic_lower_bound(n as u64, 1.0, &p)?;
        println!("N {n:>6}: sum {sum:.6e} bound {bound:.6e} ratio {:.4}", sum / bound);
        sums.push(sum);
    }
    let (slope, se) = log_log_slope(&ns.map(|n| n as f64), &sums);
    println!("kinetic exponent {slope:.4} +- {se:.4}");

    for spec in stability_grid().into_iter().take(4) {
        let obj = StabilityObjective::new(spec, &p, &p)?;
        let a = stability_constant_scan(&obj)?;
        let b = stability_constant_descent(&obj)?;
        println!("mu {:4} m+ {:6} q+ {}: scan {:.12e} descent {:.12e}", spec.mu, spec.m_plus, spec.q_plus, a.value, b.value);
    }
    Ok(())
}
