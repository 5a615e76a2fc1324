//! Minimizer of the Dyson functional and the rescaled upper bound.

use coulomb_lab::bogoliubov::dyson::gaussian_initial_profile;
use coulomb_lab::bogoliubov::{compute_i0, dyson_pipeline, dyson_variational_solve, DysonGrid, SolverOptions};

fn main() -> coulomb_lab::Result<()> {
    let i0 = compute_i0()?.quadrature;
    let s = dyson_variational_solve(DysonGrid::default(), i0, &gaussian_initial_profile(4.0)?, SolverOptions::default())?;
    println!("E* = {:.12}  K = {:.10}  P = {:.10}", s.energy, s.kinetic, s.potential);
    println!("virial residual {:.2e}, {} iterations, rms radius {:.4}", s.virial_residual, s.iterations, s.rms_radius());
    for row in dyson_pipeline(&s, &[10.0, 1e3, 1e6])?.rows {
        println!("N {:>9}: E_upper {:.10e}  E/N^(7/5) {:.12}", row.n, row.e_upper, row.ratio);
    }
    Ok(())
}
