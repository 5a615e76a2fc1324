//! The constant I0 by its two routes, and the pointwise Bogoliubov minimum.

use coulomb_lab::bogoliubov::semiclassical::dispersion_min_scan;
use coulomb_lab::bogoliubov::{bogoliubov_dispersion_min, compute_i0, semiclassical_p_integral};

fn main() -> coulomb_lab::Result<()> {
    let i0 = compute_i0()?;
    println!("I0 quadrature  = {:.15}", i0.quadrature);
    println!("I0 closed form = {:.15}  (ratio {:.12})", i0.closed_form, i0.closed_form / i0.quadrature);

    for (tau, g) in [(0.1, 1.0), (1.0, 1.0), (10.0, 0.5)] {
        let (f, e) = bogoliubov_dispersion_min(tau, g)?;
        let (fs, es) = dispersion_min_scan(tau, g, 1e4)?;
        println!("tau {tau:5} g {g:4}: f* {f:.10} e {e:.14} | scan f {fs:.10} e {es:.14}");
    }

    for a in [0.1, 10.0, 1000.0] {
        let v = semiclassical_p_integral(a, 1.0)?;
        println!("N rho = {a:7}: integral / (N rho)^(5/4) = {:.14}", v / f64::powf(a, 1.25));
    }
    Ok(())
}
