//! Energy per volume of free fermions in growing cubes.

use coulomb_lab::thermo::{free_fermion_density, free_fermion_density_quadrature, thermodynamic_extrapolation, DomainDescriptor, FreeFermionBoxMap};

fn main() -> coulomb_lab::Result<()> {
    let ls: Vec<f64> = (0..8).map(|i| 20.0 + 10.0 * i as f64).collect();
    for mu in [-0.5, -1.0, -2.0] {
        let map = FreeFermionBoxMap { mu, m: 1.0 };
        let family = |l: f64| Ok(vec![DomainDescriptor::cube(l, [0.0; 3])?]);
        let r = thermodynamic_extrapolation(&map, &family, &ls)?;
        println!(
            "mu {mu:5}: extrapolated {:.8} +- {:.1e}, closed form {:.8}, quadrature {:.8}",
            r.e_inf,
            r.e_inf_std_error,
            free_fermion_density(mu, 1.0)?,
            free_fermion_density_quadrature(mu, 1.0)?
        );
    }
    Ok(())
}
