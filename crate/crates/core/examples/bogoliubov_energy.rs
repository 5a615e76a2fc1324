//! Energy of a condensate with pair excitations in a Gaussian basis,
//! with the Coulomb term evaluated by two routes.

use coulomb_lab::bogoliubov::{coulomb_expectation_finite_basis, coulomb_expectation_spectral, total_energy_expectation, CondensateProfile, RadialBasis};
use coulomb_lab::numerics::PsdMatrix;

fn main() -> coulomb_lab::Result<()> {
    let xi0 = CondensateProfile::gaussian(1.0, 50.0, 3000)?;
    let basis = RadialBasis::gaussians(&[0.5, 1.0, 2.0])?;
    let gamma = PsdMatrix::from_diagonal(&[0.2, 0.05, 0.01])?;
    println!("Coulomb, finite basis: {:.12}", coulomb_expectation_finite_basis(&xi0, &gamma, &basis)?);
    println!("Coulomb, spectral:     {:.12}", coulomb_expectation_spectral(&xi0, &gamma, &basis)?);
    let r = total_energy_expectation(&xi0, &gamma, &basis)?;
    for (name, value) in &r.terms {
        println!("{name:>20}: {value:.10}");
    }
    println!("{:>20}: {:.10}", "total", r.total);
    Ok(())
}
