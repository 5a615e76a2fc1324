//! Two relativistic particles: length scaling and critical-charge bounds.

use coulomb_lab::instability::{correlated_family, critical_charge_upper_bound, relativistic_two_body_energy, TwoBodyTrialState};

fn main() -> coulomb_lab::Result<()> {
    let t = TwoBodyTrialState::correlated(0.7, 1.3)?;
    for ell in [1e-2, 1.0, 1e2] {
        let e = relativistic_two_body_energy(&t, 1.5, 1.0, ell)?;
        println!("ell {ell:6}: E = {:.10}", e.total);
    }
    let families = [
        ("separable", vec![TwoBodyTrialState::separable(1.0)?]),
        ("11 correlated", correlated_family(0.5, 5.0, 11)?),
        ("41 correlated", correlated_family(0.5, 50.0, 41)?),
    ];
    for (name, f) in &families {
        let b = critical_charge_upper_bound(f, 1e-8)?;
        println!("{name:>14}: q_c <= {:.8}", b.q_upper);
    }
    Ok(())
}
