//! Smeared-charge lower bound on random neutral configurations.

use coulomb_lab::coulomb::{newton_smeared_potential, onsager_lower_bound, onsager_sweep, ChargeConfiguration};
use coulomb_lab::rng::{stream, DEFAULT_SEED};

fn main() -> coulomb_lab::Result<()> {
    for r in [0.0, 0.25, 0.5, 1.0, 2.0] {
        println!("ball potential, delta = 1, r = {r}: {:.6}", newton_smeared_potential(1.0, r)?);
    }

    let c = ChargeConfiguration::random_neutral(&mut stream(DEFAULT_SEED, 0), 12)?;
    let report = onsager_lower_bound(&c)?;
    for (name, value) in &report.terms {
        println!("{name:>28}: {value:.10}");
    }
    println!("{:>28}: {:.10}", "bound", report.total);

    let sweep = onsager_sweep(2000, DEFAULT_SEED, 2, 40)?;
    println!(
        "sweep of {}: {} violations, smallest relative gap {:.4}, opposite-pair deviation {:.2e}",
        sweep.samples, sweep.violations, sweep.min_relative_gap, sweep.max_opposite_deviation
    );
    Ok(())
}
