//! Fermions with a fixed attraction inside a ball: kinetic N^(5/3) against
//! the N² attraction.

use coulomb_lab::cli::collapse_counts;
use coulomb_lab::instability::attractive_collapse_experiment;

fn main() -> coulomb_lab::Result<()> {
    let r = attractive_collapse_experiment(&collapse_counts(), 1.0, 1.0, 3)?;
    for row in &r.rows {
        println!("N {:>7}: kinetic {:.6e} energy estimate {:.6e}", row.n, row.kinetic, row.estimate);
    }
    println!("kinetic exponent {:.4} (target {:.4}), onset {:?}", r.kinetic_exponent, r.target_exponent, r.collapse_onset);
    Ok(())
}
