//! Displaced squeezed states in a truncated Fock space.

use coulomb_lab::bogoliubov::{fock_oracle, PairExcitationSpec};

fn main() -> coulomb_lab::Result<()> {
    let spec = PairExcitationSpec::new(vec![0.3, 0.45], 2.0, vec![0.6, 0.8])?;
    for truncation in [25, 30, 40] {
        let m = fock_oracle(&spec, truncation)?;
        println!(
            "truncation {truncation:2}: norm deficit {:.2e}, worst moment error {:.2e}, <N> {:.10} (expected {:.10})",
            m.norm_deficit,
            m.max_error(),
            m.number_mean,
            m.number_mean_expected
        );
    }
    Ok(())
}
