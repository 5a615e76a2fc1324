//! Lichnerowicz formula under grid refinement, and the diamagnetic chain.

use coulomb_lab::operators::{diamagnetic_sobolev_check, lichnerowicz_refinement, random_concentrated_scalar, random_vector_potential, sobolev_test_constant};
use coulomb_lab::rng::{stream, DEFAULT_SEED};

fn main() -> coulomb_lab::Result<()> {
    for lv in lichnerowicz_refinement(&[16, 24, 32, 48], 14.0, 0.9, 0.8)? {
        println!("n {:3}: residual {:.3e} (scale {:.3e})", lv.grid_n, lv.residual, lv.scale);
    }
    let c = sobolev_test_constant()?;
    let mut rng = stream(DEFAULT_SEED, 0);
    for _ in 0..3 {
        let f = random_concentrated_scalar(&mut rng, 32, 10.0)?;
        let a = random_vector_potential(&mut rng, 32, 10.0, 2, 1.0)?;
        let r = diamagnetic_sobolev_check(&f, &a, 1.0, c)?;
        println!("magnetic {:.6} >= |grad|f|| {:.6} >= Sobolev {:.6}", r.lhs, r.mid, r.sobolev_term);
    }
    Ok(())
}
