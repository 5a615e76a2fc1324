//! Legendre transform of the relativistic kinetic energy, sampled and
//! transformed back.

use coulomb_lab::numerics::legendre::legendre_transform_sampled;
use coulomb_lab::numerics::KineticProfile;

fn main() -> coulomb_lab::Result<()> {
    let lin = |lo: f64, hi: f64, k: usize| -> Vec<f64> { (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect() };
    let t = KineticProfile::relativistic(1.0)?;
    let star = legendre_transform_sampled(&t.sample(&lin(-20.0, 20.0, 4001)), &lin(-0.98, 0.98, 4001))?;
    for (v, s) in star.grid.iter().zip(&star.values).step_by(500) {
        println!("v {v:6.3}: sampled {s:.10} closed form {:.10}", t.conjugate(*v));
    }
    let back = legendre_transform_sampled(&star, &[-2.0, 0.0, 1.0, 3.0])?;
    for (p, e) in back.grid.iter().zip(&back.values) {
        println!("p {p:4}: double transform {e:.10} energy {:.10}", t.energy(*p));
    }
    Ok(())
}
