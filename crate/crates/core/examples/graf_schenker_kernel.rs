//! Overlap kernel of a scaled simplex and the sliding statistic.

use coulomb_lab::cli::graf_schenker_suite;
use coulomb_lab::rng::DEFAULT_SEED;

fn main() -> coulomb_lab::Result<()> {
    let s = graf_schenker_suite(20_000, DEFAULT_SEED, 8, 10, 3.0)?;
    println!("configuration diameter {:.4}", s.diameter);
    println!("radiality: worst direction {:.2} sigma", s.radiality_max_sigma);
    println!("g(0) = {:.4} +- {:.4}", s.g0, s.g0_std_error);
    println!("positivity: {:?} (min {:.2} sigma)", s.positivity, s.positivity_min_over_sigma);
    println!("{:>10} {:>12} {:>10}", "ell", "D", "sigma");
    for r in &s.rows {
        println!("{:10.3} {:12.6} {:10.6}", r.ell, r.d, r.d_std_error);
    }
    println!("bound {:.4}, log trend {:.4} +- {:.4}, passed {}", s.sliding_bound, s.log_trend, s.log_trend_std_error, s.passed);
    Ok(())
}
