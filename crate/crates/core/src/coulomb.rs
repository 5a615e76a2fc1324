//! Coulomb energies of signed point charges and the smeared-charge lower
//! bound built from nearest-opposite-charge distances.
//!
//! Each particle `j` is smeared uniformly over the ball of radius `δ_j / 2`
//! around it, where `δ_j` is the distance to the nearest particle of the
//! opposite species. Opposite-species balls are then disjoint, so their
//! interaction is unchanged, while like-species interactions can only drop.
//! Dropping the (nonnegative) self-interaction of the smeared density leaves
//! `V_C ≥ −(12/5) Σ Q_j² / δ_j`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate_breakpoints, Tolerance};
use crate::report::{Check, EnergyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: [f64; 3],
    pub charge: f64,
    pub species: Species,
}

/// Signed point charges in 3-space. Serialized as a JSON array of
/// `{position, charge, species}` objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Particle>", into = "Vec<Particle>")]
pub struct ChargeConfiguration {
    particles: Vec<Particle>,
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl TryFrom<Vec<Particle>> for ChargeConfiguration {
    type Error = Error;

    fn try_from(particles: Vec<Particle>) -> Result<Self> {
        ChargeConfiguration::new(particles)
    }
}

impl From<ChargeConfiguration> for Vec<Particle> {
    fn from(c: ChargeConfiguration) -> Self {
        c.particles
    }
}

impl ChargeConfiguration {
    pub fn new(particles: Vec<Particle>) -> Result<Self> {
        for (i, p) in particles.iter().enumerate() {
            if p.position.iter().any(|x| !x.is_finite()) || !p.charge.is_finite() {
                return Err(Error::domain(format!("particle {i} has non-finite data")));
            }
            let sign_ok = match p.species {
                Species::Plus => p.charge > 0.0,
                Species::Minus => p.charge < 0.0,
            };
            if !sign_ok {
                return Err(Error::domain(format!(
                    "particle {i}: charge {} does not match species {:?}",
                    p.charge, p.species
                )));
            }
        }
        let config = ChargeConfiguration { particles };
        let tol = 1e-12 * config.diameter();
        for i in 0..config.len() {
            for j in i + 1..config.len() {
                let d = distance(&config.particles[i].position, &config.particles[j].position);
                if d <= tol {
                    return Err(Error::Singularity { i, j, separation: d });
                }
            }
        }
        Ok(config)
    }

    /// Builds from positions and signed charges; the species follows the sign.
    pub fn from_charges(positions: &[[f64; 3]], charges: &[f64]) -> Result<Self> {
        if positions.len() != charges.len() {
            return Err(Error::Shape("positions and charges differ in length".into()));
        }
        let particles = positions
            .iter()
            .zip(charges)
            .map(|(&position, &charge)| Particle {
                position,
                charge,
                species: if charge > 0.0 { Species::Plus } else { Species::Minus },
            })
            .collect();
        Self::new(particles)
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.particles.iter().enumerate() {
            for b in &self.particles[i + 1..] {
                d = d.max(distance(&a.position, &b.position));
            }
        }
        d
    }

    pub fn charge_square_sum(&self) -> f64 {
        self.particles.iter().map(|p| p.charge * p.charge).sum()
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            self.particles
                .iter()
                .map(|p| Particle { position: p.position.map(|x| s * x), ..*p })
                .collect(),
        )
    }

    /// Neutral configuration of `n` particles uniform in the unit cube. The
    /// positive species carries a random charge in `[0.5, 2]`; the negative
    /// charge is fixed by neutrality.
    pub fn random_neutral<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("a neutral configuration needs at least two particles"));
        }
        let n_plus = rng.random_range(1..n);
        let n_minus = n - n_plus;
        let q_plus = rng.random_range(0.5..2.0);
        let q_minus = q_plus * n_plus as f64 / n_minus as f64;
        let particles = (0..n)
            .map(|i| {
                let position = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
                if i < n_plus {
                    Particle { position, charge: q_plus, species: Species::Plus }
                } else {
                    Particle { position, charge: -q_minus, species: Species::Minus }
                }
            })
            .collect();
        Self::new(particles)
    }
}

/// `Σ_{i<j} Q_i Q_j / |r_i − r_j|`.
pub fn exact_coulomb_energy(c: &ChargeConfiguration) -> Result<f64> {
    let ps = c.particles();
    let mut e = 0.0;
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            let d = distance(&ps[i].position, &ps[j].position);
            if d == 0.0 {
                return Err(Error::Singularity { i, j, separation: d });
            }
            e += ps[i].charge * ps[j].charge / d;
        }
    }
    Ok(e)
}

/// Distance from every particle to the nearest particle of the other species.
pub fn nearest_opposite_distances(c: &ChargeConfiguration) -> Result<Vec<f64>> {
    let ps = c.particles();
    let deltas: Vec<f64> = ps
        .iter()
        .map(|p| {
            ps.iter()
                .filter(|q| q.species != p.species)
                .map(|q| distance(&p.position, &q.position))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    if deltas.iter().any(|d| d.is_infinite()) {
        return Err(Error::NoOpposite);
    }
    Ok(deltas)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("smearing diameter must be positive, got {delta}")))
    }
}

/// Potential at distance `r` of a unit charge spread uniformly over the ball
/// of diameter `delta`.
pub fn newton_smeared_potential(delta: f64, r: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(r >= 0.0) {
        return Err(Error::domain(format!("distance must be nonnegative, got {r}")));
    }
    Ok(ball_potential(delta, r))
}

fn ball_potential(delta: f64, r: f64) -> f64 {
    if r > 0.5 * delta {
        1.0 / r
    } else {
        (3.0 - 4.0 * r * r / (delta * delta)) / delta
    }
}

/// Self-interaction `∬ χ(r) χ(r') / |r − r'|` of one smeared unit charge.
pub fn smeared_self_energy(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(12.0 / (5.0 * delta))
}

// ∫_0^t φ(u) u du for the ball potential φ of diameter `delta`.
fn ball_potential_moment(delta: f64, t: f64) -> f64 {
    let b = 0.5 * delta;
    if t <= b {
        (1.5 * t * t - t.powi(4) / (delta * delta)) / delta
    } else {
        5.0 * delta / 16.0 + (t - b)
    }
}

/// Interaction of two unit charges smeared over balls of diameters
/// `delta_i`, `delta_j` with centres `d` apart.
///
/// Disjoint balls interact like point charges. Otherwise the potential of
/// ball `j` is averaged over spheres of radius `s` around centre `i` in
/// closed form and the remaining radial integral over `s` is done by
/// adaptive quadrature.
pub fn smeared_pair_interaction(delta_i: f64, delta_j: f64, d: f64) -> Result<f64> {
    check_delta(delta_i)?;
    check_delta(delta_j)?;
    if !(d >= 0.0) {
        return Err(Error::domain(format!("separation must be nonnegative, got {d}")));
    }
    if d >= 0.5 * (delta_i + delta_j) {
        return Ok(1.0 / d);
    }
    smeared_pair_interaction_quadrature(delta_i, delta_j, d)
}

/// The sphere-average quadrature route of [`smeared_pair_interaction`],
/// applied for every separation, including disjoint balls.
pub fn smeared_pair_interaction_quadrature(delta_i: f64, delta_j: f64, d: f64) -> Result<f64> {
    check_delta(delta_i)?;
    check_delta(delta_j)?;
    if !(d >= 0.0) {
        return Err(Error::domain(format!("separation must be nonnegative, got {d}")));
    }
    let a = 0.5 * delta_i;
    let b = 0.5 * delta_j;
    let sphere_average = |s: f64| -> f64 {
        if d <= 1e-12 * a || s <= 1e-12 * a {
            ball_potential(delta_j, if d <= 1e-12 * a { s } else { d })
        } else {
            (ball_potential_moment(delta_j, d + s) - ball_potential_moment(delta_j, (d - s).abs())) / (2.0 * s * d)
        }
    };
    let mut points = vec![0.0, a];
    for kink in [b - d, d - b, d + b, d] {
        if kink > 0.0 && kink < a {
            points.push(kink);
        }
    }
    points.sort_by(f64::total_cmp);
    let integral = integrate_breakpoints(|s| s * s * sphere_average(s), &points, Tolerance::new(1e-15, 1e-13))?;
    Ok(3.0 / (a * a * a) * integral.value)
}

/// Particle configuration with its smearing diameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SmearedConfiguration {
    pub base: ChargeConfiguration,
    pub deltas: Vec<f64>,
}

impl SmearedConfiguration {
    pub fn new(base: ChargeConfiguration) -> Result<Self> {
        let deltas = nearest_opposite_distances(&base)?;
        Ok(SmearedConfiguration { base, deltas })
    }

    /// Smeared-ball interaction of particles `i` and `j` (unit charges).
    pub fn pair_interaction(&self, i: usize, j: usize) -> Result<f64> {
        let ps = self.base.particles();
        smeared_pair_interaction(self.deltas[i], self.deltas[j], distance(&ps[i].position, &ps[j].position))
    }

    /// Smeared density of particle `j`, `(6/πδ³) 1_{B(r_j, δ/2)}`.
    pub fn density(&self, j: usize, r: &[f64; 3]) -> f64 {
        let delta = self.deltas[j];
        if distance(r, &self.base.particles()[j].position) < 0.5 * delta {
            6.0 / (PI * delta.powi(3))
        } else {
            0.0
        }
    }
}

/// Every quantity in the smeared-charge chain of inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsagerChain {
    pub exact: f64,
    /// `Σ_{i<j} Q_i Q_j ∬ χ_i χ_j / |r − r'|`.
    pub smeared_pair_sum: f64,
    /// `½ ∬ ρ ρ' / |r − r'|` for the smeared density `ρ`.
    pub smeared_interaction: f64,
    /// `−(12/5) Σ Q_j² / δ_j`.
    pub self_energy_correction: f64,
    /// Final bound, equal to the self-energy correction.
    pub final_bound: f64,
    /// `−(6/5) Σ Q_j² / δ_j`, obtained by keeping the factor ½ on the diagonal.
    pub sharpened_bound: f64,
    /// Largest relative deviation `d_ij |I_ij − 1/d_ij|` over opposite-species
    /// pairs, with `I_ij` from the quadrature route.
    pub opposite_pair_max_deviation: f64,
    /// Largest `I_ij − 1/d_ij` over like-species pairs (must be ≤ 0).
    pub like_pair_max_excess: f64,
}

pub fn onsager_chain(c: &ChargeConfiguration) -> Result<OnsagerChain> {
    let smeared = SmearedConfiguration::new(c.clone())?;
    let ps = c.particles();
    let exact = exact_coulomb_energy(c)?;
    let mut pair_sum = 0.0;
    let mut opposite_dev: f64 = 0.0;
    let mut like_excess = f64::NEG_INFINITY;
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            let d = distance(&ps[i].position, &ps[j].position);
            let interaction = smeared.pair_interaction(i, j)?;
            pair_sum += ps[i].charge * ps[j].charge * interaction;
            if ps[i].species != ps[j].species {
                let by_quadrature = smeared_pair_interaction_quadrature(smeared.deltas[i], smeared.deltas[j], d)?;
                opposite_dev = opposite_dev.max((by_quadrature - 1.0 / d).abs() * d);
            } else {
                like_excess = like_excess.max(interaction - 1.0 / d);
            }
        }
    }
    let weighted: f64 = ps.iter().zip(&smeared.deltas).map(|(p, d)| p.charge * p.charge / d).sum();
    let self_term = 0.5 * 2.4 * weighted;
    Ok(OnsagerChain {
        exact,
        smeared_pair_sum: pair_sum,
        smeared_interaction: pair_sum + self_term,
        self_energy_correction: -2.4 * weighted,
        final_bound: -2.4 * weighted,
        sharpened_bound: -1.2 * weighted,
        opposite_pair_max_deviation: opposite_dev,
        like_pair_max_excess: if like_excess.is_finite() { like_excess } else { 0.0 },
    })
}

/// Smeared-charge lower bound as an [`EnergyReport`].
///
/// The terms are the smeared interaction and the self-energy correction, so
/// `total` is the intermediate bound; the exact energy and the final bounds
/// are in the provenance and the chain is recorded as checks.
pub fn onsager_lower_bound(c: &ChargeConfiguration) -> Result<EnergyReport> {
    let chain = onsager_chain(c)?;
    let scale = chain.exact.abs().max(chain.final_bound.abs()) * 1e-12;
    let mut report = EnergyReport::new("onsager_lower_bound")
        .term("smeared_interaction", chain.smeared_interaction)
        .term("self_energy_correction", chain.self_energy_correction)
        .with_provenance("particles", c.len())
        .with_provenance("exact", chain.exact)
        .with_provenance("smeared_pair_sum", chain.smeared_pair_sum)
        .with_provenance("final_bound", chain.final_bound)
        .with_provenance("sharpened_bound", chain.sharpened_bound);
    let intermediate = report.total;
    report.push_check(Check::ge("exact >= pair sum", chain.exact, chain.smeared_pair_sum, scale));
    report.push_check(Check::ge("exact >= intermediate", chain.exact, intermediate, scale));
    report.push_check(Check::ge("intermediate >= final", intermediate, chain.final_bound, scale));
    report.push_check(Check::ge("exact >= sharpened", chain.exact, chain.sharpened_bound, scale));
    report.push_check(Check::below(
        "opposite pairs unchanged",
        chain.opposite_pair_max_deviation,
        1e-10 * (1.0 + chain.exact.abs()),
    ));
    report.push_check(Check::ge("like pairs reduced", 0.0, chain.like_pair_max_excess, 1e-12));
    Ok(report)
}

/// Outcome of a randomized sweep of the smeared-charge bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnsagerSweep {
    pub samples: usize,
    pub seed: u64,
    pub violations: usize,
    pub opposite_pair_failures: usize,
    pub like_pair_failures: usize,
    /// Smallest `(exact − final_bound) / |final_bound|` seen.
    pub min_relative_gap: f64,
    /// Largest `d_ij |I_ij − 1/d_ij|` over all opposite-species pairs seen.
    pub max_opposite_deviation: f64,
}

/// Checks the bound on `samples` random neutral configurations with
/// `min_particles..=max_particles` particles. Sample `i` uses its own
/// generator, so the result does not depend on the thread schedule.
pub fn onsager_sweep(samples: usize, seed: u64, min_particles: usize, max_particles: usize) -> Result<OnsagerSweep> {
    use rayon::prelude::*;
    if min_particles < 2 || max_particles < min_particles {
        return Err(Error::domain("particle range must satisfy 2 <= min <= max"));
    }
    let chains = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::rng::stream(seed, i as u64);
            let n = rng.random_range(min_particles..=max_particles);
            onsager_chain(&ChargeConfiguration::random_neutral(&mut rng, n)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sweep = OnsagerSweep {
        samples,
        seed,
        violations: 0,
        opposite_pair_failures: 0,
        like_pair_failures: 0,
        min_relative_gap: f64::INFINITY,
        max_opposite_deviation: 0.0,
    };
    for chain in &chains {
        let scale = chain.exact.abs().max(chain.final_bound.abs());
        let intermediate = chain.smeared_interaction + chain.self_energy_correction;
        if chain.exact < chain.final_bound
            || chain.exact < intermediate - 1e-12 * scale
            || intermediate < chain.final_bound - 1e-12 * scale
        {
            sweep.violations += 1;
        }
        if chain.opposite_pair_max_deviation > 1e-10 {
            sweep.opposite_pair_failures += 1;
        }
        if chain.like_pair_max_excess > 1e-12 * scale {
            sweep.like_pair_failures += 1;
        }
        sweep.min_relative_gap = sweep.min_relative_gap.min((chain.exact - chain.final_bound) / chain.final_bound.abs());
        sweep.max_opposite_deviation = sweep.max_opposite_deviation.max(chain.opposite_pair_max_deviation);
    }
    Ok(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair(d: f64) -> ChargeConfiguration {
        ChargeConfiguration::from_charges(&[[0.0; 3], [d, 0.0, 0.0]], &[1.0, -1.0]).unwrap()
    }

    #[test]
    fn exact_energy_small_cases() {
        assert_eq!(exact_coulomb_energy(&pair(1.0)).unwrap(), -1.0);
        let single = ChargeConfiguration::from_charges(&[[0.0; 3]], &[1.0]).unwrap();
        assert_eq!(exact_coulomb_energy(&single).unwrap(), 0.0);
        // Alternating unit charges on the unit square, by explicit pair list.
        let sq = ChargeConfiguration::from_charges(
            &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            &[1.0, -1.0, 1.0, -1.0],
        )
        .unwrap();
        let expected = -4.0 + 2.0 / 2f64.sqrt();
        assert!((exact_coulomb_energy(&sq).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn validation_errors() {
        let coincident = ChargeConfiguration::from_charges(&[[0.0; 3], [0.0; 3]], &[1.0, -1.0]);
        assert!(matches!(coincident, Err(Error::Singularity { .. })));
        let mismatch = ChargeConfiguration::new(vec![Particle { position: [0.0; 3], charge: 1.0, species: Species::Minus }]);
        assert!(mismatch.is_err());
        let one_species = ChargeConfiguration::from_charges(&[[0.0; 3], [1.0, 0.0, 0.0]], &[1.0, 1.0]).unwrap();
        assert!(matches!(nearest_opposite_distances(&one_species), Err(Error::NoOpposite)));
        assert!(matches!(onsager_lower_bound(&one_species), Err(Error::NoOpposite)));
    }

    #[test]
    fn nearest_opposite_small_cases() {
        assert_eq!(nearest_opposite_distances(&pair(2.5)).unwrap(), vec![2.5, 2.5]);
        let c = ChargeConfiguration::from_charges(&[[0.0; 3], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]], &[1.0, -1.0, -1.0]).unwrap();
        assert_eq!(nearest_opposite_distances(&c).unwrap(), vec![1.0, 1.0, 3.0]);
    }

    #[test]
    fn newton_potential_branches() {
        assert_eq!(newton_smeared_potential(1.0, 0.0).unwrap(), 3.0);
        assert_eq!(newton_smeared_potential(0.4, 1.0).unwrap(), 1.0);
        let inside: f64 = (3.0 - 4.0 * 0.25) / 1.0;
        assert!((inside - 2.0).abs() < 1e-15);
        assert!((newton_smeared_potential(1.0, 0.5).unwrap() - 2.0).abs() < 1e-12);
        assert!(newton_smeared_potential(0.0, 1.0).is_err());
        for i in 1..200 {
            let r = i as f64 * 0.01;
            assert!(newton_smeared_potential(1.0, r).unwrap() <= 1.0 / r + 1e-15);
        }
    }

    #[test]
    fn self_energy_values() {
        assert!((smeared_self_energy(1.0).unwrap() - 2.4).abs() < 1e-15);
        assert!((smeared_self_energy(2.0).unwrap() - 1.2).abs() < 1e-15);
        assert!(smeared_self_energy(-1.0).is_err());
    }

    #[test]
    fn pair_interaction_cases() {
        assert_eq!(smeared_pair_interaction(1.0, 1.0, 2.0).unwrap(), 0.5);
        let close = smeared_pair_interaction(1.0, 1.0, 0.3).unwrap();
        assert!(close < 1.0 / 0.3);
        for delta in [0.5, 1.0, 3.0] {
            let coincident = smeared_pair_interaction(delta, delta, 0.0).unwrap();
            assert!((coincident - 12.0 / (5.0 * delta)).abs() < 1e-12, "{coincident}");
        }
        // Continuity as the balls start to touch.
        let touching = smeared_pair_interaction(1.0, 0.6, 0.8 - 1e-9).unwrap();
        assert!((touching - 1.0 / 0.8).abs() < 1e-7);
        // Symmetric in the two diameters.
        let ab = smeared_pair_interaction(0.7, 1.3, 0.4).unwrap();
        let ba = smeared_pair_interaction(1.3, 0.7, 0.4).unwrap();
        assert!((ab - ba).abs() < 1e-11);
    }

    #[test]
    fn small_sweep_has_no_violations() {
        let sweep = onsager_sweep(300, 1, 2, 40).unwrap();
        assert_eq!(sweep.violations, 0);
        assert_eq!(sweep.opposite_pair_failures, 0);
        assert_eq!(sweep.like_pair_failures, 0);
        assert!(sweep.min_relative_gap > 0.0);
        assert_eq!(onsager_sweep(300, 1, 2, 40).unwrap(), sweep);
    }

    #[test]
    fn unit_dipole_chain() {
        let report = onsager_lower_bound(&pair(1.0)).unwrap();
        assert!(report.all_passed());
        assert!((report.provenance["final_bound"].as_f64().unwrap() + 4.8).abs() < 1e-12);
        assert_eq!(report.provenance["exact"].as_f64().unwrap(), -1.0);
    }

    #[test]
    fn bound_scales_inversely() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = ChargeConfiguration::random_neutral(&mut rng, 9).unwrap();
        let base = onsager_chain(&c).unwrap();
        for s in [0.5, 3.0] {
            let scaled = onsager_chain(&c.scaled(s).unwrap()).unwrap();
            assert!((scaled.final_bound * s - base.final_bound).abs() < 1e-10 * base.final_bound.abs());
            assert!((scaled.exact * s - base.exact).abs() < 1e-10 * base.exact.abs());
            assert!((scaled.smeared_pair_sum * s - base.smeared_pair_sum).abs() < 1e-9 * base.exact.abs().max(1.0));
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let c = pair(1.5);
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"species\":\"plus\""));
        let back: ChargeConfiguration = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let bad = r#"[{"position":[0,0,0],"charge":-1,"species":"plus"}]"#;
        assert!(serde_json::from_str::<ChargeConfiguration>(bad).is_err());
    }

    #[test]
    fn self_energy_matches_shell_quadrature() {
        // Concentric uniform shells of radii s, t interact like 1/max(s, t).
        let a = 0.5;
        let tol = Tolerance::new(1e-14, 1e-12);
        let inner = |s: f64| {
            integrate_breakpoints(|t: f64| t * t / s.max(t), &[0.0, s, a], tol).unwrap().value
        };
        let outer = crate::numerics::integrate(|s| s * s * inner(s), 0.0, a, tol).unwrap().value;
        let value = (3.0 / (a * a * a)).powi(2) * outer;
        assert!((value - smeared_self_energy(1.0).unwrap()).abs() < 1e-6, "{value}");
    }

    #[test]
    fn nearest_opposite_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let c = ChargeConfiguration::random_neutral(&mut rng, 20).unwrap();
        let fast = nearest_opposite_distances(&c).unwrap();
        let ps = c.particles();
        for (j, p) in ps.iter().enumerate() {
            let mut best = f64::INFINITY;
            for q in ps {
                if q.charge * p.charge < 0.0 {
                    let d = ((q.position[0] - p.position[0]).powi(2)
                        + (q.position[1] - p.position[1]).powi(2)
                        + (q.position[2] - p.position[2]).powi(2))
                    .sqrt();
                    best = best.min(d);
                }
            }
            assert_eq!(fast[j], best);
        }
    }

    #[test]
    fn yukawa_coulomb_profile_is_positive_type() {
        use crate::numerics::{geometric_nodes, radial_fourier_transform, RadialGridFunction, Tail};
        let eps = 0.05;
        let nodes = geometric_nodes(1e-4, 400.0, 1500, true);
        let f = RadialGridFunction::from_fn(
            nodes,
            |r| if r == 0.0 { 0.0 } else { (-eps * r).exp() / r },
            Tail::Zero,
        )
        .unwrap();
        for i in 0..40 {
            let k = 0.05 * 1.2f64.powi(i);
            let ft = radial_fourier_transform(&f, k).unwrap();
            assert!(ft > 0.0, "k={k}: {ft}");
        }
    }
}
