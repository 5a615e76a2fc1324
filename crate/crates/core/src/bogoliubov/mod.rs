//! Upper bound for the two-component charged Bose gas: the pair-excitation
//! trial state, its energy in a finite basis, the semiclassical reduction
//! to `I₀`, and the variational problem behind the `N^{7/5}` law.

pub mod dyson;
pub mod energy;
pub mod fock;
pub mod semiclassical;

pub use dyson::{dyson_pipeline, dyson_variational_solve, DysonGrid, DysonPipelineReport, SolverOptions, VariationalState};
pub use energy::{coulomb_expectation_finite_basis, coulomb_expectation_spectral, total_energy_expectation, CondensateProfile, RadialBasis};
pub use fock::{fock_oracle, gamma_from_spec, FockMoments, PairExcitationSpec};
pub use semiclassical::{bogoliubov_dispersion_min, compute_i0, semiclassical_p_integral, I0Values};
