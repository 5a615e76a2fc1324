//! Shared numerical substrate: quadrature, radial grid functions and their
//! Fourier transforms, Legendre transforms, PSD matrix functions, the
//! gamma function and 1-D minimization.

pub mod legendre;
pub mod matrix;
pub mod optimize;
pub mod quadrature;
pub mod radial;
pub mod special;

pub use legendre::{legendre_transform, KineticProfile, SampledConvex};
pub use matrix::{psd_sqrt, PsdMatrix};
pub use optimize::{golden_section, scan_then_golden};
pub use quadrature::{integrate, integrate_breakpoints, integrate_power_tail, QuadResult, Tolerance};
pub use radial::{geometric_nodes, radial_fourier_transform, uniform_nodes, RadialGridFunction, Tail};
pub use special::gamma_fn;
