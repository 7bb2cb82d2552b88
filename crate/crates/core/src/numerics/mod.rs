//! Foundational numerical kernels.

pub mod bessel;
pub mod eigen;
pub mod fit;
pub mod monte_carlo;
pub mod quadrature;

pub use bessel::{bessel_j, bessel_j_over_power};
pub use eigen::{eigenvalues_hermitian, eigenvalues_symmetric, eigh, HermitianMatrix};
pub use fit::{fit_linear, LinearFit};
pub use monte_carlo::{mc_integrate, McEstimate, RandomSource, RegionSampler, RunningMean};
pub use quadrature::{gauss_legendre, integrate_nd, QuadratureRule};
