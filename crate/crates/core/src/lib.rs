//! Sector-resolved exact diagonalization for spin-1/2 chains with a
//! conserved total magnetization.
//!
//! The crate builds the long-range XY Hamiltonian with a linear field
//! gradient block-by-block in the charge sectors of `Q = Σ_i σ^z_i`,
//! diagonalizes every block densely, and uses the eigenbases to drive
//! exact unitary dynamics of engineered product states. On top of that
//! sit the observables of interest: reduced density matrices of a small
//! observation subsystem, their entanglement asymmetry, Gaussian decay
//! fits and Mpemba-crossing detection, a dephased-bath prediction for
//! individual off-diagonal matrix elements, and an operator-space
//! Krylov (Lanczos) analysis of charge-mismatched correlators.
//!
//! All dense linear algebra is generic over the scalar type through the
//! [`Real`] trait (`f32` or `f64`); the type aliases at the crate root
//! pin the common double-precision instantiations.

pub mod asymmetry;
pub mod basis;
pub mod dynamics;
mod error;
pub mod krylov;
pub mod model;
mod scalar;
pub mod spectra;
pub mod states;
pub mod theory;

pub use error::Error;
pub use scalar::{real, Real};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Complex number over a generic real scalar.
pub type Cplx<T> = num_complex::Complex<T>;

/// Double-precision complex amplitude.
pub type C64 = num_complex::Complex<f64>;
/// Single-precision complex amplitude.
pub type C32 = num_complex::Complex<f32>;

pub type ModelParams64 = model::ModelParams<f64>;
pub type SectorHamiltonian64 = model::SectorHamiltonian<f64>;
pub type SectorSpectrum64 = spectra::SectorSpectrum<f64>;
pub type ChainSpectra64 = spectra::ChainSpectra<f64>;
pub type PureState64 = states::PureState<f64>;
pub type DensityMatrix64 = dynamics::DensityMatrix<f64>;
pub type EvolutionEngine64 = dynamics::EvolutionEngine<f64>;
pub type EnsembleSpec64 = dynamics::EnsembleSpec<f64>;
pub type AsymmetryCurve64 = asymmetry::AsymmetryCurve<f64>;
pub type GaussianFit64 = asymmetry::GaussianFit<f64>;
pub type KrylovChain64 = krylov::KrylovChain<f64>;

pub type ModelParams32 = model::ModelParams<f32>;
pub type PureState32 = states::PureState<f32>;
pub type EvolutionEngine32 = dynamics::EvolutionEngine<f32>;
