//! Subordinated diffusions on flat tori: spectral model, path simulation,
//! empirical measures, transport distances and closed-form theory.

pub mod empirical;
pub mod harness;
pub mod error;
pub mod quadrature;
pub mod rng;
pub mod simulator;
pub mod spectral;
pub mod theory;
pub mod wasserstein;

pub use empirical::{
    bin_measure, mollified_density, psi_functional, spectral_coefficients, CoefficientAccumulator, DiscreteMeasure,
    EmpiricalSpectrum,
};
pub use error::{Error, Result};
pub use simulator::{simulate_path, ProcessParams, Start, Trajectory};
pub use spectral::{HeatKernelMethod, LatticeShells, SpectralModel};
pub use wasserstein::{TransportMethod, TransportResult};
