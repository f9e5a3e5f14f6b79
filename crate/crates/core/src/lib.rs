//! First-order photon-pair generation in one-dimensional nonlinear layered media.
//!
//! The pipeline follows the fields through the stack with transfer matrices
//! that enforce continuity of both the electric and the magnetic field. Pair
//! amplitudes are split into a volume part, born inside the layers, and a
//! surface part, born at the boundaries; both are built as block matrices over
//! a top-hat frequency basis and combined into measurable spectra and temporal
//! profiles.

pub mod cmatrix;
pub mod constants;
pub mod emission;
pub mod error;
pub mod linear;
pub mod materials;
pub mod modes;
pub mod observables;
pub mod oracle;
pub mod pipeline;
pub mod spectral;
pub mod structure;

pub use cmatrix::{CMatrix, C64};
pub use constants::PhysicalConstants;
pub use emission::{
    BlockMatrix, ContinuityMode, Contribution, EmissionOperators, EmissionOptions, MatrixContext, SourceModel,
    SuperLayout,
};
pub use error::{Error, Result};
pub use linear::{linear_transmission, propagate_pump, PumpField, PumpSpec, Transmission};
pub use materials::{Dispersion, MaterialLibrary, MaterialModel, PolTriple, SellmeierTerm};
pub use modes::{Channel, Dir, Field, Mode, Pol};
pub use observables::{
    branch_amplitudes, channel_observables, joint_density, marginals_and_counts, temporal_profiles,
    two_photon_amplitude, width_fwhm, BranchAmplitudes, ChannelObservables, Grid2, JointDensity,
    JointSpectralAmplitude, Marginals, TemporalProfile, TimeGrid, Width,
};
pub use oracle::{reference_kernels, reference_pair_amplitude, OracleOptions, ReferenceKernels};
pub use pipeline::{Simulation, SimulationOutput};
pub use spectral::{project_to_basis, CouplingBlocks, Edge, PairGrid, SpectralBasis, SpectralSetup};
pub use structure::{Layer, LayerSpec, Structure, StructureSpec};
