//! Fourier-side analysis of the linearized operator.

pub mod approx;
pub mod eigen;
pub mod longwave;
pub mod matrices;
pub mod modes;
pub mod physical;

pub use eigen::{branch_track, eigenvalues_at, spectral_gap_scan, BranchTrack, EigenSet, GapReport, Regime};
pub use longwave::{longwave_matrices, LongWaveData};
pub use matrices::{assemble_linearization, characteristic_poly, CharPoly, SystemMatrices, C64};
pub use modes::{greens_fourier, mode_matrices, GreensFrequencySlice, ModeSet};
pub use approx::{approx_eigenvalues, choose_k, singular_mode_matrices, ApproxEigenSet, KChoice, KSearch};
pub use physical::{greens_physical, split_singular_regular, GreensPhysicalSlice, SplitReport};
