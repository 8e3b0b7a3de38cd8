//! Single-shot holographic recovery of complex-valued functions.
//!
//! A target `f` is observed only through intensities `|f + g_N|²` against a
//! known reference wave `g_N`. Three intensities per lattice point determine
//! `f(2^{-N}k)` through a 2×2 linear solve, and a tensor B-spline expansion
//! turns the recovered samples into an approximation on a box `Ω`.
//!
//! Pipeline per level `N`: [`lattice`] builds the index set and sampling
//! triples, [`waves`] supplies the reference wave and its admissibility
//! ratio, [`measure`] simulates intensities, [`recover`] solves for the
//! samples and [`reconstruct`] synthesizes and measures the L²(Ω) error.

// `!(x > y)` is used deliberately so that NaN fails checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod lattice;
pub mod measure;
pub mod reconstruct;
pub mod recover;
pub mod refinable;
pub mod runner;
pub mod targets;
pub mod waves;

pub use config::ExperimentConfig;
pub use error::{Error, Result, Violation};
pub use lattice::{
    build_lattice, build_triples, zero_excluded, LatticeSet, Roi, ScaledPoint, Triple, TripleSet,
    TripleVariant, ZeroExclusion,
};
pub use measure::{
    intensity, perturb_intensities, quasi_intensities, sample_intensities, IntensityRecord,
};
pub use reconstruct::{
    convergence_study, fit_rate, l2_error, synthesize, LevelRow, RateFit, ReconstructionReport,
    Study, Synthesizer,
};
pub use recover::{recover_level, solve_point, RecoveredSamples, SolveCoefficients};
pub use refinable::{bspline_mask, eval_bspline, Mask1D, RefinableFunction};
pub use targets::{builtin_target, TargetFunction, TargetParams};
pub use waves::{
    admissibility_ratio, plane_certificate, spherical_certificate, AdmissibilityReport, PlaneWave,
    ReferenceWave, SphericalWave, WaveDesign, WaveFamily, WaveSequence,
};
