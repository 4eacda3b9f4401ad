//! Channel estimation for BD-RIS-assisted MIMO links under hardware
//! impairments.
//!
//! The surface has `N` elements split into `Q` fully connected groups of
//! `N̄`. Pilots pass through per-slot scattering matrices distorted entrywise
//! by an impairment matrix `E`; the receiver applies a matched filter built
//! for the ideal scattering matrices and recovers the combined channel
//! `c = [vec(H⁽q⁾ ⊗ G⁽q⁾)]_q`. The [`harness`] runs seeded Monte Carlo sweeps
//! of the resulting NMSE.

pub mod error;
pub mod estimation;
pub mod harness;
pub mod impairment;
pub mod linalg;
pub mod rng;
pub mod system;
pub mod training;

pub use error::{Error, Result};
pub use estimation::{
    decouple_channels, matched_filter, nmse, scale_aligned_nmse, synthesize_rx, synthesize_rx_vectorized,
    EstimateResult, NoiseSpec, ReceivedSignal,
};
pub use harness::{run_sweep, run_trial, write_csv, SweepPlan, SweepRecord};
pub use impairment::{
    apply_impairment, max_affected, sample_impairment, ImpairmentKind, ImpairmentMatrix, ImpairmentSpec,
};
pub use linalg::ComplexMatrix;
pub use system::{combined_channel, generate_channels, ChannelPair, CombinedChannel, NoiseMode, SystemConfig};
pub use training::{build_training, verify_orthogonality, TrainingDesign};
