//! Numerical cross-checks: truncation ladders of the normalizing constant
//! and posterior sampling.

pub(crate) mod kernel;
pub mod ladder;
pub mod mcmc;
pub mod quadrature;

pub use ladder::{
    box_integral_full, box_integral_reduced, diagnose, diagnose_with, integrate_norm_const, Diagnosis,
    DiagnosisConfig, DiagnosisStatus, Interval, LadderConfig, TruncationLadder,
};
pub use mcmc::{gate_verdict, mcmc_sample, metropolis, Chain, ChainConfig, ChainRow, ChainSummary, RawChain};
