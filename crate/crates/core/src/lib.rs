//! Capacitated coverage and submodular task assignment, offline and under known-IID online
//! arrivals: instances, benchmark LPs, dependent rounding, LP-guided sampling policies, a
//! trial simulator with clairvoyant oracles, and numerical evaluation of the ratio constants.

pub mod algorithms;
pub mod analysis;
pub mod benchmarks;
pub mod instance;
pub mod lpsolver;
pub mod rounding;
pub mod simulator;
pub mod stats;
