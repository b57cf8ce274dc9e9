//! Conditional Gaussian dynamics of two atomic spin ensembles probed by a
//! shared light beam.
//!
//! A polarized light beam traverses two oppositely pumped atomic samples and
//! is then measured by homodyne detection. Because every ingredient —
//! free Larmor precession, the off-resonant Faraday interaction, loss
//! channels and the measurement itself — is linear or quadratic in the
//! canonical quadratures, the joint state stays Gaussian and is fully
//! described by a mean vector and a covariance matrix. This crate evolves
//! that description and quantifies the measurement-induced two-mode
//! entanglement between the samples.
//!
//! The pieces:
//!
//! - [`gaussian`]: state containers, quadrature conventions, symplectic
//!   forms, physicality checks.
//! - [`params`]: the physical parameter set (measurement rate κ̃², decay
//!   rate η, optical density α₀, Larmor frequency ω, …).
//! - [`propagator`]: the discrete time-slice model — interactions, loss,
//!   rotation and homodyne conditioning, slice by slice.
//! - [`riccati`]: the continuous limit — a matrix Riccati equation solved
//!   by fixed-step integration or exactly by linearization.
//! - [`analytic`]: closed-form covariances, optimal interaction times and
//!   depumping laws used as cross-checks and fast paths.
//! - [`entanglement`]: EPR variance, Gaussian entanglement of formation and
//!   logarithmic negativity.
//! - [`trajectory`]: Monte Carlo ensembles of conditional means driven by
//!   simulated detector records.
//!
//! # Example
//!
//! Probing without rotation or loss squeezes the collective momentum sum and
//! drags the EPR product below the separability bound:
//!
//! ```
//! use spinlight::entanglement::epr_delta;
//! use spinlight::propagator::SliceSimulator;
//! use spinlight::PhysicalParams;
//!
//! let params = PhysicalParams::lossless(1.0)?.with_tau(1e-3);
//! let mut sim = SliceSimulator::new(params)?;
//! for _ in 0..500 {
//!     sim.step_deterministic()?;
//! }
//! let delta = epr_delta(&sim.state().cov);
//! assert!(delta > 0.65 && delta < 0.75); // √(1/(1+2κ²t)) with κ²t = 0.5
//! # Ok::<(), spinlight::Error>(())
//! ```
//!
//! # Conventions
//!
//! Covariances are scaled so vacuum is the identity, γ_ij = 2·Re⟨δy_i δy_j⟩,
//! and the canonical ordering is `(x_A1, p_A1, x_A2, p_A2, x_L, p_L)`.
//! Time is measured in units where the measurement rate κ̃² and the decay
//! rate η are inverse times; all quadratures are dimensionless.

pub mod analytic;
pub mod entanglement;
mod error;
pub mod gaussian;
pub mod params;
pub mod propagator;
pub mod riccati;
pub mod trajectory;

pub use entanglement::EntanglementReport;
pub use error::{Error, Result};
pub use gaussian::{AtomicState, CanonicalState, SymplecticForm};
pub use params::PhysicalParams;
pub use propagator::{SliceCoupling, SliceSimulator};
pub use riccati::RiccatiProblem;
pub use trajectory::{EnsembleStats, TrajectoryRecord};
