//! Simulation and verification toolkit for a degenerate parametric oscillator
//! (DPO) coupled to a broadband squeezed vacuum reservoir.
//!
//! The crate evaluates every steady-state quantity of the below-threshold DPO
//! in closed form (moments, quadrature variances, squeezing and power spectra,
//! photon-number distributions) and cross-validates those expressions with two
//! independent routes:
//!
//! * [`fock`] — a truncated Fock-basis integrator of the Lindblad master
//!   equation, giving simulation-free intracavity ground truth;
//! * [`sde`] + [`estimators`] — a seeded Monte Carlo ensemble of exact
//!   Ornstein-Uhlenbeck surrogate processes for the c-number Langevin
//!   dynamics, with input-output records for the field leaving the cavity.
//!
//! All quantities are expressed in units of the cavity damping constant's
//! inverse time; fields are labelled either `Cavity` (intracavity mode) or
//! `Output` (radiation past the coupling mirror).

pub mod analytic;
pub mod csv;
pub mod error;
pub mod estimators;
pub mod fock;
pub mod model;
pub mod photon;
pub mod rng;
pub mod sde;
pub mod validation;

pub use error::{Error, Result};
pub use model::{DecayRates, DpoParams, Regime, ReservoirMoments};
