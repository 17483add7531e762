//! Capacity-achieving input amplitude distributions for the complex AWGN
//! channel under average-power, peak-amplitude and delivered-power
//! constraints, together with the rate-power region sweeps used to study
//! simultaneous wireless information and power transfer.
//!
//! The crate is organized bottom-up:
//!
//! * [`specfun`]: modified Bessel functions, the Rice-type kernel
//!   `K(R, r)`, its even moments and the polynomial transform.
//! * [`quadrature`]: adaptive Gauss-Kronrod integration and a fixed
//!   composite Gauss-Legendre rule for hot loops.
//! * [`powermodel`]: delivered-power models, moment sets and the sinc
//!   series constants.
//! * [`distributions`]: discrete amplitude laws, the Rayleigh (CSCG) law,
//!   flash signalling and time-sharing mixtures.
//! * [`entropy`]: output-amplitude density, `H(F)`, `h(r; F)` and mutual
//!   information.
//! * [`solver`]: the constrained maximization with mass-point escalation
//!   and KKT certification, plus the Gaussian asymmetric allocation.
//! * [`rpregion`]: sweeps, the time-sharing demonstration and file output.
//!
//! All entropies and rates are in nats.

pub mod distributions;
pub mod entropy;
mod error;
pub mod powermodel;
pub mod quadrature;
pub mod rpregion;
pub mod solver;
pub mod specfun;

pub use distributions::{AmplitudeDistribution, InputLaw, MixtureSpec};
pub use error::{Error, Result};
pub use powermodel::{AmplitudeConvention, MomentSet, PowerPolynomial, PowerSpec, RectennaModel};
pub use quadrature::QuadratureSpec;
pub use solver::{ChannelSpec, KktReport, SolveResult, SolverKnobs};
