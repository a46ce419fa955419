//! Simulation toolkit for spin-1 (biphoton) probe states subject to isotropic
//! SU(2) rotational jitter.
//!
//! The crate models the full chain of a polarization-entangled two-photon
//! experiment in the symmetric (triplet) subspace:
//!
//! * [`spinspace`]: the three-dimensional state space, a one-parameter fiducial
//!   family interpolating between spin-coherent and N00N states, SU(2)
//!   rotations and their waveplate realizations, and Wigner quasi-probability
//!   maps on the sphere.
//! * [`channels`]: the isotropic jitter channel (random SU(2) kicks with
//!   Gaussian-distributed angle), exact and Monte Carlo constructions,
//!   superoperator/Choi conversions, and CPTP checks.
//! * [`detection`]: anti-coincidence ("non-detection") statistics behind a
//!   polarizing beam splitter, closed-form decoherence response curves, and
//!   jitter-strength sensitivity analysis.
//! * [`ensembles`]: SU(2)-covariant probe ensembles, their Gram (frame)
//!   operators on density-matrix space, and spherical 2-design diagnostics.
//! * [`qpt`]: simulated informationally complete measurements, linear-inversion
//!   and maximum-likelihood process tomography, and average process infidelity
//!   scoring between channels.
//!
//! Basis convention throughout: the photon-number basis (|2H>, |1H 1V>, |2V>)
//! is identified with the angular-momentum basis (|1,+1>, |1,0>, |1,-1>), in
//! that order, and hbar = 1.

pub mod channels;
pub mod detection;
pub mod ensembles;
pub mod error;
pub mod linalg;
pub mod qpt;
pub mod serial;
pub mod spinspace;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
