//! Lattice coset space-time codes for quasi-static MIMO fading channels.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`]: real lattices, figures of merit, quantization and a catalog
//!   of dense lattices (E8, Barnes–Wall, Leech, ...).
//! * [`clps`]: closest-point and shortest-vector search (Schnorr–Euchner).
//! * [`cda`]: cyclic division algebra machinery for 2x2 codes: the Golden
//!   rotation, the Golden+ maximal order, ideal indices and the ideal search.
//! * [`mmse`]: MMSE-GDFE forward/backward filters.
//! * [`slast`]: nested-lattice (Voronoi-shaped) space-time block codes with
//!   sphere encoding, lattice decoding and exhaustive ML decoding.
//! * [`tcm`]: trellis coset coding over a three-level lattice partition with
//!   Viterbi decoding.
//! * [`channel`]: the Rayleigh block-fading channel, Monte Carlo harness and
//!   outage estimator.

pub mod cda;
pub mod channel;
pub mod clps;
pub mod error;
pub mod intlin;
pub mod lattice;
pub mod layout;
pub mod mmse;
pub mod slast;
pub mod tcm;

pub use error::{Error, Result};
pub use lattice::{catalog, Lattice};
