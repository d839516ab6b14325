//! Numerical laboratory for quenched statistics of random
//! Liverani-Saussol-Vaienti (LSV) interval maps.
//!
//! The map family f_a(x) = x(1 + 2^a x^a) on [0, 1/2], 2x - 1 on (1/2, 1]
//! is driven by an i.i.d. sequence of exponents a in [a0, a1] drawn from a
//! discrete, uniform or quadratic law. The crate provides the pieces needed
//! to measure that system at desk scale: backward pre-image recursions and
//! their sharp asymptotics, Hoeffding-type deviation checks, the random
//! Young tower over (1/2, 1] with its return-time tails, quenched transfer
//! operators and equivariant densities, coupling (simultaneous return)
//! times, and fiberwise correlation decay with log-log rate fits.

pub mod asymptotics;
pub mod calibration;
pub mod correlations;
pub mod coupling;
pub mod density;
pub mod error;
pub mod map;
pub mod noise;
pub mod par;
pub mod preimages;
pub mod quad;
pub mod rng;
pub mod tower;
pub mod transfer;

pub use error::{LabError, Result};
pub use map::MapParam;
pub use noise::{DistKind, NoisePath, ParamDistribution, Signature};
