//! A telegraph process whose velocity after each switch is decided by a
//! random trial.
//!
//! A particle moves on the line with velocity `c` or `-v`. At every epoch a
//! trial (independent Bernoulli, or a Pólya urn draw) chooses the next
//! velocity, so consecutive periods may keep the same direction. The crate
//! provides:
//!
//! - [`trials`]: the trial schemes and the laws of the forward count;
//! - [`intertimes`]: duration families for forward and backward periods;
//! - [`law`]: atoms and density of the position `S_t`, in closed form for
//!   the damped Bernoulli and Pólya cases and as a general series;
//! - [`mean_velocity`]: the conditional mean of the velocity `V_t`;
//! - [`monte_carlo`]: exact path simulation and empirical laws;
//! - [`validation`]: checks that tie all of the above together.
//!
//! Strategies (intertime families, law evaluators, mean-velocity methods)
//! are trait objects looked up by name in [`registry`].

pub mod error;
pub mod intertimes;
pub mod law;
pub mod mean_velocity;
pub mod model;
pub mod monte_carlo;
pub mod quadrature;
pub mod registry;
pub mod rng;
pub mod special;
pub mod trials;
pub mod validation;

pub use error::{Error, Result};
pub use model::{Model, MotionParams};
pub use trials::{TrialScheme, VelocitySign};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
