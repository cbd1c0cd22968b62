//! Numerical laboratory for central values of Dirichlet L-functions with a
//! fixed modulus: character-group construction, dual-method central-value
//! evaluation, Dirichlet polynomials and mollifiers, the recursive
//! barrier-event scheme, a random multiplicative model, and empirical moment
//! and tail estimators — each exact identity backed by an independent
//! brute-force route.

pub mod arithmetic;
pub mod characters;
pub mod dpoly;
pub mod error;
pub mod kahan;
pub mod lcentral;
pub mod moments;
pub mod random_model;
pub mod scheme;
pub mod special;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
