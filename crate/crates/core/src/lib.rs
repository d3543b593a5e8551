//! Exact stochastic calculus on finite filtered probability spaces, with the
//! drift-operator and full-viability machinery for enlarged filtrations.

pub mod basis;
pub mod calculus;
pub mod enlargement;
pub mod error;
pub mod io;
pub mod event_kernels;
pub mod linalg;
pub mod models;
pub mod lp;
pub mod oracle;
pub mod process;
pub mod rational;
pub mod representation;
pub mod suite;
pub mod viability;

pub use error::{Error, Result};
pub use rational::Q;
