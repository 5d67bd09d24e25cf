//! Two-species Daisyworld: equilibria, branch continuation, basin geometry
//! and rate-induced tipping under a tanh luminosity ramp.

pub mod cli;
pub mod config;
pub mod continuation;
pub mod equilibria;
pub mod error;
pub mod geometry;
pub mod io;
pub mod model;
pub mod params;
pub mod reproduce;
pub mod solver;
pub mod tipping;

pub use config::RunConfig;
pub use continuation::{Branch, ContinuationOptions, Direction, FoldPoint};
pub use equilibria::{Equilibrium, Label, Species, Stability};
pub use error::{Error, Result};
pub use geometry::{BasinClass, BasinGrid, ManifoldCurve, ManifoldOptions};
pub use model::{LocalClimate, State};
pub use params::Params;
pub use solver::{Convergence, Forcing, IntegratorOptions, Trajectory};
pub use tipping::{Classification, ExperimentOptions, ForcingSpec, TippingOutcome};
