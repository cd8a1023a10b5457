#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod ctmc;
pub mod error;
pub mod events;
pub mod intensity;
pub mod latentpath;
pub mod netestimate;
pub mod posterior;
pub mod real;
pub mod simulate;

pub use error::{Error, Result};

pub type Ctmc = ctmc::CtmcParams<f64>;
pub type Emissions = latentpath::EmissionTable<f64>;
pub type SmoothedPath = latentpath::PathPosterior<f64>;
