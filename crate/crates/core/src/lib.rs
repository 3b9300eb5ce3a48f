//! Heavy-tailed loss models, diversification-penalty experiments, risk
//! measures, and risk-sharing equilibria for infinite-mean losses.

pub mod data_io;
pub mod dependence;
pub mod dist;
pub mod dominance;
pub mod error;
pub mod equilibrium;
pub mod ext_real;
pub mod normal;
pub mod portfolio;
pub mod quadrature;
pub mod risk;
pub mod rng;
pub mod tail;

pub use dist::LossDistribution;
pub use error::{Error, Result};
pub use ext_real::ExtendedReal;
pub use rng::RngStream;
