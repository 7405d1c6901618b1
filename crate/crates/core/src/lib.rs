//! Symbols, generators and small-time asymptotics of Lévy and Lévy-type
//! processes.

pub mod error;
pub mod expr;
pub mod generator;
pub mod holder;
pub mod lab;
pub mod measure;
pub mod quad;
pub mod sim;
pub mod stats;
pub mod symbol;

pub use error::{Error, Result};
pub use expr::Expr;
pub use measure::LevyMeasure;
pub use sim::ProcessModel;
pub use stats::{MCEstimate, SeedPolicy};
pub use symbol::{LevyTriplet, Symbol};
