//! Frequency functions and singular sets of Q-valued holomorphic maps.

pub mod aq_space;
pub mod covering;
pub mod curve;
mod dd;
pub mod error;
pub mod frequency;
pub mod graph_dirichlet;
pub mod io;
pub mod poly;
pub mod quadrature;
pub mod singular;

pub use aq_space::{metric_g, optimal_matching, QPoint};
pub use curve::{AlgebraicCurve, FiberJet};
pub use error::{Error, Result};
pub use frequency::{energy_d, frequency_i, height_h, Frequency, RadialProfile};
