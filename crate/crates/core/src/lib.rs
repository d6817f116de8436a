//! Grid-based Hamilton-Jacobi reachability for a defender/attacker
//! reach-avoid game, with decomposed horizontal and vertical sub-games,
//! winner classification, feedback control, and closed-loop simulation.

pub mod analysis;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod hji;
pub mod hjvf;
pub mod oracle;
pub mod pipeline;
pub mod sim;

pub use error::{Error, Result};
