//! Computations on countable Markov shifts and their one-point-per-coordinate
//! compactification: admissibility, invariant measures, convergence
//! diagnostics, pressure, and the approximation constructions.

pub mod approx;
pub mod error;
pub mod io;
pub mod loops;
pub mod measures;
pub mod num;
pub mod potential;
pub mod properties;
pub mod shift;
pub mod symbol;
pub mod thermo;
pub mod topology;

pub use error::*;
pub use loops::{GrowthRate, LoopCount, LoopInfo, LoopSystem, LoopTail, Place, BASE};
pub use shift::{AlphabetKind, Capped, Rule, ShiftPresentation};
pub use symbol::{BarSymbol, BarWord, Symbol, Word};
