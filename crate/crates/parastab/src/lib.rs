//! Numerical Littlewood-Paley / paraproduct toolkit for backward parabolic
//! stability experiments on the periodic 1-D grid.

pub mod calibration;
pub mod coeff;
pub mod config;
pub mod error;
pub mod grid;
pub mod harness;
pub mod lp;
pub mod paraproduct;
pub mod quad;
pub mod report;
pub mod solver;
pub mod weights;
