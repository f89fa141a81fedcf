// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calib;
pub mod chain;
pub mod cli;
pub mod device;
pub mod error;
pub mod experiments;
pub mod estimate;
pub mod qubit;
pub mod rng;
pub mod transducer;
pub mod units;
