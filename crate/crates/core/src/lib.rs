//! Core library for studying how the effective rank of initial recurrent
//! weights biases learning toward rich or lazy regimes.

pub mod error;
pub mod init;
pub mod metrics;
pub mod rnn;
pub mod task;
pub mod tensor;
pub mod theory;

pub use error::{LabError, Result};
