//! Minimum-norm machine unlearning: exact solvers, iterative unlearners, toy
//! benchmark tasks and the oracle checks that tie them together.

pub mod bench;
pub mod error;
pub mod exact;
pub mod io;
pub mod models;
pub mod numkit;
pub mod tasks;
pub mod unlearners;
pub mod verify;

pub use error::{Error, Result};
