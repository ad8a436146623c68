#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod banded;
pub mod certificates;
pub mod error;
pub mod grid;
pub mod math;
pub mod forms;
pub mod profile;
pub mod spectrum;

pub use error::{Error, Result};
