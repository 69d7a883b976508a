//! Design and simulation toolkit for hybrid deflector + SLM optical scanners.
//!
//! * [`geometry`]: closed-form rates, waists and capacities of both layouts.
//! * [`partitions`]: translation-canonical pattern counts and patch catalogs.
//! * [`optics`]: Fourier-optics hologram synthesis and figures of merit.
//! * [`scheduler`]: gate layers compiled into timed control events.
//! * [`config`]: the tool's configuration file format.
//!
//! Data-parallel loops go through [`Exec`]; building without the default
//! `parallel` feature makes every policy run sequentially.

pub mod config;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod optics;
pub mod partitions;
pub mod scheduler;

pub use error::{Error, Result};
pub use exec::Exec;
