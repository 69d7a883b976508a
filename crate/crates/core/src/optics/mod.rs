//! Fourier-optics hologram engine.

pub mod fft;
pub mod field;
pub mod hologram;
pub mod metrics;
pub mod pgm;
pub mod sweep;
pub mod tones;

pub use field::{flattop_field, gaussian_field, lens_fourier, lens_inverse, FieldGrid, Lens, Plane};
pub use hologram::{gs_refine, make_hologram, quantize_phase, ArrayRegion, PhaseMask};
pub use metrics::{measure, propagate, propagate_and_measure, HologramMetrics, SpotShape, TargetSpec};
pub use sweep::{simulate, sweep_pixels, ShapeKind, SimulationConfig, SweepRow, BENCHMARK_SITES};
pub use tones::{multi_tone_replicate, Replica, Tone};
