//! 16-bit binary portable graymap (P5) dumps for visual inspection.
//!
//! Values are written row-major, big-endian, maxval 65535. Phase masks map
//! `[0, 2 pi)` linearly onto `[0, 65535]`; intensities map `[0, peak]`
//! linearly, so a stored value `v` means `v / 65535` of the peak.

use std::f64::consts::TAU;
use std::io::Write;

use super::field::FieldGrid;
use super::hologram::PhaseMask;
use crate::error::Result;

fn write_p5<W: Write>(mut w: W, width: usize, height: usize, values: impl Iterator<Item = f64>) -> Result<()> {
    write!(w, "P5\n{width} {height}\n65535\n")?;
    let mut buf = Vec::with_capacity(width * height * 2);
    for v in values {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        buf.extend_from_slice(&q.to_be_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// One value per SLM pixel, scaled from `[0, 2 pi)`.
pub fn write_mask<W: Write>(w: W, mask: &PhaseMask) -> Result<()> {
    let n = mask.slm_pixels;
    write_p5(w, n, n, mask.phases.iter().map(|p| p / TAU))
}

/// Intensity of a field, scaled to its peak.
pub fn write_intensity<W: Write>(w: W, field: &FieldGrid) -> Result<()> {
    let peak = field.data().iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let s = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    write_p5(w, field.n(), field.n(), field.data().iter().map(|v| v.norm_sqr() * s))
}
