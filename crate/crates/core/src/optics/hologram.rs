//! Phase-only holograms on a pixelated SLM patch.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::field::{lens_fourier_in_place, lens_inverse, lens_inverse_in_place, FieldGrid, Lens, Plane};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Block sums below this fraction of the largest one get phase 0.
pub const ZERO_AMPLITUDE_FRACTION: f64 = 1e-12;

/// Phase per SLM pixel, row-major, values in `[0, 2 pi)`.
///
/// Each SLM pixel covers `sim_per_slm x sim_per_slm` simulation samples, and
/// the patch is centred on the optical axis of the simulation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseMask {
    pub phases: Vec<f64>,
    pub slm_pixels: usize,
    pub sim_per_slm: usize,
    /// Phase resolution; `None` for an unquantized mask.
    pub bits: Option<u32>,
}

impl PhaseMask {
    pub fn flat(slm_pixels: usize, sim_per_slm: usize, bits: Option<u32>) -> Self {
        PhaseMask {
            phases: vec![0.0; slm_pixels * slm_pixels],
            slm_pixels,
            sim_per_slm,
            bits,
        }
    }

    /// Side of the patch in simulation samples.
    pub fn patch_samples(&self) -> usize {
        self.slm_pixels * self.sim_per_slm
    }

    pub fn phase(&self, row: usize, col: usize) -> f64 {
        self.phases[row * self.slm_pixels + col]
    }

    /// Phase at simulation sample `(row, col)` of the patch.
    pub fn sample_phase(&self, row: usize, col: usize) -> f64 {
        self.phase(row / self.sim_per_slm, col / self.sim_per_slm)
    }

    /// Input field times the mask inside the patch, zero outside.
    pub fn apply(&self, input: &FieldGrid) -> Result<FieldGrid> {
        let n = input.n();
        let m = self.patch_samples();
        let start = patch_start(n, m)?;
        let mut out = FieldGrid::zeros(n, input.pitch(), input.plane())?;
        let src = input.data();
        let dst = out.data_mut();
        for r in 0..m {
            let row = (start + r) * n + start;
            for c in 0..m {
                let ph = self.sample_phase(r, c);
                dst[row + c] = src[row + c] * Complex64::from_polar(1.0, ph);
            }
        }
        Ok(out)
    }
}

/// First sample index of an `m`-sample patch centred on an `n`-sample grid.
pub fn patch_start(n: usize, m: usize) -> Result<usize> {
    if m == 0 || m > n {
        return Err(Error::domain(format!(
            "a {m}-sample patch does not fit a {n}-sample grid"
        )));
    }
    Ok(n / 2 - m / 2)
}

/// Nearest of the `2^bits` levels `2 pi j / 2^bits`, wrapped into `[0, 2 pi)`.
pub fn quantize_value(phase: f64, bits: u32) -> f64 {
    let levels = (1u64 << bits) as f64;
    let j = (phase.rem_euclid(TAU) / TAU * levels).round() % levels;
    TAU * j / levels
}

/// Rounds every phase of `mask` onto the `2^bits`-level grid.
pub fn quantize_phase(mask: &PhaseMask, bits: u32) -> Result<PhaseMask> {
    if !(1..=32).contains(&bits) {
        return Err(Error::domain(format!("bits must be in 1..=32, got {bits}")));
    }
    Ok(PhaseMask {
        phases: mask.phases.iter().map(|&p| quantize_value(p, bits)).collect(),
        bits: Some(bits),
        ..mask.clone()
    })
}

/// Mask whose phase per SLM pixel is the argument of the block sum of
/// `desired * conj(input)` in the SLM plane.
pub fn hologram_from_slm_field(
    input: &FieldGrid,
    desired: &FieldGrid,
    slm_pixels: usize,
    sim_per_slm: usize,
    bits: Option<u32>,
    exec: Exec,
) -> Result<PhaseMask> {
    let n = input.n();
    if desired.n() != n || input.plane() != Plane::Slm || desired.plane() != Plane::Slm {
        return Err(Error::domain("both fields must share one SLM-plane grid"));
    }
    if sim_per_slm == 0 {
        return Err(Error::domain("sim_per_slm must be >= 1"));
    }
    if let Some(b) = bits {
        if !(1..=32).contains(&b) {
            return Err(Error::domain(format!("bits must be in 1..=32, got {b}")));
        }
    }
    let m = slm_pixels * sim_per_slm;
    let start = patch_start(n, m)?;
    let (inp, des) = (input.data(), desired.data());
    let rows: Vec<usize> = (0..slm_pixels).collect();
    let sums: Vec<Complex64> = exec
        .map(&rows, |&pr| {
            let mut acc = vec![Complex64::new(0.0, 0.0); slm_pixels];
            for sr in 0..sim_per_slm {
                let base = (start + pr * sim_per_slm + sr) * n + start;
                for (pc, a) in acc.iter_mut().enumerate() {
                    for sc in 0..sim_per_slm {
                        let i = base + pc * sim_per_slm + sc;
                        *a += des[i] * inp[i].conj();
                    }
                }
            }
            acc
        })
        .into_iter()
        .flatten()
        .collect();
    let peak = sums.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = peak * ZERO_AMPLITUDE_FRACTION;
    let phases = sums
        .iter()
        .map(|z| {
            if z.norm() <= floor {
                0.0
            } else {
                let p = z.arg().rem_euclid(TAU);
                match bits {
                    Some(b) => quantize_value(p, b),
                    None => p,
                }
            }
        })
        .collect();
    Ok(PhaseMask {
        phases,
        slm_pixels,
        sim_per_slm,
        bits,
    })
}

fn check_conjugate(input: &FieldGrid, target: &FieldGrid, lens: &Lens) -> Result<()> {
    if input.plane() != Plane::Slm || target.plane() != Plane::Array {
        return Err(Error::domain("input must be in the SLM plane and target in the array plane"));
    }
    if input.n() != target.n() {
        return Err(Error::domain("input and target grids differ in size"));
    }
    let want = lens.conjugate_pitch(input.n(), input.pitch());
    if ((target.pitch() - want) / want).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "target pitch {} is not the lens conjugate {want} of the input pitch",
            target.pitch()
        )));
    }
    Ok(())
}

/// Phase hologram steering `input` onto `target`: the phase of the
/// back-propagated target relative to the input, averaged over each SLM pixel.
pub fn make_hologram(
    input: &FieldGrid,
    target: &FieldGrid,
    lens: &Lens,
    slm_pixels: usize,
    sim_per_slm: usize,
    bits: Option<u32>,
    exec: Exec,
) -> Result<PhaseMask> {
    check_conjugate(input, target, lens)?;
    let back = lens_inverse(target, lens, exec);
    hologram_from_slm_field(input, &back, slm_pixels, sim_per_slm, bits, exec)
}

/// [`make_hologram`] that reuses the target's storage for the back-propagation.
pub fn make_hologram_owned(
    input: &FieldGrid,
    mut target: FieldGrid,
    lens: &Lens,
    slm_pixels: usize,
    sim_per_slm: usize,
    bits: Option<u32>,
    exec: Exec,
) -> Result<PhaseMask> {
    check_conjugate(input, &target, lens)?;
    lens_inverse_in_place(&mut target, lens, exec);
    hologram_from_slm_field(input, &target, slm_pixels, sim_per_slm, bits, exec)
}

/// Axis-aligned rectangle in the array plane, physical units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrayRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl ArrayRegion {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Inclusive sample index range `(lo, hi)` covered along one axis.
    pub(crate) fn index_range(lo: f64, hi: f64, grid: &FieldGrid) -> Option<(usize, usize)> {
        let a = grid.index_of(lo).ceil();
        let b = grid.index_of(hi).floor();
        if a < 0.0 || b > (grid.n() - 1) as f64 || a > b {
            return None;
        }
        Some((a as usize, b as usize))
    }
}

/// Power bookkeeping for one refinement iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GsStep {
    /// Array-plane power before the amplitude projection.
    pub power_before: f64,
    /// Array-plane power after the amplitude projection.
    pub power_after: f64,
}

/// Gerchberg-Saxton refinement of `initial`.
///
/// In the array plane the target amplitude is imposed inside `region` (the
/// whole plane when `None`), rescaled to the power currently inside it;
/// samples outside are left free. In the SLM plane the input amplitude is
/// imposed with one phase per SLM pixel. The result is quantized to the
/// resolution of `initial`.
pub fn gs_refine(
    input: &FieldGrid,
    target: &FieldGrid,
    lens: &Lens,
    initial: &PhaseMask,
    iterations: usize,
    region: Option<ArrayRegion>,
    exec: Exec,
) -> Result<PhaseMask> {
    gs_refine_traced(input, target, lens, initial, iterations, region, exec).map(|(m, _)| m)
}

pub fn gs_refine_traced(
    input: &FieldGrid,
    target: &FieldGrid,
    lens: &Lens,
    initial: &PhaseMask,
    iterations: usize,
    region: Option<ArrayRegion>,
    exec: Exec,
) -> Result<(PhaseMask, Vec<GsStep>)> {
    check_conjugate(input, target, lens)?;
    if iterations == 0 {
        return Ok((initial.clone(), Vec::new()));
    }
    let n = target.n();
    let (rows, cols) = match region {
        Some(r) => (
            ArrayRegion::index_range(r.y_min, r.y_max, target),
            ArrayRegion::index_range(r.x_min, r.x_max, target),
        ),
        None => (Some((0, n - 1)), Some((0, n - 1))),
    };
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) => (r, c),
        _ => return Err(Error::domain("refinement region lies outside the array-plane grid")),
    };
    let amp = target.data();
    let target_sq: f64 = (rows.0..=rows.1)
        .flat_map(|r| (cols.0..=cols.1).map(move |c| amp[r * n + c].norm_sqr()))
        .sum();
    if target_sq <= 0.0 {
        return Err(Error::domain("target has no power inside the refinement region"));
    }
    let mut mask = PhaseMask {
        bits: None,
        ..initial.clone()
    };
    let mut trace = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut field = mask.apply(input)?;
        lens_fourier_in_place(&mut field, lens, exec);
        let power_before = field.power();
        let data = field.data_mut();
        let p_region: f64 = (rows.0..=rows.1)
            .flat_map(|r| (cols.0..=cols.1).map(move |c| r * n + c))
            .map(|i| data[i].norm_sqr())
            .sum();
        let scale = (p_region / target_sq).sqrt();
        for r in rows.0..=rows.1 {
            for c in cols.0..=cols.1 {
                let i = r * n + c;
                let ph = if data[i].norm_sqr() > 0.0 { data[i].arg() } else { 0.0 };
                data[i] = Complex64::from_polar(amp[i].norm() * scale, ph);
            }
        }
        let power_after = field.power();
        trace.push(GsStep {
            power_before,
            power_after,
        });
        lens_inverse_in_place(&mut field, lens, exec);
        mask = hologram_from_slm_field(input, &field, mask.slm_pixels, mask.sim_per_slm, None, exec)?;
    }
    let mask = match initial.bits {
        Some(b) => quantize_phase(&mask, b)?,
        None => mask,
    };
    Ok((mask, trace))
}
