//! End-to-end hologram benchmark: one SLM patch addressing a small array.

use std::fmt;
use std::str::FromStr;

use super::field::{flattop_field, gaussian_field, lens_inverse_in_place, FieldGrid, Lens, Plane};
use super::hologram::{gs_refine, make_hologram, make_hologram_owned, PhaseMask};
use super::metrics::{measure, propagate, HologramMetrics, SpotShape, TargetSpec, DEFAULT_CAPTURE_RADIUS};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry;
use crate::partitions::{AddressPattern, Site};

/// Target order used when a benchmark asks for `k` sites: the first `k`.
/// No two share a row or column, which keeps pairwise interference between
/// the steering gratings out of the accuracy figure.
pub const BENCHMARK_SITES: [(u32, u32); 4] = [(3, 3), (2, 1), (0, 2), (1, 0)];

pub fn benchmark_pattern(k: usize) -> Result<AddressPattern> {
    if k == 0 || k > BENCHMARK_SITES.len() {
        return Err(Error::domain(format!(
            "benchmark supports 1..={} targets, got {k}",
            BENCHMARK_SITES.len()
        )));
    }
    AddressPattern::new(BENCHMARK_SITES[..k].iter().map(|&(r, c)| Site::new(r, c)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeKind {
    Gaussian,
    Flattop,
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShapeKind::Gaussian => "gaussian",
            ShapeKind::Flattop => "flattop",
        })
    }
}

impl FromStr for ShapeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(ShapeKind::Gaussian),
            "flattop" => Ok(ShapeKind::Flattop),
            other => Err(Error::Config(format!(
                "unknown shape '{other}' (expected gaussian or flattop)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    /// Samples per axis, a power of two.
    pub grid_n: usize,
    pub sim_per_slm: usize,
    /// Phase resolution of the SLM; `None` for continuous phase.
    pub bits: Option<u32>,
    pub slm_pitch: f64,
    pub focal_length: f64,
    pub wavelength: f64,
    pub q_slm: f64,
    pub q_a: f64,
    pub array_dim: u32,
    pub capture_radius_factor: f64,
    /// Gerchberg-Saxton iterations after the direct hologram; 0 disables.
    pub gs_iterations: usize,
    /// Upper bound on simultaneous instance memory during sweeps, bytes.
    pub memory_budget: usize,
}

impl SimulationConfig {
    /// Reduced grid that keeps a full sweep to about a minute.
    pub fn desk() -> Self {
        SimulationConfig {
            grid_n: 4096,
            sim_per_slm: 4,
            bits: Some(10),
            slm_pitch: 12.5e-6,
            focal_length: 23e-3,
            wavelength: 459e-9,
            q_slm: 5.0,
            q_a: 3.0,
            array_dim: 4,
            capture_radius_factor: DEFAULT_CAPTURE_RADIUS,
            gs_iterations: 0,
            memory_budget: 2 << 30,
        }
    }

    /// 8192-sample grid with five samples per SLM pixel.
    pub fn full_resolution() -> Self {
        SimulationConfig {
            grid_n: 8192,
            sim_per_slm: 5,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 2 || !self.grid_n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid_n must be a power of two, got {}",
                self.grid_n
            )));
        }
        if self.sim_per_slm == 0 {
            return Err(Error::Config("sim_per_slm must be >= 1".into()));
        }
        if let Some(b) = self.bits {
            if !(1..=32).contains(&b) {
                return Err(Error::Config(format!("bits must be in 1..=32, got {b}")));
            }
        }
        for (name, v) in [
            ("slm_pitch", self.slm_pitch),
            ("focal_length", self.focal_length),
            ("wavelength", self.wavelength),
            ("q_slm", self.q_slm),
            ("q_a", self.q_a),
            ("capture_radius_factor", self.capture_radius_factor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.array_dim == 0 {
            return Err(Error::Config("array_dim must be >= 1".into()));
        }
        Ok(())
    }

    pub fn lens(&self) -> Result<Lens> {
        Lens::new(self.focal_length, self.wavelength)
    }

    /// Simulation sample pitch in the SLM plane.
    pub fn slm_sample_pitch(&self) -> f64 {
        self.slm_pitch / self.sim_per_slm as f64
    }

    /// Addressing waist at the atoms for a square patch of `pixels` per axis.
    pub fn addressing_waist(&self, pixels: u32) -> Result<f64> {
        geometry::waist_at_atoms(
            self.focal_length,
            self.wavelength,
            self.q_slm,
            pixels as f64 * self.slm_pitch,
        )
    }

    /// Peak memory of one instance: two full complex grids.
    pub fn instance_bytes(&self) -> usize {
        2 * self.grid_n * self.grid_n * std::mem::size_of::<num_complex::Complex64>()
    }
}

/// Fields and target of one benchmark instance.
pub struct Instance {
    pub input: FieldGrid,
    pub spec: TargetSpec,
    pub lens: Lens,
    pub pixels: usize,
}

impl Instance {
    pub fn new(
        cfg: &SimulationConfig,
        pixels: u32,
        sites: &AddressPattern,
        shape: ShapeKind,
        exec: Exec,
    ) -> Result<Self> {
        cfg.validate()?;
        if pixels == 0 {
            return Err(Error::domain("patch must have at least one pixel"));
        }
        let lens = cfg.lens()?;
        let n = cfg.grid_n;
        let m = pixels as usize * cfg.sim_per_slm;
        if m > n {
            return Err(Error::domain(format!(
                "{pixels}-pixel patch needs {m} samples, grid has {n}"
            )));
        }
        let dx = cfg.slm_sample_pitch();
        let du = lens.conjugate_pitch(n, dx);
        let w_a = cfg.addressing_waist(pixels)?;
        let spot = match shape {
            ShapeKind::Gaussian => SpotShape::Gaussian { waist: w_a },
            ShapeKind::Flattop => SpotShape::Flattop { side: 2.0 * w_a },
        };
        let mut spec = TargetSpec::new(cfg.array_dim, cfg.q_a, w_a, sites.clone(), spot)?;
        spec.capture_radius_factor = cfg.capture_radius_factor;
        let input = match shape {
            ShapeKind::Gaussian => {
                let w_slm = pixels as f64 * cfg.slm_pitch / cfg.q_slm;
                gaussian_field(n, dx, w_slm, (0.0, 0.0), Plane::Slm)?
            }
            // A flattop generator ahead of the SLM: the illumination is the
            // field that focuses to an on-axis square of the target size.
            ShapeKind::Flattop => {
                let mut f = flattop_field(n, du, 2.0 * w_a, (0.0, 0.0), Plane::Array)?;
                lens_inverse_in_place(&mut f, &lens, exec);
                f
            }
        };
        Ok(Instance {
            input,
            spec,
            lens,
            pixels: pixels as usize,
        })
    }

    pub fn target(&self) -> Result<FieldGrid> {
        self.spec.target_field(self.input.n(), self.lens.conjugate_pitch(self.input.n(), self.input.pitch()))
    }

    /// Direct hologram, then optional refinement restricted to the array.
    pub fn hologram(&self, cfg: &SimulationConfig, exec: Exec) -> Result<PhaseMask> {
        let s = cfg.sim_per_slm;
        if cfg.gs_iterations == 0 {
            return make_hologram_owned(&self.input, self.target()?, &self.lens, self.pixels, s, cfg.bits, exec);
        }
        let target = self.target()?;
        let mask = make_hologram(&self.input, &target, &self.lens, self.pixels, s, cfg.bits, exec)?;
        gs_refine(
            &self.input,
            &target,
            &self.lens,
            &mask,
            cfg.gs_iterations,
            Some(self.spec.signal_region()),
            exec,
        )
    }

    pub fn evaluate(&self, mask: &PhaseMask, exec: Exec) -> Result<HologramMetrics> {
        let out = propagate(&self.input, mask, &self.lens, exec)?;
        measure(&out, self.input.power(), &self.spec)
    }
}

/// Builds, propagates and measures one hologram.
pub fn simulate(
    cfg: &SimulationConfig,
    pixels: u32,
    sites: &AddressPattern,
    shape: ShapeKind,
    exec: Exec,
) -> Result<HologramMetrics> {
    let inst = Instance::new(cfg, pixels, sites, shape, exec)?;
    let mask = inst.hologram(cfg, exec)?;
    inst.evaluate(&mask, exec)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub pixels: u32,
    pub n_targets: usize,
    pub shape: ShapeKind,
    pub metrics: HologramMetrics,
}

pub const SWEEP_CSV_HEADER: &str = "pixels_per_axis,n_targets,shape,efficiency,accuracy,crosstalk";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6}",
            self.pixels,
            self.n_targets,
            self.shape,
            self.metrics.efficiency,
            self.metrics.accuracy,
            self.metrics.crosstalk
        )
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// Every combination of patch size and target pattern, in pixel-major order.
///
/// Instances run concurrently only as far as `memory_budget` allows.
pub fn sweep_pixels(
    cfg: &SimulationConfig,
    pixel_counts: &[u32],
    patterns: &[AddressPattern],
    shape: ShapeKind,
    exec: Exec,
) -> Result<Vec<SweepRow>> {
    if pixel_counts.is_empty() || patterns.is_empty() {
        return Err(Error::domain("sweep needs at least one pixel count and one pattern"));
    }
    cfg.validate()?;
    let jobs: Vec<(u32, &AddressPattern)> = pixel_counts
        .iter()
        .flat_map(|&p| patterns.iter().map(move |t| (p, t)))
        .collect();
    let width = (cfg.memory_budget / cfg.instance_bytes().max(1)).max(1);
    let mut rows = Vec::with_capacity(jobs.len());
    for group in jobs.chunks(width) {
        let results = exec.map(group, |&(p, t)| simulate(cfg, p, t, shape, exec));
        for (&(p, t), r) in group.iter().zip(results) {
            rows.push(SweepRow {
                pixels: p,
                n_targets: t.len(),
                shape,
                metrics: r?,
            });
        }
    }
    Ok(rows)
}

/// Patch sizes of the standard sweep.
pub const SWEEP_PIXELS: [u32; 5] = [16, 32, 48, 64, 80];

/// The standard sweep: five patch sizes by one to four benchmark targets.
pub fn standard_sweep(cfg: &SimulationConfig, shape: ShapeKind, exec: Exec) -> Result<Vec<SweepRow>> {
    let patterns = (1..=BENCHMARK_SITES.len())
        .map(benchmark_pattern)
        .collect::<Result<Vec<_>>>()?;
    sweep_pixels(cfg, &SWEEP_PIXELS, &patterns, shape, exec)
}
