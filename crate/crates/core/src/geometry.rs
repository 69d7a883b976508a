//! Closed-form performance model of the two hybrid scanner layouts.
//!
//! Configuration 1 uses one 2D deflector (AOD A) to pick a patch on a
//! segmented SLM and a second (AOD B) to undo the momentum kick; every patch
//! addresses the full qubit array. Configuration 2 adds a third deflector
//! (AOD C) that moves the image of a small sub-array across a much larger
//! array.
//!
//! All formula outputs are real-valued. Turning a continuous count into a
//! usable integer is a separate step ([`usable_count`]), so the formulas
//! themselves can be checked exactly.
//!
//! Argument convention: quantities that appear as divisors must be strictly
//! positive, multiplicative quantities must be non-negative. Anything else
//! (including NaN) is a [`Error::Domain`].

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::partitions;

/// Slack added before flooring a continuous count (6.948 resolvable spots
/// still support 7 partitions).
pub const COUNT_ROUNDING_SLACK: f64 = 0.1;

/// Integer count supported by a continuous formula value: `floor(x + 0.1)`.
pub fn usable_count(value: f64) -> u32 {
    (value + COUNT_ROUNDING_SLACK).floor().max(0.0) as u32
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::domain(format!("{name} must be > 0, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::domain(format!("{name} must be >= 0, got {v}")))
    }
}

/// Scanner description shared by both configurations. SI units throughout.
#[derive(Clone, Debug, PartialEq)]
pub struct ScannerParams {
    /// SLM patch length over beam waist on the SLM.
    pub q_slm: f64,
    /// Site spacing over addressing waist at the atoms.
    pub q_a: f64,
    /// AOD A aperture over beam waist inside AOD A (AOD B uses the same waist).
    pub q_aod_a: f64,
    /// AOD C aperture over beam waist inside AOD C. Configuration 2 only.
    pub q_aod_c: Option<f64>,
    /// Time-bandwidth product of each AOD.
    pub tbw: f64,
    /// Acoustic transit time across the AOD aperture, seconds.
    pub t_aod: f64,
    /// Full-frame SLM refresh rate, hertz.
    pub r_slm: f64,
    pub wavelength: f64,
    pub focal_length: f64,
    pub slm_pixels_x: u32,
    pub slm_pixels_y: u32,
    pub partitions_x: u32,
    pub partitions_y: u32,
    /// Multiplier on the two-pixels-per-fringe minimum when sizing the
    /// per-site pixel budget.
    pub conservative_factor: f64,
    /// RF frequency at the centre of the AOD band, hertz.
    pub aod_center_frequency: f64,
    /// Diffraction order used by the addressing AODs (+1 or -1).
    pub aod_order: i32,
}

impl Default for ScannerParams {
    /// Reference design: TBW 575, 11.5 us aperture time, q_SLM = 5, q_a = 3,
    /// 459 nm light through a 23 mm lens and a 1000 x 1000 SLM at 1 kHz.
    fn default() -> Self {
        ScannerParams {
            q_slm: 5.0,
            q_a: 3.0,
            q_aod_a: 52.0,
            q_aod_c: Some(30.0),
            tbw: 575.0,
            t_aod: 11.5e-6,
            r_slm: 1.0e3,
            wavelength: 459e-9,
            focal_length: 23e-3,
            slm_pixels_x: 1000,
            slm_pixels_y: 1000,
            partitions_x: 7,
            partitions_y: 7,
            conservative_factor: 2.0,
            aod_center_frequency: 75e6,
            aod_order: 1,
        }
    }
}

impl ScannerParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("q_slm", self.q_slm),
            ("q_a", self.q_a),
            ("q_aod_a", self.q_aod_a),
            ("tbw", self.tbw),
            ("t_aod", self.t_aod),
            ("r_slm", self.r_slm),
            ("wavelength", self.wavelength),
            ("focal_length", self.focal_length),
            ("conservative_factor", self.conservative_factor),
        ] {
            positive(name, v)?;
        }
        if let Some(q) = self.q_aod_c {
            positive("q_aod_c", q)?;
        }
        non_negative("aod_center_frequency", self.aod_center_frequency)?;
        if self.aod_order != 1 && self.aod_order != -1 {
            return Err(Error::domain(format!(
                "aod_order must be +1 or -1, got {}",
                self.aod_order
            )));
        }
        if self.partitions_x == 0 || self.partitions_y == 0 {
            return Err(Error::domain("partition counts must be >= 1"));
        }
        if self.slm_pixels_x < self.partitions_x || self.slm_pixels_y < self.partitions_y {
            return Err(Error::domain(format!(
                "{}x{} SLM cannot hold {}x{} partitions",
                self.slm_pixels_x, self.slm_pixels_y, self.partitions_x, self.partitions_y
            )));
        }
        Ok(())
    }

    /// Whole SLM pixels per partition along the tighter axis. Leftover pixels
    /// when the resolution is not a multiple of the partition count go unused.
    pub fn pixels_per_partition(&self) -> u32 {
        (self.slm_pixels_x / self.partitions_x).min(self.slm_pixels_y / self.partitions_y)
    }

    pub fn q_aod_c(&self) -> Result<f64> {
        self.q_aod_c
            .ok_or_else(|| Error::domain("q_aod_c is required for configuration 2"))
    }

    /// RF frequency step that moves the AOD C image by one array site.
    ///
    /// The addressable dimension spans the whole band, so the step is
    /// `(TBW / T_AOD) / N_q = q_aod_c * q_a / (pi * T_AOD)`.
    pub fn site_frequency_step(&self) -> Result<f64> {
        Ok(self.q_aod_c()? * self.q_a / (PI * self.t_aod))
    }
}

/// Resolvable spots of AOD A that fit on the SLM: `pi * TBW / (q_aod_a * q_slm)`.
pub fn resolvable_spots(q_aod_a: f64, q_slm: f64, tbw: f64) -> Result<f64> {
    Ok(PI * non_negative("tbw", tbw)?
        / (positive("q_aod_a", q_aod_a)? * positive("q_slm", q_slm)?))
}

/// Beam waist at the high-NA lens that focuses to `w_a`: `f * lambda / (pi * w_a)`.
pub fn lens_waist(focal_length: f64, wavelength: f64, w_a: f64) -> Result<f64> {
    Ok(non_negative("focal_length", focal_length)? * non_negative("wavelength", wavelength)?
        / (PI * positive("w_a", w_a)?))
}

/// Beam walk at the high-NA lens without k-vector correction:
/// `q_slm * w_lens * sqrt(N_x^2 + N_y^2) / 2`.
pub fn max_displacement(q_slm: f64, w_lens: f64, n_x: u32, n_y: u32) -> Result<f64> {
    if n_x == 0 || n_y == 0 {
        return Err(Error::domain("partition counts must be >= 1"));
    }
    let (nx, ny) = (n_x as f64, n_y as f64);
    Ok(non_negative("q_slm", q_slm)? * non_negative("w_lens", w_lens)? * nx.hypot(ny) / 2.0)
}

/// Full 2 pi fringes across a patch needed to move the focus by one site:
/// `q_a * q_slm / pi`.
pub fn fringes_per_site(q_a: f64, q_slm: f64) -> Result<f64> {
    Ok(non_negative("q_a", q_a)? * non_negative("q_slm", q_slm)? / PI)
}

/// Pixel budget per site along one axis: two pixels per fringe scaled by
/// `conservative_factor`, rounded up to whole pixels.
pub fn pixels_per_site(q_a: f64, q_slm: f64, conservative_factor: f64) -> Result<u32> {
    let v = fringes_per_site(q_a, q_slm)?;
    Ok((2.0 * positive("conservative_factor", conservative_factor)? * v).ceil() as u32)
}

/// Sites addressable along one axis by a patch of `n_pixels_axis` pixels:
/// `pi * n / (2 * q_a * q_slm)`.
pub fn max_addressable_sites(n_pixels_axis: f64, q_a: f64, q_slm: f64) -> Result<f64> {
    Ok(PI * non_negative("n_pixels_axis", n_pixels_axis)?
        / (2.0 * positive("q_a", q_a)? * positive("q_slm", q_slm)?))
}

/// Addressing waist produced by a patch of length `l_slm`:
/// `f * lambda * q_slm / (pi * l_slm)`.
pub fn waist_at_atoms(focal_length: f64, wavelength: f64, q_slm: f64, l_slm: f64) -> Result<f64> {
    Ok(non_negative("focal_length", focal_length)?
        * non_negative("wavelength", wavelength)?
        * non_negative("q_slm", q_slm)?
        / (PI * positive("l_slm", l_slm)?))
}

/// Whether an `n_q`-wide image fits in AOD B with a 2-waist margin at each
/// edge: `4 + q_a * (n_q - 1) <= q_aod_a`.
pub fn aod_b_aperture_ok(q_aod_a: f64, q_a: f64, n_q: u32) -> Result<bool> {
    positive("q_aod_a", q_aod_a)?;
    positive("q_a", q_a)?;
    if n_q == 0 {
        return Err(Error::domain("n_q must be >= 1"));
    }
    Ok(4.0 + q_a * (n_q as f64 - 1.0) <= q_aod_a)
}

/// Upper bound on the AOD A/B transition time between patches:
/// `t_aod * (4 + q_a * n_q) / q_aod_a`.
pub fn burst_time_c1(t_aod: f64, q_a: f64, n_q: u32, q_aod_a: f64) -> Result<f64> {
    if n_q == 0 {
        return Err(Error::domain("n_q must be >= 1"));
    }
    Ok(non_negative("t_aod", t_aod)? * (4.0 + non_negative("q_a", q_a)? * n_q as f64)
        / positive("q_aod_a", q_aod_a)?)
}

/// Mean time per transition when every patch is used once per SLM frame:
/// `1 / (N_x * N_y * r_slm) + T_burst`.
pub fn average_time_c1(
    partitions_x: u32,
    partitions_y: u32,
    r_slm: f64,
    burst_time: f64,
) -> Result<f64> {
    if partitions_x == 0 || partitions_y == 0 {
        return Err(Error::domain("partition counts must be >= 1"));
    }
    let frames = partitions_x as f64 * partitions_y as f64;
    Ok(1.0 / (frames * positive("r_slm", r_slm)?) + non_negative("burst_time", burst_time)?)
}

/// Array dimension reachable by AOD C: `pi * TBW / (q_aod_c * q_a)`.
pub fn addressable_array_c2(q_aod_c: f64, q_a: f64, tbw: f64) -> Result<f64> {
    Ok(PI * non_negative("tbw", tbw)?
        / (positive("q_aod_c", q_aod_c)? * positive("q_a", q_a)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitingDeflector {
    AodB,
    AodC,
}

impl std::fmt::Display for LimitingDeflector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LimitingDeflector::AodB => "AOD_B",
            LimitingDeflector::AodC => "AOD_C",
        })
    }
}

/// Configuration-2 scanner transition time, the slower of AOD B and AOD C.
///
/// The AOD B term spans `sub_m - 1` site pitches, consistent with the
/// clipping condition. Ties go to AOD C.
pub fn transition_time_c2(
    t_aod_b: f64,
    q_a: f64,
    sub_m: u32,
    q_aod_a: f64,
    t_aod_c: f64,
    q_aod_c: f64,
) -> Result<(f64, LimitingDeflector)> {
    if sub_m == 0 {
        return Err(Error::domain("sub_m must be >= 1"));
    }
    let b = non_negative("t_aod_b", t_aod_b)?
        * (4.0 + non_negative("q_a", q_a)? * (sub_m as f64 - 1.0))
        / positive("q_aod_a", q_aod_a)?;
    let c = 4.0 * non_negative("t_aod_c", t_aod_c)? / positive("q_aod_c", q_aod_c)?;
    Ok(if c >= b {
        (c, LimitingDeflector::AodC)
    } else {
        (b, LimitingDeflector::AodB)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config1Report {
    pub n_resolvable: f64,
    pub max_partitions_per_axis: u32,
    /// Configured partitions fit within `max_partitions_per_axis`.
    pub partitions_ok: bool,
    pub pixels_per_partition: u32,
    pub pixels_per_site: u32,
    /// Array dimension addressed by each patch at the conservative pixel budget.
    pub n_q: u32,
    /// Upper limit from the two-pixels-per-fringe bound.
    pub n_q_max: u32,
    pub burst_time: f64,
    pub burst_rate: f64,
    pub average_time: f64,
    pub average_rate: f64,
    pub aperture_ok: bool,
}

pub fn config1_report(params: &ScannerParams) -> Result<Config1Report> {
    params.validate()?;
    let n_resolvable = resolvable_spots(params.q_aod_a, params.q_slm, params.tbw)?;
    let max_partitions_per_axis = usable_count(n_resolvable);
    let pixels_per_partition = params.pixels_per_partition();
    let pixels_per_site = pixels_per_site(params.q_a, params.q_slm, params.conservative_factor)?;
    let n_q = pixels_per_partition / pixels_per_site;
    if n_q == 0 {
        return Err(Error::domain(format!(
            "{pixels_per_partition}-pixel partitions cannot address a single site \
             ({pixels_per_site} pixels per site)"
        )));
    }
    let n_q_max = max_addressable_sites(pixels_per_partition as f64, params.q_a, params.q_slm)?
        .floor() as u32;
    let burst_time = burst_time_c1(params.t_aod, params.q_a, n_q, params.q_aod_a)?;
    let average_time =
        average_time_c1(params.partitions_x, params.partitions_y, params.r_slm, burst_time)?;
    Ok(Config1Report {
        n_resolvable,
        max_partitions_per_axis,
        partitions_ok: params.partitions_x.max(params.partitions_y) <= max_partitions_per_axis,
        pixels_per_partition,
        pixels_per_site,
        n_q,
        n_q_max,
        burst_time,
        burst_rate: 1.0 / burst_time,
        average_time,
        average_rate: 1.0 / average_time,
        aperture_ok: aod_b_aperture_ok(params.q_aod_a, params.q_a, n_q)?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config2Report {
    /// Continuous value of the addressable dimension.
    pub n_q_continuous: f64,
    pub n_q: u32,
    pub transition_time: f64,
    pub transition_rate: f64,
    pub limiting_deflector: LimitingDeflector,
    /// Largest simultaneous-site count whose full catalog fits on the SLM.
    pub k_max: u32,
    /// Patterns of the next level that still fit in the spare patches.
    pub spare_next_level: u128,
    /// Total patterns of the next level.
    pub next_level_total: u128,
}

impl Config2Report {
    /// `k_max`, suffixed with `+` when more than half of the next level fits.
    pub fn k_max_label(&self) -> String {
        if self.next_level_total > 0 && 2 * self.spare_next_level > self.next_level_total {
            format!("{}+", self.k_max)
        } else {
            self.k_max.to_string()
        }
    }
}

pub fn config2_report(params: &ScannerParams, sub_m: u32, sub_n: u32) -> Result<Config2Report> {
    params.validate()?;
    if sub_m == 0 || sub_n == 0 {
        return Err(Error::domain("sub-array dimensions must be >= 1"));
    }
    let q_aod_c = params.q_aod_c()?;
    let n_q_continuous = addressable_array_c2(q_aod_c, params.q_a, params.tbw)?;
    let (transition_time, limiting_deflector) = transition_time_c2(
        params.t_aod,
        params.q_a,
        sub_m.max(sub_n),
        params.q_aod_a,
        params.t_aod,
        q_aod_c,
    )?;
    let available = params.partitions_x as u128 * params.partitions_y as u128;
    let sites = sub_m * sub_n;
    let mut k_max = 0;
    let mut used = 0u128;
    while k_max < sites {
        let next = partitions::partition_count(sub_m, sub_n, k_max + 1)?;
        if used + next > available {
            break;
        }
        used += next;
        k_max += 1;
    }
    let next_level_total = if k_max < sites {
        partitions::partition_count(sub_m, sub_n, k_max + 1)?
    } else {
        0
    };
    Ok(Config2Report {
        n_q_continuous,
        n_q: usable_count(n_q_continuous),
        transition_time,
        transition_rate: 1.0 / transition_time,
        limiting_deflector,
        k_max,
        spare_next_level: (available - used).min(next_level_total),
        next_level_total,
    })
}
