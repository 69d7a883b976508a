//! Target arrays and the efficiency / accuracy figures of merit.

use num_complex::Complex64;

use super::field::{flattop_profile, lens_fourier_in_place, FieldGrid, Lens, Plane};
use super::hologram::{ArrayRegion, PhaseMask};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::partitions::{AddressPattern, Site};

/// Site-power capture radius in units of the addressing waist.
pub const DEFAULT_CAPTURE_RADIUS: f64 = 1.5;

/// Samples whose target intensity falls below this fraction of the peak are
/// left out of the accuracy figure.
pub const ACCURACY_THRESHOLD: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpotShape {
    /// Amplitude `exp(-r^2 / waist^2)`.
    Gaussian { waist: f64 },
    /// Square of the given side.
    Flattop { side: f64 },
}

/// Square array of sites at the atoms and the subset to illuminate.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    /// Sites per axis.
    pub array_dim: u32,
    /// Site spacing over addressing waist.
    pub spacing_ratio: f64,
    /// Addressing waist at the atoms, meters.
    pub addressing_waist: f64,
    /// Position of site (0, 0) as `(row, col)` multiples of the spacing from
    /// the optical axis.
    pub origin: (f64, f64),
    pub sites: AddressPattern,
    pub shape: SpotShape,
    pub capture_radius_factor: f64,
}

impl TargetSpec {
    /// Array anchored one site spacing off the optical axis in each
    /// direction, so the undiffracted order falls outside it.
    pub fn new(
        array_dim: u32,
        spacing_ratio: f64,
        addressing_waist: f64,
        sites: AddressPattern,
        shape: SpotShape,
    ) -> Result<Self> {
        let spec = TargetSpec {
            array_dim,
            spacing_ratio,
            addressing_waist,
            origin: (1.0, 1.0),
            sites,
            shape,
            capture_radius_factor: DEFAULT_CAPTURE_RADIUS,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.array_dim == 0 {
            return Err(Error::domain("array_dim must be >= 1"));
        }
        for (name, v) in [
            ("spacing_ratio", self.spacing_ratio),
            ("addressing_waist", self.addressing_waist),
            ("capture_radius_factor", self.capture_radius_factor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be > 0, got {v}")));
            }
        }
        let size_ok = match self.shape {
            SpotShape::Gaussian { waist } => waist.is_finite() && waist > 0.0,
            SpotShape::Flattop { side } => side.is_finite() && side > 0.0,
        };
        if !size_ok {
            return Err(Error::domain("spot size must be > 0"));
        }
        if let Some(s) = self
            .sites
            .sites()
            .find(|s| s.row >= self.array_dim || s.col >= self.array_dim)
        {
            return Err(Error::domain(format!(
                "site {s} outside the {0}x{0} array",
                self.array_dim
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.spacing_ratio * self.addressing_waist
    }

    pub fn capture_radius(&self) -> f64 {
        self.capture_radius_factor * self.addressing_waist
    }

    /// Physical `(x, y)` of a site.
    pub fn site_center(&self, site: Site) -> (f64, f64) {
        let l = self.spacing();
        (
            (site.col as f64 + self.origin.1) * l,
            (site.row as f64 + self.origin.0) * l,
        )
    }

    /// Array bounding box padded by the capture radius.
    pub fn signal_region(&self) -> ArrayRegion {
        self.padded_box(self.capture_radius())
    }

    /// Box holding every sample that enters the metrics: the capture disks and
    /// all target samples above the accuracy threshold.
    pub fn measurement_region(&self) -> ArrayRegion {
        let reach = match self.shape {
            SpotShape::Gaussian { waist } => waist * (-ACCURACY_THRESHOLD.ln() / 2.0).sqrt(),
            SpotShape::Flattop { side } => side / 2.0,
        };
        self.padded_box(self.capture_radius().max(reach + self.addressing_waist * 0.25))
    }

    fn padded_box(&self, pad: f64) -> ArrayRegion {
        let (x0, y0) = self.site_center(Site::new(0, 0));
        let last = self.array_dim - 1;
        let (x1, y1) = self.site_center(Site::new(last, last));
        ArrayRegion {
            x_min: x0 - pad,
            x_max: x1 + pad,
            y_min: y0 - pad,
            y_max: y1 + pad,
        }
    }

    fn region_indices(&self, grid: &FieldGrid) -> Result<((usize, usize), (usize, usize))> {
        let r = self.measurement_region();
        match (
            ArrayRegion::index_range(r.y_min, r.y_max, grid),
            ArrayRegion::index_range(r.x_min, r.x_max, grid),
        ) {
            (Some(rows), Some(cols)) => Ok((rows, cols)),
            _ => Err(Error::domain(
                "target array extends beyond the simulated field of view",
            )),
        }
    }

    /// Per-axis amplitude profiles of one spot, over the whole grid.
    fn spot_profiles(&self, site: Site, n: usize, pitch: f64) -> (Vec<f64>, Vec<f64>) {
        let (cx, cy) = self.site_center(site);
        let axis = |c: f64| -> Vec<f64> {
            match self.shape {
                SpotShape::Gaussian { waist } => (0..n)
                    .map(|j| {
                        let d = (j as f64 - (n / 2) as f64) * pitch - c;
                        (-(d * d) / (waist * waist)).exp()
                    })
                    .collect(),
                SpotShape::Flattop { side } => flattop_profile(n, pitch, side, c),
            }
        };
        (axis(cx), axis(cy))
    }

    /// Unit-power array-plane target field on an `n x n` grid.
    pub fn target_field(&self, n: usize, pitch: f64) -> Result<FieldGrid> {
        self.validate()?;
        let mut f = FieldGrid::zeros(n, pitch, Plane::Array)?;
        self.region_indices(&f)?;
        if let SpotShape::Gaussian { waist } = self.shape {
            if waist < 2.0 * pitch {
                return Err(Error::Sampling(format!(
                    "target waist {waist} is below two samples of pitch {pitch}"
                )));
            }
        }
        for site in self.sites.sites() {
            let (px, py) = self.spot_profiles(site, n, pitch);
            for (r, row) in f.data_mut().chunks_mut(n).enumerate() {
                if py[r] < 1e-300 {
                    continue;
                }
                for (c, v) in row.iter_mut().enumerate() {
                    *v += Complex64::new(py[r] * px[c], 0.0);
                }
            }
        }
        f.normalize()?;
        Ok(f)
    }
}

/// Figures of merit for one hologram.
#[derive(Clone, Debug, PartialEq)]
pub struct HologramMetrics {
    /// Fraction of the input power landing on targeted sites.
    pub efficiency: f64,
    /// RMS relative intensity error over the target region, with each site
    /// normalized to its own power.
    pub accuracy: f64,
    /// Fraction of the input power on untargeted sites.
    pub crosstalk: f64,
    /// Everything else, including light clipped by the SLM patch.
    pub out_of_array: f64,
    /// Efficiency of each targeted site.
    pub per_site: Vec<(Site, f64)>,
}

/// Field in the array plane produced by `input` through `mask`.
pub fn propagate(input: &FieldGrid, mask: &PhaseMask, lens: &Lens, exec: Exec) -> Result<FieldGrid> {
    if input.plane() != Plane::Slm {
        return Err(Error::domain("input field must be in the SLM plane"));
    }
    let mut f = mask.apply(input)?;
    lens_fourier_in_place(&mut f, lens, exec);
    Ok(f)
}

/// Measures an array-plane field against `spec`; `input_power` is the power
/// of the full illumination ahead of the SLM.
pub fn measure(output: &FieldGrid, input_power: f64, spec: &TargetSpec) -> Result<HologramMetrics> {
    spec.validate()?;
    if output.plane() != Plane::Array {
        return Err(Error::domain("output field must be in the array plane"));
    }
    if !(input_power.is_finite() && input_power > 0.0) {
        return Err(Error::domain("input power must be > 0"));
    }
    let ((r0, r1), (c0, c1)) = spec.region_indices(output)?;
    let n = output.n();
    let pitch = output.pitch();
    let dim = spec.array_dim as usize;
    let l = spec.spacing();
    let rad2 = spec.capture_radius().powi(2);
    let nearest = |v: f64, origin: f64| -> usize {
        ((v / l - origin).round().max(0.0) as usize).min(dim - 1)
    };

    let mut site_power = vec![0.0; dim * dim];
    let targets: Vec<Site> = spec.sites.sites().collect();
    let centers: Vec<(f64, f64)> = targets.iter().map(|&s| spec.site_center(s)).collect();
    let profiles: Vec<(Vec<f64>, Vec<f64>)> =
        targets.iter().map(|&s| spec.spot_profiles(s, n, pitch)).collect();

    let width = c1 - c0 + 1;
    let mut target_i = Vec::with_capacity((r1 - r0 + 1) * width);
    let mut out_i = Vec::with_capacity(target_i.capacity());
    for r in r0..=r1 {
        let y = output.coord(r);
        let sr = nearest(y, spec.origin.0);
        for c in c0..=c1 {
            let x = output.coord(c);
            let p = output.at(r, c).norm_sqr() * pitch * pitch;
            let sc = nearest(x, spec.origin.1);
            let (sx, sy) = spec.site_center(Site::new(sr as u32, sc as u32));
            if (x - sx).powi(2) + (y - sy).powi(2) <= rad2 {
                site_power[sr * dim + sc] += p;
            }
            let amp: f64 = profiles.iter().map(|(px, py)| py[r] * px[c]).sum();
            target_i.push(amp * amp);
            out_i.push(p);
        }
    }

    let mut efficiency = 0.0;
    let mut crosstalk = 0.0;
    for (i, &p) in site_power.iter().enumerate() {
        let s = Site::new((i / dim) as u32, (i % dim) as u32);
        if spec.sites.contains(s) {
            efficiency += p;
        } else {
            crosstalk += p;
        }
    }
    efficiency /= input_power;
    crosstalk /= input_power;
    let per_site = targets
        .iter()
        .map(|&s| (s, site_power[s.row as usize * dim + s.col as usize] / input_power))
        .collect();

    // Accuracy over samples above the threshold, each assigned to the nearest
    // targeted site and normalized to that site's target power.
    let peak = target_i.iter().cloned().fold(0.0, f64::max);
    let floor = peak * ACCURACY_THRESHOLD;
    let mut owner = Vec::new();
    let mut sums = vec![(0.0, 0.0); targets.len()];
    for (idx, &it) in target_i.iter().enumerate() {
        if it < floor || it <= 0.0 {
            continue;
        }
        let x = output.coord(c0 + idx % width);
        let y = output.coord(r0 + idx / width);
        let j = centers
            .iter()
            .enumerate()
            .map(|(j, &(cx, cy))| (j, (x - cx).powi(2) + (y - cy).powi(2)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
            .0;
        sums[j].0 += out_i[idx];
        sums[j].1 += it;
        owner.push((idx, j));
    }
    let scales: Vec<f64> = sums
        .iter()
        .map(|&(o, t)| if o > 0.0 { t / o } else { 0.0 })
        .collect();
    let sq: f64 = owner
        .iter()
        .map(|&(idx, j)| {
            let it = target_i[idx];
            ((out_i[idx] * scales[j] - it) / it).powi(2)
        })
        .sum();
    let accuracy = if owner.is_empty() {
        0.0
    } else {
        (sq / owner.len() as f64).sqrt()
    };

    Ok(HologramMetrics {
        efficiency,
        accuracy,
        crosstalk,
        out_of_array: 1.0 - efficiency - crosstalk,
        per_site,
    })
}

pub fn propagate_and_measure(
    input: &FieldGrid,
    mask: &PhaseMask,
    lens: &Lens,
    spec: &TargetSpec,
    exec: Exec,
) -> Result<HologramMetrics> {
    let out = propagate(input, mask, lens, exec)?;
    measure(&out, input.power(), spec)
}
