//! Sampled scalar fields and the thin-lens Fourier relation.

use num_complex::Complex64;
use rustfft::FftDirection;

use super::fft::fft2_centered;
use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Plane {
    /// Back focal plane of the lens, where the hologram sits.
    Slm,
    /// Focal plane at the atoms.
    Array,
}

impl Plane {
    pub fn other(self) -> Plane {
        match self {
            Plane::Slm => Plane::Array,
            Plane::Array => Plane::Slm,
        }
    }
}

/// Complex amplitude on an `n x n` grid, row-major, with the optical axis at
/// index `(n/2, n/2)`. Row index runs along y, column index along x.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    n: usize,
    pitch: f64,
    plane: Plane,
    data: Vec<Complex64>,
}

impl FieldGrid {
    pub fn zeros(n: usize, pitch: f64, plane: Plane) -> Result<Self> {
        check_grid(n, pitch)?;
        Ok(FieldGrid {
            n,
            pitch,
            plane,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        })
    }

    pub fn from_data(n: usize, pitch: f64, plane: Plane, data: Vec<Complex64>) -> Result<Self> {
        check_grid(n, pitch)?;
        if data.len() != n * n {
            return Err(Error::domain(format!(
                "{} samples supplied for a {n}x{n} grid",
                data.len()
            )));
        }
        Ok(FieldGrid { n, pitch, plane, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn plane(&self) -> Plane {
        self.plane
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n + col]
    }

    /// Physical coordinate of sample index `j` along either axis.
    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.pitch
    }

    /// Fractional sample index of physical coordinate `x`.
    pub fn index_of(&self, x: f64) -> f64 {
        x / self.pitch + (self.n / 2) as f64
    }

    /// Physical extent covered by the grid, `[lo, hi]` along each axis.
    pub fn extent(&self) -> (f64, f64) {
        (self.coord(0), self.coord(self.n - 1))
    }

    /// Total power `sum |E|^2 * pitch^2`.
    pub fn power(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.pitch * self.pitch
    }

    /// Rescales to unit power. Fails for an all-zero field.
    pub fn normalize(&mut self) -> Result<()> {
        let p = self.power();
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::domain("cannot normalize a field with zero power"));
        }
        let s = 1.0 / p.sqrt();
        self.data.iter_mut().for_each(|v| *v *= s);
        Ok(())
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.norm_sqr()).collect()
    }
}

fn check_grid(n: usize, pitch: f64) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::domain(format!("grid size {n} is not a power of two >= 2")));
    }
    if !(pitch.is_finite() && pitch > 0.0) {
        return Err(Error::domain(format!("pitch must be > 0, got {pitch}")));
    }
    Ok(())
}

fn check_center(n: usize, pitch: f64, center: (f64, f64)) -> Result<()> {
    let lo = -((n / 2) as f64) * pitch;
    let hi = (n as f64 / 2.0 - 1.0) * pitch;
    for c in [center.0, center.1] {
        if !(c >= lo && c <= hi) {
            return Err(Error::domain(format!(
                "center ({}, {}) lies outside the grid [{lo}, {hi}]",
                center.0, center.1
            )));
        }
    }
    Ok(())
}

/// Unit-power Gaussian with amplitude `exp(-r^2 / waist^2)`. `center` is `(x, y)`.
pub fn gaussian_field(
    n: usize,
    pitch: f64,
    waist: f64,
    center: (f64, f64),
    plane: Plane,
) -> Result<FieldGrid> {
    check_grid(n, pitch)?;
    if waist.is_nan() || waist < 2.0 * pitch {
        return Err(Error::Sampling(format!(
            "waist {waist} is below two samples of pitch {pitch}"
        )));
    }
    check_center(n, pitch, center)?;
    let mut f = FieldGrid::zeros(n, pitch, plane)?;
    let gx = gaussian_profile(n, pitch, waist, center.0);
    let gy = gaussian_profile(n, pitch, waist, center.1);
    for (r, row) in f.data.chunks_mut(n).enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = Complex64::new(gy[r] * gx[c], 0.0);
        }
    }
    f.normalize()?;
    Ok(f)
}

fn gaussian_profile(n: usize, pitch: f64, waist: f64, c: f64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let d = (j as f64 - (n / 2) as f64) * pitch - c;
            (-(d * d) / (waist * waist)).exp()
        })
        .collect()
}

/// Separable square profile: 1 inside, 0.5 on the edge samples, 0 outside.
///
/// The centre snaps to the nearest sample and the half-width to a whole
/// number of samples, so every grid point has an exact amplitude.
pub fn flattop_profile(n: usize, pitch: f64, side: f64, center: f64) -> Vec<f64> {
    let half = (side / (2.0 * pitch)).round() as i64;
    let c = (center / pitch).round() as i64 + (n / 2) as i64;
    (0..n as i64)
        .map(|j| {
            let d = (j - c).abs();
            if d < half {
                1.0
            } else if d == half {
                0.5
            } else {
                0.0
            }
        })
        .collect()
}

/// Unit-power square flattop of the given side. `center` is `(x, y)`.
pub fn flattop_field(
    n: usize,
    pitch: f64,
    side: f64,
    center: (f64, f64),
    plane: Plane,
) -> Result<FieldGrid> {
    check_grid(n, pitch)?;
    if side.is_nan() || side < 4.0 * pitch {
        return Err(Error::Sampling(format!(
            "flattop side {side} is below four samples of pitch {pitch}"
        )));
    }
    if side > n as f64 * pitch {
        return Err(Error::domain(format!(
            "flattop side {side} exceeds the grid width {}",
            n as f64 * pitch
        )));
    }
    check_center(n, pitch, center)?;
    let mut f = FieldGrid::zeros(n, pitch, plane)?;
    let px = flattop_profile(n, pitch, side, center.0);
    let py = flattop_profile(n, pitch, side, center.1);
    for (r, row) in f.data.chunks_mut(n).enumerate() {
        if py[r] == 0.0 {
            continue;
        }
        for (c, v) in row.iter_mut().enumerate() {
            *v = Complex64::new(py[r] * px[c], 0.0);
        }
    }
    f.normalize()?;
    Ok(f)
}

/// Ideal thin lens used in a 2f arrangement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lens {
    pub focal_length: f64,
    pub wavelength: f64,
}

impl Lens {
    pub fn new(focal_length: f64, wavelength: f64) -> Result<Self> {
        for (name, v) in [("focal_length", focal_length), ("wavelength", wavelength)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(Lens {
            focal_length,
            wavelength,
        })
    }

    /// Sample pitch in the conjugate plane: `lambda * f / (n * pitch)`.
    pub fn conjugate_pitch(&self, n: usize, pitch: f64) -> f64 {
        self.wavelength * self.focal_length / (n as f64 * pitch)
    }
}

/// Paraxial field in the focal plane of `lens`, in place. Power is preserved.
pub fn lens_fourier_in_place(field: &mut FieldGrid, lens: &Lens, exec: Exec) {
    transform(field, lens, FftDirection::Forward, exec)
}

/// Inverse of [`lens_fourier_in_place`]: back-propagates a focal-plane field.
pub fn lens_inverse_in_place(field: &mut FieldGrid, lens: &Lens, exec: Exec) {
    transform(field, lens, FftDirection::Inverse, exec)
}

pub fn lens_fourier(field: &FieldGrid, lens: &Lens, exec: Exec) -> FieldGrid {
    let mut out = field.clone();
    lens_fourier_in_place(&mut out, lens, exec);
    out
}

pub fn lens_inverse(field: &FieldGrid, lens: &Lens, exec: Exec) -> FieldGrid {
    let mut out = field.clone();
    lens_inverse_in_place(&mut out, lens, exec);
    out
}

fn transform(field: &mut FieldGrid, lens: &Lens, direction: FftDirection, exec: Exec) {
    let n = field.n;
    let out_pitch = lens.conjugate_pitch(n, field.pitch);
    fft2_centered(&mut field.data, n, direction, exec);
    let s = field.pitch / out_pitch;
    field.data.iter_mut().for_each(|v| *v *= s);
    field.pitch = out_pitch;
    field.plane = field.plane.other();
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn gaussian_normalized_and_waist() {
        let f = gaussian_field(256, 1e-6, 20e-6, (0.0, 0.0), Plane::Slm).unwrap();
        assert!((f.power() - 1.0).abs() < 1e-9);
        let peak = f.at(128, 128).re;
        let at_w = f.at(128, 148).re;
        assert!((at_w / peak - 1.0 / E).abs() < 0.01 / E);
        assert!(matches!(
            gaussian_field(256, 1e-6, 1.5e-6, (0.0, 0.0), Plane::Slm),
            Err(Error::Sampling(_))
        ));
        assert!(gaussian_field(256, 1e-6, 5e-6, (1.0, 0.0), Plane::Slm).is_err());
        assert!(gaussian_field(250, 1e-6, 5e-6, (0.0, 0.0), Plane::Slm).is_err());
    }

    #[test]
    fn flattop_profile_snaps() {
        let p = flattop_profile(16, 1.0, 6.0, 0.2);
        assert_eq!(&p[4..13], &[0.0, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.0]);
        let f = flattop_field(64, 1.0, 10.0, (0.0, 0.0), Plane::Array).unwrap();
        assert!((f.power() - 1.0).abs() < 1e-9);
        assert_eq!(f.at(32, 32), f.at(28, 36));
        assert!(flattop_field(64, 1.0, 3.0, (0.0, 0.0), Plane::Array).is_err());
        assert!(flattop_field(64, 1.0, 65.0, (0.0, 0.0), Plane::Array).is_err());
    }

    #[test]
    fn lens_round_trip_and_pitch() {
        let lens = Lens::new(0.1, 500e-9).unwrap();
        let f = gaussian_field(128, 10e-6, 200e-6, (30e-6, -50e-6), Plane::Slm).unwrap();
        let g = lens_fourier(&f, &lens, Exec::Sequential);
        assert_eq!(g.plane(), Plane::Array);
        assert!((g.pitch() - 500e-9 * 0.1 / (128.0 * 10e-6)).abs() < 1e-18);
        assert!((g.power() - 1.0).abs() < 1e-10);
        let back = lens_inverse(&g, &lens, Exec::Parallel);
        assert_eq!(back.plane(), Plane::Slm);
        let peak = f.data().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in back.data().iter().zip(f.data()) {
            assert!((a - b).norm() < 1e-12 * peak);
        }
    }
}
