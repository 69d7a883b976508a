//! Image replication by multi-tone deflector drives.

use crate::error::{Error, Result};
use crate::partitions::AddressPattern;

/// One RF tone on a deflector axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tone {
    /// Displacement of the image along the axis, in array sites.
    pub site_offset: i64,
    /// Drive frequency, hertz.
    pub frequency: f64,
}

/// One copy of the addressed pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct Replica {
    /// `(row, col)` displacement in sites.
    pub site_offset: (i64, i64),
    /// Optical frequency shift picked up from both axes, hertz.
    pub frequency_shift: f64,
    /// Index of the x tone and of the y tone that produced this replica.
    pub tones: (usize, usize),
}

impl Replica {
    /// Sites of `pattern` moved by this replica's offset; fails if any lands
    /// at a negative index.
    pub fn place(&self, pattern: &AddressPattern) -> Result<AddressPattern> {
        let (dr, dc) = self.site_offset;
        let mut sites = Vec::with_capacity(pattern.len());
        for s in pattern.sites() {
            let r = s.row as i64 + dr;
            let c = s.col as i64 + dc;
            if r < 0 || c < 0 || r > u32::MAX as i64 || c > u32::MAX as i64 {
                return Err(Error::domain(format!(
                    "replica offset ({dr},{dc}) moves {s} off the array"
                )));
            }
            sites.push(crate::partitions::Site::new(r as u32, c as u32));
        }
        AddressPattern::new(sites)
    }
}

/// Cross product of x (column) and y (row) tones. Replicas are ordered
/// y-major, each carrying the summed displacement and `f_x + f_y`.
pub fn multi_tone_replicate(
    tones_x: &[Tone],
    tones_y: &[Tone],
    base_pattern: &AddressPattern,
) -> Result<Vec<Replica>> {
    if tones_x.is_empty() || tones_y.is_empty() {
        return Err(Error::domain("each axis needs at least one tone"));
    }
    if base_pattern.is_empty() {
        return Err(Error::domain("base pattern is empty"));
    }
    let mut out = Vec::with_capacity(tones_x.len() * tones_y.len());
    for (iy, ty) in tones_y.iter().enumerate() {
        for (ix, tx) in tones_x.iter().enumerate() {
            out.push(Replica {
                site_offset: (ty.site_offset, tx.site_offset),
                frequency_shift: tx.frequency + ty.frequency,
                tones: (ix, iy),
            });
        }
    }
    Ok(out)
}

/// `count` tones spaced by `pitch_sites`, starting at `base_frequency` with
/// `step_per_site` hertz per site.
pub fn tone_comb(count: usize, pitch_sites: i64, base_frequency: f64, step_per_site: f64) -> Vec<Tone> {
    (0..count)
        .map(|i| {
            let off = i as i64 * pitch_sites;
            Tone {
                site_offset: off,
                frequency: base_frequency + off as f64 * step_per_site,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_product() {
        let p = AddressPattern::from_pairs(&[(0, 0)]).unwrap();
        let xs = tone_comb(2, 3, 70e6, 1e6);
        let ys = tone_comb(3, 3, 80e6, 1e6);
        let r = multi_tone_replicate(&xs, &ys, &p).unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(r[1].site_offset, (0, 3));
        assert_eq!(r[1].frequency_shift, 73e6 + 80e6);
        let one = multi_tone_replicate(&xs[..1], &ys[..1], &p).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].frequency_shift, 150e6);
        assert!(multi_tone_replicate(&[], &ys, &p).is_err());
        assert_eq!(r[5].place(&p).unwrap(), AddressPattern::from_pairs(&[(6, 3)]).unwrap());
    }
}
