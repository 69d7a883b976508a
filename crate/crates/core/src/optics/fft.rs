//! Centered, unitary 2D DFT on square power-of-two grids.
//!
//! Sample `j` of an `n`-point axis sits at coordinate `j - n/2`, so the
//! optical axis is at index `n/2` in both planes. For even `n` the centered
//! transform is a plain FFT sandwiched between two checkerboard sign flips,
//! which avoids the usual shift passes.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

use crate::exec::Exec;

const ROWS_PER_TASK: usize = 32;
const TRANSPOSE_BLOCK: usize = 64;

/// In-place centered 2D transform of an `n x n` row-major grid, scaled by `1/n`
/// so that the sum of squared magnitudes is preserved.
pub fn fft2_centered(data: &mut [Complex64], n: usize, direction: FftDirection, exec: Exec) {
    assert_eq!(data.len(), n * n, "grid is not {n}x{n}");
    assert!(n >= 2 && n.is_multiple_of(2), "grid size must be even");
    let fft = FftPlanner::new().plan_fft(n, direction);
    let scale = 1.0 / n as f64;
    // Sign flip and scale on the way in, sign flip on the way out.
    checkerboard(data, n, scale, exec);
    row_ffts(data, n, &fft, exec);
    transpose_in_place(data, n);
    row_ffts(data, n, &fft, exec);
    transpose_in_place(data, n);
    checkerboard(data, n, 1.0, exec);
}

fn checkerboard(data: &mut [Complex64], n: usize, scale: f64, exec: Exec) {
    exec.for_each_chunk_mut(data, n * ROWS_PER_TASK, |chunk_idx, chunk| {
        let row0 = chunk_idx * ROWS_PER_TASK;
        for (r, row) in chunk.chunks_mut(n).enumerate() {
            let start = if (row0 + r).is_multiple_of(2) { scale } else { -scale };
            let mut s = start;
            for v in row.iter_mut() {
                *v *= s;
                s = -s;
            }
        }
    });
}

fn row_ffts(data: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>, exec: Exec) {
    exec.for_each_chunk_mut(data, n * ROWS_PER_TASK, |_, chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

/// Blocked in-place transpose of a square row-major matrix.
pub fn transpose_in_place<T>(data: &mut [T], n: usize) {
    assert_eq!(data.len(), n * n);
    for bi in (0..n).step_by(TRANSPOSE_BLOCK) {
        for bj in (bi..n).step_by(TRANSPOSE_BLOCK) {
            let i_end = (bi + TRANSPOSE_BLOCK).min(n);
            let j_end = (bj + TRANSPOSE_BLOCK).min(n);
            for i in bi..i_end {
                let j_start = if bi == bj { i + 1 } else { bj };
                for j in j_start..j_end {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // Direct O(n^4) centered DFT.
    fn naive(data: &[Complex64], n: usize, sign: f64) -> Vec<Complex64> {
        let c = (n / 2) as f64;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for k1 in 0..n {
            for k2 in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j1 in 0..n {
                    for j2 in 0..n {
                        let ph = sign * 2.0 * PI
                            * ((j1 as f64 - c) * (k1 as f64 - c) + (j2 as f64 - c) * (k2 as f64 - c))
                            / n as f64;
                        acc += data[j1 * n + j2] * Complex64::from_polar(1.0, ph);
                    }
                }
                out[k1 * n + k2] = acc / n as f64;
            }
        }
        out
    }

    fn pseudo_random(n: usize) -> Vec<Complex64> {
        let mut s = 0x2545F4914F6CDD1Du64;
        (0..n * n)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                let a = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                let b = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                Complex64::new(a, b)
            })
            .collect()
    }

    #[test]
    fn matches_direct_transform() {
        for n in [2, 4, 8, 16] {
            let x = pseudo_random(n);
            let mut y = x.clone();
            fft2_centered(&mut y, n, FftDirection::Forward, Exec::Sequential);
            let want = naive(&x, n, -1.0);
            for (a, b) in y.iter().zip(&want) {
                assert!((a - b).norm() < 1e-12, "n={n}");
            }
            fft2_centered(&mut y, n, FftDirection::Inverse, Exec::Parallel);
            for (a, b) in y.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn transpose_odd_sizes() {
        for n in [1, 3, 65, 130] {
            let mut v: Vec<usize> = (0..n * n).collect();
            transpose_in_place(&mut v, n);
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(v[i * n + j], j * n + i);
                }
            }
        }
    }

    #[test]
    fn policies_bit_identical() {
        let x = pseudo_random(128);
        let mut a = x.clone();
        let mut b = x;
        fft2_centered(&mut a, 128, FftDirection::Forward, Exec::Sequential);
        fft2_centered(&mut b, 128, FftDirection::Forward, Exec::Parallel);
        assert_eq!(a, b);
    }
}
