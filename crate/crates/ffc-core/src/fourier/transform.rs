//! DFT kernels: radix-2 Cooley-Tukey for power-of-two lengths, direct
//! table-based evaluation otherwise. Forward is unnormalized; the inverse
//! applies the full 1/(m*n) factor at the 2D level.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{RealGrid, Spectrum};

/// Forward 2D DFT of a real grid.
///
/// `F(u,v) = sum_{x,y} g(x,y) * exp(-j*2*pi*(u*x/m + v*y/n))`, so the DC
/// component equals the plain sum of the grid.
pub fn dft2(grid: &RealGrid) -> Spectrum {
    let (h, w) = (grid.height(), grid.width());
    let mut buf: Vec<Complex64> = grid
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    transform2(&mut buf, h, w, false);
    // Constructor invariants (finiteness, symmetry) hold for any finite
    // real input; RealGrid already guarantees finiteness.
    Spectrum::new(h, w, buf, true).expect("forward transform of a valid grid")
}

/// Inverse 2D DFT, requiring a (numerically) conjugate-symmetric spectrum.
///
/// Fails with [`Error::SymmetryViolation`] when the imaginary residual of the
/// inverse reaches 1e-6; residuals below that are discarded.
pub fn idft2(spectrum: &Spectrum) -> Result<RealGrid> {
    const RESIDUAL_LIMIT: f64 = 1e-6;
    let inv = idft2_complex(spectrum);
    let residual = inv
        .values()
        .iter()
        .fold(0.0f64, |acc, c| acc.max(c.im.abs()));
    if residual >= RESIDUAL_LIMIT {
        return Err(Error::SymmetryViolation {
            residual,
            limit: RESIDUAL_LIMIT,
        });
    }
    let values: Vec<f64> = inv.values().iter().map(|c| c.re).collect();
    RealGrid::new(spectrum.height(), spectrum.width(), values)
}

/// Inverse 2D DFT with complex output and no realness requirement.
pub fn idft2_complex(spectrum: &Spectrum) -> Spectrum {
    let (h, w) = (spectrum.height(), spectrum.width());
    let mut buf = spectrum.values().to_vec();
    transform2(&mut buf, h, w, true);
    let scale = 1.0 / (h as f64 * w as f64);
    for c in buf.iter_mut() {
        *c *= scale;
    }
    Spectrum::new(h, w, buf, false).expect("inverse transform of a valid spectrum")
}

/// In-place 2D transform: 1D passes over rows, then over columns.
fn transform2(buf: &mut [Complex64], height: usize, width: usize, inverse: bool) {
    let row_kernel = Kernel::for_len(width, inverse);
    for row in buf.chunks_exact_mut(width) {
        row_kernel.run(row);
    }
    let col_kernel = Kernel::for_len(height, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); height];
    for col in 0..width {
        for row in 0..height {
            scratch[row] = buf[row * width + col];
        }
        col_kernel.run(&mut scratch);
        for row in 0..height {
            buf[row * width + col] = scratch[row];
        }
    }
}

enum Kernel {
    /// Iterative radix-2 Cooley-Tukey; twiddles indexed by k*(n/m) per stage.
    Radix2 { twiddles: Vec<Complex64> },
    /// Direct O(n^2) evaluation via an exp table indexed by (j*k) mod n,
    /// exact for any length. Fine at desk scale.
    Direct { table: Vec<Complex64> },
}

impl Kernel {
    fn for_len(n: usize, inverse: bool) -> Self {
        let sign = if inverse { 1.0 } else { -1.0 };
        if n.is_power_of_two() {
            let twiddles = (0..n / 2)
                .map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64))
                .collect();
            Kernel::Radix2 { twiddles }
        } else {
            let table = (0..n)
                .map(|r| Complex64::from_polar(1.0, sign * 2.0 * PI * r as f64 / n as f64))
                .collect();
            Kernel::Direct { table }
        }
    }

    fn run(&self, buf: &mut [Complex64]) {
        match self {
            Kernel::Radix2 { twiddles } => radix2(buf, twiddles),
            Kernel::Direct { table } => direct(buf, table),
        }
    }
}

fn radix2(buf: &mut [Complex64], twiddles: &[Complex64]) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    // Bit-reversal permutation.
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut m = 2;
    while m <= n {
        let half = m / 2;
        let stride = n / m;
        for start in (0..n).step_by(m) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        m *= 2;
    }
}

fn direct(buf: &mut [Complex64], table: &[Complex64]) {
    let n = buf.len();
    let input = buf.to_vec();
    for (k, out) in buf.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &x) in input.iter().enumerate() {
            acc += x * table[(j * k) % n];
        }
        *out = acc;
    }
}
