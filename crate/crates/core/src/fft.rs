//! Radix-2 FFT with unitary scaling.
//!
//! Both directions are scaled by 1/sqrt(N), so the transform preserves
//! total power (Parseval) and PAPR can be computed in either domain.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Forward unitary FFT. Input length must be a power of two.
pub fn fft_unitary(input: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut data = input.to_vec();
    fft_in_place(&mut data, false)?;
    let scale = 1.0 / (data.len() as f64).sqrt();
    for x in &mut data {
        *x *= scale;
    }
    Ok(data)
}

/// Inverse unitary FFT. Input length must be a power of two.
pub fn ifft_unitary(input: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut data = input.to_vec();
    fft_in_place(&mut data, true)?;
    let scale = 1.0 / (data.len() as f64).sqrt();
    for x in &mut data {
        *x *= scale;
    }
    Ok(data)
}

/// Iterative in-place radix-2 Cooley-Tukey, no scaling.
fn fft_in_place(data: &mut [Complex64], inverse: bool) -> Result<()> {
    let n = data.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(invalid(format!(
            "FFT length must be a nonzero power of two, got {n}"
        )));
    }
    if n == 1 {
        return Ok(());
    }

    // Bit-reversal permutation.
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }

    // One twiddle table shared by all stages: w[k] = exp(-2*pi*i*k/n).
    let sign = if inverse { 1.0 } else { -1.0 };
    let half = n / 2;
    let mut twiddles = Vec::with_capacity(half);
    for k in 0..half {
        let angle = sign * 2.0 * PI * k as f64 / n as f64;
        twiddles.push(Complex64::new(angle.cos(), angle.sin()));
    }

    let mut len = 2;
    while len <= n {
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for j in 0..len / 2 {
                let w = twiddles[j * stride];
                let a = data[start + j];
                let b = data[start + j + len / 2] * w;
                data[start + j] = a + b;
                data[start + j + len / 2] = a - b;
            }
        }
        len <<= 1;
    }
    Ok(())
}
