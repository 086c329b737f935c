//! In-place radix-2 FFT.
//!
//! Only power-of-two lengths are supported. Forward transform uses the
//! `e^{-j2πkn/N}` kernel; the inverse applies the `1/N` normalization.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

fn bit_reverse(buf: &mut [Complex64]) {
    let n = buf.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
}

fn transform(buf: &mut [Complex64], sign: f64) {
    let n = buf.len();
    assert!(is_power_of_two(n), "fft length {n} is not a power of two");
    bit_reverse(buf);
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * PI / len as f64;
        // twiddles computed directly rather than by recurrence to keep
        // roundoff flat for long transforms
        let half = len / 2;
        let twiddles: Vec<Complex64> = (0..half)
            .map(|k| Complex64::from_polar(1.0, ang * k as f64))
            .collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let a = buf[start + k];
                let b = buf[start + k + half] * twiddles[k];
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Forward DFT in place.
pub fn fft(buf: &mut [Complex64]) {
    transform(buf, -1.0);
}

/// Inverse DFT in place, normalized by `1/N`.
pub fn ifft(buf: &mut [Complex64]) {
    transform(buf, 1.0);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Real sequence from a half spectrum `X[0..=N/2]` via conjugate-symmetric
/// extension. Imaginary parts of the DC and Nyquist bins are discarded.
pub fn irfft(half: &[Complex64], n: usize) -> Vec<f64> {
    assert!(is_power_of_two(n) && half.len() == n / 2 + 1);
    let mut buf = alloc::vec![Complex64::new(0.0, 0.0); n];
    buf[0] = Complex64::new(half[0].re, 0.0);
    buf[n / 2] = Complex64::new(half[n / 2].re, 0.0);
    for m in 1..n / 2 {
        buf[m] = half[m];
        buf[n - m] = half[m].conj();
    }
    ifft(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

pub fn next_power_of_two(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (i, v)| {
                    acc + v * Complex64::from_polar(1.0, -2.0 * PI * (k * i) as f64 / n as f64)
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let x: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new(libm::sin(i as f64 * 0.37), libm::cos(i as f64 * 1.3)))
            .collect();
        let mut y = x.clone();
        fft(&mut y);
        let z = naive_dft(&x);
        for (a, b) in y.iter().zip(z.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let x: Vec<Complex64> = (0..256).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
        let mut y = x.clone();
        fft(&mut y);
        ifft(&mut y);
        for (a, b) in y.iter().zip(x.iter()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn irfft_of_flat_spectrum_is_delta() {
        let half = vec![Complex64::new(1.0, 0.0); 9];
        let h = irfft(&half, 16);
        assert!((h[0] - 1.0).abs() < 1e-12);
        assert!(h[1..].iter().all(|v| v.abs() < 1e-12));
    }
}
