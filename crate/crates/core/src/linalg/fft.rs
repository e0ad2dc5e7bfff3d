//! Discrete Fourier transforms.
//!
//! Radix-2 Cooley-Tukey for power-of-two lengths, direct summation otherwise.
//! The public transforms are unitary; `fft_raw` is unnormalized with the
//! forward kernel `e^{-2πi jk/N}`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

/// Unnormalized transform in place. `inverse` flips the kernel sign.
pub fn fft_raw(x: &mut [C64], inverse: bool) {
    let n = x.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        radix2(x, inverse);
    } else {
        direct(x, inverse);
    }
}

fn radix2(x: &mut [C64], inverse: bool) {
    let n = x.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            x.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddles: Vec<C64> = (0..n / 2)
        .map(|k| C64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64))
        .collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = x[start + k];
                let b = x[start + k + half] * w;
                x[start + k] = a + b;
                x[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

fn direct(x: &mut [C64], inverse: bool) {
    let n = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let roots: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64))
        .collect();
    let out: Vec<C64> = (0..n)
        .map(|k| {
            (0..n).fold(C64::new(0.0, 0.0), |acc, j| acc + x[j] * roots[(j * k) % n])
        })
        .collect();
    x.copy_from_slice(&out);
}

/// Unitary forward DFT.
pub fn dft(x: &[C64]) -> Vec<C64> {
    let mut y = x.to_vec();
    fft_raw(&mut y, false);
    let s = 1.0 / (x.len() as f64).sqrt();
    y.iter_mut().for_each(|z| *z *= s);
    y
}

/// Unitary inverse DFT.
pub fn idft(x: &[C64]) -> Vec<C64> {
    let mut y = x.to_vec();
    fft_raw(&mut y, true);
    let s = 1.0 / (x.len() as f64).sqrt();
    y.iter_mut().for_each(|z| *z *= s);
    y
}

/// Unnormalized transform of a row-major array of the given shape, along every axis.
pub fn fft_nd_raw(x: &mut [C64], shape: &[usize], inverse: bool) {
    let total: usize = shape.iter().product();
    assert_eq!(total, x.len());
    let mut stride = 1;
    for axis in (0..shape.len()).rev() {
        let n = shape[axis];
        let block = n * stride;
        let mut line = vec![C64::new(0.0, 0.0); n];
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                for k in 0..n {
                    line[k] = x[outer + inner + k * stride];
                }
                fft_raw(&mut line, inverse);
                for k in 0..n {
                    x[outer + inner + k * stride] = line[k];
                }
            }
        }
        stride = block;
    }
}

/// Unitary multi-dimensional DFT.
pub fn dft_nd(x: &[C64], shape: &[usize], inverse: bool) -> Vec<C64> {
    let mut y = x.to_vec();
    fft_nd_raw(&mut y, shape, inverse);
    let s = 1.0 / (x.len() as f64).sqrt();
    y.iter_mut().for_each(|z| *z *= s);
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[C64]) -> Vec<C64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(C64::new(0.0, 0.0), |acc, (j, &v)| {
                    acc + v * C64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64)
                }) / (n as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn matches_naive_and_roundtrips() {
        for n in [1usize, 2, 8, 64, 24, 7] {
            let x: Vec<C64> = (0..n)
                .map(|j| C64::new((j as f64 * 0.7).sin(), (j as f64 * 1.3).cos()))
                .collect();
            let y = dft(&x);
            for (a, b) in y.iter().zip(naive(&x)) {
                assert!((a - b).norm() < 1e-12, "n={n}");
            }
            let z = idft(&y);
            for (a, b) in z.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_impulse_is_flat() {
        let mut x = vec![C64::new(0.0, 0.0); 16];
        x[0] = C64::new(1.0, 0.0);
        for z in dft(&x) {
            assert!((z - C64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn nd_is_separable() {
        let shape = [4, 8];
        let x: Vec<C64> = (0..32).map(|j| C64::new(j as f64, (j * j % 5) as f64)).collect();
        let y = dft_nd(&x, &shape, false);
        let mut rows: Vec<C64> = Vec::new();
        for r in 0..4 {
            rows.extend(dft(&x[r * 8..(r + 1) * 8]));
        }
        for c in 0..8 {
            let col: Vec<C64> = (0..4).map(|r| rows[r * 8 + c]).collect();
            let t = dft(&col);
            for r in 0..4 {
                assert!((t[r] - y[r * 8 + c]).norm() < 1e-12);
            }
        }
        let back = dft_nd(&y, &shape, true);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
