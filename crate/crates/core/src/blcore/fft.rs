//! Unnormalized forward DFT and `1/N`-normalized inverse over grid arrays.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place 1D transform of every line along `axis`. No scaling.
pub fn fft_axis(data: &mut [Complex64], shape: &[usize], axis: usize, inverse: bool) {
    let n = shape[axis];
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    let stride: usize = shape[axis + 1..].iter().product();
    if stride == 1 {
        plan.process(data);
        return;
    }
    let outer: usize = shape[..axis].iter().product();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for o in 0..outer {
        let base = o * n * stride;
        for s in 0..stride {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = data[base + i * stride + s];
            }
            plan.process(&mut buf);
            for (i, b) in buf.iter().enumerate() {
                data[base + i * stride + s] = *b;
            }
        }
    }
}

pub fn fft_nd(data: &mut [Complex64], shape: &[usize]) {
    for axis in 0..shape.len() {
        fft_axis(data, shape, axis, false);
    }
}

pub fn ifft_nd(data: &mut [Complex64], shape: &[usize]) {
    for axis in 0..shape.len() {
        fft_axis(data, shape, axis, true);
    }
    let scale = 1.0 / data.len() as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

pub fn fft_real(values: &[f64], shape: &[usize]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut data, shape);
    data
}

/// Inverse transform; returns the real part and the relative size of the
/// discarded imaginary part.
pub fn ifft_to_real(spec: &[Complex64], shape: &[usize]) -> (Vec<f64>, f64) {
    let mut data = spec.to_vec();
    ifft_nd(&mut data, shape);
    let (mut re2, mut im2) = (0.0, 0.0);
    let values = data
        .iter()
        .map(|c| {
            re2 += c.re * c.re;
            im2 += c.im * c.im;
            c.re
        })
        .collect();
    let rel = if re2 + im2 > 0.0 { (im2 / (re2 + im2)).sqrt() } else { 0.0 };
    (values, rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn direct_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| (0..n).map(|j| x[j] * Complex64::from_polar(1.0, -2.0 * PI * (k * j) as f64 / n as f64)).sum())
            .collect()
    }

    #[test]
    fn matches_direct_sum_1d() {
        let x: Vec<Complex64> = (0..16).map(|i| Complex64::new((i as f64 * 0.7).sin(), 0.0)).collect();
        let mut y = x.clone();
        fft_nd(&mut y, &[16]);
        for (a, b) in y.iter().zip(direct_dft(&x)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn separable_2d() {
        let shape = [4, 8];
        let x: Vec<Complex64> = (0..32).map(|i| Complex64::new((i as f64).cos(), (i as f64 * 0.3).sin())).collect();
        let mut y = x.clone();
        fft_nd(&mut y, &shape);
        for k0 in 0..4 {
            for k1 in 0..8 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j0 in 0..4 {
                    for j1 in 0..8 {
                        let ph = -2.0 * PI * ((k0 * j0) as f64 / 4.0 + (k1 * j1) as f64 / 8.0);
                        acc += x[j0 * 8 + j1] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((acc - y[k0 * 8 + k1]).norm() < 1e-12);
            }
        }
        ifft_nd(&mut y, &shape);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
