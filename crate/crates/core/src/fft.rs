//! Three-dimensional FFTs on cubic grids built from rustfft line transforms.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

impl Fft3 {
    /// Shared plan for an `n^3` grid.
    pub fn for_size(n: usize) -> Arc<Fft3> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft3>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("fft cache poisoned");
        map.entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(Fft3 {
                    n,
                    forward: planner.plan_fft_forward(n),
                    inverse: planner.plan_fft_inverse(n),
                })
            })
            .clone()
    }

    /// Unnormalised forward transform, `sum_x v(x) e^{-2 pi i m.x / n}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Unnormalised inverse transform; divide by `n^3` to invert [`Fft3::forward`].
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    pub fn inverse_normalized(&self, data: &mut [Complex64]) {
        self.inverse(data);
        let s = 1.0 / (self.n * self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "fft size mismatch");
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // x lines are contiguous.
        plan.process_with_scratch(data, &mut scratch);
        // y and z lines are gathered into contiguous blocks.
        let mut lines = vec![Complex64::default(); n * n * n];
        for (stride, outer_stride) in [(n, n * n), (n * n, n)] {
            // Each line is indexed by (a, b): start = a + b * outer_stride for the
            // y pass (a = i, b = k) and start = a + b * n for the z pass.
            let mut line = 0;
            for b in 0..n {
                for a in 0..n {
                    let start = if stride == n { a + b * outer_stride } else { a + b * n };
                    for t in 0..n {
                        lines[line * n + t] = data[start + t * stride];
                    }
                    line += 1;
                }
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            let mut line = 0;
            for b in 0..n {
                for a in 0..n {
                    let start = if stride == n { a + b * outer_stride } else { a + b * n };
                    for t in 0..n {
                        data[start + t * stride] = lines[line * n + t];
                    }
                    line += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let n = 12;
        let plan = Fft3::for_size(n);
        let orig: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut d = orig.clone();
        plan.forward(&mut d);
        plan.inverse_normalized(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode() {
        let n = 8;
        let plan = Fft3::for_size(n);
        let m = [1usize, 2, 3];
        let mut d: Vec<Complex64> = (0..n * n * n)
            .map(|idx| {
                let (i, j, k) = (idx % n, (idx / n) % n, idx / (n * n));
                let ph = 2.0 * std::f64::consts::PI * (m[0] * i + m[1] * j + m[2] * k) as f64 / n as f64;
                Complex64::from_polar(1.0, ph)
            })
            .collect();
        plan.forward(&mut d);
        let peak = m[0] + n * (m[1] + n * m[2]);
        for (idx, v) in d.iter().enumerate() {
            let expect = if idx == peak { (n * n * n) as f64 } else { 0.0 };
            assert!((v.re - expect).abs() < 1e-9 && v.im.abs() < 1e-9, "idx {idx} {v}");
        }
    }
}
