//! Cached 3D complex FFT built from rustfft line transforms.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Fft3>>>> = OnceLock::new();

pub(crate) fn plan_for(n: usize) -> Arc<Fft3> {
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
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

impl Fft3 {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Unnormalized forward transform, `sum_x f(x) e^{-2 pi i k.x / n}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Unnormalized inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let plane = n * n;
        assert_eq!(data.len(), plane * n, "buffer does not match grid");

        // axis 2: contiguous lines, one plane per task
        data.par_chunks_mut(plane).for_each(|p| plan.process(p));

        // axis 1: transpose each plane, transform, transpose back
        data.par_chunks_mut(plane).for_each(|p| {
            let mut t = vec![Complex64::new(0.0, 0.0); plane];
            for i1 in 0..n {
                for i2 in 0..n {
                    t[i2 * n + i1] = p[i1 * n + i2];
                }
            }
            plan.process(&mut t);
            for i1 in 0..n {
                for i2 in 0..n {
                    p[i1 * n + i2] = t[i2 * n + i1];
                }
            }
        });

        // axis 0: view as an n x n^2 matrix and transpose
        let mut t = vec![Complex64::new(0.0, 0.0); plane * n];
        {
            let src: &[Complex64] = data;
            t.par_chunks_mut(n).enumerate().for_each(|(r, line)| {
                for (i0, v) in line.iter_mut().enumerate() {
                    *v = src[i0 * plane + r];
                }
            });
        }
        t.par_chunks_mut(n * 64.min(plane)).for_each(|c| plan.process(c));
        data.par_chunks_mut(plane).enumerate().for_each(|(i0, p)| {
            for (r, v) in p.iter_mut().enumerate() {
                *v = t[r * n + i0];
            }
        });
    }
}
