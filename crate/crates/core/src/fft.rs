//! Cached 2-D complex FFT plans.
//!
//! Plans are shared process-wide per grid size; scratch is per thread so a
//! plan can be used from several threads at once.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Fft2d {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2d").field("n", &self.n).finish()
    }
}

static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Fft2d>>>> = OnceLock::new();

/// Shared plan for an `n x n` transform.
pub fn plan(n: usize) -> Arc<Fft2d> {
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Fft2d {
                n,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

impl Fft2d {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Unnormalized forward transform, `sum_x f(x) e^{-2πi k·x}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(&*self.forward, data);
    }

    /// Unnormalized inverse transform, `sum_k c_k e^{+2πi k·x}`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(&*self.inverse, data);
    }

    fn run(&self, fft: &dyn Fft<f64>, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n);
        SCRATCH.with(|cell| {
            let mut scratch = cell.borrow_mut();
            let need = fft.get_inplace_scratch_len();
            if scratch.len() < need {
                scratch.resize(need, Complex64::new(0.0, 0.0));
            }
            let scratch = &mut scratch[..need];
            fft.process_with_scratch(data, scratch);
            transpose_square(data, self.n);
            fft.process_with_scratch(data, scratch);
            transpose_square(data, self.n);
        });
    }
}

thread_local! {
    static SCRATCH: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

const BLOCK: usize = 16;

fn transpose_square(data: &mut [Complex64], n: usize) {
    for bi in (0..n).step_by(BLOCK) {
        for bj in (bi..n).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + BLOCK).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}
