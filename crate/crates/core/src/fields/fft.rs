use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type Plan = Arc<dyn Fft<f64>>;

fn plans(n: usize) -> (Plan, Plan) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Plan, Plan)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Unnormalized forward DFT, `sum_j x_j e^{-2 pi i jk/n}`.
pub(crate) fn forward(buf: &mut [Complex64]) {
    plans(buf.len()).0.process(buf);
}

/// Unnormalized inverse DFT, `sum_k x_k e^{+2 pi i jk/n}`.
pub(crate) fn inverse(buf: &mut [Complex64]) {
    plans(buf.len()).1.process(buf);
}

/// Reusable forward/inverse pair for hot loops.
#[derive(Clone)]
pub(crate) struct FftPair {
    fwd: Plan,
    inv: Plan,
    scratch: Vec<Complex64>,
}

impl FftPair {
    pub(crate) fn new(n: usize) -> Self {
        let (fwd, inv) = plans(n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        FftPair { fwd, inv, scratch: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub(crate) fn forward(&mut self, buf: &mut [Complex64]) {
        self.fwd.process_with_scratch(buf, &mut self.scratch);
    }

    pub(crate) fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inv.process_with_scratch(buf, &mut self.scratch);
    }
}
