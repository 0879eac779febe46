use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Unnormalised forward/inverse DFT on `M` or `M × M` complex arrays
/// stored row-major.
pub(crate) struct Transform {
    dim: usize,
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Transform {
    pub(crate) fn new(dim: usize, m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dim,
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(&self.forward, data);
    }

    /// Inverse transform without the `1/M^d` factor.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(&self.inverse, data);
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.m.pow(self.dim as u32));
        plan.process(data);
        if self.dim == 2 {
            transpose(data, self.m);
            plan.process(data);
            transpose(data, self.m);
        }
    }
}

fn transpose(data: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in i + 1..m {
            data.swap(i * m + j, j * m + i);
        }
    }
}
