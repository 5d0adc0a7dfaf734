//! FFT evaluation of the symmetric lattice sum `sum_k w_k (u_{j+k} + u_{j-k})`.
//!
//! Every interior node reaches at most `k_ext` nodes to either side, all of
//! them stored, so a circular convolution over the full node vector never
//! wraps for interior outputs.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct LatticeConvolver {
    len: usize,
    kernel_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for LatticeConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatticeConvolver").field("len", &self.len).finish()
    }
}

impl LatticeConvolver {
    /// `weights[k - 1]` is `w_k`; `len` is the number of stored nodes.
    pub fn new(weights: &[f64], len: usize) -> Self {
        assert!(2 * weights.len() < len, "stencil wider than the node vector");
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut kernel = vec![Complex64::new(0.0, 0.0); len];
        for (k, &w) in weights.iter().enumerate() {
            let k = k + 1;
            kernel[k].re = w;
            kernel[len - k].re = w;
        }
        forward.process(&mut kernel);
        LatticeConvolver {
            len,
            kernel_hat: kernel,
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Returns the lattice sum at every stored node; only entries whose
    /// stencil stays inside the vector are meaningful.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.len);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        buf.into_iter().map(|c| c.re * scale).collect()
    }
}
