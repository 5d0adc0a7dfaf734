use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::grid::{ExteriorData, Grid1D, GridFunction};
use crate::operator::Discretization;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub s: f64,
    pub direct_seconds: f64,
    pub fast_seconds: f64,
    /// `max |fast - direct| / (1 + max |direct|)`.
    pub max_rel_diff: f64,
}

/// Times the direct and FFT evaluations on a random grid function over
/// `(-1, 1)` with `r_trunc = 8`. Each path is timed as the best of `repeats`.
pub fn benchmark_fast_path(n: usize, s: f64, seed: u64, repeats: usize) -> Result<BenchRow> {
    let grid = Grid1D::new(-1.0, 1.0, n, 8.0)?;
    let disc = Discretization::new(grid, s, 1e4, ExteriorData::constant(0.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u = GridFunction::new(grid, values)?;
    // warm up the FFT plan
    let _ = disc.apply_fast(&u)?;
    let mut direct_seconds = f64::INFINITY;
    let mut fast_seconds = f64::INFINITY;
    let mut direct = Vec::new();
    let mut fast = Vec::new();
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        direct = disc.apply_interior(&u)?;
        direct_seconds = direct_seconds.min(t.elapsed().as_secs_f64());
        let t = Instant::now();
        fast = disc.apply_fast(&u)?;
        fast_seconds = fast_seconds.min(t.elapsed().as_secs_f64());
    }
    let scale = 1.0 + direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = direct.iter().zip(&fast).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(BenchRow {
        n,
        s,
        direct_seconds,
        fast_seconds,
        max_rel_diff: diff / scale,
    })
}
