//! Deterministic sample generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::Chart;
use crate::par::Execution;
use crate::warped::StaticSpacetime;

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    FiberPoints = 1,
    CausalVectors = 2,
    Pairs = 3,
    TimeValues = 4,
}

pub fn rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream as u64);
    r
}

/// `count` points drawn uniformly from the box.
pub fn uniform_points(bounds: &[(f64, f64)], count: usize, seed: u64, stream: Stream) -> Vec<Vec<f64>> {
    let mut r = rng(seed, stream);
    (0..count)
        .map(|_| bounds.iter().map(|&(lo, hi)| lo + (hi - lo) * r.random::<f64>()).collect())
        .collect()
}

/// `count` evenly spaced values covering `[lo, hi]` (the midpoint if `count == 1`).
pub fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

/// How many samples to draw, from which seed, and the tolerance verdicts use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub samples: usize,
    /// Grid size for functions of `t`.
    pub t_samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub exec: Execution,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            samples: 64,
            t_samples: 41,
            seed: 1,
            tol: 1e-8,
            exec: Execution::default(),
        }
    }
}

impl Options {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn check(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("sample count must be at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid(format!("tolerance {} must be nonnegative", self.tol)));
        }
        Ok(())
    }
}

/// Sample points inside the chart's shrunken box.
pub fn fiber_points(chart: &Chart, opts: &Options) -> Result<Vec<Vec<f64>>> {
    opts.check()?;
    Ok(uniform_points(&chart.sample_box(), opts.samples, opts.seed, Stream::FiberPoints))
}

/// Points `(t, x)` on the product chart.
pub fn spacetime_points(s: &StaticSpacetime, opts: &Options) -> Result<Vec<Vec<f64>>> {
    let fiber = fiber_points(s.fiber().chart(), opts)?;
    let (a, b) = s.t_sample_range();
    let ts = uniform_points(&[(a, b)], opts.samples, opts.seed, Stream::TimeValues);
    Ok(fiber
        .into_iter()
        .zip(ts)
        .map(|(x, t)| std::iter::once(t[0]).chain(x).collect())
        .collect())
}

/// Evenly spaced `t` values over the spacetime's sampling window.
pub fn time_grid(s: &StaticSpacetime, opts: &Options) -> Vec<f64> {
    let (a, b) = s.t_sample_range();
    grid(a, b, opts.t_samples.max(2))
}

/// Standard normal vector of length `dim`.
pub fn gaussian(r: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| r.sample(StandardNormal)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_stay_in_box_and_repeat() {
        let b = [(-1.0, 1.0), (2.0, 3.0)];
        let a = uniform_points(&b, 100, 9, Stream::FiberPoints);
        assert_eq!(a, uniform_points(&b, 100, 9, Stream::FiberPoints));
        assert_ne!(a, uniform_points(&b, 100, 9, Stream::Pairs));
        assert!(a.iter().all(|p| (-1.0..=1.0).contains(&p[0]) && (2.0..=3.0).contains(&p[1])));
    }

    #[test]
    fn grid_endpoints() {
        assert_eq!(grid(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(grid(0.0, 1.0, 1), vec![0.5]);
    }
}
