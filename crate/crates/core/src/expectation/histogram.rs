//! Signed histograms of `μ^N` from per-order sample sets (`d = 1`).

use serde::{Deserialize, Serialize};

use crate::densities::SignedDensity;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::sampler::SampleSet;
use crate::states::State;

use super::estimate::combine_samples_check;

/// Bin layout over `[q_min, q_max] × [p_min, p_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub nq: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

/// Upper bound on histogram bins.
pub const MAX_BINS: usize = 10_000_000;

impl HistGrid {
    /// Bins of width `√ε/4` over the nominal centre `± 6√ε`.
    pub fn default_for<T: Real>(state: &State<T>) -> Self {
        let c = state.nominal_center().to_f64();
        let r = 6.0 * state.eps().f64().sqrt();
        HistGrid { q_min: c.q[0] - r, q_max: c.q[0] + r, nq: 48, p_min: c.p[0] - r, p_max: c.p[0] + r, np: 48 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nq == 0 || self.np == 0 {
            return Err(Error::GridMismatch("histogram needs at least one bin per axis".into()));
        }
        if self.nq.saturating_mul(self.np) > MAX_BINS {
            return Err(Error::GridMismatch(format!("{} x {} bins exceed {MAX_BINS}", self.nq, self.np)));
        }
        let finite = [self.q_min, self.q_max, self.p_min, self.p_max].iter().all(|v| v.is_finite());
        if !finite || !(self.q_max > self.q_min && self.p_max > self.p_min) {
            return Err(Error::GridMismatch("histogram box is empty, inverted or non-finite".into()));
        }
        Ok(())
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.nq as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.np as f64
    }

    pub fn bin_area(&self) -> f64 {
        self.dq() * self.dp()
    }

    /// Centre of bin `(i, j)`.
    pub fn centre(&self, i: usize, j: usize) -> (f64, f64) {
        (self.q_min + (i as f64 + 0.5) * self.dq(), self.p_min + (j as f64 + 0.5) * self.dp())
    }

    /// Row-major bin index (`q` slowest), `None` outside the box.
    pub fn bin(&self, q: f64, p: f64) -> Option<usize> {
        let i = ((q - self.q_min) / self.dq()).floor();
        let j = ((p - self.p_min) / self.dp()).floor();
        if i < 0.0 || j < 0.0 || i >= self.nq as f64 || j >= self.np as f64 || i.is_nan() || j.is_nan() {
            return None;
        }
        Some(i as usize * self.np + j as usize)
    }
}

/// Signed density estimate on a [`HistGrid`]; `values` are row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedGrid {
    pub grid: HistGrid,
    pub order: u32,
    pub n: usize,
    pub values: Vec<f64>,
}

impl SignedGrid {
    /// `Σ values · bin_area`.
    pub fn signed_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.bin_area()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(q, p, value)` at the bin centres.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values.iter().enumerate().map(|(k, &v)| {
            let (q, p) = self.grid.centre(k / self.grid.np, k % self.grid.np);
            (q, p, v)
        })
    }

    pub fn csv_body(&self) -> String {
        let mut s = String::from("q,p,signed_density\n");
        for (q, p, v) in self.cells() {
            s.push_str(&format!("{q},{p},{v:e}\n"));
        }
        s
    }
}

/// `(1/n) Σ_j (−1)^j C_{N−1,j} m_j count_j(bin) / bin_area`.
pub fn weighted_histogram<T: Real>(samples: &[SampleSet<T>], n_order: u32, grid: &HistGrid) -> Result<SignedGrid> {
    grid.validate()?;
    combine_samples_check(samples, n_order).map_err(|e| Error::GridMismatch(e.to_string()))?;
    let first = &samples[0];
    if first.dim != 1 {
        return Err(Error::GridMismatch(format!("histograms need d = 1, got {}", first.dim)));
    }
    let n = first.len();
    if samples.iter().any(|s| s.len() != n) || n == 0 {
        return Err(Error::GridMismatch("sample sets must be non-empty and of equal size".into()));
    }
    let weights = SignedDensity::<f64>::new(1, n_order, 1.0)?.sample_weights();
    let mut values = vec![0.0; grid.nq * grid.np];
    let scale = 1.0 / (n as f64 * grid.bin_area());
    for (s, w) in samples.iter().zip(weights) {
        for z in s.iter() {
            if let Some(b) = grid.bin(z[0].f64(), z[1].f64()) {
                values[b] += w * scale;
            }
        }
    }
    Ok(SignedGrid { grid: *grid, order: n_order, n, values })
}
