//! ε-convergence of the deterministic `μ^N` expectation for Gaussian states.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::real::Real;
use crate::states::{PhasePoint, State};

use super::estimate::deterministic_expectation;
use super::observable::Observable;
use super::oracle::gaussian_weyl_oracle;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    #[serde(rename = "N")]
    pub order: u32,
    pub observable: String,
    pub error: f64,
    /// Slope of `log10 error` against `log10 ε` over all rows sharing
    /// `(observable, N)`.
    pub slope_fit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Fitted slope for `(observable, N)`.
    pub fn slope(&self, observable: &str, order: u32) -> Option<f64> {
        self.rows.iter().find(|r| r.observable == observable && r.order == order).map(|r| r.slope_fit)
    }

    pub fn csv_body(&self) -> String {
        let mut s = String::from("eps,N,observable,error,slope_fit\n");
        for r in &self.rows {
            s.push_str(&format!("{:e},{},\"{}\",{:e},{}\n", r.eps, r.order, r.observable, r.error, r.slope_fit));
        }
        s
    }
}

/// Least-squares slope of `log10 y` against `log10 x`; NaN if any `y ≤ 0`
/// or fewer than two points.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() || x.len() < 2 || y.iter().chain(x).any(|&v| !(v > 0.0)) {
        return f64::NAN;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Errors `|∫ a μ^N − ⟨g_w, op(a) g_w⟩|` over all `(a, N, ε)` cells, each
/// computed by [`deterministic_expectation`] in the scalar type `T` with
/// `nodes` Gauss–Hermite points per phase-space axis.
pub fn convergence_experiment<T: Real>(
    w: &PhasePoint<f64>,
    observables: &[(String, Observable)],
    orders: &[u32],
    eps_grid: &[f64],
    nodes: usize,
) -> Result<ConvergenceTable> {
    if eps_grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidParameter("eps grid values must be positive".into()));
    }
    for (_, a) in observables {
        if a.dim() != w.dim() {
            return Err(Error::DimensionMismatch { expected: w.dim(), got: a.dim() });
        }
    }
    let centre = PhasePoint::<T>::new(w.q.iter().map(|&v| T::c(v)).collect(), w.p.iter().map(|&v| T::c(v)).collect())?;
    let cells: Vec<(usize, u32, f64)> = observables
        .iter()
        .enumerate()
        .flat_map(|(i, _)| orders.iter().flat_map(move |&n| eps_grid.iter().map(move |&e| (i, n, e))))
        .collect();
    let errors: Vec<f64> = cells
        .par_iter()
        .map(|&(i, n, e)| {
            let a = &observables[i].1;
            let eps = T::c(e);
            let state = State::gaussian(centre.clone(), eps)?;
            let oracle = gaussian_weyl_oracle(&centre, a, eps)?;
            let value = deterministic_expectation(&state, a, n, nodes, &QuadratureSpec::default_for(&state))?;
            Ok((value - oracle.value).abs().f64())
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(cells.len());
    for (block, chunk) in cells.chunks(eps_grid.len().max(1)).enumerate() {
        let errs = &errors[block * eps_grid.len()..block * eps_grid.len() + chunk.len()];
        let slope = loglog_slope(eps_grid, errs);
        for (&(i, n, e), &err) in chunk.iter().zip(errs) {
            rows.push(ConvergenceRow {
                eps: e,
                order: n,
                observable: observables[i].0.clone(),
                error: err,
                slope_fit: slope,
            });
        }
    }
    Ok(ConvergenceTable { rows })
}
