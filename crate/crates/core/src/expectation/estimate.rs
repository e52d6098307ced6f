//! Signed-spectrogram estimators of `⟨ψ, op(a) ψ⟩`.

use rayon::prelude::*;
use serde::Serialize;

use crate::densities::{SignedDensity, SpectrogramEvaluator, MAX_ORDER};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_hermite_1d, QuadratureKind, QuadratureSpec};
use crate::real::Real;
use crate::sampler::{metropolis_chain, ChainConfig, SampleSet};
use crate::states::State;

use super::observable::Observable;

/// Number of batches for the batch-means standard error.
pub const BATCHES: usize = 50;

/// Default Gauss–Hermite order per phase-space axis of the deterministic path.
pub const DETERMINISTIC_NODES: usize = 200;

/// Upper bound on the phase-space tensor grid of the deterministic path.
const MAX_DETERMINISTIC_GRID: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectationResult {
    pub estimate: f64,
    pub std_error: f64,
    pub per_order_means: Vec<f64>,
    /// Samples per order (0 for the deterministic path).
    pub n: usize,
    pub order: u32,
    pub method: String,
}

/// Mean and batch-means standard error of `values`.
pub fn batch_means<T: Real>(values: &[T]) -> (T, T) {
    let n = values.len();
    let mean = values.iter().fold(T::zero(), |a, &b| a + b) / T::n(n.max(1));
    let batches = BATCHES.min(n);
    if batches < 2 {
        return (mean, T::zero());
    }
    let size = n / batches;
    let means: Vec<T> = (0..batches)
        .map(|b| values[b * size..(b + 1) * size].iter().fold(T::zero(), |a, &v| a + v) / T::n(size))
        .collect();
    let mb = means.iter().fold(T::zero(), |a, &b| a + b) / T::n(batches);
    let var = means.iter().fold(T::zero(), |a, &m| a + (m - mb) * (m - mb)) / T::n(batches - 1);
    (mean, (var / T::n(batches)).sqrt())
}

/// Seed of the chain for order `j`, derived from the master seed.
pub fn order_seed(master: u64, j: u32) -> u64 {
    master.wrapping_add((j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Draws one sample set per order `j < N`.
pub fn sample_orders<T: Real>(state: &State<T>, n_order: u32, cfg: &ChainConfig) -> Result<Vec<SampleSet<T>>> {
    if n_order == 0 || n_order > MAX_ORDER {
        return Err(Error::InvalidParameter(format!("order N = {n_order} outside 1..={MAX_ORDER}")));
    }
    (0..n_order)
        .into_par_iter()
        .map(|j| {
            let mut c = cfg.clone();
            c.seed = order_seed(cfg.seed, j);
            metropolis_chain(state, j, &c)
        })
        .collect()
}

/// Checks that `samples` holds orders `0..N` in sequence with one dimension.
pub(crate) fn combine_samples_check<T>(samples: &[SampleSet<T>], n_order: u32) -> Result<()> {
    if n_order == 0 || samples.len() != n_order as usize || samples.iter().enumerate().any(|(j, s)| s.order != j as u32)
    {
        return Err(Error::InvalidParameter(format!("need sample sets for orders 0..{n_order} in sequence")));
    }
    if samples.iter().any(|s| s.dim != samples[0].dim) {
        return Err(Error::InvalidParameter("sample sets differ in dimension".into()));
    }
    Ok(())
}

/// Combines per-order sample sets: `Σ_j (−1)^j C_{N−1,j} m_j mean_j(a)`.
pub fn combine_samples<T: Real>(samples: &[SampleSet<T>], a: &Observable, n_order: u32) -> Result<ExpectationResult> {
    combine_samples_check(samples, n_order)?;
    let first = &samples[0];
    let dim = first.dim;
    if a.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: a.dim() });
    }
    let density = SignedDensity::<T>::new(dim, n_order, T::one())?;
    let weights = density.sample_weights();
    let mut estimate = T::zero();
    let mut var = T::zero();
    let mut means = Vec::with_capacity(samples.len());
    for (s, &w) in samples.iter().zip(&weights) {
        let values: Vec<T> = s.iter().map(|z| a.eval(z)).collect();
        let (m, se) = batch_means(&values);
        estimate = estimate + w * m;
        var = var + w * w * se * se;
        means.push(m.f64());
    }
    Ok(ExpectationResult {
        estimate: estimate.f64(),
        std_error: var.sqrt().f64(),
        per_order_means: means,
        n: first.len(),
        order: n_order,
        method: "mcmc".into(),
    })
}

/// Stochastic estimate of `⟨ψ, op(a) ψ⟩` from Metropolis samples of each
/// averaged spectrogram.
pub fn estimate_expectation<T: Real>(
    state: &State<T>,
    a: &Observable,
    n_order: u32,
    cfg: &ChainConfig,
) -> Result<ExpectationResult> {
    if a.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), got: a.dim() });
    }
    let samples = sample_orders(state, n_order, cfg)?;
    combine_samples(&samples, a, n_order)
}

/// `∫ a μ_ψ^N dz` by a phase-space Gauss–Hermite tensor rule with weight
/// `e^{−|z − c|²/2ε}` around the nominal centre `c` of the state.
///
/// `nodes` per axis is reduced when the `2d`-dimensional grid would exceed
/// 10^6 points, and to half the window rule's order when spectrograms come
/// from Gauss–Hermite quadrature. The rule integrates `a μ^N` exactly for Gaussian states and
/// polynomial `a` of low degree.
pub fn deterministic_expectation<T: Real>(
    state: &State<T>,
    a: &Observable,
    n_order: u32,
    nodes: usize,
    quad: &QuadratureSpec,
) -> Result<T> {
    if a.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), got: a.dim() });
    }
    let eval = SpectrogramEvaluator::new(state, *quad)?;
    integrate_mu(&eval, n_order, nodes, |z| a.eval(z))
}

/// `∫ f μ^N dz` with the rule of [`deterministic_expectation`].
pub fn integrate_mu<T: Real>(
    eval: &SpectrogramEvaluator<T>,
    n_order: u32,
    nodes: usize,
    f: impl Fn(&[T]) -> T + Sync,
) -> Result<T> {
    if n_order == 0 || n_order > MAX_ORDER {
        return Err(Error::InvalidParameter(format!("order N = {n_order} outside 1..={MAX_ORDER}")));
    }
    let state = eval.state();
    let d = state.dim();
    let axes = 2 * d;
    let mut cap = (MAX_DETERMINISTIC_GRID as f64).powf(1.0 / axes as f64).floor() as usize;
    let spec = eval.quadrature().spec();
    if !eval.is_closed_form() && spec.kind == QuadratureKind::GaussHermite {
        // Outer nodes must stay where the window rule resolves the phase
        // e^{-ip·t/√ε}; beyond that it aliases.
        cap = cap.min(spec.nodes / 2);
    }
    let n = nodes.min(cap).max(1);
    let rule = gauss_hermite_1d::<T>(n)?;
    let centre = state.nominal_center().coords();
    let scale = (T::c(2.0) * state.eps()).sqrt();
    let total_nodes = n.pow(axes as u32);
    let partial: Vec<T> = (0..total_nodes)
        .into_par_iter()
        .fold(
            || (T::zero(), vec![T::zero(); axes]),
            |(acc, mut z), mut idx| {
                let mut w = T::one();
                for (axis, zi) in z.iter_mut().enumerate().rev() {
                    let i = idx % n;
                    idx /= n;
                    *zi = centre[axis] + scale * rule.nodes[i];
                    w = w * rule.raw_weights[i];
                }
                let mu = eval.mu_raw(n_order, &z[..d], &z[d..]);
                let v = if mu == T::zero() { T::zero() } else { w * f(&z) * mu };
                (acc + v, z)
            },
        )
        .map(|(acc, _)| acc)
        .collect();
    // sum in a fixed order for reproducibility
    let total = partial.into_iter().fold(T::zero(), |a, b| a + b);
    Ok(total * scale.powi(axes as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::{gaussian_weyl_oracle, parse_observable};
    use crate::states::PhasePoint;

    fn gauss(eps: f64) -> State<f64> {
        State::gaussian(PhasePoint::new(vec![0.5], vec![-1.0]).unwrap(), eps).unwrap()
    }

    #[test]
    fn constant_observable_is_exact() {
        let g = gauss(0.05);
        let one = parse_observable("1", 1).unwrap();
        for n in 1..=4 {
            let r = estimate_expectation(&g, &one, n, &ChainConfig::new(500, 1)).unwrap();
            assert!((r.estimate - 1.0).abs() < 1e-12);
            assert_eq!(r.std_error, 0.0);
        }
    }

    #[test]
    fn quartic_within_three_standard_errors() {
        let eps = 0.01;
        let g = gauss(eps);
        let a = parse_observable("q^4 + 1", 1).unwrap();
        let r = estimate_expectation(&g, &a, 3, &ChainConfig::new(100_000, 17)).unwrap();
        let oracle = 17.0 / 16.0 + 0.75 * eps + 0.75 * eps * eps;
        assert!((r.estimate - oracle).abs() < 3.0 * r.std_error, "{r:?} vs {oracle}");
        assert_eq!(r.per_order_means.len(), 3);
    }

    #[test]
    fn deterministic_polynomial_exactness() {
        let eps = 0.1;
        let g = gauss(eps);
        let a = parse_observable("q^4 + 1", 1).unwrap();
        let oracle = gaussian_weyl_oracle(&PhasePoint::new(vec![0.5], vec![-1.0]).unwrap(), &a, eps).unwrap().value;
        let quad = QuadratureSpec::gauss_hermite(40);
        let v = deterministic_expectation(&g, &a, 3, 60, &quad).unwrap();
        assert!((v - oracle).abs() < 1e-12);
        // N = 1 (Husimi) carries an O(ε) bias
        let h = deterministic_expectation(&g, &a, 1, 60, &quad).unwrap();
        assert!((h - oracle).abs() > 1e-3);
    }

    #[test]
    fn batch_means_of_iid_noise() {
        let values: Vec<f64> = (0..10_000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let (m, se) = batch_means(&values);
        assert_eq!(m, 0.0);
        assert_eq!(se, 0.0);
    }
}
