//! Integration backends and the windowed inner product `⟨ψ, T_z φ_k⟩`.

mod rules;
mod sobol;
mod sobol_table;

pub use rules::{
    gauss_hermite_1d, gauss_hermite_rule, gauss_legendre_1d, tridiagonal_eigenvalues, GaussHermite1d, GaussLegendre1d,
    NodeSet, MAX_TENSOR_NODES,
};
pub use sobol::{l2_star_discrepancy, sobol_nodes, Sobol, MAX_POINTS as SOBOL_MAX_POINTS};

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::specfun::{check_hermite_cap, MultiIndex, HERMITE_ORDER_CAP};
use crate::states::{PhasePoint, Primitive, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureKind {
    GaussHermite,
    QmcSobol,
    MonteCarlo,
}

/// Which rule to use and how many nodes: per axis for Gauss–Hermite, total
/// for the sampled kinds. `seed` only affects Monte Carlo.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub kind: QuadratureKind,
    pub nodes: usize,
    #[serde(default)]
    pub seed: u64,
}

impl QuadratureSpec {
    pub fn gauss_hermite(nodes: usize) -> Self {
        QuadratureSpec { kind: QuadratureKind::GaussHermite, nodes, seed: 0 }
    }

    pub fn qmc_sobol(nodes: usize) -> Self {
        QuadratureSpec { kind: QuadratureKind::QmcSobol, nodes, seed: 0 }
    }

    pub fn monte_carlo(nodes: usize, seed: u64) -> Self {
        QuadratureSpec { kind: QuadratureKind::MonteCarlo, nodes, seed }
    }

    /// Gauss–Hermite with 40 nodes per axis in `d ≤ 2` (hats then use
    /// momentum-refined Gauss–Legendre panels), Monte Carlo otherwise.
    ///
    /// Sampled rules are not the default for hats: their estimate of
    /// `⟨ψ, T_z φ_k⟩` keeps a non-decaying floor as `|p| → ∞`, which makes
    /// the spectrogram non-normalisable as a Metropolis target.
    pub fn default_for<T: Real>(state: &State<T>) -> Self {
        if state.dim() <= 2 {
            Self::gauss_hermite(40)
        } else {
            Self::monte_carlo(10_000, 0)
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
        }
        match self.kind {
            QuadratureKind::GaussHermite => {
                if dim > 3 {
                    return Err(Error::InvalidParameter(format!(
                        "Gauss-Hermite tensor rules are limited to d <= 3, got {dim}"
                    )));
                }
                if self.nodes > 200 {
                    return Err(Error::InvalidParameter(format!("Gauss-Hermite order {} exceeds 200", self.nodes)));
                }
            }
            QuadratureKind::QmcSobol => {
                if self.nodes as u64 > SOBOL_MAX_POINTS {
                    return Err(Error::InvalidParameter("too many Sobol points".into()));
                }
                if dim > 64 {
                    return Err(Error::SobolDimension(dim));
                }
            }
            QuadratureKind::MonteCarlo => {}
        }
        Ok(())
    }

    /// Standard normal sample points (row-major, `dim` per point) for the
    /// sampled kinds.
    ///
    /// Sobol points are shifted by half a cell of the leading `2^b` net and
    /// paired with their reflections `u ↦ 1 − u`, so the node set is exactly
    /// symmetric and the count is rounded up to even. Monte Carlo draws
    /// come from the ChaCha stream `call_index` of `seed`.
    pub fn standard_normal_offsets<T: Real>(&self, dim: usize, call_index: u64) -> Result<Vec<T>> {
        match self.kind {
            QuadratureKind::GaussHermite => Err(Error::Unsupported("Gauss-Hermite rules have no sample points".into())),
            QuadratureKind::QmcSobol => {
                let half = self.nodes.div_ceil(2);
                let bits = usize::BITS - (half - 1).leading_zeros();
                let shift = 0.5f64.powi(bits as i32 + 1);
                let normal = Normal::standard();
                let mut gen = Sobol::new(dim)?;
                let mut raw = vec![0u32; dim];
                let mut out = Vec::with_capacity(2 * half * dim);
                let mut mirror = Vec::with_capacity(dim);
                for _ in 0..half {
                    gen.next_raw(&mut raw)?;
                    mirror.clear();
                    for &r in &raw {
                        let u = r as f64 / 4294967296.0 + shift;
                        let v = normal.inverse_cdf(u);
                        out.push(T::c(v));
                        mirror.push(T::c(-v));
                    }
                    out.extend_from_slice(&mirror);
                }
                Ok(out)
            }
            QuadratureKind::MonteCarlo => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(call_index);
                Ok((0..self.nodes * dim)
                    .map(|_| {
                        let v: f64 = StandardNormal.sample(&mut rng);
                        T::c(v)
                    })
                    .collect())
            }
        }
    }
}

/// Precomputed rule for `⟨ψ, T_z φ_k⟩` at many `z`.
///
/// Gauss–Hermite: the smooth part of `ψ` is integrated with the rule
/// centred at the window position, the Gaussian factor of `φ_k` absorbed
/// into the weight; compact parts use composite Gauss–Legendre split at
/// their kinks. Sampled kinds draw nodes from `N(q, ε/2)`, the envelope of
/// `|T_z φ_k|²`, and divide by its density.
#[derive(Clone, Debug)]
pub struct WindowQuadrature<T> {
    state: State<T>,
    spec: QuadratureSpec,
    /// Standardised offsets `t = (x − q)/√ε`, `dim` per node.
    offsets: Vec<T>,
    /// Modified weights: density-corrected and multiplied by `ε^{d/4} e^{|t|²/2}`.
    weights: Vec<T>,
    /// Whether the offset rule covers every term (sampled kinds) or only smooth ones.
    offsets_cover_all: bool,
    compact_x: Vec<T>,
    compact_w: Vec<T>,
    /// Gauss–Legendre rule and breakpoints behind `compact_x`, kept for
    /// refining the panels at high momentum.
    compact_rule: Option<(GaussLegendre1d<T>, Vec<T>)>,
}

/// Upper bound on Gauss–Legendre panels per piece of a compact term.
const MAX_PANELS: usize = 4096;

impl<T: Real> WindowQuadrature<T> {
    pub fn new(state: &State<T>, spec: QuadratureSpec) -> Result<Self> {
        Self::with_call_index(state, spec, 0)
    }

    pub fn with_call_index(state: &State<T>, spec: QuadratureSpec, call_index: u64) -> Result<Self> {
        let dim = state.dim();
        spec.validate(dim)?;
        let eps = state.eps();
        let eps_quarter = eps.powf(T::n(dim) / T::c(4.0));
        let two = T::c(2.0);
        let (offsets, weights, cover_all) = match spec.kind {
            QuadratureKind::GaussHermite => {
                let rule = gauss_hermite_1d::<T>(spec.nodes)?;
                let modified: Vec<T> =
                    rule.nodes.iter().zip(&rule.weights).map(|(&t, &w)| w * (t * t / two).exp()).collect();
                let set = rules::tensor(&rule.nodes, &modified, dim);
                let w = set.weights.iter().map(|&w| w * eps_quarter).collect();
                (set.points, w, false)
            }
            QuadratureKind::QmcSobol | QuadratureKind::MonteCarlo => {
                let raw = spec.standard_normal_offsets::<T>(dim, call_index)?;
                let n = raw.len() / dim;
                let inv_sqrt2 = T::one() / two.sqrt();
                let t: Vec<T> = raw.iter().map(|&u| u * inv_sqrt2).collect();
                let base = T::PI().powf(T::n(dim) / two) * eps_quarter / T::n(n);
                let w =
                    t.chunks(dim).map(|tt| base * (tt.iter().fold(T::zero(), |a, &v| a + v * v) / two).exp()).collect();
                (t, w, true)
            }
        };
        let (compact_x, compact_w, compact_rule) = if !cover_all && state.has_compact_part() {
            let gl = gauss_legendre_1d::<T>(spec.nodes)?;
            let kinks = state.kinks();
            let (x, w) = gl.composite(&kinks, 1);
            (x, w, Some((gl, kinks)))
        } else {
            (Vec::new(), Vec::new(), None)
        };
        Ok(WindowQuadrature {
            state: state.clone(),
            spec,
            offsets,
            weights,
            offsets_cover_all: cover_all,
            compact_x,
            compact_w,
            compact_rule,
        })
    }

    pub fn state(&self) -> &State<T> {
        &self.state
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// Heuristic warning: the rule cannot resolve windows of this order.
    pub fn is_underresolved(&self, k: &MultiIndex) -> bool {
        match self.spec.kind {
            QuadratureKind::GaussHermite => k.entries().iter().any(|&kj| 2 * kj as usize + 2 > self.spec.nodes),
            _ => self.weights.len() < 100 * (k.order() as usize + 1),
        }
    }

    /// `⟨ψ, T_z φ_k⟩ = ∫ ψ conj(T_z φ_k)`.
    pub fn inner_product(&self, z: &PhasePoint<T>, k: &MultiIndex) -> Result<Complex<T>> {
        self.check(z, k)?;
        let mut out = [Complex::new(T::zero(), T::zero())];
        self.inner_products_raw(&z.q, &z.p, std::slice::from_ref(k), &mut out);
        Ok(out[0])
    }

    pub(crate) fn check(&self, z: &PhasePoint<T>, k: &MultiIndex) -> Result<()> {
        let d = self.state.dim();
        if z.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: z.dim() });
        }
        if k.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: k.dim() });
        }
        check_hermite_cap(k, HERMITE_ORDER_CAP)
    }

    /// Inner products for several windows at once, sharing state evaluations.
    /// Inputs are assumed validated.
    pub(crate) fn inner_products_raw(&self, q: &[T], p: &[T], ks: &[MultiIndex], out: &mut [Complex<T>]) {
        let d = q.len();
        let eps = self.state.eps();
        let sq = eps.sqrt();
        let zero = Complex::new(T::zero(), T::zero());
        for o in out.iter_mut() {
            *o = zero;
        }
        let max_order = ks.iter().flat_map(|k| k.entries().iter().copied()).max().unwrap_or(0);
        let mut table = vec![T::zero(); d * (max_order as usize + 1)];
        let mut x = vec![T::zero(); d];
        let terms = self.state.terms();
        let smooth_only = !self.offsets_cover_all;
        for (t, &w) in self.offsets.chunks(d).zip(&self.weights) {
            for j in 0..d {
                x[j] = q[j] + sq * t[j];
            }
            let psi = terms.iter().fold(zero, |acc, term| {
                if smooth_only && matches!(term.prim, Primitive::Hat(_)) {
                    acc
                } else {
                    acc + term.coeff * prim_eval(&term.prim, &x, eps)
                }
            });
            if psi.re == T::zero() && psi.im == T::zero() {
                continue;
            }
            let mut theta = T::zero();
            for j in 0..d {
                theta = theta + p[j] * t[j];
            }
            let (s, c) = (-theta / sq).sin_cos();
            let a = psi * Complex::new(c, s) * w;
            accumulate(&mut table, t, max_order, ks, a, out);
        }
        if let Some((gl, kinks)) = &self.compact_rule {
            let scale = eps.powf(T::c(-0.25));
            let two = T::c(2.0);
            // keep the window phase below `nodes` radians per panel
            let piece = kinks.windows(2).fold(T::zero(), |m, w| m.max(w[1] - w[0]));
            let panels = (p[0].abs() * piece / (eps * T::n(gl.nodes.len()))).ceil().to_usize().unwrap_or(MAX_PANELS);
            let refined;
            let (xs, ws) = if panels <= 1 {
                (&self.compact_x, &self.compact_w)
            } else {
                refined = gl.composite(kinks, panels.min(MAX_PANELS));
                (&refined.0, &refined.1)
            };
            for (&xi, &w) in xs.iter().zip(ws) {
                let psi = terms.iter().fold(zero, |acc, term| match term.prim {
                    Primitive::Hat(_) => acc + term.coeff * prim_eval(&term.prim, &[xi], eps),
                    _ => acc,
                });
                if psi.re == T::zero() && psi.im == T::zero() {
                    continue;
                }
                let t = (xi - q[0]) / sq;
                let env = (-t * t / two).exp();
                let (s, c) = (-p[0] * t / sq).sin_cos();
                let a = psi * Complex::new(c, s) * (w * scale * env);
                accumulate(&mut table, &[t], max_order, ks, a, out);
            }
        }
        // common phase e^{-i p·q / 2ε}
        let theta = (0..d).fold(T::zero(), |acc, j| acc + p[j] * q[j]) / (T::c(2.0) * eps);
        let (s, c) = (-theta).sin_cos();
        let phase = Complex::new(c, s);
        for o in out.iter_mut() {
            *o = *o * phase;
        }
    }
}

fn prim_eval<T: Real>(prim: &Primitive<T>, x: &[T], eps: T) -> Complex<T> {
    (0..x.len()).fold(Complex::new(T::one(), T::zero()), |acc, j| acc * prim.axis_factor(j, x[j], eps))
}

/// Adds `a Π_j h_{k_j}(t_j) e^{t_j²/2}` to `out[i]` for every window `k_i`.
fn accumulate<T: Real>(
    table: &mut [T],
    t: &[T],
    max_order: u32,
    ks: &[MultiIndex],
    a: Complex<T>,
    out: &mut [Complex<T>],
) {
    let stride = max_order as usize + 1;
    let two = T::c(2.0);
    for (j, &tj) in t.iter().enumerate() {
        let row = &mut table[j * stride..(j + 1) * stride];
        row[0] = T::PI().powf(T::c(-0.25));
        if max_order >= 1 {
            row[1] = two.sqrt() * tj * row[0];
        }
        for m in 1..max_order as usize {
            let mf = T::n(m);
            row[m + 1] = (two / (mf + T::one())).sqrt() * tj * row[m] - (mf / (mf + T::one())).sqrt() * row[m - 1];
        }
    }
    for (k, o) in ks.iter().zip(out.iter_mut()) {
        let mut poly = T::one();
        for (j, &kj) in k.entries().iter().enumerate() {
            poly = poly * table[j * stride + kj as usize];
        }
        *o = *o + a * poly;
    }
}

/// `⟨ψ, T_z φ_k⟩` with a freshly built rule.
pub fn inner_product_with_window<T: Real>(
    state: &State<T>,
    z: &PhasePoint<T>,
    k: &MultiIndex,
    quad: &QuadratureSpec,
) -> Result<Complex<T>> {
    WindowQuadrature::new(state, *quad)?.inner_product(z, k)
}
