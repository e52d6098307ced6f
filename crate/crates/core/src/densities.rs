//! Wigner, Husimi and Hermite-spectrogram densities and the signed density `μ^N`.

use num_complex::Complex;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_hermite_1d, gauss_legendre_1d, QuadratureSpec, WindowQuadrature};
use crate::real::Real;
use crate::specfun::{
    expansion_coefficients, laguerre, laplace_laguerre, multi_indices, multiplicity, ratio_to_real, MultiIndex,
};
use crate::states::{PhasePoint, Primitive, State, StateKind};

/// Largest order `N` of `μ^N` supported by the coefficient tables.
pub const MAX_ORDER: u32 = 8;

/// `ρ_j = 2(q_j² + p_j²)/ε`.
pub fn rho<T: Real>(z: &PhasePoint<T>, eps: T) -> Vec<T> {
    z.q.iter().zip(&z.p).map(|(&q, &p)| T::c(2.0) * (q * q + p * p) / eps).collect()
}

fn check_dim<T: Real>(state: &State<T>, z: &PhasePoint<T>) -> Result<()> {
    if z.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), got: z.dim() });
    }
    Ok(())
}

fn factorial<T: Real>(n: u32) -> T {
    (1..=n as usize).fold(T::one(), |acc, m| acc * T::n(m))
}

/// Closed-form Wigner function of a Gaussian packet or a Hermite state.
pub fn wigner_closed_form<T: Real>(state: &State<T>, z: &PhasePoint<T>) -> Result<T> {
    check_dim(state, z)?;
    let eps = state.eps();
    let d = state.dim();
    let pref = (T::PI() * eps).powi(-(d as i32));
    match state.kind() {
        StateKind::Gaussian(w) => Ok(pref * (-z.dist2(w) / eps).exp()),
        StateKind::Hermite(k) => {
            let r = rho(z, eps);
            let sign = if k.order() % 2 == 0 { T::one() } else { -T::one() };
            let lag = k.entries().iter().zip(&r).fold(T::one(), |acc, (&kj, &rj)| acc * laguerre(kj, rj));
            Ok(pref * (-z.dist2(&PhasePoint::origin(d)) / eps).exp() * sign * lag)
        }
        _ => Err(Error::Unsupported("closed-form Wigner functions exist only for Gaussian and Hermite states".into())),
    }
}

/// Numerical Wigner transform with the imaginary residual (which vanishes
/// in exact arithmetic).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WignerValue<T> {
    pub value: T,
    pub imag_residual: T,
}

/// `(2πε)^{-1} ∫ e^{ipy/ε} ψ(q − y/2) conj(ψ(q + y/2)) dy` in one dimension.
pub fn wigner_numerical<T: Real>(state: &State<T>, z: &PhasePoint<T>, quad: &QuadratureSpec) -> Result<T> {
    Ok(wigner_numerical_full(state, z, quad)?.value)
}

/// Term pairs are integrated separately: Gauss–Hermite in `y` around the
/// product envelope for smooth pairs, composite Gauss–Legendre over the
/// support split at the kinks when a hat is involved. `quad.nodes` sets the
/// order of either rule.
pub fn wigner_numerical_full<T: Real>(
    state: &State<T>,
    z: &PhasePoint<T>,
    quad: &QuadratureSpec,
) -> Result<WignerValue<T>> {
    if state.dim() != 1 {
        return Err(Error::Unsupported("numerical Wigner transform is implemented for d = 1 only".into()));
    }
    check_dim(state, z)?;
    if quad.nodes == 0 || quad.nodes > 200 {
        return Err(Error::InvalidParameter(format!("Wigner rule order {} outside 1..=200", quad.nodes)));
    }
    let eps = state.eps();
    let (q, p) = (z.q[0], z.p[0]);
    let gh = gauss_hermite_1d::<T>(quad.nodes)?;
    let gl = gauss_legendre_1d::<T>(quad.nodes)?;
    let two = T::c(2.0);
    let sq = eps.sqrt();
    let mut total = Complex::new(T::zero(), T::zero());
    let terms = state.terms();
    for a in terms {
        for b in terms {
            let integrand = |y: T| {
                let (s, c) = (p * y / eps).sin_cos();
                a.prim.axis_factor(0, q - y / two, eps)
                    * b.prim.axis_factor(0, q + y / two, eps).conj()
                    * Complex::new(c, s)
            };
            let mut acc = Complex::new(T::zero(), T::zero());
            let ranges: Vec<[T; 3]> = [(&a.prim, true), (&b.prim, false)]
                .iter()
                .filter_map(|(prim, left)| match prim {
                    Primitive::Hat(c) => {
                        let kink = if *left { two * (q - *c) } else { two * (*c - q) };
                        Some([kink - two * sq, kink, kink + two * sq])
                    }
                    _ => None,
                })
                .collect();
            if ranges.is_empty() {
                let pos = |prim: &Primitive<T>| match prim {
                    Primitive::Gaussian(w) => w.q[0],
                    _ => T::zero(),
                };
                let y0 = pos(&b.prim) - pos(&a.prim);
                for (&t, &w) in gh.nodes.iter().zip(&gh.raw_weights) {
                    acc = acc + integrand(y0 + two * sq * t) * (w * two * sq);
                }
            } else {
                let lo = ranges.iter().fold(T::neg_infinity(), |m, r| m.max(r[0]));
                let hi = ranges.iter().fold(T::infinity(), |m, r| m.min(r[2]));
                if hi > lo {
                    let mut breaks: Vec<T> =
                        ranges.iter().flatten().copied().filter(|x| *x >= lo && *x <= hi).collect();
                    breaks.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
                    breaks.dedup();
                    let (ys, ws) = gl.composite(&breaks, 1);
                    for (&y, &w) in ys.iter().zip(&ws) {
                        acc = acc + integrand(y) * w;
                    }
                }
            }
            total = total + a.coeff * b.coeff.conj() * acc;
        }
    }
    let scale = T::one() / (two * T::PI() * eps);
    Ok(WignerValue { value: total.re * scale, imag_residual: total.im.abs() * scale })
}

/// Evaluates spectrograms `S_ψ^{φ_k}(z) = (2πε)^{-d} |⟨ψ, T_z φ_k⟩|²` of one
/// state, using closed forms where they exist.
#[derive(Clone, Debug)]
pub struct SpectrogramEvaluator<T> {
    quad: WindowQuadrature<T>,
    force_quadrature: bool,
    /// Multi-indices of each order below `MAX_ORDER`.
    indices: Vec<Vec<MultiIndex>>,
    /// Real `(-1)^j C_{N-1,j}` per `N` and `j`.
    signed: Vec<Vec<T>>,
}

impl<T: Real> SpectrogramEvaluator<T> {
    pub fn new(state: &State<T>, quad: QuadratureSpec) -> Result<Self> {
        Self::from_quadrature(WindowQuadrature::new(state, quad)?)
    }

    pub fn from_quadrature(quad: WindowQuadrature<T>) -> Result<Self> {
        let d = quad.state().dim();
        let indices = (0..MAX_ORDER).map(|j| multi_indices(d, j)).collect();
        let signed = (1..=MAX_ORDER)
            .map(|n| {
                let c = expansion_coefficients(d, n)?;
                Ok((0..n as usize).map(|j| ratio_to_real::<T>(&c.signed(j))).collect())
            })
            .collect::<Result<Vec<Vec<T>>>>()?;
        Ok(SpectrogramEvaluator { quad, force_quadrature: false, indices, signed })
    }

    /// Always use the quadrature path, even when a closed form exists.
    pub fn with_force_quadrature(mut self, force: bool) -> Self {
        self.force_quadrature = force;
        self
    }

    pub fn state(&self) -> &State<T> {
        self.quad.state()
    }

    pub fn quadrature(&self) -> &WindowQuadrature<T> {
        &self.quad
    }

    fn norm_const(&self) -> T {
        let s = self.state();
        (T::c(2.0) * T::PI() * s.eps()).powi(-(s.dim() as i32))
    }

    /// `ζ_j`-resolved `|ζ_j|²/2ε` around `centre`.
    fn half_rho(&self, q: &[T], p: &[T], centre: &PhasePoint<T>) -> impl Iterator<Item = T> + '_ {
        let two_eps = T::c(2.0) * self.state().eps();
        let v: Vec<T> = (0..q.len())
            .map(|j| {
                let dq = q[j] - centre.q[j];
                let dp = p[j] - centre.p[j];
                (dq * dq + dp * dp) / two_eps
            })
            .collect();
        v.into_iter()
    }

    /// Closed form of `S_ψ^{φ_k}` when one is available.
    pub fn closed_form(&self, k: &MultiIndex, z: &PhasePoint<T>) -> Option<T> {
        let (centre, power) = match self.state().kind() {
            StateKind::Gaussian(w) => (w.clone(), k),
            StateKind::Hermite(kp) if k.order() == 0 => (PhasePoint::origin(kp.dim()), kp),
            _ => return None,
        };
        let mut value = self.norm_const();
        let mut r_total = T::zero();
        for (r, &kj) in self.half_rho(&z.q, &z.p, &centre).zip(power.entries()) {
            r_total = r_total + r;
            value = value * r.powi(kj as i32) / factorial::<T>(kj);
        }
        Some(value * (-r_total).exp())
    }

    pub fn spectrogram(&self, k: &MultiIndex, z: &PhasePoint<T>) -> Result<T> {
        self.quad.check(z, k)?;
        if !self.force_quadrature {
            if let Some(v) = self.closed_form(k, z) {
                return Ok(v);
            }
        }
        let mut out = [Complex::new(T::zero(), T::zero())];
        self.quad.inner_products_raw(&z.q, &z.p, std::slice::from_ref(k), &mut out);
        Ok((self.norm_const() * out[0].norm_sqr()).max(T::zero()))
    }

    pub fn husimi(&self, z: &PhasePoint<T>) -> Result<T> {
        self.spectrogram(&MultiIndex::zeros(self.state().dim()), z)
    }

    fn gaussian_centre(&self) -> Option<&PhasePoint<T>> {
        match self.state().kind() {
            StateKind::Gaussian(w) if !self.force_quadrature => Some(w),
            _ => None,
        }
    }

    /// Whether every spectrogram comes from a closed form.
    pub(crate) fn is_closed_form(&self) -> bool {
        self.gaussian_centre().is_some()
    }

    /// `Σ_{|k|=j} S_ψ^{φ_k}` at flat coordinates; no validation.
    fn order_sums(&self, q: &[T], p: &[T], orders: u32, out: &mut Vec<T>) {
        out.clear();
        if let Some(w) = self.gaussian_centre() {
            // Σ_{|k|=j} Π r_i^{k_i}/k_i! = R^j / j!
            let r: T = self.half_rho(q, p, w).fold(T::zero(), |a, b| a + b);
            let base = self.norm_const() * (-r).exp();
            let mut term = base;
            for j in 0..orders {
                if j > 0 {
                    term = term * r / T::n(j as usize);
                }
                out.push(term);
            }
            return;
        }
        let ks: Vec<MultiIndex> = self.indices[..orders as usize].iter().flatten().cloned().collect();
        let mut vals = vec![Complex::new(T::zero(), T::zero()); ks.len()];
        self.quad.inner_products_raw(q, p, &ks, &mut vals);
        let c = self.norm_const();
        let mut pos = 0;
        for j in 0..orders as usize {
            let m = self.indices[j].len();
            let s = vals[pos..pos + m].iter().fold(T::zero(), |acc, v| acc + v.norm_sqr());
            out.push((c * s).max(T::zero()));
            pos += m;
        }
        if !self.force_quadrature {
            if let StateKind::Hermite(_) = self.state().kind() {
                if let Some(v) =
                    self.closed_form(&MultiIndex::zeros(q.len()), &PhasePoint { q: q.to_vec(), p: p.to_vec() })
                {
                    out[0] = v;
                }
            }
        }
    }

    fn check_order(&self, n: u32) -> Result<()> {
        if n == 0 || n > MAX_ORDER {
            return Err(Error::InvalidParameter(format!("order N = {n} outside 1..={MAX_ORDER}")));
        }
        Ok(())
    }

    fn check_point(&self, z: &PhasePoint<T>) -> Result<()> {
        check_dim(self.state(), z)
    }

    /// Averaged spectrogram of order `j`, `m_j^{-1} Σ_{|k|=j} S_ψ^{φ_k}(z)`.
    pub fn averaged(&self, j: u32, z: &PhasePoint<T>) -> Result<T> {
        self.check_point(z)?;
        if j >= MAX_ORDER {
            return Err(Error::InvalidParameter(format!("spectrogram order {j} exceeds {}", MAX_ORDER - 1)));
        }
        Ok(self.averaged_raw(j, &z.q, &z.p))
    }

    pub(crate) fn averaged_raw(&self, j: u32, q: &[T], p: &[T]) -> T {
        let d = q.len();
        if let Some(w) = self.gaussian_centre() {
            let r: T = self.half_rho(q, p, w).fold(T::zero(), |a, b| a + b);
            let v = self.norm_const() * (-r).exp() * r.powi(j as i32) / factorial::<T>(j);
            return v / T::n(multiplicity(d, j) as usize);
        }
        let ks = &self.indices[j as usize];
        let mut vals = vec![Complex::new(T::zero(), T::zero()); ks.len()];
        self.quad.inner_products_raw(q, p, ks, &mut vals);
        let s = vals.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr());
        let mut v = (self.norm_const() * s).max(T::zero());
        if j == 0 && !self.force_quadrature {
            if let StateKind::Hermite(_) = self.state().kind() {
                v = self.closed_form(&MultiIndex::zeros(d), &PhasePoint { q: q.to_vec(), p: p.to_vec() }).unwrap_or(v);
            }
        }
        v / T::n(ks.len())
    }

    /// `μ_ψ^N(z) = Σ_j (-1)^j C_{N-1,j} Σ_{|k|=j} S_ψ^{φ_k}(z)`.
    pub fn mu(&self, n: u32, z: &PhasePoint<T>) -> Result<T> {
        self.check_order(n)?;
        self.check_point(z)?;
        Ok(self.mu_raw(n, &z.q, &z.p))
    }

    pub(crate) fn mu_raw(&self, n: u32, q: &[T], p: &[T]) -> T {
        let mut sums = Vec::with_capacity(n as usize);
        self.order_sums(q, p, n, &mut sums);
        sums.iter().zip(&self.signed[n as usize - 1]).fold(T::zero(), |acc, (s, c)| acc + *s * *c)
    }
}

/// One-off spectrogram evaluation.
pub fn spectrogram<T: Real>(state: &State<T>, k: &MultiIndex, z: &PhasePoint<T>, quad: &QuadratureSpec) -> Result<T> {
    SpectrogramEvaluator::new(state, *quad)?.spectrogram(k, z)
}

pub fn husimi<T: Real>(state: &State<T>, z: &PhasePoint<T>, quad: &QuadratureSpec) -> Result<T> {
    SpectrogramEvaluator::new(state, *quad)?.husimi(z)
}

pub fn mu_density<T: Real>(state: &State<T>, n: u32, z: &PhasePoint<T>, quad: &QuadratureSpec) -> Result<T> {
    SpectrogramEvaluator::new(state, *quad)?.mu(n, z)
}

/// `μ^N = Σ_{m<N} (−ε)^m/(4^m m!) Δ^m S^{g_0}_ψ` for a Gaussian packet, with
/// the Laplacians taken from the Laguerre expansion of the Husimi function
/// (a Wigner function of the ground state at `2ε`).
pub fn mu_density_via_laplacians<T: Real>(state: &State<T>, n: u32, z: &PhasePoint<T>) -> Result<T> {
    check_dim(state, z)?;
    if n == 0 || n > MAX_ORDER {
        return Err(Error::InvalidParameter(format!("order N = {n} outside 1..={MAX_ORDER}")));
    }
    let w = match state.kind() {
        StateKind::Gaussian(w) => w,
        _ => return Err(Error::Unsupported("the Laplacian route needs a Gaussian state".into())),
    };
    let eps = state.eps();
    let d = state.dim();
    let rho_p: Vec<T> = (0..d)
        .map(|j| {
            let dq = z.q[j] - w.q[j];
            let dp = z.p[j] - w.p[j];
            (dq * dq + dp * dp) / eps
        })
        .collect();
    let husimi = (T::c(2.0) * T::PI() * eps).powi(-(d as i32))
        * (-rho_p.iter().fold(T::zero(), |a, &b| a + b) / T::c(2.0)).exp();
    let mut total = T::zero();
    let mut scale = T::one();
    for m in 0..n {
        if m > 0 {
            scale = scale / (T::c(4.0) * T::n(m as usize));
        }
        total = total + scale * laplace_laguerre(d, m)?.polynomial(&rho_p);
    }
    Ok(husimi * total)
}

/// One component of `μ^N`: weight `(-1)^j C_{N-1,j}` on the `m_j`-fold sum
/// of order-`j` spectrograms.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedComponent {
    pub order: u32,
    pub weight: BigRational,
    pub multiplicity: u64,
}

/// `μ^N` as a signed combination of averaged spectrograms.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedDensity<T> {
    pub order: u32,
    pub dim: usize,
    pub eps: T,
    pub components: Vec<SignedComponent>,
}

impl<T: Real> SignedDensity<T> {
    pub fn new(dim: usize, order: u32, eps: T) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::InvalidParameter(format!("order N = {order} exceeds {MAX_ORDER}")));
        }
        let c = expansion_coefficients(dim, order)?;
        let components = (0..order as usize)
            .map(|j| SignedComponent { order: j as u32, weight: c.signed(j), multiplicity: c.multiplicity(j) })
            .collect();
        Ok(SignedDensity { order, dim, eps, components })
    }

    /// `w_j m_j` as scalars: the factor applied to the mean over order-`j` samples.
    pub fn sample_weights(&self) -> Vec<T> {
        self.components.iter().map(|c| ratio_to_real::<T>(&c.weight) * T::n(c.multiplicity as usize)).collect()
    }

    /// Exact `Σ_j w_j m_j`, the total mass.
    pub fn signed_mass(&self) -> BigRational {
        self.components.iter().fold(BigRational::from_integer(0.into()), |acc, c| {
            acc + &c.weight * BigRational::from_integer(c.multiplicity.into())
        })
    }

    pub fn evaluate(&self, eval: &SpectrogramEvaluator<T>, z: &PhasePoint<T>) -> Result<T> {
        eval.mu(self.order, z)
    }
}

/// Rectangular phase-space grid in `d = 1`; nodes include both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid2 {
    pub q_min: f64,
    pub q_max: f64,
    pub nq: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

/// Upper bound on grid cells.
pub const MAX_GRID_CELLS: usize = 10_000_000;

impl Grid2 {
    pub fn validate(&self) -> Result<()> {
        if self.nq == 0 || self.np == 0 {
            return Err(Error::GridMismatch("grid needs at least one node per axis".into()));
        }
        if self.nq.saturating_mul(self.np) > MAX_GRID_CELLS {
            return Err(Error::GridMismatch(format!("{} x {} grid exceeds {MAX_GRID_CELLS} cells", self.nq, self.np)));
        }
        if !(self.q_max >= self.q_min && self.p_max >= self.p_min) || !self.q_min.is_finite() || !self.p_max.is_finite()
        {
            return Err(Error::GridMismatch("grid bounds are inverted or non-finite".into()));
        }
        Ok(())
    }

    fn axis(min: f64, max: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            (min + max) / 2.0
        } else {
            min + (max - min) * i as f64 / (n - 1) as f64
        }
    }

    /// Row-major points `(q, p)`, `q` slowest.
    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.nq)
            .flat_map(|i| {
                (0..self.np).map(move |j| {
                    (Self::axis(self.q_min, self.q_max, self.nq, i), Self::axis(self.p_min, self.p_max, self.np, j))
                })
            })
            .collect()
    }
}

/// Evaluates `f` at every grid point in parallel.
pub fn evaluate_grid<T: Real>(
    grid: &Grid2,
    f: impl Fn(&PhasePoint<T>) -> Result<T> + Sync,
) -> Result<Vec<(f64, f64, f64)>> {
    grid.validate()?;
    grid.points()
        .into_par_iter()
        .map(|(q, p)| {
            let z = PhasePoint { q: vec![T::c(q)], p: vec![T::c(p)] };
            Ok((q, p, f(&z)?.f64()))
        })
        .collect()
}
