//! Special-function kernels: Laguerre polynomials, ε-scaled Hermite
//! functions, the exact rational weights that combine Hermite spectrograms
//! into the signed density, and the Laguerre expansion of iterated
//! Laplacians of the phase-space Gaussian.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::binomial as int_binomial;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Default per-axis cap on Hermite orders.
pub const HERMITE_ORDER_CAP: u32 = 60;

/// A multi-index `k ∈ N^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// The unit multi-index `e_axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut k = vec![0; dim];
        k[axis] = 1;
        MultiIndex(k)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|k| = k_1 + … + k_d`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// `k! = k_1! ⋯ k_d!` as a scalar.
    pub fn factorial<T: Real>(&self) -> T {
        self.0.iter().flat_map(|&kj| 1..=kj).fold(T::one(), |acc, m| acc * T::n(m as usize))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// All `k ∈ N^d` with `|k| = order`, in lexicographic order.
pub fn multi_indices(dim: usize, order: u32) -> Vec<MultiIndex> {
    fn fill(prefix: &mut Vec<u32>, remaining_axes: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
        if remaining_axes == 1 {
            prefix.push(remaining);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in 0..=remaining {
            prefix.push(first);
            fill(prefix, remaining_axes - 1, remaining - first, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        return out;
    }
    fill(&mut Vec::with_capacity(dim), dim, order, &mut out);
    out
}

/// `binom(n, k)` in exact arithmetic; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    int_binomial(BigUint::from(n), BigUint::from(k))
}

/// Number of multi-indices of order `j` in dimension `d`: `binom(j+d-1, d-1)`.
pub fn multiplicity(dim: usize, order: u32) -> u64 {
    binomial(order as u64 + dim as u64 - 1, dim as u64 - 1).to_u64().expect("multiplicity fits in u64")
}

/// Laguerre polynomial `L_n(x)` by the three-term recurrence
/// `(n+1) L_{n+1} = (2n+1-x) L_n - n L_{n-1}`.
///
/// Generic over any field-like type, so it evaluates exactly on rationals.
pub fn laguerre<T: Clone + Num + FromPrimitive>(n: u32, x: T) -> T {
    let mut prev = T::zero();
    let mut cur = T::one();
    for m in 0..n {
        let m_t = T::from_u32(m).expect("small integer");
        let two_m1 = T::from_u32(2 * m + 1).expect("small integer");
        let next = ((two_m1 - x.clone()) * cur.clone() - m_t * prev) / T::from_u32(m + 1).expect("small integer");
        prev = cur;
        cur = next;
    }
    cur
}

/// `[L_0(x), …, L_n(x)]`.
pub fn laguerre_table<T: Real>(n: u32, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(T::one());
    if n == 0 {
        return out;
    }
    out.push(T::one() - x);
    for m in 1..n {
        let mf = T::n(m as usize);
        let next = ((T::n(2 * m as usize + 1) - x) * out[m as usize] - mf * out[m as usize - 1]) / (mf + T::one());
        out.push(next);
    }
    out
}

/// Standard Hermite functions `h_0(t), …, h_n(t)` (orthonormal in `L²(R)`,
/// `h_0(t) = π^{-1/4} e^{-t²/2}`), by the normalised recurrence.
pub fn hermite_functions_1d<T: Real>(n: u32, t: T) -> Vec<T> {
    let mut out = hermite_polys_1d(n, t);
    let env = (-t * t / T::c(2.0)).exp();
    for v in &mut out {
        *v = *v * env;
    }
    out
}

/// The polynomial parts `h_m(t) e^{t²/2}` for `m = 0..=n`.
pub fn hermite_polys_1d<T: Real>(n: u32, t: T) -> Vec<T> {
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(T::PI().powf(T::c(-0.25)));
    if n == 0 {
        return out;
    }
    let two = T::c(2.0);
    out.push(two.sqrt() * t * out[0]);
    for m in 1..n as usize {
        let mf = T::n(m);
        let next = (two / (mf + T::one())).sqrt() * t * out[m] - (mf / (mf + T::one())).sqrt() * out[m - 1];
        out.push(next);
    }
    out
}

/// `h_n(t) e^{t²/2}` without allocating the lower orders.
pub fn hermite_poly<T: Real>(n: u32, t: T) -> T {
    let mut prev = T::zero();
    let mut cur = T::PI().powf(T::c(-0.25));
    let two = T::c(2.0);
    for m in 0..n as usize {
        let mf = T::n(m);
        let next = (two / (mf + T::one())).sqrt() * t * cur - (mf / (mf + T::one())).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub(crate) fn check_hermite_cap(k: &MultiIndex, cap: u32) -> Result<()> {
    match k.entries().iter().copied().max() {
        Some(m) if m > cap => Err(Error::HermiteOrderTooLarge { order: m, cap }),
        _ => Ok(()),
    }
}

/// `φ_k(x) = Π_j ε^{-1/4} h_{k_j}(x_j/√ε)`, the L²-normalised eigenfunctions
/// of `-ε²/2 Δ + |x|²/2`; `φ_0` is the Gaussian wave packet at the origin.
pub fn hermite_function<T: Real>(k: &MultiIndex, eps: T, x: &[T]) -> Result<T> {
    hermite_function_capped(k, eps, x, HERMITE_ORDER_CAP)
}

pub fn hermite_function_capped<T: Real>(k: &MultiIndex, eps: T, x: &[T], cap: u32) -> Result<T> {
    if x.len() != k.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), got: x.len() });
    }
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    check_hermite_cap(k, cap)?;
    let scale = eps.powf(T::c(-0.25));
    let sq = eps.sqrt();
    Ok(k.entries().iter().zip(x).fold(T::one(), |acc, (&kj, &xj)| {
        let t = xj / sq;
        let env = (-t * t / T::c(2.0)).exp();
        if env == T::zero() {
            return T::zero();
        }
        acc * scale * hermite_poly(kj, t) * env
    }))
}

/// Exact big-integer to scalar conversion (base-2^32 Horner).
pub(crate) fn bigint_to_real<T: Real>(v: &BigInt) -> T {
    let (sign, digits) = v.to_u32_digits();
    let base = T::c(4294967296.0);
    let mag = digits.iter().rev().fold(T::zero(), |acc, &d| acc * base + T::c(d as f64));
    if sign == num_bigint::Sign::Minus {
        -mag
    } else {
        mag
    }
}

pub(crate) fn ratio_to_real<T: Real>(r: &BigRational) -> T {
    bigint_to_real::<T>(r.numer()) / bigint_to_real::<T>(r.denom())
}

/// Weights `C_{N-1,j}`, `j = 0..N-1`, combining order-`j` Hermite
/// spectrograms into the density of order `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionCoefficients {
    pub dim: usize,
    pub order: u32,
    /// `c[j] = C_{N-1,j} > 0`; the sign `(-1)^j` is applied by consumers.
    pub c: Vec<BigRational>,
}

impl ExpansionCoefficients {
    /// `(-1)^j C_{N-1,j}`.
    pub fn signed(&self, j: usize) -> BigRational {
        if j.is_multiple_of(2) {
            self.c[j].clone()
        } else {
            -self.c[j].clone()
        }
    }

    /// Number of spectrograms of order `j`.
    pub fn multiplicity(&self, j: usize) -> u64 {
        multiplicity(self.dim, j as u32)
    }

    pub fn signed_real<T: Real>(&self, j: usize) -> T {
        ratio_to_real(&self.signed(j))
    }

    /// `(-1)^j C_{N-1,j} m_j`: the weight of the averaged order-`j` density.
    pub fn averaged_weight<T: Real>(&self, j: usize) -> T {
        ratio_to_real(&(self.signed(j) * BigRational::from_integer(BigInt::from(self.multiplicity(j)))))
    }

    /// `Σ_j (-1)^j C_{N-1,j} m_j`, the total signed mass (always 1).
    pub fn signed_mass(&self) -> BigRational {
        (0..self.c.len())
            .map(|j| self.signed(j) * BigRational::from_integer(BigInt::from(self.multiplicity(j))))
            .fold(BigRational::zero(), |a, b| a + b)
    }
}

/// `C_{N-1,j} = Σ_{m=j}^{N-1} 2^{-m} binom(d-1+m, d-1+j)`.
pub fn expansion_coefficients(dim: usize, order: u32) -> Result<ExpansionCoefficients> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if order == 0 {
        return Err(Error::InvalidParameter("order N must be at least 1".into()));
    }
    let d1 = dim as u64 - 1;
    let c = (0..order as u64)
        .map(|j| {
            (j..order as u64).fold(BigRational::zero(), |acc, m| {
                let b = BigInt::from(binomial(d1 + m, d1 + j));
                acc + BigRational::new(b, BigInt::one() << (m as usize))
            })
        })
        .collect();
    Ok(ExpansionCoefficients { dim, order, c })
}

/// Laguerre expansion of `(-ε/2 Δ)^N W_{g_0}`: the polynomial factor is
/// `Σ_{|k| ≤ N} coeff(|k|) Π_j L_{k_j}(ρ_j)` with
/// `coeff(n) = N! binom(N+d-1, n+d-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplaceLaguerreExpansion {
    pub dim: usize,
    pub power: u32,
    /// Coefficient per level `n = |k|`, `n = 0..=N`.
    pub levels: Vec<BigUint>,
}

impl LaplaceLaguerreExpansion {
    pub fn coefficient(&self, k: &MultiIndex) -> BigUint {
        self.levels.get(k.order() as usize).cloned().unwrap_or_else(BigUint::zero)
    }

    /// Every `(k, coeff)` with `|k| ≤ N`.
    pub fn terms(&self) -> Vec<(MultiIndex, BigUint)> {
        (0..=self.power)
            .flat_map(|n| multi_indices(self.dim, n).into_iter().map(move |k| (k, self.levels[n as usize].clone())))
            .collect()
    }

    /// The polynomial factor evaluated at `ρ = (ρ_1, …, ρ_d)`.
    pub fn polynomial<T: Real>(&self, rho: &[T]) -> T {
        let tables: Vec<Vec<T>> = rho.iter().map(|&r| laguerre_table(self.power, r)).collect();
        let mut total = T::zero();
        for n in 0..=self.power {
            let level = bigint_to_real::<T>(&BigInt::from(self.levels[n as usize].clone()));
            let inner = multi_indices(self.dim, n).iter().fold(T::zero(), |acc, k| {
                acc + k.entries().iter().enumerate().fold(T::one(), |p, (axis, &kj)| p * tables[axis][kj as usize])
            });
            total = total + level * inner;
        }
        total
    }
}

/// Coefficients of the Laguerre expansion of `(-ε/2 Δ)^N W_{g_0}`.
pub fn laplace_laguerre(dim: usize, power: u32) -> Result<LaplaceLaguerreExpansion> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let d1 = dim as u64 - 1;
    let n_fact: BigUint = (1..=power as u64).map(BigUint::from).product();
    let levels = (0..=power as u64).map(|n| &n_fact * binomial(power as u64 + d1, n + d1)).collect();
    Ok(LaplaceLaguerreExpansion { dim, power, levels })
}

/// Checks `Σ_{j=0}^{N-m} binom(N-j, m) binom(k+j, j) = binom(N+k+1, N-m)`
/// in exact integer arithmetic.
pub fn binomial_identity_check(n: u64, m: u64, k: u64) -> bool {
    if m > n {
        return false;
    }
    let lhs: BigUint = (0..=n - m).map(|j| binomial(n - j, m) * binomial(k + j, j)).sum();
    lhs == binomial(n + k + 1, n - m)
}
