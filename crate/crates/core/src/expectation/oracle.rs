//! Exact Weyl expectations in Gaussian wave packets.
//!
//! The Wigner function of `g_w` is the normal density `N(w, ε/2 · I)`, so
//! `⟨g_w, op(a) g_w⟩` is a Gaussian expectation of `a`.

use crate::error::{Error, Result};
use crate::quadrature::gauss_hermite_1d;
use crate::real::Real;
use crate::states::PhasePoint;

use super::observable::{expand, Expr, Func, Observable};

/// Oracle value; `tolerance` is zero for closed forms and an a-posteriori
/// estimate (difference to a coarser rule) for quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleValue<T> {
    pub value: T,
    pub tolerance: T,
    pub exact: bool,
}

/// Gauss–Hermite order of the quadrature fallback.
pub const ORACLE_NODES: usize = 200;
const ORACLE_CHECK_NODES: usize = 150;

/// `E[X^a]` for `X ∼ N(μ, σ²)`.
fn normal_moment<T: Real>(mu: T, var: T, a: u32) -> T {
    // Σ_{k even} binom(a,k) μ^{a-k} σ^k (k-1)!!
    let mut total = T::zero();
    let mut binom = T::one();
    let mut double_fact = T::one();
    for k in 0..=a {
        if k > 0 {
            binom = binom * T::n((a - k + 1) as usize) / T::n(k as usize);
        }
        if k % 2 == 0 {
            if k >= 2 {
                double_fact = double_fact * T::n(k as usize - 1);
            }
            total = total + binom * mu.powi((a - k) as i32) * var.powi((k / 2) as i32) * double_fact;
        }
    }
    total
}

/// Splits `e` into a constant multiple of a single summand kind.
fn summands(e: &Expr, sign: f64, out: &mut Vec<(f64, Expr)>) {
    match e {
        Expr::Add(a, b) => {
            summands(a, sign, out);
            summands(b, sign, out);
        }
        Expr::Sub(a, b) => {
            summands(a, sign, out);
            summands(b, -sign, out);
        }
        Expr::Neg(a) => summands(a, -sign, out),
        Expr::Mul(a, b) => match (a.as_ref(), b.as_ref()) {
            (Expr::Const(c), other) | (other, Expr::Const(c)) => summands(other, sign * c, out),
            _ => out.push((sign, e.clone())),
        },
        _ => out.push((sign, e.clone())),
    }
}

/// `E[a(Z)]` for `Z ∼ N(w, ε/2 · I)` in closed form, if the observable is a
/// combination of polynomials and `sin`/`cos` of affine functions.
fn closed_form<T: Real>(a: &Observable, w: &[T], var: T) -> Option<T> {
    let vars = w.len();
    let mut parts = Vec::new();
    summands(a.expr(), 1.0, &mut parts);
    let mut total = T::zero();
    for (c, e) in parts {
        let v = if let Some(poly) = expand::<T>(&e, vars) {
            poly.terms.iter().fold(T::zero(), |acc, (exps, &coef)| {
                acc + coef * exps.iter().zip(w).fold(T::one(), |m, (&k, &mu)| m * normal_moment(mu, var, k))
            })
        } else if let Expr::Call(f @ (Func::Sin | Func::Cos), arg) = &e {
            let lin = expand::<T>(arg, vars)?;
            if lin.degree() > 1 {
                return None;
            }
            // E[e^{i(c + b·Z)}] = e^{i(c + b·w)} e^{-|b|² σ²/2}
            let mut mean = T::zero();
            let mut b2 = T::zero();
            for (exps, &coef) in &lin.terms {
                match exps.iter().position(|&k| k == 1) {
                    Some(i) => {
                        mean = mean + coef * w[i];
                        b2 = b2 + coef * coef;
                    }
                    None => mean = mean + coef,
                }
            }
            let damp = (-b2 * var / T::c(2.0)).exp();
            match f {
                Func::Cos => mean.cos() * damp,
                _ => mean.sin() * damp,
            }
        } else {
            return None;
        };
        total = total + T::c(c) * v;
    }
    Some(total)
}

fn gauss_hermite_expectation<T: Real>(a: &Observable, w: &[T], var: T, nodes: usize) -> Result<T> {
    let used = a.used_variables();
    if used.len() > 3 {
        return Err(Error::Unsupported("quadrature oracle supports observables of at most 3 coordinates".into()));
    }
    let rule = gauss_hermite_1d::<T>(nodes)?;
    let scale = (T::c(2.0) * var).sqrt();
    let mut z = w.to_vec();
    let mut idx = vec![0usize; used.len()];
    let mut total = T::zero();
    loop {
        let mut weight = T::one();
        for (slot, &v) in idx.iter().zip(&used) {
            z[v] = w[v] + scale * rule.nodes[*slot];
            weight = weight * rule.weights[*slot];
        }
        total = total + weight * a.eval(&z);
        let mut carry = true;
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < nodes {
                carry = false;
                break;
            }
            *slot = 0;
        }
        if carry {
            break;
        }
    }
    Ok(total / T::PI().powf(T::n(used.len()) / T::c(2.0)))
}

/// `⟨g_w, op(a) g_w⟩ = ∫ a dN(w, ε/2 · I)`.
pub fn gaussian_weyl_oracle<T: Real>(w: &PhasePoint<T>, a: &Observable, eps: T) -> Result<OracleValue<T>> {
    if a.dim() != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), got: a.dim() });
    }
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let var = eps / T::c(2.0);
    let coords = w.coords();
    if let Some(v) = closed_form(a, &coords, var) {
        return Ok(OracleValue { value: v, tolerance: T::zero(), exact: true });
    }
    let fine = gauss_hermite_expectation(a, &coords, var, ORACLE_NODES)?;
    let coarse = gauss_hermite_expectation(a, &coords, var, ORACLE_CHECK_NODES)?;
    Ok(OracleValue { value: fine, tolerance: (fine - coarse).abs(), exact: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::parse_observable;

    fn w() -> PhasePoint<f64> {
        PhasePoint::new(vec![0.5], vec![-1.0]).unwrap()
    }

    #[test]
    fn quartic_moment() {
        let a = parse_observable("q^4 + 1", 1).unwrap();
        for eps in [0.1, 0.01, 0.3] {
            let v = gaussian_weyl_oracle(&w(), &a, eps).unwrap();
            assert!(v.exact);
            let expected = 17.0 / 16.0 + 0.75 * eps + 0.75 * eps * eps;
            assert!((v.value - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn first_moment_and_cosine() {
        let q = parse_observable("q", 1).unwrap();
        assert_eq!(gaussian_weyl_oracle(&w(), &q, 0.2).unwrap().value, 0.5);
        let c = parse_observable("cos(q)", 1).unwrap();
        let v = gaussian_weyl_oracle(&w(), &c, 0.1).unwrap();
        assert!((v.value - 0.5f64.cos() * (-0.025f64).exp()).abs() < 1e-15);
        let s = parse_observable("3*sin(2*q - p + 1) - p^2", 1).unwrap();
        let v = gaussian_weyl_oracle(&w(), &s, 0.1).unwrap();
        let expected = 3.0 * (3.0f64).sin() * (-5.0 * 0.05 / 2.0f64).exp() - (1.0 + 0.05);
        assert!((v.value - expected).abs() < 1e-14);
    }

    #[test]
    fn quadrature_fallback_agrees_with_closed_forms() {
        for src in ["cos(q)", "q^4 + 1", "0.25*(p^2 - q)^3"] {
            let a = parse_observable(src, 1).unwrap();
            let exact = gaussian_weyl_oracle(&w(), &a, 0.05).unwrap().value;
            let quad = gauss_hermite_expectation(&a, &w().coords(), 0.025, ORACLE_NODES).unwrap();
            assert!((exact - quad).abs() < 1e-12 * (1.0 + exact.abs()), "{src}");
        }
        let d = parse_observable("exp(sin(q))", 1).unwrap();
        let v = gaussian_weyl_oracle(&w(), &d, 0.01).unwrap();
        assert!(!v.exact && v.tolerance < 1e-14);
        assert!((v.value - 0.5f64.sin().exp()).abs() < 0.01);
    }

    #[test]
    fn moments_of_the_normal() {
        assert!((normal_moment(0.0, 2.0, 4) - 12.0f64).abs() < 1e-14);
        assert!((normal_moment(1.0, 0.5, 3) - (1.0 + 3.0 * 0.5f64)).abs() < 1e-14);
    }
}
