//! Wavefunctions: Gaussian packets, Hermite states, hats and superpositions.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_hermite_1d, gauss_legendre_1d, QuadratureKind, QuadratureSpec};
use crate::real::Real;
use crate::specfun::{check_hermite_cap, hermite_function, hermite_poly, MultiIndex, HERMITE_ORDER_CAP};

/// Phase-space point `z = (q, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint<T> {
    pub q: Vec<T>,
    pub p: Vec<T>,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(q: Vec<T>, p: Vec<T>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), got: p.len() });
        }
        if q.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("phase-space point has non-finite entries".into()));
        }
        Ok(PhasePoint { q, p })
    }

    pub fn origin(dim: usize) -> Self {
        PhasePoint { q: vec![T::zero(); dim], p: vec![T::zero(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// `(q_1, …, q_d, p_1, …, p_d)`.
    pub fn coords(&self) -> Vec<T> {
        self.q.iter().chain(&self.p).copied().collect()
    }

    pub fn from_coords(z: &[T]) -> Self {
        let d = z.len() / 2;
        PhasePoint { q: z[..d].to_vec(), p: z[d..].to_vec() }
    }

    pub fn dist2(&self, other: &Self) -> T {
        self.q
            .iter()
            .chain(&self.p)
            .zip(other.q.iter().chain(&other.p))
            .fold(T::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b))
    }

    pub fn to_f64(&self) -> PhasePoint<f64> {
        PhasePoint { q: self.q.iter().map(|v| v.f64()).collect(), p: self.p.iter().map(|v| v.f64()).collect() }
    }
}

/// JSON description of a state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateDescriptor {
    Gaussian { q: Vec<f64>, p: Vec<f64> },
    Hermite { k: Vec<u32> },
    Hat { q: f64 },
    Superposition { terms: Vec<TermDescriptor> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDescriptor {
    pub coeff: [f64; 2],
    pub state: StateDescriptor,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateKind<T> {
    Gaussian(PhasePoint<T>),
    Hermite(MultiIndex),
    /// Hat centred at `q`, one dimension only.
    Hat(T),
    Superposition(Vec<(Complex<T>, State<T>)>),
}

/// Building block of the flattened expansion of a state.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Primitive<T> {
    Gaussian(PhasePoint<T>),
    Hermite(MultiIndex),
    Hat(T),
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Term<T> {
    pub coeff: Complex<T>,
    pub prim: Primitive<T>,
}

/// An L²-normalised wavefunction with its semiclassical parameter `ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct State<T> {
    eps: T,
    dim: usize,
    kind: StateKind<T>,
    terms: Vec<Term<T>>,
}

fn check_eps<T: Real>(eps: T) -> Result<()> {
    if eps > T::zero() && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter("eps must be positive and finite".into()))
    }
}

fn cis<T: Real>(theta: T) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

impl<T: Real> Primitive<T> {
    /// Position centre of the envelope.
    fn position(&self, axis: usize) -> T {
        match self {
            Primitive::Gaussian(w) => w.q[axis],
            Primitive::Hermite(_) => T::zero(),
            Primitive::Hat(q) => *q,
        }
    }

    /// One-dimensional factor along `axis`; every primitive is a product state.
    pub(crate) fn axis_factor(&self, axis: usize, x: T, eps: T) -> Complex<T> {
        match self {
            Primitive::Gaussian(w) => {
                let dx = x - w.q[axis];
                let modulus = (T::PI() * eps).powf(T::c(-0.25)) * (-dx * dx / (T::c(2.0) * eps)).exp();
                cis(w.p[axis] * (x - w.q[axis] / T::c(2.0)) / eps) * modulus
            }
            Primitive::Hermite(k) => {
                let t = x / eps.sqrt();
                let env = (-t * t / T::c(2.0)).exp();
                if env == T::zero() {
                    return Complex::new(T::zero(), T::zero());
                }
                let v = eps.powf(T::c(-0.25)) * hermite_poly(k.entries()[axis], t) * env;
                Complex::new(v, T::zero())
            }
            Primitive::Hat(q) => Complex::new(hat_value(*q, eps, x), T::zero()),
        }
    }

    fn eval(&self, x: &[T], eps: T) -> Complex<T> {
        match self {
            Primitive::Hat(q) => Complex::new(hat_value(*q, eps, x[0]), T::zero()),
            _ => (0..x.len()).fold(Complex::new(T::one(), T::zero()), |acc, j| acc * self.axis_factor(j, x[j], eps)),
        }
    }

    fn is_compact(&self) -> bool {
        matches!(self, Primitive::Hat(_))
    }
}

pub(crate) fn hat_value<T: Real>(q: T, eps: T, x: T) -> T {
    let sq = eps.sqrt();
    let r = (x - q).abs() / sq;
    if r >= T::one() {
        return T::zero();
    }
    (T::c(1.5) / sq).sqrt() * (T::one() - r)
}

/// Breakpoints of the hat supported on `[q-√ε, q+√ε]`.
fn hat_breaks<T: Real>(q: T, eps: T) -> [T; 3] {
    let sq = eps.sqrt();
    [q - sq, q, q + sq]
}

/// Node counts used for the construction-time normalisation integrals.
const PAIR_GH_NODES: usize = 160;
const PAIR_GL_NODES: usize = 40;

impl<T: Real> State<T> {
    pub fn gaussian(center: PhasePoint<T>, eps: T) -> Result<Self> {
        check_eps(eps)?;
        let center = PhasePoint::new(center.q, center.p)?;
        if center.dim() == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        Ok(State {
            eps,
            dim: center.dim(),
            kind: StateKind::Gaussian(center.clone()),
            terms: vec![Term { coeff: Complex::new(T::one(), T::zero()), prim: Primitive::Gaussian(center) }],
        })
    }

    pub fn hermite(k: MultiIndex, eps: T) -> Result<Self> {
        check_eps(eps)?;
        if k.dim() == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        check_hermite_cap(&k, HERMITE_ORDER_CAP)?;
        Ok(State {
            eps,
            dim: k.dim(),
            kind: StateKind::Hermite(k.clone()),
            terms: vec![Term { coeff: Complex::new(T::one(), T::zero()), prim: Primitive::Hermite(k) }],
        })
    }

    pub fn hat(q: T, eps: T) -> Result<Self> {
        check_eps(eps)?;
        if !q.is_finite() {
            return Err(Error::InvalidParameter("hat centre must be finite".into()));
        }
        Ok(State {
            eps,
            dim: 1,
            kind: StateKind::Hat(q),
            terms: vec![Term { coeff: Complex::new(T::one(), T::zero()), prim: Primitive::Hat(q) }],
        })
    }

    /// Normalised linear combination; the components must share `d` and `ε`.
    pub fn superposition(parts: Vec<(Complex<T>, State<T>)>) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidParameter("empty superposition".into()))?;
        let (eps, dim) = (first.1.eps, first.1.dim);
        let mut terms = Vec::new();
        for (c, s) in &parts {
            if s.dim != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: s.dim });
            }
            if s.eps != eps {
                return Err(Error::InvalidParameter("superposition components have different eps".into()));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidParameter("non-finite superposition coefficient".into()));
            }
            terms.extend(s.terms.iter().map(|t| Term { coeff: *c * t.coeff, prim: t.prim.clone() }));
        }
        let mut norm2 = T::zero();
        for a in &terms {
            for b in &terms {
                norm2 = norm2 + (a.coeff.conj() * b.coeff * pair_integral(&a.prim, &b.prim, eps, dim)).re;
            }
        }
        if !(norm2 > T::zero()) || !norm2.is_finite() {
            return Err(Error::InvalidParameter("superposition has zero norm".into()));
        }
        let scale = T::one() / norm2.sqrt();
        for t in &mut terms {
            t.coeff = t.coeff * scale;
        }
        Ok(State { eps, dim, kind: StateKind::Superposition(parts), terms })
    }

    pub fn from_descriptor(desc: &StateDescriptor, eps: T) -> Result<Self> {
        match desc {
            StateDescriptor::Gaussian { q, p } => {
                let conv = |v: &Vec<f64>| v.iter().map(|&x| T::c(x)).collect::<Vec<T>>();
                State::gaussian(PhasePoint::new(conv(q), conv(p))?, eps)
            }
            StateDescriptor::Hermite { k } => State::hermite(MultiIndex::new(k.clone()), eps),
            StateDescriptor::Hat { q } => State::hat(T::c(*q), eps),
            StateDescriptor::Superposition { terms } => {
                let parts = terms
                    .iter()
                    .map(|t| {
                        Ok((Complex::new(T::c(t.coeff[0]), T::c(t.coeff[1])), State::from_descriptor(&t.state, eps)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                State::superposition(parts)
            }
        }
    }

    pub fn descriptor(&self) -> StateDescriptor {
        match &self.kind {
            StateKind::Gaussian(w) => {
                let w = w.to_f64();
                StateDescriptor::Gaussian { q: w.q, p: w.p }
            }
            StateKind::Hermite(k) => StateDescriptor::Hermite { k: k.entries().to_vec() },
            StateKind::Hat(q) => StateDescriptor::Hat { q: q.f64() },
            StateKind::Superposition(parts) => StateDescriptor::Superposition {
                terms: parts
                    .iter()
                    .map(|(c, s)| TermDescriptor { coeff: [c.re.f64(), c.im.f64()], state: s.descriptor() })
                    .collect(),
            },
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical descriptor and `ε`.
    pub fn hash(&self) -> String {
        let body = serde_json::json!({ "eps": self.eps.f64(), "state": self.descriptor() });
        let digest = Sha256::digest(body.to_string().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &StateKind<T> {
        &self.kind
    }

    pub(crate) fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    /// True if some component has compact support (a hat).
    pub fn has_compact_part(&self) -> bool {
        self.terms.iter().any(|t| t.prim.is_compact())
    }

    pub fn is_smooth(&self) -> bool {
        !self.has_compact_part()
    }

    /// `ψ(x)`.
    pub fn evaluate(&self, x: &[T]) -> Result<Complex<T>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[T]) -> Complex<T> {
        self.terms.iter().fold(Complex::new(T::zero(), T::zero()), |acc, t| acc + t.coeff * t.prim.eval(x, self.eps))
    }

    /// Kinks of compact components, sorted (d=1).
    pub(crate) fn kinks(&self) -> Vec<T> {
        let mut out: Vec<T> = self
            .terms
            .iter()
            .filter_map(|t| match t.prim {
                Primitive::Hat(q) => Some(hat_breaks(q, self.eps)),
                _ => None,
            })
            .flatten()
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite kink"));
        out.dedup();
        out
    }

    /// Nominal phase-space centre: the packet centre, the origin for Hermite
    /// states, `(q, 0)` for a hat, and the dominant term for superpositions.
    pub fn nominal_center(&self) -> PhasePoint<T> {
        match &self.kind {
            StateKind::Gaussian(w) => w.clone(),
            StateKind::Hermite(_) => PhasePoint::origin(self.dim),
            StateKind::Hat(q) => PhasePoint { q: vec![*q], p: vec![T::zero()] },
            StateKind::Superposition(parts) => parts
                .iter()
                .fold(None::<(T, &State<T>)>, |best, (c, s)| match best {
                    Some((m, _)) if m >= c.norm() => best,
                    _ => Some((c.norm(), s)),
                })
                .map(|(_, s)| s.nominal_center())
                .unwrap_or_else(|| PhasePoint::origin(self.dim)),
        }
    }

    /// `‖ψ‖_{L²}` by the requested quadrature.
    pub fn norm(&self, quad: &QuadratureSpec) -> Result<T> {
        quad.validate(self.dim)?;
        let mut total = T::zero();
        match quad.kind {
            QuadratureKind::GaussHermite => {
                let gh = gauss_hermite_1d::<T>(quad.nodes)?;
                let gl = gauss_legendre_1d::<T>(quad.nodes)?;
                for a in &self.terms {
                    for b in &self.terms {
                        let v = pair_integral_with(&a.prim, &b.prim, self.eps, self.dim, &gh.nodes, &gh.weights, &gl);
                        total = total + (a.coeff.conj() * b.coeff * v).re;
                    }
                }
            }
            QuadratureKind::QmcSobol | QuadratureKind::MonteCarlo => {
                // Sample around each pair midpoint from N(m, ε/2); the weight
                // cancels the sampling density.
                let offsets = quad.standard_normal_offsets::<T>(self.dim, 0)?;
                let half = (self.eps / T::c(2.0)).sqrt();
                let n = offsets.len() / self.dim;
                let mut x = vec![T::zero(); self.dim];
                for a in &self.terms {
                    for b in &self.terms {
                        let mut acc = Complex::new(T::zero(), T::zero());
                        for u in offsets.chunks(self.dim) {
                            let mut log_pdf = T::zero();
                            for j in 0..self.dim {
                                let m = (a.prim.position(j) + b.prim.position(j)) / T::c(2.0);
                                x[j] = m + half * u[j];
                                log_pdf = log_pdf - u[j] * u[j] / T::c(2.0);
                            }
                            let pdf = (T::PI() * self.eps).powf(-T::n(self.dim) / T::c(2.0)) * log_pdf.exp();
                            acc = acc + a.prim.eval(&x, self.eps).conj() * b.prim.eval(&x, self.eps) / pdf;
                        }
                        total = total + (a.coeff.conj() * b.coeff * acc / T::n(n)).re;
                    }
                }
            }
        }
        Ok(total.max(T::zero()).sqrt())
    }
}

/// `⟨a, b⟩ = ∫ conj(a) b` for two primitives, as a product of 1-D integrals.
fn pair_integral<T: Real>(a: &Primitive<T>, b: &Primitive<T>, eps: T, dim: usize) -> Complex<T> {
    match (a, b) {
        (Primitive::Gaussian(za), Primitive::Gaussian(zb)) => gaussian_overlap(za, zb, eps),
        (Primitive::Hermite(ka), Primitive::Hermite(kb)) => {
            let v = if ka == kb { T::one() } else { T::zero() };
            Complex::new(v, T::zero())
        }
        _ => {
            let gh = gauss_hermite_1d::<T>(PAIR_GH_NODES).expect("valid Gauss-Hermite order");
            let gl = gauss_legendre_1d::<T>(PAIR_GL_NODES).expect("valid Gauss-Legendre order");
            pair_integral_with(a, b, eps, dim, &gh.nodes, &gh.weights, &gl)
        }
    }
}

/// Closed-form overlap `⟨g_a, g_b⟩`.
pub(crate) fn gaussian_overlap<T: Real>(a: &PhasePoint<T>, b: &PhasePoint<T>, eps: T) -> Complex<T> {
    let mut phase = T::zero();
    for j in 0..a.dim() {
        phase = phase + b.p[j] * a.q[j] - a.p[j] * b.q[j];
    }
    cis(phase / (T::c(2.0) * eps)) * (-a.dist2(b) / (T::c(4.0) * eps)).exp()
}

fn pair_integral_with<T: Real>(
    a: &Primitive<T>,
    b: &Primitive<T>,
    eps: T,
    dim: usize,
    gh_nodes: &[T],
    gh_weights: &[T],
    gl: &crate::quadrature::GaussLegendre1d<T>,
) -> Complex<T> {
    let mut total = Complex::new(T::one(), T::zero());
    for axis in 0..dim {
        let mut acc = Complex::new(T::zero(), T::zero());
        if a.is_compact() || b.is_compact() {
            let mut breaks: Vec<T> = Vec::new();
            let mut lo = T::neg_infinity();
            let mut hi = T::infinity();
            for p in [a, b] {
                if let Primitive::Hat(q) = p {
                    let br = hat_breaks(*q, eps);
                    lo = lo.max(br[0]);
                    hi = hi.min(br[2]);
                    breaks.extend(br);
                }
            }
            if !(hi > lo) {
                return Complex::new(T::zero(), T::zero());
            }
            breaks.retain(|x| *x >= lo && *x <= hi);
            breaks.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
            breaks.dedup();
            let (xs, ws) = gl.composite(&breaks, 1);
            for (&x, &w) in xs.iter().zip(&ws) {
                acc = acc + a.axis_factor(axis, x, eps).conj() * b.axis_factor(axis, x, eps) * w;
            }
        } else {
            // weight e^{-(x-m)²/ε} matches the product of the two envelopes
            let m = (a.position(axis) + b.position(axis)) / T::c(2.0);
            let sq = eps.sqrt();
            for (&t, &w) in gh_nodes.iter().zip(gh_weights) {
                let x = m + sq * t;
                let f = a.axis_factor(axis, x, eps).conj() * b.axis_factor(axis, x, eps);
                acc = acc + f * (w * sq * (t * t).exp());
            }
        }
        total = total * acc;
    }
    total
}

/// `(T_z φ_k)(x) = e^{i p·(x − q/2)/ε} φ_k(x − q)`.
pub fn heisenberg_weyl_shift<T: Real>(z: &PhasePoint<T>, k: &MultiIndex, eps: T, x: &[T]) -> Result<Complex<T>> {
    if z.dim() != k.dim() || x.len() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            got: if z.dim() != k.dim() { z.dim() } else { x.len() },
        });
    }
    let shifted: Vec<T> = x.iter().zip(&z.q).map(|(a, b)| *a - *b).collect();
    let phase = (0..x.len()).fold(T::zero(), |acc, j| acc + z.p[j] * (x[j] - z.q[j] / T::c(2.0)));
    Ok(cis(phase / eps) * hermite_function(k, eps, &shifted)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pp(q: f64, p: f64) -> PhasePoint<f64> {
        PhasePoint::new(vec![q], vec![p]).unwrap()
    }

    #[test]
    fn gaussian_at_centre() {
        let g = State::gaussian(pp(0.0, 0.0), 0.1).unwrap();
        let v = g.evaluate(&[0.0]).unwrap();
        assert!((v.re - (std::f64::consts::PI * 0.1).powf(-0.25)).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn gaussian_modulus_and_phase() {
        let g = State::gaussian(pp(0.0, 1.0), 0.05).unwrap();
        let v = g.evaluate(&[0.2]).unwrap();
        let modulus = (std::f64::consts::PI * 0.05).powf(-0.25) * (-0.04f64 / 0.1).exp();
        assert!((v.norm() - modulus).abs() < 1e-14);
        let expected = num_complex::Complex::from_polar(modulus, 0.2 / 0.05);
        assert!((v - expected).norm() < 1e-13);
    }

    #[test]
    fn hat_support() {
        let eps = 0.05f64;
        let h = State::hat(0.0, eps).unwrap();
        assert_eq!(h.evaluate(&[eps.sqrt()]).unwrap().norm(), 0.0);
        assert_eq!(h.evaluate(&[-eps.sqrt() - 1e-9]).unwrap().norm(), 0.0);
        assert!(h.evaluate(&[0.0]).unwrap().re > 0.0);
        assert!(h.evaluate(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn norms() {
        let gh = QuadratureSpec::gauss_hermite(40);
        let g = State::gaussian(PhasePoint::new(vec![0.3f64, -1.0], vec![2.0, 0.5]).unwrap(), 0.02).unwrap();
        assert!((g.norm(&gh).unwrap() - 1.0).abs() < 1e-10);
        let h = State::hat(0.0f64, 0.05).unwrap();
        assert!((h.norm(&gh).unwrap() - 1.0).abs() < 1e-8);
        let qmc = QuadratureSpec { kind: QuadratureKind::QmcSobol, nodes: 4096, seed: 0 };
        assert!((g.norm(&qmc).unwrap() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn far_superposition_is_normalised() {
        let eps = 0.1;
        let a = State::gaussian(pp(-1.5, 0.0), eps).unwrap();
        let b = State::gaussian(pp(1.5, 0.0), eps).unwrap();
        let s = State::superposition(vec![(Complex::new(1.0, 0.0), a), (Complex::new(1.0, 0.0), b)]).unwrap();
        assert!((s.norm(&QuadratureSpec::gauss_hermite(60)).unwrap() - 1.0).abs() < 1e-8);
        // brute-force oracle on a fine midpoint grid
        let h = 1e-4;
        let mass: f64 =
            (0..100_000).map(|i| -5.0 + (i as f64 + 0.5) * h).map(|x| s.evaluate(&[x]).unwrap().norm_sqr() * h).sum();
        assert!((mass - 1.0).abs() < 1e-8);
    }

    #[test]
    fn overlapping_mixed_superposition_is_normalised() {
        let eps = 0.05;
        let parts = vec![
            (Complex::new(1.0, 0.5), State::gaussian(pp(0.1, 0.3), eps).unwrap()),
            (Complex::new(-0.7, 0.0), State::hermite(MultiIndex::new(vec![2]), eps).unwrap()),
            (Complex::new(0.4, 0.0), State::hat(0.05, eps).unwrap()),
        ];
        let s = State::superposition(parts).unwrap();
        let h = 2e-5;
        let mass: f64 =
            (0..100_000).map(|i| -1.0 + (i as f64 + 0.5) * h).map(|x| s.evaluate(&[x]).unwrap().norm_sqr() * h).sum();
        assert!((mass - 1.0).abs() < 1e-7);
        assert!((s.norm(&QuadratureSpec::gauss_hermite(80)).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn superposition_rejects_mixed_eps() {
        let a = State::gaussian(pp(0.0, 0.0), 0.1).unwrap();
        let b = State::gaussian(pp(0.0, 0.0), 0.2).unwrap();
        assert!(State::superposition(vec![(Complex::new(1.0, 0.0), a), (Complex::new(1.0, 0.0), b)]).is_err());
        assert!(State::<f64>::superposition(vec![]).is_err());
    }

    #[test]
    fn overlap_closed_form_matches_quadrature() {
        let eps = 0.07;
        let a = pp(0.2, -0.4);
        let b = pp(-0.1, 0.3);
        let gh = gauss_hermite_1d::<f64>(160).unwrap();
        let gl = gauss_legendre_1d::<f64>(20).unwrap();
        let q = pair_integral_with(
            &Primitive::Gaussian(a.clone()),
            &Primitive::Gaussian(b.clone()),
            eps,
            1,
            &gh.nodes,
            &gh.weights,
            &gl,
        );
        assert!((q - gaussian_overlap(&a, &b, eps)).norm() < 1e-13);
    }

    #[test]
    fn shift_of_ground_state_is_the_packet() {
        let eps = 0.3;
        let z = PhasePoint::new(vec![0.4, -0.2], vec![1.1, 0.7]).unwrap();
        let g = State::gaussian(z.clone(), eps).unwrap();
        for x in [[0.0, 0.0], [0.5, -0.1], [-1.0, 2.0]] {
            let a = heisenberg_weyl_shift(&z, &MultiIndex::zeros(2), eps, &x).unwrap();
            assert!((a - g.evaluate(&x).unwrap()).norm() < 1e-14);
        }
        let k = MultiIndex::new(vec![2, 1]);
        let x = [0.3, 0.1];
        let id = heisenberg_weyl_shift(&PhasePoint::origin(2), &k, eps, &x).unwrap();
        assert_eq!(id.re, hermite_function(&k, eps, &x).unwrap());
    }

    #[test]
    fn shifted_windows_are_normalised() {
        let eps: f64 = 0.2;
        let gh = gauss_hermite_1d::<f64>(60).unwrap();
        for (i, k) in [0u32, 1, 2, 3, 4].iter().enumerate() {
            let z = pp(0.3 * i as f64 - 0.5, 1.0 - 0.4 * i as f64);
            // integrand |T_z φ_k|² = φ_k(x-q)², GH centred at q with weight e^{-(x-q)²/ε}
            let s: f64 = gh
                .nodes
                .iter()
                .zip(&gh.weights)
                .map(|(t, w)| {
                    let x = z.q[0] + eps.sqrt() * t;
                    let v = heisenberg_weyl_shift(&z, &MultiIndex::new(vec![*k]), eps, &[x]).unwrap();
                    v.norm_sqr() * w * eps.sqrt() * (t * t).exp()
                })
                .sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn descriptors_round_trip() {
        let json = r#"{"type":"superposition","terms":[{"coeff":[1,0],"state":{"type":"gaussian","q":[0.5],"p":[-1]}},{"coeff":[0,1],"state":{"type":"hat","q":0.0}}]}"#;
        let d: StateDescriptor = serde_json::from_str(json).unwrap();
        let s = State::<f64>::from_descriptor(&d, 0.05).unwrap();
        assert_eq!(s.descriptor(), d);
        assert_eq!(s.hash().len(), 16);
        assert_ne!(s.hash(), State::<f64>::from_descriptor(&d, 0.06).unwrap().hash());
        assert!(serde_json::from_str::<StateDescriptor>(r#"{"type":"hat","q":0,"bogus":1}"#).is_err());
    }

    #[test]
    fn nominal_centres() {
        let g = State::gaussian(pp(0.5, -1.0), 0.1).unwrap();
        assert_eq!(g.nominal_center(), pp(0.5, -1.0));
        assert_eq!(State::hat(0.25, 0.1).unwrap().nominal_center(), pp(0.25, 0.0));
        assert_eq!(State::<f64>::hermite(MultiIndex::new(vec![1]), 0.1).unwrap().nominal_center(), pp(0.0, 0.0));
    }

    proptest! {
        #[test]
        fn shift_is_unimodular(q in -2.0..2.0f64, p in -2.0..2.0f64, x in -3.0..3.0f64, k in 0u32..6) {
            let eps = 0.1;
            let z = pp(q, p);
            let v = heisenberg_weyl_shift(&z, &MultiIndex::new(vec![k]), eps, &[x]).unwrap();
            let direct = hermite_function(&MultiIndex::new(vec![k]), eps, &[x - q]).unwrap();
            prop_assert!((v.norm() - direct.abs()).abs() <= 1e-12 * (1.0 + direct.abs()));
        }

        #[test]
        fn superposition_is_linear(c0 in -1.0..1.0f64, c1 in -1.0..1.0f64, x in -1.0..1.0f64) {
            prop_assume!(c0.abs() + c1.abs() > 0.1);
            let eps = 0.1;
            let a = State::gaussian(pp(0.2, 0.5), eps).unwrap();
            let b = State::hermite(MultiIndex::new(vec![1]), eps).unwrap();
            let s = State::superposition(vec![(Complex::new(c0, 0.0), a.clone()), (Complex::new(0.0, c1), b.clone())]).unwrap();
            let scale = if c0.abs() > c1.abs() { s.terms()[0].coeff.re / c0 } else { s.terms()[1].coeff.im / c1 };
            let lin = (a.evaluate(&[x]).unwrap() * c0 + b.evaluate(&[x]).unwrap() * Complex::new(0.0, c1)) * scale;
            let v = s.evaluate(&[x]).unwrap();
            prop_assert!((v - lin).norm() <= 1e-14 * (1.0 + v.norm()));
        }
    }
}
