//! Gauss rules from the symmetric tridiagonal (Jacobi) eigenproblem.
//!
//! Nodes are the eigenvalues of the Jacobi matrix (implicit QL with
//! Wilkinson shifts), polished by Newton steps on the three-term recurrence.
//! Weights come from closed-form expressions in the orthonormal polynomials
//! rather than from eigenvector components, which keeps the extreme weights
//! accurate to full relative precision even when they are below 1e-300.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::specfun::hermite_poly;

const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off[i]` couples rows `i` and `i+1`). Sorted ascending.
pub fn tridiagonal_eigenvalues<T: Real>(diag: &[T], off: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![T::zero(); n];
    for (i, &o) in off.iter().take(n.saturating_sub(1)).enumerate() {
        e[i] = o;
    }
    let two = T::c(2.0);
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::EigenNoConvergence(MAX_QL_SWEEPS));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let signed_r = if g >= T::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + signed_r);
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(d)
}

/// One-dimensional Gauss–Hermite rule for the weight `e^{-t²}`.
#[derive(Clone, Debug)]
pub struct GaussHermite1d<T> {
    pub nodes: Vec<T>,
    /// Weights for `∫ f(t) e^{-t²} dt`.
    pub weights: Vec<T>,
    /// `weights[i] e^{nodes[i]²}`: weights for a plain `∫ f(t) dt`.
    pub raw_weights: Vec<T>,
}

pub fn gauss_hermite_1d<T: Real>(n: usize) -> Result<GaussHermite1d<T>> {
    if n == 0 || n > 200 {
        return Err(Error::InvalidParameter(format!("Gauss-Hermite order {n} outside 1..=200")));
    }
    let diag = vec![T::zero(); n];
    let off: Vec<T> = (1..n).map(|i| (T::n(i) / T::c(2.0)).sqrt()).collect();
    let mut nodes = tridiagonal_eigenvalues(&diag, &off)?;
    let nf = T::n(n);
    let deriv_scale = (T::c(2.0) * nf).sqrt();
    for t in nodes.iter_mut() {
        for _ in 0..4 {
            let step = hermite_poly(n as u32, *t) / (deriv_scale * hermite_poly(n as u32 - 1, *t));
            *t = *t - step;
        }
    }
    // enforce exact symmetry so odd moments vanish identically
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let half = (nodes[j] - nodes[i]) / T::c(2.0);
        nodes[i] = -half;
        nodes[j] = half;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    let weights: Vec<T> = nodes
        .iter()
        .map(|&t| {
            let p = hermite_poly(n as u32 - 1, t);
            T::one() / (nf * p * p)
        })
        .collect();
    let raw_weights = nodes.iter().zip(&weights).map(|(&t, &w)| w * (t * t).exp()).collect();
    Ok(GaussHermite1d { nodes, weights, raw_weights })
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre1d<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

fn legendre_pair<T: Real>(n: usize, x: T) -> (T, T) {
    let mut prev = T::one();
    let mut cur = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for m in 1..n {
        let mf = T::n(m);
        let next = ((T::n(2 * m + 1)) * x * cur - mf * prev) / (mf + T::one());
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

pub fn gauss_legendre_1d<T: Real>(n: usize) -> Result<GaussLegendre1d<T>> {
    if n == 0 || n > 1000 {
        return Err(Error::InvalidParameter(format!("Gauss-Legendre order {n} outside 1..=1000")));
    }
    let diag = vec![T::zero(); n];
    let off: Vec<T> = (1..n)
        .map(|i| {
            let i = T::n(i);
            i / (T::c(4.0) * i * i - T::one()).sqrt()
        })
        .collect();
    let mut nodes = tridiagonal_eigenvalues(&diag, &off)?;
    let nf = T::n(n);
    for x in nodes.iter_mut() {
        for _ in 0..4 {
            let (p, pm1) = legendre_pair(n, *x);
            let dp = nf * (*x * p - pm1) / (*x * *x - T::one());
            *x = *x - p / dp;
        }
    }
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let half = (nodes[j] - nodes[i]) / T::c(2.0);
        nodes[i] = -half;
        nodes[j] = half;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, pm1) = legendre_pair(n, x);
            let dp = nf * (x * p - pm1) / (x * x - T::one());
            T::c(2.0) / ((T::one() - x * x) * dp * dp)
        })
        .collect();
    Ok(GaussLegendre1d { nodes, weights })
}

impl<T: Real> GaussLegendre1d<T> {
    /// Composite rule over consecutive breakpoints, `panels` panels per piece.
    pub fn composite(&self, breaks: &[T], panels: usize) -> (Vec<T>, Vec<T>) {
        let mut xs = Vec::with_capacity(breaks.len() * panels * self.nodes.len());
        let mut ws = Vec::with_capacity(xs.capacity());
        for piece in breaks.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            if !(b > a) {
                continue;
            }
            let h = (b - a) / T::n(panels);
            for k in 0..panels {
                let lo = a + h * T::n(k);
                let half = h / T::c(2.0);
                let mid = lo + half;
                for (&x, &w) in self.nodes.iter().zip(&self.weights) {
                    xs.push(mid + half * x);
                    ws.push(half * w);
                }
            }
        }
        (xs, ws)
    }
}

/// Integration nodes and weights in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet<T> {
    pub dim: usize,
    /// Row-major, `len() * dim` entries.
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> NodeSet<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], T)> + '_ {
        self.points.chunks(self.dim.max(1)).zip(self.weights.iter().copied())
    }

    /// `Σ_i w_i f(x_i)`.
    pub fn integrate(&self, mut f: impl FnMut(&[T]) -> T) -> T {
        self.iter().fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }
}

/// Tensor product of a one-dimensional rule over `dim` axes.
pub(crate) fn tensor<T: Real>(nodes: &[T], weights: &[T], dim: usize) -> NodeSet<T> {
    let n = nodes.len();
    let total = n.pow(dim as u32);
    let mut points = Vec::with_capacity(total * dim);
    let mut ws = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut w = T::one();
        for &i in &idx {
            points.push(nodes[i]);
            w = w * weights[i];
        }
        ws.push(w);
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < n {
                break;
            }
            *slot = 0;
        }
    }
    NodeSet { dim, points, weights: ws }
}

/// Maximum number of tensor nodes any Gauss–Hermite product rule may hold.
pub const MAX_TENSOR_NODES: usize = 50_000_000;

/// `n`-point Gauss–Hermite rule per axis for the weight `e^{-|x-c|²/ε}`,
/// tensorised over `dim` axes.
pub fn gauss_hermite_rule<T: Real>(n: usize, eps: T, center: &[T], dim: usize) -> Result<NodeSet<T>> {
    if center.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: center.len() });
    }
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    if (n as f64).powi(dim as i32) > MAX_TENSOR_NODES as f64 {
        return Err(Error::InvalidParameter(format!("{n}^{dim} tensor nodes is too many")));
    }
    let rule = gauss_hermite_1d::<T>(n)?;
    let sq = eps.sqrt();
    let mut set = tensor(&rule.nodes, &rule.weights, dim);
    for (i, x) in set.points.iter_mut().enumerate() {
        *x = center[i % dim] + sq * *x;
    }
    let scale = sq.powi(dim as i32);
    for w in set.weights.iter_mut() {
        *w = *w * scale;
    }
    Ok(set)
}
