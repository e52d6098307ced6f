//! Sobol low-discrepancy sequence (Joe–Kuo direction numbers, Gray-code order).

use super::rules::NodeSet;
use super::sobol_table::{DIRECTIONS, MAX_DIM};
use crate::error::{Error, Result};
use crate::real::Real;

const BITS: usize = 32;

/// Maximum number of points: the generator works on 32-bit fractions.
pub const MAX_POINTS: u64 = 1 << 31;

#[derive(Clone, Debug)]
pub struct Sobol {
    dim: usize,
    v: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

fn direction_numbers(j: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    let (poly, init) = DIRECTIONS[j];
    let s = (32 - poly.leading_zeros() - 1) as usize;
    if s == 0 {
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = 1 << (31 - i);
        }
        return v;
    }
    let mut m = [0u32; BITS];
    m[..s].copy_from_slice(&init[..s]);
    for i in s..BITS {
        let mut next = m[i - s] ^ (m[i - s] << s);
        for k in 1..s {
            if (poly >> (s - k)) & 1 == 1 {
                next ^= m[i - k] << k;
            }
        }
        m[i] = next;
    }
    for i in 0..BITS {
        v[i] = m[i] << (31 - i);
    }
    v
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::SobolDimension(dim));
        }
        Ok(Sobol { dim, v: (0..dim).map(direction_numbers).collect(), state: vec![0; dim], index: 0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes the next point as 32-bit fractions into `out`.
    pub fn next_raw(&mut self, out: &mut [u32]) -> Result<()> {
        if self.index >= MAX_POINTS {
            return Err(Error::InvalidParameter("Sobol sequence exhausted".into()));
        }
        if self.index > 0 {
            let c = (self.index - 1).trailing_ones() as usize;
            for (x, v) in self.state.iter_mut().zip(&self.v) {
                *x ^= v[c];
            }
        }
        out.copy_from_slice(&self.state);
        self.index += 1;
        Ok(())
    }

    pub fn next_point<T: Real>(&mut self, out: &mut [T]) -> Result<()> {
        let mut raw = vec![0u32; self.dim];
        self.next_raw(&mut raw)?;
        let scale = T::c(1.0 / 4294967296.0);
        for (o, r) in out.iter_mut().zip(raw) {
            *o = T::c(r as f64) * scale;
        }
        Ok(())
    }
}

/// First `n` points of the `d`-dimensional Sobol sequence with weights `1/n`.
pub fn sobol_nodes<T: Real>(n: usize, d: usize) -> Result<NodeSet<T>> {
    if n == 0 || n as u64 > MAX_POINTS {
        return Err(Error::InvalidParameter(format!("Sobol point count {n} outside 1..=2^31")));
    }
    let mut gen = Sobol::new(d)?;
    let mut points = vec![T::zero(); n * d];
    for chunk in points.chunks_mut(d) {
        gen.next_point(chunk)?;
    }
    Ok(NodeSet { dim: d, points, weights: vec![T::one() / T::n(n); n] })
}

/// Squared L2-star discrepancy (Warnock's formula).
pub fn l2_star_discrepancy(points: &[f64], d: usize) -> f64 {
    let n = points.len() / d;
    let nf = n as f64;
    let mut pair = 0.0;
    for i in 0..n {
        let xi = &points[i * d..(i + 1) * d];
        for j in 0..n {
            let xj = &points[j * d..(j + 1) * d];
            pair += xi.iter().zip(xj).map(|(a, b)| 1.0 - a.max(*b)).product::<f64>();
        }
    }
    let single: f64 = points.chunks(d).map(|x| x.iter().map(|a| (1.0 - a * a) / 2.0).product::<f64>()).sum();
    3f64.powi(-(d as i32)) - 2.0 * single / nf + pair / (nf * nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn nth_point(n: usize, d: usize) -> Vec<f64> {
        let set = sobol_nodes::<f64>(n + 1, d).unwrap();
        set.point(n).to_vec()
    }

    #[test]
    fn leading_points() {
        assert_eq!(sobol_nodes::<f64>(1, 1).unwrap().points, vec![0.0]);
        assert_eq!(sobol_nodes::<f64>(3, 1).unwrap().points, vec![0.0, 0.5, 0.75]);
        let p = sobol_nodes::<f64>(4, 3).unwrap().points;
        assert_eq!(p, vec![0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.75, 0.25, 0.25, 0.25, 0.75, 0.75]);
    }

    #[test]
    fn matches_reference_generator() {
        // unscrambled values from an independent implementation of the same table
        assert_eq!(&nth_point(5, 64)[..6], &[0.875, 0.875, 0.125, 0.375, 0.875, 0.625]);
        assert_eq!(&nth_point(1023, 64)[60..64], &[0.1025390625, 0.1962890625, 0.7900390625, 0.0400390625]);
        let p = nth_point(777, 64);
        assert_eq!([p[0], p[9], p[31], p[63]], [0.6923828125, 0.3232421875, 0.8994140625, 0.4267578125]);
    }

    #[test]
    fn rejects_large_dimension() {
        assert!(matches!(sobol_nodes::<f64>(4, 65), Err(Error::SobolDimension(65))));
        assert!(Sobol::new(0).is_err());
    }

    #[test]
    fn deterministic() {
        let a = sobol_nodes::<f64>(1000, 7).unwrap();
        let b = sobol_nodes::<f64>(1000, 7).unwrap();
        assert!(a.points.iter().zip(&b.points).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn lower_discrepancy_than_random() {
        let sob = sobol_nodes::<f64>(256, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rnd: Vec<f64> = (0..512).map(|_| rng.random::<f64>()).collect();
        assert!(l2_star_discrepancy(&sob.points, 2) < l2_star_discrepancy(&rnd, 2));
    }
}
