use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use proptest::prelude::*;

use spectro_core::quadrature::gauss_hermite_rule;
use spectro_core::specfun::{
    binomial, expansion_coefficients, hermite_function, laguerre, laplace_laguerre, multi_indices, multiplicity,
};
use spectro_core::MultiIndex;

#[test]
fn hermite_functions_are_orthonormal() {
    for d in 1..=2usize {
        for &eps in &[0.1, 1.0] {
            // φ_j φ_k = polynomial · e^{-|x|²/ε}: exact under the matching rule
            let rule = gauss_hermite_rule(20, eps, &vec![0.0; d], d).unwrap();
            let ks: Vec<MultiIndex> = (0..=5).flat_map(|n| multi_indices(d, n)).collect();
            let values: Vec<Vec<f64>> = rule
                .iter()
                .map(|(x, _)| {
                    let damp = (x.iter().map(|v| v * v).sum::<f64>() / eps).exp();
                    ks.iter().map(|k| hermite_function(k, eps, x).unwrap() * damp.sqrt()).collect()
                })
                .collect();
            for a in 0..ks.len() {
                for b in a..ks.len() {
                    let ip: f64 = rule.weights.iter().zip(&values).map(|(w, v)| w * v[a] * v[b]).sum();
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!((ip - expected).abs() < 1e-8, "d={d} eps={eps} {:?} {:?}: {ip}", ks[a], ks[b]);
                }
            }
        }
    }
}

#[test]
fn multi_index_counts_match_multiplicity() {
    for d in 1..=4 {
        for n in 0..=6 {
            let ks = multi_indices(d, n);
            assert_eq!(ks.len() as u64, multiplicity(d, n));
            assert!(ks.iter().all(|k| k.order() == n && k.dim() == d));
        }
    }
}

#[test]
fn one_dimensional_laplace_laguerre_is_binomial() {
    for n in 0..=8u32 {
        let e = laplace_laguerre(1, n).unwrap();
        let fact: BigUint = (1..=n as u64).map(BigUint::from).product();
        for j in 0..=n {
            assert_eq!(e.levels[j as usize], &fact * binomial(n as u64, j as u64));
        }
    }
}

proptest! {
    #[test]
    fn coefficients_are_positive_and_sum_to_unit_mass(d in 1usize..=4, n in 1u32..=8) {
        let c = expansion_coefficients(d, n).unwrap();
        prop_assert_eq!(c.c.len(), n as usize);
        prop_assert!(c.c.iter().all(|v| *v > BigRational::from_integer(BigInt::from(0))));
        prop_assert_eq!(c.signed_mass(), BigRational::from_integer(BigInt::from(1)));
    }

    #[test]
    fn laplace_laguerre_levels_depend_only_on_order(d in 1usize..=3, n in 0u32..=5) {
        let e = laplace_laguerre(d, n).unwrap();
        let terms = e.terms();
        prop_assert_eq!(e.levels.len(), n as usize + 1);
        for (k, c) in terms {
            prop_assert_eq!(&c, &e.levels[k.order() as usize]);
        }
    }

    #[test]
    fn laguerre_at_zero_is_one(n in 0u32..=30) {
        prop_assert!((laguerre(n, 0.0f64) - 1.0).abs() < 1e-12);
    }
}
