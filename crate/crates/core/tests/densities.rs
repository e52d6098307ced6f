use num_complex::Complex;
use proptest::prelude::*;

use spectro_core::densities::{mu_density, mu_density_via_laplacians, SpectrogramEvaluator};
use spectro_core::expectation::integrate_mu;
use spectro_core::quadrature::{gauss_hermite_rule, QuadratureSpec};
use spectro_core::specfun::multi_indices;
use spectro_core::states::{heisenberg_weyl_shift, PhasePoint, State};
use spectro_core::MultiIndex;

fn pp(q: f64, p: f64) -> PhasePoint<f64> {
    PhasePoint::new(vec![q], vec![p]).unwrap()
}

/// `∫ f dz` over phase space by a Gauss–Hermite rule for `e^{-|z-c|²/width}`.
/// Matching the spectrogram envelope keeps nodes out of the far field.
fn phase_integral(c: &PhasePoint<f64>, width: f64, nodes: usize, f: impl Fn(&PhasePoint<f64>) -> f64) -> f64 {
    let d = c.dim();
    let rule = gauss_hermite_rule(nodes, width, &c.coords(), 2 * d).unwrap();
    rule.iter()
        .map(|(z, w)| {
            let r2: f64 = z.iter().zip(c.coords()).map(|(a, b)| (a - b) * (a - b)).sum();
            w * (r2 / width).exp() * f(&PhasePoint::from_coords(z))
        })
        .sum()
}

fn test_states(eps: f64) -> Vec<State<f64>> {
    let g = |q: f64, p: f64| State::gaussian(pp(q, p), eps).unwrap();
    vec![
        g(0.5, -1.0),
        State::hermite(MultiIndex::new(vec![2]), eps).unwrap(),
        State::gaussian(PhasePoint::new(vec![0.2, -0.1], vec![0.0, 0.3]).unwrap(), eps).unwrap(),
        State::hermite(MultiIndex::new(vec![1, 1]), eps).unwrap(),
        State::superposition(vec![(Complex::new(1.0, 0.0), g(0.0, 0.0)), (Complex::new(0.0, 1.0), g(0.3, 0.2))])
            .unwrap(),
    ]
}

#[test]
fn spectrograms_have_unit_mass() {
    let eps = 0.1;
    for state in test_states(eps) {
        let eval = SpectrogramEvaluator::new(&state, QuadratureSpec::gauss_hermite(40)).unwrap();
        let d = state.dim();
        let centre = state.nominal_center();
        for n in 0..=3 {
            for k in multi_indices(d, n) {
                let nodes = if d == 1 { 12 } else { 8 };
                let mass = phase_integral(&centre, 2.0 * eps, nodes, |z| eval.spectrogram(&k, z).unwrap());
                assert!((mass - 1.0).abs() < 1e-6, "{:?} k={k:?}: mass {mass}", state.kind());
            }
        }
    }
}

#[test]
fn signed_densities_have_unit_mass() {
    let eps = 0.1;
    for state in test_states(eps) {
        let eval = SpectrogramEvaluator::new(&state, QuadratureSpec::gauss_hermite(40)).unwrap();
        // polynomial times the matched envelope for every state but the superposition
        let nodes = if state.dim() == 1 { 60 } else { 10 };
        for n in 1..=4 {
            let mass = integrate_mu(&eval, n, nodes, |_| 1.0).unwrap();
            assert!((mass - 1.0).abs() < 1e-6, "{:?} N={n}: mass {mass}", state.kind());
        }
    }
}

#[test]
fn closed_forms_match_quadrature() {
    let eps = 0.1;
    let states = [
        State::gaussian(pp(0.5, -1.0), eps).unwrap(),
        State::hermite(MultiIndex::new(vec![3]), eps).unwrap(),
        State::gaussian(PhasePoint::new(vec![0.2, -0.1], vec![0.0, 0.3]).unwrap(), eps).unwrap(),
        State::hermite(MultiIndex::new(vec![2, 1]), eps).unwrap(),
    ];
    for state in &states {
        let exact = SpectrogramEvaluator::new(state, QuadratureSpec::gauss_hermite(40)).unwrap();
        let quad =
            SpectrogramEvaluator::new(state, QuadratureSpec::gauss_hermite(40)).unwrap().with_force_quadrature(true);
        let d = state.dim();
        let c = state.nominal_center();
        let mut compared = 0;
        for n in 0..=3 {
            for k in multi_indices(d, n) {
                for shift in [-0.3, 0.0, 0.2, 0.45] {
                    let z = PhasePoint::new(
                        c.q.iter().map(|v| v + shift).collect(),
                        c.p.iter().map(|v| v - shift / 2.0).collect(),
                    )
                    .unwrap();
                    let Some(a) = exact.closed_form(&k, &z) else { continue };
                    let b = quad.spectrogram(&k, &z).unwrap();
                    let peak = 1.0 / (2.0 * std::f64::consts::PI * eps).powi(d as i32);
                    assert!(
                        (a - b).abs() <= 1e-5 * a.abs().max(1e-3 * peak),
                        "{:?} k={k:?} z={z:?}: {a} vs {b}",
                        state.kind()
                    );
                    compared += 1;
                }
            }
        }
        assert!(compared > 0);
    }
}

#[test]
fn hat_spectrogram_matches_a_dense_grid() {
    let eps: f64 = 0.05;
    let q0 = 0.0;
    let hat = State::hat(q0, eps).unwrap();
    let eval = SpectrogramEvaluator::new(&hat, QuadratureSpec::default_for(&hat)).unwrap();
    let peak = eval.husimi(&pp(q0, 0.0)).unwrap();
    // composite Simpson over the support, which dominates the integrand
    let half = eps.sqrt();
    let panels = 20_000;
    let h = 2.0 * half / panels as f64;
    for k in 0..=2u32 {
        let k = MultiIndex::new(vec![k]);
        for (q, p) in [(0.0, 0.0), (0.1, 0.3), (-0.15, -0.8), (0.3, 1.5), (0.05, 4.0)] {
            let z = pp(q, p);
            let mut ip = Complex::new(0.0, 0.0);
            for i in 0..=panels {
                let x = -half + h * i as f64;
                let w = if i == 0 || i == panels {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let psi = hat.evaluate(&[x]).unwrap();
                let window = heisenberg_weyl_shift(&z, &k, eps, &[x]).unwrap();
                ip += psi * window.conj() * w;
            }
            ip *= h / 3.0;
            let dense = ip.norm_sqr() / (2.0 * std::f64::consts::PI * eps);
            let value = eval.spectrogram(&k, &z).unwrap();
            assert!((value - dense).abs() < 1e-4 * peak, "k={k:?} z={z:?}: {value} vs {dense}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrograms_are_nonnegative(q in -2.0f64..2.0, p in -6.0f64..6.0, k in 0u32..4, which in 0usize..3) {
        let eps = 0.05;
        let state = match which {
            0 => State::hat(0.0, eps).unwrap(),
            1 => State::hermite(MultiIndex::new(vec![2]), eps).unwrap(),
            _ => State::superposition(vec![
                (Complex::new(1.0, 0.0), State::gaussian(pp(-0.3, 0.0), eps).unwrap()),
                (Complex::new(-1.0, 0.0), State::gaussian(pp(0.3, 0.5), eps).unwrap()),
            ]).unwrap(),
        };
        let eval = SpectrogramEvaluator::new(&state, QuadratureSpec::default_for(&state)).unwrap();
        prop_assert!(eval.spectrogram(&MultiIndex::new(vec![k]), &pp(q, p)).unwrap() >= -1e-12);
    }

    #[test]
    fn laplacian_route_matches_spectrograms(q in -1.0f64..1.0, p in -1.0f64..1.0, n in 1u32..=4) {
        let eps = 0.1;
        let g = State::gaussian(pp(0.2, -0.4), eps).unwrap();
        let z = pp(q, p);
        let a = mu_density(&g, n, &z, &QuadratureSpec::gauss_hermite(40)).unwrap();
        let b = mu_density_via_laplacians(&g, n, &z).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-12), "{} vs {}", a, b);
    }
}
