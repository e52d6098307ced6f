use spectro_core::densities::SpectrogramEvaluator;
use spectro_core::expectation::{
    deterministic_expectation, estimate_expectation, gaussian_weyl_oracle, integrate_mu, parse_observable,
    sample_orders, weighted_histogram, HistGrid,
};
use spectro_core::quadrature::QuadratureSpec;
use spectro_core::sampler::ChainConfig;
use spectro_core::states::{PhasePoint, State};
use spectro_core::Error;

fn w() -> PhasePoint<f64> {
    PhasePoint::new(vec![0.5], vec![-1.0]).unwrap()
}

#[test]
fn husimi_bias_for_cosine_is_first_order() {
    let a = parse_observable("cos(q)", 1).unwrap();
    let errors: Vec<f64> = [1e-2, 1e-3]
        .iter()
        .map(|&eps| {
            let g = State::gaussian(w(), eps).unwrap();
            let v = deterministic_expectation(&g, &a, 1, 60, &QuadratureSpec::gauss_hermite(40)).unwrap();
            (v - gaussian_weyl_oracle(&w(), &a, eps).unwrap().value).abs()
        })
        .collect();
    // leading term ε/4 · |cos(1/2)|
    let ratio = errors[0] / errors[1];
    assert!((ratio - 10.0).abs() < 0.2, "{errors:?}");
    assert!((errors[1] / 1e-3 - 0.25 * 0.5f64.cos()).abs() < 1e-3);
}

#[test]
fn quartic_is_exact_from_order_three() {
    let a = parse_observable("q^4 + 1", 1).unwrap();
    for eps in [1e-1, 1e-2, 1e-3] {
        let g = State::gaussian(w(), eps).unwrap();
        let oracle = gaussian_weyl_oracle(&w(), &a, eps).unwrap().value;
        for n in [3, 4] {
            let v = deterministic_expectation(&g, &a, n, 60, &QuadratureSpec::gauss_hermite(40)).unwrap();
            assert!((v - oracle).abs() < 1e-10, "eps={eps} N={n}");
        }
        let v2 = deterministic_expectation(&g, &a, 2, 60, &QuadratureSpec::gauss_hermite(40)).unwrap();
        assert!((v2 - oracle).abs() > 1e-3 * eps * eps);
    }
}

#[test]
fn sampling_estimate_agrees_with_integration() {
    let eps = 0.05;
    let g = State::gaussian(w(), eps).unwrap();
    let a = parse_observable("cos(q) + p^2", 1).unwrap();
    let exact = deterministic_expectation(&g, &a, 2, 60, &QuadratureSpec::gauss_hermite(40)).unwrap();
    let r = estimate_expectation(&g, &a, 2, &ChainConfig::new(200_000, 5)).unwrap();
    assert!((r.estimate - exact).abs() < 4.0 * r.std_error, "{r:?} vs {exact}");
    assert_eq!(r.method, "mcmc");
}

#[test]
fn hat_mass_and_histogram() {
    let eps: f64 = 0.05;
    let hat = State::hat(0.0, eps).unwrap();
    let eval = SpectrogramEvaluator::new(&hat, QuadratureSpec::default_for(&hat)).unwrap();
    let mass = integrate_mu(&eval, 3, 200, |_| 1.0).unwrap();
    // the Gaussian outer rule misses part of the p^{-4} momentum tail
    assert!((mass - 1.0).abs() < 5e-3, "{mass}");
    let samples = sample_orders(&hat, 3, &ChainConfig::new(20_000, 9)).unwrap();
    let grid = HistGrid::default_for(&hat);
    let h = weighted_histogram(&samples, 3, &grid).unwrap();
    // bins outside the grid lose a little mass
    assert!((h.signed_mass() - 1.0).abs() < 0.05, "{}", h.signed_mass());
    let bad = HistGrid { nq: 0, ..grid };
    assert!(matches!(weighted_histogram(&samples, 3, &bad), Err(Error::GridMismatch(_))));
}

#[test]
fn parser_reports_offsets() {
    match parse_observable("q +", 1) {
        Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 3),
        other => panic!("{other:?}"),
    }
    assert!(parse_observable("q_3", 2).is_err());
    assert!(parse_observable("sin(q_1) * p_2^2", 2).is_ok());
}
