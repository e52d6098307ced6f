use proptest::prelude::*;

use spectro_core::expectation::loglog_slope;
use spectro_core::sampler::{metropolis_chain, ChainConfig};
use spectro_core::states::{PhasePoint, State};

fn packet(eps: f64) -> State<f64> {
    State::gaussian(PhasePoint::new(vec![0.5], vec![-1.0]).unwrap(), eps).unwrap()
}

#[test]
fn position_mean_error_decays_like_inverse_root_n() {
    let eps = 1e-2;
    let g = packet(eps);
    let sizes = [1_000usize, 10_000, 100_000, 1_000_000];
    let mut sq = [0.0; 4];
    let seeds = 10;
    for seed in 0..seeds {
        let s = metropolis_chain(&g, 0, &ChainConfig::new(1_000_000, 100 + seed)).unwrap();
        for (acc, &n) in sq.iter_mut().zip(&sizes) {
            let mean = s.iter().take(n).map(|z| z[0]).sum::<f64>() / n as f64;
            *acc += (mean - 0.5).powi(2) / seeds as f64;
        }
    }
    let rms: Vec<f64> = sq.iter().map(|v| v.sqrt()).collect();
    let x: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&x, &rms);
    assert!((slope + 0.5).abs() <= 0.15, "slope {slope}, errors {rms:?}");
}

#[test]
fn identical_configs_give_identical_samples() {
    let g = State::hat(0.0, 0.05).unwrap();
    let cfg = ChainConfig::new(2_000, 42);
    let a = metropolis_chain(&g, 2, &cfg).unwrap();
    let b = metropolis_chain(&g, 2, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.acceptance_rate.is_finite() && a.acceptance_rate > 0.0);
    let other = metropolis_chain(&g, 2, &ChainConfig::new(2_000, 43)).unwrap();
    assert_ne!(a.points, other.points);
}

#[test]
fn chains_split_the_sample_budget() {
    let g = packet(0.05);
    let mut cfg = ChainConfig::new(10_001, 7);
    cfg.n_chains = 4;
    let s = metropolis_chain(&g, 1, &cfg).unwrap();
    assert_eq!(s.len(), 10_001);
    assert_eq!(s.n_chains, 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn matched_proposal_acceptance_is_moderate(seed in any::<u64>(), j in 0u32..3) {
        let s = metropolis_chain(&packet(0.01), j, &ChainConfig::new(10_000, seed)).unwrap();
        prop_assert!(s.acceptance_rate > 0.2 && s.acceptance_rate < 0.9, "{}", s.acceptance_rate);
    }
}
