use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use spectro_core::densities::{evaluate_grid, wigner_closed_form, wigner_numerical, Grid2, SpectrogramEvaluator};
use spectro_core::expectation::{
    convergence_experiment, deterministic_expectation, estimate_expectation, gaussian_weyl_oracle, order_seed,
    parse_observable, sample_orders, weighted_histogram, ExpectationResult, Observable, DETERMINISTIC_NODES,
};
use spectro_core::io::{config_hash, csv, grid_csv_body, samples_csv_body, Metadata};
use spectro_core::quadrature::QuadratureSpec;
use spectro_core::sampler::metropolis_chain;
use spectro_core::specfun::expansion_coefficients;
use spectro_core::states::{PhasePoint, State, StateKind};
use spectro_core::MultiIndex;

use crate::config::{
    ConvergeConfig, DensityConfig, DensityKind, ExpectConfig, HistogramConfig, Method, Precision, SampleConfig,
};
use crate::output::{with_suffix, Artifact};

/// Gauss–Hermite / Gauss–Legendre order of the Wigner transform when the
/// config gives none.
const WIGNER_NODES: usize = 100;

fn hash_of(cfg: &impl Serialize) -> Result<String> {
    Ok(config_hash(&serde_json::to_value(cfg)?))
}

fn meta(command: &str, seed: impl ToString, hash: &str) -> Metadata {
    Metadata::new().with("command", command).with("seed", seed).with("config_hash", hash)
}

fn artifact(out: Option<&Path>, contents: String) -> Artifact {
    Artifact { path: out.map(Path::to_path_buf).unwrap_or_default(), contents }
}

fn metadata_json(meta: &Metadata) -> serde_json::Value {
    meta.entries().iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>().into()
}

pub fn coeffs(dim: usize, order: u32) -> Result<String> {
    let c = expansion_coefficients(dim, order)?;
    let weights: Vec<serde_json::Value> =
        c.c.iter().enumerate().map(|(j, v)| json!([v.to_string(), if j % 2 == 0 { 1 } else { -1 }])).collect();
    let multiplicities: Vec<u64> = (0..c.c.len()).map(|j| c.multiplicity(j)).collect();
    let averaged: Vec<f64> = (0..c.c.len()).map(|j| c.averaged_weight::<f64>(j)).collect();
    let value = json!({
        "dim": dim,
        "order": order,
        "weights": weights,
        "multiplicities": multiplicities,
        "averaged_weights": averaged,
        "signed_mass": c.signed_mass().to_string(),
    });
    Ok(serde_json::to_string(&value)? + "\n")
}

pub fn density(mut cfg: DensityConfig, grid: Option<Grid2>, out: Option<&Path>) -> Result<Vec<Artifact>> {
    if grid.is_some() {
        cfg.grid = grid;
    }
    let (state, grid) = cfg.validate()?;
    let hash = hash_of(&cfg)?;
    let rows = match &cfg.density {
        DensityKind::Wigner {} => {
            let quad = cfg.quad.unwrap_or(QuadratureSpec::gauss_hermite(WIGNER_NODES));
            let closed = matches!(state.kind(), StateKind::Gaussian(_) | StateKind::Hermite(_));
            evaluate_grid(&grid, |z| {
                if closed {
                    wigner_closed_form(&state, z)
                } else {
                    wigner_numerical(&state, z, &quad)
                }
            })?
        }
        kind => {
            let eval =
                SpectrogramEvaluator::new(&state, cfg.quad.unwrap_or_else(|| QuadratureSpec::default_for(&state)))?;
            match kind {
                DensityKind::Husimi {} => evaluate_grid(&grid, |z| eval.husimi(z))?,
                DensityKind::Spectrogram { k } => {
                    let k = MultiIndex::new(k.clone());
                    evaluate_grid(&grid, |z| eval.spectrogram(&k, z))?
                }
                DensityKind::Mu { order } => evaluate_grid(&grid, |z| eval.mu(*order, z))?,
                DensityKind::Wigner {} => unreachable!(),
            }
        }
    };
    let mut m = meta("density", cfg.quad.map_or(0, |q| q.seed), &hash)
        .with("state_hash", state.hash())
        .with("eps", cfg.eps)
        .with("density", cfg.density.column());
    match &cfg.density {
        DensityKind::Mu { order } => m = m.with("N", order),
        DensityKind::Spectrogram { k } => m = m.with("k", k[0]),
        _ => {}
    }
    Ok(vec![artifact(out, csv(&m, &grid_csv_body(cfg.density.column(), &rows)))])
}

pub fn sample(mut cfg: SampleConfig, seed: Option<u64>, out: Option<&Path>) -> Result<Vec<Artifact>> {
    if let Some(s) = seed {
        cfg.chain.seed = s;
    }
    let Some(out) = out else { bail!("sample writes one file pair per order; pass --out PREFIX") };
    let state = cfg.validate()?;
    let hash = hash_of(&cfg)?;
    let sets = cfg
        .orders
        .par_iter()
        .map(|&j| {
            let mut chain = cfg.chain.clone();
            chain.seed = order_seed(cfg.chain.seed, j);
            metropolis_chain(&state, j, &chain).with_context(|| format!("sampling order {j}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut artifacts = Vec::new();
    for s in &sets {
        let m = meta("sample", cfg.chain.seed, &hash)
            .with("chain_seed", s.seed)
            .with("state_hash", state.hash())
            .with("eps", cfg.eps)
            .with("j", s.order)
            .with("n", s.len())
            .with("acceptance_rate", s.acceptance_rate);
        let mut sidecar = s.sidecar();
        sidecar["metadata"] = metadata_json(&m);
        artifacts.push(Artifact {
            path: with_suffix(out, &format!("_j{}.csv", s.order)),
            contents: csv(&m, &samples_csv_body(s)),
        });
        artifacts.push(Artifact {
            path: with_suffix(out, &format!("_j{}.json", s.order)),
            contents: serde_json::to_string_pretty(&sidecar)? + "\n",
        });
    }
    Ok(artifacts)
}

fn gaussian_oracle(state: &State<f64>, a: &Observable) -> Option<serde_json::Value> {
    let StateKind::Gaussian(w) = state.kind() else { return None };
    let o = gaussian_weyl_oracle(w, a, state.eps()).ok()?;
    Some(json!({ "value": o.value, "tolerance": o.tolerance, "exact": o.exact }))
}

pub fn expect(mut cfg: ExpectConfig, seed: Option<u64>, out: Option<&Path>) -> Result<Vec<Artifact>> {
    if let (Some(s), Some(chain)) = (seed, cfg.chain.as_mut()) {
        chain.seed = s;
    }
    let state = cfg.validate()?;
    let hash = hash_of(&cfg)?;
    let a = parse_observable(&cfg.observable, state.dim())?;
    let (result, seed_entry) = match cfg.method {
        Method::Mcmc => {
            let chain = cfg.chain.as_ref().expect("validated");
            (estimate_expectation(&state, &a, cfg.order, chain)?, chain.seed.to_string())
        }
        Method::Deterministic => {
            let quad = cfg.quad.unwrap_or_else(|| QuadratureSpec::default_for(&state));
            let v = deterministic_expectation(&state, &a, cfg.order, cfg.nodes.unwrap_or(DETERMINISTIC_NODES), &quad)?;
            let r = ExpectationResult {
                estimate: v,
                std_error: 0.0,
                per_order_means: Vec::new(),
                n: 0,
                order: cfg.order,
                method: "deterministic".into(),
            };
            (r, "none".to_string())
        }
    };
    let m = meta("expect", seed_entry, &hash)
        .with("state_hash", state.hash())
        .with("eps", cfg.eps)
        .with("N", cfg.order)
        .with("observable", &cfg.observable);
    let value = json!({
        "metadata": metadata_json(&m),
        "result": result,
        "oracle": gaussian_oracle(&state, &a),
    });
    Ok(vec![artifact(out, serde_json::to_string_pretty(&value)? + "\n")])
}

pub fn converge(cfg: ConvergeConfig, out: Option<&Path>) -> Result<Vec<Artifact>> {
    cfg.validate()?;
    let hash = hash_of(&cfg)?;
    let d = cfg.center.q.len();
    let w = PhasePoint::new(cfg.center.q.clone(), cfg.center.p.clone())?;
    let observables: Vec<(String, Observable)> =
        cfg.observables.iter().map(|o| Ok((o.name.clone(), parse_observable(&o.expr, d)?))).collect::<Result<_>>()?;
    let table = match cfg.precision {
        #[cfg(feature = "quad")]
        Precision::Quad => {
            convergence_experiment::<spectro_core::Quad>(&w, &observables, &cfg.orders, &cfg.eps, cfg.nodes)?
        }
        #[cfg(not(feature = "quad"))]
        Precision::Quad => unreachable!("rejected by validation"),
        Precision::Double => convergence_experiment::<f64>(&w, &observables, &cfg.orders, &cfg.eps, cfg.nodes)?,
    };
    for (name, _) in &observables {
        for &n in &cfg.orders {
            if let Some(s) = table.slope(name, n) {
                eprintln!("{name} N={n}: slope {s:.3}");
            }
        }
    }
    let precision = match cfg.precision {
        Precision::Quad => "binary128",
        Precision::Double => "binary64",
    };
    let m = meta("converge", "none", &hash).with("nodes", cfg.nodes).with("precision", precision);
    Ok(vec![artifact(out, csv(&m, &table.csv_body()))])
}

pub fn histogram(mut cfg: HistogramConfig, seed: Option<u64>, out: Option<&Path>) -> Result<Vec<Artifact>> {
    if let Some(s) = seed {
        cfg.chain.seed = s;
    }
    let (state, grid) = cfg.validate()?;
    let hash = hash_of(&cfg)?;
    let samples = sample_orders(&state, cfg.order, &cfg.chain)?;
    let h = weighted_histogram(&samples, cfg.order, &grid)?;
    let rates: Vec<String> = samples.iter().map(|s| format!("{:.4}", s.acceptance_rate)).collect();
    let m = meta("histogram", cfg.chain.seed, &hash)
        .with("state_hash", state.hash())
        .with("eps", cfg.eps)
        .with("N", cfg.order)
        .with("n", cfg.chain.n_samples)
        .with("signed_mass", h.signed_mass())
        .with("acceptance_rates", rates.join(" "));
    Ok(vec![artifact(out, csv(&m, &h.csv_body()))])
}
