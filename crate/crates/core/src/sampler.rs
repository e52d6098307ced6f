//! Random-walk Metropolis–Hastings chains on phase space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::{SpectrogramEvaluator, MAX_ORDER};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::real::Real;
use crate::states::{PhasePoint, State};

/// Attempts made by [`auto_seed`] before giving up.
pub const SEED_ATTEMPTS: usize = 100;

/// Starting point: the state's nominal centre (perturbed if needed) or a
/// fixed point.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialPoint {
    #[default]
    #[serde(with = "auto_tag")]
    Auto,
    Point {
        q: Vec<f64>,
        p: Vec<f64>,
    },
}

mod auto_tag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let tag = String::deserialize(d)?;
        if tag == "auto" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!("expected \"auto\", got {tag:?}")))
        }
    }
}

fn default_burn_in() -> usize {
    1000
}

fn default_scale() -> f64 {
    1.0
}

fn default_chains() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub n_samples: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub seed: u64,
    /// Proposal standard deviation in units of `√ε`.
    #[serde(default = "default_scale")]
    pub proposal_scale: f64,
    /// Rule for the spectrogram inner products; the state's default if absent.
    #[serde(default)]
    pub quad: Option<QuadratureSpec>,
    #[serde(default)]
    pub initial: InitialPoint,
    /// Independent chains sharing `n_samples`, run concurrently.
    #[serde(default = "default_chains")]
    pub n_chains: usize,
}

impl ChainConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        ChainConfig {
            n_samples,
            burn_in: default_burn_in(),
            seed,
            proposal_scale: 1.0,
            quad: None,
            initial: InitialPoint::Auto,
            n_chains: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
        }
        if !(self.proposal_scale > 0.0 && self.proposal_scale.is_finite()) {
            return Err(Error::InvalidParameter("proposal_scale must be positive".into()));
        }
        if self.n_chains == 0 || self.n_chains > self.n_samples {
            return Err(Error::InvalidParameter("n_chains must be in 1..=n_samples".into()));
        }
        Ok(())
    }

    pub fn quadrature_for<T: Real>(&self, state: &State<T>) -> QuadratureSpec {
        self.quad.unwrap_or_else(|| QuadratureSpec::default_for(state))
    }
}

/// Output of [`metropolis_chain`]: `n` phase-space points (`2d` coordinates
/// each, `q` first) drawn from the averaged spectrogram of order `order`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet<T> {
    pub order: u32,
    pub dim: usize,
    pub points: Vec<T>,
    pub acceptance_rate: f64,
    pub seed: u64,
    pub burn_in: usize,
    pub n_chains: usize,
    pub target_hash: String,
}

impl<T: Real> SampleSet<T> {
    pub fn len(&self) -> usize {
        self.points.len() / (2 * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i * 2 * self.dim..(i + 1) * 2 * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.points.chunks(2 * self.dim)
    }

    /// Per-coordinate sample mean.
    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); 2 * self.dim];
        for z in self.iter() {
            for (a, &b) in m.iter_mut().zip(z) {
                *a = *a + b;
            }
        }
        let n = T::n(self.len());
        m.iter().map(|&v| v / n).collect()
    }

    /// Sample covariance (row-major `2d × 2d`).
    pub fn covariance(&self) -> Vec<T> {
        let m = self.mean();
        let k = 2 * self.dim;
        let mut c = vec![T::zero(); k * k];
        for z in self.iter() {
            for i in 0..k {
                for j in 0..k {
                    c[i * k + j] = c[i * k + j] + (z[i] - m[i]) * (z[j] - m[j]);
                }
            }
        }
        let n = T::n(self.len().saturating_sub(1).max(1));
        c.iter().map(|&v| v / n).collect()
    }

    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "acceptance_rate": self.acceptance_rate,
            "seed": self.seed,
            "j": self.order,
            "n": self.len(),
            "burn_in": self.burn_in,
            "n_chains": self.n_chains,
            "target": self.target_hash,
        })
    }
}

/// Random-walk Metropolis with proposal `z + step·ζ`, `ζ ∼ N(0, I)`.
/// Returns `(points, accepted)` where `accepted` counts post-burn-in moves.
pub fn metropolis<T: Real, R: Rng>(
    target: impl Fn(&[T]) -> T,
    start: &[T],
    step: T,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<(Vec<T>, usize)> {
    let k = start.len();
    let mut current = start.to_vec();
    let mut value = target(&current);
    if !(value > T::zero()) {
        return Err(Error::InvalidParameter("target density vanishes at the initial point".into()));
    }
    let mut proposal = vec![T::zero(); k];
    let mut out = Vec::with_capacity(n * k);
    let mut accepted = 0;
    for step_index in 0..burn_in + n {
        for (pr, &c) in proposal.iter_mut().zip(&current) {
            let zeta: f64 = rng.sample(StandardNormal);
            *pr = c + step * T::c(zeta);
        }
        let candidate = target(&proposal);
        let rho: f64 = rng.random();
        if T::c(rho) < candidate / value {
            std::mem::swap(&mut current, &mut proposal);
            value = candidate;
            if step_index >= burn_in {
                accepted += 1;
            }
        }
        if step_index >= burn_in {
            out.extend_from_slice(&current);
        }
    }
    Ok((out, accepted))
}

/// `m_j^{-1} Σ_{|k|=j} S_ψ^{φ_k}(z)`.
pub fn target_density<T: Real>(state: &State<T>, j: u32, z: &PhasePoint<T>, quad: &QuadratureSpec) -> Result<T> {
    SpectrogramEvaluator::new(state, *quad)?.averaged(j, z)
}

/// Nominal centre of `state`, perturbed by `√ε N(0, I)` until `target > 0`.
pub fn auto_seed<T: Real, R: Rng>(state: &State<T>, target: impl Fn(&[T]) -> T, rng: &mut R) -> Result<PhasePoint<T>> {
    let centre = state.nominal_center().coords();
    let sq = state.eps().sqrt();
    let mut z = centre.clone();
    for attempt in 0..SEED_ATTEMPTS {
        if attempt > 0 {
            for (zi, &c) in z.iter_mut().zip(&centre) {
                let u: f64 = rng.sample(StandardNormal);
                *zi = c + sq * T::c(u);
            }
        }
        let v = target(&z);
        if v > T::zero() && v.is_finite() {
            return Ok(PhasePoint::from_coords(&z));
        }
    }
    Err(Error::SeedSearchFailed(SEED_ATTEMPTS))
}

fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples the averaged spectrogram of order `j` of `state`.
pub fn metropolis_chain<T: Real>(state: &State<T>, j: u32, cfg: &ChainConfig) -> Result<SampleSet<T>> {
    cfg.validate()?;
    if j >= MAX_ORDER {
        return Err(Error::InvalidParameter(format!("spectrogram order {j} exceeds {}", MAX_ORDER - 1)));
    }
    let eval = SpectrogramEvaluator::new(state, cfg.quadrature_for(state))?;
    let d = state.dim();
    let target = |z: &[T]| eval.averaged_raw(j, &z[..d], &z[d..]);
    let target_hash = format!("{}:j{}:{:?}", state.hash(), j, cfg.quadrature_for(state));
    run_chains(target, state, cfg, j, target_hash)
}

/// Runs `cfg.n_chains` independent chains on an arbitrary target over the
/// phase space of `state` and concatenates them.
pub fn run_chains<T: Real>(
    target: impl Fn(&[T]) -> T + Sync,
    state: &State<T>,
    cfg: &ChainConfig,
    order: u32,
    target_hash: String,
) -> Result<SampleSet<T>> {
    cfg.validate()?;
    let d = state.dim();
    let step = state.eps().sqrt() * T::c(cfg.proposal_scale);
    let per_chain = cfg.n_samples / cfg.n_chains;
    let extra = cfg.n_samples % cfg.n_chains;
    let runs = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = chain_rng(cfg.seed, c as u64);
            let start = match &cfg.initial {
                InitialPoint::Auto => auto_seed(state, &target, &mut rng)?,
                InitialPoint::Point { q, p } => {
                    if q.len() != d || p.len() != d {
                        return Err(Error::DimensionMismatch { expected: d, got: q.len() });
                    }
                    PhasePoint::new(q.iter().map(|&v| T::c(v)).collect(), p.iter().map(|&v| T::c(v)).collect())?
                }
            };
            let n = per_chain + usize::from(c < extra);
            metropolis(&target, &start.coords(), step, n, cfg.burn_in, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let accepted: usize = runs.iter().map(|r| r.1).sum();
    let points: Vec<T> = runs.into_iter().flat_map(|r| r.0).collect();
    Ok(SampleSet {
        order,
        dim: d,
        points,
        acceptance_rate: accepted as f64 / cfg.n_samples as f64,
        seed: cfg.seed,
        burn_in: cfg.burn_in,
        n_chains: cfg.n_chains,
        target_hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::MultiIndex;

    fn pp(q: f64, p: f64) -> PhasePoint<f64> {
        PhasePoint::new(vec![q], vec![p]).unwrap()
    }

    #[test]
    fn constant_target_accepts_everything_in_box() {
        let mut rng = chain_rng(1, 0);
        let target = |z: &[f64]| if z.iter().all(|v| v.abs() < 1e6) { 1.0 } else { 0.0 };
        let (pts, acc) = metropolis(target, &[0.0, 0.0], 0.1, 5000, 0, &mut rng).unwrap();
        assert_eq!(acc, 5000);
        assert_eq!(pts.len(), 10_000);
    }

    #[test]
    fn two_level_target_has_the_right_stationary_law() {
        // density 1 on [-1,0) x [-1,1], 3 on [0,1] x [-1,1]: P(q >= 0) = 3/4
        let target = |z: &[f64]| {
            if z[0].abs() > 1.0 || z[1].abs() > 1.0 {
                0.0
            } else if z[0] < 0.0 {
                1.0
            } else {
                3.0
            }
        };
        let mut rng = chain_rng(9, 0);
        let (pts, _) = metropolis(target, &[0.5, 0.0], 0.8, 400_000, 1000, &mut rng).unwrap();
        let right = pts.chunks(2).filter(|z| z[0] >= 0.0).count() as f64 / 400_000.0;
        assert!((right - 0.75).abs() < 0.01, "{right}");
    }

    #[test]
    fn zero_start_is_rejected() {
        let mut rng = chain_rng(0, 0);
        assert!(metropolis(|_: &[f64]| 0.0, &[0.0, 0.0], 1.0, 10, 0, &mut rng).is_err());
    }

    #[test]
    fn target_examples() {
        let eps = 0.1;
        let w = PhasePoint::new(vec![0.2, 0.1], vec![-0.3, 0.4]).unwrap();
        let g = State::gaussian(w.clone(), eps).unwrap();
        let quad = QuadratureSpec::gauss_hermite(30);
        assert_eq!(target_density(&g, 1, &w, &quad).unwrap(), 0.0);
        let z = PhasePoint::new(vec![0.25f64, 0.0], vec![-0.2, 0.3]).unwrap();
        let h = target_density(&g, 0, &z, &quad).unwrap();
        let ev = SpectrogramEvaluator::new(&g, quad).unwrap();
        assert_eq!(h, ev.husimi(&z).unwrap());
        // order-1 average through the quadrature path agrees with the closed form
        let forced = ev.clone().with_force_quadrature(true);
        let a = forced.averaged(1, &z).unwrap();
        let b = ev.averaged(1, &z).unwrap();
        assert!((a - b).abs() < 1e-10 * b.abs().max(1e-300));
    }

    #[test]
    fn seeding_skips_zeros() {
        let eps = 0.1;
        let s = State::hermite(MultiIndex::new(vec![1]), eps).unwrap();
        let ev = SpectrogramEvaluator::new(&s, QuadratureSpec::gauss_hermite(20)).unwrap();
        // target vanishing exactly at the origin
        let target = |z: &[f64]| if z[0] == 0.0 && z[1] == 0.0 { 0.0 } else { ev.averaged_raw(0, &z[..1], &z[1..]) };
        let mut rng = chain_rng(5, 0);
        let z = auto_seed(&s, target, &mut rng).unwrap();
        assert!(target(&z.coords()) > 0.0);
        assert!(matches!(auto_seed(&s, |_: &[f64]| 0.0, &mut rng), Err(Error::SeedSearchFailed(100))));
    }

    #[test]
    fn chains_are_reproducible() {
        let g = State::gaussian(pp(0.0, 0.0), 0.05).unwrap();
        let mut cfg = ChainConfig::new(2000, 11);
        cfg.n_chains = 3;
        let a = metropolis_chain(&g, 1, &cfg).unwrap();
        let b = metropolis_chain(&g, 1, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2000);
        assert!(a.acceptance_rate > 0.0 && a.acceptance_rate <= 1.0);
        cfg.seed = 12;
        assert_ne!(metropolis_chain(&g, 1, &cfg).unwrap().points, a.points);
    }

    #[test]
    fn gaussian_husimi_moments() {
        let eps = 0.01;
        let w = pp(0.5, -1.0);
        let g = State::gaussian(w.clone(), eps).unwrap();
        let s = metropolis_chain(&g, 0, &ChainConfig::new(100_000, 3)).unwrap();
        let m = s.mean();
        assert!((m[0] - 0.5).abs() < 0.01 && (m[1] + 1.0).abs() < 0.01);
        let c = s.covariance();
        assert!((c[0] / eps - 1.0).abs() < 0.1 && (c[3] / eps - 1.0).abs() < 0.1);
        assert!(c[1].abs() < 0.1 * eps);
    }

    #[test]
    fn config_json() {
        let cfg: ChainConfig = serde_json::from_str(r#"{"n_samples":10,"initial":"auto"}"#).unwrap();
        assert_eq!(cfg.burn_in, 1000);
        assert_eq!(cfg.initial, InitialPoint::Auto);
        let cfg: ChainConfig = serde_json::from_str(r#"{"n_samples":10,"initial":{"q":[0.0],"p":[1.0]}}"#).unwrap();
        assert_eq!(cfg.initial, InitialPoint::Point { q: vec![0.0], p: vec![1.0] });
        assert!(serde_json::from_str::<ChainConfig>(r#"{"n_samples":10,"extra":1}"#).is_err());
        assert!(ChainConfig::new(0, 0).validate().is_err());
    }
}
