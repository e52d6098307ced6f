//! JSON run configurations. Unknown keys are rejected everywhere.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use spectro_core::densities::{Grid2, MAX_ORDER};
use spectro_core::expectation::{parse_observable, HistGrid};
use spectro_core::quadrature::QuadratureSpec;
use spectro_core::sampler::ChainConfig;
use spectro_core::states::{State, StateDescriptor};

pub fn load<C: DeserializeOwned>(path: &Path) -> Result<C> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn state(desc: &StateDescriptor, eps: f64) -> Result<State<f64>> {
    State::from_descriptor(desc, eps).context("invalid state")
}

fn check_order(n: u32) -> Result<()> {
    ensure!((1..=MAX_ORDER).contains(&n), "order N = {n} outside 1..={MAX_ORDER}");
    Ok(())
}

/// Parses `qmin:qmax:nq,pmin:pmax:np`.
pub fn parse_grid(src: &str) -> Result<Grid2> {
    let axes: Vec<&str> = src.split(',').collect();
    ensure!(axes.len() == 2, "grid must look like qmin:qmax:nq,pmin:pmax:np");
    let axis = |s: &str| -> Result<(f64, f64, usize)> {
        let parts: Vec<&str> = s.split(':').collect();
        ensure!(parts.len() == 3, "grid axis {s:?} must look like min:max:n");
        Ok((parts[0].trim().parse()?, parts[1].trim().parse()?, parts[2].trim().parse()?))
    };
    let (q_min, q_max, nq) = axis(axes[0])?;
    let (p_min, p_max, np) = axis(axes[1])?;
    Ok(Grid2 { q_min, q_max, nq, p_min, p_max, np })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DensityKind {
    Wigner {},
    Husimi {},
    Spectrogram { k: Vec<u32> },
    Mu { order: u32 },
}

impl DensityKind {
    pub fn column(&self) -> &'static str {
        match self {
            DensityKind::Wigner {} => "wigner",
            DensityKind::Husimi {} => "husimi",
            DensityKind::Spectrogram { .. } => "spectrogram",
            DensityKind::Mu { .. } => "mu",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub state: StateDescriptor,
    pub eps: f64,
    pub density: DensityKind,
    #[serde(default)]
    pub grid: Option<Grid2>,
    /// Spectrogram rule, or the Wigner transform rule for states without a
    /// closed form.
    #[serde(default)]
    pub quad: Option<QuadratureSpec>,
}

impl DensityConfig {
    pub fn validate(&self) -> Result<(State<f64>, Grid2)> {
        let s = state(&self.state, self.eps)?;
        ensure!(s.dim() == 1, "density grids need a one-dimensional state");
        match &self.density {
            DensityKind::Spectrogram { k } => ensure!(k.len() == 1, "spectrogram index must have one entry"),
            DensityKind::Mu { order } => check_order(*order)?,
            _ => {}
        }
        if let Some(q) = &self.quad {
            q.validate(1)?;
        }
        let Some(grid) = self.grid else { bail!("no grid given: set \"grid\" in the config or pass --grid") };
        grid.validate()?;
        Ok((s, grid))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub state: StateDescriptor,
    pub eps: f64,
    /// Spectrogram orders `j`; each is sampled with its own derived seed.
    pub orders: Vec<u32>,
    pub chain: ChainConfig,
}

impl SampleConfig {
    pub fn validate(&self) -> Result<State<f64>> {
        let s = state(&self.state, self.eps)?;
        ensure!(!self.orders.is_empty(), "orders must not be empty");
        for &j in &self.orders {
            ensure!(j < MAX_ORDER, "spectrogram order {j} exceeds {}", MAX_ORDER - 1);
        }
        let mut sorted = self.orders.clone();
        sorted.sort_unstable();
        sorted.dedup();
        ensure!(sorted.len() == self.orders.len(), "orders must be distinct");
        self.chain.validate()?;
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Mcmc,
    Deterministic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectConfig {
    pub state: StateDescriptor,
    pub eps: f64,
    pub observable: String,
    pub order: u32,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub chain: Option<ChainConfig>,
    /// Outer Gauss–Hermite order of the deterministic path.
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub quad: Option<QuadratureSpec>,
}

impl ExpectConfig {
    pub fn validate(&self) -> Result<State<f64>> {
        let s = state(&self.state, self.eps)?;
        check_order(self.order)?;
        parse_observable(&self.observable, s.dim()).context("invalid observable")?;
        match self.method {
            Method::Mcmc => {
                let Some(chain) = &self.chain else { bail!("method \"mcmc\" needs a \"chain\" block") };
                chain.validate()?;
            }
            Method::Deterministic => {
                ensure!(self.chain.is_none(), "\"chain\" is only used by method \"mcmc\"");
                ensure!(self.nodes != Some(0), "nodes must be positive");
                if let Some(q) = &self.quad {
                    q.validate(s.dim())?;
                }
            }
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Centre {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedObservable {
    pub name: String,
    pub expr: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Quad,
    Double,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub center: Centre,
    /// Values of ε to sweep.
    pub eps: Vec<f64>,
    pub orders: Vec<u32>,
    pub observables: Vec<NamedObservable>,
    #[serde(default = "default_converge_nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub precision: Precision,
}

fn default_converge_nodes() -> usize {
    spectro_core::expectation::DETERMINISTIC_NODES
}

impl ConvergeConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.center.q.len();
        ensure!(d >= 1 && self.center.p.len() == d, "center needs matching nonempty q and p");
        ensure!(
            !self.eps.is_empty() && self.eps.iter().all(|e| *e > 0.0 && e.is_finite()),
            "eps values must be positive"
        );
        ensure!(!self.orders.is_empty(), "orders must not be empty");
        for &n in &self.orders {
            check_order(n)?;
        }
        ensure!(!self.observables.is_empty(), "observables must not be empty");
        for o in &self.observables {
            ensure!(
                !o.name.contains(',') && !o.name.contains('\n'),
                "observable name {:?} must not contain commas",
                o.name
            );
            parse_observable(&o.expr, d).with_context(|| format!("invalid observable {:?}", o.name))?;
        }
        ensure!(self.nodes > 0, "nodes must be positive");
        #[cfg(not(feature = "quad"))]
        ensure!(self.precision == Precision::Double, "built without binary128 support; use \"precision\": \"double\"");
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramConfig {
    pub state: StateDescriptor,
    pub eps: f64,
    pub order: u32,
    pub chain: ChainConfig,
    /// Bin layout; `±6√ε` around the state's centre with `√ε/4` bins if absent.
    #[serde(default)]
    pub grid: Option<HistGrid>,
}

impl HistogramConfig {
    pub fn validate(&self) -> Result<(State<f64>, HistGrid)> {
        let s = state(&self.state, self.eps)?;
        ensure!(s.dim() == 1, "histograms need a one-dimensional state");
        check_order(self.order)?;
        self.chain.validate()?;
        let grid = self.grid.unwrap_or_else(|| HistGrid::default_for(&s));
        grid.validate()?;
        Ok((s, grid))
    }
}
