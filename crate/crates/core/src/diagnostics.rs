//! Energy-barrier diagnostics over solver traces.
//!
//! For layer ℓ of a cascade, with its recorded divergence path:
//!
//! * `M_ℓ` is the largest divergence on the path, initial point included;
//! * `D_ℓ` is the final divergence;
//! * `ξ_ℓ = M_ℓ − D_{ℓ−1}` is the barrier, with `D_0` the divergence at the
//!   first layer's initialisation;
//! * `P_ℓ = exp(−β ξ_ℓ) / Z` is the Boltzmann escape probability.
//!
//! The barrier is measured against the previous layer's final divergence,
//! since the cost at the global minimum is not observable.

use serde::{Deserialize, Serialize};

use crate::alpha::{solve_single_layer, SolveTrace};
use crate::error::{Error, Result};
use crate::matrix::NonNegMatrix;
use crate::multilayer::{solve_chem_nmf, LayerSpec, MultiLayerResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    /// Inverse temperature.
    pub beta: f64,
    /// Normalisation constant. `None` picks `Z = exp(−β·min ξ)`, so the
    /// largest reported probability is exactly 1.
    #[serde(default)]
    pub z: Option<f64>,
}

impl Default for BarrierParams {
    fn default() -> Self {
        Self { beta: 1.0, z: None }
    }
}

impl BarrierParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if let Some(z) = self.z {
            if !(z > 0.0 && z.is_finite()) {
                return Err(Error::Config(format!("z must be positive, got {z}")));
            }
        }
        Ok(())
    }

    /// `ln Z` for a set of barriers.
    fn log_z(&self, barriers: &[f64]) -> f64 {
        match self.z {
            Some(z) => z.ln(),
            None => {
                let min = barriers.iter().copied().fold(f64::INFINITY, f64::min);
                if min.is_finite() {
                    -self.beta * min
                } else {
                    0.0
                }
            }
        }
    }
}

/// `exp(−β ξ) / Z`.
pub fn escape_probability(barrier: f64, beta: f64, z: f64) -> f64 {
    (-beta * barrier).exp() / z
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerBarrier {
    #[serde(rename = "M_l")]
    pub max_divergence: f64,
    #[serde(rename = "D_l")]
    pub final_divergence: f64,
    #[serde(rename = "xi_l")]
    pub barrier: f64,
    #[serde(rename = "P_l")]
    pub escape_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBarrierReport {
    pub layers: Vec<LayerBarrier>,
    /// `Σ ξ_ℓ`.
    #[serde(rename = "xi_ML")]
    pub cumulative_barrier: f64,
    pub beta: f64,
    pub z: f64,
}

impl LayerBarrierReport {
    pub fn barriers(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.barrier).collect()
    }

    pub fn escape_probabilities(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.escape_probability).collect()
    }
}

struct PathSummary {
    max: f64,
    last: f64,
}

fn summarize(index: usize, trace: &SolveTrace) -> Result<PathSummary> {
    let last = *trace
        .divergences
        .last()
        .ok_or(Error::EmptyTrace { layer: index + 1 })?;
    Ok(PathSummary {
        max: trace.max_divergence(),
        last,
    })
}

/// Raw barriers `ξ_ℓ = M_ℓ − D_{ℓ−1}` for a chain of traces.
fn chain_barriers(traces: &[&SolveTrace], d0: f64) -> Result<Vec<(PathSummary, f64)>> {
    let mut prev = d0;
    traces
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let s = summarize(i, t)?;
            let xi = s.max - prev;
            prev = s.last;
            Ok((s, xi))
        })
        .collect()
}

fn build_report(chain: Vec<(PathSummary, f64)>, params: &BarrierParams, log_z: f64) -> LayerBarrierReport {
    let layers: Vec<LayerBarrier> = chain
        .into_iter()
        .map(|(s, xi)| LayerBarrier {
            max_divergence: s.max,
            final_divergence: s.last,
            barrier: xi,
            escape_probability: (-params.beta * xi - log_z).exp(),
        })
        .collect();
    let cumulative_barrier = layers.iter().map(|l| l.barrier).sum();
    LayerBarrierReport {
        layers,
        cumulative_barrier,
        beta: params.beta,
        z: log_z.exp(),
    }
}

/// Barrier report for an ordered sequence of traces.
pub fn trace_barriers(
    traces: &[&SolveTrace],
    params: &BarrierParams,
    d0: f64,
) -> Result<LayerBarrierReport> {
    params.validate()?;
    if traces.is_empty() {
        return Err(Error::TooFewLayers {
            needed: 1,
            found: 0,
        });
    }
    let chain = chain_barriers(traces, d0)?;
    let xis: Vec<f64> = chain.iter().map(|(_, xi)| *xi).collect();
    let log_z = params.log_z(&xis);
    Ok(build_report(chain, params, log_z))
}

/// Barrier report for a cascade; `d0` is the divergence at the first layer's
/// initialisation (see [`initial_divergence`]).
pub fn layer_barriers(
    result: &MultiLayerResult,
    params: &BarrierParams,
    d0: f64,
) -> Result<LayerBarrierReport> {
    let traces: Vec<&SolveTrace> = result.layers.iter().map(|l| &l.trace).collect();
    trace_barriers(&traces, params, d0)
}

pub fn initial_divergence(result: &MultiLayerResult) -> f64 {
    result.layers[0].trace.initial
}

/// `Π (1 − P_ℓ)`: probability of never escaping across the given attempts.
pub fn survival_probability(escape_probs: &[f64]) -> Result<f64> {
    escape_probs.iter().try_fold(1.0, |acc, &p| {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        Ok(acc * (1.0 - p))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotoneEscape {
    /// Entry `i` is `ξ_{i+2} ≤ ξ_{i+1}` (1-based layers), i.e. `P` did not drop.
    pub non_increasing: Vec<bool>,
    /// Smallest 1-based layer `L*` with `ξ_ℓ ≤ ξ_{ℓ−1}` for every `ℓ ≥ L*`.
    pub suffix_start: Option<usize>,
}

pub fn monotone_escape_check(report: &LayerBarrierReport) -> Result<MonotoneEscape> {
    if report.layers.len() < 2 {
        return Err(Error::TooFewLayers {
            needed: 2,
            found: report.layers.len(),
        });
    }
    let non_increasing: Vec<bool> = report
        .layers
        .windows(2)
        .map(|w| w[1].barrier <= w[0].barrier)
        .collect();
    let trailing = non_increasing.iter().rev().take_while(|&&ok| ok).count();
    // Pair i compares layers i+1 and i+2, so the suffix starts at layer
    // (len − trailing) + 2.
    let suffix_start = (trailing > 0).then(|| non_increasing.len() - trailing + 2);
    Ok(MonotoneEscape {
        non_increasing,
        suffix_start,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptSurvival {
    pub seed: u64,
    pub multi_layer: f64,
    pub single_layer: f64,
    pub multi_layer_barriers: Vec<f64>,
    pub single_layer_barriers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalComparison {
    /// Mean over attempts of `Π_ℓ (1 − P_ℓ)` along the cascade.
    pub survival_ml: f64,
    /// Mean over attempts of `Π_k (1 − P̂_k)` over the same number of
    /// single-layer restarts.
    pub survival_sl: f64,
    pub z: f64,
    pub attempts: Vec<AttemptSurvival>,
}

/// Compares trapping probability of the cascade against repeated
/// single-layer restarts with the same number of stages.
///
/// Attempt `a` uses seed `base_seed + a·L`. The cascade runs with that master
/// seed. The single-layer regime performs `L` restarts on `y` at rank `R_1`
/// with seeds `seed + k`, so its first restart coincides with the cascade's
/// first layer; restart barriers chain like layer barriers, each measured
/// against the previous restart's final divergence. One `Z` is shared by both
/// regimes.
pub fn multilayer_vs_single_survival(
    y: &NonNegMatrix,
    spec: &LayerSpec,
    attempts: usize,
    params: &BarrierParams,
    base_seed: u64,
) -> Result<SurvivalComparison> {
    params.validate()?;
    spec.validate_for(y.rows(), y.cols())?;
    if attempts == 0 {
        return Err(Error::Config("attempts must be at least 1".into()));
    }
    let depth = spec.depth();
    let stride = depth as u64;

    struct Raw {
        seed: u64,
        ml: Vec<f64>,
        sl: Vec<f64>,
    }

    let mut raw = Vec::with_capacity(attempts);
    for a in 0..attempts {
        let seed = base_seed.wrapping_add(a as u64 * stride);
        let mut attempt_spec = spec.clone();
        attempt_spec.cfg.seed = seed;
        let cascade = solve_chem_nmf(y, &attempt_spec)?;
        let ml_traces: Vec<&SolveTrace> = cascade.layers.iter().map(|l| &l.trace).collect();
        let ml = chain_barriers(&ml_traces, initial_divergence(&cascade))?
            .into_iter()
            .map(|(_, xi)| xi)
            .collect();

        let mut restarts = Vec::with_capacity(depth);
        for k in 0..depth {
            let cfg = spec.cfg.with_seed(seed.wrapping_add(k as u64));
            restarts.push(solve_single_layer(y, spec.ranks[0], &cfg, None)?.1);
        }
        let sl_traces: Vec<&SolveTrace> = restarts.iter().collect();
        let sl = chain_barriers(&sl_traces, restarts[0].initial)?
            .into_iter()
            .map(|(_, xi)| xi)
            .collect();
        raw.push(Raw { seed, ml, sl });
    }

    let pooled: Vec<f64> = raw.iter().flat_map(|r| r.ml.iter().chain(&r.sl)).copied().collect();
    let log_z = params.log_z(&pooled);
    let prob = |xi: &f64| (-params.beta * xi - log_z).exp();

    let mut out = Vec::with_capacity(attempts);
    for r in raw {
        let ml_p: Vec<f64> = r.ml.iter().map(prob).collect();
        let sl_p: Vec<f64> = r.sl.iter().map(prob).collect();
        out.push(AttemptSurvival {
            seed: r.seed,
            multi_layer: survival_probability(&ml_p)?,
            single_layer: survival_probability(&sl_p)?,
            multi_layer_barriers: r.ml,
            single_layer_barriers: r.sl,
        });
    }
    let n = out.len() as f64;
    Ok(SurvivalComparison {
        survival_ml: out.iter().map(|a| a.multi_layer).sum::<f64>() / n,
        survival_sl: out.iter().map(|a| a.single_layer).sum::<f64>() / n,
        z: log_z.exp(),
        attempts: out,
    })
}
