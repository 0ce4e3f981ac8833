//! Layer cascade: `Y ≈ A⁽¹⁾ A⁽²⁾ ⋯ A⁽ᴸ⁾ X⁽ᴸ⁾`.
//!
//! Layer ℓ factorises the activations of layer ℓ−1. From the second layer on,
//! the basis starts from a blend of a random matrix and a constant matrix at
//! the mean of the previous basis, weighted by the bounding factor `bf`:
//!
//! ```text
//! A⁽ℓ⁾ = (1 − bf)·A_rand + bf·mean(A⁽ℓ⁻¹⁾)·1
//! ```
//!
//! With `bf = 0` every layer starts fully at random, which is plain
//! multi-layer α-NMF.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alpha::{random_fill, solve_single_layer, FactorPair, SolveTrace, SolverConfig};
use crate::error::{Error, Result};
use crate::matrix::{EpsilonPolicy, NonNegMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub ranks: Vec<usize>,
    pub bf: f64,
    /// Shared by every layer; the seed is the master seed.
    pub cfg: SolverConfig,
}

impl LayerSpec {
    pub fn new(ranks: Vec<usize>, bf: f64, cfg: SolverConfig) -> Result<Self> {
        let spec = Self { ranks, bf, cfg };
        spec.validate()?;
        Ok(spec)
    }

    pub fn depth(&self) -> usize {
        self.ranks.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        validate_bf(self.bf)?;
        if self.ranks.is_empty() {
            return Err(Error::TooFewLayers {
                needed: 1,
                found: 0,
            });
        }
        if self.ranks.contains(&0) {
            return Err(Error::Config("layer ranks must be positive".into()));
        }
        if let Some(w) = self.ranks.windows(2).find(|w| w[1] > w[0]) {
            return Err(Error::Config(format!(
                "layer ranks must be non-increasing, found {} after {}",
                w[1], w[0]
            )));
        }
        Ok(())
    }

    /// Checks the cascade against the data shape `rows × cols`.
    pub fn validate_for(&self, rows: usize, cols: usize) -> Result<()> {
        self.validate()?;
        let first = self.ranks[0];
        if first > rows.min(cols) {
            return Err(Error::RankTooLarge {
                rank: first,
                max: rows.min(cols),
            });
        }
        Ok(())
    }

    /// Seed of layer `index` (0-based): the master seed plus the index, so
    /// the first layer uses the master seed itself.
    pub fn layer_seed(&self, index: usize) -> u64 {
        self.cfg.seed.wrapping_add(index as u64)
    }
}

fn validate_bf(bf: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&bf) {
        return Err(Error::Config(format!("bf must lie in [0, 1], got {bf}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerOutcome {
    pub factors: FactorPair,
    pub trace: SolveTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiLayerResult {
    /// `A⁽¹⁾ ⋯ A⁽ᴸ⁾`, accumulated by right-multiplication.
    pub a_tot: NonNegMatrix,
    pub x_final: NonNegMatrix,
    pub layers: Vec<LayerOutcome>,
}

impl MultiLayerResult {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Final divergence per layer, each measured against that layer's input.
    pub fn layer_divergences(&self) -> Vec<f64> {
        self.layers
            .iter()
            .map(|l| l.trace.final_divergence())
            .collect()
    }

    /// Recomputes `A⁽¹⁾ ⋯ A⁽ᴸ⁾` from the stored layer factors.
    pub fn chained_basis(&self) -> NonNegMatrix {
        let mut it = self.layers.iter();
        let first = it.next().expect("at least one layer").factors.a.clone();
        it.fold(first, |acc, l| {
            acc.matmul(&l.factors.a).expect("cascade shapes are consistent")
        })
    }
}

/// `(1 − bf)·A_rand + bf·mean(A_prev)·1`, with `A_rand` of shape
/// `A_prev.cols() × next_rank` drawn by [`crate::alpha::random_init`].
pub fn bounded_init(
    a_prev: &NonNegMatrix,
    next_rank: usize,
    bf: f64,
    seed: u64,
    eps: EpsilonPolicy,
) -> Result<NonNegMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    bounded_init_with(&mut rng, a_prev, next_rank, bf, eps)
}

fn bounded_init_with<R: Rng>(
    rng: &mut R,
    a_prev: &NonNegMatrix,
    next_rank: usize,
    bf: f64,
    eps: EpsilonPolicy,
) -> Result<NonNegMatrix> {
    validate_bf(bf)?;
    let a_rand = random_fill(rng, a_prev.cols(), next_rank, eps)?;
    let base = a_prev.mean_all();
    let blended = a_rand.as_array().mapv(|r| (1.0 - bf) * r + bf * base);
    NonNegMatrix::from_array(blended)
}

/// Starting factors for layer `index` (0-based) fitted to `input`.
///
/// Layer 0 draws `A` then `X` at random. Later layers draw `A_rand`, blend it
/// with the previous basis mean, then draw `X`, all from the layer's seed.
pub fn layer_init(
    spec: &LayerSpec,
    index: usize,
    input: &NonNegMatrix,
    prev_basis: Option<&NonNegMatrix>,
) -> Result<FactorPair> {
    let rank = spec.ranks[index];
    let eps = spec.cfg.eps;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.layer_seed(index));
    let a = match (index, prev_basis) {
        (0, _) => random_fill(&mut rng, input.rows(), rank, eps)?,
        (_, Some(prev)) => bounded_init_with(&mut rng, prev, rank, spec.bf, eps)?,
        (_, None) => {
            return Err(Error::Config(format!(
                "layer {} needs the previous basis",
                index + 1
            )))
        }
    };
    let x = random_fill(&mut rng, rank, input.cols(), eps)?;
    FactorPair::new(a, x)
}

/// Solves the full cascade on `y`.
pub fn solve_chem_nmf(y: &NonNegMatrix, spec: &LayerSpec) -> Result<MultiLayerResult> {
    spec.validate_for(y.rows(), y.cols())?;
    let mut layers: Vec<LayerOutcome> = Vec::with_capacity(spec.depth());
    let mut a_tot: Option<NonNegMatrix> = None;
    let mut input = y.clone();

    for (index, &rank) in spec.ranks.iter().enumerate() {
        let prev_basis = layers.last().map(|l| &l.factors.a);
        let init = layer_init(spec, index, &input, prev_basis)?;
        let cfg = spec.cfg.with_seed(spec.layer_seed(index));
        let (factors, trace) = solve_single_layer(&input, rank, &cfg, Some(init))?;
        a_tot = Some(match a_tot {
            None => factors.a.clone(),
            Some(acc) => acc.matmul(&factors.a)?,
        });
        input = factors.x.clone();
        layers.push(LayerOutcome { factors, trace });
    }

    Ok(MultiLayerResult {
        a_tot: a_tot.expect("at least one layer"),
        x_final: input,
        layers,
    })
}

/// `A_tot · X⁽ᴸ⁾`.
pub fn reconstruct(result: &MultiLayerResult) -> NonNegMatrix {
    result
        .a_tot
        .matmul(&result.x_final)
        .expect("cascade shapes are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::random_init;

    const EPS: EpsilonPolicy = EpsilonPolicy::DEFAULT;

    fn cfg(seed: u64) -> SolverConfig {
        SolverConfig::new(0.5, seed).unwrap().with_max_iter(200)
    }

    #[test]
    fn spec_validation() {
        assert!(LayerSpec::new(vec![], 0.5, cfg(0)).is_err());
        assert!(LayerSpec::new(vec![3, 4], 0.5, cfg(0)).is_err());
        assert!(LayerSpec::new(vec![3, 0], 0.5, cfg(0)).is_err());
        assert!(LayerSpec::new(vec![3, 2], 1.5, cfg(0)).is_err());
        assert!(LayerSpec::new(vec![3, 2], -0.1, cfg(0)).is_err());
        assert!(LayerSpec::new(vec![3, 3, 2], 1.0, cfg(0)).is_ok());
        let y = random_init(4, 10, 0, EPS).unwrap();
        assert!(matches!(
            solve_chem_nmf(&y, &LayerSpec::new(vec![5, 2], 0.5, cfg(0)).unwrap()),
            Err(Error::RankTooLarge { rank: 5, max: 4 })
        ));
    }

    #[test]
    fn bounded_init_endpoints() {
        let prev = random_init(6, 4, 3, EPS).unwrap();
        let rand_only = random_init(4, 2, 17, EPS).unwrap();
        assert_eq!(bounded_init(&prev, 2, 0.0, 17, EPS).unwrap(), rand_only);

        let full = bounded_init(&prev, 2, 1.0, 17, EPS).unwrap();
        let mean = prev.mean_all();
        assert!(full.as_slice().iter().all(|&v| v == mean));
        assert_eq!(full.shape(), (4, 2));

        assert!(bounded_init(&prev, 2, 1.01, 17, EPS).is_err());
    }

    #[test]
    fn bounded_init_midpoint_example() {
        // mean(A_prev) = 0.4; with a random entry 0.8 the blend is 0.6.
        let prev = NonNegMatrix::new(2, 2, vec![0.2, 0.6, 0.4, 0.4]).unwrap();
        let out = bounded_init(&prev, 3, 0.5, 5, EPS).unwrap();
        let rand = random_init(2, 3, 5, EPS).unwrap();
        for (o, r) in out.as_slice().iter().zip(rand.as_slice()) {
            assert!((o - (0.5 * r + 0.5 * 0.4)).abs() < 1e-15);
        }
        let blend = |r: f64| 0.5 * r + 0.5 * 0.4;
        assert!((blend(0.8) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn bounded_init_is_affine_in_bf() {
        let prev = random_init(5, 3, 9, EPS).unwrap();
        let at = |bf| bounded_init(&prev, 2, bf, 4, EPS).unwrap();
        let (lo, hi) = (at(0.0), at(1.0));
        for bf in [0.1, 0.25, 0.5, 0.9] {
            let mid = at(bf);
            for ((m, l), h) in mid.as_slice().iter().zip(lo.as_slice()).zip(hi.as_slice()) {
                assert!((m - ((1.0 - bf) * l + bf * h)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_layer_cascade_matches_single_solver() {
        let y = random_init(8, 12, 21, EPS).unwrap();
        let spec = LayerSpec::new(vec![3], 0.5, cfg(77)).unwrap();
        let result = solve_chem_nmf(&y, &spec).unwrap();
        let (pair, trace) = solve_single_layer(&y, 3, &cfg(77), None).unwrap();
        assert_eq!(result.layers[0].factors, pair);
        assert_eq!(result.layers[0].trace, trace);
        assert_eq!(result.a_tot, pair.a);
        assert_eq!(result.x_final, pair.x);
    }

    #[test]
    fn cascade_bookkeeping() {
        let y = random_init(10, 14, 2, EPS).unwrap();
        let spec = LayerSpec::new(vec![5, 3, 2], 0.5, cfg(8)).unwrap();
        let result = solve_chem_nmf(&y, &spec).unwrap();
        assert_eq!(result.depth(), 3);
        assert_eq!(result.a_tot.shape(), (10, 2));
        assert_eq!(result.x_final.shape(), (2, 14));
        assert_eq!(&result.x_final, &result.layers[2].factors.x);

        let chained = result.chained_basis();
        for (c, t) in chained.as_slice().iter().zip(result.a_tot.as_slice()) {
            assert!((c - t).abs() <= 1e-8 * t.abs().max(1e-300));
        }

        let rec = reconstruct(&result);
        assert_eq!(rec.shape(), y.shape());
        // A⁽¹⁾(A⁽²⁾(A⁽³⁾X⁽³⁾)) evaluated right to left.
        let mut inner = result.layers[2].factors.x.clone();
        for l in result.layers.iter().rev() {
            inner = l.factors.a.matmul(&inner).unwrap();
        }
        for (r, c) in rec.as_slice().iter().zip(inner.as_slice()) {
            assert!((r - c).abs() <= 1e-8 * r.abs().max(1e-12));
        }
    }

    #[test]
    fn each_layer_consumes_previous_activations() {
        let y = random_init(9, 11, 13, EPS).unwrap();
        let spec = LayerSpec::new(vec![4, 3, 2], 0.3, cfg(5)).unwrap();
        let result = solve_chem_nmf(&y, &spec).unwrap();
        for index in 1..spec.depth() {
            let input = &result.layers[index - 1].factors.x;
            let init = layer_init(&spec, index, input, Some(&result.layers[index - 1].factors.a))
                .unwrap();
            let layer_cfg = spec.cfg.with_seed(spec.layer_seed(index));
            let (pair, trace) =
                solve_single_layer(input, spec.ranks[index], &layer_cfg, Some(init)).unwrap();
            assert_eq!(pair, result.layers[index].factors);
            assert_eq!(trace, result.layers[index].trace);
        }
    }

    #[test]
    fn layer_traces_are_monotone() {
        let y = random_init(12, 15, 31, EPS).unwrap();
        for bf in [0.0, 0.5, 1.0] {
            let spec = LayerSpec::new(vec![6, 4, 2], bf, cfg(3)).unwrap();
            let result = solve_chem_nmf(&y, &spec).unwrap();
            for l in &result.layers {
                assert!(l.trace.max_increase() <= 1e-9);
            }
        }
    }
}
