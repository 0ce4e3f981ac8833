//! Squared-Euclidean NMF with the classic multiplicative updates
//! (`X ← X ⊙ AᵀY ⊘ AᵀAX`, `A ← A ⊙ YXᵀ ⊘ AXXᵀ`). Used as the "regular NMF"
//! baseline; initialisation, normalisation and stopping mirror
//! [`crate::alpha::solve_single_layer`].

use ndarray::{Array2, Zip};

use crate::alpha::{normalize_pair, random_pair, FactorPair, SolveTrace, SolverConfig};
use crate::error::{Error, Result};
use crate::matrix::{EpsilonPolicy, NonNegMatrix};

/// `½ ‖Y − Ŷ‖²_F`.
pub fn euclidean_cost(y: &NonNegMatrix, yhat: &NonNegMatrix) -> Result<f64> {
    y.check_same_shape("euclidean_cost", yhat)?;
    Ok(cost_raw(y.as_array(), yhat.as_array()))
}

fn cost_raw(y: &Array2<f64>, yhat: &Array2<f64>) -> f64 {
    let mut total = 0.0;
    Zip::from(y).and(yhat).for_each(|a, b| total += (a - b) * (a - b));
    0.5 * total
}

fn mu_step(target: &mut Array2<f64>, num: &Array2<f64>, den: &Array2<f64>, eps: EpsilonPolicy) {
    Zip::from(target).and(num).and(den).for_each(|v, &n, &d| {
        *v = eps.apply(*v * n / eps.apply(d));
    });
}

/// Lee–Seung multiplicative updates. `cfg.alpha` is ignored.
pub fn solve_euclidean(
    y: &NonNegMatrix,
    rank: usize,
    cfg: &SolverConfig,
    init: Option<FactorPair>,
) -> Result<(FactorPair, SolveTrace)> {
    if cfg.max_iter == 0 || cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(Error::Config("max_iter and tol must be positive".into()));
    }
    let (rows, cols) = y.shape();
    let max_rank = rows.min(cols);
    if rank == 0 || rank > max_rank {
        return Err(Error::RankTooLarge { rank, max: max_rank });
    }
    let init = match init {
        Some(p) if p.a.shape() == (rows, rank) && p.x.shape() == (rank, cols) => p,
        Some(p) => {
            return Err(Error::ShapeMismatch {
                op: "solve_euclidean init",
                left: p.a.shape(),
                right: p.x.shape(),
            })
        }
        None => random_pair(rows, rank, cols, cfg.seed, cfg.eps)?,
    };
    let eps = cfg.eps;
    let yd = y.as_array();
    let mut pair = init;
    let initial = cost_raw(yd, pair.reconstruct().as_array());
    let scale = initial.max(eps.floor());
    let mut prev = initial;
    let mut divergences = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_iter {
        let mut a = pair.a.into_array();
        let mut x = pair.x.into_array();
        let num_x = a.t().dot(yd);
        let den_x = a.t().dot(&a).dot(&x);
        mu_step(&mut x, &num_x, &den_x, eps);
        let num_a = yd.dot(&x.t());
        let den_a = a.dot(&x.dot(&x.t()));
        mu_step(&mut a, &num_a, &den_a, eps);
        pair = normalize_pair(
            &FactorPair {
                a: NonNegMatrix::from_array_unchecked(a),
                x: NonNegMatrix::from_array_unchecked(x),
            },
            eps,
        );
        let d = cost_raw(yd, pair.reconstruct().as_array());
        divergences.push(d);
        if (prev - d).abs() / scale < cfg.tol || d <= eps.floor() {
            converged = true;
            break;
        }
        prev = d;
    }

    Ok((
        pair,
        SolveTrace {
            initial,
            iterations_run: divergences.len(),
            divergences,
            converged,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::random_init;

    #[test]
    fn cost_examples() {
        let y = NonNegMatrix::new(1, 2, vec![1.0, 3.0]).unwrap();
        let h = NonNegMatrix::new(1, 2, vec![2.0, 1.0]).unwrap();
        assert_eq!(euclidean_cost(&y, &h).unwrap(), 2.5);
        assert_eq!(euclidean_cost(&y, &y).unwrap(), 0.0);
    }

    #[test]
    fn euclidean_solver_descends() {
        let y = random_init(10, 12, 4, EpsilonPolicy::DEFAULT).unwrap();
        let cfg = SolverConfig::new(0.5, 1).unwrap().with_max_iter(300);
        let (pair, trace) = solve_euclidean(&y, 3, &cfg, None).unwrap();
        assert!(trace.max_increase() <= 1e-9);
        assert!(trace.final_divergence() < trace.initial);
        assert_eq!(pair.a.shape(), (10, 3));
    }
}
