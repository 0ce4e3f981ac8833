//! Sweep execution.

use std::collections::HashMap;
use std::time::Instant;

use chemnmf::cluster::{cluster_and_score, KMeansConfig};
use chemnmf::diagnostics::{trace_barriers, LayerBarrierReport};
use chemnmf::euclid::solve_euclidean;
use chemnmf::signal::{add_gaussian_noise_snr, load_manifest, Dataset};
use chemnmf::{solve_chem_nmf, LayerSpec, NonNegMatrix, SolveTrace, SolverConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Method, NoiseLevel};
use crate::error::{CliError, CliResult};
use crate::output::{emit_barrier_report, emit_trace_curves, ensure_dir, write_results};

/// One row of `results.csv`. `bf` and `alpha` are empty for the Euclidean baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub bf: Option<f64>,
    pub alpha: Option<f64>,
    pub noise_db: String,
    pub seed: u64,
    pub acc: f64,
    pub nmi: f64,
    pub final_divergence: f64,
    pub iterations: usize,
    pub ms: u64,
}

impl ResultRow {
    pub const HEADER: [&'static str; 10] = [
        "method",
        "bf",
        "alpha",
        "noise_db",
        "seed",
        "acc",
        "nmi",
        "final_divergence",
        "iterations",
        "ms",
    ];
}

/// One point of the sweep after the per-method collapsing rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub method: Method,
    pub bf: Option<f64>,
    pub alpha: Option<f64>,
    pub noise: NoiseLevel,
    pub seed: u64,
}

/// Output of a single cell, before anything is written.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub cell: Cell,
    pub run_id: String,
    pub row: ResultRow,
    pub traces: Vec<SolveTrace>,
    pub barriers: LayerBarrierReport,
}

/// Dataset and configuration ready to execute cells.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub dataset: Dataset,
    pub ranks: Vec<usize>,
    noisy: HashMap<(String, u64), NonNegMatrix>,
}

fn collapse(values: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

impl Experiment {
    pub fn prepare(cfg: ExperimentConfig) -> CliResult<Self> {
        cfg.validate()?;
        let manifest = load_manifest(&cfg.dataset)?;
        let dataset = Dataset::from_manifest(&manifest)?;
        Self::with_dataset(cfg, dataset)
    }

    pub fn with_dataset(cfg: ExperimentConfig, dataset: Dataset) -> CliResult<Self> {
        cfg.validate()?;
        let k = dataset.classes.len();
        let ranks = cfg.ranks_for(k);
        let max = dataset.y.rows().min(dataset.y.cols());
        if ranks[0] > max {
            return Err(CliError::config(format!(
                "rank {} exceeds min(features, samples) = {max}",
                ranks[0]
            )));
        }
        let mut noisy = HashMap::new();
        for level in &cfg.noise {
            if let NoiseLevel::Db(db) = level {
                for seed in cfg.seeds.seeds() {
                    let m = add_gaussian_noise_snr(&dataset.y, *db, seed)?;
                    noisy.insert((level.to_string(), seed), m);
                }
            }
        }
        Ok(Self {
            cfg,
            dataset,
            ranks,
            noisy,
        })
    }

    /// Sweep cells in output order: method, bf, alpha, noise, seed.
    pub fn cells(&self) -> Vec<Cell> {
        let cfg = &self.cfg;
        let mut cells = Vec::new();
        let mut seen_methods = Vec::new();
        for &method in &cfg.methods {
            if seen_methods.contains(&method) {
                continue;
            }
            seen_methods.push(method);
            let (bfs, alphas): (Vec<Option<f64>>, Vec<Option<f64>>) = match method {
                Method::Regular => (vec![None], vec![None]),
                Method::Alpha => (vec![Some(0.0)], collapse(&cfg.alpha).into_iter().map(Some).collect()),
                Method::Chem => (
                    collapse(&cfg.bf).into_iter().map(Some).collect(),
                    collapse(&cfg.alpha).into_iter().map(Some).collect(),
                ),
            };
            for &bf in &bfs {
                for &alpha in &alphas {
                    for &noise in &cfg.noise {
                        for seed in cfg.seeds.seeds() {
                            cells.push(Cell {
                                method,
                                bf,
                                alpha,
                                noise,
                                seed,
                            });
                        }
                    }
                }
            }
        }
        cells
    }

    fn input(&self, cell: &Cell) -> &NonNegMatrix {
        match cell.noise {
            NoiseLevel::Clean => &self.dataset.y,
            level => &self.noisy[&(level.to_string(), cell.seed)],
        }
    }

    pub fn run_id(&self, cell: &Cell) -> String {
        let key = serde_json::json!({
            "method": cell.method,
            "bf": cell.bf,
            "alpha": cell.alpha,
            "noise": cell.noise,
            "seed": cell.seed,
            "ranks": self.ranks,
            "solver": self.cfg.solver,
            "kmeans": self.cfg.kmeans,
        });
        let digest = Sha256::digest(key.to_string().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn run_cell(&self, cell: &Cell) -> CliResult<CellOutcome> {
        let started = Instant::now();
        let y = self.input(cell);
        let solver = self.cfg.solver;
        // The Euclidean solver ignores alpha.
        let alpha = cell.alpha.unwrap_or(0.5);
        let solver_cfg = SolverConfig::new(alpha, cell.seed)?
            .with_max_iter(solver.max_iter)
            .with_tol(solver.tol);
        let last_rank = *self.ranks.last().expect("ranks validated non-empty");

        let (activations, traces) = match cell.method {
            Method::Regular => {
                let (pair, trace) = solve_euclidean(y, last_rank, &solver_cfg, None)?;
                (pair.x, vec![trace])
            }
            Method::Alpha | Method::Chem => {
                let ranks = if cell.method == Method::Alpha {
                    vec![last_rank]
                } else {
                    self.ranks.clone()
                };
                let spec = LayerSpec::new(ranks, cell.bf.unwrap_or(0.0), solver_cfg)?;
                let result = solve_chem_nmf(y, &spec)?;
                let traces = result.layers.iter().map(|l| l.trace.clone()).collect();
                (result.x_final, traces)
            }
        };

        let final_divergence = traces.last().map_or(f64::NAN, SolveTrace::final_divergence);
        if traces.iter().any(|t| t.divergences.iter().any(|d| !d.is_finite())) {
            return Err(CliError::numeric(format!(
                "non-finite divergence in {} seed {}",
                cell.method, cell.seed
            )));
        }
        let trace_refs: Vec<&SolveTrace> = traces.iter().collect();
        let barriers = trace_barriers(&trace_refs, &self.cfg.barrier, traces[0].initial)?;

        let k = self.dataset.classes.len();
        let km = KMeansConfig::new(k, cell.seed)
            .with_restarts(self.cfg.kmeans.restarts)
            .with_max_iter(self.cfg.kmeans.max_iter);
        let report = cluster_and_score(&activations, &self.dataset.truth, &km)?;

        let ms = if self.cfg.record_timing {
            started.elapsed().as_millis() as u64
        } else {
            0
        };
        let row = ResultRow {
            method: cell.method,
            bf: cell.bf,
            alpha: cell.alpha,
            noise_db: cell.noise.to_string(),
            seed: cell.seed,
            acc: report.acc,
            nmi: report.nmi,
            final_divergence,
            iterations: traces.iter().map(|t| t.iterations_run).sum(),
            ms,
        };
        Ok(CellOutcome {
            cell: *cell,
            run_id: self.run_id(cell),
            row,
            traces,
            barriers,
        })
    }

    /// Runs one cell and writes its `loss.csv` and `barriers.json`.
    pub fn run_and_emit(&self, cell: &Cell) -> CliResult<CellOutcome> {
        let outcome = self.run_cell(cell)?;
        let dir = self.cfg.output_dir.join(&outcome.run_id);
        ensure_dir(&dir)?;
        let refs: Vec<&SolveTrace> = outcome.traces.iter().collect();
        emit_trace_curves(&refs, &dir.join("loss.csv"))?;
        emit_barrier_report(&outcome.barriers, &dir.join("barriers.json"))?;
        log::info!(
            "{} bf={:?} alpha={:?} noise={} seed={} acc={:.4} nmi={:.4} -> {}",
            cell.method,
            cell.bf,
            cell.alpha,
            cell.noise,
            cell.seed,
            outcome.row.acc,
            outcome.row.nmi,
            outcome.run_id
        );
        Ok(outcome)
    }

    /// Executes every cell on `workers` threads and writes `results.csv`.
    pub fn run(&self, workers: usize) -> CliResult<Vec<ResultRow>> {
        ensure_dir(&self.cfg.output_dir)?;
        let cells = self.cells();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| CliError::config(format!("worker pool: {e}")))?;
        let outcomes: Vec<CliResult<CellOutcome>> =
            pool.install(|| cells.par_iter().map(|c| self.run_and_emit(c)).collect());
        let rows = outcomes
            .into_iter()
            .map(|o| o.map(|o| o.row))
            .collect::<CliResult<Vec<_>>>()?;
        write_results(&rows, &self.cfg.output_dir.join("results.csv"))?;
        Ok(rows)
    }
}

/// Loads the dataset, runs the full sweep and writes all artifacts.
pub fn run_experiment(cfg: ExperimentConfig, workers: usize) -> CliResult<Vec<ResultRow>> {
    Experiment::prepare(cfg)?.run(workers)
}
