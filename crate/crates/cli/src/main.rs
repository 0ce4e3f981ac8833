use std::path::PathBuf;
use std::process::ExitCode;

use chemnmf::cluster::{ClusterReport, LabelVector};
use chemnmf::diagnostics::{initial_divergence, layer_barriers};
use chemnmf::signal::{load_matrix_csv, load_wav_mono, resample_linear, stft_magnitude, StftConfig};
use chemnmf::{solve_chem_nmf, BarrierParams, LayerSpec, SolverConfig};
use chemnmf_cli::output::{emit_barrier_report, emit_loss_curves, read_labels, write_matrix_csv};
use chemnmf_cli::{run_experiment, CliError, CliResult, ExperimentConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chemnmf", version, about = "Multi-layer alpha-NMF experiments")]
struct Cli {
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full sweep described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Factorize one CSV matrix and write factors, loss curve and barriers.
    Factorize {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated layer ranks, largest first.
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        bf: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted cluster labels against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Magnitude spectrogram of a 16-bit PCM WAV file.
    Stft {
        #[arg(long)]
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4000)]
        sample_rate: u32,
        #[arg(long, default_value_t = 512)]
        n_fft: usize,
        #[arg(long, default_value_t = 128)]
        hop: usize,
    },
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = cfg.output_dir.join("results.csv");
            let rows = run_experiment(cfg, cli.workers)?;
            println!("{} rows written to {}", rows.len(), out.display());
        }
        Command::Factorize {
            input,
            ranks,
            alpha,
            bf,
            seed,
            max_iter,
            tol,
            beta,
            out,
        } => {
            let y = load_matrix_csv(&input)?;
            let cfg = SolverConfig::new(alpha, seed)?.with_max_iter(max_iter).with_tol(tol);
            let spec = LayerSpec::new(ranks, bf, cfg)?;
            let result = solve_chem_nmf(&y, &spec)?;
            let params = BarrierParams { beta, z: None };
            let report = layer_barriers(&result, &params, initial_divergence(&result))?;
            std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
            write_matrix_csv(&result.a_tot, &out.join("A_tot.csv"))?;
            write_matrix_csv(&result.x_final, &out.join("X.csv"))?;
            emit_loss_curves(&result, &out.join("loss.csv"))?;
            emit_barrier_report(&report, &out.join("barriers.json"))?;
            let finals = result.layer_divergences();
            println!(
                "{}",
                serde_json::json!({ "layers": finals.len(), "layer_divergences": finals, "out": out })
            );
        }
        Command::Eval { pred, truth } => {
            let p = read_labels(&pred)?;
            let t = read_labels(&truth)?;
            let report = ClusterReport::score(LabelVector::from_labels(p), &LabelVector::from_labels(t))?;
            println!(
                "{}",
                serde_json::json!({ "acc": report.acc, "nmi": report.nmi, "mapping": report.mapping })
            );
        }
        Command::Stft {
            wav,
            out,
            sample_rate,
            n_fft,
            hop,
        } => {
            let cfg = StftConfig {
                sample_rate,
                n_fft,
                hop,
            };
            cfg.validate()?;
            let (samples, rate) = load_wav_mono(&wav)?;
            let spec = stft_magnitude(&resample_linear(&samples, rate, sample_rate), &cfg)?;
            write_matrix_csv(&spec, &out)?;
            println!("{}", serde_json::json!({ "rows": spec.rows(), "frames": spec.cols() }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
