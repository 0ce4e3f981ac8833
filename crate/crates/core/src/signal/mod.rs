//! Data ingestion and preprocessing: file loaders, resampling, STFT
//! spectrograms, SNR-calibrated noise and dataset assembly.

mod dataset;
mod loaders;
mod noise;
mod stft;

pub use dataset::{assemble_dataset, load_manifest, Dataset, Manifest, SampleKind, Source};
pub use loaders::{load_matrix_csv, load_pgm, load_wav_mono, parse_pgm};
pub use noise::{add_gaussian_noise_snr, gaussian_noise, noise_sigma};
pub use stft::{hann_window, resample_linear, stft_magnitude, StftConfig};
