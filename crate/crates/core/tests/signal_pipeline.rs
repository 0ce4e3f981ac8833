use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use chemnmf::error::Error;
use chemnmf::signal::{
    assemble_dataset, gaussian_noise, hann_window, load_manifest, stft_magnitude, Dataset,
    SampleKind, Source, StftConfig,
};
use chemnmf::NonNegMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Direct O(n²) DFT magnitudes of one windowed, reflect-padded frame.
fn naive_frame(samples: &[f64], centre: usize, n_fft: usize) -> Vec<f64> {
    let n = samples.len() as isize;
    let w = hann_window(n_fft);
    let frame: Vec<f64> = (0..n_fft)
        .map(|k| {
            let mut i = centre as isize - (n_fft / 2) as isize + k as isize;
            while i < 0 || i >= n {
                i = if i < 0 { -i } else { 2 * (n - 1) - i };
            }
            samples[i as usize] * w[k]
        })
        .collect();
    (0..=n_fft / 2)
        .map(|b| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &x) in frame.iter().enumerate() {
                let ang = -2.0 * PI * (b * t) as f64 / n_fft as f64;
                re += x * ang.cos();
                im += x * ang.sin();
            }
            re.hypot(im)
        })
        .collect()
}

fn windowed_energy(samples: &[f64], centre: usize, n_fft: usize) -> f64 {
    let n = samples.len() as isize;
    let w = hann_window(n_fft);
    (0..n_fft)
        .map(|k| {
            let mut i = centre as isize - (n_fft / 2) as isize + k as isize;
            while i < 0 || i >= n {
                i = if i < 0 { -i } else { 2 * (n - 1) - i };
            }
            (samples[i as usize] * w[k]).powi(2)
        })
        .sum()
}

#[test]
fn stft_matches_naive_dft() {
    let cfg = StftConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let s: Vec<f64> = (0..2048).map(|_| rng.random_range(-1.0..1.0)).collect();
        let spec = stft_magnitude(&s, &cfg).unwrap();
        assert_eq!(spec.shape(), (257, 2048 / 128 + 1));
        for f in [0, 1, 7, spec.cols() - 1] {
            let oracle = naive_frame(&s, f * cfg.hop, cfg.n_fft);
            let scale = oracle.iter().fold(0.0f64, |m, v| m.max(*v));
            for (b, o) in oracle.iter().enumerate() {
                let got = spec.get(b, f);
                assert!((got - o).abs() <= 1e-8 * scale, "frame {f} bin {b}: {got} vs {o}");
            }
        }
    }
}

#[test]
fn parseval_per_frame() {
    let cfg = StftConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let s: Vec<f64> = (0..3000).map(|_| rng.random_range(-1.0..1.0)).collect();
    let spec = stft_magnitude(&s, &cfg).unwrap();
    let last = cfg.bins() - 1;
    for f in 0..spec.cols() {
        let col = spec.column(f);
        let one_sided: f64 = col.iter().map(|v| v * v).sum();
        let full = col[0].powi(2)
            + 2.0 * col[1..last].iter().map(|v| v * v).sum::<f64>()
            + col[last].powi(2);
        let energy = windowed_energy(&s, f * cfg.hop, cfg.n_fft) * cfg.n_fft as f64;
        assert!(one_sided <= energy * (1.0 + 1e-12));
        assert!((full - energy).abs() <= 1e-9 * energy);
    }
}

#[test]
fn constant_signal_stays_in_main_lobe() {
    // A periodic Hann window has exactly three non-zero DFT coefficients
    // (bins 0 and ±1, magnitudes N/2 and N/4), so bin 1 carries half the DC
    // magnitude and every higher bin is numerically zero.
    let cfg = StftConfig::default();
    let spec = stft_magnitude(&vec![0.8; 4096], &cfg).unwrap();
    for f in 0..spec.cols() {
        let dc = spec.get(0, f);
        assert!((dc - 0.8 * cfg.n_fft as f64 / 2.0).abs() < 1e-9 * dc);
        assert!((spec.get(1, f) - dc / 2.0).abs() < 1e-9 * dc);
        for b in 2..cfg.bins() {
            assert!(spec.get(b, f) < 1e-9 * dc, "frame {f} bin {b}");
        }
    }
}

#[test]
fn noise_statistics_match_target() {
    let m = NonNegMatrix::new(
        100,
        200,
        (0..20_000).map(|i| 0.5 + 0.5 * ((i as f64) * 0.01).sin()).collect(),
    )
    .unwrap();
    for snr in [5.0, 10.0, 20.0, 30.0] {
        let (noise, sigma) = gaussian_noise(&m, snr, 77).unwrap();
        let n = noise.len() as f64;
        let mean = noise.sum() / n;
        let var = noise.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 3.0 * sigma / n.sqrt(), "mean {mean}");
        assert!((var / sigma.powi(2) - 1.0).abs() < 0.05, "variance {var}");
        let power = m.as_slice().iter().map(|v| v * v).sum::<f64>() / n;
        let noise_power = noise.iter().map(|v| v * v).sum::<f64>() / n;
        let measured = 10.0 * (power / noise_power).log10();
        assert!((measured - snr).abs() < 0.5, "measured {measured} dB");
    }
}

fn write_pgm(dir: &Path, name: &str, w: usize, h: usize, values: &[u8]) -> Source {
    let path = dir.join(name);
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend_from_slice(values);
    fs::write(&path, bytes).unwrap();
    Source {
        path,
        label: name.split('_').next().unwrap().to_string(),
    }
}

#[test]
fn images_vectorise_into_columns() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_pgm(dir.path(), "cat_1.pgm", 2, 2, &[0, 51, 102, 153]);
    let b = write_pgm(dir.path(), "dog_1.pgm", 2, 2, &[255, 0, 0, 0]);
    let ds = assemble_dataset(&[a, b], SampleKind::Image, &StftConfig::default(), None).unwrap();
    assert_eq!(ds.y.shape(), (4, 2));
    assert_eq!(ds.y.column(0), vec![0.0, 0.2, 0.4, 0.6]);
    assert_eq!(ds.y.column(1), vec![1.0, 0.0, 0.0, 0.0]);
    assert_eq!(ds.truth.labels(), &[0, 1]);
    assert_eq!(ds.classes, vec!["cat", "dog"]);
    assert_eq!(ds.len(), 2);
}

#[test]
fn assembly_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_pgm(dir.path(), "a_1.pgm", 2, 2, &[0, 1, 2, 3]);
    let b = write_pgm(dir.path(), "a_2.pgm", 3, 1, &[0, 1, 2]);
    let cfg = StftConfig::default();
    assert!(matches!(
        assemble_dataset(&[a.clone(), b], SampleKind::Image, &cfg, None),
        Err(Error::FeatureMismatch { expected: 4, found: 3, .. })
    ));
    assert!(matches!(
        assemble_dataset(std::slice::from_ref(&a), SampleKind::Image, &cfg, Some(&["z".to_string()])),
        Err(Error::UnknownLabel(_))
    ));
    assert!(matches!(
        assemble_dataset(&[], SampleKind::Image, &cfg, None),
        Err(Error::EmptyInput(_))
    ));
    let broken = Source {
        path: dir.path().join("missing.pgm"),
        label: "a".into(),
    };
    assert!(matches!(
        assemble_dataset(&[a, broken], SampleKind::Image, &cfg, None),
        Err(Error::Io { .. })
    ));
}

fn write_tone(path: &Path, rate: u32, seconds: f64, hz: f64) {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    let n = (rate as f64 * seconds) as usize;
    for i in 0..n {
        let v = (2.0 * PI * hz * i as f64 / rate as f64).sin() * 0.5;
        w.write_sample((v * 32767.0) as i16).unwrap();
    }
    w.finalize().unwrap();
}

#[test]
fn audio_manifest_runs_full_chain() {
    let dir = tempfile::tempdir().unwrap();
    write_tone(&dir.path().join("low.wav"), 22_050, 1.0, 200.0);
    write_tone(&dir.path().join("high.wav"), 22_050, 1.0, 1500.0);
    let manifest = dir.path().join("manifest.json");
    fs::write(
        &manifest,
        r#"{"kind": "audio",
            "samples": [{"path": "low.wav", "label": 0}, {"path": "high.wav", "label": 1}],
            "stft": {"sample_rate": 4000, "n_fft": 512, "hop": 128}}"#,
    )
    .unwrap();
    let m = load_manifest(&manifest).unwrap();
    let ds = Dataset::from_manifest(&m).unwrap();
    let frames = 4000 / 128 + 1;
    assert_eq!(ds.y.shape(), (257 * frames, 2));
    assert_eq!(ds.truth.labels(), &[0, 1]);

    // Loudest bin of the middle frame, recovered from the row-major layout.
    let peak_bin = |col: usize| {
        let c = ds.y.column(col);
        (0..257)
            .max_by(|&a, &b| c[a * frames + frames / 2].total_cmp(&c[b * frames + frames / 2]))
            .unwrap()
    };
    assert_eq!(peak_bin(0), (200.0f64 / (4000.0 / 512.0)).round() as usize);
    assert_eq!(peak_bin(1), (1500.0f64 / (4000.0 / 512.0)).round() as usize);
}

#[test]
fn manifest_errors_are_typed() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"kind": "video", "samples": []}"#).unwrap();
    assert!(matches!(load_manifest(&bad), Err(Error::Config(_))));
    assert!(matches!(load_manifest(dir.path().join("none.json")), Err(Error::Io { .. })));
}
