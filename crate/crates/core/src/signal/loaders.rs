use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::NonNegMatrix;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Headerless comma-separated matrix of non-negative numbers.
pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<NonNegMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut cols = None;
    let mut rows = 0;
    let mut data = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => io_err(path, source),
            other => Error::Csv {
                path: path.to_path_buf(),
                message: format!("{other:?}"),
            },
        })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Ragged {
                path: path.to_path_buf(),
                line,
                expected,
                found: record.len(),
            });
        }
        for (field, token) in record.iter().enumerate() {
            let value: f64 = match token.parse() {
                Ok(v) if f64::is_finite(v) => v,
                _ => {
                    return Err(Error::NonNumeric {
                        path: path.to_path_buf(),
                        line,
                        field: field + 1,
                        token: token.to_string(),
                    })
                }
            };
            if value < 0.0 {
                return Err(Error::NegativeEntry {
                    path: path.to_path_buf(),
                    line,
                    field: field + 1,
                    value,
                });
            }
            data.push(value);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::EmptyInput(path.display().to_string()))?;
    NonNegMatrix::new(rows, cols, data)
}

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    /// Offset of the first payload byte.
    offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(Error::PgmHeader("magic number must be P2 or P5".into())),
    };
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for (i, slot) in fields.iter_mut().enumerate() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            let name = ["width", "height", "maxval"][i];
            return Err(Error::PgmHeader(format!("missing {name}")));
        }
        *slot = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::PgmHeader("header value out of range".into()))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::PgmHeader("no whitespace after maxval".into()));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::PgmHeader(format!("empty image {width}x{height}")));
    }
    if !(1..=65535).contains(&maxval) {
        return Err(Error::PgmHeader(format!("maxval {maxval} outside 1..=65535")));
    }
    Ok(Header {
        binary,
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        offset: pos + 1,
    })
}

/// Decodes an in-memory P2 or P5 image into `[0, 1]` grey levels.
pub fn parse_pgm(bytes: &[u8]) -> Result<NonNegMatrix> {
    let h = parse_header(bytes)?;
    let expected = h.width * h.height;
    let payload = &bytes[h.offset.min(bytes.len())..];
    let raw: Vec<u32> = if h.binary {
        let wide = h.maxval > 255;
        let step = if wide { 2 } else { 1 };
        let found = payload.len() / step;
        if found < expected {
            return Err(Error::PgmTruncated { expected, found });
        }
        payload
            .chunks_exact(step)
            .take(expected)
            .map(|c| if wide { u32::from(u16::from_be_bytes([c[0], c[1]])) } else { u32::from(c[0]) })
            .collect()
    } else {
        let text = std::str::from_utf8(payload)
            .map_err(|_| Error::PgmHeader("ASCII payload is not valid text".into()))?;
        let mut values = Vec::with_capacity(expected);
        for token in text.split_ascii_whitespace().take(expected) {
            let v: u32 = token
                .parse()
                .map_err(|_| Error::PgmHeader(format!("bad sample {token:?}")))?;
            values.push(v);
        }
        if values.len() < expected {
            return Err(Error::PgmTruncated {
                expected,
                found: values.len(),
            });
        }
        values
    };
    if let Some(v) = raw.iter().find(|&&v| v > h.maxval) {
        return Err(Error::PgmHeader(format!("sample {v} exceeds maxval {}", h.maxval)));
    }
    let scale = f64::from(h.maxval);
    NonNegMatrix::new(h.height, h.width, raw.into_iter().map(|v| f64::from(v) / scale).collect())
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<NonNegMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    parse_pgm(&bytes)
}

/// 16-bit PCM samples scaled by 1/32768, channels averaged.
pub fn load_wav_mono(path: impl AsRef<Path>) -> Result<(Vec<f64>, u32)> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(source) => io_err(path, source),
        other => Error::Wav(other),
    })?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedAudio(format!(
            "{}: {:?} {}-bit, only 16-bit PCM is supported",
            path.display(),
            spec.sample_format,
            spec.bits_per_sample
        )));
    }
    let channels = usize::from(spec.channels.max(1));
    let raw: Vec<i16> = reader.samples::<i16>().collect::<std::result::Result<_, _>>()?;
    let samples = raw
        .chunks(channels)
        .map(|frame| frame.iter().map(|&s| f64::from(s)).sum::<f64>() / (channels as f64 * 32768.0))
        .collect();
    Ok((samples, spec.sample_rate))
}
