//! File formats shared by the tools: the binary tensor container, the signal
//! CSV table, and the `key=value` run configuration.
//!
//! # Tensor container
//!
//! Little-endian throughout:
//!
//! ```text
//! offset  size        field
//! 0       4           magic "HOT1"
//! 4       4           format version (u32, currently 1)
//! 8       1           dtype code (u8, 1 = IEEE-754 binary32 LE)
//! 9      1           rank (u8, 1..=5)
//! 10      2           reserved, must be zero
//! 12      8 * rank    dims (u64 each, all nonzero)
//! ...     4 * prod    payload, row-major f32
//! ```
//!
//! Writing the same dims and payload twice produces byte-identical files, and
//! a write → read → write round trip preserves every payload bit (including
//! NaN payloads and signed zeros).

use std::fs;
use std::io;
use std::path::Path;

/// Leading magic of every tensor container file.
pub const TENSOR_MAGIC: [u8; 4] = *b"HOT1";
/// Current container format version.
pub const TENSOR_VERSION: u32 = 1;
/// Dtype code for IEEE-754 binary32 little-endian payloads.
pub const DTYPE_F32: u8 = 1;
/// Largest supported tensor rank.
pub const MAX_RANK: usize = 5;

const HEADER_LEN: usize = 12;

#[derive(Debug, thiserror::Error)]
pub enum TensorIoError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {found:?}, expected {TENSOR_MAGIC:?}")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported container version {found}, expected {TENSOR_VERSION}")]
    BadVersion { found: u32 },
    #[error("unsupported dtype code {found}, only {DTYPE_F32} (f32) is defined")]
    UnsupportedDtype { found: u8 },
    #[error("rank {found} outside 1..={MAX_RANK}")]
    BadRank { found: usize },
    #[error("reserved header bytes must be zero, found {found:?}")]
    ReservedNonZero { found: [u8; 2] },
    #[error("dim {index} is zero")]
    ZeroDim { index: usize },
    #[error("file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{extra} trailing bytes after the payload")]
    TrailingBytes { extra: usize },
    #[error("payload length {found} does not match dims product {expected}")]
    ElementCountMismatch { expected: usize, found: usize },
}

/// Encodes dims and a row-major f32 payload into container bytes.
pub fn encode_tensor(dims: &[usize], data: &[f32]) -> Result<Vec<u8>, TensorIoError> {
    if dims.is_empty() || dims.len() > MAX_RANK {
        return Err(TensorIoError::BadRank { found: dims.len() });
    }
    let mut elements = 1usize;
    for (index, &d) in dims.iter().enumerate() {
        if d == 0 {
            return Err(TensorIoError::ZeroDim { index });
        }
        elements = elements
            .checked_mul(d)
            .ok_or(TensorIoError::ElementCountMismatch {
                expected: usize::MAX,
                found: data.len(),
            })?;
    }
    if data.len() != elements {
        return Err(TensorIoError::ElementCountMismatch {
            expected: elements,
            found: data.len(),
        });
    }

    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * dims.len() + 4 * data.len());
    bytes.extend_from_slice(&TENSOR_MAGIC);
    bytes.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    bytes.push(DTYPE_F32);
    bytes.push(dims.len() as u8);
    bytes.extend_from_slice(&[0u8, 0u8]);
    for &d in dims {
        bytes.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &value in data {
        bytes.extend_from_slice(&value.to_le_bytes());
    }
    Ok(bytes)
}

/// Decodes container bytes into `(dims, payload)`.
pub fn decode_tensor(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f32>), TensorIoError> {
    if bytes.len() < HEADER_LEN {
        return Err(TensorIoError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let mut magic = [0u8; 4];
    magic.copy_from_slice(&bytes[0..4]);
    if magic != TENSOR_MAGIC {
        return Err(TensorIoError::BadMagic { found: magic });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != TENSOR_VERSION {
        return Err(TensorIoError::BadVersion { found: version });
    }
    let dtype = bytes[8];
    if dtype != DTYPE_F32 {
        return Err(TensorIoError::UnsupportedDtype { found: dtype });
    }
    let rank = bytes[9] as usize;
    if rank == 0 || rank > MAX_RANK {
        return Err(TensorIoError::BadRank { found: rank });
    }
    if bytes[10] != 0 || bytes[11] != 0 {
        return Err(TensorIoError::ReservedNonZero {
            found: [bytes[10], bytes[11]],
        });
    }

    let dims_end = HEADER_LEN + 8 * rank;
    if bytes.len() < dims_end {
        return Err(TensorIoError::Truncated {
            expected: dims_end,
            found: bytes.len(),
        });
    }
    let mut dims = Vec::with_capacity(rank);
    let mut elements = 1usize;
    for i in 0..rank {
        let start = HEADER_LEN + 8 * i;
        let d = u64::from_le_bytes(bytes[start..start + 8].try_into().expect("8 bytes"));
        if d == 0 {
            return Err(TensorIoError::ZeroDim { index: i });
        }
        let d = usize::try_from(d).map_err(|_| TensorIoError::ZeroDim { index: i })?;
        elements = elements.checked_mul(d).ok_or(TensorIoError::Truncated {
            expected: usize::MAX,
            found: bytes.len(),
        })?;
        dims.push(d);
    }

    let expected = dims_end + 4 * elements;
    if bytes.len() < expected {
        return Err(TensorIoError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(TensorIoError::TrailingBytes {
            extra: bytes.len() - expected,
        });
    }
    let mut data = Vec::with_capacity(elements);
    for chunk in bytes[dims_end..].chunks_exact(4) {
        data.push(f32::from_le_bytes(chunk.try_into().expect("4 bytes")));
    }
    Ok((dims, data))
}

/// Writes a tensor container file.
pub fn write_tensor(path: &Path, dims: &[usize], data: &[f32]) -> Result<(), TensorIoError> {
    let bytes = encode_tensor(dims, data)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a tensor container file.
pub fn read_tensor(path: &Path) -> Result<(Vec<usize>, Vec<f32>), TensorIoError> {
    let bytes = fs::read(path)?;
    decode_tensor(&bytes)
}

// ---------------------------------------------------------------------------
// Signal CSV table
// ---------------------------------------------------------------------------

/// Named, equal-length signal columns sampled at a common rate.
///
/// On disk: a `# sample_rate_hz=<value>` comment line, a header row naming
/// the columns, then one row per sample. Values are printed with Rust's
/// shortest round-trip formatting, so a write → read cycle reproduces every
/// `f64` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTable {
    pub sample_rate_hz: f64,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum SignalCsvError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("missing or malformed `# sample_rate_hz=` comment line")]
    MissingRateLine,
    #[error("sample rate must be a positive finite number, found `{found}`")]
    BadRate { found: String },
    #[error("header row is missing or has an empty column name")]
    BadHeader,
    #[error("row {row} has {found} cells, header names {expected} columns")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column `{column}`: `{cell}` is not a finite number")]
    BadCell {
        row: usize,
        column: String,
        cell: String,
    },
    #[error("table needs at least 2 rows, found {found}")]
    TooFewRows { found: usize },
    #[error("column {index} has length {found}, expected {expected}")]
    UnequalColumns {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("table must have at least one column")]
    NoColumns,
    #[error("non-finite value in column `{column}` at row {row}")]
    NonFinite { column: String, row: usize },
}

impl SignalTable {
    /// Validates rate, shape, and finiteness.
    pub fn new(
        sample_rate_hz: f64,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self, SignalCsvError> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(SignalCsvError::BadRate {
                found: sample_rate_hz.to_string(),
            });
        }
        if names.is_empty() || names.len() != columns.len() {
            return Err(SignalCsvError::NoColumns);
        }
        if names
            .iter()
            .any(|n| n.is_empty() || n.contains(',') || n.contains('\n'))
        {
            return Err(SignalCsvError::BadHeader);
        }
        let len = columns[0].len();
        if len < 2 {
            return Err(SignalCsvError::TooFewRows { found: len });
        }
        for (index, col) in columns.iter().enumerate() {
            if col.len() != len {
                return Err(SignalCsvError::UnequalColumns {
                    index,
                    expected: len,
                    found: col.len(),
                });
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(SignalCsvError::NonFinite {
                    column: names[index].clone(),
                    row,
                });
            }
        }
        Ok(Self {
            sample_rate_hz,
            names,
            columns,
        })
    }

    pub fn rows(&self) -> usize {
        self.columns[0].len()
    }
}

/// Renders a table to CSV text.
pub fn encode_signal_csv(table: &SignalTable) -> String {
    let mut out = String::new();
    out.push_str(&format!("# sample_rate_hz={}\n", table.sample_rate_hz));
    out.push_str(&table.names.join(","));
    out.push('\n');
    for row in 0..table.rows() {
        let cells: Vec<String> = table
            .columns
            .iter()
            .map(|col| col[row].to_string())
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses CSV text into a table.
pub fn decode_signal_csv(text: &str) -> Result<SignalTable, SignalCsvError> {
    let mut lines = text.lines();
    let rate_line = lines.next().ok_or(SignalCsvError::MissingRateLine)?.trim();
    let rate_str = rate_line
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|s| s.strip_prefix("sample_rate_hz="))
        .ok_or(SignalCsvError::MissingRateLine)?
        .trim();
    let sample_rate_hz: f64 = rate_str.parse().map_err(|_| SignalCsvError::BadRate {
        found: rate_str.to_string(),
    })?;
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(SignalCsvError::BadRate {
            found: rate_str.to_string(),
        });
    }

    let header = lines.next().ok_or(SignalCsvError::BadHeader)?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if names.is_empty() || names.iter().any(String::is_empty) {
        return Err(SignalCsvError::BadHeader);
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut row = 0usize;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != names.len() {
            return Err(SignalCsvError::RaggedRow {
                row,
                expected: names.len(),
                found: cells.len(),
            });
        }
        for (i, cell) in cells.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| SignalCsvError::BadCell {
                row,
                column: names[i].clone(),
                cell: cell.trim().to_string(),
            })?;
            if !value.is_finite() {
                return Err(SignalCsvError::BadCell {
                    row,
                    column: names[i].clone(),
                    cell: cell.trim().to_string(),
                });
            }
            columns[i].push(value);
        }
        row += 1;
    }
    SignalTable::new(sample_rate_hz, names, columns)
}

/// Writes a table as a CSV file.
pub fn write_signal_csv(path: &Path, table: &SignalTable) -> Result<(), SignalCsvError> {
    fs::write(path, encode_signal_csv(table))?;
    Ok(())
}

/// Reads a CSV file into a table.
pub fn read_signal_csv(path: &Path) -> Result<SignalTable, SignalCsvError> {
    let text = fs::read_to_string(path)?;
    decode_signal_csv(&text)
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// Knobs shared across the pipeline, parsed from `key=value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Low-frequency mask half-width fraction, in `[0, 1)`.
    pub beta: f64,
    /// Weight of the harmonic penalty in the transport cost, `>= 0`.
    pub lambda_h: f64,
    /// Weight of the transport loss in the combined loss, `>= 0`.
    pub gamma: f64,
    /// Entropic solver iteration count, `>= 1`.
    pub sinkhorn_iters: usize,
    /// Entropic regularization strength, `> 0`.
    pub sinkhorn_epsilon: f64,
    /// Descriptor window length in tokens, `>= 1` (the descriptor itself
    /// requires `>= 4`).
    pub window_len: usize,
    /// Physiological frequency band `(f_min, f_max)` in Hz, `0 < f_min < f_max`.
    pub band_hz: (f64, f64),
    /// Harmonic-ratio regularizer, `> 0`.
    pub eps_h: f64,
    /// Base seed for all derived random streams.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            beta: 0.05,
            lambda_h: 0.3,
            gamma: 0.1,
            sinkhorn_iters: 40,
            sinkhorn_epsilon: 0.05,
            window_len: 64,
            band_hz: (0.7, 4.0),
            eps_h: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: expected `key=value`, found `{text}`")]
    MissingEquals { line: usize, text: String },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("duplicate key `{key}`")]
    DuplicateKey { key: String },
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("key `{key}`: {detail}")]
    OutOfRange { key: String, detail: String },
}

/// Splits config text into `(key, value)` pairs. `#` starts a comment; blank
/// lines are skipped; duplicate keys are rejected.
pub fn parse_kv_lines(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::MissingEquals {
                line: number + 1,
                text: line.to_string(),
            })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if pairs.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::DuplicateKey { key });
        }
        pairs.push((key, value));
    }
    Ok(pairs)
}

fn parse_number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl RunConfig {
    /// Applies `key=value` pairs on top of the defaults and validates ranges.
    /// Unknown keys are hard errors — a typo here would silently invalidate a
    /// whole sweep.
    pub fn from_kv(pairs: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (key, value) in pairs {
            match key.as_str() {
                "beta" => cfg.beta = parse_number(key, value)?,
                "lambda_h" => cfg.lambda_h = parse_number(key, value)?,
                "gamma" => cfg.gamma = parse_number(key, value)?,
                "sinkhorn_iters" => cfg.sinkhorn_iters = parse_number(key, value)?,
                "sinkhorn_epsilon" => cfg.sinkhorn_epsilon = parse_number(key, value)?,
                "window_len" => cfg.window_len = parse_number(key, value)?,
                "f_min" => cfg.band_hz.0 = parse_number(key, value)?,
                "f_max" => cfg.band_hz.1 = parse_number(key, value)?,
                "eps_h" => cfg.eps_h = parse_number(key, value)?,
                "seed" => cfg.seed = parse_number(key, value)?,
                _ => return Err(ConfigError::UnknownKey { key: key.clone() }),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |key: &str, detail: String| ConfigError::OutOfRange {
            key: key.to_string(),
            detail,
        };
        if !(self.beta.is_finite() && (0.0..1.0).contains(&self.beta)) {
            return Err(range("beta", format!("{} not in [0, 1)", self.beta)));
        }
        if !(self.lambda_h.is_finite() && self.lambda_h >= 0.0) {
            return Err(range("lambda_h", format!("{} must be >= 0", self.lambda_h)));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(range("gamma", format!("{} must be >= 0", self.gamma)));
        }
        if self.sinkhorn_iters == 0 {
            return Err(range("sinkhorn_iters", "must be >= 1".to_string()));
        }
        if !(self.sinkhorn_epsilon.is_finite() && self.sinkhorn_epsilon > 0.0) {
            return Err(range(
                "sinkhorn_epsilon",
                format!("{} must be > 0", self.sinkhorn_epsilon),
            ));
        }
        if self.window_len == 0 {
            return Err(range("window_len", "must be >= 1".to_string()));
        }
        let (f_min, f_max) = self.band_hz;
        if !(f_min.is_finite() && f_max.is_finite() && 0.0 < f_min && f_min < f_max) {
            return Err(range(
                "f_min",
                format!("band ({f_min}, {f_max}) needs 0 < f_min < f_max"),
            ));
        }
        if !(self.eps_h.is_finite() && self.eps_h > 0.0) {
            return Err(range("eps_h", format!("{} must be > 0", self.eps_h)));
        }
        Ok(())
    }
}

/// Parses configuration text (defaults + overrides + validation).
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    RunConfig::from_kv(&parse_kv_lines(text)?)
}

/// Reads and parses a configuration file.
pub fn read_config(path: &Path) -> Result<RunConfig, ConfigError> {
    parse_config(&fs::read_to_string(path)?)
}
