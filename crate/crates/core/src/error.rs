use std::path::PathBuf;

use crate::signal::ClassLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports.
///
/// Variants split into validation errors (bad input, bad configuration,
/// contract violations) and internal errors (I/O, encoding). The CLI maps
/// the former to exit code 2 and the latter to exit code 1.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(
        "no cycles detected: found {onsets} onset(s) with derivative threshold {threshold:.6}"
    )]
    NoCyclesDetected { onsets: usize, threshold: f64 },
    #[error("degenerate normalization stats (offset {offset}, scale {scale})")]
    DegenerateStats { offset: f64, scale: f64 },
    #[error("phase window [{start}, {end}] does not fit a cycle of {len} samples")]
    WindowOutOfRange { start: f64, end: f64, len: usize },
    #[error("need at least {need} cycles, got {have}")]
    InsufficientCycles { have: usize, need: usize },
    #[error("empty input sequence")]
    EmptyInput,
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("band {band} is narrower than the length difference {diff}")]
    BandTooNarrow { band: usize, diff: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("refusing to compare cycle {0} with itself")]
    SelfComparison(String),
    #[error("reference cycle {reference} is not a valid reference for {target}: {reason}")]
    InvalidReference {
        reference: String,
        target: String,
        reason: &'static str,
    },
    #[error("insufficient references for class {class} / {kind}: have {have}, need {need}")]
    InsufficientReferences {
        class: ClassLabel,
        kind: &'static str,
        have: usize,
        need: usize,
    },
    #[error("feature kind mismatch: expected {expected}, got {got}")]
    KindMismatch {
        expected: &'static str,
        got: &'static str,
    },
    #[error("expected data from individual {expected} only, found {found} in {id}")]
    MixedIndividuals {
        expected: u32,
        found: u32,
        id: String,
    },
    #[error("missing feature kind {0}")]
    MissingKind(&'static str),
    #[error("class {0} has no exemplars")]
    MissingClass(ClassLabel),
    #[error("layout mismatch: expected {expected} entries, got {got}")]
    LayoutMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid manifest: {0}")]
    ManifestInvalid(String),
    #[error("class imbalance cannot be fixed: {0}")]
    ClassImbalanceUnfixable(String),
    #[error("unknown {what} `{value}`")]
    Parse { what: &'static str, value: String },
    #[error("bad container {path}: {reason}")]
    Container { path: PathBuf, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the caller's input rather than the
    /// environment.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::Json(_) | Error::Container { .. }
        )
    }
}
