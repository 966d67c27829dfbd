//! Error type shared by all library modules.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong inside the library.
///
/// Variants are grouped by cause so callers (the CLI in particular) can map
/// them onto coarse exit classes: file I/O, input validation, numerical
/// failure.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: unsupported magic {magic:?} (only binary PGM \"P5\" is supported)")]
    UnsupportedMagic { path: PathBuf, magic: String },

    #[error("{path}: malformed PGM header: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("{path}: truncated pixel payload: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("sample value {value} lies outside [0, 1]")]
    SampleOutOfRange { value: f64 },

    #[error("invalid image geometry: {reason}")]
    InvalidImage { reason: String },

    #[error("image dimensions {}x{} and {}x{} differ", .a.0, .a.1, .b.0, .b.1)]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },

    #[error("decomposition depth must be at least 1")]
    ZeroLevels,

    #[error("{levels} levels is too deep for a {width}x{height} image (at most {max})")]
    LevelsTooDeep {
        levels: usize,
        width: usize,
        height: usize,
        max: usize,
    },

    #[error("symmetric padding {pad} exceeds signal length {len}")]
    PadTooLarge { pad: usize, len: usize },

    #[error("coefficient pyramid is inconsistent: {reason}")]
    InconsistentPyramid { reason: String },

    #[error("empty image stack")]
    EmptyStack,

    #[error("empty band list")]
    EmptyBandList,

    #[error("palette has {got} colors but the fusion used {expected} sources")]
    PaletteSize { expected: usize, got: usize },

    #[error("{what}: {reason}")]
    ConfigMismatch { what: &'static str, reason: String },

    #[error("image too small for {metric}: needs at least {min_width}x{min_height}")]
    TooSmall {
        metric: &'static str,
        min_width: usize,
        min_height: usize,
    },

    #[error("invalid {field}: {reason}")]
    InvalidSpec { field: &'static str, reason: String },

    #[error("edge profile fit failed: {reason}")]
    EdgeFit { reason: String },

    #[error("bar target has no measurable contrast")]
    NoContrast,
}

impl Error {
    /// True for failures rooted in the filesystem rather than in input data.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::UnsupportedMagic { .. }
                | Error::MalformedHeader { .. }
                | Error::TruncatedPayload { .. }
        )
    }

    /// True for failures of a numerical procedure on otherwise valid input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::EdgeFit { .. } | Error::NoContrast)
    }
}
