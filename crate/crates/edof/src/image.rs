//! Grayscale image representation and bit-exact netpbm I/O.
//!
//! An [`Image`] is a row-major grid of `f64` samples. File samples are mapped
//! into `[0, 1]` on load; all processing happens in floating point and values
//! are only quantized again when writing or when a metric asks for the 8-bit
//! grid. The binary formats are PGM (P5) for grayscale and PPM (P6) for the
//! depth-coded renderings.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major 2D grid of finite `f64` samples.
///
/// The constructor enforces the invariants (non-empty dimensions, matching
/// data length, all values finite); the pixel values themselves are
/// unconstrained. File I/O and the metrics additionally require `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from row-major samples.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage {
                reason: format!("dimensions {width}x{height} must be at least 1x1"),
            });
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage {
                reason: format!(
                    "data length {} does not match {width}x{height}",
                    data.len()
                ),
            });
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidImage {
                reason: format!("non-finite sample {v}"),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Constant-valued image.
    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Sample at column `x`, row `y`.
    pub fn pixel(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    /// Row-major sample slice.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// One row of samples.
    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Errors unless every sample lies in `[0, 1]`.
    pub fn check_unit_range(&self) -> Result<()> {
        for &v in &self.data {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::SampleOutOfRange { value: v });
            }
        }
        Ok(())
    }
}

/// Stored sample width for PGM output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelDepth {
    Eight,
    Sixteen,
}

impl PixelDepth {
    pub fn maxval(self) -> u32 {
        match self {
            PixelDepth::Eight => 255,
            PixelDepth::Sixteen => 65535,
        }
    }
}

/// Rounds half away from zero. Inputs here are never negative, but the
/// convention is fixed so quantized golden files stay stable.
fn round_half_away(v: f64) -> f64 {
    if v >= 0.0 {
        (v + 0.5).floor()
    } else {
        (v - 0.5).ceil()
    }
}

/// Loads a binary PGM (magic `P5`), mapping samples to `[0, 1]` by dividing
/// by the header maxval. 16-bit samples are read big-endian. Header comments
/// (`#` to end of line) are tolerated.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut pos = 0usize;

    let magic = read_token(&bytes, &mut pos).ok_or_else(|| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: "missing magic".into(),
    })?;
    if magic != "P5" {
        return Err(Error::UnsupportedMagic {
            path: path.to_path_buf(),
            magic,
        });
    }

    let mut fields = [0usize; 3];
    for (i, name) in ["width", "height", "maxval"].iter().enumerate() {
        let tok = read_token(&bytes, &mut pos).ok_or_else(|| Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("missing {name}"),
        })?;
        fields[i] = tok.parse().map_err(|_| Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("{name} {tok:?} is not a number"),
        })?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("bad geometry {width}x{height} maxval {maxval}"),
        });
    }
    // Exactly one whitespace byte separates the header from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: "missing separator before pixel payload".into(),
        });
    }
    pos += 1;

    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let expected = width * height * bytes_per_sample;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected,
            found: payload.len(),
        });
    }

    let scale = maxval as f64;
    let data: Vec<f64> = if bytes_per_sample == 1 {
        payload[..expected].iter().map(|&b| b as f64 / scale).collect()
    } else {
        payload[..expected]
            .chunks_exact(2)
            .map(|pair| u16::from_be_bytes([pair[0], pair[1]]) as f64 / scale)
            .collect()
    };
    Image::new(width, height, data)
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn read_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if *pos > start {
        Some(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    } else {
        None
    }
}

/// Writes a binary PGM. Samples must lie in `[0, 1]`; each is quantized as
/// `round(v * maxval)` (half away from zero) and clamped. Reloading the file
/// recovers the quantized values exactly.
pub fn save_pgm(img: &Image, path: impl AsRef<Path>, depth: PixelDepth) -> Result<()> {
    let path = path.as_ref();
    img.check_unit_range()?;
    let maxval = depth.maxval();
    let mut out = Vec::with_capacity(32 + img.data.len() * 2);
    write!(out, "P5\n{} {}\n{}\n", img.width, img.height, maxval).expect("vec write");
    let scale = maxval as f64;
    for &v in &img.data {
        let q = round_half_away(v * scale).clamp(0.0, scale) as u32;
        match depth {
            PixelDepth::Eight => out.push(q as u8),
            PixelDepth::Sixteen => out.extend_from_slice(&(q as u16).to_be_bytes()),
        }
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Affine rescale of all samples to `[0, 1]`. A constant image maps to all
/// zeros.
pub fn normalize(img: &Image) -> Image {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in &img.data {
        min = min.min(v);
        max = max.max(v);
    }
    let span = max - min;
    let data = if span > 0.0 {
        img.data.iter().map(|&v| (v - min) / span).collect()
    } else {
        vec![0.0; img.data.len()]
    };
    Image {
        width: img.width,
        height: img.height,
        data,
    }
}

/// 8-bit view of a unit-range image: `round(v * 255)` per pixel, clamped.
///
/// This is the grid all quality metrics are defined on.
pub fn quantize_u8(img: &Image) -> Result<Vec<u8>> {
    img.check_unit_range()?;
    Ok(img
        .data
        .iter()
        .map(|&v| round_half_away(v * 255.0).clamp(0.0, 255.0) as u8)
        .collect())
}

/// Interleaved 8-bit RGB image, written as binary PPM (P6).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height * 3 {
            return Err(Error::InvalidImage {
                reason: format!(
                    "rgb data length {} does not match {width}x{height}",
                    data.len()
                ),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }
}

/// Writes a binary PPM (P6), 8 bits per channel.
pub fn save_ppm(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(32 + img.data.len());
    write!(out, "P6\n{} {}\n255\n", img.width, img.height).expect("vec write");
    out.extend_from_slice(&img.data);
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
