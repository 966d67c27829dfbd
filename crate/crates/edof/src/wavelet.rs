//! Separable multi-level 2D discrete wavelet transform and its exact inverse.
//!
//! The transform is the classic convolve-then-downsample filter bank with
//! orthonormal filters (Haar, Daubechies 4-tap, Daubechies 8-tap). Boundaries
//! are handled by whole-point symmetric extension by default; a periodic mode
//! exists for energy-conservation checks.
//!
//! ## Exact reconstruction
//!
//! In symmetric mode the analysis keeps *every* output window that overlaps
//! the signal. For filters longer than 2 taps this stores slightly more than
//! n/2 coefficients per band near the edges, and that small redundancy is
//! what makes the inverse exact: the synthesis pass scatter-adds each kept
//! coefficient through the (adjoint) filter bank and discards contributions
//! that fall outside the original extent. Per-stage reconstruction is then an
//! algebraic identity of the orthonormal filter pair, so round-trip error is
//! a few ulps for any image size, including odd dimensions. Haar bands are
//! exactly `ceil(n/2)` long.
//!
//! In periodic mode bands are always `ceil(n/2)` long (odd lengths are padded
//! with the edge sample) and the per-level transform is an orthogonal matrix,
//! so energy is conserved; exactness requires every intermediate length to
//! stay at least as large as the filter.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;

/// Supported orthonormal filter families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveletFamily {
    /// 2-tap Haar.
    Haar,
    /// 4-tap Daubechies (db2).
    Db2,
    /// 8-tap Daubechies (db4).
    Db4,
}

impl WaveletFamily {
    pub fn name(self) -> &'static str {
        match self {
            WaveletFamily::Haar => "haar",
            WaveletFamily::Db2 => "db2",
            WaveletFamily::Db4 => "db4",
        }
    }
}

impl std::fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for WaveletFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(WaveletFamily::Haar),
            "db2" => Ok(WaveletFamily::Db2),
            "db4" => Ok(WaveletFamily::Db4),
            other => Err(format!("unknown wavelet family {other:?} (expected haar, db2 or db4)")),
        }
    }
}

/// How a signal is extended when a filter window crosses its boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Whole-point symmetric extension (edge sample not repeated).
    #[default]
    Symmetric,
    /// Circular extension; kept for energy-conservation tests.
    Periodic,
}

/// Daubechies db2 scaling taps, `(1±√3)`-form, evaluated in f64.
fn db2_taps() -> [f64; 4] {
    let s3 = 3.0_f64.sqrt();
    let norm = 4.0 * 2.0_f64.sqrt();
    [
        (1.0 + s3) / norm,
        (3.0 + s3) / norm,
        (3.0 - s3) / norm,
        (1.0 - s3) / norm,
    ]
}

/// Daubechies db4 scaling taps (standard published values).
const DB4_TAPS: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

/// An orthonormal analysis/synthesis filter pair plus a boundary mode.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec {
    family: WaveletFamily,
    boundary: BoundaryMode,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl WaveletSpec {
    pub fn new(family: WaveletFamily, boundary: BoundaryMode) -> Self {
        let lo: Vec<f64> = match family {
            WaveletFamily::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            WaveletFamily::Db2 => db2_taps().to_vec(),
            WaveletFamily::Db4 => DB4_TAPS.to_vec(),
        };
        // Alternating flip of the scaling filter: g[j] = (-1)^j h[F-1-j].
        let f = lo.len();
        let hi: Vec<f64> = (0..f)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * lo[f - 1 - j]
            })
            .collect();
        Self {
            family,
            boundary,
            lo,
            hi,
        }
    }

    pub fn haar() -> Self {
        Self::new(WaveletFamily::Haar, BoundaryMode::default())
    }

    pub fn db2() -> Self {
        Self::new(WaveletFamily::Db2, BoundaryMode::default())
    }

    pub fn db4() -> Self {
        Self::new(WaveletFamily::Db4, BoundaryMode::default())
    }

    pub fn with_boundary(mut self, boundary: BoundaryMode) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    /// Filter length in taps.
    pub fn filter_len(&self) -> usize {
        self.lo.len()
    }

    pub fn analysis_lowpass(&self) -> &[f64] {
        &self.lo
    }

    pub fn analysis_highpass(&self) -> &[f64] {
        &self.hi
    }

    /// Synthesis filters of an orthonormal bank are the time-reversed
    /// analysis filters.
    pub fn synthesis_lowpass(&self) -> Vec<f64> {
        self.lo.iter().rev().copied().collect()
    }

    pub fn synthesis_highpass(&self) -> Vec<f64> {
        self.hi.iter().rev().copied().collect()
    }
}

impl Default for WaveletSpec {
    fn default() -> Self {
        Self::haar()
    }
}

/// A 2D block of wavelet coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Band {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// The three detail orientations produced at one decomposition level.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailBands {
    /// LH: low-pass along x, high-pass along y.
    pub horizontal: Band,
    /// HL: high-pass along x, low-pass along y.
    pub vertical: Band,
    /// HH: high-pass along both axes.
    pub diagonal: Band,
}

/// Multi-level decomposition: one final approximation band plus per-level
/// detail triplets, finest level first.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffPyramid {
    /// Final-level LL band.
    pub approx: Band,
    /// `details[0]` comes from the first (finest) decomposition step.
    pub details: Vec<DetailBands>,
    /// Dimensions of the transformed image; the inverse needs them to crop
    /// exactly at every level.
    pub original_dims: (usize, usize),
}

impl CoeffPyramid {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Per-level input dimensions implied by `original_dims` and `spec`:
    /// entry 0 is the image itself, entry `l` the LL band entering level `l`.
    pub fn dims_chain(spec: &WaveletSpec, original_dims: (usize, usize), levels: usize) -> Vec<(usize, usize)> {
        let mut chain = Vec::with_capacity(levels + 1);
        let mut dims = original_dims;
        chain.push(dims);
        for _ in 0..levels {
            dims = (
                band_len(dims.0, spec.filter_len(), spec.boundary()),
                band_len(dims.1, spec.filter_len(), spec.boundary()),
            );
            chain.push(dims);
        }
        chain
    }

    /// Checks the band dimension chain and coefficient finiteness.
    pub fn validate(&self, spec: &WaveletSpec) -> Result<()> {
        if self.details.is_empty() {
            return Err(Error::InconsistentPyramid {
                reason: "pyramid has no detail levels".into(),
            });
        }
        let chain = Self::dims_chain(spec, self.original_dims, self.levels());
        for (l, det) in self.details.iter().enumerate() {
            let want = chain[l + 1];
            for (name, band) in [
                ("horizontal", &det.horizontal),
                ("vertical", &det.vertical),
                ("diagonal", &det.diagonal),
            ] {
                if band.dims() != want {
                    return Err(Error::InconsistentPyramid {
                        reason: format!(
                            "level {} {name} band is {}x{}, expected {}x{}",
                            l + 1,
                            band.width,
                            band.height,
                            want.0,
                            want.1
                        ),
                    });
                }
                if band.data.len() != band.width * band.height {
                    return Err(Error::InconsistentPyramid {
                        reason: format!("level {} {name} band has wrong data length", l + 1),
                    });
                }
            }
        }
        let want = chain[self.levels()];
        if self.approx.dims() != want {
            return Err(Error::InconsistentPyramid {
                reason: format!(
                    "approximation band is {}x{}, expected {}x{}",
                    self.approx.width, self.approx.height, want.0, want.1
                ),
            });
        }
        let all_bands = self
            .details
            .iter()
            .flat_map(|d| [&d.horizontal, &d.vertical, &d.diagonal])
            .chain(std::iter::once(&self.approx));
        for band in all_bands {
            if band.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::InconsistentPyramid {
                    reason: "non-finite coefficient".into(),
                });
            }
        }
        Ok(())
    }
}

/// Deepest decomposition the image admits: `floor(log2(min(w, h)))`.
pub fn max_levels(width: usize, height: usize) -> usize {
    let mut n = width.min(height);
    let mut levels = 0;
    while n >= 2 {
        n /= 2;
        levels += 1;
    }
    levels
}

fn check_levels(levels: usize, width: usize, height: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::ZeroLevels);
    }
    let max = max_levels(width, height);
    if levels > max {
        return Err(Error::LevelsTooDeep {
            levels,
            width,
            height,
            max,
        });
    }
    Ok(())
}

/// Whole-point symmetric extension: `[a, b, c]` padded by 2 becomes
/// `[c, b, a, b, c, b, a]`. The edge sample is not repeated.
pub fn extend_symmetric(signal: &[f64], pad: usize) -> Result<Vec<f64>> {
    if pad > signal.len() {
        return Err(Error::PadTooLarge {
            pad,
            len: signal.len(),
        });
    }
    let n = signal.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    for i in -(pad as isize)..(n + pad) as isize {
        out.push(signal[sym_fold(i, n)]);
    }
    Ok(out)
}

/// Folds an arbitrary index into `[0, n)` by whole-point reflection.
fn sym_fold(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut i = i.rem_euclid(period);
    if i >= n as isize {
        i = period - i;
    }
    i as usize
}

/// Output phase: chosen so Haar pairs samples (2k, 2k+1).
fn shift(filter_len: usize) -> isize {
    (filter_len / 2) as isize - 1
}

/// First kept analysis window in symmetric mode (the leftmost window that
/// still overlaps the signal).
fn first_window(filter_len: usize) -> isize {
    let s = shift(filter_len);
    // ceil((s - F + 1) / 2)
    (s - filter_len as isize + 2).div_euclid(2)
}

/// Number of coefficients one band stores for a signal of length `n`.
fn band_len(n: usize, filter_len: usize, mode: BoundaryMode) -> usize {
    match mode {
        BoundaryMode::Symmetric => {
            let s = shift(filter_len);
            let k_max = (n as isize - 1 + s).div_euclid(2);
            (k_max - first_window(filter_len) + 1) as usize
        }
        BoundaryMode::Periodic => n.div_ceil(2),
    }
}

/// One analysis step of a single signal into `approx`/`detail` halves.
pub(crate) fn analyze_1d(x: &[f64], spec: &WaveletSpec, approx: &mut [f64], detail: &mut [f64]) {
    let n = x.len();
    let f = spec.filter_len();
    let s = shift(f);
    let (lo, hi) = (spec.analysis_lowpass(), spec.analysis_highpass());
    match spec.boundary() {
        BoundaryMode::Symmetric => {
            let k0 = first_window(f);
            for idx in 0..approx.len() {
                let base = 2 * (k0 + idx as isize) - s;
                let mut a = 0.0;
                let mut d = 0.0;
                for j in 0..f {
                    let v = x[sym_fold(base + j as isize, n)];
                    a += lo[j] * v;
                    d += hi[j] * v;
                }
                approx[idx] = a;
                detail[idx] = d;
            }
        }
        BoundaryMode::Periodic => {
            // Odd lengths behave as if padded with the edge sample.
            let m = (n + (n & 1)) as isize;
            let fetch = |i: isize| -> f64 {
                let i = i.rem_euclid(m) as usize;
                x[i.min(n - 1)]
            };
            for idx in 0..approx.len() {
                let base = 2 * idx as isize - s;
                let mut a = 0.0;
                let mut d = 0.0;
                for j in 0..f {
                    let v = fetch(base + j as isize);
                    a += lo[j] * v;
                    d += hi[j] * v;
                }
                approx[idx] = a;
                detail[idx] = d;
            }
        }
    }
}

/// Exact adjoint of [`analyze_1d`]: scatter-adds every kept coefficient back
/// through the filter pair and keeps the first `out.len()` samples.
pub(crate) fn synthesize_1d(approx: &[f64], detail: &[f64], spec: &WaveletSpec, out: &mut [f64]) {
    let n = out.len();
    let f = spec.filter_len();
    let s = shift(f);
    let (lo, hi) = (spec.analysis_lowpass(), spec.analysis_highpass());
    out.fill(0.0);
    match spec.boundary() {
        BoundaryMode::Symmetric => {
            let k0 = first_window(f);
            for idx in 0..approx.len() {
                let base = 2 * (k0 + idx as isize) - s;
                let (a, d) = (approx[idx], detail[idx]);
                for j in 0..f {
                    let i = base + j as isize;
                    if (0..n as isize).contains(&i) {
                        out[i as usize] += lo[j] * a + hi[j] * d;
                    }
                }
            }
        }
        BoundaryMode::Periodic => {
            let m = n + (n & 1);
            let mut padded = vec![0.0; m];
            for idx in 0..approx.len() {
                let base = 2 * idx as isize - s;
                let (a, d) = (approx[idx], detail[idx]);
                for j in 0..f {
                    let i = (base + j as isize).rem_euclid(m as isize) as usize;
                    padded[i] += lo[j] * a + hi[j] * d;
                }
            }
            out.copy_from_slice(&padded[..n]);
        }
    }
}

/// Filters every row of `band`, producing low-pass and high-pass halves.
fn analyze_rows(band: &Band, spec: &WaveletSpec) -> (Band, Band) {
    let out_w = band_len(band.width, spec.filter_len(), spec.boundary());
    let mut lo = Band::zeros(out_w, band.height);
    let mut hi = Band::zeros(out_w, band.height);
    lo.data
        .par_chunks_mut(out_w)
        .zip(hi.data.par_chunks_mut(out_w))
        .zip(band.data.par_chunks(band.width))
        .for_each(|((a, d), row)| analyze_1d(row, spec, a, d));
    (lo, hi)
}

/// Inverse of [`analyze_rows`] for rows of original length `out_w`.
fn synthesize_rows(lo: &Band, hi: &Band, out_w: usize, spec: &WaveletSpec) -> Band {
    debug_assert_eq!(lo.dims(), hi.dims());
    let mut out = Band::zeros(out_w, lo.height);
    out.data
        .par_chunks_mut(out_w)
        .zip(lo.data.par_chunks(lo.width))
        .zip(hi.data.par_chunks(hi.width))
        .for_each(|((row, a), d)| synthesize_1d(a, d, spec, row));
    out
}

fn transpose(band: &Band) -> Band {
    let mut out = Band::zeros(band.height, band.width);
    for y in 0..band.height {
        for x in 0..band.width {
            out.data[x * band.height + y] = band.data[y * band.width + x];
        }
    }
    out
}

/// One decomposition level: rows first, then columns of each half.
fn forward_level(input: &Band, spec: &WaveletSpec) -> (Band, DetailBands) {
    let (lo, hi) = analyze_rows(input, spec);
    let (ll_t, lh_t) = analyze_rows(&transpose(&lo), spec);
    let (hl_t, hh_t) = analyze_rows(&transpose(&hi), spec);
    (
        transpose(&ll_t),
        DetailBands {
            horizontal: transpose(&lh_t),
            vertical: transpose(&hl_t),
            diagonal: transpose(&hh_t),
        },
    )
}

/// Inverse of one level, reconstructing a `target` sized band.
fn inverse_level(ll: &Band, det: &DetailBands, target: (usize, usize), spec: &WaveletSpec) -> Band {
    let (w, h) = target;
    let lo = transpose(&synthesize_rows(
        &transpose(ll),
        &transpose(&det.horizontal),
        h,
        spec,
    ));
    let hi = transpose(&synthesize_rows(
        &transpose(&det.vertical),
        &transpose(&det.diagonal),
        h,
        spec,
    ));
    synthesize_rows(&lo, &hi, w, spec)
}

/// Multi-level 2D decomposition.
///
/// Requires `levels >= 1` and `2^levels <= min(width, height)`.
pub fn dwt2(img: &Image, spec: &WaveletSpec, levels: usize) -> Result<CoeffPyramid> {
    check_levels(levels, img.width(), img.height())?;
    let mut cur = Band {
        width: img.width(),
        height: img.height(),
        data: img.data().to_vec(),
    };
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (ll, det) = forward_level(&cur, spec);
        details.push(det);
        cur = ll;
    }
    Ok(CoeffPyramid {
        approx: cur,
        details,
        original_dims: img.dims(),
    })
}

/// Exact inverse of [`dwt2`] under the same spec.
pub fn idwt2(pyr: &CoeffPyramid, spec: &WaveletSpec) -> Result<Image> {
    pyr.validate(spec)?;
    let chain = CoeffPyramid::dims_chain(spec, pyr.original_dims, pyr.levels());
    let mut cur = pyr.approx.clone();
    for l in (0..pyr.levels()).rev() {
        cur = inverse_level(&cur, &pyr.details[l], chain[l], spec);
    }
    Image::new(cur.width, cur.height, cur.data)
}
