//! Gaussian-beam defocus simulator and the measurements built on it.
//!
//! A focused Gaussian beam stays sharp only near its waist: the in-plane blur
//! grows with axial distance as `w(z) = w0 * sqrt(1 + ((z - z_f)/z_R)^2)`,
//! where the Rayleigh range `z_R` is half the depth of field. Rendering a
//! known ground truth through that blur law at several focal planes produces
//! focal stacks with a known answer, which is what makes end-to-end claims
//! about fusion testable: depth of field is measured from the contrast of a
//! tilted bar target, lateral resolution from the 10-90% rise of an edge
//! profile.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;

/// Scene plus optics: everything needed to render a focal stack.
#[derive(Debug, Clone)]
pub struct FocalStackSpec {
    pub ground_truth: Image,
    /// Depth of each pixel in micrometers, same dimensions as the ground
    /// truth.
    pub depth_map: Image,
    /// Focal plane positions in micrometers, one rendered image each.
    pub focal_planes: Vec<f64>,
    /// In-plane blur sigma at focus, micrometers.
    pub beam_waist_um: f64,
    /// Rayleigh range in micrometers; the depth of field is twice this.
    pub rayleigh_um: f64,
    /// Upper bound on the blur sigma, micrometers.
    pub max_sigma_um: f64,
    /// Pixel pitch of the scan grid, micrometers per pixel.
    pub scale_um_per_px: f64,
}

/// Blur below this many pixels of sigma is treated as no blur at all.
pub const IDENTITY_SIGMA_PX: f64 = 0.3;

impl FocalStackSpec {
    /// Checks every field, naming the offending one.
    pub fn validate(&self) -> Result<()> {
        if self.depth_map.dims() != self.ground_truth.dims() {
            return Err(Error::InvalidSpec {
                field: "depth_map",
                reason: format!(
                    "dimensions {:?} do not match ground truth {:?}",
                    self.depth_map.dims(),
                    self.ground_truth.dims()
                ),
            });
        }
        if self.focal_planes.is_empty() {
            return Err(Error::InvalidSpec {
                field: "focal_planes",
                reason: "must contain at least one plane".into(),
            });
        }
        for (field, value) in [
            ("beam_waist_um", self.beam_waist_um),
            ("rayleigh_um", self.rayleigh_um),
            ("max_sigma_um", self.max_sigma_um),
            ("scale_um_per_px", self.scale_um_per_px),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidSpec {
                    field,
                    reason: format!("must be positive and finite, got {value}"),
                });
            }
        }
        if self.focal_planes.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidSpec {
                field: "focal_planes",
                reason: "positions must be finite".into(),
            });
        }
        Ok(())
    }
}

/// Result of the end-to-end depth-of-field evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMeasurement {
    pub single_image_dof_um: f64,
    pub fused_dof_um: f64,
    /// `fused_dof / single_image_dof`.
    pub extension_ratio: f64,
    pub lateral_res_single_um: f64,
    pub lateral_res_fused_um: f64,
}

/// Blur sigma at depth `z_um` for a beam focused at `focus_z_um`, in
/// micrometers, capped at `max_sigma_um`.
pub fn beam_sigma(z_um: f64, focus_z_um: f64, spec: &FocalStackSpec) -> f64 {
    let t = (z_um - focus_z_um) / spec.rayleigh_um;
    (spec.beam_waist_um * (1.0 + t * t).sqrt()).min(spec.max_sigma_um)
}

/// Renders one defocused view: each output pixel is the ground truth blurred
/// by an isotropic Gaussian whose sigma follows the beam law at that pixel's
/// own depth. Kernels are truncated at three sigma and renormalized over the
/// in-bounds window, so constant scenes are preserved exactly.
pub fn simulate_defocus(spec: &FocalStackSpec, focus_z_um: f64) -> Result<Image> {
    spec.validate()?;
    let (w, h) = spec.ground_truth.dims();
    let gt = spec.ground_truth.data();
    let depth = spec.depth_map.data();

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out_px) in row.iter_mut().enumerate() {
            let i = y * w + x;
            let sigma_px = beam_sigma(depth[i], focus_z_um, spec) / spec.scale_um_per_px;
            if sigma_px < IDENTITY_SIGMA_PX {
                *out_px = gt[i];
                continue;
            }
            let r = (3.0 * sigma_px).ceil() as isize;
            let inv_two_sigma_sq = 1.0 / (2.0 * sigma_px * sigma_px);
            let mut acc = 0.0;
            let mut weight = 0.0;
            for dy in -r..=r {
                let sy = y as isize + dy;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for dx in -r..=r {
                    let sx = x as isize + dx;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    let d2 = (dx * dx + dy * dy) as f64;
                    let wgt = (-d2 * inv_two_sigma_sq).exp();
                    acc += wgt * gt[sy as usize * w + sx as usize];
                    weight += wgt;
                }
            }
            *out_px = acc / weight;
        }
    });
    Image::new(w, h, out)
}

/// One defocused image per focal plane, in `focal_planes` order.
pub fn generate_stack(spec: &FocalStackSpec) -> Result<Vec<Image>> {
    spec.validate()?;
    spec.focal_planes
        .iter()
        .map(|&z| simulate_defocus(spec, z))
        .collect()
}

/// Vertical black/white bar chart whose depth rises linearly across the
/// width: ground truth plus matching depth map.
///
/// Columns follow `1` for `x mod period < period/2`, `0` otherwise; depth at
/// column `x` is `depth_range.0 + (depth_range.1 - depth_range.0) * x / width`.
pub fn tilted_bar_target(
    width: usize,
    height: usize,
    bar_period: usize,
    depth_range: (f64, f64),
) -> Result<(Image, Image)> {
    if bar_period < 2 {
        return Err(Error::InvalidSpec {
            field: "bar_period",
            reason: format!("must be at least 2 px, got {bar_period}"),
        });
    }
    let bars = Image::from_fn(width, height, |x, _| {
        if x % bar_period < bar_period / 2 {
            1.0
        } else {
            0.0
        }
    })?;
    let (d0, d1) = depth_range;
    let depth = Image::from_fn(width, height, |x, _| {
        d0 + (d1 - d0) * x as f64 / width as f64
    })?;
    Ok((bars, depth))
}

/// Vertical step edge (dark left half, bright right half) at a uniform depth.
pub fn step_edge_target(width: usize, height: usize, depth_um: f64) -> Result<(Image, Image)> {
    let step = Image::from_fn(width, height, |x, _| if x < width / 2 { 0.0 } else { 1.0 })?;
    let depth = Image::constant(width, height, depth_um)?;
    Ok((step, depth))
}

/// Measures the depth of field of a bar-target image: per window of one bar
/// period, the Michelson contrast of the column means; the DoF is the depth
/// extent of the contiguous run (containing the peak) where contrast stays at
/// or above half its peak.
pub fn measure_dof(img: &Image, depth_map: &Image, bar_period: usize) -> Result<f64> {
    if depth_map.dims() != img.dims() {
        return Err(Error::DimensionMismatch {
            a: img.dims(),
            b: depth_map.dims(),
        });
    }
    let (w, h) = img.dims();
    if bar_period < 2 || w < bar_period {
        return Err(Error::InvalidSpec {
            field: "bar_period",
            reason: format!("period {bar_period} does not fit image width {w}"),
        });
    }

    let col_mean: Vec<f64> = (0..w)
        .map(|x| (0..h).map(|y| img.pixel(x, y)).sum::<f64>() / h as f64)
        .collect();

    let windows = w - bar_period + 1;
    let mut contrast = vec![0.0; windows];
    for (x0, c) in contrast.iter_mut().enumerate() {
        let slice = &col_mean[x0..x0 + bar_period];
        let max = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = slice.iter().cloned().fold(f64::INFINITY, f64::min);
        if max + min > 0.0 {
            *c = (max - min) / (max + min);
        }
    }

    let (peak_idx, &peak) = contrast
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one window");
    if peak <= 0.0 {
        return Err(Error::NoContrast);
    }
    let threshold = 0.5 * peak;

    let mut lo = peak_idx;
    while lo > 0 && contrast[lo - 1] >= threshold {
        lo -= 1;
    }
    let mut hi = peak_idx;
    while hi + 1 < windows && contrast[hi + 1] >= threshold {
        hi += 1;
    }

    // Depth extent from the first column of the first in-focus window to the
    // last column of the last one.
    let d_lo = depth_map.pixel(lo, 0);
    let d_hi = depth_map.pixel(hi + bar_period - 1, 0);
    Ok((d_hi - d_lo).abs())
}

/// 10-90% rise distance over twice the 90% normal quantile: the Gaussian
/// edge-spread relation `rise = 2.5631 * sigma`.
pub const RISE_PER_SIGMA: f64 = 2.563_103_131_089_2;

/// Measures lateral resolution from the edge profile along `row`: fits an
/// error-function transition and returns the 10-90% rise distance in
/// micrometers.
///
/// The fit maps the normalized profile through the inverse normal CDF, where
/// an error-function edge becomes a straight line whose slope is the edge
/// sigma. Profiles with fewer than three samples inside the transition fall
/// back to direct interpolation of the 10% and 90% crossings.
pub fn measure_lateral_resolution(img: &Image, row: usize, scale_um_per_px: f64) -> Result<f64> {
    if row >= img.height() {
        return Err(Error::InvalidSpec {
            field: "row",
            reason: format!("row {row} outside image of height {}", img.height()),
        });
    }
    let profile = img.row(row);
    let n = profile.len();
    if n < 4 {
        return Err(Error::EdgeFit {
            reason: format!("profile of {n} samples is too short"),
        });
    }

    let plateau = (n / 8).clamp(1, 8);
    let left: f64 = profile[..plateau].iter().sum::<f64>() / plateau as f64;
    let right: f64 = profile[n - plateau..].iter().sum::<f64>() / plateau as f64;
    let span = right - left;
    if span.abs() < 1e-9 {
        return Err(Error::EdgeFit {
            reason: "flat profile".into(),
        });
    }

    // Normalized, ascending transition.
    let q: Vec<f64> = profile.iter().map(|&v| (v - left) / span).collect();

    let transition: Vec<(f64, f64)> = q
        .iter()
        .enumerate()
        .filter(|(_, &qi)| (0.05..=0.95).contains(&qi))
        .map(|(i, &qi)| (i as f64, qi))
        .collect();

    let rise_px = if transition.len() >= 3 {
        let zx: Vec<(f64, f64)> = transition
            .iter()
            .map(|&(x, qi)| (probit(qi), x))
            .collect();
        let mz = zx.iter().map(|p| p.0).sum::<f64>() / zx.len() as f64;
        let mx = zx.iter().map(|p| p.1).sum::<f64>() / zx.len() as f64;
        let cov: f64 = zx.iter().map(|&(z, x)| (z - mz) * (x - mx)).sum();
        let var: f64 = zx.iter().map(|&(z, _)| (z - mz) * (z - mz)).sum();
        if var < 1e-12 {
            return Err(Error::EdgeFit {
                reason: "degenerate transition".into(),
            });
        }
        let sigma = cov / var;
        if !(sigma > 0.0) {
            return Err(Error::EdgeFit {
                reason: format!("non-increasing edge (sigma {sigma})"),
            });
        }
        RISE_PER_SIGMA * sigma
    } else {
        let x10 = crossing(&q, 0.1).ok_or_else(|| Error::EdgeFit {
            reason: "no 10% crossing".into(),
        })?;
        let x90 = crossing(&q, 0.9).ok_or_else(|| Error::EdgeFit {
            reason: "no 90% crossing".into(),
        })?;
        (x90 - x10).abs()
    };
    Ok(rise_px * scale_um_per_px)
}

/// First linear-interpolated crossing of `level` by an ascending profile.
fn crossing(q: &[f64], level: f64) -> Option<f64> {
    for i in 1..q.len() {
        if q[i - 1] < level && q[i] >= level {
            let t = (level - q[i - 1]) / (q[i] - q[i - 1]);
            return Some((i - 1) as f64 + t);
        }
    }
    None
}

/// Inverse of the standard normal CDF, Acklam's rational approximation
/// (relative error below 1.2e-9 everywhere).
fn probit(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Default parameters of the built-in evaluation scenario. The optics follow
/// a system with a ~120 um depth of field scanned at 3 um per pixel, imaged
/// at two focal planes 120 um apart.
pub mod defaults {
    pub const WIDTH: usize = 600;
    pub const HEIGHT: usize = 120;
    pub const BAR_PERIOD: usize = 8;
    pub const DEPTH_MIN_UM: f64 = -90.0;
    pub const DEPTH_MAX_UM: f64 = 210.0;
    pub const FOCAL_PLANES_UM: [f64; 2] = [0.0, 120.0];
    pub const BEAM_WAIST_UM: f64 = 4.2;
    pub const RAYLEIGH_UM: f64 = 60.0;
    pub const MAX_SIGMA_UM: f64 = 30.0;
    pub const SCALE_UM_PER_PX: f64 = 3.0;
    pub const TEXTURE_AMPLITUDE: f64 = 0.5;
    pub(super) const NOISE_SEED: u64 = 0x5eed_0f0c_a11b_0a7a;
}

/// SplitMix64 finalizer; good enough to decorrelate lattice coordinates.
fn hash_mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn lattice_value(seed: u64, cx: u64, cy: u64, octave: u64) -> f64 {
    let h = hash_mix(seed ^ hash_mix(cx ^ hash_mix(cy ^ hash_mix(octave))));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Deterministic multi-octave value noise in `[0, 1]`, bilinear between
/// lattice samples at 4, 8 and 16 px cells.
fn value_noise(seed: u64, width: usize, height: usize) -> Vec<f64> {
    let octaves: [(u64, f64); 3] = [(4, 0.5), (8, 0.33), (16, 0.17)];
    let mut out = vec![0.0; width * height];
    for (octave_idx, &(cell, amplitude)) in octaves.iter().enumerate() {
        for y in 0..height {
            let fy = y as f64 / cell as f64;
            let (cy, ty) = (fy.floor() as u64, fy.fract());
            for x in 0..width {
                let fx = x as f64 / cell as f64;
                let (cx, tx) = (fx.floor() as u64, fx.fract());
                let v00 = lattice_value(seed, cx, cy, octave_idx as u64);
                let v10 = lattice_value(seed, cx + 1, cy, octave_idx as u64);
                let v01 = lattice_value(seed, cx, cy + 1, octave_idx as u64);
                let v11 = lattice_value(seed, cx + 1, cy + 1, octave_idx as u64);
                let v = v00 * (1.0 - tx) * (1.0 - ty)
                    + v10 * tx * (1.0 - ty)
                    + v01 * (1.0 - tx) * ty
                    + v11 * tx * ty;
                out[y * width + x] += amplitude * v;
            }
        }
    }
    // Rescale to the full unit range.
    let min = out.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (max - min).max(1e-12);
    for v in &mut out {
        *v = (*v - min) / span;
    }
    out
}

/// Bar target blended with deterministic texture, plus its linear depth map.
/// `texture_amplitude` in `[0, 1]` sets the texture share of the dynamic
/// range.
pub fn textured_bar_scene(
    width: usize,
    height: usize,
    bar_period: usize,
    depth_range: (f64, f64),
    texture_amplitude: f64,
) -> Result<(Image, Image)> {
    if !(0.0..=1.0).contains(&texture_amplitude) {
        return Err(Error::InvalidSpec {
            field: "texture_amplitude",
            reason: format!("must lie in [0, 1], got {texture_amplitude}"),
        });
    }
    let (bars, depth) = tilted_bar_target(width, height, bar_period, depth_range)?;
    let noise = value_noise(defaults::NOISE_SEED, width, height);
    let gt = Image::from_fn(width, height, |x, y| {
        let i = y * width + x;
        (1.0 - texture_amplitude) * bars.pixel(x, y) + texture_amplitude * noise[i]
    })?;
    Ok((gt, depth))
}

/// The built-in two-plane evaluation scenario with the [`defaults`]
/// parameters.
pub fn default_scene() -> FocalStackSpec {
    let (ground_truth, depth_map) = textured_bar_scene(
        defaults::WIDTH,
        defaults::HEIGHT,
        defaults::BAR_PERIOD,
        (defaults::DEPTH_MIN_UM, defaults::DEPTH_MAX_UM),
        defaults::TEXTURE_AMPLITUDE,
    )
    .expect("default scene parameters are valid");
    FocalStackSpec {
        ground_truth,
        depth_map,
        focal_planes: defaults::FOCAL_PLANES_UM.to_vec(),
        beam_waist_um: defaults::BEAM_WAIST_UM,
        rayleigh_um: defaults::RAYLEIGH_UM,
        max_sigma_um: defaults::MAX_SIGMA_UM,
        scale_um_per_px: defaults::SCALE_UM_PER_PX,
    }
}
