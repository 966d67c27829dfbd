//! Quality metrics used to compare fused images against their sources.
//!
//! All metrics are computed on the 8-bit quantized grid in gray-level units,
//! which is what makes values comparable with the fusion literature: entropy
//! of a few bits, standard deviations of tens of gray levels. Gradient-style
//! metrics are evaluated on interior pixels only, so no boundary values have
//! to be invented.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::image::{quantize_u8, Image};

/// Shannon entropy in bits of the 256-bin gray-level histogram.
///
/// A constant image scores 0; a histogram that occupies every bin equally
/// scores 8.
pub fn entropy(img: &Image) -> Result<f64> {
    let gray = quantize_u8(img)?;
    let mut counts = [0u64; 256];
    for g in gray {
        counts[g as usize] += 1;
    }
    let total = (img.width() * img.height()) as f64;
    let mut bits = 0.0;
    for c in counts {
        if c > 0 {
            let p = c as f64 / total;
            bits -= p * p.log2();
        }
    }
    Ok(bits)
}

/// Mean forward-difference gradient magnitude, the conventional sharpness
/// measure: `sqrt((dx^2 + dy^2) / 2)` averaged over the positions that have
/// both differences.
pub fn average_gradient(img: &Image) -> Result<f64> {
    if img.width() < 2 || img.height() < 2 {
        return Err(Error::TooSmall {
            metric: "average gradient",
            min_width: 2,
            min_height: 2,
        });
    }
    let gray = quantize_u8(img)?;
    let (w, h) = img.dims();
    let at = |x: usize, y: usize| gray[y * w + x] as f64;
    let mut sum = 0.0;
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            let dx = at(x + 1, y) - at(x, y);
            let dy = at(x, y + 1) - at(x, y);
            sum += ((dx * dx + dy * dy) / 2.0).sqrt();
        }
    }
    Ok(sum / ((w - 1) * (h - 1)) as f64)
}

/// Population standard deviation of the gray levels.
pub fn std_dev(img: &Image) -> Result<f64> {
    let gray = quantize_u8(img)?;
    let n = gray.len() as f64;
    let mean = gray.iter().map(|&g| g as f64).sum::<f64>() / n;
    let var = gray
        .iter()
        .map(|&g| {
            let d = g as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(var.sqrt())
}

/// Mean Sobel gradient magnitude over interior pixels.
pub fn edge_strength(img: &Image) -> Result<f64> {
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::TooSmall {
            metric: "edge strength",
            min_width: 3,
            min_height: 3,
        });
    }
    let gray = quantize_u8(img)?;
    let (w, h) = img.dims();
    let at = |x: usize, y: usize| gray[y * w + x] as f64;
    let mut sum = 0.0;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = at(x + 1, y - 1) - at(x - 1, y - 1)
                + 2.0 * (at(x + 1, y) - at(x - 1, y))
                + at(x + 1, y + 1) - at(x - 1, y + 1);
            let gy = at(x - 1, y + 1) - at(x - 1, y - 1)
                + 2.0 * (at(x, y + 1) - at(x, y - 1))
                + at(x + 1, y + 1) - at(x + 1, y - 1);
            sum += (gx * gx + gy * gy).sqrt();
        }
    }
    Ok(sum / ((w - 2) * (h - 2)) as f64)
}

/// Mean square error between the 8-bit grids, in squared gray levels.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            a: a.dims(),
            b: b.dims(),
        });
    }
    let ga = quantize_u8(a)?;
    let gb = quantize_u8(b)?;
    let sum: f64 = ga
        .iter()
        .zip(&gb)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / ga.len() as f64)
}

/// One table row: the four fusion metrics, plus MSE against a reference when
/// one was supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub label: String,
    pub entropy: f64,
    pub average_gradient: f64,
    pub std_dev: f64,
    pub edge_strength: f64,
    pub mse: Option<f64>,
}

/// Per-image metric table, one row per source and one for the fused image.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
}

/// Computes the four metrics for one image.
pub fn measure(label: &str, img: &Image) -> Result<MetricsRow> {
    Ok(MetricsRow {
        label: label.to_string(),
        entropy: entropy(img)?,
        average_gradient: average_gradient(img)?,
        std_dev: std_dev(img)?,
        edge_strength: edge_strength(img)?,
        mse: None,
    })
}

/// Builds the standard comparison table: sources in the given order, fused
/// image last. `labels` must name every source plus the fused image.
pub fn report(sources: &[Image], fused: &Image, labels: &[&str]) -> Result<MetricsReport> {
    if labels.len() != sources.len() + 1 {
        return Err(Error::ConfigMismatch {
            what: "labels",
            reason: format!(
                "need {} labels ({} sources + fused), got {}",
                sources.len() + 1,
                sources.len(),
                labels.len()
            ),
        });
    }
    for img in sources {
        if img.dims() != fused.dims() {
            return Err(Error::DimensionMismatch {
                a: img.dims(),
                b: fused.dims(),
            });
        }
    }
    let mut rows = Vec::with_capacity(labels.len());
    for (img, label) in sources.iter().zip(labels) {
        rows.push(measure(label, img)?);
    }
    rows.push(measure(labels[sources.len()], fused)?);
    Ok(MetricsReport { rows })
}

impl MetricsReport {
    const COLUMNS: [&'static str; 4] = ["entropy", "avg_gradient", "std_dev", "edge_strength"];

    fn has_mse(&self) -> bool {
        self.rows.iter().any(|r| r.mse.is_some())
    }

    /// Plain-text aligned table, 4 decimal places.
    pub fn to_text_table(&self) -> String {
        let label_w = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .chain(std::iter::once("image".len()))
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        write!(out, "{:label_w$}", "image").unwrap();
        for col in Self::COLUMNS {
            write!(out, "  {col:>13}").unwrap();
        }
        if self.has_mse() {
            write!(out, "  {:>13}", "mse").unwrap();
        }
        out.push('\n');
        for row in &self.rows {
            write!(out, "{:label_w$}", row.label).unwrap();
            for v in [row.entropy, row.average_gradient, row.std_dev, row.edge_strength] {
                write!(out, "  {v:>13.4}").unwrap();
            }
            if self.has_mse() {
                match row.mse {
                    Some(v) => write!(out, "  {v:>13.4}").unwrap(),
                    None => write!(out, "  {:>13}", "-").unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }

    /// CSV rendering with the same 4-decimal precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,entropy,avg_gradient,std_dev,edge_strength");
        if self.has_mse() {
            out.push_str(",mse");
        }
        out.push('\n');
        for row in &self.rows {
            write!(
                out,
                "{},{:.4},{:.4},{:.4},{:.4}",
                row.label, row.entropy, row.average_gradient, row.std_dev, row.edge_strength
            )
            .unwrap();
            if self.has_mse() {
                match row.mse {
                    Some(v) => write!(out, ",{v:.4}").unwrap(),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_closed_forms() {
        let constant = Image::constant(8, 8, 0.4).unwrap();
        assert_eq!(entropy(&constant).unwrap(), 0.0);

        let checker = Image::from_fn(8, 8, |x, y| ((x + y) % 2) as f64).unwrap();
        assert!((entropy(&checker).unwrap() - 1.0).abs() < 1e-12);

        // 256 pixels, one per gray level: a uniform histogram.
        let uniform = Image::from_fn(16, 16, |x, y| (y * 16 + x) as f64 / 255.0).unwrap();
        assert!((entropy(&uniform).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_bounded_by_eight_bits() {
        let img = Image::from_fn(33, 19, |x, y| {
            0.5 + 0.5 * ((x as f64 * 0.37 + y as f64 * 0.73).sin())
        })
        .unwrap();
        let e = entropy(&img).unwrap();
        assert!(e >= 0.0 && e <= 8.0);
    }

    #[test]
    fn average_gradient_closed_forms() {
        let constant = Image::constant(4, 4, 0.25).unwrap();
        assert_eq!(average_gradient(&constant).unwrap(), 0.0);

        // Horizontal ramp, one gray level per column.
        let ramp = Image::from_fn(10, 6, |x, _| x as f64 / 255.0).unwrap();
        let want = (0.5_f64).sqrt();
        assert!((average_gradient(&ramp).unwrap() - want).abs() < 1e-12);

        let tiny = Image::new(2, 2, vec![0.0, 1.0 / 255.0, 0.0, 1.0 / 255.0]).unwrap();
        assert!((average_gradient(&tiny).unwrap() - want).abs() < 1e-12);

        let thin = Image::constant(1, 5, 0.0).unwrap();
        assert!(matches!(
            average_gradient(&thin),
            Err(Error::TooSmall { .. })
        ));
    }

    #[test]
    fn std_dev_closed_forms() {
        let constant = Image::constant(5, 5, 0.7).unwrap();
        assert_eq!(std_dev(&constant).unwrap(), 0.0);

        let two = Image::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(std_dev(&two).unwrap(), 127.5);

        let four = Image::new(4, 1, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(std_dev(&four).unwrap(), 127.5);
    }

    #[test]
    fn edge_strength_closed_forms() {
        let constant = Image::constant(5, 5, 0.3).unwrap();
        assert_eq!(edge_strength(&constant).unwrap(), 0.0);

        // Ramp: Gx = 8 at every interior pixel, Gy = 0.
        let ramp = Image::from_fn(10, 6, |x, _| x as f64 / 255.0).unwrap();
        assert!((edge_strength(&ramp).unwrap() - 8.0).abs() < 1e-12);

        let small = Image::constant(2, 4, 0.0).unwrap();
        assert!(matches!(edge_strength(&small), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn sobel_step_edge_response() {
        // Vertical step 0 | 255 in a 3-row image: the interior pixel right at
        // the step sees Gx = 4 * 255 = 1020.
        let img = Image::from_fn(6, 3, |x, _| if x < 3 { 0.0 } else { 1.0 }).unwrap();
        let gray = quantize_u8(&img).unwrap();
        let w = 6;
        let at = |x: usize, y: usize| gray[y * w + x] as f64;
        let (x, y) = (2, 1);
        let gx = at(x + 1, y - 1) - at(x - 1, y - 1)
            + 2.0 * (at(x + 1, y) - at(x - 1, y))
            + at(x + 1, y + 1) - at(x - 1, y + 1);
        assert_eq!(gx, 1020.0);
    }

    #[test]
    fn mse_closed_forms() {
        let x = Image::from_fn(4, 4, |a, b| ((a + b) % 3) as f64 / 2.0).unwrap();
        assert_eq!(mse(&x, &x).unwrap(), 0.0);

        let a = Image::new(1, 1, vec![0.0]).unwrap();
        let b = Image::new(1, 1, vec![2.0 / 255.0]).unwrap();
        assert_eq!(mse(&a, &b).unwrap(), 4.0);

        let p = Image::new(2, 1, vec![0.0, 1.0]).unwrap();
        let q = Image::new(2, 1, vec![1.0, 0.0]).unwrap();
        assert_eq!(mse(&p, &q).unwrap(), 65025.0);
        assert_eq!(mse(&p, &q).unwrap(), mse(&q, &p).unwrap());

        let wide = Image::constant(3, 1, 0.0).unwrap();
        assert!(matches!(
            mse(&p, &wide),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn metrics_are_transpose_invariant() {
        let img = Image::from_fn(9, 13, |x, y| {
            0.5 + 0.4 * ((x as f64 * 1.1).sin() * (y as f64 * 0.6).cos())
        })
        .unwrap();
        let t = Image::from_fn(13, 9, |x, y| img.pixel(y, x)).unwrap();
        assert!((entropy(&img).unwrap() - entropy(&t).unwrap()).abs() < 1e-12);
        assert!((std_dev(&img).unwrap() - std_dev(&t).unwrap()).abs() < 1e-12);
        assert!(
            (average_gradient(&img).unwrap() - average_gradient(&t).unwrap()).abs() < 1e-12
        );
        assert!((edge_strength(&img).unwrap() - edge_strength(&t).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn report_layout() {
        let a = Image::constant(8, 8, 0.2).unwrap();
        let b = Image::constant(8, 8, 0.8).unwrap();
        let fused = Image::constant(8, 8, 0.5).unwrap();
        let rep = report(&[a.clone(), b], &fused, &["src1", "src2", "fused"]).unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert_eq!(rep.rows[2].label, "fused");
        for row in &rep.rows {
            assert_eq!(row.entropy, 0.0);
            assert_eq!(row.average_gradient, 0.0);
            assert_eq!(row.std_dev, 0.0);
            assert_eq!(row.edge_strength, 0.0);
        }

        assert!(matches!(
            report(&[a], &fused, &["one", "two", "three"]),
            Err(Error::ConfigMismatch { .. })
        ));
    }

    #[test]
    fn identical_source_and_fused_rows_match() {
        let img = Image::from_fn(12, 12, |x, y| ((x * y) % 7) as f64 / 6.0).unwrap();
        let rep = report(std::slice::from_ref(&img), &img, &["src", "fused"]).unwrap();
        assert_eq!(rep.rows[0].entropy, rep.rows[1].entropy);
        assert_eq!(rep.rows[0].average_gradient, rep.rows[1].average_gradient);
        assert_eq!(rep.rows[0].std_dev, rep.rows[1].std_dev);
        assert_eq!(rep.rows[0].edge_strength, rep.rows[1].edge_strength);
    }

    #[test]
    fn csv_has_four_decimals_and_reparses() {
        let img = Image::from_fn(8, 8, |x, y| ((x + 2 * y) % 5) as f64 / 4.0).unwrap();
        let rep = report(std::slice::from_ref(&img), &img, &["s", "f"]).unwrap();
        let csv = rep.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "label,entropy,avg_gradient,std_dev,edge_strength");
        for (line, row) in lines.zip(&rep.rows) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 5);
            assert_eq!(fields[0], row.label);
            for (field, value) in fields[1..].iter().zip([
                row.entropy,
                row.average_gradient,
                row.std_dev,
                row.edge_strength,
            ]) {
                let parsed: f64 = field.parse().unwrap();
                assert!((parsed - value).abs() <= 0.5e-4);
                assert_eq!(field.split('.').nth(1).map(str::len), Some(4));
            }
        }
    }
}
