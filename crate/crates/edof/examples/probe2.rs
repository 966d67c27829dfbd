//! Deeper probe: contrast profiles and edge shapes (scratch, not shipped).

use edof::defocus::*;
use edof::fusion::{fuse_stack, FusionConfig};
use edof::image::{normalize, Image};
use edof::wavelet::WaveletSpec;

fn contrast_profile(img: &Image, period: usize) -> Vec<f64> {
    let (w, h) = img.dims();
    let col_mean: Vec<f64> = (0..w)
        .map(|x| (0..h).map(|y| img.pixel(x, y)).sum::<f64>() / h as f64)
        .collect();
    (0..w - period + 1)
        .map(|x0| {
            let s = &col_mean[x0..x0 + period];
            let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
            if max + min > 0.0 {
                (max - min) / (max + min)
            } else {
                0.0
            }
        })
        .collect()
}

fn main() {
    let scene = default_scene();
    let stack = generate_stack(&scene).unwrap();
    let cfg = FusionConfig::new(WaveletSpec::haar(), 3, stack.len());
    let fused = fuse_stack(&stack, &cfg).unwrap();
    let fused_norm = normalize(&fused.image);

    let c0 = contrast_profile(&normalize(&stack[0]), 8);
    let cf = contrast_profile(&fused_norm, 8);
    println!("col depth    c_src0   c_fused");
    for x in (0..c0.len()).step_by(20) {
        let depth = scene.depth_map.pixel(x, 0);
        println!("{x:4} {depth:7.1} {:8.4} {:8.4}", c0[x], cf[x]);
    }
    let peak0 = c0.iter().cloned().fold(0.0, f64::max);
    let peakf = cf.iter().cloned().fold(0.0, f64::max);
    println!("peaks: src0 {peak0:.4} fused {peakf:.4}");

    // edge profiles
    let (gt, depth) = step_edge_target(96, 32, scene.focal_planes[0]).unwrap();
    let espec = FocalStackSpec {
        ground_truth: gt,
        depth_map: depth,
        ..scene.clone()
    };
    let estack = generate_stack(&espec).unwrap();
    for levels in [3usize, 4] {
        for spec in [WaveletSpec::haar(), WaveletSpec::db4()] {
            let cfg = FusionConfig::new(spec.clone(), levels, 2);
            let ef = fuse_stack(&estack, &cfg).unwrap();
            let efn = normalize(&ef.image);
            let rs = measure_lateral_resolution(&estack[0], 16, 3.0).unwrap();
            let rf = measure_lateral_resolution(&efn, 16, 3.0).unwrap();
            println!(
                "levels {levels} {}: single {rs:.2} fused {rf:.2} ratio {:.3}",
                spec.family(),
                rf / rs
            );
        }
    }
    println!("single edge profile (row 16):");
    let p: Vec<String> = (38..58).map(|x| format!("{:.3}", estack[0].pixel(x, 16))).collect();
    println!("src0:  {}", p.join(" "));
    let cfg = FusionConfig::new(WaveletSpec::haar(), 3, 2);
    let ef = normalize(&fuse_stack(&estack, &cfg).unwrap().image);
    let p: Vec<String> = (38..58).map(|x| format!("{:.3}", ef.pixel(x, 16))).collect();
    println!("fused: {}", p.join(" "));
    let p: Vec<String> = (38..58).map(|x| format!("{:.3}", estack[1].pixel(x, 16))).collect();
    println!("src1:  {}", p.join(" "));
}
