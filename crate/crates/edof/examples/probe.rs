//! Scratch probe for tuning the default scenario (not shipped; deleted before release).

use edof::defocus::*;
use edof::fusion::{fuse_stack, FusionConfig};
use edof::image::normalize;
use edof::metrics;
use edof::wavelet::WaveletSpec;

fn main() {
    let scene = default_scene();
    let stack = generate_stack(&scene).unwrap();
    let cfg = FusionConfig::new(WaveletSpec::haar(), 3, stack.len());
    let fused = fuse_stack(&stack, &cfg).unwrap();
    let fused_norm = normalize(&fused.image);

    println!("== metrics ==");
    let rep = metrics::report(&stack, &fused_norm, &["src0", "src1", "fused"]).unwrap();
    print!("{}", rep.to_text_table());

    println!("== mse vs ground truth ==");
    for (i, s) in stack.iter().enumerate() {
        println!("src{i}: {}", metrics::mse(s, &scene.ground_truth).unwrap());
    }
    println!(
        "fused: {}",
        metrics::mse(&fused_norm, &scene.ground_truth).unwrap()
    );

    println!("== dof ==");
    let d0 = measure_dof(&normalize(&stack[0]), &scene.depth_map, defaults::BAR_PERIOD).unwrap();
    let d1 = measure_dof(&normalize(&stack[1]), &scene.depth_map, defaults::BAR_PERIOD).unwrap();
    let df = measure_dof(&fused_norm, &scene.depth_map, defaults::BAR_PERIOD).unwrap();
    println!("single0 {d0:.1} single1 {d1:.1} fused {df:.1} ratio {:.3}", df / d0);

    println!("== lateral resolution ==");
    let (gt, depth) = step_edge_target(96, 32, scene.focal_planes[0]).unwrap();
    let espec = FocalStackSpec {
        ground_truth: gt,
        depth_map: depth,
        ..scene.clone()
    };
    let estack = generate_stack(&espec).unwrap();
    let ecfg = FusionConfig::new(WaveletSpec::haar(), 3, estack.len());
    let efused = fuse_stack(&estack, &ecfg).unwrap();
    let row = 16;
    let rs = measure_lateral_resolution(&estack[0], row, espec.scale_um_per_px).unwrap();
    let rf =
        measure_lateral_resolution(&normalize(&efused.image), row, espec.scale_um_per_px).unwrap();
    println!("single {rs:.3} um, fused {rf:.3} um, ratio {:.4}", rf / rs);

    // also with db2/db4
    for spec in [WaveletSpec::db2(), WaveletSpec::db4()] {
        let cfg = FusionConfig::new(spec.clone(), 3, stack.len());
        let f = normalize(&fuse_stack(&stack, &cfg).unwrap().image);
        let d = measure_dof(&f, &scene.depth_map, defaults::BAR_PERIOD).unwrap();
        println!("{}: fused dof {d:.1} ratio {:.3}", spec.family(), d / d0);
    }
}
