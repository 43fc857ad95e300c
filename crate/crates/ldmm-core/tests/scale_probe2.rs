use ldmm_core::datagen::*;
use ldmm_core::*;
use std::time::Instant;

fn run_case(name: &str, cube: &DataCube, mask: &SampleMask, config: &LdmmConfig) -> (bool, f64, f64) {
    let b = cube.restrict(mask).unwrap();
    let f0 = ldmm::initialize(&b, mask, &config.init).unwrap();
    let psnr0 = error_norms(cube, &f0).map(|e| e.psnr).unwrap_or(f64::NAN);
    let t = Instant::now();
    let (out, report) = reconstruct(&b, mask, config, None).unwrap();
    let dt = t.elapsed().as_secs_f64();
    let psnr = error_norms(cube, &out).map(|e| e.psnr).unwrap_or(f64::NAN);
    let last = report.iterations.last().map(|r| r.rel_change).unwrap_or(0.0);
    println!(
        "{name}: {psnr0:.2} -> {psnr:.2} dB | iters {} conv {} last {:.1e} | {dt:.0}s",
        report.iterations.len(), report.converged, last
    );
    (report.converged, psnr0, psnr)
}

#[test]
#[ignore]
fn probe_variants() {
    let dims = Dims::d2(128, 128);
    let seed = 0u64;
    let mask = random_mask(dims, 0.1, 7).unwrap();
    let config = LdmmConfig::new(PatchShape::d2(6, 6));

    for (mf, modes) in [(2usize, 6usize), (3, 8)] {
        let cube = smooth_field_with(dims, seed, &SmoothConfig { max_freq: mf, modes, ..Default::default() });
        run_case(&format!("smooth mf{mf} m{modes}"), &cube, &mask, &config);
    }
    for (minc, maxc, pv) in [(2usize, 4usize, 2.0f64), (2, 3, 1.5), (3, 6, 3.0)] {
        let cube = oscillatory_field_with(dims, seed, &OscillatoryConfig {
            min_cycles: minc, max_cycles: maxc, phase_variation: pv, ..Default::default()
        });
        run_case(&format!("osc c{minc}-{maxc} pv{pv}"), &cube, &mask, &config);
    }
    for jump in [1.0f64, 2.0] {
        let cube = shock_field_with(dims, seed, &ShockConfig { jump });
        run_case(&format!("shock j{jump}"), &cube, &mask, &config);
    }
}
