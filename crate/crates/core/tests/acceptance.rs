//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use hdrinterp::dataset::{simulate_alternating, ExposureProgram, SceneElement, SceneSpec};
use hdrinterp::interp::{interpolate, BlendBackend, FlowBackend, InterpolationBackend};
use hdrinterp::io::{decode_pfm, decode_pnm, encode_pfm, encode_pnm, write_pfm, Endianness, Manifest};
use hdrinterp::merge::{convex_hull_violations, merge_hdr, SATURATION_LEVEL};
use hdrinterp::metrics::{mu_psnr, psnr_tonemapped};
use hdrinterp::radiometry::{ldr_to_radiance, radiance_to_ldr};
use hdrinterp::scheduler::{complete_exposure_streams, reconstruct_standard, upscale_fps, Timestamp};
use hdrinterp::tonemap::MuLawParams;
use hdrinterp::{BitDepth, Crf, ExposureTag, LdrFrame, PixelBuffer, RadianceFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn high_ldr(r: &RadianceFrame, dt: f64) -> LdrFrame {
    radiance_to_ldr(r, dt, Crf::default(), BitDepth::Unquantized, ExposureTag::High).unwrap()
}

fn radiometric_round_trip() -> Outcome {
    let start = Instant::now();
    let crf = Crf::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 10_000;
    let data: Vec<f64> = (0..n * 3).map(|_| rng.random_range(1e-6..1.0 - 1e-9)).collect();
    let mut worst = 0.0f64;
    for dt in [1.0 / 30.0, 0.004, 0.25, 1.0, 3.0] {
        let v = LdrFrame::new(PixelBuffer::new(n, 1, data.clone()).unwrap(), dt, ExposureTag::High, BitDepth::Unquantized)
            .unwrap();
        let back = radiance_to_ldr(&ldr_to_radiance(&v, crf).unwrap(), dt, crf, BitDepth::Unquantized, ExposureTag::High)
            .unwrap();
        worst = worst.max(back.pixels().max_abs_diff(v.pixels()).unwrap());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-6 && within(elapsed, Duration::from_secs(1)),
        format!("max |v' - v| = {worst:.3e} over 5x{} samples (<= 1e-6), {elapsed:.2?} (< 1 s)", n * 3),
    )
}

fn mu_law_exactness() -> Outcome {
    let t = MuLawParams::default();
    let t0 = t.apply(0.0);
    let t1 = t.apply(1.0);
    let tp1 = t.apply(0.1);
    let grid: Vec<f64> = (0..1000).map(|i| t.apply(i as f64 / 999.0)).collect();
    let monotone = grid.windows(2).all(|w| w[1] > w[0]);
    let pass = t0 == 0.0 && (t1 - 1.0).abs() <= f64::EPSILON && (tp1 - 0.729_872).abs() <= 1e-6 && monotone;
    outcome(
        pass,
        format!("T(0)={t0}, T(1)={t1}, T(0.1)={tp1:.7} (0.729872 +/- 1e-6), strictly increasing on 1000 points: {monotone}"),
    )
}

fn static_spec(width: usize, height: usize, frames: usize) -> SceneSpec {
    let (w, h) = (width as f64, height as f64);
    SceneSpec {
        width,
        height,
        duration: frames,
        background: [0.01, 0.012, 0.015],
        elements: vec![
            SceneElement::LinearRamp {
                origin: [0.0, 0.0],
                direction: [1.0, 0.3],
                length: w,
                peak: [0.4, 0.3, 0.2],
                velocity: [0.0, 0.0],
            },
            SceneElement::GaussianBlob {
                center: [0.3 * w, 0.4 * h],
                sigma: 0.08 * w,
                peak: [6.0, 5.0, 3.0],
                velocity: [0.0, 0.0],
            },
            SceneElement::ConstantPlate {
                top_left: [0.55 * w, 0.5 * h],
                size: [0.3 * w, 0.25 * h],
                radiance: [0.05, 0.2, 0.6],
                velocity: [0.0, 0.0],
            },
        ],
    }
}

fn identity_and_statics() -> Outcome {
    let start = Instant::now();
    let crf = Crf::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = LdrFrame::new(
        PixelBuffer::from_fn(64, 48, |_, _, _| rng.random_range(0.0..=1.0)),
        0.02,
        ExposureTag::Low,
        BitDepth::Unquantized,
    )
    .unwrap();
    let backends: [&dyn InterpolationBackend; 2] = [&BlendBackend, &FlowBackend::default()];
    let identity = backends.iter().all(|b| {
        [0.25, 0.5, 0.75]
            .iter()
            .all(|&tau| interpolate(&a, &a, tau, *b).unwrap().pixels() == a.pixels())
    });

    let spec = static_spec(256, 256, 9);
    let gt = spec.render_all().unwrap();
    let program = ExposureProgram::new(1.0, 3, ExposureTag::High).unwrap();
    let sim = simulate_alternating(&gt, &program, BitDepth::Sixteen, crf, None).unwrap();
    let out = reconstruct_standard(&sim.sequence, &FlowBackend::default(), crf).unwrap();

    let q = BitDepth::Sixteen.quantization_bound();
    let gamma = crf.gamma();
    let bound = |v: f64, dt: f64| ((v + q).powf(gamma) - v.powf(gamma)) / dt;
    let (mut checked, mut violations, mut psnr_sum) = (0usize, 0usize, 0.0);
    for f in &out {
        let truth = &gt[f.timestamp.numerator() as usize];
        psnr_sum += mu_psnr(&f.radiance, truth, MuLawParams::default()).unwrap();
        for (got, h) in f.radiance.pixels().data().iter().zip(truth.pixels().data()) {
            let vh = (h * program.high_exposure()).powf(1.0 / gamma);
            let vl = (h * program.low_exposure()).powf(1.0 / gamma);
            if vh >= 1.0 || vl >= 1.0 {
                continue;
            }
            checked += 1;
            let tol = bound(vh, program.high_exposure()).max(bound(vl, program.low_exposure())) * (1.0 + 1e-9);
            if (got - h).abs() > tol {
                violations += 1;
            }
        }
    }
    let mean_psnr = psnr_sum / out.len() as f64;
    let elapsed = start.elapsed();
    outcome(
        identity && violations == 0 && checked > 0 && mean_psnr >= 40.0 && within(elapsed, Duration::from_secs(30)),
        format!(
            "bit-exact identity (blend, flow): {identity}; {violations} of {checked} unclipped samples outside the 16-bit bound; \
             mean mu-PSNR {mean_psnr:.2} dB (>= 40) over {} frames; {elapsed:.2?} (< 30 s)",
            out.len()
        ),
    )
}

fn motion_oracle() -> Outcome {
    let spec = SceneSpec {
        width: 256,
        height: 256,
        duration: 2,
        background: [0.05, 0.05, 0.05],
        elements: vec![SceneElement::GaussianBlob {
            center: [100.0, 128.0],
            sigma: 6.0,
            peak: [0.8, 0.6, 0.4],
            velocity: [8.0, 0.0],
        }],
    };
    let frame = |t: f64| high_ldr(&hdrinterp::dataset::procedural_scene(&spec, t).unwrap(), 1.0);
    let (a, b, mid) = (frame(0.0), frame(1.0), frame(0.5));
    let flow = interpolate(&a, &b, 0.5, &FlowBackend::default()).unwrap();
    let blend = interpolate(&a, &b, 0.5, &BlendBackend).unwrap();
    let p_flow = psnr_tonemapped(flow.pixels(), mid.pixels()).unwrap();
    let p_blend = psnr_tonemapped(blend.pixels(), mid.pixels()).unwrap();
    outcome(
        p_flow >= 35.0 && p_flow - p_blend >= 5.0,
        format!("flow {p_flow:.2} dB (>= 35), blend {p_blend:.2} dB, margin {:.2} dB (>= 5)", p_flow - p_blend),
    )
}

fn upscaling_count_and_constancy() -> Outcome {
    let crf = Crf::default();
    let spec = static_spec(32, 32, 8);
    let gt = spec.render_all().unwrap();
    let program = ExposureProgram::new(0.5, 2, ExposureTag::High).unwrap();
    let sim = simulate_alternating(&gt, &program, BitDepth::Eight, crf, None).unwrap();
    let backend = FlowBackend::default();
    let streams = complete_exposure_streams(&sim.sequence, &backend).unwrap();
    let out = upscale_fps(&streams, 3, &backend, crf).unwrap();
    let expected: Vec<Timestamp> = (0..41).map(|j| Timestamp::new(8 + j, 8).unwrap()).collect();
    let times: Vec<Timestamp> = out.iter().map(|f| f.timestamp).collect();
    let max_step = out
        .windows(2)
        .map(|w| w[1].radiance.pixels().max_abs_diff(w[0].radiance.pixels()).unwrap())
        .fold(0.0, f64::max);
    outcome(
        out.len() == 41 && times == expected && max_step <= 1e-5,
        format!(
            "{} frames (41), timestamps 1..6 in steps of 1/8: {}, max frame-to-frame difference {max_step:.3e} (<= 1e-5)",
            out.len(),
            times == expected
        ),
    )
}

fn moving_spec(size: usize, frames: usize, speed: f64) -> SceneSpec {
    let c = size as f64 / 2.0;
    let v = [speed, 0.5 * speed];
    SceneSpec {
        width: size,
        height: size,
        duration: frames,
        background: [0.02, 0.02, 0.02],
        elements: vec![
            SceneElement::GaussianBlob {
                center: [c - 40.0, c - 10.0],
                sigma: 6.0,
                peak: [4.0, 3.0, 2.0],
                velocity: v,
            },
            SceneElement::GaussianBlob {
                center: [c - 30.0, c + 25.0],
                sigma: 9.0,
                peak: [0.3, 0.5, 0.8],
                velocity: v,
            },
            SceneElement::ConstantPlate {
                top_left: [c - 60.0, c - 50.0],
                size: [20.0, 14.0],
                radiance: [0.6, 0.6, 0.2],
                velocity: v,
            },
        ],
    }
}

fn fps_degradation() -> Outcome {
    let start = Instant::now();
    let crf = Crf::default();
    // 8·4 + 1 frames so every subsampling factor lands on the last frame
    let gt = moving_spec(128, 33, 2.0).render_all().unwrap();
    let program = ExposureProgram::new(1.0, 2, ExposureTag::High).unwrap();
    let backend = FlowBackend::default();
    let mut means = Vec::new();
    for s in [1usize, 2, 4, 8] {
        let captured: Vec<RadianceFrame> = gt.iter().step_by(s).cloned().collect();
        let sim = simulate_alternating(&captured, &program, BitDepth::Eight, crf, None).unwrap();
        let streams = complete_exposure_streams(&sim.sequence, &backend).unwrap();
        let out = upscale_fps(&streams, s.trailing_zeros(), &backend, crf).unwrap();
        // score the original integer frames every factor covers: 8..=24
        let scores: Vec<f64> = out
            .iter()
            .filter_map(|f| {
                let t = f.timestamp.as_f64() * s as f64;
                (t.fract() == 0.0 && (8.0..=24.0).contains(&t))
                    .then(|| mu_psnr(&f.radiance, &gt[t as usize], MuLawParams::default()).unwrap())
            })
            .collect();
        assert_eq!(scores.len(), 17);
        means.push(scores.iter().sum::<f64>() / scores.len() as f64);
    }
    let drops: Vec<f64> = means.windows(2).map(|w| w[0] - w[1]).collect();
    let elapsed = start.elapsed();
    outcome(
        drops.iter().all(|&d| d >= 0.2) && within(elapsed, Duration::from_secs(300)),
        format!(
            "mean mu-PSNR at 1x/2x/4x/8x = {:.2}/{:.2}/{:.2}/{:.2} dB, drops {:.2}/{:.2}/{:.2} (each >= 0.2); {elapsed:.2?} (< 5 min)",
            means[0], means[1], means[2], means[3], drops[0], drops[1], drops[2]
        ),
    )
}

fn merge_saturation_recovery() -> Outcome {
    let crf = Crf::default();
    let mut worst = 0.0f64;
    let mut samples = 0usize;
    for stops in 1..=3u32 {
        let dt_low = 1.0 / f64::from(1u32 << stops);
        // physically consistent pairs: the true radiance fixes both exposures
        let mut vh = Vec::new();
        let mut vl = Vec::new();
        for i in 0..=800 {
            let v_low = 0.1 + 0.8 * i as f64 / 800.0;
            let v_high = crf.delinearize(crf.linearize(v_low, dt_low), 1.0);
            if v_high >= SATURATION_LEVEL {
                vh.extend([v_high; 3]);
                vl.extend([v_low; 3]);
            }
        }
        let n = vh.len() / 3;
        samples += n;
        let high = LdrFrame::new(PixelBuffer::new(n, 1, vh).unwrap(), 1.0, ExposureTag::High, BitDepth::Unquantized).unwrap();
        let low = LdrFrame::new(PixelBuffer::new(n, 1, vl).unwrap(), dt_low, ExposureTag::Low, BitDepth::Unquantized).unwrap();
        let merged = merge_hdr(&high, &low, crf).unwrap();
        let h_low = ldr_to_radiance(&low, crf).unwrap();
        for (m, h) in merged.pixels().data().iter().zip(h_low.pixels().data()) {
            worst = worst.max((m - h).abs() / h);
        }
    }

    // convex hull on every merge of moving and static sequences
    let mut hull_violations = 0usize;
    let mut merged_frames = 0usize;
    for gt in [moving_spec(128, 9, 2.0).render_all().unwrap(), static_spec(64, 64, 9).render_all().unwrap()] {
        for stops in 1..=3 {
            let program = ExposureProgram::new(1.0, stops, ExposureTag::Low).unwrap();
            let sim = simulate_alternating(&gt, &program, BitDepth::Eight, crf, None).unwrap();
            let streams = complete_exposure_streams(&sim.sequence, &FlowBackend::default()).unwrap();
            for (h, l) in streams.high.iter().zip(&streams.low) {
                let m = merge_hdr(h, l, crf).unwrap();
                hull_violations += convex_hull_violations(h, l, &m, crf).unwrap();
                merged_frames += 1;
            }
        }
    }
    outcome(
        worst <= 1e-3 && samples > 0 && hull_violations == 0,
        format!(
            "max relative error vs H_low {worst:.3e} over {samples} saturated pixels (<= 1e-3); \
             {hull_violations} convex-hull violations in {merged_frames} merged frames"
        ),
    )
}

const GOLDEN_PFM: &[u8] = b"PF\n1 1\n-1.0\n\x00\x00\x80\x3f\x00\x00\x00\x3f\x00\x00\x00\x00";

fn format_bit_exactness() -> Outcome {
    let golden = decode_pfm(GOLDEN_PFM).unwrap();
    let golden_ok = golden.pixel(0, 0) == [1.0, 0.5, 0.0] && encode_pfm(&golden, Endianness::Little) == GOLDEN_PFM;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let hdr = PixelBuffer::from_fn(17, 9, |_, _, _| f64::from(rng.random_range(0.0f32..100.0)));
    let pfm = encode_pfm(&hdr, Endianness::Little);
    let pfm_ok = decode_pfm(&pfm).map(|b| b == hdr && encode_pfm(&b, Endianness::Little) == pfm).unwrap_or(false);

    let pnm_ok = [255u32, 65535].iter().all(|&maxval| {
        let ldr = PixelBuffer::from_fn(13, 7, |_, _, _| f64::from(rng.random_range(0..=maxval)) / f64::from(maxval));
        let bytes = encode_pnm(&ldr, maxval).unwrap();
        let (back, _) = decode_pnm(&bytes).unwrap();
        back == ldr && encode_pnm(&back, maxval).unwrap() == bytes
    });

    let gt = static_spec(16, 16, 5).render_all().unwrap();
    let program = ExposureProgram::with_random_stops(0.03, ExposureTag::High, 5).unwrap();
    let sim = simulate_alternating(&gt, &program, BitDepth::Eight, Crf::default(), None).unwrap();
    let bytes = sim.manifest.to_bytes().unwrap();
    let manifest_ok = Manifest::from_bytes(&bytes)
        .map(|m| m == sim.manifest && m.to_bytes().unwrap() == bytes)
        .unwrap_or(false);

    outcome(
        golden_ok && pfm_ok && pnm_ok && manifest_ok,
        format!("golden 1x1 PFM: {golden_ok}; PFM: {pfm_ok}; PNM 8/16-bit: {pnm_ok}; manifest: {manifest_ok}"),
    )
}

fn collect_tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_hdrinterp"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn end_to_end_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("scene");
    fs::create_dir_all(&input).unwrap();
    for (i, f) in moving_spec(64, 8, 1.5).render_all().unwrap().iter().enumerate() {
        write_pfm(input.join(format!("gt_{i:03}.pfm")), f).unwrap();
    }
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let root = tmp.path().join(run);
        let s = |p: &str| root.join(p).to_string_lossy().into_owned();
        let ok = run_cli(&[
            "synthesize", "--input", &input.to_string_lossy(), "--out", &s("ldr"), "--base-exposure", "0.5",
            "--stops", "random", "--bits", "8", "--start-tag", "H", "--noise", "0.01", "--seed", "42",
        ]) && run_cli(&["reconstruct", "--manifest", &s("ldr/manifest.csv"), "--backend", "flow", "--out", &s("rec")])
            && run_cli(&[
                "upscale", "--manifest", &s("ldr/manifest.csv"), "--factor", "4", "--backend", "flow", "--out", &s("up"),
            ])
            && run_cli(&["evaluate", "--pred", &s("up"), "--gt", &s("ldr/gt"), "--report", &s("report.csv")]);
        if !ok {
            return outcome(false, format!("pipeline run {run} failed"));
        }
        trees.push(collect_tree(&root));
    }
    let files = trees[0].len();
    outcome(
        files > 0 && trees[0] == trees[1],
        format!("synthesize -> reconstruct -> upscale -> evaluate twice with seed 42: {files} files, byte-identical: {}", trees[0] == trees[1]),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("radiometric round trip", radiometric_round_trip),
        ("mu-law exactness", mu_law_exactness),
        ("interpolation identity and static scene", identity_and_statics),
        ("motion oracle", motion_oracle),
        ("recursive upscaling count and constancy", upscaling_count_and_constancy),
        ("frame-rate degradation trend", fps_degradation),
        ("merge saturation recovery and convex hull", merge_saturation_recovery),
        ("format bit-exactness", format_bit_exactness),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!("{} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
