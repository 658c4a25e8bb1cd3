//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::path::Path;
use std::time::Instant;

use pwdoppler::acquisition::{AcquisitionConfig, ChannelDataSet, ImageGrid};
use pwdoppler::beamformer::{das_beamform_unnormalized, AnalyticImageStack, ApodizationSpec, FrameSeries};
use pwdoppler::clutter::{cutoff_velocity, rolling_subtraction, svd_basis, ClutterFilter, SvdRank};
use pwdoppler::compounding::{fmas_compound, power_doppler, FmasVariant};
use pwdoppler::metrics::{
    reproduce_tables, run_pipeline, run_pipelines, PipelineKind, PipelineOptions, ReproduceConfig, ReproduceOutput, Stage,
    TABLE_II_NAME, TABLE_I_NAME, TABLE_V_NAME,
};
use pwdoppler::simulator::{synthesize_sequence, BuiltinScene, ContrastMode, PhantomScene, PulseSpec, Scatterer, SceneSetup};
use pwdoppler::subaperture::{asap_correlate, split_aperture, AperturePattern, AsapPowerMode};
use pwdoppler::{ChannelData64, Cplx};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MM: f64 = 1e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn random_stack(rng: &mut ChaCha8Rng, angles: usize, pixels: usize) -> AnalyticImageStack<f64> {
    let grid = ImageGrid::new(0.0, 1.0, 0.0, 1.0, pixels, 1).unwrap();
    let values = (0..angles * pixels).map(|_| Cplx::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0))).collect();
    AnalyticImageStack::new(grid, (0..angles).map(|a| a as f64 * 0.01).collect(), 1, values).unwrap()
}

fn fmas_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_closed, mut worst_pairs) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let angles = [2, 5, 10][i % 3];
        let s = random_stack(&mut rng, angles, 64);
        let printed = fmas_compound(&s, FmasVariant::AsPrinted).unwrap();
        let signed = fmas_compound(&s, FmasVariant::SignedSqrt).unwrap();
        for p in 0..64 {
            let y: Vec<f64> = (0..angles).map(|a| s.image(0, a)[p].re).collect();
            let sum: f64 = y.iter().sum();
            let sq: f64 = y.iter().map(|v| v * v).sum();
            let closed = (sum * sum - sq) / 2.0;
            worst_closed = worst_closed.max((printed.frame(0)[p] - closed).abs() / sq.max(1e-300));
            let mut brute = 0.0;
            for a in 0..angles {
                for b in a + 1..angles {
                    let prod = y[a] * y[b];
                    brute += prod.signum() * prod.abs().sqrt();
                }
            }
            worst_pairs = worst_pairs.max(rel(signed.frame(0)[p], brute));
        }
    }
    outcome(
        worst_closed <= 1e-9 && worst_pairs <= 1e-12,
        format!("as_printed vs closed form {worst_closed:.1e}, signed_sqrt vs pairwise loop {worst_pairs:.1e}"),
    )
}

fn subaperture_algebra() -> Outcome {
    let mut failures = Vec::new();
    let mut worst_sum = 0.0f64;
    let grid = ImageGrid::new(-2.0 * MM, 2.0 * MM, 14.0 * MM, 18.0 * MM, 9, 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for n in [8usize, 64, 128] {
        let config = AcquisitionConfig { num_elements: n, angles: vec![-0.05, 0.05], ..AcquisitionConfig::desk() };
        let mut data = ChannelDataSet::<f64>::zeros(config, 15e-6, 1, 256);
        for v in data.samples_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        for k in [1usize, 2, 4] {
            let (m1, m2) = split_aperture(n, AperturePattern::new(k).unwrap()).unwrap();
            if m1.len() != n || m2.len() != n || (0..n).any(|e| m1.is_active(e) == m2.is_active(e)) {
                failures.push(format!("cover n={n} k={k}"));
            }
            let apod = ApodizationSpec::default();
            let full = das_beamform_unnormalized(&data, &grid, &apod, 0, 1, None).unwrap();
            let y1 = das_beamform_unnormalized(&data, &grid, &apod, 0, 1, Some(&m1)).unwrap();
            let y2 = das_beamform_unnormalized(&data, &grid, &apod, 0, 1, Some(&m2)).unwrap();
            let scale = full.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for p in 0..grid.len() {
                worst_sum = worst_sum.max((y1[p] + y2[p] - full[p]).norm() / scale);
            }
        }
    }
    let (mut worst_herm, mut worst_cs) = (0.0f64, f64::NEG_INFINITY);
    for trial in 0..20 {
        let frames = 1 + trial % 12;
        let series = |rng: &mut ChaCha8Rng| {
            let v = (0..frames * 32).map(|_| Cplx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            FrameSeries::new(ImageGrid::new(0.0, 1.0, 0.0, 1.0, 32, 1).unwrap(), frames, v).unwrap()
        };
        let a = series(&mut rng);
        let b = series(&mut rng);
        let ab = asap_correlate::<f64, _>(&a, &b, 0..frames).unwrap();
        let ba = asap_correlate::<f64, _>(&b, &a, 0..frames).unwrap();
        let pa = power_doppler::<f64, _>(&a, 0..frames).unwrap();
        let pb = power_doppler::<f64, _>(&b, 0..frames).unwrap();
        for p in 0..32 {
            worst_herm = worst_herm.max((ab.values[p] - ba.values[p].conj()).norm());
            worst_cs = worst_cs.max(ab.values[p].norm_sqr() / (pa.values[p] * pb.values[p]) - 1.0);
        }
    }
    let pass = failures.is_empty() && worst_sum <= 1e-9 && worst_herm <= 1e-12 && worst_cs <= 1e-9;
    outcome(
        pass,
        format!(
            "cover failures {:?}; sub-aperture sum {worst_sum:.1e}; hermitian {worst_herm:.1e}; |R|²/bound − 1 max {worst_cs:.1e}",
            failures
        ),
    )
}

fn cell(out: &ReproduceOutput, kind: PipelineKind, roi: &str, ensemble: usize) -> (f64, f64) {
    let r = out.table_i.get(kind, None, roi, ensemble).expect("table I cell");
    (r.snr_db, r.cnr_db)
}

fn table_i_ordering(out: &ReproduceOutput) -> Outcome {
    let order = [PipelineKind::Samas, PipelineKind::Asap, PipelineKind::PdFmas, PipelineKind::PdCc];
    let mut pass = true;
    let mut parts = Vec::new();
    for roi in ["A", "B"] {
        let v: Vec<(f64, f64)> = order.iter().map(|&k| cell(out, k, roi, 200)).collect();
        let snr_ok = v.windows(2).all(|w| w[0].0 > w[1].0);
        let cnr_ok = v.windows(2).all(|w| w[0].1 > w[1].1);
        let gap = v[0].0 - v[3].0;
        pass &= snr_ok && cnr_ok && gap >= 10.0;
        parts.push(format!(
            "ROI {roi} SNR {:.1}/{:.1}/{:.1}/{:.1} CNR {:.1}/{:.1}/{:.1}/{:.1} gap {gap:.1} dB",
            v[0].0, v[1].0, v[2].0, v[3].0, v[0].1, v[1].1, v[2].1, v[3].1
        ));
    }
    outcome(pass, format!("SAMAS/ASAP/FMAS/CC at 200: {}", parts.join("; ")))
}

fn table_ii_ordering(out: &ReproduceOutput) -> Outcome {
    let ensemble = out.table_ii.rows.iter().map(|r| r.ensemble).max().unwrap();
    let cnr = |p: AperturePattern| out.table_ii.get(PipelineKind::Samas, Some(&p.name()), "A", ensemble).expect("table II cell").cnr_db;
    let (a, q, p) = (cnr(AperturePattern::ALTERNATE), cnr(AperturePattern::QUADS), cnr(AperturePattern::PAIRS));
    outcome(a > q && q > p, format!("SAMAS CNR at {ensemble}: [1 0] {a:.1} > [1 1 1 1 0 0 0 0] {q:.1} > [1 1 0 0] {p:.1}"))
}

fn ensemble_scaling(out: &ReproduceOutput) -> Outcome {
    let curve = |roi: &str| -> Vec<f64> { [25, 50, 100, 200].iter().map(|&n| cell(out, PipelineKind::Samas, roi, n).0).collect() };
    let a = curve("A");
    let b = curve("B");
    let gain = a[3] - a[0];
    let monotone = a.windows(2).all(|w| w[1] >= w[0] - 1.0);
    outcome(
        gain >= 5.0 && monotone,
        format!(
            "ROI A SAMAS SNR {:.2}/{:.2}/{:.2}/{:.2} gain {gain:.2} dB (ROI B gain {:.2} dB)",
            a[0],
            a[1],
            a[2],
            a[3],
            b[3] - b[0]
        ),
    )
}

fn grating_lobe_suppression() -> Outcome {
    let config = AcquisitionConfig::desk();
    let (x0, z0) = (-3.0 * MM, 20.0 * MM);
    let grid = ImageGrid::new(-10.0 * MM, 10.0 * MM, 15.0 * MM, 25.0 * MM, 161, 81).unwrap();
    let setup = SceneSetup {
        name: "off_axis_point".into(),
        config: config.clone(),
        scene: PhantomScene::new(vec![Scatterer::fixed(x0, z0, 1.0)], 0.05, 3),
        pulse: PulseSpec::three_cycle(config.transmit_frequency),
        mode: ContrastMode::Linear,
        frames: 20,
        grid,
        rois: Vec::new(),
        clutter: ClutterFilter::None,
        apodization: ApodizationSpec::default(),
        sequence: Default::default(),
    };
    let data: ChannelData64 = setup.simulate().unwrap();
    let mut options = PipelineOptions::new(grid);
    options.pattern = AperturePattern::PAIRS;
    options.asap_power = AsapPowerMode::Magnitude;
    let run = run_pipelines(&data, &[PipelineKind::Asap, PipelineKind::Samas], &options).unwrap();
    let before = run.image(PipelineKind::Asap).unwrap();
    let mask = run.images.iter().find_map(|i| i.mask.as_ref()).unwrap();

    let near = |xc: f64, zc: f64, r: f64| -> Vec<usize> {
        (0..grid.len()).filter(|&p| {
            let (x, z) = grid.position(p);
            (x - xc).hypot(z - zc) <= r
        }).collect()
    };
    let peak = |px: &[usize], gated: bool| px.iter().map(|&p| before.values[p] * if gated { mask.weights[p] } else { 1.0 }).fold(0.0, f64::max);

    // lobe direction from the effective sub-aperture pitch 2kp
    let lambda = config.sound_speed / config.transmit_frequency;
    let pitch_eff = 2.0 * AperturePattern::PAIRS.run_length() as f64 * config.pitch;
    let r = x0.hypot(z0);
    let s0 = x0 / r;
    let sg = [s0 + lambda / pitch_eff, s0 - lambda / pitch_eff]
        .into_iter()
        .find(|s| s.abs() < 1.0 && grid.contains(r * s, r * (1.0 - s * s).sqrt()))
        .expect("a grating lobe inside the grid");
    let (xg, zg) = (r * sg, r * (1.0 - sg * sg).sqrt());
    let lobe = near(xg, zg, 1.5 * MM);
    let main = near(x0, z0, 1.0 * MM);
    let noise: Vec<f64> = near(5.0 * MM, 24.0 * MM, 10.0 * MM)
        .into_iter()
        .filter(|&p| grid.position(p).1 >= 24.0 * MM && grid.position(p).0 >= 5.0 * MM)
        .map(|p| before.values[p])
        .collect();
    let noise_mean = noise.iter().sum::<f64>() / noise.len() as f64;
    let db = |a: f64, b: f64| 10.0 * (a.max(1e-300) / b).log10();
    let lobe_over_noise = db(peak(&lobe, false), noise_mean);
    let lobe_drop = db(peak(&lobe, false), peak(&lobe, true));
    let main_change = db(peak(&main, false), peak(&main, true)).abs();
    outcome(
        lobe_over_noise >= 10.0 && lobe_drop >= 10.0 && main_change <= 1.0,
        format!(
            "lobe predicted at ({:.2}, {:.2}) mm is {lobe_over_noise:.1} dB over noise; suppressor removes {lobe_drop:.1} dB; mainlobe change {main_change:.2} dB",
            xg / MM,
            zg / MM
        ),
    )
}

fn clutter_filtering() -> Outcome {
    let config = AcquisitionConfig::desk();
    let setup = BuiltinScene::TissuePlusFlow.setup(&config, 1).unwrap();
    let window = setup.window();
    let simulate = |scene: &PhantomScene| -> ChannelData64 {
        synthesize_sequence(scene, &setup.config, &setup.pulse, &window, setup.frames, setup.mode, setup.sequence).unwrap()
    };
    let combined = simulate(&setup.scene);
    let part = |moving: bool| {
        let s = setup.scene.scatterers.iter().copied().filter(|s| (s.vx != 0.0 || s.vz != 0.0) == moving).collect();
        PhantomScene::new(s, 0.0, 1)
    };
    let tissue = simulate(&part(false));
    let flow = simulate(&part(true));
    let basis = svd_basis(combined.samples(), combined.frames()).unwrap();
    let cut = SvdRank::Knee { high_cut: None }.resolve(&basis).unwrap();
    let projector = basis.projector(cut).unwrap();
    let options = PipelineOptions::new(setup.grid);
    let image = |d: &ChannelData64| run_pipeline(d, PipelineKind::PdCc, &options).unwrap().0;
    let filtered = |d: &ChannelData64| d.with_samples(projector.apply(d.samples()).unwrap()).unwrap();
    let (t0, t1) = (image(&tissue), image(&filtered(&tissue)));
    let (f0, f1) = (image(&flow), image(&filtered(&flow)));
    let tissue_atten = 10.0 * (t0.max() / t1.max()).log10();
    let flow_loss = 10.0 * (f0.max() / f1.max()).log10();

    // measured −3 dB point of the rolling filter on complex tones
    let fps = config.frame_rate;
    let rolling = match setup_rolling(&config) {
        ClutterFilter::Rolling(w) => w,
        other => panic!("two_channels uses {other:?}"),
    };
    let frames = 400;
    let gain = |f: f64| -> f64 {
        let tone: Vec<Cplx<f64>> = (0..frames).map(|t| Cplx::from_polar(1.0, 2.0 * std::f64::consts::PI * f * t as f64 / fps)).collect();
        let out = rolling_subtraction(&tone, frames, rolling).unwrap();
        let tail = &out[rolling.length()..];
        (tail.iter().map(|v| v.norm_sqr()).sum::<f64>() / tail.len() as f64).sqrt()
    };
    let cutoff = (1..=5000).map(|i| i as f64 * 0.01).find(|&f| gain(f) >= 0.5f64.sqrt()).unwrap_or(f64::NAN);
    let v = cutoff_velocity(5.0, 5e6, 1540.0).unwrap();

    let pass = tissue_atten >= 40.0 && flow_loss <= 6.0 && (cutoff - 5.0).abs() <= 0.5 && (v - 0.77e-3).abs() < 1e-12;
    outcome(
        pass,
        format!(
            "SVD rank cut {}: tissue peak −{tissue_atten:.1} dB, flow peak loss {flow_loss:.2} dB; rolling W={} −3 dB at {cutoff:.2} Hz; cutoff velocity {:.3} mm/s",
            cut.low_cut,
            rolling.length(),
            v / MM
        ),
    )
}

fn setup_rolling(config: &AcquisitionConfig) -> ClutterFilter {
    BuiltinScene::TwoChannels.setup(config, 1).unwrap().clutter
}

fn timing(out: &ReproduceOutput) -> Outcome {
    let Some(t) = &out.timing else {
        return outcome(false, "no timing table");
    };
    let (Some(fmas), Some(cc)) = (t.get(PipelineKind::PdFmas, Stage::Combine), t.get(PipelineKind::PdCc, Stage::Combine)) else {
        return outcome(false, "combine stage missing");
    };
    let measurable = fmas.mean_ms > cc.mean_ms + fmas.sd_ms + cc.sd_ms;
    outcome(
        t.runs >= 5 && measurable,
        format!(
            "{} runs: FMAS combine {:.4} ± {:.4} ms/frame vs CC combine {:.4} ± {:.4} ms/frame",
            t.runs, fmas.mean_ms, fmas.sd_ms, cc.mean_ms, cc.sd_ms
        ),
    )
}

fn compared_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".pim") || n.ends_with(".pgm") || n == TABLE_I_NAME || n == TABLE_II_NAME)
        .collect();
    names.sort();
    names
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    let a = compared_files(first);
    let b = compared_files(second);
    if a != b {
        return outcome(false, "the two runs wrote different file sets");
    }
    let differing: Vec<&String> = a.iter().filter(|n| std::fs::read(first.join(n)).unwrap() != std::fs::read(second.join(n)).unwrap()).collect();
    let timing_shape = std::fs::read_to_string(first.join(TABLE_V_NAME))
        .map(|t| t.lines().map(|l| l.split(',').take(2).collect::<Vec<_>>().join(",")).collect::<Vec<_>>())
        .ok();
    let timing_shape2 = std::fs::read_to_string(second.join(TABLE_V_NAME))
        .map(|t| t.lines().map(|l| l.split(',').take(2).collect::<Vec<_>>().join(",")).collect::<Vec<_>>())
        .ok();
    outcome(
        differing.is_empty() && timing_shape == timing_shape2,
        format!("{} images and tables compared byte for byte, {} differ", a.len(), differing.len()),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut timed = |n: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {n} [{}] {name}: {} ({secs:.1} s)", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o, secs));
    };

    timed(1, "FMAS closed form", &mut fmas_oracle);
    timed(2, "sub-aperture algebra", &mut subaperture_algebra);

    let root = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let first = reproduce_tables(&ReproduceConfig::new(root.path().join("run1"))).unwrap();
    println!("reproduction run took {:.1} s", start.elapsed().as_secs_f64());
    timed(3, "pipeline ordering", &mut || table_i_ordering(&first));
    timed(4, "aperture pattern ordering", &mut || table_ii_ordering(&first));
    timed(5, "ensemble scaling", &mut || ensemble_scaling(&first));
    timed(6, "grating-lobe suppression", &mut grating_lobe_suppression);
    timed(7, "clutter filtering", &mut clutter_filtering);
    timed(8, "timing harness", &mut || timing(&first));
    timed(9, "determinism", &mut || {
        reproduce_tables(&ReproduceConfig::new(root.path().join("run2"))).unwrap();
        determinism(&root.path().join("run1"), &root.path().join("run2"))
    });

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
