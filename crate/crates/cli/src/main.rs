//! Command-line front end: simulate, beamform, score, time and reproduce.

mod settings;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pwdoppler::acquisition::{format_rois, read_dataset, read_rois, write_dataset, ChannelDataSet};
use pwdoppler::metrics::{
    bench, export_image, export_mask, read_power_image, reproduce_tables, roi_stats, run_pipelines, write_power_image,
    Manifest, MetricsSamples, PipelineKind, ReproduceConfig,
};
use pwdoppler::simulator::{read_scene, synthesize_sequence, ContrastMode, PulseSpec, RecordWindow, SceneSetup, SequenceOptions};
use pwdoppler::{AperturePattern, Error, FmasVariant, Real, Result, SuppressorMode};

use settings::{parse_grid, parse_list, Precision, Settings};

#[derive(Parser)]
#[command(name = "pwdoppler", version, about = "Plane-wave power Doppler pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Key-value settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Setting override `key=value`; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate channel data for a built-in scene (`scene` setting) or a scene file.
    Simulate {
        /// Output dataset file.
        #[arg(long)]
        out: PathBuf,
        /// Scatterer file used instead of a built-in scene.
        #[arg(long)]
        scene_file: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run pipelines on a dataset and export one image per pipeline.
    Beamform {
        #[arg(long)]
        data: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// SNR and CNR of power images (`.pim`) over ROI pairs.
    Metrics {
        /// ROI file; consecutive lines form (signal, background) pairs.
        #[arg(long)]
        rois: PathBuf,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
        /// Images named `<scene>_<pipeline>_<ensemble>.pim`.
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Per-stage timing of every selected pipeline.
    Bench {
        #[arg(long)]
        data: PathBuf,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Full table run: pipeline comparison, aperture patterns and timing.
    Reproduce {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate { out, scene_file, common } => simulate(&settings(&common)?, scene_file.as_deref(), &out),
        Command::Beamform { data, out, common } => {
            let s = settings(&common)?;
            match s.precision()? {
                Precision::F32 => beamform::<f32>(&s, &data, &out),
                Precision::F64 => beamform::<f64>(&s, &data, &out),
            }
        }
        Command::Metrics { rois, out, images, common } => metrics(&settings(&common)?, &rois, &images, &out),
        Command::Bench { data, out, common } => bench_cmd(&settings(&common)?, &data, &out),
        Command::Reproduce { out, common } => reproduce(&settings(&common)?, &out),
    }
}

fn settings(common: &Common) -> Result<Settings> {
    Settings::load(common.config.as_deref(), &common.set)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into())
}

fn simulate(s: &Settings, scene_file: Option<&Path>, out: &Path) -> Result<()> {
    let config = s.config()?;
    let seed = s.seed()?;
    let mut manifest = Manifest::new("simulate");
    s.record(&mut manifest, &config);
    manifest.set("seed", seed);
    let mut setup = match (scene_file, s.builtin_scene()?) {
        (Some(path), _) => {
            let mut scene = read_scene(path)?;
            if s.get("seed").is_some() {
                scene.rng_seed = seed;
            }
            let grid = s.get("grid").map(parse_grid).transpose()?;
            manifest.set("scene_file", path.display());
            SceneSetup {
                name: stem(path),
                pulse: PulseSpec::three_cycle(config.transmit_frequency),
                config: config.clone(),
                scene,
                mode: ContrastMode::Linear,
                frames: 10,
                grid: grid.unwrap_or(pwdoppler::ImageGrid::new(-1e-3, 1e-3, 10e-3, 20e-3, 2, 2)?),
                rois: Vec::new(),
                clutter: Default::default(),
                apodization: Default::default(),
                sequence: SequenceOptions::default(),
            }
        }
        (None, Some(b)) => b.setup(&config, seed)?,
        (None, None) => return Err(Error::Invalid("simulate needs a `scene` setting or --scene-file".into())),
    };
    if let Some(f) = s.get("frames") {
        setup.frames = f.parse().map_err(|_| Error::Invalid(format!("bad frames `{f}`")))?;
    }
    if let Some(n) = s.get("noise_sigma") {
        setup.scene.noise_sigma = n.parse().map_err(|_| Error::Invalid(format!("bad noise_sigma `{n}`")))?;
    }
    if let Some(m) = s.get("contrast") {
        setup.mode = match m {
            "linear" => ContrastMode::Linear,
            "am" => ContrastMode::AmplitudeModulation,
            other => return Err(Error::Invalid(format!("contrast must be linear or am, got `{other}`"))),
        };
    }
    if let Some(v) = s.get("intra_frame_motion") {
        setup.sequence.intra_frame_motion = v.parse().map_err(|_| Error::Invalid(format!("bad intra_frame_motion `{v}`")))?;
    }
    let window = if scene_file.is_some() && s.get("grid").is_none() {
        let margin = 2.0 / config.sampling_frequency;
        RecordWindow::covering(&setup.scene, &config, &setup.pulse, setup.frames, margin)
    } else {
        setup.window()
    };
    let data = synthesize_sequence::<f32>(&setup.scene, &config, &setup.pulse, &window, setup.frames, setup.mode, setup.sequence)?;
    write_dataset(&data, out)?;
    manifest.set("scene", &setup.name);
    manifest.set("frames", setup.frames);
    manifest.set("noise_sigma", setup.scene.noise_sigma);
    manifest.set("rng_seed", setup.scene.rng_seed);
    manifest.set("t0", data.t0());
    manifest.set("sample_count", data.sample_count());
    manifest.output(out);
    if !setup.rois.is_empty() {
        let rois: Vec<_> = setup.rois.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        let path = out.with_file_name(format!("{}_rois.txt", stem(out)));
        pwdoppler::write_atomic(&path, format_rois(&rois).as_bytes())?;
        manifest.output(&path);
    }
    manifest.write_beside(out)?;
    Ok(())
}

fn scene_setup(s: &Settings, data_config: &pwdoppler::AcquisitionConfig) -> Result<Option<SceneSetup>> {
    s.builtin_scene()?.map(|b| b.setup(data_config, s.seed()?)).transpose()
}

fn beamform<T: Real>(s: &Settings, data_path: &Path, out: &Path) -> Result<()> {
    let data: ChannelDataSet<T> = read_dataset(data_path)?;
    let setup = scene_setup(s, data.config())?;
    let mut options = s.pipeline_options(setup.as_ref(), data.config())?;
    let ensemble = s.ensemble(data.frames())?;
    options.ensemble = Some(ensemble.clone());
    let kinds = s.pipelines()?;
    let dr = s.dynamic_range_db()?;
    let name = s.get("scene").map(str::to_string).unwrap_or_else(|| stem(data_path));
    std::fs::create_dir_all(out)?;
    let run = run_pipelines(&data, &kinds, &options)?;

    let mut manifest = Manifest::new("beamform");
    s.record(&mut manifest, data.config());
    manifest.set("dataset", data_path.display());
    manifest.set("ensemble", format!("{}..{}", ensemble.start, ensemble.end));
    manifest.set("pattern", options.pattern.name());
    manifest.set("fmas_variant", options.variant.name());
    manifest.set("suppressor", options.suppressor.name());
    if let Some(t) = run.svd_thresholds {
        manifest.set("svd_low_cut", t.low_cut);
        manifest.set("svd_high_cut", t.high_cut.map_or("none".into(), |h| h.to_string()));
    }
    for img in &run.images {
        let base = format!("{name}_{}_{}", img.kind, ensemble.len());
        let pgm = out.join(format!("{base}.pgm"));
        export_image(&img.image, dr, &pgm)?;
        let pim = out.join(format!("{base}.pim"));
        write_power_image(&img.image, &pim)?;
        manifest.output(&pgm);
        manifest.output(&pim);
        if let Some(mask) = &img.mask {
            let m = out.join(format!("{base}_mask.pgm"));
            export_mask(mask, &m)?;
            manifest.output(&m);
        }
    }
    manifest.write(out)?;
    Ok(())
}

/// `(pipeline, pattern, ensemble)` from `<scene>_<pipeline>[-<pattern>]_<ensemble>`.
fn parse_image_name(path: &Path) -> Result<(PipelineKind, Option<String>, usize)> {
    let bad = || Error::Invalid(format!("`{}` is not named <scene>_<pipeline>_<ensemble>", path.display()));
    let stem = stem(path);
    let (rest, ens) = stem.rsplit_once('_').ok_or_else(bad)?;
    let ensemble = ens.parse().map_err(|_| bad())?;
    let (rest, pattern) = match rest.rsplit_once('-') {
        Some((r, p)) => (r, Some(AperturePattern::parse(p)?.name())),
        None => (rest, None),
    };
    let mut kinds = PipelineKind::ALL;
    kinds.sort_by_key(|k| std::cmp::Reverse(k.name().len()));
    let kind = kinds
        .into_iter()
        .find(|k| rest.strip_suffix(k.name()).is_some_and(|p| p.is_empty() || p.ends_with('_')))
        .ok_or_else(bad)?;
    Ok((kind, pattern, ensemble))
}

fn metrics(s: &Settings, rois_path: &Path, images: &[PathBuf], out: &Path) -> Result<()> {
    let rois = read_rois(rois_path)?;
    if rois.is_empty() || rois.len() % 2 != 0 {
        return Err(Error::Invalid("ROI file must hold (signal, background) pairs".into()));
    }
    let mut samples = MetricsSamples::default();
    let mut with_pattern = false;
    let mut manifest = Manifest::new("metrics");
    manifest.set("rois", rois_path.display());
    for (k, v) in s.kv.iter() {
        manifest.set(&format!("setting.{k}"), v);
    }
    for (i, path) in images.iter().enumerate() {
        let (kind, pattern, ensemble) = parse_image_name(path)?;
        let image = read_power_image(path)?;
        manifest.set(&format!("input.{i}"), path.display());
        for pair in rois.chunks(2) {
            let st = roi_stats(&image, &pair[0], &pair[1])?;
            let (snr, cnr) = (st.snr_db()?, st.cnr_db()?);
            samples.push(kind, pattern.clone(), &pair[0].label, ensemble, snr, cnr);
        }
        with_pattern |= pattern.is_some();
    }
    let report = samples.report();
    let csv = if with_pattern { report.to_csv_with_pattern() } else { report.to_csv() };
    pwdoppler::write_atomic(out, csv.as_bytes())?;
    manifest.output(out);
    manifest.write_beside(out)?;
    Ok(())
}

fn bench_cmd(s: &Settings, data_path: &Path, out: &Path) -> Result<()> {
    let header = read_dataset::<f32>(data_path)?;
    let setup = scene_setup(s, header.config())?;
    let mut options = s.pipeline_options(setup.as_ref(), header.config())?;
    options.ensemble = Some(s.ensemble(header.frames())?);
    let runs = s.runs()?;
    let kinds = s.pipelines()?;
    let report = match s.precision()? {
        Precision::F32 => bench::<f32>(data_path, &kinds, &options, runs)?,
        Precision::F64 => bench::<f64>(data_path, &kinds, &options, runs)?,
    };
    pwdoppler::write_atomic(out, report.to_csv().as_bytes())?;
    let mut manifest = Manifest::new("bench");
    s.record(&mut manifest, header.config());
    manifest.set("dataset", data_path.display());
    manifest.set("runs", runs);
    manifest.set("frames", report.frames);
    manifest.output(out);
    manifest.write_beside(out)?;
    Ok(())
}

fn reproduce(s: &Settings, out: &Path) -> Result<()> {
    let mut cfg = ReproduceConfig::new(out);
    cfg.config = s.config()?;
    cfg.seed = s.seed()?;
    if let Some(b) = s.builtin_scene()? {
        cfg.scene = b;
    }
    if let Some(p) = s.get("pattern_scene") {
        cfg.pattern_scene = pwdoppler::simulator::BuiltinScene::parse(p)?;
    }
    let int = |t: &str| t.parse::<usize>().map_err(|_| Error::Invalid(format!("bad integer `{t}`")));
    if let Some(e) = parse_list(s.get("ensembles"), int)? {
        cfg.ensembles = e;
    }
    if let Some(p) = parse_list(s.get("patterns"), AperturePattern::parse)? {
        cfg.patterns = p;
    }
    if let Some(r) = s.get("repeats") {
        cfg.repeats = int(r)?;
    }
    if let Some(r) = s.get("timing_runs") {
        cfg.timing_runs = int(r)?;
    }
    if let Some(r) = s.get("timing_frames") {
        cfg.timing_frames = int(r)?;
    }
    if let Some(v) = s.get("fmas_variant") {
        cfg.variant = FmasVariant::parse(v)?;
    }
    if let Some(v) = s.get("suppressor") {
        cfg.suppressor = SuppressorMode::parse(v)?;
    }
    cfg.dynamic_range_db = s.dynamic_range_db()?;
    let result = reproduce_tables(&cfg)?;
    for r in &result.table_i.rows {
        println!("{:<10} {:<8} {:>4}  snr {:>7.2} dB  cnr {:>7.2} dB", r.pipeline.name(), r.roi, r.ensemble, r.snr_db, r.cnr_db);
    }
    Ok(())
}
