//! `hdrinterp` command-line front end.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error. Logs go to stderr;
//! `evaluate` prints its summary line to stdout.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use crate::dataset::{simulate_alternating, ExposureProgram, NoiseModel};
use crate::interp::BackendKind;
use crate::io::{encode_pnm, read_manifest, read_pfm, read_pnm, write_manifest, write_pfm, write_pnm, Manifest, ManifestRecord};
use crate::metrics::{sequence_report, EvalMask};
use crate::radiometry::{BitDepth, Crf, ExposureTag, Provenance, RadianceFrame};
use crate::scheduler::{complete_exposure_streams, upscale_fps, AlternatingSequence, HdrFrame, Timestamp};
use crate::tonemap::{mu_law, normalize_radiance, reinhard_display, MuLawParams, ReinhardParams};
use crate::{Error, Result};

pub const EXIT_DATA_ERROR: u8 = 1;
pub const EXIT_USAGE_ERROR: u8 = 2;

/// Name of the manifest written into every output directory.
pub const MANIFEST_NAME: &str = "manifest.csv";

#[derive(Debug, Parser)]
#[command(name = "hdrinterp", version, about = "HDR video from alternating-exposure LDR frames")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command.
#[derive(Debug, Args)]
pub struct RunConfig {
    /// Seed for every stochastic choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for frame-level parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expose a directory of PFM radiance frames as an alternating LDR sequence.
    Synthesize(SynthesizeArgs),
    /// Reconstruct one HDR frame per interior input frame.
    Reconstruct(ReconstructArgs),
    /// Reconstruct at a power-of-two multiple of the input frame rate.
    Upscale(UpscaleArgs),
    /// Score predicted HDR frames against ground truth.
    Evaluate(EvaluateArgs),
    /// Tonemap PFM frames to 8-bit PPM.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stops {
    Fixed(u32),
    Random,
}

fn parse_stops(s: &str) -> std::result::Result<Stops, String> {
    match s {
        "random" => Ok(Stops::Random),
        "1" | "2" | "3" => Ok(Stops::Fixed(s.parse().unwrap())),
        _ => Err("expected 1, 2, 3 or random".into()),
    }
}

fn parse_factor(s: &str) -> std::result::Result<u32, String> {
    let f: u32 = s.parse().map_err(|_| format!("{s:?} is not an integer"))?;
    if !f.is_power_of_two() {
        return Err(format!("{f} is not a power of two"));
    }
    Ok(f.trailing_zeros())
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("{s:?} is not a positive number")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TagArg {
    #[value(name = "H", alias = "h")]
    H,
    #[value(name = "L", alias = "l")]
    L,
}

impl From<TagArg> for ExposureTag {
    fn from(t: TagArg) -> Self {
        match t {
            TagArg::H => ExposureTag::High,
            TagArg::L => ExposureTag::Low,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Blend,
    Flow,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Blend => BackendKind::Blend,
            BackendArg::Flow => BackendKind::Flow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaskArg {
    All,
    Synth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TonemapArg {
    Reinhard,
    Mulaw,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Directory of PFM frames, taken in lexicographic order.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Long exposure time in seconds.
    #[arg(long, value_parser = parse_positive)]
    pub base_exposure: f64,
    /// Exposure gap in stops: 1, 2, 3 or random.
    #[arg(long, value_parser = parse_stops, default_value = "2")]
    pub stops: Stops,
    #[arg(long, value_parser = ["8", "16"], default_value = "16")]
    pub bits: String,
    #[arg(long, value_enum, default_value = "H")]
    pub start_tag: TagArg,
    /// Standard deviation of additive sensor noise (0 = none).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "flow")]
    pub backend: BackendArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct UpscaleArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Frame-rate multiplier, a power of two.
    #[arg(long = "factor", value_name = "FACTOR", value_parser = parse_factor)]
    pub factor_log2: u32,
    #[arg(long, value_enum, default_value = "flow")]
    pub backend: BackendArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Output directory of `reconstruct` or `upscale`.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth PFM frames; the i-th file in lexicographic order is time i.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub mask: MaskArg,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub tonemap: TonemapArg,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging(cli.run.verbose);
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DATA_ERROR)
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    // a second initialisation in the same process keeps the first logger
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .target(env_logger::Target::Stderr)
        .try_init();
}

pub fn execute(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.run.threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Synthesize(a) => synthesize(a, cli.run.seed),
        Command::Reconstruct(a) => upscale(&a.manifest, 0, a.backend.into(), &a.out),
        Command::Upscale(a) => upscale(&a.manifest, a.factor_log2, a.backend.into(), &a.out),
        Command::Evaluate(a) => evaluate(a),
        Command::Export(a) => export(a),
    })
}

fn with_path(path: &Path, e: Error) -> Error {
    Error::InvalidInput(format!("{}: {e}", path.display()))
}

/// Regular files with extension `ext`, sorted by name.
pub fn list_frames(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| with_path(dir, e.into()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|x| x.eq_ignore_ascii_case(ext)) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

fn read_pfm_dir(dir: &Path) -> Result<(Vec<PathBuf>, Vec<RadianceFrame>)> {
    let paths = list_frames(dir, "pfm")?;
    if paths.is_empty() {
        return Err(Error::InvalidInput(format!("no .pfm frames in {}", dir.display())));
    }
    let frames = paths
        .iter()
        .map(|p| read_pfm(p).map_err(|e| with_path(p, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok((paths, frames))
}

fn synthesize(a: &SynthesizeArgs, seed: u64) -> Result<()> {
    let (paths, hdr) = read_pfm_dir(&a.input)?;
    info!("exposing {} frames from {}", hdr.len(), a.input.display());
    let tag = a.start_tag.into();
    let program = match a.stops {
        Stops::Fixed(s) => ExposureProgram::new(a.base_exposure, s, tag)?,
        Stops::Random => ExposureProgram::with_random_stops(a.base_exposure, tag, seed)?,
    };
    let (depth, maxval) = if a.bits == "16" {
        (BitDepth::Sixteen, 65535)
    } else {
        (BitDepth::Eight, 255)
    };
    let noise = (a.noise > 0.0).then_some(NoiseModel { sigma: a.noise, seed });
    let sim = simulate_alternating(&hdr, &program, depth, Crf::default(), noise)?;

    let gt_dir = a.out.join("gt");
    fs::create_dir_all(&gt_dir)?;
    for (frame, record) in sim.sequence.frames().iter().zip(sim.manifest.records()) {
        write_pnm(a.out.join(&record.filename), frame, maxval)?;
    }
    for p in &paths {
        fs::copy(p, gt_dir.join(p.file_name().expect("listed files have names")))?;
    }
    write_manifest(a.out.join(MANIFEST_NAME), &sim.manifest)?;
    info!("wrote {} frames ({} stops) to {}", hdr.len(), program.stops(), a.out.display());
    Ok(())
}

/// Reads the LDR sequence a manifest describes. Paths are relative to the
/// manifest's directory.
pub fn load_sequence(manifest_path: &Path) -> Result<(AlternatingSequence, u32)> {
    let manifest = read_manifest(manifest_path).map_err(|e| with_path(manifest_path, e))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut frames = Vec::with_capacity(manifest.len());
    let mut stops = 0;
    for r in manifest.records() {
        let (Some(dt), Some(tag), Provenance::Real) = (r.exposure_time_s, r.tag, r.provenance) else {
            return Err(Error::Manifest(format!(
                "record {} is not a captured LDR frame (needs exposure, tag and real provenance)",
                r.index
            )));
        };
        if r.timestamp != Timestamp::integer(frames.len() as i64) {
            return Err(Error::Manifest(format!(
                "record {} has timestamp {}, expected consecutive integers from 0",
                r.index, r.timestamp
            )));
        }
        let path = base.join(&r.filename);
        frames.push(read_pnm(&path, dt, tag).map_err(|e| with_path(&path, e))?);
        stops = r.stops;
    }
    Ok((AlternatingSequence::new(frames, 1.0)?, stops))
}

/// File name of the `index`-th reconstructed frame.
pub fn hdr_filename(index: usize) -> String {
    format!("hdr_{index:05}.pfm")
}

fn write_hdr_frames(out: &Path, frames: &[HdrFrame], stops: u32) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut records = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let filename = hdr_filename(i);
        write_pfm(out.join(&filename), &f.radiance)?;
        records.push(ManifestRecord {
            index: i as u64,
            timestamp: f.timestamp,
            filename,
            exposure_time_s: None,
            tag: None,
            provenance: f.provenance,
            stops,
        });
    }
    write_manifest(out.join(MANIFEST_NAME), &Manifest::new(records)?)
}

fn upscale(manifest: &Path, k: u32, backend: BackendKind, out: &Path) -> Result<()> {
    let (seq, stops) = load_sequence(manifest)?;
    info!("{} frames, backend {backend}, factor {}", seq.len(), 1u64 << k);
    let backend = backend.build();
    let streams = complete_exposure_streams(&seq, backend.as_ref())?;
    let frames = upscale_fps(&streams, k, backend.as_ref(), Crf::default())?;
    write_hdr_frames(out, &frames, stops)?;
    info!("wrote {} HDR frames to {}", frames.len(), out.display());
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let pred_manifest = a.pred.join(MANIFEST_NAME);
    let manifest = read_manifest(&pred_manifest).map_err(|e| with_path(&pred_manifest, e))?;
    let gt_paths = list_frames(&a.gt, "pfm")?;
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    let mut times = Vec::new();
    let mut prov = Vec::new();
    let mut skipped = 0usize;
    for r in manifest.records() {
        if !r.timestamp.is_integer() {
            skipped += 1;
            continue;
        }
        let t = r.timestamp.numerator();
        let gt_path = usize::try_from(t).ok().and_then(|i| gt_paths.get(i)).ok_or_else(|| {
            Error::InvalidInput(format!(
                "frame count mismatch: prediction at t={t} but {} holds {} ground-truth frames",
                a.gt.display(),
                gt_paths.len()
            ))
        })?;
        let pred_path = a.pred.join(&r.filename);
        preds.push(read_pfm(&pred_path).map_err(|e| with_path(&pred_path, e))?);
        gts.push(read_pfm(gt_path).map_err(|e| with_path(gt_path, e))?);
        times.push(r.timestamp);
        prov.push(r.provenance);
    }
    if preds.is_empty() {
        return Err(Error::InvalidInput("no prediction at an integer timestamp to evaluate".into()));
    }
    if skipped > 0 {
        warn!("{skipped} frames at fractional timestamps have no ground truth and were skipped");
    }
    let report = sequence_report(&preds, &gts, &times, &prov, MuLawParams::default())?;
    let mask = match a.mask {
        MaskArg::All => EvalMask::All,
        MaskArg::Synth => EvalMask::SynthesizedOnly,
    };
    report.write_csv_file(&a.report, mask)?;
    println!("{}", report.describe(mask));
    Ok(())
}

fn export(a: &ExportArgs) -> Result<()> {
    let (paths, frames) = read_pfm_dir(&a.input)?;
    fs::create_dir_all(&a.out)?;
    for (p, f) in paths.iter().zip(&frames) {
        let name = Path::new(p.file_name().expect("listed files have names")).with_extension("ppm");
        let bytes = match a.tonemap {
            TonemapArg::Reinhard => encode_pnm(reinhard_display(f, ReinhardParams::default())?.pixels(), 255)?,
            TonemapArg::Mulaw => {
                // each frame is normalized by its own peak
                let peak = f.pixels().max_value();
                let normalized = normalize_radiance(f, if peak > 0.0 { peak } else { 1.0 })?;
                encode_pnm(&mu_law(&normalized, MuLawParams::default())?, 255)?
            }
        };
        fs::write(a.out.join(name), bytes)?;
    }
    info!("exported {} frames to {}", frames.len(), a.out.display());
    Ok(())
}
