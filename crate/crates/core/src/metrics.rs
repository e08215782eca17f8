//! Tonemapped error metrics and per-sequence reports.
//!
//! Both frames are divided by a shared reference (the larger of the two
//! maxima, which is the ground-truth maximum whenever the prediction does not
//! overshoot it) and passed through the μ-law before comparison. PSNR uses
//! the per-channel MSE over RGB with a peak of 1.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::radiometry::{PixelBuffer, Provenance, RadianceFrame};
use crate::scheduler::Timestamp;
use crate::tonemap::{mu_law, normalize_radiance, MuLawParams};
use crate::{Error, Result};

/// Reported for identical frames instead of +∞.
pub const PSNR_CAP_DB: f64 = 99.0;

fn tonemapped_pair(pred: &RadianceFrame, gt: &RadianceFrame, params: MuLawParams) -> Result<(PixelBuffer, PixelBuffer)> {
    pred.pixels().check_shape(gt.pixels())?;
    let reference = gt.pixels().max_value().max(pred.pixels().max_value());
    let reference = if reference > 0.0 { reference } else { 1.0 };
    let p = mu_law(&normalize_radiance(pred, reference)?, params)?;
    let g = mu_law(&normalize_radiance(gt, reference)?, params)?;
    Ok((p, g))
}

/// PSNR between buffers already in the tonemapped `[0, 1]` domain.
pub fn psnr_tonemapped(pred: &PixelBuffer, gt: &PixelBuffer) -> Result<f64> {
    pred.check_shape(gt)?;
    if pred.is_empty() {
        return Err(Error::InvalidInput("empty frame".into()));
    }
    let sse: f64 = pred.data().iter().zip(gt.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    let mse = sse / pred.data().len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

pub fn mu_psnr(pred: &RadianceFrame, gt: &RadianceFrame, params: MuLawParams) -> Result<f64> {
    let (p, g) = tonemapped_pair(pred, gt, params)?;
    psnr_tonemapped(&p, &g)
}

/// Mean `|T(pred) − T(gt)|` over all samples.
pub fn l1_tonemapped(pred: &RadianceFrame, gt: &RadianceFrame, params: MuLawParams) -> Result<f64> {
    let (p, g) = tonemapped_pair(pred, gt, params)?;
    if p.is_empty() {
        return Err(Error::InvalidInput("empty frame".into()));
    }
    p.mean_abs_diff(&g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EvalMask {
    #[default]
    All,
    SynthesizedOnly,
}

impl EvalMask {
    pub fn includes(self, provenance: Provenance) -> bool {
        match self {
            EvalMask::All => true,
            EvalMask::SynthesizedOnly => !provenance.is_real(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EvalMask::All => "all",
            EvalMask::SynthesizedOnly => "synth",
        }
    }
}

impl fmt::Display for EvalMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(EvalMask::All),
            "synth" | "synthesized" => Ok(EvalMask::SynthesizedOnly),
            other => Err(Error::InvalidParameter(format!("unknown mask {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameScore {
    pub frame_index: usize,
    pub timestamp: Timestamp,
    pub provenance: Provenance,
    pub mu_psnr_db: f64,
    pub l1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskSummary {
    pub count: usize,
    pub mean_mu_psnr_db: f64,
    pub mean_l1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceReport {
    pub frames: Vec<FrameScore>,
    pub all: Option<MaskSummary>,
    pub synthesized: Option<MaskSummary>,
}

impl SequenceReport {
    pub fn summary(&self, mask: EvalMask) -> Option<MaskSummary> {
        match mask {
            EvalMask::All => self.all,
            EvalMask::SynthesizedOnly => self.synthesized,
        }
    }

    /// Rows restricted to `mask`.
    pub fn rows(&self, mask: EvalMask) -> impl Iterator<Item = &FrameScore> {
        self.frames.iter().filter(move |r| mask.includes(r.provenance))
    }

    pub fn write_csv<W: Write>(&self, out: W, mask: EvalMask) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(e.into());
        w.write_record(["frame_index", "timestamp", "provenance", "mu_psnr_db", "l1"])
            .map_err(csv_err)?;
        for r in self.rows(mask) {
            let prov = match r.provenance {
                Provenance::Real => "real".to_string(),
                Provenance::Synthesized { level } => format!("synth{level}"),
            };
            w.write_record([
                r.frame_index.to_string(),
                r.timestamp.to_string(),
                prov,
                format!("{:.6}", r.mu_psnr_db),
                format!("{:.9}", r.l1),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>, mask: EvalMask) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file), mask)
    }

    /// Human-readable summary for `mask`.
    pub fn describe(&self, mask: EvalMask) -> String {
        match self.summary(mask) {
            Some(s) => format!(
                "frames={} mask={} mean_mu_psnr_db={:.4} mean_l1={:.6}",
                s.count, mask, s.mean_mu_psnr_db, s.mean_l1
            ),
            None => format!("frames=0 mask={mask} (nothing to evaluate)"),
        }
    }
}

fn summarize<'a>(rows: impl Iterator<Item = &'a FrameScore>) -> Option<MaskSummary> {
    let (mut n, mut psnr, mut l1) = (0usize, 0.0, 0.0);
    for r in rows {
        n += 1;
        psnr += r.mu_psnr_db;
        l1 += r.l1;
    }
    (n > 0).then(|| MaskSummary {
        count: n,
        mean_mu_psnr_db: psnr / n as f64,
        mean_l1: l1 / n as f64,
    })
}

/// Scores aligned prediction / ground-truth lists. Means are arithmetic
/// averages of per-frame values (PSNR averaged in dB).
pub fn sequence_report(
    preds: &[RadianceFrame],
    gts: &[RadianceFrame],
    timestamps: &[Timestamp],
    provenance: &[Provenance],
    params: MuLawParams,
) -> Result<SequenceReport> {
    let n = preds.len();
    if gts.len() != n || timestamps.len() != n || provenance.len() != n {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {n} predictions, {} ground truths, {} timestamps, {} provenance entries",
            gts.len(),
            timestamps.len(),
            provenance.len()
        )));
    }
    let frames = (0..n)
        .map(|i| {
            Ok(FrameScore {
                frame_index: i,
                timestamp: timestamps[i],
                provenance: provenance[i],
                mu_psnr_db: mu_psnr(&preds[i], &gts[i], params)?,
                l1: l1_tonemapped(&preds[i], &gts[i], params)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all = summarize(frames.iter());
    let synthesized = summarize(frames.iter().filter(|r| !r.provenance.is_real()));
    Ok(SequenceReport {
        frames,
        all,
        synthesized,
    })
}
