//! μ-law range compression (used by losses and metrics) and a global
//! Reinhard operator for displayable exports.

use crate::radiometry::{BitDepth, Crf, ExposureTag, LdrFrame, PixelBuffer, RadianceFrame};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuLawParams {
    mu: f64,
}

impl MuLawParams {
    pub const DEFAULT_MU: f64 = 5000.0;

    pub fn new(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParameter(format!("mu must be > 0, got {mu}")));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `log(1 + μx) / log(1 + μ)`.
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (self.mu * x).ln_1p() / self.mu.ln_1p()
    }
}

impl Default for MuLawParams {
    fn default() -> Self {
        Self { mu: Self::DEFAULT_MU }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReinhardParams {
    pub key_value: f64,
    /// Guards the log-average against black pixels.
    pub epsilon: f64,
}

impl Default for ReinhardParams {
    fn default() -> Self {
        Self {
            key_value: 0.18,
            epsilon: 1e-6,
        }
    }
}

/// Divides by `reference_max` and clamps to `[0, 1]`.
pub fn normalize_radiance(frame: &RadianceFrame, reference_max: f64) -> Result<RadianceFrame> {
    if !(reference_max.is_finite() && reference_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "reference max must be > 0, got {reference_max}"
        )));
    }
    RadianceFrame::new(frame.pixels().map(|h| (h / reference_max).clamp(0.0, 1.0)))
}

/// μ-law tonemapping of an already normalized frame.
pub fn mu_law(frame: &RadianceFrame, params: MuLawParams) -> Result<PixelBuffer> {
    if let Some(v) = frame.pixels().data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidInput(format!(
            "mu-law input {v} outside [0, 1]; normalize first"
        )));
    }
    Ok(frame.pixels().map(|x| params.apply(x)))
}

const LUMA: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// Global Reinhard mapping in linear space, before gamma encoding: luminance
/// scaled by `key / exp(mean log(L + ε))`, compressed by `L / (1 + L)`, color
/// ratios preserved.
pub fn reinhard_linear(frame: &RadianceFrame, params: ReinhardParams) -> Result<PixelBuffer> {
    let px = frame.pixels();
    if px.pixel_count() == 0 {
        return Err(Error::InvalidInput("cannot tonemap a zero-area frame".into()));
    }
    if !(params.key_value > 0.0) {
        return Err(Error::InvalidParameter(format!("key value must be > 0, got {}", params.key_value)));
    }
    let luminance: Vec<f64> = px
        .data()
        .chunks_exact(3)
        .map(|p| LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2])
        .collect();
    let log_sum: f64 = luminance.iter().map(|l| (l + params.epsilon).ln()).sum();
    let log_mean = (log_sum / luminance.len() as f64).exp();
    let scale = params.key_value / log_mean;

    let mut data = Vec::with_capacity(px.data().len());
    for (p, &l) in px.data().chunks_exact(3).zip(&luminance) {
        if l <= 0.0 {
            data.extend_from_slice(&[0.0; 3]);
            continue;
        }
        let scaled = l * scale;
        let ratio = (scaled / (1.0 + scaled)) / l;
        data.extend(p.iter().map(|c| (c * ratio).clamp(0.0, 1.0)));
    }
    PixelBuffer::new(px.width(), px.height(), data)
}

/// Displayable 8-bit rendition. The result carries a nominal `High` tag and
/// unit exposure; neither is meaningful for display frames.
pub fn reinhard_display(frame: &RadianceFrame, params: ReinhardParams) -> Result<LdrFrame> {
    let linear = reinhard_linear(frame, params)?;
    let crf = Crf::default();
    let encoded = linear.map(|v| BitDepth::Eight.quantize(crf.delinearize(v, 1.0)));
    LdrFrame::new(encoded, 1.0, ExposureTag::High, BitDepth::Eight)
}
