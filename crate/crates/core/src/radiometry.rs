//! Pixel buffers, LDR and radiance frames, and the power-law camera response
//! linking them.
//!
//! LDR formation is `v = clip((H·Δt)^(1/γ), 0, 1)` followed by optional
//! quantization; the inverse is `H = v^γ / Δt`. Radiance is relative and
//! unitless, exposure enters purely through the division by `Δt`.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Row-major interleaved RGB samples.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelBuffer {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl PixelBuffer {
    pub const CHANNELS: usize = 3;

    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        let expected = width * height * Self::CHANNELS;
        if data.len() != expected {
            return Err(Error::InvalidInput(format!(
                "buffer of {width}x{height} needs {expected} samples, got {}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at offset {i}")));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(value.is_finite());
        Self {
            width,
            height,
            data: vec![value; width * height * Self::CHANNELS],
        }
    }

    /// Builds a buffer by evaluating `f(x, y, channel)` for every sample.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height * Self::CHANNELS);
        for y in 0..height {
            for x in 0..width {
                for c in 0..Self::CHANNELS {
                    let v = f(x, y, c);
                    assert!(v.is_finite(), "non-finite sample at ({x}, {y}, {c})");
                    data.push(v);
                }
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * Self::CHANNELS + c]
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * Self::CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn same_shape(&self, other: &PixelBuffer) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn check_shape(&self, other: &PixelBuffer) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(self.dims(), other.dims()))
        }
    }

    /// Applies `f` to every sample. Panics if `f` produces a non-finite value.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let data: Vec<f64> = self
            .data
            .iter()
            .map(|&v| {
                let out = f(v);
                assert!(out.is_finite());
                out
            })
            .collect();
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Largest sample, or 0 for an empty buffer.
    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(0.0_f64, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::InvalidInput(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        Ok(Self::from_fn(width, height, |x, y, c| self.get(x0 + x, y0 + y, c)))
    }

    /// Rotates counter-clockwise by 90 degrees.
    pub fn rotate90(&self) -> Self {
        let (w, h) = self.dims();
        // out(x, y) = in(w - 1 - y, x), output is h x w
        Self::from_fn(h, w, |x, y, c| self.get(w - 1 - y, x, c))
    }

    pub fn flip_horizontal(&self) -> Self {
        let w = self.width;
        Self::from_fn(self.width, self.height, |x, y, c| self.get(w - 1 - x, y, c))
    }

    pub fn flip_vertical(&self) -> Self {
        let h = self.height;
        Self::from_fn(self.width, self.height, |x, y, c| self.get(x, h - 1 - y, c))
    }

    pub fn max_abs_diff(&self, other: &PixelBuffer) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn mean_abs_diff(&self, other: &PixelBuffer) -> Result<f64> {
        self.check_shape(other)?;
        if self.data.is_empty() {
            return Ok(0.0);
        }
        let sum: f64 = self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).sum();
        Ok(sum / self.data.len() as f64)
    }
}

/// Which half of the alternating exposure pattern a frame belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExposureTag {
    High,
    Low,
}

impl ExposureTag {
    pub fn opposite(self) -> Self {
        match self {
            ExposureTag::High => ExposureTag::Low,
            ExposureTag::Low => ExposureTag::High,
        }
    }

    /// Tag of frame `index` in a sequence starting with `start`.
    pub fn at_index(start: ExposureTag, index: usize) -> Self {
        if index % 2 == 0 {
            start
        } else {
            start.opposite()
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExposureTag::High => "H",
            ExposureTag::Low => "L",
        }
    }
}

impl fmt::Display for ExposureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExposureTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" | "h" | "high" => Ok(ExposureTag::High),
            "L" | "l" | "low" => Ok(ExposureTag::Low),
            other => Err(Error::InvalidInput(format!("unknown exposure tag {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BitDepth {
    Eight,
    Sixteen,
    Unquantized,
}

impl BitDepth {
    /// `2^b - 1`, or `None` when unquantized.
    pub fn max_code(self) -> Option<u32> {
        match self {
            BitDepth::Eight => Some(255),
            BitDepth::Sixteen => Some(65535),
            BitDepth::Unquantized => None,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(Error::InvalidParameter(format!("unsupported bit depth {other}"))),
        }
    }

    /// Largest error quantization can introduce, `0.5 / (2^b - 1)`.
    pub fn quantization_bound(self) -> f64 {
        match self.max_code() {
            Some(m) => 0.5 / f64::from(m),
            None => 0.0,
        }
    }

    pub fn quantize(self, v: f64) -> f64 {
        match self.max_code() {
            Some(m) => {
                let m = f64::from(m);
                (v * m).round() / m
            }
            None => v,
        }
    }
}

/// Whether a frame was captured or synthesized, and at which recursion level.
///
/// Level 0 is exposure completion; level `r >= 1` is the r-th midpoint
/// upscaling pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    Real,
    Synthesized { level: u32 },
}

impl Provenance {
    pub fn is_real(self) -> bool {
        matches!(self, Provenance::Real)
    }

    pub fn level(self) -> Option<u32> {
        match self {
            Provenance::Real => None,
            Provenance::Synthesized { level } => Some(level),
        }
    }
}

/// Gamma-encoded frame with samples in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LdrFrame {
    pixels: PixelBuffer,
    exposure_time: f64,
    tag: ExposureTag,
    bit_depth: BitDepth,
    provenance: Provenance,
}

impl LdrFrame {
    /// Wraps `pixels` as a real captured frame. Quantized bit depths require
    /// every sample to sit on the `k / (2^b - 1)` grid.
    pub fn new(pixels: PixelBuffer, exposure_time: f64, tag: ExposureTag, bit_depth: BitDepth) -> Result<Self> {
        if !(exposure_time.is_finite() && exposure_time > 0.0) {
            return Err(Error::InvalidInput(format!("exposure time must be > 0, got {exposure_time}")));
        }
        if let Some(v) = pixels.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("LDR sample {v} outside [0, 1]")));
        }
        if let Some(m) = bit_depth.max_code() {
            let m = f64::from(m);
            if let Some(v) = pixels.data().iter().find(|&&v| ((v * m).round() - v * m).abs() > 1e-6) {
                return Err(Error::InvalidInput(format!("sample {v} is not on the {m} quantization grid")));
            }
        }
        Ok(Self {
            pixels,
            exposure_time,
            tag,
            bit_depth,
            provenance: Provenance::Real,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn pixels(&self) -> &PixelBuffer {
        &self.pixels
    }

    pub fn into_pixels(self) -> PixelBuffer {
        self.pixels
    }

    pub fn exposure_time(&self) -> f64 {
        self.exposure_time
    }

    pub fn tag(&self) -> ExposureTag {
        self.tag
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.pixels.dims()
    }

    /// Same exposure metadata, new pixels. Used by geometric transforms that
    /// only move samples around.
    pub(crate) fn with_pixels(&self, pixels: PixelBuffer) -> Self {
        Self {
            pixels,
            exposure_time: self.exposure_time,
            tag: self.tag,
            bit_depth: self.bit_depth,
            provenance: self.provenance,
        }
    }
}

/// Linear-domain frame of non-negative relative radiance.
#[derive(Clone, Debug, PartialEq)]
pub struct RadianceFrame {
    pixels: PixelBuffer,
}

impl RadianceFrame {
    pub fn new(pixels: PixelBuffer) -> Result<Self> {
        if let Some(v) = pixels.data().iter().find(|&&v| v < 0.0) {
            return Err(Error::InvalidInput(format!("negative radiance {v}")));
        }
        Ok(Self { pixels })
    }

    pub fn pixels(&self) -> &PixelBuffer {
        &self.pixels
    }

    pub fn into_pixels(self) -> PixelBuffer {
        self.pixels
    }

    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.pixels.dims()
    }
}

/// Power-law camera response.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crf {
    gamma: f64,
}

impl Crf {
    pub const DEFAULT_GAMMA: f64 = 2.2;

    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `v^γ / Δt` for a single sample.
    #[inline]
    pub fn linearize(&self, v: f64, exposure_time: f64) -> f64 {
        v.powf(self.gamma) / exposure_time
    }

    /// `clip((H·Δt)^(1/γ), 0, 1)` for a single sample, before quantization.
    #[inline]
    pub fn delinearize(&self, radiance: f64, exposure_time: f64) -> f64 {
        (radiance * exposure_time).powf(1.0 / self.gamma).clamp(0.0, 1.0)
    }
}

impl Default for Crf {
    fn default() -> Self {
        Self {
            gamma: Self::DEFAULT_GAMMA,
        }
    }
}

pub fn ldr_to_radiance(frame: &LdrFrame, crf: Crf) -> Result<RadianceFrame> {
    let dt = frame.exposure_time();
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("exposure time must be > 0, got {dt}")));
    }
    if let Some(v) = frame.pixels().data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidInput(format!("LDR sample {v} outside [0, 1]")));
    }
    Ok(RadianceFrame {
        pixels: frame.pixels().map(|v| crf.linearize(v, dt)),
    })
}

/// Exposes `frame` for `exposure_time` seconds. The tag is the caller's
/// bookkeeping and is attached as given.
pub fn radiance_to_ldr(
    frame: &RadianceFrame,
    exposure_time: f64,
    crf: Crf,
    bit_depth: BitDepth,
    tag: ExposureTag,
) -> Result<LdrFrame> {
    if !(exposure_time.is_finite() && exposure_time > 0.0) {
        return Err(Error::InvalidInput(format!("exposure time must be > 0, got {exposure_time}")));
    }
    let pixels = frame
        .pixels()
        .map(|h| bit_depth.quantize(crf.delinearize(h, exposure_time)));
    Ok(LdrFrame {
        pixels,
        exposure_time,
        tag,
        bit_depth,
        provenance: Provenance::Real,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ldr(value: f64, dt: f64) -> LdrFrame {
        LdrFrame::new(PixelBuffer::filled(2, 2, value), dt, ExposureTag::High, BitDepth::Unquantized).unwrap()
    }

    fn radiance(value: f64) -> RadianceFrame {
        RadianceFrame::new(PixelBuffer::filled(2, 2, value)).unwrap()
    }

    #[test]
    fn ldr_to_radiance_examples() {
        let crf = Crf::default();
        let zero = ldr_to_radiance(&ldr(0.0, 0.01), crf).unwrap();
        assert!(zero.pixels().data().iter().all(|&h| h == 0.0));

        let one = ldr_to_radiance(&ldr(1.0, 1.0), crf).unwrap();
        assert!(one.pixels().data().iter().all(|&h| h == 1.0));

        // 0.5^2.2 / 0.25, evaluated at 40 digits
        let half = ldr_to_radiance(&ldr(0.5, 0.25), crf).unwrap();
        assert_abs_diff_eq!(half.pixels().get(0, 0, 0), 0.870_550_563_296_124_1, epsilon = 1e-12);
    }

    #[test]
    fn radiance_to_ldr_examples() {
        let crf = Crf::default();
        let f = |h, dt| {
            radiance_to_ldr(&radiance(h), dt, crf, BitDepth::Unquantized, ExposureTag::Low)
                .unwrap()
                .pixels()
                .get(1, 1, 2)
        };
        assert_eq!(f(1.0, 1.0), 1.0);
        assert_eq!(f(4.0, 1.0), 1.0);
        assert_abs_diff_eq!(f(0.870_551, 0.25), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn saturated_sample_maps_to_inverse_exposure() {
        let crf = Crf::default();
        let h = ldr_to_radiance(&ldr(1.0, 0.125), crf).unwrap();
        assert_eq!(h.pixels().get(0, 0, 0), 8.0);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(matches!(
            LdrFrame::new(PixelBuffer::filled(1, 1, 1.5), 1.0, ExposureTag::High, BitDepth::Unquantized),
            Err(Error::InvalidInput(_))
        ));
        assert!(LdrFrame::new(PixelBuffer::filled(1, 1, 0.5), 0.0, ExposureTag::High, BitDepth::Unquantized).is_err());
        assert!(PixelBuffer::new(1, 1, vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(PixelBuffer::new(1, 1, vec![0.0, 0.0]).is_err());
        assert!(RadianceFrame::new(PixelBuffer::filled(1, 1, -1.0)).is_err());
        assert!(Crf::new(0.0).is_err());
        // 0.5 is not k/255
        assert!(LdrFrame::new(PixelBuffer::filled(1, 1, 0.5), 1.0, ExposureTag::High, BitDepth::Eight).is_err());
        assert!(
            radiance_to_ldr(&radiance(1.0), -1.0, Crf::default(), BitDepth::Eight, ExposureTag::High).is_err()
        );
    }

    #[test]
    fn quantized_output_sits_on_grid() {
        let frame = RadianceFrame::new(PixelBuffer::from_fn(8, 8, |x, y, c| (x * 8 + y) as f64 * 0.013 + c as f64 * 0.1))
            .unwrap();
        for depth in [BitDepth::Eight, BitDepth::Sixteen] {
            let ldr = radiance_to_ldr(&frame, 1.0, Crf::default(), depth, ExposureTag::High).unwrap();
            // the constructor re-validates the grid
            LdrFrame::new(ldr.pixels().clone(), 1.0, ExposureTag::High, depth).unwrap();
        }
    }

    #[test]
    fn geometric_transforms() {
        let buf = PixelBuffer::from_fn(3, 2, |x, y, c| (x + 10 * y + 100 * c) as f64);
        let r = buf.rotate90();
        assert_eq!(r.dims(), (2, 3));
        // top-right corner moves to top-left under a CCW rotation
        assert_eq!(r.pixel(0, 0), buf.pixel(2, 0));
        assert_eq!(buf.rotate90().rotate90().rotate90().rotate90(), buf);
        assert_eq!(buf.flip_horizontal().pixel(0, 1), buf.pixel(2, 1));
        assert_eq!(buf.flip_vertical().pixel(1, 0), buf.pixel(1, 1));
        assert_eq!(buf.crop(1, 1, 2, 1).unwrap().pixel(1, 0), buf.pixel(2, 1));
        assert!(buf.crop(2, 0, 2, 1).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_unclipped(v in 0.0f64..=1.0, dt in 0.01f64..4.0, gamma in 1.0f64..3.0) {
            let crf = Crf::new(gamma).unwrap();
            let h = crf.linearize(v, dt);
            prop_assume!(h * dt <= 1.0);
            prop_assert!((crf.delinearize(h, dt) - v).abs() <= 1e-6);
        }

        #[test]
        fn conversions_are_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, dt in 0.01f64..4.0) {
            let crf = Crf::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(crf.linearize(lo, dt) <= crf.linearize(hi, dt));
            prop_assert!(crf.delinearize(lo * 5.0, dt) <= crf.delinearize(hi * 5.0, dt));
        }

        #[test]
        fn quantization_error_bounded(v in 0.0f64..=1.0) {
            for depth in [BitDepth::Eight, BitDepth::Sixteen] {
                prop_assert!((depth.quantize(v) - v).abs() <= depth.quantization_bound() + 1e-15);
            }
        }
    }
}
