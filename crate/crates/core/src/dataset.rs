//! Benchmark generation.
//!
//! [`simulate_alternating`] exposes a ground-truth radiance sequence with an
//! alternating long/short exposure program, the way training and test data
//! are built from HDR video. [`SceneSpec`] renders procedural scenes with
//! analytic ground truth at any (fractional) time, which is what the oracle
//! tests evaluate against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::io::manifest::{Manifest, ManifestRecord};
use crate::radiometry::{radiance_to_ldr, BitDepth, Crf, ExposureTag, LdrFrame, PixelBuffer, Provenance, RadianceFrame};
use crate::scheduler::{AlternatingSequence, Timestamp};
use crate::{Error, Result};

/// Alternating exposure schedule. The short exposure is the long one divided
/// by `2^stops`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExposureProgram {
    base_high_exposure: f64,
    stops: u32,
    start_tag: ExposureTag,
}

impl ExposureProgram {
    pub fn new(base_high_exposure: f64, stops: u32, start_tag: ExposureTag) -> Result<Self> {
        if !(base_high_exposure.is_finite() && base_high_exposure > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "base exposure must be > 0, got {base_high_exposure}"
            )));
        }
        if !(1..=3).contains(&stops) {
            return Err(Error::InvalidParameter(format!("stops must be 1, 2 or 3, got {stops}")));
        }
        Ok(Self {
            base_high_exposure,
            stops,
            start_tag,
        })
    }

    /// Draws the stop separation uniformly from {1, 2, 3}.
    pub fn with_random_stops(base_high_exposure: f64, start_tag: ExposureTag, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new(base_high_exposure, rng.random_range(1..=3), start_tag)
    }

    pub fn high_exposure(&self) -> f64 {
        self.base_high_exposure
    }

    pub fn low_exposure(&self) -> f64 {
        self.base_high_exposure / f64::from(1u32 << self.stops)
    }

    pub fn stops(&self) -> u32 {
        self.stops
    }

    pub fn start_tag(&self) -> ExposureTag {
        self.start_tag
    }

    pub fn exposure_for(&self, tag: ExposureTag) -> f64 {
        match tag {
            ExposureTag::High => self.high_exposure(),
            ExposureTag::Low => self.low_exposure(),
        }
    }
}

/// Additive Gaussian noise in the gamma-encoded domain, before quantization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct SimulatedSequence {
    pub sequence: AlternatingSequence,
    pub manifest: Manifest,
}

/// File name used for frame `index` of a simulated sequence.
pub fn ldr_filename(index: usize) -> String {
    format!("frame_{index:05}.ppm")
}

pub fn simulate_alternating(
    hdr_seq: &[RadianceFrame],
    program: &ExposureProgram,
    bit_depth: BitDepth,
    crf: Crf,
    noise: Option<NoiseModel>,
) -> Result<SimulatedSequence> {
    if hdr_seq.is_empty() {
        return Err(Error::InvalidInput("no HDR frames to expose".into()));
    }
    let mut frames = Vec::with_capacity(hdr_seq.len());
    let mut records = Vec::with_capacity(hdr_seq.len());
    for (i, hdr) in hdr_seq.iter().enumerate() {
        let tag = ExposureTag::at_index(program.start_tag, i);
        let dt = program.exposure_for(tag);
        let frame = match noise {
            None => radiance_to_ldr(hdr, dt, crf, bit_depth, tag)?,
            Some(model) => {
                let clean = radiance_to_ldr(hdr, dt, crf, BitDepth::Unquantized, tag)?;
                // one stream per frame: draws do not depend on generation order
                let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
                rng.set_stream(i as u64);
                let normal = Normal::new(0.0, model.sigma)
                    .map_err(|e| Error::InvalidParameter(format!("noise sigma: {e}")))?;
                let noisy = clean
                    .pixels()
                    .map(|v| bit_depth.quantize((v + normal.sample(&mut rng)).clamp(0.0, 1.0)));
                LdrFrame::new(noisy, dt, tag, bit_depth)?
            }
        };
        records.push(ManifestRecord {
            index: i as u64,
            timestamp: Timestamp::integer(i as i64),
            filename: ldr_filename(i),
            exposure_time_s: Some(dt),
            tag: Some(tag),
            provenance: Provenance::Real,
            stops: program.stops,
        });
        frames.push(frame);
    }
    let sequence = AlternatingSequence::new(frames, 1.0)?;
    Ok(SimulatedSequence {
        sequence,
        manifest: Manifest::new(records)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SceneElement {
    /// Isotropic Gaussian, `peak · exp(−|p − c(t)|² / 2σ²)`.
    GaussianBlob {
        center: [f64; 2],
        sigma: f64,
        peak: [f64; 3],
        velocity: [f64; 2],
    },
    /// Ramp rising from 0 at `origin` to `peak` over `length` pixels along
    /// `direction` (normalized internally), flat beyond.
    LinearRamp {
        origin: [f64; 2],
        direction: [f64; 2],
        length: f64,
        peak: [f64; 3],
        velocity: [f64; 2],
    },
    /// Axis-aligned rectangle with exact pixel-area coverage at its edges.
    ConstantPlate {
        top_left: [f64; 2],
        size: [f64; 2],
        radiance: [f64; 3],
        velocity: [f64; 2],
    },
}

impl SceneElement {
    fn velocity(&self) -> [f64; 2] {
        match *self {
            SceneElement::GaussianBlob { velocity, .. }
            | SceneElement::LinearRamp { velocity, .. }
            | SceneElement::ConstantPlate { velocity, .. } => velocity,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SceneElement::GaussianBlob { sigma, peak, .. } => sigma > 0.0 && peak.iter().all(|&p| p > 0.0),
            SceneElement::LinearRamp {
                length, peak, direction, ..
            } => length > 0.0 && peak.iter().all(|&p| p > 0.0) && direction[0].hypot(direction[1]) > 0.0,
            SceneElement::ConstantPlate { size, radiance, .. } => {
                size[0] > 0.0 && size[1] > 0.0 && radiance.iter().all(|&p| p > 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid scene element {self:?}")))
        }
    }

    /// Adds this element's contribution at pixel `(x, y)` and time `t`.
    fn accumulate(&self, x: f64, y: f64, t: f64, out: &mut [f64; 3]) {
        let [vx, vy] = self.velocity();
        let (dx, dy) = (vx * t, vy * t);
        match *self {
            SceneElement::GaussianBlob { center, sigma, peak, .. } => {
                let rx = x - center[0] - dx;
                let ry = y - center[1] - dy;
                let g = (-(rx * rx + ry * ry) / (2.0 * sigma * sigma)).exp();
                for c in 0..3 {
                    out[c] += peak[c] * g;
                }
            }
            SceneElement::LinearRamp {
                origin,
                direction,
                length,
                peak,
                ..
            } => {
                let norm = direction[0].hypot(direction[1]);
                let along = ((x - origin[0] - dx) * direction[0] + (y - origin[1] - dy) * direction[1]) / norm;
                let s = (along / length).clamp(0.0, 1.0);
                for c in 0..3 {
                    out[c] += peak[c] * s;
                }
            }
            SceneElement::ConstantPlate {
                top_left,
                size,
                radiance,
                ..
            } => {
                // pixel (x, y) covers [x − ½, x + ½] × [y − ½, y + ½]
                let cover = |p: f64, lo: f64, len: f64| ((p + 0.5).min(lo + len) - (p - 0.5).max(lo)).max(0.0);
                let area = cover(x, top_left[0] + dx, size[0]) * cover(y, top_left[1] + dy, size[1]);
                if area > 0.0 {
                    for c in 0..3 {
                        out[c] += radiance[c] * area;
                    }
                }
            }
        }
    }
}

/// Analytic scene description; every element moves at constant velocity in
/// pixels per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub duration: usize,
    pub background: [f64; 3],
    pub elements: Vec<SceneElement>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("scene has zero area".into()));
        }
        if self.background.iter().any(|&b| !(b.is_finite() && b >= 0.0)) {
            return Err(Error::InvalidParameter("background radiance must be >= 0".into()));
        }
        self.elements.iter().try_for_each(SceneElement::validate)
    }

    /// Ground truth at every integer frame of the scene's duration.
    pub fn render_all(&self) -> Result<Vec<RadianceFrame>> {
        (0..self.duration).map(|i| procedural_scene(self, i as f64)).collect()
    }

    pub fn render_at(&self, t: Timestamp) -> Result<RadianceFrame> {
        procedural_scene(self, t.as_f64())
    }
}

/// Renders `spec` at time `t` (in frames; fractional values allowed).
pub fn procedural_scene(spec: &SceneSpec, t: f64) -> Result<RadianceFrame> {
    spec.validate()?;
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("render time {t}")));
    }
    let mut data = Vec::with_capacity(spec.width * spec.height * 3);
    for y in 0..spec.height {
        for x in 0..spec.width {
            let mut px = spec.background;
            for e in &spec.elements {
                e.accumulate(x as f64, y as f64, t, &mut px);
            }
            data.extend_from_slice(&px);
        }
    }
    RadianceFrame::new(PixelBuffer::new(spec.width, spec.height, data)?)
}

/// Geometric augmentation applied identically to every frame of a patch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Augmentation {
    /// Number of counter-clockwise quarter turns, 0..=3.
    pub quarter_turns: u8,
    pub flip_horizontal: bool,
    pub flip_vertical: bool,
}

impl Augmentation {
    fn apply(&self, buf: &PixelBuffer) -> PixelBuffer {
        let mut out = buf.clone();
        for _ in 0..self.quarter_turns {
            out = out.rotate90();
        }
        if self.flip_horizontal {
            out = out.flip_horizontal();
        }
        if self.flip_vertical {
            out = out.flip_vertical();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    /// Index of the first frame of the triplet in the source sequence.
    pub start_index: usize,
    pub origin: (usize, usize),
    pub augmentation: Augmentation,
    pub frames: Vec<LdrFrame>,
    pub ground_truth: Vec<RadianceFrame>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatchSet {
    pub patch_size: usize,
    pub patches: Vec<Patch>,
}

pub const DEFAULT_PATCH_SIZE: usize = 256;
/// Frames per training sample: previous, reference, next.
pub const PATCH_FRAMES: usize = 3;

/// Random square crops of consecutive frame triplets with matching ground
/// truth. Patch `i` draws from its own RNG stream, so the result depends
/// only on `seed`.
pub fn patchify(
    seq: &AlternatingSequence,
    gt: &[RadianceFrame],
    count: usize,
    patch_size: usize,
    seed: u64,
    augment: bool,
) -> Result<PatchSet> {
    if gt.len() != seq.len() {
        return Err(Error::InvalidInput(format!(
            "{} LDR frames but {} ground-truth frames",
            seq.len(),
            gt.len()
        )));
    }
    if seq.len() < PATCH_FRAMES {
        return Err(Error::TooShort {
            len: seq.len(),
            min: PATCH_FRAMES,
        });
    }
    let (w, h) = seq.dims();
    if patch_size == 0 || w < patch_size || h < patch_size {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min: patch_size,
        });
    }
    if let Some(g) = gt.iter().find(|g| g.dims() != (w, h)) {
        return Err(Error::shape((w, h), g.dims()));
    }

    let mut patches = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let start_index = rng.random_range(0..=seq.len() - PATCH_FRAMES);
        let x0 = rng.random_range(0..=w - patch_size);
        let y0 = rng.random_range(0..=h - patch_size);
        let augmentation = if augment {
            Augmentation {
                quarter_turns: rng.random_range(0..4),
                flip_horizontal: rng.random(),
                flip_vertical: rng.random(),
            }
        } else {
            Augmentation::default()
        };

        let mut frames = Vec::with_capacity(PATCH_FRAMES);
        let mut ground_truth = Vec::with_capacity(PATCH_FRAMES);
        for j in start_index..start_index + PATCH_FRAMES {
            let src = &seq.frames()[j];
            let crop = augmentation.apply(&src.pixels().crop(x0, y0, patch_size, patch_size)?);
            frames.push(src.with_pixels(crop));
            let g = augmentation.apply(&gt[j].pixels().crop(x0, y0, patch_size, patch_size)?);
            ground_truth.push(RadianceFrame::new(g)?);
        }
        patches.push(Patch {
            start_index,
            origin: (x0, y0),
            augmentation,
            frames,
            ground_truth,
        });
    }
    Ok(PatchSet { patch_size, patches })
}
