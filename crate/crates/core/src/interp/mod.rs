//! Frame interpolation: synthesize the frame at fractional time `τ` between
//! two frames of the same exposure.
//!
//! Backends implement [`InterpolationBackend`] so the scheduler never needs to
//! know which one it drives. Two are provided:
//!
//! * [`BlendBackend`]: `A + τ(B − A)`, no motion compensation.
//! * [`FlowBackend`]: bidirectional dense flow, linear-motion intermediate
//!   flows, backward warping, and forward-backward consistency visibility.

mod flow;
mod plane;
mod warp;

use std::fmt;
use std::str::FromStr;

pub use flow::{
    consistency_visibility, estimate_flow, estimate_flow_planes, pyramid_levels, FlowField, FlowParams,
    MIN_FLOW_SIZE,
};
pub use plane::Plane;
pub use warp::warp_backward;

use crate::radiometry::{BitDepth, LdrFrame, PixelBuffer, Provenance};
use crate::{Error, Result};

/// Denominators below this fall back to the plain average.
pub const VISIBILITY_EPSILON: f64 = 1e-6;

pub trait InterpolationBackend: Send + Sync {
    fn name(&self) -> &'static str;

    /// Pixels at time `tau`. Inputs are already validated by [`interpolate`].
    fn synthesize(&self, a: &LdrFrame, b: &LdrFrame, tau: f64) -> Result<PixelBuffer>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BlendBackend;

impl InterpolationBackend for BlendBackend {
    fn name(&self) -> &'static str {
        "blend"
    }

    fn synthesize(&self, a: &LdrFrame, b: &LdrFrame, tau: f64) -> Result<PixelBuffer> {
        let data = a
            .pixels()
            .data()
            .iter()
            .zip(b.pixels().data())
            .map(|(&va, &vb)| plane::lerp(va, vb, tau).clamp(0.0, 1.0))
            .collect();
        PixelBuffer::new(a.width(), a.height(), data)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FlowBackend {
    pub flow: FlowParams,
    /// Scale of the forward-backward consistency falloff, in pixels.
    pub visibility_sigma: f64,
}

impl Default for FlowBackend {
    fn default() -> Self {
        Self {
            flow: FlowParams::default(),
            visibility_sigma: 2.0,
        }
    }
}

impl InterpolationBackend for FlowBackend {
    fn name(&self) -> &'static str {
        "flow"
    }

    fn synthesize(&self, a: &LdrFrame, b: &LdrFrame, tau: f64) -> Result<PixelBuffer> {
        let gray_a = Plane::gray(a.pixels());
        let gray_b = Plane::gray(b.pixels());
        let ab = estimate_flow_planes(&gray_a, &gray_b, &self.flow)?;
        let ba = estimate_flow_planes(&gray_b, &gray_a, &self.flow)?;
        let vis_a = consistency_visibility(&ab, &ba, self.visibility_sigma);
        let vis_b = consistency_visibility(&ba, &ab, self.visibility_sigma);

        // Linear motion: F_{τ→A} = −τ F_{A→B}, F_{τ→B} = −(1−τ) F_{B→A}.
        let scale_a = -tau;
        let scale_b = -(1.0 - tau);
        let warped_a = warp::warp_buffer(a.pixels(), &ab, scale_a)?;
        let warped_b = warp::warp_buffer(b.pixels(), &ba, scale_b)?;
        let vis_a = VisibilityMap::new(warp::warp_plane(&vis_a, &ab, scale_a))?;
        let vis_b = VisibilityMap::new(warp::warp_plane(&vis_b, &ba, scale_b))?;
        blend_buffers(&warped_a, &warped_b, &vis_a, &vis_b, tau)
    }
}

/// Backend names accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BackendKind {
    Blend,
    Flow,
}

impl BackendKind {
    pub fn build(self) -> Box<dyn InterpolationBackend> {
        match self {
            BackendKind::Blend => Box::new(BlendBackend),
            BackendKind::Flow => Box::new(FlowBackend::default()),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Blend => "blend",
            BackendKind::Flow => "flow",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blend" => Ok(BackendKind::Blend),
            "flow" => Ok(BackendKind::Flow),
            other => Err(Error::InvalidParameter(format!("unknown backend {other:?}"))),
        }
    }
}

/// Per-pixel trust in a warped source, values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VisibilityMap(Plane);

impl VisibilityMap {
    pub fn new(plane: Plane) -> Result<Self> {
        if let Some(v) = plane.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("visibility {v} outside [0, 1]")));
        }
        Ok(Self(plane))
    }

    pub fn ones(width: usize, height: usize) -> Self {
        Self(Plane::filled(width, height, 1.0))
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }
}

/// `f_interp`: the frame between `a` (τ = 0) and `b` (τ = 1).
///
/// The output keeps `a`'s tag and exposure time, is unquantized, and is
/// marked `Synthesized { level: 0 }`; the scheduler re-labels the level.
pub fn interpolate(a: &LdrFrame, b: &LdrFrame, tau: f64, backend: &dyn InterpolationBackend) -> Result<LdrFrame> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter(format!("tau must lie in (0, 1), got {tau}")));
    }
    if a.tag() != b.tag() {
        return Err(Error::ExposureMismatch(format!(
            "cannot interpolate between {} and {} exposures",
            a.tag(),
            b.tag()
        )));
    }
    if a.exposure_time() != b.exposure_time() {
        return Err(Error::ExposureMismatch(format!(
            "exposure times differ: {} s vs {} s",
            a.exposure_time(),
            b.exposure_time()
        )));
    }
    a.pixels().check_shape(b.pixels())?;
    let pixels = backend.synthesize(a, b, tau)?;
    Ok(LdrFrame::new(pixels, a.exposure_time(), a.tag(), BitDepth::Unquantized)?
        .with_provenance(Provenance::Synthesized { level: 0 }))
}

/// `[(1−τ)V_A W_A + τ V_B W_B] / [(1−τ)V_A + τ V_B]`, falling back to the
/// plain average where the denominator is below [`VISIBILITY_EPSILON`].
pub fn blend_with_visibility(
    warp_a: &LdrFrame,
    warp_b: &LdrFrame,
    vis_a: &VisibilityMap,
    vis_b: &VisibilityMap,
    tau: f64,
) -> Result<LdrFrame> {
    let pixels = blend_buffers(warp_a.pixels(), warp_b.pixels(), vis_a, vis_b, tau)?;
    Ok(
        LdrFrame::new(pixels, warp_a.exposure_time(), warp_a.tag(), BitDepth::Unquantized)?
            .with_provenance(Provenance::Synthesized { level: 0 }),
    )
}

fn blend_buffers(
    a: &PixelBuffer,
    b: &PixelBuffer,
    vis_a: &VisibilityMap,
    vis_b: &VisibilityMap,
    tau: f64,
) -> Result<PixelBuffer> {
    a.check_shape(b)?;
    for vis in [vis_a, vis_b] {
        if vis.0.dims() != a.dims() {
            return Err(Error::shape(a.dims(), vis.0.dims()));
        }
    }
    let mut data = Vec::with_capacity(a.data().len());
    for (i, (pa, pb)) in a.data().chunks_exact(3).zip(b.data().chunks_exact(3)).enumerate() {
        let wa = (1.0 - tau) * vis_a.0.data()[i];
        let wb = tau * vis_b.0.data()[i];
        let denom = wa + wb;
        for c in 0..3 {
            let v = if denom < VISIBILITY_EPSILON {
                0.5 * (pa[c] + pb[c])
            } else {
                // same weighted mean, written so that equal inputs pass through exactly
                plane::lerp(pa[c], pb[c], wb / denom)
            };
            data.push(v.clamp(0.0, 1.0));
        }
    }
    PixelBuffer::new(a.width(), a.height(), data)
}
