//! Reconstruction of HDR video from alternating-exposure LDR frame sequences.
//!
//! At every timestamp the missing exposure is synthesized by interpolating
//! the two same-exposure neighbours, and the resulting high/low pair is fused
//! in the radiance domain. Repeating the midpoint interpolation on both
//! exposure streams before merging raises the output frame rate by powers of
//! two.
//!
//! Module map:
//!
//! * [`radiometry`]: pixel buffers, LDR/radiance frames, the power-law camera response
//! * [`tonemap`]: μ-law compression and a global Reinhard display operator
//! * [`interp`]: frame interpolation backends (plain blend, optical flow)
//! * [`merge`]: well-exposedness attention weights and HDR fusion
//! * [`scheduler`]: standard-rate reconstruction and recursive frame-rate upscaling
//! * [`dataset`]: alternating-exposure simulation, procedural scenes, patch extraction
//! * [`metrics`]: tonemapped PSNR / L1 and per-sequence reports
//! * [`io`]: PFM, PNM and manifest readers/writers
//! * [`cli`]: the `hdrinterp` command-line front end

pub mod cli;
pub mod dataset;
mod error;
pub mod interp;
pub mod io;
pub mod merge;
pub mod metrics;
pub mod radiometry;
pub mod scheduler;
pub mod tonemap;

pub use error::{Error, Result};
pub use radiometry::{BitDepth, Crf, ExposureTag, LdrFrame, PixelBuffer, Provenance, RadianceFrame};
