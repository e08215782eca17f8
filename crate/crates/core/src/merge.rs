//! `f_HDR`: fuse a time-aligned high/low exposure pair into one radiance
//! frame.
//!
//! Attention is a deterministic well-exposedness hat: full trust at mid-grey,
//! falling linearly towards black and white, floored at [`W_MIN`]. Saturated
//! samples (and, for the short exposure, noise-dominated dark samples) are
//! pinned to the floor. Fusion is channel-wise.

use crate::interp::Plane;
use crate::radiometry::{ldr_to_radiance, Crf, ExposureTag, LdrFrame, PixelBuffer, RadianceFrame};
use crate::{Error, Result};

pub const W_MIN: f64 = 1e-4;
/// Samples at or above this are treated as clipped.
pub const SATURATION_LEVEL: f64 = 0.995;
/// Short-exposure samples at or below this are treated as noise.
pub const NOISE_FLOOR: f64 = 0.005;

/// Per-sample merge weights, laid out like the RGB input (one plane per
/// channel, channel-interleaved).
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionMaps {
    pub high: PixelBuffer,
    pub low: PixelBuffer,
}

impl AttentionMaps {
    /// Mean weight over channels, handy for inspection.
    pub fn mean_planes(&self) -> (Plane, Plane) {
        (Plane::gray(&self.high), Plane::gray(&self.low))
    }
}

#[inline]
pub fn hat(v: f64) -> f64 {
    if v >= SATURATION_LEVEL {
        return W_MIN;
    }
    (v.min(1.0 - v) / 0.5).clamp(W_MIN, 1.0)
}

#[inline]
pub fn hat_low(v: f64) -> f64 {
    if v <= NOISE_FLOOR {
        W_MIN
    } else {
        hat(v)
    }
}

/// Sorts a pair into (high, low) by tag and checks they can be merged.
fn order_pair<'a>(a: &'a LdrFrame, b: &'a LdrFrame) -> Result<(&'a LdrFrame, &'a LdrFrame)> {
    let (high, low) = match (a.tag(), b.tag()) {
        (ExposureTag::High, ExposureTag::Low) => (a, b),
        (ExposureTag::Low, ExposureTag::High) => (b, a),
        (t, _) => {
            return Err(Error::ExposureMismatch(format!(
                "merge needs one high and one low frame, got two {t} frames"
            )))
        }
    };
    high.pixels().check_shape(low.pixels())?;
    Ok((high, low))
}

pub fn attention_weights(high: &LdrFrame, low: &LdrFrame) -> Result<AttentionMaps> {
    if high.tag() != ExposureTag::High || low.tag() != ExposureTag::Low {
        return Err(Error::ExposureMismatch(format!(
            "expected (H, L) pair, got ({}, {})",
            high.tag(),
            low.tag()
        )));
    }
    high.pixels().check_shape(low.pixels())?;
    Ok(AttentionMaps {
        high: high.pixels().map(hat),
        low: low.pixels().map(hat_low),
    })
}

/// Weighted radiance fusion of a high/low pair; argument order does not
/// matter, the tags decide.
pub fn merge_hdr(a: &LdrFrame, b: &LdrFrame, crf: Crf) -> Result<RadianceFrame> {
    let (high, low) = order_pair(a, b)?;
    if high.exposure_time() == low.exposure_time() {
        return Err(Error::DegeneratePair(high.exposure_time()));
    }
    if high.exposure_time() < low.exposure_time() {
        return Err(Error::ExposureMismatch(format!(
            "high-tagged frame ({} s) is shorter than low-tagged frame ({} s)",
            high.exposure_time(),
            low.exposure_time()
        )));
    }
    let weights = attention_weights(high, low)?;
    let rad_high = ldr_to_radiance(high, crf)?;
    let rad_low = ldr_to_radiance(low, crf)?;

    let data = rad_high
        .pixels()
        .data()
        .iter()
        .zip(rad_low.pixels().data())
        .zip(weights.high.data().iter().zip(weights.low.data()))
        .map(|((&hh, &hl), (&wh, &wl))| {
            // wh, wl >= W_MIN so the denominator is positive
            let alpha = wh / (wh + wl);
            let fused = hl + alpha * (hh - hl);
            fused.clamp(hh.min(hl), hh.max(hl))
        })
        .collect();
    RadianceFrame::new(PixelBuffer::new(high.width(), high.height(), data)?)
}

/// Number of samples of `merged` that fall outside the per-sample hull of the
/// two linearized inputs.
pub fn convex_hull_violations(high: &LdrFrame, low: &LdrFrame, merged: &RadianceFrame, crf: Crf) -> Result<usize> {
    let (high, low) = order_pair(high, low)?;
    let rh = ldr_to_radiance(high, crf)?;
    let rl = ldr_to_radiance(low, crf)?;
    merged.pixels().check_shape(rh.pixels())?;
    Ok(merged
        .pixels()
        .data()
        .iter()
        .zip(rh.pixels().data().iter().zip(rl.pixels().data()))
        .filter(|(&m, (&a, &b))| m < a.min(b) || m > a.max(b))
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiometry::BitDepth;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn frame(v: f64, tag: ExposureTag, dt: f64) -> LdrFrame {
        LdrFrame::new(PixelBuffer::filled(3, 2, v), dt, tag, BitDepth::Unquantized).unwrap()
    }

    #[test]
    fn hat_examples() {
        assert_eq!(hat(0.5), 1.0);
        assert_eq!(hat(1.0), W_MIN);
        assert_eq!(hat(0.995), W_MIN);
        assert_eq!(hat(0.25), 0.5);
        assert_eq!(hat(0.0), W_MIN);
        assert_eq!(hat(0.004), 0.008);
        assert_eq!(hat_low(0.004), W_MIN);
        assert_eq!(hat_low(0.5), 1.0);
    }

    #[test]
    fn attention_checks_tags() {
        let h = frame(0.5, ExposureTag::High, 1.0);
        let l = frame(0.25, ExposureTag::Low, 0.25);
        let maps = attention_weights(&h, &l).unwrap();
        assert!(maps.high.data().iter().all(|&w| w == 1.0));
        assert!(maps.low.data().iter().all(|&w| w == 0.5));
        assert!(matches!(attention_weights(&l, &h), Err(Error::ExposureMismatch(_))));
    }

    #[test]
    fn static_mid_grey_recovers_common_radiance() {
        let crf = Crf::default();
        let radiance = 0.3;
        let h = frame(crf.delinearize(radiance, 1.0), ExposureTag::High, 1.0);
        let l = frame(crf.delinearize(radiance, 0.125), ExposureTag::Low, 0.125);
        let out = merge_hdr(&h, &l, crf).unwrap();
        assert!(out.pixels().data().iter().all(|&v| (v - radiance).abs() <= 1e-5));
    }

    #[test]
    fn saturated_high_falls_back_to_low() {
        let crf = Crf::default();
        let h = frame(1.0, ExposureTag::High, 1.0);
        let l = frame(0.5, ExposureTag::Low, 0.125);
        let out = merge_hdr(&h, &l, crf).unwrap();
        // (1e-4 · 1 + 1 · 0.5^2.2 · 8) / (1 + 1e-4), evaluated at 40 digits
        assert_abs_diff_eq!(out.pixels().get(0, 0, 0), 1.741_027_023_889_859_3, epsilon = 1e-12);
        let h_low = 0.5f64.powf(2.2) * 8.0;
        assert!((out.pixels().get(2, 1, 2) - h_low).abs() / h_low <= 1e-3);
    }

    #[test]
    fn black_pair_gives_zero() {
        let out = merge_hdr(&frame(0.0, ExposureTag::High, 1.0), &frame(0.0, ExposureTag::Low, 0.5), Crf::default())
            .unwrap();
        assert_eq!(out.pixels().max_value(), 0.0);
    }

    #[test]
    fn merge_errors() {
        let crf = Crf::default();
        let h = frame(0.5, ExposureTag::High, 1.0);
        assert!(matches!(merge_hdr(&h, &h, crf), Err(Error::ExposureMismatch(_))));
        let l_same = frame(0.5, ExposureTag::Low, 1.0);
        assert!(matches!(merge_hdr(&h, &l_same, crf), Err(Error::DegeneratePair(_))));
        let l_longer = frame(0.5, ExposureTag::Low, 2.0);
        assert!(merge_hdr(&h, &l_longer, crf).is_err());
    }

    proptest! {
        #[test]
        fn convex_and_order_independent(
            vh in prop::collection::vec(0.0f64..=1.0, 6 * 3),
            vl in prop::collection::vec(0.0f64..=1.0, 6 * 3),
            stops in 1u32..=3,
        ) {
            let crf = Crf::default();
            let h = LdrFrame::new(PixelBuffer::new(3, 2, vh).unwrap(), 1.0, ExposureTag::High, BitDepth::Unquantized).unwrap();
            let dt_low = 1.0 / f64::from(1u32 << stops);
            let l = LdrFrame::new(PixelBuffer::new(3, 2, vl).unwrap(), dt_low, ExposureTag::Low, BitDepth::Unquantized).unwrap();
            let m1 = merge_hdr(&h, &l, crf).unwrap();
            let m2 = merge_hdr(&l, &h, crf).unwrap();
            prop_assert_eq!(&m1, &m2);
            prop_assert_eq!(convex_hull_violations(&h, &l, &m1, crf).unwrap(), 0);
        }

        #[test]
        fn saturation_recovery(v_low in 0.1f64..=0.9, stops in 1u32..=3) {
            // physically consistent pair: the long exposure clips, the short one does not
            let crf = Crf::default();
            let dt_low = 1.0 / f64::from(1u32 << stops);
            let true_radiance = crf.linearize(v_low, dt_low);
            let v_high = crf.delinearize(true_radiance, 1.0);
            prop_assume!(v_high >= SATURATION_LEVEL);
            let out = merge_hdr(&frame(v_high, ExposureTag::High, 1.0), &frame(v_low, ExposureTag::Low, dt_low), crf).unwrap();
            let h_low = crf.linearize(v_low, dt_low);
            prop_assert!((out.pixels().get(0, 0, 0) - h_low).abs() / h_low <= 1e-3);
        }
    }
}
