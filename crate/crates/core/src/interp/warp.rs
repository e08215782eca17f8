use super::flow::FlowField;
use super::plane::{lerp, Plane};
use crate::radiometry::{BitDepth, LdrFrame, PixelBuffer};
use crate::{Error, Result};

/// Backward warp: `out(p) = frame(p + scale · flow(p))`, bilinear, with
/// clamp-to-edge reads outside the frame.
pub fn warp_backward(frame: &LdrFrame, flow: &FlowField, scale: f64) -> Result<LdrFrame> {
    let pixels = warp_buffer(frame.pixels(), flow, scale)?;
    Ok(LdrFrame::new(pixels, frame.exposure_time(), frame.tag(), BitDepth::Unquantized)?
        .with_provenance(frame.provenance()))
}

pub(crate) fn warp_buffer(buf: &PixelBuffer, flow: &FlowField, scale: f64) -> Result<PixelBuffer> {
    if buf.dims() != flow.dims() {
        return Err(Error::shape(buf.dims(), flow.dims()));
    }
    if !scale.is_finite() {
        return Err(Error::InvalidParameter(format!("warp scale {scale}")));
    }
    let (w, h) = buf.dims();
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let [dx, dy] = flow.get(x, y);
            data.extend_from_slice(&sample_rgb(buf, x as f64 + scale * dx, y as f64 + scale * dy));
        }
    }
    PixelBuffer::new(w, h, data)
}

pub(crate) fn warp_plane(plane: &Plane, flow: &FlowField, scale: f64) -> Plane {
    let (w, h) = plane.dims();
    Plane::from_fn(w, h, |x, y| {
        let [dx, dy] = flow.get(x, y);
        plane.sample(x as f64 + scale * dx, y as f64 + scale * dy)
    })
}

#[inline]
fn sample_rgb(buf: &PixelBuffer, x: f64, y: f64) -> [f64; 3] {
    let (w, h) = buf.dims();
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as usize, y0 as usize);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let (p00, p10, p01, p11) = (buf.pixel(x0, y0), buf.pixel(x1, y0), buf.pixel(x0, y1), buf.pixel(x1, y1));
    let mut out = [0.0; 3];
    for c in 0..3 {
        out[c] = lerp(lerp(p00[c], p10[c], fx), lerp(p01[c], p11[c], fx), fy);
    }
    out
}
