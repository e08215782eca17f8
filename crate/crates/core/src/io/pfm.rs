use std::fs;
use std::path::Path;

use super::HeaderReader;
use crate::radiometry::{PixelBuffer, RadianceFrame};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Endianness {
    #[default]
    Little,
    Big,
}

/// Serializes at single precision. Rows go bottom-to-top.
pub fn encode_pfm(buf: &PixelBuffer, endianness: Endianness) -> Vec<u8> {
    let (w, h) = buf.dims();
    let scale = match endianness {
        Endianness::Little => "-1.0",
        Endianness::Big => "1.0",
    };
    let mut out = format!("PF\n{w} {h}\n{scale}\n").into_bytes();
    out.reserve(w * h * 12);
    for y in (0..h).rev() {
        for v in &buf.data()[y * w * 3..(y + 1) * w * 3] {
            let v = *v as f32;
            match endianness {
                Endianness::Little => out.extend_from_slice(&v.to_le_bytes()),
                Endianness::Big => out.extend_from_slice(&v.to_be_bytes()),
            }
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<PixelBuffer> {
    let mut header = HeaderReader::new(bytes, false);
    match header.token()? {
        "PF" => {}
        "Pf" => return Err(Error::UnsupportedFormat("grayscale PFM (Pf)".into())),
        other => return Err(Error::Malformed(format!("not a PFM file (magic {other:?})"))),
    }
    let width: usize = header.number("width")?;
    let height: usize = header.number("height")?;
    let scale: f64 = header.number("scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Malformed(format!("bad PFM scale {scale}")));
    }
    let little = scale < 0.0;
    let payload = header.payload()?;
    let needed = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(12))
        .ok_or_else(|| Error::Malformed("PFM dimensions overflow".into()))?;
    if payload.len() < needed {
        return Err(Error::Malformed(format!(
            "truncated PFM payload: {} of {needed} bytes",
            payload.len()
        )));
    }
    if payload.len() > needed {
        return Err(Error::Malformed(format!("{} trailing bytes after PFM payload", payload.len() - needed)));
    }

    let mut data = vec![0.0; width * height * 3];
    for (file_row, chunk) in payload.chunks_exact(width.max(1) * 12).take(height).enumerate() {
        let y = height - 1 - file_row;
        for (i, b) in chunk.chunks_exact(4).enumerate() {
            let raw = [b[0], b[1], b[2], b[3]];
            let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
            data[y * width * 3 + i] = f64::from(v);
        }
    }
    PixelBuffer::new(width, height, data)
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<RadianceFrame> {
    let bytes = fs::read(path)?;
    RadianceFrame::new(decode_pfm(&bytes)?)
}

pub fn write_pfm(path: impl AsRef<Path>, frame: &RadianceFrame) -> Result<()> {
    fs::write(path, encode_pfm(frame.pixels(), Endianness::Little))?;
    Ok(())
}
