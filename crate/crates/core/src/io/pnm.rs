use std::fs;
use std::path::Path;

use super::HeaderReader;
use crate::radiometry::{BitDepth, ExposureTag, LdrFrame, PixelBuffer};
use crate::{Error, Result};

fn check_maxval(maxval: u32) -> Result<BitDepth> {
    match maxval {
        255 => Ok(BitDepth::Eight),
        65535 => Ok(BitDepth::Sixteen),
        other => Err(Error::UnsupportedFormat(format!("PNM maxval {other} (only 255 and 65535)"))),
    }
}

/// `round(v · maxval)` with halves rounded up.
#[inline]
fn encode_sample(v: f64, maxval: u32) -> u32 {
    let m = f64::from(maxval);
    (v * m + 0.5).floor().clamp(0.0, m) as u32
}

/// Binary `P6` encoding of samples in `[0, 1]`.
pub fn encode_pnm(buf: &PixelBuffer, maxval: u32) -> Result<Vec<u8>> {
    let depth = check_maxval(maxval)?;
    if let Some(v) = buf.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidInput(format!("PNM sample {v} outside [0, 1]")));
    }
    let (w, h) = buf.dims();
    let mut out = format!("P6\n{w} {h}\n{maxval}\n").into_bytes();
    match depth {
        BitDepth::Eight => out.extend(buf.data().iter().map(|&v| encode_sample(v, maxval) as u8)),
        _ => {
            for &v in buf.data() {
                out.extend_from_slice(&(encode_sample(v, maxval) as u16).to_be_bytes());
            }
        }
    }
    Ok(out)
}

pub fn decode_pnm(bytes: &[u8]) -> Result<(PixelBuffer, BitDepth)> {
    let mut header = HeaderReader::new(bytes, true);
    match header.token()? {
        "P6" => {}
        m @ ("P1" | "P2" | "P3" | "P4" | "P5" | "P7") => {
            return Err(Error::UnsupportedFormat(format!("PNM variant {m}, only binary RGB (P6)")))
        }
        other => return Err(Error::Malformed(format!("not a PNM file (magic {other:?})"))),
    }
    let width: usize = header.number("width")?;
    let height: usize = header.number("height")?;
    let maxval: u32 = header.number("maxval")?;
    let depth = check_maxval(maxval)?;
    let payload = header.payload()?;
    let bytes_per_sample = if depth == BitDepth::Eight { 1 } else { 2 };
    let needed = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3 * bytes_per_sample))
        .ok_or_else(|| Error::Malformed("PNM dimensions overflow".into()))?;
    if payload.len() != needed {
        return Err(Error::Malformed(format!(
            "PNM payload is {} bytes, expected {needed}",
            payload.len()
        )));
    }
    let m = f64::from(maxval);
    let data = if bytes_per_sample == 1 {
        payload.iter().map(|&b| f64::from(b) / m).collect()
    } else {
        payload
            .chunks_exact(2)
            .map(|b| f64::from(u16::from_be_bytes([b[0], b[1]])) / m)
            .collect()
    };
    Ok((PixelBuffer::new(width, height, data)?, depth))
}

/// Reads a frame; exposure and tag live in the manifest, not the file.
pub fn read_pnm(path: impl AsRef<Path>, exposure_time: f64, tag: ExposureTag) -> Result<LdrFrame> {
    let bytes = fs::read(path)?;
    let (buf, depth) = decode_pnm(&bytes)?;
    LdrFrame::new(buf, exposure_time, tag, depth)
}

pub fn write_pnm(path: impl AsRef<Path>, frame: &LdrFrame, maxval: u32) -> Result<()> {
    fs::write(path, encode_pnm(frame.pixels(), maxval)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn half_rounds_up() {
        let buf = PixelBuffer::filled(1, 1, 0.5);
        let bytes = encode_pnm(&buf, 255).unwrap();
        assert_eq!(bytes, b"P6\n1 1\n255\n\x80\x80\x80");
        let bytes = encode_pnm(&buf, 65535).unwrap();
        // 0.5 · 65535 = 32767.5 → 32768
        assert_eq!(&bytes[bytes.len() - 2..], &[0x80, 0x00]);
    }

    #[test]
    fn rejects_bad_maxval_and_variants() {
        let buf = PixelBuffer::filled(1, 1, 0.5);
        assert!(matches!(encode_pnm(&buf, 1023), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(decode_pnm(b"P6\n1 1\n1023\n\0\0\0\0\0\0"), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(decode_pnm(b"P5\n1 1\n255\n\0"), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(decode_pnm(b"P6\n1 1\n255\n\0\0"), Err(Error::Malformed(_))));
        assert!(encode_pnm(&PixelBuffer::filled(1, 1, 1.5), 255).is_err());
    }

    #[test]
    fn comments_in_header() {
        let (buf, depth) = decode_pnm(b"P6\n# made by hand\n2 1 # size\n255\n\x00\xff\x80\x01\x02\x03").unwrap();
        assert_eq!(depth, BitDepth::Eight);
        assert_eq!(buf.pixel(0, 0), [0.0, 1.0, 128.0 / 255.0]);
    }

    proptest! {
        #[test]
        fn round_trip_at_matching_depth(codes in prop::collection::vec(0u32..=65535, 3 * 4 * 3), sixteen in any::<bool>()) {
            let maxval = if sixteen { 65535 } else { 255 };
            let buf = PixelBuffer::new(4, 3, codes.iter().map(|&c| f64::from(c % (maxval + 1)) / f64::from(maxval)).collect()).unwrap();
            let bytes = encode_pnm(&buf, maxval).unwrap();
            let (back, _) = decode_pnm(&bytes).unwrap();
            prop_assert_eq!(&back, &buf);
            prop_assert_eq!(encode_pnm(&back, maxval).unwrap(), bytes);
        }
    }
}
