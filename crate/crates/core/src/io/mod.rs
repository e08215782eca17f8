//! On-disk formats.
//!
//! * PFM (`PF`, RGB, 32-bit float) for radiance frames. Header is
//!   `PF\n<width> <height>\n<scale>\n`; a negative scale means little-endian
//!   samples. Rows are stored bottom-to-top. Written little-endian with scale
//!   `-1.0`.
//! * PNM (`P6`, binary RGB) for LDR frames, maxval 255 or 65535. 16-bit
//!   samples are big-endian. Samples map linearly between `[0, 1]` and
//!   `[0, maxval]`, rounding half up.
//! * Manifest: CSV with a fixed header, see [`manifest`].
//!
//! All writers are deterministic.

pub mod manifest;
pub mod pfm;
pub mod pnm;

pub use manifest::{read_manifest, write_manifest, Manifest, ManifestRecord};
pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm, Endianness};
pub use pnm::{decode_pnm, encode_pnm, read_pnm, write_pnm};

use crate::{Error, Result};

/// Whitespace-separated header tokens of a Netpbm-family file. `#` starts a
/// comment running to the end of the line (PNM only).
pub(crate) struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    allow_comments: bool,
}

impl<'a> HeaderReader<'a> {
    pub(crate) fn new(bytes: &'a [u8], allow_comments: bool) -> Self {
        Self {
            bytes,
            pos: 0,
            allow_comments,
        }
    }

    pub(crate) fn token(&mut self) -> Result<&'a str> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') if self.allow_comments => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(Error::Malformed("truncated header".into())),
            }
        }
        let start = self.pos;
        while let Some(b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| Error::Malformed("non-ASCII header".into()))
    }

    pub(crate) fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::Malformed(format!("bad {what} {tok:?}")))
    }

    /// Consumes the single whitespace byte that ends the header and returns
    /// the payload.
    pub(crate) fn payload(self) -> Result<&'a [u8]> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(&self.bytes[self.pos + 1..]),
            _ => Err(Error::Malformed("header not terminated by whitespace".into())),
        }
    }
}
