use std::fs;
use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

pub const PDF64_MAGIC: &[u8; 5] = b"PDF64";

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format_err(format!("PGM: expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err(format!("PGM: {what} out of range")))
    }
}

pub fn read_pgm_bytes(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'2' || bytes[1] == b'5') {
        return Err(format_err("PGM: expected magic P2 or P5"));
    }
    let binary = bytes[1] == b'5';
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(format_err("PGM: zero dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(format_err(format!("PGM: unsupported maxval {maxval}")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| format_err("PGM: dimensions overflow"))?;
    let mut pixels = Vec::with_capacity(n);
    if binary {
        // Exactly one whitespace byte separates maxval from the raster.
        match bytes.get(h.pos) {
            Some(c) if c.is_ascii_whitespace() => h.pos += 1,
            _ => return Err(format_err("PGM: missing separator before raster")),
        }
        let raster = bytes
            .get(h.pos..h.pos + n)
            .ok_or_else(|| format_err(format!("PGM: truncated raster, expected {n} bytes")))?;
        for &b in raster {
            if b as usize > maxval {
                return Err(format_err(format!(
                    "PGM: sample {b} exceeds maxval {maxval}"
                )));
            }
            pixels.push(b as f64);
        }
    } else {
        for i in 0..n {
            let v = h
                .number("sample")
                .map_err(|_| format_err(format!("PGM: truncated raster at sample {i} of {n}")))?;
            if v > maxval {
                return Err(format_err(format!(
                    "PGM: sample {v} exceeds maxval {maxval}"
                )));
            }
            pixels.push(v as f64);
        }
    }
    Image::new(width, height, pixels)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    read_pgm_bytes(&fs::read(path)?)
}

fn quantize(v: f64) -> u8 {
    // f64::round rounds half away from zero.
    if v.is_nan() {
        0
    } else {
        v.clamp(0.0, 255.0).round() as u8
    }
}

/// Binary P5 with maxval 255; values are clamped to `[0, 255]` and rounded.
pub fn encode_pgm(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.pixels().iter().map(|&v| quantize(v)));
    out
}

pub fn write_pgm(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(image))?;
    Ok(())
}

/// `PDF64`, width and height as little-endian u32, then little-endian f64
/// samples in row-major order.
pub fn encode_pdf64(image: &Image) -> Result<Vec<u8>> {
    let w = u32::try_from(image.width()).map_err(|_| format_err("PDF64: width exceeds u32"))?;
    let h = u32::try_from(image.height()).map_err(|_| format_err("PDF64: height exceeds u32"))?;
    let mut out = Vec::with_capacity(13 + 8 * image.len());
    out.extend_from_slice(PDF64_MAGIC);
    out.extend_from_slice(&w.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    for v in image.pixels() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_pdf64(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 13 || &bytes[..5] != PDF64_MAGIC {
        return Err(format_err("PDF64: bad magic"));
    }
    let w = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
    let h = u32::from_le_bytes(bytes[9..13].try_into().expect("4 bytes")) as usize;
    let n = w
        .checked_mul(h)
        .ok_or_else(|| format_err("PDF64: dimensions overflow"))?;
    let body = &bytes[13..];
    if body.len() != 8 * n {
        return Err(format_err(format!(
            "PDF64: expected {} payload bytes, got {}",
            8 * n,
            body.len()
        )));
    }
    let pixels = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Image::new(w, h, pixels)
}

pub fn write_pdf64(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pdf64(image)?)?;
    Ok(())
}

pub fn read_pdf64(path: impl AsRef<Path>) -> Result<Image> {
    decode_pdf64(&fs::read(path)?)
}
