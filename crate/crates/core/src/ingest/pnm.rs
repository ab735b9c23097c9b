//! Binary portable anymap (`P5` grayscale, `P6` RGB).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub max_value: u16,
    /// Row-major, channel-interleaved samples.
    pub pixels: Vec<u16>,
}

impl PixelImage {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        max_value: u16,
        pixels: Vec<u16>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(
                "image dimensions must be positive".into(),
            ));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "unsupported channel count {channels}"
            )));
        }
        if max_value == 0 {
            return Err(Error::InvalidArgument(
                "max_value must be at least 1".into(),
            ));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::dim(
                "image samples",
                width * height * channels,
                pixels.len(),
            ));
        }
        if let Some(s) = pixels.iter().find(|&&s| s > max_value) {
            return Err(Error::InvalidArgument(format!(
                "sample {s} exceeds max_value {max_value}"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            max_value,
            pixels,
        })
    }

    pub fn sample(&self, x: usize, y: usize, c: usize) -> u16 {
        self.pixels[(y * self.width + x) * self.channels + c]
    }

    fn bytes_per_sample(&self) -> usize {
        if self.max_value > 255 {
            2
        } else {
            1
        }
    }

    pub fn to_pnm(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!(
            "{magic}\n{} {}\n{}\n",
            self.width, self.height, self.max_value
        )
        .into_bytes();
        out.reserve(self.pixels.len() * self.bytes_per_sample());
        if self.bytes_per_sample() == 2 {
            for &s in &self.pixels {
                out.extend_from_slice(&s.to_be_bytes());
            }
        } else {
            out.extend(self.pixels.iter().map(|&s| s as u8));
        }
        out
    }
}

struct HeaderCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            if self.pos >= self.data.len() {
                return Err(Error::Truncated(format!("PNM header ends before {what}")));
            }
            return Err(Error::MalformedPnm(format!(
                "expected {what} at byte {start}"
            )));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::MalformedPnm(format!("{what} out of range")))
    }
}

pub fn parse_pnm(bytes: &[u8]) -> Result<PixelImage> {
    if bytes.len() < 2 {
        return Err(Error::Truncated("PNM shorter than its magic".into()));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::UnsupportedMagic(
                String::from_utf8_lossy(other).into_owned(),
            ))
        }
    };
    let mut cur = HeaderCursor {
        data: bytes,
        pos: 2,
    };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let max_value = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedPnm("zero image dimension".into()));
    }
    if !(1..=65535).contains(&max_value) {
        return Err(Error::MalformedPnm(format!(
            "maxval {max_value} outside [1, 65535]"
        )));
    }
    match bytes.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        Some(_) => {
            return Err(Error::MalformedPnm(
                "missing whitespace after maxval".into(),
            ))
        }
        None => return Err(Error::Truncated("PNM header ends after maxval".into())),
    }
    let wide = max_value > 255;
    let n = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| Error::MalformedPnm("image dimensions overflow".into()))?;
    let need = n * if wide { 2 } else { 1 };
    let payload = &bytes[cur.pos..];
    if payload.len() < need {
        return Err(Error::Truncated(format!(
            "PNM payload has {} bytes, expected {need}",
            payload.len()
        )));
    }
    let pixels: Vec<u16> = if wide {
        payload[..need]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect()
    } else {
        payload[..need].iter().map(|&b| b as u16).collect()
    };
    if let Some(s) = pixels.iter().find(|&&s| s as u64 > max_value) {
        return Err(Error::MalformedPnm(format!(
            "sample {s} exceeds maxval {max_value}"
        )));
    }
    Ok(PixelImage {
        width,
        height,
        channels,
        max_value: max_value as u16,
        pixels,
    })
}
