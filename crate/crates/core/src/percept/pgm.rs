//! Netpbm graymap reading and writing.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities.
    pub pixels: Vec<u8>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PgmError {
    #[error("bad magic: expected P2 or P5")]
    BadMagic,
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("truncated data: expected {expected} pixels, got {got}")]
    TruncatedData { expected: usize, got: usize },
    #[error("maxval {0} exceeds 255")]
    MaxvalOverflow(u64),
    #[error("pixel value {value} exceeds maxval {maxval}")]
    PixelOverflow { value: u64, maxval: u64 },
    #[error("image dimensions {width}x{height} do not match {len} pixels")]
    SizeMismatch { width: usize, height: usize, len: usize },
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, PgmError> {
        if pixels.len() != width * height {
            return Err(PgmError::SizeMismatch {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<Option<u64>, PgmError> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            if self.pos >= self.bytes.len() {
                return Ok(None);
            }
            return Err(PgmError::BadHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .map(Some)
            .ok_or_else(|| PgmError::BadHeader(format!("{what} out of range")))
    }

    fn required(&mut self, what: &str) -> Result<u64, PgmError> {
        self.number(what)?
            .ok_or_else(|| PgmError::BadHeader(format!("missing {what}")))
    }
}

/// Parse a P2 (ASCII) or P5 (binary) graymap. Values are kept as stored.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    let binary = match bytes.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(PgmError::BadMagic),
    };
    let mut h = Header { bytes, pos: 2 };
    let width = h.required("width")? as usize;
    let height = h.required("height")? as usize;
    let maxval = h.required("maxval")?;
    if maxval > 255 {
        return Err(PgmError::MaxvalOverflow(maxval));
    }
    if maxval == 0 {
        return Err(PgmError::BadHeader("maxval must be positive".into()));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| PgmError::BadHeader("dimensions overflow".into()))?;

    let pixels = if binary {
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(h.pos) {
            Some(c) if c.is_ascii_whitespace() => h.pos += 1,
            None if expected == 0 => {}
            _ => return Err(PgmError::BadHeader("missing separator before raster".into())),
        }
        let data = &bytes[h.pos.min(bytes.len())..];
        if data.len() < expected {
            return Err(PgmError::TruncatedData {
                expected,
                got: data.len(),
            });
        }
        data[..expected].to_vec()
    } else {
        let mut px = Vec::with_capacity(expected);
        while px.len() < expected {
            match h.number("pixel value")? {
                Some(v) if v > maxval => return Err(PgmError::PixelOverflow { value: v, maxval }),
                Some(v) => px.push(v as u8),
                None => {
                    return Err(PgmError::TruncatedData {
                        expected,
                        got: px.len(),
                    })
                }
            }
        }
        px
    };
    if binary {
        if let Some(&v) = pixels.iter().find(|&&v| u64::from(v) > maxval) {
            return Err(PgmError::PixelOverflow {
                value: v.into(),
                maxval,
            });
        }
    }
    GrayImage::new(width, height, pixels)
}

/// Binary P5 encoding with maxval 255.
pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}
