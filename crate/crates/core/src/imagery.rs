//! 8-bit raster images, bit matrices and their binary netpbm encodings
//! (`P4`, `P5`, `P6`).
//!
//! Color images are addressed on a flattened grid of `N·channels` columns,
//! `flat_col = col·channels + channel`, so one position stream covers every
//! sample of the image.

use crate::chaos::ImageDims;
use crate::error::{Result, StegoError};

/// Largest pixel count accepted from a header (2³¹ − 1).
pub const MAX_DECLARED_CELLS: u64 = (1 << 31) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channels {
    Gray,
    Rgb,
}

impl Channels {
    pub fn count(self) -> usize {
        match self {
            Channels::Gray => 1,
            Channels::Rgb => 3,
        }
    }

    pub fn from_count(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Channels::Gray),
            3 => Ok(Channels::Rgb),
            _ => Err(StegoError::Domain(format!(
                "images have 1 or 3 channels, got {n}"
            ))),
        }
    }
}

/// Row-major 8-bit image, `rows × cols × channels` samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    dims: ImageDims,
    channels: Channels,
    samples: Vec<u8>,
}

impl RasterImage {
    pub fn new(dims: ImageDims, channels: Channels, samples: Vec<u8>) -> Result<Self> {
        let expected = dims.cells() * channels.count();
        if samples.len() != expected {
            return Err(StegoError::DimensionMismatch(format!(
                "{}x{}x{} image needs {expected} samples, got {}",
                dims.rows(),
                dims.cols(),
                channels.count(),
                samples.len()
            )));
        }
        Ok(Self {
            dims,
            channels,
            samples,
        })
    }

    pub fn filled(dims: ImageDims, channels: Channels, value: u8) -> Self {
        Self {
            dims,
            channels,
            samples: vec![value; dims.cells() * channels.count()],
        }
    }

    pub fn dims(&self) -> ImageDims {
        self.dims
    }

    pub fn channels(&self) -> Channels {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    /// Mutable sample access; the length cannot change.
    pub fn samples_mut(&mut self) -> &mut [u8] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    /// The `M × N·channels` grid used for position selection.
    pub fn flat_dims(&self) -> ImageDims {
        ImageDims::new(self.dims.rows(), self.dims.cols() * self.channels.count())
            .expect("flattened grid of a valid image is valid")
    }

    fn flat_index(&self, row: usize, flat_col: usize) -> Result<usize> {
        let flat = self.flat_dims();
        if row >= flat.rows() || flat_col >= flat.cols() {
            return Err(StegoError::Index { row, col: flat_col });
        }
        Ok(row * flat.cols() + flat_col)
    }

    pub fn get_lsb(&self, row: usize, flat_col: usize) -> Result<bool> {
        Ok(self.samples[self.flat_index(row, flat_col)?] & 1 == 1)
    }

    pub fn set_lsb(&mut self, row: usize, flat_col: usize, bit: bool) -> Result<()> {
        let i = self.flat_index(row, flat_col)?;
        self.samples[i] = (self.samples[i] & !1) | u8::from(bit);
        Ok(())
    }

    pub fn to_pnm(&self) -> Vec<u8> {
        save_pnm(self)
    }

    pub fn from_pnm(bytes: &[u8]) -> Result<Self> {
        load_pnm(bytes)
    }

    /// Conventional file extension: `pgm` or `ppm`.
    pub fn extension(&self) -> &'static str {
        match self.channels {
            Channels::Gray => "pgm",
            Channels::Rgb => "ppm",
        }
    }
}

/// A row-major grid of bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    dims: ImageDims,
    bits: Vec<bool>,
}

impl BitMatrix {
    pub fn new(dims: ImageDims, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != dims.cells() {
            return Err(StegoError::DimensionMismatch(format!(
                "{}x{} matrix needs {} bits, got {}",
                dims.rows(),
                dims.cols(),
                dims.cells(),
                bits.len()
            )));
        }
        Ok(Self { dims, bits })
    }

    pub fn filled(dims: ImageDims, bit: bool) -> Self {
        Self {
            dims,
            bits: vec![bit; dims.cells()],
        }
    }

    pub fn dims(&self) -> ImageDims {
        self.dims
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    fn index(&self, row: usize, col: usize) -> Result<usize> {
        if row >= self.dims.rows() || col >= self.dims.cols() {
            return Err(StegoError::Index { row, col });
        }
        Ok(row * self.dims.cols() + col)
    }

    pub fn get(&self, row: usize, col: usize) -> Result<bool> {
        Ok(self.bits[self.index(row, col)?])
    }

    pub fn set(&mut self, row: usize, col: usize, bit: bool) -> Result<()> {
        let i = self.index(row, col)?;
        self.bits[i] = bit;
        Ok(())
    }

    pub fn to_pbm(&self) -> Vec<u8> {
        save_pbm(self)
    }

    pub fn from_pbm(bytes: &[u8]) -> Result<Self> {
        load_pbm(bytes)
    }
}

fn is_pnm_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

/// Reads the magic and `fields` decimal header values. Returns the values and
/// the offset of the first raster byte (after the single separating
/// whitespace byte).
fn parse_header(bytes: &[u8], fields: usize) -> Result<([u8; 2], Vec<u64>, usize)> {
    if bytes.len() < 2 {
        return Err(StegoError::Parse("missing netpbm magic".into()));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut values = Vec::with_capacity(fields);
    while values.len() < fields {
        // whitespace and comments may separate header tokens
        loop {
            match bytes.get(pos) {
                Some(&b) if is_pnm_space(b) => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(StegoError::Parse("truncated netpbm header".into())),
            }
        }
        if pos == 2 {
            return Err(StegoError::Parse("missing whitespace after magic".into()));
        }
        let start = pos;
        let mut value: u64 = 0;
        while let Some(&b) = bytes.get(pos).filter(|b| b.is_ascii_digit()) {
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .ok_or_else(|| StegoError::Parse("header value overflows".into()))?;
            pos += 1;
        }
        if pos == start {
            return Err(StegoError::Parse(format!(
                "expected a decimal header value at byte {pos}"
            )));
        }
        values.push(value);
    }
    match bytes.get(pos) {
        Some(&b) if is_pnm_space(b) => Ok((magic, values, pos + 1)),
        _ => Err(StegoError::Parse(
            "header must end with a single whitespace byte".into(),
        )),
    }
}

fn declared_dims(width: u64, height: u64) -> Result<ImageDims> {
    if width == 0 || height == 0 {
        return Err(StegoError::Parse(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if width.saturating_mul(height) > MAX_DECLARED_CELLS {
        return Err(StegoError::Parse(format!(
            "declared size {width}x{height} exceeds {MAX_DECLARED_CELLS} cells"
        )));
    }
    ImageDims::new(height as usize, width as usize)
}

fn take_raster(bytes: &[u8], offset: usize, len: usize) -> Result<&[u8]> {
    let rest = &bytes[offset..];
    match rest.len().cmp(&len) {
        std::cmp::Ordering::Less => Err(StegoError::Parse(format!(
            "truncated raster: expected {len} bytes, found {}",
            rest.len()
        ))),
        std::cmp::Ordering::Greater => Err(StegoError::Parse(format!(
            "{} unexpected bytes after the raster",
            rest.len() - len
        ))),
        std::cmp::Ordering::Equal => Ok(rest),
    }
}

/// Parses a binary PGM (`P5`) or PPM (`P6`) image with maxval 255.
pub fn load_pnm(bytes: &[u8]) -> Result<RasterImage> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => Channels::Gray,
        Some(b"P6") => Channels::Rgb,
        _ => return Err(StegoError::Parse("expected P5 or P6 magic".into())),
    };
    let (_, header, offset) = parse_header(bytes, 3)?;
    let dims = declared_dims(header[0], header[1])?;
    if header[2] != 255 {
        return Err(StegoError::Parse(format!(
            "only maxval 255 is supported, got {}",
            header[2]
        )));
    }
    let raster = take_raster(bytes, offset, dims.cells() * channels.count())?;
    RasterImage::new(dims, channels, raster.to_vec())
}

/// Canonical binary encoding: `P5\n<cols> <rows>\n255\n` (or `P6`) + samples.
pub fn save_pnm(image: &RasterImage) -> Vec<u8> {
    let magic = match image.channels() {
        Channels::Gray => "P5",
        Channels::Rgb => "P6",
    };
    let header = format!(
        "{magic}\n{} {}\n255\n",
        image.dims().cols(),
        image.dims().rows()
    );
    let mut out = Vec::with_capacity(header.len() + image.samples().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(image.samples());
    out
}

/// Parses a binary PBM (`P4`); rows are padded to whole bytes, MSB first.
pub fn load_pbm(bytes: &[u8]) -> Result<BitMatrix> {
    if bytes.get(..2) != Some(b"P4") {
        return Err(StegoError::Parse("expected P4 magic".into()));
    }
    let (_, header, offset) = parse_header(bytes, 2)?;
    let dims = declared_dims(header[0], header[1])?;
    let row_bytes = dims.cols().div_ceil(8);
    let raster = take_raster(bytes, offset, row_bytes * dims.rows())?;
    let bits = raster
        .chunks_exact(row_bytes)
        .flat_map(|row| (0..dims.cols()).map(move |c| row[c / 8] & (0x80 >> (c % 8)) != 0))
        .collect();
    BitMatrix::new(dims, bits)
}

pub fn save_pbm(matrix: &BitMatrix) -> Vec<u8> {
    let dims = matrix.dims();
    let header = format!("P4\n{} {}\n", dims.cols(), dims.rows());
    let row_bytes = dims.cols().div_ceil(8);
    let mut out = Vec::with_capacity(header.len() + row_bytes * dims.rows());
    out.extend_from_slice(header.as_bytes());
    for row in matrix.bits().chunks_exact(dims.cols()) {
        let mut packed = vec![0u8; row_bytes];
        for (c, _) in row.iter().enumerate().filter(|(_, &b)| b) {
            packed[c / 8] |= 0x80 >> (c % 8);
        }
        out.extend_from_slice(&packed);
    }
    out
}

/// Outcome of comparing a cover with its stego image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlipCount {
    /// Samples that differ.
    pub flips: usize,
    /// Sample indices whose difference is larger than one.
    pub non_lsb: Vec<usize>,
}

impl FlipCount {
    pub fn lsb_only(&self) -> bool {
        self.non_lsb.is_empty()
    }
}

pub(crate) fn check_same_shape(a: &RasterImage, b: &RasterImage) -> Result<()> {
    if a.dims() != b.dims() || a.channels() != b.channels() {
        return Err(StegoError::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.dims().rows(),
            a.dims().cols(),
            a.channels().count(),
            b.dims().rows(),
            b.dims().cols(),
            b.channels().count()
        )));
    }
    Ok(())
}

pub fn flip_count(cover: &RasterImage, stego: &RasterImage) -> Result<FlipCount> {
    check_same_shape(cover, stego)?;
    let mut flips = 0;
    let mut non_lsb = Vec::new();
    for (i, (&c, &s)) in cover.samples().iter().zip(stego.samples()).enumerate() {
        if c != s {
            flips += 1;
            if c.abs_diff(s) != 1 {
                non_lsb.push(i);
            }
        }
    }
    Ok(FlipCount { flips, non_lsb })
}
