//! Message framing and the embed/extract pipeline.
//!
//! A message becomes a bit string: a 32-bit big-endian count of payload
//! bits, then the payload (7-bit ASCII, 16-bit code units, or raw bytes),
//! MSB first. Bits are written to the LSBs of chaotically selected samples.
//! Wherever an LSB actually changes, the embedded bit is also written into
//! both side matrices (ones starts all-1, zeros all-0), so equal cells mark
//! changed samples.

use std::fmt;
use std::str::FromStr;

use crate::chaos::{ImageDims, PixelPosition, PositionSelector};
use crate::error::{Result, StegoError};
use crate::imagery::{BitMatrix, RasterImage};
use crate::keymat::{PublicCoupling, SecretKeySet};

/// Width of the length header in bits.
pub const HEADER_BITS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Ascii7,
    Utf16,
    Raw,
}

impl Mode {
    /// Bits per character (or byte) in this mode.
    pub fn group_bits(self) -> usize {
        match self {
            Mode::Ascii7 => 7,
            Mode::Utf16 => 16,
            Mode::Raw => 8,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ascii7 => "ascii7",
            Mode::Utf16 => "utf16",
            Mode::Raw => "raw",
        })
    }
}

impl FromStr for Mode {
    type Err = StegoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascii7" => Ok(Mode::Ascii7),
            "utf16" => Ok(Mode::Utf16),
            "raw" => Ok(Mode::Raw),
            other => Err(StegoError::Parse(format!(
                "unknown mode `{other}` (expected ascii7, utf16 or raw)"
            ))),
        }
    }
}

/// Header plus payload bits for one message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessagePayload {
    mode: Mode,
    bits: Vec<bool>,
}

fn push_bits(out: &mut Vec<bool>, value: u32, width: usize) {
    out.extend((0..width).rev().map(|i| (value >> i) & 1 == 1));
}

fn read_bits(bits: &[bool]) -> u32 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u32::from(b))
}

impl MessagePayload {
    /// Checks the header against the payload length and the mode's group
    /// size.
    pub fn from_bits(mode: Mode, bits: Vec<bool>) -> Result<Self> {
        if bits.len() < HEADER_BITS {
            return Err(StegoError::Decode(format!(
                "payload has {} bits, shorter than the {HEADER_BITS}-bit header",
                bits.len()
            )));
        }
        let declared = read_bits(&bits[..HEADER_BITS]) as usize;
        if declared != bits.len() - HEADER_BITS {
            return Err(StegoError::Decode(format!(
                "header declares {declared} payload bits, found {}",
                bits.len() - HEADER_BITS
            )));
        }
        if !declared.is_multiple_of(mode.group_bits()) {
            return Err(StegoError::Decode(format!(
                "{declared} payload bits is not a multiple of {} ({mode})",
                mode.group_bits()
            )));
        }
        Ok(Self { mode, bits })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// All bits, header first.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn payload_bits(&self) -> &[bool] {
        &self.bits[HEADER_BITS..]
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

fn frame(mode: Mode, groups: impl ExactSizeIterator<Item = u32>) -> Result<MessagePayload> {
    let payload_len = groups.len() * mode.group_bits();
    let declared = u32::try_from(payload_len).map_err(|_| {
        StegoError::Encoding(format!("{payload_len} payload bits do not fit the header"))
    })?;
    let mut bits = Vec::with_capacity(HEADER_BITS + payload_len);
    push_bits(&mut bits, declared, HEADER_BITS);
    for g in groups {
        push_bits(&mut bits, g, mode.group_bits());
    }
    Ok(MessagePayload { mode, bits })
}

/// Encodes text. `Raw` mode frames the UTF-8 bytes of `text`.
pub fn encode_message(text: &str, mode: Mode) -> Result<MessagePayload> {
    match mode {
        Mode::Ascii7 => {
            if let Some(c) = text.chars().find(|c| !c.is_ascii()) {
                return Err(StegoError::Encoding(format!(
                    "character {c:?} (U+{:04X}) is outside 7-bit ASCII",
                    c as u32
                )));
            }
            frame(
                mode,
                text.bytes().map(u32::from).collect::<Vec<_>>().into_iter(),
            )
        }
        Mode::Utf16 => {
            if let Some(c) = text.chars().find(|&c| c as u32 > 0xFFFF) {
                return Err(StegoError::Encoding(format!(
                    "character {c:?} (U+{:X}) needs more than one 16-bit code unit",
                    c as u32
                )));
            }
            frame(
                mode,
                text.encode_utf16()
                    .map(u32::from)
                    .collect::<Vec<_>>()
                    .into_iter(),
            )
        }
        Mode::Raw => encode_bytes(text.as_bytes()),
    }
}

pub fn encode_bytes(bytes: &[u8]) -> Result<MessagePayload> {
    frame(Mode::Raw, bytes.iter().map(|&b| u32::from(b)))
}

/// A decoded message: text for the character modes, bytes for raw.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Text(String),
    Bytes(Vec<u8>),
}

impl Message {
    pub fn into_bytes(self) -> Vec<u8> {
        match self {
            Message::Text(s) => s.into_bytes(),
            Message::Bytes(b) => b,
        }
    }
}

pub fn decode_message(payload: &MessagePayload) -> Result<Message> {
    let mode = payload.mode();
    let body = payload.payload_bits();
    if !body.len().is_multiple_of(mode.group_bits()) {
        return Err(StegoError::Decode(format!(
            "{} payload bits is not a multiple of {}",
            body.len(),
            mode.group_bits()
        )));
    }
    let groups = body.chunks_exact(mode.group_bits()).map(read_bits);
    match mode {
        Mode::Ascii7 => Ok(Message::Text(groups.map(|g| char::from(g as u8)).collect())),
        Mode::Utf16 => {
            let units: Vec<u16> = groups.map(|g| g as u16).collect();
            String::from_utf16(&units)
                .map(Message::Text)
                .map_err(|_| StegoError::Decode("unpaired UTF-16 surrogate in payload".into()))
        }
        Mode::Raw => Ok(Message::Bytes(groups.map(|g| g as u8).collect())),
    }
}

/// Change marks travelling with the stego image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SideMatrices {
    pub ones: BitMatrix,
    pub zeros: BitMatrix,
}

impl SideMatrices {
    pub fn new(dims: ImageDims) -> Self {
        Self {
            ones: BitMatrix::filled(dims, true),
            zeros: BitMatrix::filled(dims, false),
        }
    }

    pub fn from_parts(ones: BitMatrix, zeros: BitMatrix) -> Result<Self> {
        if ones.dims() != zeros.dims() {
            return Err(StegoError::DimensionMismatch(
                "ones and zeros matrices differ in size".into(),
            ));
        }
        Ok(Self { ones, zeros })
    }

    pub fn dims(&self) -> ImageDims {
        self.ones.dims()
    }

    /// Records a changed cell carrying `bit`.
    pub fn mark(&mut self, row: usize, col: usize, bit: bool) -> Result<()> {
        self.ones.set(row, col, bit)?;
        self.zeros.set(row, col, bit)
    }

    /// True where both matrices agree, i.e. the sample was changed.
    pub fn is_changed(&self, row: usize, col: usize) -> Result<bool> {
        Ok(self.ones.get(row, col)? == self.zeros.get(row, col)?)
    }

    /// Every cell is either untouched (1/0) or marked (equal values).
    /// A cell holding ones = 0, zeros = 1 is the only inconsistent state.
    pub fn is_consistent(&self) -> bool {
        self.ones
            .bits()
            .iter()
            .zip(self.zeros.bits())
            .all(|(&o, &z)| o || !z)
    }

    pub fn changed_count(&self) -> usize {
        self.ones
            .bits()
            .iter()
            .zip(self.zeros.bits())
            .filter(|(o, z)| o == z)
            .count()
    }
}

/// Everything the receiver needs besides the secret keys.
#[derive(Clone, Debug, PartialEq)]
pub struct StegoBundle {
    pub stego: RasterImage,
    pub side: SideMatrices,
    pub coupling: PublicCoupling,
    pub mode: Mode,
}

impl StegoBundle {
    pub fn new(
        stego: RasterImage,
        side: SideMatrices,
        coupling: PublicCoupling,
        mode: Mode,
    ) -> Result<Self> {
        if side.dims() != stego.flat_dims() {
            return Err(StegoError::DimensionMismatch(format!(
                "side matrices are {}x{}, stego grid is {}x{}",
                side.dims().rows(),
                side.dims().cols(),
                stego.flat_dims().rows(),
                stego.flat_dims().cols()
            )));
        }
        Ok(Self {
            stego,
            side,
            coupling,
            mode,
        })
    }
}

fn cell(p: PixelPosition) -> (usize, usize) {
    (p.row - 1, p.col - 1)
}

/// Hides `payload` in a copy of `cover`.
pub fn embed(
    cover: &RasterImage,
    payload: &MessagePayload,
    keys: &SecretKeySet,
    coupling: PublicCoupling,
) -> Result<StegoBundle> {
    let grid = cover.flat_dims();
    if payload.len() > grid.cells() {
        return Err(StegoError::Capacity(format!(
            "{} bits do not fit in {} samples",
            payload.len(),
            grid.cells()
        )));
    }
    let mut selector = PositionSelector::new(keys, coupling, grid)?;
    let mut stego = cover.clone();
    let mut side = SideMatrices::new(grid);
    for &bit in payload.bits() {
        let (row, col) = cell(selector.next_unique(payload.len()).map_err(capacity)?);
        if stego.get_lsb(row, col)? != bit {
            stego.set_lsb(row, col, bit)?;
            side.mark(row, col, bit)?;
        }
    }
    StegoBundle::new(stego, side, coupling, payload.mode())
}

fn capacity(e: StegoError) -> StegoError {
    match e {
        StegoError::InsufficientCapacity { .. } => StegoError::Capacity(e.to_string()),
        other => other,
    }
}

fn read_bit(bundle: &StegoBundle, p: PixelPosition) -> Result<bool> {
    let (row, col) = cell(p);
    if bundle.side.is_changed(row, col)? {
        bundle.side.ones.get(row, col)
    } else {
        bundle.stego.get_lsb(row, col)
    }
}

fn extract_error(e: StegoError) -> StegoError {
    match e {
        StegoError::InsufficientCapacity { .. } => StegoError::Extract(e.to_string()),
        other => other,
    }
}

/// Reads the first `n_bits` stream bits without interpreting the header.
pub fn extract_bits(bundle: &StegoBundle, keys: &SecretKeySet, n_bits: usize) -> Result<Vec<bool>> {
    let grid = bundle.stego.flat_dims();
    if n_bits > grid.cells() {
        return Err(StegoError::Extract(format!(
            "{n_bits} bits exceed the {}-sample grid",
            grid.cells()
        )));
    }
    let mut selector = PositionSelector::new(keys, bundle.coupling, grid)?;
    (0..n_bits)
        .map(|_| read_bit(bundle, selector.next_unique(n_bits).map_err(extract_error)?))
        .collect()
}

/// Regenerates the positions and recovers the framed message.
pub fn extract(bundle: &StegoBundle, keys: &SecretKeySet) -> Result<MessagePayload> {
    let grid = bundle.stego.flat_dims();
    if grid.cells() < HEADER_BITS {
        return Err(StegoError::Extract(format!(
            "a {}-sample grid cannot hold the {HEADER_BITS}-bit header",
            grid.cells()
        )));
    }
    let mut selector = PositionSelector::new(keys, bundle.coupling, grid)?;
    let mut bits = Vec::with_capacity(HEADER_BITS);
    for _ in 0..HEADER_BITS {
        let p = selector.next_unique(HEADER_BITS).map_err(extract_error)?;
        bits.push(read_bit(bundle, p)?);
    }
    let declared = read_bits(&bits) as usize;
    let total = HEADER_BITS + declared;
    if total > grid.cells() {
        return Err(StegoError::Extract(format!(
            "header declares {declared} payload bits but the grid holds only {}",
            grid.cells() - HEADER_BITS
        )));
    }
    bits.reserve(declared);
    for _ in 0..declared {
        let p = selector.next_unique(total).map_err(extract_error)?;
        bits.push(read_bit(bundle, p)?);
    }
    MessagePayload::from_bits(bundle.mode, bits).map_err(|e| StegoError::Extract(e.to_string()))
}

/// Fraction of positions where two equal-length bit strings differ.
pub fn bit_error_rate(sent: &[bool], received: &[bool]) -> Result<f64> {
    if sent.len() != received.len() {
        return Err(StegoError::DimensionMismatch(format!(
            "bit strings of length {} and {}",
            sent.len(),
            received.len()
        )));
    }
    if sent.is_empty() {
        return Ok(0.0);
    }
    let errors = sent.iter().zip(received).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / sent.len() as f64)
}
