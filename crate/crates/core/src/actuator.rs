//! Shift-register codec for the feedback drivers.
//!
//! Each module is driven by one 64-channel serial-to-parallel converter:
//! taxel `k` uses channel `2k` for its top electrode and `2k + 1` for its
//! bottom electrode. Protrusion drives the top electrode, retraction the
//! bottom one, neutral neither; both high is a forbidden state.
//!
//! Modules are daisy-chained on one data line. The last module's bits are
//! shifted in first and each frame is sent most significant channel (63)
//! first, followed by a latch-enable pulse.
//!
//! Captured streams are stored as `TAGF` records:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `TAGF` |
//! | 1 | version `0x01` |
//! | 1 | module count (1..=5) |
//! | 8 × count | payload bits packed MSB-first |
//! | 1 | latch marker `0xFF` |
//!
//! A file is a concatenation of records.

use std::io::{Read, Write};

use thiserror::Error;

use crate::tactile::{TaxelPattern, TaxelState, TAXEL_COUNT};

pub const CHANNELS: usize = 64;
pub const MAX_MODULES: usize = 5;
pub const MAGIC: [u8; 4] = *b"TAGF";
pub const VERSION: u8 = 0x01;
pub const LATCH: u8 = 0xFF;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("channel {channel} and {} both high (taxel {taxel})", channel + 1)]
    ForbiddenState { taxel: usize, channel: usize },
    #[error("payload not a multiple of 64 bits ({0} bits)")]
    PayloadLength(usize),
    #[error("module count {0} outside 1..=5")]
    ModuleCount(usize),
    #[error("module ids must be distinct and dense from 0, got {0:?}")]
    ModuleIds(Vec<usize>),
    #[error("bad magic {0:02x?}")]
    Magic([u8; 4]),
    #[error("unsupported version {0:#04x}")]
    Version(u8),
    #[error("missing latch marker, found {0:#04x}")]
    Latch(u8),
    #[error("truncated record")]
    Truncated,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Channel levels for one module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActuatorFrame {
    pub module_id: usize,
    pub channel_bits: [bool; CHANNELS],
}

impl ActuatorFrame {
    pub fn new(module_id: usize) -> Self {
        Self {
            module_id,
            channel_bits: [false; CHANNELS],
        }
    }

    /// Channels as a 64-bit word, channel `i` at bit `i`.
    pub fn to_word(&self) -> u64 {
        self.channel_bits
            .iter()
            .enumerate()
            .fold(0u64, |w, (i, &b)| w | (u64::from(b) << i))
    }

    pub fn from_word(module_id: usize, word: u64) -> Self {
        let mut frame = Self::new(module_id);
        for (i, bit) in frame.channel_bits.iter_mut().enumerate() {
            *bit = (word >> i) & 1 == 1;
        }
        frame
    }
}

pub fn encode_frame(pattern: &TaxelPattern, module_id: usize) -> ActuatorFrame {
    let mut frame = ActuatorFrame::new(module_id);
    for (k, state) in pattern.states.iter().enumerate() {
        let (top, bottom) = match state {
            TaxelState::Protrude => (true, false),
            TaxelState::Retract => (false, true),
            TaxelState::Neutral => (false, false),
        };
        frame.channel_bits[2 * k] = top;
        frame.channel_bits[2 * k + 1] = bottom;
    }
    frame
}

pub fn decode_frame(frame: &ActuatorFrame) -> Result<TaxelPattern, CodecError> {
    let mut pattern = TaxelPattern::neutral();
    for k in 0..TAXEL_COUNT {
        let top = frame.channel_bits[2 * k];
        let bottom = frame.channel_bits[2 * k + 1];
        pattern.states[k] = match (top, bottom) {
            (true, false) => TaxelState::Protrude,
            (false, true) => TaxelState::Retract,
            (false, false) => TaxelState::Neutral,
            (true, true) => {
                return Err(CodecError::ForbiddenState {
                    taxel: k,
                    channel: 2 * k,
                })
            }
        };
    }
    Ok(pattern)
}

/// Serial payload for a daisy chain, in shift order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStream {
    pub payload: Vec<bool>,
    pub module_count: usize,
    /// Whether a latch-enable pulse terminates the payload.
    pub latched: bool,
}

pub fn serialize_chain(frames: &[ActuatorFrame]) -> Result<ChainStream, CodecError> {
    let n = frames.len();
    if n == 0 || n > MAX_MODULES {
        return Err(CodecError::ModuleCount(n));
    }
    let mut ordered: Vec<Option<&ActuatorFrame>> = vec![None; n];
    for f in frames {
        match ordered.get_mut(f.module_id) {
            Some(slot @ None) => *slot = Some(f),
            _ => {
                return Err(CodecError::ModuleIds(
                    frames.iter().map(|f| f.module_id).collect(),
                ))
            }
        }
    }
    let mut payload = Vec::with_capacity(n * CHANNELS);
    for frame in ordered.iter().rev().flatten() {
        payload.extend(frame.channel_bits.iter().rev());
    }
    Ok(ChainStream {
        payload,
        module_count: n,
        latched: true,
    })
}

pub fn deserialize_chain(stream: &ChainStream) -> Result<Vec<ActuatorFrame>, CodecError> {
    let bits = stream.payload.len();
    if !bits.is_multiple_of(CHANNELS) {
        return Err(CodecError::PayloadLength(bits));
    }
    let n = bits / CHANNELS;
    if n == 0 || n > MAX_MODULES {
        return Err(CodecError::ModuleCount(n));
    }
    let mut frames: Vec<ActuatorFrame> = stream
        .payload
        .chunks(CHANNELS)
        .enumerate()
        .map(|(i, chunk)| {
            let mut frame = ActuatorFrame::new(n - 1 - i);
            for (bit, &v) in frame.channel_bits.iter_mut().rev().zip(chunk) {
                *bit = v;
            }
            frame
        })
        .collect();
    frames.reverse();
    Ok(frames)
}

/// Encodes one pattern per module (module id = position) into a stream.
pub fn encode_patterns(patterns: &[TaxelPattern]) -> Result<ChainStream, CodecError> {
    let frames: Vec<ActuatorFrame> = patterns
        .iter()
        .enumerate()
        .map(|(i, p)| encode_frame(p, i))
        .collect();
    serialize_chain(&frames)
}

pub fn decode_patterns(stream: &ChainStream) -> Result<Vec<TaxelPattern>, CodecError> {
    deserialize_chain(stream)?.iter().map(decode_frame).collect()
}

fn pack_bits(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().fold(0u8, |b, &v| (b << 1) | u8::from(v)))
        .collect()
}

fn unpack_bits(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1 == 1))
        .collect()
}

impl ChainStream {
    /// One `TAGF` record.
    pub fn to_record(&self) -> Result<Vec<u8>, CodecError> {
        if self.payload.len() != self.module_count * CHANNELS {
            return Err(CodecError::PayloadLength(self.payload.len()));
        }
        if self.module_count == 0 || self.module_count > MAX_MODULES {
            return Err(CodecError::ModuleCount(self.module_count));
        }
        let mut out = Vec::with_capacity(7 + self.module_count * 8);
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.module_count as u8);
        out.extend(pack_bits(&self.payload));
        out.push(LATCH);
        Ok(out)
    }

    /// Payload as lowercase hex, two digits per byte.
    pub fn to_hex(&self) -> String {
        pack_bits(&self.payload)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Writes a sequence of streams as concatenated records.
pub fn write_tagf<W: Write>(mut w: W, streams: &[ChainStream]) -> Result<(), CodecError> {
    for s in streams {
        w.write_all(&s.to_record()?)?;
    }
    Ok(())
}

/// Reads every record from a `TAGF` byte source.
pub fn read_tagf<R: Read>(mut r: R) -> Result<Vec<ChainStream>, CodecError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    parse_tagf(&bytes)
}

pub fn parse_tagf(mut bytes: &[u8]) -> Result<Vec<ChainStream>, CodecError> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        if bytes.len() < 6 {
            return Err(CodecError::Truncated);
        }
        let magic: [u8; 4] = bytes[..4].try_into().expect("length checked");
        if magic != MAGIC {
            return Err(CodecError::Magic(magic));
        }
        if bytes[4] != VERSION {
            return Err(CodecError::Version(bytes[4]));
        }
        let count = bytes[5] as usize;
        if count == 0 || count > MAX_MODULES {
            return Err(CodecError::ModuleCount(count));
        }
        let end = 6 + count * 8;
        if bytes.len() < end + 1 {
            return Err(CodecError::Truncated);
        }
        if bytes[end] != LATCH {
            return Err(CodecError::Latch(bytes[end]));
        }
        out.push(ChainStream {
            payload: unpack_bits(&bytes[6..end]),
            module_count: count,
            latched: true,
        });
        bytes = &bytes[end + 1..];
    }
    Ok(out)
}
