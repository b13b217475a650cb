//! Fixed-width bit packing of level indices.
//!
//! Indices are written MSB-first, one after another in coordinate order,
//! `ceil(log2 z)` bits each (`{0}` coordinates contribute no bits); the final
//! partial byte is zero-padded. Packing a coordinate range starts a fresh
//! bit stream, which is what lets packets carry independently decodable
//! slices.

use crate::error::{Error, Result};
use crate::quantizer::{QuantizedVector, Scheme};

/// MSB-first bit sink.
#[derive(Debug, Default)]
pub struct BitWriter {
    buf: Vec<u8>,
    /// Bits already used in the last byte (0 when byte-aligned).
    used: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write_bits(&mut self, value: u32, width: u32) {
        debug_assert!(width <= 32);
        debug_assert!(width == 32 || value < (1u32 << width));
        let mut remaining = width;
        while remaining > 0 {
            if self.used == 0 {
                self.buf.push(0);
            }
            let free = 8 - self.used;
            let take = free.min(remaining);
            let chunk = (value >> (remaining - take)) & ((1u32 << take) - 1);
            let last = self.buf.last_mut().expect("pushed above");
            *last |= (chunk as u8) << (free - take);
            self.used = (self.used + take) % 8;
            remaining -= take;
        }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn bit_len(&self) -> usize {
        if self.used == 0 {
            self.buf.len() * 8
        } else {
            (self.buf.len() - 1) * 8 + self.used as usize
        }
    }
}

/// MSB-first bit source.
#[derive(Debug)]
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize, // absolute bit position
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn read_bits(&mut self, width: u32) -> Option<u32> {
        if self.pos + width as usize > self.data.len() * 8 {
            return None;
        }
        let mut out = 0u32;
        let mut remaining = width;
        while remaining > 0 {
            let byte = self.data[self.pos / 8];
            let offset = (self.pos % 8) as u32;
            let avail = 8 - offset;
            let take = avail.min(remaining);
            let chunk = (u32::from(byte) >> (avail - take)) & ((1u32 << take) - 1);
            out = (out << take) | chunk;
            self.pos += take as usize;
            remaining -= take;
        }
        Some(out)
    }
}

fn check_fixed_width(scheme: &Scheme) -> Result<()> {
    for (set, _) in scheme.runs() {
        if set.len() != 1 && !set.len().is_power_of_two() {
            return Err(Error::FixedWidthUnsupported { set_len: set.len() });
        }
    }
    Ok(())
}

/// Packs the index range `[start, start + count)` into a fresh bit stream.
pub fn pack_fixed_range(
    indices: &[u32],
    scheme: &Scheme,
    start: usize,
    count: usize,
) -> Result<Vec<u8>> {
    check_fixed_width(scheme)?;
    if start + count > scheme.dim() || indices.len() != scheme.dim() {
        return Err(Error::DimensionMismatch { expected: scheme.dim(), found: indices.len() });
    }
    let mut writer = BitWriter::new();
    let mut coord = 0usize;
    for (set, len) in scheme.runs() {
        let width = set.fixed_width_bits();
        for _ in 0..len {
            if coord >= start && coord < start + count && width > 0 {
                writer.write_bits(indices[coord], width);
            }
            coord += 1;
        }
    }
    Ok(writer.into_bytes())
}

/// Packs a whole quantized vector.
pub fn pack_fixed(qv: &QuantizedVector) -> Result<Vec<u8>> {
    pack_fixed_range(qv.indices(), qv.scheme(), 0, qv.scheme().dim())
}

/// Decodes the index range `[start, start + count)` from a fresh bit stream.
///
/// Errors name the first coordinate the payload could not cover.
pub fn unpack_fixed_range(
    payload: &[u8],
    scheme: &Scheme,
    start: usize,
    count: usize,
) -> Result<Vec<u32>> {
    check_fixed_width(scheme)?;
    if start + count > scheme.dim() {
        return Err(Error::DimensionMismatch { expected: scheme.dim(), found: start + count });
    }
    let mut reader = BitReader::new(payload);
    let mut out = Vec::with_capacity(count);
    let mut coord = 0usize;
    for (set, len) in scheme.runs() {
        let width = set.fixed_width_bits();
        for _ in 0..len {
            if coord >= start && coord < start + count {
                if width == 0 {
                    out.push(0);
                } else {
                    match reader.read_bits(width) {
                        Some(v) => out.push(v),
                        None => return Err(Error::PayloadTooShort { coordinate: coord }),
                    }
                }
            }
            coord += 1;
        }
    }
    Ok(out)
}

/// Decodes a whole payload back to per-coordinate indices.
pub fn unpack_fixed(payload: &[u8], scheme: &Scheme) -> Result<Vec<u32>> {
    unpack_fixed_range(payload, scheme, 0, scheme.dim())
}
