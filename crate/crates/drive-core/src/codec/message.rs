//! Message and vector-file wire formats (little-endian throughout).
//!
//! Message layout (46-byte header, then payload):
//!
//! ```text
//! magic "DRV2" | version u8 | flags u8 | client_id u32 | round u32
//! | d u32 | D u32 | scheme_id u16 | reserved u16
//! | scale f64 | norm f64 | payload_len u32 | payload bytes
//! ```
//!
//! Flags: bit 0 = zero vector (payload empty, scale 0), bit 1 = entropy-coded
//! payload, bit 2 = degenerate scale (scale forced to 0). `scheme_id` is the
//! bit budget in 8.8 fixed point (see `Scheme::wire_id`), which lets a
//! decoder rebuild the scheme from the header alone.
//!
//! Vector files: magic "DVEC", count u32, then `count` f64 values.

use crate::error::{Error, Result};

pub const MESSAGE_MAGIC: [u8; 4] = *b"DRV2";
pub const VECTOR_MAGIC: [u8; 4] = *b"DVEC";
pub const MESSAGE_VERSION: u8 = 1;
/// Fixed message header size in bytes.
pub const MESSAGE_HEADER_LEN: usize = 46;

const FLAG_ZERO: u8 = 1 << 0;
const FLAG_ENTROPY: u8 = 1 << 1;
const FLAG_DEGENERATE_SCALE: u8 = 1 << 2;

/// One client's encoded vector for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMessage {
    pub client_id: u32,
    pub round: u32,
    /// Original vector dimension `d`.
    pub original_dim: u32,
    /// Padded / rotated dimension `D`.
    pub padded_dim: u32,
    pub scheme_id: u16,
    pub zero_flag: bool,
    pub entropy: bool,
    pub degenerate_scale: bool,
    pub scale: f64,
    pub norm: f64,
    pub payload: Vec<u8>,
}

impl EncodedMessage {
    /// Serialized size in bytes.
    pub fn wire_len(&self) -> usize {
        MESSAGE_HEADER_LEN + self.payload.len()
    }

    fn flags(&self) -> u8 {
        let mut f = 0;
        if self.zero_flag {
            f |= FLAG_ZERO;
        }
        if self.entropy {
            f |= FLAG_ENTROPY;
        }
        if self.degenerate_scale {
            f |= FLAG_DEGENERATE_SCALE;
        }
        f
    }

    /// Header bytes only; `payload_len` still records the payload size.
    pub fn header_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(MESSAGE_HEADER_LEN);
        out.extend_from_slice(&MESSAGE_MAGIC);
        out.push(MESSAGE_VERSION);
        out.push(self.flags());
        out.extend_from_slice(&self.client_id.to_le_bytes());
        out.extend_from_slice(&self.round.to_le_bytes());
        out.extend_from_slice(&self.original_dim.to_le_bytes());
        out.extend_from_slice(&self.padded_dim.to_le_bytes());
        out.extend_from_slice(&self.scheme_id.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&self.scale.to_le_bytes());
        out.extend_from_slice(&self.norm.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header_bytes();
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses a header, returning the message shell plus the declared
    /// payload length.
    pub fn from_header_bytes(data: &[u8]) -> Result<(Self, usize)> {
        if data.len() < MESSAGE_HEADER_LEN {
            return Err(Error::TruncatedMessage);
        }
        let magic: [u8; 4] = data[0..4].try_into().expect("sized");
        if magic != MESSAGE_MAGIC {
            return Err(Error::BadMagic { expected: MESSAGE_MAGIC, found: magic });
        }
        let version = data[4];
        if version != MESSAGE_VERSION {
            return Err(Error::BadVersion { version });
        }
        let flags = data[5];
        let u32_at = |i: usize| u32::from_le_bytes(data[i..i + 4].try_into().expect("sized"));
        let msg = Self {
            client_id: u32_at(6),
            round: u32_at(10),
            original_dim: u32_at(14),
            padded_dim: u32_at(18),
            scheme_id: u16::from_le_bytes(data[22..24].try_into().expect("sized")),
            zero_flag: flags & FLAG_ZERO != 0,
            entropy: flags & FLAG_ENTROPY != 0,
            degenerate_scale: flags & FLAG_DEGENERATE_SCALE != 0,
            scale: f64::from_le_bytes(data[26..34].try_into().expect("sized")),
            norm: f64::from_le_bytes(data[34..42].try_into().expect("sized")),
            payload: Vec::new(),
        };
        let payload_len = u32_at(42) as usize;
        Ok((msg, payload_len))
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let (mut msg, payload_len) = Self::from_header_bytes(data)?;
        if data.len() < MESSAGE_HEADER_LEN + payload_len {
            return Err(Error::TruncatedMessage);
        }
        msg.payload = data[MESSAGE_HEADER_LEN..MESSAGE_HEADER_LEN + payload_len].to_vec();
        Ok(msg)
    }
}

/// Serializes a vector to the `DVEC` format.
pub fn write_vector_bytes(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + values.len() * 8);
    out.extend_from_slice(&VECTOR_MAGIC);
    out.extend_from_slice(&(values.len() as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses a `DVEC` buffer.
pub fn read_vector_bytes(data: &[u8]) -> Result<Vec<f64>> {
    if data.len() < 8 {
        return Err(Error::TruncatedMessage);
    }
    let magic: [u8; 4] = data[0..4].try_into().expect("sized");
    if magic != VECTOR_MAGIC {
        return Err(Error::BadMagic { expected: VECTOR_MAGIC, found: magic });
    }
    let count = u32::from_le_bytes(data[4..8].try_into().expect("sized")) as usize;
    if data.len() < 8 + count * 8 {
        return Err(Error::TruncatedMessage);
    }
    Ok((0..count)
        .map(|i| f64::from_le_bytes(data[8 + i * 8..16 + i * 8].try_into().expect("sized")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EncodedMessage {
        EncodedMessage {
            client_id: 3,
            round: 9,
            original_dim: 100,
            padded_dim: 128,
            scheme_id: 256,
            zero_flag: false,
            entropy: true,
            degenerate_scale: false,
            scale: 1.25,
            norm: 7.5,
            payload: vec![1, 2, 3, 4, 5],
        }
    }

    #[test]
    fn header_is_46_bytes() {
        let m = sample();
        assert_eq!(m.header_bytes().len(), MESSAGE_HEADER_LEN);
        assert_eq!(m.wire_len(), MESSAGE_HEADER_LEN + 5);
    }

    #[test]
    fn message_roundtrip() {
        let m = sample();
        assert_eq!(EncodedMessage::from_bytes(&m.to_bytes()).unwrap(), m);
        let mut zero = sample();
        zero.zero_flag = true;
        zero.degenerate_scale = true;
        zero.payload.clear();
        assert_eq!(EncodedMessage::from_bytes(&zero.to_bytes()).unwrap(), zero);
    }

    #[test]
    fn rejects_malformed_buffers() {
        let m = sample().to_bytes();
        assert_eq!(EncodedMessage::from_bytes(&m[..10]), Err(Error::TruncatedMessage));
        assert_eq!(
            EncodedMessage::from_bytes(&m[..MESSAGE_HEADER_LEN + 2]),
            Err(Error::TruncatedMessage)
        );
        let mut bad = m.clone();
        bad[0] = b'X';
        assert!(matches!(EncodedMessage::from_bytes(&bad), Err(Error::BadMagic { .. })));
        let mut bad = m;
        bad[4] = 99;
        assert_eq!(EncodedMessage::from_bytes(&bad), Err(Error::BadVersion { version: 99 }));
    }

    #[test]
    fn vector_file_roundtrip() {
        let v = vec![0.0, -1.5, 3.25, f64::MIN_POSITIVE];
        assert_eq!(read_vector_bytes(&write_vector_bytes(&v)).unwrap(), v);
        assert_eq!(read_vector_bytes(&write_vector_bytes(&[])).unwrap(), Vec::<f64>::new());
        assert!(matches!(read_vector_bytes(b"DVEX\x00\x00\x00\x00"), Err(Error::BadMagic { .. })));
        let mut short = write_vector_bytes(&v);
        short.truncate(short.len() - 1);
        assert_eq!(read_vector_bytes(&short), Err(Error::TruncatedMessage));
    }
}
