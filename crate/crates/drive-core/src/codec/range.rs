//! Static-model range coder for entropy-coded payloads.
//!
//! Byte-oriented carry-propagating range coder (the LZMA construction) over a
//! frequency table derived deterministically from a level set: Gaussian cell
//! masses quantized to a 16-bit total by floor-then-distribute-remainder with
//! every symbol kept at frequency >= 1. Both sides rebuild the identical
//! table from the level set alone; no table bytes travel on the wire.
//!
//! The encoder emits a leading zero byte (the initial cache) and five tail
//! bytes that flush the low register, so a stream for `n` symbols is decoded
//! with at most the bytes the encoder produced. Running out of input or
//! landing outside the frequency total reports a corrupt stream.

use crate::error::{Error, Result};
use crate::quantizer::{LevelSet, QuantizedVector};

/// Frequency total: 16-bit resolution.
const TOTAL_BITS: u32 = 16;
const TOTAL: u32 = 1 << TOTAL_BITS;
const RENORM_LIMIT: u32 = 1 << 24;

/// Cumulative frequency table over a level-set alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    /// `cum[i]..cum[i+1]` is symbol i's slice; `cum[z] == TOTAL`.
    cum: Vec<u32>,
}

impl SymbolTable {
    /// Builds the table from a level set's cell masses.
    pub fn from_level_set(set: &LevelSet) -> Self {
        Self::from_probabilities(set.probabilities())
    }

    fn from_probabilities(probs: &[f64]) -> Self {
        let z = probs.len();
        debug_assert!(z >= 1 && z < TOTAL as usize);
        let mut freq: Vec<u32> = Vec::with_capacity(z);
        let mut fracs: Vec<(usize, f64)> = Vec::with_capacity(z);
        let mut sum: i64 = 0;
        for (i, &p) in probs.iter().enumerate() {
            let scaled = p * f64::from(TOTAL);
            let f = (scaled.floor() as u32).max(1);
            fracs.push((i, scaled - scaled.floor()));
            sum += i64::from(f);
            freq.push(f);
        }
        let mut diff = i64::from(TOTAL) - sum;
        if diff > 0 {
            // Largest fractional parts first; ties by index.
            fracs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut k = 0usize;
            while diff > 0 {
                freq[fracs[k % z].0] += 1;
                diff -= 1;
                k += 1;
            }
        }
        while diff < 0 {
            // Shave the most frequent symbol, never below 1.
            let (imax, _) = freq
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .expect("non-empty");
            debug_assert!(freq[imax] > 1);
            freq[imax] -= 1;
            diff += 1;
        }
        let mut cum = Vec::with_capacity(z + 1);
        let mut acc = 0u32;
        for f in freq {
            cum.push(acc);
            acc += f;
        }
        cum.push(acc);
        debug_assert_eq!(acc, TOTAL);
        Self { cum }
    }

    pub fn alphabet_len(&self) -> usize {
        self.cum.len() - 1
    }

    fn slice(&self, symbol: u32) -> Result<(u32, u32)> {
        let s = symbol as usize;
        if s >= self.alphabet_len() {
            return Err(Error::SymbolOutOfRange { symbol, alphabet: self.alphabet_len() });
        }
        Ok((self.cum[s], self.cum[s + 1]))
    }

    /// Largest symbol whose cumulative start is at most `f`.
    fn lookup(&self, f: u32) -> u32 {
        let mut lo = 0usize;
        let mut hi = self.alphabet_len() - 1;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if self.cum[mid] <= f {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo as u32
    }
}

struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl RangeEncoder {
    fn new() -> Self {
        Self { low: 0, range: u32::MAX, cache: 0, cache_size: 1, out: Vec::new() }
    }

    fn encode(&mut self, cum_lo: u32, cum_hi: u32) {
        let r = self.range >> TOTAL_BITS;
        self.low += u64::from(r) * u64::from(cum_lo);
        self.range = r * (cum_hi - cum_lo);
        while self.range < RENORM_LIMIT {
            self.shift_low();
            self.range <<= 8;
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low > 0xFFFF_FFFF {
            let carry = (self.low >> 32) as u8;
            self.out.push(self.cache.wrapping_add(carry));
            for _ in 1..self.cache_size {
                self.out.push(0xFFu8.wrapping_add(carry));
            }
            self.cache_size = 0;
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low << 8) & 0xFFFF_FFFF;
    }

    fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    data: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    fn new(data: &'a [u8]) -> Result<Self> {
        let mut dec = Self { code: 0, range: u32::MAX, data, pos: 1 }; // skip cache byte
        if data.is_empty() {
            return Err(Error::CorruptStream { detail: "empty stream" });
        }
        for _ in 0..4 {
            dec.code = (dec.code << 8) | u32::from(dec.next_byte()?);
        }
        Ok(dec)
    }

    fn next_byte(&mut self) -> Result<u8> {
        let b = self
            .data
            .get(self.pos)
            .copied()
            .ok_or(Error::CorruptStream { detail: "stream exhausted" })?;
        self.pos += 1;
        Ok(b)
    }

    fn decode(&mut self, table: &SymbolTable) -> Result<u32> {
        let r = self.range >> TOTAL_BITS;
        let f = self.code / r;
        if f >= TOTAL {
            return Err(Error::CorruptStream { detail: "code outside frequency total" });
        }
        let symbol = table.lookup(f);
        let (lo, hi) = table.slice(symbol)?;
        self.code -= r * lo;
        self.range = r * (hi - lo);
        while self.range < RENORM_LIMIT {
            self.code = (self.code << 8) | u32::from(self.next_byte()?);
            self.range <<= 8;
        }
        Ok(symbol)
    }
}

/// Entropy-codes a quantized vector under a single shared level set.
pub fn entropy_encode(qv: &QuantizedVector) -> Result<Vec<u8>> {
    let set = qv
        .scheme()
        .uniform_set()
        .ok_or_else(|| Error::InvalidConfig("entropy coding needs a uniform scheme".into()))?;
    encode_symbols(qv.indices(), set)
}

/// Entropy-codes raw symbols against a level set's table.
pub fn encode_symbols(symbols: &[u32], set: &LevelSet) -> Result<Vec<u8>> {
    if symbols.is_empty() {
        return Ok(Vec::new());
    }
    let table = SymbolTable::from_level_set(set);
    let mut enc = RangeEncoder::new();
    for &s in symbols {
        let (lo, hi) = table.slice(s)?;
        enc.encode(lo, hi);
    }
    Ok(enc.finish())
}

/// Decodes `count` symbols; exact inverse of [`encode_symbols`].
pub fn entropy_decode(payload: &[u8], set: &LevelSet, count: usize) -> Result<Vec<u32>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let table = SymbolTable::from_level_set(set);
    let mut dec = RangeDecoder::new(payload)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(dec.decode(&table)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::{equal_interval_levels, lloyd_max_levels};
    use crate::rng::CounterRng;

    fn random_symbols(set: &LevelSet, count: usize, seed: u64) -> Vec<u32> {
        // Draw actual Gaussians and quantize, so frequencies follow the model.
        let mut rng = CounterRng::new(seed);
        (0..count).map(|_| set.nearest_index(rng.next_gaussian())).collect()
    }

    #[test]
    fn table_sums_to_total_with_min_one() {
        for set in [
            lloyd_max_levels(4, 1e-12).unwrap(),
            lloyd_max_levels(9, 1e-12).unwrap(),
            equal_interval_levels(3.0, 1e-10).unwrap(),
            equal_interval_levels(6.0, 1e-10).unwrap(),
        ] {
            let t = SymbolTable::from_level_set(&set);
            assert_eq!(*t.cum.last().unwrap(), TOTAL);
            for w in t.cum.windows(2) {
                assert!(w[1] > w[0], "zero-frequency symbol");
            }
        }
    }

    #[test]
    fn roundtrip_lattice_and_lloyd() {
        let lattice = equal_interval_levels(3.0, 1e-10).unwrap();
        let q9 = lloyd_max_levels(9, 1e-12).unwrap();
        for (i, set) in [lattice, q9].iter().enumerate() {
            for trial in 0..20u64 {
                let symbols = random_symbols(set, 4096, 1000 * (i as u64 + 1) + trial);
                let bytes = encode_symbols(&symbols, set).unwrap();
                let back = entropy_decode(&bytes, set, symbols.len()).unwrap();
                assert_eq!(back, symbols);
            }
        }
    }

    #[test]
    fn empty_stream_decodes_empty() {
        let set = lloyd_max_levels(4, 1e-12).unwrap();
        assert_eq!(encode_symbols(&[], &set).unwrap(), Vec::<u8>::new());
        assert_eq!(entropy_decode(&[], &set, 0).unwrap(), Vec::<u32>::new());
    }

    #[test]
    fn truncated_stream_errors() {
        let set = equal_interval_levels(3.0, 1e-10).unwrap();
        let symbols = random_symbols(&set, 512, 5);
        let bytes = encode_symbols(&symbols, &set).unwrap();
        let cut = &bytes[..bytes.len() / 2];
        assert!(matches!(
            entropy_decode(cut, &set, symbols.len()),
            Err(Error::CorruptStream { .. })
        ));
        assert!(matches!(entropy_decode(&[], &set, 1), Err(Error::CorruptStream { .. })));
    }

    #[test]
    fn saturated_bytes_error_out() {
        // 0xFF everywhere drives the code value past the frequency total.
        let set = lloyd_max_levels(2, 1e-12).unwrap();
        let junk = vec![0xFFu8; 16];
        assert!(matches!(
            entropy_decode(&junk, &set, 8),
            Err(Error::CorruptStream { .. })
        ));
    }

    #[test]
    fn symbol_outside_alphabet_is_rejected() {
        let set = lloyd_max_levels(4, 1e-12).unwrap();
        assert!(matches!(
            encode_symbols(&[0, 7, 1], &set),
            Err(Error::SymbolOutOfRange { symbol: 7, .. })
        ));
    }

    #[test]
    fn coded_length_tracks_entropy() {
        let set = equal_interval_levels(3.0, 1e-10).unwrap();
        let count = 1 << 16;
        let symbols = random_symbols(&set, count, 42);
        let bytes = encode_symbols(&symbols, &set).unwrap();
        let budget = (count as f64) * (set.entropy_bits() + 0.05) / 8.0 + 64.0;
        assert!((bytes.len() as f64) <= budget, "{} > {}", bytes.len(), budget);
    }

    #[test]
    fn constant_stream_costs_model_cross_entropy() {
        // The table is static (derived from the Gaussian cell masses), so a
        // degenerate all-one-symbol stream costs about -log2(p_center) bits
        // per coordinate, not its empirical zero entropy.
        let set = equal_interval_levels(3.0, 1e-10).unwrap();
        let center = set.nearest_index(0.0);
        let count = 1 << 14;
        let symbols = vec![center; count];
        let bytes = encode_symbols(&symbols, &set).unwrap();
        let p_center = set.probabilities()[center as usize];
        let expected_bits = -(p_center.log2()) * count as f64;
        assert!((bytes.len() as f64) <= expected_bits / 8.0 + 64.0);
        assert!((bytes.len() as f64) >= expected_bits / 8.0 - 64.0);
        let back = entropy_decode(&bytes, &set, count).unwrap();
        assert_eq!(back, symbols);
    }

    #[test]
    fn single_symbol_alphabet_is_nearly_free() {
        let set = LevelSet::zero();
        let symbols = vec![0u32; 1 << 12];
        let bytes = encode_symbols(&symbols, &set).unwrap();
        assert!(bytes.len() <= 8, "{} bytes", bytes.len());
        assert_eq!(entropy_decode(&bytes, &set, symbols.len()).unwrap(), symbols);
    }
}
