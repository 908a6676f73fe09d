//! Adaptive binary range coder over the bit-planes of fixed-width symbols.
//!
//! Each symbol is coded MSB first; every bit-plane has its own adaptive
//! probability. The coder keeps a 32-bit range, a 64-bit low register and
//! propagates carries through a cached byte plus a run of pending 0xFF
//! bytes, so the output is identical on every platform.

use crate::error::{Error, Result};

const PROB_BITS: u32 = 15;
const PROB_ONE: u32 = 1 << PROB_BITS;
const ADAPT_SHIFT: u32 = 5;
const TOP: u32 = 1 << 24;

struct Encoder {
    low: u64,
    range: u32,
    cache: u8,
    pending: u64,
    out: Vec<u8>,
}

impl Encoder {
    fn new() -> Self {
        Encoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            pending: 1,
            out: Vec::new(),
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.pending -= 1;
                if self.pending == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.pending += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    fn encode(&mut self, prob: &mut u16, bit: bool) {
        let p = u32::from(*prob);
        let bound = (self.range >> PROB_BITS) * p;
        if bit {
            self.low += u64::from(bound);
            self.range -= bound;
            *prob = (p - (p >> ADAPT_SHIFT)) as u16;
        } else {
            self.range = bound;
            *prob = (p + ((PROB_ONE - p) >> ADAPT_SHIFT)) as u16;
        }
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

struct Decoder<'a> {
    input: &'a [u8],
    pos: usize,
    range: u32,
    code: u32,
}

impl<'a> Decoder<'a> {
    fn new(input: &'a [u8]) -> Result<Self> {
        let mut d = Decoder {
            input,
            pos: 0,
            range: u32::MAX,
            code: 0,
        };
        for _ in 0..5 {
            d.code = (d.code << 8) | u32::from(d.next()?);
        }
        Ok(d)
    }

    fn next(&mut self) -> Result<u8> {
        let b = *self.input.get(self.pos).ok_or(Error::Truncated {
            last_complete_level: None,
        })?;
        self.pos += 1;
        Ok(b)
    }

    fn decode(&mut self, prob: &mut u16) -> Result<bool> {
        let p = u32::from(*prob);
        let bound = (self.range >> PROB_BITS) * p;
        let bit = if self.code < bound {
            self.range = bound;
            *prob = (p + ((PROB_ONE - p) >> ADAPT_SHIFT)) as u16;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            *prob = (p - (p >> ADAPT_SHIFT)) as u16;
            true
        };
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | u32::from(self.next()?);
        }
        Ok(bit)
    }
}

fn check_bits(bits: u32) -> Result<()> {
    if !(1..=32).contains(&bits) {
        return Err(Error::Config(format!("symbol width {bits} outside [1, 32]")));
    }
    Ok(())
}

/// Codes `symbols`, each `bits` wide. An empty input yields the five-byte
/// flushed stream.
pub fn entropy_encode(symbols: &[u32], bits: u32) -> Result<Vec<u8>> {
    check_bits(bits)?;
    if bits < 32 {
        if let Some(s) = symbols.iter().find(|&&s| s >> bits != 0) {
            return Err(Error::OutOfRange(format!("symbol {s} does not fit in {bits} bits")));
        }
    }
    let mut probs = vec![(PROB_ONE / 2) as u16; bits as usize];
    let mut enc = Encoder::new();
    for &s in symbols {
        for plane in (0..bits).rev() {
            enc.encode(&mut probs[plane as usize], (s >> plane) & 1 == 1);
        }
    }
    Ok(enc.finish())
}

/// Inverse of [`entropy_encode`]; fails with `Truncated` when the stream
/// ends early.
pub fn entropy_decode(bytes: &[u8], count: usize, bits: u32) -> Result<Vec<u32>> {
    check_bits(bits)?;
    let mut probs = vec![(PROB_ONE / 2) as u16; bits as usize];
    let mut dec = Decoder::new(bytes)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut s = 0u32;
        for plane in (0..bits).rev() {
            if dec.decode(&mut probs[plane as usize])? {
                s |= 1 << plane;
            }
        }
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_zero_symbols_compress() {
        let zeros = vec![0u32; 10_000];
        let bytes = entropy_encode(&zeros, 8).unwrap();
        assert!(bytes.len() < 200, "{} bytes", bytes.len());
        assert_eq!(entropy_decode(&bytes, zeros.len(), 8).unwrap(), zeros);
    }

    #[test]
    fn empty_input() {
        let bytes = entropy_encode(&[], 8).unwrap();
        assert_eq!(bytes.len(), 5);
        assert!(entropy_decode(&bytes, 0, 8).unwrap().is_empty());
    }

    #[test]
    fn random_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for bits in [1, 3, 8, 14, 16, 32] {
            let syms: Vec<u32> = (0..3000)
                .map(|_| if bits == 32 { rng.random() } else { rng.random_range(0..1u32 << bits) })
                .collect();
            let bytes = entropy_encode(&syms, bits).unwrap();
            assert_eq!(entropy_decode(&bytes, syms.len(), bits).unwrap(), syms);
        }
    }

    #[test]
    fn carry_heavy_stream_roundtrips() {
        // long runs of ones drive low toward its upper end
        let mut syms = vec![0xFFu32; 5000];
        syms.extend(std::iter::repeat_n(0u32, 50));
        syms.extend(std::iter::repeat_n(0xFEu32, 5000));
        let bytes = entropy_encode(&syms, 8).unwrap();
        assert_eq!(entropy_decode(&bytes, syms.len(), 8).unwrap(), syms);
    }

    #[test]
    fn overflow_and_truncation() {
        assert!(entropy_encode(&[16], 4).is_err());
        let syms: Vec<u32> = (0..500).map(|i| (i * 7919) % 256).collect();
        let bytes = entropy_encode(&syms, 8).unwrap();
        let err = entropy_decode(&bytes[..bytes.len() / 2], syms.len(), 8).unwrap_err();
        assert!(matches!(err, Error::Truncated { .. }));
        assert!(entropy_decode(&[0, 0], 0, 8).is_err());
    }
}
