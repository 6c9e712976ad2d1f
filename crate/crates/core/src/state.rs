//! Canonical binary encoding of discrete states.

use std::fmt;

/// Canonical, fixed-length binary encoding of one discrete state.
///
/// A state is a fixed-length bit vector (spin configuration, selection
/// indicator, or row-major DAG adjacency). Bits are packed little-endian
/// within each byte and padding bits are always zero, so two states are
/// equal iff their encodings are byte-identical.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(Box<[u8]>);

impl StateKey {
    /// Packs a bit vector into its canonical encoding.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut bytes = vec![0u8; bits.len().div_ceil(8)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        StateKey(bytes.into_boxed_slice())
    }

    /// Unpacks the first `len` bits.
    pub fn to_bits(&self, len: usize) -> Vec<bool> {
        (0..len).map(|i| self.bit(i)).collect()
    }

    pub fn bit(&self, i: usize) -> bool {
        (self.0[i / 8] >> (i % 8)) & 1 == 1
    }

    /// Returns a copy with bit `i` flipped.
    pub fn flip_bit(&self, i: usize) -> StateKey {
        let mut bytes = self.0.to_vec();
        bytes[i / 8] ^= 1 << (i % 8);
        StateKey(bytes.into_boxed_slice())
    }

    pub fn byte_len(&self) -> usize {
        self.0.len()
    }

    /// Number of bytes needed for a `bits`-bit state.
    pub fn bytes_for(bits: usize) -> usize {
        bits.div_ceil(8)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateKey(")?;
        for b in self.0.iter() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let bits = [true, false, false, true, true, false, true, true, true, false];
        let key = StateKey::from_bits(&bits);
        assert_eq!(key.to_bits(bits.len()), bits);
        assert_eq!(key.byte_len(), 2);
    }

    #[test]
    fn equality_is_byte_identity() {
        let a = StateKey::from_bits(&[true, false, true]);
        let b = StateKey::from_bits(&[true, false, true]);
        let c = StateKey::from_bits(&[true, true, true]);
        assert_eq!(a, b);
        assert_eq!(a.as_bytes(), b.as_bytes());
        assert_ne!(a, c);
    }

    #[test]
    fn flip_bit_differs_in_one_position() {
        let a = StateKey::from_bits(&[false; 9]);
        let b = a.flip_bit(8);
        assert!(b.bit(8));
        let diff: usize = (0..9).filter(|&i| a.bit(i) != b.bit(i)).count();
        assert_eq!(diff, 1);
        assert_eq!(b.flip_bit(8), a);
    }
}
