//! The single 256-bit digest used for eligibility hashing, key derivation,
//! block identifiers and the proof-of-delay function.

use std::fmt;

use sha2::{Digest, Sha256};

/// Width of every beacon value, VRF output and digest, in bytes.
pub const HASH_LEN: usize = 32;

/// A 256-bit value, compared as a big-endian unsigned integer.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Hash256(pub [u8; HASH_LEN]);

impl Hash256 {
    pub const ZERO: Hash256 = Hash256([0u8; HASH_LEN]);
    pub const MAX: Hash256 = Hash256([0xffu8; HASH_LEN]);

    pub fn as_bytes(&self) -> &[u8; HASH_LEN] {
        &self.0
    }

    pub fn xor(&self, other: &Hash256) -> Hash256 {
        let mut out = [0u8; HASH_LEN];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(other.0.iter())) {
            *o = a ^ b;
        }
        Hash256(out)
    }

    /// Leading 64 bits as an integer; handy for bucketing in statistics.
    pub fn prefix_u64(&self) -> u64 {
        u64::from_be_bytes(self.0[..8].try_into().expect("8 bytes"))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, hex::FromHexError> {
        let mut out = [0u8; HASH_LEN];
        hex::decode_to_slice(s, &mut out)?;
        Ok(Hash256(out))
    }

    /// Short form used in logs and DOT labels.
    pub fn short(&self) -> String {
        hex::encode(&self.0[..4])
    }
}

impl fmt::Debug for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash256({})", self.short())
    }
}

impl fmt::Display for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl From<[u8; HASH_LEN]> for Hash256 {
    fn from(b: [u8; HASH_LEN]) -> Self {
        Hash256(b)
    }
}

/// H(x).
pub fn digest(data: &[u8]) -> Hash256 {
    Hash256(Sha256::digest(data).into())
}

/// H(a ‖ b ‖ ...), without intermediate allocation.
pub fn digest_parts(parts: &[&[u8]]) -> Hash256 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    Hash256(h.finalize().into())
}
