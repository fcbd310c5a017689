//! Keyed-hash VRF used by the simulator.
//!
//! `y = H(sk ‖ x)`, `pk = H(sk)`, and the proof is a MAC over `(x, y)` under
//! `sk`. Verification needs the secret, so it is performed by a
//! [`VrfOracle`] that holds the `pk → sk` registry. The oracle belongs to
//! the simulation environment; agents only ever see public keys and outputs.

use std::collections::HashMap;
use std::fmt;

use rand::RngCore;

use crate::hash::{digest, digest_parts, Hash256, HASH_LEN};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SecretKey([u8; HASH_LEN]);

impl SecretKey {
    pub fn from_bytes(bytes: [u8; HASH_LEN]) -> Self {
        SecretKey(bytes)
    }

    /// Lowercase hex, for key files. Never part of any public state.
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, hex::FromHexError> {
        let mut out = [0u8; HASH_LEN];
        hex::decode_to_slice(s, &mut out)?;
        Ok(SecretKey(out))
    }

    pub fn public(&self) -> PublicKey {
        PublicKey(digest(&self.0))
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PublicKey(pub Hash256);

impl PublicKey {
    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }
}

#[derive(Clone, Debug)]
pub struct VrfKeypair {
    sk: SecretKey,
    pk: PublicKey,
}

impl VrfKeypair {
    /// `Gen`: draws a fresh secret from `rng` and derives the public key.
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut sk = [0u8; HASH_LEN];
        rng.fill_bytes(&mut sk);
        Self::from_secret(SecretKey(sk))
    }

    pub fn from_secret(sk: SecretKey) -> Self {
        let pk = sk.public();
        VrfKeypair { sk, pk }
    }

    pub fn public(&self) -> PublicKey {
        self.pk
    }

    pub fn secret(&self) -> &SecretKey {
        &self.sk
    }

    pub fn prove(&self, x: &Hash256) -> VrfOutput {
        vrf_prove(&self.sk, x)
    }
}

/// `(y, proof)` as produced by `Prove_sk(x)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct VrfOutput {
    pub y: Hash256,
    pub proof: Hash256,
}

pub fn vrf_prove(sk: &SecretKey, x: &Hash256) -> VrfOutput {
    let y = digest_parts(&[&sk.0, x.as_bytes()]);
    let proof = digest_parts(&[b"vrf-proof", &sk.0, x.as_bytes(), y.as_bytes()]);
    VrfOutput { y, proof }
}

/// Interface that a production VRF would also implement.
pub trait VrfVerifier {
    fn verify(&self, pk: &PublicKey, x: &Hash256, out: &VrfOutput) -> bool;
}

/// Verification oracle for the keyed-hash VRF.
#[derive(Clone, Default)]
pub struct VrfOracle {
    registry: HashMap<PublicKey, SecretKey>,
}

impl VrfOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, kp: &VrfKeypair) {
        self.registry.insert(kp.pk, kp.sk.clone());
    }

    pub fn len(&self) -> usize {
        self.registry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registry.is_empty()
    }
}

impl fmt::Debug for VrfOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VrfOracle({} keys)", self.registry.len())
    }
}

impl VrfVerifier for VrfOracle {
    fn verify(&self, pk: &PublicKey, x: &Hash256, out: &VrfOutput) -> bool {
        match self.registry.get(pk) {
            Some(sk) => sk.public() == *pk && vrf_prove(sk, x) == *out,
            None => false,
        }
    }
}
