//! Pluggable post-quantum crypto provider.
//!
//! Two signature schemes and two KEMs sit behind one uniform surface:
//!
//! - `mock-sig` / `mock-kem`: deterministic hash constructions used by tests
//!   and the simulator. They are *not* secure: anyone holding a public key
//!   can produce a valid mock signature. They exist so that every run is a
//!   pure function of its seed and so that forged (random) signatures are
//!   rejected.
//! - `dilithium3` / `kyber768`: ML-DSA-65 and ML-KEM-768, available with the
//!   `pqc` cargo feature.
//!
//! All functions are pure; nothing here holds state. The byte layouts of mock
//! keys, signatures and ciphertexts are documented in `docs/FORMATS.md`.

mod mock;
#[cfg(feature = "pqc")]
mod lattice;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::types::{Digest, NodeId};

/// Name of the hash primitive. Echoed into run manifests.
pub const HASH_PRIMITIVE: &str = "sha-256";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("unsupported scheme `{0}`")]
    UnsupportedScheme(String),
    #[error("scheme mismatch: expected {expected}, got {actual}")]
    SchemeMismatch { expected: SchemeId, actual: SchemeId },
    #[error("malformed {what} key for {scheme}: {len} bytes")]
    MalformedKey { what: &'static str, scheme: SchemeId, len: usize },
    #[error("decapsulation failure")]
    DecapsulationFailure,
    #[error("malformed ciphertext: {0} bytes")]
    MalformedCiphertext(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeId {
    #[serde(rename = "mock-sig")]
    MockSig,
    #[serde(rename = "dilithium3")]
    Dilithium3,
    #[serde(rename = "mock-kem")]
    MockKem,
    #[serde(rename = "kyber768")]
    Kyber768,
}

impl SchemeId {
    pub fn name(self) -> &'static str {
        match self {
            SchemeId::MockSig => "mock-sig",
            SchemeId::Dilithium3 => "dilithium3",
            SchemeId::MockKem => "mock-kem",
            SchemeId::Kyber768 => "kyber768",
        }
    }

    /// Wire tag used in ledger dumps.
    pub fn tag(self) -> u8 {
        match self {
            SchemeId::MockSig => 1,
            SchemeId::Dilithium3 => 2,
            SchemeId::MockKem => 3,
            SchemeId::Kyber768 => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<SchemeId> {
        Some(match tag {
            1 => SchemeId::MockSig,
            2 => SchemeId::Dilithium3,
            3 => SchemeId::MockKem,
            4 => SchemeId::Kyber768,
            _ => return None,
        })
    }

    pub fn is_signature(self) -> bool {
        matches!(self, SchemeId::MockSig | SchemeId::Dilithium3)
    }

    /// Whether this build can execute the scheme.
    pub fn is_available(self) -> bool {
        match self {
            SchemeId::MockSig | SchemeId::MockKem => true,
            SchemeId::Dilithium3 | SchemeId::Kyber768 => cfg!(feature = "pqc"),
        }
    }

    /// Declared sizes of (public key, private key, signature or ciphertext).
    pub fn sizes(self) -> (usize, usize, usize) {
        match self {
            SchemeId::MockSig => (mock::KEY_LEN, mock::KEY_LEN, mock::SIGNATURE_LEN),
            SchemeId::MockKem => (mock::KEY_LEN, mock::KEY_LEN, mock::CIPHERTEXT_LEN),
            // ML-DSA-65: pk 1952, seed 32, signature 3309.
            SchemeId::Dilithium3 => (1952, 32, 3309),
            // ML-KEM-768: ek 1184, seed 64, ciphertext 1088.
            SchemeId::Kyber768 => (1184, 64, 1088),
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = CryptoError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "mock-sig" => SchemeId::MockSig,
            "dilithium3" => SchemeId::Dilithium3,
            "mock-kem" => SchemeId::MockKem,
            "kyber768" => SchemeId::Kyber768,
            other => return Err(CryptoError::UnsupportedScheme(other.to_string())),
        })
    }
}

/// Signature/KEM pairing selected by the `crypto.scheme` config key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    #[default]
    Mock,
    /// Dilithium-3 signatures with Kyber-768 key encapsulation.
    Pqc,
}

impl Suite {
    pub fn signature(self) -> SchemeId {
        match self {
            Suite::Mock => SchemeId::MockSig,
            Suite::Pqc => SchemeId::Dilithium3,
        }
    }

    pub fn kem(self) -> SchemeId {
        match self {
            Suite::Mock => SchemeId::MockKem,
            Suite::Pqc => SchemeId::Kyber768,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PublicKey {
    pub bytes: Vec<u8>,
    pub scheme: SchemeId,
}

#[derive(Clone, PartialEq, Eq)]
pub struct PrivateKey {
    pub bytes: Vec<u8>,
    pub scheme: SchemeId,
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({}, {} bytes)", self.scheme, self.bytes.len())
    }
}

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrivateKey({}, <redacted>)", self.scheme)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub public: PublicKey,
    pub private: PrivateKey,
}

impl KeyPair {
    pub fn scheme(&self) -> SchemeId {
        self.public.scheme
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    pub bytes: Vec<u8>,
    pub scheme: SchemeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub bytes: Vec<u8>,
    pub scheme: SchemeId,
}

/// 32-byte shared secret produced by encapsulation.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct SharedSecret(pub [u8; 32]);

impl fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SharedSecret(<redacted>)")
    }
}

/// Session key between a UAV and an edge node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionKey {
    pub secret: SharedSecret,
    pub peers: (NodeId, NodeId),
}

impl SessionKey {
    /// Peer ids are stored in ascending order.
    pub fn new(secret: SharedSecret, a: NodeId, b: NodeId) -> Self {
        let peers = if a <= b { (a, b) } else { (b, a) };
        SessionKey { secret, peers }
    }
}

pub fn hash(bytes: &[u8]) -> Digest {
    Digest(Sha256::digest(bytes).into())
}

/// Hash of several byte strings concatenated, without an intermediate buffer.
pub fn hash_parts(parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    Digest(h.finalize().into())
}

pub fn keygen(seed: u64, scheme: SchemeId) -> Result<KeyPair, CryptoError> {
    match scheme {
        SchemeId::MockSig | SchemeId::MockKem => Ok(mock::keygen(seed, scheme)),
        #[cfg(feature = "pqc")]
        SchemeId::Dilithium3 => Ok(lattice::sig_keygen(seed)),
        #[cfg(feature = "pqc")]
        SchemeId::Kyber768 => Ok(lattice::kem_keygen(seed)),
        #[cfg(not(feature = "pqc"))]
        SchemeId::Dilithium3 | SchemeId::Kyber768 => {
            Err(CryptoError::UnsupportedScheme(format!("{scheme} (build with --features pqc)")))
        }
    }
}

pub fn sign(private_key: &PrivateKey, message_hash: &Digest) -> Result<Signature, CryptoError> {
    match private_key.scheme {
        SchemeId::MockSig => mock::sign(private_key, message_hash),
        #[cfg(feature = "pqc")]
        SchemeId::Dilithium3 => lattice::sign(private_key, message_hash),
        other if other.is_signature() => Err(CryptoError::UnsupportedScheme(other.to_string())),
        other => Err(CryptoError::SchemeMismatch { expected: SchemeId::MockSig, actual: other }),
    }
}

/// Total: malformed inputs or mismatched schemes yield `false`.
pub fn verify(message_hash: &Digest, signature: &Signature, public_key: &PublicKey) -> bool {
    if signature.scheme != public_key.scheme {
        return false;
    }
    match public_key.scheme {
        SchemeId::MockSig => mock::verify(message_hash, signature, public_key),
        #[cfg(feature = "pqc")]
        SchemeId::Dilithium3 => lattice::verify(message_hash, signature, public_key),
        _ => false,
    }
}

pub fn encaps(public_key: &PublicKey, randomness_seed: u64) -> Result<(Ciphertext, SharedSecret), CryptoError> {
    match public_key.scheme {
        SchemeId::MockKem => mock::encaps(public_key, randomness_seed),
        #[cfg(feature = "pqc")]
        SchemeId::Kyber768 => lattice::encaps(public_key, randomness_seed),
        other => Err(CryptoError::SchemeMismatch { expected: SchemeId::MockKem, actual: other }),
    }
}

/// Mock KEM reports corrupted ciphertexts as [`CryptoError::DecapsulationFailure`];
/// the ML-KEM backend uses implicit rejection and returns an unrelated secret.
pub fn decaps(private_key: &PrivateKey, ciphertext: &Ciphertext) -> Result<SharedSecret, CryptoError> {
    if private_key.scheme != ciphertext.scheme {
        return Err(CryptoError::SchemeMismatch { expected: private_key.scheme, actual: ciphertext.scheme });
    }
    match private_key.scheme {
        SchemeId::MockKem => mock::decaps(private_key, ciphertext),
        #[cfg(feature = "pqc")]
        SchemeId::Kyber768 => lattice::decaps(private_key, ciphertext),
        other => Err(CryptoError::SchemeMismatch { expected: SchemeId::MockKem, actual: other }),
    }
}

/// Abstract per-primitive cost charged by the energy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpCost {
    pub joules: f64,
    pub millis: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digest(b: u8) -> Digest {
        Digest([b; 32])
    }

    #[test]
    fn sha256_empty_vector() {
        // FIPS 180-2 reference digest of the empty string.
        assert_eq!(
            hash(b"").to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            hash(b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn hash_parts_matches_concatenation() {
        assert_eq!(hash_parts(&[b"ab", b"", b"c"]), hash(b"abc"));
        assert_ne!(hash(b"abc"), hash(b"abd"));
    }

    #[test]
    fn keygen_is_deterministic_and_seed_sensitive() {
        let a = keygen(7, SchemeId::MockSig).unwrap();
        let b = keygen(7, SchemeId::MockSig).unwrap();
        let c = keygen(8, SchemeId::MockSig).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.public, c.public);
    }

    #[test]
    fn sign_verify_bindings() {
        let a = keygen(1, SchemeId::MockSig).unwrap();
        let b = keygen(2, SchemeId::MockSig).unwrap();
        let m = digest(9);
        let sig = sign(&a.private, &m).unwrap();
        assert_eq!(sig.bytes.len(), 64);
        assert!(verify(&m, &sig, &a.public));
        assert!(!verify(&m, &sig, &b.public));
        let mut flipped = m;
        flipped.0[0] ^= 1;
        assert!(!verify(&flipped, &sig, &a.public));
    }

    #[test]
    fn verify_is_total() {
        let a = keygen(1, SchemeId::MockSig).unwrap();
        let m = digest(1);
        let short = Signature { bytes: vec![1, 2, 3], scheme: SchemeId::MockSig };
        assert!(!verify(&m, &short, &a.public));
        let bad_pk = PublicKey { bytes: vec![], scheme: SchemeId::MockSig };
        let sig = sign(&a.private, &m).unwrap();
        assert!(!verify(&m, &sig, &bad_pk));
        let kem_pk = PublicKey { bytes: a.public.bytes.clone(), scheme: SchemeId::MockKem };
        assert!(!verify(&m, &sig, &kem_pk));
    }

    #[test]
    fn sign_rejects_malformed_key() {
        let sk = PrivateKey { bytes: vec![0; 5], scheme: SchemeId::MockSig };
        assert!(matches!(sign(&sk, &digest(0)), Err(CryptoError::MalformedKey { .. })));
        let kem = keygen(3, SchemeId::MockKem).unwrap();
        assert!(matches!(sign(&kem.private, &digest(0)), Err(CryptoError::SchemeMismatch { .. })));
    }

    #[test]
    fn kem_round_trip_and_corruption() {
        let kp = keygen(11, SchemeId::MockKem).unwrap();
        let (ct, ss) = encaps(&kp.public, 5).unwrap();
        assert_eq!(decaps(&kp.private, &ct).unwrap(), ss);

        let (ct2, _) = encaps(&kp.public, 6).unwrap();
        assert_ne!(ct.bytes, ct2.bytes);

        let mut bad = ct.clone();
        bad.bytes[3] ^= 0x80;
        assert_eq!(decaps(&kp.private, &bad), Err(CryptoError::DecapsulationFailure));

        let other = keygen(12, SchemeId::MockKem).unwrap();
        assert_eq!(decaps(&other.private, &ct), Err(CryptoError::DecapsulationFailure));
    }

    #[test]
    fn kem_scheme_mismatch() {
        let sig = keygen(1, SchemeId::MockSig).unwrap();
        assert!(matches!(encaps(&sig.public, 0), Err(CryptoError::SchemeMismatch { .. })));
        let kem = keygen(1, SchemeId::MockKem).unwrap();
        let (ct, _) = encaps(&kem.public, 0).unwrap();
        assert!(matches!(decaps(&sig.private, &ct), Err(CryptoError::SchemeMismatch { .. })));
    }

    #[cfg(not(feature = "pqc"))]
    #[test]
    fn lattice_schemes_need_feature() {
        assert!(matches!(keygen(1, SchemeId::Dilithium3), Err(CryptoError::UnsupportedScheme(_))));
        assert!(!SchemeId::Kyber768.is_available());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [SchemeId::MockSig, SchemeId::Dilithium3, SchemeId::MockKem, SchemeId::Kyber768] {
            assert_eq!(s.name().parse::<SchemeId>().unwrap(), s);
            assert_eq!(SchemeId::from_tag(s.tag()), Some(s));
        }
        assert!("rsa".parse::<SchemeId>().is_err());
    }
}
