use super::{Ciphertext, CryptoError, KeyPair, PrivateKey, PublicKey, SchemeId, SharedSecret, Signature};
use crate::crypto::hash_parts;
use crate::types::Digest;

pub(super) const KEY_LEN: usize = 32;
pub(super) const SIGNATURE_LEN: usize = 64;
pub(super) const CIPHERTEXT_LEN: usize = 64;

fn derive_public(private: &[u8], scheme: SchemeId) -> Vec<u8> {
    let label: &[u8] = match scheme {
        SchemeId::MockKem => b"uavchain/mock-kem-pk",
        _ => b"uavchain/mock-pk",
    };
    hash_parts(&[label, private]).0.to_vec()
}

pub(super) fn keygen(seed: u64, scheme: SchemeId) -> KeyPair {
    let label: &[u8] = match scheme {
        SchemeId::MockKem => b"uavchain/mock-kem-sk",
        _ => b"uavchain/mock-sk",
    };
    let private = hash_parts(&[label, &seed.to_le_bytes()]).0.to_vec();
    let public = derive_public(&private, scheme);
    KeyPair {
        public: PublicKey { bytes: public, scheme },
        private: PrivateKey { bytes: private, scheme },
    }
}

fn tag(public: &[u8], msg: &Digest) -> [u8; SIGNATURE_LEN] {
    let a = hash_parts(&[b"uavchain/mock-sig/0", public, &msg.0]);
    let b = hash_parts(&[b"uavchain/mock-sig/1", public, &msg.0]);
    let mut out = [0u8; SIGNATURE_LEN];
    out[..32].copy_from_slice(&a.0);
    out[32..].copy_from_slice(&b.0);
    out
}

pub(super) fn sign(sk: &PrivateKey, msg: &Digest) -> Result<Signature, CryptoError> {
    if sk.bytes.len() != KEY_LEN {
        return Err(CryptoError::MalformedKey { what: "private", scheme: sk.scheme, len: sk.bytes.len() });
    }
    let pk = derive_public(&sk.bytes, SchemeId::MockSig);
    Ok(Signature { bytes: tag(&pk, msg).to_vec(), scheme: SchemeId::MockSig })
}

pub(super) fn verify(msg: &Digest, sig: &Signature, pk: &PublicKey) -> bool {
    pk.bytes.len() == KEY_LEN && sig.bytes.len() == SIGNATURE_LEN && sig.bytes[..] == tag(&pk.bytes, msg)[..]
}

fn ciphertext_tag(pk: &[u8], eph: &[u8]) -> Digest {
    hash_parts(&[b"uavchain/mock-kem-tag", pk, eph])
}

fn shared(pk: &[u8], eph: &[u8]) -> SharedSecret {
    SharedSecret(hash_parts(&[b"uavchain/mock-kem-ss", pk, eph]).0)
}

pub(super) fn encaps(pk: &PublicKey, seed: u64) -> Result<(Ciphertext, SharedSecret), CryptoError> {
    if pk.bytes.len() != KEY_LEN {
        return Err(CryptoError::MalformedKey { what: "public", scheme: pk.scheme, len: pk.bytes.len() });
    }
    let eph = hash_parts(&[b"uavchain/mock-kem-eph", &seed.to_le_bytes(), &pk.bytes]);
    let mut ct = Vec::with_capacity(CIPHERTEXT_LEN);
    ct.extend_from_slice(&eph.0);
    ct.extend_from_slice(&ciphertext_tag(&pk.bytes, &eph.0).0);
    Ok((Ciphertext { bytes: ct, scheme: SchemeId::MockKem }, shared(&pk.bytes, &eph.0)))
}

pub(super) fn decaps(sk: &PrivateKey, ct: &Ciphertext) -> Result<SharedSecret, CryptoError> {
    if sk.bytes.len() != KEY_LEN {
        return Err(CryptoError::MalformedKey { what: "private", scheme: sk.scheme, len: sk.bytes.len() });
    }
    if ct.bytes.len() != CIPHERTEXT_LEN {
        return Err(CryptoError::MalformedCiphertext(ct.bytes.len()));
    }
    let pk = derive_public(&sk.bytes, SchemeId::MockKem);
    let (eph, tag) = ct.bytes.split_at(32);
    if ciphertext_tag(&pk, eph).0[..] != tag[..] {
        return Err(CryptoError::DecapsulationFailure);
    }
    Ok(shared(&pk, eph))
}
