//! ML-DSA-65 / ML-KEM-768 backend.

use ml_dsa::{EncodedVerifyingKey, ExpandedSigningKey, MlDsa65, VerifyingKey};
use ml_kem::{Decapsulate, DecapsulationKey, EncapsulationKey, KeyExport, MlKem768};

use super::{Ciphertext, CryptoError, KeyPair, PrivateKey, PublicKey, SchemeId, SharedSecret, Signature};
use crate::crypto::hash_parts;
use crate::types::Digest;

type MlKemSeed = ml_kem::Seed;
type KemCiphertext = ml_kem::Ciphertext<MlKem768>;
type KemKey = ml_kem::Key<EncapsulationKey<MlKem768>>;

fn sig_seed(seed: u64) -> [u8; 32] {
    hash_parts(&[b"uavchain/ml-dsa-seed", &seed.to_le_bytes()]).0
}

pub(super) fn sig_keygen(seed: u64) -> KeyPair {
    let xi = sig_seed(seed);
    let sk = ExpandedSigningKey::<MlDsa65>::from_seed(&xi.into());
    let pk = sk.verifying_key().encode();
    KeyPair {
        public: PublicKey { bytes: pk.to_vec(), scheme: SchemeId::Dilithium3 },
        private: PrivateKey { bytes: xi.to_vec(), scheme: SchemeId::Dilithium3 },
    }
}

fn signing_key(sk: &PrivateKey) -> Result<ExpandedSigningKey<MlDsa65>, CryptoError> {
    let xi: [u8; 32] = sk.bytes.as_slice().try_into().map_err(|_| CryptoError::MalformedKey {
        what: "private",
        scheme: sk.scheme,
        len: sk.bytes.len(),
    })?;
    Ok(ExpandedSigningKey::<MlDsa65>::from_seed(&xi.into()))
}

pub(super) fn sign(sk: &PrivateKey, msg: &Digest) -> Result<Signature, CryptoError> {
    let key = signing_key(sk)?;
    let sig = key
        .sign_deterministic(&msg.0, b"")
        .map_err(|_| CryptoError::MalformedKey { what: "private", scheme: sk.scheme, len: sk.bytes.len() })?;
    Ok(Signature { bytes: sig.encode().to_vec(), scheme: SchemeId::Dilithium3 })
}

pub(super) fn verify(msg: &Digest, sig: &Signature, pk: &PublicKey) -> bool {
    let Ok(enc) = EncodedVerifyingKey::<MlDsa65>::try_from(pk.bytes.as_slice()) else {
        return false;
    };
    let vk = VerifyingKey::<MlDsa65>::decode(&enc);
    let Ok(sig) = ml_dsa::Signature::<MlDsa65>::try_from(sig.bytes.as_slice()) else {
        return false;
    };
    vk.verify_with_context(&msg.0, b"", &sig)
}

fn kem_seed(seed: u64) -> [u8; 64] {
    let mut out = [0u8; 64];
    out[..32].copy_from_slice(&hash_parts(&[b"uavchain/ml-kem-seed/0", &seed.to_le_bytes()]).0);
    out[32..].copy_from_slice(&hash_parts(&[b"uavchain/ml-kem-seed/1", &seed.to_le_bytes()]).0);
    out
}

fn decapsulation_key(sk: &PrivateKey) -> Result<DecapsulationKey<MlKem768>, CryptoError> {
    let seed: [u8; 64] = sk.bytes.as_slice().try_into().map_err(|_| CryptoError::MalformedKey {
        what: "private",
        scheme: sk.scheme,
        len: sk.bytes.len(),
    })?;
    Ok(DecapsulationKey::<MlKem768>::from_seed(MlKemSeed::from(seed)))
}

pub(super) fn kem_keygen(seed: u64) -> KeyPair {
    let s = kem_seed(seed);
    let dk = DecapsulationKey::<MlKem768>::from_seed(MlKemSeed::from(s));
    let ek = dk.encapsulation_key().to_bytes();
    KeyPair {
        public: PublicKey { bytes: ek.to_vec(), scheme: SchemeId::Kyber768 },
        private: PrivateKey { bytes: s.to_vec(), scheme: SchemeId::Kyber768 },
    }
}

pub(super) fn encaps(pk: &PublicKey, seed: u64) -> Result<(Ciphertext, SharedSecret), CryptoError> {
    let malformed = || CryptoError::MalformedKey { what: "public", scheme: pk.scheme, len: pk.bytes.len() };
    let key = KemKey::try_from(pk.bytes.as_slice()).map_err(|_| malformed())?;
    let ek = EncapsulationKey::<MlKem768>::new(&key).map_err(|_| malformed())?;
    let m = hash_parts(&[b"uavchain/ml-kem-m", &seed.to_le_bytes()]).0;
    let (ct, k) = ek.encapsulate_deterministic(&m.into());
    let mut secret = [0u8; 32];
    secret.copy_from_slice(&k);
    Ok((Ciphertext { bytes: ct.to_vec(), scheme: SchemeId::Kyber768 }, SharedSecret(secret)))
}

/// Implicit rejection: a corrupted ciphertext decapsulates to an unrelated secret.
pub(super) fn decaps(sk: &PrivateKey, ct: &Ciphertext) -> Result<SharedSecret, CryptoError> {
    let dk = decapsulation_key(sk)?;
    let c = KemCiphertext::try_from(ct.bytes.as_slice()).map_err(|_| CryptoError::MalformedCiphertext(ct.bytes.len()))?;
    let k = dk.decapsulate(&c);
    let mut secret = [0u8; 32];
    secret.copy_from_slice(&k);
    Ok(SharedSecret(secret))
}

#[cfg(test)]
mod tests {
    use crate::crypto::{decaps, encaps, keygen, sign, verify, SchemeId};
    use crate::types::Digest;

    #[test]
    fn dilithium3_sizes_and_round_trip() {
        let (pk_len, sk_len, sig_len) = SchemeId::Dilithium3.sizes();
        let kp = keygen(1, SchemeId::Dilithium3).unwrap();
        assert_eq!(kp.public.bytes.len(), pk_len);
        assert_eq!(kp.private.bytes.len(), sk_len);
        assert_eq!(keygen(1, SchemeId::Dilithium3).unwrap(), kp);
        let m = Digest([3; 32]);
        let sig = sign(&kp.private, &m).unwrap();
        assert_eq!(sig.bytes.len(), sig_len);
        assert!(verify(&m, &sig, &kp.public));
        let mut m2 = m;
        m2.0[31] ^= 1;
        assert!(!verify(&m2, &sig, &kp.public));
        let other = keygen(2, SchemeId::Dilithium3).unwrap();
        assert!(!verify(&m, &sig, &other.public));
    }

    #[test]
    fn kyber768_round_trip_and_implicit_rejection() {
        let (pk_len, _, ct_len) = SchemeId::Kyber768.sizes();
        let kp = keygen(4, SchemeId::Kyber768).unwrap();
        assert_eq!(kp.public.bytes.len(), pk_len);
        let (ct, ss) = encaps(&kp.public, 9).unwrap();
        assert_eq!(ct.bytes.len(), ct_len);
        assert_eq!(decaps(&kp.private, &ct).unwrap(), ss);
        let mut bad = ct.clone();
        bad.bytes[0] ^= 1;
        assert_ne!(decaps(&kp.private, &bad).unwrap(), ss);
    }
}
