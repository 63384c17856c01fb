use std::io::{Read, Write};
use std::str::FromStr;

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use super::LedgerError;

/// Lossless block codec. Identified by name in configs, dumps and metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Codec {
    /// Raw DEFLATE (RFC 1951) at the fastest level.
    #[default]
    Deflate,
    /// Stores bytes unchanged.
    Identity,
}

impl Codec {
    pub fn name(self) -> &'static str {
        match self {
            Codec::Deflate => "deflate",
            Codec::Identity => "identity",
        }
    }

    pub fn compress(self, data: &[u8]) -> Result<Vec<u8>, LedgerError> {
        match self {
            Codec::Identity => Ok(data.to_vec()),
            Codec::Deflate => {
                let mut enc = DeflateEncoder::new(Vec::with_capacity(data.len() / 2), Compression::fast());
                enc.write_all(data).map_err(|e| LedgerError::Codec(e.to_string()))?;
                enc.finish().map_err(|e| LedgerError::Codec(e.to_string()))
            }
        }
    }

    pub fn decompress(self, data: &[u8]) -> Result<Vec<u8>, LedgerError> {
        match self {
            Codec::Identity => Ok(data.to_vec()),
            Codec::Deflate => {
                let mut out = Vec::with_capacity(data.len() * 2);
                DeflateDecoder::new(data)
                    .read_to_end(&mut out)
                    .map_err(|e| LedgerError::Codec(e.to_string()))?;
                Ok(out)
            }
        }
    }
}

impl FromStr for Codec {
    type Err = LedgerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deflate" => Ok(Codec::Deflate),
            "identity" => Ok(Codec::Identity),
            other => Err(LedgerError::Codec(format!("unknown codec `{other}`"))),
        }
    }
}

/// Result of compressing a block's canonical encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionOutcome {
    pub raw_size: u64,
    pub compressed_size: u64,
    pub ratio: f64,
    /// The codec failed or expanded the data; the block is carried raw.
    pub fallback: bool,
}

/// ω_c = (raw − compressed) / raw.
pub fn compression_ratio(raw_size: u64, compressed_size: u64) -> Result<f64, LedgerError> {
    if raw_size == 0 {
        return Err(LedgerError::ZeroRawSize);
    }
    if compressed_size == 0 || compressed_size > raw_size {
        return Err(LedgerError::CompressedExceedsRaw { raw: raw_size, compressed: compressed_size });
    }
    Ok((raw_size - compressed_size) as f64 / raw_size as f64)
}

/// Compress `raw`, falling back to the raw size when the codec errors or
/// does not shrink the input.
pub fn compress_bytes(raw: &[u8], codec: Codec) -> CompressionOutcome {
    let raw_size = raw.len() as u64;
    let (compressed_size, fallback) = match codec.compress(raw) {
        Ok(c) if (c.len() as u64) < raw_size && !c.is_empty() => (c.len() as u64, false),
        Ok(_) => (raw_size, codec != Codec::Identity),
        Err(_) => (raw_size, true),
    };
    let ratio = if raw_size == 0 { 0.0 } else { (raw_size - compressed_size) as f64 / raw_size as f64 };
    CompressionOutcome { raw_size, compressed_size, ratio, fallback }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ratio_examples() {
        assert_eq!(compression_ratio(1000, 1000).unwrap(), 0.0);
        assert_eq!(compression_ratio(1000, 600).unwrap(), 0.4);
        // 2048 * 0.55 = 1126.4; the integer size 1126.4 is not representable,
        // so use the exact pair 2000 / 1100.
        assert_eq!(compression_ratio(2000, 1100).unwrap(), 0.45);
        assert!((compression_ratio(2048, 1126).unwrap() - 922.0 / 2048.0).abs() < 1e-15);
    }

    #[test]
    fn ratio_errors() {
        assert_eq!(compression_ratio(0, 0), Err(LedgerError::ZeroRawSize));
        assert!(matches!(compression_ratio(10, 11), Err(LedgerError::CompressedExceedsRaw { .. })));
        assert!(matches!(compression_ratio(10, 0), Err(LedgerError::CompressedExceedsRaw { .. })));
    }

    #[test]
    fn random_bytes_do_not_compress() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut data = vec![0u8; 64 * 1024];
        rng.fill_bytes(&mut data);
        let out = compress_bytes(&data, Codec::Deflate);
        assert!(out.ratio < 0.01, "ratio {}", out.ratio);
    }

    #[test]
    fn zeros_compress_heavily() {
        let out = compress_bytes(&vec![0u8; 64 * 1024], Codec::Deflate);
        // Pinned from one run of the fast DEFLATE level: 64 KiB of zeros -> 0.99+.
        assert!(out.ratio > 0.9 && !out.fallback, "ratio {}", out.ratio);
    }

    #[test]
    fn identity_is_ratio_zero() {
        let out = compress_bytes(b"aaaaaaaaaaaaaaaa", Codec::Identity);
        assert_eq!(out.ratio, 0.0);
        assert!(!out.fallback);
    }

    #[test]
    fn deflate_round_trip() {
        let data = b"ndvi=0.71,ndvi=0.72,ndvi=0.73".repeat(20);
        let c = Codec::Deflate.compress(&data).unwrap();
        assert_eq!(Codec::Deflate.decompress(&c).unwrap(), data);
    }
}
