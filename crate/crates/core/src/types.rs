use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of any network participant.
///
/// UAVs occupy `0..uav_count`, edge nodes the next `edge_count` ids and the
/// base station the last id. Ordering by id is the deterministic tie-breaker
/// used throughout the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Simulation time in whole microseconds.
///
/// Ledger records carry this fixed-point form so that canonical encodings do
/// not depend on floating-point formatting. May be negative for back-dated
/// submissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub fn from_secs(secs: f64) -> Self {
        Timestamp((secs * 1e6).round() as i64)
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn micros(self) -> i64 {
        self.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}s", self.as_secs())
    }
}

/// A 32-byte hash output.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const LEN: usize = 32;

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(64);
        for b in self.0 {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    /// Short prefix for log lines and error messages.
    pub fn short(&self) -> String {
        self.to_hex()[..12].to_string()
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.short())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl From<[u8; 32]> for Digest {
    fn from(b: [u8; 32]) -> Self {
        Digest(b)
    }
}

/// Energy in integer nanojoules.
///
/// Budgets are kept in fixed point so that `initial - charged == remaining`
/// holds exactly at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Energy(pub u64);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    pub fn from_joules(j: f64) -> Self {
        debug_assert!(j >= 0.0, "negative energy {j}");
        Energy((j.max(0.0) * 1e9).round() as u64)
    }

    pub fn as_joules(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn saturating_sub(self, other: Energy) -> Energy {
        Energy(self.0.saturating_sub(other.0))
    }
}

impl std::ops::Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamp_round_trips_micros() {
        let t = Timestamp::from_secs(12.345678);
        assert_eq!(t.micros(), 12_345_678);
        assert_eq!(Timestamp::from_secs(t.as_secs()), t);
        assert_eq!(Timestamp::from_secs(-1.5).micros(), -1_500_000);
    }

    #[test]
    fn energy_fixed_point() {
        assert_eq!(Energy::from_joules(1000.0).0, 1_000_000_000_000);
        assert_eq!(Energy::from_joules(0.15).as_joules(), 0.15);
    }
}
