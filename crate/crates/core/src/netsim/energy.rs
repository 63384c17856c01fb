use crate::crypto::OpCost;
use crate::types::Energy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    /// ε₀, joules per transmission.
    pub eps0: f64,
    /// ε₁, joules per square meter.
    pub eps1: f64,
    pub sign: OpCost,
    pub verify: OpCost,
    pub kem: OpCost,
}

impl EnergyModel {
    /// ε_tx = ε₀ + ε₁·d².
    pub fn tx_energy(&self, distance_m: f64) -> f64 {
        debug_assert!(distance_m >= 0.0);
        self.eps0 + self.eps1 * distance_m * distance_m
    }
}

/// What one committee member spends in a round.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MemberCost {
    /// Distances of every transmission the member makes.
    pub tx_distances_m: Vec<f64>,
    /// ε_compute for the member, joules.
    pub compute_j: f64,
}

/// ε_total = Σ_j ε_tx^(j) + ε_compute^(j) over members.
pub fn round_energy(model: &EnergyModel, members: &[MemberCost]) -> f64 {
    members
        .iter()
        .map(|m| m.tx_distances_m.iter().map(|&d| model.tx_energy(d)).sum::<f64>() + m.compute_j)
        .sum()
}

/// Exact fixed-point energy bookkeeping for one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnergyAccount {
    pub initial: Energy,
    pub charged: Energy,
    /// When false the node is mains powered: costs are recorded, never depleted.
    pub budgeted: bool,
}

impl EnergyAccount {
    pub fn battery(initial: Energy) -> Self {
        EnergyAccount { initial, charged: Energy::ZERO, budgeted: true }
    }

    pub fn mains() -> Self {
        EnergyAccount { initial: Energy::ZERO, charged: Energy::ZERO, budgeted: false }
    }

    pub fn remaining(&self) -> Energy {
        self.initial.saturating_sub(self.charged)
    }

    pub fn depleted(&self) -> bool {
        self.budgeted && self.remaining() == Energy::ZERO
    }

    /// Deduct up to `cost`, returning the amount actually charged. A battery
    /// cannot go below zero.
    pub fn charge(&mut self, cost: Energy) -> Energy {
        let taken = if self.budgeted { Energy(cost.0.min(self.remaining().0)) } else { cost };
        self.charged += taken;
        taken
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> EnergyModel {
        let c = OpCost { joules: 0.0, millis: 0.0 };
        EnergyModel { eps0: 0.05, eps1: 1e-7, sign: c, verify: c, kem: c }
    }

    #[test]
    fn tx_energy_examples() {
        let m = model();
        assert_eq!(m.tx_energy(0.0), 0.05);
        assert!((m.tx_energy(1000.0) - 0.15).abs() < 1e-15);
        let quad = |d: f64| m.tx_energy(d) - m.eps0;
        assert!((quad(800.0) - 4.0 * quad(400.0)).abs() < 1e-15);
    }

    #[test]
    fn round_energy_examples() {
        let m = model();
        let one = MemberCost { tx_distances_m: vec![300.0], compute_j: 0.0 };
        assert_eq!(round_energy(&m, &[one]), m.tx_energy(300.0));
        assert_eq!(round_energy(&m, &[]), 0.0);
        let members = vec![
            MemberCost { tx_distances_m: vec![1000.0, 0.0], compute_j: 0.03 },
            MemberCost { tx_distances_m: vec![500.0], compute_j: 0.01 },
            MemberCost { tx_distances_m: vec![], compute_j: 0.02 },
        ];
        // (0.15 + 0.05 + 0.03) + (0.075 + 0.01) + 0.02
        assert!((round_energy(&m, &members) - 0.335).abs() < 1e-15);
    }

    #[test]
    fn battery_never_goes_negative_and_conserves() {
        let mut a = EnergyAccount::battery(Energy::from_joules(1.0));
        let mut total = Energy::ZERO;
        for _ in 0..30 {
            total += a.charge(Energy::from_joules(0.07));
        }
        assert!(a.depleted());
        assert_eq!(a.initial.0 - total.0, a.remaining().0);
        assert_eq!(a.charged, Energy::from_joules(1.0));

        let mut e = EnergyAccount::mains();
        e.charge(Energy::from_joules(5.0));
        assert!(!e.depleted());
        assert_eq!(e.charged.as_joules(), 5.0);
    }
}
