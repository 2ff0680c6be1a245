//! Monte-Carlo check of radiated relay power against the allocation.

use serde::Serialize;

use super::{propagate, transmit_factors, MatrixFamily, PowerAllocation, Protocol, RelayMatrixSet};
use crate::channel::{draw_channels, NoiseModel};
use crate::error::Result;
use crate::numerics::SeededStream;
use crate::signal::random_block;

const POWER_DOMAIN: u64 = 0x706f_7765_72;

/// Average per-relay, per-symbol transmit power of one (phase, layer) group.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelayPowerCheck {
    pub protocol: Protocol,
    pub phase: u8,
    pub layer: u8,
    pub measured: f64,
    pub budget: f64,
}

impl RelayPowerCheck {
    pub fn ratio(&self) -> f64 {
        if self.budget == 0.0 {
            return if self.measured == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
        }
        self.measured / self.budget
    }
}

/// Estimates radiated relay power over `samples` independent blocks.
///
/// The budget of a layer is its allocated power divided evenly among its
/// relays and, for MJHS, between its two transmitting phases.
pub fn relay_power_check(
    protocol: Protocol,
    alloc: &PowerAllocation,
    n: usize,
    t: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<RelayPowerCheck>> {
    let factors = transmit_factors(protocol, alloc, n, t)?;
    let groups: Vec<(u8, u8, f64)> = match protocol {
        Protocol::Mjhs => vec![
            (2, 1, alloc.p2 / 2.0),
            (2, 2, alloc.p3 / 2.0),
            (3, 1, alloc.p2 / 2.0),
            (3, 2, alloc.p3 / 2.0),
        ],
        _ => vec![(2, 1, alloc.p2), (3, 2, alloc.p3)],
    };
    let mut energy = vec![0.0; groups.len()];
    for k in 0..samples {
        let mut rng = SeededStream::with_domain(seed, POWER_DOMAIN, k as u64);
        let ch = draw_channels(n, alloc.sigma2_sq, &mut rng);
        let mats = RelayMatrixSet::draw(n, t, MatrixFamily::RealOrthogonal, &mut rng);
        let s = random_block(t, 2, &mut rng)?;
        let noise = NoiseModel::draw(n, t, &mut rng);
        let trace = propagate(&ch, &mats, &factors, &s, &noise)?;
        for tx in &trace.transmissions {
            if let Some(g) = groups
                .iter()
                .position(|&(phase, layer, _)| phase == tx.phase && layer == tx.layer)
            {
                energy[g] += tx.signal.norm_squared();
            }
        }
    }
    let per = (samples * n * t).max(1) as f64;
    Ok(groups
        .iter()
        .zip(energy)
        .map(|(&(phase, layer, total), e)| RelayPowerCheck {
            protocol,
            phase,
            layer,
            measured: e / per,
            budget: total / n as f64,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_one_meets_budget() {
        let alloc = PowerAllocation::new(4.0, 3.0, 2.0, 0.3).unwrap();
        for p in [Protocol::Ejhs, Protocol::Rmc, Protocol::Rsc] {
            let checks = relay_power_check(p, &alloc, 2, 2, 4000, 1).unwrap();
            let first = &checks[0];
            assert_eq!((first.phase, first.layer), (2, 1));
            assert!((first.ratio() - 1.0).abs() < 0.05, "{p}: {}", first.ratio());
        }
    }

    #[test]
    fn ejhs_layer_two_meets_budget() {
        let alloc = PowerAllocation::new(4.0, 3.0, 2.0, 0.3).unwrap();
        let checks = relay_power_check(Protocol::Ejhs, &alloc, 2, 2, 4000, 2).unwrap();
        assert!(
            (checks[1].ratio() - 1.0).abs() < 0.05,
            "{}",
            checks[1].ratio()
        );
    }
}
