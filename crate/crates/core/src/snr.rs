//! Average receive SNR: closed form and Monte-Carlo estimate.
//!
//! SNR is the ratio of the average received signal energy to the average
//! received noise energy, each summed over all phases the destination uses.
//! Expectations run over channels, relay matrices, noise and the transmitted
//! block. With `c1 = sqrt(p1 T)` the block length cancels.

use rayon::prelude::*;

use crate::channel::{draw_channels, NoiseModel};
use crate::error::{Error, Result};
use crate::numerics::SeededStream;
use crate::protocols::{
    simulate_destination, transmit_factors, MatrixFamily, PowerAllocation, Protocol,
    RelayMatrixSet, TransmitFactors,
};
use crate::signal::random_block;

const SNR_DOMAIN: u64 = 0x736e_72;

/// Minimum sample count accepted by [`snr_monte_carlo`].
pub const MIN_MC_SAMPLES: usize = 1000;

/// Average receive SNR in terms of the stage factors and the weak-link
/// variance `s`.
pub fn snr_from_factors(factors: &TransmitFactors, s: f64, n: usize, t: usize) -> f64 {
    let n = n as f64;
    let t = t as f64;
    let sq = |x: f64| x * x;
    let (num, den) = match *factors {
        TransmitFactors::Ejhs { c1, c2, c3 } => {
            let (c1, c2, c3) = (sq(c1), sq(c2), sq(c3));
            (c1 * c2 * c3 * n * n, t * (c2 * c3 * n * n + c3 * n + 1.0))
        }
        TransmitFactors::Rmc { c1, c2, c3 } => {
            let (c1, c2, c3) = (sq(c1), sq(c2), sq(c3));
            (
                2.0 * c1 * c2 * n * s + c1 * c3 * n * s + c1 * c2 * c3 * n * n,
                t * (2.0 * c2 * n * s + 2.0 * c3 * n + c2 * c3 * n * n + 4.0),
            )
        }
        TransmitFactors::Mjhs { c1, c21, c22, .. } => {
            let (c1, c21, c22) = (sq(c1), sq(c21), sq(c22));
            (n * c1 * (c21 + c22) * s, t * (c21 * n * s + c22 * n + 1.0))
        }
        TransmitFactors::Rsc {
            c1,
            c2,
            c3,
            gamma1,
            gamma2,
        } => {
            let (c1, c2, c3, g1, g2) = (sq(c1), sq(c2), sq(c3), sq(gamma1), sq(gamma2));
            (
                c1 * c2 * n * s + c1 * c3 * g1 * n * s + c1 * c2 * c3 * g2 * n * n,
                t * (c2 * n * s + c3 * (g1 + g2) * n + c2 * c3 * g2 * n * n + 2.0),
            )
        }
        TransmitFactors::Rmckc { c1, c2, c3 } => {
            let (c1, c2, c3) = (sq(c1), sq(c2), sq(c3));
            (
                4.0 * n * c1 * c2 * s
                    + 2.0 * n * c1 * c3 * s * s
                    + 2.0 * n * n * (n + 1.0) * c1 * c2 * c3,
                t * (2.0 * c2 * n * s
                    + 4.0
                    + c3 * n * s
                    + c2 * c3 * n * n * (n + 1.0)
                    + c3 * n * n),
            )
        }
    };
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Closed-form average receive SNR. `n` only matters for RMCKC.
///
/// Returns 0 when the stage factors are degenerate.
pub fn snr_closed_form(protocol: Protocol, alloc: &PowerAllocation, n: usize) -> f64 {
    const T: usize = 1;
    match transmit_factors(protocol, alloc, n.max(1), T) {
        Ok(f) => snr_from_factors(&f, alloc.sigma2_sq, n.max(1), T),
        Err(_) => 0.0,
    }
}

/// Monte-Carlo estimate of the average receive SNR from `samples`
/// independent network realizations.
///
/// Each sample propagates a random block twice, once without noise to get
/// the signal component and once with noise; the noise energy is the
/// squared difference. Matrices are redrawn every sample.
pub fn snr_monte_carlo(
    protocol: Protocol,
    alloc: &PowerAllocation,
    n: usize,
    t: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_MC_SAMPLES} samples are required, got {samples}"
        )));
    }
    let factors = match transmit_factors(protocol, alloc, n, t) {
        Ok(f) => f,
        Err(Error::DegenerateFactors) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let energies = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = SeededStream::with_domain(seed, SNR_DOMAIN, k as u64);
            let ch = draw_channels(n, alloc.sigma2_sq, &mut rng);
            let mats = RelayMatrixSet::draw(n, t, MatrixFamily::RealOrthogonal, &mut rng);
            let s = random_block(t, 2, &mut rng)?;
            let noise = NoiseModel::draw(n, t, &mut rng);
            let clean = simulate_destination(&ch, &mats, &factors, &s, &NoiseModel::zero(n, t))?;
            let noisy = simulate_destination(&ch, &mats, &factors, &s, &noise)?;
            Ok((clean.norm_squared(), (noisy - &clean).norm_squared()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (signal, noise) = energies
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, w)| (a + s, b + w));
    Ok(if noise > 0.0 { signal / noise } else { 0.0 })
}

/// Simplified closed forms as printed for the protocols where they are
/// unambiguous; kept as cross-checks.
pub mod printed {
    /// `p1 p2 p3 / ((1 + p2)(1 + p3) + p1 (1 + p2 + p3))`.
    pub fn ejhs(p1: f64, p2: f64, p3: f64) -> f64 {
        p1 * p2 * p3 / ((1.0 + p2) * (1.0 + p3) + p1 * (1.0 + p2 + p3))
    }

    /// Maximum of [`ejhs`] over the simplex `p1 + p2 + p3 = P`, reached at
    /// the equal split.
    pub fn ejhs_max(total: f64) -> f64 {
        total.powi(3) / (9.0 * (3.0 + 3.0 * total + total * total))
    }

    pub fn mjhs(p1: f64, p2: f64, p3: f64, s: f64) -> f64 {
        let num = p1 * s * ((1.0 + p1) * p3 + p2 * (1.0 + p1 * s));
        let den = 2.0 + p3 + 2.0 * p1 * p1 * s + p2 * s + p1 * (2.0 + p3 + 2.0 * s + p2 * s * s);
        num / den
    }
}
