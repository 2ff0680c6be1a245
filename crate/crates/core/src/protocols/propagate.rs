//! Phase-by-phase propagation of one block through the network.
//!
//! Kept deliberately literal: every relay transmission is formed from what
//! that relay actually received, so this module serves as an independent
//! check on the closed-form statistics.

use super::{RelayMatrixSet, TransmitFactors};
use crate::channel::{ChannelRealization, NoiseModel};
use crate::error::{Error, Result};
use crate::numerics::{real, ComplexMatrix, ComplexVector};
use num_complex::Complex64;

/// Signal radiated by one relay in one phase.
#[derive(Clone, Debug, PartialEq)]
pub struct RelayTransmission {
    pub phase: u8,
    pub layer: u8,
    pub relay: usize,
    pub signal: ComplexVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    /// The destination observation: `z` alone for EJHS, `[x; z]` otherwise.
    pub observation: ComplexVector,
    pub transmissions: Vec<RelayTransmission>,
}

/// Sends `s` through the network with the given noise realization.
pub fn propagate(
    ch: &ChannelRealization,
    mats: &RelayMatrixSet,
    factors: &TransmitFactors,
    s: &ComplexVector,
    noise: &NoiseModel,
) -> Result<Trace> {
    mats.check()?;
    let n = mats.relays();
    let t = mats.block_len();
    ch.check(n)?;
    noise.check(n, t)?;
    if s.len() != t {
        return Err(Error::DimensionMismatch {
            context: "transmitted block",
            expected: t,
            found: s.len(),
        });
    }
    if !factors.is_valid() {
        return Err(Error::DegenerateFactors);
    }

    let c1 = factors.c1();
    let r1: Vec<ComplexVector> = (0..n)
        .map(|i| s * (ch.h_s1[i] * c1) + &noise.relay1_phase1[i])
        .collect();
    let r2a: Vec<ComplexVector> = (0..n)
        .map(|j| s * (ch.h_s2[j] * c1) + &noise.relay2_phase1[j])
        .collect();

    let mut sent = Vec::new();
    let mut emit = |phase: u8, layer: u8, relay: usize, signal: ComplexVector| {
        sent.push(RelayTransmission {
            phase,
            layer,
            relay,
            signal,
        });
    };

    let observation = match *factors {
        TransmitFactors::Mjhs {
            c21, c22, c31, c32, ..
        } => {
            let mut x = noise.dest_phase2.clone();
            let mut z = noise.dest_phase3.clone();
            for i in 0..n {
                let base = &mats.layer1[i] * &r1[i];
                let (t2, t3) = (&base * real(c21), &base * real(c31));
                x += &t2 * ch.h_1d[i];
                z += &t3 * ch.h_1d[i];
                emit(2, 1, i, t2);
                emit(3, 1, i, t3);
            }
            for j in 0..n {
                let base = &mats.layer2[j] * &r2a[j];
                let (t2, t3) = (&base * real(c22), &base * real(c32));
                x += &t2 * ch.h_2d[j];
                z += &t3 * ch.h_2d[j];
                emit(2, 2, j, t2);
                emit(3, 2, j, t3);
            }
            concat(&x, &z)
        }
        _ => {
            let (c2, kc) = match *factors {
                TransmitFactors::Ejhs { c2, .. }
                | TransmitFactors::Rmc { c2, .. }
                | TransmitFactors::Rsc { c2, .. } => (c2, false),
                TransmitFactors::Rmckc { c2, .. } => (c2, true),
                TransmitFactors::Mjhs { .. } => unreachable!(),
            };
            // phase 2: layer 1 forwards
            let t1: Vec<ComplexVector> = (0..n)
                .map(|i| {
                    let w = if kc { ch.h_s1[i].conj() } else { real(1.0) };
                    &mats.layer1[i] * &r1[i] * (w * c2)
                })
                .collect();
            let mut x = noise.dest_phase2.clone();
            let mut r2b = noise.relay2_phase2.clone();
            for i in 0..n {
                x += &t1[i] * ch.h_1d[i];
                for (j, r) in r2b.iter_mut().enumerate() {
                    *r += &t1[i] * ch.h_12[(i, j)];
                }
            }
            for (i, sig) in t1.into_iter().enumerate() {
                emit(2, 1, i, sig);
            }

            // phase 3: layer 2 forwards
            let mut z = noise.dest_phase3.clone();
            for j in 0..n {
                let t2 = match *factors {
                    TransmitFactors::Ejhs { c3, .. } => &mats.layer2[j] * &r2b[j] * real(c3),
                    TransmitFactors::Rsc {
                        c3, gamma1, gamma2, ..
                    } => {
                        let combined = &r2a[j] * real(gamma1) + &r2b[j] * real(gamma2);
                        &mats.layer2[j] * combined * real(c3)
                    }
                    TransmitFactors::Rmc { c3, .. } => {
                        &mats.combining(j) * concat(&r2a[j], &r2b[j]) * real(c3)
                    }
                    TransmitFactors::Rmckc { c3, .. } => {
                        let first = &r2a[j] * ch.h_s2[j].conj();
                        let second = &r2b[j] * real(ch.incoming_norm_l2(j));
                        &mats.combining(j) * concat(&first, &second) * real(c3)
                    }
                    TransmitFactors::Mjhs { .. } => unreachable!(),
                };
                z += &t2 * ch.h_2d[j];
                emit(3, 2, j, t2);
            }
            if matches!(factors, TransmitFactors::Ejhs { .. }) {
                z
            } else {
                concat(&x, &z)
            }
        }
    };
    Ok(Trace {
        observation,
        transmissions: sent,
    })
}

/// The destination observation only.
pub fn simulate_destination(
    ch: &ChannelRealization,
    mats: &RelayMatrixSet,
    factors: &TransmitFactors,
    s: &ComplexVector,
    noise: &NoiseModel,
) -> Result<ComplexVector> {
    Ok(propagate(ch, mats, factors, s, noise)?.observation)
}

/// Reconstructs `(G, P_y)` from the propagation path alone: column `k` of
/// `G` is the noiseless response to `e_k`, and `P_y = sum_k b_k b_k^H` over
/// the responses `b_k` to a unit impulse on each scalar noise sample.
pub fn impulse_response_statistics(
    ch: &ChannelRealization,
    mats: &RelayMatrixSet,
    factors: &TransmitFactors,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = mats.relays();
    let t = mats.block_len();
    let dim = factors.protocol().observation_len(t);
    let quiet = NoiseModel::zero(n, t);
    let mut gain = ComplexMatrix::zeros(dim, t);
    for k in 0..t {
        let mut e = ComplexVector::zeros(t);
        e[k] = real(1.0);
        gain.set_column(k, &simulate_destination(ch, mats, factors, &e, &quiet)?);
    }
    let silent = ComplexVector::zeros(t);
    let mut covariance = ComplexMatrix::zeros(dim, dim);
    for k in 0..quiet.len() {
        let mut noise = NoiseModel::zero(n, t);
        *noise.get_mut(k) = real(1.0);
        let b = simulate_destination(ch, mats, factors, &silent, &noise)?;
        covariance += &b * b.adjoint();
    }
    Ok((gain, covariance))
}

fn concat(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    let mut out = ComplexVector::from_element(a.len() + b.len(), Complex64::new(0.0, 0.0));
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}
