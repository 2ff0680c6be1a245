//! Conditional mean operator and noise covariance of the destination
//! observation.
//!
//! EJHS, RMC, RSC and RMCKC share one structure. Layer-1 relay `i` sends
//! `c2 k_i A_1i r_1i`, and the phase-3 destination sample is
//!
//! ```text
//! z = sum_j h_2d[j] (a_j M1_j r_2j(1) + b_j M2_j r_2j(2)) + w_3
//! ```
//!
//! so only the per-relay scalars `k_i`, `a_j`, `b_j` and the matrices `M1_j`,
//! `M2_j` change between protocols. Relay matrices are not assumed
//! orthogonal here; every `A A^H` is formed explicitly.

use num_complex::Complex64;

use super::{Protocol, RelayMatrixSet, SufficientStatistics, TransmitFactors};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::numerics::{identity, real, ComplexMatrix};

/// Builds `G` and `P_y` for one channel and relay-matrix realization.
pub fn build_statistics(
    ch: &ChannelRealization,
    mats: &RelayMatrixSet,
    factors: &TransmitFactors,
) -> Result<SufficientStatistics> {
    mats.check()?;
    ch.check(mats.relays())?;
    if !factors.is_valid() {
        return Err(Error::DegenerateFactors);
    }
    let n = mats.relays();
    let sqrt_half = real(std::f64::consts::FRAC_1_SQRT_2);
    let one = real(1.0);
    let stats = match *factors {
        TransmitFactors::Ejhs { c1, c2, c3 } => {
            let spec = ChainSpec {
                c1,
                c2,
                layer1_weight: vec![one; n],
                direct: vec![Complex64::new(0.0, 0.0); n],
                relayed: vec![real(c3); n],
                m1: &mats.layer2,
                m2: &mats.layer2,
            };
            let z = spec.phase3(ch, mats);
            SufficientStatistics {
                protocol: Protocol::Ejhs,
                gain: z.gain,
                covariance: hermitize(z.covariance),
                split: None,
            }
        }
        TransmitFactors::Rmc { c1, c2, c3 } => ChainSpec {
            c1,
            c2,
            layer1_weight: vec![one; n],
            direct: vec![real(c3) * sqrt_half; n],
            relayed: vec![real(c3) * sqrt_half; n],
            m1: &mats.layer2,
            m2: &mats.layer2_second,
        }
        .two_phase(Protocol::Rmc, ch, mats),
        TransmitFactors::Rsc {
            c1,
            c2,
            c3,
            gamma1,
            gamma2,
        } => ChainSpec {
            c1,
            c2,
            layer1_weight: vec![one; n],
            direct: vec![real(c3 * gamma1); n],
            relayed: vec![real(c3 * gamma2); n],
            m1: &mats.layer2,
            m2: &mats.layer2,
        }
        .two_phase(Protocol::Rsc, ch, mats),
        TransmitFactors::Rmckc { c1, c2, c3 } => ChainSpec {
            c1,
            c2,
            layer1_weight: ch.h_s1.iter().map(|h| h.conj()).collect(),
            direct: ch.h_s2.iter().map(|h| h.conj() * c3 * sqrt_half).collect(),
            relayed: (0..n)
                .map(|j| real(c3 * ch.incoming_norm_l2(j)) * sqrt_half)
                .collect(),
            m1: &mats.layer2,
            m2: &mats.layer2_second,
        }
        .two_phase(Protocol::Rmckc, ch, mats),
        TransmitFactors::Mjhs {
            c1,
            c21,
            c22,
            c31,
            c32,
        } => mjhs(ch, mats, c1, [c21, c22], [c31, c32]),
    };
    Ok(stats)
}

struct Moments {
    gain: ComplexMatrix,
    covariance: ComplexMatrix,
}

struct ChainSpec<'a> {
    c1: f64,
    c2: f64,
    /// `k_i`: scalar applied by layer-1 relay `i` before `A_1i`.
    layer1_weight: Vec<Complex64>,
    /// `a_j`: weight on layer-2 relay `j`'s phase-1 reception.
    direct: Vec<Complex64>,
    /// `b_j`: weight on layer-2 relay `j`'s phase-2 reception.
    relayed: Vec<Complex64>,
    m1: &'a [ComplexMatrix],
    m2: &'a [ComplexMatrix],
}

impl ChainSpec<'_> {
    /// `D_i = sum_j h_2d[j] b_j h_12[i, j] M2_j`: how layer-1 relay `i`'s
    /// transmission reaches the destination in phase 3.
    fn layer1_paths(&self, ch: &ChannelRealization) -> Vec<ComplexMatrix> {
        let n = ch.relays();
        let t = self.m2[0].nrows();
        (0..n)
            .map(|i| {
                let mut d = ComplexMatrix::zeros(t, t);
                for j in 0..n {
                    d += &self.m2[j] * (ch.h_2d[j] * self.relayed[j] * ch.h_12[(i, j)]);
                }
                d
            })
            .collect()
    }

    fn phase3(&self, ch: &ChannelRealization, mats: &RelayMatrixSet) -> Moments {
        let n = ch.relays();
        let t = mats.block_len();
        let mut gain = ComplexMatrix::zeros(t, t);
        let mut covariance = identity(t);
        for j in 0..n {
            let h = ch.h_2d[j];
            gain += &self.m1[j] * (h * self.direct[j] * ch.h_s2[j] * self.c1);
            covariance += gram(&self.m1[j]) * real((h * self.direct[j]).norm_sqr());
            covariance += gram(&self.m2[j]) * real((h * self.relayed[j]).norm_sqr());
        }
        for (i, d) in self.layer1_paths(ch).iter().enumerate() {
            let k = self.layer1_weight[i] * self.c2;
            let path = d * &mats.layer1[i];
            gain += &path * (k * ch.h_s1[i] * self.c1);
            covariance += gram(&path) * real(k.norm_sqr());
        }
        Moments { gain, covariance }
    }

    fn two_phase(
        &self,
        protocol: Protocol,
        ch: &ChannelRealization,
        mats: &RelayMatrixSet,
    ) -> SufficientStatistics {
        let n = ch.relays();
        let t = mats.block_len();
        let mut gx = ComplexMatrix::zeros(t, t);
        let mut px = identity(t);
        let mut pxz = ComplexMatrix::zeros(t, t);
        let paths = self.layer1_paths(ch);
        for i in 0..n {
            let k = self.layer1_weight[i] * self.c2;
            let a = &mats.layer1[i];
            gx += a * (ch.h_1d[i] * k * ch.h_s1[i] * self.c1);
            px += gram(a) * real((ch.h_1d[i] * k).norm_sqr());
            pxz += a * a.adjoint() * paths[i].adjoint() * (ch.h_1d[i] * real(k.norm_sqr()));
        }
        let z = self.phase3(ch, mats);
        stack(protocol, gx, z.gain, px, z.covariance, pxz)
    }
}

fn mjhs(
    ch: &ChannelRealization,
    mats: &RelayMatrixSet,
    c1: f64,
    phase2: [f64; 2],
    phase3: [f64; 2],
) -> SufficientStatistics {
    let n = ch.relays();
    let t = mats.block_len();
    let mut g2 = ComplexMatrix::zeros(t, t);
    let mut g3 = ComplexMatrix::zeros(t, t);
    let mut px = identity(t);
    let mut pz = identity(t);
    let mut pxz = ComplexMatrix::zeros(t, t);
    for j in 0..n {
        for (layer, a, h_in, h_out) in [
            (0, &mats.layer1[j], ch.h_s1[j], ch.h_1d[j]),
            (1, &mats.layer2[j], ch.h_s2[j], ch.h_2d[j]),
        ] {
            let (cx, cz) = (phase2[layer], phase3[layer]);
            let aa = gram(a);
            g2 += a * (h_out * h_in * c1 * cx);
            g3 += a * (h_out * h_in * c1 * cz);
            let h2 = h_out.norm_sqr();
            px += &aa * real(cx * cx * h2);
            pz += &aa * real(cz * cz * h2);
            // the phase-3 repeat carries the same relay noise as phase 2
            pxz += aa * real(cx * cz * h2);
        }
    }
    stack(Protocol::Mjhs, g2, g3, px, pz, pxz)
}

fn gram(m: &ComplexMatrix) -> ComplexMatrix {
    m * m.adjoint()
}

fn hermitize(p: ComplexMatrix) -> ComplexMatrix {
    (&p + p.adjoint()) * real(0.5)
}

fn stack(
    protocol: Protocol,
    gx: ComplexMatrix,
    gz: ComplexMatrix,
    px: ComplexMatrix,
    pz: ComplexMatrix,
    pxz: ComplexMatrix,
) -> SufficientStatistics {
    let t = gx.nrows();
    let mut gain = ComplexMatrix::zeros(2 * t, gx.ncols());
    gain.rows_mut(0, t).copy_from(&gx);
    gain.rows_mut(t, t).copy_from(&gz);
    let mut covariance = ComplexMatrix::zeros(2 * t, 2 * t);
    covariance.view_mut((0, 0), (t, t)).copy_from(&px);
    covariance.view_mut((t, t), (t, t)).copy_from(&pz);
    covariance
        .view_mut((t, 0), (t, t))
        .copy_from(&pxz.adjoint());
    covariance.view_mut((0, t), (t, t)).copy_from(&pxz);
    SufficientStatistics {
        protocol,
        gain,
        covariance: hermitize(covariance),
        split: Some(t),
    }
}
