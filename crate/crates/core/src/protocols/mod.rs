//! The five two-layer relaying protocols.
//!
//! All protocols share phase 1 (the source broadcasts `c1 s`). They differ in
//! who transmits in phases 2 and 3 and how relays process what they heard:
//!
//! * `EJHS`: layer 1 forwards to layer 2, layer 2 forwards to the
//!   destination; the destination ignores phase 2.
//! * `RMC`: layer 2 stacks its phase-1 and phase-2 receptions and mixes them
//!   with a `T x 2T` matrix; the destination uses phases 2 and 3.
//! * `MJHS`: both layers forward their phase-1 reception in phase 2 and
//!   repeat the identical transmission in phase 3.
//! * `RSC`: like RMC but layer 2 combines its two receptions weighted by
//!   their receive SNRs.
//! * `RMCKC`: like RMC but every relay weights its receptions by its known
//!   receive channels.
//!
//! [`build_statistics`] gives the exact conditional mean operator and noise
//! covariance of the destination observation; [`simulate_destination`]
//! propagates an actual block through the network.

mod moments;
mod power;
mod propagate;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{haar_orthogonal, haar_unitary, ComplexMatrix, ComplexVector};

pub use moments::build_statistics;
pub use power::{relay_power_check, RelayPowerCheck};
pub use propagate::{
    impulse_response_statistics, propagate, simulate_destination, RelayTransmission, Trace,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    Ejhs,
    Rmc,
    Mjhs,
    Rsc,
    Rmckc,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::Ejhs,
        Protocol::Rmc,
        Protocol::Mjhs,
        Protocol::Rsc,
        Protocol::Rmckc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Ejhs => "EJHS",
            Protocol::Rmc => "RMC",
            Protocol::Mjhs => "MJHS",
            Protocol::Rsc => "RSC",
            Protocol::Rmckc => "RMCKC",
        }
    }

    /// Length of the stacked destination observation for block length `t`.
    pub fn observation_len(self, t: usize) -> usize {
        match self {
            Protocol::Ejhs => t,
            _ => 2 * t,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown protocol '{s}'")))
    }
}

/// Average per-symbol transmit powers of the three phases.
///
/// For MJHS, `p2` and `p3` are the totals radiated by layer 1 and layer 2
/// respectively over both of their transmitting phases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    /// Weak-link variance.
    pub sigma2_sq: f64,
}

impl PowerAllocation {
    pub fn new(p1: f64, p2: f64, p3: f64, sigma2_sq: f64) -> Result<Self> {
        for (name, p) in [("p1", p1), ("p2", p2), ("p3", p3)] {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidAllocation(format!(
                    "{name} must be finite and non-negative, got {p}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&sigma2_sq) {
            return Err(Error::InvalidAllocation(format!(
                "weak-link variance must lie in [0, 1], got {sigma2_sq}"
            )));
        }
        Ok(Self {
            p1,
            p2,
            p3,
            sigma2_sq,
        })
    }

    /// `total` split as `(f1, f2, 1 - f1 - f2)`; the third share absorbs
    /// rounding so the components sum to `total`.
    pub fn from_fractions(total: f64, f1: f64, f2: f64, sigma2_sq: f64) -> Result<Self> {
        let p1 = f1 * total;
        let p2 = f2 * total;
        let p3 = (total - p1 - p2).max(0.0);
        Self::new(p1, p2, p3, sigma2_sq)
    }

    pub fn equal_split(total: f64, sigma2_sq: f64) -> Result<Self> {
        let share = total / 3.0;
        Self::new(share, share, share, sigma2_sq)
    }

    /// Total power `P = p1 + p2 + p3`.
    pub fn total(&self) -> f64 {
        self.p1 + self.p2 + self.p3
    }

    pub fn fractions(&self) -> [f64; 3] {
        let total = self.total();
        if total == 0.0 {
            return [0.0; 3];
        }
        [self.p1 / total, self.p2 / total, self.p3 / total]
    }
}

/// Per-stage amplitude scalings that meet the allocation's power budgets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransmitFactors {
    Ejhs {
        c1: f64,
        c2: f64,
        c3: f64,
    },
    Rmc {
        c1: f64,
        c2: f64,
        c3: f64,
    },
    Mjhs {
        c1: f64,
        c21: f64,
        c22: f64,
        c31: f64,
        c32: f64,
    },
    Rsc {
        c1: f64,
        c2: f64,
        c3: f64,
        gamma1: f64,
        gamma2: f64,
    },
    Rmckc {
        c1: f64,
        c2: f64,
        c3: f64,
    },
}

impl TransmitFactors {
    pub fn protocol(&self) -> Protocol {
        match self {
            TransmitFactors::Ejhs { .. } => Protocol::Ejhs,
            TransmitFactors::Rmc { .. } => Protocol::Rmc,
            TransmitFactors::Mjhs { .. } => Protocol::Mjhs,
            TransmitFactors::Rsc { .. } => Protocol::Rsc,
            TransmitFactors::Rmckc { .. } => Protocol::Rmckc,
        }
    }

    pub fn c1(&self) -> f64 {
        match *self {
            TransmitFactors::Ejhs { c1, .. }
            | TransmitFactors::Rmc { c1, .. }
            | TransmitFactors::Mjhs { c1, .. }
            | TransmitFactors::Rsc { c1, .. }
            | TransmitFactors::Rmckc { c1, .. } => c1,
        }
    }

    pub fn is_valid(&self) -> bool {
        let values: &[f64] = match self {
            TransmitFactors::Ejhs { c1, c2, c3 }
            | TransmitFactors::Rmc { c1, c2, c3 }
            | TransmitFactors::Rmckc { c1, c2, c3 } => &[*c1, *c2, *c3],
            TransmitFactors::Mjhs {
                c1,
                c21,
                c22,
                c31,
                c32,
            } => &[*c1, *c21, *c22, *c31, *c32],
            TransmitFactors::Rsc {
                c1,
                c2,
                c3,
                gamma1,
                gamma2,
            } => &[*c1, *c2, *c3, *gamma1, *gamma2],
        };
        values.iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Computes the stage scalings for `protocol` under `alloc` with `n` relays
/// per layer and block length `t`.
///
/// The only degenerate case is RSC with both combining SNRs zero, i.e.
/// `p1 = 0`, or `sigma2_sq = 0` together with `p2 = 0`.
pub fn transmit_factors(
    protocol: Protocol,
    alloc: &PowerAllocation,
    n: usize,
    t: usize,
) -> Result<TransmitFactors> {
    if n == 0 || t == 0 {
        return Err(Error::InvalidParameter(
            "relay count and block length must be positive".into(),
        ));
    }
    let PowerAllocation {
        p1,
        p2,
        p3,
        sigma2_sq: s2,
    } = *alloc;
    let n = n as f64;
    let c1 = (p1 * t as f64).sqrt();
    let c2 = (p2 / (n * (p1 + 1.0))).sqrt();
    let factors = match protocol {
        Protocol::Ejhs => TransmitFactors::Ejhs {
            c1,
            c2,
            c3: (p3 / (n * (1.0 + p2))).sqrt(),
        },
        Protocol::Rmc => TransmitFactors::Rmc {
            c1,
            c2,
            c3: (p3 / (n * (2.0 + p1 * s2 + p2))).sqrt(),
        },
        Protocol::Mjhs => {
            let c21 = (p2 / (2.0 * n * (1.0 + p1))).sqrt();
            let c22 = (p3 / (2.0 * n * (1.0 + s2 * p1))).sqrt();
            TransmitFactors::Mjhs {
                c1,
                c21,
                c22,
                c31: c21,
                c32: c22,
            }
        }
        Protocol::Rsc => {
            let gamma1 = p1 * s2;
            let gamma2 = p1 * p2 / (1.0 + p1 + p2);
            let denom = gamma1 * gamma1 * (1.0 + p1 * s2) + gamma2 * gamma2 * (1.0 + p2);
            if denom <= 0.0 {
                return Err(Error::DegenerateFactors);
            }
            TransmitFactors::Rsc {
                c1,
                c2,
                c3: (p3 / (n * denom)).sqrt(),
                gamma1,
                gamma2,
            }
        }
        Protocol::Rmckc => {
            let bracket =
                8.0 * p1 * p2 + n * (1.0 + p1 + p2) + (1.0 + p1) * s2 + s2 * s2 * p1 * (1.0 + p1);
            TransmitFactors::Rmckc {
                c1,
                c2,
                c3: ((1.0 + p1) * p3 / (n * bracket)).sqrt(),
            }
        }
    };
    Ok(factors)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFamily {
    #[default]
    RealOrthogonal,
    ComplexUnitary,
}

/// Relay processing matrices.
///
/// `layer2` holds the `T x T` matrices used by EJHS, MJHS and RSC; for RMC
/// and RMCKC it is also the left half `A_2j(1)` of the `T x 2T` combining
/// matrix `(1/sqrt 2) [A_2j(1) | A_2j(2)]`, whose right half is
/// `layer2_second`. All blocks are individually orthogonal (or unitary).
#[derive(Clone, Debug, PartialEq)]
pub struct RelayMatrixSet {
    pub family: MatrixFamily,
    pub layer1: Vec<ComplexMatrix>,
    pub layer2: Vec<ComplexMatrix>,
    pub layer2_second: Vec<ComplexMatrix>,
}

impl RelayMatrixSet {
    pub fn draw<R: Rng + ?Sized>(n: usize, t: usize, family: MatrixFamily, rng: &mut R) -> Self {
        let one = |rng: &mut R| match family {
            MatrixFamily::RealOrthogonal => haar_orthogonal(t, rng),
            MatrixFamily::ComplexUnitary => haar_unitary(t, rng),
        };
        let layer1 = (0..n).map(|_| one(rng)).collect();
        let layer2 = (0..n).map(|_| one(rng)).collect();
        let layer2_second = (0..n).map(|_| one(rng)).collect();
        Self {
            family,
            layer1,
            layer2,
            layer2_second,
        }
    }

    /// Every relay uses the identity.
    pub fn identity(n: usize, t: usize) -> Self {
        let eye = ComplexMatrix::identity(t, t);
        Self {
            family: MatrixFamily::RealOrthogonal,
            layer1: vec![eye.clone(); n],
            layer2: vec![eye.clone(); n],
            layer2_second: vec![eye; n],
        }
    }

    pub fn relays(&self) -> usize {
        self.layer1.len()
    }

    pub fn block_len(&self) -> usize {
        self.layer1.first().map_or(0, |a| a.nrows())
    }

    /// The `T x 2T` combining matrix of layer-2 relay `j`.
    pub fn combining(&self, j: usize) -> ComplexMatrix {
        let t = self.block_len();
        let mut out = ComplexMatrix::zeros(t, 2 * t);
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        out.columns_mut(0, t)
            .copy_from(&(&self.layer2[j] * crate::numerics::real(scale)));
        out.columns_mut(t, t)
            .copy_from(&(&self.layer2_second[j] * crate::numerics::real(scale)));
        out
    }

    pub(crate) fn check(&self) -> Result<()> {
        let n = self.relays();
        let t = self.block_len();
        if n == 0 || t == 0 {
            return Err(Error::InvalidParameter("empty relay matrix set".into()));
        }
        for group in [&self.layer2, &self.layer2_second] {
            if group.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "relay matrix count",
                    expected: n,
                    found: group.len(),
                });
            }
        }
        for a in self
            .layer1
            .iter()
            .chain(&self.layer2)
            .chain(&self.layer2_second)
        {
            if a.nrows() != t || a.ncols() != t {
                return Err(Error::DimensionMismatch {
                    context: "relay matrix shape",
                    expected: t,
                    found: a.nrows().max(a.ncols()),
                });
            }
        }
        Ok(())
    }
}

/// Conditional Gaussian description of the destination observation:
/// `y | s ~ CN(G s, P_y)`.
///
/// For two-phase observations `y = [x; z]` and `P_y = [[P_x, P_xz], [P_zx, P_z]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SufficientStatistics {
    pub protocol: Protocol,
    pub gain: ComplexMatrix,
    pub covariance: ComplexMatrix,
    /// Length of the first stacked component when the observation has two.
    pub split: Option<usize>,
}

impl SufficientStatistics {
    pub fn dim(&self) -> usize {
        self.gain.nrows()
    }

    pub fn block_len(&self) -> usize {
        self.gain.ncols()
    }

    /// `m_y(s) = G s`.
    pub fn mean(&self, s: &ComplexVector) -> ComplexVector {
        &self.gain * s
    }

    fn block(&self, first: bool, second: bool) -> Option<ComplexMatrix> {
        let t = self.split?;
        let r = if first { 0 } else { t };
        let c = if second { t } else { 0 };
        Some(self.covariance.view((r, c), (t, t)).into_owned())
    }

    pub fn p_x(&self) -> Option<ComplexMatrix> {
        self.block(true, false)
    }

    pub fn p_z(&self) -> Option<ComplexMatrix> {
        match self.split {
            Some(_) => self.block(false, true),
            None => Some(self.covariance.clone()),
        }
    }

    pub fn p_xz(&self) -> Option<ComplexMatrix> {
        self.block(true, true)
    }

    pub fn p_zx(&self) -> Option<ComplexMatrix> {
        self.block(false, false)
    }
}
