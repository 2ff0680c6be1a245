//! Quasi-static Rayleigh fading and receiver noise.
//!
//! Strong links (source to layer 1, layer 1 to layer 2, layer 2 to the
//! destination) have unit variance. Weak links (source to layer 2, layer 1
//! to the destination) have variance `sigma2_sq`. Every coefficient is held
//! constant over a block.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{complex_gaussian, ComplexVector};

/// One block's worth of fading coefficients for a network with `n` relays
/// per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub sigma2_sq: f64,
    /// Source to layer-1 relay `j`.
    pub h_s1: Vec<Complex64>,
    /// Entry `(i, j)`: layer-1 relay `i` to layer-2 relay `j`.
    pub h_12: DMatrix<Complex64>,
    /// Layer-2 relay `j` to destination.
    pub h_2d: Vec<Complex64>,
    /// Source to layer-2 relay `j` (weak).
    pub h_s2: Vec<Complex64>,
    /// Layer-1 relay `i` to destination (weak).
    pub h_1d: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn relays(&self) -> usize {
        self.h_s1.len()
    }

    /// Every coefficient set to `value`; handy for hand-checkable cases.
    pub fn constant(n: usize, sigma2_sq: f64, value: Complex64) -> Self {
        Self {
            sigma2_sq,
            h_s1: vec![value; n],
            h_12: DMatrix::from_element(n, n, value),
            h_2d: vec![value; n],
            h_s2: vec![value; n],
            h_1d: vec![value; n],
        }
    }

    pub fn zero(n: usize, sigma2_sq: f64) -> Self {
        Self::constant(n, sigma2_sq, Complex64::new(0.0, 0.0))
    }

    /// Euclidean norm of the column of layer-1 to layer-2 coefficients
    /// arriving at layer-2 relay `j`.
    pub fn incoming_norm_l2(&self, j: usize) -> f64 {
        self.h_12.column(j).norm()
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        let lens = [
            self.h_s1.len(),
            self.h_2d.len(),
            self.h_s2.len(),
            self.h_1d.len(),
            self.h_12.nrows(),
            self.h_12.ncols(),
        ];
        for found in lens {
            if found != n {
                return Err(Error::DimensionMismatch {
                    context: "channel realization",
                    expected: n,
                    found,
                });
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        self.h_s1.iter().all(finite)
            && self.h_12.iter().all(finite)
            && self.h_2d.iter().all(finite)
            && self.h_s2.iter().all(finite)
            && self.h_1d.iter().all(finite)
    }
}

/// Draws an independent channel realization.
pub fn draw_channels<R: Rng + ?Sized>(n: usize, sigma2_sq: f64, rng: &mut R) -> ChannelRealization {
    assert!(n >= 1, "at least one relay per layer");
    assert!(
        (0.0..=1.0).contains(&sigma2_sq),
        "weak-link variance must lie in [0, 1]"
    );
    let mut draw = |var: f64, count: usize| -> Vec<Complex64> {
        (0..count).map(|_| complex_gaussian(rng, var)).collect()
    };
    let h_s1 = draw(1.0, n);
    let h_12 = DMatrix::from_vec(n, n, draw(1.0, n * n));
    let h_2d = draw(1.0, n);
    let h_s2 = draw(sigma2_sq, n);
    let h_1d = draw(sigma2_sq, n);
    ChannelRealization {
        sigma2_sq,
        h_s1,
        h_12,
        h_2d,
        h_s2,
        h_1d,
    }
}

/// `t` i.i.d. unit-variance circularly-symmetric complex Gaussian samples.
pub fn draw_noise<R: Rng + ?Sized>(t: usize, rng: &mut R) -> ComplexVector {
    assert!(t >= 1, "block length must be positive");
    ComplexVector::from_fn(t, |_, _| complex_gaussian(rng, 1.0))
}

/// All noise vectors entering one block, unit variance per complex entry.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    /// Layer-1 relays, phase 1.
    pub relay1_phase1: Vec<ComplexVector>,
    /// Layer-2 relays, phase 1.
    pub relay2_phase1: Vec<ComplexVector>,
    /// Layer-2 relays, phase 2.
    pub relay2_phase2: Vec<ComplexVector>,
    /// Destination, phase 2.
    pub dest_phase2: ComplexVector,
    /// Destination, phase 3.
    pub dest_phase3: ComplexVector,
}

impl NoiseModel {
    pub fn draw<R: Rng + ?Sized>(n: usize, t: usize, rng: &mut R) -> Self {
        let relays = |rng: &mut R| (0..n).map(|_| draw_noise(t, rng)).collect::<Vec<_>>();
        let relay1_phase1 = relays(rng);
        let relay2_phase1 = relays(rng);
        let relay2_phase2 = relays(rng);
        Self {
            relay1_phase1,
            relay2_phase1,
            relay2_phase2,
            dest_phase2: draw_noise(t, rng),
            dest_phase3: draw_noise(t, rng),
        }
    }

    pub fn zero(n: usize, t: usize) -> Self {
        Self {
            relay1_phase1: vec![ComplexVector::zeros(t); n],
            relay2_phase1: vec![ComplexVector::zeros(t); n],
            relay2_phase2: vec![ComplexVector::zeros(t); n],
            dest_phase2: ComplexVector::zeros(t),
            dest_phase3: ComplexVector::zeros(t),
        }
    }

    /// Keeps the destination noise and silences every relay.
    pub fn without_relay_noise(mut self) -> Self {
        for v in self
            .relay1_phase1
            .iter_mut()
            .chain(self.relay2_phase1.iter_mut())
            .chain(self.relay2_phase2.iter_mut())
        {
            v.fill(Complex64::new(0.0, 0.0));
        }
        self
    }

    /// Total number of scalar noise samples, in a fixed order usable by
    /// [`NoiseModel::get_mut`].
    pub fn len(&self) -> usize {
        let t = self.dest_phase2.len();
        (3 * self.relay1_phase1.len() + 2) * t
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mutable access to the `k`-th scalar noise sample.
    pub fn get_mut(&mut self, k: usize) -> &mut Complex64 {
        let t = self.dest_phase2.len();
        let n = self.relay1_phase1.len();
        let (vec_idx, pos) = (k / t, k % t);
        match vec_idx {
            v if v < n => &mut self.relay1_phase1[v][pos],
            v if v < 2 * n => &mut self.relay2_phase1[v - n][pos],
            v if v < 3 * n => &mut self.relay2_phase2[v - 2 * n][pos],
            v if v == 3 * n => &mut self.dest_phase2[pos],
            _ => &mut self.dest_phase3[pos],
        }
    }

    pub(crate) fn check(&self, n: usize, t: usize) -> Result<()> {
        for group in [
            &self.relay1_phase1,
            &self.relay2_phase1,
            &self.relay2_phase2,
        ] {
            if group.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "relay noise",
                    expected: n,
                    found: group.len(),
                });
            }
        }
        let all = self
            .relay1_phase1
            .iter()
            .chain(&self.relay2_phase1)
            .chain(&self.relay2_phase2)
            .chain([&self.dest_phase2, &self.dest_phase3]);
        for v in all {
            if v.len() != t {
                return Err(Error::DimensionMismatch {
                    context: "noise vector",
                    expected: t,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }
}
