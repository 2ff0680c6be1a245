//! Maximum-likelihood block detection.
//!
//! Since `P_y` does not depend on the transmitted block, maximizing the
//! Gaussian likelihood reduces to minimizing `||L^{-1} y - L^{-1} G s||^2`
//! over the codebook, where `L L^H = P_y`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{cholesky_psd, CholeskyFactor, ComplexVector};
use crate::protocols::SufficientStatistics;
use crate::signal::Codebook;

/// ML detector for one block's statistics; factors `P_y` once and
/// pre-whitens every candidate mean.
#[derive(Clone, Debug)]
pub struct MlDecoder {
    factor: CholeskyFactor,
    points: Vec<ComplexVector>,
}

impl MlDecoder {
    pub fn new(stats: &SufficientStatistics, codebook: &Codebook) -> Result<Self> {
        if codebook.block_len() != stats.block_len() {
            return Err(Error::DimensionMismatch {
                context: "codebook block length",
                expected: stats.block_len(),
                found: codebook.block_len(),
            });
        }
        let factor = cholesky_psd(&stats.covariance)?;
        let wg = factor.whiten_matrix(&stats.gain)?;
        let points = codebook.entries().iter().map(|s| &wg * s).collect();
        Ok(Self { factor, points })
    }

    /// Diagonal loading applied to `P_y` (zero in the normal case).
    pub fn jitter(&self) -> f64 {
        self.factor.jitter()
    }

    /// Whitened squared distance from `y` to every candidate, in codebook order.
    pub fn metrics(&self, y: &ComplexVector) -> Result<Vec<f64>> {
        let wy = self.factor.whiten(y)?;
        Ok(self.points.iter().map(|p| dist_sqr(&wy, p)).collect())
    }

    /// Index of the minimum metric; the lowest index wins ties.
    pub fn decode(&self, y: &ComplexVector) -> Result<usize> {
        let wy = self.factor.whiten(y)?;
        let mut best = (0, f64::INFINITY);
        for (k, p) in self.points.iter().enumerate() {
            let d = dist_sqr(&wy, p);
            if d < best.1 {
                best = (k, d);
            }
        }
        Ok(best.0)
    }
}

fn dist_sqr(a: &ComplexVector, b: &ComplexVector) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum()
}

/// One-shot ML decision.
pub fn ml_decode(
    y: &ComplexVector,
    stats: &SufficientStatistics,
    codebook: &Codebook,
) -> Result<usize> {
    check_observation(y, stats)?;
    MlDecoder::new(stats, codebook)?.decode(y)
}

/// Reference detector evaluating the full complex Gaussian log-density with a
/// dense inverse and determinant. Test use only.
pub fn oracle_decode(
    y: &ComplexVector,
    stats: &SufficientStatistics,
    codebook: &Codebook,
) -> Result<usize> {
    let density = OracleDensity::new(stats)?;
    let mut best = (0, f64::NEG_INFINITY);
    for (k, s) in codebook.entries().iter().enumerate() {
        let ll = density.log_density(y, s)?;
        if ll > best.1 {
            best = (k, ll);
        }
    }
    Ok(best.0)
}

/// `ln Pr(y | s)` evaluated densely.
#[derive(Clone, Debug)]
pub struct OracleDensity<'a> {
    stats: &'a SufficientStatistics,
    inverse: crate::numerics::ComplexMatrix,
    log_det: f64,
}

impl<'a> OracleDensity<'a> {
    pub fn new(stats: &'a SufficientStatistics) -> Result<Self> {
        let p = &stats.covariance;
        let det = p.clone().lu().determinant();
        if !(det.re > 0.0) || !det.re.is_finite() {
            return Err(Error::SingularCovariance);
        }
        let inverse = p.clone().try_inverse().ok_or(Error::SingularCovariance)?;
        Ok(Self {
            stats,
            inverse,
            log_det: det.re.ln(),
        })
    }

    pub fn log_density(&self, y: &ComplexVector, s: &ComplexVector) -> Result<f64> {
        check_observation(y, self.stats)?;
        let e = y - self.stats.mean(s);
        let q: Complex64 = e.dotc(&(&self.inverse * &e));
        let dim = y.len() as f64;
        Ok(-q.re - dim * std::f64::consts::PI.ln() - self.log_det)
    }
}

fn check_observation(y: &ComplexVector, stats: &SufficientStatistics) -> Result<()> {
    if y.len() != stats.dim() {
        return Err(Error::DimensionMismatch {
            context: "observation",
            expected: stats.dim(),
            found: y.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{real, ComplexMatrix, SeededStream};
    use crate::protocols::Protocol;
    use proptest::prelude::*;

    fn stats_from(gain: ComplexMatrix, covariance: ComplexMatrix) -> SufficientStatistics {
        SufficientStatistics {
            protocol: Protocol::Ejhs,
            gain,
            covariance,
            split: None,
        }
    }

    fn random_stats(seed: u64, t: usize) -> SufficientStatistics {
        let mut rng = SeededStream::new(seed, 0);
        let g = ComplexMatrix::from_fn(t, t, |_, _| {
            crate::numerics::complex_gaussian(&mut rng, 1.0)
        });
        let b = ComplexMatrix::from_fn(t, t, |_, _| {
            crate::numerics::complex_gaussian(&mut rng, 1.0)
        });
        let p = ComplexMatrix::identity(t, t) + &b * b.adjoint();
        stats_from(g, (&p + p.adjoint()) * real(0.5))
    }

    #[test]
    fn noiseless_recovery_on_sixteen_entries() {
        let cb = Codebook::new(2, 2).unwrap();
        assert_eq!(cb.len(), 16);
        let stats = random_stats(1, 2);
        let dec = MlDecoder::new(&stats, &cb).unwrap();
        for (k, s) in cb.entries().iter().enumerate() {
            assert_eq!(dec.decode(&stats.mean(s)).unwrap(), k);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let cb = Codebook::new(2, 2).unwrap();
        let stats = stats_from(ComplexMatrix::zeros(2, 2), ComplexMatrix::identity(2, 2));
        let y = ComplexVector::from_element(2, real(0.3));
        assert_eq!(ml_decode(&y, &stats, &cb).unwrap(), 0);
        assert_eq!(oracle_decode(&y, &stats, &cb).unwrap(), 0);
    }

    #[test]
    fn identity_covariance_is_nearest_neighbour() {
        let cb = Codebook::new(1, 4).unwrap();
        let stats = stats_from(ComplexMatrix::identity(1, 1), ComplexMatrix::identity(1, 1));
        let y = ComplexVector::from_element(1, Complex64::new(0.9, -0.1));
        let nn = (0..cb.len())
            .min_by(|&a, &b| {
                (&y - &cb.entries()[a])
                    .norm()
                    .total_cmp(&(&y - &cb.entries()[b]).norm())
            })
            .unwrap();
        assert_eq!(ml_decode(&y, &stats, &cb).unwrap(), nn);
    }

    #[test]
    fn log_density_gap_matches_metric_gap() {
        let cb = Codebook::new(2, 2).unwrap();
        let stats = random_stats(3, 2);
        let mut rng = SeededStream::new(3, 1);
        let noise =
            ComplexVector::from_fn(2, |_, _| crate::numerics::complex_gaussian(&mut rng, 1.0));
        let y = stats.mean(&cb.entries()[5]) + noise;
        let dec = MlDecoder::new(&stats, &cb).unwrap();
        let metrics = dec.metrics(&y).unwrap();
        let dens = OracleDensity::new(&stats).unwrap();
        let mut order: Vec<usize> = (0..cb.len()).collect();
        order.sort_by(|&a, &b| metrics[a].total_cmp(&metrics[b]));
        let (a, b) = (order[0], order[1]);
        let ll_gap = dens.log_density(&y, &cb.entries()[a]).unwrap()
            - dens.log_density(&y, &cb.entries()[b]).unwrap();
        assert!((ll_gap - (metrics[b] - metrics[a])).abs() < 1e-8);
    }

    #[test]
    fn singular_covariance_is_reported() {
        let cb = Codebook::new(1, 2).unwrap();
        let stats = stats_from(ComplexMatrix::identity(1, 1), ComplexMatrix::zeros(1, 1));
        let y = ComplexVector::from_element(1, real(0.0));
        assert!(matches!(
            oracle_decode(&y, &stats, &cb),
            Err(Error::SingularCovariance)
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let cb = Codebook::new(2, 2).unwrap();
        let stats = random_stats(4, 2);
        let y = ComplexVector::from_element(3, real(0.0));
        assert!(matches!(
            ml_decode(&y, &stats, &cb),
            Err(Error::DimensionMismatch { .. })
        ));
        let cb1 = Codebook::new(1, 2).unwrap();
        assert!(MlDecoder::new(&stats, &cb1).is_err());
    }

    proptest! {
        #[test]
        fn argmin_is_invariant_to_covariance_scale(seed in 0u64..500, scale in 0.01f64..100.0) {
            let cb = Codebook::new(2, 2).unwrap();
            let stats = random_stats(seed, 2);
            let mut rng = SeededStream::new(seed, 7);
            let y = ComplexVector::from_fn(2, |_, _| crate::numerics::complex_gaussian(&mut rng, 2.0));
            let scaled = stats_from(stats.gain.clone(), &stats.covariance * real(scale));
            prop_assert_eq!(ml_decode(&y, &stats, &cb).unwrap(), ml_decode(&y, &scaled, &cb).unwrap());
        }
    }
}
