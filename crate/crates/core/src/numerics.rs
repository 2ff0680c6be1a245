//! Complex linear algebra used throughout the simulator.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. This module adds
//! the handful of operations the relay protocols need on top of that:
//! Haar-distributed orthogonal and unitary matrices, a Cholesky factorization
//! with a small jitter ladder for nearly singular covariances, and the
//! whitened quadratic form `(y - m)^H P^{-1} (y - m)` evaluated through the
//! triangular factor.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Diagonal loadings tried, in order, when a covariance is not numerically
/// positive definite.
pub const JITTER_LADDER: [f64; 3] = [1e-12, 1e-10, 1e-8];

const HERMITIAN_TOL: f64 = 1e-10;

/// Independent random stream identified by `(seed, stream)`.
///
/// The same pair always reproduces the same draws. Different stream indices
/// select non-overlapping ChaCha keystreams.
#[derive(Clone, Debug)]
pub struct SeededStream {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

impl SeededStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self::with_domain(seed, 0, stream)
    }

    /// Stream within a separate key domain, so that e.g. relay-matrix draws
    /// never share a keystream with per-block draws.
    pub fn with_domain(seed: u64, domain: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&domain.to_le_bytes());
        let mut rng = ChaCha12Rng::from_seed(key);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for SeededStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Circularly-symmetric complex Gaussian sample with `E|z|^2 = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Haar-distributed `t x t` real orthogonal matrix, stored with zero
/// imaginary parts.
///
/// QR of a matrix with i.i.d. N(0,1) entries, with the columns of Q
/// sign-corrected by the diagonal of R so the result is uniform on O(t).
pub fn haar_orthogonal<R: Rng + ?Sized>(t: usize, rng: &mut R) -> ComplexMatrix {
    assert!(t >= 1, "matrix dimension must be positive");
    let gauss = DMatrix::<f64>::from_fn(t, t, |_, _| rng.sample(StandardNormal));
    let qr = gauss.qr();
    let mut q = qr.q();
    let r = qr.r();
    for (k, mut col) in q.column_iter_mut().enumerate() {
        if r[(k, k)] < 0.0 {
            col.neg_mut();
        }
    }
    q.map(|x| Complex64::new(x, 0.0))
}

/// Haar-distributed `t x t` complex unitary matrix.
pub fn haar_unitary<R: Rng + ?Sized>(t: usize, rng: &mut R) -> ComplexMatrix {
    assert!(t >= 1, "matrix dimension must be positive");
    let gauss = ComplexMatrix::from_fn(t, t, |_, _| complex_gaussian(rng, 1.0));
    let qr = gauss.qr();
    let mut q = qr.q();
    let r = qr.r();
    for (k, mut col) in q.column_iter_mut().enumerate() {
        let d = r[(k, k)];
        let norm = d.norm();
        if norm > 0.0 {
            col *= d / norm;
        }
    }
    q
}

/// Largest `|P_ij - conj(P_ji)|`.
pub fn hermitian_residual(p: &ComplexMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..p.nrows() {
        for j in 0..=i {
            worst = worst.max((p[(i, j)] - p[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Lower-triangular Cholesky factor together with the diagonal loading that
/// was needed to obtain it.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    l: ComplexMatrix,
    jitter: f64,
}

impl CholeskyFactor {
    pub fn l(&self) -> &ComplexMatrix {
        &self.l
    }

    /// Diagonal loading added before factorization (0 when none was needed).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `L w = v` for `w`.
    pub fn whiten(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "whitening",
                expected: self.dim(),
                found: v.len(),
            });
        }
        self.l
            .solve_lower_triangular(v)
            .ok_or(Error::FactorizationFailure)
    }

    /// Solves `L W = B` column by column.
    pub fn whiten_matrix(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        if b.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "whitening",
                expected: self.dim(),
                found: b.nrows(),
            });
        }
        self.l
            .solve_lower_triangular(b)
            .ok_or(Error::FactorizationFailure)
    }
}

/// Cholesky factor of a Hermitian positive semidefinite matrix.
///
/// Returns `L` with `L L^H = P + jitter I`, where `jitter` is zero when `P`
/// factors directly and otherwise the first rung of [`JITTER_LADDER`] that
/// succeeds.
pub fn cholesky_psd(p: &ComplexMatrix) -> Result<CholeskyFactor> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch {
            context: "cholesky",
            expected: p.nrows(),
            found: p.ncols(),
        });
    }
    let scale = p.iter().fold(1.0f64, |acc, x| acc.max(x.norm()));
    let asymmetry = hermitian_residual(p);
    if asymmetry > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { asymmetry });
    }
    for jitter in std::iter::once(0.0).chain(JITTER_LADDER) {
        let mut loaded = p.clone();
        if jitter > 0.0 {
            for k in 0..loaded.nrows() {
                loaded[(k, k)] += Complex64::new(jitter, 0.0);
            }
        }
        if let Some(l) = lower_cholesky(&loaded) {
            return Ok(CholeskyFactor { l, jitter });
        }
    }
    Err(Error::FactorizationFailure)
}

/// Plain Cholesky with a strict positive-pivot check; `None` when a pivot is
/// not positive. Reads only the lower triangle.
fn lower_cholesky(p: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = p.nrows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = p[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let pivot = d.sqrt();
        l[(j, j)] = Complex64::new(pivot, 0.0);
        for i in (j + 1)..n {
            let mut acc = p[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / pivot;
        }
    }
    Some(l)
}

/// `(y - m)^H P^{-1} (y - m)` for `P = L L^H`, via a triangular solve.
pub fn quad_form(y: &ComplexVector, m: &ComplexVector, factor: &CholeskyFactor) -> Result<f64> {
    if y.len() != m.len() {
        return Err(Error::DimensionMismatch {
            context: "quadratic form",
            expected: y.len(),
            found: m.len(),
        });
    }
    let w = factor.whiten(&(y - m))?;
    Ok(w.norm_squared())
}

pub(crate) fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub(crate) fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}
