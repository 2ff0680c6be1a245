//! Normalized M-PAM block codebook with Gray-coded bit labels.
//!
//! Each transmitted block is a vector of `T` complex symbols whose real and
//! imaginary parts are independently drawn from the scaled PAM alphabet
//! `K {-(M-1)/2, ..., -1/2, 1/2, ..., (M-1)/2}` with `K = sqrt(6 / (T (M^2 - 1)))`,
//! so that the average block energy is one.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::ComplexVector;

/// Default limit on the number of materialized codebook entries.
pub const DEFAULT_CODEBOOK_CAP: usize = 1 << 20;

/// Fully enumerated block codebook.
///
/// Entry `i` is obtained by reading `i` in base `M`, least significant digit
/// first, as `(re_1, im_1, re_2, im_2, ..., re_T, im_T)` level indices.
#[derive(Clone, Debug)]
pub struct Codebook {
    block_len: usize,
    order: usize,
    bits_per_axis: u32,
    scale: f64,
    entries: Vec<ComplexVector>,
    labels: Vec<u64>,
}

/// `K = sqrt(6 / (T (M^2 - 1)))`.
pub fn normalization_factor(block_len: usize, order: usize) -> f64 {
    let m = order as f64;
    (6.0 / (block_len as f64 * (m * m - 1.0))).sqrt()
}

fn gray(d: usize) -> u64 {
    (d ^ (d >> 1)) as u64
}

fn pam_level(digit: usize, order: usize, scale: f64) -> f64 {
    scale * (digit as f64 - (order as f64 - 1.0) / 2.0)
}

fn check_order(order: usize) -> Result<u32> {
    if order < 2 || !order.is_power_of_two() {
        return Err(Error::InvalidPamOrder(order));
    }
    Ok(order.trailing_zeros())
}

impl Codebook {
    pub fn new(block_len: usize, order: usize) -> Result<Self> {
        Self::with_cap(block_len, order, DEFAULT_CODEBOOK_CAP)
    }

    pub fn with_cap(block_len: usize, order: usize, cap: usize) -> Result<Self> {
        if block_len == 0 {
            return Err(Error::InvalidParameter(
                "block length must be at least 1".into(),
            ));
        }
        let bits_per_axis = check_order(order)?;
        let size = (order as u128)
            .checked_pow(2 * block_len as u32)
            .unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(Error::CodebookTooLarge { size, cap });
        }
        let size = size as usize;
        let scale = normalization_factor(block_len, order);
        let mut entries = Vec::with_capacity(size);
        let mut labels = Vec::with_capacity(size);
        for index in 0..size {
            let mut rest = index;
            let mut label = 0u64;
            let mut shift = 0u32;
            let block = ComplexVector::from_fn(block_len, |_, _| {
                let re_digit = rest % order;
                rest /= order;
                let im_digit = rest % order;
                rest /= order;
                label |= gray(re_digit) << shift;
                shift += bits_per_axis;
                label |= gray(im_digit) << shift;
                shift += bits_per_axis;
                Complex64::new(
                    pam_level(re_digit, order, scale),
                    pam_level(im_digit, order, scale),
                )
            });
            entries.push(block);
            labels.push(label);
        }
        Ok(Self {
            block_len,
            order,
            bits_per_axis,
            scale,
            entries,
            labels,
        })
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Normalization factor `K`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `2 T log2(M)`.
    pub fn bits_per_block(&self) -> u32 {
        2 * self.block_len as u32 * self.bits_per_axis
    }

    pub fn entries(&self) -> &[ComplexVector] {
        &self.entries
    }

    pub fn entry(&self, index: usize) -> Result<&ComplexVector> {
        self.entries.get(index).ok_or(Error::IndexOutOfRange {
            index,
            size: self.len(),
        })
    }

    pub fn label(&self, index: usize) -> Result<u64> {
        self.labels
            .get(index)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index,
                size: self.len(),
            })
    }

    /// Uniformly drawn codebook index.
    pub fn random_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.len())
    }

    /// Hamming distance between the bit labels of two entries.
    pub fn count_bit_errors(&self, sent: usize, decoded: usize) -> Result<u32> {
        Ok((self.label(sent)? ^ self.label(decoded)?).count_ones())
    }
}

/// Random block from the normalized PAM alphabet without materializing the
/// codebook; used where `M^{2T}` would be too large to enumerate.
pub fn random_block<R: Rng + ?Sized>(
    block_len: usize,
    order: usize,
    rng: &mut R,
) -> Result<ComplexVector> {
    check_order(order)?;
    let scale = normalization_factor(block_len, order);
    Ok(ComplexVector::from_fn(block_len, |_, _| {
        let re = rng.random_range(0..order);
        let im = rng.random_range(0..order);
        Complex64::new(pam_level(re, order, scale), pam_level(im, order, scale))
    }))
}
