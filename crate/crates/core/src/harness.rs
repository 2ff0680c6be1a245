//! Monte-Carlo bit-error-rate measurement.
//!
//! Every block draws from its own stream keyed by (base seed, power-point
//! index, block index), so results do not depend on scheduling. The power
//! index is the position in the `P_dB` list; protocols and weak-link
//! variances evaluated at the same power therefore see common random
//! numbers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_channels, NoiseModel};
use crate::decoder::MlDecoder;
use crate::error::{Error, Result};
use crate::numerics::SeededStream;
use crate::powalloc::{db_to_linear, grid_search, GridSpec};
use crate::protocols::{
    build_statistics, simulate_destination, transmit_factors, MatrixFamily, PowerAllocation,
    Protocol, RelayMatrixSet,
};
use crate::signal::{Codebook, DEFAULT_CODEBOOK_CAP};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Relative tolerance on `p1 + p2 + p3 = P` for explicit allocations.
pub const EXPLICIT_SUM_TOL: f64 = 1e-6;

const BLOCK_DOMAIN: u64 = 0x626c_6f63_6b;
const MATRIX_DOMAIN: u64 = 0x6d61_7472_6978;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationSource {
    /// Closed-form SNR maximized on the simplex grid; EJHS uses its analytic
    /// equal split.
    #[default]
    GridSearch,
    EqualSplit,
    /// Linear powers given per `P_dB` entry in `p1`, `p2`, `p3`.
    Explicit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixRedraw {
    #[default]
    PerRun,
    PerBlock,
}

fn default_grid() -> f64 {
    GridSpec::FINE.delta
}

/// BER sweep description, read from flat JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: OneOrMany<Protocol>,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub sigma2sq: OneOrMany<f64>,
    #[serde(rename = "P_dB")]
    pub p_db: Vec<f64>,
    pub blocks: usize,
    pub seed: u64,
    #[serde(default)]
    pub allocation: AllocationSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p3: Option<Vec<f64>>,
    #[serde(default = "default_grid")]
    pub grid: f64,
    #[serde(default)]
    pub matrix_family: MatrixFamily,
    #[serde(default)]
    pub matrix_redraw: MatrixRedraw,
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn protocols(&self) -> Vec<Protocol> {
        self.protocol.to_vec()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.sigma2sq.to_vec()
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::uniform(self.grid).map_err(|e| invalid("grid", e.to_string()))
    }

    /// Checks every field; the error names the first offending one.
    pub fn validate(&self) -> Result<()> {
        if self.protocols().is_empty() {
            return Err(invalid("protocol", "at least one protocol is required"));
        }
        if self.t == 0 {
            return Err(invalid("T", "block length must be at least 1"));
        }
        if self.n == 0 {
            return Err(invalid("N", "relay count must be at least 1"));
        }
        if self.m < 2 || !self.m.is_power_of_two() {
            return Err(invalid(
                "M",
                format!("PAM order must be a power of two >= 2, got {}", self.m),
            ));
        }
        let size = (self.m as u128)
            .checked_pow(2 * self.t as u32)
            .unwrap_or(u128::MAX);
        if size > DEFAULT_CODEBOOK_CAP as u128 {
            return Err(invalid(
                "T",
                format!(
                    "codebook of M^(2T) = {size} entries exceeds the cap of {DEFAULT_CODEBOOK_CAP}"
                ),
            ));
        }
        let variances = self.variances();
        if variances.is_empty() {
            return Err(invalid("sigma2sq", "at least one value is required"));
        }
        if let Some(v) = variances.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid("sigma2sq", format!("must lie in [0, 1], got {v}")));
        }
        if self.p_db.is_empty() {
            return Err(invalid("P_dB", "at least one power point is required"));
        }
        if let Some(v) = self.p_db.iter().find(|v| !v.is_finite()) {
            return Err(invalid("P_dB", format!("must be finite, got {v}")));
        }
        if self.blocks == 0 {
            return Err(invalid("blocks", "must be at least 1"));
        }
        self.grid_spec()?;
        let given = [("p1", &self.p1), ("p2", &self.p2), ("p3", &self.p3)];
        match self.allocation {
            AllocationSource::Explicit => {
                for (name, list) in given {
                    let list = list
                        .as_ref()
                        .ok_or_else(|| invalid(name, "required when allocation is explicit"))?;
                    if list.len() != self.p_db.len() {
                        return Err(invalid(
                            name,
                            format!(
                                "has {} entries but P_dB has {}",
                                list.len(),
                                self.p_db.len()
                            ),
                        ));
                    }
                    if let Some(v) = list.iter().find(|v| !v.is_finite() || **v < 0.0) {
                        return Err(invalid(
                            name,
                            format!("powers must be finite and non-negative, got {v}"),
                        ));
                    }
                }
                for (k, &db) in self.p_db.iter().enumerate() {
                    let total = db_to_linear(db);
                    let sum = self.explicit_triple(k).iter().sum::<f64>();
                    if (sum - total).abs() > EXPLICIT_SUM_TOL * total {
                        return Err(invalid(
                            "p1+p2+p3",
                            format!("sums to {sum} at P_dB[{k}] = {db}, expected P = {total}"),
                        ));
                    }
                }
            }
            _ => {
                if let Some((name, _)) = given.iter().find(|(_, v)| v.is_some()) {
                    return Err(invalid(name, "only allowed when allocation is explicit"));
                }
            }
        }
        Ok(())
    }

    fn explicit_triple(&self, k: usize) -> [f64; 3] {
        let get = |v: &Option<Vec<f64>>| v.as_ref().map_or(0.0, |v| v[k]);
        [get(&self.p1), get(&self.p2), get(&self.p3)]
    }

    /// Allocation used for `protocol` at power point `k`.
    pub fn resolve_allocation(
        &self,
        protocol: Protocol,
        sigma2_sq: f64,
        k: usize,
    ) -> Result<PowerAllocation> {
        let total = db_to_linear(self.p_db[k]);
        match self.allocation {
            AllocationSource::Explicit => {
                let [p1, p2, p3] = self.explicit_triple(k);
                PowerAllocation::new(p1, p2, p3, sigma2_sq)
            }
            AllocationSource::EqualSplit => PowerAllocation::equal_split(total, sigma2_sq),
            AllocationSource::GridSearch if protocol == Protocol::Ejhs => {
                PowerAllocation::equal_split(total, sigma2_sq)
            }
            AllocationSource::GridSearch => {
                grid_search(protocol, total, sigma2_sq, self.n, &self.grid_spec()?)?
                    .allocation(sigma2_sq)
            }
        }
    }
}

/// Independent stream for one block; injective in `(point, block)` for
/// indices below `2^32`.
pub fn seed_for_block(base: u64, point: usize, block: usize) -> SeededStream {
    assert!(
        point <= u32::MAX as usize && block <= u32::MAX as usize,
        "index exceeds 32 bits"
    );
    SeededStream::with_domain(base, BLOCK_DOMAIN, ((point as u64) << 32) | block as u64)
}

/// Stream for relay matrices; `block` is ignored under the per-run policy.
fn matrix_stream(base: u64, policy: MatrixRedraw, point: usize, block: usize) -> SeededStream {
    match policy {
        MatrixRedraw::PerRun => SeededStream::with_domain(base, MATRIX_DOMAIN, 0),
        MatrixRedraw::PerBlock => SeededStream::with_domain(
            base,
            MATRIX_DOMAIN,
            1 + (((point as u64) << 32) | block as u64),
        ),
    }
}

/// Wilson score interval for `errors` successes out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if errors == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let high = if errors == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (low, high)
}

/// Outcome at one (protocol, weak-link variance, power) point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BerPoint {
    pub protocol: Protocol,
    pub sigma2_sq: f64,
    pub p_db: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub blocks: usize,
    pub bit_errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Average received signal energy over average received noise energy.
    pub empirical_snr: f64,
    /// Blocks whose covariance needed diagonal loading.
    pub jitter_events: u64,
}

impl BerPoint {
    pub fn ci_half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

#[derive(Clone, Copy, Default)]
struct BlockOutcome {
    errors: u64,
    signal: f64,
    noise: f64,
    jittered: bool,
}

/// Runs every (protocol, variance, power) point of `config`.
pub fn run_ber(config: &RunConfig) -> Result<Vec<BerPoint>> {
    config.validate()?;
    let codebook = Codebook::new(config.t, config.m)?;
    let per_run = match config.matrix_redraw {
        MatrixRedraw::PerRun => Some(RelayMatrixSet::draw(
            config.n,
            config.t,
            config.matrix_family,
            &mut matrix_stream(config.seed, MatrixRedraw::PerRun, 0, 0),
        )),
        MatrixRedraw::PerBlock => None,
    };
    let mut out = Vec::new();
    for protocol in config.protocols() {
        for sigma2_sq in config.variances() {
            for point in 0..config.p_db.len() {
                let alloc = config.resolve_allocation(protocol, sigma2_sq, point)?;
                out.push(run_point(
                    config,
                    &codebook,
                    per_run.as_ref(),
                    protocol,
                    &alloc,
                    point,
                )?);
            }
        }
    }
    Ok(out)
}

fn run_point(
    config: &RunConfig,
    codebook: &Codebook,
    per_run: Option<&RelayMatrixSet>,
    protocol: Protocol,
    alloc: &PowerAllocation,
    point: usize,
) -> Result<BerPoint> {
    let (n, t) = (config.n, config.t);
    let factors = transmit_factors(protocol, alloc, n, t)?;
    let outcomes = (0..config.blocks)
        .into_par_iter()
        .map(|block| {
            let run = || -> Result<BlockOutcome> {
                let mut rng = seed_for_block(config.seed, point, block);
                let ch = draw_channels(n, alloc.sigma2_sq, &mut rng);
                let sent = codebook.random_index(&mut rng);
                let noise = NoiseModel::draw(n, t, &mut rng);
                let drawn;
                let mats = match per_run {
                    Some(m) => m,
                    None => {
                        let mut mrng =
                            matrix_stream(config.seed, MatrixRedraw::PerBlock, point, block);
                        drawn = RelayMatrixSet::draw(n, t, config.matrix_family, &mut mrng);
                        &drawn
                    }
                };
                let s = codebook.entry(sent)?;
                let stats = build_statistics(&ch, mats, &factors)?;
                let y = simulate_destination(&ch, mats, &factors, s, &noise)?;
                let decoder = MlDecoder::new(&stats, codebook)?;
                let decoded = decoder.decode(&y)?;
                let mean = stats.mean(s);
                Ok(BlockOutcome {
                    errors: codebook.count_bit_errors(sent, decoded)? as u64,
                    signal: mean.norm_squared(),
                    noise: (&y - &mean).norm_squared(),
                    jittered: decoder.jitter() > 0.0,
                })
            };
            run().map_err(|e| Error::Block {
                point,
                block,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<BlockOutcome>>>()?;

    let mut total = BlockOutcome::default();
    let mut jitter_events = 0u64;
    for o in &outcomes {
        total.errors += o.errors;
        total.signal += o.signal;
        total.noise += o.noise;
        jitter_events += o.jittered as u64;
    }
    let bits = config.blocks as u64 * codebook.bits_per_block() as u64;
    let (ci_low, ci_high) = wilson_interval(total.errors, bits, Z_95);
    Ok(BerPoint {
        protocol,
        sigma2_sq: alloc.sigma2_sq,
        p_db: config.p_db[point],
        p1: alloc.p1,
        p2: alloc.p2,
        p3: alloc.p3,
        blocks: config.blocks,
        bit_errors: total.errors,
        bits,
        ber: total.errors as f64 / bits as f64,
        ci_low,
        ci_high,
        empirical_snr: if total.noise > 0.0 {
            total.signal / total.noise
        } else {
            0.0
        },
        jitter_events,
    })
}
