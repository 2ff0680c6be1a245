//! Fast self-check suite behind `dstc-sim validate`.

use std::time::Instant;

use dstc_core::channel::{draw_channels, NoiseModel};
use dstc_core::decoder::{oracle_decode, MlDecoder};
use dstc_core::numerics::{
    cholesky_psd, complex_gaussian, haar_orthogonal, haar_unitary, hermitian_residual,
    ComplexMatrix, ComplexVector, SeededStream,
};
use dstc_core::powalloc::{grid_search, GridSpec};
use dstc_core::protocols::{
    build_statistics, impulse_response_statistics, relay_power_check, simulate_destination,
    transmit_factors, MatrixFamily, PowerAllocation, Protocol, RelayMatrixSet, RelayPowerCheck,
    SufficientStatistics,
};
use dstc_core::signal::{random_block, Codebook};
use dstc_core::snr::{snr_closed_form, snr_monte_carlo};
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ValidateOptions {
    /// Perturbs every built covariance so that it is no longer Hermitian.
    pub inject_fault: bool,
}

type CheckFn = fn(&ValidateOptions) -> Result<String, String>;

const CHECKS: [(&str, CheckFn); 9] = [
    ("haar-orthogonality", haar_orthogonality),
    ("codebook-energy", codebook_energy),
    ("cholesky-reconstruction", cholesky_reconstruction),
    ("covariance-hermitian", covariance_hermitian),
    ("impulse-oracle", impulse_oracle),
    ("moment-monte-carlo", moment_monte_carlo),
    ("decoder-oracle", decoder_oracle),
    ("snr-closed-vs-monte-carlo", snr_agreement),
    ("ejhs-equal-split", ejhs_equal_split),
];

pub fn run_checks(options: &ValidateOptions) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|&(name, check)| {
            let start = Instant::now();
            let result = check(options);
            let seconds = start.elapsed().as_secs_f64();
            let (passed, detail) = match result {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome {
                name,
                passed,
                detail,
                seconds,
            }
        })
        .collect()
}

pub fn render_table(outcomes: &[CheckOutcome]) -> String {
    let width = outcomes
        .iter()
        .map(|o| o.name.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut out = format!("{:<width$}  result  time(s)  detail\n", "check");
    for o in outcomes {
        out.push_str(&format!(
            "{:<width$}  {:<6}  {:>7.2}  {}\n",
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.seconds,
            o.detail
        ));
    }
    out
}

/// Radiated relay power against the allocated budget, for information.
pub fn relay_power_table() -> Result<String, dstc_core::Error> {
    let alloc = PowerAllocation::equal_split(100.0, 0.1)?;
    let mut out = String::from("protocol  phase  layer  measured/budget\n");
    for protocol in Protocol::ALL {
        let checks: Vec<RelayPowerCheck> = relay_power_check(protocol, &alloc, 5, 5, 2000, 7)?;
        for c in checks {
            out.push_str(&format!(
                "{:<8}  {:>5}  {:>5}  {:>15.3}\n",
                protocol.name(),
                c.phase,
                c.layer,
                c.ratio()
            ));
        }
    }
    Ok(out)
}

fn fixture(
    n: usize,
    t: usize,
    seed: u64,
) -> (dstc_core::channel::ChannelRealization, RelayMatrixSet) {
    let mut rng = SeededStream::new(seed, 0);
    let ch = draw_channels(n, 0.3, &mut rng);
    let mats = RelayMatrixSet::draw(n, t, MatrixFamily::RealOrthogonal, &mut rng);
    (ch, mats)
}

fn statistics(
    protocol: Protocol,
    ch: &dstc_core::channel::ChannelRealization,
    mats: &RelayMatrixSet,
    alloc: &PowerAllocation,
    options: &ValidateOptions,
) -> Result<SufficientStatistics, String> {
    let f = transmit_factors(protocol, alloc, mats.relays(), mats.block_len())
        .map_err(|e| e.to_string())?;
    let mut stats = build_statistics(ch, mats, &f).map_err(|e| e.to_string())?;
    if options.inject_fault {
        let last = stats.dim() - 1;
        stats.covariance[(0, last)] += Complex64::new(0.25, 0.0);
    }
    Ok(stats)
}

fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn haar_orthogonality(_: &ValidateOptions) -> Result<String, String> {
    let mut rng = SeededStream::new(101, 0);
    let mut worst = 0.0f64;
    for t in 1..=8 {
        for _ in 0..20 {
            for a in [haar_orthogonal(t, &mut rng), haar_unitary(t, &mut rng)] {
                let dev = max_abs(&(a.adjoint() * &a - ComplexMatrix::identity(t, t)));
                worst = worst.max(dev);
            }
        }
    }
    let detail = format!("max |A^H A - I| = {worst:.1e}");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn codebook_energy(_: &ValidateOptions) -> Result<String, String> {
    let mut worst = 0.0f64;
    for (t, m) in [(1, 2), (2, 2), (5, 2), (2, 4), (1, 16)] {
        let cb = Codebook::new(t, m).map_err(|e| e.to_string())?;
        let mean = cb.entries().iter().map(|s| s.norm_squared()).sum::<f64>() / cb.len() as f64;
        worst = worst.max((mean - 1.0).abs());
    }
    let detail = format!("max |E||s||^2 - 1| = {worst:.1e}");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cholesky_reconstruction(_: &ValidateOptions) -> Result<String, String> {
    let mut rng = SeededStream::new(102, 0);
    let b = ComplexMatrix::from_fn(6, 6, |_, _| complex_gaussian(&mut rng, 1.0));
    let p = &b * b.adjoint() + ComplexMatrix::identity(6, 6);
    let p = (&p + p.adjoint()) * Complex64::new(0.5, 0.0);
    let f = cholesky_psd(&p).map_err(|e| e.to_string())?;
    let err = max_abs(&(f.l() * f.l().adjoint() - &p));
    let detail = format!("max |L L^H - P| = {err:.1e}");
    if err <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn covariance_hermitian(options: &ValidateOptions) -> Result<String, String> {
    let (ch, mats) = fixture(2, 2, 103);
    let alloc = PowerAllocation::new(4.0, 3.0, 5.0, 0.3).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for protocol in Protocol::ALL {
        let stats = statistics(protocol, &ch, &mats, &alloc, options)?;
        let r = hermitian_residual(&stats.covariance);
        if r > 1e-10 {
            return Err(format!("{protocol}: P_y asymmetry {r:.1e}"));
        }
        worst = worst.max(r);
    }
    Ok(format!("max asymmetry {worst:.1e}"))
}

fn impulse_oracle(options: &ValidateOptions) -> Result<String, String> {
    let alloc = PowerAllocation::new(4.0, 3.0, 5.0, 0.3).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (n, t, seed) in [(2, 2, 104), (3, 3, 105)] {
        let (ch, mats) = fixture(n, t, seed);
        for protocol in Protocol::ALL {
            let f = transmit_factors(protocol, &alloc, n, t).map_err(|e| e.to_string())?;
            let stats = statistics(protocol, &ch, &mats, &alloc, options)?;
            let (g, p) = impulse_response_statistics(&ch, &mats, &f).map_err(|e| e.to_string())?;
            let dg = max_abs(&(&stats.gain - g)) / max_abs(&stats.gain).max(1.0);
            let dp = max_abs(&(&stats.covariance - &p)) / max_abs(&p).max(1.0);
            if dg.max(dp) > 1e-9 {
                return Err(format!(
                    "{protocol} N={n} T={t}: relative deviation G {dg:.1e}, P_y {dp:.1e}"
                ));
            }
            worst = worst.max(dg.max(dp));
        }
    }
    Ok(format!("max relative deviation {worst:.1e}"))
}

fn moment_monte_carlo(options: &ValidateOptions) -> Result<String, String> {
    const DRAWS: usize = 10_000;
    const Z_LIMIT: f64 = 5.5;
    let (n, t) = (2, 2);
    let (ch, mats) = fixture(n, t, 106);
    let alloc = PowerAllocation::new(6.0, 4.0, 8.0, 0.3).map_err(|e| e.to_string())?;
    let s = random_block(t, 2, &mut SeededStream::new(106, 1)).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for protocol in Protocol::ALL {
        let f = transmit_factors(protocol, &alloc, n, t).map_err(|e| e.to_string())?;
        let stats = statistics(protocol, &ch, &mats, &alloc, options)?;
        let dim = stats.dim();
        let truth = stats.mean(&s);
        let mut mean = ComplexVector::zeros(dim);
        let mut second = ComplexMatrix::zeros(dim, dim);
        for k in 0..DRAWS {
            let noise = NoiseModel::draw(n, t, &mut SeededStream::new(107, k as u64));
            let y = simulate_destination(&ch, &mats, &f, &s, &noise).map_err(|e| e.to_string())?;
            let d = &y - &truth;
            mean += &y;
            second += &d * d.adjoint();
        }
        let inv = Complex64::new(1.0 / DRAWS as f64, 0.0);
        mean *= inv;
        second *= inv;
        let p = &stats.covariance;
        for i in 0..dim {
            let z = (mean[i] - truth[i]).norm() / (p[(i, i)].re.abs() / DRAWS as f64).sqrt();
            worst = worst.max(z);
            for j in 0..dim {
                let se = (p[(i, i)].re.abs() * p[(j, j)].re.abs() / DRAWS as f64).sqrt();
                worst = worst.max((second[(i, j)] - p[(i, j)]).norm() / se);
            }
        }
        if worst >= Z_LIMIT {
            return Err(format!(
                "{protocol}: deviation of {worst:.1} standard errors"
            ));
        }
    }
    Ok(format!(
        "max deviation {worst:.2} standard errors over {DRAWS} draws"
    ))
}

fn decoder_oracle(options: &ValidateOptions) -> Result<String, String> {
    let (n, t) = (2, 2);
    let codebook = Codebook::new(t, 2).map_err(|e| e.to_string())?;
    let alloc = PowerAllocation::equal_split(20.0, 0.3).map_err(|e| e.to_string())?;
    let mut agree = 0;
    for protocol in Protocol::ALL {
        let f = transmit_factors(protocol, &alloc, n, t).map_err(|e| e.to_string())?;
        for k in 0..100u64 {
            let mut rng = SeededStream::new(108, k);
            let ch = draw_channels(n, alloc.sigma2_sq, &mut rng);
            let mats = RelayMatrixSet::draw(n, t, MatrixFamily::RealOrthogonal, &mut rng);
            let stats = statistics(protocol, &ch, &mats, &alloc, options)?;
            let sent = codebook.random_index(&mut rng);
            let noise = NoiseModel::draw(n, t, &mut rng);
            let s = codebook.entry(sent).map_err(|e| e.to_string())?;
            let y = simulate_destination(&ch, &mats, &f, s, &noise).map_err(|e| e.to_string())?;
            let ml = MlDecoder::new(&stats, &codebook)
                .and_then(|d| d.decode(&y))
                .map_err(|e| format!("{protocol}: {e}"))?;
            let oracle =
                oracle_decode(&y, &stats, &codebook).map_err(|e| format!("{protocol}: {e}"))?;
            if ml != oracle {
                return Err(format!(
                    "{protocol} instance {k}: ML {ml} vs oracle {oracle}"
                ));
            }
            agree += 1;
        }
    }
    Ok(format!("{agree}/{agree} decisions agree"))
}

fn snr_agreement(_: &ValidateOptions) -> Result<String, String> {
    let alloc = PowerAllocation::equal_split(10.0, 0.1).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for protocol in Protocol::ALL {
        let cf = snr_closed_form(protocol, &alloc, 5);
        let mc = snr_monte_carlo(protocol, &alloc, 5, 5, 10_000, 109).map_err(|e| e.to_string())?;
        let dev = (mc / cf - 1.0).abs();
        if dev > 0.05 {
            return Err(format!(
                "{protocol}: closed form {cf:.4}, Monte-Carlo {mc:.4}"
            ));
        }
        worst = worst.max(dev);
    }
    Ok(format!("max relative deviation {worst:.3}"))
}

fn ejhs_equal_split(_: &ValidateOptions) -> Result<String, String> {
    let opt =
        grid_search(Protocol::Ejhs, 10.0, 0.1, 5, &GridSpec::COARSE).map_err(|e| e.to_string())?;
    let fr = opt.fractions();
    let detail = format!("fractions ({:.2}, {:.2}, {:.2})", fr[0], fr[1], fr[2]);
    if fr.iter().all(|f| (f - 1.0 / 3.0).abs() <= 0.01 + 1e-12) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes_structural_checks() {
        let options = ValidateOptions::default();
        for check in [covariance_hermitian, impulse_oracle, codebook_energy] {
            assert!(check(&options).is_ok());
        }
    }

    #[test]
    fn injected_fault_is_caught_by_name() {
        let options = ValidateOptions { inject_fault: true };
        assert!(covariance_hermitian(&options).is_err());
        assert!(impulse_oracle(&options).is_err());
        assert!(decoder_oracle(&options).is_err());
    }
}
