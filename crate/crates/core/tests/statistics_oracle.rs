//! The closed-form statistics must agree with the impulse-response
//! reconstruction from the literal propagation path.

use dstc_core::channel::{draw_channels, ChannelRealization, NoiseModel};
use dstc_core::numerics::{
    complex_gaussian, hermitian_residual, ComplexMatrix, ComplexVector, SeededStream,
};
use dstc_core::protocols::{
    build_statistics, impulse_response_statistics, propagate, simulate_destination,
    transmit_factors, MatrixFamily, PowerAllocation, Protocol, RelayMatrixSet,
    SufficientStatistics, TransmitFactors,
};
use num_complex::Complex64;

fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn impulse_statistics(
    ch: &ChannelRealization,
    mats: &RelayMatrixSet,
    f: &TransmitFactors,
) -> (ComplexMatrix, ComplexMatrix) {
    impulse_response_statistics(ch, mats, f).unwrap()
}

fn gaussian_matrices(n: usize, t: usize, rng: &mut SeededStream) -> RelayMatrixSet {
    let mut draw = || ComplexMatrix::from_fn(t, t, |_, _| complex_gaussian(rng, 1.0));
    let layer1 = (0..n).map(|_| draw()).collect();
    let layer2 = (0..n).map(|_| draw()).collect();
    let layer2_second = (0..n).map(|_| draw()).collect();
    RelayMatrixSet {
        family: MatrixFamily::ComplexUnitary,
        layer1,
        layer2,
        layer2_second,
    }
}

fn check(stats: &SufficientStatistics, g: &ComplexMatrix, p: &ComplexMatrix, label: &str) {
    let scale = max_abs(p).max(1.0);
    assert!(
        max_abs(&(&stats.gain - g)) <= 1e-10 * max_abs(g).max(1.0),
        "{label}: G"
    );
    assert!(
        max_abs(&(&stats.covariance - p)) <= 1e-10 * scale,
        "{label}: P_y"
    );
}

#[test]
fn orthogonal_relays_match_impulse_oracle() {
    let alloc = PowerAllocation::new(3.0, 5.0, 7.0, 0.3).unwrap();
    for (seed, n, t) in [(1, 1, 1), (2, 2, 2), (3, 3, 2), (4, 2, 4)] {
        for family in [MatrixFamily::RealOrthogonal, MatrixFamily::ComplexUnitary] {
            let mut rng = SeededStream::new(seed, 0);
            let ch = draw_channels(n, alloc.sigma2_sq, &mut rng);
            let mats = RelayMatrixSet::draw(n, t, family, &mut rng);
            for protocol in Protocol::ALL {
                let f = transmit_factors(protocol, &alloc, n, t).unwrap();
                let stats = build_statistics(&ch, &mats, &f).unwrap();
                let (g, p) = impulse_statistics(&ch, &mats, &f);
                check(
                    &stats,
                    &g,
                    &p,
                    &format!("{protocol} n={n} t={t} {family:?}"),
                );
            }
        }
    }
}

#[test]
fn arbitrary_relay_matrices_match_impulse_oracle() {
    // no orthogonality shortcuts anywhere in the closed forms
    let alloc = PowerAllocation::new(2.0, 1.0, 4.0, 0.6).unwrap();
    let mut rng = SeededStream::new(77, 0);
    let ch = draw_channels(3, alloc.sigma2_sq, &mut rng);
    let mats = gaussian_matrices(3, 3, &mut rng);
    for protocol in Protocol::ALL {
        let f = transmit_factors(protocol, &alloc, 3, 3).unwrap();
        let stats = build_statistics(&ch, &mats, &f).unwrap();
        let (g, p) = impulse_statistics(&ch, &mats, &f);
        check(&stats, &g, &p, &protocol.to_string());
    }
}

#[test]
fn zero_channels_leave_destination_noise_only() {
    let alloc = PowerAllocation::new(1.0, 1.0, 1.0, 0.5).unwrap();
    let ch = ChannelRealization::zero(2, 0.5);
    let mats = RelayMatrixSet::identity(2, 3);
    for protocol in Protocol::ALL {
        let f = transmit_factors(protocol, &alloc, 2, 3).unwrap();
        let stats = build_statistics(&ch, &mats, &f).unwrap();
        let dim = protocol.observation_len(3);
        assert_eq!(max_abs(&stats.gain), 0.0);
        assert!(max_abs(&(&stats.covariance - ComplexMatrix::identity(dim, dim))) == 0.0);
    }
}

#[test]
fn statistics_are_linear_and_hermitian() {
    let alloc = PowerAllocation::new(6.0, 2.0, 9.0, 0.15).unwrap();
    let mut rng = SeededStream::new(5, 0);
    let ch = draw_channels(4, alloc.sigma2_sq, &mut rng);
    let mats = RelayMatrixSet::draw(4, 3, MatrixFamily::RealOrthogonal, &mut rng);
    let s = ComplexVector::from_fn(3, |_, _| complex_gaussian(&mut rng, 1.0));
    let alpha = Complex64::new(-0.7, 1.3);
    for protocol in Protocol::ALL {
        let f = transmit_factors(protocol, &alloc, 4, 3).unwrap();
        let a = build_statistics(&ch, &mats, &f).unwrap();
        let b = build_statistics(&ch, &mats, &f).unwrap();
        assert_eq!(a.covariance, b.covariance);
        assert!(hermitian_residual(&a.covariance) <= 1e-10);
        let lhs = a.mean(&(&s * alpha));
        let rhs = a.mean(&s) * alpha;
        assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + a.mean(&s).norm()));
        // positive definite: destination noise alone gives eigenvalues >= 1
        let eig = a.covariance.clone().symmetric_eigenvalues();
        assert!(eig.min() >= 1.0 - 1e-9, "{protocol}");
    }
}

#[test]
fn rsc_with_direct_weight_only_is_a_plain_relay() {
    // gamma1 = 1, gamma2 = 0: layer 2 forwards c3 A_2 r_2(1)
    let f = TransmitFactors::Rsc {
        c1: 1.0,
        c2: 0.5,
        c3: 0.25,
        gamma1: 1.0,
        gamma2: 0.0,
    };
    let h = Complex64::new(0.8, -0.6);
    let mut ch = ChannelRealization::constant(1, 0.5, h);
    ch.h_s2[0] = Complex64::new(0.3, 0.1);
    ch.h_2d[0] = Complex64::new(-0.5, 0.9);
    let mats = RelayMatrixSet::identity(1, 1);
    let stats = build_statistics(&ch, &mats, &f).unwrap();
    let gz = 0.25 * ch.h_2d[0] * ch.h_s2[0];
    let pz = 1.0 + 0.25 * 0.25 * ch.h_2d[0].norm_sqr();
    assert!((stats.gain[(1, 0)] - gz).norm() < 1e-14);
    assert!((stats.p_z().unwrap()[(0, 0)].re - pz).abs() < 1e-14);
    assert!(stats.p_xz().unwrap()[(0, 0)].norm() < 1e-14);
}

#[test]
fn rmckc_source_link_weighting_is_quadratic() {
    let alloc = PowerAllocation::new(2.0, 3.0, 4.0, 0.4).unwrap();
    let mut rng = SeededStream::new(8, 0);
    let ch = draw_channels(3, alloc.sigma2_sq, &mut rng);
    let mats = RelayMatrixSet::draw(3, 2, MatrixFamily::RealOrthogonal, &mut rng);
    let f = transmit_factors(Protocol::Rmckc, &alloc, 3, 2).unwrap();
    let s = ComplexVector::from_fn(2, |_, _| complex_gaussian(&mut rng, 1.0));

    let contribution = |ch: &ChannelRealization, j: usize| {
        let mut only = ch.clone();
        for i in 0..3 {
            if i != j {
                only.h_s1[i] = Complex64::new(0.0, 0.0);
            }
        }
        let stats = build_statistics(&only, &mats, &f).unwrap();
        stats.mean(&s).rows(0, 2).into_owned()
    };
    let alpha = 1.7;
    let mut scaled = ch.clone();
    scaled.h_s1[1] *= alpha;
    let base = contribution(&ch, 1);
    let grown = contribution(&scaled, 1);
    assert!((grown - base * Complex64::new(alpha * alpha, 0.0)).norm() < 1e-12);
}

#[test]
fn mjhs_repeats_identical_relay_transmissions() {
    let alloc = PowerAllocation::new(2.0, 3.0, 4.0, 0.4).unwrap();
    let mut rng = SeededStream::new(12, 0);
    let ch = draw_channels(3, alloc.sigma2_sq, &mut rng);
    let mats = RelayMatrixSet::draw(3, 2, MatrixFamily::RealOrthogonal, &mut rng);
    let f = transmit_factors(Protocol::Mjhs, &alloc, 3, 2).unwrap();
    let s = ComplexVector::from_fn(2, |_, _| complex_gaussian(&mut rng, 1.0));
    let noise = NoiseModel::draw(3, 2, &mut rng);
    let trace = propagate(&ch, &mats, &f, &s, &noise).unwrap();
    for layer in [1, 2] {
        for relay in 0..3 {
            let pick = |phase| {
                trace
                    .transmissions
                    .iter()
                    .find(|tx| tx.phase == phase && tx.layer == layer && tx.relay == relay)
                    .unwrap()
                    .signal
                    .clone()
            };
            assert_eq!(pick(2), pick(3));
        }
    }
    // with destination noise removed the two observation halves coincide
    let mut quiet = noise.clone();
    quiet.dest_phase2.fill(Complex64::new(0.0, 0.0));
    quiet.dest_phase3.fill(Complex64::new(0.0, 0.0));
    let y = simulate_destination(&ch, &mats, &f, &s, &quiet).unwrap();
    assert!((y.rows(0, 2) - y.rows(2, 2)).norm() < 1e-14);
}
