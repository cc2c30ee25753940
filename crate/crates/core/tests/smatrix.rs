use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use wqed::fock::prob_two;
use wqed::pulses::Pulse;
use wqed::quadrature::{integrate_with, QuadratureSpec};
use wqed::smatrix::*;
use wqed::{GaussianPacket, SystemParams, C64};

fn pkt() -> GaussianPacket {
    GaussianPacket::new(10.0, 0.1, 1.0).unwrap()
}

fn tight() -> QuadratureSpec {
    QuadratureSpec::default().with_tolerances(1e-11, 1e-15)
}

/// Two-photon bound cluster by brute-force Fourier transform of its position
/// form `-phi(x2)^2 exp(-lambda (x2 - x1))` on `x1 < x2`, symmetrized.
fn k2_by_fourier(p1: f64, p2: f64, pkt: &GaussianPacket, p: &SystemParams) -> C64 {
    let pulse = Pulse::new(*p, *pkt);
    let lam = pulse.lambda();
    let (q1, q2) = (p1 - pkt.k0, p2 - pkt.k0);
    let (lo, hi) = pulse.support(12.0);
    let reach = 60.0 / p.gamma();
    let q = tight();
    let outer = integrate_with(
        |x2| {
            let inner = integrate_with(
                |x1| {
                    let d = (-lam * (x2 - x1)).exp();
                    (C64::new(0.0, -(q1 * x1 + q2 * x2)).exp() + C64::new(0.0, -(q2 * x1 + q1 * x2)).exp()) * d
                },
                x2 - reach,
                x2,
                &pulse.cluster_breaks_below(x2, x2 - reach),
                &q,
            )
            .unwrap()
            .value;
            let f = pulse.phi(x2);
            -(f * f) * inner
        },
        lo,
        hi,
        &pulse.breakpoints(12.0),
        &QuadratureSpec::default().with_tolerances(1e-10, 1e-15),
    )
    .unwrap();
    outer.value / (2.0 * std::f64::consts::PI)
}

#[test]
fn two_photon_cluster_matches_fourier_transform() {
    let mut rng = StdRng::seed_from_u64(11);
    for p in [SystemParams::lossless(0.4), SystemParams::new(10.0, 0.3, 0.1).unwrap()] {
        let k = even_kernel(2, &pkt(), &p).unwrap();
        let samples: Vec<(f64, f64)> = (0..25).map(|_| (rng.random_range(9.7..10.3), rng.random_range(9.7..10.3))).collect();
        let analytic: Vec<C64> = samples.iter().map(|&(a, b)| k.k2(a, b)).collect();
        let scale = analytic.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (&(a, b), an) in samples.iter().zip(&analytic) {
            let num = k2_by_fourier(a, b, &pkt(), &p);
            assert!((num - an).norm() <= 1e-6 * an.norm() + 1e-9 * scale, "({a}, {b}): {num} vs {an}");
        }
    }
}

#[test]
fn decoupled_kernel_is_the_packet_product() {
    let p = SystemParams::lossless(0.0);
    for n in 1..=3 {
        let k = even_kernel(n, &pkt(), &p).unwrap();
        let ps: Vec<f64> = (0..n).map(|i| 9.9 + 0.07 * i as f64).collect();
        let prod: f64 = ps.iter().map(|&x| pkt().alpha(x)).product();
        assert!((k.eval(&ps).unwrap() - prod).norm() < 1e-15);
    }
    assert!(even_kernel(4, &pkt(), &p).is_err());
}

#[test]
fn even_space_unitarity() {
    for v in [0.1, 0.3, 0.5, 0.8] {
        let p = SystemParams::lossless(v);
        for n in 1..=3 {
            let est = even_space_norm(n, &pkt(), &p, &QuadratureSpec::default()).unwrap();
            assert!((est.value - 1.0).abs() < 1e-5, "n={n}, V={v}: {}", est.value);
        }
    }
}

#[test]
fn two_photon_probabilities_from_momentum_space() {
    // Integrate |Psi_sector|^2 directly in momentum space and compare with the
    // position-space evaluation. The bound part has Lorentzian tails, so the
    // window is much wider than the packet.
    let p = SystemParams::lossless(0.4);
    let amps = combine_sectors(2, &pkt(), &p).unwrap();
    let (lo, hi) = (pkt().k0 - 10.0, pkt().k0 + 10.0);
    let q = QuadratureSpec::default().with_tolerances(1e-9, 1e-13);
    let breaks = [p.epsilon - 1.0, p.epsilon - 0.2, p.epsilon, p.epsilon + 0.2, p.epsilon + 1.0];
    let direct = prob_two(&pkt(), &p, &QuadratureSpec::default().with_tolerances(1e-10, 1e-14)).unwrap();
    for (a, entry) in amps.iter().zip(&direct.sectors) {
        let total = integrate_with(
            |m1| {
                integrate_with(|m2| a.eval(&[m1, m2]).unwrap().norm_sqr(), lo, hi, &breaks, &q)
                    .unwrap()
                    .value
            },
            lo,
            hi,
            &breaks,
            &q,
        )
        .unwrap()
        .value
            * a.sector.multiplicity();
        assert!((total - entry.total).abs() < 1e-6, "{}: {total} vs {}", a.sector, entry.total);
    }
}

#[test]
fn sector_amplitudes_are_symmetric_within_letters() {
    let p = SystemParams::new(10.0, 0.45, 0.05).unwrap();
    let mut rng = StdRng::seed_from_u64(12);
    for a in combine_sectors(3, &pkt(), &p).unwrap() {
        for _ in 0..5 {
            let ms: Vec<f64> = (0..3).map(|_| rng.random_range(9.8..10.2)).collect();
            let base = a.eval(&ms).unwrap();
            let nr = a.sector.n_right;
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                let same_letter = (i < nr) == (j < nr);
                if !same_letter {
                    continue;
                }
                let mut sw = ms.clone();
                sw.swap(i, j);
                assert!((a.eval(&sw).unwrap() - base).norm() < 1e-12 * (1.0 + base.norm()), "{}", a.sector);
            }
        }
    }
}

#[test]
fn single_photon_sectors_are_t_and_r() {
    let p = SystemParams::lossless(0.3);
    let amps = combine_sectors(1, &pkt(), &p).unwrap();
    let m = 10.05;
    let (t, r) = wqed::model::chiral_coefficients(m, &p);
    assert!((amps[0].eval(&[m]).unwrap() - t * pkt().alpha(m)).norm() < 1e-15);
    assert!((amps[1].eval(&[m]).unwrap() - r * pkt().alpha(m)).norm() < 1e-15);
    assert_eq!(amps[0].bs(&[m]).unwrap(), C64::new(0.0, 0.0));
}

#[test]
fn reflection_form_is_symmetric() {
    let p = SystemParams::lossless(0.4);
    let q = tight();
    let a = bound_kernel_2(10.03, 9.91, &pkt(), &p, &q).unwrap();
    let b = bound_kernel_2(9.91, 10.03, &pkt(), &p, &q).unwrap();
    assert!((a - b).norm() <= 1e-12 * a.norm());
}

#[test]
fn reflection_form_scales_as_fourth_power_of_coupling() {
    // Detuned from resonance, each reflection costs V^2.
    let q = tight();
    let vs = [0.05, 0.1, 0.2];
    let logs: Vec<(f64, f64)> = vs
        .iter()
        .map(|&v| {
            let b = bound_kernel_2(10.2, 10.15, &pkt(), &SystemParams::lossless(v), &q).unwrap();
            (v.ln(), b.norm().ln())
        })
        .collect();
    let n = logs.len() as f64;
    let (sx, sy): (f64, f64) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let sxx: f64 = logs.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!((slope - 4.0).abs() <= 0.2, "{slope}");
}

#[test]
fn reflection_form_inner_domain() {
    let p = SystemParams::lossless(0.4);
    let q = tight();
    let k = pkt();
    let full = bound_kernel_2_on(10.02, 9.95, &k, &p, &q, 0.0, 60.0).unwrap().value;
    let window = bound_kernel_2_on(10.02, 9.95, &k, &p, &q, k.k0 - 10.0 * k.delta, k.k0 + 10.0 * k.delta).unwrap().value;
    assert!((full - window).norm() <= 1e-10 * full.norm().max(1e-300) + 1e-14, "{full} vs {window}");
}
