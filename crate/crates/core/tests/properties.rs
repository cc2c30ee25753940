use proptest::prelude::*;
use wqed::coherent::{g2_curve, g2_from_state};
use wqed::fock::{prob_one, prob_two};
use wqed::model::{chiral_coefficients, even_transmission};
use wqed::quadrature::QuadratureSpec;
use wqed::smatrix::even_kernel;
use wqed::{GaussianPacket, SystemParams};

proptest! {
    #[test]
    fn chiral_coefficients_differ_by_one(k in 5.0..15.0f64, v in 0.0..1.5f64, gp in 0.0..0.5f64) {
        let p = SystemParams::new(10.0, v, gp).unwrap();
        let (t, r) = chiral_coefficients(k, &p);
        prop_assert!((t - r - 1.0).norm() < 1e-14);
    }

    #[test]
    fn even_transmission_is_a_phase_without_loss(k in 5.0..15.0f64, v in 0.0..1.5f64) {
        let tb = even_transmission(k, &SystemParams::lossless(v));
        prop_assert!((tb.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn loss_only_reduces_even_transmission(k in 5.0..15.0f64, v in 0.0..1.5f64, gp in 0.0..0.5f64) {
        let tb = even_transmission(k, &SystemParams::new(10.0, v, gp).unwrap());
        prop_assert!(tb.norm() <= 1.0 + 1e-14);
    }

    #[test]
    fn transmission_is_scale_covariant(k in 5.0..15.0f64, v in 0.01..1.0f64, gp in 0.0..0.3f64, s in 0.2..5.0f64) {
        let a = even_transmission(k, &SystemParams::new(10.0, v, gp).unwrap());
        let b = even_transmission(s * k, &SystemParams::new(10.0 * s, v * s.sqrt(), gp * s).unwrap());
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn state_correlation_is_symmetric_and_nonnegative(x1 in -20.0..20.0f64, x2 in -20.0..20.0f64, v in 0.05..0.8f64) {
        let pkt = GaussianPacket::new(10.0, 0.1, 0.5).unwrap();
        let p = SystemParams::new(10.0, v, 0.1).unwrap();
        let a = g2_from_state(&pkt, &p, x1, x2);
        let b = g2_from_state(&pkt, &p, x2, x1);
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn two_photon_kernel_is_symmetric(p1 in 9.6..10.4f64, p2 in 9.6..10.4f64, v in 0.05..0.8f64, gp in 0.0..0.2f64) {
        let pkt = GaussianPacket::new(10.0, 0.1, 1.0).unwrap();
        let k = even_kernel(2, &pkt, &SystemParams::new(10.0, v, gp).unwrap()).unwrap();
        let (a, b) = (k.k2(p1, p2), k.k2(p2, p1));
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn probabilities_ignore_the_absolute_energy(eps in 5.0..50.0f64, v in 0.05..0.8f64) {
        let q = QuadratureSpec::default().with_tolerances(1e-9, 1e-13);
        let base = (GaussianPacket::new(10.0, 0.1, 1.0).unwrap(), SystemParams::lossless(v));
        let moved = (GaussianPacket::new(eps, 0.1, 1.0).unwrap(), SystemParams::new(eps, v, 0.0).unwrap());
        let a1 = prob_one(&base.0, &base.1, &q).unwrap();
        let b1 = prob_one(&moved.0, &moved.1, &q).unwrap();
        let a2 = prob_two(&base.0, &base.1, &q).unwrap();
        let b2 = prob_two(&moved.0, &moved.1, &q).unwrap();
        for (x, y) in a1.sectors.iter().chain(&a2.sectors).zip(b1.sectors.iter().chain(&b2.sectors)) {
            prop_assert!((x.total - y.total).abs() < 1e-7, "{}: {} vs {}", x.sector, x.total, y.total);
        }
    }

    #[test]
    fn correlation_curves_are_nonnegative(v in 0.0..1.0f64, gp in 0.0..0.3f64) {
        let pkt = GaussianPacket::new(10.0, 0.1, 1.0).unwrap();
        let p = SystemParams::new(10.0, v, gp).unwrap();
        let xs: Vec<f64> = (0..40).map(|i| 0.5 * i as f64).collect();
        let c = g2_curve(&pkt, &p, &xs, &QuadratureSpec::default()).unwrap();
        prop_assert!(c.values.iter().all(|&g| g >= 0.0 && g.is_finite()));
    }
}
