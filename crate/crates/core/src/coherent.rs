//! Coherent-state observables: second-order correlation of the transmitted
//! field and the transmitted photon-number distribution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{prob, SectorProbabilities};
use crate::model::{chiral_coefficients, GaussianPacket, SystemParams};
use crate::pulses::Pulse;
use crate::quadrature::{integrate_with, QuadratureSpec};
use crate::C64;

/// Below this value of `|T|^4` the correlation denominator is considered lost.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Largest probability left out by the n <= 3 truncation before a warning.
pub const TRUNCATION_WARNING: f64 = 0.05;

fn check_nbar(pkt: &GaussianPacket) -> Result<()> {
    if pkt.nbar > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "coherent-state observables are truncated at three photons and need nbar <= 1, got {}",
            pkt.nbar
        )));
    }
    Ok(())
}

/// Packet-averaged transmission and reflection amplitudes
/// `T = integral alpha t`, `R = integral alpha r` over `k > 0`.
pub fn packet_amplitudes(pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec) -> Result<(C64, C64)> {
    let w = q.window_halfwidth * pkt.delta;
    let est = integrate_with(
        |k| {
            let (t, r) = chiral_coefficients(k, p);
            let a = pkt.alpha(k);
            [t * a, r * a]
        },
        (pkt.k0 - w).max(0.0),
        pkt.k0 + w,
        &[p.epsilon],
        q,
    )?;
    Ok((est.value[0], est.value[1]))
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationCurve {
    /// Photon separations.
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    /// Set where the denominator fell below [`DENOMINATOR_FLOOR`].
    pub unreliable: bool,
    pub params: SystemParams,
    pub packet: GaussianPacket,
}

/// Default separations: 0 followed by 59 points log-spaced on
/// `Gamma x` in `[0.015, 15]`.
pub fn default_separations(p: &SystemParams) -> Vec<f64> {
    let g = p.gamma();
    let scale = if g > 0.0 { 1.0 / g } else { 1.0 };
    let mut xs = vec![0.0];
    let (a, b) = (0.015f64.ln(), 15f64.ln());
    xs.extend((0..59).map(|i| (a + (b - a) * i as f64 / 58.0).exp() * scale));
    xs
}

/// `g2(x) = |T^2 - R^2 exp(-Gamma x / 2)|^2 / |T|^4` for the transmitted field.
pub fn g2_curve(pkt: &GaussianPacket, p: &SystemParams, xs: &[f64], q: &QuadratureSpec) -> Result<CorrelationCurve> {
    check_nbar(pkt)?;
    q.validate()?;
    let (t, r) = packet_amplitudes(pkt, p, q)?;
    let t2 = t * t;
    let r2 = r * r;
    let den = t2.norm_sqr();
    let unreliable = !(den > DENOMINATOR_FLOOR);
    let values = xs
        .iter()
        .map(|&x| {
            let num = (t2 - r2 * (-0.5 * p.gamma() * x.abs()).exp()).norm_sqr();
            if unreliable {
                f64::NAN
            } else {
                num / den
            }
        })
        .collect();
    Ok(CorrelationCurve {
        xs: xs.to_vec(),
        values,
        unreliable,
        params: *p,
        packet: *pkt,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Antibunched,
    Uncorrelated,
    Bunched,
}

/// `g2(0)` and whether it lies below, at or above 1.
pub fn g2_regime(pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec) -> Result<(f64, Regime)> {
    let c = g2_curve(pkt, p, &[0.0], q)?;
    if c.unreliable {
        return Err(Error::Unreliable(
            "transmitted two-photon amplitude vanishes; g2(0) undefined".into(),
        ));
    }
    let g = c.values[0];
    let regime = if (g - 1.0).abs() <= 1e-12 {
        Regime::Uncorrelated
    } else if g < 1.0 {
        Regime::Antibunched
    } else {
        Regime::Bunched
    };
    Ok((g, regime))
}

/// Reference mean of the Poisson comparison distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoissonMean {
    /// Mean number of transmitted photons.
    Transmitted,
    /// Mean photon number of the incident coherent state.
    Incident,
}

#[derive(Clone, Debug, Serialize)]
pub struct NumberDistribution {
    pub nbar: f64,
    /// Probabilities of 0..=3 transmitted photons.
    pub p: [f64; 4],
    pub poisson: [f64; 4],
    pub ratios: [f64; 4],
    pub reference: PoissonMean,
    pub reference_mean: f64,
    pub mean_transmitted: f64,
    /// Incident probability carried by the 0..=3 photon components.
    pub captured: f64,
    pub warnings: Vec<String>,
}

fn poisson(mean: f64, n: usize) -> f64 {
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    (-mean).exp() * mean.powi(n as i32) / fact
}

/// Fock probabilities for one to three photons, the input of
/// [`distribution_from_fock`].
pub fn fock_table(pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec) -> Result<[SectorProbabilities; 3]> {
    let fock = pkt.with_nbar(1.0);
    Ok([prob(1, &fock, p, q)?, prob(2, &fock, p, q)?, prob(3, &fock, p, q)?])
}

/// Transmitted number distribution of a coherent state of mean `nbar`,
/// built from its zero- to three-photon components.
pub fn distribution_from_fock(nbar: f64, fock: &[SectorProbabilities; 3], reference: PoissonMean) -> NumberDistribution {
    let w: Vec<f64> = (0..=3).map(|n| poisson(nbar, n)).collect();
    let mut pm = [0.0; 4];
    pm[0] += w[0];
    let mut mean = 0.0;
    for (n, table) in fock.iter().enumerate() {
        let n = n + 1;
        for e in &table.sectors {
            pm[e.sector.n_right] += w[n] * e.total;
            mean += w[n] * e.sector.n_right as f64 * e.total;
        }
    }
    let captured: f64 = w.iter().sum();
    // Components with four or more photons are counted in the mean at the
    // single-photon transmission.
    let p_r1 = fock[0].sectors[0].total;
    let tail_number = nbar - (1..=3).map(|n| n as f64 * w[n]).sum::<f64>();
    mean += p_r1 * tail_number.max(0.0);
    let reference_mean = match reference {
        PoissonMean::Transmitted => mean,
        PoissonMean::Incident => nbar,
    };
    let mut poisson_ref = [0.0; 4];
    let mut ratios = [0.0; 4];
    for m in 0..4 {
        poisson_ref[m] = poisson(reference_mean, m);
        ratios[m] = if poisson_ref[m] > 0.0 {
            pm[m] / poisson_ref[m]
        } else {
            f64::NAN
        };
    }
    let mut warnings = Vec::new();
    if 1.0 - captured > TRUNCATION_WARNING {
        warnings.push(format!(
            "three-photon truncation leaves out {:.3} of the incident probability",
            1.0 - captured
        ));
    }
    NumberDistribution {
        nbar,
        p: pm,
        poisson: poisson_ref,
        ratios,
        reference,
        reference_mean,
        mean_transmitted: mean,
        captured,
        warnings,
    }
}

pub fn number_distribution(pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec, reference: PoissonMean) -> Result<NumberDistribution> {
    check_nbar(pkt)?;
    let table = fock_table(pkt, p, q)?;
    let mut d = distribution_from_fock(pkt.nbar, &table, reference);
    d.warnings.extend(pkt.narrowband_warning());
    Ok(d)
}

/// Number distributions on a (V, nbar) grid, in row-major order of the grid.
pub fn number_distribution_grid(
    v_grid: &[f64],
    nbar_grid: &[f64],
    pkt: &GaussianPacket,
    p: &SystemParams,
    q: &QuadratureSpec,
    reference: PoissonMean,
) -> Result<Vec<(f64, Vec<NumberDistribution>)>> {
    for &nbar in nbar_grid {
        check_nbar(&pkt.with_nbar(nbar))?;
    }
    v_grid
        .par_iter()
        .map(|&v| {
            let pv = SystemParams::new(p.epsilon, v, p.gamma_prime)?;
            let table = fock_table(pkt, &pv, q)?;
            let rows = nbar_grid
                .iter()
                .map(|&nb| distribution_from_fock(nb, &table, reference))
                .collect();
            Ok((v, rows))
        })
        .collect()
}

/// Correlation of the transmitted two-photon component at positions
/// `(x1, x2)`, normalized by the one-photon intensities:
/// `|F_RR(x1, x2)|^2 / (|psi_t(x1)|^2 |psi_t(x2)|^2)`.
///
/// This is the leading order in `nbar` of the normalized correlation of the
/// truncated output state, computed from the state rather than from the
/// closed form of [`g2_curve`].
pub fn g2_from_state(pkt: &GaussianPacket, p: &SystemParams, x1: f64, x2: f64) -> f64 {
    let pulse = Pulse::new(*p, *pkt);
    let (t1, _) = pulse.outputs(x1);
    let (t2, _) = pulse.outputs(x2);
    let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
    let rh = pulse.psi_r(hi);
    let f = t1 * t2 - rh * rh * pulse.decay(lo, hi);
    f.norm_sqr() / (t1.norm_sqr() * t2.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pkt() -> GaussianPacket {
        GaussianPacket::new(10.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn decoupled_field_is_coherent() {
        let p = SystemParams::lossless(0.0);
        let c = g2_curve(&pkt(), &p, &[0.0, 1.0, 10.0], &QuadratureSpec::default()).unwrap();
        for v in c.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let d = number_distribution(&pkt(), &p, &QuadratureSpec::default(), PoissonMean::Transmitted).unwrap();
        for r in d.ratios {
            assert!((r - 1.0).abs() < 1e-6, "{:?}", d.ratios);
        }
    }

    #[test]
    fn large_separation_is_uncorrelated() {
        let p = SystemParams::new(10.0, 0.3, 0.1).unwrap();
        let x = 30.0 / p.gamma();
        let c = g2_curve(&pkt(), &p, &[x], &QuadratureSpec::default()).unwrap();
        assert!((c.values[0] - 1.0).abs() < 0.02);
    }

    #[test]
    fn default_grid_shape() {
        let p = SystemParams::new(10.0, 0.34, 0.1).unwrap();
        let xs = default_separations(&p);
        assert_eq!(xs.len(), 60);
        assert_eq!(xs[0], 0.0);
        assert!((xs[59] * p.gamma() - 15.0).abs() < 1e-12);
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn state_correlation_agrees_at_coincidence() {
        let q = QuadratureSpec::default().with_tolerances(1e-12, 1e-15);
        for v in [0.2, 0.4] {
            let p = SystemParams::new(10.0, v, 0.1).unwrap();
            let closed = g2_curve(&pkt(), &p, &[0.0], &q).unwrap().values[0];
            let state = g2_from_state(&pkt(), &p, 0.0, 0.0);
            assert!((closed - state).abs() < 1e-9 * (1.0 + closed), "v={v}: {closed} vs {state}");
        }
    }

    #[test]
    fn nbar_above_one_is_rejected() {
        let p = SystemParams::lossless(0.3);
        assert!(g2_curve(&pkt().with_nbar(1.5), &p, &[0.0], &QuadratureSpec::default()).is_err());
    }
}
