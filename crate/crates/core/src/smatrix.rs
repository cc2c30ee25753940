//! Wavepacket-convolved output amplitudes of the n-photon S-matrix.
//!
//! A right-moving product packet is split into even and odd parts. The odd
//! part passes freely, the even part acquires the kernel `Phi_e`, built from
//! the single-photon factor `tbar(p) alpha(p)` and bound clusters `K2`, `K3`.
//! Projecting back onto right/left movers gives, for a sector with letters
//! `sigma`,
//!
//! `F(p; sigma) = sum over cluster partitions of
//!     prod_clusters 2^(-|C|) K_|C|(p_C) * prod_singletons alpha(p) c_sigma(p)`
//!
//! with `c_R = t`, `c_L = r`. The probability of a sector with `nR`
//! transmitted and `nL` reflected photons is `n!/(nR! nL!) * integral |F|^2`.

use std::f64::consts::PI;
use std::fmt;

use errorfunctions::ComplexErrorFunctions;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{chiral_coefficients, even_transmission, GaussianPacket, SystemParams};
use crate::quadrature::{integrate_with, Estimate, QuadratureSpec};
use crate::C64;

/// Outcome pattern: `n_right` transmitted and `n_left` reflected photons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectorLabel {
    pub n_right: usize,
    pub n_left: usize,
}

impl SectorLabel {
    pub fn new(n_right: usize, n_left: usize) -> Self {
        Self { n_right, n_left }
    }

    pub fn n(&self) -> usize {
        self.n_right + self.n_left
    }

    /// All sectors of `n` photons, most transmitted first.
    pub fn all(n: usize) -> Vec<Self> {
        (0..=n).map(|l| Self::new(n - l, l)).collect()
    }

    /// `n! / (nR! nL!)`, the weight of `integral |F|^2` in the probability.
    pub fn multiplicity(&self) -> f64 {
        let f = |m: usize| (1..=m).product::<usize>() as f64;
        f(self.n()) / (f(self.n_right) * f(self.n_left))
    }
}

impl fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", "R".repeat(self.n_right), "L".repeat(self.n_left))
    }
}

impl std::str::FromStr for SectorLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("invalid sector label {s:?}"));
        if s.is_empty() || s.len() > 3 || !s.chars().all(|c| c == 'R' || c == 'L') {
            return Err(bad());
        }
        let n_right = s.chars().take_while(|c| *c == 'R').count();
        if s[n_right..].contains('R') {
            return Err(bad());
        }
        Ok(Self::new(n_right, s.len() - n_right))
    }
}

impl Serialize for SectorLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Two-photon pair integral
/// `I2(E) = integral dk alpha(k) alpha(E - k) (tbar_k - 1)(tbar_{E-k} - 1)`
/// in closed form through the Faddeeva function.
pub fn pair_integral(e: f64, pkt: &GaussianPacket, p: &SystemParams) -> C64 {
    let gc = p.gamma_c();
    if gc == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let d = pkt.delta;
    let z = C64::new(0.5 * e - p.epsilon, 0.5 * p.gamma());
    let zeta = z / (std::f64::consts::SQRT_2 * d);
    let env = (-(0.5 * e - pkt.k0).powi(2) / (2.0 * d * d)).exp() / (2.0 * PI * d * d).sqrt();
    C64::new(0.0, PI * gc * gc * env) * zeta.w() / z
}

/// Even-space output kernel `Phi_e` of one to three photons.
#[derive(Clone, Copy, Debug)]
pub struct EvenKernel {
    pub n: usize,
    pub packet: GaussianPacket,
    pub params: SystemParams,
    pub quadrature: QuadratureSpec,
}

/// Build the even-space kernel of `n` photons.
pub fn even_kernel(n: usize, pkt: &GaussianPacket, p: &SystemParams) -> Result<EvenKernel> {
    if !(1..=3).contains(&n) {
        return Err(Error::PhotonNumber { n, min: 1, max: 3 });
    }
    Ok(EvenKernel {
        n,
        packet: *pkt,
        params: *p,
        quadrature: QuadratureSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            ..QuadratureSpec::default()
        },
    })
}

impl EvenKernel {
    fn check(&self, ps: &[f64]) -> Result<()> {
        if ps.len() != self.n {
            return Err(Error::Arity {
                expected: self.n,
                got: ps.len(),
            });
        }
        Ok(())
    }

    /// Single-photon factor `tbar(p) alpha(p)`.
    pub fn single(&self, k: f64) -> C64 {
        even_transmission(k, &self.params) * self.packet.alpha(k)
    }

    /// Two-body cluster
    /// `K2(p1, p2) = -(i / 2 pi) [L(p1) + L(p2)] I2(p1 + p2)`.
    pub fn k2(&self, p1: f64, p2: f64) -> C64 {
        let p = &self.params;
        let l = p.lorentzian(p1) + p.lorentzian(p2);
        C64::new(0.0, -1.0 / (2.0 * PI)) * l * pair_integral(p1 + p2, &self.packet, p)
    }

    /// Inner integral of the three-body cluster,
    /// `J(s, E) = -i Gamma_c integral dk alpha(k) L(k) L(s - k) I2(E - k)`.
    fn j3(&self, s: f64, e: f64) -> Result<C64> {
        let p = &self.params;
        let pkt = &self.packet;
        let w = self.quadrature.window_halfwidth * pkt.delta;
        let est = integrate_with(
            |k| {
                p.lorentzian(k) * p.lorentzian(s - k) * pair_integral(e - k, pkt, p) * pkt.alpha(k)
            },
            pkt.k0 - w,
            pkt.k0 + w,
            &[p.epsilon, s - p.epsilon, e - 2.0 * p.epsilon],
            &self.quadrature,
        )?;
        Ok(C64::new(0.0, -p.gamma_c()) * est.value)
    }

    /// Three-body cluster
    /// `K3(p) = -2 (2 pi)^-2 sum_{i != j} L(p_i) J(E - p_j, E)`.
    pub fn k3(&self, ps: [f64; 3]) -> Result<C64> {
        let p = &self.params;
        if p.gamma_c() == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let e: f64 = ps.iter().sum();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..3 {
            let jv = self.j3(e - ps[j], e)?;
            for i in (0..3).filter(|&i| i != j) {
                acc += p.lorentzian(ps[i]) * jv;
            }
        }
        Ok(acc * (-2.0 / (4.0 * PI * PI)))
    }

    /// Plane-wave part `prod tbar(p_i) alpha(p_i)`.
    pub fn plane_wave(&self, ps: &[f64]) -> Result<C64> {
        self.check(ps)?;
        Ok(ps.iter().map(|&k| self.single(k)).product())
    }

    /// Everything but the plane-wave part.
    pub fn bound(&self, ps: &[f64]) -> Result<C64> {
        self.check(ps)?;
        Ok(match self.n {
            1 => C64::new(0.0, 0.0),
            2 => self.k2(ps[0], ps[1]),
            _ => {
                let mut acc = self.k3([ps[0], ps[1], ps[2]])?;
                for i in 0..3 {
                    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                    acc += self.single(ps[i]) * self.k2(ps[j], ps[k]);
                }
                acc
            }
        })
    }

    pub fn eval(&self, ps: &[f64]) -> Result<C64> {
        Ok(self.plane_wave(ps)? + self.bound(ps)?)
    }
}

/// Two-photon bound amplitude written with the chiral reflection amplitude,
/// `B(k1, k2) = -(i / 2 pi) [L(k1) + L(k2)] integral_{k'>0} alpha(k') alpha(E - k') r_k' r_{E-k'}`,
/// with the inner integral done by quadrature on `[lo, hi]`.
pub fn bound_kernel_2_on(k1: f64, k2: f64, pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec, lo: f64, hi: f64) -> Result<Estimate<C64>> {
    let e = k1 + k2;
    let lo = lo.max(0.0);
    let inner = integrate_with(
        |k| {
            let (_, r1) = chiral_coefficients(k, p);
            let (_, r2) = chiral_coefficients(e - k, p);
            r1 * r2 * (pkt.alpha(k) * pkt.alpha(e - k))
        },
        lo,
        hi,
        &[p.epsilon, e - p.epsilon, 0.5 * e],
        q,
    )?;
    let pre = C64::new(0.0, -1.0 / (2.0 * PI)) * (p.lorentzian(k1) + p.lorentzian(k2));
    Ok(Estimate {
        value: pre * inner.value,
        error: pre.norm() * inner.error,
        subdivisions: inner.subdivisions,
    })
}

/// [`bound_kernel_2_on`] on the window `k0 +- W delta` of `q`.
pub fn bound_kernel_2(k1: f64, k2: f64, pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec) -> Result<C64> {
    let w = q.window_halfwidth * pkt.delta;
    Ok(bound_kernel_2_on(k1, k2, pkt, p, q, pkt.k0 - w, pkt.k0 + w)?.value)
}

/// Output amplitude of one sector, as a function of the positive momentum
/// magnitudes of the outgoing photons: the first `n_right` arguments belong to
/// transmitted photons, the rest to reflected ones (lab momentum `-m`).
#[derive(Clone, Copy, Debug)]
pub struct OutputAmplitude {
    pub sector: SectorLabel,
    kernel: EvenKernel,
}

impl OutputAmplitude {
    pub fn packet(&self) -> &GaussianPacket {
        &self.kernel.packet
    }

    pub fn params(&self) -> &SystemParams {
        &self.kernel.params
    }

    fn letter(&self, i: usize, m: f64) -> C64 {
        let (t, r) = chiral_coefficients(m, &self.kernel.params);
        let c = if i < self.sector.n_right { t } else { r };
        c * self.kernel.packet.alpha(m)
    }

    fn check(&self, ms: &[f64]) -> Result<()> {
        self.kernel.check(ms)
    }

    /// Plane-wave pathway: `prod alpha(m_i) c_sigma(m_i)`.
    pub fn pw(&self, ms: &[f64]) -> Result<C64> {
        self.check(ms)?;
        Ok(ms.iter().enumerate().map(|(i, &m)| self.letter(i, m)).product())
    }

    /// All pathways involving a bound cluster.
    pub fn bs(&self, ms: &[f64]) -> Result<C64> {
        self.check(ms)?;
        let k = &self.kernel;
        Ok(match ms.len() {
            1 => C64::new(0.0, 0.0),
            2 => k.k2(ms[0], ms[1]) * 0.25,
            _ => {
                let mut acc = k.k3([ms[0], ms[1], ms[2]])? * 0.125;
                for i in 0..3 {
                    let (j, l) = ((i + 1) % 3, (i + 2) % 3);
                    acc += self.letter(i, ms[i]) * k.k2(ms[j], ms[l]) * 0.25;
                }
                acc
            }
        })
    }

    pub fn eval(&self, ms: &[f64]) -> Result<C64> {
        Ok(self.pw(ms)? + self.bs(ms)?)
    }
}

/// Output amplitudes of all sectors of an `n`-photon right-moving packet.
pub fn combine_sectors(n: usize, pkt: &GaussianPacket, p: &SystemParams) -> Result<Vec<OutputAmplitude>> {
    let kernel = even_kernel(n, pkt, p)?;
    Ok(SectorLabel::all(n)
        .into_iter()
        .map(|sector| OutputAmplitude { sector, kernel })
        .collect())
}

/// `integral |Phi_e|^2` over all momenta, evaluated in position space.
/// Equals 1 for a lossless emitter.
pub fn even_space_norm(n: usize, pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec) -> Result<Estimate<f64>> {
    // The even profile psi_in + phi equals psi_t + psi_r; with every photon
    // scaled by 1/2 the clusters keep their sector normalization.
    let f = [0.5, 0.5];
    let mut est = crate::fock::uniform_norm(n, &f, pkt, p, q)?;
    let scale = 4f64.powi(n as i32);
    est.value *= scale;
    est.error *= scale;
    Ok(est)
}
