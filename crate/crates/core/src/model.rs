//! Physical parameters and single-photon scattering coefficients.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Smallest `k0 / delta` for which a packet counts as narrowband.
pub const NARROWBAND_RATIO: f64 = 20.0;

/// Two-level emitter coupled to the waveguide.
///
/// `epsilon` is the level splitting, `coupling_v` the (frequency independent)
/// coupling to each chiral channel and `gamma_prime` the loss rate into
/// non-guided modes. The emission rate into the guide is `gamma_c = 2 V^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub epsilon: f64,
    pub coupling_v: f64,
    pub gamma_prime: f64,
}

impl SystemParams {
    pub fn new(epsilon: f64, coupling_v: f64, gamma_prime: f64) -> Result<Self> {
        if !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon = {epsilon}")));
        }
        if !(coupling_v.is_finite() && coupling_v >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling V must be finite and >= 0, got {coupling_v}"
            )));
        }
        if !(gamma_prime.is_finite() && gamma_prime >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma' must be finite and >= 0, got {gamma_prime}"
            )));
        }
        Ok(Self {
            epsilon,
            coupling_v,
            gamma_prime,
        })
    }

    /// Lossless emitter at the reference level splitting `epsilon = 10`.
    pub fn lossless(coupling_v: f64) -> Self {
        Self {
            epsilon: 10.0,
            coupling_v,
            gamma_prime: 0.0,
        }
    }

    pub fn with_coupling(self, coupling_v: f64) -> Self {
        Self { coupling_v, ..self }
    }

    /// Emission rate into the guided continuum, `2 V^2`.
    pub fn gamma_c(&self) -> f64 {
        2.0 * self.coupling_v * self.coupling_v
    }

    /// Total decay rate.
    pub fn gamma(&self) -> f64 {
        self.gamma_c() + self.gamma_prime
    }

    /// Coupling of the even mode, `sqrt(2) V`.
    pub fn even_coupling(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.coupling_v
    }

    pub fn is_decoupled(&self) -> bool {
        self.coupling_v == 0.0
    }

    /// `1 / (k - epsilon + i Gamma / 2)`, the emitter propagator on the real axis.
    pub fn lorentzian(&self, k: f64) -> C64 {
        C64::new(k - self.epsilon, 0.5 * self.gamma()).inv()
    }
}

/// Spectral shape of the incident light.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PacketKind {
    /// Unit-normalized single-mode amplitude of a Fock state.
    Fock,
    /// Amplitude scaled by `sqrt(nbar)`.
    Coherent,
}

/// Gaussian spectral amplitude centered at `k0` with width `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub k0: f64,
    pub delta: f64,
    pub nbar: f64,
}

impl GaussianPacket {
    pub fn new(k0: f64, delta: f64, nbar: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "packet width must be > 0, got {delta}"
            )));
        }
        if !k0.is_finite() {
            return Err(Error::InvalidParameter(format!("k0 = {k0}")));
        }
        if !(nbar.is_finite() && nbar >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mean photon number must be >= 0, got {nbar}"
            )));
        }
        Ok(Self { k0, delta, nbar })
    }

    /// Packet on resonance with `p` (k0 = epsilon) and unit mean photon number.
    pub fn resonant(p: &SystemParams, delta: f64) -> Self {
        Self {
            k0: p.epsilon,
            delta,
            nbar: 1.0,
        }
    }

    pub fn with_nbar(self, nbar: f64) -> Self {
        Self { nbar, ..self }
    }

    pub fn is_narrowband(&self) -> bool {
        self.k0 / self.delta >= NARROWBAND_RATIO
    }

    /// Diagnostic for callers that should warn about broadband packets.
    pub fn narrowband_warning(&self) -> Option<String> {
        (!self.is_narrowband()).then(|| {
            format!(
                "packet is not narrowband: k0/delta = {:.3} < {NARROWBAND_RATIO}; \
                 negative-momentum content is not negligible",
                self.k0 / self.delta
            )
        })
    }

    /// Spectral amplitude `alpha(k)`.
    pub fn amplitude(&self, k: f64, kind: PacketKind) -> f64 {
        packet_amplitude(k, self, kind)
    }

    /// Unit-normalized amplitude, the one every scattering kernel is built on.
    pub fn alpha(&self, k: f64) -> f64 {
        packet_amplitude(k, self, PacketKind::Fock)
    }
}

/// Even-mode transmission coefficient.
///
/// The decoupled point `V = 0, gamma' = 0` returns exactly 1.
pub fn even_transmission(k: f64, p: &SystemParams) -> C64 {
    let gc = p.gamma_c();
    let gp = p.gamma_prime;
    if gc == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let num = C64::new(k - p.epsilon, 0.5 * (gp - gc));
    let den = C64::new(k - p.epsilon, 0.5 * (gp + gc));
    num / den
}

/// Lab-frame transmission and reflection amplitudes `(t, r)`.
pub fn chiral_coefficients(k: f64, p: &SystemParams) -> (C64, C64) {
    let tb = even_transmission(k, p);
    ((tb + 1.0) * 0.5, (tb - 1.0) * 0.5)
}

pub fn packet_amplitude(k: f64, pkt: &GaussianPacket, kind: PacketKind) -> f64 {
    let d2 = pkt.delta * pkt.delta;
    let base = (2.0 * PI * d2).powf(-0.25) * (-(k - pkt.k0).powi(2) / (4.0 * d2)).exp();
    match kind {
        PacketKind::Fock => base,
        PacketKind::Coherent => base * pkt.nbar.sqrt(),
    }
}
