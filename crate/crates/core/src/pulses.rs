//! Position-space profiles of a scattered Gaussian packet.
//!
//! Everything here is expressed in the frame co-moving with the carrier: the
//! common factor `exp(i k0 x)` of every photon coordinate is dropped, since it
//! cancels in all probabilities and correlation functions. Output
//! coordinates of reflected photons are mirrored, so a left-moving photon at
//! `-x` is reported at `x`.

use std::f64::consts::PI;

use errorfunctions::ComplexErrorFunctions;

use crate::model::{GaussianPacket, SystemParams};
use crate::C64;

/// Closed-form one-photon output profiles and the bound-cluster kernel.
#[derive(Clone, Copy, Debug)]
pub struct Pulse {
    pub params: SystemParams,
    pub packet: GaussianPacket,
    norm: f64,
    a: C64,
    c: f64,
}

impl Pulse {
    pub fn new(params: SystemParams, packet: GaussianPacket) -> Self {
        let d = packet.delta;
        let norm = (2.0 * d * d / PI).powf(0.25);
        let a = C64::new(0.5 * params.gamma(), params.epsilon - packet.k0);
        let c = params.gamma_c() * norm * PI.sqrt() / (2.0 * d);
        Self {
            params,
            packet,
            norm,
            a,
            c,
        }
    }

    /// Decay constant of the bound clusters, `Gamma/2 + i (epsilon - k0)`.
    pub fn lambda(&self) -> C64 {
        self.a
    }

    /// Incident single-photon profile.
    pub fn psi_in(&self, x: f64) -> C64 {
        let d = self.packet.delta;
        C64::new(self.norm * (-d * d * x * x).exp(), 0.0)
    }

    /// Scattered part of the even-mode profile, the transform of
    /// `alpha(k) (tbar_k - 1)`.
    pub fn phi(&self, x: f64) -> C64 {
        if self.c == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let d = self.packet.delta;
        let z = self.a / (2.0 * d) + d * x;
        let gauss = (-d * d * x * x).exp();
        if z.re >= 0.0 {
            -z.erfcx() * (self.c * gauss)
        } else {
            let tail = (self.a * x + self.a * self.a / (4.0 * d * d)).exp() * 2.0;
            -(tail - (-z).erfcx() * gauss) * self.c
        }
    }

    /// Reflected profile, `phi / 2`.
    pub fn psi_r(&self, x: f64) -> C64 {
        self.phi(x) * 0.5
    }

    /// Transmitted profile, `psi_in + phi / 2`.
    pub fn psi_t(&self, x: f64) -> C64 {
        self.psi_in(x) + self.psi_r(x)
    }

    /// Both output profiles at once.
    pub fn outputs(&self, x: f64) -> (C64, C64) {
        let r = self.psi_r(x);
        (self.psi_in(x) + r, r)
    }

    /// `exp(-lambda (b - a))`.
    pub fn decay(&self, a: f64, b: f64) -> C64 {
        (-self.a * (b - a)).exp()
    }

    /// Bound cluster of `ys.len()` photons on sorted coordinates, given the
    /// reflected profile at those coordinates.
    ///
    /// `-(-2)^(n-2) psi_r(y_2) ... psi_r(y_{n-1}) psi_r(y_n)^2 exp(-lambda (y_n - y_1))`
    pub fn cluster(&self, ys: &[f64], rs: &[C64]) -> C64 {
        let n = ys.len();
        assert!(n >= 2 && rs.len() == n);
        let mut v = C64::new(-(-2.0f64).powi(n as i32 - 2), 0.0);
        for r in &rs[1..n - 1] {
            v *= r;
        }
        v * rs[n - 1] * rs[n - 1] * self.decay(ys[0], ys[n - 1])
    }

    /// Integration range in position space that carries all but ~exp(-W^2/2)
    /// of the probability, for a momentum window of `w` packet widths.
    pub fn support(&self, w: f64) -> (f64, f64) {
        let d = self.packet.delta;
        let hi = w / (2.0 * d);
        let g = self.params.gamma();
        let tail = if self.params.gamma_c() > 0.0 && g > 0.0 {
            w * w / (2.0 * g)
        } else {
            0.0
        };
        (-hi - tail, hi)
    }

    /// Interior breakpoints resolving the packet scale and the emission tail.
    pub fn breakpoints(&self, w: f64) -> Vec<f64> {
        let (lo, hi) = self.support(w);
        let d = self.packet.delta;
        let mut pts: Vec<f64> = (-8..=8).map(|k| 0.5 * k as f64 / d).collect();
        let g = self.params.gamma();
        if self.params.gamma_c() > 0.0 {
            let mut s = 1.0 / g;
            while -s > lo {
                pts.push(-s);
                s *= 2.0;
            }
        }
        pts.retain(|x| *x > lo && *x < hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Breakpoints below `y` at multiples of the cluster length `1/Gamma`.
    pub fn cluster_breaks_below(&self, y: f64, lo: f64) -> Vec<f64> {
        let g = self.params.gamma();
        if !(g > 0.0) || self.params.gamma_c() == 0.0 {
            return Vec::new();
        }
        [0.25, 1.0, 4.0, 16.0, 64.0]
            .iter()
            .map(|m| y - m / g)
            .filter(|x| *x > lo)
            .collect()
    }

    /// Breakpoints above `y` at multiples of the cluster length `1/Gamma`.
    pub fn cluster_breaks_above(&self, y: f64, hi: f64) -> Vec<f64> {
        let g = self.params.gamma();
        if !(g > 0.0) || self.params.gamma_c() == 0.0 {
            return Vec::new();
        }
        [0.25, 1.0, 4.0, 16.0, 64.0]
            .iter()
            .map(|m| y + m / g)
            .filter(|x| *x < hi)
            .collect()
    }
}
