//! Transmission and reflection probabilities of one-, two- and three-photon
//! Fock packets, split into plane-wave (PW) and bound-state (BS) parts.
//!
//! Probabilities are integrated in position space, where every sector
//! amplitude is a short sum of products of the closed-form profiles in
//! [`crate::pulses`]. On the ordered region `y1 < y2 < y3` each amplitude is a
//! low-rank sum of functions of `y1` times functions of `y3`, so the
//! three-dimensional integral collapses to an outer integral over `y2` of
//! products of one-dimensional Gram integrals.

use std::cell::Cell;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{chiral_coefficients, GaussianPacket, SystemParams};
use crate::pulses::Pulse;
use crate::quadrature::{integrate_with, Estimate, QuadratureSpec};
use crate::smatrix::SectorLabel;
use crate::C64;

/// Largest unitarity defect tolerated for lossless emitters before a result
/// is flagged.
pub const UNITARITY_FLAG: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorEntry {
    pub sector: SectorLabel,
    pub total: f64,
    pub pw: f64,
    pub bs: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorProbabilities {
    pub n: usize,
    /// Ordered by decreasing number of transmitted photons.
    pub sectors: Vec<SectorEntry>,
    /// `|sum of totals - 1|`, reported only for lossless emitters.
    pub unitarity_defect: Option<f64>,
    pub flagged: bool,
    pub warnings: Vec<String>,
}

impl SectorProbabilities {
    fn assemble(n: usize, p: &SystemParams, pkt: &GaussianPacket, totals: &[f64], pws: &[f64], errs: &[f64]) -> Self {
        let sectors: Vec<SectorEntry> = (0..=n)
            .map(|n_left| SectorEntry {
                sector: SectorLabel::new(n - n_left, n_left),
                total: totals[n_left],
                pw: pws[n_left],
                bs: totals[n_left] - pws[n_left],
                error: errs[n_left],
            })
            .collect();
        let sum: f64 = totals.iter().sum();
        let unitarity_defect = (p.gamma_prime == 0.0).then(|| (sum - 1.0).abs());
        let mut warnings: Vec<String> = pkt.narrowband_warning().into_iter().collect();
        let flagged = unitarity_defect.is_some_and(|d| d > UNITARITY_FLAG);
        if flagged {
            warnings.push(format!(
                "sector probabilities sum to {sum:.6} for a lossless emitter"
            ));
        }
        Self {
            n,
            sectors,
            unitarity_defect,
            flagged,
            warnings,
        }
    }

    pub fn get(&self, sector: &str) -> Option<&SectorEntry> {
        self.sectors.iter().find(|e| e.sector.to_string() == sector)
    }

    pub fn total_sum(&self) -> f64 {
        self.sectors.iter().map(|e| e.total).sum()
    }
}

/// Single-photon probabilities from the momentum-space integrals of
/// `alpha^2 |t|^2` and `alpha^2 |r|^2`.
pub fn prob_one(pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec) -> Result<SectorProbabilities> {
    q.validate()?;
    let w = q.window_halfwidth * pkt.delta;
    let est = integrate_with(
        |k| {
            let (t, r) = chiral_coefficients(k, p);
            let a2 = pkt.alpha(k).powi(2);
            [a2 * t.norm_sqr(), a2 * r.norm_sqr()]
        },
        pkt.k0 - w,
        pkt.k0 + w,
        &[p.epsilon],
        q,
    )?;
    let [pr, pl] = est.value;
    Ok(SectorProbabilities::assemble(
        1,
        p,
        pkt,
        &[pr, pl],
        &[pr, pl],
        &[est.error, est.error],
    ))
}

/// Gram matrix entries of three functions, upper triangle in row order:
/// (00, 11, 22, 01, 02, 12), with `G_ij = integral of u_i conj(u_j)`.
type Gram = [C64; 6];

fn gram(u: [C64; 3]) -> Gram {
    [
        C64::new(u[0].norm_sqr(), 0.0),
        C64::new(u[1].norm_sqr(), 0.0),
        C64::new(u[2].norm_sqr(), 0.0),
        u[0] * u[1].conj(),
        u[0] * u[2].conj(),
        u[1] * u[2].conj(),
    ]
}

fn gram_at(g: &Gram, i: usize, j: usize) -> C64 {
    let idx = |i: usize, j: usize| match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) => 3,
        (0, 2) => 4,
        _ => 5,
    };
    if i <= j {
        g[idx(i, j)]
    } else {
        g[idx(j, i)].conj()
    }
}

/// Shared machinery of the two- and three-photon integrals.
struct Layout {
    pulse: Pulse,
    lo: f64,
    hi: f64,
    breaks: Vec<f64>,
    inner_q: QuadratureSpec,
    inner_rel: Cell<f64>,
    failure: Cell<Option<(f64, f64, usize)>>,
}

impl Layout {
    fn new(pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec) -> Self {
        let pulse = Pulse::new(*p, *pkt);
        let (lo, hi) = pulse.support(q.window_halfwidth);
        let breaks = pulse.breakpoints(q.window_halfwidth);
        let inner_q = QuadratureSpec {
            rel_tol: 0.25 * q.rel_tol,
            abs_tol: 1e-3 * q.abs_tol,
            ..*q
        };
        Self {
            pulse,
            lo,
            hi,
            breaks,
            inner_q,
            inner_rel: Cell::new(0.0),
            failure: Cell::new(None),
        }
    }

    fn record(&self, r: Result<Estimate<Gram>>) -> Gram {
        match r {
            Ok(e) => {
                let scale = e.value.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if scale > 0.0 {
                    self.inner_rel.set(self.inner_rel.get().max(e.error / scale));
                }
                e.value
            }
            Err(Error::Quadrature {
                value,
                error,
                subdivisions,
            }) => {
                if self.failure.get().is_none() {
                    self.failure.set(Some((value, error, subdivisions)));
                }
                [C64::new(0.0, 0.0); 6]
            }
            Err(_) => [C64::new(0.0, 0.0); 6],
        }
    }

    /// Gram of `(psi_t, psi_r, exp(-lambda (y - s)))` over `s` in `[lo, y]`.
    fn left(&self, y: f64) -> Gram {
        if y <= self.lo {
            return [C64::new(0.0, 0.0); 6];
        }
        let mut br: Vec<f64> = self.breaks.iter().copied().filter(|b| *b < y).collect();
        br.extend(self.pulse.cluster_breaks_below(y, self.lo));
        let pulse = &self.pulse;
        self.record(integrate_with(
            |s| {
                let (t, r) = pulse.outputs(s);
                gram([t, r, pulse.decay(s, y)])
            },
            self.lo,
            y,
            &br,
            &self.inner_q,
        ))
    }

    /// Gram of `(psi_t, psi_r, psi_r^2 exp(-lambda (s - y)))` over `s` in `[y, hi]`.
    fn right(&self, y: f64) -> Gram {
        if y >= self.hi {
            return [C64::new(0.0, 0.0); 6];
        }
        let mut br: Vec<f64> = self.breaks.iter().copied().filter(|b| *b > y).collect();
        br.extend(self.pulse.cluster_breaks_above(y, self.hi));
        let pulse = &self.pulse;
        self.record(integrate_with(
            |s| {
                let (t, r) = pulse.outputs(s);
                gram([t, r, r * r * pulse.decay(y, s)])
            },
            y,
            self.hi,
            &br,
            &self.inner_q,
        ))
    }

    fn finish<const M: usize>(&self, outer: Result<Estimate<[f64; M]>>) -> Result<Estimate<[f64; M]>> {
        let mut est = outer?;
        if let Some((value, error, subdivisions)) = self.failure.get() {
            return Err(Error::Quadrature {
                value,
                error,
                subdivisions,
            });
        }
        let scale = est.value.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        est.error += self.inner_rel.get() * scale;
        Ok(est)
    }
}

/// Single-photon profile as a real combination `c_t psi_t + c_r psi_r`.
pub(crate) type Profile = [f64; 2];
pub(crate) const TRANSMITTED: Profile = [1.0, 0.0];
pub(crate) const REFLECTED: Profile = [0.0, 1.0];

fn mix(f: &Profile, t: C64, r: C64) -> C64 {
    t * f[0] + r * f[1]
}

/// Gram entry between basis functions `i`, `j`, where indices 0 and 1 stand
/// for the profile combination `f` and 2 for the cluster factor.
fn gram_mixed(g: &Gram, f: &Profile, i: usize, j: usize) -> C64 {
    match (i == 2, j == 2) {
        (true, true) => gram_at(g, 2, 2),
        (false, true) => gram_at(g, 0, 2) * f[0] + gram_at(g, 1, 2) * f[1],
        (true, false) => (gram_at(g, 0, 2) * f[0] + gram_at(g, 1, 2) * f[1]).conj(),
        (false, false) => {
            let mut s = C64::new(0.0, 0.0);
            for a in 0..2 {
                for b in 0..2 {
                    s += gram_at(g, a, b) * (f[a] * f[b]);
                }
            }
            s
        }
    }
}

/// Ordered-region density of `|F|^2` and `|F_pw|^2` for two photons at fixed
/// `y2`, with `g` the left Gram at `y2`.
fn density_two(f: [&Profile; 2], g: &Gram, t2: C64, r2: C64) -> (f64, f64) {
    let a = mix(f[1], t2, r2);
    let b = -(r2 * r2);
    let xx = gram_mixed(g, f[0], 0, 0).re;
    let total = a.norm_sqr() * xx
        + b.norm_sqr() * gram_at(g, 2, 2).re
        + 2.0 * (a * b.conj() * gram_mixed(g, f[0], 0, 2)).re;
    (total, a.norm_sqr() * xx)
}

/// Same for three photons, with `gu`, `gw` the Grams left and right of `y2`.
fn density_three(f: [&Profile; 3], gu: &Gram, gw: &Gram, t2: C64, r2: C64) -> (f64, f64) {
    let f2 = mix(f[1], t2, r2);
    let one = C64::new(1.0, 0.0);
    // Amplitude = sum_ab U_a M_ab W_b with U = (f1, decay), W = (f3, psi_r^2 decay).
    let m = [[f2, -one], [-(r2 * r2), r2 * 2.0 - f2]];
    let idx = [0, 2];
    let mut total = 0.0;
    for a in 0..2 {
        for c in 0..2 {
            let gac = gram_mixed(gu, f[0], idx[a], idx[c]);
            for b in 0..2 {
                for d in 0..2 {
                    let gbd = gram_mixed(gw, f[2], idx[b], idx[d]);
                    total += (m[a][b] * m[c][d].conj() * gac * gbd).re;
                }
            }
        }
    }
    let pw = f2.norm_sqr() * gram_mixed(gu, f[0], 0, 0).re * gram_mixed(gw, f[2], 0, 0).re;
    (total, pw)
}

const LETTERS: [Profile; 2] = [TRANSMITTED, REFLECTED];

/// Two-photon probabilities of the sectors RR, RL and LL.
pub fn prob_two(pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec) -> Result<SectorProbabilities> {
    q.validate()?;
    let lay = Layout::new(pkt, p, q);
    let outer = integrate_with(
        |y2| {
            let g = lay.left(y2);
            let (t2, r2) = lay.pulse.outputs(y2);
            let mut out = [0.0; 6];
            for s1 in 0..2 {
                for s2 in 0..2 {
                    let (total, pw) = density_two([&LETTERS[s1], &LETTERS[s2]], &g, t2, r2);
                    out[s1 + s2] += 2.0 * total;
                    out[3 + s1 + s2] += 2.0 * pw;
                }
            }
            out
        },
        lay.lo,
        lay.hi,
        &lay.breaks,
        q,
    );
    let est = lay.finish(outer)?;
    let v = est.value;
    Ok(SectorProbabilities::assemble(
        2,
        p,
        pkt,
        &v[..3],
        &v[3..],
        &[est.error; 3],
    ))
}

/// Three-photon probabilities of the sectors RRR, RRL, RLL and LLL.
pub fn prob_three(pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec) -> Result<SectorProbabilities> {
    q.validate()?;
    let lay = Layout::new(pkt, p, q);
    let outer = integrate_with(
        |y2| {
            let gu = lay.left(y2);
            let gw = lay.right(y2);
            let (t2, r2) = lay.pulse.outputs(y2);
            let mut out = [0.0; 8];
            for s1 in 0..2 {
                for s2 in 0..2 {
                    for s3 in 0..2 {
                        let f = [&LETTERS[s1], &LETTERS[s2], &LETTERS[s3]];
                        let (total, pw) = density_three(f, &gu, &gw, t2, r2);
                        let nl = s1 + s2 + s3;
                        out[nl] += 6.0 * total;
                        out[4 + nl] += 6.0 * pw;
                    }
                }
            }
            out
        },
        lay.lo,
        lay.hi,
        &lay.breaks,
        q,
    );
    let est = lay.finish(outer)?;
    let v = est.value;
    Ok(SectorProbabilities::assemble(
        3,
        p,
        pkt,
        &v[..4],
        &v[4..],
        &[est.error; 4],
    ))
}

/// `integral over R^n of |F|^2` for an amplitude whose every photon carries the
/// same single-photon profile `f` and the standard bound clusters.
pub(crate) fn uniform_norm(n: usize, f: &Profile, pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec) -> Result<Estimate<f64>> {
    q.validate()?;
    let lay = Layout::new(pkt, p, q);
    let outer = match n {
        1 => integrate_with(
            |y| {
                let (t, r) = lay.pulse.outputs(y);
                [mix(f, t, r).norm_sqr()]
            },
            lay.lo,
            lay.hi,
            &lay.breaks,
            q,
        ),
        2 => integrate_with(
            |y2| {
                let g = lay.left(y2);
                let (t2, r2) = lay.pulse.outputs(y2);
                [2.0 * density_two([f, f], &g, t2, r2).0]
            },
            lay.lo,
            lay.hi,
            &lay.breaks,
            q,
        ),
        3 => integrate_with(
            |y2| {
                let gu = lay.left(y2);
                let gw = lay.right(y2);
                let (t2, r2) = lay.pulse.outputs(y2);
                [6.0 * density_three([f, f, f], &gu, &gw, t2, r2).0]
            },
            lay.lo,
            lay.hi,
            &lay.breaks,
            q,
        ),
        _ => return Err(Error::PhotonNumber { n, min: 1, max: 3 }),
    };
    let est = lay.finish(outer)?;
    Ok(Estimate {
        value: est.value[0],
        error: est.error,
        subdivisions: est.subdivisions,
    })
}

/// Dispatch on the photon number.
pub fn prob(n: usize, pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec) -> Result<SectorProbabilities> {
    match n {
        1 => prob_one(pkt, p, q),
        2 => prob_two(pkt, p, q),
        3 => prob_three(pkt, p, q),
        _ => Err(Error::PhotonNumber { n, min: 1, max: 3 }),
    }
}

/// Probabilities of the independent-photon model: each photon is transmitted
/// with probability `p_r` and reflected with `p_l`, `multinomial` over sectors.
pub fn independent_photon(n: usize, p_r: f64, p_l: f64) -> Vec<f64> {
    (0..=n)
        .map(|nl| binomial(n, nl) * p_r.powi((n - nl) as i32) * p_l.powi(nl as i32))
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub v: f64,
    pub result: std::result::Result<SectorProbabilities, String>,
}

/// Probabilities over a grid of couplings, rows in grid order. A failing
/// point is recorded and the sweep continues.
pub fn sweep(n: usize, v_grid: &[f64], pkt: &GaussianPacket, p: &SystemParams, q: &QuadratureSpec) -> Result<Vec<SweepRow>> {
    if !(1..=3).contains(&n) {
        return Err(Error::PhotonNumber { n, min: 1, max: 3 });
    }
    q.validate()?;
    Ok(v_grid
        .par_iter()
        .map(|&v| {
            let result = SystemParams::new(p.epsilon, v, p.gamma_prime)
                .and_then(|pv| prob(n, pkt, &pv, q))
                .map_err(|e| e.to_string());
            SweepRow { v, result }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pkt() -> GaussianPacket {
        GaussianPacket::new(10.0, 0.1, 1.0).unwrap()
    }

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn decoupled_photons_are_transmitted() {
        let p = SystemParams::lossless(0.0);
        for n in 1..=3 {
            let r = prob(n, &pkt(), &p, &q()).unwrap();
            assert!((r.sectors[0].total - 1.0).abs() < 1e-8, "n={n}: {:?}", r.sectors);
            for e in &r.sectors[1..] {
                assert!(e.total.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_photon_is_unitary() {
        for v in [0.1, 0.5, 1.0] {
            let r = prob_one(&pkt(), &SystemParams::lossless(v), &q()).unwrap();
            assert!(r.unitarity_defect.unwrap() < 1e-8);
            assert_eq!(r.sectors[0].bs, 0.0);
        }
    }

    #[test]
    fn strong_coupling_mirror() {
        let r = prob_one(&pkt(), &SystemParams::lossless(1.0), &q()).unwrap();
        assert!(r.sectors[0].total < 0.05);
    }

    #[test]
    fn two_photon_unitarity_and_pw_split() {
        for v in [0.3, 0.8] {
            let p = SystemParams::lossless(v);
            let one = prob_one(&pkt(), &p, &q()).unwrap();
            let two = prob_two(&pkt(), &p, &q()).unwrap();
            assert!(two.unitarity_defect.unwrap() < 1e-4, "v={v}: {:?}", two.sectors);
            let ind = independent_photon(2, one.sectors[0].total, one.sectors[1].total);
            for (e, x) in two.sectors.iter().zip(&ind) {
                assert!((e.pw - x).abs() < 1e-6, "v={v} {}: {} vs {x}", e.sector, e.pw);
            }
        }
    }

    #[test]
    fn three_photon_unitarity() {
        let p = SystemParams::lossless(0.5);
        let three = prob_three(&pkt(), &p, &q()).unwrap();
        assert!(three.unitarity_defect.unwrap() < 1e-4, "{:?}", three.sectors);
    }

    #[test]
    fn out_of_range_photon_number() {
        assert!(matches!(
            prob(4, &pkt(), &SystemParams::lossless(0.2), &q()),
            Err(Error::PhotonNumber { .. })
        ));
    }

    #[test]
    fn empty_sweep() {
        assert!(sweep(2, &[], &pkt(), &SystemParams::lossless(0.0), &q()).unwrap().is_empty());
    }

    #[test]
    fn binomials() {
        assert_eq!(independent_photon(3, 0.5, 0.5), vec![0.125, 0.375, 0.375, 0.125]);
    }
}
