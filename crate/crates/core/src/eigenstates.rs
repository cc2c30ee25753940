//! Real-space n-photon scattering eigenstates of the even mode.
//!
//! `g_n(x_1..x_n)` is the photon amplitude with the emitter in its ground
//! state and `e_n(x_1..x_{n-1})` the amplitude with the emitter excited. The
//! step function takes the value 1/2 at the origin.
//!
//! For four photons the pair-pair term and the two-plane-wave-plus-pair term
//! are summed with weight 1/2: the full permutation sum visits each of their
//! configurations twice. With this counting the open-boundary, bosonic
//! symmetry and free-propagation properties hold. The emitter amplitude is
//! continuous only while at most one photon has passed the emitter.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{even_transmission, SystemParams};
use crate::C64;

/// Relative offset of the one-sided limits used at the discontinuities.
pub const DEFAULT_ETA: f64 = 1e-9;

/// Step function with `theta(0) = 1/2`.
pub fn theta(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// `exp(i k x) / sqrt(2 pi)`.
pub fn plane_wave(k: f64, x: f64) -> C64 {
    C64::new(0.0, k * x).exp() / (2.0 * PI).sqrt()
}

/// One-photon eigenstate `h_k(x) [theta(-x) + tbar_k theta(x)]`.
pub fn single(k: f64, x: f64, p: &SystemParams) -> C64 {
    plane_wave(k, x) * (even_transmission(k, p) * theta(x) + theta(-x))
}

/// Total energy `k_1 + ... + k_n`.
pub fn energy(ks: &[f64]) -> f64 {
    ks.iter().sum()
}

/// n-body bound state
/// `-(-2)^(n-2) prod (tbar_ki - 1) prod theta(x_{i+1} - x_i)
///  h_k1(x_n) h_k2(x_2) ... h_k{n-1}(x_{n-1}) h_kn(x_n) exp((-Gamma/2 - i eps)|x_n - x_1|)`.
pub fn bound_state(ks: &[f64], xs: &[f64], p: &SystemParams) -> Result<C64> {
    let n = ks.len();
    if !(2..=5).contains(&n) {
        return Err(Error::PhotonNumber { n, min: 2, max: 5 });
    }
    if xs.len() != n {
        return Err(Error::Arity {
            expected: n,
            got: xs.len(),
        });
    }
    Ok(bound_unchecked(ks, xs, p))
}

fn bound_unchecked(ks: &[f64], xs: &[f64], p: &SystemParams) -> C64 {
    let n = ks.len();
    let mut order = 1.0;
    for w in xs.windows(2) {
        order *= theta(w[1] - w[0]);
    }
    if order == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let mut v = C64::new(-(-2.0f64).powi(n as i32 - 2) * order, 0.0);
    for &k in ks {
        v *= even_transmission(k, p) - 1.0;
    }
    v *= plane_wave(ks[0], xs[n - 1]) * plane_wave(ks[n - 1], xs[n - 1]);
    for i in 1..n - 1 {
        v *= plane_wave(ks[i], xs[i]);
    }
    let s = (xs[n - 1] - xs[0]).abs();
    v * C64::new(-0.5 * p.gamma() * s, -p.epsilon * s).exp()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            prefix.push(v);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

fn check_tuple(ks: &[f64], xs: &[f64], max: usize) -> Result<()> {
    let n = ks.len();
    if !(1..=max).contains(&n) {
        return Err(Error::PhotonNumber { n, min: 1, max });
    }
    if xs.len() != n {
        return Err(Error::Arity {
            expected: n,
            got: xs.len(),
        });
    }
    Ok(())
}

/// Photon amplitude `g_n` for `n <= 4`. Positions must avoid the origin;
/// see [`midpoint_value`] for the value on the discontinuity.
pub fn eigenstate_g(ks: &[f64], xs: &[f64], p: &SystemParams) -> Result<C64> {
    check_tuple(ks, xs, 4)?;
    if let Some(x) = xs.iter().find(|x| **x == 0.0) {
        return Err(Error::InvalidParameter(format!(
            "position {x} lies on the emitter; use the midpoint value"
        )));
    }
    Ok(g_unchecked(ks, xs, p))
}

fn g_unchecked(ks: &[f64], xs: &[f64], p: &SystemParams) -> C64 {
    let n = ks.len();
    let perms = permutations(n);
    let g = |i: usize, x: f64| single(ks[i], x, p);
    let b = |kk: &[f64], xx: &[f64]| bound_unchecked(kk, xx, p);
    let mut sum = C64::new(0.0, 0.0);
    for q in &perms {
        sum += (0..n).map(|i| g(i, xs[q[i]])).product::<C64>();
    }
    if n >= 2 {
        for pp in &perms {
            let k: Vec<f64> = pp.iter().map(|&i| ks[i]).collect();
            for q in &perms {
                let x: Vec<f64> = q.iter().map(|&i| xs[i]).collect();
                sum += match n {
                    2 => b(&k, &x) * theta(x[0]),
                    3 => {
                        single(k[0], x[0], p) * b(&k[1..], &x[1..]) * theta(x[1])
                            + b(&k, &x) * theta(x[0])
                    }
                    _ => {
                        single(k[0], x[0], p) * single(k[1], x[1], p) * b(&k[2..], &x[2..]) * (0.5 * theta(x[2]))
                            + single(k[0], x[0], p) * b(&k[1..], &x[1..]) * theta(x[1])
                            + b(&k[..2], &x[..2]) * b(&k[2..], &x[2..]) * (0.5 * theta(x[0]) * theta(x[2]))
                            + b(&k, &x) * theta(x[0])
                    }
                };
            }
        }
    }
    sum / perms.len() as f64
}

/// Symmetrized free-boson plane wave `(1/n!) sum_Q prod h_ki(x_Qi)`.
pub fn free_plane_wave(ks: &[f64], xs: &[f64]) -> C64 {
    let perms = permutations(ks.len());
    let s: C64 = perms
        .iter()
        .map(|q| ks.iter().enumerate().map(|(i, &k)| plane_wave(k, xs[q[i]])).product::<C64>())
        .sum();
    s / perms.len() as f64
}

/// Offset of the one-sided limits: `eta` times the shortest physical length.
pub fn limit_offset(ks: &[f64], p: &SystemParams, eta: f64) -> f64 {
    let kmax = ks.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let mut rate = kmax;
    if p.gamma() > 0.0 {
        rate = rate.max(p.gamma());
    }
    if rate == 0.0 {
        eta
    } else {
        eta / rate
    }
}

fn with_first(x0: f64, rest: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(rest.len() + 1);
    v.push(x0);
    v.extend_from_slice(rest);
    v
}

/// Emitter amplitude `e_n(x_1..x_{n-1}) = (n i / Vbar) [g_n(0+, ...) - g_n(0-, ...)]`.
pub fn eigenstate_e(ks: &[f64], xs: &[f64], p: &SystemParams) -> Result<C64> {
    eigenstate_e_eta(ks, xs, p, DEFAULT_ETA)
}

pub fn eigenstate_e_eta(ks: &[f64], xs: &[f64], p: &SystemParams, eta: f64) -> Result<C64> {
    let n = ks.len();
    if !(1..=4).contains(&n) {
        return Err(Error::PhotonNumber { n, min: 1, max: 4 });
    }
    if xs.len() + 1 != n {
        return Err(Error::Arity {
            expected: n - 1,
            got: xs.len(),
        });
    }
    if p.coupling_v == 0.0 {
        return Err(Error::InvalidParameter(
            "emitter amplitude undefined for a decoupled emitter (V = 0)".into(),
        ));
    }
    let h = limit_offset(ks, p, eta);
    let jump = g_unchecked(ks, &with_first(h, xs), p) - g_unchecked(ks, &with_first(-h, xs), p);
    Ok(jump * C64::new(0.0, n as f64 / p.even_coupling()))
}

/// `g_n` with one coordinate on the emitter, as the mean of the one-sided
/// limits. Exactly one entry of `xs` must be zero.
pub fn midpoint_value(ks: &[f64], xs: &[f64], p: &SystemParams) -> Result<C64> {
    midpoint_value_eta(ks, xs, p, DEFAULT_ETA)
}

pub fn midpoint_value_eta(ks: &[f64], xs: &[f64], p: &SystemParams, eta: f64) -> Result<C64> {
    check_tuple(ks, xs, 4)?;
    let zeros: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] == 0.0).collect();
    if zeros.len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "midpoint evaluation needs exactly one zero coordinate, got {}",
            zeros.len()
        )));
    }
    let h = limit_offset(ks, p, eta);
    let mut plus = xs.to_vec();
    let mut minus = xs.to_vec();
    plus[zeros[0]] = h;
    minus[zeros[0]] = -h;
    Ok((g_unchecked(ks, &plus, p) + g_unchecked(ks, &minus, p)) * 0.5)
}

fn check_stencil(xs: &[f64], h: f64) -> Result<()> {
    if !(h > 0.0) {
        return Err(Error::Stencil(format!("step must be > 0, got {h}")));
    }
    for (i, &x) in xs.iter().enumerate() {
        if x.abs() <= 2.0 * h {
            return Err(Error::Stencil(format!("x[{i}] = {x} within the stencil of the emitter")));
        }
        for (j, &y) in xs.iter().enumerate().skip(i + 1) {
            if (x - y).abs() <= 2.0 * h {
                return Err(Error::Stencil(format!("x[{i}] and x[{j}] coincide within the stencil")));
            }
        }
    }
    Ok(())
}

/// Fourth-order central difference of `f(xs + s (1, ..., 1))` at `s = 0`.
fn diagonal_derivative(f: impl Fn(&[f64]) -> C64, xs: &[f64], h: f64) -> C64 {
    let at = |s: f64| {
        let shifted: Vec<f64> = xs.iter().map(|x| x + s).collect();
        f(&shifted)
    };
    (at(-2.0 * h) - at(-h) * 8.0 + at(h) * 8.0 - at(2.0 * h)) / (12.0 * h)
}

/// Relative residual `|[-i (d_1 + ... + d_n) - E] g_n| / (|g_n| + floor)` of the
/// photon equation away from the emitter, by finite differences of step `h`.
pub fn schrodinger_residual(ks: &[f64], xs: &[f64], p: &SystemParams, h: f64) -> Result<f64> {
    check_tuple(ks, xs, 4)?;
    check_stencil(xs, h)?;
    let g0 = g_unchecked(ks, xs, p);
    let d = diagonal_derivative(|x| g_unchecked(ks, x, p), xs, h);
    let r = C64::new(0.0, -1.0) * d - g0 * energy(ks);
    Ok(r.norm() / (g0.norm() + f64::MIN_POSITIVE.sqrt()))
}

/// Relative residual of the emitter equation
/// `[-i (d_1 + ... + d_{n-1}) - E + eps - i Gamma'/2] e_n + n Vbar g_n(0, ...) = 0`.
pub fn emitter_residual(ks: &[f64], xs: &[f64], p: &SystemParams, h: f64) -> Result<f64> {
    let n = ks.len();
    if !(2..=4).contains(&n) {
        return Err(Error::PhotonNumber { n, min: 2, max: 4 });
    }
    check_stencil(xs, h)?;
    let e = |x: &[f64]| eigenstate_e(ks, x, p).unwrap_or(C64::new(f64::NAN, f64::NAN));
    let e0 = eigenstate_e(ks, xs, p)?;
    let d = diagonal_derivative(e, xs, h);
    let g0 = midpoint_value(ks, &with_first(0.0, xs), p)?;
    let drive = g0 * (n as f64 * p.even_coupling());
    let r = C64::new(0.0, -1.0) * d + e0 * C64::new(p.epsilon - energy(ks), -0.5 * p.gamma_prime) + drive;
    Ok(r.norm() / (drive.norm() + f64::MIN_POSITIVE.sqrt()))
}
