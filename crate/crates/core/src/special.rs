//! Parabolic cylinder functions, spherical harmonics, spin-1/2 Clebsch-Gordan
//! coefficients and spherical spinors.
//!
//! Half-integers are passed doubled (`j2 = 2j`, `m2 = 2M`).

use crate::gamma::{Mat2, C64, I, ONE};
use crate::jet::{Jet, Scalar};
use crate::ode::{dopri5, OdeOptions};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("argument out of supported range: nu = {nu}, x = {x}")]
    OutOfRange { nu: f64, x: f64 },
    #[error("invalid quantum numbers: {0}")]
    QuantumNumbers(String),
    #[error("integration failed: {0}")]
    Integration(String),
}

pub const PCF_MAX_X: f64 = 40.0;
pub const PCF_MAX_NU: f64 = 50.0;
/// Where the Kummer series hands over to integration of Weber's equation.
pub const PCF_SWITCH: f64 = 6.0;
const PCF_SERIES_MAX_NU: f64 = 20.0;

fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

fn kummer(a: f64, b: f64, z: f64) -> f64 {
    let (mut s, mut t) = (1.0, 1.0);
    for k in 0..4000 {
        let kf = k as f64;
        t *= (a + kf) / (b + kf) * z / (kf + 1.0);
        s += t;
        if t.abs() < 1e-17 * s.abs() && k > 5 {
            break;
        }
    }
    s
}

/// D_nu(x) from the confluent hypergeometric representation.
pub fn pcf_series(nu: f64, x: f64) -> f64 {
    let z = x * x / 2.0;
    2f64.powf(nu / 2.0)
        * (-x * x / 4.0).exp()
        * (PI.sqrt() * rgamma((1.0 - nu) / 2.0) * kummer(-nu / 2.0, 0.5, z)
            - (2.0 * PI).sqrt() * x * rgamma(-nu / 2.0) * kummer((1.0 - nu) / 2.0, 1.5, z))
}

fn hermite_pcf(n: u32, x: f64) -> (f64, f64) {
    // He_{k+1} = x He_k - k He_{k-1}; D' = (x/2) D - D_{n+1}
    let (mut h0, mut h1) = (1.0, x);
    for k in 1..=n {
        let h2 = x * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    let e = (-x * x / 4.0).exp();
    (h0 * e, (x / 2.0 * h0 - h1) * e)
}

/// Leading asymptotic behaviour for large positive x: returns (ln D, D'/D).
fn pcf_asymptotic_log(nu: f64, x: f64) -> (f64, f64) {
    let (mut s, mut ds) = (1.0, 0.0);
    let mut t: f64 = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        let next = t * (-(nu - 2.0 * kf + 2.0) * (nu - 2.0 * kf + 1.0)) / (2.0 * kf * x * x);
        if next.abs() > t.abs() {
            break;
        }
        t = next;
        s += t;
        ds += t * (-2.0 * kf / x);
        if t.abs() < 1e-18 * s.abs() {
            break;
        }
    }
    (nu * x.ln() - x * x / 4.0 + s.ln(), nu / x - x / 2.0 + ds / s)
}

/// Integrates Weber's equation y'' = (x^2/4 - nu - 1/2) y from x0 to x1 in unit
/// segments, keeping (y, y') normalized and the scale in `log`.
fn weber_transport(nu: f64, x0: f64, y: [f64; 2], log: f64, x1: f64) -> Result<([f64; 2], f64), SpecialError> {
    let mut st = [C64::from(y[0]), C64::from(y[1])];
    let mut log = log;
    let mut x = x0;
    let opts = OdeOptions { h_init: Some(0.05), ..OdeOptions::with_tol(1e-14) };
    while (x1 - x).abs() > 0.0 {
        let step = (x1 - x).clamp(-1.0, 1.0);
        let xn = if (x1 - x - step).abs() < 1e-12 { x1 } else { x + step };
        let out = dopri5(
            |t, y, dy| {
                dy[0] = y[1];
                dy[1] = y[0] * (t * t / 4.0 - nu - 0.5);
            },
            x,
            &st,
            &[xn],
            &opts,
        )
        .map_err(|e| SpecialError::Integration(e.to_string()))?;
        st = [out[0][0], out[0][1]];
        let sc = st[0].norm().max(st[1].norm());
        if sc > 0.0 {
            st = [st[0] / sc, st[1] / sc];
            log += sc.ln();
        }
        x = xn;
    }
    Ok(([st[0].re, st[1].re], log))
}

fn check_range(nu: f64, x: f64) -> Result<(), SpecialError> {
    if !(x.abs() <= PCF_MAX_X && nu.abs() <= PCF_MAX_NU) {
        return Err(SpecialError::OutOfRange { nu, x });
    }
    Ok(())
}

/// Whittaker's D_nu(x) together with its x-derivative.
pub fn parabolic_cylinder_d_with_derivative(nu: f64, x: f64) -> Result<(f64, f64), SpecialError> {
    check_range(nu, x)?;
    if nu >= 0.0 && nu == nu.round() {
        return Ok(hermite_pcf(nu as u32, x));
    }
    let series_pair = |x: f64| {
        let d = pcf_series(nu, x);
        (d, x / 2.0 * d - pcf_series(nu + 1.0, x))
    };
    // above this order the Kummer terms cancel to worse than 1e-10
    let series_ok = nu < PCF_SERIES_MAX_NU;
    if series_ok && (-PCF_SWITCH..=0.0).contains(&x) {
        return Ok(series_pair(x));
    }
    let (y, log) = if x < 0.0 && series_ok {
        // away from the origin on the negative side D_nu is the dominant solution
        let (d, dp) = series_pair(-PCF_SWITCH);
        let sc = d.abs().max(dp.abs());
        weber_transport(nu, -PCF_SWITCH, [d / sc, dp / sc], sc.ln(), x)?
    } else {
        // recessive at +infinity, so integrate inward from the asymptotic region
        let x_far = (x + 5.0).max(nu.abs() + 15.0);
        let (ln_d, ldiff) = pcf_asymptotic_log(nu, x_far);
        weber_transport(nu, x_far, [1.0, ldiff], ln_d, x)?
    };
    let scale = log.exp();
    Ok((y[0] * scale, y[1] * scale))
}

pub fn parabolic_cylinder_d(nu: f64, x: f64) -> Result<f64, SpecialError> {
    parabolic_cylinder_d_with_derivative(nu, x).map(|p| p.0)
}

/// D_nu composed with a jet argument, higher derivatives from Weber's equation.
pub fn parabolic_cylinder_jet(nu: f64, xi: &Jet) -> Result<Jet, SpecialError> {
    let x0 = xi.value();
    if x0.im != 0.0 {
        return Err(SpecialError::OutOfRange { nu, x: f64::NAN });
    }
    let x = x0.re;
    let (d, dp) = parabolic_cylinder_d_with_derivative(nu, x)?;
    let w = x * x / 4.0 - nu - 0.5;
    let d2 = w * d;
    let d3 = x / 2.0 * d + w * dp;
    Ok(xi.compose([C64::from(d), C64::from(dp), C64::from(d2 / 2.0), C64::from(d3 / 6.0)]))
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = -z;
        xs[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

/// Coefficients (ascending powers) of d^m P_l / dz^m.
pub fn legendre_derivative_coeffs(l: u32, m: u32) -> Vec<f64> {
    let mut p0 = vec![1.0];
    let mut p1 = vec![0.0, 1.0];
    let mut p = if l == 0 { p0.clone() } else { p1.clone() };
    for k in 1..l {
        let kf = k as f64;
        let mut next = vec![0.0; k as usize + 2];
        for (i, c) in p1.iter().enumerate() {
            next[i + 1] += (2.0 * kf + 1.0) * c / (kf + 1.0);
        }
        for (i, c) in p0.iter().enumerate() {
            next[i] -= kf * c / (kf + 1.0);
        }
        p0 = p1;
        p1 = next;
        p = p1.clone();
    }
    for _ in 0..m {
        p = p.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
        if p.is_empty() {
            p.push(0.0);
        }
    }
    p
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn check_lm(l: u32, m: i32) -> Result<(), SpecialError> {
    if m.unsigned_abs() > l {
        return Err(SpecialError::QuantumNumbers(format!("|m| = {} exceeds l = {l}", m.abs())));
    }
    Ok(())
}

/// Y_l^m (Condon-Shortley) as a polynomial in the unit vector n, usable on jets.
pub fn ylm_from_direction<T: Scalar>(l: u32, m: i32, n: &[T; 3]) -> T {
    let ma = m.unsigned_abs();
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - ma) / factorial(l + ma)).sqrt();
    let coeffs = legendre_derivative_coeffs(l, ma);
    let mut poly = T::re(0.0);
    for c in coeffs.iter().rev() {
        poly = poly * n[2] + *c;
    }
    let transverse = if m >= 0 { n[0] + n[1] * I } else { n[0] + n[1] * (-I) };
    let sign = if m > 0 && m % 2 == 1 { -1.0 } else { 1.0 };
    poly * transverse.powi(ma) * (norm * sign)
}

fn direction<T: Scalar>(theta: T, phi: T) -> [T; 3] {
    let s = theta.sin();
    [s * phi.cos(), s * phi.sin(), theta.cos()]
}

pub fn spherical_harmonic(l: u32, m: i32, theta: f64, phi: f64) -> Result<C64, SpecialError> {
    check_lm(l, m)?;
    if !(theta > 0.0 && theta < PI) {
        return Err(SpecialError::QuantumNumbers(format!("theta = {theta} outside (0, pi)")));
    }
    Ok(ylm_from_direction(l, m, &direction(C64::from(theta), C64::from(phi))))
}

/// <l m_l; 1/2 m_s | j M> with m_s = ms2 / 2 and j = j2 / 2 = l +- 1/2.
pub fn cg_half(l: u32, ml: i32, ms2: i32, j2: u32) -> Result<f64, SpecialError> {
    if ms2.abs() != 1 || ml.unsigned_abs() > l || !(j2 == 2 * l + 1 || j2 + 1 == 2 * l) {
        return Err(SpecialError::QuantumNumbers(format!("l = {l}, m_l = {ml}, 2m_s = {ms2}, 2j = {j2}")));
    }
    let m2 = 2 * ml + ms2;
    let l2 = 2 * l as i32;
    let den = 2.0 * (l2 + 1) as f64;
    Ok(if j2 == 2 * l + 1 {
        ((l2 + ms2 * m2 + 1) as f64 / den).sqrt()
    } else {
        -(ms2 as f64) * ((l2 - ms2 * m2 + 1) as f64 / den).sqrt()
    })
}

/// Validates (2j, 2M, zeta) and returns l = j - zeta/2.
pub fn spinor_l(j2: u32, m2: i32, zeta: i32) -> Result<u32, SpecialError> {
    if j2 % 2 == 0 || m2.unsigned_abs() > j2 || (m2 - j2 as i32) % 2 != 0 || zeta.abs() != 1 {
        return Err(SpecialError::QuantumNumbers(format!("2j = {j2}, 2M = {m2}, zeta = {zeta}")));
    }
    Ok(((j2 as i32 - zeta) / 2) as u32)
}

/// Edmonds spherical spinor with orbital l as a function of a direction.
pub fn edmonds_from_direction<T: Scalar>(j2: u32, m2: i32, l: u32, n: &[T; 3]) -> [T; 2] {
    let mut out = [T::re(0.0), T::re(0.0)];
    for (slot, ms2) in [(0, 1), (1, -1)] {
        let ml2 = m2 - ms2;
        let ml = ml2 / 2;
        if ml.unsigned_abs() <= l {
            let c = cg_half(l, ml, ms2, j2).expect("validated quantum numbers");
            out[slot] = ylm_from_direction(l, ml, n) * c;
        }
    }
    out
}

/// Omega^j_{M zeta}(theta, phi), z-quantized, l = j - zeta/2.
pub fn spherical_spinor(j2: u32, m2: i32, zeta: i32, theta: f64, phi: f64) -> Result<[C64; 2], SpecialError> {
    let l = spinor_l(j2, m2, zeta)?;
    Ok(edmonds_from_direction(j2, m2, l, &direction(C64::from(theta), C64::from(phi))))
}

fn mat2_apply<T: Scalar>(m: &Mat2, v: &[T; 2]) -> [T; 2] {
    [v[0] * m.0[0][0] + v[1] * m.0[0][1], v[0] * m.0[1][0] + v[1] * m.0[1][1]]
}

/// Spherical spinor in the rotated spinor frame used by the spherical symmetry
/// operators: R(theta, phi)^dagger U_x Omega(O_x^T n), with zeta = +1 built from
/// l = j - 1/2 and the partner fixed by Omega_{M,-zeta} = i zeta sigma_1 Omega_{M,zeta}.
pub fn frame_spinor<T: Scalar>(j2: u32, m2: i32, zeta: i32, theta: T, phi: T) -> Result<[T; 2], SpecialError> {
    spinor_l(j2, m2, zeta)?;
    let n = direction(theta, phi);
    let m = [-n[2], n[1], n[0]];
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let ux = Mat2([[C64::from(c), C64::from(-c)], [C64::from(c), C64::from(c)]]);
    let u0 = Mat2([[(ONE + I) * 0.5, (ONE + I) * 0.5], [(I - ONE) * 0.5, (ONE - I) * 0.5]]);
    let base = mat2_apply(&ux, &edmonds_from_direction(j2, m2, ((j2 - 1) / 2) as u32, &m));
    // R^dagger = U0^dagger (cos(t/2) + i sin(t/2) sigma_2) diag(e^{i phi/2}, e^{-i phi/2})
    let ph = (phi * (I * 0.5)).exp();
    let v = [base[0] * ph, base[1] * ph.recip()];
    let (ch, sh) = ((theta * 0.5).cos(), (theta * 0.5).sin());
    let v = [ch * v[0] + sh * v[1], ch * v[1] - sh * v[0]];
    let plus = mat2_apply(&u0.dagger(), &v);
    Ok(if zeta == 1 { plus } else { [plus[1] * I, plus[0] * I] })
}

/// Integral of |Omega|^2 over the sphere (Gauss-Legendre in cos theta, trapezoid in phi).
pub fn spinor_norm<F: Fn(f64, f64) -> [C64; 2]>(omega: F, n_theta: usize, n_phi: usize) -> f64 {
    let (xs, ws) = gauss_legendre(n_theta);
    let mut acc = 0.0;
    for (x, w) in xs.iter().zip(&ws) {
        let th = x.acos();
        for k in 0..n_phi {
            let ph = 2.0 * PI * k as f64 / n_phi as f64;
            let o = omega(th, ph);
            acc += w * (o[0].norm_sqr() + o[1].norm_sqr());
        }
    }
    acc * 2.0 * PI / n_phi as f64
}
