//! Dormand-Prince 5(4) integration of complex linear systems, the three reduced
//! systems, and a shooting solver for Dirac-Coulomb bound states.

use crate::gamma::{crossed_field_gammas, GammaError, Mat4, C64, I, ZERO};
use crate::jet::{holonomic_lift, Jet, Scalar};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("non-finite coefficient or state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    MaxSteps { t: f64 },
    #[error("sample points must be monotone away from the start point")]
    BadSamples,
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Gamma(#[from] GammaError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShootError {
    #[error("no bound state with the requested quantum numbers")]
    NoBoundState,
    #[error("critical charge: zalpha = {zalpha} >= |kappa| = {kappa}")]
    CriticalCharge { zalpha: f64, kappa: i32 },
    #[error("invalid quantum numbers: {0}")]
    BadQuantumNumbers(String),
    #[error("secant refinement did not converge (residual {0:e})")]
    NoConvergence(f64),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { rtol: tol, atol: tol, h_init: None, max_steps: 2_000_000 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn all_finite(v: &[C64]) -> bool {
    v.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// Integrates y' = f(t, y) from t0 and returns y at each sample.
///
/// Samples must be monotone in the direction of integration. Steps are clipped so
/// that every sample is hit exactly, so no interpolation is involved.
pub fn dopri5<F>(mut f: F, t0: f64, y0: &[C64], samples: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<C64>>, OdeError>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(OdeError::BadTolerance);
    }
    let Some(&t_end) = samples.last() else {
        return Ok(Vec::new());
    };
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut prev = t0;
    for &s in samples {
        if (s - prev) * dir < 0.0 {
            return Err(OdeError::BadSamples);
        }
        prev = s;
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let span = (t_end - t0).abs();
    let mut h = opts.h_init.unwrap_or((span * 1e-3).max(1e-6)).min(span.max(1e-300));
    let mut k: Vec<Vec<C64>> = vec![vec![ZERO; n]; 7];
    let mut tmp = vec![ZERO; n];
    let mut ynew = vec![ZERO; n];
    f(t, &y, &mut k[0]);
    if !all_finite(&k[0]) {
        return Err(OdeError::NonFinite { t });
    }
    let mut out = Vec::with_capacity(samples.len());
    let mut next = 0;
    let mut steps = 0;
    while next < samples.len() {
        let target = samples[next];
        if (target - t).abs() <= 1e-14 * (1.0 + t.abs()) {
            out.push(y.clone());
            next += 1;
            continue;
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(OdeError::MaxSteps { t });
        }
        let remaining = (target - t).abs();
        let clipped = h >= remaining;
        let hs = if clipped { remaining } else { h } * dir;
        if hs.abs() < 1e-14 * (1.0 + t.abs()) {
            return Err(OdeError::StepUnderflow { t });
        }
        let stage = |ks: &[Vec<C64>], coef: &[(usize, f64)], tmp: &mut Vec<C64>, y: &[C64]| {
            for i in 0..n {
                let mut acc = y[i];
                for &(j, a) in coef {
                    acc += ks[j][i] * (a * hs);
                }
                tmp[i] = acc;
            }
        };
        stage(&k, &[(0, A21)], &mut tmp, &y);
        f(t + C2 * hs, &tmp, &mut k[1]);
        stage(&k, &[(0, A31), (1, A32)], &mut tmp, &y);
        f(t + C3 * hs, &tmp, &mut k[2]);
        stage(&k, &[(0, A41), (1, A42), (2, A43)], &mut tmp, &y);
        f(t + C4 * hs, &tmp, &mut k[3]);
        stage(&k, &[(0, A51), (1, A52), (2, A53), (3, A54)], &mut tmp, &y);
        f(t + C5 * hs, &tmp, &mut k[4]);
        stage(&k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &mut tmp, &y);
        f(t + hs, &tmp, &mut k[5]);
        stage(&k, &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)], &mut ynew, &y);
        f(t + hs, &ynew, &mut k[6]);
        let mut err = 0.0;
        for i in 0..n {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * hs;
            let sc = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
            err += (e.norm() / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            if h.abs() < 1e-12 * (1.0 + t.abs()) {
                return Err(OdeError::NonFinite { t });
            }
            h *= 0.1;
            continue;
        }
        if err <= 1.0 {
            t = if clipped { target } else { t + hs };
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !clipped || fac < 1.0 {
                h = h * fac;
            }
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok(out)
}

/// Linear system y' = A(t) y with a closed-form coefficient rule.
pub trait LinearOde: Send + Sync {
    fn dim(&self) -> usize;
    /// Row-major coefficient matrix at (possibly complex) t.
    fn matrix(&self, t: C64) -> Vec<C64>;
    /// The same rule on a jet.
    fn matrix_jet(&self, t: Jet) -> Vec<Jet>;
}

macro_rules! linear_ode_via_generic {
    ($t:ty, $dim:expr) => {
        impl LinearOde for $t {
            fn dim(&self) -> usize {
                $dim
            }
            fn matrix(&self, t: C64) -> Vec<C64> {
                self.coeffs(t)
            }
            fn matrix_jet(&self, t: Jet) -> Vec<Jet> {
                self.coeffs(t)
            }
        }
    };
}

fn matvec(a: &[C64], y: &[C64], out: &mut [C64]) {
    let n = y.len();
    for i in 0..n {
        let mut acc = ZERO;
        for j in 0..n {
            acc += a[i * n + j] * y[j];
        }
        out[i] = acc;
    }
}

/// Integrates a linear system from (t0, y0) to each sample (monotone from t0).
pub fn integrate(sys: &dyn LinearOde, t0: f64, y0: &[C64], samples: &[f64], tol: f64) -> Result<Vec<Vec<C64>>, OdeError> {
    dopri5(|t, y, dy| matvec(&sys.matrix(C64::from(t)), y, dy), t0, y0, samples, &OdeOptions::with_tol(tol))
}

/// Values at arbitrary points, integrating both ways from a reference point.
pub fn integrate_points(sys: &dyn LinearOde, t0: f64, y0: &[C64], points: &[f64], tol: f64) -> Result<Vec<Vec<C64>>, OdeError> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].total_cmp(&points[b]));
    let (below, above): (Vec<usize>, Vec<usize>) = order.iter().partition(|&&i| points[i] < t0);
    let mut out = vec![Vec::new(); points.len()];
    let up: Vec<f64> = above.iter().map(|&i| points[i]).collect();
    for (v, &i) in integrate(sys, t0, y0, &up, tol)?.into_iter().zip(&above) {
        out[i] = v;
    }
    let down: Vec<f64> = below.iter().rev().map(|&i| points[i]).collect();
    for (v, &i) in integrate(sys, t0, y0, &down, tol)?.into_iter().zip(below.iter().rev()) {
        out[i] = v;
    }
    Ok(out)
}

/// Jets of a solution at a point from its value there, using the system itself for
/// the derivatives; `t` is the independent variable as a jet in the caller's coordinates.
pub fn profile_jet(sys: &dyn LinearOde, t: &Jet, y: &[C64]) -> Vec<Jet> {
    let t0 = t.value();
    let n = sys.dim();
    let lifted = holonomic_lift(y, t.order(), 1, |_, yj| {
        let a = sys.matrix_jet(Jet::var(0, t0, t.order()));
        (0..n)
            .map(|i| {
                let mut acc = Jet::constant(ZERO);
                for j in 0..n {
                    acc += a[i * n + j] * yj[j];
                }
                acc
            })
            .collect()
    });
    lifted
        .iter()
        .map(|l| t.compose([l.coeff(&[0, 0, 0, 0]), l.coeff(&[1, 0, 0, 0]), l.coeff(&[2, 0, 0, 0]), l.coeff(&[3, 0, 0, 0])]))
        .collect()
}

/// Potential energy rule eV(t) entering the reduced systems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Potential {
    Zero,
    /// eV(r) = -zalpha / r
    Coulomb { zalpha: f64 },
    /// eV = depth * exp(-t^2 / width^2)
    Gaussian { depth: f64, width: f64 },
    /// eV = amp * sin(k t)
    Sine { amp: f64, k: f64 },
}

impl Potential {
    pub fn eval<T: Scalar>(&self, t: T) -> T {
        match *self {
            Potential::Zero => T::re(0.0),
            Potential::Coulomb { zalpha } => t.recip() * (-zalpha),
            Potential::Gaussian { depth, width } => (-(t * t) * (1.0 / (width * width))).exp() * depth,
            Potential::Sine { amp, k } => (t * k).sin() * amp,
        }
    }
}

/// Radial system for (f, g) with kappa = zeta (j + 1/2):
/// f' = (kappa/r) f + (E + m - eV) g, g' = -(kappa/r) g - (E - m - eV) f.
#[derive(Clone, Debug)]
pub struct RadialSystem {
    pub energy: f64,
    pub mass: f64,
    pub kappa: f64,
    pub potential: Potential,
}

pub fn radial_system(energy: f64, mass: f64, potential: Potential, j2: u32, zeta: i32) -> RadialSystem {
    RadialSystem { energy, mass, kappa: zeta as f64 * (j2 as f64 + 1.0) / 2.0, potential }
}

impl RadialSystem {
    fn coeffs<T: Scalar>(&self, r: T) -> Vec<T> {
        let v = self.potential.eval(r);
        let kr = r.recip() * self.kappa;
        vec![kr, -v + (self.energy + self.mass), -(-v + (self.energy - self.mass)), -kr]
    }
}
linear_ode_via_generic!(RadialSystem, 2);

/// Axial system of the magnetic scenario:
/// i f' - n sqrt(eH) zeta f + (m + E + eV) g = 0, i g' + n sqrt(eH) zeta g - (m - E - eV) f = 0.
#[derive(Clone, Debug)]
pub struct MagneticSystem {
    pub energy: f64,
    pub mass: f64,
    pub eh: f64,
    pub n: u32,
    pub zeta: i32,
    pub potential: Potential,
}

pub fn magnetic_system(energy: f64, mass: f64, eh: f64, n: u32, zeta: i32, potential: Potential) -> Result<MagneticSystem, OdeError> {
    if !(eh > 0.0) {
        return Err(OdeError::BadParameter(format!("eH must be positive, got {eh}")));
    }
    Ok(MagneticSystem { energy, mass, eh, n, zeta, potential })
}

impl MagneticSystem {
    fn coeffs<T: Scalar>(&self, z: T) -> Vec<T> {
        let s = self.n as f64 * self.eh.sqrt() * self.zeta as f64;
        let v = self.potential.eval(z);
        let mi = -I;
        vec![T::cst(mi * s), (v + (self.mass + self.energy)) * I, (-v + (self.mass - self.energy)) * mi, T::cst(I * s)]
    }
}
linear_ode_via_generic!(MagneticSystem, 2);

/// phi(y) in the crossed field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhiRule {
    Const(f64),
    /// phi(y) = a + b y
    Linear(f64, f64),
}

impl PhiRule {
    pub fn eval<T: Scalar>(&self, y: T) -> T {
        match *self {
            PhiRule::Const(v) => T::re(v),
            PhiRule::Linear(a, b) => y * b + a,
        }
    }
}

/// Which scalar accompanies hat-gamma^2 in the crossed reduced ODE.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossedVariant {
    /// i/(2 eps^2): what the substitution of the Y-eigenfunction actually produces.
    Derived,
    /// 1/(2 eps^2) as printed.
    Printed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossedParams {
    pub alpha: f64,
    pub eps: f64,
    pub kappa: f64,
    pub q1: f64,
    pub q2: f64,
    pub mass: f64,
    pub charge: f64,
    pub phi: PhiRule,
}

/// Phi' = -i (hat-gamma^4)^{-1} B(u) Phi, the 4-component reduced system in u.
#[derive(Clone, Debug)]
pub struct CrossedSystem {
    pub params: CrossedParams,
    pub variant: CrossedVariant,
    /// Constant matrices multiplying scalar functions of u, already premultiplied by -i (gh4)^{-1}.
    mats: [Mat4; 6],
}

pub fn crossed_system(params: CrossedParams, variant: CrossedVariant) -> Result<CrossedSystem, OdeError> {
    let h = crossed_field_gammas(params.eps)?;
    let pre = h.g(4).inverse()? * (-I);
    let id = Mat4::identity();
    let raw = [
        h.g(1),
        h.g(3),
        h.g(4),
        h.g(2) * (h.g(1) * h.g(4)) * (I * 0.5),
        h.g(2),
        id,
    ];
    Ok(CrossedSystem { params, variant, mats: raw.map(|m| pre * m) })
}

impl CrossedSystem {
    /// Scalar multipliers of the constant matrices.
    fn scalars<T: Scalar>(&self, u: T) -> [T; 6] {
        let p = &self.params;
        let e2 = (-p.q2).exp();
        let w = u + (-p.q1);
        let c_eps = match self.variant {
            CrossedVariant::Derived => I * (0.5 / (p.eps * p.eps)),
            CrossedVariant::Printed => C64::from(0.5 / (p.eps * p.eps)),
        };
        let g2 = w * w * (-0.5 * e2) - p.phi.eval(u * p.eps) * p.charge + u * (p.charge * p.alpha) + c_eps + p.kappa;
        [
            w * e2 + (-p.charge * p.alpha),
            T::re(-e2),
            w * (-e2),
            T::re(1.0),
            g2,
            T::re(-p.mass),
        ]
    }

    fn coeffs<T: Scalar>(&self, u: T) -> Vec<T> {
        let s = self.scalars(u);
        let mut out = vec![T::re(0.0); 16];
        for (k, m) in self.mats.iter().enumerate() {
            for i in 0..4 {
                for j in 0..4 {
                    let c = m.0[i][j];
                    if c != ZERO {
                        out[i * 4 + j] = out[i * 4 + j] + s[k] * c;
                    }
                }
            }
        }
        out
    }

    /// B(u) itself (the matrix multiplying Phi in the printed form).
    pub fn b_matrix(&self, u: f64) -> Mat4 {
        let s = self.scalars(C64::from(u));
        let h = crossed_field_gammas(self.params.eps).expect("validated eps");
        let raw = [h.g(1), h.g(3), h.g(4), h.g(2) * (h.g(1) * h.g(4)) * (I * 0.5), h.g(2), Mat4::identity()];
        raw.iter().zip(s).fold(Mat4::zero(), |acc, (m, c)| acc + *m * c)
    }
}
linear_ode_via_generic!(CrossedSystem, 4);

/// Analytic Dirac-Coulomb energy in units of m, or None when no such state exists
/// (kappa > 0 requires n_r >= 1).
pub fn coulomb_oracle_energy(zalpha: f64, kappa: i32, n_r: u32) -> Option<f64> {
    if kappa == 0 || zalpha <= 0.0 || zalpha >= kappa.unsigned_abs() as f64 || (kappa > 0 && n_r == 0) {
        return None;
    }
    let k = kappa as f64;
    let gamma = (k * k - zalpha * zalpha).sqrt();
    let d = n_r as f64 + gamma;
    Some((1.0 + zalpha * zalpha / (d * d)).powf(-0.5))
}

#[derive(Clone, Debug)]
pub struct BoundState {
    pub energy: f64,
    pub node_count: u32,
    pub radii: Vec<f64>,
    /// (f, g) at each radius, normalized so that f is positive near the origin.
    pub profile: Vec<[f64; 2]>,
    pub match_residual: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ShootOptions {
    pub r_min: f64,
    /// outer boundary in units of 1/lambda, lambda = sqrt(1 - E^2)
    pub r_max_scale: f64,
    /// matching point as a fraction of the outer boundary
    pub match_fraction: f64,
    pub tol: f64,
    pub scan_points: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions { r_min: 1e-6, r_max_scale: 30.0, match_fraction: 0.05, tol: 1e-12, scan_points: 160 }
    }
}

struct Shooter {
    zalpha: f64,
    kappa_p: f64,
    opts: ShootOptions,
}

struct Shot {
    w: f64,
    nodes: u32,
    radii: Vec<f64>,
    profile: Vec<[f64; 2]>,
}

impl Shooter {
    fn system(&self, e: f64) -> RadialSystem {
        RadialSystem { energy: e, mass: 1.0, kappa: self.kappa_p, potential: Potential::Coulomb { zalpha: self.zalpha } }
    }

    /// Normalized matching determinant at energy e, with node count of f when `detail` is set.
    fn shoot(&self, e: f64, detail: bool) -> Result<Shot, OdeError> {
        let lam = (1.0 - e * e).sqrt();
        let r_max = self.opts.r_max_scale / lam;
        let r_match = self.opts.match_fraction * r_max;
        let sys = self.system(e);
        let k = self.kappa_p;
        let za = self.zalpha;
        let gam = (k * k - za * za).sqrt();
        let r0 = self.opts.r_min;
        let f0 = r0.powf(gam);
        let y_in0 = [C64::from(f0), C64::from((gam - k) * f0 / za)];
        let y_out0 = [C64::from(1.0), C64::from(-lam / (e + 1.0))];
        let n_s = if detail { 400 } else { 1 };
        let geo = |a: f64, b: f64, i: usize, n: usize| a * (b / a).powf((i + 1) as f64 / n as f64);
        let s_in: Vec<f64> = (0..n_s).map(|i| geo(r0, r_match, i, n_s)).collect();
        let s_out: Vec<f64> = (0..n_s).map(|i| geo(r_max, r_match, i, n_s)).collect();
        let a = integrate(&sys, r0, &y_in0, &s_in, self.opts.tol)?;
        let b = integrate(&sys, r_max, &y_out0, &s_out, self.opts.tol)?;
        let (ya, yb) = (a.last().expect("nonempty"), b.last().expect("nonempty"));
        let na = (ya[0].norm_sqr() + ya[1].norm_sqr()).sqrt();
        let nb = (yb[0].norm_sqr() + yb[1].norm_sqr()).sqrt();
        let w = ((ya[0] * yb[1] - ya[1] * yb[0]) / (na * nb)).re;
        let mut shot = Shot { w, nodes: 0, radii: Vec::new(), profile: Vec::new() };
        if detail {
            let scale_b = if yb[0].re.abs() > yb[1].re.abs() { ya[0].re / yb[0].re } else { ya[1].re / yb[1].re };
            let mut radii = vec![r0];
            let mut prof = vec![[y_in0[0].re, y_in0[1].re]];
            for (r, y) in s_in.iter().zip(&a) {
                radii.push(*r);
                prof.push([y[0].re, y[1].re]);
            }
            for (r, y) in s_out.iter().zip(&b).rev().skip(1) {
                radii.push(*r);
                prof.push([y[0].re * scale_b, y[1].re * scale_b]);
            }
            radii.push(r_max);
            prof.push([scale_b, y_out0[1].re * scale_b]);
            shot.nodes = prof.windows(2).filter(|p| p[0][0] * p[1][0] < 0.0).count() as u32;
            shot.radii = radii;
            shot.profile = prof;
        }
        Ok(shot)
    }

    fn refine(&self, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Result<(f64, f64), ShootError> {
        // Illinois-modified regula falsi, keeps the bracket.
        let mut side = 0;
        for _ in 0..200 {
            let c = (a * fb - b * fa) / (fb - fa);
            let fc = self.shoot(c, false)?.w;
            if fc.abs() < 1e-13 || (b - a).abs() < 1e-15 {
                return Ok((c, fc.abs()));
            }
            if fc * fb < 0.0 {
                a = b;
                fa = fb;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            } else {
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
            b = c;
            fb = fc;
        }
        Err(ShootError::NoConvergence(fb.abs()))
    }
}

/// Shoots for the Dirac-Coulomb state (kappa in the usual spectroscopic sign, n_r radial
/// quantum number). The radial system is used with the opposite sign convention for kappa.
pub fn shoot_bound_state(zalpha: f64, kappa: i32, n_r: u32, opts: &ShootOptions) -> Result<BoundState, ShootError> {
    if kappa == 0 {
        return Err(ShootError::BadQuantumNumbers("kappa must be nonzero".into()));
    }
    if zalpha >= kappa.unsigned_abs() as f64 {
        return Err(ShootError::CriticalCharge { zalpha, kappa });
    }
    if !(zalpha > 0.0) {
        return Err(ShootError::NoBoundState);
    }
    let target_nodes = if kappa < 0 {
        n_r
    } else if n_r == 0 {
        return Err(ShootError::NoBoundState);
    } else {
        n_r - 1
    };
    let sh = Shooter { zalpha, kappa_p: -(kappa as f64), opts: *opts };
    // lambda = sqrt(1 - E^2) lies in (0, zalpha / |kappa|] for every bound state
    let ka = kappa.unsigned_abs() as f64;
    let lam_hi = (1.02 * zalpha / ka).min(0.999);
    let lam_lo = zalpha / (n_r as f64 + ka + 4.0);
    let m = opts.scan_points.max(8);
    let energies: Vec<f64> = (0..=m)
        .map(|i| {
            let lam = lam_hi * (lam_lo / lam_hi).powf(i as f64 / m as f64);
            (1.0 - lam * lam).sqrt()
        })
        .collect();
    let mut prev: Option<(f64, f64)> = None;
    for &e in &energies {
        let w = sh.shoot(e, false)?.w;
        if let Some((ep, wp)) = prev {
            if wp * w < 0.0 {
                let (root, res) = sh.refine(ep, e, wp, w)?;
                let shot = sh.shoot(root, true)?;
                if shot.nodes == target_nodes {
                    if res > 1e-10 {
                        return Err(ShootError::NoConvergence(res));
                    }
                    let norm = shot.profile.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
                    let sgn = if shot.profile[1][0] >= 0.0 { 1.0 } else { -1.0 };
                    let profile = shot.profile.iter().map(|p| [sgn * p[0] / norm, sgn * p[1] / norm]).collect();
                    return Ok(BoundState { energy: root, node_count: shot.nodes, radii: shot.radii, profile, match_residual: res });
                }
                if shot.nodes > target_nodes {
                    break;
                }
            }
        }
        prev = Some((e, w));
    }
    Err(ShootError::NoBoundState)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::coords_real;

    fn c(x: f64) -> C64 {
        C64::from(x)
    }

    #[test]
    fn exponential_rotation() {
        let v = dopri5(|_, y, dy| dy[0] = I * y[0], 0.0, &[c(1.0)], &[std::f64::consts::PI], &OdeOptions::with_tol(1e-12)).unwrap();
        assert!((v[0][0] + 1.0).norm() < 1e-10);
    }

    #[test]
    fn backward_and_samples() {
        let s = [-0.5, -1.0, -2.0];
        let v = dopri5(|_, y, dy| dy[0] = y[0], 0.0, &[c(1.0)], &s, &OdeOptions::with_tol(1e-12)).unwrap();
        for (t, y) in s.iter().zip(&v) {
            assert!((y[0].re - t.exp()).abs() < 1e-11);
        }
        assert_eq!(dopri5(|_, _, _| {}, 0.0, &[c(1.0)], &[1.0, 0.5], &OdeOptions::with_tol(1e-8)), Err(OdeError::BadSamples));
    }

    #[test]
    fn tolerance_refinement_improves_error() {
        let run = |tol: f64| {
            let v = dopri5(|t, y, dy| dy[0] = I * y[0] * (1.0 + t), 0.0, &[c(1.0)], &[3.0], &OdeOptions::with_tol(tol)).unwrap();
            v[0][0]
        };
        let reference = run(1e-13);
        let e1 = (run(1e-6) - reference).norm();
        let e2 = (run(1e-8) - reference).norm();
        assert!(e2 <= e1 * 0.5, "{e1} {e2}");
    }

    #[test]
    fn radial_coefficients_at_unit_radius() {
        let s = RadialSystem { energy: 1.0, mass: 1.0, kappa: -1.0, potential: Potential::Zero };
        let a = s.matrix(c(1.0));
        assert_eq!(a, vec![c(-1.0), c(2.0), c(0.0), c(1.0)]);
        let flipped = RadialSystem { kappa: 1.0, ..s.clone() };
        let b = flipped.matrix(c(1.0));
        assert_eq!((b[0], b[3]), (-a[0], -a[3]));
    }

    #[test]
    fn radial_free_threshold_closed_form() {
        // V = 0, E = m = 1, kappa = -1: g' = g/r, f' = -f/r + 2 g, so g = r, f = 2 r^2 / 3.
        let s = RadialSystem { energy: 1.0, mass: 1.0, kappa: -1.0, potential: Potential::Zero };
        let f = |r: f64| 2.0 * r * r / 3.0;
        let r0 = 0.5;
        let pts = [1.0, 2.0, 3.0];
        let v = integrate(&s, r0, &[c(f(r0)), c(r0)], &pts, 1e-12).unwrap();
        for (r, y) in pts.iter().zip(&v) {
            assert!((y[0].re - f(*r)).abs() < 1e-10 * f(*r));
            assert!((y[1].re - r).abs() < 1e-10 * r);
        }
    }

    #[test]
    fn coulomb_pole_only_at_origin() {
        let s = RadialSystem { energy: 0.9, mass: 1.0, kappa: -1.0, potential: Potential::Coulomb { zalpha: 0.3 } };
        for r in [1e-3, 0.5, 7.0] {
            assert!(s.matrix(c(r)).iter().all(|v| v.re.is_finite()));
        }
        assert!(s.matrix(c(0.0)).iter().any(|v| !v.re.is_finite()));
    }

    #[test]
    fn magnetic_plane_wave_dispersion() {
        // V = 0: (f, g) = (F, G) e^{ikz} requires det [[ -k - s, m+E ], [-(m-E), -k + s]] = 0,
        // i.e. k^2 = s^2 + E^2 - m^2 with s = n sqrt(eH) zeta.
        let (m, e, eh, n): (f64, f64, f64, u32) = (1.0, 1.8, 0.7, 1);
        let s = n as f64 * eh.sqrt();
        let k = (s * s + e * e - m * m).sqrt();
        let sys = magnetic_system(e, m, eh, n, 1, Potential::Zero).unwrap();
        // eigenvector of the algebraic system
        let fv = c(1.0);
        let gv = c((k + s) / (m + e));
        let pts = [0.7, 1.9];
        let v = integrate(&sys, 0.0, &[fv, gv], &pts, 1e-12).unwrap();
        for (z, y) in pts.iter().zip(&v) {
            let ph = (I * k * z).exp();
            assert!((y[0] - fv * ph).norm() < 1e-9);
            assert!((y[1] - gv * ph).norm() < 1e-9);
        }
    }

    #[test]
    fn magnetic_n_zero_drops_spin_term() {
        let sys = magnetic_system(1.2, 1.0, 0.5, 0, 1, Potential::Zero).unwrap();
        let a = sys.matrix(c(0.3));
        assert_eq!((a[0], a[3]), (c(0.0), c(0.0)));
        assert!(magnetic_system(1.2, 1.0, -0.5, 0, 1, Potential::Zero).is_err());
    }

    #[test]
    fn magnetic_energy_reflection() {
        // (f, g) solving (E, V) gives (conj g, conj f) solving (-E, -V).
        let v = Potential::Sine { amp: 0.2, k: 1.0 };
        let vm = Potential::Sine { amp: -0.2, k: 1.0 };
        let a = magnetic_system(1.3, 1.0, 0.7, 1, 1, v).unwrap();
        let b = magnetic_system(-1.3, 1.0, 0.7, 1, 1, vm).unwrap();
        let y0 = [C64::new(1.0, 0.2), C64::new(0.3, -0.4)];
        let pts = [0.4, 1.1];
        let ya = integrate(&a, 0.0, &y0, &pts, 1e-12).unwrap();
        let yb = integrate(&b, 0.0, &[y0[1].conj(), y0[0].conj()], &pts, 1e-12).unwrap();
        for (p, q) in ya.iter().zip(&yb) {
            assert!((q[0] - p[1].conj()).norm() < 1e-9);
            assert!((q[1] - p[0].conj()).norm() < 1e-9);
        }
    }

    fn crossed_params(alpha: f64, phi: PhiRule, charge: f64) -> CrossedParams {
        CrossedParams { alpha, eps: 0.7, kappa: 0.6, q1: 0.4, q2: -0.2, mass: 1.0, charge, phi }
    }

    #[test]
    fn crossed_at_q1_loses_linear_terms() {
        let p = crossed_params(0.3, PhiRule::Linear(0.5, 0.3), 0.8);
        let s = crossed_system(p, CrossedVariant::Derived).unwrap();
        let sc = s.scalars(c(p.q1));
        assert_eq!(sc[2], c(0.0));
        assert_eq!(sc[0], c(-p.charge * p.alpha));
    }

    #[test]
    fn crossed_no_field_independent_of_charge() {
        let a = crossed_system(crossed_params(0.0, PhiRule::Const(0.0), 0.8), CrossedVariant::Derived).unwrap();
        let b = crossed_system(crossed_params(0.0, PhiRule::Const(0.0), 2.5), CrossedVariant::Derived).unwrap();
        assert_eq!(a.matrix(c(0.9)), b.matrix(c(0.9)));
    }

    #[test]
    fn profile_jet_matches_system() {
        let s = RadialSystem { energy: 0.8, mass: 1.0, kappa: 2.0, potential: Potential::Coulomb { zalpha: 0.3 } };
        let r = coords_real(&[1.3], 3)[0];
        let y = [C64::new(0.4, 0.1), C64::new(-0.2, 0.5)];
        let j = profile_jet(&s, &r, &y);
        let a = s.matrix(c(1.3));
        let want = a[0] * y[0] + a[1] * y[1];
        assert!((j[0].derivative(&[1, 0, 0, 0]) - want).norm() < 1e-14);
        // second derivative from differentiating the system once more
        let da = s.matrix_jet(r).iter().map(|x| x.derivative(&[1, 0, 0, 0])).collect::<Vec<_>>();
        let d1 = [want, a[2] * y[0] + a[3] * y[1]];
        let want2 = da[0] * y[0] + da[1] * y[1] + a[0] * d1[0] + a[1] * d1[1];
        assert!((j[0].derivative(&[2, 0, 0, 0]) - want2).norm() < 1e-13);
    }

    #[test]
    fn oracle_values() {
        assert!((coulomb_oracle_energy(0.5, -1, 0).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((coulomb_oracle_energy(0.5, -1, 1).unwrap() - 0.9659).abs() < 1e-4);
        assert_eq!(coulomb_oracle_energy(0.5, 1, 0), None);
        assert_eq!(coulomb_oracle_energy(0.0, -1, 0), None);
    }

    #[test]
    fn shooting_ground_state() {
        let b = shoot_bound_state(0.5, -1, 0, &ShootOptions::default()).unwrap();
        assert!((b.energy - 0.75f64.sqrt()).abs() < 1e-9, "{}", b.energy);
        assert_eq!(b.node_count, 0);
        assert!(b.match_residual < 1e-10);
        let last = b.profile.last().unwrap();
        assert!(last[0].abs() < 1e-6);
    }

    #[test]
    fn shooting_errors() {
        assert_eq!(shoot_bound_state(0.0, -1, 0, &ShootOptions::default()).unwrap_err(), ShootError::NoBoundState);
        assert!(matches!(shoot_bound_state(1.2, -1, 0, &ShootOptions::default()), Err(ShootError::CriticalCharge { .. })));
        assert_eq!(shoot_bound_state(0.3, 1, 0, &ShootOptions::default()).unwrap_err(), ShootError::NoBoundState);
    }
}
