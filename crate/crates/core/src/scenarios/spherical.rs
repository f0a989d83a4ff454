//! Central potential in spherical coordinates: (theta, phi, r) in slots 0..2,
//! the complex label q of the noncommutative basis in slot 3.

use super::{casimir_residual, check, dump_field, eigen_residual, grid3, linspace, ProfileCache, Scenario, ScenarioError, ScenarioParams};
use crate::gamma::{standard_gammas, GammaSet, Mat4, C64, I, ONE, ZERO};
use crate::jet::{coords_at, holonomic_lift, Coords, Jet, Scalar, SpinorField, SpinorJet};
use crate::lie::{check_lambda_table, so3_adjoint_check, so3_density, so3_lambda_rep, so3_lambda_rep_on};
use crate::ode::{dopri5, radial_system, LinearOde, OdeOptions, Potential, RadialSystem};
use crate::operator::{check_structure_constants, check_symmetry, Coeff, MatrixDiffOp, Sampler};
use crate::report::{fmt_f64, Report, Table};
use crate::special::frame_spinor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex};

const LABELS: [&str; 4] = ["theta", "phi", "r", "q"];
const THETA_RANGE: (f64, f64) = (0.3, PI - 0.3);
/// cos(phi) stays positive, which keeps the D-function gradient system nonsingular.
const PHI_RANGE: (f64, f64) = (-1.2, 1.2);
const R_RANGE: (f64, f64) = (0.5, 2.0);
/// Real q samples used to build the finite Fourier expansion of D.
const NQ: usize = 16;
/// Largest 2j the bridge accepts.
pub const BRIDGE_MAX_J2: u32 = 7;
const BRIDGE_GRID: usize = 20;
const BRIDGE_NX: usize = 64;
const BRIDGE_Y_MAX: f64 = 8.0;
const BRIDGE_Y_START: usize = 200;
const BRIDGE_MAX_DOUBLINGS: usize = 8;
const BRIDGE_CHANGE: f64 = 1e-8;

pub struct Spherical {
    params: ScenarioParams,
    gs: GammaSet,
    potential: Potential,
    radial: Arc<RadialSystem>,
    profile: Arc<ProfileCache>,
    dfun: Arc<DFunction>,
}

impl Spherical {
    pub fn new(p: &ScenarioParams) -> Result<Self, ScenarioError> {
        if p.j2 == 0 || p.j2 >= NQ as u32 {
            return Err(ScenarioError::Config(format!("j must lie in [1/2, {}], got j = {}/2", (NQ - 1) as f64 / 2.0, p.j2)));
        }
        if p.j2 % 2 == 1 && (p.m2.unsigned_abs() > p.j2 || (p.m2 - p.j2 as i32) % 2 != 0) {
            return Err(ScenarioError::Config(format!("M = {}/2 is not a projection of j = {}/2", p.m2, p.j2)));
        }
        let potential = Potential::Coulomb { zalpha: p.zalpha };
        let radial = Arc::new(radial_system(p.energy, p.mass, potential, p.j2, p.zeta));
        let shared: Arc<dyn LinearOde + Send + Sync> = radial.clone();
        let profile = Arc::new(ProfileCache::new(shared, 1.0, vec![ONE, C64::new(0.3, 0.2)], p.tol.ode));
        let dfun = Arc::new(DFunction::new(p.j2, p.zeta, p.tol.ode)?);
        Ok(Spherical { params: p.clone(), gs: standard_gammas(), potential, radial, profile, dfun })
    }

    fn half_integer(&self) -> bool {
        self.params.j2 % 2 == 1
    }

    pub fn hamiltonian(&self) -> MatrixDiffOp {
        let g = &self.gs;
        let pot = self.potential;
        MatrixDiffOp::new("H", &LABELS)
            .d(2, Coeff::Const(-I), g.alpha[0])
            .mult(Coeff::field(|x: &Coords| x[2].recip() * (-I)), g.alpha[0])
            .d(0, Coeff::field(|x: &Coords| x[2].recip() * (-I)), g.alpha[1])
            .mult(Coeff::field(|x: &Coords| x[0].cos() / x[0].sin() / x[2] * (-0.5 * I)), g.alpha[1])
            .d(1, Coeff::field(|x: &Coords| (x[2] * x[0].sin()).recip() * (-I)), g.alpha[2])
            .mult(Coeff::Const(C64::from(self.params.mass)), g.beta)
            .mult(Coeff::field(move |x: &Coords| pot.eval(x[2])), Mat4::identity())
    }

    pub fn symmetry_ops(&self) -> Vec<MatrixDiffOp> {
        let id = Mat4::identity();
        let s1 = self.gs.sigma[0];
        let cot = |x: &Coords| x[0].cos() / x[0].sin();
        vec![
            MatrixDiffOp::new("X1", &LABELS).d(1, Coeff::Const(ONE), id),
            MatrixDiffOp::new("X2", &LABELS)
                .d(1, Coeff::field(move |x: &Coords| -(cot(x) * x[1].sin())), id)
                .d(0, Coeff::field(|x: &Coords| x[1].cos()), id)
                .mult(Coeff::field(|x: &Coords| x[1].sin() / x[0].sin() * (0.5 * I)), s1),
            MatrixDiffOp::new("X3", &LABELS)
                .d(1, Coeff::field(move |x: &Coords| -(cot(x) * x[1].cos())), id)
                .d(0, Coeff::field(|x: &Coords| -x[1].sin()), id)
                .mult(Coeff::field(|x: &Coords| x[1].cos() / x[0].sin() * (0.5 * I)), s1),
        ]
    }

    /// The spin operator as printed, -beta (Sigma2 (1/sin) d_phi - Sigma3 (cot/2 + d_theta)).
    pub fn spin_op_printed(&self) -> MatrixDiffOp {
        let g = &self.gs;
        MatrixDiffOp::new("S_printed", &LABELS)
            .d(1, Coeff::field(|x: &Coords| x[0].sin().recip() * -1.0), g.beta * g.sigma[1])
            .mult(Coeff::field(|x: &Coords| x[0].cos() / x[0].sin() * 0.5), g.beta * g.sigma[2])
            .d(0, Coeff::Const(ONE), g.beta * g.sigma[2])
    }

    /// -i times the printed operator: Hermitian, eigenvalue zeta (j + 1/2).
    pub fn spin_op(&self) -> MatrixDiffOp {
        self.spin_op_printed().scaled(-I).renamed("S")
    }

    pub fn radial(&self) -> &Arc<RadialSystem> {
        &self.radial
    }

    pub fn dfunction(&self) -> &Arc<DFunction> {
        &self.dfun
    }

    pub fn sov_basis(&self) -> SovField {
        SovField { j2: self.params.j2, m2: self.params.m2, zeta: self.params.zeta, profile: self.profile.clone() }
    }

    pub fn ni_basis(&self) -> NiField {
        NiField { dfun: self.dfun.clone(), profile: self.profile.clone() }
    }

    fn sampler(&self) -> impl Fn(&mut ChaCha8Rng) -> Vec<C64> {
        |r: &mut ChaCha8Rng| {
            vec![
                C64::from(r.gen_range(0.4..PI - 0.4)),
                C64::from(r.gen_range(-1.0..1.0)),
                C64::from(r.gen_range(0.5..2.0)),
                C64::new(r.gen_range(-1.0..1.0), r.gen_range(-0.5..0.5)),
            ]
        }
    }

    pub fn grid(&self) -> Vec<Vec<C64>> {
        let pts = grid3([THETA_RANGE, PHI_RANGE, R_RANGE], self.params.grid, &[self.params.q]);
        let ts: Vec<f64> = pts.iter().map(|p| p[2].re).collect();
        // one integration for all radii; failures surface later as NaN jets
        let _ = self.profile.prefetch(&ts);
        pts
    }

    fn lambda_checks(&self, report: &mut Report) -> Result<(), ScenarioError> {
        let p = &self.params;
        let rep = so3_lambda_rep(p.j2);
        let fit = check_lambda_table(&rep, p.trials, p.seed)?;
        report.extend([check("spherical.lambda.table", fit.best(), p.tol.lambda)]);
        let adj = so3_adjoint_check(p.j2, p.seed)?;
        report.notes.push(format!(
            "spherical measure: dmu = c_j dx dy / (1 + cosh 2y)^(j+1) with positive sign, {} nodes, last doubling change {:.3e}",
            adj.nodes, adj.converged_change
        ));
        for (a, r) in adj.skew.iter().enumerate() {
            report.extend([check(&format!("spherical.lambda.hermitian.-il{}", a + 1), *r, p.tol.adjoint)]);
        }
        Ok(())
    }

    /// Largest deviation of the Fourier continuation of D from direct integration at off-sample real q.
    pub fn fourier_fit_residual(&self) -> Result<f64, ScenarioError> {
        let mut worst: f64 = 0.0;
        for (th, ph) in [(1.0, 0.4), (2.1, -0.8)] {
            let direct = self.dfun.integrate(th, ph, &[0.37, 2.9, 5.5])?;
            let coeffs = self.dfun.fourier_values(th, ph)?;
            for (q, d) in [0.37, 2.9, 5.5].iter().zip(direct) {
                let s = self.dfun.sum(&coeffs, C64::from(*q));
                worst = worst.max(((s[0] - d[0]).norm() + (s[1] - d[1]).norm()) / (d[0].norm() + d[1].norm()));
            }
        }
        Ok(worst)
    }

    /// Residual of the printed closed form against the defining system, and its projective
    /// distance from the integrated D on a coarse grid at the configured q.
    pub fn printed_d_report(&self) -> Result<(f64, f64), ScenarioError> {
        let p = &self.params;
        let xs = self.symmetry_ops();
        let lq = so3_lambda_rep_on(p.j2, 3);
        let (j2, zeta) = (p.j2, p.zeta);
        let printed = move |x: &Coords| -> SpinorJet {
            let d = printed_d(j2, zeta, x[0], x[1], x[3]);
            [d[0], d[1], Jet::constant(ZERO), Jet::constant(ZERO)]
        };
        let pts: Vec<Vec<C64>> = grid3([THETA_RANGE, PHI_RANGE, (1.0, 1.0)], 5, &[p.q]);
        let mut sys: f64 = 0.0;
        for (x, l) in xs.iter().zip(&lq.ops) {
            sys = sys.max(eigen_residual(&x.plus(l), ZERO, &printed, &pts).unwrap_or(f64::INFINITY));
        }
        let mut a = Vec::new();
        let mut b = Vec::new();
        for pt in &pts {
            let c = self.dfun.fourier_values(pt[0].re, pt[1].re)?;
            let s = self.dfun.sum(&c, p.q);
            let d = printed_d(j2, zeta, pt[0], pt[1], p.q);
            a.extend(s);
            b.extend(d);
        }
        Ok((sys, projective_mismatch(&b, &a)))
    }

    /// Generalized Fourier transform of D over Q against the spherical spinors.
    pub fn bridge(&self, report: &mut Report) -> Result<Table, ScenarioError> {
        let p = &self.params;
        if p.j2 > BRIDGE_MAX_J2 {
            return Err(ScenarioError::Config(format!("bridge requires j <= 7/2, got j = {}/2", p.j2)));
        }
        let mut t = Table::new(&["m2", "theta", "phi", "re_0", "im_0", "re_1", "im_1"]);
        let weights = bridge_weights(p.j2)?;
        report.notes.push(format!(
            "bridge quadrature: {} x-nodes, {} y-nodes on [-{BRIDGE_Y_MAX}, {BRIDGE_Y_MAX}], last doubling change {:.3e}, diagonal weight W(-j,-j) = {}",
            BRIDGE_NX, weights.y_nodes, weights.change, fmt_f64(weights.w[1][0].re)
        ));
        let j2 = p.j2 as i32;
        let thetas = linspace(THETA_RANGE.0, THETA_RANGE.1, BRIDGE_GRID);
        let phis = linspace(PHI_RANGE.0, PHI_RANGE.1, BRIDGE_GRID);
        let mut out: HashMap<i32, Vec<[C64; 2]>> = HashMap::new();
        let mut points = Vec::new();
        for &th in &thetas {
            for &ph in &phis {
                let d = self.dfun.fourier_values(th, ph)?;
                points.push((th, ph));
                for (a, m2) in weights.m2s.iter().enumerate() {
                    let mut acc = [ZERO; 2];
                    for (b, dm) in d.iter().enumerate() {
                        acc[0] += weights.w[a][b] * dm[0];
                        acc[1] += weights.w[a][b] * dm[1];
                    }
                    out.entry(*m2).or_default().push(acc);
                }
            }
        }
        let inside_scale = (-j2..=j2)
            .step_by(2)
            .flat_map(|m| out[&m].iter().map(|v| v[0].norm().max(v[1].norm())))
            .fold(0.0, f64::max);
        let outside = [-j2 - 2, j2 + 2].iter().flat_map(|m| out[m].iter().map(|v| v[0].norm().max(v[1].norm()))).fold(0.0, f64::max);
        let reference = points.iter().position(|&(th, ph)| (th - FRAC_PI_2).abs() < 0.1 && ph.abs() < 0.1);
        let tol = if p.j2 <= 3 { p.tol.bridge } else { p.tol.bridge.max(1e-5) };
        for m2 in (-j2..=j2).step_by(2) {
            let got = &out[&m2];
            if self.half_integer() {
                let want: Vec<[C64; 2]> = points.iter().map(|&(th, ph)| frame_spinor(p.j2, m2, p.zeta, C64::from(th), C64::from(ph))).collect::<Result<_, _>>()?;
                let mismatch = projective_at_reference(got, &want, reference);
                report.extend([check(&format!("spherical.bridge.m2={m2:+}"), mismatch, tol)]);
            } else {
                report.notes.push(format!("bridge for integer j = {}: M = {}/2 output has no spherical spinor to compare; peak |Omega| {:.3e}", p.j2 / 2, m2, got.iter().map(|v| v[0].norm().max(v[1].norm())).fold(0.0, f64::max)));
            }
        }
        let outside_rel = outside / inside_scale;
        if self.half_integer() {
            report.extend([check("spherical.bridge.outside", outside_rel, 1e-8)]);
        } else {
            report.notes.push(format!("bridge for integer j: |M| = j + 1 output relative size {outside_rel:.3e}"));
        }
        let (sys, proj) = self.printed_d_report()?;
        report.notes.push(format!("printed closed form of D: system residual {sys:.3e}, projective distance from the integrated D {proj:.3e}"));
        for m2 in (-j2..=j2).step_by(2) {
            for (k, &(th, ph)) in points.iter().enumerate() {
                let v = out[&m2][k];
                t.push(vec![m2.to_string(), fmt_f64(th), fmt_f64(ph), fmt_f64(v[0].re), fmt_f64(v[0].im), fmt_f64(v[1].re), fmt_f64(v[1].im)]);
            }
        }
        Ok(t)
    }
}

/// max |a - c b| / max |a| with c fitted by least squares.
pub fn projective_mismatch(a: &[C64], b: &[C64]) -> f64 {
    let num: C64 = b.iter().zip(a).map(|(y, x)| y.conj() * x).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    let c = num / den;
    let scale = a.iter().map(|x| x.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - c * y).norm()).fold(0.0, f64::max) / scale
}

/// Normalization fitted at one reference point, falling back to the point of largest |want|.
fn projective_at_reference(got: &[[C64; 2]], want: &[[C64; 2]], reference: Option<usize>) -> f64 {
    let size = |v: &[C64; 2]| v[0].norm() + v[1].norm();
    let peak = (0..want.len()).max_by(|&a, &b| size(&want[a]).total_cmp(&size(&want[b]))).unwrap_or(0);
    let k = match reference {
        Some(k) if size(&want[k]) > 1e-3 * size(&want[peak]) => k,
        _ => peak,
    };
    let w = want[k];
    let c = (w[0].conj() * got[k][0] + w[1].conj() * got[k][1]) / (w[0].norm_sqr() + w[1].norm_sqr());
    let scale = got.iter().map(|v| v[0].norm().max(v[1].norm())).fold(0.0, f64::max);
    got.iter().zip(want).map(|(g, w)| (g[0] - c * w[0]).norm().max((g[1] - c * w[1]).norm())).fold(0.0, f64::max) / scale
}

struct BridgeWeights {
    /// 2M for rows: -2j-2 ..= 2j+2
    m2s: Vec<i32>,
    /// W[row][col], col over 2M' = -2j ..= 2j
    w: Vec<Vec<C64>>,
    y_nodes: usize,
    change: f64,
}

/// W(M, M') = integral of exp(i (M - M') q) dmu(q) over x in [0, 2pi), |y| <= 8.
fn bridge_weights(j2: u32) -> Result<BridgeWeights, ScenarioError> {
    let j2i = j2 as i32;
    let m2s: Vec<i32> = (-j2i - 2..=j2i + 2).step_by(2).collect();
    let cols: Vec<i32> = (-j2i..=j2i).step_by(2).collect();
    let hx = 2.0 * PI / BRIDGE_NX as f64;
    let compute = |ny: usize| -> Vec<Vec<C64>> {
        let hy = 2.0 * BRIDGE_Y_MAX / ny as f64;
        let mut w = vec![vec![ZERO; cols.len()]; m2s.len()];
        for (a, &m) in m2s.iter().enumerate() {
            for (b, &mp) in cols.iter().enumerate() {
                let dm = (m - mp) as f64 / 2.0;
                let mut acc = ZERO;
                for iy in 0..=ny {
                    let y = -BRIDGE_Y_MAX + iy as f64 * hy;
                    let wy = if iy == 0 || iy == ny { 0.5 * hy } else { hy };
                    let rho = so3_density(j2, y) * wy;
                    let mut sx = ZERO;
                    for ix in 0..BRIDGE_NX {
                        let x = ix as f64 * hx;
                        sx += (I * dm * C64::new(x, y)).exp();
                    }
                    acc += sx * hx * rho;
                }
                w[a][b] = acc;
            }
        }
        w
    };
    let mut ny = BRIDGE_Y_START;
    let mut w = compute(ny);
    for _ in 0..BRIDGE_MAX_DOUBLINGS {
        let next = compute(2 * ny);
        let scale = next.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        let change = w.iter().flatten().zip(next.iter().flatten()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
        ny *= 2;
        w = next;
        if change < BRIDGE_CHANGE {
            return Ok(BridgeWeights { m2s, w, y_nodes: ny + 1, change });
        }
    }
    Err(ScenarioError::NonConvergence(format!("bridge quadrature did not settle below {BRIDGE_CHANGE:e} after {BRIDGE_MAX_DOUBLINGS} doublings")))
}

/// The closed form printed for D without its constant prefactor:
/// P^(j-1/2) sqrt(Q) [R sigma1 + 1] (-i zeta, 1).
pub fn printed_d<T: Scalar>(j2: u32, zeta: i32, theta: T, phi: T, q: T) -> [T; 2] {
    let (st, ct, sp, cp, sq, cq) = (theta.sin(), theta.cos(), phi.sin(), phi.cos(), q.sin(), q.cos());
    let pp = ct * sq * (-I) + st * (cp - cq * sp * I);
    let qq = ct * sq + cp * (cq + st) * I + sp + cq * st * sp;
    let rr = (cq * ct + sq * (cp + st * sp * I) * I) / (cq * st + ct * sq * sp + 1.0);
    let pre = pp.powc(C64::from((j2 as f64 - 1.0) / 2.0)) * qq.sqrt();
    let z = C64::from(-(zeta as f64)) * I;
    [pre * (rr + z), pre * (rr * z + 1.0)]
}

/// Coefficients (a_v, b_v) with d_v D = a_v D + b_v sigma1 D for v = theta, phi, q,
/// solving X_a D = -l_a D for the three first derivatives.
pub fn d_gradient<T: Scalar>(j: f64, theta: T, phi: T, q: T) -> [(T, T); 3] {
    let (st, ct, sp, cp, sq, cq) = (theta.sin(), theta.cos(), phi.sin(), phi.cos(), q.sin(), q.cos());
    let cot = ct / st;
    let zero = T::re(0.0);
    let a = [[zero, T::re(1.0), sq * (-I)], [cp, -(sp * cot), cq * (-I)], [sp, cp * cot, T::re(-1.0)]];
    let c = [cq * (-I * j), sq * (I * j), zero];
    let s = [zero, sp / st * (-0.5 * I), cp / st * (0.5 * I)];
    let ua = solve3(&a, &c);
    let ub = solve3(&a, &s);
    [(ua[0], ub[0]), (ua[1], ub[1]), (ua[2], ub[2])]
}

fn det3<T: Scalar>(m: &[[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn solve3<T: Scalar>(a: &[[T; 3]; 3], r: &[T; 3]) -> [T; 3] {
    let inv = det3(a).recip();
    std::array::from_fn(|k| {
        let mut m = *a;
        for row in 0..3 {
            m[row][k] = r[row];
        }
        det3(&m) * inv
    })
}

fn apply_ab<T: Scalar>(ab: (T, T), d: [T; 2]) -> [T; 2] {
    [ab.0 * d[0] + ab.1 * d[1], ab.1 * d[0] + ab.0 * d[1]]
}

/// D-functions solving X_a D = -l_a D, integrated from a spin eigenvector at
/// (pi/2, 0, q = 0) and carried to complex q through a finite Fourier expansion.
pub struct DFunction {
    j2: u32,
    tol: f64,
    d0: [C64; 2],
    /// |lambda - i zeta (j + 1/2)| for the chosen seed eigenvector of the printed spin matrix
    seed_mismatch: f64,
    values: Mutex<HashMap<(u64, u64), Vec<[C64; 2]>>>,
    jets: Mutex<HashMap<(u64, u64, u8), Vec<[Jet; 2]>>>,
}

impl DFunction {
    pub fn new(j2: u32, zeta: i32, tol: f64) -> Result<Self, ScenarioError> {
        let j = j2 as f64 / 2.0;
        let g = d_gradient(j, C64::from(FRAC_PI_2), ZERO, ZERO);
        let (a_t, b_t) = g[0];
        let (a_p, b_p) = g[1];
        let s = spin_matrix(a_t, b_t, a_p, b_p);
        let target = I * (zeta as f64 * (j + 0.5));
        let tr = s[0][0] + s[1][1];
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let disc = (tr * tr - det * 4.0).sqrt();
        let l1 = (tr + disc) / 2.0;
        let l2 = (tr - disc) / 2.0;
        let lam = if (l1 - target).norm() <= (l2 - target).norm() { l1 } else { l2 };
        let v1 = [s[0][1], lam - s[0][0]];
        let v2 = [lam - s[1][1], s[1][0]];
        let n = |v: &[C64; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let v = if n(&v1) >= n(&v2) { v1 } else { v2 };
        let nv = n(&v);
        if !(nv > 0.0) {
            return Err(ScenarioError::Singular("spin matrix at the reference point has no eigenvector".into()));
        }
        // unit norm, first component real and non-negative
        let ph = if v[0].norm() > 1e-12 { v[0].conj() / v[0].norm() } else { v[1].conj() / v[1].norm() };
        let d0 = [v[0] * ph / nv, v[1] * ph / nv];
        Ok(DFunction { j2, tol, d0, seed_mismatch: (lam - target).norm(), values: Mutex::new(HashMap::new()), jets: Mutex::new(HashMap::new()) })
    }

    pub fn seed_mismatch(&self) -> f64 {
        self.seed_mismatch
    }

    fn j(&self) -> f64 {
        self.j2 as f64 / 2.0
    }

    /// 2M for the expansion frequencies exp(-i M q).
    fn m2s(&self) -> Vec<i32> {
        let j2 = self.j2 as i32;
        (-j2..=j2).step_by(2).collect()
    }

    fn q_samples() -> Vec<f64> {
        (0..NQ).map(|k| 2.0 * PI * k as f64 / NQ as f64).collect()
    }

    /// D at (theta, phi) for real q, integrated along theta/phi at q = 0 and then along q.
    pub fn integrate(&self, theta: f64, phi: f64, qs: &[f64]) -> Result<Vec<[C64; 2]>, ScenarioError> {
        let j = self.j();
        let opts = OdeOptions::with_tol(self.tol);
        let (dt, dp) = (theta - FRAC_PI_2, phi);
        let start = if dt == 0.0 && dp == 0.0 {
            self.d0.to_vec()
        } else {
            let f = |s: f64, y: &[C64], dy: &mut [C64]| {
                let g = d_gradient(j, C64::from(FRAC_PI_2 + s * dt), C64::from(s * dp), ZERO);
                let a = apply_ab(g[0], [y[0], y[1]]);
                let b = apply_ab(g[1], [y[0], y[1]]);
                dy[0] = a[0] * dt + b[0] * dp;
                dy[1] = a[1] * dt + b[1] * dp;
            };
            dopri5(f, 0.0, &self.d0, &[1.0], &opts)?.remove(0)
        };
        let (pos, neg): (Vec<(usize, f64)>, Vec<(usize, f64)>) = qs.iter().copied().enumerate().partition(|(_, q)| *q >= 0.0);
        let mut out = vec![[ZERO; 2]; qs.len()];
        let (th, ph) = (C64::from(theta), C64::from(phi));
        let f = |q: f64, y: &[C64], dy: &mut [C64]| {
            let g = d_gradient(j, th, ph, C64::from(q));
            let a = apply_ab(g[2], [y[0], y[1]]);
            dy[0] = a[0];
            dy[1] = a[1];
        };
        for (mut part, sign) in [(pos, 1.0), (neg, -1.0)] {
            if part.is_empty() {
                continue;
            }
            part.sort_by(|a, b| (sign * a.1).total_cmp(&(sign * b.1)));
            let samples: Vec<f64> = part.iter().map(|p| p.1).collect();
            let zero_first = samples[0] == 0.0;
            let vals = if zero_first && samples.len() == 1 {
                vec![start.clone()]
            } else if zero_first {
                let mut v = vec![start.clone()];
                v.extend(dopri5(f, 0.0, &start, &samples[1..], &opts)?);
                v
            } else {
                dopri5(f, 0.0, &start, &samples, &opts)?
            };
            for ((idx, _), v) in part.iter().zip(vals) {
                out[*idx] = [v[0], v[1]];
            }
        }
        Ok(out)
    }

    /// Values of D at the real samples q_k = 2 pi k / 16, memoized per (theta, phi).
    fn samples(&self, theta: f64, phi: f64) -> Result<Vec<[C64; 2]>, ScenarioError> {
        let key = (theta.to_bits(), phi.to_bits());
        if let Some(v) = self.values.lock().expect("d-function cache").get(&key) {
            return Ok(v.clone());
        }
        let v = self.integrate(theta, phi, &Self::q_samples())?;
        self.values.lock().expect("d-function cache").insert(key, v.clone());
        Ok(v)
    }

    /// Fourier coefficients d_M at (theta, phi), ordered by 2M ascending.
    pub fn fourier_values(&self, theta: f64, phi: f64) -> Result<Vec<[C64; 2]>, ScenarioError> {
        let s = self.samples(theta, phi)?;
        let qs = Self::q_samples();
        Ok(self
            .m2s()
            .iter()
            .map(|&m2| {
                let m = m2 as f64 / 2.0;
                let mut acc = [ZERO; 2];
                for (d, q) in s.iter().zip(&qs) {
                    let e = (I * m * *q).exp() / NQ as f64;
                    acc[0] += d[0] * e;
                    acc[1] += d[1] * e;
                }
                acc
            })
            .collect())
    }

    /// sum over M of d_M exp(-i M q).
    pub fn sum(&self, coeffs: &[[C64; 2]], q: C64) -> [C64; 2] {
        let mut out = [ZERO; 2];
        for (c, m2) in coeffs.iter().zip(self.m2s()) {
            let e = (-I * (m2 as f64 / 2.0) * q).exp();
            out[0] += c[0] * e;
            out[1] += c[1] * e;
        }
        out
    }

    /// Jets of the Fourier coefficients in (theta, phi), built by lifting each real-q sample.
    fn coefficient_jets(&self, x: &Coords) -> Vec<[Jet; 2]> {
        let order = x[0].order();
        let (theta, phi) = (x[0].value().re, x[1].value().re);
        let key = (theta.to_bits(), phi.to_bits(), order);
        if let Some(v) = self.jets.lock().expect("d-function cache").get(&key) {
            return v.clone();
        }
        let nan = Jet::constant(C64::new(f64::NAN, f64::NAN));
        let Ok(samples) = self.samples(theta, phi) else {
            return vec![[nan; 2]; self.m2s().len()];
        };
        let j = self.j();
        let (th, ph) = (x[0], x[1]);
        let lifted: Vec<Vec<Jet>> = samples
            .iter()
            .zip(Self::q_samples())
            .map(|(d, q)| {
                let qj = Jet::constant(C64::from(q));
                holonomic_lift(d, order, 2, |i, y| {
                    let g = d_gradient(j, th, ph, qj);
                    apply_ab(g[i], [y[0], y[1]]).to_vec()
                })
            })
            .collect();
        let qs = Self::q_samples();
        let out: Vec<[Jet; 2]> = self
            .m2s()
            .iter()
            .map(|&m2| {
                let m = m2 as f64 / 2.0;
                let mut acc = [Jet::constant(ZERO), Jet::constant(ZERO)];
                for (l, q) in lifted.iter().zip(&qs) {
                    let e = (I * m * *q).exp() / NQ as f64;
                    acc[0] += l[0] * e;
                    acc[1] += l[1] * e;
                }
                acc
            })
            .collect();
        self.jets.lock().expect("d-function cache").insert(key, out.clone());
        out
    }

    /// D as a jet in (theta, phi, q).
    pub fn jet(&self, x: &Coords) -> [Jet; 2] {
        let c = self.coefficient_jets(x);
        let mut out = [Jet::constant(ZERO), Jet::constant(ZERO)];
        for (d, m2) in c.iter().zip(self.m2s()) {
            let e = (x[3] * (-I * (m2 as f64 / 2.0))).exp();
            out[0] += d[0] * e;
            out[1] += d[1] * e;
        }
        out
    }
}

/// Printed spin operator on the upper block at theta = pi/2, sigma3 D_theta - sigma2 D_phi,
/// restricted to solutions where D_theta = A_t D and D_phi = A_p D.
fn spin_matrix(a_t: C64, b_t: C64, a_p: C64, b_p: C64) -> [[C64; 2]; 2] {
    let at = [[a_t, b_t], [b_t, a_t]];
    let ap = [[a_p, b_p], [b_p, a_p]];
    // sigma2 = [[0, -i], [i, 0]], sigma3 = diag(1, -1)
    let s2ap = [[-I * ap[1][0], -I * ap[1][1]], [I * ap[0][0], I * ap[0][1]]];
    let s3at = [[at[0][0], at[0][1]], [-at[1][0], -at[1][1]]];
    std::array::from_fn(|r| std::array::from_fn(|c| s3at[r][c] - s2ap[r][c]))
}

pub struct SovField {
    j2: u32,
    m2: i32,
    zeta: i32,
    profile: Arc<ProfileCache>,
}

impl SpinorField for SovField {
    fn eval(&self, x: &Coords) -> SpinorJet {
        let nan = Jet::constant(C64::new(f64::NAN, f64::NAN));
        let om = frame_spinor(self.j2, self.m2, self.zeta, x[0], x[1]).unwrap_or([nan, nan]);
        assemble(om, &self.profile.jet(&x[2]), x[2])
    }
}

pub struct NiField {
    dfun: Arc<DFunction>,
    profile: Arc<ProfileCache>,
}

impl SpinorField for NiField {
    fn eval(&self, x: &Coords) -> SpinorJet {
        assemble(self.dfun.jet(x), &self.profile.jet(&x[2]), x[2])
    }
}

/// (1/r) (A f, -i sigma1 A g)
fn assemble(a: [Jet; 2], fg: &[Jet], r: Jet) -> SpinorJet {
    let ir = r.recip();
    [a[0] * fg[0] * ir, a[1] * fg[0] * ir, a[1] * fg[1] * ir * (-I), a[0] * fg[1] * ir * (-I)]
}

impl Scenario for Spherical {
    fn name(&self) -> &'static str {
        "spherical"
    }

    fn verify(&self, report: &mut Report) -> Result<(), ScenarioError> {
        let p = &self.params;
        let tol = p.tol;
        let j = p.j2 as f64 / 2.0;
        let xs = self.symmetry_ops();
        let h = self.hamiltonian();
        let s = self.spin_op();
        let samp = self.sampler();
        let sampler: Sampler = &samp;
        report.param("j", format!("{}/2", p.j2));
        report.param("zalpha", p.zalpha);

        report.extend([check("spherical.algebra.table", check_structure_constants(&xs, &crate::lie::so3_table(), p.trials, p.seed, sampler)?, tol.algebra)]);
        for x in &xs {
            report.extend([
                check(&format!("spherical.symmetry.[H,{}]", x.name), check_symmetry(&h, x, p.trials, p.seed, sampler)?, tol.symmetry),
                check(&format!("spherical.symmetry.[S,{}]", x.name), check_symmetry(&s, x, p.trials, p.seed, sampler)?, tol.symmetry),
            ]);
        }
        report.extend([check("spherical.symmetry.[H,S]", check_symmetry(&h, &s, p.trials, p.seed, sampler)?, tol.symmetry)]);
        self.lambda_checks(report)?;

        let grid = self.grid();
        let energy = C64::from(p.energy);
        let kappa = C64::from(p.zeta as f64 * (j + 0.5));
        let ni = self.ni_basis();
        if self.half_integer() {
            let sov = self.sov_basis();
            report.extend([
                check("spherical.sov.residual", eigen_residual(&h, energy, &sov, &grid)?, tol.residual),
                check("spherical.sov.J2", casimir_residual(&xs, j * (j + 1.0), &sov, &grid)?, tol.eigen),
                check("spherical.sov.S", eigen_residual(&s, kappa, &sov, &grid)?, tol.eigen),
                check("spherical.sov.-iX3", eigen_residual(&xs[2].scaled(-I), C64::from(p.m2 as f64 / 2.0), &sov, &grid)?, tol.eigen),
            ]);
            let printed = eigen_residual(&self.spin_op_printed(), kappa * I, &sov, &grid)?;
            report.notes.push(format!("spherical printed spin operator: eigenvalue i zeta (j + 1/2) on the separable basis, residual {printed:.3e}"));
        } else {
            report.notes.push(format!("j = {} is an integer: no spherical spinor exists, separable checks skipped", p.j2 / 2));
        }
        let lq = so3_lambda_rep_on(p.j2, 3);
        let mut ni_checks = vec![
            check("spherical.ni.residual", eigen_residual(&h, energy, &ni, &grid)?, tol.residual),
            check("spherical.ni.J2", casimir_residual(&xs, j * (j + 1.0), &ni, &grid)?, tol.eigen),
            check("spherical.ni.S", eigen_residual(&s, kappa, &ni, &grid)?, tol.eigen),
        ];
        for (x, l) in xs.iter().zip(&lq.ops) {
            ni_checks.push(check(&format!("spherical.ni.{}=-{}", x.name, l.name), eigen_residual(&x.plus(l), ZERO, &ni, &grid)?, tol.eigen));
        }
        ni_checks.push(check("spherical.ni.fourier_fit", self.fourier_fit_residual()?, tol.eigen));
        ni_checks.push(check("spherical.ni.seed_spin", self.dfun.seed_mismatch(), tol.algebra));
        if self.half_integer() {
            report.extend(ni_checks);
        } else {
            for c in ni_checks {
                report.notes.push(format!("integer j: {} residual {:.3e} (tolerance {:.0e})", c.name, c.residual, c.tol));
            }
        }
        let shared = Arc::ptr_eq(self.profile.system(), &(self.radial.clone() as Arc<dyn LinearOde + Send + Sync>));
        report.extend([check("spherical.reduction.shared", if shared { 0.0 } else { 1.0 }, 0.0)]);
        Ok(())
    }

    fn basis(&self, report: &mut Report) -> Result<Table, ScenarioError> {
        let p = &self.params;
        let grid = self.grid();
        let h = self.hamiltonian();
        let energy = C64::from(p.energy);
        let ni = self.ni_basis();
        let mut fields: Vec<(&str, &dyn SpinorField)> = Vec::new();
        let sov = self.sov_basis();
        if self.half_integer() {
            report.extend([check("spherical.sov.residual", eigen_residual(&h, energy, &sov, &grid)?, p.tol.residual)]);
            fields.push(("sov", &sov));
        }
        let r = eigen_residual(&h, energy, &ni, &grid)?;
        if self.half_integer() {
            report.extend([check("spherical.ni.residual", r, p.tol.residual)]);
        } else {
            report.notes.push(format!("integer j: spherical.ni.residual {r:.3e}"));
        }
        fields.push(("ni", &ni));
        let mut t = Table::default();
        for (name, field) in fields {
            let part = dump_field(&LABELS[..3], field, &grid);
            if t.header.is_empty() {
                t.header = std::iter::once("basis".to_string()).chain(part.header.iter().cloned()).collect();
            }
            for row in part.rows {
                t.push(std::iter::once(name.to_string()).chain(row).collect());
            }
        }
        Ok(t)
    }
}

/// Value of the field at a point, for spot checks.
pub fn field_value(field: &dyn SpinorField, point: &[f64; 4]) -> [C64; 4] {
    let x = coords_at(&point.map(C64::from), 1);
    field.eval(&x).map(|j| j.value())
}
