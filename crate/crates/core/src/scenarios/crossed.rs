//! Crossed fields that contract the free symmetry algebra to the Abelian pair {X1, X3}.
//!
//! Three coordinate views share one solution: Cartesian (t, x, y, z), group
//! coordinates (g1, g2, g3, g4) with the moving frame, and the reduced plane (u, v).

use super::{check, dump_field, eigen_residual, linspace, ProfileCache, Scenario, ScenarioError, ScenarioParams};
use crate::gamma::{crossed_field_gammas, real_inverse, standard_gammas, GammaSet, HatGammas, Mat4, C64, I, ONE};
use crate::jet::{coords_at, mat_apply, random_test_spinor, Coords, Jet, Scalar, SpinorField, SpinorJet};
use crate::lie::{cartesian_to_chart, chart_to_cartesian, check_lambda_table, crossed_adjoint_check, crossed_lambda_rep, crossed_table, kernel_residuals, KernelVariant};
use crate::ode::{crossed_system, CrossedParams, CrossedVariant, PhiRule};
use crate::operator::{check_structure_constants, check_symmetry, max_norm, unit, Coeff, MatrixDiffOp, Sampler};
use crate::report::{Report, Table};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const CART: [&str; 4] = ["t", "x", "y", "z"];
const GROUP: [&str; 4] = ["g1", "g2", "g3", "g4"];
const REDUCED: [&str; 2] = ["u", "v"];
const U_RANGE: (f64, f64) = (-1.0, 1.0);
/// Group grid over (g1, g2, g4) at fixed g3.
const G_BOX: [(f64, f64); 3] = [(-1.0, 1.0), (-0.6, 0.6), (-1.0, 1.0)];
const G3_FIXED: f64 = 0.3;
/// Cartesian grid over (x, y, z) at fixed t; z - t stays in [0.5, 2] so the chart is regular.
const T_FIXED: f64 = -1.0;
const CART_BOX: [(f64, f64); 3] = [(-1.0, 1.0), (-1.0, 1.0), (-0.5, 1.0)];
/// Phi(0); together with P(u, 1) being a pure phase this fixes the normalization at v = 1.
const PHI0: [C64; 4] = [C64::new(1.0, 0.0), C64::new(0.0, 0.2), C64::new(-0.3, 0.0), C64::new(0.5, 0.0)];

/// Field parameters shared by coefficient closures.
#[derive(Clone, Copy, Debug)]
struct Field {
    alpha: f64,
    eps: f64,
    charge: f64,
    phi: PhiRule,
}

impl Field {
    /// Covariant components A_mu: a = alpha x/(t - z) + phi(y), A = (-a, alpha, -alpha/eps, a).
    fn cartesian<T: Scalar>(&self, x: &[T; 4]) -> [T; 4] {
        let a = x[1] * self.alpha / (x[0] - x[3]) + self.phi.eval(x[2]);
        [-a, T::re(self.alpha), T::re(-self.alpha / self.eps), a]
    }

    /// Frame components A_a(g) = (alpha, e^{-g2} phi(eps g4) - alpha g4, 0, 0).
    fn frame<T: Scalar>(&self, g: &[T; 4]) -> [T; 4] {
        [T::re(self.alpha), (-g[1]).exp() * self.phi.eval(g[3] * self.eps) + g[3] * (-self.alpha), T::re(0.0), T::re(0.0)]
    }
}

/// Components eta_a^nu of the right-invariant fields in group coordinates.
fn eta_components(g: &[f64; 4]) -> [[f64; 4]; 4] {
    let e2 = g[1].exp();
    [[-1.0, 0.0, 0.0, 0.0], [g[0], -1.0, 0.0, 0.0], [0.0, 0.0, -e2, 0.0], [0.0, 0.0, -g[0] * e2, -1.0]]
}

/// eta_a pushed to Cartesian components, row a.
fn eta_cartesian(g: &[f64; 4], eps: f64) -> [[f64; 4]; 4] {
    let x = chart_to_cartesian(&coords_at(&g.map(C64::from), 1), eps);
    let jac: [[f64; 4]; 4] = std::array::from_fn(|mu| std::array::from_fn(|nu| x[mu].derivative(&unit(nu)).re));
    let e = eta_components(g);
    std::array::from_fn(|a| std::array::from_fn(|mu| (0..4).map(|nu| e[a][nu] * jac[mu][nu]).sum()))
}

/// Spin lift S(g) = exp(-g2 s2) exp(g1 s1) with s1 = (gamma^12 + gamma^24)/2 nilpotent and
/// s2 = -gamma^14/2 squaring to 1/4; `inverse` applies S(g)^{-1}.
fn spin_lift<T: Scalar>(s1: &Mat4, s2: &Mat4, g1: T, g2: T, v: &[T; 4], inverse: bool) -> [T; 4] {
    let half = g2 * 0.5;
    let (ch, sh) = (half.cosh(), half.sinh() * 2.0);
    let boost = |w: &[T; 4], sign: f64| -> [T; 4] {
        let m = mat_apply(s2, w);
        std::array::from_fn(|i| ch * w[i] + sh * m[i] * sign)
    };
    let shear = |w: &[T; 4], sign: f64| -> [T; 4] {
        let m = mat_apply(s1, w);
        std::array::from_fn(|i| w[i] + g1 * m[i] * sign)
    };
    if inverse {
        shear(&boost(v, 1.0), -1.0)
    } else {
        boost(&shear(v, 1.0), -1.0)
    }
}

/// Null vector of X -> gha_a X - X gh_a over all a, by complex SVD.
fn intertwiner(gha: &[Mat4; 4], gh: &[Mat4; 4]) -> Result<Mat4, ScenarioError> {
    let mut a = DMatrix::<C64>::zeros(64, 16);
    for k in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                let row = 16 * k + 4 * i + j;
                for m in 0..4 {
                    // (gha X)_ij = sum_m gha_im X_mj ; (X gh)_ij = sum_m X_im gh_mj
                    a[(row, 4 * m + j)] += gha[k].0[i][m];
                    a[(row, 4 * i + m)] -= gh[k].0[m][j];
                }
            }
        }
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| ScenarioError::Singular("intertwiner SVD failed".into()))?;
    let (k, smin) = svd.singular_values.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).expect("16 singular values");
    if *smin > 1e-8 {
        return Err(ScenarioError::Singular(format!("frames are not conjugate (smallest singular value {smin:e})")));
    }
    let mut s = Mat4::zero();
    for i in 0..4 {
        for j in 0..4 {
            s.0[i][j] = vt[(k, 4 * i + j)].conj();
        }
    }
    Ok(s)
}

pub struct Crossed {
    params: ScenarioParams,
    field: Field,
    q: [f64; 2],
    gs: GammaSet,
    hg: HatGammas,
    s1: Mat4,
    s2: Mat4,
    s0: Mat4,
    s0_inv: Mat4,
    profile: Arc<ProfileCache>,
}

impl Crossed {
    pub fn new(p: &ScenarioParams) -> Result<Self, ScenarioError> {
        if !(p.eps > 0.0) {
            return Err(ScenarioError::Config(format!("epsilon must be positive, got {}", p.eps)));
        }
        let (v0, v1) = p.v_range;
        if !(v0 > 0.0) || !(v1 > 0.0) {
            return Err(ScenarioError::Config(format!("v must be positive, got range [{v0}, {v1}]")));
        }
        if v1 < v0 {
            return Err(ScenarioError::Config(format!("empty v range [{v0}, {v1}]")));
        }
        let gs = standard_gammas();
        let hg = crossed_field_gammas(p.eps)?;
        let s1 = (gs.g2(1, 2) + gs.g2(2, 4)) * 0.5;
        let s2 = gs.g2(1, 4) * -0.5;
        let field = Field { alpha: p.alpha, eps: p.eps, charge: p.charge, phi: p.phi };
        let q = [p.q.re, p.q.im];
        let profile = Self::profile_for(p, CrossedVariant::Derived)?;
        let mut c = Crossed { params: p.clone(), field, q, gs, hg, s1, s2, s0: Mat4::identity(), s0_inv: Mat4::identity(), profile };
        c.s0 = intertwiner(&c.frame_gammas(), &c.hg.gh)?;
        c.s0_inv = c.s0.inverse()?;
        Ok(c)
    }

    fn profile_for(p: &ScenarioParams, variant: CrossedVariant) -> Result<Arc<ProfileCache>, ScenarioError> {
        let cp = CrossedParams { alpha: p.alpha, eps: p.eps, kappa: p.kappa, q1: p.q.re, q2: p.q.im, mass: p.mass, charge: p.charge, phi: p.phi };
        let sys = crossed_system(cp, variant)?;
        Ok(Arc::new(ProfileCache::new(Arc::new(sys), 0.0, PHI0.to_vec(), p.tol.ode)))
    }

    /// Cartesian gammas expressed in the eta frame at the identity, where S = 1.
    pub fn frame_gammas(&self) -> [Mat4; 4] {
        let ec = eta_cartesian(&[0.0; 4], self.field.eps);
        let inv = real_inverse(&ec).expect("eta frame is a basis");
        std::array::from_fn(|a| (0..4).fold(Mat4::zero(), |acc, mu| acc + self.gs.g(mu + 1) * inv[mu][a]))
    }

    /// max_a |gha_a S0 - S0 gh_a|
    pub fn intertwiner_residual(&self) -> f64 {
        let gha = self.frame_gammas();
        (0..4).map(|a| (gha[a] * self.s0 - self.s0 * self.hg.gh[a]).max_abs()).fold(0.0, f64::max)
    }

    /// gamma^mu (i d_mu - e A_mu) in (t, x, y, z); charge 0 gives the free operator.
    pub fn hamiltonian_cartesian(&self, charge: f64) -> MatrixDiffOp {
        let name = if charge == 0.0 { "H0" } else { "H" };
        let mut op = MatrixDiffOp::new(name, &CART);
        for mu in 0..4 {
            op = op.d(mu, Coeff::Const(I), self.gs.g(mu + 1));
        }
        if charge != 0.0 {
            let f = self.field;
            for mu in 0..4 {
                op = op.mult(Coeff::field(move |x: &Coords| f.cartesian(x)[mu] * (-charge)), self.gs.g(mu + 1));
            }
        }
        op
    }

    /// X1 = -(L21 + L24 + (gamma^12 + gamma^24)/2), X2 = L14 - gamma^14/2, X3 = dt + dz, X4 = dx + eps dy,
    /// with L_mn = x_m d_n - x_n d_m and x_m = (t, -x, -y, -z).
    pub fn symmetry_ops(&self) -> Vec<MatrixDiffOp> {
        let id = Mat4::identity();
        let lower = |m: usize| move |x: &Coords| if m == 1 { x[0] } else { -x[m - 1] };
        let add_l = |op: MatrixDiffOp, m: usize, n: usize, s: f64| {
            let (xm, xn) = (lower(m), lower(n));
            op.d(n - 1, Coeff::field(move |x: &Coords| xm(x) * s), id).d(m - 1, Coeff::field(move |x: &Coords| xn(x) * (-s)), id)
        };
        let g = &self.gs;
        let x1 = add_l(add_l(MatrixDiffOp::new("X1", &CART), 2, 1, -1.0), 2, 4, -1.0).mult(Coeff::Const(C64::from(-0.5)), g.g2(1, 2) + g.g2(2, 4));
        let x2 = add_l(MatrixDiffOp::new("X2", &CART), 1, 4, 1.0).mult(Coeff::Const(C64::from(-0.5)), g.g2(1, 4));
        let x3 = MatrixDiffOp::new("X3", &CART).d(0, Coeff::Const(ONE), id).d(3, Coeff::Const(ONE), id);
        let x4 = MatrixDiffOp::new("X4", &CART).d(1, Coeff::Const(ONE), id).d(2, Coeff::Const(C64::from(self.field.eps)), id);
        vec![x1, x2, x3, x4]
    }

    /// gh^a (i (eta_a + Gamma_a) - e A_a(g)) on group coordinates.
    pub fn moving_hamiltonian(&self, charge: f64) -> MatrixDiffOp {
        let h = &self.hg;
        let gamma1 = (h.g2(1, 2) + h.g2(2, 4)) * -0.5;
        let gamma2 = h.g2(2, 3) * -0.5;
        let f = self.field;
        MatrixDiffOp::new("HG", &GROUP)
            .d(0, Coeff::Const(-I), h.g(1))
            .d(0, Coeff::field(|x: &Coords| x[0] * I), h.g(2))
            .d(1, Coeff::Const(-I), h.g(2))
            .d(2, Coeff::field(|x: &Coords| x[1].exp() * (-I)), h.g(3))
            .d(2, Coeff::field(|x: &Coords| x[0] * x[1].exp() * (-I)), h.g(4))
            .d(3, Coeff::Const(-I), h.g(4))
            .mult(Coeff::Const(I), h.g(1) * gamma1 + h.g(2) * gamma2)
            .mult(Coeff::field(move |x: &Coords| f.frame(x)[0] * (-charge)), h.g(1))
            .mult(Coeff::field(move |x: &Coords| f.frame(x)[1] * (-charge)), h.g(2))
    }

    /// Reduced operator in (u, v).
    pub fn reduced_operator(&self) -> MatrixDiffOp {
        let h = &self.hg;
        let [q1, q2] = self.q;
        let e2 = (-q2).exp();
        let Field { alpha, eps, charge, phi } = self.field;
        let spin = h.g(2) * (h.g(1) * h.g(4) + Mat4::identity() * (1.0 / (eps * eps) + 2.0)) * (I * 0.5);
        MatrixDiffOp::new("Hred", &REDUCED)
            .d(0, Coeff::Const(-I), h.g(4))
            .d(1, Coeff::field(|x: &Coords| x[1] * I), h.g(2))
            .mult(Coeff::field(move |x: &Coords| (x[0] * -1.0 + q1) * x[1].recip() * (-e2)), h.g(1))
            .mult(Coeff::field(move |x: &Coords| x[1].recip() * (-e2)), h.g(3))
            .mult(Coeff::Const(C64::from(-charge * alpha)), h.g(1))
            .mult(Coeff::field(move |x: &Coords| (x[1] * phi.eval(x[0] * eps) + x[0] * (-alpha)) * (-charge)), h.g(2))
            .mult(Coeff::Const(ONE), spin)
    }

    /// Y = -dv + (1/2v)(gh^23 + (u - q1)(gh^12 + gh^24) + (i/v) e^{-q2} (u - q1)^2 + 2 i e alpha q1 (1 - v) - 1).
    pub fn y_operator(&self) -> MatrixDiffOp {
        let h = &self.hg;
        let [q1, q2] = self.q;
        let e2 = (-q2).exp();
        let ea = self.field.charge * self.field.alpha;
        let id = Mat4::identity();
        MatrixDiffOp::new("Y", &REDUCED)
            .d(1, Coeff::Const(-ONE), id)
            .mult(Coeff::field(|x: &Coords| x[1].recip() * 0.5), h.g2(2, 3))
            .mult(Coeff::field(move |x: &Coords| (x[0] + (-q1)) * x[1].recip() * 0.5), h.g2(1, 2) + h.g2(2, 4))
            .mult(
                Coeff::field(move |x: &Coords| {
                    let w = x[0] + (-q1);
                    let iv = x[1].recip();
                    (w * w * iv * (I * e2) + (x[1] * -1.0 + 1.0) * (I * 2.0 * ea * q1) + (-1.0)) * iv * 0.5
                }),
                id,
            )
    }

    /// psi(u, v) = P(u, v) Phi(u), the Y-eigenfunction with label kappa.
    pub fn reduced_field(&self) -> ReducedField {
        self.reduced_field_with(self.profile.clone())
    }

    fn reduced_field_with(&self, profile: Arc<ProfileCache>) -> ReducedField {
        let h = &self.hg;
        ReducedField {
            a: h.g2(2, 3),
            b: h.g2(1, 2) + h.g2(2, 4),
            q: self.q,
            ea: self.field.charge * self.field.alpha,
            kappa: self.params.kappa,
            profile,
        }
    }

    /// The solution on group coordinates.
    pub fn group_field(&self) -> GroupField {
        GroupField { reduced: self.reduced_field(), q: self.q }
    }

    /// The solution as a Cartesian spinor, S(g) S0 psi(g) with g from the chart.
    pub fn cartesian_field(&self) -> CartesianField {
        CartesianField { group: self.group_field(), eps: self.field.eps, s0: self.s0, s1: self.s1, s2: self.s2 }
    }

    /// Value of the reduced solution at one point; v must be positive.
    pub fn reduced_value(&self, u: f64, v: f64) -> Result<[C64; 4], ScenarioError> {
        if !(v > 0.0) {
            return Err(ScenarioError::Config(format!("v must be positive, got {v}")));
        }
        let x = coords_at(&[C64::from(u), C64::from(v)], 1);
        Ok(self.reduced_field().eval(&x).map(|j| j.value()))
    }

    /// max over trials of |HG chi - T^{-1} H_cart (T chi)| / max(1, |HG chi|) with T = S(g) S0.
    pub fn chain_rule_residual(&self, charge: f64, trials: usize, seed: u64) -> Result<f64, ScenarioError> {
        let hg = self.moving_hamiltonian(charge);
        let hc = self.hamiltonian_cartesian(charge);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for t in 0..trials {
            let chi = random_test_spinor(seed.wrapping_add(t as u64));
            let g: [f64; 4] = group_sample(&mut rng);
            let gc = g.map(C64::from);
            let lhs = hg.apply(&chi, &gc)?;
            let eps = self.field.eps;
            let lifted = |x: &Coords| -> SpinorJet {
                let gj = cartesian_to_chart(x, eps);
                let v: [Jet; 4] = std::array::from_fn(|k| chi.component(k, &gj));
                spin_lift(&self.s1, &self.s2, gj[0], gj[1], &mat_apply(&self.s0, &v), false)
            };
            let xc = chart_to_cartesian(&gc, eps);
            let rc = hc.apply(&lifted, &xc)?;
            let back = mat_apply(&self.s0_inv, &spin_lift(&self.s1, &self.s2, gc[0], gc[1], &rc, true));
            let diff: Vec<C64> = (0..4).map(|i| lhs[i] - back[i]).collect();
            worst = worst.max(max_norm(&diff) / max_norm(&lhs).max(1.0));
        }
        Ok(worst)
    }

    /// max over samples of |A_mu(x(g)) eta_a^mu(g) - A_a(g)|.
    pub fn potential_pullback_residual(&self, trials: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let g: [f64; 4] = group_sample(&mut rng);
            let x = chart_to_cartesian(&g.map(C64::from), self.field.eps);
            let a = self.field.cartesian(&x);
            let printed = self.field.frame(&g.map(C64::from));
            let ec = eta_cartesian(&g, self.field.eps);
            for k in 0..4 {
                let pulled: C64 = (0..4).map(|mu| a[mu] * ec[k][mu]).sum();
                worst = worst.max((pulled - printed[k]).norm());
            }
        }
        worst
    }

    /// Worst kernel residuals (left, right) over seeded points.
    pub fn kernel_check(&self, variant: KernelVariant, trials: usize, seed: u64) -> Result<(f64, f64), ScenarioError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut l, mut r): (f64, f64) = (0.0, 0.0);
        for _ in 0..trials {
            let q = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let g = group_sample(&mut rng);
            let (left, right) = kernel_residuals(variant, q, g)?;
            l = left.iter().fold(l, |m, v| m.max(*v));
            r = right.iter().fold(r, |m, v| m.max(*v));
        }
        Ok((l, r))
    }

    fn profile_points(&self) -> Vec<f64> {
        let n = self.params.grid;
        let mut ts = linspace(U_RANGE.0, U_RANGE.1, n);
        ts.extend(linspace(G_BOX[2].0, G_BOX[2].1, n));
        ts.extend(linspace(CART_BOX[1].0, CART_BOX[1].1, n).into_iter().map(|y| (C64::from(y) * (1.0 / self.field.eps)).re));
        ts
    }

    /// (u, v) grid.
    pub fn reduced_grid(&self) -> Vec<Vec<C64>> {
        let n = self.params.grid;
        let vs = linspace(self.params.v_range.0, self.params.v_range.1, n);
        linspace(U_RANGE.0, U_RANGE.1, n).into_iter().flat_map(|u| vs.iter().map(move |&v| vec![C64::from(u), C64::from(v)])).collect()
    }

    /// (g1, g2, g4) grid at fixed g3.
    pub fn group_grid(&self) -> Vec<Vec<C64>> {
        let n = self.params.grid;
        let ax: Vec<Vec<f64>> = G_BOX.iter().map(|&(a, b)| linspace(a, b, n)).collect();
        let mut out = Vec::with_capacity(n * n * n);
        for &g1 in &ax[0] {
            for &g2 in &ax[1] {
                for &g4 in &ax[2] {
                    out.push([g1, g2, G3_FIXED, g4].map(C64::from).to_vec());
                }
            }
        }
        out
    }

    /// (x, y, z) grid at fixed t, inside the chart domain z > t.
    pub fn cartesian_grid(&self) -> Vec<Vec<C64>> {
        let n = self.params.grid;
        let ax: Vec<Vec<f64>> = CART_BOX.iter().map(|&(a, b)| linspace(a, b, n)).collect();
        let mut out = Vec::with_capacity(n * n * n);
        for &x in &ax[0] {
            for &y in &ax[1] {
                for &z in &ax[2] {
                    out.push([T_FIXED, x, y, z].map(C64::from).to_vec());
                }
            }
        }
        out
    }

    fn cartesian_sampler(&self) -> impl Fn(&mut ChaCha8Rng) -> Vec<C64> {
        |r: &mut ChaCha8Rng| [r.gen_range(-1.0..-0.5), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(0.0..1.0)].map(C64::from).to_vec()
    }

    fn reduced_sampler(&self) -> impl Fn(&mut ChaCha8Rng) -> Vec<C64> {
        |r: &mut ChaCha8Rng| vec![C64::from(r.gen_range(-1.0..1.0)), C64::from(r.gen_range(0.5..2.0))]
    }

    fn l_values(&self) -> (C64, C64) {
        let [q1, q2] = self.q;
        let e2 = (-q2).exp();
        (I * q1 * e2, I * e2)
    }
}

fn group_sample(rng: &mut ChaCha8Rng) -> [f64; 4] {
    [rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
}

pub struct ReducedField {
    a: Mat4,
    b: Mat4,
    q: [f64; 2],
    ea: f64,
    kappa: f64,
    profile: Arc<ProfileCache>,
}

impl ReducedField {
    /// N = A + (u - q1) B squares to one, so exp(N log v / 2) = sqrt(v) (1 + N)/2 + (1 - N)/(2 sqrt(v)).
    fn at(&self, u: Jet, v: Jet) -> SpinorJet {
        if !(v.value().re > 0.0) {
            return [Jet::constant(C64::new(f64::NAN, f64::NAN)); 4];
        }
        let [q1, q2] = self.q;
        let f = self.profile.jet(&u);
        let phi: [Jet; 4] = std::array::from_fn(|i| f[i]);
        let w = u + (-q1);
        let na = mat_apply(&self.a, &phi);
        let nb = mat_apply(&self.b, &phi);
        let sv = v.sqrt();
        let isv = sv.recip();
        let (cp, cm) = ((sv + isv) * 0.5, (sv - isv) * 0.5);
        let power = (v.ln() * C64::new(-0.5, self.ea * q1)).exp();
        let phase = (v * (-I * (self.kappa + self.ea * q1)) + w * w * v.recip() * (-0.5 * I * (-q2).exp())).exp();
        let s = power * phase;
        std::array::from_fn(|i| s * (cp * phi[i] + cm * (na[i] + w * nb[i])))
    }
}

impl SpinorField for ReducedField {
    fn eval(&self, x: &Coords) -> SpinorJet {
        self.at(x[0], x[1])
    }
}

/// exp(-i(g3 e^{-q2} + g1 (q1 - g4) e^{g2 - q2})) psi(g4, e^{-g2}).
pub struct GroupField {
    reduced: ReducedField,
    q: [f64; 2],
}

impl GroupField {
    fn at(&self, g: &[Jet; 4]) -> SpinorJet {
        let [q1, q2] = self.q;
        let e2 = (-q2).exp();
        let phase = ((g[2] + g[0] * (g[3] * -1.0 + q1) * g[1].exp()) * (-I * e2)).exp();
        let psi = self.reduced.at(g[3], (-g[1]).exp());
        psi.map(|c| phase * c)
    }
}

impl SpinorField for GroupField {
    fn eval(&self, x: &Coords) -> SpinorJet {
        self.at(x)
    }
}

pub struct CartesianField {
    group: GroupField,
    eps: f64,
    s0: Mat4,
    s1: Mat4,
    s2: Mat4,
}

impl SpinorField for CartesianField {
    fn eval(&self, x: &Coords) -> SpinorJet {
        if !((x[3].value() - x[0].value()).re > 0.0) {
            return [Jet::constant(C64::new(f64::NAN, f64::NAN)); 4];
        }
        let g = cartesian_to_chart(x, self.eps);
        let psi = self.group.at(&g);
        spin_lift(&self.s1, &self.s2, g[0], g[1], &mat_apply(&self.s0, &psi), false)
    }
}

impl Scenario for Crossed {
    fn name(&self) -> &'static str {
        "crossed"
    }

    fn verify(&self, report: &mut Report) -> Result<(), ScenarioError> {
        let p = &self.params;
        let tol = p.tol;
        report.param("alpha", p.alpha);
        report.param("epsilon", p.eps);
        report.param("kappa", p.kappa);
        report.param("q1", self.q[0]);
        report.param("q2", self.q[1]);

        let xs = self.symmetry_ops();
        let cs = self.cartesian_sampler();
        let csamp: Sampler = &cs;
        report.extend([check("crossed.algebra.table", check_structure_constants(&xs, &crossed_table(), p.trials, p.seed, csamp)?, tol.algebra)]);
        let h0 = self.hamiltonian_cartesian(0.0);
        let h = self.hamiltonian_cartesian(p.charge);
        for x in &xs {
            report.extend([check(&format!("crossed.symmetry.[H0,{}]", x.name), check_symmetry(&h0, x, p.trials, p.seed, csamp)?, tol.symmetry)]);
        }
        for k in [0, 2] {
            report.extend([check(&format!("crossed.symmetry.[H,{}]", xs[k].name), check_symmetry(&h, &xs[k], p.trials, p.seed, csamp)?, tol.symmetry)]);
        }
        for k in [1, 3] {
            let r = check_symmetry(&h, &xs[k], p.trials, p.seed, csamp)?;
            report.notes.push(format!("crossed field breaks {}: |[H,{}]| = {r:.3e}", xs[k].name, xs[k].name));
        }
        let rs = self.reduced_sampler();
        let rsamp: Sampler = &rs;
        let hred = self.reduced_operator();
        let y = self.y_operator();
        report.extend([check("crossed.symmetry.[Hred,Y]", check_symmetry(&hred, &y, p.trials, p.seed, rsamp)?, tol.symmetry)]);

        let fit = check_lambda_table(&crossed_lambda_rep(), p.trials, p.seed)?;
        report.notes.push(format!(
            "crossed lambda table closes with the {} sign convention (same {:.3e}, opposite {:.3e})",
            if fit.same_sign <= fit.opposite_sign { "same" } else { "opposite" },
            fit.same_sign,
            fit.opposite_sign
        ));
        report.extend([check("crossed.lambda.table", fit.best(), tol.lambda)]);
        let adj = crossed_adjoint_check(p.seed)?;
        for (a, r) in adj.skew.iter().enumerate() {
            report.extend([check(&format!("crossed.lambda.skew.l{}", a + 1), *r, tol.adjoint)]);
        }
        let (kl, kr) = self.kernel_check(KernelVariant::Derived, p.trials, p.seed)?;
        report.extend([check("crossed.kernel.left", kl, tol.lambda), check("crossed.kernel.right", kr, tol.lambda)]);
        let (pl, pr) = self.kernel_check(KernelVariant::Printed, p.trials, p.seed)?;
        report.notes.push(format!("crossed printed D kernel: left-equation residual {pl:.3e}, right-equation residual {pr:.3e}"));

        report.extend([
            check("crossed.frame.intertwiner", self.intertwiner_residual(), tol.algebra),
            check("crossed.frame.chain_rule.e0", self.chain_rule_residual(0.0, p.trials, p.seed)?, tol.symmetry),
            check("crossed.frame.chain_rule", self.chain_rule_residual(p.charge, p.trials, p.seed)?, tol.symmetry),
            check("crossed.frame.potential", self.potential_pullback_residual(p.trials, p.seed), tol.lambda),
        ]);

        self.profile.prefetch(&self.profile_points())?;
        let mass = C64::from(p.mass);
        let reduced = self.reduced_field();
        let rgrid = self.reduced_grid();
        report.extend([
            check("crossed.reduced.residual", eigen_residual(&hred, mass, &reduced, &rgrid)?, tol.residual),
            check("crossed.reduced.Y", eigen_residual(&y.scaled(-I), C64::from(p.kappa), &reduced, &rgrid)?, tol.eigen),
        ]);
        let printed = self.reduced_field_with(Self::profile_for(p, CrossedVariant::Printed)?);
        let pres = eigen_residual(&hred, mass, &printed, &rgrid)?;
        report.notes.push(format!("crossed reduced ODE with the printed 1/(2 eps^2) term: reduced residual {pres:.3e}"));

        let hg = self.moving_hamiltonian(p.charge);
        report.extend([check("crossed.ni.group_residual", eigen_residual(&hg, mass, &self.group_field(), &self.group_grid())?, tol.residual)]);
        let cart = self.cartesian_field();
        let cgrid = self.cartesian_grid();
        let (l1, l3) = self.l_values();
        report.extend([
            check("crossed.ni.residual", eigen_residual(&h, mass, &cart, &cgrid)?, tol.residual),
            check("crossed.ni.X1=-l1", eigen_residual(&xs[0], -l1, &cart, &cgrid)?, tol.eigen),
            check("crossed.ni.X3=-l3", eigen_residual(&xs[2], -l3, &cart, &cgrid)?, tol.eigen),
        ]);
        report.notes.push("crossed NI basis normalized by Phi(0) with P(u, 1) a pure phase".into());
        Ok(())
    }

    fn basis(&self, report: &mut Report) -> Result<Table, ScenarioError> {
        let p = &self.params;
        self.profile.prefetch(&self.profile_points())?;
        let mass = C64::from(p.mass);
        let reduced = self.reduced_field();
        let rgrid = self.reduced_grid();
        report.extend([
            check("crossed.reduced.residual", eigen_residual(&self.reduced_operator(), mass, &reduced, &rgrid)?, p.tol.residual),
            check(
                "crossed.ni.residual",
                eigen_residual(&self.hamiltonian_cartesian(p.charge), mass, &self.cartesian_field(), &self.cartesian_grid())?,
                p.tol.residual,
            ),
        ]);
        Ok(dump_field(&REDUCED, &reduced, &rgrid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::ZERO;

    fn scen() -> Crossed {
        Crossed::new(&ScenarioParams { grid: 4, trials: 4, ..Default::default() }).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(Crossed::new(&ScenarioParams { eps: 0.0, ..Default::default() }), Err(ScenarioError::Config(_))));
        assert!(matches!(Crossed::new(&ScenarioParams { v_range: (0.0, 1.0), ..Default::default() }), Err(ScenarioError::Config(_))));
        assert!(matches!(Crossed::new(&ScenarioParams { v_range: (-1.0, 1.0), ..Default::default() }), Err(ScenarioError::Config(_))));
        assert!(matches!(scen().reduced_value(0.1, -0.5), Err(ScenarioError::Config(_))));
        assert!(scen().reduced_value(0.1, 0.5).unwrap().iter().all(|c| c.norm().is_finite()));
    }

    #[test]
    fn table_and_free_symmetries() {
        let s = scen();
        let cs = s.cartesian_sampler();
        let samp: Sampler = &cs;
        let xs = s.symmetry_ops();
        assert!(check_structure_constants(&xs, &crossed_table(), 6, 3, samp).unwrap() < 1e-10);
        let h0 = s.hamiltonian_cartesian(0.0);
        for x in &xs {
            assert!(check_symmetry(&h0, x, 6, 3, samp).unwrap() < 1e-10, "{}", x.name);
        }
    }

    #[test]
    fn field_keeps_only_x1_and_x3() {
        let s = scen();
        let cs = s.cartesian_sampler();
        let samp: Sampler = &cs;
        let xs = s.symmetry_ops();
        let h = s.hamiltonian_cartesian(1.0);
        assert!(check_symmetry(&h, &xs[0], 6, 3, samp).unwrap() < 1e-10);
        assert!(check_symmetry(&h, &xs[2], 6, 3, samp).unwrap() < 1e-10);
        assert!(check_symmetry(&h, &xs[1], 6, 3, samp).unwrap() > 1e-3);
        assert!(check_symmetry(&h, &xs[3], 6, 3, samp).unwrap() > 1e-3);
    }

    #[test]
    fn reduced_operator_commutes_with_y() {
        let s = scen();
        let rs = s.reduced_sampler();
        let samp: Sampler = &rs;
        assert!(check_symmetry(&s.reduced_operator(), &s.y_operator(), 6, 5, samp).unwrap() < 1e-10);
    }

    #[test]
    fn moving_frame_matches_cartesian() {
        let s = scen();
        assert!(s.intertwiner_residual() < 1e-12);
        assert!(s.chain_rule_residual(0.0, 5, 9).unwrap() < 1e-10);
        assert!(s.chain_rule_residual(1.0, 5, 9).unwrap() < 1e-10);
        assert!(s.potential_pullback_residual(10, 2) < 1e-12);
    }

    #[test]
    fn spin_lift_inverts() {
        let s = scen();
        let v = [ONE, I, C64::new(0.3, -0.2), ZERO];
        let (g1, g2) = (C64::from(0.4), C64::from(-0.7));
        let back = spin_lift(&s.s1, &s.s2, g1, g2, &spin_lift(&s.s1, &s.s2, g1, g2, &v, false), true);
        assert!((0..4).all(|i| (back[i] - v[i]).norm() < 1e-14));
    }

    #[test]
    fn solution_satisfies_all_views() {
        let s = scen();
        let p = &s.params;
        let m = C64::from(p.mass);
        let r = s.reduced_field();
        let rg = s.reduced_grid();
        assert!(eigen_residual(&s.reduced_operator(), m, &r, &rg).unwrap() < 1e-8);
        assert!(eigen_residual(&s.y_operator().scaled(-I), C64::from(p.kappa), &r, &rg).unwrap() < 1e-8);
        assert!(eigen_residual(&s.moving_hamiltonian(p.charge), m, &s.group_field(), &s.group_grid()).unwrap() < 1e-8);
        let c = s.cartesian_field();
        let cg = s.cartesian_grid();
        assert!(eigen_residual(&s.hamiltonian_cartesian(p.charge), m, &c, &cg).unwrap() < 1e-8);
        let xs = s.symmetry_ops();
        let (l1, l3) = s.l_values();
        assert!(eigen_residual(&xs[0], -l1, &c, &cg).unwrap() < 1e-8);
        assert!(eigen_residual(&xs[2], -l3, &c, &cg).unwrap() < 1e-8);
    }

    #[test]
    fn printed_reduced_ode_fails() {
        let s = scen();
        let printed = s.reduced_field_with(Crossed::profile_for(&s.params, CrossedVariant::Printed).unwrap());
        let r = eigen_residual(&s.reduced_operator(), C64::from(s.params.mass), &printed, &s.reduced_grid()).unwrap();
        assert!(r > 1e-3);
    }

    #[test]
    fn derived_kernel_solves_both_systems() {
        let (l, r) = scen().kernel_check(KernelVariant::Derived, 5, 4).unwrap();
        assert!(l < 1e-10 && r < 1e-10);
    }
}
