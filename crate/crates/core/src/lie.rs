//! Lambda-representations of the three symmetry algebras, their measures and
//! (skew-)Hermiticity checks, and the group structure of the crossed-field algebra.

use crate::gamma::{Mat4, C64, I, ZERO};
use crate::jet::{coords_at, Coords, Jet, Scalar, SpinorField, SpinorJet};
use crate::operator::{check_structure_constants, unit, Coeff, MatrixDiffOp, OpError, Sampler, StructureConstants};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("invalid representation parameter: {0}")]
    BadParameter(String),
    #[error("quadrature did not converge: last change {0:e}")]
    Quadrature(f64),
    #[error(transparent)]
    Op(#[from] OpError),
}

/// [X1,X2]=X3, [X2,X3]=X1, [X3,X1]=X2.
pub fn so3_table() -> StructureConstants {
    StructureConstants::new(3).set(0, 1, 2, 1.0).set(1, 2, 0, 1.0).set(2, 0, 1, 1.0)
}

/// Basis (X0, X1, X2, X3): [X1,X2]=H X0, [X1,X3]=-X2, [X2,X3]=X1.
pub fn e2c_table(h: f64) -> StructureConstants {
    StructureConstants::new(4).set(1, 2, 0, h).set(1, 3, 2, -1.0).set(2, 3, 1, 1.0)
}

/// [X1,X2]=X1, [X1,X4]=-X3, [X2,X3]=-X3.
pub fn crossed_table() -> StructureConstants {
    StructureConstants::new(4).set(0, 1, 0, 1.0).set(0, 3, 2, -1.0).set(1, 2, 2, -1.0)
}

/// Scalar operator sum c_k d^{m_k}, embedded with the identity matrix so it acts
/// componentwise on four test functions at once.
pub fn scalar_op(name: &str, labels: &[&str], terms: Vec<(Coeff, [u8; 4])>) -> MatrixDiffOp {
    terms.into_iter().fold(MatrixDiffOp::new(name, labels), |op, (c, m)| op.term(c, m, Mat4::identity()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RepKind {
    So3 { j2: u32 },
    E2c { e: f64, h: f64 },
    Crossed,
}

/// Operators l_a acting on functions on Q, with the bracket table of the matching X_a.
#[derive(Clone, Debug)]
pub struct LambdaRep {
    pub kind: RepKind,
    pub ops: Vec<MatrixDiffOp>,
    pub table: StructureConstants,
}

/// j = j2/2, q on the cylinder (holomorphic, variable 0).
pub fn so3_lambda_rep(j2: u32) -> LambdaRep {
    so3_lambda_rep_on(j2, 0)
}

/// Same operators with q carried by coordinate slot `var`.
pub fn so3_lambda_rep_on(j2: u32, var: usize) -> LambdaRep {
    let j = j2 as f64 / 2.0;
    let lab = ["q"];
    let l1 = scalar_op(
        "l1",
        &lab,
        vec![
            (Coeff::field(move |x: &Coords| x[var].sin() * (-I)), unit(var)),
            (Coeff::field(move |x: &Coords| x[var].cos() * (I * j)), [0; 4]),
        ],
    );
    let l2 = scalar_op(
        "l2",
        &lab,
        vec![
            (Coeff::field(move |x: &Coords| x[var].cos() * (-I)), unit(var)),
            (Coeff::field(move |x: &Coords| x[var].sin() * (-I * j)), [0; 4]),
        ],
    );
    let l3 = scalar_op("l3", &lab, vec![(Coeff::Const(C64::from(1.0)), unit(var))]);
    LambdaRep { kind: RepKind::So3 { j2 }, ops: vec![l1, l2, l3], table: so3_table() }
}

pub fn e2c_lambda_rep(e: f64, h: f64) -> Result<LambdaRep, LieError> {
    e2c_lambda_rep_on(e, h, 0)
}

pub fn e2c_lambda_rep_on(e: f64, h: f64, var: usize) -> Result<LambdaRep, LieError> {
    if !(e * h > 0.0) {
        return Err(LieError::BadParameter(format!("eH must be positive, got {}", e * h)));
    }
    let eh = e * h;
    let lab = ["q"];
    let l0 = scalar_op("l0", &lab, vec![(Coeff::Const(-I * e), [0; 4])]);
    let l1 = scalar_op(
        "l1",
        &lab,
        vec![(Coeff::Const(-I * 0.5), unit(var)), (Coeff::field(move |x: &Coords| x[var] * (I * eh)), [0; 4])],
    );
    let l2 = scalar_op(
        "l2",
        &lab,
        vec![(Coeff::Const(C64::from(0.5)), unit(var)), (Coeff::field(move |x: &Coords| x[var] * eh), [0; 4])],
    );
    let l3 = scalar_op("l3", &lab, vec![(Coeff::field(move |x: &Coords| x[var] * (-I)), unit(var))]);
    Ok(LambdaRep { kind: RepKind::E2c { e, h }, ops: vec![l0, l1, l2, l3], table: e2c_table(h) })
}

/// Q = R^2 with (q1, q2) as variables 0 and 1.
pub fn crossed_lambda_rep() -> LambdaRep {
    let lab = ["q1", "q2"];
    let l1 = scalar_op("l1", &lab, vec![(Coeff::field(|x: &Coords| x[0] * (-x[1]).exp() * I), [0; 4])]);
    let l2 = scalar_op("l2", &lab, vec![(Coeff::Const(C64::from(1.0)), [0, 1, 0, 0])]);
    let l3 = scalar_op("l3", &lab, vec![(Coeff::field(|x: &Coords| (-x[1]).exp() * I), [0; 4])]);
    let l4 = scalar_op("l4", &lab, vec![(Coeff::Const(C64::from(1.0)), [1, 0, 0, 0])]);
    LambdaRep { kind: RepKind::Crossed, ops: vec![l1, l2, l3, l4], table: crossed_table() }
}

/// Residuals of the l_a brackets against the X_a table and against its negation.
#[derive(Clone, Copy, Debug)]
pub struct TableFit {
    pub same_sign: f64,
    pub opposite_sign: f64,
}

impl TableFit {
    pub fn best(&self) -> f64 {
        self.same_sign.min(self.opposite_sign)
    }
}

pub fn check_lambda_table(rep: &LambdaRep, trials: usize, seed: u64) -> Result<TableFit, LieError> {
    let sampler: Box<dyn Fn(&mut ChaCha8Rng) -> Vec<C64>> = match rep.kind {
        RepKind::So3 { .. } | RepKind::E2c { .. } => Box::new(|r: &mut ChaCha8Rng| vec![C64::new(r.gen_range(0.0..2.0 * PI), r.gen_range(-1.0..1.0))]),
        RepKind::Crossed => Box::new(|r: &mut ChaCha8Rng| vec![C64::from(r.gen_range(-1.5..1.5)), C64::from(r.gen_range(-1.5..1.5))]),
    };
    let s: Sampler = &*sampler;
    Ok(TableFit {
        same_sign: check_structure_constants(&rep.ops, &rep.table, trials, seed, s)?,
        opposite_sign: check_structure_constants(&rep.ops, &rep.table.negated(), trials, seed, s)?,
    })
}

/// so(3) measure density at Im q = y: (2j+1)!/(2^j (j!)^2) (1 + cosh 2y)^{-(j+1)},
/// since cos(q - conj q) = cosh(2 Im q).
pub fn so3_density(j2: u32, y: f64) -> f64 {
    let j = j2 as f64 / 2.0;
    let norm = gamma(2.0 * j + 2.0) / (2f64.powf(j) * gamma(j + 1.0).powi(2));
    norm * (1.0 + (2.0 * y).cosh()).powf(-(j + 1.0))
}

/// Sign of the exponent in the central-extension measure exp(s 2 eH |q|^2).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureSign {
    Plus,
    Minus,
}

impl MeasureSign {
    pub fn value(self) -> f64 {
        match self {
            MeasureSign::Plus => 1.0,
            MeasureSign::Minus => -1.0,
        }
    }
}

pub fn e2c_density(eh: f64, sign: MeasureSign, q: C64) -> f64 {
    (sign.value() * 2.0 * eh * q.norm_sqr()).exp()
}

/// Four scalar test functions packed as a spinor field.
struct TestFunctions<F: Fn(usize, &Coords) -> Jet + Send + Sync>(F);

impl<F: Fn(usize, &Coords) -> Jet + Send + Sync> SpinorField for TestFunctions<F> {
    fn eval(&self, x: &Coords) -> SpinorJet {
        std::array::from_fn(|k| (self.0)(k, x))
    }
}

fn random_coeffs(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Gram-type matrices over a weighted point set: G_ik = <f_i, f_k>, A^a_ik = <f_i, l_a f_k>.
fn weighted_matrices(rep: &LambdaRep, field: &dyn SpinorField, nodes: &[(Vec<C64>, f64)]) -> Result<(Vec<[[C64; 4]; 4]>, [[C64; 4]; 4]), LieError> {
    let mut a = vec![[[ZERO; 4]; 4]; rep.ops.len()];
    let mut g = [[ZERO; 4]; 4];
    for (p, w) in nodes {
        if *w == 0.0 {
            continue;
        }
        let x = coords_at(p, 1);
        let psi = field.eval(&x);
        let vals: [C64; 4] = std::array::from_fn(|k| psi[k].value());
        for i in 0..4 {
            for k in 0..4 {
                g[i][k] += vals[i].conj() * vals[k] * *w;
            }
        }
        for (op, acc) in rep.ops.iter().zip(a.iter_mut()) {
            let lv = op.apply_jets(&x, &psi)?;
            for i in 0..4 {
                for k in 0..4 {
                    acc[i][k] += vals[i].conj() * lv[k].value() * *w;
                }
            }
        }
    }
    Ok((a, g))
}

/// Per-operator residual of A_ik - s conj(A_ki), relative to the Gram scale;
/// s = +1 checks skew-Hermiticity of l_a (Hermiticity of -i l_a), s = -1 Hermiticity of l_a.
fn adjoint_residuals(a: &[[[C64; 4]; 4]], g: &[[C64; 4]; 4], s: f64) -> Vec<f64> {
    let scale = (0..4).map(|i| g[i][i].re).fold(0.0, f64::max);
    a.iter()
        .map(|m| {
            let mut r: f64 = 0.0;
            for i in 0..4 {
                for k in 0..4 {
                    r = r.max((m[i][k] + m[k][i].conj() * s).norm());
                }
            }
            r / scale
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct AdjointReport {
    /// residual of l_a + l_a^dagger per operator (zero means skew-Hermitian)
    pub skew: Vec<f64>,
    /// residual of l_a - l_a^dagger per operator (zero means Hermitian)
    pub hermitian: Vec<f64>,
    pub nodes: usize,
    pub converged_change: f64,
}

fn adjoint_report(a: &[[[C64; 4]; 4]], g: &[[C64; 4]; 4], nodes: usize, change: f64) -> AdjointReport {
    AdjointReport { skew: adjoint_residuals(a, g, 1.0), hermitian: adjoint_residuals(a, g, -1.0), nodes, converged_change: change }
}

/// Hermiticity of -i l_a for so(3) on trigonometric test functions sum_M a_M e^{-iMq}, |M| <= j,
/// with trapezoid quadrature in Re q and a doubling trapezoid grid on |Im q| <= 8.
pub fn so3_adjoint_check(j2: u32, seed: u64) -> Result<AdjointReport, LieError> {
    let rep = so3_lambda_rep(j2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_m = j2 as usize + 1;
    let coeffs: Vec<Vec<C64>> = (0..4).map(|_| random_coeffs(&mut rng, n_m)).collect();
    let field = TestFunctions(move |k: usize, x: &Coords| {
        let mut acc = Jet::constant(ZERO).with_order(x[0].order());
        for (i, c) in coeffs[k].iter().enumerate() {
            let m = i as f64 - j2 as f64 / 2.0;
            acc += (x[0] * (-I * m)).exp() * *c;
        }
        acc
    });
    let nx = 4 * (j2 as usize + 4);
    let ymax = 8.0;
    let mut ny = 200;
    let mut prev: Option<Vec<f64>> = None;
    for _ in 0..6 {
        let hy = 2.0 * ymax / ny as f64;
        let mut nodes = Vec::with_capacity(nx * (ny + 1));
        for a in 0..nx {
            let x = 2.0 * PI * a as f64 / nx as f64;
            for b in 0..=ny {
                let y = -ymax + b as f64 * hy;
                let w = if b == 0 || b == ny { 0.5 } else { 1.0 } * hy * 2.0 * PI / nx as f64 * so3_density(j2, y);
                nodes.push((vec![C64::new(x, y)], w));
            }
        }
        let (a, g) = weighted_matrices(&rep, &field, &nodes)?;
        let rep_now = adjoint_report(&a, &g, nodes.len(), 0.0);
        let cur = rep_now.skew.clone();
        if let Some(p) = &prev {
            let change = p.iter().zip(&cur).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change < 1e-8 {
                return Ok(AdjointReport { converged_change: change, ..rep_now });
            }
        }
        prev = Some(cur);
        ny *= 2;
    }
    Err(LieError::Quadrature(f64::NAN))
}

/// Adjoint check for the central-extension representation with the measure
/// exp(s 2 eH |q|^2) on holomorphic polynomial test functions; the box is sized
/// so that the minus-sign weight is below 1e-25 at its edge. For the plus sign the
/// integrals grow with the box and the report shows it.
pub fn e2c_adjoint_check(e: f64, h: f64, sign: MeasureSign, seed: u64) -> Result<AdjointReport, LieError> {
    let rep = e2c_lambda_rep(e, h)?;
    let eh = e * h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<Vec<C64>> = (0..4).map(|_| random_coeffs(&mut rng, 4)).collect();
    let field = TestFunctions(move |k: usize, x: &Coords| {
        let mut acc = Jet::constant(ZERO).with_order(x[0].order());
        for c in coeffs[k].iter().rev() {
            acc = acc * x[0] + *c;
        }
        acc
    });
    let half = (60.0 / (2.0 * eh)).sqrt();
    let n = 160;
    let h_step = 2.0 * half / n as f64;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for a in 0..=n {
        for b in 0..=n {
            let q = C64::new(-half + a as f64 * h_step, -half + b as f64 * h_step);
            nodes.push((vec![q], h_step * h_step * e2c_density(eh, sign, q)));
        }
    }
    let (a, g) = weighted_matrices(&rep, &field, &nodes)?;
    Ok(adjoint_report(&a, &g, nodes.len(), 0.0))
}

/// Skew-Hermiticity of l_a for the crossed representation with dq1 dq2 on shifted
/// Gaussians with random polynomial prefactors and plane-wave phases.
pub fn crossed_adjoint_check(seed: u64) -> Result<AdjointReport, LieError> {
    let rep = crossed_lambda_rep();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<(Vec<C64>, [f64; 4])> = (0..4)
        .map(|_| (random_coeffs(&mut rng, 3), [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
        .collect();
    let field = TestFunctions(move |k: usize, x: &Coords| {
        let (c, p) = &params[k];
        let d1 = x[0] + (-p[0]);
        let d2 = x[1] + (-p[1]);
        let poly = d1 * c[1] + d2 * c[2] + c[0];
        let expo = (d1 * d1 + d2 * d2) * (-0.5) + x[0] * (I * p[2]) + x[1] * (I * p[3]);
        poly * expo.exp()
    });
    let half = 11.0;
    let n = 220;
    let h_step = 2.0 * half / n as f64;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for a in 0..=n {
        for b in 0..=n {
            nodes.push((vec![C64::from(-half + a as f64 * h_step), C64::from(-half + b as f64 * h_step)], h_step * h_step));
        }
    }
    let (a, g) = weighted_matrices(&rep, &field, &nodes)?;
    Ok(adjoint_report(&a, &g, nodes.len(), 0.0))
}

/// Coordinates (g1, g2, g3, g4) of the crossed-field group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement4(pub [f64; 4]);

impl GroupElement4 {
    pub fn identity() -> Self {
        GroupElement4([0.0; 4])
    }

    pub fn multiply(&self, other: &GroupElement4) -> GroupElement4 {
        let g = self.0;
        let h = other.0;
        GroupElement4([g[0] + (-g[1]).exp() * h[0], g[1] + h[1], h[2] + h[1].exp() * (g[2] + g[3] * h[0]), g[3] + h[3]])
    }

    pub fn inverse(&self) -> GroupElement4 {
        let g = self.0;
        let h0 = -g[0] * g[1].exp();
        let h1 = -g[1];
        GroupElement4([h0, h1, -(-g[1]).exp() * (g[2] + g[3] * h0), -g[3]])
    }

    pub fn distance(&self, other: &GroupElement4) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Cartesian (t, x, y, z) of group coordinates.
pub fn chart_to_cartesian<T: Scalar>(g: &[T; 4], eps: f64) -> [T; 4] {
    let e2 = g[1].exp();
    let a = g[0] * g[0] * e2;
    let b = (-g[1]).exp();
    [g[2] - (a + b) * 0.5, g[3] - g[0], g[3] * eps, g[2] - (a - b) * 0.5]
}

/// Group coordinates of a Cartesian point; requires z > t.
pub fn cartesian_to_chart<T: Scalar>(p: &[T; 4], eps: f64) -> [T; 4] {
    let g4 = p[2] * (1.0 / eps);
    let g1 = g4 - p[1];
    let g2 = -(p[3] - p[0]).ln();
    let g3 = (p[0] + p[3] + g1 * g1 * g2.exp()) * 0.5;
    [g1, g2, g3, g4]
}

/// Left-invariant fields xi_a on group coordinates (variables 0..3).
pub fn left_fields() -> Vec<MatrixDiffOp> {
    let lab = ["g1", "g2", "g3", "g4"];
    vec![
        scalar_op(
            "xi1",
            &lab,
            vec![(Coeff::field(|x: &Coords| (-x[1]).exp()), [1, 0, 0, 0]), (Coeff::field(|x: &Coords| x[3]), [0, 0, 1, 0])],
        ),
        scalar_op("xi2", &lab, vec![(Coeff::Const(C64::from(1.0)), [0, 1, 0, 0]), (Coeff::field(|x: &Coords| x[2]), [0, 0, 1, 0])]),
        scalar_op("xi3", &lab, vec![(Coeff::Const(C64::from(1.0)), [0, 0, 1, 0])]),
        scalar_op("xi4", &lab, vec![(Coeff::Const(C64::from(1.0)), [0, 0, 0, 1])]),
    ]
}

/// Right-invariant fields eta_a on group coordinates.
pub fn right_fields() -> Vec<MatrixDiffOp> {
    let lab = ["g1", "g2", "g3", "g4"];
    let m1 = C64::from(-1.0);
    vec![
        scalar_op("eta1", &lab, vec![(Coeff::Const(m1), [1, 0, 0, 0])]),
        scalar_op("eta2", &lab, vec![(Coeff::field(|x: &Coords| x[0]), [1, 0, 0, 0]), (Coeff::Const(m1), [0, 1, 0, 0])]),
        scalar_op("eta3", &lab, vec![(Coeff::field(|x: &Coords| -x[1].exp()), [0, 0, 1, 0])]),
        scalar_op(
            "eta4",
            &lab,
            vec![(Coeff::field(|x: &Coords| -(x[0] * x[1].exp())), [0, 0, 1, 0]), (Coeff::Const(m1), [0, 0, 0, 1])],
        ),
    ]
}

/// Which crossed-field kernel to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelVariant {
    /// solution of the defining system: exp(i[g3 e^{-g2-q'2} + g1 q'1 e^{-q'2}])
    Derived,
    /// as printed: exp(-i[g3 e^{-g1-q'2} + g1 q'1 e^{-q'2}] - 2 q'2)
    Printed,
}

/// Smooth factor of the kernel in independent variables (g, q'); the delta factors
/// are handled by substitution.
pub fn kernel_factor<T: Scalar>(variant: KernelVariant, g: &[T; 4], qp: &[T; 2]) -> T {
    let e_q2 = (-qp[1]).exp();
    match variant {
        KernelVariant::Derived => ((g[2] * (-g[1]).exp() * e_q2 + g[0] * qp[0] * e_q2) * I).exp(),
        KernelVariant::Printed => ((g[2] * (-g[0]).exp() * e_q2 + g[0] * qp[0] * e_q2) * (-I) + qp[1] * (-2.0)).exp(),
    }
}

/// Kernel at (q, g) with q'1 = q1 - g4, q'2 = q2 - g2 substituted.
pub fn crossed_d_kernel<T: Scalar>(variant: KernelVariant, q: &[T; 2], g: &[T; 4]) -> T {
    kernel_factor(variant, g, &[q[0] - g[3], q[1] - g[1]])
}

/// Residuals of (xi_a + conj l_a(q)) K = 0 in (q, g) form and (eta_a + l_a(q')) K = 0 in
/// (g, q') form, relative to |K|, for a = 1..4.
pub fn kernel_residuals(variant: KernelVariant, q: [f64; 2], g: [f64; 4]) -> Result<([f64; 4], [f64; 4]), LieError> {
    let cq = q.map(C64::from);
    let cg = g.map(C64::from);
    // derivatives in g at fixed q
    let xg = coords_at(&cg, 1);
    let kg = crossed_d_kernel(variant, &[Jet::constant(cq[0]), Jet::constant(cq[1])], &xg);
    // derivatives in q at fixed g
    let xq = coords_at(&cq, 1);
    let kq = crossed_d_kernel(variant, &[xq[0], xq[1]], &cg.map(Jet::constant));
    let k0 = kg.value();
    let dg = |i: usize| kg.derivative(&crate::operator::unit(i));
    let dq = |i: usize| kq.derivative(&crate::operator::unit(i));
    let e2 = (-q[1]).exp();
    let left = [
        (-g[1]).exp() * dg(0) + g[3] * dg(2) - I * q[0] * e2 * k0,
        dg(1) + g[2] * dg(2) + dq(1),
        dg(2) - I * e2 * k0,
        dg(3) + dq(0),
    ];
    // right equations: independent q'
    let qp = [q[0] - g[3], q[1] - g[1]];
    let cqp = qp.map(C64::from);
    let xg2 = coords_at(&cg, 1);
    let kg2 = kernel_factor(variant, &xg2, &[Jet::constant(cqp[0]), Jet::constant(cqp[1])]);
    let xqp = coords_at(&cqp, 1);
    let kqp = kernel_factor(variant, &cg.map(Jet::constant), &[xqp[0], xqp[1]]);
    let k1 = kg2.value();
    let dg2 = |i: usize| kg2.derivative(&crate::operator::unit(i));
    let dqp = |i: usize| kqp.derivative(&crate::operator::unit(i));
    let ep = (-qp[1]).exp();
    let right = [
        -dg2(0) + I * qp[0] * ep * k1,
        g[0] * dg2(0) - dg2(1) + dqp(1),
        -g[1].exp() * dg2(2) + I * ep * k1,
        -(g[0] * g[1].exp() * dg2(2) + dg2(3)) + dqp(0),
    ];
    Ok((left.map(|v| v.norm() / k0.norm()), right.map(|v| v.norm() / k1.norm())))
}
