//! Matrix-valued differential operators applied on jets, and the checks built on them:
//! bracket tables and commutation with a Hamiltonian.

use crate::gamma::{Mat4, C64, ZERO};
use crate::jet::{coords_at, mat_apply, random_test_spinor, Coords, Jet, JetError, MultiIndex, SpinorField, SpinorJet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("operator '{0}' produced a non-finite value")]
    NonFinite(String),
    #[error("expected {expected} operators, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("at least one trial is required")]
    NoTrials,
}

pub type CoeffFn = Arc<dyn Fn(&Coords) -> Jet + Send + Sync>;

#[derive(Clone)]
pub enum Coeff {
    Const(C64),
    Field(CoeffFn),
}

impl Coeff {
    pub fn field<F: Fn(&Coords) -> Jet + Send + Sync + 'static>(f: F) -> Self {
        Coeff::Field(Arc::new(f))
    }

    pub fn eval(&self, x: &Coords) -> Jet {
        match self {
            Coeff::Const(c) => Jet::constant(*c),
            Coeff::Field(f) => f(x),
        }
    }

    fn scaled(&self, s: C64) -> Coeff {
        match self {
            Coeff::Const(c) => Coeff::Const(c * s),
            Coeff::Field(f) => {
                let f = f.clone();
                Coeff::field(move |x| f(x) * s)
            }
        }
    }
}

impl fmt::Debug for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coeff::Const(c) => write!(f, "{c}"),
            Coeff::Field(_) => write!(f, "<field>"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Term {
    pub coeff: Coeff,
    pub deriv: MultiIndex,
    pub mat: Mat4,
}

/// Finite sum of coefficient x derivative x matrix terms.
#[derive(Clone, Debug)]
pub struct MatrixDiffOp {
    pub name: String,
    pub labels: Vec<String>,
    terms: Vec<Term>,
}

pub fn unit(var: usize) -> MultiIndex {
    let mut m = [0; 4];
    m[var] = 1;
    m
}

impl MatrixDiffOp {
    pub fn new(name: &str, labels: &[&str]) -> Self {
        MatrixDiffOp { name: name.to_string(), labels: labels.iter().map(|s| s.to_string()).collect(), terms: Vec::new() }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term(mut self, coeff: Coeff, deriv: MultiIndex, mat: Mat4) -> Self {
        self.terms.push(Term { coeff, deriv, mat });
        self.canonicalize();
        self
    }

    /// coeff * mat * d/dx_var
    pub fn d(self, var: usize, coeff: Coeff, mat: Mat4) -> Self {
        self.term(coeff, unit(var), mat)
    }

    /// coeff * mat (no derivative)
    pub fn mult(self, coeff: Coeff, mat: Mat4) -> Self {
        self.term(coeff, [0; 4], mat)
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff = t.coeff.scaled(s);
        }
        out.canonicalize();
        out
    }

    pub fn plus(&self, other: &MatrixDiffOp) -> Self {
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out.canonicalize();
        out
    }

    pub fn minus(&self, other: &MatrixDiffOp) -> Self {
        self.plus(&other.scaled(C64::from(-1.0)))
    }

    /// Merges constant-coefficient terms sharing (multi-index, matrix) and drops zeros.
    fn canonicalize(&mut self) {
        let mut out: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            if let Coeff::Const(c) = t.coeff {
                if let Some(prev) = out.iter_mut().find(|p| p.deriv == t.deriv && p.mat == t.mat && matches!(p.coeff, Coeff::Const(_))) {
                    if let Coeff::Const(pc) = &mut prev.coeff {
                        *pc += c;
                    }
                    continue;
                }
            }
            out.push(t);
        }
        out.retain(|t| !(t.mat.is_zero() || matches!(t.coeff, Coeff::Const(c) if c == ZERO)));
        self.terms = out;
    }

    /// Highest derivative order among the terms.
    pub fn max_order(&self) -> u8 {
        self.terms.iter().map(|t| t.deriv.iter().sum::<u8>()).max().unwrap_or(0)
    }

    /// Applies the operator to spinor jets; the result is one order lower per derivative.
    pub fn apply_jets(&self, x: &Coords, psi: &SpinorJet) -> Result<SpinorJet, OpError> {
        let have = psi.iter().map(|j| j.order()).min().unwrap_or(0);
        let need = self.max_order();
        if have < need {
            return Err(JetError::InsufficientOrder { have, need }.into());
        }
        let out_order = have - need;
        let mut out: SpinorJet = [Jet::constant(ZERO).with_order(out_order); 4];
        for t in &self.terms {
            let d: SpinorJet = if t.deriv == [0; 4] {
                *psi
            } else {
                let mut d = *psi;
                for c in d.iter_mut() {
                    *c = c.partial_multi(&t.deriv)?;
                }
                d
            };
            let md = mat_apply(&t.mat, &d);
            let cf = t.coeff.eval(x);
            for i in 0..4 {
                out[i] += cf * md[i];
            }
        }
        Ok(out)
    }

    /// Value of (op psi) at a point.
    pub fn apply(&self, field: &dyn SpinorField, point: &[C64]) -> Result<[C64; 4], OpError> {
        let order = self.max_order().max(1);
        let x = coords_at(point, order);
        let v = self.apply_jets(&x, &field.eval(&x))?;
        finite(&self.name, v.map(|j| j.value()))
    }
}

fn finite(name: &str, v: [C64; 4]) -> Result<[C64; 4], OpError> {
    if v.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(v)
    } else {
        Err(OpError::NonFinite(name.to_string()))
    }
}

pub fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// a(b psi) - b(a psi) at a point, by double application on jets.
pub fn commutator_apply(a: &MatrixDiffOp, b: &MatrixDiffOp, field: &dyn SpinorField, point: &[C64]) -> Result<[C64; 4], OpError> {
    let order = (a.max_order() + b.max_order()).max(2);
    let x = coords_at(point, order);
    let psi = field.eval(&x);
    let ab = a.apply_jets(&x, &b.apply_jets(&x, &psi)?)?;
    let ba = b.apply_jets(&x, &a.apply_jets(&x, &psi)?)?;
    finite("commutator", std::array::from_fn(|i| ab[i].value() - ba[i].value()))
}

/// Real structure constants c[a][b][k] with [X_a, X_b] = c_ab^k X_k (0-based).
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    dim: usize,
    c: Vec<f64>,
}

impl StructureConstants {
    pub fn new(dim: usize) -> Self {
        StructureConstants { dim, c: vec![0.0; dim * dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn idx(&self, a: usize, b: usize, k: usize) -> usize {
        (a * self.dim + b) * self.dim + k
    }

    pub fn get(&self, a: usize, b: usize, k: usize) -> f64 {
        self.c[self.idx(a, b, k)]
    }

    /// Sets c_ab^k = v and c_ba^k = -v.
    pub fn set(mut self, a: usize, b: usize, k: usize, v: f64) -> Self {
        let (i, j) = (self.idx(a, b, k), self.idx(b, a, k));
        self.c[i] = v;
        self.c[j] = -v;
        self
    }

    pub fn negated(&self) -> Self {
        StructureConstants { dim: self.dim, c: self.c.iter().map(|v| -v).collect() }
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for a in 0..self.dim {
            for b in 0..self.dim {
                for k in 0..self.dim {
                    r = r.max((self.get(a, b, k) + self.get(b, a, k)).abs());
                }
            }
        }
        r
    }

    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let mut r: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for k in 0..n {
                        let s: f64 = (0..n)
                            .map(|m| self.get(a, b, m) * self.get(m, c, k) + self.get(b, c, m) * self.get(m, a, k) + self.get(c, a, m) * self.get(m, b, k))
                            .sum();
                        r = r.max(s.abs());
                    }
                }
            }
        }
        r
    }
}

/// Draws a sample point for a trial.
pub type Sampler<'a> = &'a dyn Fn(&mut ChaCha8Rng) -> Vec<C64>;

fn trial_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_a1_9eb2a)
}

/// max over trials of |[X_a,X_b] psi - c_ab^k X_k psi|.
pub fn check_structure_constants(ops: &[MatrixDiffOp], expected: &StructureConstants, trials: usize, seed: u64, sampler: Sampler) -> Result<f64, OpError> {
    if trials == 0 {
        return Err(OpError::NoTrials);
    }
    if ops.len() != expected.dim() {
        return Err(OpError::Dimension { expected: expected.dim(), got: ops.len() });
    }
    let order = ops.iter().map(|o| o.max_order()).max().unwrap_or(0) * 2;
    let order = order.max(2);
    let mut rng = trial_rng(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let field = random_test_spinor(seed.wrapping_add(t as u64));
        let p = sampler(&mut rng);
        let x = coords_at(&p, order);
        let psi = field.eval(&x);
        let once: Vec<SpinorJet> = ops.iter().map(|o| o.apply_jets(&x, &psi)).collect::<Result<_, _>>()?;
        for a in 0..ops.len() {
            for b in (a + 1)..ops.len() {
                let ab = ops[a].apply_jets(&x, &once[b])?;
                let ba = ops[b].apply_jets(&x, &once[a])?;
                for i in 0..4 {
                    let mut v = ab[i].value() - ba[i].value();
                    for (k, ok) in once.iter().enumerate() {
                        let c = expected.get(a, b, k);
                        if c != 0.0 {
                            v -= ok[i].value() * c;
                        }
                    }
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(OpError::NonFinite(format!("[{},{}]", ops[a].name, ops[b].name)));
                    }
                    worst = worst.max(v.norm());
                }
            }
        }
    }
    Ok(worst)
}

/// max over trials of |[h,s] psi|.
pub fn check_symmetry(h: &MatrixDiffOp, s: &MatrixDiffOp, trials: usize, seed: u64, sampler: Sampler) -> Result<f64, OpError> {
    if trials == 0 {
        return Err(OpError::NoTrials);
    }
    let mut rng = trial_rng(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let field = random_test_spinor(seed.wrapping_add(t as u64));
        let p = sampler(&mut rng);
        worst = worst.max(max_norm(&commutator_apply(h, s, &field, &p)?));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::{standard_gammas, I, ONE};
    use crate::jet::{RandomSpinor, Scalar};
    use proptest::prelude::*;
    use rand::Rng;

    fn c(x: f64) -> C64 {
        C64::from(x)
    }

    fn generic_op() -> MatrixDiffOp {
        let g = standard_gammas();
        MatrixDiffOp::new("T", &["a", "b", "c", "d"])
            .d(0, Coeff::field(|x| x[1].sin()), g.g(2))
            .d(2, Coeff::Const(C64::new(0.0, 0.5)), g.g(1))
            .mult(Coeff::field(|x| x[0] * x[3] + 1.0), g.g2(1, 3))
    }

    #[test]
    fn identity_term_returns_field() {
        let op = MatrixDiffOp::new("1", &["x"]).mult(Coeff::Const(ONE), Mat4::identity());
        let f = random_test_spinor(4);
        let p = [c(0.2), c(0.1), c(-0.3), c(0.4)];
        let v = op.apply(&f, &p).unwrap();
        assert_eq!(v, f.values(&p));
    }

    #[test]
    fn d_phi_on_plane_wave() {
        let m = 1.5;
        let op = MatrixDiffOp::new("dphi", &["phi"]).d(0, Coeff::Const(ONE), Mat4::identity());
        let spin = [c(1.0), C64::new(0.0, 2.0), c(0.0), c(-1.0)];
        let f = move |x: &Coords| -> SpinorJet { std::array::from_fn(|k| (x[0] * (I * m)).exp() * spin[k]) };
        let p = [c(0.4)];
        let v = op.apply(&f, &p).unwrap();
        for k in 0..4 {
            let want = I * m * (I * m * 0.4).exp() * spin[k];
            assert!((v[k] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn self_commutator_vanishes() {
        let op = generic_op();
        let f = random_test_spinor(2);
        let v = commutator_apply(&op, &op, &f, &[c(0.1), c(0.2), c(0.3), c(0.4)]).unwrap();
        assert!(max_norm(&v) == 0.0);
    }

    #[test]
    fn canonicalize_merges_constants() {
        let g = standard_gammas();
        let op = MatrixDiffOp::new("x", &["x"]).d(0, Coeff::Const(ONE), g.g(1)).d(0, Coeff::Const(ONE), g.g(1)).d(0, Coeff::Const(c(-2.0)), g.g(1));
        assert!(op.terms().is_empty());
    }

    #[test]
    fn insufficient_order_rejected() {
        let op = generic_op();
        let f = random_test_spinor(0);
        let x = coords_at(&[c(0.1)], 0);
        let psi = f.eval(&x);
        assert!(matches!(op.apply_jets(&x, &psi), Err(OpError::Jet(JetError::InsufficientOrder { .. }))));
    }

    #[test]
    fn heisenberg_table_and_negative_control() {
        // d/dx, multiplication by i x, and i: [d, ix] = i
        let id = Mat4::identity();
        let ops = vec![
            MatrixDiffOp::new("p", &["x"]).d(0, Coeff::Const(ONE), id),
            MatrixDiffOp::new("q", &["x"]).mult(Coeff::field(|x| x[0] * I), id),
            MatrixDiffOp::new("z", &["x"]).mult(Coeff::Const(I), id),
        ];
        let sc = StructureConstants::new(3).set(0, 1, 2, 1.0);
        let sampler = |r: &mut ChaCha8Rng| vec![c(r.gen_range(-1.0..1.0))];
        let res = check_structure_constants(&ops, &sc, 5, 7, &sampler).unwrap();
        assert!(res < 1e-13, "{res}");
        let bad = check_structure_constants(&ops, &sc.negated(), 5, 7, &sampler).unwrap();
        assert!(bad > 0.1);
        assert_eq!(sc.antisymmetry_residual(), 0.0);
        assert_eq!(sc.jacobi_residual(), 0.0);
    }

    #[test]
    fn so3_constants_satisfy_jacobi() {
        let sc = StructureConstants::new(3).set(0, 1, 2, 1.0).set(2, 0, 1, 1.0).set(1, 2, 0, 1.0);
        assert!(sc.jacobi_residual() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(30))]
        #[test]
        fn linearity(ar in -2.0f64..2.0, ai in -2.0f64..2.0, br in -2.0f64..2.0, x0 in -1.0f64..1.0, x1 in -1.0f64..1.0) {
            let (al, be) = (C64::new(ar, ai), C64::new(br, 0.3));
            let f1 = random_test_spinor(11);
            let f2 = random_test_spinor(12);
            let comb = move |x: &Coords| -> SpinorJet {
                let a = f1.eval(x);
                let b = f2.eval(x);
                std::array::from_fn(|k| a[k] * al + b[k] * be)
            };
            let op = generic_op();
            let p = [c(x0), c(x1), c(0.2), c(-0.1)];
            let lhs = op.apply(&comb, &p).unwrap();
            let (v1, v2) = (op.apply(&random_test_spinor(11), &p).unwrap(), op.apply(&random_test_spinor(12), &p).unwrap());
            for k in 0..4 {
                prop_assert!((lhs[k] - (v1[k] * al + v2[k] * be)).norm() <= 1e-12);
            }
        }

        #[test]
        fn commutator_antisymmetric(seed in 0u64..1000, x0 in -1.0f64..1.0) {
            let g = standard_gammas();
            let a = generic_op();
            let b = MatrixDiffOp::new("U", &[]).d(1, Coeff::field(|x: &Coords| Scalar::exp(&x[0])), g.g(4)).mult(Coeff::Const(I), g.g(3));
            let f: RandomSpinor = random_test_spinor(seed);
            let p = [c(x0), c(0.3), c(-0.2), c(0.5)];
            let ab = commutator_apply(&a, &b, &f, &p).unwrap();
            let ba = commutator_apply(&b, &a, &f, &p).unwrap();
            for k in 0..4 {
                prop_assert!((ab[k] + ba[k]).norm() <= 1e-12);
            }
        }
    }
}
