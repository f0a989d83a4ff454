//! 4x4 complex matrices and the Dirac gamma conventions.
//!
//! Indices run 1..4 with index 1 time-like and metric diag(1,-1,-1,-1).

use num_complex::Complex64;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use thiserror::Error;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Minkowski metric, indexed 0..4 internally (0 is the time-like index 1).
pub const ETA: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GammaError {
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("index {0} out of range 1..=4")]
    BadIndex(usize),
    #[error("matrix is singular")]
    Singular,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat4(pub [[C64; 4]; 4]);

impl Default for Mat4 {
    fn default() -> Self {
        Mat4::zero()
    }
}

impl Mat4 {
    pub fn zero() -> Self {
        Mat4([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        Mat4::diag([ONE; 4])
    }

    pub fn diag(d: [C64; 4]) -> Self {
        let mut m = Mat4::zero();
        for (i, v) in d.into_iter().enumerate() {
            m.0[i][i] = v;
        }
        m
    }

    /// Block matrix [[a, b], [c, d]] from 2x2 blocks.
    pub fn from_blocks(a: Mat2, b: Mat2, c: Mat2, d: Mat2) -> Self {
        let mut m = Mat4::zero();
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = a.0[i][j];
                m.0[i][j + 2] = b.0[i][j];
                m.0[i + 2][j] = c.0[i][j];
                m.0[i + 2][j + 2] = d.0[i][j];
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[i][j]
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|v| *v *= s);
        m
    }

    pub fn dagger(&self) -> Self {
        let mut m = Mat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|v| *v == ZERO)
    }

    pub fn mul_vec(&self, v: &[C64; 4]) -> [C64; 4] {
        let mut out = [ZERO; 4];
        for (i, o) in out.iter_mut().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                *o += self.0[i][j] * vj;
            }
        }
        out
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Mat4, GammaError> {
        let mut a = self.0;
        let mut inv = Mat4::identity().0;
        for col in 0..4 {
            let piv = (col..4)
                .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
                .unwrap_or(col);
            if a[piv][col].norm() < 1e-300 {
                return Err(GammaError::Singular);
            }
            a.swap(col, piv);
            inv.swap(col, piv);
            let p = a[col][col];
            for j in 0..4 {
                a[col][j] /= p;
                inv[col][j] /= p;
            }
            for r in 0..4 {
                if r != col {
                    let f = a[r][col];
                    if f != ZERO {
                        for j in 0..4 {
                            a[r][j] -= f * a[col][j];
                            inv[r][j] -= f * inv[col][j];
                        }
                    }
                }
            }
        }
        Ok(Mat4(inv))
    }
}

impl Add for Mat4 {
    type Output = Mat4;
    fn add(self, o: Mat4) -> Mat4 {
        let mut m = self;
        m += o;
        m
    }
}

impl AddAssign for Mat4 {
    fn add_assign(&mut self, o: Mat4) {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

impl Sub for Mat4 {
    type Output = Mat4;
    fn sub(self, o: Mat4) -> Mat4 {
        self + (-o)
    }
}

impl Neg for Mat4 {
    type Output = Mat4;
    fn neg(self) -> Mat4 {
        self.scale(-ONE)
    }
}

impl Mul for Mat4 {
    type Output = Mat4;
    fn mul(self, o: Mat4) -> Mat4 {
        let mut m = Mat4::zero();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..4 {
                    m.0[i][j] += a * o.0[k][j];
                }
            }
        }
        m
    }
}

impl Mul<C64> for Mat4 {
    type Output = Mat4;
    fn mul(self, s: C64) -> Mat4 {
        self.scale(s)
    }
}

impl Mul<f64> for Mat4 {
    type Output = Mat4;
    fn mul(self, s: f64) -> Mat4 {
        self.scale(C64::from(s))
    }
}

/// 2x2 complex matrix, used for Pauli blocks and 2-spinor operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn zero() -> Self {
        Mat2([[ZERO; 2]; 2])
    }
    pub fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }
    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|v| *v *= s);
        m
    }
    pub fn dagger(&self) -> Self {
        Mat2([
            [self.0[0][0].conj(), self.0[1][0].conj()],
            [self.0[0][1].conj(), self.0[1][1].conj()],
        ])
    }
    pub fn mul_vec(&self, v: &[C64; 2]) -> [C64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }
    /// Embeds as the 4x4 matrix diag(self, self).
    pub fn doubled(&self) -> Mat4 {
        Mat4::from_blocks(*self, Mat2::zero(), Mat2::zero(), *self)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let mut m = Mat2::zero();
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j];
            }
        }
        m
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let mut m = self;
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] += o.0[i][j];
            }
        }
        m
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(-ONE)
    }
}

/// Pauli matrices sigma_1..sigma_3 (index 0..3).
pub fn pauli() -> [Mat2; 3] {
    [
        Mat2([[ZERO, ONE], [ONE, ZERO]]),
        Mat2([[ZERO, -I], [I, ZERO]]),
        Mat2([[ONE, ZERO], [ZERO, -ONE]]),
    ]
}

pub fn anticommutator(a: &Mat4, b: &Mat4) -> Mat4 {
    *a * *b + *b * *a
}

pub fn commutator(a: &Mat4, b: &Mat4) -> Mat4 {
    *a * *b - *b * *a
}

/// The standard-representation gamma set.
#[derive(Clone, Debug)]
pub struct GammaSet {
    /// gamma[k] is gamma^{k+1}.
    pub gamma: [Mat4; 4],
    /// bivectors in the order (12, 13, 14, 23, 24, 34).
    pub bivectors: [Mat4; 6],
    /// sigma[k] is Sigma^{k+1}.
    pub sigma: [Mat4; 3],
    pub beta: Mat4,
    /// alpha[k] is alpha^{k+1} = gamma^1 gamma^{k+2}.
    pub alpha: [Mat4; 3],
}

const PAIRS: [(usize, usize); 6] = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];

impl GammaSet {
    /// gamma^mu with mu in 1..=4.
    pub fn g(&self, mu: usize) -> Mat4 {
        self.gamma[mu - 1]
    }

    /// gamma^{mu nu} with 1-based indices; antisymmetric, zero on the diagonal.
    pub fn g2(&self, mu: usize, nu: usize) -> Mat4 {
        bivector_lookup(&self.bivectors, mu, nu)
    }
}

fn bivector_lookup(bv: &[Mat4; 6], mu: usize, nu: usize) -> Mat4 {
    if mu == nu {
        return Mat4::zero();
    }
    let (a, b, s) = if mu < nu { (mu, nu, 1.0) } else { (nu, mu, -1.0) };
    let k = PAIRS.iter().position(|&p| p == (a, b)).expect("index in 1..=4");
    bv[k] * s
}

fn bivectors_of(g: &[Mat4; 4]) -> [Mat4; 6] {
    PAIRS.map(|(a, b)| commutator(&g[a - 1], &g[b - 1]) * 0.5)
}

pub fn standard_gammas() -> GammaSet {
    let s = pauli();
    let z = Mat2::zero();
    let id = Mat2::identity();
    let g1 = Mat4::from_blocks(id, z, z, id.scale(-ONE));
    let gk = |k: usize| Mat4::from_blocks(z, s[k], s[k].scale(-ONE), z);
    let gamma = [g1, gk(0), gk(1), gk(2)];
    let sigma = [s[0].doubled(), s[1].doubled(), s[2].doubled()];
    let alpha = [g1 * gamma[1], g1 * gamma[2], g1 * gamma[3]];
    GammaSet { bivectors: bivectors_of(&gamma), gamma, sigma, beta: g1, alpha }
}

/// Hatted gammas of the crossed-field moving frame.
#[derive(Clone, Debug)]
pub struct HatGammas {
    pub eps: f64,
    /// gh[a-1] is hat-gamma^a.
    pub gh: [Mat4; 4],
    pub bivectors: [Mat4; 6],
}

impl HatGammas {
    pub fn g(&self, a: usize) -> Mat4 {
        self.gh[a - 1]
    }
    pub fn g2(&self, a: usize, b: usize) -> Mat4 {
        bivector_lookup(&self.bivectors, a, b)
    }
}

pub fn crossed_field_gammas(eps: f64) -> Result<HatGammas, GammaError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(GammaError::NonPositiveEpsilon(eps));
    }
    let gs = standard_gammas();
    let g = |k| gs.g(k);
    let gh = [
        g(3) * (1.0 / eps) - g(4),
        (g(1) - g(2)) * -0.5,
        -(g(1) + g(2)),
        g(3) * (1.0 / eps),
    ];
    Ok(HatGammas { eps, bivectors: bivectors_of(&gh), gh })
}

/// Tetrad metric G_ab of the crossed-field frame (0-based storage).
pub fn crossed_metric(eps: f64) -> [[f64; 4]; 4] {
    [
        [-1.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, -(1.0 + eps * eps)],
    ]
}

/// Numeric inverse of a real 4x4 matrix.
pub fn real_inverse(m: &[[f64; 4]; 4]) -> Result<[[f64; 4]; 4], GammaError> {
    let mut c = Mat4::zero();
    for i in 0..4 {
        for j in 0..4 {
            c.0[i][j] = C64::from(m[i][j]);
        }
    }
    let inv = c.inverse()?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| inv.0[i][j].re)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &Mat4, b: &Mat4) -> f64 {
        (*a - *b).max_abs()
    }

    #[test]
    fn gamma1_diagonal() {
        let g = standard_gammas();
        let d: Vec<f64> = (0..4).map(|i| g.g(1).0[i][i].re).collect();
        assert_eq!(d, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn clifford_relations_exact() {
        let g = standard_gammas();
        for mu in 1..=4 {
            for nu in 1..=4 {
                let want = if mu == nu { Mat4::identity() * (2.0 * ETA[mu - 1]) } else { Mat4::zero() };
                assert_eq!(anticommutator(&g.g(mu), &g.g(nu)), want, "{mu}{nu}");
            }
        }
        assert_eq!(g.g(1) * g.g(1), Mat4::identity());
        assert_eq!(g.g(2) * g.g(2), -Mat4::identity());
    }

    #[test]
    fn commutator_examples() {
        let g = standard_gammas();
        assert!(commutator(&g.g(3), &g.g(3)).is_zero());
        assert_eq!(commutator(&g.g(1), &g.g(2)), g.g2(1, 2) * 2.0);
        assert_eq!(anticommutator(&g.g(1), &g.g(3)), Mat4::zero());
        // Sigma algebra by explicit block products.
        let s = g.sigma;
        assert!(close(&commutator(&s[0], &s[1]), &(s[2] * (I * 2.0))) < 1e-15);
    }

    #[test]
    fn traces_vanish() {
        let g = standard_gammas();
        for m in g.gamma.iter().chain(g.bivectors.iter()) {
            assert_eq!(m.trace(), ZERO);
        }
    }

    #[test]
    fn bivector_antisymmetry_and_defs() {
        let g = standard_gammas();
        for mu in 1..=4 {
            for nu in 1..=4 {
                assert_eq!(g.g2(mu, nu), -g.g2(nu, mu));
            }
        }
        assert_eq!(g.beta, g.g(1));
        for k in 0..3 {
            assert_eq!(g.alpha[k], g.g(1) * g.g(k + 2));
        }
    }

    #[test]
    fn hat_gammas_match_inverse_metric() {
        let h = crossed_field_gammas(1.0).unwrap();
        let gi = real_inverse(&crossed_metric(1.0)).unwrap();
        for a in 1..=4 {
            for b in a..=4 {
                let want = Mat4::identity() * (2.0 * gi[a - 1][b - 1]);
                assert!(close(&anticommutator(&h.g(a), &h.g(b)), &want) < 1e-14);
            }
        }
        let want23 = Mat4::identity() * (2.0 * gi[1][2]);
        assert!(close(&anticommutator(&h.g(2), &h.g(3)), &want23) < 1e-14);
    }

    #[test]
    fn nonpositive_eps_rejected() {
        assert!(crossed_field_gammas(0.0).is_err());
        assert!(crossed_field_gammas(-1.0).is_err());
    }

    #[test]
    fn inverse_roundtrip() {
        let g = standard_gammas();
        let m = g.g(1) + g.g(2) * 0.3 + Mat4::identity() * 2.0;
        let p = m * m.inverse().unwrap();
        assert!(close(&p, &Mat4::identity()) < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn hat_clifford_any_eps(eps in 0.1f64..10.0) {
            let h = crossed_field_gammas(eps).unwrap();
            let gi = real_inverse(&crossed_metric(eps)).unwrap();
            // entries grow like 1/eps^2, so the bound is relative to that scale
            let tol = 1e-13 * gi.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
            for a in 1..=4 {
                for b in 1..=4 {
                    let want = Mat4::identity() * (2.0 * gi[a - 1][b - 1]);
                    prop_assert!(close(&anticommutator(&h.g(a), &h.g(b)), &want) <= tol);
                }
            }
            prop_assert!(close(&(h.g(4) * h.g(4)), &(Mat4::identity() * gi[3][3])) <= tol);
        }

        #[test]
        fn dagger_involution(re in proptest::collection::vec(-5.0f64..5.0, 32)) {
            let m = Mat4(std::array::from_fn(|i| std::array::from_fn(|j| C64::new(re[4 * i + j], re[16 + 4 * i + j]))));
            prop_assert_eq!(m.dagger().dagger(), m);
        }
    }
}
