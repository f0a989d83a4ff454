//! Constant magnetic field along z with an electric potential V(z):
//! Cartesian coordinates (x, y, z) in slots 0..2 and the complex label q in slot 3.

use super::{check, dump_field, eigen_residual, grid3, ProfileCache, Scenario, ScenarioError, ScenarioParams};
use crate::gamma::{standard_gammas, GammaSet, Mat4, C64, I, ONE, ZERO};
use crate::jet::{coords_at, Coords, Jet, SpinorField, SpinorJet};
use crate::lie::{check_lambda_table, e2c_adjoint_check, e2c_lambda_rep, e2c_lambda_rep_on, e2c_table, MeasureSign};
use crate::ode::{magnetic_system, Potential};
use crate::operator::{check_structure_constants, check_symmetry, Coeff, MatrixDiffOp, Sampler};
use crate::report::{Report, Table};
use crate::special::parabolic_cylinder_jet;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const LABELS: [&str; 4] = ["x", "y", "z", "q"];
/// Transverse box of the residual grids.
const BOX: f64 = 1.0;
/// Axial range of the residual grids.
const Z_RANGE: (f64, f64) = (-1.0, 1.0);
/// Minimum distance of grid points from the log branch point and its cut.
const CUT_MARGIN: f64 = 0.05;

pub struct Magnetic {
    params: ScenarioParams,
    eh: f64,
    potential: Potential,
    gs: GammaSet,
}

impl Magnetic {
    pub fn new(p: &ScenarioParams) -> Result<Self, ScenarioError> {
        if !(p.eh > 0.0) {
            return Err(ScenarioError::Config(format!("eH must be positive, got {}", p.eh)));
        }
        if !(p.charge > 0.0) {
            return Err(ScenarioError::Config(format!("charge must be positive, got {}", p.charge)));
        }
        if p.n > 40 {
            return Err(ScenarioError::Config(format!("n = {} puts D_k outside the supported order range", p.n)));
        }
        Ok(Magnetic { params: p.clone(), eh: p.eh, potential: Potential::Sine { amp: 0.2, k: 1.0 }, gs: standard_gammas() })
    }

    fn field_h(&self) -> f64 {
        self.eh / self.params.charge
    }

    /// H = -i a1 dx - a2 (i dy + eH x) - i a3 dz - eV(z) + beta m
    pub fn hamiltonian(&self) -> MatrixDiffOp {
        let g = &self.gs;
        let eh = self.eh;
        let pot = self.potential;
        MatrixDiffOp::new("H", &LABELS)
            .d(0, Coeff::Const(-I), g.alpha[0])
            .d(1, Coeff::Const(-I), g.alpha[1])
            .mult(Coeff::field(move |x: &Coords| x[0] * (-eh)), g.alpha[1])
            .d(2, Coeff::Const(-I), g.alpha[2])
            .mult(Coeff::field(move |x: &Coords| -pot.eval(x[2])), Mat4::identity())
            .mult(Coeff::Const(C64::from(self.params.mass)), g.beta)
    }

    /// X0 = ie, X1 = dx - ieH y, X2 = dy, X3 = y dx - x dy - (i/2) Sigma3 + i(eH/2)(x^2 - y^2)
    pub fn symmetry_ops(&self) -> Vec<MatrixDiffOp> {
        let id = Mat4::identity();
        let eh = self.eh;
        vec![
            MatrixDiffOp::new("X0", &LABELS).mult(Coeff::Const(I * self.params.charge), id),
            MatrixDiffOp::new("X1", &LABELS).d(0, Coeff::Const(ONE), id).mult(Coeff::field(move |x: &Coords| x[1] * (-I * eh)), id),
            MatrixDiffOp::new("X2", &LABELS).d(1, Coeff::Const(ONE), id),
            MatrixDiffOp::new("X3", &LABELS)
                .d(0, Coeff::field(|x: &Coords| x[1]), id)
                .d(1, Coeff::field(|x: &Coords| -x[0]), id)
                .mult(Coeff::Const(-I * 0.5), self.gs.sigma[2])
                .mult(Coeff::field(move |x: &Coords| (x[0] * x[0] - x[1] * x[1]) * (I * eh * 0.5)), id),
        ]
    }

    /// S = beta (Sigma2 dx - Sigma1 (dy - ieH x))
    pub fn spin_op(&self) -> MatrixDiffOp {
        let g = &self.gs;
        let eh = self.eh;
        MatrixDiffOp::new("S", &LABELS)
            .d(0, Coeff::Const(ONE), g.beta * g.sigma[1])
            .d(1, Coeff::Const(-ONE), g.beta * g.sigma[0])
            .mult(Coeff::field(move |x: &Coords| x[0] * (I * eh)), g.beta * g.sigma[0])
    }

    fn profile(&self, n: u32, zeta: i32) -> Result<Arc<ProfileCache>, ScenarioError> {
        let p = &self.params;
        let sys = magnetic_system(p.energy, p.mass, self.eh, n, zeta, self.potential)?;
        Ok(Arc::new(ProfileCache::new(Arc::new(sys), 0.0, vec![ONE, C64::new(0.3, 0.2)], p.tol.ode)))
    }

    /// e^{ipy} (i zeta sqrt2 D_k f, n D_{k-1} f, i zeta sqrt2 D_k g, -n D_{k-1} g), k = -n^2/2:
    /// the printed spinor multiplied by n, which keeps n = 0 finite.
    pub fn sov_basis(&self) -> Result<SovField, ScenarioError> {
        let p = &self.params;
        Ok(SovField { eh: self.eh, p: p.p, n: p.n, zeta: p.zeta, profile: self.profile(p.n, p.zeta)? })
    }

    /// (D_{q,zeta} f, D_{q,-zeta} g) with the n = 1 axial profiles; q is read from slot 3.
    pub fn ni_basis(&self) -> Result<NiField, ScenarioError> {
        let p = &self.params;
        Ok(NiField { eh: self.eh, zeta: p.zeta, profile: self.profile(1, p.zeta)? })
    }

    fn sampler(&self) -> impl Fn(&mut ChaCha8Rng) -> Vec<C64> {
        |r: &mut ChaCha8Rng| (0..3).map(|_| C64::from(r.gen_range(-1.0..1.0))).collect()
    }

    /// Grid points in (x, y, z) with q appended, kept away from the log branch point and cut.
    pub fn grid(&self) -> Vec<Vec<C64>> {
        let q = self.params.q;
        grid3([(-BOX, BOX), (-BOX, BOX), Z_RANGE], self.params.grid, &[q])
            .into_iter()
            .filter(|pt| {
                let (x, y) = (pt[0].re, pt[1].re);
                // w = q + (i/2)(x + iy) vanishes at (x, y) = (-2 Im q, 2 Re q); cut where Im w = 0, Re w < 0
                let branch = ((x + 2.0 * q.im).powi(2) + (y - 2.0 * q.re).powi(2)).sqrt();
                let on_cut = (x + 2.0 * q.im).abs() < CUT_MARGIN && y > 2.0 * q.re;
                branch > CUT_MARGIN && !on_cut
            })
            .collect()
    }

    /// Transverse part of H conjugated by the ansatz prefactor, against the printed constant matrix.
    pub fn reduced_operator_mismatch(&self) -> Result<f64, ScenarioError> {
        let g = &self.gs;
        let eh = self.eh;
        let h_perp = MatrixDiffOp::new("Hperp", &LABELS)
            .d(0, Coeff::Const(-I), g.alpha[0])
            .d(1, Coeff::Const(-I), g.alpha[1])
            .mult(Coeff::field(move |x: &Coords| x[0] * (-eh)), g.alpha[1]);
        let printed = g.alpha[0] * C64::from(0.25 - eh) + g.alpha[1] * (I * (0.25 + eh));
        let mut worst: f64 = 0.0;
        for pt in [[0.3, -0.4], [-0.2, 0.5], [0.1, 0.1]] {
            let point = [C64::from(pt[0]), C64::from(pt[1]), ZERO, self.params.q];
            let mut derived = Mat4::zero();
            for k in 0..4 {
                let col = move |x: &Coords| -> SpinorJet {
                    let e = ansatz_diag(eh, x);
                    std::array::from_fn(|i| if i == k { e[i] } else { Jet::constant(ZERO) })
                };
                let v = h_perp.apply(&col, &point)?;
                let e = ansatz_diag(eh, &coords_at(&point, 1)).map(|j| j.value());
                for i in 0..4 {
                    derived.0[i][k] = v[i] / e[i];
                }
            }
            worst = worst.max((derived - printed).max_abs());
        }
        Ok(worst)
    }
}

/// Diagonal of exp(eH[(x^2 + 2ixy + y^2)/4 - iq(x - iy)]) (cosh q' + Sigma3 sinh q').
fn ansatz_diag(eh: f64, x: &Coords) -> [Jet; 4] {
    let (xx, yy, q) = (x[0], x[1], x[3]);
    let s = ((xx * xx + xx * yy * (2.0 * I) + yy * yy) * 0.25 - q * (xx - yy * I) * I) * eh;
    let qp = branch_log(q, xx, yy) * -0.5;
    let e = s.exp();
    let (a, b) = (e * qp.exp(), e * (-qp).exp());
    [a, b, a, b]
}

fn branch_log(q: Jet, x: Jet, y: Jet) -> Jet {
    (q + (x + y * I) * (I * 0.5)).ln()
}

pub struct SovField {
    eh: f64,
    p: f64,
    n: u32,
    zeta: i32,
    profile: Arc<ProfileCache>,
}

impl SpinorField for SovField {
    fn eval(&self, x: &Coords) -> SpinorJet {
        let k = -(self.n as f64).powi(2) / 2.0;
        let xi = (x[0] * self.eh + (-self.p)) * (2.0 / self.eh).sqrt();
        let nan = || Jet::constant(C64::new(f64::NAN, f64::NAN)).with_order(x[0].order());
        let dk = parabolic_cylinder_jet(k, &xi).unwrap_or_else(|_| nan());
        let dk1 = parabolic_cylinder_jet(k - 1.0, &xi).unwrap_or_else(|_| nan());
        let fg = self.profile.jet(&x[2]);
        let phase = (x[1] * (I * self.p)).exp();
        let c = I * (self.zeta as f64 * std::f64::consts::SQRT_2);
        let n = self.n as f64;
        [phase * dk * fg[0] * c, phase * dk1 * fg[0] * n, phase * dk * fg[1] * c, phase * dk1 * fg[1] * (-n)]
    }
}

pub struct NiField {
    eh: f64,
    zeta: i32,
    profile: Arc<ProfileCache>,
}

impl NiField {
    /// D_{q,zeta}(x, y) as two components.
    fn d(&self, x: &Coords, zeta: i32) -> [Jet; 2] {
        let (xx, yy, q) = (x[0], x[1], x[3]);
        let w = xx + yy * I;
        let s = (w * w * 0.25 - q * (xx - yy * I) * I + yy * yy * 0.5) * self.eh;
        let qp = branch_log(q, xx, yy) * -0.5;
        let e = s.exp();
        [e * qp.exp(), e * (-qp).exp() * (2.0 * self.eh.sqrt() * zeta as f64)]
    }
}

impl SpinorField for NiField {
    fn eval(&self, x: &Coords) -> SpinorJet {
        let fg = self.profile.jet(&x[2]);
        let up = self.d(x, self.zeta);
        let down = self.d(x, -self.zeta);
        [up[0] * fg[0], up[1] * fg[0], down[0] * fg[1], down[1] * fg[1]]
    }
}

impl Scenario for Magnetic {
    fn name(&self) -> &'static str {
        "magnetic"
    }

    fn verify(&self, report: &mut Report) -> Result<(), ScenarioError> {
        let p = &self.params;
        let tol = p.tol;
        let xs = self.symmetry_ops();
        let h = self.hamiltonian();
        let s = self.spin_op();
        let samp = self.sampler();
        let sampler: Sampler = &samp;
        report.param("eH", self.eh);
        report.param("charge", p.charge);

        let table = e2c_table(self.field_h());
        report.extend([check("magnetic.algebra.table", check_structure_constants(&xs, &table, p.trials, p.seed, sampler)?, tol.algebra)]);
        for x in &xs {
            report.extend([
                check(&format!("magnetic.symmetry.[H,{}]", x.name), check_symmetry(&h, x, p.trials, p.seed, sampler)?, tol.symmetry),
                check(&format!("magnetic.symmetry.[S,{}]", x.name), check_symmetry(&s, x, p.trials, p.seed, sampler)?, tol.symmetry),
            ]);
        }
        report.extend([check("magnetic.symmetry.[H,S]", check_symmetry(&h, &s, p.trials, p.seed, sampler)?, tol.symmetry)]);

        let rep = e2c_lambda_rep(p.charge, self.field_h())?;
        let fit = check_lambda_table(&rep, p.trials, p.seed)?;
        report.notes.push(format!(
            "magnetic lambda table closes with the {} sign convention (same {:.3e}, opposite {:.3e})",
            if fit.same_sign <= fit.opposite_sign { "same" } else { "opposite" },
            fit.same_sign,
            fit.opposite_sign
        ));
        report.extend([check("magnetic.lambda.table", fit.best(), tol.lambda)]);
        // the + density grows without bound, so only the decaying sign defines an inner product
        let chosen = e2c_adjoint_check(p.charge, self.field_h(), MeasureSign::Minus, p.seed)?;
        report.notes.push(format!(
            "magnetic measure sign: exp(+2eH|q|^2) is not integrable, exp(-2eH|q|^2) used. Under it l1 and l2 are Hermitian (residuals {:.3e}, {:.3e}), not skew",
            chosen.hermitian[1], chosen.hermitian[2]
        ));
        for (a, r) in chosen.skew.iter().enumerate() {
            report.extend([check(&format!("magnetic.lambda.skew.l{a}"), *r, tol.adjoint)]);
        }

        let grid = self.grid();
        let sov = self.sov_basis()?;
        let ni = self.ni_basis()?;
        let energy = C64::from(p.energy);
        report.extend([
            check("magnetic.sov.residual", eigen_residual(&h, energy, &sov, &grid)?, tol.residual),
            check("magnetic.sov.p2", eigen_residual(&xs[2].scaled(-I), C64::from(p.p), &sov, &grid)?, tol.eigen),
            check(
                "magnetic.sov.S",
                eigen_residual(&s, C64::from(p.zeta as f64 * p.n as f64 * self.eh.sqrt()), &sov, &grid)?,
                tol.eigen,
            ),
            check("magnetic.ni.residual", eigen_residual(&h, energy, &ni, &grid)?, tol.residual),
            check("magnetic.ni.S", eigen_residual(&s, C64::from(p.zeta as f64 * self.eh.sqrt()), &ni, &grid)?, tol.eigen),
        ]);
        let lq = e2c_lambda_rep_on(p.charge, self.field_h(), 3)?;
        for (x, l) in xs.iter().zip(&lq.ops) {
            report.extend([check(&format!("magnetic.ni.{}=-{}", x.name, l.name), eigen_residual(&x.plus(l), ZERO, &ni, &grid)?, tol.eigen)]);
        }
        let mismatch = self.reduced_operator_mismatch()?;
        report.notes.push(format!("magnetic reduced operator: substituted ansatz vs printed constant matrix differ by {mismatch:.3e}"));
        report.extend([check("magnetic.reduced.printed", mismatch, tol.algebra)]);
        report.notes.push("magnetic NI basis carries no q-dependent normalization; such a factor would break X_a psi = -l_a psi".into());
        Ok(())
    }

    fn basis(&self, report: &mut Report) -> Result<Table, ScenarioError> {
        let p = &self.params;
        let grid = self.grid();
        let sov = self.sov_basis()?;
        let ni = self.ni_basis()?;
        let h = self.hamiltonian();
        let energy = C64::from(p.energy);
        report.extend([
            check("magnetic.sov.residual", eigen_residual(&h, energy, &sov, &grid)?, p.tol.residual),
            check("magnetic.ni.residual", eigen_residual(&h, energy, &ni, &grid)?, p.tol.residual),
        ]);
        let mut labels = LABELS[..3].to_vec();
        labels.insert(0, "basis");
        let mut t = Table::new(&[]);
        for (name, field) in [("sov", &sov as &dyn SpinorField), ("ni", &ni as &dyn SpinorField)] {
            let part = dump_field(&LABELS[..3], field, &grid);
            if t.header.is_empty() {
                t.header = labels.iter().map(|s| s.to_string()).chain(part.header.iter().skip(3).cloned()).collect();
            }
            for row in part.rows {
                let mut r = vec![name.to_string()];
                r.extend(row);
                t.push(r);
            }
        }
        Ok(t)
    }
}
