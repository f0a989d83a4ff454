//! The three field configurations end to end: operators, bases, residual and
//! eigenrelation suites, behind one trait and a name registry.

pub mod crossed;
pub mod magnetic;
pub mod spherical;

use crate::gamma::{GammaError, C64, ZERO};
use crate::jet::{coords_at, Coords, Jet, SpinorField, SpinorJet};
use crate::lie::LieError;
use crate::ode::{integrate_points, profile_jet, LinearOde, OdeError, PhiRule, ShootError};
use crate::operator::{MatrixDiffOp, OpError};
use crate::report::{fmt_f64, Check, Report, Table};
use crate::special::SpecialError;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("singular parameters: {0}")]
    Singular(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Shoot(#[from] ShootError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Gamma(#[from] GammaError),
}

/// Default tolerances of the suites.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub algebra: f64,
    pub symmetry: f64,
    pub lambda: f64,
    pub adjoint: f64,
    pub eigen: f64,
    pub residual: f64,
    pub ode: f64,
    pub bridge: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { algebra: 1e-8, symmetry: 1e-8, lambda: 1e-10, adjoint: 1e-6, eigen: 1e-7, residual: 1e-6, ode: 1e-10, bridge: 1e-6 }
    }
}

/// Flat parameter set shared by all scenarios; each reads the fields it needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioParams {
    /// 2j
    pub j2: u32,
    /// 2M for the separable spherical basis
    pub m2: i32,
    pub zeta: i32,
    /// NI label; in the crossed field (q1, q2) = (re, im)
    pub q: C64,
    pub mass: f64,
    pub energy: f64,
    /// Coulomb coupling of the spherical potential eV(r) = -zalpha/r
    pub zalpha: f64,
    pub eh: f64,
    pub p: f64,
    pub n: u32,
    pub alpha: f64,
    pub eps: f64,
    pub kappa: f64,
    pub charge: f64,
    pub phi: PhiRule,
    /// window of v = exp(q'2 - q2) sampled by the crossed-field grids
    pub v_range: (f64, f64),
    pub grid: usize,
    pub seed: u64,
    pub trials: usize,
    pub tol: Tolerances,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            j2: 3,
            m2: 1,
            zeta: 1,
            q: C64::new(0.3, 0.2),
            mass: 1.0,
            energy: 0.8,
            zalpha: 0.3,
            eh: 0.7,
            p: 0.4,
            n: 1,
            alpha: 0.3,
            eps: 0.7,
            kappa: 0.6,
            charge: 1.0,
            phi: PhiRule::Linear(0.5, 0.3),
            v_range: (0.5, 2.0),
            grid: 16,
            seed: 20240229,
            trials: 20,
            tol: Tolerances::default(),
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let finite = [self.v_range.0, self.v_range.1, self.q.re, self.q.im, self.mass, self.energy, self.zalpha, self.eh, self.p, self.alpha, self.eps, self.kappa, self.charge];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(ScenarioError::Config("parameters must be finite".into()));
        }
        if self.zeta != 1 && self.zeta != -1 {
            return Err(ScenarioError::Config(format!("zeta must be +1 or -1, got {}", self.zeta)));
        }
        if self.grid < 2 {
            return Err(ScenarioError::Config(format!("grid must be at least 2, got {}", self.grid)));
        }
        if self.trials == 0 {
            return Err(ScenarioError::Config("at least one trial is required".into()));
        }
        Ok(())
    }
}

/// One configuration: its verification suite and its basis dump.
pub trait Scenario: Send + Sync {
    fn name(&self) -> &'static str;
    /// Appends checks and notes for algebra, symmetry, lambda-representation,
    /// residual and eigenrelation suites.
    fn verify(&self, report: &mut Report) -> Result<(), ScenarioError>;
    /// Grid of |psi_k|^2 and arg psi_k, with residual checks appended to the report.
    fn basis(&self, report: &mut Report) -> Result<Table, ScenarioError>;
}

pub type Constructor = fn(&ScenarioParams) -> Result<Box<dyn Scenario>, ScenarioError>;

/// Scenarios by name, in registration order.
pub struct Registry {
    entries: Vec<(&'static str, Constructor)>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry { entries: Vec::new() }
    }

    pub fn standard() -> Self {
        Registry::empty()
            .register("spherical", |p| Ok(Box::new(spherical::Spherical::new(p)?)))
            .register("magnetic", |p| Ok(Box::new(magnetic::Magnetic::new(p)?)))
            .register("crossed", |p| Ok(Box::new(crossed::Crossed::new(p)?)))
    }

    pub fn register(mut self, name: &'static str, ctor: Constructor) -> Self {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, ctor));
        self
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn build(&self, name: &str, params: &ScenarioParams) -> Result<Box<dyn Scenario>, ScenarioError> {
        params.validate()?;
        let (_, ctor) = self
            .entries
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| ScenarioError::Config(format!("unknown scenario '{name}' (known: {})", self.names().join(", "))))?;
        ctor(params)
    }
}

/// Values of a linear ODE solution on demand, integrated from a fixed start and memoized.
pub struct ProfileCache {
    sys: Arc<dyn LinearOde + Send + Sync>,
    t0: f64,
    y0: Vec<C64>,
    tol: f64,
    memo: Mutex<HashMap<u64, Vec<C64>>>,
}

impl ProfileCache {
    pub fn new(sys: Arc<dyn LinearOde + Send + Sync>, t0: f64, y0: Vec<C64>, tol: f64) -> Self {
        ProfileCache { sys, t0, y0, tol, memo: Mutex::new(HashMap::new()) }
    }

    pub fn system(&self) -> &Arc<dyn LinearOde + Send + Sync> {
        &self.sys
    }

    /// Integrates to all points at once and stores them.
    pub fn prefetch(&self, ts: &[f64]) -> Result<(), OdeError> {
        let mut missing: Vec<f64> = {
            let memo = self.memo.lock().expect("profile cache lock");
            ts.iter().copied().filter(|t| !memo.contains_key(&t.to_bits())).collect()
        };
        missing.sort_by(f64::total_cmp);
        missing.dedup();
        if missing.is_empty() {
            return Ok(());
        }
        let vals = integrate_points(self.sys.as_ref(), self.t0, &self.y0, &missing, self.tol)?;
        let mut memo = self.memo.lock().expect("profile cache lock");
        for (t, v) in missing.iter().zip(vals) {
            memo.insert(t.to_bits(), v);
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> Result<Vec<C64>, OdeError> {
        if let Some(v) = self.memo.lock().expect("profile cache lock").get(&t.to_bits()) {
            return Ok(v.clone());
        }
        self.prefetch(&[t])?;
        Ok(self.memo.lock().expect("profile cache lock")[&t.to_bits()].clone())
    }

    /// Jets of the solution composed with a coordinate jet; NaN jets on failure.
    pub fn jet(&self, t: &Jet) -> Vec<Jet> {
        match self.value(t.value().re) {
            Ok(y) => profile_jet(self.sys.as_ref(), t, &y),
            Err(_) => vec![Jet::constant(C64::new(f64::NAN, f64::NAN)).with_order(t.order()); self.sys.dim()],
        }
    }
}

/// Inclusive evenly spaced points.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Tensor grid over three coordinates; extra fixed coordinates are appended.
pub fn grid3(ranges: [(f64, f64); 3], n: usize, extra: &[C64]) -> Vec<Vec<C64>> {
    let axes: Vec<Vec<f64>> = ranges.iter().map(|&(a, b)| linspace(a, b, n)).collect();
    let mut out = Vec::with_capacity(n * n * n);
    for &a in &axes[0] {
        for &b in &axes[1] {
            for &c in &axes[2] {
                let mut p = vec![C64::from(a), C64::from(b), C64::from(c)];
                p.extend_from_slice(extra);
                out.push(p);
            }
        }
    }
    out
}

fn inf_norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// max over points of |A psi - lambda psi| / (max over points of |psi| * max(1, |lambda|)), sup norms.
///
/// The scale is global so nodes of psi on the grid do not inflate the residual.
pub fn eigen_residual(op: &MatrixDiffOp, lambda: C64, field: &dyn SpinorField, points: &[Vec<C64>]) -> Result<f64, OpError> {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in points {
        let x = coords_at(p, op.max_order().max(1));
        let psi = field.eval(&x);
        let a = op.apply_jets(&x, &psi)?;
        let vals: Vec<C64> = psi.iter().map(|j| j.value()).collect();
        let diff: Vec<C64> = (0..4).map(|i| a[i].value() - vals[i] * lambda).collect();
        let r = inf_norm(&diff);
        if !r.is_finite() || !inf_norm(&vals).is_finite() {
            return Err(OpError::NonFinite(op.name.clone()));
        }
        worst = worst.max(r);
        scale = scale.max(inf_norm(&vals));
    }
    global_relative(worst, scale * lambda.norm().max(1.0), &op.name)
}

fn global_relative(worst: f64, scale: f64, name: &str) -> Result<f64, OpError> {
    if !(scale > 0.0) {
        return Err(OpError::NonFinite(format!("{name}: field vanishes on the grid")));
    }
    Ok(worst / scale)
}

/// J^2 = -sum X_a^2 applied on jets of order 2, normalized like `eigen_residual`.
pub fn casimir_residual(ops: &[MatrixDiffOp], value: f64, field: &dyn SpinorField, points: &[Vec<C64>]) -> Result<f64, OpError> {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in points {
        let x = coords_at(p, 2);
        let psi = field.eval(&x);
        let mut acc = [ZERO; 4];
        for op in ops {
            let twice = op.apply_jets(&x, &op.apply_jets(&x, &psi)?)?;
            for i in 0..4 {
                acc[i] -= twice[i].value();
            }
        }
        let vals: Vec<C64> = psi.iter().map(|j| j.value()).collect();
        let diff: Vec<C64> = (0..4).map(|i| acc[i] - vals[i] * value).collect();
        let r = inf_norm(&diff);
        if !r.is_finite() || !inf_norm(&vals).is_finite() {
            return Err(OpError::NonFinite("casimir".into()));
        }
        worst = worst.max(r);
        scale = scale.max(inf_norm(&vals));
    }
    global_relative(worst, scale * value.abs().max(1.0), "casimir")
}

/// Rows of (coordinates, |psi_k|^2, arg psi_k) for a basis dump.
pub fn dump_field(labels: &[&str], field: &dyn SpinorField, points: &[Vec<C64>]) -> Table {
    let mut header: Vec<&str> = labels.to_vec();
    let cols = ["abs2_0", "arg_0", "abs2_1", "arg_1", "abs2_2", "arg_2", "abs2_3", "arg_3"];
    header.extend_from_slice(&cols);
    let mut t = Table::new(&header);
    for p in points {
        let x: Coords = coords_at(p, 1);
        let psi: SpinorJet = field.eval(&x);
        let mut row: Vec<String> = p.iter().take(labels.len()).map(|c| fmt_f64(c.re)).collect();
        for j in psi.iter() {
            let v = j.value();
            row.push(fmt_f64(v.norm_sqr()));
            row.push(fmt_f64(if v == ZERO { 0.0 } else { v.arg() }));
        }
        t.push(row);
    }
    t
}

/// Convenience for pushing a residual check.
pub fn check(name: &str, residual: f64, tol: f64) -> Check {
    Check::new(name, residual, tol)
}
