//! Command dispatch: builds a report for each subcommand.

use crate::args::{Cli, Command, ConfigError, ScenarioKind};
use dirac_ni::lie::LieError;
use dirac_ni::ode::{coulomb_oracle_energy, shoot_bound_state, ShootError, ShootOptions};
use dirac_ni::report::{fmt_f64, Check, Report, Table};
use dirac_ni::scenarios::spherical::Spherical;
use dirac_ni::scenarios::{Registry, ScenarioError, ScenarioParams};
use thiserror::Error;

/// Default relative tolerance of the spectrum comparison.
pub const SPECTRUM_TOL: f64 = 1e-8;
pub const DEFAULT_KAPPAS: [i32; 3] = [-1, 1, -2];
pub const DEFAULT_MAX_NR: u32 = 2;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

impl RunError {
    /// 2 for bad input, 3 for numerical breakdown.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Scenario(e) => scenario_code(e),
        }
    }
}

fn scenario_code(e: &ScenarioError) -> u8 {
    match e {
        ScenarioError::Config(_) | ScenarioError::Singular(_) | ScenarioError::Gamma(_) => 2,
        ScenarioError::Lie(LieError::BadParameter(_)) => 2,
        ScenarioError::Shoot(ShootError::BadQuantumNumbers(_) | ShootError::CriticalCharge { .. }) => 2,
        _ => 3,
    }
}

fn record_params(report: &mut Report, p: &ScenarioParams, kind: ScenarioKind) {
    match kind {
        ScenarioKind::Spherical => {
            report.param("j2", p.j2);
            report.param("m2", p.m2);
            report.param("zeta", p.zeta);
            report.param("q", format!("{}{:+}i", p.q.re, p.q.im));
            report.param("zalpha", p.zalpha);
            report.param("energy", p.energy);
        }
        ScenarioKind::Magnetic => {
            report.param("eH", p.eh);
            report.param("p", p.p);
            report.param("n", p.n);
            report.param("energy", p.energy);
        }
        ScenarioKind::Crossed => {
            report.param("alpha", p.alpha);
            report.param("epsilon", p.eps);
            report.param("kappa", p.kappa);
            report.param("phi", format!("{:?}", p.phi));
            report.param("v_range", format!("{},{}", p.v_range.0, p.v_range.1));
        }
    }
    report.param("mass", p.mass);
    report.param("grid", p.grid);
    report.param("trials", p.trials);
}

pub fn run(cli: &Cli) -> Result<Report, RunError> {
    let p = cli.params()?;
    match cli.command {
        Command::Verify | Command::Basis => {
            let mut report = Report::new(cli.command.name(), Some(cli.scenario.name()), p.seed);
            record_params(&mut report, &p, cli.scenario);
            let scenario = Registry::standard().build(cli.scenario.name(), &p)?;
            if cli.command == Command::Verify {
                scenario.verify(&mut report)?;
            } else {
                let table = scenario.basis(&mut report)?;
                report.table = Some(table);
            }
            report.finalize();
            Ok(report)
        }
        Command::Bridge => {
            if cli.scenario != ScenarioKind::Spherical {
                return Err(ConfigError(format!("bridge applies to the spherical scenario only, got {}", cli.scenario.name())).into());
            }
            let mut report = Report::new("bridge", Some("spherical"), p.seed);
            report.param("j2", p.j2);
            report.param("zeta", p.zeta);
            report.param("tol", fmt_f64(p.tol.bridge));
            let table = Spherical::new(&p)?.bridge(&mut report)?;
            report.table = Some(table);
            report.finalize();
            Ok(report)
        }
        Command::Spectrum => spectrum(cli, &p),
    }
}

fn spectrum(cli: &Cli, p: &ScenarioParams) -> Result<Report, RunError> {
    let tol = cli.tol.unwrap_or(SPECTRUM_TOL);
    let kappas: Vec<i32> = match cli.kappa {
        None => DEFAULT_KAPPAS.to_vec(),
        Some(k) if k.fract() == 0.0 && k != 0.0 && k.abs() <= 1000.0 => vec![k as i32],
        Some(k) => return Err(ConfigError(format!("spectrum needs a nonzero integer --kappa, got {k}")).into()),
    };
    let max_nr = cli.nr.unwrap_or(DEFAULT_MAX_NR);
    let za = p.zalpha;
    let kmin = kappas.iter().map(|k| k.unsigned_abs()).min().unwrap_or(1) as f64;
    if za < 0.0 {
        return Err(ConfigError(format!("--zalpha must be non-negative, got {za}")).into());
    }
    if za >= kmin {
        return Err(ConfigError(format!("--zalpha {za} reaches the critical charge |kappa| = {kmin}")).into());
    }

    let mut report = Report::new("spectrum", None, p.seed);
    report.param("zalpha", za);
    report.param("kappas", kappas.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","));
    report.param("max_nr", max_nr);
    report.param("tol", fmt_f64(tol));
    let mut table = Table::new(&["n_r", "kappa", "energy", "oracle", "rel_error", "status"]);
    if za == 0.0 {
        report.warnings.push("zalpha = 0: the free Dirac equation has no bound states, table is empty".into());
        report.table = Some(table);
        return Ok(report);
    }

    let opts = ShootOptions { tol: p.tol.ode.min(1e-12), ..ShootOptions::default() };
    for &k in &kappas {
        for nr in 0..=max_nr {
            let oracle = coulomb_oracle_energy(za, k, nr);
            let shot = match shoot_bound_state(za, k, nr, &opts) {
                Ok(b) => Some(b.energy),
                Err(ShootError::NoBoundState) => None,
                Err(e) => return Err(ScenarioError::from(e).into()),
            };
            let name = format!("spectrum.kappa={k}.nr={nr}");
            let (residual, status) = match (shot, oracle) {
                (Some(e), Some(o)) => (((e - o) / o).abs(), "bound"),
                (None, None) => (0.0, "no_state"),
                _ => (1.0, "mismatch"),
            };
            let check = Check::new(name, residual, tol);
            let status = if check.pass || status != "bound" { status } else { "inaccurate" };
            let show = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "none".into());
            table.push(vec![nr.to_string(), k.to_string(), show(shot), show(oracle), fmt_f64(residual), status.into()]);
            report.checks.push(check);
        }
    }
    report.table = Some(table);
    report.finalize();
    Ok(report)
}
