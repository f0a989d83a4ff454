//! Command-line flags and their conversion into validated run parameters.

use clap::{Parser, ValueEnum};
use dirac_ni::gamma::C64;
use dirac_ni::ode::PhiRule;
use dirac_ni::scenarios::ScenarioParams;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// structure constants, symmetry, lambda-representation and solution suites
    Verify,
    /// Coulomb bound-state energies by shooting, against the analytic formula
    Spectrum,
    /// grid dump of a basis field with its residual checks
    Basis,
    /// Fourier transform of the so(3) D-function against the spherical spinors
    Bridge,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Spectrum => "spectrum",
            Command::Basis => "basis",
            Command::Bridge => "bridge",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScenarioKind {
    Spherical,
    Magnetic,
    Crossed,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Spherical => "spherical",
            ScenarioKind::Magnetic => "magnetic",
            ScenarioKind::Crossed => "crossed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "dirac-ni", version, about = "Exact solutions of the Dirac equation in external fields", allow_negative_numbers = true)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long, value_enum, default_value_t = ScenarioKind::Spherical)]
    pub scenario: ScenarioKind,
    /// total angular momentum, e.g. 3/2 or 1.5
    #[arg(long)]
    pub j: Option<String>,
    /// magnetic quantum number of the separable spherical basis, e.g. -1/2
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<String>,
    #[arg(long)]
    pub zeta: Option<i32>,
    #[arg(long = "q-re")]
    pub q_re: Option<f64>,
    #[arg(long = "q-im")]
    pub q_im: Option<f64>,
    /// Coulomb coupling
    #[arg(long)]
    pub zalpha: Option<f64>,
    /// crossed-field separation constant; a nonzero integer selects one spectrum row
    #[arg(long)]
    pub kappa: Option<f64>,
    /// largest radial quantum number of the spectrum table
    #[arg(long)]
    pub nr: Option<u32>,
    #[arg(long = "eH")]
    pub eh: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// const:<v> or linear:<a>,<b>
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub energy: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    /// lower end of the crossed-field v window
    #[arg(long = "v-min")]
    pub v_min: Option<f64>,
    #[arg(long = "v-max")]
    pub v_max: Option<f64>,
    /// pass threshold of the command's headline check
    #[arg(long)]
    pub tol: Option<f64>,
    /// integrator tolerance
    #[arg(long = "ode-tol")]
    pub ode_tol: Option<f64>,
    /// points per axis of residual grids
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

pub const MAX_GRID: usize = 64;

/// Parses 3/2, 1.5 or 2 into twice the value.
pub fn parse_half(s: &str) -> Result<i64, ConfigError> {
    let bad = || ConfigError(format!("'{s}' is not a multiple of 1/2"));
    let t = s.trim();
    let twice = if let Some((a, b)) = t.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        match b.trim() {
            "2" => a,
            "1" => 2 * a,
            _ => return Err(bad()),
        }
    } else {
        let v: f64 = t.parse().map_err(|_| bad())?;
        let d = 2.0 * v;
        if !d.is_finite() || d.fract() != 0.0 {
            return Err(bad());
        }
        d as i64
    };
    Ok(twice)
}

pub fn parse_phi(s: &str) -> Result<PhiRule, ConfigError> {
    let bad = || ConfigError(format!("--phi expects const:<v> or linear:<a>,<b>, got '{s}'"));
    let num = |x: &str| -> Result<f64, ConfigError> { x.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad) };
    match s.split_once(':') {
        Some(("const", v)) => Ok(PhiRule::Const(num(v)?)),
        Some(("linear", rest)) => {
            let (a, b) = rest.split_once(',').ok_or_else(bad)?;
            Ok(PhiRule::Linear(num(a)?, num(b)?))
        }
        _ => Err(bad()),
    }
}

fn positive(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError(format!("--{name} must be positive and finite, got {v}")))
    }
}

impl Cli {
    /// Scenario parameters with defaults filled in and flag-level ranges checked.
    pub fn params(&self) -> Result<ScenarioParams, ConfigError> {
        let mut p = ScenarioParams::default();
        if let Some(j) = &self.j {
            let j2 = parse_half(j)?;
            if j2 <= 0 {
                return Err(ConfigError(format!("--j must be positive, got {j}")));
            }
            p.j2 = u32::try_from(j2).map_err(|_| ConfigError(format!("--j out of range: {j}")))?;
            p.m2 = if p.j2 % 2 == 1 { 1 } else { 0 };
        }
        if let Some(m) = &self.m {
            let m2 = parse_half(m)?;
            if m2.unsigned_abs() > p.j2 as u64 || (m2 - p.j2 as i64) % 2 != 0 {
                return Err(ConfigError(format!("--m {m} is not a projection of j = {}/2", p.j2)));
            }
            p.m2 = m2 as i32;
        }
        if let Some(z) = self.zeta {
            p.zeta = z;
        }
        p.q = C64::new(self.q_re.unwrap_or(p.q.re), self.q_im.unwrap_or(p.q.im));
        if let Some(v) = self.zalpha {
            p.zalpha = v;
        }
        if let Some(v) = self.kappa {
            p.kappa = v;
        }
        if let Some(v) = self.eh {
            p.eh = v;
        }
        if let Some(v) = self.p {
            p.p = v;
        }
        if let Some(v) = self.n {
            p.n = v;
        }
        if let Some(v) = self.alpha {
            p.alpha = v;
        }
        if let Some(v) = self.epsilon {
            p.eps = v;
        }
        if let Some(s) = &self.phi {
            p.phi = parse_phi(s)?;
        }
        if let Some(v) = self.energy {
            p.energy = v;
        }
        if let Some(v) = self.mass {
            p.mass = v;
        }
        p.v_range = (self.v_min.unwrap_or(p.v_range.0), self.v_max.unwrap_or(p.v_range.1));
        if let Some(v) = self.ode_tol {
            p.tol.ode = positive("ode-tol", v)?;
        }
        if let Some(t) = self.tol {
            let t = positive("tol", t)?;
            match self.command {
                Command::Verify | Command::Basis => p.tol.residual = t,
                Command::Bridge => p.tol.bridge = t,
                Command::Spectrum => {}
            }
        }
        if let Some(g) = self.grid {
            if !(2..=MAX_GRID).contains(&g) {
                return Err(ConfigError(format!("--grid must lie in 2..={MAX_GRID}, got {g}")));
            }
            p.grid = g;
        }
        if let Some(s) = self.seed {
            p.seed = s;
        }
        p.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integers() {
        assert_eq!(parse_half("3/2").unwrap(), 3);
        assert_eq!(parse_half("1.5").unwrap(), 3);
        assert_eq!(parse_half("2").unwrap(), 4);
        assert_eq!(parse_half("-1/2").unwrap(), -1);
        assert!(parse_half("1/3").is_err());
        assert!(parse_half("0.7").is_err());
    }

    #[test]
    fn phi_rules() {
        assert_eq!(parse_phi("const:0.5").unwrap(), PhiRule::Const(0.5));
        assert_eq!(parse_phi("linear:1,-2").unwrap(), PhiRule::Linear(1.0, -2.0));
        assert!(parse_phi("quadratic:1").is_err());
        assert!(parse_phi("linear:1").is_err());
    }

    #[test]
    fn negative_values_parse() {
        let c = Cli::try_parse_from(["dirac-ni", "verify", "--scenario", "magnetic", "--eH", "-1"]).unwrap();
        assert_eq!(c.eh, Some(-1.0));
        assert_eq!(c.params().unwrap().eh, -1.0);
    }

    #[test]
    fn projection_must_match_j() {
        let c = Cli::try_parse_from(["dirac-ni", "basis", "--j", "3/2", "--m", "1"]).unwrap();
        assert!(c.params().is_err());
        let c = Cli::try_parse_from(["dirac-ni", "basis", "--j", "3/2", "--m", "-3/2"]).unwrap();
        assert_eq!(c.params().unwrap().m2, -3);
    }

    #[test]
    fn tol_targets_the_command() {
        let c = Cli::try_parse_from(["dirac-ni", "bridge", "--tol", "1e-5"]).unwrap();
        assert_eq!(c.params().unwrap().tol.bridge, 1e-5);
        let c = Cli::try_parse_from(["dirac-ni", "verify", "--tol", "0"]).unwrap();
        assert!(c.params().is_err());
    }
}
