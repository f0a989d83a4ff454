use dirac_ni::report::Report;
use dirac_ni::scenarios::{Registry, ScenarioError, ScenarioParams};

fn verify(name: &str, p: &ScenarioParams) -> Report {
    let s = Registry::standard().build(name, p).unwrap();
    let mut r = Report::new("verify", Some(name), p.seed);
    s.verify(&mut r).unwrap();
    r.finalize();
    r
}

#[test]
fn spherical_suite_passes() {
    let r = verify("spherical", &ScenarioParams::default());
    assert!(r.all_pass(), "{:?}", r.failures());
    assert!(r.checks.iter().any(|c| c.name == "spherical.ni.residual"));
}

#[test]
fn crossed_suite_passes() {
    let r = verify("crossed", &ScenarioParams::default());
    assert!(r.all_pass(), "{:?}", r.failures());
}

#[test]
fn crossed_with_constant_phi() {
    let p = ScenarioParams { phi: dirac_ni::ode::PhiRule::Const(-0.4), eps: 1.3, ..ScenarioParams::default() };
    let r = verify("crossed", &p);
    assert!(r.all_pass(), "{:?}", r.failures());
}

#[test]
fn magnetic_fails_only_on_l1_l2_skewness() {
    let p = ScenarioParams { grid: 6, ..ScenarioParams::default() };
    let r = verify("magnetic", &p);
    let failed: Vec<_> = r.failures().iter().map(|c| c.name.clone()).collect();
    assert_eq!(failed, ["magnetic.lambda.skew.l1", "magnetic.lambda.skew.l2"]);
}

#[test]
fn checks_are_reproducible_for_a_seed() {
    let p = ScenarioParams { seed: 5, ..ScenarioParams::default() };
    let a = verify("crossed", &p);
    let b = verify("crossed", &p);
    assert_eq!(a.checks, b.checks);
}

#[test]
fn crossed_basis_dump_has_grid_rows() {
    let p = ScenarioParams { grid: 5, ..ScenarioParams::default() };
    let s = Registry::standard().build("crossed", &p).unwrap();
    let mut r = Report::new("basis", Some("crossed"), p.seed);
    let t = s.basis(&mut r).unwrap();
    assert_eq!(t.rows.len(), 25);
    assert!(r.all_pass());
}

#[test]
fn rejected_configurations() {
    let reg = Registry::standard();
    let bad = |name: &str, p: ScenarioParams| matches!(reg.build(name, &p), Err(ScenarioError::Config(_)));
    assert!(bad("magnetic", ScenarioParams { eh: -1.0, ..Default::default() }));
    assert!(bad("crossed", ScenarioParams { v_range: (0.0, 1.0), ..Default::default() }));
    assert!(bad("crossed", ScenarioParams { eps: 0.0, ..Default::default() }));
    assert!(bad("spherical", ScenarioParams { zeta: 2, ..Default::default() }));
    assert!(bad("nonesuch", ScenarioParams::default()));
}
