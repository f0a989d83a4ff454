use dirac_ni::ode::{coulomb_oracle_energy, shoot_bound_state, ShootError, ShootOptions};

#[test]
fn shooting_matches_closed_form_grid() {
    let opts = ShootOptions::default();
    for za in [0.1, 0.3, 0.5] {
        for kappa in [-1, 1, -2] {
            for n_r in 0..=2 {
                match (coulomb_oracle_energy(za, kappa, n_r), shoot_bound_state(za, kappa, n_r, &opts)) {
                    (Some(e), Ok(b)) => {
                        let rel = ((b.energy - e) / e).abs();
                        assert!(rel < 1e-8, "za={za} kappa={kappa} n_r={n_r}: {rel:e}");
                        // the large component loses one node for kappa > 0
                        let nodes = if kappa > 0 { n_r - 1 } else { n_r };
                        assert_eq!(b.node_count, nodes, "za={za} kappa={kappa} n_r={n_r}");
                    }
                    (None, Err(ShootError::NoBoundState)) => assert!(kappa > 0 && n_r == 0),
                    (o, s) => panic!("za={za} kappa={kappa} n_r={n_r}: oracle {o:?}, shot {:?}", s.map(|b| b.energy)),
                }
            }
        }
    }
}

#[test]
fn fine_structure_degeneracy() {
    // kappa = -1 with n_r = 1 and kappa = +1 with n_r = 1 share principal number and j
    let opts = ShootOptions::default();
    let a = shoot_bound_state(0.4, -1, 1, &opts).unwrap().energy;
    let b = shoot_bound_state(0.4, 1, 1, &opts).unwrap().energy;
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn supercritical_and_degenerate_inputs() {
    let opts = ShootOptions::default();
    assert!(matches!(shoot_bound_state(1.2, -1, 0, &opts), Err(ShootError::CriticalCharge { .. })));
    assert!(matches!(shoot_bound_state(0.3, 0, 0, &opts), Err(ShootError::BadQuantumNumbers(_))));
    assert!(matches!(shoot_bound_state(0.0, -1, 0, &opts), Err(ShootError::NoBoundState)));
    assert_eq!(coulomb_oracle_energy(0.0, -1, 0), None);
}

#[test]
fn energies_increase_with_radial_number() {
    let mut last = 0.0;
    for n_r in 0..4 {
        let e = coulomb_oracle_energy(0.3, -2, n_r).unwrap();
        assert!(e > last && e < 1.0);
        last = e;
    }
}
