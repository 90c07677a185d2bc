use std::f64::consts::PI;

use blowup_core::nonlinearity::{check_condition_c, check_condition_ibb, check_condition_pp};
use blowup_core::spectral::exact_discrete_lambda0;
use blowup_core::*;
use proptest::prelude::*;

fn grids() -> Vec<Grid> {
    vec![
        Grid::new(Domain::interval(PI).unwrap(), 60).unwrap(),
        Grid::new(Domain::interval(0.3).unwrap(), 17).unwrap(),
        Grid::with_counts(Domain::rectangle(1.0, 2.5).unwrap(), 9, 14).unwrap(),
    ]
}

fn field_on(grid: &Grid, seed: &[f64]) -> Field {
    let values = (0..grid.len()).map(|k| seed[k % seed.len()] * (1.0 + (k as f64 * 0.7).sin())).collect();
    Field::new(*grid, values).unwrap()
}

fn families() -> Vec<Nonlinearity> {
    vec![
        Nonlinearity::power(1.2).unwrap(),
        Nonlinearity::power(2.0).unwrap(),
        Nonlinearity::power(3.5).unwrap(),
        Nonlinearity::power_plus_linear(2.0, 1.0).unwrap(),
        Nonlinearity::power_plus_linear(4.0, 3.0).unwrap(),
        Nonlinearity::exp_minus_one(),
        Nonlinearity::polynomial(vec![0.0, 1.0, 1.0]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn poincare_inequality(which in 0usize..3, seed in prop::collection::vec(-5.0f64..5.0, 1..8)) {
        let grid = grids()[which];
        let u = field_on(&grid, &seed);
        prop_assume!(u.l2_mass() > 1e-12);
        let lambda = exact_discrete_lambda0(&grid);
        prop_assert!(u.dirichlet_energy() >= lambda * u.l2_mass() * (1.0 - 1e-12));
    }

    #[test]
    fn laplacian_is_self_adjoint(which in 0usize..3,
                                 a in prop::collection::vec(-5.0f64..5.0, 1..8),
                                 b in prop::collection::vec(-5.0f64..5.0, 1..8)) {
        let grid = grids()[which];
        let (u, v) = (field_on(&grid, &a), field_on(&grid, &b));
        let uv = u.inner(&v.laplacian()).unwrap();
        let vu = v.inner(&u.laplacian()).unwrap();
        let scale = u.dirichlet_energy().sqrt() * v.dirichlet_energy().sqrt();
        prop_assert!((uv - vu).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn summation_by_parts(which in 0usize..3, seed in prop::collection::vec(-5.0f64..5.0, 1..8)) {
        let grid = grids()[which];
        let u = field_on(&grid, &seed);
        let d = u.dirichlet_energy();
        let ibp = u.inner(&grid.apply_laplacian(&u).unwrap()).unwrap();
        prop_assert!((ibp + d).abs() <= 1e-12 * d.max(1e-300));
    }

    #[test]
    fn eigenfunction_minimises_rayleigh_quotient(which in 0usize..3, seed in prop::collection::vec(-5.0f64..5.0, 1..8)) {
        let grid = grids()[which];
        let pair = principal_eigenpair(&grid, 1e-11, 500).unwrap();
        let u = field_on(&grid, &seed);
        prop_assume!(u.l2_mass() > 1e-12);
        let rq = rayleigh_quotient(&grid, &u).unwrap();
        prop_assert!(rq >= pair.lambda0 * (1.0 - 1e-12));
    }

    #[test]
    fn refinement_chain_holds(which in 0usize..7, eps in 0.01f64..2.0, c_exp in -1i32..=1) {
        let nl = &families()[which];
        let c = 10f64.powi(c_exp);
        let sampling = Sampling { n_samples: 512, ..Sampling::default() };
        let pp = check_condition_pp(nl, eps, &sampling).unwrap();
        let ibb = check_condition_ibb(nl, eps, c, &sampling).unwrap();
        if pp.satisfied {
            prop_assert!(ibb.satisfied, "{nl}: PP({eps}) passed but IBB({eps}, {c}) failed");
        }
        if ibb.satisfied {
            let alpha = 2.0 + eps;
            let params = ConditionParams::new(alpha, ConditionParams::beta_bound(alpha, 1.0), c * c).unwrap();
            let verdict = check_condition_c(nl, &params, 1.0, &sampling).unwrap();
            prop_assert!(verdict.satisfied, "{nl}: IBB({eps}, {c}) passed but C failed");
        }
    }
}

#[test]
fn eigenvalue_on_square() {
    let grid = Grid::new(Domain::rectangle(PI, PI).unwrap(), 200).unwrap();
    let pair = principal_eigenpair(&grid, 1e-10, 500).unwrap();
    assert!((pair.lambda0 - 2.0).abs() < 1e-3, "{}", pair.lambda0);
    assert!((pair.lambda0 - exact_discrete_lambda0(&grid)).abs() < 1e-9);
}

#[test]
fn eigenvalue_on_unit_interval_at_high_resolution() {
    let grid = Grid::new(Domain::interval(1.0).unwrap(), 2000).unwrap();
    let pair = principal_eigenpair(&grid, 1e-10, 500).unwrap();
    assert!((pair.lambda0 - PI * PI).abs() < 1e-5);
    assert!((pair.lambda0 - exact_discrete_lambda0(&grid)).abs() < 1e-11);
}

#[test]
fn power_plus_linear_separates_the_conditions() {
    let nl = Nonlinearity::power_plus_linear(2.0, 1.0).unwrap();
    let sampling = Sampling::default();
    for eps in [0.01, 0.1, 0.5, 1.0, 2.0] {
        let v = check_condition_pp(&nl, eps, &sampling).unwrap();
        assert!(!v.satisfied && v.witness_u.is_some());
    }
    assert!(check_condition_ibb(&nl, 0.01, 1.0, &sampling).unwrap().satisfied);
    let params = ConditionParams::new(3.0, 0.5, 0.1).unwrap();
    assert!(check_condition_c(&nl, &params, 1.0, &sampling).unwrap().satisfied);
}
