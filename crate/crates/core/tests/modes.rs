use std::f64::consts::PI;

use spinor_core::grid::GridSpec;
use spinor_core::meanfield::{effective_fields, grid_for, solve_tf};
use spinor_core::modes::{
    discretize_heff, solve_lowest_modes, ChebyshevSubspace, DenseSolver, HeffOperator, ModeRequest, ModeSolver,
    TridiagonalSolver,
};
use spinor_core::units::{kinetic_prefactor_hz, SpeciesParams, TrapGeometry, ATOMIC_MASS_UNIT, HBAR, PLANCK};
use spinor_core::Error;

const MASS: f64 = 86.909_180_527 * ATOMIC_MASS_UNIT;

fn box_levels(half_width: f64, count: usize) -> Vec<f64> {
    let width = 2.0 * half_width;
    (1..=count)
        .map(|n| kinetic_prefactor_hz(MASS) * (n as f64 * PI / width).powi(2))
        .collect()
}

fn max_error(found: &[f64], exact: &[f64]) -> f64 {
    found.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn box_spectrum_converges_at_second_order() {
    let half = 10e-6;
    let exact = box_levels(half, 5);
    let mut errors = Vec::new();
    for points in [49, 99, 199, 399] {
        let grid = GridSpec::new(vec![half], vec![points]).unwrap();
        let op = HeffOperator::from_potential(&grid, MASS, &vec![0.0; points]).unwrap();
        let basis = solve_lowest_modes(&op, &TridiagonalSolver, &ModeRequest::new(5, f64::INFINITY)).unwrap();
        assert!(basis.orthonormality_error() < 1e-8);
        errors.push(max_error(&basis.energies_hz, &exact));
    }
    for pair in errors.windows(2) {
        assert!(pair[0] / pair[1] >= 3.5, "errors {errors:?}");
    }
}

#[test]
fn oscillator_spectrum_converges_at_second_order() {
    let f = 50.0;
    let omega = 2.0 * PI * f;
    let l_osc = (HBAR / (MASS * omega)).sqrt();
    let half = 10.0 * l_osc;
    let trap = TrapGeometry::Harmonic { omega: vec![omega] };
    let exact: Vec<f64> = (0..6).map(|n| (n as f64 + 0.5) * f).collect();
    let mut errors = Vec::new();
    for points in [59, 119, 239] {
        let grid = GridSpec::new(vec![half], vec![points]).unwrap();
        let pot = grid.sample(|r| trap.potential_hz(MASS, r));
        let op = HeffOperator::from_potential(&grid, MASS, &pot).unwrap();
        let basis = solve_lowest_modes(&op, &TridiagonalSolver, &ModeRequest::new(6, f64::INFINITY)).unwrap();
        assert!(basis.orthonormality_error() < 1e-8);
        errors.push(max_error(&basis.energies_hz, &exact));
    }
    for pair in errors.windows(2) {
        assert!(pair[0] / pair[1] >= 3.5, "errors {errors:?}");
    }
}

#[test]
fn one_dimensional_solvers_agree() {
    let grid = GridSpec::new(vec![8e-6], vec![300]).unwrap();
    let pot = grid.sample(|r| 3e12 * r[0] * r[0] + 1e6 * r[0].abs());
    let op = HeffOperator::from_potential(&grid, MASS, &pot).unwrap();
    let req = ModeRequest::new(40, 200.0);
    let solvers: [&dyn ModeSolver; 3] = [&DenseSolver, &TridiagonalSolver, &ChebyshevSubspace::default()];
    let bases: Vec<_> = solvers
        .iter()
        .map(|s| solve_lowest_modes(&op, *s, &req).unwrap())
        .collect();
    for b in &bases[1..] {
        assert_eq!(b.len(), bases[0].len());
        for (x, y) in b.energies_hz.iter().zip(&bases[0].energies_hz) {
            assert!((x - y).abs() < 1e-8 * x.abs().max(1.0));
        }
        // canonical signs make the vectors themselves comparable
        for n in 0..b.len() {
            let diff = b
                .mode(n)
                .iter()
                .zip(bases[0].mode(n))
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max);
            let scale = bases[0].mode(n).iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(diff < 1e-5 * scale, "mode {n}: {diff}");
        }
    }
}

#[test]
fn isotropic_oscillator_shells() {
    let f = 40.0;
    let omega = 2.0 * PI * f;
    let l_osc = (HBAR / (MASS * omega)).sqrt();
    let trap = TrapGeometry::Harmonic { omega: vec![omega; 3] };
    let grid = GridSpec::new(vec![6.0 * l_osc; 3], vec![25; 3]).unwrap();
    let pot = grid.sample(|r| trap.potential_hz(MASS, r));
    let op = HeffOperator::from_potential(&grid, MASS, &pot).unwrap();
    let basis = solve_lowest_modes(&op, &ChebyshevSubspace::default(), &ModeRequest::new(12, f64::INFINITY)).unwrap();
    assert!(basis.orthonormality_error() < 1e-8);
    assert!(basis.max_relative_residual(&op) < 1e-8);

    let mut shells = vec![1usize];
    for w in basis.energies_hz.windows(2) {
        if w[1] - w[0] < 0.05 * f {
            *shells.last_mut().unwrap() += 1;
        } else {
            shells.push(1);
        }
    }
    assert_eq!(&shells[..3], &[1, 3, 6], "{:?}", basis.energies_hz);
    assert!(
        (basis.energies_hz[0] - 1.5 * f).abs() < 0.04 * f,
        "{:?}",
        basis.energies_hz
    );
}

#[test]
fn modes_are_deterministic_for_a_seed() {
    let grid = GridSpec::new(vec![5e-6, 6e-6], vec![40, 44]).unwrap();
    let pot = grid.sample(|r| 1e12 * (r[0] * r[0] + r[1] * r[1]));
    let op = HeffOperator::from_potential(&grid, MASS, &pot).unwrap();
    let req = ModeRequest::new(25, f64::INFINITY);
    let a = solve_lowest_modes(&op, &ChebyshevSubspace::default(), &req).unwrap();
    let b = solve_lowest_modes(&op, &ChebyshevSubspace::default(), &req).unwrap();
    assert_eq!(a.energies_hz, b.energies_hz);
    assert_eq!(a.modes, b.modes);
}

fn rb87_f2() -> SpeciesParams {
    let bohr = 5.291_772_109_03e-11;
    SpeciesParams::build(
        "rb87-f2",
        MASS,
        2,
        &[(0, 87.93 * bohr), (2, 91.28 * bohr), (4, 99.18 * bohr)],
        None,
    )
    .unwrap()
}

#[test]
fn lowest_mode_sits_on_the_mexican_hat_rim() {
    let species = rb87_f2();
    let trap = TrapGeometry::harmonic_hz(&[176.0, 132.0]).unwrap();
    // a 2D condensate: the atom number is per unit length
    let n = 2e10;
    let grid = grid_for(&species, &trap, n, vec![48, 64], 1.3).unwrap();
    let state = solve_tf(&species, &trap, n, &grid).unwrap();
    let fields = effective_fields(&species, &trap, &state).unwrap();
    let op = discretize_heff(&fields, &species, &grid).unwrap();
    let basis = solve_lowest_modes(
        &op,
        &ChebyshevSubspace::default(),
        &ModeRequest::new(1, f64::NEG_INFINITY),
    )
    .unwrap();
    let vmin = fields.v_eff_hz.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(basis.energies_hz[0] >= vmin);

    let phi = basis.mode(0);
    let centre = grid.sample(|r| r.iter().map(|x| x * x).sum::<f64>());
    let centre_idx = (0..grid.len())
        .min_by(|&a, &b| centre[a].partial_cmp(&centre[b]).unwrap())
        .unwrap();
    let rim = (0..grid.len())
        .filter(|&i| fields.v_eff_hz[i] < vmin + 0.1 * (fields.v_eff_hz[centre_idx] - vmin))
        .map(|i| phi[i] * phi[i])
        .fold(0.0, f64::max);
    assert!(
        rim > phi[centre_idx] * phi[centre_idx],
        "rim {rim} centre {} vmin {vmin} vc {} mu {} e0 {}",
        phi[centre_idx].powi(2),
        fields.v_eff_hz[centre_idx],
        state.mu_hz,
        basis.energies_hz[0]
    );
}

#[test]
fn under_resolved_grid_is_rejected() {
    let species = rb87_f2();
    let trap = TrapGeometry::harmonic_hz(&[60.0, 60.0]).unwrap();
    let n = 2e9;
    let grid = grid_for(&species, &trap, n, vec![8, 8], 1.3).unwrap();
    let state = solve_tf(&species, &trap, n, &grid).unwrap();
    let fields = effective_fields(&species, &trap, &state).unwrap();
    match discretize_heff(&fields, &species, &grid) {
        Err(Error::Resolution {
            spacing_m, required_m, ..
        }) => {
            assert!(spacing_m > required_m);
            let peak = fields.omega_eff_hz.iter().cloned().fold(0.0, f64::max);
            let healing = HBAR / (2.0 * MASS * PLANCK * peak).sqrt();
            assert!((required_m - healing / 2.0).abs() < 1e-12 * healing);
        }
        other => panic!("expected a resolution error, got {other:?}"),
    }
}
