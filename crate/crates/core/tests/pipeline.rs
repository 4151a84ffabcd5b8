use std::f64::consts::{FRAC_PI_2, PI};

use isingc_core::decompose::{compile_four_body, CompileOptions, FourBodyRealization, Variant};
use isingc_core::quantum::{equal_up_to_global_phase, PauliString};
use isingc_core::sequence::{parse_sequence, sequence_propagator};
use isingc_core::simulate::{
    evolve_four_body, prepare_initial_state, sweep_csv, sweep_pi_jt, DeviationState, ErrorModel,
    EvolutionMode,
};
use isingc_core::spectro::{
    fid_to_spectrum, fit_cosine, integrate_multiplet, multiplet_window, synthesize_fid, Spectrum,
    DEFAULT_DWELL, DEFAULT_POINTS, DEFAULT_T2,
};
use isingc_core::{FourBodyTarget, SpinSystem};

fn spectrum(state: &DeviationState, sys: &SpinSystem) -> Spectrum {
    fid_to_spectrum(&synthesize_fid(state, sys, DEFAULT_T2, DEFAULT_DWELL, DEFAULT_POINTS).unwrap())
}

#[test]
fn multiplet_ratios() {
    let sys = SpinSystem::crotonic_acid();
    let (center, half) = multiplet_window(&sys, 3).unwrap();
    let initial = prepare_initial_state(&sys).unwrap();
    let reference = integrate_multiplet(&spectrum(&initial, &sys), center, half).unwrap();
    assert!(reference > 0.0);
    assert_eq!(
        integrate_multiplet(&spectrum(&initial, &sys), center, half).unwrap() / reference,
        1.0
    );

    let evolved = evolve_four_body(
        &initial,
        &sys,
        &FourBodyTarget::from_pi_jt(PI / 3.0, 1.0),
        EvolutionMode::CompiledRefocused,
        &ErrorModel::IDEAL,
    )
    .unwrap();
    let ratio = integrate_multiplet(&spectrum(&evolved, &sys), center, half).unwrap() / reference;
    assert!((ratio - 0.5).abs() < 0.02, "ratio {ratio}");

    let antiphase = DeviationState::from_pauli(&"ZZYZ".parse::<PauliString>().unwrap()).unwrap();
    let ratio = integrate_multiplet(&spectrum(&antiphase, &sys), center, half).unwrap() / reference;
    assert!(ratio.abs() < 0.02, "antiphase ratio {ratio}");
}

#[test]
fn listing_round_trip_preserves_the_program() {
    let sys = SpinSystem::crotonic_acid();
    let target = FourBodyTarget::from_pi_jt(FRAC_PI_2, 1.0);
    let r = compile_four_body(
        &sys,
        &target,
        Variant::A,
        FourBodyRealization::Refocused,
        1e-10,
        &CompileOptions::default(),
    )
    .unwrap();
    let text = r.sequence.to_string();
    let back = parse_sequence(&text).unwrap();
    assert_eq!(back, r.sequence);
    let u = sequence_propagator(&back, &sys).unwrap();
    let v = sequence_propagator(&r.sequence, &sys).unwrap();
    assert!(equal_up_to_global_phase(&u, &v, 1e-15).unwrap().equal);
}

#[test]
fn sweep_then_fit() {
    let sys = SpinSystem::crotonic_acid();
    let grid: Vec<f64> = (0..=8).map(|n| n as f64 * PI / 4.0).collect();
    let pts = sweep_pi_jt(
        &sys,
        1.0,
        &grid,
        EvolutionMode::CompiledIdeal,
        &ErrorModel::IDEAL,
    )
    .unwrap();
    let csv = sweep_csv(&pts);
    assert_eq!(csv.lines().count(), 10);
    assert!(csv.starts_with("pi_J_T,expectation_sx3,mode\n"));
    let again = sweep_csv(
        &sweep_pi_jt(
            &sys,
            1.0,
            &grid,
            EvolutionMode::CompiledIdeal,
            &ErrorModel::IDEAL,
        )
        .unwrap(),
    );
    assert_eq!(csv, again);

    let ys: Vec<f64> = pts.iter().map(|p| p.expectation).collect();
    let fit = fit_cosine(&grid, &ys).unwrap();
    assert!((fit.amplitude - 1.0).abs() < 1e-9);
    assert!((fit.frequency_scale - 1.0).abs() < 1e-9);
}

#[test]
fn molecule_file_matches_preset() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/molecules/crotonic-acid.toml");
    let from_file = SpinSystem::load(path).unwrap();
    assert_eq!(from_file, SpinSystem::crotonic_acid());
    assert_eq!(from_file.coupling(4, 3), 41.3);
}
