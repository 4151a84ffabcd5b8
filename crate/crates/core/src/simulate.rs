//! Deviation-density-matrix dynamics.
//!
//! States are traceless hermitian matrices in the `σ` normalization: the
//! thermal state is `Σ_k σz^k` and `⟨P⟩ = Tr(ρ P) / 2^n`, so a state equal to
//! a Pauli string reads 1 on that string.

use std::f64::consts::{FRAC_PI_2, PI};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::decompose::{
    compile_four_body, CompileOptions, FourBodyRealization, Variant, DEFAULT_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::quantum::{
    pauli_coefficients, pauli_exponential, pauli_matrix, Operator, Pauli, PauliCoefficients,
    PauliString,
};
use crate::refocus::{default_segments, refocus_block};
use crate::sequence::{
    coupling_tau, instruction_propagator, Axis, Instruction, PulseSequence, Realization,
};
use crate::spin_system::{FourBodyTarget, SpinSystem};

const STATE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationState {
    matrix: Operator,
}

impl DeviationState {
    /// Checks hermiticity and tracelessness within 1e-9.
    pub fn from_operator(matrix: Operator) -> Result<Self> {
        let herm = matrix.hermiticity_error();
        if herm > STATE_TOLERANCE {
            return Err(Error::NotHermitian(herm));
        }
        let tr = matrix.trace().norm();
        if tr > STATE_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "deviation state must be traceless, trace magnitude {tr:e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn from_pauli(p: &PauliString) -> Result<Self> {
        if p.is_identity() {
            return Err(Error::IdentityGenerator);
        }
        Self::from_operator(pauli_matrix(p, p.len())?)
    }

    pub fn zero(n: usize) -> Self {
        Self {
            matrix: Operator::zeros(1 << n),
        }
    }

    pub fn operator(&self) -> &Operator {
        &self.matrix
    }

    pub fn n_spins(&self) -> usize {
        self.matrix.n_spins()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn pauli_coefficients(&self) -> PauliCoefficients {
        pauli_coefficients(&self.matrix).expect("states stay hermitian")
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.frobenius_norm()
    }

    /// `Σ w_i ρ_i` over states of equal dimension.
    pub fn linear_combination(terms: &[(f64, &DeviationState)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or(Error::EmptyComposition)?;
        let mut acc = Operator::zeros(first.dim());
        for (w, s) in terms {
            if s.dim() != acc.dim() {
                return Err(Error::DimensionMismatch {
                    expected: acc.dim(),
                    found: s.dim(),
                });
            }
            acc = &acc + &(&s.matrix * *w);
        }
        Ok(Self { matrix: acc })
    }

    fn conjugated(&self, u: &Operator) -> Self {
        Self {
            matrix: u.conjugate(&self.matrix),
        }
    }
}

/// Phenomenological pulse and relaxation errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorModel {
    /// Multiplier on every rotation angle.
    pub angle_scale: f64,
    /// Factor applied to every transverse Pauli component after each instruction.
    pub damping: f64,
}

impl Default for ErrorModel {
    fn default() -> Self {
        Self::IDEAL
    }
}

impl ErrorModel {
    pub const IDEAL: ErrorModel = ErrorModel {
        angle_scale: 1.0,
        damping: 1.0,
    };

    pub fn new(angle_scale: f64, damping: f64) -> Result<Self> {
        if !(angle_scale.is_finite() && angle_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "angle_scale must be > 0, got {angle_scale}"
            )));
        }
        if !(damping > 0.0 && damping <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "damping must lie in (0, 1], got {damping}"
            )));
        }
        Ok(Self {
            angle_scale,
            damping,
        })
    }

    pub fn is_ideal(&self) -> bool {
        *self == Self::IDEAL
    }
}

/// `Σ_k σz^k`.
pub fn thermal_deviation_state(sys: &SpinSystem) -> DeviationState {
    let n = sys.n();
    let diag: Vec<Complex64> = (0..sys.dim())
        .map(|s: usize| Complex64::new(n as f64 - 2.0 * s.count_ones() as f64, 0.0))
        .collect();
    DeviationState {
        matrix: Operator::from_diagonal(&diag).expect("dimension is a power of two"),
    }
}

/// Keeps only elements between basis states of equal total magnetization.
pub fn gradient_crush(state: &DeviationState) -> DeviationState {
    let mut out = state.clone();
    for ((r, c), z) in out.matrix.matrix_mut().indexed_iter_mut() {
        if r.count_ones() != c.count_ones() {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// `[π/2]_y` on every spin but `target`, gradient, `[π/2]_y` on `target`.
pub fn preparation_sequence(n: usize, target: usize) -> PulseSequence {
    let others: Vec<usize> = (1..=n).filter(|&s| s != target).collect();
    let mut seq = PulseSequence::new(format!("prepare-x{target}"));
    if !others.is_empty() {
        seq.push(Instruction::rotation(&others, Axis::Y, FRAC_PI_2));
    }
    seq.push(Instruction::Gradient);
    seq.push(Instruction::pulse(target, Axis::Y, FRAC_PI_2));
    seq
}

/// `σx` on spin 3 of a four-spin system.
pub fn prepare_initial_state(sys: &SpinSystem) -> Result<DeviationState> {
    if sys.n() != 4 {
        return Err(Error::InvalidParameter(format!(
            "the four-spin preparation needs 4 spins, got {}",
            sys.n()
        )));
    }
    prepare_state_on(sys, 3)
}

/// `σx` on `target` from thermal equilibrium.
pub fn prepare_state_on(sys: &SpinSystem, target: usize) -> Result<DeviationState> {
    sys.check_spin(target)?;
    apply_sequence(
        &thermal_deviation_state(sys),
        &preparation_sequence(sys.n(), target),
        sys,
        &ErrorModel::IDEAL,
    )
}

fn damp(state: &mut DeviationState, factor: f64) {
    if factor == 1.0 {
        return;
    }
    // transverse Pauli strings are exactly the off-diagonal matrix elements
    for ((r, c), z) in state.matrix.matrix_mut().indexed_iter_mut() {
        if r != c {
            *z *= factor;
        }
    }
}

fn step(
    state: &DeviationState,
    instr: &Instruction,
    sys: &SpinSystem,
    err: &ErrorModel,
) -> Result<DeviationState> {
    let mut next = match instr {
        Instruction::Gradient => gradient_crush(state),
        Instruction::Rotation {
            spins,
            axis,
            angle,
            duration,
        } => {
            let scaled = Instruction::Rotation {
                spins: spins.clone(),
                axis: *axis,
                angle: angle * err.angle_scale,
                duration: *duration,
            };
            state.conjugated(&instruction_propagator(&scaled, sys)?)
        }
        Instruction::CouplingBlock {
            pair,
            amount,
            realization: Realization::Compiled,
        } => {
            instr.validate()?;
            let tau = coupling_tau(sys, *pair, *amount)?;
            if tau < 0.0 {
                return Err(Error::NegativeDuration {
                    k: pair.0,
                    l: pair.1,
                    tau,
                });
            }
            let block = refocus_block(sys, *pair, tau, default_segments(sys.n()))?;
            return apply_sequence(state, &block, sys, err);
        }
        other => state.conjugated(&instruction_propagator(other, sys)?),
    };
    damp(&mut next, err.damping);
    Ok(next)
}

/// Runs `seq` on `state`. Gradients are allowed; compiled coupling blocks are
/// expanded so every echo pulse sees the error model.
pub fn apply_sequence(
    state: &DeviationState,
    seq: &PulseSequence,
    sys: &SpinSystem,
    err: &ErrorModel,
) -> Result<DeviationState> {
    if state.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: state.dim(),
        });
    }
    let mut current = state.clone();
    for instr in seq.instructions() {
        current = step(&current, instr, sys, err)?;
    }
    Ok(current)
}

/// `Tr(ρ P) / 2^n`.
pub fn expectation(state: &DeviationState, p: &PauliString) -> Result<f64> {
    if p.len() != state.n_spins() {
        return Err(Error::LengthMismatch {
            expected: state.n_spins(),
            found: p.len(),
        });
    }
    let m = pauli_matrix(p, p.len())?;
    Ok(state.matrix.dot(&m).trace().re / state.dim() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EvolutionMode {
    Analytic,
    CompiledIdeal,
    CompiledRefocused,
}

impl EvolutionMode {
    pub const ALL: [EvolutionMode; 3] = [
        EvolutionMode::Analytic,
        EvolutionMode::CompiledIdeal,
        EvolutionMode::CompiledRefocused,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EvolutionMode::Analytic => "analytic",
            EvolutionMode::CompiledIdeal => "compiled-ideal",
            EvolutionMode::CompiledRefocused => "compiled-refocused",
        }
    }
}

impl FromStr for EvolutionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown mode {s:?}")))
    }
}

/// Evolution under the four-spin interaction with the variant A program.
/// The analytic mode ignores the error model.
pub fn evolve_four_body(
    state: &DeviationState,
    sys: &SpinSystem,
    target: &FourBodyTarget,
    mode: EvolutionMode,
    err: &ErrorModel,
) -> Result<DeviationState> {
    evolve_four_body_with(
        state,
        sys,
        target,
        mode,
        err,
        Variant::A,
        &CompileOptions::default(),
    )
}

pub fn evolve_four_body_with(
    state: &DeviationState,
    sys: &SpinSystem,
    target: &FourBodyTarget,
    mode: EvolutionMode,
    err: &ErrorModel,
    variant: Variant,
    opts: &CompileOptions,
) -> Result<DeviationState> {
    target.validate(sys)?;
    let realization = match mode {
        EvolutionMode::Analytic => {
            let zzzz = PauliString::z_string(sys.n(), &target.spins)?;
            let u = pauli_exponential(&zzzz, target.angle(), sys.n())?;
            return Ok(state.conjugated(&u));
        }
        EvolutionMode::CompiledIdeal => FourBodyRealization::Ideal,
        EvolutionMode::CompiledRefocused => FourBodyRealization::Refocused,
    };
    let report = compile_four_body(sys, target, variant, realization, DEFAULT_TOLERANCE, opts)?;
    apply_sequence(state, &report.sequence, sys, err)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub pi_jt: f64,
    pub expectation: f64,
    pub mode: EvolutionMode,
}

/// `⟨σx^3⟩` after preparing `σx^3` and evolving for each duration in `durations`.
pub fn sweep_four_body(
    sys: &SpinSystem,
    j_eff: f64,
    durations: &[f64],
    mode: EvolutionMode,
    err: &ErrorModel,
) -> Result<Vec<SweepPoint>> {
    let labelled: Vec<(f64, FourBodyTarget)> = durations
        .iter()
        .map(|&t| (PI * j_eff * t, FourBodyTarget::new([1, 2, 3, 4], j_eff, t)))
        .collect();
    run_sweep(sys, &labelled, mode, err)
}

/// [`sweep_four_body`] over `π J_eff T` values, recorded exactly as given.
pub fn sweep_pi_jt(
    sys: &SpinSystem,
    j_eff: f64,
    pi_jt: &[f64],
    mode: EvolutionMode,
    err: &ErrorModel,
) -> Result<Vec<SweepPoint>> {
    let labelled: Vec<(f64, FourBodyTarget)> = pi_jt
        .iter()
        .map(|&x| (x, FourBodyTarget::from_pi_jt(x, j_eff)))
        .collect();
    run_sweep(sys, &labelled, mode, err)
}

fn run_sweep(
    sys: &SpinSystem,
    points: &[(f64, FourBodyTarget)],
    mode: EvolutionMode,
    err: &ErrorModel,
) -> Result<Vec<SweepPoint>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let initial = prepare_initial_state(sys)?;
    let observable = PauliString::single(4, 3, Pauli::X)?;
    points
        .par_iter()
        .map(|(x, target)| {
            let evolved = evolve_four_body(&initial, sys, target, mode, err)?;
            Ok(SweepPoint {
                pi_jt: *x,
                expectation: expectation(&evolved, &observable)?,
                mode,
            })
        })
        .collect()
}

/// CSV with header `pi_J_T,expectation_sx3,mode`, rows in input order.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("pi_J_T,expectation_sx3,mode\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            p.pi_jt,
            p.expectation,
            p.mode.as_str()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    use super::*;

    fn crotonic() -> SpinSystem {
        SpinSystem::crotonic_acid()
    }

    fn pauli(label: &str) -> PauliString {
        label.parse().unwrap()
    }

    #[test]
    fn thermal_states() {
        let one = SpinSystem::new(vec![0.0], &[], None).unwrap();
        let s = thermal_deviation_state(&one);
        assert_eq!(s.operator().get(0, 0).re, 1.0);
        assert_eq!(s.operator().get(1, 1).re, -1.0);

        let two = SpinSystem::new(vec![0.0, 0.0], &[], None).unwrap();
        let d: Vec<f64> = (0..4)
            .map(|i| thermal_deviation_state(&two).operator().get(i, i).re)
            .collect();
        assert_eq!(d, vec![2.0, 0.0, 0.0, -2.0]);

        let c = thermal_deviation_state(&crotonic()).pauli_coefficients();
        assert_eq!(c.len(), 4);
        for l in ["ZIII", "IZII", "IIZI", "IIIZ"] {
            assert!((c.get(l) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_examples() {
        let x1 = DeviationState::from_pauli(&pauli("XI")).unwrap();
        assert_eq!(gradient_crush(&x1).frobenius_norm(), 0.0);
        let z3 = DeviationState::from_pauli(&pauli("IIZI")).unwrap();
        assert_eq!(gradient_crush(&z3), z3);
        let xx = DeviationState::from_pauli(&pauli("XX")).unwrap();
        let c = gradient_crush(&xx).pauli_coefficients();
        assert!((c.get("XX") - 0.5).abs() < 1e-15);
        assert!((c.get("YY") - 0.5).abs() < 1e-15);
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn preparation() {
        let sys = crotonic();
        let c = prepare_initial_state(&sys).unwrap().pauli_coefficients();
        assert!((c.get("IIXI") - 1.0).abs() < 1e-12);
        assert!(c.max_excluding(&["IIXI"]) < 1e-10);

        let no_grad: PulseSequence = preparation_sequence(4, 3)
            .instructions()
            .iter()
            .filter(|i| i.is_unitary())
            .cloned()
            .collect();
        let c = apply_sequence(
            &thermal_deviation_state(&sys),
            &no_grad,
            &sys,
            &ErrorModel::IDEAL,
        )
        .unwrap()
        .pauli_coefficients();
        for l in ["XIII", "IXII", "IIXI", "IIIX"] {
            assert!((c.get(l) - 1.0).abs() < 1e-12, "{l}");
        }

        let c = prepare_state_on(&sys, 1).unwrap().pauli_coefficients();
        assert!((c.get("XIII") - 1.0).abs() < 1e-12);
        assert!(c.max_excluding(&["XIII"]) < 1e-10);

        let three = SpinSystem::new(vec![0.0; 3], &[], None).unwrap();
        assert!(prepare_initial_state(&three).is_err());
    }

    #[test]
    fn pi_y_flips_x() {
        let sys = crotonic();
        let x3 = DeviationState::from_pauli(&pauli("IIXI")).unwrap();
        let seq = PulseSequence::from_instructions("", vec![Instruction::pulse(3, Axis::Y, PI)]);
        let c = apply_sequence(&x3, &seq, &sys, &ErrorModel::IDEAL)
            .unwrap()
            .pauli_coefficients();
        assert!((c.get("IIXI") + 1.0).abs() < 1e-12);
    }

    #[test]
    fn damping_scales_transverse_terms() {
        let sys = crotonic();
        let start = DeviationState::linear_combination(&[
            (1.0, &DeviationState::from_pauli(&pauli("IIXI")).unwrap()),
            (0.5, &DeviationState::from_pauli(&pauli("ZIII")).unwrap()),
        ])
        .unwrap();
        let seq = PulseSequence::from_instructions("", vec![Instruction::pulse(1, Axis::Z, 0.3)]);
        let err = ErrorModel::new(1.0, 0.9).unwrap();
        let c = apply_sequence(&start, &seq, &sys, &err)
            .unwrap()
            .pauli_coefficients();
        assert!((c.get("IIXI") - 0.9).abs() < 1e-12);
        assert!((c.get("ZIII") - 0.5).abs() < 1e-12);
    }

    #[test]
    fn error_model_validation() {
        assert!(ErrorModel::new(0.0, 1.0).is_err());
        assert!(ErrorModel::new(1.0, 0.0).is_err());
        assert!(ErrorModel::new(1.0, 1.1).is_err());
        assert!(ErrorModel::new(1.01, 0.999).is_ok());
    }

    #[test]
    fn expectation_examples() {
        let x3 = DeviationState::from_pauli(&pauli("IIXI")).unwrap();
        assert!((expectation(&x3, &pauli("IIXI")).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(expectation(&x3, &pauli("IIYI")).unwrap(), 0.0);
        assert!(expectation(&x3, &pauli("XI")).is_err());
    }

    #[test]
    fn four_body_modes() {
        let sys = crotonic();
        let x3 = prepare_initial_state(&sys).unwrap();
        for mode in EvolutionMode::ALL {
            let s = evolve_four_body(
                &x3,
                &sys,
                &FourBodyTarget::from_pi_jt(0.0, 1.0),
                mode,
                &ErrorModel::IDEAL,
            )
            .unwrap();
            assert!(s.operator().max_abs_diff(x3.operator()) < 1e-9, "{mode:?}");

            let c = evolve_four_body(
                &x3,
                &sys,
                &FourBodyTarget::from_pi_jt(FRAC_PI_2, 1.0),
                mode,
                &ErrorModel::IDEAL,
            )
            .unwrap()
            .pauli_coefficients();
            assert!((c.get("ZZYZ") - 1.0).abs() < 1e-9, "{mode:?}");
            assert!(c.max_excluding(&["ZZYZ"]) < 1e-9);

            let c = evolve_four_body(
                &x3,
                &sys,
                &FourBodyTarget::from_pi_jt(FRAC_PI_4, 1.0),
                mode,
                &ErrorModel::IDEAL,
            )
            .unwrap()
            .pauli_coefficients();
            assert!((c.get("IIXI") - FRAC_1_SQRT_2).abs() < 1e-9);
            assert!((c.get("ZZYZ") - FRAC_1_SQRT_2).abs() < 1e-9);

            let s = evolve_four_body(
                &x3,
                &sys,
                &FourBodyTarget::from_pi_jt(PI / 3.0, 1.0),
                mode,
                &ErrorModel::IDEAL,
            )
            .unwrap();
            assert!((expectation(&s, &pauli("IIXI")).unwrap() - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn sweep_grid() {
        let sys = crotonic();
        let grid: Vec<f64> = (0..=8).map(|n| n as f64 * FRAC_PI_4).collect();
        let pts = sweep_pi_jt(
            &sys,
            1.0,
            &grid,
            EvolutionMode::Analytic,
            &ErrorModel::IDEAL,
        )
        .unwrap();
        for (p, x) in pts.iter().zip(&grid) {
            assert_eq!(p.pi_jt, *x);
            assert!((p.expectation - x.cos()).abs() < 1e-9);
        }
        assert!(
            sweep_four_body(&sys, 1.0, &[], EvolutionMode::Analytic, &ErrorModel::IDEAL)
                .unwrap()
                .is_empty()
        );
        let csv = sweep_csv(&pts[..1]);
        assert_eq!(csv, "pi_J_T,expectation_sx3,mode\n0,1,analytic\n");
    }

    #[test]
    fn durations_sweep_matches_angle_sweep() {
        let sys = crotonic();
        let pts = sweep_four_body(
            &sys,
            2.0,
            &[0.125],
            EvolutionMode::CompiledIdeal,
            &ErrorModel::IDEAL,
        )
        .unwrap();
        assert!((pts[0].pi_jt - FRAC_PI_4).abs() < 1e-15);
        assert!((pts[0].expectation - FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn invalid_states() {
        let not_herm = Operator::from_array(ndarray::array![
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]
        ])
        .unwrap();
        assert!(DeviationState::from_operator(not_herm).is_err());
        assert!(DeviationState::from_operator(Operator::identity(2)).is_err());
        assert!(DeviationState::from_pauli(&pauli("II")).is_err());
    }
}
