//! Native instruction set: selective rotations, J-coupling blocks, free
//! evolution and a z-gradient crusher.
//!
//! A rotation `[θ]_a` on spin `k` evolves as `exp(-i (θ/2) σ_a^k)`, with the
//! sign of a negative axis absorbed into the generator, so `[π/2]_{-y}` is
//! `exp(+i (π/4) σ_y)`. Instruction lists run in temporal order: the first
//! instruction acts first.

mod text;

use std::f64::consts::PI;

pub use text::parse_sequence;

use crate::error::{Error, Result};
use crate::quantum::{pauli_exponential, Operator, Pauli, PauliString};
use crate::refocus;
use crate::spin_system::SpinSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
    MinusX,
    MinusY,
    MinusZ,
}

impl Axis {
    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X | Axis::MinusX => Pauli::X,
            Axis::Y | Axis::MinusY => Pauli::Y,
            Axis::Z | Axis::MinusZ => Pauli::Z,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Axis::X | Axis::Y | Axis::Z => 1.0,
            _ => -1.0,
        }
    }

    pub fn negated(self) -> Axis {
        match self {
            Axis::X => Axis::MinusX,
            Axis::Y => Axis::MinusY,
            Axis::Z => Axis::MinusZ,
            Axis::MinusX => Axis::X,
            Axis::MinusY => Axis::Y,
            Axis::MinusZ => Axis::Z,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::MinusX => "-x",
            Axis::MinusY => "-y",
            Axis::MinusZ => "-z",
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        Some(match s {
            "x" | "+x" => Axis::X,
            "y" | "+y" => Axis::Y,
            "z" | "+z" => Axis::Z,
            "-x" => Axis::MinusX,
            "-y" => Axis::MinusY,
            "-z" => Axis::MinusZ,
            _ => return None,
        })
    }
}

/// How much ZZ evolution a coupling block carries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CouplingAmount {
    /// Evolution time under the pair's own J, giving angle `π J tau / 2`.
    Tau(f64),
    /// Generator angle directly; hardware-independent.
    Angle(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Realization {
    /// Exact `exp(-i θ σz σz)` on the pair.
    Ideal,
    /// Echo schedule from [`refocus::refocus_block`] under the full Hamiltonian.
    Compiled,
}

impl Realization {
    pub fn as_str(self) -> &'static str {
        match self {
            Realization::Ideal => "ideal",
            Realization::Compiled => "compiled",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    Rotation {
        spins: Vec<usize>,
        axis: Axis,
        angle: f64,
        /// Nominal duration for bookkeeping only; pulses act instantaneously.
        duration: f64,
    },
    CouplingBlock {
        pair: (usize, usize),
        amount: CouplingAmount,
        realization: Realization,
    },
    FreeDelay {
        tau: f64,
    },
    Gradient,
}

impl Instruction {
    pub fn rotation(spins: &[usize], axis: Axis, angle: f64) -> Self {
        Instruction::Rotation {
            spins: spins.to_vec(),
            axis,
            angle,
            duration: 0.0,
        }
    }

    pub fn pulse(spin: usize, axis: Axis, angle: f64) -> Self {
        Self::rotation(&[spin], axis, angle)
    }

    pub fn coupling_tau(k: usize, l: usize, tau: f64) -> Self {
        Instruction::CouplingBlock {
            pair: (k, l),
            amount: CouplingAmount::Tau(tau),
            realization: Realization::Ideal,
        }
    }

    pub fn coupling_angle(k: usize, l: usize, angle: f64) -> Self {
        Instruction::CouplingBlock {
            pair: (k, l),
            amount: CouplingAmount::Angle(angle),
            realization: Realization::Ideal,
        }
    }

    pub fn delay(tau: f64) -> Self {
        Instruction::FreeDelay { tau }
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, Instruction::Gradient)
    }

    /// Structural checks independent of any spin system.
    pub fn validate(&self) -> Result<()> {
        let finite_tau = |tau: f64| {
            if tau.is_finite() && tau >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "tau must be finite and >= 0, got {tau}"
                )))
            }
        };
        match self {
            Instruction::Rotation {
                spins,
                angle,
                duration,
                ..
            } => {
                if spins.is_empty() {
                    return Err(Error::InvalidParameter("rotation without spins".into()));
                }
                let mut sorted = spins.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != spins.len() {
                    return Err(Error::DuplicateSpins(spins.clone()));
                }
                if !angle.is_finite() {
                    return Err(Error::InvalidParameter(format!("non-finite angle {angle}")));
                }
                finite_tau(*duration)
            }
            Instruction::CouplingBlock { pair, amount, .. } => {
                if pair.0 == pair.1 {
                    return Err(Error::DuplicateSpins(vec![pair.0, pair.1]));
                }
                match amount {
                    CouplingAmount::Tau(tau) => finite_tau(*tau),
                    CouplingAmount::Angle(a) if a.is_finite() => Ok(()),
                    CouplingAmount::Angle(a) => {
                        Err(Error::InvalidParameter(format!("non-finite angle {a}")))
                    }
                }
            }
            Instruction::FreeDelay { tau } => finite_tau(*tau),
            Instruction::Gradient => Ok(()),
        }
    }

    fn check_spins(&self, sys: &SpinSystem) -> Result<()> {
        match self {
            Instruction::Rotation { spins, .. } => {
                spins.iter().try_for_each(|&s| sys.check_spin(s))
            }
            Instruction::CouplingBlock { pair, .. } => {
                sys.check_spin(pair.0)?;
                sys.check_spin(pair.1)
            }
            _ => Ok(()),
        }
    }

    /// Contribution to the sequence duration. Angle-specified coupling blocks
    /// carry no intrinsic time and count as zero.
    pub fn duration(&self, gradient_duration: f64) -> f64 {
        match self {
            Instruction::Rotation { duration, .. } => *duration,
            Instruction::CouplingBlock {
                amount: CouplingAmount::Tau(tau),
                ..
            } => *tau,
            Instruction::CouplingBlock { .. } => 0.0,
            Instruction::FreeDelay { tau } => *tau,
            Instruction::Gradient => gradient_duration,
        }
    }
}

/// Ordered program of instructions plus descriptive metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PulseSequence {
    pub name: String,
    pub description: String,
    instructions: Vec<Instruction>,
}

impl PulseSequence {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn from_instructions(name: impl Into<String>, instructions: Vec<Instruction>) -> Self {
        Self {
            name: name.into(),
            description: String::new(),
            instructions,
        }
    }

    pub fn push(&mut self, instruction: Instruction) {
        self.instructions.push(instruction);
    }

    pub fn extend(&mut self, other: &PulseSequence) {
        self.instructions.extend(other.instructions.iter().cloned());
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn into_instructions(self) -> Vec<Instruction> {
        self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn has_gradient(&self) -> bool {
        self.instructions.iter().any(|i| !i.is_unitary())
    }

    /// Order-reversed program with every rotation axis and coupling angle
    /// negated. Timed blocks and delays cannot run backwards and are rejected.
    pub fn inverse(&self) -> Result<PulseSequence> {
        let mut out = PulseSequence::new(format!("{}-inverse", self.name));
        for instr in self.instructions.iter().rev() {
            out.push(match instr {
                Instruction::Rotation {
                    spins,
                    axis,
                    angle,
                    duration,
                } => Instruction::Rotation {
                    spins: spins.clone(),
                    axis: axis.negated(),
                    angle: *angle,
                    duration: *duration,
                },
                Instruction::CouplingBlock {
                    pair,
                    amount: CouplingAmount::Angle(a),
                    realization: Realization::Ideal,
                } => Instruction::coupling_angle(pair.0, pair.1, -a),
                Instruction::Gradient => return Err(Error::NonUnitary),
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "cannot time-reverse {other:?}"
                    )))
                }
            });
        }
        Ok(out)
    }

    /// Total duration with zero-length gradients.
    pub fn duration(&self) -> f64 {
        self.duration_with(0.0)
    }

    pub fn duration_with(&self, gradient_duration: f64) -> f64 {
        exact_sum(
            self.instructions
                .iter()
                .map(|i| i.duration(gradient_duration)),
        )
    }
}

impl FromIterator<Instruction> for PulseSequence {
    fn from_iter<T: IntoIterator<Item = Instruction>>(iter: T) -> Self {
        Self::from_instructions("", iter.into_iter().collect())
    }
}

/// Correctly rounded floating-point sum (Shewchuk partials).
fn exact_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut kept = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    partials.iter().sum()
}

/// `exp(-i (θ/2) s σ_a)` on each listed spin, `s` the axis sign.
pub(crate) fn rotation_propagator(
    spins: &[usize],
    axis: Axis,
    angle: f64,
    n: usize,
) -> Result<Operator> {
    let mut acc = Operator::identity_on(n);
    for &spin in spins {
        let p = PauliString::single(n, spin, axis.pauli())?.with_coefficient(axis.sign());
        acc = pauli_exponential(&p, angle / 2.0, n)?.dot(&acc);
    }
    Ok(acc)
}

/// ZZ generator angle of a coupling block on `sys`.
pub fn coupling_angle(sys: &SpinSystem, pair: (usize, usize), amount: CouplingAmount) -> f64 {
    match amount {
        CouplingAmount::Angle(a) => a,
        CouplingAmount::Tau(tau) => 0.5 * PI * sys.coupling(pair.0, pair.1) * tau,
    }
}

/// Evolution time realizing a coupling block on `sys`.
pub fn coupling_tau(sys: &SpinSystem, pair: (usize, usize), amount: CouplingAmount) -> Result<f64> {
    match amount {
        CouplingAmount::Tau(tau) => Ok(tau),
        CouplingAmount::Angle(a) => {
            let j = sys.coupling(pair.0, pair.1);
            if j == 0.0 {
                return Err(Error::ZeroCoupling {
                    k: pair.0,
                    l: pair.1,
                });
            }
            Ok(2.0 * a / (PI * j))
        }
    }
}

pub fn instruction_propagator(instr: &Instruction, sys: &SpinSystem) -> Result<Operator> {
    instr.validate()?;
    instr.check_spins(sys)?;
    let n = sys.n();
    match instr {
        Instruction::Rotation {
            spins, axis, angle, ..
        } => rotation_propagator(spins, *axis, *angle, n),
        Instruction::CouplingBlock {
            pair,
            amount,
            realization: Realization::Ideal,
        } => {
            let zz = PauliString::zz(n, pair.0, pair.1)?;
            pauli_exponential(&zz, coupling_angle(sys, *pair, *amount), n)
        }
        Instruction::CouplingBlock {
            pair,
            amount,
            realization: Realization::Compiled,
        } => {
            let tau = coupling_tau(sys, *pair, *amount)?;
            if tau < 0.0 {
                return Err(Error::NegativeDuration {
                    k: pair.0,
                    l: pair.1,
                    tau,
                });
            }
            let block = refocus::refocus_block(sys, *pair, tau, refocus::default_segments(n))?;
            sequence_propagator(&block, sys)
        }
        Instruction::FreeDelay { tau } => Ok(sys.free_evolution(*tau)),
        Instruction::Gradient => Err(Error::NonUnitary),
    }
}

/// Propagator of a gradient-free sequence, first instruction applied first.
pub fn sequence_propagator(seq: &PulseSequence, sys: &SpinSystem) -> Result<Operator> {
    if seq.has_gradient() {
        return Err(Error::NonUnitary);
    }
    let mut acc = Operator::identity(sys.dim());
    for instr in seq.instructions() {
        acc = instruction_propagator(instr, sys)?.dot(&acc);
    }
    Ok(acc)
}

pub fn sequence_duration(seq: &PulseSequence) -> f64 {
    seq.duration()
}
