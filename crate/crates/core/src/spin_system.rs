//! Molecule model: chemical shifts, scalar couplings and the static
//! Hamiltonian
//!
//! ```text
//! H = -π Σ_k ν_k σz^k + (π/2) Σ_{k<l} J_kl σz^k σz^l      [rad/s]
//! ```
//!
//! Molecule files are TOML with the keys `n`, `shifts_hz`, `couplings_hz`
//! (triples `[k, l, J]`, 1-based, each unordered pair at most once) and an
//! optional `labels` array.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::quantum::Operator;

const CROTONIC_ACID: &str = include_str!("../molecules/crotonic-acid.toml");

/// Names accepted by [`SpinSystem::preset`].
pub const PRESETS: &[&str] = &["crotonic-acid"];

#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem {
    shifts: Vec<f64>,
    couplings: Vec<Vec<f64>>,
    labels: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MoleculeDocument {
    n: Option<i64>,
    shifts_hz: Option<Vec<f64>>,
    couplings_hz: Option<Vec<(i64, i64, f64)>>,
    labels: Option<Vec<String>>,
}

impl SpinSystem {
    /// Builds a system from shifts (Hz) and 1-based coupling triples (Hz).
    pub fn new(
        shifts: Vec<f64>,
        couplings: &[(usize, usize, f64)],
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = shifts.len();
        if n == 0 {
            return Err(Error::InvalidDocument(
                "a system needs at least one spin".into(),
            ));
        }
        if let Some(bad) = shifts.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidDocument(format!("non-finite shift {bad}")));
        }
        let mut table = vec![vec![0.0; n]; n];
        let mut seen = vec![vec![false; n]; n];
        for &(k, l, j) in couplings {
            if k == 0 || l == 0 || k > n || l > n || k == l {
                return Err(Error::CouplingOutOfRange { k, l, n });
            }
            if !j.is_finite() {
                return Err(Error::InvalidDocument(format!(
                    "non-finite coupling J_{k}{l}"
                )));
            }
            let (a, b) = (k - 1, l - 1);
            if seen[a][b] {
                let first = table[a][b];
                return Err(if first == j {
                    Error::DuplicateCoupling { k, l }
                } else {
                    Error::AsymmetricCoupling {
                        k: l,
                        l: k,
                        first,
                        second: j,
                    }
                });
            }
            seen[a][b] = true;
            seen[b][a] = true;
            table[a][b] = j;
            table[b][a] = j;
        }
        let labels = match labels {
            Some(labels) if labels.len() != n => {
                return Err(Error::InvalidDocument(format!(
                    "{} labels for {n} spins",
                    labels.len()
                )))
            }
            Some(labels) => labels,
            None => (1..=n).map(|k| format!("S{k}")).collect(),
        };
        Ok(Self {
            shifts,
            couplings: table,
            labels,
        })
    }

    /// Parses a TOML molecule document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: MoleculeDocument =
            toml::from_str(text).map_err(|e| Error::InvalidDocument(e.message().to_string()))?;
        let n = doc.n.ok_or(Error::MissingField("n"))?;
        let shifts = doc.shifts_hz.ok_or(Error::MissingField("shifts_hz"))?;
        let couplings = doc
            .couplings_hz
            .ok_or(Error::MissingField("couplings_hz"))?;
        if n < 1 || shifts.len() as i64 != n {
            return Err(Error::InvalidDocument(format!(
                "n = {n} but {} shifts given",
                shifts.len()
            )));
        }
        let mut triples = Vec::with_capacity(couplings.len());
        for (k, l, j) in couplings {
            if k < 1 || l < 1 {
                return Err(Error::CouplingOutOfRange {
                    k: k.max(0) as usize,
                    l: l.max(0) as usize,
                    n: n as usize,
                });
            }
            triples.push((k as usize, l as usize, j));
        }
        Self::new(shifts, &triples, doc.labels)
    }

    /// Bundled molecule by name.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "crotonic-acid" => Self::from_toml_str(CROTONIC_ACID),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    pub fn crotonic_acid() -> Self {
        Self::preset("crotonic-acid").expect("bundled preset is valid")
    }

    /// A preset name or a path to a TOML document.
    pub fn load(spec: &str) -> Result<Self> {
        if PRESETS.contains(&spec) {
            return Self::preset(spec);
        }
        let path = Path::new(spec);
        if !path.exists() {
            return Err(Error::UnknownPreset(spec.to_string()));
        }
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn n(&self) -> usize {
        self.shifts.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n()
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    /// Shift of the 1-based spin `k` in Hz.
    pub fn shift(&self, k: usize) -> f64 {
        self.shifts[k - 1]
    }

    /// Coupling between 1-based spins `k` and `l` in Hz (zero on the diagonal).
    pub fn coupling(&self, k: usize, l: usize) -> f64 {
        self.couplings[k - 1][l - 1]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Nonzero couplings as 1-based `(k, l, J)` with `k < l`.
    pub fn coupling_list(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for k in 0..n {
            for l in k + 1..n {
                if self.couplings[k][l] != 0.0 {
                    out.push((k + 1, l + 1, self.couplings[k][l]));
                }
            }
        }
        out
    }

    pub fn check_spin(&self, spin: usize) -> Result<()> {
        if spin == 0 || spin > self.n() {
            return Err(Error::SpinOutOfRange { spin, n: self.n() });
        }
        Ok(())
    }

    pub fn with_scaled_shifts(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.shifts.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Copy keeping only the coupling between `k` and `l`.
    pub fn with_only_coupling(&self, k: usize, l: usize) -> Self {
        let mut out = self.clone();
        let j = self.coupling(k, l);
        out.couplings.iter_mut().for_each(|row| row.fill(0.0));
        out.couplings[k - 1][l - 1] = j;
        out.couplings[l - 1][k - 1] = j;
        out
    }

    /// Diagonal of the Hamiltonian in rad/s, indexed by basis state.
    pub fn energies(&self) -> Vec<f64> {
        let n = self.n();
        let z = |state: usize, k: usize| -> f64 {
            if (state >> (n - 1 - k)) & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        };
        (0..self.dim())
            .map(|state| {
                let mut e = 0.0;
                for k in 0..n {
                    e -= PI * self.shifts[k] * z(state, k);
                    for l in k + 1..n {
                        e += 0.5 * PI * self.couplings[k][l] * z(state, k) * z(state, l);
                    }
                }
                e
            })
            .collect()
    }

    pub fn hamiltonian(&self) -> Operator {
        let diag: Vec<Complex64> = self
            .energies()
            .into_iter()
            .map(|e| Complex64::new(e, 0.0))
            .collect();
        Operator::from_diagonal(&diag).expect("dimension is a power of two")
    }

    /// `exp(-i H tau)`.
    pub fn free_evolution(&self, tau: f64) -> Operator {
        let diag: Vec<Complex64> = self
            .energies()
            .into_iter()
            .map(|e| Complex64::from_polar(1.0, -e * tau))
            .collect();
        Operator::from_diagonal(&diag).expect("dimension is a power of two")
    }
}

/// Target four-spin interaction `exp(-i (π/2) J_eff T σz σz σz σz)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourBodyTarget {
    /// 1-based physical spins, logical order.
    pub spins: [usize; 4],
    /// Effective strength in Hz.
    pub j_eff: f64,
    /// Duration in seconds.
    pub duration: f64,
}

impl FourBodyTarget {
    pub fn new(spins: [usize; 4], j_eff: f64, duration: f64) -> Self {
        Self {
            spins,
            j_eff,
            duration,
        }
    }

    /// Target on spins 1..4 with `π J_eff T = pi_jt`.
    pub fn from_pi_jt(pi_jt: f64, j_eff: f64) -> Self {
        Self::new([1, 2, 3, 4], j_eff, pi_jt / (PI * j_eff))
    }

    /// `J_eff · T` (dimensionless).
    pub fn jt(&self) -> f64 {
        self.j_eff * self.duration
    }

    pub fn pi_jt(&self) -> f64 {
        PI * self.jt()
    }

    /// Generator angle `(π/2) J_eff T`.
    pub fn angle(&self) -> f64 {
        0.5 * PI * self.jt()
    }

    pub fn validate(&self, sys: &SpinSystem) -> Result<()> {
        for &s in &self.spins {
            sys.check_spin(s)?;
        }
        for i in 0..4 {
            for j in i + 1..4 {
                if self.spins[i] == self.spins[j] {
                    return Err(Error::DuplicateSpins(self.spins.to_vec()));
                }
            }
        }
        if !self.jt().is_finite() {
            return Err(Error::InvalidParameter("J_eff·T must be finite".into()));
        }
        Ok(())
    }
}
