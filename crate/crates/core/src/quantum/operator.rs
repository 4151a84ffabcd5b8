use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use ndarray::Array2;
use num_complex::Complex64;

use super::pauli::{all_pauli_strings, PauliString};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Reporting cutoff for Pauli coefficients.
pub const COEFFICIENT_CUTOFF: f64 = 1e-12;

const HERMITIAN_TOL: f64 = 1e-9;

/// Dense complex operator on `n` spins (dimension `2^n`).
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: Array2<Complex64>,
}

impl Operator {
    pub fn from_array(matrix: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        if rows != cols {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: cols,
            });
        }
        if !rows.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(rows));
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: Array2::eye(dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: Array2::zeros((dim, dim)),
        }
    }

    pub fn identity_on(n_spins: usize) -> Self {
        Self::identity(1 << n_spins)
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Result<Self> {
        let mut op = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            op.matrix[[i, i]] = d;
        }
        Self::from_array(op.matrix)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_spins(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn into_array(self) -> Array2<Complex64> {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[[row, col]]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.t().mapv(|z| z.conj()),
        }
    }

    /// Matrix product `self · other`.
    pub fn dot(&self, other: &Operator) -> Self {
        Self {
            matrix: self.matrix.dot(&other.matrix),
        }
    }

    /// `self · rho · self†`.
    pub fn conjugate(&self, rho: &Operator) -> Self {
        self.dot(rho).dot(&self.adjoint())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            matrix: self.matrix.mapv(|z| z * factor),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.diag().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Entrywise max-norm of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.dot(&self.adjoint())
            .max_abs_diff(&Operator::identity(self.dim()))
            <= tol
    }

    pub fn is_diagonal(&self) -> bool {
        self.matrix
            .indexed_iter()
            .all(|((r, c), z)| r == c || *z == ZERO)
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.matrix
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: f64) -> Operator {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

/// Dense matrix of a Pauli string on `n` spins, spin 1 most significant.
pub fn pauli_matrix(p: &PauliString, n: usize) -> Result<Operator> {
    if p.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: p.len(),
        });
    }
    let dim = 1usize << n;
    let flip = p.flip_mask();
    let coefficient = Complex64::new(p.coefficient(), 0.0);
    let mut matrix = Array2::zeros((dim, dim));
    for row in 0..dim {
        matrix[[row, row ^ flip]] = coefficient * p.row_element(row);
    }
    Ok(Operator { matrix })
}

/// `exp(-i theta P) = cos(theta) I - i sin(theta) P` for a unit-coefficient
/// (±1) Pauli string `P`.
pub fn pauli_exponential(p: &PauliString, theta: f64, n: usize) -> Result<Operator> {
    if p.is_identity() {
        return Err(Error::IdentityGenerator);
    }
    if p.coefficient().abs() != 1.0 {
        return Err(Error::GeneratorCoefficient(p.coefficient()));
    }
    let generator = pauli_matrix(p, n)?;
    let (sin, cos) = theta.sin_cos();
    let mut out = generator.scale(Complex64::new(0.0, -sin));
    for i in 0..out.dim() {
        out.matrix[[i, i]] += cos;
    }
    Ok(out)
}

/// Product of operators with the first element applied first:
/// `ops[last] · … · ops[0]`.
pub fn compose(ops: &[Operator]) -> Result<Operator> {
    let first = ops.first().ok_or(Error::EmptyComposition)?;
    let mut acc = first.clone();
    for op in &ops[1..] {
        if op.dim() != acc.dim() {
            return Err(Error::DimensionMismatch {
                expected: acc.dim(),
                found: op.dim(),
            });
        }
        acc = op.dot(&acc);
    }
    Ok(acc)
}

/// Outcome of a phase-insensitive comparison `a ≈ e^{i phase} b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseVerdict {
    pub equal: bool,
    pub phase: f64,
    pub deviation: f64,
}

/// Compares `a` with `e^{i phase} b` in the entrywise max-norm.
///
/// The phase is read off the entry where `|a_ij|·|b_ij|` peaks (first such
/// index in row-major order), which keeps the verdict symmetric in `a` and `b`.
pub fn equal_up_to_global_phase(a: &Operator, b: &Operator, tol: f64) -> Result<PhaseVerdict> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let b_max = b.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if b_max == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let mut best = 0.0;
    let mut ratio = ONE;
    for (za, zb) in a.matrix.iter().zip(b.matrix.iter()) {
        let weight = za.norm() * zb.norm();
        if weight > best {
            best = weight;
            ratio = za * zb.conj();
        }
    }
    let phase = if best > 0.0 { ratio.arg() } else { 0.0 };
    let rotated = b.scale(Complex64::from_polar(1.0, phase));
    let deviation = a.max_abs_diff(&rotated);
    Ok(PhaseVerdict {
        equal: deviation <= tol,
        phase,
        deviation,
    })
}

/// Real Pauli-basis coefficients of a hermitian operator, keyed by label.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PauliCoefficients {
    n: usize,
    table: BTreeMap<String, f64>,
}

impl PauliCoefficients {
    pub fn n_spins(&self) -> usize {
        self.n
    }

    /// Coefficient for a label such as `"IIXI"`; zero when not reported.
    pub fn get(&self, label: &str) -> f64 {
        self.table.get(label).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.table.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Largest coefficient magnitude among labels not in `labels`.
    pub fn max_excluding(&self, labels: &[&str]) -> f64 {
        self.iter()
            .filter(|(k, _)| !labels.contains(k))
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    /// Σ c_P M(P).
    pub fn reconstruct(&self) -> Result<Operator> {
        let mut acc = Operator::zeros(1 << self.n);
        for (label, c) in self.iter() {
            let p: PauliString = label.parse()?;
            acc = &acc + &(&pauli_matrix(&p, self.n)? * c);
        }
        Ok(acc)
    }
}

/// Coefficients `Tr(op · P) / 2^n` of every Pauli string, keeping `|c| > 1e-12`.
pub fn pauli_coefficients(op: &Operator) -> Result<PauliCoefficients> {
    let herm = op.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let n = op.n_spins();
    let dim = op.dim();
    let mut table = BTreeMap::new();
    for p in all_pauli_strings(n) {
        let flip = p.flip_mask();
        // Tr(op P) = Σ_r op[r, r^f] P[r^f, r]
        let tr: Complex64 = (0..dim)
            .map(|r| op.matrix[[r, r ^ flip]] * p.row_element(r ^ flip))
            .sum();
        let c = tr.re / dim as f64;
        if c.abs() > COEFFICIENT_CUTOFF {
            table.insert(p.label(), c);
        }
    }
    Ok(PauliCoefficients { n, table })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    use super::*;
    use crate::quantum::pauli::Pauli;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Brute-force Kronecker product, independent of the bit-mask construction.
    fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
        let (ar, ac) = a.dim();
        let (br, bc) = b.dim();
        let mut out = Array2::zeros((ar * br, ac * bc));
        for i in 0..ar {
            for j in 0..ac {
                for k in 0..br {
                    for l in 0..bc {
                        out[[i * br + k, j * bc + l]] = a[[i, j]] * b[[k, l]];
                    }
                }
            }
        }
        out
    }

    fn single(p: Pauli) -> Array2<Complex64> {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        let i = c(0.0, 1.0);
        match p {
            Pauli::I => ndarray::arr2(&[[o, z], [z, o]]),
            Pauli::X => ndarray::arr2(&[[z, o], [o, z]]),
            Pauli::Y => ndarray::arr2(&[[z, -i], [i, z]]),
            Pauli::Z => ndarray::arr2(&[[o, z], [z, -o]]),
        }
    }

    fn kron_oracle(p: &PauliString) -> Array2<Complex64> {
        let mut acc = ndarray::arr2(&[[c(p.coefficient(), 0.0)]]);
        for &l in p.letters() {
            acc = kron(&acc, &single(l));
        }
        acc
    }

    #[test]
    fn z_on_first_of_two() {
        let p = PauliString::single(2, 1, Pauli::Z).unwrap();
        let m = pauli_matrix(&p, 2).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| m.get(i, i).re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
        assert!(m.is_diagonal());
    }

    #[test]
    fn single_x() {
        let m = pauli_matrix(&"X".parse().unwrap(), 1).unwrap();
        assert_eq!(m.get(0, 1), c(1.0, 0.0));
        assert_eq!(m.get(1, 0), c(1.0, 0.0));
        assert_eq!(m.get(0, 0), c(0.0, 0.0));
    }

    #[test]
    fn zzzz_is_parity_diagonal() {
        let p: PauliString = "ZZZZ".parse().unwrap();
        let m = pauli_matrix(&p, 4).unwrap();
        let oracle = kron_oracle(&p);
        for i in 0..16 {
            let parity = if (i as u32).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            assert_eq!(m.get(i, i), c(parity, 0.0));
            assert_eq!(oracle[[i, i]], c(parity, 0.0));
        }
        assert!(m.is_diagonal());
    }

    #[test]
    fn matches_kronecker_oracle_for_all_three_spin_strings() {
        for p in all_pauli_strings(3) {
            let p = p.with_coefficient(-0.5);
            let m = pauli_matrix(&p, 3).unwrap();
            assert_eq!(m.matrix(), &kron_oracle(&p), "{p}");
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let p: PauliString = "XX".parse().unwrap();
        assert!(matches!(
            pauli_matrix(&p, 3),
            Err(Error::LengthMismatch {
                expected: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn exponential_special_cases() {
        let x: PauliString = "X".parse().unwrap();
        let id = pauli_exponential(&x, 0.0, 1).unwrap();
        assert_eq!(id, Operator::identity(2));

        let u = pauli_exponential(&x, FRAC_PI_2, 1).unwrap();
        let target = pauli_matrix(&x, 1).unwrap().scale(c(0.0, -1.0));
        assert!(u.max_abs_diff(&target) < 1e-15);

        assert!(matches!(
            pauli_exponential(&"II".parse().unwrap(), 1.0, 2),
            Err(Error::IdentityGenerator)
        ));
        assert!(pauli_exponential(&"0.5*ZZ".parse().unwrap(), 1.0, 2).is_err());
    }

    #[test]
    fn zz_exponential_against_diagonal_oracle() {
        let zz: PauliString = "ZZ".parse().unwrap();
        let u = pauli_exponential(&zz, FRAC_PI_4, 2).unwrap();
        let m = Complex64::from_polar(1.0, -FRAC_PI_4);
        let p = Complex64::from_polar(1.0, FRAC_PI_4);
        let oracle = Operator::from_diagonal(&[m, p, p, m]).unwrap();
        assert!(u.max_abs_diff(&oracle) < 1e-15);
    }

    #[test]
    fn compose_order_and_identities() {
        let x: PauliString = "X".parse().unwrap();
        let u = pauli_exponential(&x, 0.3, 1).unwrap();
        assert_eq!(compose(std::slice::from_ref(&u)).unwrap(), u);
        let round = compose(&[u.clone(), u.adjoint()]).unwrap();
        assert!(round.max_abs_diff(&Operator::identity(2)) < 1e-15);

        let q = pauli_exponential(&x, FRAC_PI_4, 1).unwrap();
        let twice = compose(&[q.clone(), q]).unwrap();
        let target = pauli_matrix(&x, 1).unwrap().scale(c(0.0, -1.0));
        assert!(twice.max_abs_diff(&target) < 1e-15);

        // first element acts first: [A, B] -> B·A
        let a = pauli_matrix(&"X".parse().unwrap(), 1).unwrap();
        let b = pauli_matrix(&"Z".parse().unwrap(), 1).unwrap();
        assert_eq!(compose(&[a.clone(), b.clone()]).unwrap(), b.dot(&a));

        assert!(matches!(compose(&[]), Err(Error::EmptyComposition)));
        assert!(compose(&[Operator::identity(2), Operator::identity(4)]).is_err());
    }

    #[test]
    fn global_phase_examples() {
        let u = pauli_exponential(&"XZ".parse().unwrap(), 0.7, 2).unwrap();
        let shifted = u.scale(Complex64::from_polar(1.0, FRAC_PI_3));
        let v = equal_up_to_global_phase(&shifted, &u, 1e-12).unwrap();
        assert!(v.equal);
        assert!((v.phase - FRAC_PI_3).abs() < 1e-12);
        assert!(v.deviation < 1e-14);
        let v = equal_up_to_global_phase(&u, &shifted, 1e-12).unwrap();
        assert!((v.phase + FRAC_PI_3).abs() < 1e-12);

        let x = pauli_matrix(&"X".parse().unwrap(), 1).unwrap();
        let v = equal_up_to_global_phase(&x.scale(c(0.0, -1.0)), &x, 1e-12).unwrap();
        assert!(v.equal);
        assert!((v.phase + FRAC_PI_2).abs() < 1e-15);

        let mut perturbed = u.clone();
        perturbed.matrix_mut()[[1, 2]] += c(1e-3, 0.0);
        let v = equal_up_to_global_phase(&perturbed, &u, 1e-10).unwrap();
        assert!(!v.equal);
        assert!((v.deviation - 1e-3).abs() < 1e-6);

        assert!(matches!(
            equal_up_to_global_phase(&u, &Operator::zeros(4), 1e-9),
            Err(Error::ZeroOperator)
        ));
    }

    #[test]
    fn coefficient_examples() {
        let sx3 = pauli_matrix(&"IIXI".parse().unwrap(), 4).unwrap();
        let t = pauli_coefficients(&sx3).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("IIXI"), 1.0);

        assert!(pauli_coefficients(&Operator::zeros(8)).unwrap().is_empty());

        // trace inner-product oracle: Tr(M(P) M(Q)) = 2^n δ_PQ
        let op = &pauli_matrix(&"ZZ".parse().unwrap(), 2).unwrap()
            + &pauli_matrix(&"0.5*XI".parse().unwrap(), 2).unwrap();
        let t = pauli_coefficients(&op).unwrap();
        assert_eq!(t.len(), 2);
        assert!((t.get("ZZ") - 1.0).abs() < 1e-15);
        assert!((t.get("XI") - 0.5).abs() < 1e-15);

        let mut bad = Operator::zeros(2);
        bad.matrix_mut()[[0, 1]] = c(1.0, 0.0);
        assert!(matches!(
            pauli_coefficients(&bad),
            Err(Error::NotHermitian(_))
        ));
    }
}
