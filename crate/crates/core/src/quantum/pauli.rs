use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Single-spin Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// Whether the letter flips the computational basis bit.
    pub(crate) fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// Matrix element `<row| sigma |row ^ flip>` for a basis bit `row`.
    pub(crate) fn element(self, row_bit: bool) -> Complex64 {
        match (self, row_bit) {
            (Pauli::I, _) | (Pauli::X, _) => Complex64::new(1.0, 0.0),
            (Pauli::Y, false) => Complex64::new(0.0, -1.0),
            (Pauli::Y, true) => Complex64::new(0.0, 1.0),
            (Pauli::Z, false) => Complex64::new(1.0, 0.0),
            (Pauli::Z, true) => Complex64::new(-1.0, 0.0),
        }
    }
}

/// Signed tensor product of Pauli letters, spin 1 leftmost.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    letters: Vec<Pauli>,
    coefficient: f64,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self {
            letters,
            coefficient: 1.0,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![Pauli::I; n])
    }

    /// `letter` on the 1-based `spin`, identity elsewhere.
    pub fn single(n: usize, spin: usize, letter: Pauli) -> Result<Self> {
        Self::from_sites(n, &[(spin, letter)])
    }

    /// Product of sigma_z over the given 1-based spins.
    pub fn z_string(n: usize, spins: &[usize]) -> Result<Self> {
        let sites: Vec<_> = spins.iter().map(|&s| (s, Pauli::Z)).collect();
        Self::from_sites(n, &sites)
    }

    pub fn zz(n: usize, a: usize, b: usize) -> Result<Self> {
        Self::z_string(n, &[a, b])
    }

    pub fn from_sites(n: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut letters = vec![Pauli::I; n];
        for &(spin, letter) in sites {
            if spin == 0 || spin > n {
                return Err(Error::SpinOutOfRange { spin, n });
            }
            if letters[spin - 1] != Pauli::I {
                return Err(Error::DuplicateSpins(sites.iter().map(|s| s.0).collect()));
            }
            letters[spin - 1] = letter;
        }
        Ok(Self::new(letters))
    }

    pub fn with_coefficient(mut self, coefficient: f64) -> Self {
        self.coefficient = coefficient;
        self
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Letters only, e.g. `"IIXI"`.
    pub fn label(&self) -> String {
        self.letters.iter().map(|p| p.as_char()).collect()
    }

    /// Basis-index mask of the bits flipped by this string.
    pub(crate) fn flip_mask(&self) -> usize {
        let n = self.letters.len();
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flips())
            .fold(0, |m, (k, _)| m | (1 << (n - 1 - k)))
    }

    /// Unit-coefficient matrix element `<row| P |row ^ flip_mask>`.
    pub(crate) fn row_element(&self, row: usize) -> Complex64 {
        let n = self.letters.len();
        self.letters
            .iter()
            .enumerate()
            .fold(Complex64::new(1.0, 0.0), |acc, (k, p)| {
                acc * p.element((row >> (n - 1 - k)) & 1 == 1)
            })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficient == 1.0 {
            write!(f, "{}", self.label())
        } else if self.coefficient == -1.0 {
            write!(f, "-{}", self.label())
        } else {
            write!(f, "{}*{}", self.coefficient, self.label())
        }
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts `IIXI`, `-ZZ` or `0.5*XI`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (coefficient, body) = match s.split_once('*') {
            Some((c, body)) => (
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidPauli(s.to_string()))?,
                body.trim(),
            ),
            None => match s.strip_prefix('-') {
                Some(body) => (-1.0, body),
                None => (1.0, s.strip_prefix('+').unwrap_or(s)),
            },
        };
        if body.is_empty() {
            return Err(Error::InvalidPauli(s.to_string()));
        }
        let letters = body
            .chars()
            .map(Pauli::from_char)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidPauli(s.to_string()))?;
        Ok(Self {
            letters,
            coefficient,
        })
    }
}

/// Iterator over all `4^n` unit-coefficient strings in lexicographic I<X<Y<Z order.
pub fn all_pauli_strings(n: usize) -> impl Iterator<Item = PauliString> {
    (0..4usize.pow(n as u32)).map(move |mut code| {
        let mut letters = vec![Pauli::I; n];
        for k in (0..n).rev() {
            letters[k] = Pauli::ALL[code % 4];
            code /= 4;
        }
        PauliString::new(letters)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let p: PauliString = "IIXI".parse().unwrap();
        assert_eq!(p.label(), "IIXI");
        assert_eq!(p.coefficient(), 1.0);
        let m: PauliString = "-ZZ".parse().unwrap();
        assert_eq!(m.coefficient(), -1.0);
        assert_eq!(m.to_string(), "-ZZ");
        let h: PauliString = "0.5*XI".parse().unwrap();
        assert_eq!(h.coefficient(), 0.5);
        assert!("IQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }

    #[test]
    fn site_constructors() {
        assert_eq!(PauliString::single(4, 3, Pauli::X).unwrap().label(), "IIXI");
        assert_eq!(PauliString::zz(4, 1, 2).unwrap().label(), "ZZII");
        assert!(PauliString::single(2, 3, Pauli::X).is_err());
        assert!(PauliString::zz(3, 2, 2).is_err());
    }

    #[test]
    fn enumeration_is_complete_and_ordered() {
        let all: Vec<_> = all_pauli_strings(2).map(|p| p.label()).collect();
        assert_eq!(all.len(), 16);
        assert_eq!(all[0], "II");
        assert_eq!(all[1], "IX");
        assert_eq!(all[15], "ZZ");
    }
}
