//! Selective coupling blocks by spin-echo refocusing.
//!
//! A block `[tau]_kl` is split into `m` equal free-evolution segments. Each
//! spin follows a ±1 toggling row over the segments, flipped by π pulses at
//! its sign changes. Rows are Walsh functions: a zero row sum cancels the
//! chemical shift, orthogonal rows cancel the coupling between two spins, and
//! the target pair shares one row so its coupling runs at full speed. The
//! Hamiltonian is diagonal, so all segment terms commute and cancellation is
//! exact rather than first order.
//!
//! Row choice: the target pair takes the sequency-1 row. The other spins, in
//! ascending order, take the lowest unused even-sequency rows first (they
//! begin and end at +1, so need no terminal pulse), then odd ones.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sequence::{Axis, Instruction, PulseSequence};
use crate::spin_system::SpinSystem;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TogglingPattern {
    rows: Vec<Vec<i8>>,
    target_pair: (usize, usize),
    segments: usize,
}

impl TogglingPattern {
    pub fn rows(&self) -> &[Vec<i8>] {
        &self.rows
    }

    /// Row of the 1-based `spin`.
    pub fn row(&self, spin: usize) -> &[i8] {
        &self.rows[spin - 1]
    }

    pub fn target_pair(&self) -> (usize, usize) {
        self.target_pair
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    /// π pulses the 1-based `spin` receives, terminal pulse included.
    pub fn pulse_count(&self, spin: usize) -> usize {
        let row = self.row(spin);
        let flips = row.windows(2).filter(|w| w[0] != w[1]).count();
        flips + usize::from(row[row.len() - 1] < 0)
    }

    /// Checks zero row sums, identical target rows and pairwise orthogonality.
    pub fn satisfies_invariants(&self) -> bool {
        let (k, l) = self.target_pair;
        let n = self.rows.len();
        let dot = |a: &[i8], b: &[i8]| -> i32 {
            a.iter()
                .zip(b)
                .map(|(&x, &y)| i32::from(x) * i32::from(y))
                .sum()
        };
        let sums_ok = self
            .rows
            .iter()
            .all(|r| r[0] == 1 && r.iter().map(|&v| i32::from(v)).sum::<i32>() == 0);
        let target_ok = self.rows[k - 1] == self.rows[l - 1];
        let mut pairs_ok = true;
        for a in 1..=n {
            for b in a + 1..=n {
                if (a, b) == (k.min(l), k.max(l)) {
                    continue;
                }
                pairs_ok &= dot(self.row(a), self.row(b)) == 0;
            }
        }
        sums_ok && target_ok && pairs_ok
    }

    /// Rows as CSV: one line per spin, one ±1 column per segment.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Walsh function of the given sequency (number of sign changes) over `m`
/// points, `m` a power of two.
pub fn walsh_row(sequency: usize, m: usize) -> Vec<i8> {
    let bits = m.trailing_zeros();
    let gray = sequency ^ (sequency >> 1);
    let index = if bits == 0 {
        0
    } else {
        gray.reverse_bits() >> (usize::BITS - bits)
    };
    (0..m)
        .map(|c| {
            if (index & c).count_ones() % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// Smallest segment count used by default for an `n`-spin system: 8, or the
/// next power of two that still supplies enough orthogonal rows.
pub fn default_segments(n: usize) -> usize {
    n.max(2).next_power_of_two().max(8)
}

pub fn toggling_patterns(n: usize, pair: (usize, usize), m: usize) -> Result<TogglingPattern> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::InvalidSegments(m));
    }
    let (k, l) = pair;
    for s in [k, l] {
        if s == 0 || s > n {
            return Err(Error::SpinOutOfRange { spin: s, n });
        }
    }
    if k == l {
        return Err(Error::DuplicateSpins(vec![k, l]));
    }
    let needed = n - 1;
    let available = m - 1;
    if needed > available {
        return Err(Error::InsufficientRows {
            needed,
            available,
            segments: m,
        });
    }
    let mut spare: Vec<usize> = (2..m).filter(|s| s % 2 == 0).collect();
    spare.extend((2..m).filter(|s| s % 2 == 1));
    let mut spare = spare.into_iter();

    let target = walsh_row(1, m);
    let rows = (1..=n)
        .map(|spin| {
            if spin == k || spin == l {
                target.clone()
            } else {
                walsh_row(spare.next().expect("row count checked above"), m)
            }
        })
        .collect();
    Ok(TogglingPattern {
        rows,
        target_pair: pair,
        segments: m,
    })
}

/// Echo schedule realizing `exp(-i (π/2) J_kl tau σz^k σz^l)` up to a global
/// phase: `m` delays of `tau/m` with y-axis π pulses at sign changes and
/// terminal pulses restoring every row to +1.
pub fn refocus_block(
    sys: &SpinSystem,
    pair: (usize, usize),
    tau: f64,
    m: usize,
) -> Result<PulseSequence> {
    let pattern = toggling_patterns(sys.n(), pair, m)?;
    if sys.coupling(pair.0, pair.1) == 0.0 {
        return Err(Error::ZeroCoupling {
            k: pair.0,
            l: pair.1,
        });
    }
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "block duration must be finite and >= 0, got {tau}"
        )));
    }
    let segment = tau / m as f64;
    let rows = pattern.rows();
    let flips_at = |j: usize| -> Vec<usize> {
        (1..=rows.len())
            .filter(|&s| rows[s - 1][j] != rows[s - 1][j - 1])
            .collect()
    };
    let mut seq = PulseSequence::new(format!("refocus-{}-{}", pair.0, pair.1))
        .with_description(format!("[{tau}]_{}{} in {m} segments", pair.0, pair.1));
    for j in 0..m {
        if j > 0 {
            let spins = flips_at(j);
            if !spins.is_empty() {
                seq.push(Instruction::rotation(&spins, Axis::Y, PI));
            }
        }
        seq.push(Instruction::delay(segment));
    }
    let terminal: Vec<usize> = (1..=rows.len())
        .filter(|&s| rows[s - 1][m - 1] < 0)
        .collect();
    if !terminal.is_empty() {
        seq.push(Instruction::rotation(&terminal, Axis::Y, PI));
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{equal_up_to_global_phase, pauli_exponential, PauliString};
    use crate::sequence::sequence_propagator;

    #[test]
    fn two_spin_pattern() {
        let p = toggling_patterns(2, (1, 2), 2).unwrap();
        assert_eq!(p.rows(), &[vec![1, -1], vec![1, -1]]);
        assert!(p.satisfies_invariants());
    }

    #[test]
    fn four_spin_eight_segment_pattern() {
        let p = toggling_patterns(4, (1, 2), 8).unwrap();
        let s12 = vec![1, 1, 1, 1, -1, -1, -1, -1];
        assert_eq!(p.row(1), s12.as_slice());
        assert_eq!(p.row(2), s12.as_slice());
        assert_eq!(p.row(3), &[1, 1, -1, -1, -1, -1, 1, 1]);
        assert_eq!(p.row(4), &[1, -1, -1, 1, 1, -1, -1, 1]);
        // orthogonality by direct summation
        let dot = |a: &[i8], b: &[i8]| {
            a.iter()
                .zip(b)
                .map(|(&x, &y)| x as i32 * y as i32)
                .sum::<i32>()
        };
        for s in 1..=4 {
            assert_eq!(p.row(s).iter().map(|&v| v as i32).sum::<i32>(), 0);
        }
        assert_eq!(dot(p.row(1), p.row(3)), 0);
        assert_eq!(dot(p.row(1), p.row(4)), 0);
        assert_eq!(dot(p.row(3), p.row(4)), 0);
        assert!(p.satisfies_invariants());
        assert_eq!(p.pulse_count(1), 2);
        assert_eq!(p.pulse_count(3), 2);
        assert_eq!(p.pulse_count(4), 4);
    }

    #[test]
    fn pattern_errors() {
        assert!(matches!(
            toggling_patterns(4, (1, 2), 2),
            Err(Error::InsufficientRows { .. })
        ));
        assert!(matches!(
            toggling_patterns(4, (1, 2), 6),
            Err(Error::InvalidSegments(6))
        ));
        assert!(toggling_patterns(4, (1, 5), 8).is_err());
        assert!(toggling_patterns(4, (2, 2), 8).is_err());
    }

    #[test]
    fn walsh_rows_are_sequency_ordered() {
        for m in [2usize, 4, 8, 16, 32] {
            for s in 0..m {
                let row = walsh_row(s, m);
                let changes = row.windows(2).filter(|w| w[0] != w[1]).count();
                assert_eq!(changes, s, "m={m} s={s}");
                assert_eq!(row[0], 1);
            }
        }
    }

    #[test]
    fn every_pair_and_size_satisfies_invariants() {
        for n in 2..=9 {
            let m = default_segments(n);
            for k in 1..=n {
                for l in k + 1..=n {
                    let p = toggling_patterns(n, (k, l), m).unwrap();
                    assert!(p.satisfies_invariants(), "n={n} pair=({k},{l})");
                }
            }
        }
    }

    #[test]
    fn crotonic_block_matches_ideal() {
        let sys = SpinSystem::crotonic_acid();
        let tau = 1.0 / (2.0 * 72.4);
        let block = refocus_block(&sys, (1, 2), tau, 8).unwrap();
        assert_eq!(block.duration(), tau);
        assert!((block.duration() - 6.906e-3).abs() < 1e-6);
        let u = sequence_propagator(&block, &sys).unwrap();
        let ideal = pauli_exponential(
            &PauliString::zz(4, 1, 2).unwrap(),
            std::f64::consts::FRAC_PI_4,
            4,
        )
        .unwrap();
        let v = equal_up_to_global_phase(&u, &ideal, 1e-10).unwrap();
        assert!(v.equal, "deviation {}", v.deviation);

        // spin 1 row [+,+,+,+,-,-,-,-]: one flip plus one terminal pulse
        let pulses_on_1 = block
            .instructions()
            .iter()
            .filter(|i| matches!(i, Instruction::Rotation { spins, .. } if spins.contains(&1)))
            .count();
        assert_eq!(pulses_on_1, 2);
    }

    #[test]
    fn core_block_on_three_four() {
        let sys = SpinSystem::crotonic_acid();
        // π J T = π/4 -> J T = 1/4
        let tau = 0.25 / 41.3;
        let block = refocus_block(&sys, (3, 4), tau, 8).unwrap();
        let u = sequence_propagator(&block, &sys).unwrap();
        let ideal = pauli_exponential(
            &PauliString::zz(4, 3, 4).unwrap(),
            std::f64::consts::PI / 8.0,
            4,
        )
        .unwrap();
        assert!(equal_up_to_global_phase(&u, &ideal, 1e-10).unwrap().equal);
    }

    #[test]
    fn zero_coupling_is_rejected() {
        let sys = SpinSystem::new(vec![10.0, 20.0, 30.0], &[(1, 2, 5.0)], None).unwrap();
        assert!(matches!(
            refocus_block(&sys, (1, 3), 1e-3, 8),
            Err(Error::ZeroCoupling { .. })
        ));
        assert!(refocus_block(&sys, (1, 2), -1e-3, 8).is_err());
    }

    #[test]
    fn csv_export() {
        let p = toggling_patterns(2, (1, 2), 4).unwrap();
        assert_eq!(p.to_csv(), "1,1,-1,-1\n1,1,-1,-1\n");
    }
}
