//! Free-induction decay, spectra, multiplet integration and the cosine fit.
//!
//! The detected signal is `Tr(ρ(t) M⁺) e^{-t/T2}` with `M⁺ = Σ_k σ⁺_k`. The
//! Hamiltonian is diagonal, so the FID is an exact sum of damped complex
//! exponentials, one per single-quantum matrix element of `ρ`.
//!
//! Spectra use the forward DFT `X_k = Σ_j x_j e^{-2πi jk/N}` without
//! normalization. The frequency axis is the negated DFT frequency, which puts
//! a spin with shift `ν` at `+ν`. Absorption is the real part.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulate::DeviationState;
use crate::spin_system::SpinSystem;

pub const DEFAULT_T2: f64 = 1.0;
pub const DEFAULT_DWELL: f64 = 1e-5;
pub const DEFAULT_POINTS: usize = 1 << 17;
/// Extra half-width added around a multiplet's outermost lines.
pub const WINDOW_MARGIN_HZ: f64 = 50.0;

const COMPONENT_CUTOFF: f64 = 1e-12;

/// One damped exponential of the FID.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidComponent {
    /// Line position on the spectrum axis, Hz.
    pub frequency: f64,
    pub amplitude: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fid {
    samples: Vec<Complex64>,
    dwell: f64,
    t2: f64,
}

impl Fid {
    pub fn new(samples: Vec<Complex64>, dwell: f64, t2: f64) -> Result<Self> {
        if !(dwell > 0.0 && dwell.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dwell must be > 0, got {dwell}"
            )));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "an FID needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        Ok(Self { samples, dwell, t2 })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn dwell(&self) -> f64 {
        self.dwell
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    /// CSV `t_s,real,imag`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,real,imag\n");
        for (j, z) in self.samples.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", j as f64 * self.dwell, z.re, z.im));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    frequencies: Vec<f64>,
    amplitudes: Vec<Complex64>,
}

impl Spectrum {
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Grid spacing in Hz.
    pub fn step(&self) -> f64 {
        self.frequencies[1] - self.frequencies[0]
    }

    pub fn absorption(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.re).collect()
    }

    /// Index of the grid point nearest `freq`.
    pub fn nearest_index(&self, freq: f64) -> usize {
        let i = self.frequencies.partition_point(|&f| f < freq);
        if i == 0 {
            0
        } else if i == self.len() {
            self.len() - 1
        } else if (self.frequencies[i] - freq).abs() < (freq - self.frequencies[i - 1]).abs() {
            i
        } else {
            i - 1
        }
    }

    /// `(1/N) Σ |X_k|²`, equal to the FID energy.
    pub fn energy(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    /// Local maxima of the absorption with height at least `threshold`.
    pub fn peaks(&self, threshold: f64) -> Vec<usize> {
        let a = self.absorption();
        (1..a.len() - 1)
            .filter(|&i| a[i] >= threshold && a[i] > a[i - 1] && a[i] >= a[i + 1])
            .collect()
    }

    /// Full width at half maximum of the peak at `index`, by linear
    /// interpolation of the half-height crossings.
    pub fn fwhm(&self, index: usize) -> Option<f64> {
        let a = self.absorption();
        let half = a[index] / 2.0;
        let f = &self.frequencies;
        let mut lo = index;
        while lo > 0 && a[lo] > half {
            lo -= 1;
        }
        let mut hi = index;
        while hi + 1 < a.len() && a[hi] > half {
            hi += 1;
        }
        if a[lo] > half || a[hi] > half {
            return None;
        }
        let left = f[lo] + (half - a[lo]) / (a[lo + 1] - a[lo]) * (f[lo + 1] - f[lo]);
        let right = f[hi - 1] + (half - a[hi - 1]) / (a[hi] - a[hi - 1]) * (f[hi] - f[hi - 1]);
        Some(right - left)
    }

    /// CSV `freq_hz,real,imag`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,real,imag\n");
        for (f, z) in self.frequencies.iter().zip(&self.amplitudes) {
            out.push_str(&format!("{f},{},{}\n", z.re, z.im));
        }
        out
    }
}

/// Damped exponentials making up the FID of `state`, merged by frequency and
/// sorted ascending.
pub fn fid_components(state: &DeviationState, sys: &SpinSystem) -> Result<Vec<FidComponent>> {
    if state.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: state.dim(),
        });
    }
    let n = sys.n();
    let energies = sys.energies();
    let rho = state.operator();
    let mut raw: Vec<FidComponent> = Vec::new();
    for c in 0..sys.dim() {
        for k in 0..n {
            let bit = 1 << (n - 1 - k);
            if c & bit != 0 {
                continue;
            }
            let r = c | bit;
            let amplitude = rho.get(r, c);
            if amplitude.norm() <= COMPONENT_CUTOFF {
                continue;
            }
            raw.push(FidComponent {
                frequency: (energies[r] - energies[c]) / (2.0 * std::f64::consts::PI),
                amplitude,
            });
        }
    }
    raw.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    let mut merged: Vec<FidComponent> = Vec::new();
    for comp in raw {
        match merged.last_mut() {
            Some(last) if (comp.frequency - last.frequency).abs() < 1e-9 => {
                last.amplitude += comp.amplitude;
            }
            _ => merged.push(comp),
        }
    }
    merged.retain(|c| c.amplitude.norm() > COMPONENT_CUTOFF);
    Ok(merged)
}

/// Samples `Tr(e^{-iHt} ρ e^{iHt} M⁺) e^{-t/t2}` at `t = j·dwell`.
pub fn synthesize_fid(
    state: &DeviationState,
    sys: &SpinSystem,
    t2: f64,
    dwell: f64,
    npoints: usize,
) -> Result<Fid> {
    if t2.is_nan() || t2 <= 0.0 {
        return Err(Error::InvalidParameter(format!("t2 must be > 0, got {t2}")));
    }
    let components = fid_components(state, sys)?;
    let omegas: Vec<(f64, Complex64)> = components
        .iter()
        .map(|c| (2.0 * std::f64::consts::PI * c.frequency, c.amplitude))
        .collect();
    let samples: Vec<Complex64> = (0..npoints)
        .into_par_iter()
        .map(|j| {
            let t = j as f64 * dwell;
            let sum: Complex64 = omegas
                .iter()
                .map(|&(w, a)| a * Complex64::from_polar(1.0, -w * t))
                .sum();
            sum * (-t / t2).exp()
        })
        .collect();
    Fid::new(samples, dwell, t2)
}

pub fn fid_to_spectrum(fid: &Fid) -> Spectrum {
    let n = fid.len();
    let mut buf = fid.samples.clone();
    FftPlanner::<f64>::new()
        .plan_fft_forward(n)
        .process(&mut buf);
    let df = 1.0 / (n as f64 * fid.dwell);
    // bin k has DFT frequency k·df for k < n/2 and (k-n)·df otherwise
    let mut pairs: Vec<(f64, Complex64)> = buf
        .into_iter()
        .enumerate()
        .map(|(k, z)| {
            let signed = if k < n.div_ceil(2) {
                k as f64
            } else {
                k as f64 - n as f64
            };
            (-signed * df, z)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (frequencies, amplitudes) = pairs.into_iter().unzip();
    Spectrum {
        frequencies,
        amplitudes,
    }
}

/// Absorption summed over `[center - halfwidth, center + halfwidth]` times the grid step.
pub fn integrate_multiplet(spec: &Spectrum, center: f64, halfwidth: f64) -> Result<f64> {
    let (low, high) = (center - halfwidth, center + halfwidth);
    let f = spec.frequencies();
    if halfwidth.is_nan() || halfwidth < 0.0 || low < f[0] || high > f[f.len() - 1] {
        return Err(Error::WindowOutOfRange { low, high });
    }
    let start = f.partition_point(|&x| x < low);
    let end = f.partition_point(|&x| x <= high);
    let sum: f64 = spec.amplitudes[start..end].iter().map(|z| z.re).sum();
    Ok(sum * spec.step())
}

/// Window around spin `k`'s multiplet: centered on its shift, wide enough for
/// all of its couplings plus [`WINDOW_MARGIN_HZ`].
pub fn multiplet_window(sys: &SpinSystem, k: usize) -> Result<(f64, f64)> {
    sys.check_spin(k)?;
    let spread: f64 = (1..=sys.n())
        .filter(|&j| j != k)
        .map(|j| sys.coupling(k, j).abs())
        .sum();
    Ok((sys.shift(k), spread / 2.0 + WINDOW_MARGIN_HZ))
}

/// Least-squares fit of `A cos(b x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitResult {
    #[serde(rename = "A")]
    pub amplitude: f64,
    #[serde(rename = "b")]
    pub frequency_scale: f64,
    pub residual: f64,
    #[serde(skip)]
    pub iterations: usize,
}

impl FitResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit result is serializable")
    }
}

const FIT_MAX_ITERATIONS: usize = 200;
const FIT_STEP_TOLERANCE: f64 = 1e-10;

/// Levenberg–Marquardt from `A = max|y|`, `b = 1`.
pub fn fit_cosine(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter(format!(
            "{} abscissae but {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::TooFewPoints(xs.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite fit data".into()));
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::DegenerateAbscissa);
    }
    let a0 = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    if a0 == 0.0 {
        return Err(Error::AmplitudeUnidentifiable);
    }

    let cost = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| (y - a * (b * x).cos()).powi(2))
            .sum()
    };
    let (mut a, mut b) = (a0, 1.0);
    let mut current = cost(a, b);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < FIT_MAX_ITERATIONS {
        iterations += 1;
        let (mut jtj, mut jtr) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
        for (&x, &y) in xs.iter().zip(ys) {
            let (s, c) = (b * x).sin_cos();
            let g = [c, -a * x * s];
            let r = y - a * c;
            for i in 0..2 {
                jtr[i] += g[i] * r;
                for j in 0..2 {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        let m00 = jtj[0][0] * (1.0 + lambda);
        let m11 = jtj[1][1] * (1.0 + lambda);
        let det = m00 * m11 - jtj[0][1] * jtj[1][0];
        if det == 0.0 || !det.is_finite() {
            lambda *= 10.0;
            continue;
        }
        let da = (m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
        let db = (m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
        let trial = cost(a + da, b + db);
        if trial <= current {
            a += da;
            b += db;
            current = trial;
            lambda = (lambda / 10.0).max(1e-12);
        } else {
            lambda *= 10.0;
        }
        if da.abs().max(db.abs()) < FIT_STEP_TOLERANCE {
            break;
        }
    }
    Ok(FitResult {
        amplitude: a,
        frequency_scale: b,
        residual: current.sqrt(),
        iterations,
    })
}
