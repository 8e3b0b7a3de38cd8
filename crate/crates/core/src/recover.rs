//! Per-point 2×2 solves turning three intensities into one complex sample.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::Triple;
use crate::measure::IntensityRecord;
use crate::waves::{degeneracy_threshold, ReferenceWave};

/// Reference-wave differences at one triple.
///
/// `c + id = g(x) - g(x')`, `h + ie = g(x) - g(x'')`, `μ = ce - dh`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveCoefficients {
    pub c: f64,
    pub d: f64,
    pub h: f64,
    pub e: f64,
    pub mu: f64,
    /// `|g|²` at the base point and the two companions.
    pub g_sq: [f64; 3],
}

impl SolveCoefficients {
    pub fn from_values(values: [Complex64; 3]) -> Self {
        let [g0, g1, g2] = values;
        let a = g0 - g1;
        let b = g0 - g2;
        Self {
            c: a.re,
            d: a.im,
            h: b.re,
            e: b.im,
            mu: a.re * b.im - a.im * b.re,
            g_sq: [g0.norm_sqr(), g1.norm_sqr(), g2.norm_sqr()],
        }
    }

    pub fn from_wave(g: &ReferenceWave, level: u32, triple: &Triple) -> Result<Self> {
        Ok(Self::from_values(g.eval_triple(level, triple)?))
    }

    /// Default threshold below which `|μ|` counts as zero.
    pub fn default_tolerance(&self) -> f64 {
        degeneracy_threshold(Complex64::new(self.g_sq[0].sqrt(), 0.0))
    }

    /// Adjugate solve
    /// `[Re; Im] = (1/2μ) [e -d; -h c] [I - I' + |g'|² - |g|²; I - I'' + |g''|² - |g|²]`.
    /// Returns `None` when `|μ| <= tol`.
    pub fn solve(&self, intensities: [f64; 3], tol: f64) -> Option<Complex64> {
        if !(self.mu.abs() > tol) {
            return None;
        }
        let [i0, i1, i2] = intensities;
        let [s0, s1, s2] = self.g_sq;
        let r1 = i0 - i1 + s1 - s0;
        let r2 = i0 - i2 + s2 - s0;
        let scale = 0.5 / self.mu;
        Some(Complex64::new(
            scale * (self.e * r1 - self.d * r2),
            scale * (-self.h * r1 + self.c * r2),
        ))
    }
}

/// Recovers `f(2^{-N}k)` from the intensities of one triple. `tol` overrides
/// the default degeneracy threshold.
pub fn solve_point(
    g: &ReferenceWave,
    level: u32,
    triple: &Triple,
    intensities: [f64; 3],
    tol: Option<f64>,
) -> Result<Complex64> {
    let coeffs = SolveCoefficients::from_wave(g, level, triple)?;
    let tol = tol.unwrap_or_else(|| coeffs.default_tolerance());
    coeffs
        .solve(intensities, tol)
        .ok_or_else(|| Error::DegeneratePoint {
            k: triple.k.clone(),
            mu: coeffs.mu,
        })
}

/// Recovered data `k ↦ f̊(2^{-N}k)` at one level.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecoveredSamples {
    pub level: u32,
    pub values: BTreeMap<Vec<i64>, Complex64>,
    pub mu: BTreeMap<Vec<i64>, f64>,
    /// Degenerate points with their `μ`; excluded from `values`.
    pub skipped: Vec<(Vec<i64>, f64)>,
}

impl RecoveredSamples {
    pub fn new(level: u32) -> Self {
        Self {
            level,
            ..Default::default()
        }
    }

    /// Exact samples `f(2^{-N}k)`, bypassing measurement.
    pub fn from_fn<F>(level: u32, points: &[Vec<i64>], f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let h = 2f64.powi(-(level as i32));
        let values = points
            .iter()
            .map(|k| {
                let x: Vec<f64> = k.iter().map(|&v| v as f64 * h).collect();
                (k.clone(), f(&x))
            })
            .collect();
        Self {
            level,
            values,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, k: &[i64]) -> Option<Complex64> {
        self.values.get(k).copied()
    }

    pub fn skipped_count(&self) -> usize {
        self.skipped.len()
    }
}

pub fn recover_level(
    records: &[IntensityRecord],
    g: &ReferenceWave,
    level: u32,
) -> Result<RecoveredSamples> {
    if let Some(r) = records.iter().find(|r| r.level != level) {
        return Err(Error::Inconsistent(format!(
            "record at level {} in a level-{level} recovery",
            r.level
        )));
    }
    let solved: Vec<(Vec<i64>, f64, Option<Complex64>)> = records
        .par_iter()
        .map(|r| -> Result<_> {
            let coeffs = SolveCoefficients::from_wave(g, level, &r.triple)?;
            let value = coeffs.solve(r.intensities, coeffs.default_tolerance());
            Ok((r.triple.k.clone(), coeffs.mu, value))
        })
        .collect::<Result<_>>()?;
    let mut out = RecoveredSamples::new(level);
    for (k, mu, value) in solved {
        if out.mu.insert(k.clone(), mu).is_some() {
            return Err(Error::Inconsistent(format!(
                "duplicate record for k = {k:?}"
            )));
        }
        match value {
            Some(v) => {
                out.values.insert(k, v);
            }
            None => out.skipped.push((k, mu)),
        }
    }
    out.skipped.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}
