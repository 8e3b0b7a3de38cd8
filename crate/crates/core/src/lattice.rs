//! Level-N sample index sets and the triple sets that drive recovery.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Axis-aligned box region of interest `Ω = Π_l [lo_l, hi_l]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Roi {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidRoi(format!(
                "bounds must be non-empty and of equal length (got {} and {})",
                lo.len(),
                hi.len()
            )));
        }
        for (l, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !a.is_finite() || !b.is_finite() || a >= b {
                return Err(Error::InvalidRoi(format!(
                    "axis {l}: need finite lo < hi, got [{a}, {b}]"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// `‖Ω‖_{2,sup}`, attained at the corner farthest from the origin.
    pub fn sup_norm(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| a.abs().max(b.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Per-axis `(L_min, L_max)` of `ℤ^d ∩ Ω`.
    pub fn integer_bounds(&self) -> Result<Vec<(i64, i64)>> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| {
                let (lmin, lmax) = (a.ceil() as i64, b.floor() as i64);
                if lmin > lmax {
                    Err(Error::EmptyIntegerSet)
                } else {
                    Ok((lmin, lmax))
                }
            })
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }
}

/// `Λ_{Ω,N}`: integer box `2^N L_{l,min} - M_l <= k_l <= 2^N L_{l,max}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeSet {
    level: u32,
    margins: Vec<u32>,
    integer_bounds: Vec<(i64, i64)>,
    lower: Vec<i64>,
    upper: Vec<i64>,
}

impl LatticeSet {
    pub fn build(roi: &Roi, margins: &[u32], level: u32) -> Result<Self> {
        if margins.len() != roi.dim() {
            return Err(Error::Shape {
                expected: roi.dim(),
                got: margins.len(),
            });
        }
        if margins.contains(&0) {
            return Err(Error::InvalidRoi("support margins must be positive".into()));
        }
        if level > 30 {
            return Err(Error::InvalidRoi(format!(
                "level {level} exceeds the supported maximum 30"
            )));
        }
        let integer_bounds = roi.integer_bounds()?;
        let scale = 1i64 << level;
        let lower = integer_bounds
            .iter()
            .zip(margins)
            .map(|((lmin, _), &m)| scale * lmin - m as i64)
            .collect();
        let upper = integer_bounds
            .iter()
            .map(|(_, lmax)| scale * lmax)
            .collect();
        Ok(Self {
            level,
            margins: margins.to_vec(),
            integer_bounds,
            lower,
            upper,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn margins(&self) -> &[u32] {
        &self.margins
    }

    /// Per-axis `(L_min, L_max)`.
    pub fn integer_bounds(&self) -> &[(i64, i64)] {
        &self.integer_bounds
    }

    pub fn lower(&self) -> &[i64] {
        &self.lower
    }

    pub fn upper(&self) -> &[i64] {
        &self.upper
    }

    pub fn shape(&self) -> Vec<usize> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (b - a + 1) as usize)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.len() == self.dim()
            && k.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| v >= a && v <= b)
    }

    /// Row-major position of `k` (last axis fastest), if it belongs to the set.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        let shape = self.shape();
        let mut idx = 0usize;
        for ((v, a), n) in k.iter().zip(&self.lower).zip(&shape) {
            idx = idx * n + (v - a) as usize;
        }
        Some(idx)
    }

    /// Enumerates every lattice point in row-major order.
    pub fn points(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::with_capacity(self.len());
        let mut current = self.lower.clone();
        if self.is_empty() {
            return out;
        }
        loop {
            out.push(current.clone());
            let mut axis = self.dim();
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if current[axis] < self.upper[axis] {
                    current[axis] += 1;
                    break;
                }
                current[axis] = self.lower[axis];
            }
        }
    }

    pub fn contains_origin(&self) -> bool {
        self.contains(&vec![0; self.dim()])
    }
}

pub fn build_lattice(roi: &Roi, margins: &[u32], level: u32) -> Result<LatticeSet> {
    LatticeSet::build(roi, margins, level)
}

/// Witness that `0 ∉ Λ_{Ω,N}` for every `N >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroExclusion {
    /// Witness axis `l₀` (0-based).
    pub axis: usize,
    /// `q_{l₀} = min{|L_min - M/2|, |L_max|}`, a lower bound on `‖2^{-N} k‖₂`.
    pub bound: f64,
}

/// Checks whether some axis satisfies `2 L_min - M > 0` or `L_max < 0`.
/// When several axes qualify, the one with the largest bound is returned.
pub fn zero_excluded(roi: &Roi, margins: &[u32]) -> Result<Option<ZeroExclusion>> {
    if margins.len() != roi.dim() {
        return Err(Error::Shape {
            expected: roi.dim(),
            got: margins.len(),
        });
    }
    let bounds = roi.integer_bounds()?;
    let mut best: Option<ZeroExclusion> = None;
    for (axis, (&(lmin, lmax), &m)) in bounds.iter().zip(margins).enumerate() {
        if 2 * lmin - m as i64 > 0 || lmax < 0 {
            let bound = (lmin as f64 - 0.5 * m as f64)
                .abs()
                .min((lmax as f64).abs());
            if best.is_none_or(|b| bound > b.bound) {
                best = Some(ZeroExclusion { axis, bound });
            }
        }
    }
    Ok(best)
}

/// A lattice-index-space point with dyadic rational coordinates
/// `numer / 2^denom_log2`. The physical sample location at level `N` is this
/// value times `2^{-N}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScaledPoint {
    numer: Vec<i64>,
    denom_log2: u32,
}

impl ScaledPoint {
    pub fn integer(k: Vec<i64>) -> Self {
        Self {
            numer: k,
            denom_log2: 0,
        }
    }

    pub fn new(numer: Vec<i64>, denom_log2: u32) -> Self {
        Self { numer, denom_log2 }
    }

    pub fn numer(&self) -> &[i64] {
        &self.numer
    }

    pub fn denom_log2(&self) -> u32 {
        self.denom_log2
    }

    pub fn dim(&self) -> usize {
        self.numer.len()
    }

    pub fn is_zero(&self) -> bool {
        self.numer.iter().all(|&v| v == 0)
    }

    /// Coordinates in lattice-index units.
    pub fn coords(&self) -> Vec<f64> {
        let scale = 0.5f64.powi(self.denom_log2 as i32);
        self.numer.iter().map(|&v| v as f64 * scale).collect()
    }

    /// Physical sample location `2^{-level} · point`. Exact for numerators
    /// below `2^53`.
    pub fn sample_location(&self, level: u32) -> Vec<f64> {
        let scale = 0.5f64.powi((self.denom_log2 + level) as i32);
        self.numer.iter().map(|&v| v as f64 * scale).collect()
    }
}

impl fmt::Display for ScaledPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.numer.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            if self.denom_log2 == 0 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}/{}", 1u64 << self.denom_log2)?;
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for ScaledPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut numer = Vec::new();
        let mut denom_log2: Option<u32> = None;
        for part in s.split(';') {
            let (num, den) = match part.split_once('/') {
                Some((n, d)) => (n, d),
                None => (part, "1"),
            };
            let num: i64 = num
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad coordinate '{part}' in '{s}'")))?;
            let den: u64 = den
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator in '{part}'")))?;
            if !den.is_power_of_two() {
                return Err(Error::Parse(format!(
                    "denominator of '{part}' is not a power of two"
                )));
            }
            let log2 = den.trailing_zeros();
            match denom_log2 {
                None => denom_log2 = Some(log2),
                Some(prev) if prev != log2 => {
                    return Err(Error::Parse(format!("mixed denominators in '{s}'")))
                }
                _ => {}
            }
            numer.push(num);
        }
        Ok(Self {
            numer,
            denom_log2: denom_log2.unwrap_or(0),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TripleVariant {
    /// `k' = k + e_axis`, `k'' = k - e_axis` (0-based axis).
    Plane { axis: usize },
    /// `k' = (1 + 2^{-N}) k`, `k'' = (1 - 2^{-N}) k`.
    Spherical,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub k: Vec<i64>,
    pub k1: ScaledPoint,
    pub k2: ScaledPoint,
}

impl Triple {
    /// The three physical sample locations `2^{-N}k, 2^{-N}k', 2^{-N}k''`.
    pub fn sample_locations(&self, level: u32) -> [Vec<f64>; 3] {
        [
            ScaledPoint::integer(self.k.clone()).sample_location(level),
            self.k1.sample_location(level),
            self.k2.sample_location(level),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleSet {
    variant: TripleVariant,
    level: u32,
    triples: Vec<Triple>,
}

impl TripleSet {
    pub fn build(lattice: &LatticeSet, variant: TripleVariant) -> Result<Self> {
        let level = lattice.level();
        let triples = match variant {
            TripleVariant::Plane { axis } => {
                if axis >= lattice.dim() {
                    return Err(Error::Shape {
                        expected: lattice.dim(),
                        got: axis + 1,
                    });
                }
                lattice
                    .points()
                    .into_iter()
                    .map(|k| {
                        let mut up = k.clone();
                        up[axis] += 1;
                        let mut down = k.clone();
                        down[axis] -= 1;
                        Triple {
                            k,
                            k1: ScaledPoint::integer(up),
                            k2: ScaledPoint::integer(down),
                        }
                    })
                    .collect()
            }
            TripleVariant::Spherical => {
                if lattice.contains_origin() {
                    return Err(Error::ZeroInLattice { level });
                }
                let scale = 1i64 << level;
                lattice
                    .points()
                    .into_iter()
                    .map(|k| {
                        let up = k.iter().map(|v| v * (scale + 1)).collect();
                        let down = k.iter().map(|v| v * (scale - 1)).collect();
                        Triple {
                            k,
                            k1: ScaledPoint::new(up, level),
                            k2: ScaledPoint::new(down, level),
                        }
                    })
                    .collect()
            }
        };
        Ok(Self {
            variant,
            level,
            triples,
        })
    }

    pub fn from_parts(variant: TripleVariant, level: u32, triples: Vec<Triple>) -> Self {
        Self {
            variant,
            level,
            triples,
        }
    }

    pub fn variant(&self) -> TripleVariant {
        self.variant
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

pub fn build_triples(lattice: &LatticeSet, variant: TripleVariant) -> Result<TripleSet> {
    TripleSet::build(lattice, variant)
}
