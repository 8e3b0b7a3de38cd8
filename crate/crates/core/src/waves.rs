//! Plane and spherical reference waves, the per-triple uniqueness
//! determinant `μ`, admissibility ratios and closed-form certificates.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::lattice::{zero_excluded, Roi, Triple, TripleSet, TripleVariant};

/// `a e^{iK·x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneWave {
    amplitude: f64,
    wavevector: Vec<f64>,
}

impl PlaneWave {
    pub fn new(amplitude: f64, wavevector: Vec<f64>) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidWave(format!(
                "amplitude must be positive, got {amplitude}"
            )));
        }
        if wavevector.is_empty() || wavevector.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidWave(
                "wavevector must be non-empty and finite".into(),
            ));
        }
        Ok(Self {
            amplitude,
            wavevector,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn wavevector(&self) -> &[f64] {
        &self.wavevector
    }

    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.wavevector.len() {
            return Err(Error::Shape {
                expected: self.wavevector.len(),
                got: x.len(),
            });
        }
        let phase: f64 = self.wavevector.iter().zip(x).map(|(k, v)| k * v).sum();
        Ok(Complex64::from_polar(self.amplitude, phase))
    }
}

/// `(a / ‖x‖₂) e^{iν‖x‖₂}`, undefined at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalWave {
    amplitude: f64,
    wavenumber: f64,
}

impl SphericalWave {
    pub fn new(amplitude: f64, wavenumber: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidWave(format!(
                "amplitude must be positive, got {amplitude}"
            )));
        }
        if wavenumber == 0.0 || !wavenumber.is_finite() {
            return Err(Error::InvalidWave(format!(
                "wavenumber must be finite and nonzero, got {wavenumber}"
            )));
        }
        Ok(Self {
            amplitude,
            wavenumber,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok(Complex64::from_polar(
            self.amplitude / r,
            self.wavenumber * r,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveFamily {
    Plane,
    Spherical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum ReferenceWave {
    Plane(PlaneWave),
    Spherical(SphericalWave),
}

impl ReferenceWave {
    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        match self {
            ReferenceWave::Plane(w) => w.eval(x),
            ReferenceWave::Spherical(w) => w.eval(x),
        }
    }

    pub fn family(&self) -> WaveFamily {
        match self {
            ReferenceWave::Plane(_) => WaveFamily::Plane,
            ReferenceWave::Spherical(_) => WaveFamily::Spherical,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match self {
            ReferenceWave::Plane(w) => w.amplitude(),
            ReferenceWave::Spherical(w) => w.amplitude(),
        }
    }

    /// Wave values at the three sample locations of a triple.
    pub fn eval_triple(&self, level: u32, triple: &Triple) -> Result<[Complex64; 3]> {
        let [x0, x1, x2] = triple.sample_locations(level);
        Ok([self.eval(&x0)?, self.eval(&x1)?, self.eval(&x2)?])
    }
}

impl From<PlaneWave> for ReferenceWave {
    fn from(w: PlaneWave) -> Self {
        ReferenceWave::Plane(w)
    }
}

impl From<SphericalWave> for ReferenceWave {
    fn from(w: SphericalWave) -> Self {
        ReferenceWave::Spherical(w)
    }
}

pub fn eval_wave(g: &ReferenceWave, x: &[f64]) -> Result<Complex64> {
    g.eval(x)
}

/// `μ = -Im[(g(x) - g(x')) (conj g(x) - conj g(x''))]`.
pub fn mu_from_values(values: [Complex64; 3]) -> f64 {
    let [g0, g1, g2] = values;
    -((g0 - g1) * (g0.conj() - g2.conj())).im
}

pub fn mu(g: &ReferenceWave, level: u32, triple: &Triple) -> Result<f64> {
    Ok(mu_from_values(g.eval_triple(level, triple)?))
}

/// `|μ|` at or below this value is treated as zero.
pub fn degeneracy_threshold(g_at_k: Complex64) -> f64 {
    1e-12 * g_at_k.norm_sqr().max(1.0)
}

/// Per-triple admissibility ratio
/// `max{|g(x)-g(x')|, |g(x)-g(x'')|} / |μ|`, infinite when `μ` vanishes.
pub fn triple_ratio(values: [Complex64; 3]) -> f64 {
    let [g0, g1, g2] = values;
    let m = mu_from_values(values).abs();
    if m <= degeneracy_threshold(g0) {
        return f64::INFINITY;
    }
    (g0 - g1).norm().max((g0 - g2).norm()) / m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub level: u32,
    /// Exact maximum of the per-triple ratio over the triple set.
    pub ratio: f64,
    /// `g(x) != g(x')` and `g(x) != g(x'')` on every triple.
    pub distinct: bool,
    /// `sup |g|` over all sampled locations.
    pub sup_amplitude: f64,
    pub min_abs_mu: f64,
    /// Base index of the triple attaining the maximum.
    pub worst_k: Option<Vec<i64>>,
    pub triple_count: usize,
    /// Closed-form certificate, when the wave comes from a certified design.
    pub certificate: Option<f64>,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.distinct && self.ratio.is_finite()
    }
}

struct TripleStats {
    ratio: f64,
    k: Vec<i64>,
    distinct: bool,
    sup: f64,
    min_mu: f64,
}

impl TripleStats {
    fn merge(self, other: TripleStats) -> TripleStats {
        let take_other =
            other.ratio > self.ratio || (other.ratio == self.ratio && other.k < self.k);
        let (ratio, k) = if take_other {
            (other.ratio, other.k)
        } else {
            (self.ratio, self.k)
        };
        TripleStats {
            ratio,
            k,
            distinct: self.distinct && other.distinct,
            sup: self.sup.max(other.sup),
            min_mu: self.min_mu.min(other.min_mu),
        }
    }
}

pub fn admissibility_ratio(
    g: &ReferenceWave,
    level: u32,
    triples: &TripleSet,
) -> Result<AdmissibilityReport> {
    if triples.is_empty() {
        return Err(Error::Inconsistent("triple set is empty".into()));
    }
    let stats = triples
        .triples()
        .par_iter()
        .map(|t| -> Result<TripleStats> {
            let values = g.eval_triple(level, t)?;
            let [g0, g1, g2] = values;
            Ok(TripleStats {
                ratio: triple_ratio(values),
                k: t.k.clone(),
                distinct: g0 != g1 && g0 != g2,
                sup: g0.norm().max(g1.norm()).max(g2.norm()),
                min_mu: mu_from_values(values).abs(),
            })
        })
        .try_reduce_with(|a, b| Ok(a.merge(b)))
        .expect("non-empty")?;
    Ok(AdmissibilityReport {
        level,
        ratio: stats.ratio,
        distinct: stats.distinct,
        sup_amplitude: stats.sup,
        min_abs_mu: stats.min_mu,
        worst_k: Some(stats.k),
        triple_count: triples.len(),
        certificate: None,
    })
}

/// Certificate for a plane wave with amplitude `a` and axis wavenumber
/// `K = 2π/λ` on `k ± e_axis` triples:
/// `γ = 1 / (2a |sin(2^{-N}K) sin²(2^{-N-1}K)|)`.
pub fn plane_certificate(amplitude: f64, axis_wavenumber: f64, level: u32) -> Result<f64> {
    let theta = axis_wavenumber * 0.5f64.powi(level as i32);
    let cycles = theta / (2.0 * PI);
    if (cycles - cycles.round()).abs() <= 1e-12 {
        return Err(Error::Certificate {
            level,
            reason: format!("2^-N/lambda = {cycles} is an integer"),
        });
    }
    let product = (theta.sin() * (0.5 * theta).sin().powi(2)).abs();
    if product <= 1e-15 {
        return Err(Error::Certificate {
            level,
            reason: format!("sine product vanishes at phase step {theta}"),
        });
    }
    Ok(1.0 / (2.0 * amplitude * product))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalCertificate {
    pub alpha: f64,
    pub beta: f64,
    pub bound: f64,
}

/// Certificate for a spherical wave on dilation triples over a zero-excluded
/// ROI. With `given = None` the tightest level-`N` constants are used:
/// `α = 2^{-N}|ν| q`, `β = 9√d(2^N‖Ω‖ + M) / (2^{N+3} a)`.
/// The bound is `β / (sin α sin²(α/2))`.
pub fn spherical_certificate(
    amplitude: f64,
    wavenumber: f64,
    roi: &Roi,
    margins: &[u32],
    level: u32,
    given: Option<(f64, f64)>,
) -> Result<SphericalCertificate> {
    let fail = |reason: String| Error::Certificate { level, reason };
    if level == 0 {
        return Err(fail("level must be at least 1".into()));
    }
    let witness = zero_excluded(roi, margins)?
        .ok_or_else(|| fail("zero not excluded from the lattice".into()))?;
    let d = roi.dim() as f64;
    let m = *margins.iter().max().expect("non-empty") as f64;
    let scale = (1u64 << level) as f64;
    let nu = wavenumber.abs();
    let extent = d.sqrt() * (scale * roi.sup_norm() + m);
    let middle = nu * witness.bound / scale;
    let upper = nu * extent / (scale * scale);
    let required_beta = 9.0 * extent / (8.0 * scale * amplitude);
    let (alpha, beta) = given.unwrap_or((middle, required_beta));
    let slack = 1.0 + 1e-12;
    if !(alpha > 0.0) || alpha > middle * slack {
        return Err(fail(format!(
            "item (i): need 0 < alpha <= 2^-N |nu| q = {middle}, got alpha = {alpha}"
        )));
    }
    if upper > FRAC_PI_2 * slack {
        return Err(fail(format!(
            "item (i): 2^-2N |nu| sqrt(d) (2^N |Omega| + M) = {upper} exceeds pi/2"
        )));
    }
    if !(beta > 0.0) || required_beta > beta * slack {
        return Err(fail(format!(
            "item (ii): need beta >= {required_beta}, got beta = {beta}"
        )));
    }
    let bound = beta / (alpha.sin() * (0.5 * alpha).sin().powi(2));
    Ok(SphericalCertificate { alpha, beta, bound })
}

/// Level-indexed reference wave schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "design")]
pub enum WaveDesign {
    /// `g_N(x) = e^{i 2^{N-2} θ π (x_1 + … + x_d)}`.
    DyadicPlane { theta: f64 },
    /// `g_N(x) = e^{i 2^N ε ‖x‖₂} / ‖x‖₂`.
    DyadicSpherical { epsilon: f64 },
    /// `g_N(x) = a e^{i 2^{growth·N} K·x}`.
    CustomPlane {
        amplitude: f64,
        wavevector: Vec<f64>,
        growth: f64,
    },
    /// `g_N(x) = (a/‖x‖) e^{i 2^{growth·N} ν ‖x‖}`.
    CustomSpherical {
        amplitude: f64,
        wavenumber: f64,
        growth: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSequence {
    pub design: WaveDesign,
    pub dim: usize,
}

impl WaveSequence {
    pub fn dyadic_plane(dim: usize, theta: f64) -> Self {
        Self {
            design: WaveDesign::DyadicPlane { theta },
            dim,
        }
    }

    pub fn dyadic_spherical(dim: usize, epsilon: f64) -> Self {
        Self {
            design: WaveDesign::DyadicSpherical { epsilon },
            dim,
        }
    }

    pub fn family(&self) -> WaveFamily {
        match self.design {
            WaveDesign::DyadicPlane { .. } | WaveDesign::CustomPlane { .. } => WaveFamily::Plane,
            WaveDesign::DyadicSpherical { .. } | WaveDesign::CustomSpherical { .. } => {
                WaveFamily::Spherical
            }
        }
    }

    pub fn provenance(&self) -> &'static str {
        match self.design {
            WaveDesign::DyadicPlane { .. } => "dyadic-plane",
            WaveDesign::DyadicSpherical { .. } => "dyadic-spherical",
            _ => "custom",
        }
    }

    /// Triple variant matching the family (plane triples along `axis`).
    pub fn natural_variant(&self, axis: usize) -> TripleVariant {
        match self.family() {
            WaveFamily::Plane => TripleVariant::Plane { axis },
            WaveFamily::Spherical => TripleVariant::Spherical,
        }
    }

    pub fn wave_at(&self, level: u32) -> Result<ReferenceWave> {
        let n = level as f64;
        match &self.design {
            WaveDesign::DyadicPlane { theta } => {
                let k = 2f64.powf(n - 2.0) * theta * PI;
                Ok(PlaneWave::new(1.0, vec![k; self.dim])?.into())
            }
            WaveDesign::DyadicSpherical { epsilon } => {
                Ok(SphericalWave::new(1.0, 2f64.powf(n) * epsilon)?.into())
            }
            WaveDesign::CustomPlane {
                amplitude,
                wavevector,
                growth,
            } => {
                if wavevector.len() != self.dim {
                    return Err(Error::Shape {
                        expected: self.dim,
                        got: wavevector.len(),
                    });
                }
                let s = 2f64.powf(growth * n);
                Ok(PlaneWave::new(*amplitude, wavevector.iter().map(|k| k * s).collect())?.into())
            }
            WaveDesign::CustomSpherical {
                amplitude,
                wavenumber,
                growth,
            } => Ok(SphericalWave::new(*amplitude, wavenumber * 2f64.powf(growth * n))?.into()),
        }
    }

    /// Closed-form admissibility certificate at `level` for the given triple
    /// variant. Designs whose family does not match the variant have none.
    pub fn certificate(
        &self,
        level: u32,
        roi: &Roi,
        margins: &[u32],
        variant: TripleVariant,
    ) -> Result<f64> {
        let wave = self.wave_at(level)?;
        match (&wave, variant) {
            (ReferenceWave::Plane(w), TripleVariant::Plane { axis }) => {
                let k = *w.wavevector().get(axis).ok_or(Error::Shape {
                    expected: w.wavevector().len(),
                    got: axis + 1,
                })?;
                plane_certificate(w.amplitude(), k, level)
            }
            (ReferenceWave::Spherical(w), TripleVariant::Spherical) => {
                let given = match self.design {
                    WaveDesign::DyadicSpherical { epsilon } => {
                        let q = zero_excluded(roi, margins)?
                            .ok_or(Error::Certificate {
                                level,
                                reason: "zero not excluded from the lattice".into(),
                            })?
                            .bound;
                        let d = roi.dim() as f64;
                        let m = *margins.iter().max().expect("non-empty") as f64;
                        let beta = 9.0 / 8.0 * d.sqrt() * (roi.sup_norm() + 0.5 * m);
                        Some((epsilon * q, beta))
                    }
                    _ => None,
                };
                spherical_certificate(w.amplitude(), w.wavenumber(), roi, margins, level, given)
                    .map(|c| c.bound)
            }
            _ => Err(Error::Certificate {
                level,
                reason: "no closed-form certificate for this wave/triple combination".into(),
            }),
        }
    }

    /// Exact admissibility report with the closed-form certificate attached
    /// when one exists.
    pub fn report(
        &self,
        level: u32,
        roi: &Roi,
        margins: &[u32],
        triples: &TripleSet,
    ) -> Result<AdmissibilityReport> {
        let wave = self.wave_at(level)?;
        let mut report = admissibility_ratio(&wave, level, triples)?;
        report.certificate = self
            .certificate(level, roi, margins, triples.variant())
            .ok();
        Ok(report)
    }
}
