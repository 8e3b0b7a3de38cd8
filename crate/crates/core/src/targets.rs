//! Built-in complex-valued target functions with known smoothness.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::refinable::bspline_value;

pub const TARGET_NAMES: [&str; 4] = [
    "gaussian_chirp",
    "modulated_gaussian",
    "bspline_bump",
    "complex_constant",
];

/// Optional parameters shared by all built-in targets. Missing fields take
/// per-target defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Frequency vector `w` of the phase `w·x` (or the modulation).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq: Option<Vec<f64>>,
    /// B-spline order of `bspline_bump`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Constant phase `θ₀`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    /// `[re, im]` of the constant or of the amplitude factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// `e^{-‖x-c‖²/σ²} e^{i w·x}`
    GaussianChirp {
        center: Vec<f64>,
        sigma: f64,
        freq: Vec<f64>,
    },
    /// `z₀ e^{-‖x-c‖²/σ²} cos(w·x)`
    ModulatedGaussian {
        center: Vec<f64>,
        sigma: f64,
        freq: Vec<f64>,
        amplitude: Complex64,
    },
    /// `Π_l B_m(x_l - c_l) e^{iθ₀}`
    BsplineBump {
        order: usize,
        center: Vec<f64>,
        phase: f64,
    },
    ComplexConstant(Complex64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetFunction {
    kind: Kind,
    dim: usize,
    label: String,
}

fn check_vec(name: &str, v: Vec<f64>, dim: usize) -> Result<Vec<f64>> {
    if v.len() != dim {
        return Err(Error::InvalidTarget(format!(
            "{name} has length {}, expected {dim}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidTarget(format!("{name} must be finite")));
    }
    Ok(v)
}

impl TargetFunction {
    pub fn builtin(name: &str, dim: usize, params: &TargetParams) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidTarget("dimension must be positive".into()));
        }
        let center = || {
            check_vec(
                "center",
                params.center.clone().unwrap_or_else(|| vec![0.0; dim]),
                dim,
            )
        };
        let sigma = || -> Result<f64> {
            let s = params.sigma.unwrap_or(1.0);
            if s > 0.0 && s.is_finite() {
                Ok(s)
            } else {
                Err(Error::InvalidTarget(format!(
                    "sigma must be positive, got {s}"
                )))
            }
        };
        let freq = || {
            check_vec(
                "freq",
                params.freq.clone().unwrap_or_else(|| vec![0.0; dim]),
                dim,
            )
        };
        let value = params
            .value
            .map(|[re, im]| Complex64::new(re, im))
            .unwrap_or(Complex64::new(1.0, 0.0));
        let kind = match name {
            "gaussian_chirp" => Kind::GaussianChirp {
                center: center()?,
                sigma: sigma()?,
                freq: freq()?,
            },
            "modulated_gaussian" => Kind::ModulatedGaussian {
                center: center()?,
                sigma: sigma()?,
                freq: freq()?,
                amplitude: value,
            },
            "bspline_bump" => {
                let order = params.order.unwrap_or(2);
                if order == 0 {
                    return Err(Error::InvalidOrder(order));
                }
                Kind::BsplineBump {
                    order,
                    center: center()?,
                    phase: params.phase.unwrap_or(0.0),
                }
            }
            "complex_constant" => Kind::ComplexConstant(value),
            other => return Err(Error::UnknownTarget(other.to_string())),
        };
        Ok(Self {
            kind,
            dim,
            label: name.to_string(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Sobolev smoothness exponent `ν₂(f)`; infinite for analytic targets.
    pub fn smoothness(&self) -> f64 {
        match &self.kind {
            Kind::BsplineBump { order, .. } => *order as f64 - 0.5,
            _ => f64::INFINITY,
        }
    }

    /// Constants are bounded but not square integrable on `ℝ^d`; they are
    /// only meaningful for pointwise recovery checks.
    pub fn is_square_integrable(&self) -> bool {
        !matches!(self.kind, Kind::ComplexConstant(_))
    }

    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> Complex64 {
        match &self.kind {
            Kind::GaussianChirp {
                center,
                sigma,
                freq,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                let phase: f64 = x.iter().zip(freq).map(|(a, w)| a * w).sum();
                Complex64::from_polar((-r2 / (sigma * sigma)).exp(), phase)
            }
            Kind::ModulatedGaussian {
                center,
                sigma,
                freq,
                amplitude,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                let phase: f64 = x.iter().zip(freq).map(|(a, w)| a * w).sum();
                amplitude * ((-r2 / (sigma * sigma)).exp() * phase.cos())
            }
            Kind::BsplineBump {
                order,
                center,
                phase,
            } => {
                let v: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| bspline_value(*order, a - c))
                    .product();
                Complex64::from_polar(v, *phase)
            }
            Kind::ComplexConstant(z) => *z,
        }
    }
}

pub fn builtin_target(name: &str, dim: usize, params: &TargetParams) -> Result<TargetFunction> {
    TargetFunction::builtin(name, dim, params)
}
