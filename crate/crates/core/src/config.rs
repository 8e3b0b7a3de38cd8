//! Declarative experiment configuration (TOML) and hypothesis validation.

use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::lattice::{zero_excluded, Roi, TripleVariant};
use crate::reconstruct::{default_cells_per_unit, Study};
use crate::refinable::RefinableFunction;
use crate::targets::{TargetFunction, TargetParams};
use crate::waves::{WaveDesign, WaveFamily, WaveSequence};

/// Largest level allowed by default for `d >= 2` (lattices grow as `4^N`).
pub const MAX_LEVEL_2D: u32 = 7;
/// Hard cap keeping `2^N` numerators exact and lattices finite.
pub const MAX_LEVEL: u32 = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub name: String,
    #[serde(default)]
    pub params: TargetParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantChoice {
    Plane,
    Spherical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSection {
    /// `dyadic_plane`, `dyadic_spherical`, `custom_plane` or `custom_spherical`.
    pub design: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavevector: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<f64>,
    /// Triple variant; defaults to the wave family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<VariantChoice>,
    /// 1-based axis `j₀` of plane triples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSection {
    pub orders: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoiSection {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Lattice margins `M_l`; default to the support extents of φ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margins: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsSection {
    pub min: u32,
    pub max: u32,
}

/// Sobolev indices `s < ς` used only for hypothesis checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varsigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    /// Midpoint cells per unit length; default `2^{N_max + 4}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells_per_unit: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub scale: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "default_true")]
    pub intensities: bool,
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_true() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            intensities: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetSection,
    pub wave: WaveSection,
    pub phi: PhiSection,
    pub roi: RoiSection,
    pub levels: LevelsSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Configuration turned into library objects.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub target: TargetFunction,
    pub waves: WaveSequence,
    pub phi: RefinableFunction,
    pub roi: Roi,
    pub margins: Vec<u32>,
    pub variant: TripleVariant,
    pub levels: RangeInclusive<u32>,
    pub cells_per_unit: usize,
    pub noise_scale: f64,
    pub seed: u64,
}

impl Resolved {
    pub fn study(&self) -> Study<'_> {
        Study {
            target: &self.target,
            waves: &self.waves,
            phi: &self.phi,
            roi: &self.roi,
            margins: self.margins.clone(),
            variant: self.variant,
            cells_per_unit: self.cells_per_unit,
            noise_scale: self.noise_scale,
            seed: self.seed,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn dim(&self) -> usize {
        self.roi.lo.len()
    }

    fn wave_sequence(&self) -> std::result::Result<WaveSequence, Violation> {
        let w = &self.wave;
        let d = self.dim();
        let need = |field: &str, v: Option<f64>| {
            v.ok_or_else(|| {
                Violation::new("wave", format!("design '{}' requires '{field}'", w.design))
            })
        };
        let design = match w.design.as_str() {
            "dyadic_plane" => WaveDesign::DyadicPlane {
                theta: w.theta.unwrap_or(1.0),
            },
            "dyadic_spherical" => WaveDesign::DyadicSpherical {
                epsilon: need("epsilon", w.epsilon)?,
            },
            "custom_plane" => WaveDesign::CustomPlane {
                amplitude: w.amplitude.unwrap_or(1.0),
                wavevector: w.wavevector.clone().ok_or_else(|| {
                    Violation::new("wave", "design 'custom_plane' requires 'wavevector'")
                })?,
                growth: w.growth.unwrap_or(1.0),
            },
            "custom_spherical" => WaveDesign::CustomSpherical {
                amplitude: w.amplitude.unwrap_or(1.0),
                wavenumber: need("wavenumber", w.wavenumber)?,
                growth: w.growth.unwrap_or(1.0),
            },
            other => {
                return Err(Violation::new(
                    "wave",
                    format!(
                        "unknown wave design '{other}' (expected dyadic_plane, dyadic_spherical, custom_plane or custom_spherical)"
                    ),
                ))
            }
        };
        let seq = WaveSequence { design, dim: d };
        seq.wave_at(self.levels.min)
            .and_then(|_| seq.wave_at(self.levels.max))
            .map_err(|e| Violation::new("wave", e.to_string()))?;
        Ok(seq)
    }

    fn variant(&self, family: WaveFamily) -> std::result::Result<TripleVariant, Violation> {
        let choice = self.wave.variant.unwrap_or(match family {
            WaveFamily::Plane => VariantChoice::Plane,
            WaveFamily::Spherical => VariantChoice::Spherical,
        });
        match choice {
            VariantChoice::Spherical => Ok(TripleVariant::Spherical),
            VariantChoice::Plane => {
                let j0 = self.wave.axis.unwrap_or(1);
                if j0 == 0 || j0 > self.dim() {
                    return Err(Violation::new(
                        "axis",
                        format!("plane axis j0 = {j0} is outside 1..={}", self.dim()),
                    ));
                }
                Ok(TripleVariant::Plane { axis: j0 - 1 })
            }
        }
    }

    /// Every violated hypothesis decidable from the configuration alone.
    /// An empty list means a run cannot fail on hypothesis grounds.
    pub fn validate(&self) -> Vec<Violation> {
        self.check(true).err().unwrap_or_default()
    }

    /// Validates and builds the library objects.
    pub fn resolve(&self) -> Result<Resolved> {
        self.check(true).map_err(Error::Validation)
    }

    /// Builds the library objects checking structure only: certificates,
    /// Sobolev hypotheses and square integrability are not required. Used by
    /// admissibility sweeps, which report rather than reject.
    pub fn resolve_structure(&self) -> Result<Resolved> {
        self.check(false).map_err(Error::Validation)
    }

    fn check(&self, hypotheses: bool) -> std::result::Result<Resolved, Vec<Violation>> {
        let mut v = Vec::new();
        let d = self.dim();

        let roi = Roi::new(self.roi.lo.clone(), self.roi.hi.clone())
            .and_then(|r| r.integer_bounds().map(|_| r))
            .map_err(|e| v.push(Violation::new("roi", e.to_string())))
            .ok();

        let phi = RefinableFunction::tensor(&self.phi.orders)
            .map_err(|e| v.push(Violation::new("phi", e.to_string())))
            .ok();
        if let Some(phi) = &phi {
            if phi.dim() != d {
                v.push(Violation::new(
                    "shape",
                    format!("phi has {} axes but the region has {d}", phi.dim()),
                ));
            }
        }

        let target = TargetFunction::builtin(&self.target.name, d, &self.target.params)
            .map_err(|e| v.push(Violation::new(e.code(), e.to_string())))
            .ok();
        if let Some(t) = target.as_ref().filter(|_| hypotheses) {
            if !t.is_square_integrable() {
                v.push(Violation::new(
                    "not-square-integrable",
                    format!(
                        "target '{}' is not in L²; the L² error study is undefined",
                        t.label()
                    ),
                ));
            }
        }

        let margins = match (&self.roi.margins, &phi) {
            (Some(m), _) => Some(m.clone()),
            (None, Some(phi)) => Some(phi.support()),
            (None, None) => None,
        };
        if let Some(m) = &margins {
            if m.len() != d {
                v.push(Violation::new(
                    "shape",
                    format!("{} margins given for a {d}-dimensional region", m.len()),
                ));
            }
            if m.contains(&0) {
                v.push(Violation::new(
                    "margins",
                    "lattice margins must be positive",
                ));
            }
        }

        let levels = self.levels;
        if levels.min > levels.max {
            v.push(Violation::new(
                "levels",
                format!("level range {}..{} is empty", levels.min, levels.max),
            ));
        }
        if levels.max > MAX_LEVEL {
            v.push(Violation::new(
                "levels",
                format!(
                    "level {} exceeds the supported maximum {MAX_LEVEL}",
                    levels.max
                ),
            ));
        }
        if d >= 2 && levels.max > MAX_LEVEL_2D {
            v.push(Violation::new(
                "levels",
                format!(
                    "d = {d} runs are capped at N <= {MAX_LEVEL_2D}, got {}",
                    levels.max
                ),
            ));
        }

        // min{ν₂(φ), sr_φ} > ς > s > d/2, and ς below the target's smoothness
        if let Some(phi) = phi.as_ref().filter(|_| hypotheses) {
            let limit = phi.smoothness().min(phi.sum_rule_order() as f64);
            let target_limit = target.as_ref().map_or(f64::INFINITY, |t| t.smoothness());
            let half = d as f64 / 2.0;
            match (self.analysis.s, self.analysis.varsigma) {
                (Some(s), Some(vs)) => {
                    if !(s > half) {
                        v.push(Violation::new(
                            "sobolev",
                            format!("s = {s} must exceed d/2 = {half}"),
                        ));
                    }
                    if !(vs > s) {
                        v.push(Violation::new(
                            "sobolev",
                            format!("varsigma = {vs} must exceed s = {s}"),
                        ));
                    }
                    if !(limit > vs) {
                        v.push(Violation::new(
                            "sobolev",
                            format!(
                                "min{{nu2(phi), sr(phi)}} = {limit} must exceed varsigma = {vs} for phi orders {:?}",
                                phi.orders()
                            ),
                        ));
                    }
                    if !(target_limit > vs) {
                        v.push(Violation::new(
                            "sobolev",
                            format!("target smoothness nu2(f) = {target_limit} must exceed varsigma = {vs}"),
                        ));
                    }
                }
                (None, None) => {
                    if !(limit.min(target_limit) > half) {
                        v.push(Violation::new(
                            "sobolev",
                            format!(
                                "d/2 < s < varsigma < min{{nu2(phi), sr(phi), nu2(f)}} not satisfiable for phi orders {:?} (d/2 = {half}, bound = {})",
                                phi.orders(),
                                limit.min(target_limit)
                            ),
                        ));
                    }
                }
                _ => v.push(Violation::new(
                    "sobolev",
                    "analysis.s and analysis.varsigma must be given together",
                )),
            }
        }

        if !(self.noise.scale >= 0.0 && self.noise.scale.is_finite()) {
            v.push(Violation::new(
                "noise",
                format!(
                    "noise scale must be finite and nonnegative, got {}",
                    self.noise.scale
                ),
            ));
        }

        let waves = self.wave_sequence().map_err(|e| v.push(e)).ok();
        let variant = waves
            .as_ref()
            .and_then(|w| self.variant(w.family()).map_err(|e| v.push(e)).ok());

        if let (Some(TripleVariant::Spherical), Some(roi), Some(m)) = (variant, &roi, &margins) {
            if levels.min == 0 {
                v.push(Violation::new(
                    "level-zero",
                    "spherical triples need N >= 1 (k'' = 0 at N = 0)",
                ));
            }
            if m.len() == d {
                match zero_excluded(roi, m) {
                    Ok(Some(_)) => {}
                    Ok(None) => v.push(Violation::new(
                        "zero-in-lattice",
                        "the lattice contains the origin at some level N >= 1; spherical triples require 2 L_min - M > 0 or L_max < 0 on some axis",
                    )),
                    Err(e) => v.push(Violation::new(e.code(), e.to_string())),
                }
            }
        }

        if let (Some(w), Some(variant), Some(roi), Some(m)) = (&waves, variant, &roi, &margins) {
            let certified = matches!(
                (&w.design, variant),
                (WaveDesign::DyadicPlane { .. }, TripleVariant::Plane { .. })
                    | (WaveDesign::DyadicSpherical { .. }, TripleVariant::Spherical)
            );
            if certified && hypotheses && v.is_empty() {
                for level in levels.min.max(1)..=levels.max {
                    if let Err(e) = w.certificate(level, roi, m, variant) {
                        v.push(Violation::new("certificate", e.to_string()));
                    }
                }
            }
        }

        let cells_per_unit = self
            .quadrature
            .cells_per_unit
            .unwrap_or_else(|| default_cells_per_unit(levels.max));
        if let Some(roi) = &roi {
            let narrowest = roi
                .lo()
                .iter()
                .zip(roi.hi())
                .map(|(a, b)| b - a)
                .fold(f64::INFINITY, f64::min);
            if (narrowest * cells_per_unit as f64) < 2.0 - 1e-9 {
                v.push(Violation::new(
                    "grid",
                    format!("{cells_per_unit} cells per unit leaves fewer than 2 cells on an axis"),
                ));
            }
        }

        if !v.is_empty() {
            return Err(v);
        }
        Ok(Resolved {
            target: target.expect("checked"),
            waves: waves.expect("checked"),
            phi: phi.expect("checked"),
            roi: roi.expect("checked"),
            margins: margins.expect("checked"),
            variant: variant.expect("checked"),
            levels: levels.min..=levels.max,
            cells_per_unit,
            noise_scale: self.noise.scale,
            seed: self.noise.seed,
        })
    }

    /// Configuration with every default filled in, for the run summary.
    pub fn echo(&self) -> serde_json::Value {
        let mut echo = self.clone();
        if echo.roi.margins.is_none() {
            echo.roi.margins = Some(self.phi.orders.iter().map(|&m| m as u32).collect());
        }
        if echo.quadrature.cells_per_unit.is_none() {
            echo.quadrature.cells_per_unit = Some(default_cells_per_unit(self.levels.max));
        }
        if echo.wave.design == "dyadic_plane" && echo.wave.theta.is_none() {
            echo.wave.theta = Some(1.0);
        }
        if echo.wave.axis.is_none() {
            echo.wave.axis = Some(1);
        }
        let mut value = serde_json::to_value(&echo).expect("config serializes");
        if let Ok(r) = self.resolve() {
            value["resolved"] = serde_json::json!({
                "variant": r.variant,
                "wave_design": r.waves.design,
                "wave_provenance": r.waves.provenance(),
                "phi_sum_rules": r.phi.sum_rule_order(),
                "phi_smoothness": r.phi.smoothness(),
                "target_smoothness": finite_or_null(r.target.smoothness()),
            });
        }
        value
    }
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::Null
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUICKSTART: &str = r#"
[target]
name = "gaussian_chirp"
params = { center = [1.5], sigma = 1.0, freq = [0.5] }

[wave]
design = "dyadic_plane"
theta = 1.0

[phi]
orders = [3]

[roi]
lo = [1.0]
hi = [2.0]

[levels]
min = 2
max = 7
"#;

    fn with(f: impl FnOnce(&mut ExperimentConfig)) -> ExperimentConfig {
        let mut c = ExperimentConfig::from_toml(QUICKSTART).unwrap();
        f(&mut c);
        c
    }

    fn codes(c: &ExperimentConfig) -> Vec<String> {
        c.validate().into_iter().map(|v| v.code).collect()
    }

    #[test]
    fn quickstart_is_valid() {
        let c = with(|_| {});
        assert!(c.validate().is_empty(), "{:?}", c.validate());
        let r = c.resolve().unwrap();
        assert_eq!(r.margins, vec![3]);
        assert_eq!(r.variant, TripleVariant::Plane { axis: 0 });
        assert_eq!(r.cells_per_unit, 1 << 11);
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn sobolev_examples() {
        let c = with(|c| {
            c.phi.orders = vec![2];
            c.analysis = AnalysisSection {
                s: Some(0.7),
                varsigma: Some(1.2),
            };
        });
        assert!(c.validate().is_empty());

        let c = with(|c| c.phi.orders = vec![1]);
        let v = c.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, "sobolev");
        assert!(v[0].message.contains("not satisfiable for phi orders [1]"));

        let c = with(|c| {
            c.phi.orders = vec![2, 2];
            c.roi = RoiSection {
                lo: vec![1.0, 1.0],
                hi: vec![2.0, 2.0],
                margins: None,
            };
            c.target.params = TargetParams::default();
            c.levels = LevelsSection { min: 2, max: 5 };
            c.analysis = AnalysisSection {
                s: Some(1.05),
                varsigma: Some(1.2),
            };
        });
        assert!(c.validate().is_empty(), "{:?}", c.validate());

        let c = with(|c| {
            c.analysis = AnalysisSection {
                s: Some(0.4),
                varsigma: Some(3.0),
            }
        });
        assert_eq!(codes(&c), vec!["sobolev", "sobolev"]);
    }

    #[test]
    fn target_smoothness_limits_varsigma() {
        let c = with(|c| {
            c.target = TargetSection {
                name: "bspline_bump".into(),
                params: TargetParams {
                    order: Some(2),
                    ..Default::default()
                },
            };
            c.analysis = AnalysisSection {
                s: Some(0.7),
                varsigma: Some(1.6),
            };
        });
        let v = c.validate();
        assert!(
            v.iter().any(|x| x.message.contains("nu2(f) = 1.5")),
            "{v:?}"
        );
    }

    #[test]
    fn spherical_over_unit_interval_is_rejected() {
        let c = with(|c| {
            c.wave.design = "dyadic_spherical".into();
            c.wave.epsilon = Some(0.3);
            c.phi.orders = vec![2];
        });
        assert_eq!(codes(&c), vec!["zero-in-lattice"]);
        let c = with(|c| {
            c.wave.design = "dyadic_spherical".into();
            c.wave.epsilon = Some(0.3);
            c.phi.orders = vec![2];
            c.roi.lo = vec![2.0];
            c.roi.hi = vec![3.0];
        });
        assert!(c.validate().is_empty(), "{:?}", c.validate());
        // certificate item (i) fails for a large ε
        let c = with(|c| {
            c.wave.design = "dyadic_spherical".into();
            c.wave.epsilon = Some(1.0);
            c.phi.orders = vec![2];
            c.roi.lo = vec![2.0];
            c.roi.hi = vec![3.0];
        });
        assert!(codes(&c).iter().all(|x| x == "certificate"));
        assert!(!c.validate().is_empty());
    }

    #[test]
    fn structural_violations() {
        assert_eq!(codes(&with(|c| c.wave.axis = Some(2))), vec!["axis"]);
        assert_eq!(
            codes(&with(|c| c.wave.design = "laser".into())),
            vec!["wave"]
        );
        assert_eq!(codes(&with(|c| c.noise.scale = -1.0)), vec!["noise"]);
        assert_eq!(
            codes(&with(|c| c.target.name = "square".into())),
            vec!["unknown-target"]
        );
        assert_eq!(
            codes(&with(|c| c.target.name = "complex_constant".into())),
            vec!["not-square-integrable"]
        );
        assert_eq!(
            codes(&with(|c| c.levels = LevelsSection { min: 5, max: 2 })),
            vec!["levels"]
        );
        assert_eq!(
            codes(&with(|c| c.quadrature.cells_per_unit = Some(1))),
            vec!["grid"]
        );
        let c = with(|c| c.wave.theta = Some(8.0));
        assert!(codes(&c).iter().all(|x| x == "certificate") && !codes(&c).is_empty());
        let c = with(|c| {
            c.phi.orders = vec![2, 2];
            c.roi.lo = vec![1.0, 1.0];
            c.roi.hi = vec![2.0, 2.0];
            c.target.params = TargetParams::default();
            c.levels.max = MAX_LEVEL_2D + 1;
        });
        assert_eq!(codes(&c), vec!["levels"]);
        assert!(ExperimentConfig::from_toml("[target]\nname = 1").is_err());
        assert!(ExperimentConfig::from_toml(&format!("{QUICKSTART}\n[extra]\nx = 1")).is_err());
    }

    #[test]
    fn echo_fills_defaults() {
        let echo = with(|_| {}).echo();
        assert_eq!(echo["roi"]["margins"], serde_json::json!([3]));
        assert_eq!(
            echo["quadrature"]["cells_per_unit"],
            serde_json::json!(2048)
        );
        assert_eq!(echo["resolved"]["wave_provenance"], "dyadic-plane");
        assert_eq!(echo["wave"]["axis"], 1);
    }
}
