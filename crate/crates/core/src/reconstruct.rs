//! Refinable synthesis of recovered samples, L²(Ω) errors and multi-level
//! convergence studies.

use std::ops::RangeInclusive;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_lattice, build_triples, Roi, TripleVariant};
use crate::measure::{perturb_intensities, quasi_intensities, sample_intensities, IntensityRecord};
use crate::recover::{recover_level, RecoveredSamples};
use crate::refinable::{bspline_value, RefinableFunction};
use crate::targets::TargetFunction;
use crate::waves::WaveSequence;

/// Quadrature points per parallel chunk; fixes the reduction tree.
const QUAD_CHUNK: usize = 4096;

/// Errors below `FIT_FLOOR · ‖f‖` are excluded from rate fits.
pub const FIT_FLOOR: f64 = 1e-12;

/// Per-axis contributions at `t = 2^N x_l`: indices `base..base+m` with
/// weights `B_m(t - k)`. These are the only `k` with `B_m(t - k) != 0`.
#[derive(Debug, Clone)]
struct AxisStencil {
    base: i64,
    weights: Vec<f64>,
}

fn stencil(m: usize, t: f64) -> AxisStencil {
    let base = t.ceil() as i64 - m as i64;
    let weights = (0..m)
        .map(|j| bspline_value(m, t - (base + j as i64) as f64))
        .collect();
    AxisStencil { base, weights }
}

/// `Σ_k f̊(2^{-N}k) φ(2^N x - k)` evaluated pointwise from the sample map.
pub fn synthesize(
    samples: &RecoveredSamples,
    phi: &RefinableFunction,
    x: &[f64],
) -> Result<Complex64> {
    synthesize_counted(samples, phi, x).map(|(v, _)| v)
}

/// As [`synthesize`], also returning how many coefficients were visited.
pub fn synthesize_counted(
    samples: &RecoveredSamples,
    phi: &RefinableFunction,
    x: &[f64],
) -> Result<(Complex64, usize)> {
    if x.len() != phi.dim() {
        return Err(Error::Shape {
            expected: phi.dim(),
            got: x.len(),
        });
    }
    let scale = 2f64.powi(samples.level as i32);
    let stencils: Vec<AxisStencil> = phi
        .orders()
        .iter()
        .zip(x)
        .map(|(&m, &xl)| stencil(m, scale * xl))
        .collect();
    let mut visited = 0;
    let mut total = Complex64::new(0.0, 0.0);
    let mut k = vec![0i64; x.len()];
    for_each_offset(phi.orders(), |offset| {
        let mut w = 1.0;
        for (l, st) in stencils.iter().enumerate() {
            k[l] = st.base + offset[l] as i64;
            w *= st.weights[offset[l]];
        }
        visited += 1;
        if let Some(v) = samples.values.get(&k) {
            total += v * w;
        }
    });
    Ok((total, visited))
}

/// Calls `f` with every multi-index in `0..orders[0] × … × 0..orders[d-1]`,
/// last axis fastest.
fn for_each_offset(orders: &[usize], mut f: impl FnMut(&[usize])) {
    let mut offset = vec![0usize; orders.len()];
    loop {
        f(&offset);
        let mut axis = orders.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            offset[axis] += 1;
            if offset[axis] < orders[axis] {
                break;
            }
            offset[axis] = 0;
        }
    }
}

/// Dense coefficient array for bulk synthesis; missing samples are zero.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    orders: Vec<usize>,
    level: u32,
    lower: Vec<i64>,
    shape: Vec<usize>,
    coeffs: Vec<Complex64>,
}

impl Synthesizer {
    pub fn new(samples: &RecoveredSamples, phi: &RefinableFunction) -> Result<Self> {
        let d = phi.dim();
        let mut lower = vec![i64::MAX; d];
        let mut upper = vec![i64::MIN; d];
        for k in samples.values.keys() {
            if k.len() != d {
                return Err(Error::Shape {
                    expected: d,
                    got: k.len(),
                });
            }
            for l in 0..d {
                lower[l] = lower[l].min(k[l]);
                upper[l] = upper[l].max(k[l]);
            }
        }
        let (lower, shape) = if samples.values.is_empty() {
            (vec![0; d], vec![0; d])
        } else {
            let shape = lower
                .iter()
                .zip(&upper)
                .map(|(a, b)| (b - a + 1) as usize)
                .collect();
            (lower, shape)
        };
        let mut coeffs = vec![Complex64::new(0.0, 0.0); shape.iter().product()];
        for (k, v) in &samples.values {
            let mut idx = 0;
            for l in 0..d {
                idx = idx * shape[l] + (k[l] - lower[l]) as usize;
            }
            coeffs[idx] = *v;
        }
        Ok(Self {
            orders: phi.orders().to_vec(),
            level: samples.level,
            lower,
            shape,
            coeffs,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.orders.len()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let scale = 2f64.powi(self.level as i32);
        let stencils: Vec<AxisStencil> = self
            .orders
            .iter()
            .zip(x)
            .map(|(&m, &xl)| stencil(m, scale * xl))
            .collect();
        let refs: Vec<&AxisStencil> = stencils.iter().collect();
        Ok(self.eval_stencils(&refs))
    }

    fn eval_stencils(&self, stencils: &[&AxisStencil]) -> Complex64 {
        if self.coeffs.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let mut total = Complex64::new(0.0, 0.0);
        for_each_offset(&self.orders, |offset| {
            let mut idx = 0usize;
            let mut w = 1.0;
            for (l, st) in stencils.iter().enumerate() {
                let rel = st.base + offset[l] as i64 - self.lower[l];
                if rel < 0 || rel as usize >= self.shape[l] {
                    return;
                }
                idx = idx * self.shape[l] + rel as usize;
                w *= st.weights[offset[l]];
            }
            total += self.coeffs[idx] * w;
        });
        total
    }
}

/// Sum with a fixed pairwise tree.
fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Uniform midpoint grid on the Ω box.
#[derive(Debug, Clone)]
struct MidpointGrid {
    nodes: Vec<Vec<f64>>,
    cell_volume: f64,
}

impl MidpointGrid {
    fn new(roi: &Roi, cells_per_unit: usize) -> Result<Self> {
        let mut nodes = Vec::with_capacity(roi.dim());
        let mut cell_volume = 1.0;
        for (&a, &b) in roi.lo().iter().zip(roi.hi()) {
            let n = ((b - a) * cells_per_unit as f64 - 1e-9).ceil().max(1.0) as usize;
            if n < 2 {
                return Err(Error::InvalidGrid(format!(
                    "{cells_per_unit} cells per unit gives {n} cell(s) on an axis of width {}; at least 2 are required",
                    b - a
                )));
            }
            let h = (b - a) / n as f64;
            cell_volume *= h;
            nodes.push((0..n).map(|i| a + (i as f64 + 0.5) * h).collect());
        }
        Ok(Self { nodes, cell_volume })
    }

    fn len(&self) -> usize {
        self.nodes.iter().map(Vec::len).product()
    }

    /// `Σ_cells integrand(flat index → per-axis indices) · cell volume`.
    fn integrate(&self, integrand: impl Fn(&[usize]) -> f64 + Sync) -> f64 {
        let total = self.len();
        let shape: Vec<usize> = self.nodes.iter().map(Vec::len).collect();
        let chunks: Vec<f64> = (0..total.div_ceil(QUAD_CHUNK))
            .into_par_iter()
            .map(|c| {
                let start = c * QUAD_CHUNK;
                let end = (start + QUAD_CHUNK).min(total);
                let mut idx = vec![0usize; shape.len()];
                let vals: Vec<f64> = (start..end)
                    .map(|flat| {
                        let mut rest = flat;
                        for l in (0..shape.len()).rev() {
                            idx[l] = rest % shape[l];
                            rest /= shape[l];
                        }
                        integrand(&idx)
                    })
                    .collect();
                pairwise_sum(&vals)
            })
            .collect();
        pairwise_sum(&chunks) * self.cell_volume
    }
}

/// Default quadrature resolution `2^{N_max + 4}` cells per unit length.
pub fn default_cells_per_unit(max_level: u32) -> usize {
    1usize << (max_level + 4)
}

/// `‖f - Σ f̊(2^{-N}k) φ(2^N · - k)‖_{L²(Ω)}` by the composite midpoint rule.
pub fn l2_error(
    f: &TargetFunction,
    samples: &RecoveredSamples,
    phi: &RefinableFunction,
    roi: &Roi,
    cells_per_unit: usize,
) -> Result<f64> {
    if f.dim() != roi.dim() || phi.dim() != roi.dim() {
        return Err(Error::Shape {
            expected: roi.dim(),
            got: if f.dim() != roi.dim() {
                f.dim()
            } else {
                phi.dim()
            },
        });
    }
    let synth = Synthesizer::new(samples, phi)?;
    let grid = MidpointGrid::new(roi, cells_per_unit)?;
    let scale = 2f64.powi(samples.level as i32);
    let stencils: Vec<Vec<AxisStencil>> = grid
        .nodes
        .iter()
        .zip(phi.orders())
        .map(|(axis, &m)| axis.iter().map(|&x| stencil(m, scale * x)).collect())
        .collect();
    let sum = grid.integrate(|idx| {
        let x: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(l, &i)| grid.nodes[l][i])
            .collect();
        let st: Vec<&AxisStencil> = idx
            .iter()
            .enumerate()
            .map(|(l, &i)| &stencils[l][i])
            .collect();
        (f.eval_unchecked(&x) - synth.eval_stencils(&st)).norm_sqr()
    });
    Ok(sum.sqrt())
}

/// `‖f‖_{L²(Ω)}` on the same midpoint grid.
pub fn l2_norm(f: &TargetFunction, roi: &Roi, cells_per_unit: usize) -> Result<f64> {
    if f.dim() != roi.dim() {
        return Err(Error::Shape {
            expected: roi.dim(),
            got: f.dim(),
        });
    }
    let grid = MidpointGrid::new(roi, cells_per_unit)?;
    let sum = grid.integrate(|idx| {
        let x: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(l, &i)| grid.nodes[l][i])
            .collect();
        f.eval_unchecked(&x).norm_sqr()
    });
    Ok(sum.sqrt())
}

/// Least-squares fit `log₂ err = -β N + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub beta: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `log₂` units.
    pub residual: f64,
    pub levels: Vec<u32>,
}

/// Fits the decay rate over points with `err > floor`; needs two levels.
pub fn fit_rate(points: &[(u32, f64)], floor: f64) -> Option<RateFit> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e > floor && e.is_finite())
        .map(|&(n, e)| (n as f64, e.log2()))
        .collect();
    if used.len() < 2 {
        return None;
    }
    let count = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / count;
    let my = used.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (used
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum::<f64>()
        / count)
        .sqrt();
    Some(RateFit {
        beta: -slope,
        intercept,
        residual,
        levels: points
            .iter()
            .filter(|(_, e)| *e > floor && e.is_finite())
            .map(|p| p.0)
            .collect(),
    })
}

/// Wall-clock seconds per pipeline stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub admissibility: f64,
    pub sample: f64,
    pub recover: f64,
    pub synthesize: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: u32,
    pub lattice_size: usize,
    /// `max_k |f(2^{-N}k) - f̊(2^{-N}k)|` over recovered points.
    pub recovery_max_error: f64,
    pub l2_error: f64,
    /// Same synthesis from exact samples `f(2^{-N}k)`.
    pub baseline_l2_error: f64,
    /// Exact admissibility ratio of the wave at this level.
    pub ratio: f64,
    pub certificate: Option<f64>,
    pub sup_amplitude: f64,
    pub skipped: usize,
    /// `max_k √((I' - A' - δ)² + (I'' - A'' - δ)²)` with `δ = I_k - |f + g|²(k)`,
    /// which is zero for noiseless intensities.
    pub max_perturbation: f64,
    /// `|f - f̊| <= ratio · perturbation + 1e-10` at every recovered point.
    pub pointwise_bound_holds: bool,
    /// `baseline + recovery_max_error · Vol(Ω)^{1/2} + 1e-6`.
    pub triangle_bound: f64,
    pub timings: StageTimings,
}

impl LevelRow {
    pub fn triangle_holds(&self) -> bool {
        self.l2_error <= self.triangle_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub rows: Vec<LevelRow>,
    pub fit: Option<RateFit>,
    pub baseline_fit: Option<RateFit>,
    pub cells_per_unit: usize,
    pub target_norm: f64,
}

impl ReconstructionReport {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.l2_error).collect()
    }

    pub fn baseline_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.baseline_l2_error).collect()
    }

    pub fn total_skipped(&self) -> usize {
        self.rows.iter().map(|r| r.skipped).sum()
    }
}

/// Everything needed to run the pipeline at one or more levels.
#[derive(Debug, Clone)]
pub struct Study<'a> {
    pub target: &'a TargetFunction,
    pub waves: &'a WaveSequence,
    pub phi: &'a RefinableFunction,
    pub roi: &'a Roi,
    pub margins: Vec<u32>,
    pub variant: TripleVariant,
    pub cells_per_unit: usize,
    pub noise_scale: f64,
    pub seed: u64,
}

/// Artifacts of one pipeline level.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub records: Vec<IntensityRecord>,
    pub recovered: RecoveredSamples,
    pub row: LevelRow,
}

/// Noise seed for one level, so levels can run independently.
pub fn level_seed(seed: u64, level: u32) -> u64 {
    seed.wrapping_add(level as u64)
}

impl Study<'_> {
    fn check_shapes(&self) -> Result<()> {
        let d = self.roi.dim();
        for got in [
            self.target.dim(),
            self.waves.dim,
            self.phi.dim(),
            self.margins.len(),
        ] {
            if got != d {
                return Err(Error::Shape { expected: d, got });
            }
        }
        Ok(())
    }

    /// Lattice, triples, sampling, recovery, synthesis and error checks at
    /// one level. An inadmissible wave aborts with the offending triple.
    pub fn run_level(&self, level: u32) -> Result<LevelOutcome> {
        self.check_shapes()?;
        let mut timings = StageTimings::default();
        let f = self.target;

        let clock = Instant::now();
        let lattice = build_lattice(self.roi, &self.margins, level)?;
        let triples = build_triples(&lattice, self.variant)?;
        let g = self.waves.wave_at(level)?;
        let report = self
            .waves
            .report(level, self.roi, &self.margins, &triples)?;
        if !report.is_admissible() {
            return Err(Error::Inadmissible {
                level,
                k: report.worst_k.unwrap_or_default(),
            });
        }
        timings.admissibility = clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let exact = sample_intensities(f, &g, level, &triples)?;
        let records = perturb_intensities(&exact, self.noise_scale, level_seed(self.seed, level))?;
        timings.sample = clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let recovered = recover_level(&records, &g, level)?;
        timings.recover = clock.elapsed().as_secs_f64();

        let scale = 2f64.powi(-(level as i32));
        let checks: Vec<(f64, f64, bool)> = records
            .par_iter()
            .map(|r| -> Result<(f64, f64, bool)> {
                let (a1, a2) = quasi_intensities(f, &g, level, &r.triple)?;
                let x: Vec<f64> = r.triple.k.iter().map(|&k| k as f64 * scale).collect();
                let fk = f.eval(&x)?;
                // zero unless the base intensity itself was perturbed
                let d0 = r.intensities[0] - (fk + g.eval(&x)?).norm_sqr();
                let pert = (r.intensities[1] - a1 - d0).hypot(r.intensities[2] - a2 - d0);
                let Some(v) = recovered.get(&r.triple.k) else {
                    return Ok((0.0, pert, true));
                };
                let err = (fk - v).norm();
                Ok((err, pert, err <= report.ratio * pert + 1e-10))
            })
            .collect::<Result<_>>()?;
        let recovery_max_error = checks.iter().map(|c| c.0).fold(0.0, f64::max);
        let max_perturbation = checks.iter().map(|c| c.1).fold(0.0, f64::max);
        let pointwise_bound_holds = checks.iter().all(|c| c.2);

        let clock = Instant::now();
        let l2 = l2_error(f, &recovered, self.phi, self.roi, self.cells_per_unit)?;
        timings.synthesize = clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let baseline_samples =
            RecoveredSamples::from_fn(level, &lattice.points(), |x| f.eval_unchecked(x));
        let baseline = l2_error(
            f,
            &baseline_samples,
            self.phi,
            self.roi,
            self.cells_per_unit,
        )?;
        timings.baseline = clock.elapsed().as_secs_f64();

        let row = LevelRow {
            level,
            lattice_size: lattice.len(),
            recovery_max_error,
            l2_error: l2,
            baseline_l2_error: baseline,
            ratio: report.ratio,
            certificate: report.certificate,
            sup_amplitude: report.sup_amplitude,
            skipped: recovered.skipped_count(),
            max_perturbation,
            pointwise_bound_holds,
            triangle_bound: baseline + recovery_max_error * self.roi.volume().sqrt() + 1e-6,
            timings,
        };
        Ok(LevelOutcome {
            records,
            recovered,
            row,
        })
    }

    /// Runs every level in `levels`, handing each outcome to `sink` (used to
    /// persist artifacts), and fits decay rates for pipeline and baseline.
    pub fn run_with(
        &self,
        levels: RangeInclusive<u32>,
        mut sink: impl FnMut(&LevelOutcome) -> Result<()>,
    ) -> Result<ReconstructionReport> {
        self.check_shapes()?;
        let target_norm = l2_norm(self.target, self.roi, self.cells_per_unit)?;
        let mut rows = Vec::new();
        for level in levels {
            let outcome = self.run_level(level)?;
            sink(&outcome)?;
            rows.push(outcome.row);
        }
        let floor = FIT_FLOOR * target_norm;
        let fit = fit_rate(
            &rows
                .iter()
                .map(|r| (r.level, r.l2_error))
                .collect::<Vec<_>>(),
            floor,
        );
        let baseline_fit = fit_rate(
            &rows
                .iter()
                .map(|r| (r.level, r.baseline_l2_error))
                .collect::<Vec<_>>(),
            floor,
        );
        Ok(ReconstructionReport {
            rows,
            fit,
            baseline_fit,
            cells_per_unit: self.cells_per_unit,
            target_norm,
        })
    }
}

/// Convenience wrapper running a [`Study`] over `levels` with the natural
/// triple variant, margins equal to the support of `phi`, no noise and the
/// default quadrature grid.
pub fn convergence_study(
    f: &TargetFunction,
    waves: &WaveSequence,
    phi: &RefinableFunction,
    roi: &Roi,
    levels: RangeInclusive<u32>,
) -> Result<ReconstructionReport> {
    let study = Study {
        target: f,
        waves,
        phi,
        roi,
        margins: phi.support(),
        variant: waves.natural_variant(0),
        cells_per_unit: default_cells_per_unit(*levels.end()),
        noise_scale: 0.0,
        seed: 0,
    };
    study.run_with(levels, |_| Ok(()))
}
