//! Simulated single-shot interference intensities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{Triple, TripleSet};
use crate::targets::TargetFunction;
use crate::waves::ReferenceWave;

/// Intensities `I_{N,k}, I_{N,k'}, I_{N,k''}` recorded for one triple.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityRecord {
    pub level: u32,
    pub triple: Triple,
    pub intensities: [f64; 3],
}

/// `I(x) = |f(x) + g(x)|²`.
pub fn intensity(f: &TargetFunction, g: &ReferenceWave, x: &[f64]) -> Result<f64> {
    Ok((f.eval(x)? + g.eval(x)?).norm_sqr())
}

pub fn sample_intensities(
    f: &TargetFunction,
    g: &ReferenceWave,
    level: u32,
    triples: &TripleSet,
) -> Result<Vec<IntensityRecord>> {
    if triples.level() != level {
        return Err(Error::Inconsistent(format!(
            "triple set is for level {}, sampling requested at level {level}",
            triples.level()
        )));
    }
    triples
        .triples()
        .par_iter()
        .map(|t| {
            let [x0, x1, x2] = t.sample_locations(level);
            Ok(IntensityRecord {
                level,
                triple: t.clone(),
                intensities: [
                    intensity(f, g, &x0)?,
                    intensity(f, g, &x1)?,
                    intensity(f, g, &x2)?,
                ],
            })
        })
        .collect()
}

/// Quasi-intensities `A_{N,k,k'} = |f(2^{-N}k) + g(2^{-N}k')|²` and the
/// `k''` analogue: the target frozen at the base point, the wave at the
/// companions.
pub fn quasi_intensities(
    f: &TargetFunction,
    g: &ReferenceWave,
    level: u32,
    triple: &Triple,
) -> Result<(f64, f64)> {
    let [x0, x1, x2] = triple.sample_locations(level);
    let fk = f.eval(&x0)?;
    Ok((
        (fk + g.eval(&x1)?).norm_sqr(),
        (fk + g.eval(&x2)?).norm_sqr(),
    ))
}

/// Multiplies every intensity by `1 + η`, `η ~ U[-scale, scale]`, clamping at
/// zero. Deterministic for a fixed seed; `scale = 0` is the identity.
pub fn perturb_intensities(
    records: &[IntensityRecord],
    noise_scale: f64,
    seed: u64,
) -> Result<Vec<IntensityRecord>> {
    if !(noise_scale >= 0.0) || !noise_scale.is_finite() {
        return Err(Error::Inconsistent(format!(
            "noise scale must be finite and nonnegative, got {noise_scale}"
        )));
    }
    if noise_scale == 0.0 {
        return Ok(records.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(records
        .iter()
        .map(|r| {
            let mut out = r.clone();
            for v in out.intensities.iter_mut() {
                let eta: f64 = rng.gen_range(-noise_scale..=noise_scale);
                *v = (*v * (1.0 + eta)).max(0.0);
            }
            out
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, build_triples, Roi, TripleVariant};
    use crate::targets::{builtin_target, TargetParams};
    use crate::waves::{PlaneWave, WaveSequence};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn constant(re: f64, im: f64, dim: usize) -> TargetFunction {
        builtin_target(
            "complex_constant",
            dim,
            &TargetParams {
                value: Some([re, im]),
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn chirp() -> TargetFunction {
        builtin_target(
            "gaussian_chirp",
            1,
            &TargetParams {
                center: Some(vec![1.5]),
                sigma: Some(0.6),
                freq: Some(vec![2.0]),
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn plane_setup(level: u32) -> (ReferenceWave, TripleSet) {
        let roi = Roi::interval(1.0, 2.0).unwrap();
        let xi = build_triples(
            &build_lattice(&roi, &[3], level).unwrap(),
            TripleVariant::Plane { axis: 0 },
        )
        .unwrap();
        (
            WaveSequence::dyadic_plane(1, 0.999).wave_at(level).unwrap(),
            xi,
        )
    }

    #[test]
    fn intensity_examples() {
        let g: ReferenceWave = PlaneWave::new(1.0, vec![PI]).unwrap().into();
        let zero = constant(0.0, 0.0, 1);
        assert_abs_diff_eq!(intensity(&zero, &g, &[0.3]).unwrap(), 1.0, epsilon = 1e-15);
        // g(1) = e^{iπ} = -1 cancels f = 1
        let one = constant(1.0, 0.0, 1);
        assert_abs_diff_eq!(intensity(&one, &g, &[1.0]).unwrap(), 0.0, epsilon = 1e-30);
        // f = 1 + 2i, g = 3 - i: |4 + i|² = 17
        let f = constant(1.0, 2.0, 1);
        let g: ReferenceWave = PlaneWave::new(10f64.sqrt(), vec![(-1.0f64).atan2(3.0)])
            .unwrap()
            .into();
        assert_abs_diff_eq!(g.eval(&[1.0]).unwrap().re, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(intensity(&f, &g, &[1.0]).unwrap(), 17.0, epsilon = 1e-13);
    }

    #[test]
    fn sampling_examples() {
        let (g, xi) = plane_setup(3);
        let zero = constant(0.0, 0.0, 1);
        let records = sample_intensities(&zero, &g, 3, &xi).unwrap();
        assert_eq!(records.len(), xi.len());
        for r in &records {
            for v in r.intensities {
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
            }
        }
        let f = chirp();
        let records = sample_intensities(&f, &g, 3, &xi).unwrap();
        let r = &records[5];
        let [x0, x1, x2] = r.triple.sample_locations(3);
        assert_eq!(r.intensities[0], intensity(&f, &g, &x0).unwrap());
        assert_eq!(r.intensities[1], intensity(&f, &g, &x1).unwrap());
        assert_eq!(r.intensities[2], intensity(&f, &g, &x2).unwrap());
        assert!(sample_intensities(&f, &g, 4, &xi).is_err());
    }

    #[test]
    fn quasi_intensity_examples() {
        let (g, xi) = plane_setup(2);
        let c = constant(0.4, -1.1, 1);
        let records = sample_intensities(&c, &g, 2, &xi).unwrap();
        for r in &records {
            let (a1, a2) = quasi_intensities(&c, &g, 2, &r.triple).unwrap();
            assert_eq!(a1, r.intensities[1]);
            assert_eq!(a2, r.intensities[2]);
        }
        let zero = constant(0.0, 0.0, 1);
        let t = &xi.triples()[3];
        let (a1, _) = quasi_intensities(&zero, &g, 2, t).unwrap();
        let [_, x1, _] = t.sample_locations(2);
        assert_abs_diff_eq!(a1, g.eval(&x1).unwrap().norm_sqr(), epsilon = 1e-15);
    }

    #[test]
    fn quasi_intensity_gap_shrinks_with_level() {
        // |A_{k,k'} - I_{k'}| at a fixed physical location is O(2^{-N})
        let f = builtin_target(
            "bspline_bump",
            1,
            &TargetParams {
                order: Some(3),
                center: Some(vec![0.0]),
                ..Default::default()
            },
        )
        .unwrap();
        // |A - I| <= (2|f| + |Δf| + 2|g|)|Δf| with |f|, |g| <= 1 and Lip(B_3) <= 1
        for level in 2..=12 {
            let (g, xi) = plane_setup(level);
            // base point at x = 1.25
            let k = 5i64 << (level - 2);
            let t = xi.triples().iter().find(|t| t.k == vec![k]).unwrap();
            let [_, x1, _] = t.sample_locations(level);
            let (a1, _) = quasi_intensities(&f, &g, level, t).unwrap();
            let gap = (a1 - intensity(&f, &g, &x1).unwrap()).abs();
            let bound = 5.0 * 2f64.powi(-(level as i32));
            assert!(gap <= bound, "level {level}: {gap} > {bound}");
        }
    }

    #[test]
    fn expansion_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let f = chirp();
        let g = WaveSequence::dyadic_spherical(1, 0.3).wave_at(3).unwrap();
        for _ in 0..1000 {
            let x = [rng.gen_range(0.1..4.0)];
            let fv = f.eval(&x).unwrap();
            let gv = g.eval(&x).unwrap();
            let expanded = fv.norm_sqr() + 2.0 * (fv * gv.conj()).re + gv.norm_sqr();
            let direct = intensity(&f, &g, &x).unwrap();
            assert!((direct - expanded).abs() <= 1e-12 * direct.max(1e-300));
        }
    }

    #[test]
    fn perturbation_examples() {
        let (g, xi) = plane_setup(3);
        let records = sample_intensities(&chirp(), &g, 3, &xi).unwrap();
        assert_eq!(perturb_intensities(&records, 0.0, 1).unwrap(), records);
        let a = perturb_intensities(&records, 0.01, 42).unwrap();
        let b = perturb_intensities(&records, 0.01, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, perturb_intensities(&records, 0.01, 43).unwrap());
        for (p, r) in a.iter().zip(&records) {
            for (pv, rv) in p.intensities.iter().zip(r.intensities) {
                assert!((pv - rv).abs() <= 0.01 * rv + 1e-15);
                assert!(*pv >= 0.0);
            }
        }
        assert!(perturb_intensities(&records, -0.1, 0).is_err());
    }
}
