//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails or exceeds its time budget.

use std::f64::consts::PI;
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use holoshot::refinable::bspline_fourier;
use holoshot::runner::{self, INTENSITIES_FILE, RECOVERED_FILE};
use holoshot::{
    admissibility_ratio, bspline_mask, build_lattice, build_triples, convergence_study,
    quasi_intensities, solve_point, zero_excluded, Error, ExperimentConfig, ReconstructionReport,
    RefinableFunction, Roi, Study, TargetFunction, TargetParams, TripleVariant, WaveSequence,
};

type Check = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn chirp(dim: usize, center: f64, sigma: f64, freq: f64) -> TargetFunction {
    TargetFunction::builtin(
        "gaussian_chirp",
        dim,
        &TargetParams {
            center: Some(vec![center; dim]),
            sigma: Some(sigma),
            freq: Some(vec![freq; dim]),
            ..Default::default()
        },
    )
    .unwrap()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt_errors(v: &[f64]) -> String {
    v.iter()
        .map(|e| format!("{e:.3e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Quasi-intensities fed to the solver reproduce the samples.
fn exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0.0f64;
    let mut count = 0;
    for case in 0..240 {
        let d = 1 + case % 2;
        let spherical = (case / 2) % 2 == 1;
        let level = rng.gen_range(1..=6u32);
        let (roi, waves, variant) = if spherical {
            let roi = Roi::new(vec![2.0; d], vec![3.0; d]).unwrap();
            let eps = rng.gen_range(0.1..0.4);
            (
                roi,
                WaveSequence::dyadic_spherical(d, eps),
                TripleVariant::Spherical,
            )
        } else {
            let roi = Roi::new(vec![1.0; d], vec![2.0; d]).unwrap();
            let theta = rng.gen_range(0.5..1.5);
            let axis = rng.gen_range(0..d);
            (
                roi,
                WaveSequence::dyadic_plane(d, theta),
                TripleVariant::Plane { axis },
            )
        };
        let f = chirp(
            d,
            rng.gen_range(1.5..2.5),
            rng.gen_range(1.0..2.0),
            rng.gen_range(-3.0..3.0),
        );
        let lattice = build_lattice(&roi, &vec![2; d], level).unwrap();
        let triples = build_triples(&lattice, variant).unwrap();
        let g = waves.wave_at(level).unwrap();
        let t = &triples.triples()[rng.gen_range(0..triples.len())];
        let x: Vec<f64> =
            t.k.iter()
                .map(|&k| k as f64 / (1u64 << level) as f64)
                .collect();
        let fk = f.eval(&x).unwrap();
        let i0 = (fk + g.eval(&x).unwrap()).norm_sqr();
        let (a1, a2) = quasi_intensities(&f, &g, level, t).unwrap();
        let got = solve_point(&g, level, t, [i0, a1, a2], None)
            .map_err(|e| format!("case {case}: {e}"))?;
        worst = worst.max((got - fk).norm() / fk.norm());
        count += 1;
    }
    ensure(worst <= 1e-9, || {
        format!("max relative error {worst:.3e} over {count} cases")
    })?;
    Ok(format!("{count} cases, max relative error {worst:.2e}"))
}

fn partition_of_unity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = 0.0f64;
    for orders in [vec![2], vec![3], vec![4], vec![2, 2], vec![2, 3]] {
        let phi = RefinableFunction::tensor(&orders).unwrap();
        for _ in 0..1000 {
            let x: Vec<f64> = orders.iter().map(|_| rng.gen_range(-50.0..50.0)).collect();
            worst = worst.max(phi.unit_partition_residual(&x).unwrap());
        }
    }
    ensure(worst <= 1e-12, || format!("max residual {worst:.3e}"))?;
    Ok(format!("max residual {worst:.2e}"))
}

fn refinement_symbol() -> Check {
    let mut worst = 0.0f64;
    for m in 1..=5 {
        let mask = bspline_mask(m).unwrap();
        for j in 0..64 {
            let xi = -10.0 + 20.0 * j as f64 / 63.0;
            let lhs = bspline_fourier(m, 2.0 * xi);
            let rhs = mask.symbol(xi) * bspline_fourier(m, xi);
            worst = worst.max((lhs - rhs).norm());
        }
    }
    ensure(worst < 1e-10, || format!("max defect {worst:.3e}"))?;
    Ok(format!("max defect {worst:.2e}"))
}

fn admissibility_consistency() -> Check {
    let plane_roi = Roi::interval(1.0, 2.0).unwrap();
    let sph_roi = Roi::interval(2.0, 3.0).unwrap();
    let plane = WaveSequence::dyadic_plane(1, 1.0);
    let sph = WaveSequence::dyadic_spherical(1, 0.3);
    let expected = 1.0 / (2.0 * (PI / 4.0).sin() * (PI / 8.0).sin().powi(2));
    let mut plane_ratios = Vec::new();
    for level in 1..=8 {
        for (waves, roi, variant) in [
            (&plane, &plane_roi, TripleVariant::Plane { axis: 0 }),
            (&sph, &sph_roi, TripleVariant::Spherical),
        ] {
            let triples =
                build_triples(&build_lattice(roi, &[2], level).unwrap(), variant).unwrap();
            let r = waves
                .report(level, roi, &[2], &triples)
                .map_err(|e| e.to_string())?;
            let cert = r
                .certificate
                .ok_or_else(|| format!("no certificate at N={level}"))?;
            ensure(r.is_admissible() && r.ratio <= cert, || {
                format!(
                    "N={level} {}: ratio {} > certificate {cert}",
                    waves.provenance(),
                    r.ratio
                )
            })?;
            if variant == (TripleVariant::Plane { axis: 0 }) {
                ensure((cert - expected).abs() <= 1e-9, || {
                    format!("plane certificate {cert} != {expected} at N={level}")
                })?;
                plane_ratios.push(r.ratio);
            }
        }
    }
    let lo = plane_ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = plane_ratios.iter().cloned().fold(0.0, f64::max);
    ensure(
        (lo - 1.85).abs() <= 0.05 && (hi - 1.85).abs() <= 0.05,
        || format!("plane ratio range [{lo}, {hi}] outside 1.85 +- 0.05"),
    )?;
    ensure(hi - lo <= 1e-9, || {
        format!("plane ratio varies with N: [{lo}, {hi}]")
    })?;
    Ok(format!("plane ratio {hi:.6}, certificate {expected:.6}"))
}

/// Recomputes the per-point bound from public pieces of one run. Noise on
/// the base intensity enters both companion residuals, so it is subtracted.
fn pointwise_bound_on(
    study: &Study,
    levels: std::ops::RangeInclusive<u32>,
) -> Result<usize, String> {
    let mut points = 0;
    for level in levels {
        let out = study.run_level(level).map_err(|e| e.to_string())?;
        let g = study.waves.wave_at(level).unwrap();
        let triples = build_triples(
            &build_lattice(study.roi, &study.margins, level).unwrap(),
            study.variant,
        )
        .unwrap();
        let gamma = admissibility_ratio(&g, level, &triples).unwrap().ratio;
        ensure(out.row.pointwise_bound_holds, || {
            format!("row flag false at N={level}")
        })?;
        for r in &out.records {
            let x: Vec<f64> = r
                .triple
                .k
                .iter()
                .map(|&k| k as f64 / (1u64 << level) as f64)
                .collect();
            let fk = study.target.eval(&x).unwrap();
            let (a1, a2) = quasi_intensities(study.target, &g, level, &r.triple).unwrap();
            let d0 = r.intensities[0] - (fk + g.eval(&x).unwrap()).norm_sqr();
            ensure(study.noise_scale > 0.0 || d0 == 0.0, || {
                format!("noiseless base deviation {d0}")
            })?;
            let bound =
                gamma * (r.intensities[1] - a1 - d0).hypot(r.intensities[2] - a2 - d0) + 1e-10;
            let v = out.recovered.get(&r.triple.k).ok_or("skipped point")?;
            let err = (fk - v).norm();
            ensure(err <= bound, || {
                format!("N={level} k={:?}: {err:.3e} > {bound:.3e}", r.triple.k)
            })?;
            points += 1;
        }
    }
    Ok(points)
}

fn pointwise_bound() -> Check {
    let f1 = chirp(1, 1.5, 1.0, 2.0);
    let roi1 = Roi::interval(1.0, 2.0).unwrap();
    let w1 = WaveSequence::dyadic_plane(1, 1.0);
    let phi1 = RefinableFunction::bspline(3).unwrap();
    let s1 = Study {
        target: &f1,
        waves: &w1,
        phi: &phi1,
        roi: &roi1,
        margins: phi1.support(),
        variant: TripleVariant::Plane { axis: 0 },
        cells_per_unit: 256,
        noise_scale: 1e-3,
        seed: 5,
    };
    let f2 = chirp(2, 1.5, 1.0, 1.0);
    let roi2 = Roi::new(vec![1.0, 1.0], vec![2.0, 2.0]).unwrap();
    let w2 = WaveSequence::dyadic_plane(2, 1.0);
    let phi2 = RefinableFunction::tensor(&[2, 2]).unwrap();
    let s2 = Study {
        target: &f2,
        waves: &w2,
        phi: &phi2,
        roi: &roi2,
        margins: phi2.support(),
        variant: TripleVariant::Plane { axis: 1 },
        cells_per_unit: 64,
        noise_scale: 1e-3,
        seed: 6,
    };
    let mut counts = Vec::new();
    for noise in [0.0, 1e-3] {
        let (mut a, mut b) = (s1.clone(), s2.clone());
        a.noise_scale = noise;
        b.noise_scale = noise;
        counts.push(pointwise_bound_on(&a, 2..=7)?);
        counts.push(pointwise_bound_on(&b, 2..=5)?);
    }
    Ok(format!(
        "noiseless {}+{} points, noisy {}+{} points (1D+2D)",
        counts[0], counts[1], counts[2], counts[3]
    ))
}

fn study_1d(f: &TargetFunction) -> Result<ReconstructionReport, String> {
    let phi = RefinableFunction::bspline(3).unwrap();
    let roi = Roi::interval(1.0, 2.0).unwrap();
    let waves = WaveSequence::dyadic_plane(1, 1.0);
    convergence_study(f, &waves, &phi, &roi, 2..=7).map_err(|e| e.to_string())
}

fn smooth_target() -> TargetFunction {
    chirp(1, 1.5, 1.0, 0.5)
}

fn kinked_target() -> TargetFunction {
    TargetFunction::builtin(
        "bspline_bump",
        1,
        &TargetParams {
            order: Some(2),
            center: Some(vec![0.5]),
            ..Default::default()
        },
    )
    .unwrap()
}

fn convergence() -> Check {
    let report = study_1d(&smooth_target())?;
    let errors = report.errors();
    let baseline = report.baseline_errors();
    ensure(strictly_decreasing(&errors), || {
        format!("pipeline errors {}", fmt_errors(&errors))
    })?;
    ensure(strictly_decreasing(&baseline), || {
        format!("baseline errors {}", fmt_errors(&baseline))
    })?;
    ensure(report.rows.iter().all(|r| r.triangle_holds()), || {
        "triangle bound violated".into()
    })?;
    let beta = report.fit.as_ref().ok_or("no fit")?.beta;
    let beta_b = report.baseline_fit.as_ref().ok_or("no baseline fit")?.beta;
    ensure(beta >= 0.4, || format!("beta {beta:.3} < 0.4"))?;
    ensure(beta_b >= beta - 0.2, || {
        format!("baseline beta {beta_b:.3} < {beta:.3} - 0.2")
    })?;
    Ok(format!(
        "beta {beta:.3}, baseline beta {beta_b:.3}, errors {}",
        fmt_errors(&errors)
    ))
}

fn smoothness_ordering() -> Check {
    let smooth = study_1d(&smooth_target())?;
    let kinked = study_1d(&kinked_target())?;
    let a = kinked.fit.as_ref().ok_or("no fit")?.beta;
    let b = smooth.fit.as_ref().ok_or("no fit")?.beta;
    ensure(a < b, || format!("bump beta {a:.3} >= chirp beta {b:.3}"))?;
    Ok(format!("bump beta {a:.3} < chirp beta {b:.3}"))
}

fn spherical_pipeline() -> Check {
    let f = smooth_target();
    let phi = RefinableFunction::bspline(2).unwrap();
    let roi = Roi::interval(2.0, 3.0).unwrap();
    let waves = WaveSequence::dyadic_spherical(1, 0.3);
    let report = convergence_study(&f, &waves, &phi, &roi, 2..=6).map_err(|e| e.to_string())?;
    let errors = report.errors();
    ensure(strictly_decreasing(&errors), || {
        format!("errors {}", fmt_errors(&errors))
    })?;
    ensure(report.total_skipped() == 0, || {
        format!("{} degenerate points", report.total_skipped())
    })?;
    for r in &report.rows {
        let cert = r
            .certificate
            .ok_or_else(|| format!("no certificate at N={}", r.level))?;
        ensure(r.ratio <= cert, || {
            format!("N={}: ratio {} > {cert}", r.level, r.ratio)
        })?;
    }
    Ok(format!("errors {}", fmt_errors(&errors)))
}

const SPHERICAL_CONFIG: &str = r#"
[target]
name = "gaussian_chirp"
params = { center = [1.5], sigma = 1.0, freq = [0.5] }

[wave]
design = "dyadic_spherical"
epsilon = 0.3

[phi]
orders = [2]

[roi]
lo = [1.0]
hi = [2.0]

[levels]
min = 2
max = 4
"#;

fn zero_exclusion() -> Check {
    let z = zero_excluded(&Roi::interval(2.0, 3.0).unwrap(), &[2]).unwrap();
    ensure(z.map(|z| z.bound) == Some(1.0), || format!("[2,3]: {z:?}"))?;
    let z = zero_excluded(&Roi::interval(1.0, 2.0).unwrap(), &[2]).unwrap();
    ensure(z.is_none(), || format!("[1,2]: {z:?}"))?;
    let z = zero_excluded(&Roi::interval(-3.0, -2.0).unwrap(), &[1]).unwrap();
    ensure(z.map(|z| z.bound) == Some(2.0), || {
        format!("[-3,-2]: {z:?}")
    })?;

    let config = ExperimentConfig::from_toml(SPHERICAL_CONFIG).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().unwrap();
    match runner::run(&config, dir.path()) {
        Err(Error::Validation(v)) if v.iter().any(|x| x.code == "zero-in-lattice") => {}
        Err(e) if e.code() == "zero-in-lattice" => {}
        other => return Err(format!("spherical run over [1,2]: {:?}", other.map(|_| ()))),
    }
    Ok("three examples reproduced, spherical run over [1,2] rejected".into())
}

const REPLAY_CONFIG: &str = r#"
[target]
name = "gaussian_chirp"
params = { center = [1.5, 1.5], sigma = 1.0, freq = [0.5, -0.5] }

[wave]
design = "dyadic_plane"
theta = 1.0

[phi]
orders = [2, 2]

[roi]
lo = [1.0, 1.0]
hi = [2.0, 2.0]

[levels]
min = 2
max = 5

[noise]
scale = 0.01
seed = 42
"#;

fn replay() -> Check {
    let config = ExperimentConfig::from_toml(REPLAY_CONFIG).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().unwrap();
    runner::run(&config, dir.path()).map_err(|e| e.to_string())?;
    let replay_dir = dir.path().join("replay");
    runner::replay(&config, &dir.path().join(INTENSITIES_FILE), &replay_dir)
        .map_err(|e| e.to_string())?;
    let a = fs::read(dir.path().join(RECOVERED_FILE)).unwrap();
    let b = fs::read(replay_dir.join(RECOVERED_FILE)).unwrap();
    ensure(a == b, || "recovered-samples files differ".into())?;

    let again = tempfile::tempdir().unwrap();
    runner::run(&config, again.path()).map_err(|e| e.to_string())?;
    let c = fs::read(again.path().join(RECOVERED_FILE)).unwrap();
    ensure(a == c, || "repeated run differs".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("exactness oracle", 10, exactness),
        ("partition of unity", 1, partition_of_unity),
        ("refinement identity", 1, refinement_symbol),
        ("admissibility consistency", 5, admissibility_consistency),
        ("pointwise error bound", 30, pointwise_bound),
        ("convergence", 60, convergence),
        ("smoothness ordering", 60, smoothness_ordering),
        ("spherical pipeline", 60, spherical_pipeline),
        ("zero exclusion", 1, zero_exclusion),
        ("determinism and replay", 10, replay),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let outcome = check();
        let elapsed = clock.elapsed();
        let over = elapsed > Duration::from_secs(*budget);
        let (status, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over {budget}s budget; {d}")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "{status} {:>2} {name} ({:.2}s): {detail}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
