//! End-to-end orchestration behind the command-line interface.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::io;
use crate::lattice::{build_lattice, build_triples};
use crate::measure::IntensityRecord;
use crate::reconstruct::ReconstructionReport;
use crate::recover::{recover_level, RecoveredSamples};
use crate::waves::AdmissibilityReport;

pub const INTENSITIES_FILE: &str = "intensities.csv";
pub const RECOVERED_FILE: &str = "recovered.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ReconstructionReport,
    pub recovered: Vec<RecoveredSamples>,
    pub files: Vec<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs the full pipeline over the configured levels and writes the
/// intensity set (optional), recovered samples, report CSV and JSON summary
/// into `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    let clock = Instant::now();
    let resolved = config.resolve()?;
    let study = resolved.study();
    let mut records: Vec<IntensityRecord> = Vec::new();
    let mut recovered = Vec::new();
    let report = study.run_with(resolved.levels.clone(), |outcome| {
        if config.output.intensities {
            records.extend(outcome.records.iter().cloned());
        }
        recovered.push(outcome.recovered.clone());
        Ok(())
    })?;

    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    if config.output.intensities {
        let path = out_dir.join(INTENSITIES_FILE);
        io::write_intensities(create(&path)?, &records)?;
        files.push(path);
    }
    let path = out_dir.join(RECOVERED_FILE);
    io::write_recovered(create(&path)?, &recovered)?;
    files.push(path);
    let path = out_dir.join(REPORT_FILE);
    io::write_report_csv(create(&path)?, &report)?;
    files.push(path);
    let path = out_dir.join(SUMMARY_FILE);
    io::write_summary(
        create(&path)?,
        &config.echo(),
        &report,
        clock.elapsed().as_secs_f64(),
    )?;
    files.push(path);
    Ok(RunOutput {
        report,
        recovered,
        files,
    })
}

/// Recovers samples from a saved intensity set using the configured wave
/// sequence and writes `recovered.csv` into `out_dir`.
pub fn replay(
    config: &ExperimentConfig,
    intensities: &Path,
    out_dir: &Path,
) -> Result<Vec<RecoveredSamples>> {
    let resolved = config.resolve_structure()?;
    let records = io::read_intensities(File::open(intensities)?)?;
    let mut recovered = Vec::new();
    for (level, group) in io::group_by_level(records) {
        let g = resolved.waves.wave_at(level)?;
        recovered.push(recover_level(&group, &g, level)?);
    }
    fs::create_dir_all(out_dir)?;
    io::write_recovered(create(&out_dir.join(RECOVERED_FILE))?, &recovered)?;
    Ok(recovered)
}

/// Exact admissibility ratio against the closed-form certificate at every
/// configured level. Inadmissible levels are reported, not rejected.
pub fn admissibility(config: &ExperimentConfig) -> Result<Vec<AdmissibilityReport>> {
    let r = config.resolve_structure()?;
    r.levels
        .clone()
        .map(|level| {
            let lattice = build_lattice(&r.roi, &r.margins, level)?;
            let triples = build_triples(&lattice, r.variant)?;
            r.waves.report(level, &r.roi, &r.margins, &triples)
        })
        .collect()
}
