//! Columnar text formats for intensity sets, recovered samples and reports.
//!
//! Points are written as `;`-separated coordinates, dyadic rationals as
//! `numer/denom`. Floats use the shortest representation that round-trips.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{ScaledPoint, Triple};
use crate::measure::IntensityRecord;
use crate::reconstruct::ReconstructionReport;
use crate::recover::RecoveredSamples;

pub const INTENSITY_HEADER: [&str; 7] = ["level", "k", "k1", "k2", "i_k", "i_k1", "i_k2"];
pub const RECOVERED_HEADER: [&str; 5] = ["level", "k", "re", "im", "mu"];
pub const REPORT_HEADER: [&str; 14] = [
    "level",
    "lattice_size",
    "recovery_max_error",
    "l2_error",
    "baseline_l2_error",
    "ratio",
    "certificate",
    "sup_amplitude",
    "skipped",
    "max_perturbation",
    "pointwise_bound_holds",
    "triangle_bound",
    "triangle_holds",
    "l2_error_log2",
];

fn float(v: f64) -> String {
    format!("{v:?}")
}

fn parse_float(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what} '{s}'")))
}

fn integer_point(k: &[i64]) -> String {
    ScaledPoint::integer(k.to_vec()).to_string()
}

fn parse_integer_point(s: &str) -> Result<Vec<i64>> {
    let p: ScaledPoint = s.parse()?;
    if p.denom_log2() != 0 {
        return Err(Error::Parse(format!(
            "lattice index '{s}' must be integral"
        )));
    }
    Ok(p.numer().to_vec())
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected header '{}', expected '{}'",
            header.iter().collect::<Vec<_>>().join(","),
            expected.join(",")
        )));
    }
    Ok(())
}

pub fn write_intensities<W: Write>(out: W, records: &[IntensityRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(INTENSITY_HEADER)?;
    for r in records {
        w.write_record([
            r.level.to_string(),
            integer_point(&r.triple.k),
            r.triple.k1.to_string(),
            r.triple.k2.to_string(),
            float(r.intensities[0]),
            float(r.intensities[1]),
            float(r.intensities[2]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_intensities<R: Read>(input: R) -> Result<Vec<IntensityRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &INTENSITY_HEADER)?;
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let level: u32 = row[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad level '{}'", &row[0])))?;
        let k = parse_integer_point(&row[1])?;
        let k1: ScaledPoint = row[2].parse()?;
        let k2: ScaledPoint = row[3].parse()?;
        if k1.dim() != k.len() || k2.dim() != k.len() {
            return Err(Error::Parse(format!(
                "triple at k={} mixes dimensions",
                &row[1]
            )));
        }
        records.push(IntensityRecord {
            level,
            triple: Triple { k, k1, k2 },
            intensities: [
                parse_float(&row[4], "intensity")?,
                parse_float(&row[5], "intensity")?,
                parse_float(&row[6], "intensity")?,
            ],
        });
    }
    Ok(records)
}

/// Splits records by level, preserving order within each level.
pub fn group_by_level(records: Vec<IntensityRecord>) -> BTreeMap<u32, Vec<IntensityRecord>> {
    let mut out: BTreeMap<u32, Vec<IntensityRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.level).or_default().push(r);
    }
    out
}

/// One row per point in `k` order; degenerate points have empty `re`/`im`.
pub fn write_recovered<W: Write>(out: W, levels: &[RecoveredSamples]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECOVERED_HEADER)?;
    for samples in levels {
        for (k, mu) in &samples.mu {
            let (re, im) = match samples.values.get(k) {
                Some(v) => (float(v.re), float(v.im)),
                None => (String::new(), String::new()),
            };
            w.write_record([
                samples.level.to_string(),
                integer_point(k),
                re,
                im,
                float(*mu),
            ])?;
        }
        // entries without a recorded μ (exact-sample maps)
        for (k, v) in samples
            .values
            .iter()
            .filter(|(k, _)| !samples.mu.contains_key(*k))
        {
            w.write_record([
                samples.level.to_string(),
                integer_point(k),
                float(v.re),
                float(v.im),
                String::new(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_recovered<R: Read>(input: R) -> Result<Vec<RecoveredSamples>> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &RECOVERED_HEADER)?;
    let mut levels: BTreeMap<u32, RecoveredSamples> = BTreeMap::new();
    for row in reader.records() {
        let row = row?;
        let level: u32 = row[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad level '{}'", &row[0])))?;
        let k = parse_integer_point(&row[1])?;
        let entry = levels
            .entry(level)
            .or_insert_with(|| RecoveredSamples::new(level));
        let mu = if row[4].is_empty() {
            None
        } else {
            Some(parse_float(&row[4], "mu")?)
        };
        if let Some(mu) = mu {
            entry.mu.insert(k.clone(), mu);
        }
        match (row[2].is_empty(), row[3].is_empty()) {
            (false, false) => {
                let v = Complex64::new(parse_float(&row[2], "re")?, parse_float(&row[3], "im")?);
                entry.values.insert(k, v);
            }
            (true, true) => entry.skipped.push((k, mu.unwrap_or(0.0))),
            _ => return Err(Error::Parse(format!("half-empty value at k={}", &row[1]))),
        }
    }
    Ok(levels.into_values().collect())
}

/// One row per level; timings are omitted so the file is reproducible.
pub fn write_report_csv<W: Write>(out: W, report: &ReconstructionReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in &report.rows {
        w.write_record([
            r.level.to_string(),
            r.lattice_size.to_string(),
            float(r.recovery_max_error),
            float(r.l2_error),
            float(r.baseline_l2_error),
            float(r.ratio),
            r.certificate.map(float).unwrap_or_default(),
            float(r.sup_amplitude),
            r.skipped.to_string(),
            float(r.max_perturbation),
            r.pointwise_bound_holds.to_string(),
            float(r.triangle_bound),
            r.triangle_holds().to_string(),
            float(r.l2_error.log2()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON summary with a versioned schema, the resolved configuration and the
/// full report including per-stage wall-clock times.
pub fn write_summary<W: Write>(
    out: W,
    config_echo: &serde_json::Value,
    report: &ReconstructionReport,
    total_seconds: f64,
) -> Result<()> {
    let value = serde_json::json!({
        "schema": 1,
        "config": config_echo,
        "fit": report.fit,
        "baseline_fit": report.baseline_fit,
        "cells_per_unit": report.cells_per_unit,
        "target_norm": report.target_norm,
        "levels": report.rows,
        "total_seconds": total_seconds,
    });
    serde_json::to_writer_pretty(out, &value)?;
    Ok(())
}
