//! Figure-reproduction recipes: spectrum-analyzer traces of driven
//! microcantilever displacement with squeezed and coherent readout, and the
//! SNR extracted per drive level.
//!
//! `Fig2` reflects the weak squeezed probe from the cantilever (5% loss on
//! the squeezed path); `Fig3` reflects the probe's LO instead. Both use the
//! amplifier gain whose ideal phase-sum noise sits 2.9 dB below the
//! shot-noise limit; the probe topology lands about 0.2 dB shallower because
//! of the cantilever loss.

use std::path::Path;

use serde::Serialize;

use crate::config::FullConfig;
use crate::model::{self, Topology};
use crate::output::{write_csv_table, write_trace, RunManifest};
use crate::spectrum::{derive_seed, extract_snr, synthesize_trace, trace_floor_db};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
}

impl Figure {
    pub fn name(&self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
        }
    }
}

/// Piezo drive levels swept in the experiment, millivolts.
pub const DRIVE_LEVELS_MV: [f64; 5] = [40.0, 75.0, 110.0, 145.0, 180.0];

/// Ideal squeezing target for the reproduction runs, dB below SNL.
pub const TARGET_SQUEEZING_DB: f64 = 2.9;

/// Per-drive SNR results.
#[derive(Debug, Clone, Serialize)]
pub struct SnrRow {
    pub drive_mv: f64,
    pub snr_squeezed_db: f64,
    pub snr_coherent_db: f64,
    pub gap_db: f64,
    pub squeezed_trace_floor_db: f64,
}

#[derive(Debug, Clone)]
pub struct ReproOutcome {
    pub rows: Vec<SnrRow>,
    /// Median floor of the undriven squeezed trace, dB rel. SNL.
    pub squeezed_floor_db: f64,
    /// Median floor of the undriven coherent trace, dB rel. SNL.
    pub coherent_floor_db: f64,
    pub files: Vec<std::path::PathBuf>,
}

/// Amplifier gain whose ideal phase-sum noise is `db` below the SNL.
pub fn gain_for_floor_db(db: f64) -> f64 {
    (1.0 + 10.0_f64.powf(db / 10.0)) / 2.0
}

const SAMPLE_RATE: f64 = 4e6;
const SAMPLES_PER_DRAW: usize = 1 << 16;

/// Run one figure reproduction into `out_dir`, emitting per-drive squeezed
/// trace CSVs (with JSON mirrors), undriven squeezed and coherent floor
/// traces, an SNR table, and a manifest. Deterministic for a fixed seed.
pub fn run_reproduction(
    base: &FullConfig,
    figure: Figure,
    seed: u64,
    out_dir: &Path,
) -> Result<ReproOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let mut cfg = base.clone();
    cfg.tnli.gain = gain_for_floor_db(TARGET_SQUEEZING_DB);
    cfg.tnli.topology = match figure {
        Figure::Fig2 => Topology::ProbeOnCantilever,
        Figure::Fig3 => Topology::LoOnCantilever,
    };
    cfg.validate()?;
    let mut coherent_cfg = cfg.clone();
    coherent_cfg.tnli.gain = 1.0;

    let duration = SAMPLES_PER_DRAW as f64 / SAMPLE_RATE;
    let f_drive = cfg.cantilever.drive_freq;
    let mut manifest = RunManifest::new(&cfg, seed);
    let mut files = Vec::new();
    let mut rows = Vec::new();

    let squeezed_scene = model::build_scene(&cfg.tnli)?;
    let coherent_scene = model::build_scene(&coherent_cfg.tnli)?;

    for (i, drive_mv) in DRIVE_LEVELS_MV.iter().enumerate() {
        let mut cant = cfg.cantilever.clone();
        cant.drive_amplitude_volts = drive_mv * 1e-3;
        let sq_trace = synthesize_trace(
            &squeezed_scene,
            &cant,
            &cfg.analyzer,
            SAMPLE_RATE,
            duration,
            derive_seed(seed, 2 * i as u64),
        )?;
        let coh_trace = synthesize_trace(
            &coherent_scene,
            &cant,
            &cfg.analyzer,
            SAMPLE_RATE,
            duration,
            derive_seed(seed, 2 * i as u64 + 1),
        )?;
        let snr_squeezed_db = extract_snr(&sq_trace, f_drive)?;
        let snr_coherent_db = extract_snr(&coh_trace, f_drive)?;
        let floor = trace_floor_db(&sq_trace, Some(f_drive))?;
        rows.push(SnrRow {
            drive_mv: *drive_mv,
            snr_squeezed_db,
            snr_coherent_db,
            gap_db: snr_squeezed_db - snr_coherent_db,
            squeezed_trace_floor_db: floor,
        });
        let stem = format!("squeezed_{:03.0}mV", drive_mv);
        let (csv, json) = write_trace(out_dir, &stem, &sq_trace)?;
        manifest.record(&csv);
        manifest.record(&json);
        files.push(csv);
        files.push(json);
    }

    // Undriven floors.
    let mut quiet = cfg.cantilever.clone();
    quiet.drive_amplitude_volts = 0.0;
    let sq_floor_trace = synthesize_trace(
        &squeezed_scene,
        &quiet,
        &cfg.analyzer,
        SAMPLE_RATE,
        duration,
        derive_seed(seed, 100),
    )?;
    let coh_floor_trace = synthesize_trace(
        &coherent_scene,
        &quiet,
        &cfg.analyzer,
        SAMPLE_RATE,
        duration,
        derive_seed(seed, 101),
    )?;
    for (stem, trace) in [
        ("floor_squeezed", &sq_floor_trace),
        ("floor_coherent", &coh_floor_trace),
    ] {
        let (csv, json) = write_trace(out_dir, stem, trace)?;
        manifest.record(&csv);
        manifest.record(&json);
        files.push(csv);
        files.push(json);
    }

    let snr_path = out_dir.join("snr.csv");
    write_csv_table(
        &snr_path,
        "drive_mv,snr_squeezed_db,snr_coherent_db,gap_db,squeezed_trace_floor_db",
        &rows
            .iter()
            .map(|r| {
                vec![
                    r.drive_mv.to_string(),
                    r.snr_squeezed_db.to_string(),
                    r.snr_coherent_db.to_string(),
                    r.gap_db.to_string(),
                    r.squeezed_trace_floor_db.to_string(),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    manifest.record(&snr_path);
    files.push(snr_path);

    let manifest_path = out_dir.join("manifest.json");
    manifest.record(&manifest_path);
    manifest.write(&manifest_path)?;

    Ok(ReproOutcome {
        rows,
        squeezed_floor_db: trace_floor_db(&sq_floor_trace, None)?,
        coherent_floor_db: trace_floor_db(&coh_floor_trace, None)?,
        files,
    })
}
