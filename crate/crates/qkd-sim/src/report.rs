//! Calibration report against published reference QKD systems.
//!
//! Three published operating points (Geneva, BT, Los Alamos) ship as
//! bundled calibration targets: distance, mean photon number, raw key rate
//! and QBER. Their hardware details are not published, so the report *fits*
//! the detector efficiency to the target rate and the intrinsic optical
//! error to the target QBER, under assumed values for pulse rate, fiber
//! attenuation and dark counts. Columns are labeled accordingly — these are
//! calibrations, not predictions — and the deviation columns show how well
//! the fitted model lands back on its targets.

use serde::Serialize;

use crate::channel::{fit_e_optical, invert_eta_d, ChannelParams, DEFAULT_ALPHA_DB_PER_KM};
use crate::config::{Artifact, OutputFormat, RunError};
use crate::error::Error;

/// A published reference system: the calibration target.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceSystem {
    pub group: &'static str,
    pub distance_km: f64,
    pub mu: f64,
    pub target_r_raw_hz: f64,
    pub target_qber: f64,
    /// Dark-count probability per gate assumed for the fit; only the
    /// Geneva-style hardware has a published figure (1e-5).
    pub assumed_p_dark: f64,
}

/// The bundled calibration targets.
pub const REFERENCE_SYSTEMS: [ReferenceSystem; 3] = [
    ReferenceSystem {
        group: "Geneva",
        distance_km: 22.8,
        mu: 0.1,
        target_r_raw_hz: 486.0,
        target_qber: 0.045,
        assumed_p_dark: 1.0e-5,
    },
    ReferenceSystem {
        group: "BT",
        distance_km: 25.0,
        mu: 0.15,
        target_r_raw_hz: 500.0,
        target_qber: 0.02,
        // a 1e-5 dark floor alone exceeds the 2% target at this rate
        assumed_p_dark: 1.0e-6,
    },
    ReferenceSystem {
        group: "Los Alamos",
        distance_km: 24.0,
        mu: 0.4,
        target_r_raw_hz: 20.0,
        target_qber: 0.016,
        // at 20 Hz the detections are so sparse that dark counts must be
        // far below 1e-5 for the published QBER to be reachable
        assumed_p_dark: 1.0e-7,
    },
];

/// Pulse rate assumed for every row; published only for Geneva-style
/// hardware.
pub const ASSUMED_NU_HZ: f64 = 5.0e6;

#[derive(Debug, Clone, Serialize)]
pub struct Table1Row {
    pub group: String,
    pub distance_km: f64,
    pub mu: f64,
    pub target_r_raw_hz: f64,
    pub target_qber: f64,
    pub assumed_nu_hz: f64,
    pub assumed_alpha_db_per_km: f64,
    pub assumed_p_dark: f64,
    pub fitted_eta_d: f64,
    pub fitted_e_optical: f64,
    pub model_r_raw_hz: f64,
    pub model_qber: f64,
    pub r_raw_deviation: f64,
    pub qber_deviation: f64,
}

pub const TABLE1_CSV_HEADER: &str = "group,distance_km,mu,target_r_raw_hz,target_qber,assumed_nu_hz,assumed_alpha_db_per_km,assumed_p_dark,fitted_eta_d,fitted_e_optical,model_r_raw_hz,model_qber,r_raw_deviation,qber_deviation";

/// Fits one reference system and evaluates the model at the fit.
pub fn calibrate(system: &ReferenceSystem) -> Result<(ChannelParams, Table1Row), Error> {
    let loss_db = DEFAULT_ALPHA_DB_PER_KM * system.distance_km;
    let eta_d = invert_eta_d(
        0.5,
        system.mu,
        ASSUMED_NU_HZ,
        loss_db,
        system.target_r_raw_hz,
    )?;
    let mut params = ChannelParams {
        mu: system.mu,
        nu_hz: ASSUMED_NU_HZ,
        q_factor: 0.5,
        loss_db,
        length_km: system.distance_km,
        eta_d,
        p_dark: system.assumed_p_dark,
        e_optical: 0.0,
    };
    params.e_optical = fit_e_optical(&params, system.target_qber)?;
    params.validate()?;

    let model_r_raw_hz = params.raw_key_rate();
    let model_qber = params.expected_sifted_qber();
    let row = Table1Row {
        group: system.group.to_string(),
        distance_km: system.distance_km,
        mu: system.mu,
        target_r_raw_hz: system.target_r_raw_hz,
        target_qber: system.target_qber,
        assumed_nu_hz: ASSUMED_NU_HZ,
        assumed_alpha_db_per_km: DEFAULT_ALPHA_DB_PER_KM,
        assumed_p_dark: system.assumed_p_dark,
        fitted_eta_d: params.eta_d,
        fitted_e_optical: params.e_optical,
        model_r_raw_hz,
        model_qber,
        r_raw_deviation: model_r_raw_hz / system.target_r_raw_hz - 1.0,
        qber_deviation: model_qber / system.target_qber - 1.0,
    };
    Ok((params, row))
}

/// All bundled rows.
pub fn table1_rows() -> Result<Vec<Table1Row>, Error> {
    REFERENCE_SYSTEMS
        .iter()
        .map(|s| calibrate(s).map(|(_, row)| row))
        .collect()
}

#[derive(Serialize)]
struct Table1Artifact {
    schema_version: u32,
    mode: &'static str,
    rows: Vec<Table1Row>,
}

/// Renders the calibration report.
pub fn table1_artifact(format: OutputFormat) -> Result<Artifact, RunError> {
    let rows = table1_rows()?;
    let text = match format {
        OutputFormat::Csv => {
            let mut lines = vec![TABLE1_CSV_HEADER.to_string()];
            for r in &rows {
                lines.push(format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.group,
                    r.distance_km,
                    r.mu,
                    r.target_r_raw_hz,
                    r.target_qber,
                    r.assumed_nu_hz,
                    r.assumed_alpha_db_per_km,
                    r.assumed_p_dark,
                    r.fitted_eta_d,
                    r.fitted_e_optical,
                    r.model_r_raw_hz,
                    r.model_qber,
                    r.r_raw_deviation,
                    r.qber_deviation
                ));
            }
            let mut text = lines.join("\n");
            text.push('\n');
            text
        }
        OutputFormat::Json => {
            let artifact = Table1Artifact {
                schema_version: crate::config::CONFIG_SCHEMA_VERSION,
                mode: "table1",
                rows,
            };
            let mut text = serde_json::to_string_pretty(&artifact).expect("serializes");
            text.push('\n');
            text
        }
    };
    Ok(Artifact {
        format,
        text,
        any_aborted: false,
    })
}
