use super::config::{CsirMode, ExperimentConfig, Method, Sweep, SweepVariable};
use crate::{Error, Result};

pub const PRESET_NAMES: [&str; 7] = ["fig2", "fig4a", "fig4b", "fig4c", "fig4d", "fig5", "fig6"];

pub const DESK_TRIALS: usize = 200;
pub const FULL_TRIALS: usize = 1000;

fn device_sweep(values: &[f64]) -> Option<Sweep> {
    Some(Sweep {
        variable: SweepVariable::NDevices,
        values: values.to_vec(),
        antennas_follow_devices: true,
    })
}

fn fig4(rho: f64) -> ExperimentConfig {
    ExperimentConfig {
        snr_db: Some(10.0),
        rho,
        methods: vec![Method::Circle, Method::RCircle, Method::Bound],
        sweep: device_sweep(&[10.0, 20.0, 30.0]),
        ..Default::default()
    }
}

const CSIT_COMPARISON: [Method; 5] = [
    Method::RCircle,
    Method::Bound,
    Method::Wmmse,
    Method::Zf,
    Method::Mrt,
];

/// Scenario of a paper figure. Desk scale runs 200 trials, `full` the
/// published 1000; every other parameter is the same.
pub fn preset(name: &str, full: bool) -> Result<ExperimentConfig> {
    let mut cfg = match name {
        "fig2" => ExperimentConfig {
            n_antennas: 32,
            n_devices: Some(30),
            p_t_db: Some(0.0),
            sigma2_db: -10.0,
            n_nlos: 3,
            n_subcarriers: 1,
            cp_len: 0,
            csir: CsirMode::Genie,
            methods: vec![Method::Circle, Method::Bound],
            sweep: Some(Sweep {
                variable: SweepVariable::Delta2Db,
                values: vec![-40.0, -30.0, -20.0, -10.0, -5.0],
                antennas_follow_devices: false,
            }),
            ..Default::default()
        },
        "fig4a" => fig4(1.0 / 32.0),
        "fig4b" => fig4(1.0 / 8.0),
        "fig4c" => fig4(0.5),
        "fig4d" => fig4(2.0),
        "fig5" => ExperimentConfig {
            snr_db: Some(10.0),
            methods: CSIT_COMPARISON.to_vec(),
            sweep: device_sweep(&[10.0, 20.0, 30.0]),
            ..Default::default()
        },
        "fig6" => ExperimentConfig {
            n_antennas: 32,
            n_devices: Some(30),
            snr_db: Some(10.0),
            methods: CSIT_COMPARISON.to_vec(),
            sweep: Some(Sweep {
                variable: SweepVariable::SnrDb,
                values: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
                antennas_follow_devices: false,
            }),
            ..Default::default()
        },
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    cfg.n_trials = if full { FULL_TRIALS } else { DESK_TRIALS };
    Ok(cfg)
}
